//! Linear algebra over `Z/p^N` for the tame local action on `(Q_p/Z_p)^2`:
//! Smith normal form, the inertia invariants, and the Frobenius-fixed part
//! of their mod-p reduction.
//!
//! Matrices act on column vectors. The invariants `H^0(I, A)` of `tau` on
//! `A = (Q_p/Z_p)^2` are read off from `U (tau - 1) V = diag(p^a, p^b)`: in
//! the coordinates `z = V^-1 x` they are `C_a + C_b` with `C_a` cyclic of
//! order `p^a`, or all of `Q_p/Z_p` for a zero pivot.

use std::fmt;

use crate::arith::{inv_mod, is_prime, mul_mod};
use crate::error::{Error, Result};

pub type Mat2 = [[u64; 2]; 2];

pub const DEFAULT_PRECISION: u32 = 4;

const IDENTITY: Mat2 = [[1, 0], [0, 1]];

fn mat_mul(a: &Mat2, b: &Mat2, m: u64) -> Mat2 {
    let mut c = [[0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = (mul_mod(a[i][0], b[0][j], m) + mul_mod(a[i][1], b[1][j], m)) % m;
        }
    }
    c
}

fn mat_pow(a: &Mat2, mut k: u64, m: u64) -> Mat2 {
    let mut acc = IDENTITY;
    let mut base = *a;
    while k > 0 {
        if k & 1 == 1 {
            acc = mat_mul(&acc, &base, m);
        }
        base = mat_mul(&base, &base, m);
        k >>= 1;
    }
    acc
}

fn det(a: &Mat2, m: u64) -> u64 {
    (mul_mod(a[0][0], a[1][1], m) + m - mul_mod(a[0][1], a[1][0], m)) % m
}

fn mat_inv(a: &Mat2, m: u64) -> Option<Mat2> {
    let d = inv_mod(det(a, m), m)?;
    Some([
        [mul_mod(a[1][1], d, m), mul_mod((m - a[0][1]) % m, d, m)],
        [mul_mod((m - a[1][0]) % m, d, m), mul_mod(a[0][0], d, m)],
    ])
}

/// Tame local data truncated at `p^N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalRepData {
    pub p: u64,
    pub precision: u32,
    pub ell: u64,
    pub sigma: Mat2,
    pub tau: Mat2,
}

impl LocalRepData {
    /// Entries may be negative; they are reduced mod `p^N`.
    pub fn new(
        p: u64,
        precision: u32,
        ell: u64,
        sigma: [[i64; 2]; 2],
        tau: [[i64; 2]; 2],
    ) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::invalid(format!("p = {p} is not prime")));
        }
        if precision < 2 {
            return Err(Error::invalid(format!(
                "precision N = {precision} must be at least 2"
            )));
        }
        let modulus = p
            .checked_pow(precision)
            .filter(|&m| m <= 1 << 62)
            .ok_or_else(|| Error::invalid(format!("{p}^{precision} exceeds 2^62")))?;
        if !is_prime(ell) || ell == p {
            return Err(Error::invalid(format!(
                "ell = {ell} must be a prime different from p"
            )));
        }
        let red = |m: [[i64; 2]; 2]| m.map(|row| row.map(|x| x.rem_euclid(modulus as i64) as u64));
        let data = LocalRepData {
            p,
            precision,
            ell,
            sigma: red(sigma),
            tau: red(tau),
        };
        data.check_invertible()?;
        Ok(data)
    }

    pub fn modulus(&self) -> u64 {
        self.p.pow(self.precision)
    }

    fn check_invertible(&self) -> Result<()> {
        for m in [&self.sigma, &self.tau] {
            if det(m, self.p) == 0 {
                return Err(Error::NotInvertible { modulus: self.p });
            }
        }
        Ok(())
    }

    /// `det sigma = ell` mod `p^N`, the weight-2 trivial-character case.
    pub fn has_cyclotomic_determinant(&self) -> bool {
        let m = self.modulus();
        det(&self.sigma, m) == self.ell % m
    }
}

/// Whether `sigma tau sigma^-1 = tau^ell` holds mod `p^N`.
pub fn validate_relation(data: &LocalRepData) -> Result<bool> {
    data.check_invertible()?;
    let m = data.modulus();
    let sigma_inv = mat_inv(&data.sigma, m).ok_or(Error::NotInvertible { modulus: data.p })?;
    let lhs = mat_mul(&mat_mul(&data.sigma, &data.tau, m), &sigma_inv, m);
    Ok(lhs == mat_pow(&data.tau, data.ell, m))
}

/// Elementary divisor exponent; `Divisible` marks a pivot that is zero mod
/// `p^N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Exponent {
    Finite(u32),
    Divisible,
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(a) => write!(f, "{a}"),
            Exponent::Divisible => f.write_str("Divisible"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmithForm {
    pub exponents: [Exponent; 2],
    pub u: Mat2,
    pub v: Mat2,
}

impl SmithForm {
    /// `diag(p^a, p^b)`, with 0 for a divisible exponent.
    pub fn diagonal(&self, p: u64) -> Mat2 {
        let e = |x: Exponent| match x {
            Exponent::Finite(a) => p.pow(a),
            Exponent::Divisible => 0,
        };
        [[e(self.exponents[0]), 0], [0, e(self.exponents[1])]]
    }
}

fn valuation(x: u64, p: u64, precision: u32) -> u32 {
    if x == 0 {
        return precision;
    }
    let mut v = 0;
    let mut x = x;
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    v
}

/// `U m V = diag(p^a, p^b)` with `a <= b` over `Z/p^N`.
pub fn smith_normal_form(m: &Mat2, p: u64, precision: u32) -> SmithForm {
    let modulus = p.pow(precision);
    let mut a = m.map(|row| row.map(|x| x % modulus));
    let mut u = IDENTITY;
    let mut v = IDENTITY;

    let (mut pi, mut pj, mut best) = (0, 0, precision);
    for i in 0..2 {
        for j in 0..2 {
            let val = valuation(a[i][j], p, precision);
            if val < best {
                (pi, pj, best) = (i, j, val);
            }
        }
    }
    if best == precision {
        return SmithForm {
            exponents: [Exponent::Divisible; 2],
            u,
            v,
        };
    }
    if pi == 1 {
        a.swap(0, 1);
        u.swap(0, 1);
    }
    if pj == 1 {
        for row in a.iter_mut().chain(v.iter_mut()) {
            row.swap(0, 1);
        }
    }
    let pk = p.pow(best);
    let unit_inv = inv_mod(a[0][0] / pk, modulus).expect("pivot cofactor is a unit");
    // row 1 -= c * row 0 and col 1 -= c' * col 0, with exact quotients by p^a
    let c = mul_mod(a[1][0] / pk, unit_inv, modulus);
    for j in 0..2 {
        a[1][j] = (a[1][j] + modulus - mul_mod(c, a[0][j], modulus)) % modulus;
        u[1][j] = (u[1][j] + modulus - mul_mod(c, u[0][j], modulus)) % modulus;
    }
    let c = mul_mod(a[0][1] / pk, unit_inv, modulus);
    for i in 0..2 {
        a[i][1] = (a[i][1] + modulus - mul_mod(c, a[i][0], modulus)) % modulus;
        v[i][1] = (v[i][1] + modulus - mul_mod(c, v[i][0], modulus)) % modulus;
    }
    for j in 0..2 {
        u[0][j] = mul_mod(u[0][j], unit_inv, modulus);
    }
    let second = if a[1][1] == 0 {
        Exponent::Divisible
    } else {
        let b = valuation(a[1][1], p, precision);
        let w = inv_mod(a[1][1] / p.pow(b), modulus).expect("unit");
        for j in 0..2 {
            u[1][j] = mul_mod(u[1][j], w, modulus);
        }
        Exponent::Finite(b)
    };
    SmithForm {
        exponents: [Exponent::Finite(best), second],
        u,
        v,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantStructure {
    pub divisors: [Exponent; 2],
    /// `dim_Fp H^0(I, A) / p`.
    pub quotient_dim: usize,
    /// Frobenius on that quotient, entries in `F_p`.
    pub frob_action: Vec<Vec<u64>>,
    pub beta_bound: usize,
}

fn rank_mod_p(m: &[Vec<u64>], p: u64) -> usize {
    match m.len() {
        0 => 0,
        1 => usize::from(m[0][0] % p != 0),
        _ => {
            let d = (mul_mod(m[0][0], m[1][1], p) + p - mul_mod(m[0][1], m[1][0], p)) % p;
            if d != 0 {
                2
            } else if m.iter().flatten().any(|&x| x % p != 0) {
                1
            } else {
                0
            }
        }
    }
}

/// Frobenius on the mod-p quotient for the given exponents, and the
/// dimension of its fixed space.
fn quotient_action(
    exps: &[Exponent; 2],
    sigma_t: &Mat2,
    p: u64,
    modulus: u64,
) -> Result<(Vec<Vec<u64>>, usize)> {
    let live: Vec<(usize, u32)> = exps
        .iter()
        .enumerate()
        .filter_map(|(i, e)| match *e {
            Exponent::Finite(a) if a >= 1 => Some((i, a)),
            _ => None,
        })
        .collect();
    let mut frob = vec![vec![0; live.len()]; live.len()];
    for (r, &(i, ai)) in live.iter().enumerate() {
        for (c, &(j, aj)) in live.iter().enumerate() {
            let s = sigma_t[i][j] % modulus;
            frob[r][c] = if ai == aj {
                s % p
            } else if ai > aj {
                0
            } else {
                let q = p.pow(aj - ai);
                if s % q != 0 {
                    return Err(Error::RelationViolated);
                }
                (s / q) % p
            };
        }
    }
    let mut shifted = frob.clone();
    for (k, row) in shifted.iter_mut().enumerate() {
        row[k] = (row[k] + p - 1) % p;
    }
    let beta = live.len() - rank_mod_p(&shifted, p);
    Ok((frob, beta))
}

pub fn inertia_invariants(data: &LocalRepData) -> Result<InvariantStructure> {
    if !validate_relation(data)? {
        return Err(Error::RelationViolated);
    }
    let (p, n, modulus) = (data.p, data.precision, data.modulus());
    let mut t = data.tau;
    for k in 0..2 {
        t[k][k] = (t[k][k] + modulus - 1) % modulus;
    }
    let snf = smith_normal_form(&t, p, n);
    let v_inv = mat_inv(&snf.v, modulus).expect("transform is unimodular");
    let sigma_t = mat_mul(&mat_mul(&v_inv, &data.sigma, modulus), &snf.v, modulus);
    let (frob, beta) = quotient_action(&snf.exponents, &sigma_t, p, modulus)?;

    // a pivot of valuation N-1 might really be zero at higher precision
    for k in 0..2 {
        if snf.exponents[k] == Exponent::Finite(n - 1) {
            let mut alt = snf.exponents;
            alt[k] = Exponent::Divisible;
            let (_, alt_beta) = quotient_action(&alt, &sigma_t, p, modulus)?;
            if alt_beta != beta {
                return Err(Error::PrecisionInsufficient {
                    precision: n,
                    exponent: n - 1,
                });
            }
        }
    }
    Ok(InvariantStructure {
        divisors: snf.exponents,
        quotient_dim: frob.len(),
        frob_action: frob,
        beta_bound: beta,
    })
}

/// Dimension of the Frobenius-fixed part of `H^0(I, A) / p`, an upper bound
/// for `beta_ell`.
pub fn beta_upper_bound(data: &LocalRepData) -> Result<usize> {
    inertia_invariants(data).map(|s| s.beta_bound)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(p: u64, n: u32, ell: u64, sigma: [[i64; 2]; 2], tau: [[i64; 2]; 2]) -> LocalRepData {
        LocalRepData::new(p, n, ell, sigma, tau).unwrap()
    }

    #[test]
    fn relation_examples() {
        let id = [[1, 0], [0, 1]];
        let u7 = [[1, 7], [0, 1]];
        assert!(validate_relation(&data(7, 4, 5, [[-5, 0], [0, -1]], id)).unwrap());
        assert!(validate_relation(&data(7, 4, 5, [[-5, 0], [0, -1]], u7)).unwrap());
        assert!(!validate_relation(&data(7, 2, 2, id, u7)).unwrap());
    }

    #[test]
    fn constructor_rejects() {
        let id = [[1, 0], [0, 1]];
        assert_eq!(
            LocalRepData::new(7, 4, 5, [[7, 0], [0, 1]], id),
            Err(Error::NotInvertible { modulus: 7 })
        );
        assert!(LocalRepData::new(7, 1, 5, id, id).is_err());
        assert!(LocalRepData::new(7, 4, 7, id, id).is_err());
        assert!(LocalRepData::new(8, 4, 5, id, id).is_err());
        assert!(LocalRepData::new(7, 40, 5, id, id).is_err());
    }

    #[test]
    fn smith_examples() {
        let f = |m: Mat2| smith_normal_form(&m, 7, 4).exponents;
        use Exponent::*;
        assert_eq!(f([[1, 0], [0, 1]]), [Finite(0), Finite(0)]);
        assert_eq!(f([[0, 7], [0, 0]]), [Finite(1), Divisible]);
        assert_eq!(f([[7, 0], [0, 49]]), [Finite(1), Finite(2)]);
        assert_eq!(f([[0, 0], [0, 0]]), [Divisible, Divisible]);
        assert_eq!(f([[49, 7], [14, 0]]), [Finite(1), Finite(1)]);
        assert_eq!(f([[49, 7], [7, 0]]), [Finite(1), Finite(1)]);
        assert_eq!(f([[49, 7], [7, 1]]), [Finite(0), Divisible]);
        assert_eq!(f([[50, 7], [7, 1]]), [Finite(0), Finite(0)]);
        assert_eq!(f([[7, 1], [0, 49]]), [Finite(0), Finite(3)]);
    }

    #[test]
    fn smith_transforms_diagonalize() {
        let (p, n) = (5u64, 3);
        let m = p.pow(n);
        for a in [
            [[10, 25], [5, 3]],
            [[25, 50], [75, 100]],
            [[0, 5], [25, 0]],
            [[124, 1], [1, 0]],
        ] {
            let s = smith_normal_form(&a, p, n);
            assert_eq!(mat_mul(&mat_mul(&s.u, &a, m), &s.v, m), s.diagonal(p));
            assert!(det(&s.u, p) != 0 && det(&s.v, p) != 0);
        }
    }

    #[test]
    fn unramified_gives_zero() {
        let s = inertia_invariants(&data(7, 4, 5, [[-5, 0], [0, -1]], [[1, 0], [0, 1]])).unwrap();
        assert_eq!(s.divisors, [Exponent::Divisible; 2]);
        assert_eq!((s.quotient_dim, s.beta_bound), (0, 0));
    }

    #[test]
    fn frobenius_by_minus_one() {
        let s = inertia_invariants(&data(7, 4, 5, [[-5, 0], [0, -1]], [[1, 7], [0, 1]])).unwrap();
        assert_eq!(s.quotient_dim, 1);
        assert_eq!(s.frob_action, vec![vec![6]]);
        assert_eq!(s.beta_bound, 0);
    }

    #[test]
    fn ell_one_mod_p_fixes_the_line() {
        let s = inertia_invariants(&data(7, 4, 29, [[29, 0], [0, 1]], [[1, 7], [0, 1]])).unwrap();
        assert_eq!(s.quotient_dim, 1);
        assert_eq!(s.frob_action, vec![vec![1]]);
        assert_eq!(s.beta_bound, 1);
    }

    #[test]
    fn upper_triangular_frobenius() {
        for d in [1i64, -1] {
            let sigma = [[3 * d, 5], [0, d]];
            // residually ramified inertia kills the quotient
            assert_eq!(
                beta_upper_bound(&data(7, 4, 3, sigma, [[1, 1], [0, 1]])).unwrap(),
                0
            );
            assert_eq!(
                beta_upper_bound(&data(7, 4, 3, sigma, [[1, 3], [0, 1]])).unwrap(),
                0
            );
        }
        assert_eq!(
            beta_upper_bound(&data(7, 4, 3, [[-3, 0], [0, -1]], [[1, 7], [0, 1]])).unwrap(),
            0
        );
        assert_eq!(
            beta_upper_bound(&data(7, 4, 3, [[-3, 4], [0, -1]], [[1, 14], [0, 1]])).unwrap(),
            0
        );
    }

    #[test]
    fn trivial_unramified_frobenius_survives_when_inertia_is_residually_trivial() {
        // d = 1 and tau = 1 mod p: the quotient line is e_1, fixed by Frobenius
        let s = inertia_invariants(&data(7, 4, 3, [[3, 2], [0, 1]], [[1, 7], [0, 1]])).unwrap();
        assert_eq!((s.quotient_dim, s.beta_bound), (1, 1));
    }

    #[test]
    fn semisimple_inertia_can_leave_two_dimensions() {
        // tau = diag(1+p, (1+p)^-1) with ell = 1 mod p^(N-1)
        let (p, n, ell) = (7u64, 3, 197u64);
        let m = p.pow(n);
        let inv = inv_mod(1 + p, m).unwrap();
        let d = data(
            p,
            n,
            ell,
            [[ell as i64, 0], [0, 1]],
            [[1 + p as i64, 0], [0, inv as i64]],
        );
        let s = inertia_invariants(&d).unwrap();
        assert_eq!(s.quotient_dim, 2);
        assert_eq!(s.beta_bound, 2);
    }

    #[test]
    fn precision_limit_is_flagged_when_material() {
        let d = data(7, 2, 29, [[29, 0], [0, 1]], [[1, 7], [0, 1]]);
        assert_eq!(
            inertia_invariants(&d),
            Err(Error::PrecisionInsufficient {
                precision: 2,
                exponent: 1
            })
        );
        // beta is 0 either way here
        let d = data(7, 2, 5, [[-5, 0], [0, -1]], [[1, 7], [0, 1]]);
        assert_eq!(beta_upper_bound(&d), Ok(0));
    }

    #[test]
    fn relation_failure_is_an_error() {
        let d = data(7, 2, 2, [[1, 0], [0, 1]], [[1, 7], [0, 1]]);
        assert_eq!(inertia_invariants(&d), Err(Error::RelationViolated));
    }

    #[test]
    fn cyclotomic_determinant() {
        assert!(data(7, 4, 5, [[-5, 0], [0, -1]], [[1, 0], [0, 1]]).has_cyclotomic_determinant());
        assert!(!data(7, 4, 5, [[5, 0], [0, -1]], [[1, 0], [0, 1]]).has_cyclotomic_determinant());
    }
}
