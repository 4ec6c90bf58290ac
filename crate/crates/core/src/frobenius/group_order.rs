//! `#E(F_ell)` from the orders of a few points: baby-step giant-step search
//! for the multiples of each point's order inside the Hasse interval.

use std::collections::HashMap;

use super::cubic_mod;
use crate::arith::{inv_mod, mul_mod, pow_mod};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Point {
    Infinity,
    Affine(u64, u64),
}

/// Short model `y^2 = x^3 + a x + b` over F_ell, ell > 3.
/// The group law never reads the constant term `b`.
struct ShortCurve {
    a: u64,
    ell: u64,
}

impl ShortCurve {
    fn neg(&self, p: Point) -> Point {
        match p {
            Point::Infinity => Point::Infinity,
            Point::Affine(x, y) => Point::Affine(x, (self.ell - y) % self.ell),
        }
    }

    fn add(&self, p: Point, q: Point) -> Point {
        let ell = self.ell;
        let (x1, y1, x2, y2) = match (p, q) {
            (Point::Infinity, _) => return q,
            (_, Point::Infinity) => return p,
            (Point::Affine(x1, y1), Point::Affine(x2, y2)) => (x1, y1, x2, y2),
        };
        let lambda = if x1 == x2 {
            if (y1 + y2) % ell == 0 {
                return Point::Infinity;
            }
            let num = (3 * mul_mod(x1, x1, ell) + self.a) % ell;
            mul_mod(num, inv_mod(2 * y1 % ell, ell).expect("y1 != 0"), ell)
        } else {
            let num = (y2 + ell - y1) % ell;
            mul_mod(
                num,
                inv_mod((x2 + ell - x1) % ell, ell).expect("x1 != x2"),
                ell,
            )
        };
        let x3 = (mul_mod(lambda, lambda, ell) + 2 * ell - x1 - x2) % ell;
        let y3 = (mul_mod(lambda, (x1 + ell - x3) % ell, ell) + ell - y1) % ell;
        Point::Affine(x3, y3)
    }

    fn mul(&self, p: Point, mut k: u64) -> Point {
        let mut acc = Point::Infinity;
        let mut base = p;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.add(acc, base);
            }
            base = self.add(base, base);
            k >>= 1;
        }
        acc
    }

    /// Every `m` in `[lo, hi]` with `m * p = O`, or `None` when `p` has
    /// order too small for the baby steps to be distinct.
    fn annihilators_in(&self, p: Point, lo: u64, hi: u64) -> Option<Vec<u64>> {
        let width = hi - lo;
        let s = isqrt(width) + 1;
        let mut baby = HashMap::with_capacity(s as usize);
        let mut jp = Point::Infinity;
        for j in 1..=2 * s {
            jp = self.add(jp, p);
            if jp == Point::Infinity {
                return None;
            }
            if j < s {
                // Q = -jP  <=>  Q + jP = O
                if let Point::Affine(x, y) = self.neg(jp) {
                    baby.insert((x, y), j);
                }
            }
        }
        let giant = self.mul(p, s);
        let mut q = self.mul(p, lo);
        let mut out = Vec::new();
        let mut base = lo;
        while base <= hi {
            let j = match q {
                Point::Infinity => Some(0),
                Point::Affine(x, y) => baby.get(&(x, y)).copied(),
            };
            if let Some(j) = j {
                if base + j <= hi {
                    out.push(base + j);
                }
            }
            q = self.add(q, giant);
            base += s;
        }
        Some(out)
    }
}

pub(crate) fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Tonelli-Shanks square root of a nonzero quadratic residue.
fn sqrt_mod(n: u64, ell: u64) -> u64 {
    if ell % 4 == 3 {
        return pow_mod(n, (ell + 1) / 4, ell);
    }
    let mut q = ell - 1;
    let mut s = 0;
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let z = (2..ell)
        .find(|&z| pow_mod(z, (ell - 1) / 2, ell) == ell - 1)
        .expect("odd prime has a non-residue");
    let mut m = s;
    let mut c = pow_mod(z, q, ell);
    let mut t = pow_mod(n, q, ell);
    let mut r = pow_mod(n, (q + 1) / 2, ell);
    while t != 1 {
        let mut i = 0;
        let mut t2 = t;
        while t2 != 1 {
            t2 = mul_mod(t2, t2, ell);
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), ell);
        m = i;
        c = mul_mod(b, b, ell);
        t = mul_mod(t, c, ell);
        r = mul_mod(r, b, ell);
    }
    r
}

/// Maximum number of points tried before giving up.
const MAX_POINTS: usize = 16;

/// `#E(F_ell)` for `y^2 = x^3 + a x + b`, when the orders of the first few
/// points single out one value in the Hasse interval. `None` otherwise; the
/// caller falls back to exhaustive counting.
pub(crate) fn group_order(a: u64, b: u64, ell: u64) -> Option<u64> {
    let curve = ShortCurve { a, ell };
    let r = isqrt(4 * ell);
    let (lo, hi) = (ell + 1 - r, ell + 1 + r);
    let mut candidates: Option<Vec<u64>> = None;
    let mut tried = 0;
    for x in 0..ell {
        let v = cubic_mod(a, b, x, ell);
        if v == 0 || pow_mod(v, (ell - 1) / 2, ell) != 1 {
            continue;
        }
        let p = Point::Affine(x, sqrt_mod(v, ell));
        tried += 1;
        if let Some(found) = curve.annihilators_in(p, lo, hi) {
            let next = match candidates.take() {
                None => found,
                Some(prev) => prev.into_iter().filter(|m| found.contains(m)).collect(),
            };
            if next.len() == 1 {
                return Some(next[0]);
            }
            candidates = Some(next);
        }
        if tried >= MAX_POINTS {
            break;
        }
    }
    None
}
