//! Exhaustive enumeration of GL2(F_p) for the split-class density check.
//!
//! A matrix is in the *omega class* when it is conjugate over F_p to
//! `diag(-a, -1)` with `a` outside `{0, 1, -1}`. The proportion of such
//! matrices in GL2(F_p) is `(p - 3) / (p - 1)^2`; this module counts them by
//! brute force and compares.

use num_rational::Ratio;
use rayon::prelude::*;

use crate::arith::is_prime;
use crate::error::{Error, Result};

/// Row-major 2x2 matrix `[[a, b], [c, d]]` with entries in `[0, p)`.
pub type FpMatrix = [[u64; 2]; 2];

/// Largest p enumerated unless the caller raises the bound.
pub const DEFAULT_MAX_P: u64 = 13;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityReport {
    pub p: u64,
    pub group_order: u64,
    pub matching_count: u64,
    pub exact_fraction: Ratio<u64>,
    pub closed_form: Ratio<u64>,
}

impl DensityReport {
    pub fn matches(&self) -> bool {
        self.exact_fraction == self.closed_form
    }
}

fn check_p(p: u64) -> Result<()> {
    if p < 5 || !is_prime(p) {
        return Err(Error::invalid(format!("p = {p} must be a prime >= 5")));
    }
    Ok(())
}

/// Characteristic polynomial `x^2 - t x + n` has root -1 iff `1 + t + n = 0`;
/// the other root is then `-n`. Distinct roots make the matrix diagonalizable.
pub fn is_omega_class(m: &FpMatrix, p: u64) -> Result<bool> {
    if p < 2 {
        return Err(Error::invalid("modulus must be prime"));
    }
    let [[a, b], [c, d]] = *m;
    let (a, b, c, d) = (a % p, b % p, c % p, d % p);
    let det = (a * d % p + p - b * c % p) % p;
    if det == 0 {
        return Err(Error::NotInvertible { modulus: p });
    }
    let trace = (a + d) % p;
    Ok(classify_trace_det(trace, det, p))
}

#[inline]
fn classify_trace_det(trace: u64, det: u64, p: u64) -> bool {
    if (1 + trace + det) % p != 0 {
        return false;
    }
    let mu = (p - det) % p;
    mu != 1 && mu != p - 1
}

pub fn omega_density_closed_form(p: u64) -> Result<Ratio<u64>> {
    check_p(p)?;
    Ok(Ratio::new(p - 3, (p - 1) * (p - 1)))
}

pub fn omega_density_bruteforce(p: u64) -> Result<DensityReport> {
    omega_density_bruteforce_bounded(p, DEFAULT_MAX_P)
}

/// Brute-force count over all of GL2(F_p), with `p <= max_p`.
pub fn omega_density_bruteforce_bounded(p: u64, max_p: u64) -> Result<DensityReport> {
    check_p(p)?;
    if p > max_p {
        return Err(Error::ResourceLimit(format!(
            "p = {p} exceeds the enumeration bound {max_p}"
        )));
    }
    let (group_order, matching_count) = (0..p)
        .into_par_iter()
        .map(|a| {
            let mut order = 0u64;
            let mut hits = 0u64;
            for b in 0..p {
                for c in 0..p {
                    let bc = b * c % p;
                    for d in 0..p {
                        let det = (a * d % p + p - bc) % p;
                        if det == 0 {
                            continue;
                        }
                        order += 1;
                        if classify_trace_det((a + d) % p, det, p) {
                            hits += 1;
                        }
                    }
                }
            }
            (order, hits)
        })
        .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1));
    Ok(DensityReport {
        p,
        group_order,
        matching_count,
        exact_fraction: Ratio::new(matching_count, group_order),
        closed_form: omega_density_closed_form(p)?,
    })
}
