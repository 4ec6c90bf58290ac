//! Carayol's local conditions as a decision procedure for the levels at
//! which the residual representation can arise.
//!
//! A level `N = N_base * prod ell^alpha(ell)` is admissible when every raised
//! prime satisfies one of the cases:
//!
//! | case | congruence        | `ell | N_base` | alpha | extra condition              |
//! |------|-------------------|----------------|-------|------------------------------|
//! | C1   | any               | no             | 1     | `ell a^2 = (1 + ell)^2 ell`  |
//! | C2a  | `ell = -1 mod p`  | no             | 2     | `a = 0`                      |
//! | C2b  | `ell = -1 mod p`  | yes            | 1     | det unramified (automatic)   |
//! | C3a  | `ell = 1 mod p`   | no             | 2     |                              |
//! | C3b  | `ell = 1 mod p`   | either         | 1     |                              |
//!
//! where `a = a_ell mod p` and `det = ell mod p`.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{factorize, mul_mod};
use crate::error::{Error, Result};
use crate::omega::ResidualRepSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum CarayolCase {
    C1,
    C2a,
    C2b,
    C3a,
    C3b,
}

impl fmt::Display for CarayolCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelFactorization {
    pub n: u64,
    pub base: u64,
    /// Raised prime -> (exponent, certifying case).
    pub raised: BTreeMap<u64, (u32, CarayolCase)>,
}

impl LevelFactorization {
    /// The cofactor `N / N_base`.
    pub fn cofactor(&self) -> u64 {
        self.raised.iter().map(|(&l, &(e, _))| l.pow(e)).product()
    }

    /// `5^1:C1;13^2:C2a` style summary; empty for the base level.
    pub fn case_breakdown(&self) -> String {
        self.raised
            .iter()
            .map(|(l, (e, c))| format!("{l}^{e}:{c}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    PDividesLevel,
    BaseNotDividing,
    FailedAt(u64),
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::PDividesLevel => f.write_str("PDividesLevel"),
            Rejection::BaseNotDividing => f.write_str("BaseNotDividing"),
            Rejection::FailedAt(l) => write!(f, "FailedAt({l})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LevelVerdict {
    Admissible(LevelFactorization),
    NotAdmissible(Rejection),
    /// A case needed `a_ell` and the trace source could not supply it.
    Unknown {
        ell: u64,
    },
}

impl LevelVerdict {
    pub fn is_admissible(&self) -> bool {
        matches!(self, LevelVerdict::Admissible(_))
    }
}

enum PrimeOutcome {
    Certified(CarayolCase),
    Failed,
    Missing,
}

fn certify_prime(spec: &ResidualRepSpec, ell: u64, alpha: u32) -> PrimeOutcome {
    let p = spec.p();
    let in_base = spec.level() % ell == 0;
    let r = ell % p;
    let minus_one = r == p - 1;
    let plus_one = r == 1;
    let mut missing = false;

    if !in_base && alpha == 1 {
        match spec.trace_mod_p(ell) {
            Some(a) => {
                let lhs = mul_mod(r, mul_mod(a, a, p), p);
                let s = (1 + r) % p;
                let rhs = mul_mod(mul_mod(s, s, p), r, p);
                if lhs == rhs {
                    return PrimeOutcome::Certified(CarayolCase::C1);
                }
            }
            None => missing = true,
        }
    }
    if minus_one {
        if !in_base && alpha == 2 {
            match spec.trace_mod_p(ell) {
                Some(0) => return PrimeOutcome::Certified(CarayolCase::C2a),
                Some(_) => {}
                None => missing = true,
            }
        }
        if in_base && alpha == 1 {
            return PrimeOutcome::Certified(CarayolCase::C2b);
        }
    }
    if plus_one {
        if !in_base && alpha == 2 {
            return PrimeOutcome::Certified(CarayolCase::C3a);
        }
        if alpha == 1 {
            return PrimeOutcome::Certified(CarayolCase::C3b);
        }
    }
    if missing {
        PrimeOutcome::Missing
    } else {
        PrimeOutcome::Failed
    }
}

pub fn carayol_check(spec: &ResidualRepSpec, n: u64) -> Result<LevelVerdict> {
    if n == 0 {
        return Err(Error::invalid("level must be positive"));
    }
    if n % spec.p() == 0 {
        return Ok(LevelVerdict::NotAdmissible(Rejection::PDividesLevel));
    }
    let base = spec.level();
    if n % base != 0 {
        return Ok(LevelVerdict::NotAdmissible(Rejection::BaseNotDividing));
    }
    let mut raised = BTreeMap::new();
    let mut missing = None;
    for (ell, alpha) in factorize(n / base) {
        match certify_prime(spec, ell, alpha) {
            PrimeOutcome::Certified(case) => {
                raised.insert(ell, (alpha, case));
            }
            PrimeOutcome::Failed => {
                return Ok(LevelVerdict::NotAdmissible(Rejection::FailedAt(ell)))
            }
            PrimeOutcome::Missing => {
                missing.get_or_insert(ell);
            }
        }
    }
    if let Some(ell) = missing {
        return Ok(LevelVerdict::Unknown { ell });
    }
    Ok(LevelVerdict::Admissible(LevelFactorization {
        n,
        base,
        raised,
    }))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelEnumeration {
    pub x: u64,
    /// Verdict for every multiple of the base level up to `x`, ascending.
    pub verdicts: Vec<(u64, LevelVerdict)>,
}

impl LevelEnumeration {
    pub fn admissible(&self) -> impl Iterator<Item = &LevelFactorization> {
        self.verdicts.iter().filter_map(|(_, v)| match v {
            LevelVerdict::Admissible(f) => Some(f),
            _ => None,
        })
    }

    pub fn admissible_levels(&self) -> Vec<u64> {
        self.admissible().map(|f| f.n).collect()
    }

    /// `n(rho; X)`.
    pub fn count(&self) -> usize {
        self.admissible().count()
    }

    /// Levels whose verdict needs a missing trace; never counted.
    pub fn unknown_levels(&self) -> Vec<u64> {
        self.verdicts
            .iter()
            .filter(|(_, v)| matches!(v, LevelVerdict::Unknown { .. }))
            .map(|(n, _)| *n)
            .collect()
    }
}

pub fn enumerate_admissible(spec: &ResidualRepSpec, x: u64) -> Result<LevelEnumeration> {
    if x == 0 {
        return Err(Error::invalid("X must be positive"));
    }
    let base = spec.level();
    let verdicts = (1..=x / base)
        .into_par_iter()
        .map(|m| {
            let n = m * base;
            carayol_check(spec, n).map(|v| (n, v))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LevelEnumeration { x, verdicts })
}
