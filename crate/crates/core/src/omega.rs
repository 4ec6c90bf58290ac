//! Membership of primes in the admissible set Omega for a fixed residual
//! representation, and the empirical density of that set.
//!
//! A prime `ell` is in Omega when `ell` does not divide `N * p`,
//! `ell != ±1 (mod p)`, and Frobenius at `ell` is conjugate to
//! `diag(-ell, -1)`. With determinant `ell`, the last condition is the trace
//! congruence `a_ell = -(ell + 1) (mod p)`: the characteristic polynomial is
//! then `(x + 1)(x + ell)` with distinct roots.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{is_prime, primes_up_to, reduce};
use crate::error::{Error, Result};
use crate::frobenius::{count_points, traces_up_to, CountMethod, CurveSpec, TraceTable};
use crate::gl2_density::omega_density_closed_form;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceSource {
    Curve(CurveSpec),
    Table(TraceTable),
}

/// The data standing in for the residual representation: the prime `p`,
/// the Serre conductor, and where Frobenius traces come from.
#[derive(Debug, Clone)]
pub struct ResidualRepSpec {
    p: u64,
    level: u64,
    source: TraceSource,
    surjective_asserted: bool,
    cache: Arc<HashMap<u64, u64>>,
}

impl ResidualRepSpec {
    pub fn new(p: u64, level: u64, source: TraceSource, surjective_asserted: bool) -> Result<Self> {
        if p < 5 || !is_prime(p) {
            return Err(Error::invalid(format!("p = {p} must be a prime >= 5")));
        }
        if level == 0 {
            return Err(Error::invalid("level must be positive"));
        }
        if level % p == 0 {
            return Err(Error::invalid(format!(
                "level {level} is divisible by p = {p}"
            )));
        }
        if let TraceSource::Table(t) = &source {
            if t.p != p {
                return Err(Error::invalid(format!(
                    "trace table is for p = {}, spec has p = {p}",
                    t.p
                )));
            }
        }
        Ok(ResidualRepSpec {
            p,
            level,
            source,
            surjective_asserted,
            cache: Arc::new(HashMap::new()),
        })
    }

    /// The mod-7 representation of 11a1 (surjective).
    pub fn example_11a1_mod7() -> Self {
        ResidualRepSpec::new(7, 11, TraceSource::Curve(CurveSpec::cremona_11a1()), true).unwrap()
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn source(&self) -> &TraceSource {
        &self.source
    }

    pub fn surjective_asserted(&self) -> bool {
        self.surjective_asserted
    }

    /// The smallest prime `ell = ±1 (mod p)` dividing the base level, if any.
    pub fn congruent_level_prime(&self) -> Option<u64> {
        crate::arith::factorize(self.level)
            .into_iter()
            .map(|(ell, _)| ell)
            .find(|&ell| ell % self.p == 1 || ell % self.p == self.p - 1)
    }

    /// Point-counts every good prime up to `bound` once so later lookups are
    /// table hits. No effect for table-backed specs.
    pub fn with_traces_up_to(mut self, bound: u64) -> Self {
        if let TraceSource::Curve(curve) = &self.source {
            let p = self.p;
            let mut cache: HashMap<u64, u64> = (*self.cache).clone();
            cache.extend(
                traces_up_to(curve, bound, CountMethod::Auto)
                    .into_iter()
                    .map(|(ell, a)| (ell, reduce(a as i128, p))),
            );
            self.cache = Arc::new(cache);
        }
        self
    }

    /// `a_ell mod p`, or `None` when the source cannot supply it.
    pub fn trace_mod_p(&self, ell: u64) -> Option<u64> {
        match &self.source {
            TraceSource::Table(t) => t.get(ell),
            TraceSource::Curve(curve) => {
                if let Some(&a) = self.cache.get(&ell) {
                    return Some(a);
                }
                let n = count_points(curve, ell).ok()?;
                Some(reduce(ell as i128 + 1 - n as i128, self.p))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ExclusionReason {
    DividesLevel,
    EqualsP,
    CongruencePlusOne,
    CongruenceMinusOne,
    TraceMismatch,
}

impl fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ExclusionReason::DividesLevel => "DividesLevel",
            ExclusionReason::EqualsP => "EqualsP",
            ExclusionReason::CongruencePlusOne => "CongruencePlusOne",
            ExclusionReason::CongruenceMinusOne => "CongruenceMinusOne",
            ExclusionReason::TraceMismatch => "TraceMismatch",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    InOmega,
    Excluded(ExclusionReason),
    MissingTrace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeClassification {
    pub ell: u64,
    pub verdict: Verdict,
    /// `a_ell mod p` when it was consulted.
    pub trace: Option<u64>,
}

impl PrimeClassification {
    pub fn in_omega(&self) -> bool {
        self.verdict == Verdict::InOmega
    }
}

pub fn classify_prime(spec: &ResidualRepSpec, ell: u64) -> Result<PrimeClassification> {
    if !is_prime(ell) {
        return Err(Error::invalid(format!("{ell} is not prime")));
    }
    let p = spec.p;
    let excluded = |reason| PrimeClassification {
        ell,
        verdict: Verdict::Excluded(reason),
        trace: None,
    };
    if spec.level % ell == 0 {
        return Ok(excluded(ExclusionReason::DividesLevel));
    }
    if ell == p {
        return Ok(excluded(ExclusionReason::EqualsP));
    }
    match ell % p {
        1 => return Ok(excluded(ExclusionReason::CongruencePlusOne)),
        r if r == p - 1 => return Ok(excluded(ExclusionReason::CongruenceMinusOne)),
        _ => {}
    }
    let Some(a) = spec.trace_mod_p(ell) else {
        return Ok(PrimeClassification {
            ell,
            verdict: Verdict::MissingTrace,
            trace: None,
        });
    };
    let target = reduce(-(ell as i128 + 1), p);
    let verdict = if a == target {
        Verdict::InOmega
    } else {
        Verdict::Excluded(ExclusionReason::TraceMismatch)
    };
    Ok(PrimeClassification {
        ell,
        verdict,
        trace: Some(a),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SieveResult {
    pub bound: u64,
    /// Ascending primes in Omega.
    pub omega: Vec<u64>,
    /// Primes whose trace was unavailable.
    pub unknown: Vec<u64>,
    /// One verdict per prime `<= bound`, ascending.
    pub classifications: Vec<PrimeClassification>,
}

/// Classifies every prime `<= bound`.
pub fn sieve_omega(spec: &ResidualRepSpec, bound: u64) -> SieveResult {
    let classifications: Vec<PrimeClassification> = primes_up_to(bound)
        .into_par_iter()
        .map(|ell| classify_prime(spec, ell).expect("sieve yields primes"))
        .collect();
    let omega = classifications
        .iter()
        .filter(|c| c.in_omega())
        .map(|c| c.ell)
        .collect();
    let unknown = classifications
        .iter()
        .filter(|c| c.verdict == Verdict::MissingTrace)
        .map(|c| c.ell)
        .collect();
    SieveResult {
        bound,
        omega,
        unknown,
        classifications,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub bound: u64,
    pub omega_count: u64,
    /// Primes `<= bound` not dividing `N * p` and with a known trace.
    pub prime_count: u64,
    pub unknown_count: u64,
    pub fraction: Ratio<u64>,
    /// Chebotarev prediction; withheld unless surjectivity is asserted.
    pub target: Option<Ratio<u64>>,
    /// `|fraction - target| / target`.
    pub deviation: Option<f64>,
    pub warning: Option<String>,
}

pub fn empirical_density(spec: &ResidualRepSpec, bound: u64) -> Result<DensityEstimate> {
    let sieve = sieve_omega(spec, bound);
    let np = spec.level * spec.p;
    let considered: Vec<&PrimeClassification> = sieve
        .classifications
        .iter()
        .filter(|c| np % c.ell != 0 && c.verdict != Verdict::MissingTrace)
        .collect();
    if considered.is_empty() {
        return Err(Error::invalid(format!(
            "no unramified primes with known traces up to {bound}"
        )));
    }
    let prime_count = considered.len() as u64;
    let omega_count = sieve.omega.len() as u64;
    let fraction = Ratio::new(omega_count, prime_count);
    let (target, deviation, warning) = if spec.surjective_asserted {
        let t = omega_density_closed_form(spec.p)?;
        let tf = *t.numer() as f64 / *t.denom() as f64;
        let ff = omega_count as f64 / prime_count as f64;
        (Some(t), Some((ff - tf).abs() / tf), None)
    } else {
        (
            None,
            None,
            Some("surjectivity not asserted; density comparison withheld".to_string()),
        )
    };
    Ok(DensityEstimate {
        bound,
        omega_count,
        prime_count,
        unknown_count: sieve.unknown.len() as u64,
        fraction,
        target,
        deviation,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn spec() -> ResidualRepSpec {
        ResidualRepSpec::example_11a1_mod7()
    }

    #[test]
    fn classification_examples() {
        let s = spec();
        let v = |ell| classify_prime(&s, ell).unwrap().verdict;
        assert_eq!(
            v(13),
            Verdict::Excluded(ExclusionReason::CongruenceMinusOne)
        );
        assert_eq!(v(11), Verdict::Excluded(ExclusionReason::DividesLevel));
        assert_eq!(v(5), Verdict::InOmega);
        assert_eq!(v(2), Verdict::Excluded(ExclusionReason::TraceMismatch));
        assert_eq!(v(7), Verdict::Excluded(ExclusionReason::EqualsP));
        assert_eq!(v(29), Verdict::Excluded(ExclusionReason::CongruencePlusOne));
        assert!(classify_prime(&s, 15).is_err());
    }

    #[test]
    fn sieve_examples() {
        let s = spec();
        assert_eq!(sieve_omega(&s, 10).omega, vec![5]);
        assert!(sieve_omega(&s, 4).omega.is_empty());
        let empty = sieve_omega(&s, 1);
        assert!(empty.omega.is_empty() && empty.classifications.is_empty());
        let r = sieve_omega(&s, 1000);
        assert_eq!(r.classifications.len(), primes_up_to(1000).len());
        assert!(r.unknown.is_empty());
    }

    #[test]
    fn density_small_bound() {
        let d = empirical_density(&spec(), 10).unwrap();
        assert_eq!((d.omega_count, d.prime_count), (1, 3));
        assert_eq!(d.fraction, Ratio::new(1, 3));
        assert_eq!(d.target, Some(Ratio::new(1, 9)));
        assert!(empirical_density(&spec(), 1).is_err());
    }

    #[test]
    fn table_source_and_missing_traces() {
        let table = TraceTable {
            p: 7,
            entries: BTreeMap::from([(2, 5), (3, 6), (5, 1)]),
            provenance: "test".into(),
        };
        let s = ResidualRepSpec::new(7, 11, TraceSource::Table(table), false).unwrap();
        assert_eq!(classify_prime(&s, 5).unwrap().verdict, Verdict::InOmega);
        assert_eq!(
            classify_prime(&s, 101).unwrap().verdict,
            Verdict::MissingTrace
        );
        let r = sieve_omega(&s, 30);
        assert_eq!(r.omega, vec![5]);
        assert_eq!(r.unknown, vec![17, 19, 23]);
        let d = empirical_density(&s, 30).unwrap();
        assert!(d.target.is_none() && d.warning.is_some());
        assert_eq!(d.unknown_count, 3);
    }

    #[test]
    fn spec_validation() {
        let src = || TraceSource::Curve(CurveSpec::cremona_11a1());
        assert!(ResidualRepSpec::new(4, 11, src(), true).is_err());
        assert!(ResidualRepSpec::new(3, 11, src(), true).is_err());
        assert!(ResidualRepSpec::new(11, 11, src(), true).is_err());
        assert!(ResidualRepSpec::new(7, 0, src(), true).is_err());
    }

    #[test]
    fn cached_traces_agree_with_direct() {
        let s = spec();
        let cached = spec().with_traces_up_to(2000);
        for ell in primes_up_to(2000) {
            assert_eq!(s.trace_mod_p(ell), cached.trace_mod_p(ell));
        }
    }
}
