//! Squarefree integers supported on a prime set: exact counts, the ratio
//! against `Y (log Y)^(delta - 1)`, and the resulting lower bound on the
//! number of stable levels up to `X`.

use num_rational::Ratio;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::omega::{sieve_omega, ResidualRepSpec};

/// Default tolerated max/min spread of the ratio over the last three
/// checkpoints.
pub const DEFAULT_BAND: f64 = 2.0;

/// Below this `Y` the whole search is cheaper than scheduling it.
const PARALLEL_CUTOFF: u64 = 1 << 16;

fn normalized(primes: &[u64]) -> std::borrow::Cow<'_, [u64]> {
    if primes.windows(2).all(|w| w[0] < w[1]) {
        std::borrow::Cow::Borrowed(primes)
    } else {
        let mut v = primes.to_vec();
        v.sort_unstable();
        v.dedup();
        std::borrow::Cow::Owned(v)
    }
}

/// Number of squarefree products of distinct elements of `primes[..]`
/// that are `<= limit`, the empty product included.
fn count_below(primes: &[u64], limit: u64) -> u64 {
    let mut count = 1;
    for (i, &q) in primes.iter().enumerate() {
        if q > limit {
            break;
        }
        count += count_below(&primes[i + 1..], limit / q);
    }
    count
}

/// `M(Y)`: squarefree `M <= Y` whose prime factors all lie in `primes`.
/// `M = 1` is counted.
pub fn count_squarefree_smooth(primes: &[u64], y: u64) -> u64 {
    if y == 0 {
        return 0;
    }
    let primes = normalized(primes);
    let primes: &[u64] = &primes;
    if y < PARALLEL_CUTOFF {
        return count_below(primes, y);
    }
    // subtrees rooted at distinct smallest primes are independent
    let top = primes.partition_point(|&q| q <= y);
    1 + (0..top)
        .into_par_iter()
        .map(|i| count_below(&primes[i + 1..], y / primes[i]))
        .sum::<u64>()
}

/// The members counted by [`count_squarefree_smooth`], ascending; fails with
/// the true count when it exceeds `cap`.
pub fn enumerate_squarefree_smooth(primes: &[u64], y: u64, cap: u64) -> Result<Vec<u64>> {
    let count = count_squarefree_smooth(primes, y);
    if count > cap {
        return Err(Error::CapExceeded { count, cap });
    }
    let primes = normalized(primes);
    let mut out = Vec::with_capacity(count as usize);
    fn walk(primes: &[u64], product: u64, y: u64, out: &mut Vec<u64>) {
        out.push(product);
        for (i, &q) in primes.iter().enumerate() {
            if q > y / product {
                break;
            }
            walk(&primes[i + 1..], product * q, y, out);
        }
    }
    if y >= 1 {
        walk(&primes, 1, y, &mut out);
    }
    out.sort_unstable();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CensusPoint {
    pub y: u64,
    pub count: u64,
    /// `count / (y (ln y)^(delta - 1))`, undefined for `y < 2`.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CensusCurve {
    pub delta: Ratio<u64>,
    pub checkpoints: Vec<CensusPoint>,
    pub band: f64,
    /// max/min of the ratio over the last three checkpoints.
    pub spread: Option<f64>,
}

impl CensusCurve {
    /// False when the last three ratios spread by more than the band.
    pub fn is_stable(&self) -> bool {
        self.spread.is_none_or(|s| s < self.band)
    }
}

pub fn ratio_weight(y: u64, delta: Ratio<u64>) -> Option<f64> {
    if y < 2 {
        return None;
    }
    let d = *delta.numer() as f64 / *delta.denom() as f64;
    Some(y as f64 * (y as f64).ln().powf(d - 1.0))
}

pub fn census_ratios(
    primes: &[u64],
    delta: Ratio<u64>,
    checkpoints: &[u64],
) -> Result<CensusCurve> {
    census_ratios_with_band(primes, delta, checkpoints, DEFAULT_BAND)
}

pub fn census_ratios_with_band(
    primes: &[u64],
    delta: Ratio<u64>,
    checkpoints: &[u64],
    band: f64,
) -> Result<CensusCurve> {
    if checkpoints.is_empty() {
        return Err(Error::invalid("at least one checkpoint is required"));
    }
    if !checkpoints.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::invalid("checkpoints must be strictly increasing"));
    }
    if *delta.numer() == 0 || delta > Ratio::from_integer(1) {
        return Err(Error::invalid(format!(
            "delta = {delta} must lie in (0, 1]"
        )));
    }
    let points: Vec<CensusPoint> = checkpoints
        .iter()
        .map(|&y| {
            let count = count_squarefree_smooth(primes, y);
            CensusPoint {
                y,
                count,
                ratio: ratio_weight(y, delta).map(|w| count as f64 / w),
            }
        })
        .collect();
    let tail: Vec<f64> = points
        .iter()
        .rev()
        .take(3)
        .filter_map(|c| c.ratio)
        .collect();
    let spread = (points.len() >= 3 && tail.len() == 3).then(|| {
        let max = tail.iter().cloned().fold(f64::MIN, f64::max);
        let min = tail.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    });
    Ok(CensusCurve {
        delta,
        checkpoints: points,
        band,
        spread,
    })
}

/// `M_Omega(floor(X / N))`, the number of levels `N * M <= X` with `M` a
/// squarefree product of primes in Omega.
pub fn nf_lower_bound(spec: &ResidualRepSpec, x: u64) -> Result<u64> {
    if let Some(ell) = spec.congruent_level_prime() {
        return Err(Error::HypothesisViolated { ell });
    }
    if x < spec.level() {
        return Err(Error::invalid(format!(
            "X = {x} is below the base level {}",
            spec.level()
        )));
    }
    let y = x / spec.level();
    let sieve = sieve_omega(spec, y);
    if !sieve.unknown.is_empty() {
        return Err(Error::InsufficientTraceData {
            primes: sieve.unknown,
        });
    }
    Ok(count_squarefree_smooth(&sieve.omega, y))
}
