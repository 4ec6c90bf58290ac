//! One-shot report: density check, Omega sieve, census curve, admissible
//! levels, the lower bound and certificates, assembled in a fixed order.

use std::fmt::Write as _;

use num_rational::Ratio;
use serde::Serialize;

use crate::census::{census_ratios, enumerate_squarefree_smooth, nf_lower_bound};
use crate::config::{OutputFormat, RunConfig};
use crate::error::{Error, Result};
use crate::gl2_density::{omega_density_bruteforce, omega_density_closed_form, DEFAULT_MAX_P};
use crate::levels::enumerate_admissible;
use crate::omega::{sieve_omega, Verdict};
use crate::stability::stability_certificate;

fn frac(r: Ratio<u64>) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn decimal6(x: f64) -> String {
    format!("{x:.6}")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunEcho {
    pub p: u64,
    pub level: u64,
    pub source: String,
    pub surjective: bool,
    pub x_max: u64,
    pub y: u64,
    pub sieve_bound: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensitySection {
    pub closed_form: String,
    /// Absent when `p` is beyond the enumeration bound.
    pub group_order: Option<u64>,
    pub matching_count: Option<u64>,
    pub exact_fraction: Option<String>,
    pub matches: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SieveSection {
    pub bound: u64,
    pub primes: u64,
    /// Primes not dividing `N p` with a known trace.
    pub considered: u64,
    pub omega_count: u64,
    pub unknown_count: u64,
    pub fraction: Option<String>,
    pub target: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusRow {
    pub y: u64,
    pub m_omega: u64,
    pub ratio: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusSection {
    pub delta: String,
    pub checkpoints: Vec<CensusRow>,
    pub spread: Option<String>,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelsSection {
    pub x: u64,
    /// `n(rho; X)`.
    pub admissible_count: u64,
    pub admissible: Vec<u64>,
    pub unknown: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateRow {
    pub level: u64,
    pub certified: bool,
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub run: RunEcho,
    pub density: DensitySection,
    pub omega_sieve: SieveSection,
    pub census: CensusSection,
    pub levels: LevelsSection,
    pub nf_lower_bound: u64,
    pub certificates: Vec<CertificateRow>,
    /// `nf_lower_bound <= certified + unknown`.
    pub consistent: bool,
}

fn default_checkpoints(y: u64) -> Vec<u64> {
    let mut out: Vec<u64> = std::iter::successors(Some(10u64), |&t| t.checked_mul(10))
        .take_while(|&t| t < y)
        .collect();
    out.push(y.max(1));
    out
}

pub fn run_report(config: &RunConfig) -> Result<Report> {
    config.validate().map_err(|e| e.in_stage("config"))?;
    let base_spec = config.spec.build().map_err(|e| e.in_stage("config"))?;
    let p = base_spec.p();
    let level = base_spec.level();
    if config.x_max < level {
        return Err(Error::Config(format!(
            "x_max = {} is below the base level {level}",
            config.x_max
        ))
        .in_stage("config"));
    }
    let y = config.x_max / level;
    let sieve_bound = config.sieve_bound.unwrap_or(y);
    let checkpoints = config
        .checkpoints
        .clone()
        .unwrap_or_else(|| default_checkpoints(y));
    let trace_bound = sieve_bound
        .max(y)
        .max(*checkpoints.last().expect("nonempty"));
    let spec = base_spec.with_traces_up_to(trace_bound);

    let density = {
        let closed = omega_density_closed_form(p).map_err(|e| e.in_stage("density"))?;
        if p <= DEFAULT_MAX_P {
            let d = omega_density_bruteforce(p).map_err(|e| e.in_stage("density"))?;
            DensitySection {
                closed_form: frac(closed),
                group_order: Some(d.group_order),
                matching_count: Some(d.matching_count),
                exact_fraction: Some(frac(d.exact_fraction)),
                matches: Some(d.matches()),
            }
        } else {
            DensitySection {
                closed_form: frac(closed),
                group_order: None,
                matching_count: None,
                exact_fraction: None,
                matches: None,
            }
        }
    };

    let omega_sieve = {
        let s = sieve_omega(&spec, sieve_bound);
        let np = level * p;
        let considered = s
            .classifications
            .iter()
            .filter(|c| np % c.ell != 0 && c.verdict != Verdict::MissingTrace)
            .count() as u64;
        let omega_count = s.omega.len() as u64;
        SieveSection {
            bound: sieve_bound,
            primes: s.classifications.len() as u64,
            considered,
            omega_count,
            unknown_count: s.unknown.len() as u64,
            fraction: (considered > 0).then(|| frac(Ratio::new(omega_count, considered))),
            target: spec.surjective_asserted().then(|| frac(density_target(p))),
        }
    };

    let delta = omega_density_closed_form(p).map_err(|e| e.in_stage("census"))?;
    let omega_for_census = {
        let s = sieve_omega(&spec, trace_bound);
        if !s.unknown.is_empty() {
            return Err(Error::InsufficientTraceData { primes: s.unknown }.in_stage("census"));
        }
        s.omega
    };
    let census = {
        let c = census_ratios(&omega_for_census, delta, &checkpoints)
            .map_err(|e| e.in_stage("census"))?;
        CensusSection {
            delta: frac(delta),
            stable: c.is_stable(),
            spread: c.spread.map(decimal6),
            checkpoints: c
                .checkpoints
                .iter()
                .map(|pt| CensusRow {
                    y: pt.y,
                    m_omega: pt.count,
                    ratio: pt.ratio.map(decimal6),
                })
                .collect(),
        }
    };

    let levels = {
        let e = enumerate_admissible(&spec, config.x_max).map_err(|e| e.in_stage("levels"))?;
        LevelsSection {
            x: config.x_max,
            admissible_count: e.count() as u64,
            admissible: e.admissible_levels(),
            unknown: e.unknown_levels(),
        }
    };

    let nf = nf_lower_bound(&spec, config.x_max).map_err(|e| e.in_stage("lower_bound"))?;

    let certificates = {
        let cofactors = enumerate_squarefree_smooth(&omega_for_census, y, config.level_cap)
            .map_err(|e| e.in_stage("certificates"))?;
        cofactors
            .into_iter()
            .map(|m| {
                let v = stability_certificate(&spec, m * level)?;
                Ok(CertificateRow {
                    level: m * level,
                    certified: v.certified,
                    reasons: v.reasons.iter().map(|r| r.to_string()).collect(),
                })
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.in_stage("certificates"))?
    };
    let certified = certificates.iter().filter(|c| c.certified).count() as u64;

    Ok(Report {
        run: RunEcho {
            p,
            level,
            source: config.spec.describe_source(),
            surjective: config.spec.surjective,
            x_max: config.x_max,
            y,
            sieve_bound,
            seed: config.seed,
        },
        density,
        omega_sieve,
        census,
        consistent: nf <= certified + levels.unknown.len() as u64,
        levels,
        nf_lower_bound: nf,
        certificates,
    })
}

fn density_target(p: u64) -> Ratio<u64> {
    omega_density_closed_form(p).expect("p validated by the spec")
}

impl Report {
    pub fn certified_levels(&self) -> Vec<u64> {
        self.certificates
            .iter()
            .filter(|c| c.certified)
            .map(|c| c.level)
            .collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// `section,key,value` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("section,key,value\n");
        let mut row = |section: &str, key: &str, value: String| {
            let _ = writeln!(out, "{section},{key},{value}");
        };
        let opt = |v: &Option<String>| v.clone().unwrap_or_default();
        let r = &self.run;
        row("run", "p", r.p.to_string());
        row("run", "level", r.level.to_string());
        row("run", "source", format!("\"{}\"", r.source));
        row("run", "surjective", r.surjective.to_string());
        row("run", "x_max", r.x_max.to_string());
        row("run", "y", r.y.to_string());
        row("run", "sieve_bound", r.sieve_bound.to_string());
        row("run", "seed", r.seed.to_string());
        let d = &self.density;
        row("density", "closed_form", d.closed_form.clone());
        row(
            "density",
            "group_order",
            d.group_order.map(|x| x.to_string()).unwrap_or_default(),
        );
        row(
            "density",
            "matching_count",
            d.matching_count.map(|x| x.to_string()).unwrap_or_default(),
        );
        row("density", "exact_fraction", opt(&d.exact_fraction));
        row(
            "density",
            "matches",
            d.matches.map(|x| x.to_string()).unwrap_or_default(),
        );
        let s = &self.omega_sieve;
        row("omega_sieve", "bound", s.bound.to_string());
        row("omega_sieve", "primes", s.primes.to_string());
        row("omega_sieve", "considered", s.considered.to_string());
        row("omega_sieve", "omega_count", s.omega_count.to_string());
        row("omega_sieve", "unknown_count", s.unknown_count.to_string());
        row("omega_sieve", "fraction", opt(&s.fraction));
        row("omega_sieve", "target", opt(&s.target));
        let c = &self.census;
        row("census", "delta", c.delta.clone());
        for pt in &c.checkpoints {
            row(
                "census",
                &format!("M_omega({})", pt.y),
                pt.m_omega.to_string(),
            );
            row("census", &format!("ratio({})", pt.y), opt(&pt.ratio));
        }
        row("census", "spread", opt(&c.spread));
        row("census", "stable", c.stable.to_string());
        let l = &self.levels;
        row("levels", "x", l.x.to_string());
        row("levels", "admissible_count", l.admissible_count.to_string());
        row("levels", "unknown_count", l.unknown.len().to_string());
        row(
            "lower_bound",
            "nf_lower_bound",
            self.nf_lower_bound.to_string(),
        );
        for cert in &self.certificates {
            let value = if cert.certified {
                "certified".to_string()
            } else {
                format!("\"{}\"", cert.reasons.join("; "))
            };
            row("certificates", &cert.level.to_string(), value);
        }
        row("consistency", "consistent", self.consistent.to_string());
        out
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => self.to_json(),
            OutputFormat::Csv => self.to_csv(),
        }
    }
}
