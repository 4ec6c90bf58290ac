//! Selmer-dimension bookkeeping and the stability certificate for a raised
//! level.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::arith::factorize;
use crate::error::{Error, Result};
use crate::omega::{classify_prime, ExclusionReason, ResidualRepSpec, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Place {
    Prime(u64),
    Archimedean,
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Prime(ell) => write!(f, "{ell}"),
            Place::Archimedean => f.write_str("inf"),
        }
    }
}

impl FromStr for Place {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "arch" => Ok(Place::Archimedean),
            t => t
                .parse()
                .map(Place::Prime)
                .map_err(|_| Error::invalid(format!("unknown place '{t}'"))),
        }
    }
}

/// Local condition dimension and `dim H^0` at a place.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LocalTerm {
    pub dim_l: i64,
    pub h0_local: i64,
}

/// Dimensions are signed so malformed input can be rejected rather than
/// wrapped.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LedgerInput {
    pub p: u64,
    pub h0_q: i64,
    pub h0_q_star: i64,
    pub local_terms: BTreeMap<Place, LocalTerm>,
    pub sha2_dim: i64,
    pub residual_selmer_dim: i64,
    pub betas: BTreeMap<u64, i64>,
}

impl LedgerInput {
    pub fn validate(&self) -> Result<()> {
        let neg = |name: String, v: i64| {
            if v < 0 {
                Err(Error::NegativeDimension(format!("{name} = {v}")))
            } else {
                Ok(())
            }
        };
        neg("h0_Q".into(), self.h0_q)?;
        neg("h0_Q_star".into(), self.h0_q_star)?;
        neg("sha2".into(), self.sha2_dim)?;
        neg("residual_selmer".into(), self.residual_selmer_dim)?;
        for (place, t) in &self.local_terms {
            neg(format!("dim_L at {place}"), t.dim_l)?;
            neg(format!("h0 at {place}"), t.h0_local)?;
        }
        for (ell, &b) in &self.betas {
            neg(format!("beta_{ell}"), b)?;
        }
        Ok(())
    }

    /// Flat `key = value` text. Keys: `p`, `h0_Q`, `h0_Q_star`, `sha2`,
    /// `residual_selmer`, `local.<place> = dim_L,h0` with place a prime or
    /// `inf`, and `beta.<ell>`. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut input = LedgerInput::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: idx + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected key = value, got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let int = |v: &str| -> Result<i64> {
                v.trim()
                    .parse()
                    .map_err(|_| parse_err(format!("'{v}' is not an integer")))
            };
            match key {
                "p" => {
                    input.p = value
                        .parse()
                        .map_err(|_| parse_err(format!("'{value}' is not a prime")))?
                }
                "h0_Q" => input.h0_q = int(value)?,
                "h0_Q_star" => input.h0_q_star = int(value)?,
                "sha2" => input.sha2_dim = int(value)?,
                "residual_selmer" => input.residual_selmer_dim = int(value)?,
                _ => {
                    if let Some(place) = key.strip_prefix("local.") {
                        let place: Place =
                            place.parse().map_err(|e: Error| parse_err(e.to_string()))?;
                        let (d, h) = value.split_once(',').ok_or_else(|| {
                            parse_err(format!("local term '{value}' must be dim_L,h0"))
                        })?;
                        input.local_terms.insert(
                            place,
                            LocalTerm {
                                dim_l: int(d)?,
                                h0_local: int(h)?,
                            },
                        );
                    } else if let Some(ell) = key.strip_prefix("beta.") {
                        let ell = ell
                            .parse()
                            .map_err(|_| parse_err(format!("bad prime '{ell}'")))?;
                        input.betas.insert(ell, int(value)?);
                    } else {
                        return Err(parse_err(format!("unknown key '{key}'")));
                    }
                }
            }
        }
        input.validate()?;
        Ok(input)
    }

    fn term(&self, place: Place) -> LocalTerm {
        self.local_terms.get(&place).copied().unwrap_or_default()
    }
}

/// `dim Sel_L - dim Sel_L-dual = h0(M) - h0(M*) + sum_v (dim L_v - h0_v)`.
pub fn wiles_ledger(input: &LedgerInput) -> Result<i64> {
    input.validate()?;
    Ok(input.h0_q - input.h0_q_star
        + input
            .local_terms
            .values()
            .map(|t| t.dim_l - t.h0_local)
            .sum::<i64>())
}

/// `(lower, upper)`. Upper is the residual Selmer dimension plus the betas;
/// lower is the betas plus `dim L_p - h0_p - h0_inf + dim Sha^2`. Places
/// absent from the input count as zero.
pub fn selmer_dim_bounds(input: &LedgerInput) -> Result<(i64, i64)> {
    input.validate()?;
    let betas: i64 = input.betas.values().sum();
    let at_p = input.term(Place::Prime(input.p));
    let arch = input.term(Place::Archimedean);
    let lower = betas + at_p.dim_l - at_p.h0_local - arch.h0_local + input.sha2_dim;
    Ok((lower, input.residual_selmer_dim + betas))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CertificateReason {
    PDividesLevel,
    BaseNotDividing,
    /// A prime of the base level is `±1 mod p`; `residue` is `1` or `-1`.
    CongruentBasePrime {
        ell: u64,
        residue: i8,
    },
    CofactorNotSquarefree {
        ell: u64,
        exponent: u32,
    },
    NotInOmega {
        ell: u64,
        reason: ExclusionReason,
    },
    MissingTrace {
        ell: u64,
    },
}

impl fmt::Display for CertificateReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CertificateReason::PDividesLevel => f.write_str("p divides the level"),
            CertificateReason::BaseNotDividing => {
                f.write_str("base level does not divide the level")
            }
            CertificateReason::CongruentBasePrime { ell, residue } => {
                write!(f, "{ell} divides the base level and is {residue:+} mod p")
            }
            CertificateReason::CofactorNotSquarefree { ell, exponent } => {
                write!(f, "{ell}^{exponent} divides the cofactor")
            }
            CertificateReason::NotInOmega { ell, reason } => {
                write!(f, "{ell} not in Omega: {reason}")
            }
            CertificateReason::MissingTrace { ell } => write!(f, "{ell}: trace unavailable"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilityVerdict {
    pub certified: bool,
    pub reasons: Vec<CertificateReason>,
}

/// Checks that the base level has no prime `±1 mod p` and that every prime
/// of the squarefree cofactor `N_g / N` lies in Omega. Failed hypotheses are
/// collected as reasons.
pub fn stability_certificate(spec: &ResidualRepSpec, n_g: u64) -> Result<StabilityVerdict> {
    if n_g == 0 {
        return Err(Error::invalid("level must be positive"));
    }
    let p = spec.p();
    let mut reasons = Vec::new();
    for (ell, _) in factorize(spec.level()) {
        if ell % p == 1 {
            reasons.push(CertificateReason::CongruentBasePrime { ell, residue: 1 });
        } else if ell % p == p - 1 {
            reasons.push(CertificateReason::CongruentBasePrime { ell, residue: -1 });
        }
    }
    if n_g % p == 0 {
        reasons.push(CertificateReason::PDividesLevel);
    }
    if n_g % spec.level() != 0 {
        reasons.push(CertificateReason::BaseNotDividing);
    } else {
        for (ell, exponent) in factorize(n_g / spec.level()) {
            if exponent > 1 {
                reasons.push(CertificateReason::CofactorNotSquarefree { ell, exponent });
                continue;
            }
            match classify_prime(spec, ell)?.verdict {
                Verdict::InOmega => {}
                // reported above
                Verdict::Excluded(ExclusionReason::EqualsP) => {}
                Verdict::Excluded(reason) => {
                    reasons.push(CertificateReason::NotInOmega { ell, reason })
                }
                Verdict::MissingTrace => reasons.push(CertificateReason::MissingTrace { ell }),
            }
        }
    }
    Ok(StabilityVerdict {
        certified: reasons.is_empty(),
        reasons,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frobenius::CurveSpec;
    use crate::omega::TraceSource;

    fn places(terms: &[(Place, i64, i64)]) -> BTreeMap<Place, LocalTerm> {
        terms
            .iter()
            .map(|&(pl, d, h)| {
                (
                    pl,
                    LocalTerm {
                        dim_l: d,
                        h0_local: h,
                    },
                )
            })
            .collect()
    }

    #[test]
    fn ledger_examples() {
        assert_eq!(wiles_ledger(&LedgerInput::default()), Ok(0));
        let input = LedgerInput {
            p: 7,
            local_terms: places(&[(Place::Prime(7), 2, 0), (Place::Archimedean, 0, 1)]),
            ..Default::default()
        };
        assert_eq!(wiles_ledger(&input), Ok(1));
        assert_eq!(selmer_dim_bounds(&input), Ok((1, 0)));
    }

    #[test]
    fn bounds_examples() {
        let input = LedgerInput {
            p: 7,
            residual_selmer_dim: 3,
            betas: BTreeMap::from([(5, 0), (13, 0)]),
            ..Default::default()
        };
        assert_eq!(selmer_dim_bounds(&input).unwrap().1, 3);
        let input = LedgerInput {
            p: 7,
            residual_selmer_dim: 2,
            betas: BTreeMap::from([(5, 1)]),
            ..Default::default()
        };
        assert_eq!(selmer_dim_bounds(&input).unwrap().1, 3);
    }

    #[test]
    fn negative_dimensions_rejected() {
        let input = LedgerInput {
            sha2_dim: -1,
            ..Default::default()
        };
        assert!(matches!(
            wiles_ledger(&input),
            Err(Error::NegativeDimension(_))
        ));
        let input = LedgerInput {
            local_terms: places(&[(Place::Prime(3), 1, -2)]),
            ..Default::default()
        };
        assert!(matches!(
            selmer_dim_bounds(&input),
            Err(Error::NegativeDimension(_))
        ));
    }

    #[test]
    fn parse_ledger_file() {
        let text = "# sample\np = 7\nh0_Q = 0\nh0_Q_star = 0\nlocal.7 = 2, 0\nlocal.inf = 0,1\nsha2 = 1\nresidual_selmer = 2\nbeta.5 = 1\n";
        let input = LedgerInput::parse(text).unwrap();
        assert_eq!(input.local_terms.len(), 2);
        assert_eq!(wiles_ledger(&input), Ok(1));
        assert_eq!(selmer_dim_bounds(&input), Ok((3, 3)));
        assert!(matches!(
            LedgerInput::parse("bogus = 1"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            LedgerInput::parse("p = 7\nlocal.3 = 1"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            LedgerInput::parse("sha2 = -3"),
            Err(Error::NegativeDimension(_))
        ));
    }

    #[test]
    fn certificate_examples() {
        let s = ResidualRepSpec::example_11a1_mod7();
        assert!(stability_certificate(&s, 11).unwrap().certified);
        assert!(stability_certificate(&s, 55).unwrap().certified);
        let v = stability_certificate(&s, 143).unwrap();
        assert!(!v.certified);
        assert_eq!(
            v.reasons,
            vec![CertificateReason::NotInOmega {
                ell: 13,
                reason: ExclusionReason::CongruenceMinusOne
            }]
        );
    }

    #[test]
    fn certificate_precondition_failures() {
        let s = ResidualRepSpec::example_11a1_mod7();
        let r = |n| stability_certificate(&s, n).unwrap().reasons;
        assert_eq!(
            r(275),
            vec![CertificateReason::CofactorNotSquarefree {
                ell: 5,
                exponent: 2
            }]
        );
        assert_eq!(r(77), vec![CertificateReason::PDividesLevel]);
        assert_eq!(r(10), vec![CertificateReason::BaseNotDividing]);
        assert_eq!(
            r(121),
            vec![CertificateReason::NotInOmega {
                ell: 11,
                reason: ExclusionReason::DividesLevel
            }]
        );
        let bad = ResidualRepSpec::new(7, 13, TraceSource::Curve(CurveSpec::cremona_11a1()), true)
            .unwrap();
        assert_eq!(
            stability_certificate(&bad, 13).unwrap().reasons,
            vec![CertificateReason::CongruentBasePrime {
                ell: 13,
                residue: -1
            }]
        );
    }
}
