use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_rational::Ratio;
use serde_json::json;

use selmer_core::census::census_ratios;
use selmer_core::config::{
    parse_count, parse_list, OutputFormat, RunConfig, SourceConfig, SpecConfig,
};
use selmer_core::frobenius::CurveSpec;
use selmer_core::gl2_density::{
    omega_density_bruteforce_bounded, omega_density_closed_form, DEFAULT_MAX_P,
};
use selmer_core::levels::{enumerate_admissible, LevelVerdict};
use selmer_core::local_cohomology::{inertia_invariants, LocalRepData};
use selmer_core::omega::{sieve_omega, ResidualRepSpec, Verdict};
use selmer_core::report::run_report;
use selmer_core::stability::{selmer_dim_bounds, stability_certificate, wiles_ledger, LedgerInput};
use selmer_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "selmer",
    version,
    about = "Level-raising census and Selmer stability toolkit"
)]
struct Cli {
    /// Output format for tabular results.
    #[arg(long, global = true, value_parser = parse_format)]
    out: Option<OutputFormat>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SpecArgs {
    /// Spec file with p, level and curve or trace_table keys.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    p: Option<u64>,
    /// Serre conductor of the residual representation.
    #[arg(long = "base-level")]
    base_level: Option<u64>,
    /// Weierstrass coefficients a1,a2,a3,a4,a6.
    #[arg(long, allow_hyphen_values = true)]
    curve: Option<String>,
    #[arg(long)]
    trace_table: Option<PathBuf>,
    /// Assert that the residual representation is surjective.
    #[arg(long)]
    surjective: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Brute-force density of the Omega class in GL2(F_p).
    Density {
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_P)]
        max_p: u64,
    },
    /// Classify every prime up to a bound.
    Sieve {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, value_parser = parse_count_arg)]
        bound: u64,
    },
    /// Squarefree Omega-products up to Y and the ratio to Y (log Y)^(delta-1).
    Census {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, value_parser = parse_count_arg)]
        max: u64,
        /// Comma-separated checkpoints (default: powers of ten and max).
        #[arg(long)]
        checkpoints: Option<String>,
    },
    /// Admissibility of every multiple of the base level up to a bound.
    Levels {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, value_parser = parse_count_arg)]
        max: u64,
    },
    /// Inertia invariants and the beta bound for tame local data.
    Beta {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        ell: u64,
        #[arg(long, default_value_t = selmer_core::local_cohomology::DEFAULT_PRECISION)]
        prec: u32,
        /// Entries a,b,c,d of [[a,b],[c,d]].
        #[arg(long, allow_hyphen_values = true)]
        sigma: String,
        #[arg(long, allow_hyphen_values = true)]
        tau: String,
    },
    /// Stability certificate for a level.
    Certify {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        level: u64,
    },
    /// Wiles-formula ledger and Selmer dimension bounds.
    Ledger {
        #[arg(long)]
        input: PathBuf,
    },
    /// Full report from a run config.
    Report {
        #[arg(long)]
        config: PathBuf,
    },
}

fn parse_format(s: &str) -> std::result::Result<OutputFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_count_arg(s: &str) -> std::result::Result<u64, String> {
    parse_count(s).map_err(|e| e.to_string())
}

impl SpecArgs {
    fn build(&self) -> Result<ResidualRepSpec> {
        let config = match &self.spec {
            Some(path) => {
                if self.p.is_some()
                    || self.base_level.is_some()
                    || self.curve.is_some()
                    || self.trace_table.is_some()
                {
                    return Err(Error::Config(
                        "--spec cannot be combined with inline spec flags".into(),
                    ));
                }
                let mut c = SpecConfig::load(path)?;
                c.surjective |= self.surjective;
                c
            }
            None => {
                let p = self
                    .p
                    .ok_or_else(|| Error::Config("--p or --spec is required".into()))?;
                let level = self
                    .base_level
                    .ok_or_else(|| Error::Config("--base-level or --spec is required".into()))?;
                let source = match (&self.curve, &self.trace_table) {
                    (Some(c), None) => SourceConfig::Curve(CurveSpec::parse(c)?),
                    (None, Some(t)) => SourceConfig::Table(t.clone()),
                    _ => {
                        return Err(Error::Config(
                            "give exactly one of --curve or --trace-table".into(),
                        ))
                    }
                };
                SpecConfig {
                    p,
                    level,
                    source,
                    surjective: self.surjective,
                }
            }
        };
        config.build()
    }
}

fn parse_matrix(s: &str) -> Result<[[i64; 2]; 2]> {
    let v: Vec<i64> = s
        .split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad matrix entry '{x}'")))
        })
        .collect::<Result<_>>()?;
    match v[..] {
        [a, b, c, d] => Ok([[a, b], [c, d]]),
        _ => Err(Error::Config(format!("matrix '{s}' needs four entries"))),
    }
}

fn frac(r: Ratio<u64>) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn json_line(v: serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(&v).expect("json");
    s.push('\n');
    s
}

fn run(cli: Cli) -> Result<String> {
    let out = cli.out.unwrap_or(OutputFormat::Csv);
    match cli.command {
        Command::Density { p, max_p } => {
            let d = omega_density_bruteforce_bounded(p, max_p)?;
            let closed = omega_density_closed_form(p)?;
            Ok(match out {
                OutputFormat::Csv => format!(
                    "p,group_order,matching_count,exact_fraction,closed_form,matches\n{},{},{},{},{},{}\n",
                    d.p,
                    d.group_order,
                    d.matching_count,
                    frac(d.exact_fraction),
                    frac(closed),
                    d.matches()
                ),
                OutputFormat::Json => json_line(json!({
                    "p": d.p,
                    "group_order": d.group_order,
                    "matching_count": d.matching_count,
                    "exact_fraction": frac(d.exact_fraction),
                    "closed_form": frac(closed),
                    "matches": d.matches(),
                })),
            })
        }
        Command::Sieve { spec, bound } => {
            let spec = spec.build()?.with_traces_up_to(bound);
            let s = sieve_omega(&spec, bound);
            let rows: Vec<(u64, &str, String, String)> = s
                .classifications
                .iter()
                .map(|c| {
                    let (verdict, reason) = match c.verdict {
                        Verdict::InOmega => ("InOmega", String::new()),
                        Verdict::Excluded(r) => ("Excluded", r.to_string()),
                        Verdict::MissingTrace => ("MissingTrace", String::new()),
                    };
                    (
                        c.ell,
                        verdict,
                        reason,
                        c.trace.map(|t| t.to_string()).unwrap_or_default(),
                    )
                })
                .collect();
            Ok(match out {
                OutputFormat::Csv => {
                    let mut t = String::from("ell,verdict,reason,a_ell_mod_p\n");
                    for (ell, v, r, a) in rows {
                        t.push_str(&format!("{ell},{v},{r},{a}\n"));
                    }
                    t
                }
                OutputFormat::Json => json_line(json!({
                    "bound": bound,
                    "omega": s.omega,
                    "unknown": s.unknown,
                    "classifications": rows.iter().map(|(ell, v, r, a)| json!({
                        "ell": ell, "verdict": v, "reason": r, "a_ell_mod_p": a,
                    })).collect::<Vec<_>>(),
                })),
            })
        }
        Command::Census {
            spec,
            max,
            checkpoints,
        } => {
            let checkpoints = match checkpoints {
                Some(c) => parse_list(&c)?,
                None => {
                    let mut v: Vec<u64> =
                        std::iter::successors(Some(10u64), |&t| t.checked_mul(10))
                            .take_while(|&t| t < max)
                            .collect();
                    v.push(max);
                    v
                }
            };
            let top = checkpoints.iter().copied().max().unwrap_or(max).max(max);
            let spec = spec.build()?.with_traces_up_to(top);
            let s = sieve_omega(&spec, top);
            if !s.unknown.is_empty() {
                return Err(Error::InsufficientTraceData { primes: s.unknown });
            }
            let delta: Ratio<u64> = omega_density_closed_form(spec.p())?;
            let c = census_ratios(&s.omega, delta, &checkpoints)?;
            let ratio = |r: Option<f64>| r.map(|x| format!("{x:.6}")).unwrap_or_default();
            Ok(match out {
                OutputFormat::Csv => {
                    let mut t = String::from("Y,M_omega,ratio\n");
                    for pt in &c.checkpoints {
                        t.push_str(&format!("{},{},{}\n", pt.y, pt.count, ratio(pt.ratio)));
                    }
                    t
                }
                OutputFormat::Json => json_line(json!({
                    "delta": frac(delta),
                    "checkpoints": c.checkpoints.iter().map(|pt| json!({
                        "Y": pt.y, "M_omega": pt.count, "ratio": ratio(pt.ratio),
                    })).collect::<Vec<_>>(),
                    "spread": c.spread.map(|s| format!("{s:.6}")),
                    "stable": c.is_stable(),
                })),
            })
        }
        Command::Levels { spec, max } => {
            let spec = spec.build()?;
            let spec = spec.clone().with_traces_up_to(max / spec.level());
            let e = enumerate_admissible(&spec, max)?;
            let rows: Vec<(u64, String, String)> = e
                .verdicts
                .iter()
                .map(|(n, v)| match v {
                    LevelVerdict::Admissible(f) => {
                        (*n, "Admissible".to_string(), f.case_breakdown())
                    }
                    LevelVerdict::NotAdmissible(r) => {
                        (*n, format!("NotAdmissible({r})"), String::new())
                    }
                    LevelVerdict::Unknown { ell } => (*n, format!("Unknown({ell})"), String::new()),
                })
                .collect();
            Ok(match out {
                OutputFormat::Csv => {
                    let mut t = String::from("N,verdict,case_breakdown\n");
                    for (n, v, c) in rows {
                        t.push_str(&format!("{n},{v},{c}\n"));
                    }
                    t
                }
                OutputFormat::Json => json_line(json!({
                    "x": max,
                    "admissible_count": e.count(),
                    "levels": rows.iter().map(|(n, v, c)| json!({
                        "N": n, "verdict": v, "case_breakdown": c,
                    })).collect::<Vec<_>>(),
                })),
            })
        }
        Command::Beta {
            p,
            ell,
            prec,
            sigma,
            tau,
        } => {
            let data = LocalRepData::new(p, prec, ell, parse_matrix(&sigma)?, parse_matrix(&tau)?)?;
            let s = inertia_invariants(&data)?;
            let frob = s
                .frob_action
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|x| x.to_string())
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .collect::<Vec<_>>()
                .join(";");
            Ok(match out {
                OutputFormat::Csv => format!(
                    "divisors,quotient_dim,frob_action,beta_bound\n{} {},{},{},{}\n",
                    s.divisors[0], s.divisors[1], s.quotient_dim, frob, s.beta_bound
                ),
                OutputFormat::Json => json_line(json!({
                    "divisors": [s.divisors[0].to_string(), s.divisors[1].to_string()],
                    "quotient_dim": s.quotient_dim,
                    "frob_action": s.frob_action,
                    "beta_bound": s.beta_bound,
                })),
            })
        }
        Command::Certify { spec, level } => {
            let spec = spec.build()?;
            let v = stability_certificate(&spec, level)?;
            let reasons: Vec<String> = v.reasons.iter().map(|r| r.to_string()).collect();
            Ok(match out {
                OutputFormat::Csv => format!(
                    "level,certified,reasons\n{level},{},\"{}\"\n",
                    v.certified,
                    reasons.join("; ")
                ),
                OutputFormat::Json => json_line(json!({
                    "level": level, "certified": v.certified, "reasons": reasons,
                })),
            })
        }
        Command::Ledger { input } => {
            let text = fs::read_to_string(&input).map_err(|e| Error::Io {
                path: input.display().to_string(),
                message: e.to_string(),
            })?;
            let data = LedgerInput::parse(&text)?;
            let w = wiles_ledger(&data)?;
            let (lower, upper) = selmer_dim_bounds(&data)?;
            Ok(match out {
                OutputFormat::Csv => format!("wiles_ledger,lower,upper\n{w},{lower},{upper}\n"),
                OutputFormat::Json => json_line(json!({
                    "wiles_ledger": w, "lower": lower, "upper": upper,
                })),
            })
        }
        Command::Report { config } => {
            let mut cfg = RunConfig::load(&config).map_err(|e| e.in_stage("config"))?;
            if let Some(f) = cli.out {
                cfg.format = f;
            }
            let report = run_report(&cfg)?;
            let text = report.render(cfg.format);
            match &cfg.output {
                Some(path) => {
                    fs::write(path, &text).map_err(|e| Error::Io {
                        path: path.display().to_string(),
                        message: e.to_string(),
                    })?;
                    Ok(String::new())
                }
                None => Ok(text),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = match &cli.command {
        Command::Report { config } => cli
            .threads
            .or_else(|| RunConfig::load(config).ok().and_then(|c| c.threads)),
        _ => cli.threads,
    };
    if let Some(n) = threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
