//! Command-line front end: parse, derive, prove, verify and corpus runs.
//!
//! Exit codes: 0 success, 1 refuted/failed checks, 2 parse errors,
//! 3 precondition errors (with a routing hint), 4 empty corpus selection.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use binetcalc_core::corpus::{load_corpus_dir, run_corpus};
use binetcalc_core::error::Error;
use binetcalc_core::expr::Constraint;
use binetcalc_core::family::FamilyEnv;
use binetcalc_core::parser::{parse_identity, parse_subscript};
use binetcalc_core::pipeline::{run_derive, ComponentKind, DeriveConfig, Verdict};
use binetcalc_core::printer::{print_identity, PrintOptions};
use binetcalc_core::rational::parse_rational;
use binetcalc_core::verify::Grid;

#[derive(Parser)]
#[command(name = "binetcalc", version, about = "Derive and prove second-order recurrence identities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ComponentArg {
    Real,
    Imag,
}

#[derive(Args)]
struct CommonArgs {
    /// Recurrence parameter p (rational)
    #[arg(long, default_value = "1")]
    p: String,
    /// Recurrence parameter q (rational)
    #[arg(long, default_value = "-1", allow_hyphen_values = true)]
    q: String,
    /// Constraint such as "m even" or "n >= 0" (repeatable)
    #[arg(long = "constraint")]
    constraints: Vec<String>,
    /// Index grid override, e.g. "k=-5..5,n=0..4"
    #[arg(long)]
    grid: Option<String>,
    /// Working precision in decimal digits for numeric checks
    #[arg(long, default_value_t = 30)]
    precision: u32,
    /// Output format
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an identity and print its normal form and free indices
    Parse {
        #[command(flatten)]
        common: CommonArgs,
        /// The identity text
        identity: String,
    },
    /// Differentiate an identity and extract a component
    Derive {
        #[command(flatten)]
        common: CommonArgs,
        /// Free index to differentiate with respect to
        #[arg(long)]
        wrt: String,
        /// Which component to take
        #[arg(long, value_enum)]
        component: ComponentArg,
        /// Fresh index for the sigma-power shift
        #[arg(long)]
        shift: Option<String>,
        /// Pivot exponent override for the shift (a subscript expression)
        #[arg(long)]
        pivot: Option<String>,
        /// Fresh arbitrary-seed family for Binet recombination
        #[arg(long)]
        combine: Option<String>,
        /// Run the rewrite simplifier on the output
        #[arg(long)]
        simplify: bool,
        identity: String,
    },
    /// Decide an identity by canonical forms
    Prove {
        #[command(flatten)]
        common: CommonArgs,
        identity: String,
    },
    /// Check an identity by exact instantiation over a grid
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        identity: String,
    },
    /// Run the identity corpus
    Corpus {
        /// Corpus directory (default: $BINETCALC_CORPUS or ./corpus)
        #[arg(long)]
        dir: Option<PathBuf>,
        /// Only run entries carrying this tag
        #[arg(long)]
        tag: Option<String>,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
    },
}

fn env_from(common: &CommonArgs) -> Result<FamilyEnv, Error> {
    let p = parse_rational(&common.p).ok_or_else(|| Error::Config(format!("bad p '{}'", common.p)))?;
    let q = parse_rational(&common.q).ok_or_else(|| Error::Config(format!("bad q '{}'", common.q)))?;
    FamilyEnv::with_params(p, q)
}

fn constraints_from(common: &CommonArgs) -> Result<Vec<Constraint>, Error> {
    common.constraints.iter().map(|c| Constraint::parse(c)).collect()
}

fn grid_from(common: &CommonArgs) -> Result<Option<Grid>, Error> {
    match &common.grid {
        Some(g) => Ok(Some(Grid::parse(g)?)),
        None => Ok(None),
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Parse { .. } | Error::UnknownFamily(_) | Error::DuplicateFamily(_) => 2,
        Error::NotCanonicalizable(_)
        | Error::NotAFreeIndex(_)
        | Error::NotDifferentiable(_)
        | Error::ArctanNotSupported
        | Error::IntegerOnlyForm(_)
        | Error::PositiveQ { .. }
        | Error::RealPartUnsupportedQ { .. }
        | Error::NoNewIdentity
        | Error::NameCollision(_)
        | Error::PrecisionTooLow(_)
        | Error::EmptyGrid => 3,
        Error::Config(msg) if msg.contains("no entries") => 4,
        _ => 1,
    }
}

fn hint_for(err: &Error) -> Option<&'static str> {
    match err {
        Error::NotCanonicalizable(_) => {
            Some("hint: this identity is outside the prover's fragment; use `verify`")
        }
        Error::NoNewIdentity => Some("hint: differentiation yields a trivial identity; no new identity"),
        Error::ArctanNotSupported => {
            Some("hint: rewrite the arctangent identity into a form valid for all real arguments first")
        }
        Error::IntegerOnlyForm(_) => {
            Some("hint: only the real component applies to identities whose function form holds at integers only")
        }
        _ => None,
    }
}

fn verdict_exit(v: &Verdict) -> u8 {
    if v.is_positive() {
        0
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(h) = hint_for(&e) {
                eprintln!("{h}");
            }
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Parse { common, identity } => {
            let env = env_from(&common)?;
            let id = parse_identity(&identity, &env)?.with_constraints(constraints_from(&common)?);
            let opts = PrintOptions { golden: env.is_golden() };
            match common.format {
                FormatArg::Text => {
                    println!("identity:     {}", print_identity(&id, opts)?);
                    println!("free indices: {}", id.free_indices.join(", "));
                    if !id.constraints.is_empty() {
                        let cs: Vec<String> = id.constraints.iter().map(|c| c.to_string()).collect();
                        println!("constraints:  {}", cs.join("; "));
                    }
                }
                FormatArg::Json => {
                    let doc = serde_json::json!({
                        "identity": print_identity(&id, opts)?,
                        "free_indices": id.free_indices,
                        "constraints": id.constraints.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                    });
                    println!("{}", serde_json::to_string_pretty(&doc).unwrap());
                }
            }
            Ok(0)
        }
        Command::Derive {
            common,
            wrt,
            component,
            shift,
            pivot,
            combine,
            simplify,
            identity,
        } => {
            let mut env = env_from(&common)?;
            let id = parse_identity(&identity, &env)?.with_constraints(constraints_from(&common)?);
            let pivot = match pivot {
                Some(p) => Some(parse_subscript(&p, &env)?),
                None => None,
            };
            let cfg = DeriveConfig {
                wrt,
                component: match component {
                    ComponentArg::Real => ComponentKind::Real,
                    ComponentArg::Imag => ComponentKind::Imag,
                },
                shift,
                pivot,
                combine,
                heavy_simplify: simplify,
            };
            let grid = grid_from(&common)?;
            let out = run_derive(&id, &cfg, &mut env, grid.as_ref(), common.precision)?;
            match common.format {
                FormatArg::Text => {
                    println!("input:  {}", out.input);
                    for step in &out.steps {
                        println!("  [{}]", step.step);
                        println!("    {}", step.form);
                    }
                    println!("output: {}", out.output);
                    println!("verdict: {}", out.verdict.describe());
                }
                FormatArg::Json => {
                    println!("{}", serde_json::to_string_pretty(&out).unwrap());
                }
            }
            Ok(verdict_exit(&out.verdict))
        }
        Command::Prove { common, identity } => {
            let env = env_from(&common)?;
            let id = parse_identity(&identity, &env)?.with_constraints(constraints_from(&common)?);
            let verdict = binetcalc_core::canonical::prove_identity(&id, &env)?;
            let v = match verdict {
                binetcalc_core::canonical::ProofVerdict::Proved { parity_cases, side_conditions } => {
                    Verdict::Proved { parity_cases, side_conditions }
                }
                binetcalc_core::canonical::ProofVerdict::Refuted { case, residue_terms } => {
                    Verdict::Refuted { case: format!("{case:?}"), residue_terms }
                }
            };
            match common.format {
                FormatArg::Text => println!("{}", v.describe()),
                FormatArg::Json => println!("{}", serde_json::to_string_pretty(&v).unwrap()),
            }
            Ok(verdict_exit(&v))
        }
        Command::Verify { common, identity } => {
            let env = env_from(&common)?;
            let id = parse_identity(&identity, &env)?.with_constraints(constraints_from(&common)?);
            let grid = grid_from(&common)?;
            let default_grid = Grid::default_for(&id);
            let g = grid.unwrap_or(default_grid);
            if id.lhs.has_arctan() || id.rhs.has_arctan() {
                let r = binetcalc_core::numeric::numeric_verify(&id, common.precision, &g, &env)?;
                match common.format {
                    FormatArg::Text => println!(
                        "numeric: {}/{} pass, {} fail, {} skipped ({} digits)",
                        r.pass, r.points, r.fail, r.skipped, r.digits
                    ),
                    FormatArg::Json => println!("{}", serde_json::to_string_pretty(&r).unwrap()),
                }
                return Ok(if r.all_pass() { 0 } else { 1 });
            }
            let r = binetcalc_core::verify::verify_instances(&id, &g, &env)?;
            match common.format {
                FormatArg::Text => {
                    println!(
                        "exact: {}/{} pass, {} fail, {} skipped",
                        r.pass, r.points, r.fail, r.skipped
                    );
                    if let Some(ce) = &r.first_counterexample {
                        println!(
                            "first counterexample at {:?}: lhs = {}, rhs = {}",
                            ce.assignment, ce.lhs, ce.rhs
                        );
                    }
                }
                FormatArg::Json => println!("{}", serde_json::to_string_pretty(&r).unwrap()),
            }
            Ok(if r.all_pass() { 0 } else { 1 })
        }
        Command::Corpus { dir, tag, format } => {
            let dir = dir
                .or_else(|| std::env::var_os("BINETCALC_CORPUS").map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("corpus"));
            let entries = load_corpus_dir(&dir)?;
            let report = run_corpus(&entries, tag.as_deref())?;
            match format {
                FormatArg::Text => {
                    for e in &report.entries {
                        println!(
                            "[{}] {} ({}, {})",
                            if e.passed() { "ok " } else { "FAIL" },
                            e.id,
                            e.mode,
                            e.source
                        );
                        if !e.passed() {
                            for d in &e.detail {
                                println!("       {d}");
                            }
                        }
                    }
                    println!(
                        "{} passed, {} failed, {} total",
                        report.pass,
                        report.fail,
                        report.entries.len()
                    );
                }
                FormatArg::Json => println!("{}", serde_json::to_string_pretty(&report).unwrap()),
            }
            Ok(if report.fail == 0 { 0 } else { 1 })
        }
    }
}
