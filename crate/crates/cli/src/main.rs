//! Command-line front end: classification, certificates, flows, duals,
//! surveys, and the bundled reference corpus.
//!
//! Exit codes for `classify`: 0 = Einstein nilradical, 1 = not an Einstein
//! nilradical, 2 = undecided. Input problems exit with 64 (usage), 65
//! (unreadable or invalid algebra data), 66 (basis not supported by the
//! diagonal pre-Einstein route).

macro_rules! outln {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}
pub(crate) use outln;

mod reports;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use nilsol_core::algebra::LieAlgebra;
use nilsol_core::classify::{classify, ClassifyError, ClassifyOptions, Verdict};
use nilsol_core::corpus;
use nilsol_core::flow::{run_flow, FlowOptions, FlowOutcome};
use nilsol_core::mat::Mat;
use nilsol_core::pre_einstein::{ad_phi_spectrum, pre_einstein_diagonal, PreEinsteinOutcome};
use nilsol_core::ricci::{nilsoliton_verify, InnerProduct};
use nilsol_core::two_step;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;
const EXIT_UNSUPPORTED: u8 = 66;

#[derive(Parser)]
#[command(
    name = "nilsol",
    about = "Einstein nilradical decision procedures and nilsoliton metrics",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the pre-Einstein derivation and the necessary conditions.
    PreEinstein {
        /// Algebra file (relation codes or JSON).
        algebra: PathBuf,
    },
    /// Nice-basis check and the exact positivity certificate.
    NiceCheck { algebra: PathBuf },
    /// Verify that a metric is nilsoliton for the algebra.
    NilsolitonVerify {
        algebra: PathBuf,
        /// Metric file: {"gram": [[...]]} or {"orthonormal_basis": [[...]]}.
        #[arg(long)]
        metric: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Run the gradient flow on the reductive group orbit.
    Flow(FlowArgs),
    /// Full classification pipeline with certificates.
    Classify {
        algebra: PathBuf,
        #[arg(long, default_value_t = 50_000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        json: bool,
    },
    /// Two-step algebra tools: sampling, duality, surveys.
    #[command(subcommand)]
    TwoStep(TwoStepCommand),
    /// The bundled reference corpus.
    #[command(subcommand)]
    Corpus(CorpusCommand),
}

#[derive(Args)]
struct FlowArgs {
    algebra: PathBuf,
    #[arg(long, default_value_t = 50_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long)]
    json: bool,
    /// Stream (iteration, f, residual) rows to a CSV file.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Skip the necessary-condition gate (diagnostic runs).
    #[arg(long)]
    no_gate: bool,
}

#[derive(Subcommand)]
enum TwoStepCommand {
    /// Sample a random tuple of skew-symmetric matrices.
    Sample {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        q: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Dual tuple (orthogonal complement under -Tr(K K')).
    Dual {
        /// Tuple file {"q":…,"p":…,"matrices":[…]} or a two-step algebra
        /// file with generators first.
        input: PathBuf,
    },
    /// Survey N random samples with the SL(q)×SL(p) flow.
    Survey {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        q: usize,
        #[arg(short, long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20_000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Write per-run records (seed, verdict, iterations, f_final).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// List the bundled algebras.
    List {
        #[arg(long)]
        json: bool,
    },
    /// Classify every corpus entry and verify printed nilsoliton bases.
    Run {
        #[arg(long)]
        json: bool,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not usage errors.
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_DATA)
        }
    }
}

fn load_algebra(path: &PathBuf) -> Result<LieAlgebra> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    LieAlgebra::parse(&text).map_err(|e| anyhow!("parsing {}: {e}", path.display()))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::PreEinstein { algebra } => {
            let l = load_algebra(&algebra)?;
            match pre_einstein_diagonal(&l) {
                PreEinsteinOutcome::Supported(r) => {
                    let spectrum = ad_phi_spectrum(&l, &r.diag);
                    outln!("{}", reports::pre_einstein_json(&r, &spectrum));
                    Ok(ExitCode::SUCCESS)
                }
                PreEinsteinOutcome::UnsupportedBasis { failing_derivation } => {
                    eprintln!(
                        "error: {}",
                        ClassifyError::UnsupportedBasis { failing_derivation }
                    );
                    Ok(ExitCode::from(EXIT_UNSUPPORTED))
                }
            }
        }
        Command::NiceCheck { algebra } => {
            let l = load_algebra(&algebra)?;
            outln!("{}", reports::nice_check_json(&l)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::NilsolitonVerify {
            algebra,
            metric,
            tol,
        } => {
            let l = load_algebra(&algebra)?;
            let ip = reports::load_metric(&metric, l.dim())?;
            let phi = match pre_einstein_diagonal(&l) {
                PreEinsteinOutcome::Supported(r) => r,
                PreEinsteinOutcome::UnsupportedBasis { failing_derivation } => {
                    eprintln!(
                        "error: {}",
                        ClassifyError::UnsupportedBasis { failing_derivation }
                    );
                    return Ok(ExitCode::from(EXIT_UNSUPPORTED));
                }
            };
            let report = nilsoliton_verify(&l, &ip, &phi.diag, tol)
                .map_err(|e| anyhow!("verification failed: {e}"))?;
            outln!("{}", reports::nilsoliton_json(&report));
            Ok(if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Flow(args) => {
            let l = load_algebra(&args.algebra)?;
            let phi = match pre_einstein_diagonal(&l) {
                PreEinsteinOutcome::Supported(r) => r,
                PreEinsteinOutcome::UnsupportedBasis { failing_derivation } => {
                    eprintln!(
                        "error: {}",
                        ClassifyError::UnsupportedBasis { failing_derivation }
                    );
                    return Ok(ExitCode::from(EXIT_UNSUPPORTED));
                }
            };
            let opts = FlowOptions {
                max_iter: args.max_iter,
                tol_residual: args.tol,
                collect_trace: args.trace.is_some(),
                ..Default::default()
            };
            let report = run_flow(&l, &phi.diag, &opts, !args.no_gate);
            if let Some(path) = &args.trace {
                let mut csv = String::from("iteration,f,residual\n");
                for (i, f, r) in &report.trace {
                    csv.push_str(&format!("{i},{f},{r}\n"));
                }
                std::fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
            }
            if args.json {
                outln!("{}", reports::flow_json(&report.outcome));
            } else {
                reports::flow_text(&report.outcome);
            }
            Ok(match report.outcome {
                FlowOutcome::Converged { .. } => ExitCode::SUCCESS,
                FlowOutcome::GateRejected { .. } => ExitCode::from(1),
                _ => ExitCode::from(2),
            })
        }
        Command::Classify {
            algebra,
            max_iter,
            tol,
            json,
        } => {
            let l = load_algebra(&algebra)?;
            let opts = ClassifyOptions {
                flow: FlowOptions {
                    max_iter,
                    tol_residual: tol,
                    ..Default::default()
                },
                ..Default::default()
            };
            let report = match classify(&l, &opts) {
                Ok(r) => r,
                Err(ClassifyError::UnsupportedBasis { failing_derivation }) => {
                    eprintln!(
                        "error: {}",
                        ClassifyError::UnsupportedBasis { failing_derivation }
                    );
                    return Ok(ExitCode::from(EXIT_UNSUPPORTED));
                }
                Err(e) => return Err(anyhow!(e)),
            };
            if json {
                outln!("{}", reports::classification_json(&report));
            } else {
                reports::classification_text(&report);
            }
            Ok(match report.verdict {
                Verdict::EinsteinNilradical { .. } => ExitCode::SUCCESS,
                Verdict::NotEinsteinNilradical { .. } => ExitCode::from(1),
                Verdict::Undecided { .. } => ExitCode::from(2),
            })
        }
        Command::TwoStep(cmd) => run_two_step(cmd),
        Command::Corpus(cmd) => run_corpus(cmd),
    }
}

fn run_two_step(cmd: TwoStepCommand) -> Result<ExitCode> {
    match cmd {
        TwoStepCommand::Sample { p, q, seed } => {
            let tuple =
                two_step::sample_random(p, q, seed).map_err(|e| anyhow!("sampling failed: {e}"))?;
            outln!("{}", reports::tuple_json(&tuple));
            Ok(ExitCode::SUCCESS)
        }
        TwoStepCommand::Dual { input } => {
            let text = std::fs::read_to_string(&input)
                .with_context(|| format!("reading {}", input.display()))?;
            let tuple = reports::load_tuple(&text)?;
            let dual = two_step::dual(&tuple).map_err(|e| anyhow!("dual failed: {e}"))?;
            outln!("{}", reports::tuple_json(&dual));
            Ok(ExitCode::SUCCESS)
        }
        TwoStepCommand::Survey {
            p,
            q,
            samples,
            seed,
            max_iter,
            tol,
            csv,
        } => {
            let opts = FlowOptions {
                max_iter,
                tol_residual: tol,
                ..Default::default()
            };
            let stats = two_step::survey(p, q, samples, seed, &opts);
            if let Some(path) = &csv {
                let mut body = String::from("seed,verdict,iterations,f_final\n");
                for r in &stats.records {
                    body.push_str(&format!(
                        "{},{:?},{},{}\n",
                        r.seed, r.verdict, r.iterations, r.f_final
                    ));
                }
                std::fs::write(path, body)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            outln!("{}", reports::survey_json(&stats));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run_corpus(cmd: CorpusCommand) -> Result<ExitCode> {
    match cmd {
        CorpusCommand::List { json } => {
            let entries = corpus::corpus();
            if json {
                outln!("{}", reports::corpus_list_json(&entries));
            } else {
                for e in &entries {
                    outln!("{:10} dim {:2}  {}", e.id, e.algebra.dim(), e.summary);
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        CorpusCommand::Run { json, tol } => {
            let entries = corpus::corpus();
            let mut rows = Vec::new();
            let mut all_verdicts_ok = true;
            for e in &entries {
                let report = classify(&e.algebra, &ClassifyOptions::default())
                    .map_err(|err| anyhow!("classify {}: {err}", e.id))?;
                let verdict_is_einstein =
                    matches!(report.verdict, Verdict::EinsteinNilradical { .. });
                let verdict_ok = e
                    .expected_einstein
                    .map_or(true, |expected| expected == verdict_is_einstein);
                all_verdicts_ok &= verdict_ok;
                let frame_check = e
                    .soliton_frame
                    .as_ref()
                    .map(|frame| check_frame(&e.algebra, frame, tol));
                rows.push(reports::CorpusRunRow {
                    id: e.id,
                    verdict: reports::verdict_name(&report.verdict).to_string(),
                    verdict_ok,
                    frame_residual: frame_check
                        .as_ref()
                        .and_then(|r| r.as_ref().ok())
                        .map(|r| r.0),
                    frame_pass: frame_check
                        .as_ref()
                        .map(|r| r.as_ref().map(|x| x.1).unwrap_or(false)),
                });
            }
            if json {
                outln!("{}", reports::corpus_run_json(&rows));
            } else {
                for r in &rows {
                    let frame = match (r.frame_pass, r.frame_residual) {
                        (Some(pass), Some(res)) => {
                            format!(
                                "frame: {} (residual {res:.2e})",
                                if pass { "ok" } else { "FAIL" }
                            )
                        }
                        (Some(pass), None) => {
                            format!("frame: {}", if pass { "ok" } else { "FAIL" })
                        }
                        _ => String::from("frame: -"),
                    };
                    outln!(
                        "{:10} verdict {:24} {}  {}",
                        r.id,
                        r.verdict,
                        if r.verdict_ok { "ok " } else { "BAD" },
                        frame
                    );
                }
            }
            Ok(if all_verdicts_ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

/// Verify a printed orthonormal frame: returns (relative residual, pass).
fn check_frame(l: &LieAlgebra, frame: &Mat, tol: f64) -> Result<(f64, bool)> {
    let ip =
        InnerProduct::from_orthonormal_frame(frame).ok_or_else(|| anyhow!("frame is singular"))?;
    if l.is_abelian() {
        // Flat case: ric vanishes and every metric is nilsoliton.
        return Ok((0.0, ip.is_positive_definite()));
    }
    let phi = match pre_einstein_diagonal(l) {
        PreEinsteinOutcome::Supported(r) => r,
        PreEinsteinOutcome::UnsupportedBasis { .. } => return Err(anyhow!("unsupported basis")),
    };
    let report = nilsoliton_verify(l, &ip, &phi.diag, tol).map_err(|e| anyhow!("verify: {e}"))?;
    Ok((report.residual_rel, report.pass))
}
