//! `incore` — static in-core performance analysis of assembly loop
//! kernels over declarative machine models.
//!
//! Exit codes: 0 success, 1 input/usage error, 2 internal invariant
//! failure.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};

use incore::asm_frontend::{self, Dialect};
use incore::dep_graph;
use incore::machine_model::{load_model, MachineModel};
use incore::predictor;
use incore::wa_traffic::{self, WaMode};
use incore_cli::{harness, report};

#[derive(Parser)]
#[command(
    name = "incore",
    version,
    about = "Lower-bound cycles/iteration prediction for assembly loop kernels"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Analyze one marked loop kernel.
    Analyze {
        /// Machine-model file (.mm).
        #[arg(long)]
        arch: PathBuf,
        /// Assembly listing with LOOP-BEGIN/LOOP-END markers.
        #[arg(long)]
        file: PathBuf,
        /// Override the dialect (defaults to the model's ISA).
        #[arg(long)]
        dialect: Option<String>,
        /// Active cores for the time-per-iteration conversion.
        #[arg(long)]
        cores: Option<u32>,
        /// Output format: text | tsv.
        #[arg(long, default_value = "text")]
        format: String,
        /// Dump the canonical IR, one line per instruction.
        #[arg(long)]
        dump_ir: bool,
        /// Dump dependency edges as `i -> j : lat` lines.
        #[arg(long)]
        dump_deps: bool,
    },
    /// Run a measurement file against a fixture corpus.
    Validate {
        #[arg(long)]
        arch: PathBuf,
        /// Directory holding `<kernel_id>.s` fixtures.
        #[arg(long)]
        corpus: PathBuf,
        /// Measurement TSV (kernel_id, compiler, flags, measured_cy_per_iter).
        #[arg(long)]
        measurements: PathBuf,
    },
    /// Inspect or check a machine model.
    Model {
        #[command(subcommand)]
        cmd: ModelCmd,
    },
    /// Write-allocate traffic tables.
    Wa {
        #[command(subcommand)]
        cmd: WaCmd,
    },
}

#[derive(Subcommand)]
enum ModelCmd {
    /// Print a model summary.
    Show {
        #[arg(long)]
        arch: PathBuf,
    },
    /// Re-derive throughput/latency of known instructions and report
    /// mismatches against the embedded measured table.
    Check {
        #[arg(long)]
        arch: PathBuf,
    },
}

#[derive(Subcommand)]
enum WaCmd {
    /// Print the traffic ratio per core count.
    Ratios {
        #[arg(long)]
        arch: PathBuf,
        /// full-wa | auto-evasion | speci2m | nt-perfect | nt-residual:<r> | all
        #[arg(long, default_value = "all")]
        mode: String,
    },
    /// Compare measured ratio curves (TSV) against a mode.
    Compare {
        #[arg(long)]
        arch: PathBuf,
        #[arg(long)]
        mode: String,
        #[arg(long)]
        tsv: PathBuf,
    },
}

/// Input errors exit 1; internal invariant failures exit 2.
enum CliError {
    Input(anyhow::Error),
    Internal(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Input(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(CliError::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &PathBuf) -> Result<MachineModel, CliError> {
    load_model(path)
        .with_context(|| format!("loading model {}", path.display()))
        .map_err(CliError::Input)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Analyze {
            arch,
            file,
            dialect,
            cores,
            format,
            dump_ir,
            dump_deps,
        } => {
            let model = load(&arch)?;
            let dialect = match dialect {
                Some(d) => Dialect::from_token(&d)
                    .ok_or_else(|| anyhow!("unknown dialect `{d}` (aarch64 | x86-att)"))?,
                None => model.isa,
            };
            let text = std::fs::read_to_string(&file)
                .with_context(|| format!("reading {}", file.display()))?;
            let ir = asm_frontend::parse_listing(&text, dialect)
                .map_err(|e| anyhow!("{}: {e}", file.display()))?;
            let kernel_id = file
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "kernel".into());

            if dump_ir {
                print!("{}", asm_frontend::dump_ir(&ir));
            }
            let report = predictor::predict(&ir, &model).map_err(classify)?;
            if dump_deps {
                let graph = dep_graph::build_graph(&ir, &model)
                    .map_err(|e| CliError::Input(anyhow!("{e}")))?;
                print!("{}", dep_graph::dump_deps(&graph));
            }
            match format.as_str() {
                "text" => {
                    let work = predictor::work_per_iteration(&ir, &model)
                        .map_err(|e| CliError::Input(anyhow!("{e}")))?;
                    print!(
                        "{}",
                        report::render_text(&kernel_id, &ir, &report, &model, cores, work)
                    );
                }
                "tsv" => {
                    print!("{}", report::render_tsv_header());
                    print!("{}", report::render_tsv_row(&kernel_id, &report));
                }
                other => return Err(anyhow!("unknown format `{other}` (text | tsv)").into()),
            }
            Ok(())
        }
        Cmd::Validate {
            arch,
            corpus,
            measurements,
        } => {
            let model = load(&arch)?;
            let text = std::fs::read_to_string(&measurements)
                .with_context(|| format!("reading {}", measurements.display()))?;
            let ms = harness::parse_measurements(&text).map_err(|e| anyhow!("{e}"))?;
            let summary = harness::run_corpus(&corpus, &ms, &model);
            print!("{}", summary.results_tsv());
            println!();
            print!("{}", summary.summary_text());
            println!();
            print!("{}", summary.buckets.to_tsv());
            for (id, msg) in &summary.failures {
                eprintln!("warning: {id}: {msg}");
            }
            Ok(())
        }
        Cmd::Model {
            cmd: ModelCmd::Show { arch },
        } => {
            let model = load(&arch)?;
            print!("{}", report::render_model_show(&model));
            Ok(())
        }
        Cmd::Model {
            cmd: ModelCmd::Check { arch },
        } => {
            let model = load(&arch)?;
            let known = incore::machine_model::expectations_for(&model.name).len();
            let diags = model.validate_against_expectations();
            if diags.is_empty() {
                if known == 0 {
                    println!(
                        "ok: {} instruction forms, no embedded measured table for `{}`",
                        model.instructions.len(),
                        model.name
                    );
                } else {
                    println!(
                        "ok: {} instruction forms, {known} measured data points reproduced",
                        model.instructions.len()
                    );
                }
                Ok(())
            } else {
                for d in &diags {
                    println!("mismatch: {d}");
                }
                Err(anyhow!("{} mismatches against the measured table", diags.len()).into())
            }
        }
        Cmd::Wa {
            cmd: WaCmd::Ratios { arch, mode },
        } => {
            let model = load(&arch)?;
            let modes: Vec<(String, WaMode)> = if mode == "all" {
                [
                    "full-wa",
                    "auto-evasion",
                    "speci2m",
                    "nt-perfect",
                    "nt-residual",
                ]
                .iter()
                .map(|t| (t.to_string(), WaMode::from_token(t).expect("known token")))
                .collect()
            } else {
                let m =
                    WaMode::from_token(&mode).ok_or_else(|| anyhow!("unknown WA mode `{mode}`"))?;
                vec![(mode, m)]
            };
            print!("{}", report::render_wa_table(&model, &modes));
            Ok(())
        }
        Cmd::Wa {
            cmd: WaCmd::Compare { arch, mode, tsv },
        } => {
            let model = load(&arch)?;
            let m = WaMode::from_token(&mode).ok_or_else(|| anyhow!("unknown WA mode `{mode}`"))?;
            let text = std::fs::read_to_string(&tsv)
                .with_context(|| format!("reading {}", tsv.display()))?;
            let curves = wa_traffic::ingest_ratio_curves(&text).map_err(|e| anyhow!("{e}"))?;
            println!("curve\tmax_abs_deviation");
            for curve in &curves {
                let dev = wa_traffic::compare_curve(curve, &m, &model);
                println!("{}\t{}", curve.label, incore_cli::fmt_sig(dev));
            }
            Ok(())
        }
    }
}

/// Frontend/model problems are input errors; a cyclic intra-iteration
/// graph means the frontend itself misbehaved.
fn classify(e: predictor::PredictError) -> CliError {
    match e {
        predictor::PredictError::Dep(_) => CliError::Internal(anyhow!("{e}")),
        other => CliError::Input(anyhow!("{other}")),
    }
}
