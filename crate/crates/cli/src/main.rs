use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use gini_ellipse::gini::GiniConvention;
use gini_ellipse::SymMatrix;

use gini_ellipse_cli::commands::{self, Overrides, TailRateAnswer, Which};
use gini_ellipse_cli::config::ExperimentConfig;
use gini_ellipse_cli::error::{CliError, CliResult};
use gini_ellipse_cli::output::{self, open_output, sidecar, write_json, write_json_file};
use gini_ellipse_cli::record::{RunStatus, Timing};
use gini_ellipse_cli::reproduce::{self, render_table};

/// Gini dispersion of elliptical vectors: sampling, ordering checks and tail rates.
///
/// Set GINI_ELLIPSE_THREADS to pin the worker count. Results do not depend on it.
#[derive(Parser)]
#[command(name = "gini-ellipse", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config sample_count.
    #[arg(long)]
    samples: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> CliResult<ExperimentConfig> {
        let path = self
            .config
            .as_deref()
            .ok_or_else(|| CliError::Input("--config is required".into()))?;
        let cfg = ExperimentConfig::load(path)?;
        Ok(Overrides {
            seed: self.seed,
            samples: self.samples,
        }
        .apply(cfg))
    }

    /// `--out`, falling back to the config's output_path.
    fn out_path(&self, cfg: Option<&ExperimentConfig>) -> Option<PathBuf> {
        self.out
            .clone()
            .or_else(|| cfg.and_then(|c| c.output_path.clone()))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Draw from model_x or model_y and write a CSV with a .meta.json sidecar.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "x")]
        model: ModelArg,
    },
    /// Gini of explicit values, of CSV rows, or of draws from model_x.
    Gini {
        #[command(flatten)]
        common: Common,
        /// One vector, e.g. `gini 1 2 3`.
        #[arg(allow_negative_numbers = true)]
        values: Vec<f64>,
        /// CSV with a header line and one vector per row.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Divide by n².
        #[arg(long)]
        normalized: bool,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Dispersion conditions between the two covariances and the orderings they predict.
    Check {
        #[command(flatten)]
        common: Common,
    },
    /// Run every test listed in the config and write the run record.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Large-deviation rate of the Gini under a centered normal law.
    TailRate {
        #[command(flatten)]
        common: Common,
        /// Σ as a JSON array of rows, or a path to a file holding one.
        /// Without it, model_x from --config is used.
        #[arg(long)]
        sigma: Option<String>,
        /// Past n = 8, search for a lower bound with this many restarts.
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// Monte Carlo check that the Gini is the maximum over coefficient permutations.
    TailIdentity {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Built-in reproduction suite; prints a pass/fail table.
    Reproduce {
        #[arg(long, default_value_t = reproduce::DEFAULT_SEED)]
        seed: u64,
        /// Print the report as JSON instead of a table.
        #[arg(long)]
        json: bool,
        /// JSON report file, in addition to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    X,
    Y,
}

fn unix_seconds() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn parse_sigma(arg: &str) -> CliResult<SymMatrix> {
    let text = if arg.trim_start().starts_with('[') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg)
            .map_err(|e| CliError::Input(format!("cannot read {arg}: {e}")))?
    };
    let rows: Vec<Vec<f64>> =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("bad sigma: {e}")))?;
    Ok(SymMatrix::from_rows(&rows)?)
}

fn init_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("GINI_ELLIPSE_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Input(format!(
            "GINI_ELLIPSE_THREADS must be a positive integer, got {v:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Input(e.to_string()))
}

fn run(cli: Cli) -> CliResult<()> {
    init_threads()?;
    match cli.command {
        Command::Sample { common, model } => {
            let cfg = common.load()?;
            let which = match model {
                ModelArg::X => Which::X,
                ModelArg::Y => Which::Y,
            };
            let (samples, meta) = commands::cmd_sample(&cfg, which)?;
            let out = common.out_path(Some(&cfg));
            output::write_samples_csv(&samples, open_output(out.as_deref())?)?;
            if let Some(p) = out {
                write_json_file(&meta, &sidecar(&p, ".meta.json"))?;
            }
        }
        Command::Gini {
            common,
            values,
            input,
            normalized,
            format,
        } => {
            let result = if let Some(path) = &input {
                let conv = GiniConvention { normalized };
                commands::gini_summary(
                    commands::cmd_gini(&output::read_vectors_csv(path)?, conv)?,
                    conv,
                )
            } else if !values.is_empty() {
                let conv = GiniConvention { normalized };
                commands::gini_summary(
                    commands::cmd_gini(std::slice::from_ref(&values), conv)?,
                    conv,
                )
            } else {
                let mut cfg = common.load()?;
                if normalized {
                    cfg.convention = GiniConvention { normalized };
                }
                let conv = cfg.convention;
                commands::gini_summary(commands::cmd_gini_sampled(&cfg)?, conv)
            };
            let w = open_output(common.out.as_deref())?;
            match format {
                Format::Json => write_json(&result, w)?,
                Format::Csv => output::write_values_csv("gini", &result.values, w)?,
            }
        }
        Command::Check { common } => {
            let cfg = common.load()?;
            let rep = commands::cmd_check(&cfg)?;
            write_json(&rep, open_output(common.out.as_deref())?)?;
        }
        Command::Run { common } => {
            let cfg = common.load()?;
            let started_at = unix_seconds();
            let clock = Instant::now();
            let rec = commands::cmd_run(&cfg)?;
            let out = common.out_path(Some(&cfg));
            write_json(&rec, open_output(out.as_deref())?)?;
            if let Some(p) = &out {
                let timing = Timing {
                    started_at,
                    finished_at: unix_seconds(),
                    wall_clock_seconds: clock.elapsed().as_secs_f64(),
                };
                write_json_file(&timing, &sidecar(p, ".timing.json"))?;
                write_survival_tables(&rec, p)?;
            }
            for w in &rec.warnings {
                eprintln!("warning: {w}");
            }
            if rec.status == RunStatus::Violated {
                return Err(CliError::Violated(
                    "at least one predicted ordering was rejected".into(),
                ));
            }
        }
        Command::TailRate {
            common,
            sigma,
            restarts,
        } => {
            let w = open_output(common.out.as_deref())?;
            match sigma {
                Some(s) => match commands::cmd_tail_rate(
                    &parse_sigma(&s)?,
                    restarts,
                    common.seed.unwrap_or(0),
                )? {
                    TailRateAnswer::Exact(r) => write_json(&r, w)?,
                    TailRateAnswer::Bound(b) => write_json(&b, w)?,
                },
                None => {
                    let cfg = common.load()?;
                    write_json(&commands::tail_rate_for_model(&cfg.model_x)?, w)?;
                }
            }
        }
        Command::TailIdentity { common, format } => {
            let cfg = common.load()?;
            let rep = commands::cmd_tail_identity(&cfg)?;
            let w = open_output(common.out_path(Some(&cfg)).as_deref())?;
            match format {
                Format::Json => write_json(&rep, w)?,
                Format::Csv => output::write_identity_csv(&rep, w)?,
            }
            if !rep.pathwise_ok {
                return Err(CliError::Violated(format!(
                    "pathwise identity failed, max relative error {:e}",
                    rep.max_pathwise_error
                )));
            }
        }
        Command::Reproduce { seed, json, out } => {
            let rep = reproduce::cmd_reproduce(seed)?;
            if json {
                write_json(&rep, open_output(None)?)?;
            } else {
                print!("{}", render_table(&rep));
            }
            if let Some(p) = out {
                write_json_file(&rep, &p)?;
            }
            if !rep.all_pass {
                return Err(CliError::Violated("reproduction suite failed".into()));
            }
        }
    }
    Ok(())
}

/// One `<out>.survival_<k>.csv` per stochastic-order test in the record.
fn write_survival_tables(rec: &gini_ellipse_cli::record::RunRecord, out: &Path) -> CliResult<()> {
    let Some(ordering) = &rec.ordering else {
        return Ok(());
    };
    for (k, t) in ordering.tests.iter().enumerate() {
        if let Some(rows) = t.survival_rows() {
            let w = open_output(Some(&sidecar(out, &format!(".survival_{k}.csv"))))?;
            output::write_survival_csv(&rows, w)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
