use std::io::BufRead;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use antilm::decoder::Strategy;
use antilm::lm::{LogitServer, NGramLM, ServerConfig};
use antilm::objectives::{ObjectiveKind, SWEEP_GRID};
use antilm::runner::{
    compare_failures, run_experiment, run_sweep, select_group, ExperimentConfig, MetricsReport,
    RunnerError,
};

#[derive(Parser)]
#[command(name = "decode", version, about = "Contrastive decoding experiments for zero-shot translation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decode a corpus under every configured objective and write reports.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Decode a corpus once per weight of one objective.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Objective whose weight is swept; defaults to the config's sweep
        /// section, or its only contrastive objective.
        #[arg(long)]
        objective: Option<ObjectiveKind>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        grid: Option<Vec<f64>>,
    },
    /// Compare two reports sentence by sentence.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 5.0)]
        threshold: f64,
        #[arg(long)]
        objective_a: Option<ObjectiveKind>,
        #[arg(long)]
        objective_b: Option<ObjectiveKind>,
        #[arg(long)]
        strategy: Option<Strategy>,
    },
    /// Train a toy n-gram model on a text file with one sentence per line.
    TrainToy {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        order: usize,
        #[arg(long)]
        k: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve a toy model over the logit-server protocol.
    ServeToy {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
}

fn run(cli: Cli) -> Result<(), RunnerError> {
    match cli.command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = run_experiment(&cfg)?;
            out.write(&cfg.output)?;
            print!("{}", out.report.to_tsv());
            eprintln!(
                "wrote {} rows to {} in {:.2}s",
                out.report.rows.len(),
                cfg.output.display(),
                out.runtime.wall_time_secs
            );
        }
        Command::Sweep {
            config,
            objective,
            grid,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let kind = match objective.or(cfg.sweep.as_ref().map(|s| s.objective)) {
                Some(k) => k,
                None => {
                    let specs = cfg.objective_specs()?;
                    let contrastive: Vec<_> =
                        specs.iter().filter(|s| s.kind != ObjectiveKind::Base).collect();
                    match contrastive.as_slice() {
                        [only] => only.kind,
                        _ => {
                            return Err(RunnerError::Config(
                                "choose the objective to sweep with --objective".into(),
                            ))
                        }
                    }
                }
            };
            let grid = grid
                .or_else(|| cfg.sweep.as_ref().and_then(|s| s.grid.clone()))
                .unwrap_or_else(|| SWEEP_GRID.to_vec());
            let out = run_sweep(&cfg, kind, &grid)?;
            out.write(&cfg.output)?;
            print!("{}", out.table.to_tsv());
        }
        Command::Compare {
            a,
            b,
            threshold,
            objective_a,
            objective_b,
            strategy,
        } => {
            let (ra, rb) = (MetricsReport::load(&a)?, MetricsReport::load(&b)?);
            let rows_a = select_group(&ra, objective_a, strategy)?;
            let rows_b = select_group(&rb, objective_b, strategy)?;
            let cmp = compare_failures(&rows_a, &rows_b, threshold)?;
            println!("{}", serde_json::to_string_pretty(&cmp).expect("comparison serializes"));
        }
        Command::TrainToy {
            corpus,
            order,
            k,
            out,
        } => {
            let file = std::fs::File::open(&corpus).map_err(|e| {
                RunnerError::Config(format!("cannot read {}: {e}", corpus.display()))
            })?;
            let lines = std::io::BufReader::new(file)
                .lines()
                .collect::<Result<Vec<_>, _>>()?;
            let lines: Vec<&String> = lines.iter().filter(|l| !l.trim().is_empty()).collect();
            let lm = NGramLM::train(&lines, order, k)?;
            lm.save(&out)?;
            eprintln!(
                "trained order-{order} model with {} tokens on {} sentences",
                lm.vocab().len(),
                lines.len()
            );
        }
        Command::ServeToy { model, addr } => {
            let lm = NGramLM::load(&model)?;
            let server = LogitServer::bind(&addr, lm, ServerConfig::default())?;
            eprintln!("serving {} on {}", model.display(), server.url());
            server.wait();
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
