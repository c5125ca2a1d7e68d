use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use netgap::model::RewardWeights;
use netgap::topology::load_topology;
use netgap::workflow::{self, Overrides, RunArgs, RunInputs, EXIT_INVALID_INPUT, EXIT_NOT_FEASIBLE, EXIT_OK};

/// Grammar-driven network topology synthesis.
#[derive(Parser)]
#[command(name = "netgap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Search epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Reward weights as latency,cost,resilience.
    #[arg(long, value_parser = parse_weights)]
    weights: Option<RewardWeights>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            epochs: self.epochs,
            weights: self.weights,
        }
    }
}

#[derive(Args)]
struct Inputs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    catalog: PathBuf,
    #[arg(long)]
    grammar: PathBuf,
    /// Topology to start the search from instead of the grammar's start graph.
    #[arg(long)]
    initial_topology: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Allocation, topology search and mapping; writes all artifacts to --out.
    Run {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Allocation only.
    Allocate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        catalog: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Output allocation file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Scores a topology; searches a mapping unless one is given.
    Evaluate {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        allocation: PathBuf,
        #[arg(long)]
        mapping: Option<PathBuf>,
        #[arg(long)]
        catalog: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Output report file; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Merges comparison tables, labelling rows by their parent directory.
    Compare {
        #[arg(long)]
        out: PathBuf,
        #[arg(required = true)]
        tables: Vec<PathBuf>,
    },
    /// Writes a synthetic application model.
    GenUsecase {
        #[arg(long, default_value_t = 99)]
        processes: usize,
        #[arg(long, default_value_t = 660)]
        messages: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Use the three-part scaled-up structure.
        #[arg(long)]
        scaled: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Independent runs with consecutive seeds starting at --seed.
    Batch {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        runs: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_weights(text: &str) -> Result<RewardWeights, String> {
    workflow::parse_weights(text).map_err(|e| e.to_string())
}

fn feasible_code(feasible: bool) -> i32 {
    if feasible {
        EXIT_OK
    } else {
        EXIT_NOT_FEASIBLE
    }
}

fn table_label(path: &Path) -> String {
    path.parent()
        .and_then(|p| p.file_name())
        .or_else(|| path.file_stem())
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn execute(command: Command) -> netgap::Result<i32> {
    match command {
        Command::Run { inputs, common, out } => {
            let outcome = workflow::cmd_run(&RunArgs {
                model: &inputs.model,
                catalog: &inputs.catalog,
                grammar: &inputs.grammar,
                config: common.config.as_deref(),
                initial_topology: inputs.initial_topology.as_deref(),
                out: &out,
                overrides: common.overrides(),
            })?;
            match outcome.search.feasible_best() {
                Some(best) => println!(
                    "feasible topology: reward {:.4}, cost {:.1}u, {} candidates",
                    best.row.reward,
                    best.row.cost,
                    outcome.search.candidates.len()
                ),
                None => eprintln!("no feasible topology found"),
            }
            Ok(outcome.exit_code())
        }
        Command::Allocate {
            model,
            catalog,
            common,
            out,
        } => {
            let solution = workflow::cmd_allocate(&model, &catalog, common.config.as_deref(), &common.overrides(), &out)?;
            println!("{} modules, cost {}u", solution.module_count(), solution.cost);
            Ok(feasible_code(solution.feasible))
        }
        Command::Evaluate {
            topology,
            allocation,
            mapping,
            catalog,
            common,
            out,
        } => {
            let result = workflow::cmd_evaluate(
                &topology,
                &allocation,
                mapping.as_deref(),
                &catalog,
                common.config.as_deref(),
                &common.overrides(),
            )?;
            let text = serde_json::to_string_pretty(&result).expect("report serializes");
            match out {
                Some(path) => std::fs::write(&path, text + "\n").map_err(|e| netgap::Error::Io { path, source: e })?,
                None => println!("{text}"),
            }
            Ok(feasible_code(result.report.gates.all_pass()))
        }
        Command::Compare { out, tables } => {
            let labelled: Vec<(String, PathBuf)> = tables.into_iter().map(|t| (table_label(&t), t)).collect();
            let rows = workflow::cmd_compare(&labelled, &out)?;
            println!("{rows} rows");
            Ok(EXIT_OK)
        }
        Command::GenUsecase {
            processes,
            messages,
            seed,
            scaled,
            out,
        } => {
            let model = workflow::cmd_gen_usecase(processes, messages, seed, scaled, &out)?;
            println!("{} processes, {} messages", model.processes().len(), model.messages().len());
            Ok(EXIT_OK)
        }
        Command::Batch {
            inputs,
            common,
            runs,
            out,
        } => {
            let loaded = RunInputs::load(
                &inputs.model,
                &inputs.catalog,
                &inputs.grammar,
                common.config.as_deref(),
                &common.overrides(),
            )?;
            let start = inputs.initial_topology.as_deref().map(load_topology).transpose()?;
            let rows = workflow::cmd_batch(&loaded, start.as_ref(), runs, loaded.config.rng_seed, &out)?;
            let feasible = rows.iter().filter(|r| r.feasible).count();
            println!("{feasible}/{} runs feasible", rows.len());
            Ok(feasible_code(feasible > 0))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match workflow::with_thread_cap(|| execute(cli.command)) {
        Ok(Ok(code)) => code,
        // An unsatisfiable allocation rules out every topology.
        Ok(Err(e @ netgap::Error::Infeasible(_))) => {
            eprintln!("no feasible topology found: {e}");
            EXIT_NOT_FEASIBLE
        }
        Ok(Err(e)) | Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID_INPUT
        }
    };
    ExitCode::from(code as u8)
}
