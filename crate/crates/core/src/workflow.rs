//! End-to-end runs and the file-level operations behind the command line.
//!
//! Every artifact except `run_log.jsonl` is a pure function of the inputs
//! and the seed when rollouts are sequential. Wall-clock times go to the
//! run log only.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::alloc::{save_allocation, solve_sp1, AllocationSolution};
use crate::error::{Error, Result};
use crate::evaluate::{EvaluationReport, Evaluator, ModuleMapping};
use crate::grammar::{load_grammar, Grammar};
use crate::mapping::solve_sp3_for;
use crate::model::{
    load_application_model, load_module_catalog, load_run_config, save_application_model, write_json,
    ApplicationModel, ModuleCatalog, RewardWeights, RunConfig, SyntheticSpec,
};
use crate::search::{search_with_events, Candidate, CandidateRow, SearchInput, SearchResult};
use crate::topology::{load_topology, TopologyGraph};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID_INPUT: i32 = 1;
pub const EXIT_NOT_FEASIBLE: i32 = 2;

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "NETGAP_THREADS";

/// Runs `f` on a pool sized by [`THREADS_ENV`], or on the global pool when
/// the variable is unset.
pub fn with_thread_cap<R: Send>(f: impl FnOnce() -> R + Send) -> Result<R> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
        Err(_) => Ok(f()),
    }
}

/// Parses `latency,cost,resilience`.
pub fn parse_weights(text: &str) -> Result<RewardWeights> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Config(format!("weights {text:?}: {e}")))?;
    match parts[..] {
        [latency, cost, resilience] => Ok(RewardWeights {
            latency,
            cost,
            resilience,
        }),
        _ => Err(Error::Config(format!("weights {text:?}: expected three comma-separated numbers"))),
    }
}

/// Command-line overrides of the run configuration.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub weights: Option<RewardWeights>,
}

impl Overrides {
    pub fn apply(&self, config: &mut RunConfig) -> Result<()> {
        if let Some(seed) = self.seed {
            config.rng_seed = seed;
        }
        if let Some(epochs) = self.epochs {
            config.sp2.max_epochs = epochs;
        }
        if let Some(weights) = self.weights {
            config.weights = weights;
        }
        config.validate()
    }
}

/// The four obligatory inputs of a run.
#[derive(Clone, Debug)]
pub struct RunInputs {
    pub model: ApplicationModel,
    pub catalog: ModuleCatalog,
    pub grammar: Grammar,
    pub config: RunConfig,
}

impl RunInputs {
    pub fn new(model: ApplicationModel, catalog: ModuleCatalog, grammar: Grammar, config: RunConfig) -> Result<Self> {
        config.validate()?;
        grammar.check_labels(&catalog)?;
        Ok(RunInputs {
            model,
            catalog,
            grammar,
            config,
        })
    }

    /// Loads and validates the inputs. Without a config path the defaults
    /// apply.
    pub fn load(model: &Path, catalog: &Path, grammar: &Path, config: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut config = match config {
            Some(p) => load_run_config(p)?,
            None => RunConfig::default(),
        };
        overrides.apply(&mut config)?;
        Self::new(
            load_application_model(model)?,
            load_module_catalog(catalog)?,
            load_grammar(grammar)?,
            config,
        )
    }
}

/// Deterministic summary written as `report.json`.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub seed: u64,
    pub epochs: usize,
    pub tree_nodes: usize,
    pub candidates: usize,
    pub feasible_candidates: usize,
    pub first_feasible_epoch: Option<usize>,
    pub allocation_modules: usize,
    pub allocation_cost: f64,
    pub best: Option<BestReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BestReport {
    pub candidate: usize,
    pub epoch: usize,
    pub feasible: bool,
    pub mapping: ModuleMapping,
    pub report: EvaluationReport,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub seed: u64,
    pub allocation: AllocationSolution,
    pub search: SearchResult,
}

impl RunOutcome {
    pub fn feasible(&self) -> bool {
        self.search.feasible_best().is_some()
    }

    pub fn exit_code(&self) -> i32 {
        if self.feasible() {
            EXIT_OK
        } else {
            EXIT_NOT_FEASIBLE
        }
    }

    pub fn best(&self) -> Option<&Candidate> {
        self.search.best.as_ref()
    }

    pub fn first_feasible_epoch(&self) -> Option<usize> {
        self.search.candidates.iter().find(|r| r.feasible).map(|r| r.epoch)
    }

    pub fn report(&self) -> RunReport {
        RunReport {
            seed: self.seed,
            epochs: self.search.epochs,
            tree_nodes: self.search.tree_nodes,
            candidates: self.search.candidates.len(),
            feasible_candidates: self.search.candidates.iter().filter(|r| r.feasible).count(),
            first_feasible_epoch: self.first_feasible_epoch(),
            allocation_modules: self.allocation.module_count(),
            allocation_cost: self.allocation.cost,
            best: self.best().map(|b| BestReport {
                candidate: b.row.candidate,
                epoch: b.row.epoch,
                feasible: b.row.feasible,
                mapping: b.mapping.clone(),
                report: b.report.clone(),
            }),
        }
    }
}

/// Allocation followed by the search loop. `log` receives one JSON object
/// per event, each carrying elapsed wall time.
pub fn run(
    inputs: &RunInputs,
    start: Option<&TopologyGraph>,
    log: &mut dyn FnMut(&serde_json::Value),
) -> Result<RunOutcome> {
    let seed = inputs.config.rng_seed;
    let started = Instant::now();
    let allocation = solve_sp1(&inputs.model, &inputs.catalog, &inputs.config, seed)?;
    log(&json!({
        "event": "allocation",
        "modules": allocation.module_count(),
        "cost": allocation.cost,
        "feasible": allocation.feasible,
        "elapsed_s": started.elapsed().as_secs_f64(),
    }));
    if !allocation.feasible {
        return Err(Error::Infeasible(format!(
            "no feasible allocation found ({} violations)",
            allocation.violations.len()
        )));
    }
    let input = SearchInput {
        grammar: &inputs.grammar,
        allocation: &allocation,
        catalog: &inputs.catalog,
        config: &inputs.config,
        start,
    };
    let search = search_with_events(&input, seed, &mut |event| {
        log(&serde_json::to_value(event).expect("event serializes"));
    })?;
    Ok(RunOutcome {
        seed,
        allocation,
        search,
    })
}

pub fn write_comparison(path: &Path, rows: &[CandidateRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// JSON-lines event log.
struct EventLog {
    path: PathBuf,
    out: BufWriter<File>,
    error: Option<std::io::Error>,
}

impl EventLog {
    fn create(path: PathBuf) -> Result<Self> {
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok(EventLog {
            path,
            out: BufWriter::new(file),
            error: None,
        })
    }

    fn write(&mut self, event: &serde_json::Value) {
        if self.error.is_none() {
            if let Err(e) = writeln!(self.out, "{event}") {
                self.error = Some(e);
            }
        }
    }

    fn finish(mut self) -> Result<()> {
        if let Some(e) = self.error.take() {
            return Err(Error::io(&self.path, e));
        }
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Runs and writes `allocation.json`, `best_topology.{json,dot}`,
/// `report.json`, `comparison.csv` and `run_log.jsonl` into `out_dir`.
/// The topology files are omitted when no candidate was reached.
pub fn run_to_dir(inputs: &RunInputs, start: Option<&TopologyGraph>, out_dir: &Path) -> Result<RunOutcome> {
    create_dir(out_dir)?;
    let mut log = EventLog::create(out_dir.join("run_log.jsonl"))?;
    let outcome = run(inputs, start, &mut |e| log.write(e));
    log.finish()?;
    let outcome = outcome?;
    save_allocation(&outcome.allocation, out_dir.join("allocation.json"))?;
    if let Some(best) = outcome.best() {
        write_json(&out_dir.join("best_topology.json"), &best.graph)?;
        write_text(&out_dir.join("best_topology.dot"), &best.graph.to_dot())?;
    }
    write_json(&out_dir.join("report.json"), &outcome.report())?;
    write_comparison(&out_dir.join("comparison.csv"), &outcome.search.candidates)?;
    Ok(outcome)
}

pub struct RunArgs<'a> {
    pub model: &'a Path,
    pub catalog: &'a Path,
    pub grammar: &'a Path,
    pub config: Option<&'a Path>,
    pub initial_topology: Option<&'a Path>,
    pub out: &'a Path,
    pub overrides: Overrides,
}

pub fn cmd_run(args: &RunArgs<'_>) -> Result<RunOutcome> {
    let inputs = RunInputs::load(args.model, args.catalog, args.grammar, args.config, &args.overrides)?;
    let start = args.initial_topology.map(load_topology).transpose()?;
    if let Some(graph) = &start {
        graph.kinds(&inputs.catalog)?;
    }
    run_to_dir(&inputs, start.as_ref(), args.out)
}

/// Allocation only; writes the solution to `out`.
pub fn cmd_allocate(
    model: &Path,
    catalog: &Path,
    config: Option<&Path>,
    overrides: &Overrides,
    out: &Path,
) -> Result<AllocationSolution> {
    let mut cfg = match config {
        Some(p) => load_run_config(p)?,
        None => RunConfig::default(),
    };
    overrides.apply(&mut cfg)?;
    let model = load_application_model(model)?;
    let catalog = load_module_catalog(catalog)?;
    let solution = solve_sp1(&model, &catalog, &cfg, cfg.rng_seed)?;
    save_allocation(&solution, out)?;
    Ok(solution)
}

#[derive(Clone, Debug, Serialize)]
pub struct EvaluateOutput {
    pub mapping: ModuleMapping,
    pub report: EvaluationReport,
}

/// Scores a topology. Without a mapping the mapping search picks one.
pub fn cmd_evaluate(
    topology: &Path,
    allocation: &Path,
    mapping: Option<&Path>,
    catalog: &Path,
    config: Option<&Path>,
    overrides: &Overrides,
) -> Result<EvaluateOutput> {
    let mut cfg = match config {
        Some(p) => load_run_config(p)?,
        None => RunConfig::default(),
    };
    overrides.apply(&mut cfg)?;
    let topology = load_topology(topology)?;
    let allocation = crate::alloc::load_allocation(allocation)?;
    let catalog = load_module_catalog(catalog)?;
    match mapping {
        Some(p) => {
            let mapping: ModuleMapping = crate::model::read_json(p)?;
            let report = Evaluator::new(&topology, &allocation, &catalog, &cfg)?.evaluate(&mapping)?;
            Ok(EvaluateOutput { mapping, report })
        }
        None => {
            let found = solve_sp3_for(&topology, &allocation, &catalog, &cfg, cfg.rng_seed)?;
            Ok(EvaluateOutput {
                mapping: found.mapping,
                report: found.report,
            })
        }
    }
}

/// Concatenates comparison tables, prefixing each row with a run label.
/// All inputs must share one header.
pub fn cmd_compare(inputs: &[(String, PathBuf)], out: &Path) -> Result<usize> {
    let mut writer = csv::Writer::from_path(out)?;
    let mut header: Option<csv::StringRecord> = None;
    let mut rows = 0;
    for (label, path) in inputs {
        let mut reader = csv::Reader::from_path(path)?;
        let h = reader.headers()?.clone();
        match &header {
            None => {
                let mut out_header = csv::StringRecord::from(vec!["run"]);
                out_header.extend(h.iter());
                writer.write_record(&out_header)?;
                header = Some(h);
            }
            Some(first) if *first != h => {
                return Err(Error::Config(format!(
                    "{}: header differs from the first comparison table",
                    path.display()
                )))
            }
            Some(_) => {}
        }
        for record in reader.records() {
            let record = record?;
            let mut out_record = csv::StringRecord::from(vec![label.as_str()]);
            out_record.extend(record.iter());
            writer.write_record(&out_record)?;
            rows += 1;
        }
    }
    writer.flush().map_err(|e| Error::io(out, e))?;
    Ok(rows)
}

/// Generates a synthetic use case with the avionics part structure, scaled
/// to the requested counts when they differ from the preset.
pub fn cmd_gen_usecase(processes: usize, messages: usize, seed: u64, scaled: bool, out: &Path) -> Result<ApplicationModel> {
    let spec = if scaled {
        SyntheticSpec::scaled_case()
    } else {
        SyntheticSpec::avionics_case()
    };
    let model = spec.resized(processes, messages)?.generate(processes, messages, seed)?;
    save_application_model(&model, out)?;
    Ok(model)
}

/// One line of `batch.csv`. Timing columns vary between repetitions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BatchRow {
    pub seed: u64,
    pub feasible: bool,
    pub best_reward: f64,
    pub candidates: usize,
    pub feasible_candidates: usize,
    pub first_feasible_epoch: Option<usize>,
    pub first_feasible_s: Option<f64>,
    pub wall_time_s: f64,
}

/// Independent runs with seeds `first_seed..first_seed + runs`, each in
/// `out/seed_<seed>/`, run concurrently. Writes `batch.csv` and the merged
/// `comparison.csv` into `out`.
pub fn cmd_batch(inputs: &RunInputs, start: Option<&TopologyGraph>, runs: usize, first_seed: u64, out: &Path) -> Result<Vec<BatchRow>> {
    create_dir(out)?;
    let seeds: Vec<u64> = (0..runs as u64).map(|i| first_seed + i).collect();
    let results: Vec<Result<(BatchRow, PathBuf)>> = seeds
        .par_iter()
        .map(|&seed| {
            let mut inputs = inputs.clone();
            inputs.config.rng_seed = seed;
            let dir = out.join(format!("seed_{seed}"));
            let outcome = run_to_dir(&inputs, start, &dir)?;
            let row = BatchRow {
                seed,
                feasible: outcome.feasible(),
                best_reward: outcome.best().map_or(0.0, |b| b.row.reward),
                candidates: outcome.search.candidates.len(),
                feasible_candidates: outcome.search.candidates.iter().filter(|r| r.feasible).count(),
                first_feasible_epoch: outcome.first_feasible_epoch(),
                first_feasible_s: outcome.search.first_feasible_s,
                wall_time_s: outcome.search.wall_time_s,
            };
            Ok((row, dir.join("comparison.csv")))
        })
        .collect();
    let mut rows = Vec::with_capacity(runs);
    let mut tables = Vec::with_capacity(runs);
    for r in results {
        let (row, table) = r?;
        tables.push((format!("seed_{}", row.seed), table));
        rows.push(row);
    }
    let batch_path = out.join("batch.csv");
    let mut writer = csv::Writer::from_path(&batch_path)?;
    for row in &rows {
        writer.serialize(row)?;
    }
    writer.flush().map_err(|e| Error::io(&batch_path, e))?;
    cmd_compare(&tables, &out.join("comparison.csv"))?;
    Ok(rows)
}
