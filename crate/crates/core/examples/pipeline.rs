//! Runs the whole pipeline for two seeds on a reduced use case, writing
//! each run's artifacts to its own directory, then merges their comparison
//! tables.
//!
//! Usage: `cargo run --release --example pipeline -- [out dir] [epochs]`

use std::path::PathBuf;

use netgap::grammar::parse_grammar;
use netgap::model::{ModuleCatalog, RunConfig, SyntheticSpec};
use netgap::workflow::{cmd_compare, run_to_dir, RunInputs};

fn main() -> netgap::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "pipeline_out".into()));
    let epochs = args.next().map_or(2000, |a| a.parse().expect("epochs"));

    let model = SyntheticSpec::avionics_case().resized(40, 240)?.generate(40, 240, 1)?;
    let mut config = RunConfig::default();
    config.sp2.max_epochs = epochs;
    let grammar = parse_grammar(include_str!("../fixtures/grammars/segmented_mesh.grammar"))?;
    let mut inputs = RunInputs::new(model, ModuleCatalog::standard(), grammar, config)?;

    let mut tables = Vec::new();
    for seed in [1, 2] {
        inputs.config.rng_seed = seed;
        let dir = out.join(format!("seed_{seed}"));
        let outcome = run_to_dir(&inputs, None, &dir)?;
        let report = outcome.report();
        println!(
            "seed {seed}: {} modules, {} candidates, {} feasible, first feasible at epoch {:?}",
            report.allocation_modules, report.candidates, report.feasible_candidates, report.first_feasible_epoch
        );
        if let Some(best) = outcome.search.feasible_best() {
            println!(
                "  best reward {:.4}: {} switches, {} gateways, {} links, cost {:.1}u",
                best.row.reward, best.row.switches, best.row.gateways, best.row.links, best.row.cost
            );
        }
        tables.push((format!("seed_{seed}"), dir.join("comparison.csv")));
    }
    let rows = cmd_compare(&tables, &out.join("comparison.csv"))?;
    println!("merged {rows} rows into {}", out.join("comparison.csv").display());
    Ok(())
}
