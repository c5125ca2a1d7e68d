//! Allocates the synthetic avionics use case onto the standard processing
//! modules and prints the chosen modules with their loads.

use netgap::alloc::solve_sp1;
use netgap::model::{ModuleCatalog, RunConfig, SyntheticSpec};

fn main() -> netgap::Result<()> {
    let model = SyntheticSpec::avionics_case().generate(99, 660, 1)?;
    let catalog = ModuleCatalog::standard();
    let config = RunConfig::default();

    let start = std::time::Instant::now();
    let solution = solve_sp1(&model, &catalog, &config, config.rng_seed)?;
    println!(
        "{} modules, cost {}u, feasible {}, {:.2?}",
        solution.module_count(),
        solution.cost,
        solution.feasible,
        start.elapsed()
    );
    println!("demand {:.3} Mops", model.total_compute_demand());
    for m in &solution.modules {
        println!(
            "  slot {:>2} {} {:<4} {:>2} processes  util {:>5.1}%  out {:>6.2} Mbit/s  in {:>6.2} Mbit/s",
            m.slot,
            m.module_type,
            m.part.as_deref().unwrap_or("mixed"),
            m.processes.len(),
            100.0 * m.utilization,
            m.out_mbps,
            m.in_mbps
        );
    }
    Ok(())
}
