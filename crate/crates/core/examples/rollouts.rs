//! Random rollouts of the segmented-mesh grammar until the graph holds the
//! required modules. Prints the distribution of rollout lengths, which
//! bounds the depth cap the search needs.
//!
//! Usage: `cargo run --release --example rollouts -- [modules] [rollouts]`

use netgap::alloc::{candidate_slots, AllocationGenome, AllocationProblem, AllocationSolution};
use netgap::grammar::parse_grammar;
use netgap::model::{ApplicationModel, ModuleCatalog, Process};
use netgap::search::{default_depth_cap, rollout, TerminalSpec};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> netgap::Result<()> {
    let mut args = std::env::args().skip(1);
    let modules: usize = args.next().map_or(22, |a| a.parse().expect("modules"));
    let runs: usize = args.next().map_or(200, |a| a.parse().expect("rollouts"));

    let processes = (0..modules)
        .map(|i| Process {
            id: format!("p{i}"),
            part: if i % 2 == 0 { "A".into() } else { "B".into() },
            period_ms: 10.0,
            compute_demand_mops: 0.5,
        })
        .collect();
    let model = ApplicationModel::new(processes, Vec::new())?;
    let catalog = ModuleCatalog::standard();
    let problem = AllocationProblem::new(&model, candidate_slots(&catalog, modules), 0.8, 100.0)?;
    let genome = AllocationGenome {
        inclusion: vec![true; modules],
        assignment: (0..modules).collect(),
    };
    let allocation = AllocationSolution::from_genome(&problem, &genome)?;
    let grammar = parse_grammar(include_str!("../fixtures/grammars/segmented_mesh.grammar"))?;
    let spec = TerminalSpec::new(&allocation, &grammar);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut lengths = Vec::new();
    let mut switches = Vec::new();
    for _ in 0..runs {
        if let Some((g, depth)) = rollout(&grammar.start_graph, &grammar, &spec, &catalog, 100_000, &mut rng)? {
            lengths.push(depth);
            switches.push(g.count_label("S"));
        }
    }
    lengths.sort_unstable();
    let pct = |p: f64| lengths[((lengths.len() - 1) as f64 * p).round() as usize];
    println!("{} of {runs} rollouts terminal for {modules} modules", lengths.len());
    println!(
        "length min {} median {} p90 {} max {}",
        lengths[0],
        pct(0.5),
        pct(0.9),
        lengths[lengths.len() - 1]
    );
    let mean_s = switches.iter().sum::<usize>() as f64 / switches.len() as f64;
    println!("mean switches {mean_s:.1}; default depth cap {}", default_depth_cap(modules));
    Ok(())
}
