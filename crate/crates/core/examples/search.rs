//! Runs the full allocation, topology search and mapping loop on the
//! synthetic avionics case with the segmented-mesh grammar.
//!
//! Usage: `cargo run --release --example search -- [epochs] [seed]`

use netgap::alloc::solve_sp1;
use netgap::grammar::parse_grammar;
use netgap::model::{ModuleCatalog, RunConfig, SyntheticSpec};
use netgap::search::{search_with_events, SearchEvent, SearchInput};

fn main() -> netgap::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs = args.next().map_or(10_000, |a| a.parse().expect("epochs"));
    let seed = args.next().map_or(1, |a| a.parse().expect("seed"));

    let model = SyntheticSpec::avionics_case().generate(99, 660, seed)?;
    let catalog = ModuleCatalog::standard();
    let mut config = RunConfig::default();
    config.sp2.max_epochs = epochs;
    let grammar = parse_grammar(include_str!("../fixtures/grammars/segmented_mesh.grammar"))?;

    let allocation = solve_sp1(&model, &catalog, &config, seed)?;
    println!("allocation: {} modules, cost {}u", allocation.module_count(), allocation.cost);

    let input = SearchInput {
        grammar: &grammar,
        allocation: &allocation,
        catalog: &catalog,
        config: &config,
        start: None,
    };
    let result = search_with_events(&input, seed, &mut |event| match event {
        SearchEvent::Progress { epoch, best_reward, candidates, feasible, elapsed_s, .. } => println!(
            "epoch {epoch:>6}  best {best_reward:.4}  candidates {candidates:>5}  feasible {feasible:>5}  {elapsed_s:.1}s"
        ),
        SearchEvent::Started { depth_cap, .. } => println!("rollout depth cap {depth_cap}"),
        _ => {}
    })?;

    match result.feasible_best() {
        Some(best) => {
            let r = &best.report;
            println!("best candidate #{} (epoch {})", best.row.candidate, best.row.epoch);
            println!("  modules {} switches {} gateways {} links {}", r.processing_vertices, r.switch_vertices, r.gateway_vertices, r.links);
            println!("  segments {}  mean disjoint paths {:.2}  mean hops {:.2}", r.segments, r.mean_disjoint_paths, r.mean_hops);
            println!("  max link load {:.4}  max node load {:.4}", r.max_link_load, r.max_node_load);
            println!("  cost {:.1}u  latency score {:.4}  reward {:.4}", r.cost, r.latency_score, r.reward);
        }
        None => println!("no feasible topology found"),
    }
    println!("{} candidates in {:.1}s", result.candidates.len(), result.wall_time_s);
    Ok(())
}
