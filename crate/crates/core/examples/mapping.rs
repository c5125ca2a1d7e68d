//! Searches module placements for a fixed topology and compares the result
//! with the greedy starting placement and a random one.

use netgap::alloc::solve_sp1;
use netgap::evaluate::{Evaluator, ModuleMapping};
use netgap::mapping::solve_sp3;
use netgap::model::{ModuleCatalog, RunConfig, SyntheticSpec};
use netgap::topology::TopologyGraph;
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> netgap::Result<()> {
    let model = SyntheticSpec::avionics_case().resized(30, 160)?.generate(30, 160, 2)?;
    let catalog = ModuleCatalog::standard();
    let mut config = RunConfig::default();
    config.sp3.max_generations = 30;
    let allocation = solve_sp1(&model, &catalog, &config, 2)?;
    let counts: Vec<usize> = ["FCP", "MOP"]
        .iter()
        .map(|p| allocation.modules.iter().filter(|m| m.part.as_deref() == Some(p)).count())
        .collect();
    println!("allocation: {} modules, {counts:?} per part", allocation.module_count());

    // One five-switch ring per part, joined by two gateways.
    let mut g = TopologyGraph::new();
    let mut rings = Vec::new();
    for &n in &counts {
        let ring: Vec<_> = (0..5).map(|_| g.add_vertex("S")).collect();
        for i in 0..5 {
            g.add_link(ring[i], ring[(i + 1) % 5])?;
        }
        for k in 0..n {
            let m = g.add_vertex("M");
            g.add_link(m, ring[k % 5])?;
        }
        rings.push(ring);
    }
    for i in [0, 3] {
        let gw = g.add_vertex("G");
        g.add_link(gw, rings[0][i])?;
        g.add_link(gw, rings[1][i])?;
    }

    let evaluator = Evaluator::new(&g, &allocation, &catalog, &config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut shuffled = evaluator.processing_vertices().to_vec();
    shuffled.shuffle(&mut rng);
    let random = evaluator.evaluate(&ModuleMapping::new(shuffled))?;
    println!("random placement: reward {:.4} ({} gate failures)", random.reward, random.failures.len());

    let found = solve_sp3(&evaluator, &catalog, &config.sp3, &mut rng)?;
    let r = &found.report;
    println!(
        "searched placement: reward {:.4} after {} evaluations, hops {:.2}, link load {:.3}, disjoint {:.2}",
        r.reward, found.evaluations, r.mean_hops, r.max_link_load, r.mean_disjoint_paths
    );
    for (k, v) in found.mapping.vertex_of_module.iter().enumerate() {
        let part = allocation.modules[k].part.as_deref().unwrap_or("mixed");
        println!("  module {k:>2} ({part}) -> vertex {v}");
    }
    Ok(())
}
