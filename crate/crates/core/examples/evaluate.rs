//! Scores a hand-built two-segment topology: two switch rings joined by two
//! gateways, each ring hosting one part's processing modules.

use netgap::alloc::{candidate_slots, AllocationGenome, AllocationProblem, AllocationSolution};
use netgap::evaluate::{evaluate, ModuleMapping};
use netgap::model::{ApplicationModel, Message, ModuleCatalog, Process, RunConfig};
use netgap::topology::TopologyGraph;

fn main() -> netgap::Result<()> {
    let parts = ["flight", "mission"];
    let processes: Vec<Process> = (0..8)
        .map(|i| Process {
            id: format!("p{i}"),
            part: parts[i / 4].into(),
            period_ms: 20.0,
            compute_demand_mops: 0.6,
        })
        .collect();
    let link = |k: usize, a: usize, b: usize| Message {
        id: format!("m{k}"),
        src: format!("p{a}"),
        dst: format!("p{b}"),
        size_bits: 40_000.0,
        period_ms: 20.0,
    };
    let messages = vec![link(0, 0, 2), link(1, 1, 3), link(2, 2, 1), link(3, 4, 6), link(4, 5, 7), link(5, 0, 4)];
    let model = ApplicationModel::new(processes, messages)?;
    let catalog = ModuleCatalog::standard();
    let config = RunConfig::default();

    // Two processes per module, modules in part order.
    let problem = AllocationProblem::new(&model, candidate_slots(&catalog, 4), 0.8, 100.0)?;
    let genome = AllocationGenome {
        inclusion: vec![true; 4],
        assignment: vec![0, 0, 1, 1, 2, 2, 3, 3],
    };
    let allocation = AllocationSolution::from_genome(&problem, &genome)?;

    let mut topology = TopologyGraph::new();
    let mut rings = Vec::new();
    for _ in 0..2 {
        let ring: Vec<_> = (0..4).map(|_| topology.add_vertex("S")).collect();
        for i in 0..4 {
            topology.add_link(ring[i], ring[(i + 1) % 4])?;
        }
        rings.push(ring);
    }
    for (i, j) in [(0, 0), (2, 2)] {
        let g = topology.add_vertex("G");
        topology.add_link(g, rings[0][i])?;
        topology.add_link(g, rings[1][j])?;
    }
    // Modules 0 and 1 on the first ring, 2 and 3 on the second.
    let mut placed = Vec::new();
    for ring in &rings {
        for &s in &[ring[1], ring[3]] {
            let m = topology.add_vertex("M");
            topology.add_link(m, s)?;
            placed.push(m);
        }
    }

    let report = evaluate(&topology, &allocation, &ModuleMapping::new(placed.clone()), &catalog, &config)?;
    println!("{} vertices, {} directed edges", topology.vertex_count(), topology.edge_count());
    println!(
        "segments {}  links {}  cost {:.1}u (score {:.3})",
        report.segments, report.links, report.cost, report.cost_score
    );
    println!(
        "mean hops {:.2}  max link load {:.3}  latency {:.3}",
        report.mean_hops, report.max_link_load, report.latency_score
    );
    println!(
        "mean disjoint paths {:.2} (score {:.3})  max node load {:.3}",
        report.mean_disjoint_paths, report.dp_score, report.max_node_load
    );
    println!("gates {:?}", report.gates);
    println!("reward {:.4}", report.reward);

    // Placing a flight module in the mission segment breaks the segment gate.
    let swapped = ModuleMapping::new(vec![placed[2], placed[1], placed[0], placed[3]]);
    let bad = evaluate(&topology, &allocation, &swapped, &catalog, &config)?;
    println!("\nswapped mapping: reward {:.4}", bad.reward);
    for f in &bad.failures {
        println!("  {f}");
    }
    Ok(())
}
