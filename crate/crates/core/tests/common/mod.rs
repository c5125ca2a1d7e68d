//! Instance generators and brute-force oracles shared by the test targets.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use netgap::alloc::{candidate_slots, AllocationGenome, AllocationProblem, AllocationSolution};
use netgap::evaluate::{Evaluator, ModuleMapping};
use netgap::grammar::{load_grammar, Grammar};
use netgap::model::{ApplicationModel, Message, ModuleCatalog, ModuleKind, Process};
use netgap::search::{rollout, TerminalSpec};
use netgap::topology::{TopologyGraph, VertexId};

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn grammar(name: &str) -> Grammar {
    load_grammar(fixture(&format!("grammars/{name}.grammar"))).expect("fixture grammar")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The standard catalog plus a larger, dearer processing type.
pub fn mixed_catalog() -> ModuleCatalog {
    serde_json::from_str(
        r#"{"module_types": [
            {"type_name": "M", "kind": "processing", "compute_capacity_mops": 2.7,
             "link_bandwidth_mbps": 100.0, "max_ports": 1, "cost": 10.0},
            {"type_name": "X", "kind": "processing", "compute_capacity_mops": 5.0,
             "link_bandwidth_mbps": 100.0, "max_ports": 1, "cost": 17.0},
            {"type_name": "S", "kind": "switch", "link_bandwidth_mbps": 100.0,
             "max_ports": 6, "cost": 10.0},
            {"type_name": "G", "kind": "gateway", "link_bandwidth_mbps": 100.0,
             "max_ports": 2, "cost": 10.0}
        ]}"#,
    )
    .expect("catalog")
}

/// `n` processes split over `parts` parts with `messages` random messages.
/// Demands lie in `demand` Mops; bandwidths in `mbps` Mbit/s.
pub fn small_model(
    rng: &mut impl Rng,
    n: usize,
    parts: usize,
    messages: usize,
    demand: (f64, f64),
    mbps: (f64, f64),
) -> ApplicationModel {
    let processes: Vec<Process> = (0..n)
        .map(|i| Process {
            id: format!("p{i}"),
            part: format!("part{}", i % parts),
            period_ms: 10.0,
            compute_demand_mops: rng.gen_range(demand.0..demand.1),
        })
        .collect();
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b))).collect();
    pairs.shuffle(rng);
    let msgs = pairs
        .into_iter()
        .take(messages)
        .enumerate()
        .map(|(k, (a, b))| {
            let bw = rng.gen_range(mbps.0..mbps.1);
            Message {
                id: format!("m{k}"),
                src: format!("p{a}"),
                dst: format!("p{b}"),
                size_bits: bw * 1000.0 * 10.0,
                period_ms: 10.0,
            }
        })
        .collect();
    ApplicationModel::new(processes, msgs).expect("model")
}

/// Cheapest feasible cost by enumerating every assignment. Including a
/// slot nobody uses only adds cost, so inclusion follows the assignment.
pub fn sp1_exhaustive_cost(problem: &AllocationProblem<'_>) -> Option<f64> {
    let n = problem.process_count();
    let q = problem.slot_count();
    let mut assignment = vec![0usize; n];
    let mut best: Option<f64> = None;
    loop {
        let mut inclusion = vec![false; q];
        for &j in &assignment {
            inclusion[j] = true;
        }
        let genome = AllocationGenome {
            inclusion,
            assignment: assignment.clone(),
        };
        if problem.check_feasibility(&genome).expect("shape").feasible {
            let c = problem.cost(&genome);
            if best.is_none_or(|b| c < b) {
                best = Some(c);
            }
        }
        let mut i = 0;
        while i < n {
            assignment[i] += 1;
            if assignment[i] < q {
                break;
            }
            assignment[i] = 0;
            i += 1;
        }
        if i == n {
            return best;
        }
    }
}

/// Random switched graph with `infra` switch/gateway vertices and three
/// processing vertices. Returns the graph and the two endpoints; the third
/// processing vertex is a decoy that must never relay.
pub fn random_infra_graph(rng: &mut impl Rng, infra: usize) -> (TopologyGraph, VertexId, VertexId) {
    let mut g = TopologyGraph::new();
    let nodes: Vec<VertexId> = (0..infra)
        .map(|_| g.add_vertex(if rng.gen_bool(0.8) { "S" } else { "G" }))
        .collect();
    for (i, &a) in nodes.iter().enumerate() {
        for &b in &nodes[i + 1..] {
            let roll: f64 = rng.gen();
            if roll < 0.3 {
                g.add_link(a, b).unwrap();
            } else if roll < 0.38 {
                g.add_edge(a, b).unwrap();
            } else if roll < 0.46 {
                g.add_edge(b, a).unwrap();
            }
        }
    }
    let src = g.add_vertex("M");
    let dst = g.add_vertex("M");
    let decoy = g.add_vertex("M");
    for m in [src, dst, decoy] {
        let k = rng.gen_range(1..=infra.min(3));
        for &s in nodes.choose_multiple(rng, k) {
            g.add_link(m, s).unwrap();
        }
    }
    if rng.gen_bool(0.1) {
        g.add_edge(src, dst).unwrap();
    }
    (g, src, dst)
}

/// Disjoint-path count by enumerating simple paths and packing them.
///
/// A path may share the endpoints, any switch or gateway adjacent to an
/// endpoint, and edges touching an endpoint. Other switches and gateways,
/// edges between two of them and the direct endpoint edge are used by at
/// most one path. `None` when a path uses only shareable elements.
pub fn brute_force_disjoint(graph: &TopologyGraph, catalog: &ModuleCatalog, src: VertexId, dst: VertexId) -> Option<usize> {
    let infra = |v: VertexId| {
        graph
            .label(v)
            .and_then(|l| catalog.get(l))
            .is_some_and(|m| m.kind != ModuleKind::Processing)
    };
    let shared: BTreeSet<VertexId> = [src, dst]
        .iter()
        .flat_map(|&e| graph.neighbors(e))
        .filter(|&v| infra(v))
        .collect();

    let mut paths: Vec<Vec<VertexId>> = Vec::new();
    let mut stack = vec![src];
    fn dfs(
        graph: &TopologyGraph,
        infra: &dyn Fn(VertexId) -> bool,
        dst: VertexId,
        stack: &mut Vec<VertexId>,
        out: &mut Vec<Vec<VertexId>>,
    ) {
        let u = *stack.last().unwrap();
        for &w in graph.successors(u) {
            if w == dst {
                let mut p = stack.clone();
                p.push(w);
                out.push(p);
            } else if infra(w) && !stack.contains(&w) {
                stack.push(w);
                dfs(graph, infra, dst, stack, out);
                stack.pop();
            }
        }
    }
    dfs(graph, &infra, dst, &mut stack, &mut paths);

    let mut resource_ids: HashMap<(VertexId, VertexId), usize> = HashMap::new();
    let mut id_of = |key: (VertexId, VertexId)| {
        let next = resource_ids.len();
        *resource_ids.entry(key).or_insert(next)
    };
    let mut masks = Vec::new();
    for p in &paths {
        let mut mask = 0u128;
        for &v in &p[1..p.len() - 1] {
            if !shared.contains(&v) {
                mask |= 1 << id_of((v, v));
            }
        }
        for w in p.windows(2) {
            let touches_endpoint = [src, dst].contains(&w[0]) || [src, dst].contains(&w[1]);
            if !touches_endpoint || (w[0], w[1]) == (src, dst) {
                mask |= 1 << id_of((w[0], w[1]));
            }
        }
        if mask == 0 {
            return None;
        }
        masks.push(mask);
    }

    fn pack(masks: &[u128], used: u128, memo: &mut HashMap<u128, usize>) -> usize {
        if let Some(&v) = memo.get(&used) {
            return v;
        }
        let best = masks
            .iter()
            .filter(|&&m| m & used == 0)
            .map(|&m| 1 + pack(masks, used | m, memo))
            .max()
            .unwrap_or(0);
        memo.insert(used, best);
        best
    }
    Some(pack(&masks, 0, &mut HashMap::new()))
}

/// Allocation with `groups[k]` listing the processes of module `k`, all on
/// slots of type `M`.
pub fn allocation_from_groups(model: &ApplicationModel, catalog: &ModuleCatalog, groups: &[Vec<usize>]) -> AllocationSolution {
    let mut assignment = vec![usize::MAX; model.processes().len()];
    for (k, g) in groups.iter().enumerate() {
        for &i in g {
            assignment[i] = k;
        }
    }
    assert!(assignment.iter().all(|&j| j != usize::MAX), "every process grouped");
    let problem = AllocationProblem::new(model, candidate_slots(catalog, groups.len()), 0.8, 1000.0).unwrap();
    let genome = AllocationGenome {
        inclusion: vec![true; groups.len()],
        assignment,
    };
    AllocationSolution::from_genome(&problem, &genome).unwrap()
}

/// Splits processes into `k` modules, never mixing parts when `pure`.
pub fn random_groups(rng: &mut impl Rng, model: &ApplicationModel, k: usize, pure: bool) -> Vec<Vec<usize>> {
    let parts = model.process_parts();
    let n_parts = model.parts().len();
    let mut groups = vec![Vec::new(); k];
    if pure && k >= n_parts {
        // Module m serves part m % n_parts.
        for (i, &p) in parts.iter().enumerate() {
            let choices: Vec<usize> = (0..k).filter(|m| m % n_parts == p).collect();
            groups[*choices.choose(rng).unwrap()].push(i);
        }
    } else {
        for i in 0..parts.len() {
            groups[rng.gen_range(0..k)].push(i);
        }
    }
    groups.retain(|g| !g.is_empty());
    groups
}

/// Rolls out `grammar` from its start graph until a terminal graph for
/// `allocation` appears.
pub fn terminal_topology(grammar: &Grammar, allocation: &AllocationSolution, catalog: &ModuleCatalog, rng: &mut impl Rng) -> TopologyGraph {
    let spec = TerminalSpec::new(allocation, grammar);
    for _ in 0..10_000 {
        if let Some((g, _)) = rollout(&grammar.start_graph, grammar, &spec, catalog, 10_000, rng).unwrap() {
            return g;
        }
    }
    panic!("no terminal graph reached");
}

/// Every permutation of `0..n` (Heap's algorithm).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, a, out);
            if k.is_multiple_of(2) {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
        }
    }
    let mut out = Vec::new();
    heap(n, &mut (0..n).collect(), &mut out);
    out
}

/// Highest reward over all mappings, for a single processing type.
pub fn sp3_exhaustive_reward(evaluator: &Evaluator<'_>) -> f64 {
    let vertices = evaluator.processing_vertices().to_vec();
    permutations(vertices.len())
        .into_iter()
        .map(|perm| {
            let mapping = ModuleMapping::new(perm.iter().map(|&p| vertices[p]).collect());
            evaluator.evaluate(&mapping).unwrap().reward
        })
        .fold(0.0, f64::max)
}

/// One switch ring per part, bridged by two gateways between consecutive
/// rings, with each part's processing vertices hung off its ring. Rings
/// give every communicating pair two disjoint paths, so gate-passing
/// mappings exist. Mixed modules go to the first segment.
pub fn segmented_topology(rng: &mut impl Rng, allocation: &AllocationSolution) -> TopologyGraph {
    let parts: Vec<Option<&str>> = {
        let set: BTreeSet<&str> = allocation.modules.iter().filter_map(|m| m.part.as_deref()).collect();
        set.into_iter().map(Some).collect()
    };
    let segment_of = |m: &netgap::alloc::AllocatedModule| parts.iter().position(|p| *p == m.part.as_deref()).unwrap_or(0);
    let mut g = TopologyGraph::new();
    let rings: Vec<Vec<VertexId>> = (0..parts.len().max(1))
        .map(|_| {
            let s = rng.gen_range(3..=5);
            let ring: Vec<VertexId> = (0..s).map(|_| g.add_vertex("S")).collect();
            for i in 0..s {
                g.add_link(ring[i], ring[(i + 1) % s]).unwrap();
            }
            if s > 3 && rng.gen_bool(0.5) {
                g.add_link(ring[0], ring[2]).unwrap();
            }
            ring
        })
        .collect();
    for pair in rings.windows(2) {
        let left: Vec<VertexId> = pair[0].choose_multiple(rng, 2).copied().collect();
        let right: Vec<VertexId> = pair[1].choose_multiple(rng, 2).copied().collect();
        for i in 0..2 {
            let gw = g.add_vertex("G");
            g.add_link(gw, left[i]).unwrap();
            g.add_link(gw, right[i]).unwrap();
        }
    }
    for m in &allocation.modules {
        let ring = &rings[segment_of(m)];
        let v = g.add_vertex(&m.module_type);
        g.add_link(v, *ring.choose(rng).unwrap()).unwrap();
    }
    g
}
