mod common;

use netgap::evaluate::{disjoint_paths, evaluate, latency_score, route_and_load, ModuleMapping};
use netgap::model::{ApplicationModel, LatencyParams, Message, ModuleCatalog, Process, RunConfig};
use netgap::topology::TopologyGraph;

use common::{allocation_from_groups, brute_force_disjoint, random_infra_graph, rng};

const EPS: f64 = 1e-9;

fn process(id: &str, part: &str, demand: f64) -> Process {
    Process {
        id: id.into(),
        part: part.into(),
        period_ms: 10.0,
        compute_demand_mops: demand,
    }
}

fn message(id: &str, src: &str, dst: &str, mbps: f64) -> Message {
    Message {
        id: id.into(),
        src: src.into(),
        dst: dst.into(),
        size_bits: mbps * 1e4,
        period_ms: 10.0,
    }
}

/// Two parts of two processes; one message inside each part and one across.
fn two_part_model() -> ApplicationModel {
    ApplicationModel::new(
        vec![
            process("p0", "A", 1.0),
            process("p1", "A", 1.5),
            process("p2", "B", 2.0),
            process("p3", "B", 0.5),
        ],
        vec![
            message("intra_a", "p0", "p1", 10.0),
            message("intra_b", "p2", "p3", 10.0),
            message("cross", "p0", "p2", 5.0),
        ],
    )
    .unwrap()
}

/// Two switch triangles `a1 a2 a3` (ids 0-2) and `b1 b2 b3` (ids 3-5)
/// bridged by gateway 6 (`a1`-`b1`) and gateway 7 (`a3`-`b3`). Processing
/// vertices 8, 9 hang off `a2`, `a3` and 10, 11 off `b2`, `b3`.
fn bridged_triangles() -> TopologyGraph {
    let mut g = TopologyGraph::new();
    let s: Vec<_> = (0..6).map(|_| g.add_vertex("S")).collect();
    let g1 = g.add_vertex("G");
    let g2 = g.add_vertex("G");
    let m: Vec<_> = (0..4).map(|_| g.add_vertex("M")).collect();
    for t in [0, 3] {
        g.add_link(s[t], s[t + 1]).unwrap();
        g.add_link(s[t + 1], s[t + 2]).unwrap();
        g.add_link(s[t], s[t + 2]).unwrap();
    }
    g.add_link(g1, s[0]).unwrap();
    g.add_link(g1, s[3]).unwrap();
    g.add_link(g2, s[2]).unwrap();
    g.add_link(g2, s[5]).unwrap();
    for (mi, si) in [(0, 1), (1, 2), (2, 4), (3, 5)] {
        g.add_link(m[mi], s[si]).unwrap();
    }
    g
}

fn identity_mapping() -> ModuleMapping {
    ModuleMapping::new(vec![8, 9, 10, 11])
}

#[test]
fn hand_checked_topology() {
    let model = two_part_model();
    let catalog = ModuleCatalog::standard();
    let config = RunConfig::default();
    let allocation = allocation_from_groups(&model, &catalog, &[vec![0], vec![1], vec![2], vec![3]]);
    let topology = bridged_triangles();
    let report = evaluate(&topology, &allocation, &identity_mapping(), &catalog, &config).unwrap();

    assert!(report.gates.all_pass(), "{:?}", report.failures);
    assert_eq!(report.segments, 2);
    assert_eq!(report.links, 14);
    assert_eq!((report.switch_vertices, report.gateway_vertices, report.processing_vertices), (6, 2, 4));

    // Intra-part routes visit 4 vertices, the cross route 7.
    assert!((report.mean_hops - 5.0).abs() < EPS);
    // Both the p0->p1 and p0->p2 routes leave vertex 8 over the same link.
    assert!((report.max_link_load - 0.15).abs() < EPS);
    assert_eq!(report.overloaded_links, 0);
    let latency = 2.0 * (1.0_f64 - 0.15).exp() / 5.0;
    assert!((report.latency_score - latency).abs() < EPS);

    assert!((report.cost - 121.4).abs() < EPS);
    assert!((report.cost_score - 40.0 / 121.4).abs() < EPS);
    assert!((report.mean_disjoint_paths - 2.0).abs() < EPS);
    assert!((report.dp_score - 1.0).abs() < EPS);
    let reward = (latency + 40.0 / 121.4 + 1.0) / 3.0;
    assert!((report.reward - reward).abs() < EPS);

    let demand = [1.0, 1.5, 2.0, 0.5];
    for n in &report.node_loads {
        assert!((n.utilization - demand[n.module] / 2.7).abs() < EPS);
    }
    assert!((report.max_node_load - 2.0 / 2.7).abs() < EPS);

    let routing = route_and_load(&topology, &allocation, &identity_mapping(), &model, &catalog, &config).unwrap();
    let cross = routing.routes.iter().find(|r| r.message == "cross").unwrap();
    // Two equal-length routes; the lexicographically smaller one wins.
    assert_eq!(cross.path, vec![8, 1, 0, 6, 3, 4, 10]);
    let first_hop = routing.link_loads.iter().find(|l| (l.src, l.dst) == (8, 1)).unwrap();
    assert!((first_hop.mbps - 15.0).abs() < EPS);
}

#[test]
fn part_split_across_segments_scores_zero() {
    let model = two_part_model();
    let catalog = ModuleCatalog::standard();
    let config = RunConfig::default();
    let allocation = allocation_from_groups(&model, &catalog, &[vec![0], vec![1], vec![2], vec![3]]);
    let swapped = ModuleMapping::new(vec![10, 9, 8, 11]);
    let report = evaluate(&bridged_triangles(), &allocation, &swapped, &catalog, &config).unwrap();
    assert!(!report.gates.segments_ok);
    assert_eq!(report.reward, 0.0);
    assert!(report.failures.iter().any(|f| f.contains("spans 2 segments")), "{:?}", report.failures);
}

#[test]
fn single_gateway_fails_disjoint_paths() {
    let model = two_part_model();
    let catalog = ModuleCatalog::standard();
    let config = RunConfig::default();
    let allocation = allocation_from_groups(&model, &catalog, &[vec![0], vec![1], vec![2], vec![3]]);
    let mut topology = bridged_triangles();
    topology.remove_vertex(7);
    let report = evaluate(&topology, &allocation, &identity_mapping(), &catalog, &config).unwrap();
    assert!(report.gates.segments_ok && report.gates.routable);
    assert!(!report.gates.disjoint_paths_ok);
    assert!((report.mean_disjoint_paths - 5.0 / 3.0).abs() < EPS);
    assert_eq!(report.reward, 0.0);

    let mut relaxed = config.clone();
    relaxed.required_disjoint_paths = 1;
    let report = evaluate(&topology, &allocation, &identity_mapping(), &catalog, &relaxed).unwrap();
    assert!(report.gates.all_pass());
    assert!((report.dp_score - 1.0).abs() < EPS);
}

#[test]
fn port_limits_gate_only_when_enforced() {
    let model = two_part_model();
    let catalog = ModuleCatalog::standard();
    let allocation = allocation_from_groups(&model, &catalog, &[vec![0], vec![1], vec![2], vec![3]]);
    let mut topology = bridged_triangles();
    topology.add_link(8, 0).unwrap();

    let mut config = RunConfig::default();
    let lenient = evaluate(&topology, &allocation, &identity_mapping(), &catalog, &config).unwrap();
    assert_eq!(lenient.port_overflows, 1);
    assert!(lenient.gates.all_pass());
    assert!(lenient.reward > 0.0);

    config.enforce_port_limits = true;
    let strict = evaluate(&topology, &allocation, &identity_mapping(), &catalog, &config).unwrap();
    assert!(!strict.gates.ports_ok);
    assert_eq!(strict.reward, 0.0);
}

#[test]
fn wrong_module_count_is_reported() {
    let model = two_part_model();
    let catalog = ModuleCatalog::standard();
    let config = RunConfig::default();
    let allocation = allocation_from_groups(&model, &catalog, &[vec![0, 1], vec![2, 3]]);
    let report = evaluate(&bridged_triangles(), &allocation, &ModuleMapping::default(), &catalog, &config).unwrap();
    assert!(!report.gates.module_count_ok);
    assert_eq!(report.reward, 0.0);
}

#[test]
fn latency_score_reference_points() {
    let p = LatencyParams::default();
    assert_eq!(latency_score(0.0, 0, 0.0, &p).unwrap(), 1.0);
    assert_eq!(latency_score(0.0, 0, 2.0, &p).unwrap(), 1.0, "e clamps to 1");
    assert!((latency_score(0.5, 0, 4.0, &p).unwrap() - 0.5 * 0.5_f64.exp()).abs() < EPS);
    assert!((latency_score(0.2, 1, 4.0, &p).unwrap() - 0.5 * (-0.2_f64).exp()).abs() < EPS);
    let bad = LatencyParams { gamma: 0.0, ..p };
    assert!(latency_score(0.1, 0, 3.0, &bad).is_err());
}

#[test]
fn disjoint_paths_match_brute_force_on_larger_graphs() {
    let catalog = ModuleCatalog::standard();
    let mut r = rng(77);
    for case in 0..200 {
        let infra = 3 + case % 8;
        let (g, src, dst) = random_infra_graph(&mut r, infra);
        let kinds = g.kinds(&catalog).unwrap();
        assert_eq!(
            disjoint_paths(&g, &kinds, src, dst),
            brute_force_disjoint(&g, &catalog, src, dst),
            "case {case}: {}",
            g.to_json_string()
        );
    }
}
