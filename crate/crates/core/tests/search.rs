mod common;

use netgap::grammar::parse_grammar;
use netgap::model::{ModuleCatalog, RunConfig};
use netgap::search::{rollout, search, GraphStatus, SearchInput, TerminalSpec};
use netgap::topology::TopologyGraph;

use common::{allocation_from_groups, grammar, rng, small_model, terminal_topology};

fn small_config(epochs: usize) -> RunConfig {
    let mut config = RunConfig::default();
    config.sp2.max_epochs = epochs;
    config.sp3.population = 10;
    config.sp3.max_generations = 2;
    config
}

#[test]
fn terminal_start_needs_no_actions() {
    let catalog = ModuleCatalog::standard();
    let g = grammar("segmented_mesh");
    let mut r = rng(1);
    let model = small_model(&mut r, 6, 2, 6, (0.2, 1.0), (1.0, 5.0));
    let allocation = allocation_from_groups(&model, &catalog, &[vec![0, 2], vec![1, 3], vec![4], vec![5]]);
    let terminal = terminal_topology(&g, &allocation, &catalog, &mut r);
    let spec = TerminalSpec::new(&allocation, &g);
    assert_eq!(spec.status(&terminal, &catalog), GraphStatus::Terminal);
    let (same, depth) = rollout(&terminal, &g, &spec, &catalog, 10, &mut r).unwrap().unwrap();
    assert_eq!(depth, 0);
    assert_eq!(same, terminal);
}

#[test]
fn simple_grammar_reaches_two_connected_modules() {
    let catalog = ModuleCatalog::standard();
    let g = grammar("simple");
    let mut r = rng(2);
    let model = small_model(&mut r, 4, 1, 4, (0.2, 1.0), (1.0, 5.0));
    let allocation = allocation_from_groups(&model, &catalog, &[vec![0, 1], vec![2, 3]]);
    let spec = TerminalSpec::new(&allocation, &g);
    assert_eq!(spec.required_modules(), 2);
    let mut reached = 0;
    for _ in 0..50 {
        if let Some((t, depth)) = rollout(&g.start_graph, &g, &spec, &catalog, 200, &mut r).unwrap() {
            reached += 1;
            let ms: Vec<_> = t.vertices().filter(|(_, l)| *l == "M").map(|(v, _)| v).collect();
            assert_eq!(ms.len(), 2);
            assert!(t.mutually_reachable(&ms));
            // One switch and two modules at least.
            assert!(depth >= 3);
        }
    }
    assert!(reached > 0);
}

#[test]
fn overshooting_the_module_count_fails() {
    let catalog = ModuleCatalog::standard();
    let g = grammar("simple");
    let mut r = rng(3);
    let model = small_model(&mut r, 2, 1, 1, (0.2, 1.0), (1.0, 5.0));
    let allocation = allocation_from_groups(&model, &catalog, &[vec![0, 1]]);
    let spec = TerminalSpec::new(&allocation, &g);
    let mut t = TopologyGraph::new();
    let s = t.add_vertex("S");
    for _ in 0..2 {
        let m = t.add_vertex("M");
        t.add_link(s, m).unwrap();
    }
    // The grammar never deletes modules, so two can never become one.
    assert_eq!(spec.status(&t, &catalog), GraphStatus::Failed);
}

#[test]
fn short_depth_cap_fails_large_requirements() {
    let catalog = ModuleCatalog::standard();
    let g = grammar("segmented_mesh");
    let mut r = rng(4);
    let model = small_model(&mut r, 22, 2, 10, (0.2, 1.0), (1.0, 5.0));
    let groups: Vec<Vec<usize>> = (0..22).map(|i| vec![i]).collect();
    let allocation = allocation_from_groups(&model, &catalog, &groups);
    let spec = TerminalSpec::new(&allocation, &g);
    for _ in 0..20 {
        assert!(rollout(&g.start_graph, &g, &spec, &catalog, 5, &mut r).unwrap().is_none());
    }
}

fn four_module_case() -> (netgap::alloc::AllocationSolution, ModuleCatalog) {
    let catalog = ModuleCatalog::standard();
    let mut r = rng(6);
    let model = small_model(&mut r, 8, 2, 10, (0.2, 1.0), (1.0, 5.0));
    let allocation = allocation_from_groups(&model, &catalog, &[vec![0, 2], vec![4, 6], vec![1, 3], vec![5, 7]]);
    (allocation, catalog)
}

#[test]
fn one_epoch_runs_one_rollout() {
    let (allocation, catalog) = four_module_case();
    let g = grammar("segmented_mesh");
    let config = small_config(1);
    let input = SearchInput {
        grammar: &g,
        allocation: &allocation,
        catalog: &catalog,
        config: &config,
        start: None,
    };
    let result = search(&input, 1).unwrap();
    assert_eq!(result.epochs, 1);
    assert!(result.candidates.len() <= 1);
    assert_eq!(result.tree_nodes, 2);
}

#[test]
fn same_seed_same_search() {
    let (allocation, catalog) = four_module_case();
    let g = grammar("segmented_mesh");
    for parallel in [1, 4] {
        let mut config = small_config(150);
        config.sp2.parallel_rollouts = parallel;
        let input = SearchInput {
            grammar: &g,
            allocation: &allocation,
            catalog: &catalog,
            config: &config,
            start: None,
        };
        let a = search(&input, 11).unwrap();
        let b = search(&input, 11).unwrap();
        assert_eq!(a.candidates, b.candidates);
        assert_eq!(a.tree_nodes, b.tree_nodes);
        let (ba, bb) = (a.best.as_ref().unwrap(), b.best.as_ref().unwrap());
        assert_eq!(ba.graph, bb.graph);
        assert_eq!(ba.mapping, bb.mapping);
    }
}

#[test]
fn candidates_reflect_their_reports() {
    let (allocation, catalog) = four_module_case();
    let g = grammar("segmented_mesh");
    let config = small_config(200);
    let input = SearchInput {
        grammar: &g,
        allocation: &allocation,
        catalog: &catalog,
        config: &config,
        start: None,
    };
    let result = search(&input, 5).unwrap();
    let best = result.best.as_ref().unwrap();
    assert!(result.candidates.iter().all(|c| c.reward <= best.row.reward));
    assert_eq!(best.row.feasible, best.report.gates.all_pass());
    assert_eq!(best.row.processing, 4);
    assert_eq!(best.row.processing, best.graph.count_label("M"));
    let epochs: Vec<usize> = result.candidates.iter().map(|c| c.epoch).collect();
    assert!(epochs.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn search_resumes_from_a_start_graph() {
    let (allocation, catalog) = four_module_case();
    let g = grammar("segmented_mesh");
    let mut start = TopologyGraph::new();
    let gw = start.add_vertex("G");
    let s1 = start.add_vertex("S");
    let s2 = start.add_vertex("S");
    start.add_link(gw, s1).unwrap();
    start.add_link(gw, s2).unwrap();
    let config = small_config(100);
    let input = SearchInput {
        grammar: &g,
        allocation: &allocation,
        catalog: &catalog,
        config: &config,
        start: Some(&start),
    };
    let result = search(&input, 2).unwrap();
    let best = result.best.unwrap();
    for (v, l) in start.vertices() {
        assert_eq!(best.graph.label(v), Some(l), "start vertex {v} survives");
    }
    assert!(best.graph.has_edge(gw, s1) && best.graph.has_edge(s2, gw));
}

#[test]
fn grammar_without_a_start_rule_stops_early() {
    let (allocation, catalog) = four_module_case();
    let g = parse_grammar("r0: S => S <-> M;").unwrap();
    let config = small_config(1000);
    let input = SearchInput {
        grammar: &g,
        allocation: &allocation,
        catalog: &catalog,
        config: &config,
        start: None,
    };
    let result = search(&input, 1).unwrap();
    assert!(result.candidates.is_empty());
    assert!(result.best.is_none());
    assert!(result.epochs < 1000);
}
