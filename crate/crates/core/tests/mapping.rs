mod common;

use std::collections::BTreeSet;

use netgap::evaluate::{evaluate, Evaluator};
use netgap::mapping::{ordered_crossover, scramble_mutation, solve_sp3, solve_sp3_for};
use netgap::model::{ModuleCatalog, RunConfig};
use proptest::prelude::*;
use rand::seq::SliceRandom;

use common::{
    allocation_from_groups, grammar, random_groups, rng, segmented_topology, small_model, sp3_exhaustive_reward,
    terminal_topology,
};

fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut rng(seed));
    p
}

fn is_permutation(p: &[usize]) -> bool {
    let set: BTreeSet<usize> = p.iter().copied().collect();
    set.len() == p.len() && p.iter().all(|&v| v < p.len())
}

proptest! {
    #[test]
    fn crossover_yields_permutations(n in 1usize..40, sa in any::<u64>(), sb in any::<u64>(), sr in any::<u64>()) {
        let a = permutation(n, sa);
        let b = permutation(n, sb);
        let child = ordered_crossover(&a, &b, &mut rng(sr));
        prop_assert!(is_permutation(&child));
        prop_assert_eq!(ordered_crossover(&a, &a, &mut rng(sr)), a.clone());
        // The kept slice of `a` is contiguous, so positions agreeing with
        // `a` include at least one.
        prop_assert!(child.iter().zip(&a).any(|(x, y)| x == y));
    }

    #[test]
    fn scramble_touches_one_window(n in 2usize..40, s in any::<u64>(), sr in any::<u64>()) {
        let before = permutation(n, s);
        let mut after = before.clone();
        scramble_mutation(&mut after, &mut rng(sr));
        prop_assert!(is_permutation(&after));
        let changed: Vec<usize> = (0..n).filter(|&i| before[i] != after[i]).collect();
        if let (Some(&lo), Some(&hi)) = (changed.first(), changed.last()) {
            let inside: BTreeSet<usize> = before[lo..=hi].iter().copied().collect();
            let shuffled: BTreeSet<usize> = after[lo..=hi].iter().copied().collect();
            prop_assert_eq!(inside, shuffled);
        }
    }
}

#[test]
fn sp3_finds_the_exhaustive_optimum_on_four_modules() {
    let catalog = ModuleCatalog::standard();
    let mut config = RunConfig::default();
    config.sp3.max_generations = 20;
    config.sp3.population = 30;
    let mut hits = 0;
    let mut tried = 0;
    for seed in 0..12u64 {
        let mut r = rng(seed);
        let model = small_model(&mut r, 8, 2, 12, (0.2, 1.0), (1.0, 10.0));
        let groups = random_groups(&mut r, &model, 4, true);
        if groups.len() != 4 {
            continue;
        }
        let allocation = allocation_from_groups(&model, &catalog, &groups);
        let topology = segmented_topology(&mut r, &allocation);
        let evaluator = Evaluator::new(&topology, &allocation, &catalog, &config).unwrap();
        let best = sp3_exhaustive_reward(&evaluator);
        if best == 0.0 {
            continue;
        }
        tried += 1;
        let found = solve_sp3(&evaluator, &catalog, &config.sp3, &mut r).unwrap();
        assert!(found.report.reward <= best + 1e-12);
        if (found.report.reward - best).abs() < 1e-9 {
            hits += 1;
        }
    }
    assert!(tried >= 5, "only {tried} instances had a passing mapping");
    assert_eq!(hits, tried);
}

#[test]
fn sp3_result_is_a_bijection_and_reproducible() {
    let catalog = ModuleCatalog::standard();
    let g = grammar("segmented_mesh");
    let config = RunConfig::default();
    let mut r = rng(5);
    let model = small_model(&mut r, 12, 2, 20, (0.2, 1.0), (1.0, 10.0));
    let groups = random_groups(&mut r, &model, 6, true);
    let allocation = allocation_from_groups(&model, &catalog, &groups);
    let topology = terminal_topology(&g, &allocation, &catalog, &mut r);

    let first = solve_sp3_for(&topology, &allocation, &catalog, &config, 9).unwrap();
    let second = solve_sp3_for(&topology, &allocation, &catalog, &config, 9).unwrap();
    assert_eq!(first, second);

    let placed: BTreeSet<_> = first.mapping.vertex_of_module.iter().copied().collect();
    assert_eq!(placed.len(), allocation.modules.len());
    for v in &placed {
        assert_eq!(topology.label(*v), Some("M"));
    }
    let again = evaluate(&topology, &allocation, &first.mapping, &catalog, &config).unwrap();
    assert_eq!(again, first.report);
    let evaluator = Evaluator::new(&topology, &allocation, &catalog, &config).unwrap();
    if evaluator.static_failure().is_none() {
        let gens = config.sp3.max_generations + 1;
        assert_eq!(first.evaluations, gens * config.sp3.population);
    } else {
        assert_eq!(first.evaluations, 1, "hopeless topologies are scored once");
    }
}
