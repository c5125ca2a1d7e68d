//! Module mapping: which processing vertex hosts each allocated module.
//!
//! Genomes are permutations: position `p` is the `p`-th processing vertex
//! in id order and its value the module placed there. Vertices and modules
//! of different processing types never mix, so crossover and mutation act
//! within each type's positions only.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::alloc::AllocationSolution;
use crate::error::Result;
use crate::evaluate::{EvaluationReport, Evaluator, ModuleMapping};
use crate::model::{ModuleCatalog, RunConfig, Sp3Config};
use crate::topology::{TopologyGraph, VertexId};

#[derive(Clone, Debug, PartialEq)]
pub struct MappingResult {
    pub mapping: ModuleMapping,
    pub report: EvaluationReport,
    pub evaluations: usize,
}

/// Positions and modules of one processing type.
struct Block {
    positions: Vec<usize>,
    modules: Vec<usize>,
}

fn blocks(evaluator: &Evaluator<'_>) -> Vec<Block> {
    let topology = evaluator.topology();
    let mut by_type: BTreeMap<&str, Block> = BTreeMap::new();
    for (p, &v) in evaluator.processing_vertices().iter().enumerate() {
        by_type
            .entry(topology.label(v).expect("live"))
            .or_insert_with(|| Block {
                positions: Vec::new(),
                modules: Vec::new(),
            })
            .positions
            .push(p);
    }
    for (k, m) in evaluator.allocation().modules.iter().enumerate() {
        if let Some(b) = by_type.get_mut(m.module_type.as_str()) {
            b.modules.push(k);
        }
    }
    by_type.into_values().collect()
}

/// Ordered crossover of two parents: the child keeps `a` on a random cut
/// of each block and fills the rest with `b`'s remaining values in `b`'s
/// order, starting after the cut.
pub fn ordered_crossover(a: &[usize], b: &[usize], rng: &mut impl Rng) -> Vec<usize> {
    let n = a.len();
    if n < 2 {
        return a.to_vec();
    }
    let mut i = rng.gen_range(0..n);
    let mut j = rng.gen_range(0..n);
    if i > j {
        std::mem::swap(&mut i, &mut j);
    }
    let mut child = vec![usize::MAX; n];
    child[i..=j].copy_from_slice(&a[i..=j]);
    let kept: std::collections::HashSet<usize> = a[i..=j].iter().copied().collect();
    let mut fill = (1..=n).map(|k| b[(j + k) % n]).filter(|v| !kept.contains(v));
    for k in 1..=n {
        let pos = (j + k) % n;
        if child[pos] == usize::MAX {
            child[pos] = fill.next().expect("enough values");
        }
    }
    child
}

/// Shuffles a random contiguous interval.
pub fn scramble_mutation(genome: &mut [usize], rng: &mut impl Rng) {
    let n = genome.len();
    if n < 2 {
        return;
    }
    let mut i = rng.gen_range(0..n);
    let mut j = rng.gen_range(0..n);
    if i > j {
        std::mem::swap(&mut i, &mut j);
    }
    if i == j {
        j = (i + 1).min(n - 1);
        i = j - 1;
    }
    genome[i..=j].shuffle(rng);
}

fn gather(genome: &[usize], block: &Block) -> Vec<usize> {
    block.positions.iter().map(|&p| genome[p]).collect()
}

fn scatter(genome: &mut [usize], block: &Block, values: &[usize]) {
    for (&p, &v) in block.positions.iter().zip(values) {
        genome[p] = v;
    }
}

fn crossover(a: &[usize], b: &[usize], blocks: &[Block], rng: &mut impl Rng) -> Vec<usize> {
    let mut child = a.to_vec();
    for block in blocks {
        let values = ordered_crossover(&gather(a, block), &gather(b, block), rng);
        scatter(&mut child, block, &values);
    }
    child
}

fn mutate(genome: &mut [usize], blocks: &[Block], rng: &mut impl Rng) {
    let candidates: Vec<&Block> = blocks.iter().filter(|b| b.positions.len() > 1).collect();
    if let Some(block) = candidates.choose(rng) {
        let mut values = gather(genome, block);
        scramble_mutation(&mut values, rng);
        scatter(genome, block, &values);
    }
}

fn random_genome(r: usize, blocks: &[Block], rng: &mut impl Rng) -> Vec<usize> {
    let mut g = vec![0; r];
    for block in blocks {
        let mut values = block.modules.clone();
        values.shuffle(rng);
        scatter(&mut g, block, &values);
    }
    g
}

/// Heuristic seed. Parts are matched to segments by size, largest part
/// first; within a part, modules with the most traffic take the vertices
/// with the highest degree (ties by neighbor degree, then id).
fn greedy_genome(evaluator: &Evaluator<'_>, catalog: &ModuleCatalog) -> Vec<usize> {
    let topology = evaluator.topology();
    let allocation = evaluator.allocation();
    let vertices = evaluator.processing_vertices();
    let r = vertices.len();
    let segments = topology.segments(catalog).unwrap_or_default();
    let segment_of = |v: VertexId| segments.iter().position(|s| s.binary_search(&v).is_ok());

    let mut traffic = vec![0.0; allocation.modules.len()];
    for t in &allocation.inter_module_traffic {
        traffic[t.src] += t.mbps;
        traffic[t.dst] += t.mbps;
    }
    let mut parts: BTreeMap<Option<&str>, Vec<usize>> = BTreeMap::new();
    for (k, m) in allocation.modules.iter().enumerate() {
        parts.entry(m.part.as_deref()).or_default().push(k);
    }
    let mut parts: Vec<Vec<usize>> = parts.into_values().collect();
    parts.sort_by_key(|mods| std::cmp::Reverse(mods.len()));

    let strength = |v: VertexId| {
        let nbrs = topology.neighbors(v);
        let second: usize = nbrs.iter().map(|&w| topology.neighbor_count(w)).sum();
        (nbrs.len(), second)
    };
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| strength(vertices[b]).cmp(&strength(vertices[a])).then(a.cmp(&b)));

    let mut free: Vec<bool> = vec![true; r];
    let mut genome = vec![usize::MAX; r];
    let mut claimed = vec![false; segments.len()];
    for mut mods in parts {
        let size_of = |s: usize| {
            (0..r)
                .filter(|&p| free[p] && segment_of(vertices[p]) == Some(s))
                .count()
        };
        let target = (0..segments.len())
            .filter(|&s| !claimed[s] && size_of(s) >= mods.len())
            .min_by_key(|&s| (size_of(s), s))
            .or_else(|| (0..segments.len()).filter(|&s| !claimed[s]).max_by_key(|&s| (size_of(s), usize::MAX - s)));
        if let Some(s) = target {
            claimed[s] = true;
        }
        mods.sort_by(|&a, &b| traffic[b].total_cmp(&traffic[a]).then(a.cmp(&b)));
        for k in mods {
            let ty = &allocation.modules[k].module_type;
            let fits = |p: usize| free[p] && topology.label(vertices[p]) == Some(ty.as_str());
            let pick = order
                .iter()
                .copied()
                .find(|&p| fits(p) && target.is_some() && segment_of(vertices[p]) == target)
                .or_else(|| order.iter().copied().find(|&p| fits(p)));
            if let Some(p) = pick {
                free[p] = false;
                genome[p] = k;
            }
        }
    }
    genome
}

fn better(a: &EvaluationReport, b: &EvaluationReport) -> bool {
    a.reward.total_cmp(&b.reward) == Ordering::Greater
}

/// Searches mappings of the evaluator's topology. When no mapping can pass
/// the gates the greedy mapping's report is returned without a search.
pub fn solve_sp3(
    evaluator: &Evaluator<'_>,
    catalog: &ModuleCatalog,
    sp3: &Sp3Config,
    rng: &mut impl Rng,
) -> Result<MappingResult> {
    let vertices = evaluator.processing_vertices();
    let r = vertices.len();
    let mut evaluations = 0;
    if !evaluator.counts_match() {
        return Ok(MappingResult {
            mapping: ModuleMapping::default(),
            report: evaluator.evaluate(&ModuleMapping::default())?,
            evaluations: 1,
        });
    }
    let blocks = blocks(evaluator);
    let seed = greedy_genome(evaluator, catalog);
    let score = |g: &Vec<usize>| -> Result<EvaluationReport> {
        evaluator.evaluate(&ModuleMapping::from_permutation(vertices, g)?)
    };
    if evaluator.static_failure().is_some() || r <= 1 {
        return Ok(MappingResult {
            mapping: ModuleMapping::from_permutation(vertices, &seed)?,
            report: score(&seed)?,
            evaluations: 1,
        });
    }

    let size = sp3.population.max(1);
    let mut population = vec![seed];
    while population.len() < size {
        population.push(random_genome(r, &blocks, rng));
    }
    let evaluate_all = |pop: &[Vec<usize>]| -> Result<Vec<EvaluationReport>> {
        pop.par_iter().map(score).collect()
    };
    let mut reports = evaluate_all(&population)?;
    evaluations += population.len();
    let mut best = 0;
    for i in 1..reports.len() {
        if better(&reports[i], &reports[best]) {
            best = i;
        }
    }
    let mut best_genome = population[best].clone();
    let mut best_report = reports[best].clone();

    for _ in 0..sp3.max_generations {
        let rewards: Vec<f64> = reports.iter().map(|r| r.reward).collect();
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by(|&a, &b| rewards[b].total_cmp(&rewards[a]).then(a.cmp(&b)));
        let mut next: Vec<Vec<usize>> = order
            .iter()
            .take(sp3.elitism.min(size))
            .map(|&i| population[i].clone())
            .collect();
        while next.len() < size {
            let a = tournament(&rewards, sp3.tournament_size, rng);
            let b = tournament(&rewards, sp3.tournament_size, rng);
            let mut child = crossover(&population[a], &population[b], &blocks, rng);
            if rng.gen_bool(sp3.mutation_rate) {
                mutate(&mut child, &blocks, rng);
            }
            next.push(child);
        }
        population = next;
        reports = evaluate_all(&population)?;
        evaluations += population.len();
        for (g, rep) in population.iter().zip(&reports) {
            if better(rep, &best_report) {
                best_genome = g.clone();
                best_report = rep.clone();
            }
        }
    }
    Ok(MappingResult {
        mapping: ModuleMapping::from_permutation(vertices, &best_genome)?,
        report: best_report,
        evaluations,
    })
}

fn tournament(rewards: &[f64], k: usize, rng: &mut impl Rng) -> usize {
    let mut best = rng.gen_range(0..rewards.len());
    for _ in 1..k {
        let c = rng.gen_range(0..rewards.len());
        if rewards[c] > rewards[best] {
            best = c;
        }
    }
    best
}

/// Builds an evaluator for `topology` and searches its mappings.
pub fn solve_sp3_for(
    topology: &TopologyGraph,
    allocation: &AllocationSolution,
    catalog: &ModuleCatalog,
    config: &RunConfig,
    seed: u64,
) -> Result<MappingResult> {
    let evaluator = Evaluator::new(topology, allocation, catalog, config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    solve_sp3(&evaluator, catalog, &config.sp3, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_permutation(v: &[usize]) -> bool {
        let mut s = v.to_vec();
        s.sort_unstable();
        s == (0..v.len()).collect::<Vec<_>>()
    }

    #[test]
    fn operators_preserve_permutations() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..12 {
            for _ in 0..50 {
                let mut a: Vec<usize> = (0..n).collect();
                let mut b = a.clone();
                a.shuffle(&mut rng);
                b.shuffle(&mut rng);
                let mut c = ordered_crossover(&a, &b, &mut rng);
                assert!(is_permutation(&c));
                scramble_mutation(&mut c, &mut rng);
                assert!(is_permutation(&c));
            }
        }
    }

    #[test]
    fn ordered_crossover_keeps_a_slice_of_the_first_parent() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = vec![0, 1, 2, 3, 4, 5, 6];
        let b = vec![6, 5, 4, 3, 2, 1, 0];
        let c = ordered_crossover(&a, &b, &mut rng);
        let shared = a.iter().zip(&c).filter(|(x, y)| x == y).count();
        assert!(shared >= 1);
    }
}
