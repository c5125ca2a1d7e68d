//! Two-phase genetic search over allocation genomes.
//!
//! The primary phase minimizes included module cost. The secondary phase
//! freezes the inclusion vector of the primary winner and rebalances the
//! assignment. Both phases rank feasibility-first and keep elites, so the
//! secondary result is never worse than its starting point.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    candidate_slots, AllocationGenome, AllocationProblem, AllocationSolution, Fitness, Phase,
};
use crate::error::{Error, Result};
use crate::model::{ApplicationModel, ModuleCatalog, RunConfig, Sp1Config};

/// Runs both phases and describes the winner. Fails when the instance is
/// unsatisfiable by construction.
pub fn solve_sp1(
    model: &ApplicationModel,
    catalog: &ModuleCatalog,
    config: &RunConfig,
    seed: u64,
) -> Result<AllocationSolution> {
    let sp1 = &config.sp1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if !sp1.per_part || model.parts().len() == 1 {
        let problem = AllocationProblem::from_config(model, catalog, sp1, config.overload_threshold)?;
        let (genome, _) = solve_with_problem(&problem, sp1, &mut rng)?;
        return AllocationSolution::from_genome(&problem, &genome);
    }

    let q = sp1.candidate_module_slots;
    let mut slots = Vec::new();
    let mut assignment = vec![0; model.processes().len()];
    let mut inclusion = Vec::new();
    for part in model.parts() {
        let sub = model.restrict_to_part(part)?;
        let problem = AllocationProblem::from_config(&sub, catalog, sp1, config.overload_threshold)?;
        let (genome, _) = solve_with_problem(&problem, sp1, &mut rng)?;
        let offset = slots.len();
        for (p, &j) in sub.processes().iter().zip(&genome.assignment) {
            let i = model.process_index(&p.id).expect("sub-model process exists");
            assignment[i] = offset + j;
        }
        inclusion.extend(genome.inclusion);
        slots.extend(candidate_slots(catalog, q));
    }
    let problem = AllocationProblem::from_config(model, catalog, sp1, config.overload_threshold)?;
    let merged = AllocationProblem::new(model, slots, problem.capacity_scale(), problem.penalty())?;
    AllocationSolution::from_genome(&merged, &AllocationGenome { inclusion, assignment })
}

/// Runs both phases on a prepared problem and returns the best genome.
pub fn solve_with_problem(
    problem: &AllocationProblem<'_>,
    sp1: &Sp1Config,
    rng: &mut ChaCha8Rng,
) -> Result<(AllocationGenome, Fitness)> {
    problem.check_satisfiable()?;
    if sp1.population == 0 {
        return Err(Error::Config("sp1.population must be >= 1".into()));
    }
    let mut population = vec![first_fit_decreasing(problem)];
    while population.len() < sp1.population {
        population.push(random_genome(problem, rng));
    }
    let (best, _) = evolve(problem, population, sp1.max_generations, sp1, Phase::Primary, rng);

    let mut population = vec![best.clone()];
    while population.len() < sp1.population {
        let mut g = best.clone();
        for _ in 0..rng.gen_range(1..=3) {
            mutate(problem, &mut g, Phase::Secondary, rng);
        }
        population.push(g);
    }
    let (best, _) = evolve(
        problem,
        population,
        sp1.secondary_generations,
        sp1,
        Phase::Secondary,
        rng,
    );
    let fitness = problem.evaluate_unchecked(&best, Phase::Primary);
    Ok((best, fitness))
}

fn evolve(
    problem: &AllocationProblem<'_>,
    mut population: Vec<AllocationGenome>,
    generations: usize,
    sp1: &Sp1Config,
    phase: Phase,
    rng: &mut ChaCha8Rng,
) -> (AllocationGenome, Fitness) {
    let size = population.len();
    let mut fitness = evaluate_all(problem, &population, phase);
    for _ in 0..generations {
        let order = ranking(&fitness);
        let mut next: Vec<AllocationGenome> = order
            .iter()
            .take(sp1.elitism.min(size))
            .map(|&i| population[i].clone())
            .collect();
        while next.len() < size {
            let a = &population[tournament(&fitness, sp1.tournament_size, rng)];
            let b = &population[tournament(&fitness, sp1.tournament_size, rng)];
            let (mut c1, mut c2) = if rng.gen_bool(sp1.crossover_rate) {
                crossover(a, b, phase, rng)
            } else {
                (a.clone(), b.clone())
            };
            for (child, other) in [(&mut c1, b), (&mut c2, a)] {
                repair(child, other, phase, rng);
                if rng.gen_bool(sp1.mutation_rate) {
                    mutate(problem, child, phase, rng);
                    repair(child, other, phase, rng);
                }
            }
            next.push(c1);
            if next.len() < size {
                next.push(c2);
            }
        }
        population = next;
        fitness = evaluate_all(problem, &population, phase);
    }
    let best = ranking(&fitness)[0];
    (population.swap_remove(best), fitness[best])
}

fn evaluate_all(problem: &AllocationProblem<'_>, population: &[AllocationGenome], phase: Phase) -> Vec<Fitness> {
    population
        .par_iter()
        .map(|g| problem.evaluate_unchecked(g, phase))
        .collect()
}

/// Indices from best to worst; equal fitness keeps population order.
fn ranking(fitness: &[Fitness]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitness.len()).collect();
    order.sort_by(|&a, &b| fitness[a].rank_cmp(&fitness[b]).then(a.cmp(&b)));
    order
}

fn tournament(fitness: &[Fitness], k: usize, rng: &mut impl Rng) -> usize {
    let mut best = rng.gen_range(0..fitness.len());
    for _ in 1..k {
        let c = rng.gen_range(0..fitness.len());
        if fitness[c].rank_cmp(&fitness[best]) == Ordering::Less {
            best = c;
        }
    }
    best
}

fn two_point<T: Clone>(a: &[T], b: &[T], rng: &mut impl Rng) -> (Vec<T>, Vec<T>) {
    let n = a.len();
    let mut i = rng.gen_range(0..=n);
    let mut j = rng.gen_range(0..=n);
    if i > j {
        std::mem::swap(&mut i, &mut j);
    }
    let mut c1 = a.to_vec();
    let mut c2 = b.to_vec();
    c1[i..j].clone_from_slice(&b[i..j]);
    c2[i..j].clone_from_slice(&a[i..j]);
    (c1, c2)
}

/// Two-point crossover applied to each genome part independently. The
/// secondary phase leaves inclusion untouched.
fn crossover(
    a: &AllocationGenome,
    b: &AllocationGenome,
    phase: Phase,
    rng: &mut impl Rng,
) -> (AllocationGenome, AllocationGenome) {
    let (i1, i2) = match phase {
        Phase::Primary => two_point(&a.inclusion, &b.inclusion, rng),
        Phase::Secondary => (a.inclusion.clone(), b.inclusion.clone()),
    };
    let (a1, a2) = two_point(&a.assignment, &b.assignment, rng);
    (
        AllocationGenome {
            inclusion: i1,
            assignment: a1,
        },
        AllocationGenome {
            inclusion: i2,
            assignment: a2,
        },
    )
}

fn included(g: &AllocationGenome) -> Vec<usize> {
    g.included_slots().collect()
}

/// Moves processes off excluded slots, preferring the other parent's gene
/// and falling back to a random included slot. The primary phase also
/// drops included slots that host nothing, since they only add cost.
fn repair(g: &mut AllocationGenome, other: &AllocationGenome, phase: Phase, rng: &mut impl Rng) {
    if !g.inclusion.iter().any(|&on| on) {
        let j = rng.gen_range(0..g.inclusion.len());
        g.inclusion[j] = true;
    }
    let on = included(g);
    for i in 0..g.assignment.len() {
        if !g.inclusion[g.assignment[i]] {
            let inherited = other.assignment[i];
            g.assignment[i] = if g.inclusion[inherited] {
                inherited
            } else {
                *on.choose(rng).expect("one slot included")
            };
        }
    }
    if phase == Phase::Primary {
        prune(g);
    }
}

fn prune(g: &mut AllocationGenome) {
    let mut used = vec![false; g.inclusion.len()];
    for &j in &g.assignment {
        used[j] = true;
    }
    g.inclusion = used;
}

/// One random change: toggle a slot (primary phase only), move a process,
/// or swap the slots of two processes.
fn mutate(problem: &AllocationProblem<'_>, g: &mut AllocationGenome, phase: Phase, rng: &mut impl Rng) {
    let m = g.assignment.len();
    let op = match phase {
        Phase::Primary => rng.gen_range(0..3),
        Phase::Secondary => rng.gen_range(1..3),
    };
    match op {
        0 => {
            let j = rng.gen_range(0..g.inclusion.len());
            if g.inclusion[j] {
                g.inclusion[j] = false;
                let on = included(g);
                if on.is_empty() {
                    g.inclusion[j] = true;
                    return;
                }
                for a in g.assignment.iter_mut().filter(|a| **a == j) {
                    *a = *on.choose(rng).expect("nonempty");
                }
            } else {
                g.inclusion[j] = true;
                let moves = rng.gen_range(1..=3.min(m));
                let anchor = rng.gen_range(0..m);
                let part = problem.process_part(anchor);
                g.assignment[anchor] = j;
                for _ in 1..moves {
                    let i = rng.gen_range(0..m);
                    if problem.process_part(i) == part {
                        g.assignment[i] = j;
                    }
                }
            }
        }
        1 => {
            let i = rng.gen_range(0..m);
            let part = problem.process_part(i);
            let mut hosts: Vec<usize> = g
                .assignment
                .iter()
                .enumerate()
                .filter(|&(k, _)| problem.process_part(k) == part)
                .map(|(_, &j)| j)
                .collect();
            hosts.sort_unstable();
            hosts.dedup();
            if hosts.len() < 2 {
                hosts = included(g);
            }
            g.assignment[i] = *hosts.choose(rng).expect("nonempty");
        }
        _ => {
            let i = rng.gen_range(0..m);
            let peers = problem.part_members(problem.process_part(i));
            let k = *peers.choose(rng).expect("part holds i");
            g.assignment.swap(i, k);
        }
    }
}

fn random_genome(problem: &AllocationProblem<'_>, rng: &mut impl Rng) -> AllocationGenome {
    let q = problem.slot_count();
    let mut order: Vec<usize> = (0..q).collect();
    order.shuffle(rng);
    let k = rng.gen_range(1..=q);
    let mut inclusion = vec![false; q];
    for &j in &order[..k] {
        inclusion[j] = true;
    }
    let on = &order[..k];
    let assignment = (0..problem.process_count())
        .map(|_| *on.choose(rng).expect("k >= 1"))
        .collect();
    let mut g = AllocationGenome {
        inclusion,
        assignment,
    };
    prune(&mut g);
    g
}

/// Greedy seed: processes by decreasing demand, each into the first open
/// slot of its part with spare compute, opening slots in index order.
/// When every slot is open the least-loaded slot of the part absorbs the
/// overflow.
fn first_fit_decreasing(problem: &AllocationProblem<'_>) -> AllocationGenome {
    let q = problem.slot_count();
    let demands = problem.demands();
    let mut order: Vec<usize> = (0..demands.len()).collect();
    order.sort_by(|&a, &b| demands[b].total_cmp(&demands[a]).then(a.cmp(&b)));
    let mut load = vec![0.0; q];
    let mut owner: Vec<Option<usize>> = vec![None; q];
    let mut assignment = vec![0; demands.len()];
    for i in order {
        let part = problem.process_part(i);
        let fits = |j: usize, load: &[f64]| load[j] + demands[i] <= problem.compute_capacity(j) + 1e-9;
        let slot = (0..q)
            .find(|&j| owner[j] == Some(part) && fits(j, &load))
            .or_else(|| (0..q).find(|&j| owner[j].is_none() && fits(j, &load)))
            .or_else(|| {
                (0..q)
                    .filter(|&j| owner[j].is_none() || owner[j] == Some(part))
                    .min_by(|&a, &b| load[a].total_cmp(&load[b]))
            })
            .unwrap_or_else(|| (0..q).min_by(|&a, &b| load[a].total_cmp(&load[b])).expect("q >= 1"));
        owner[slot].get_or_insert(part);
        load[slot] += demands[i];
        assignment[i] = slot;
    }
    let mut g = AllocationGenome {
        inclusion: vec![false; q],
        assignment,
    };
    prune(&mut g);
    g
}
