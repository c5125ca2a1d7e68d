//! Monte Carlo tree search over rule-application sequences.
//!
//! Each epoch selects a path with UCT, expands one untried action, rolls
//! out uniformly random actions until the graph is terminal, maps the
//! allocation onto it and backpropagates the mapping's reward. Failed
//! rollouts backpropagate 0.
//!
//! A graph is terminal when its processing-vertex counts per type equal the
//! allocation's and all processing vertices are connected. A rollout fails
//! on a dead end, at the depth cap, or as soon as a processing type that no
//! rule can remove exceeds its count.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alloc::AllocationSolution;
use crate::error::Result;
use crate::evaluate::{EvaluationReport, Evaluator, ModuleMapping};
use crate::grammar::Grammar;
use crate::mapping::solve_sp3;
use crate::model::{ModuleCatalog, ModuleKind, RunConfig};
use crate::topology::{apply_action, enumerate_actions, Action, TopologyGraph};

/// Structural requirements a graph must meet to be terminal.
#[derive(Clone, Debug)]
pub struct TerminalSpec {
    required: BTreeMap<String, usize>,
    /// Processing labels whose count can never decrease.
    monotone: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphStatus {
    Open,
    Terminal,
    /// No terminal graph is reachable.
    Failed,
}

impl TerminalSpec {
    pub fn new(allocation: &AllocationSolution, grammar: &Grammar) -> Self {
        let required = allocation.required_counts();
        let monotone = required
            .keys()
            .filter(|l| grammar.never_removes(l))
            .cloned()
            .collect();
        TerminalSpec { required, monotone }
    }

    pub fn required_modules(&self) -> usize {
        self.required.values().sum()
    }

    pub fn status(&self, graph: &TopologyGraph, catalog: &ModuleCatalog) -> GraphStatus {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        let mut processing = Vec::new();
        for (v, label) in graph.vertices() {
            if catalog.get(label).is_some_and(|m| m.kind == ModuleKind::Processing) {
                *counts.entry(label).or_insert(0) += 1;
                processing.push(v);
            }
        }
        for label in &self.monotone {
            if counts.get(label.as_str()).copied().unwrap_or(0) > self.required[label] {
                return GraphStatus::Failed;
            }
        }
        let matches = counts.len() == self.required.len()
            && self
                .required
                .iter()
                .all(|(l, &n)| counts.get(l.as_str()).copied() == Some(n));
        if matches && graph.mutually_reachable(&processing) {
            GraphStatus::Terminal
        } else {
            GraphStatus::Open
        }
    }
}

/// Applies uniformly random actions until the graph is terminal. Returns
/// the terminal graph and the number of actions applied, or `None` on
/// failure.
pub fn rollout(
    start: &TopologyGraph,
    grammar: &Grammar,
    spec: &TerminalSpec,
    catalog: &ModuleCatalog,
    depth_cap: usize,
    rng: &mut impl Rng,
) -> Result<Option<(TopologyGraph, usize)>> {
    let mut graph = start.clone();
    for depth in 0..=depth_cap {
        match spec.status(&graph, catalog) {
            GraphStatus::Terminal => return Ok(Some((graph, depth))),
            GraphStatus::Failed => return Ok(None),
            GraphStatus::Open if depth == depth_cap => return Ok(None),
            GraphStatus::Open => {}
        }
        let actions = enumerate_actions(&graph, grammar);
        let Some(action) = actions.choose(rng) else {
            return Ok(None);
        };
        graph = apply_action(&graph, grammar, action)?;
    }
    Ok(None)
}

/// UCB1 choice among children given `(total reward, visits)` per child.
/// Ties go to the lowest index. Returns `None` without children.
pub fn uct_select(parent_visits: u64, children: &[(f64, u64)], c: f64) -> Option<usize> {
    let ln_n = (parent_visits.max(1) as f64).ln();
    let mut best: Option<(usize, f64)> = None;
    for (i, &(w, n)) in children.iter().enumerate() {
        let value = if n == 0 {
            f64::INFINITY
        } else {
            w / n as f64 + c * (ln_n / n as f64).sqrt()
        };
        if best.is_none_or(|(_, b)| value > b) {
            best = Some((i, value));
        }
    }
    best.map(|(i, _)| i)
}

#[derive(Clone, Debug)]
pub struct SearchNode {
    pub graph: TopologyGraph,
    pub action: Option<Action>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Actions not yet expanded; `None` until the node is first expanded.
    pub untried: Option<Vec<Action>>,
    pub visits: u64,
    pub total_reward: f64,
    pub status: GraphStatus,
    /// Reward of a terminal node, computed once.
    pub reward: Option<f64>,
}

/// What selection does at a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    /// Expand one untried action.
    Expand,
    /// Descend into the given child (tree index).
    Descend(usize),
    /// Stop here: terminal, failed, or nothing left to try.
    Stop,
}

#[derive(Clone, Debug)]
pub struct SearchTree {
    pub nodes: Vec<SearchNode>,
}

impl SearchTree {
    pub fn new(root: TopologyGraph, status: GraphStatus) -> Self {
        SearchTree {
            nodes: vec![SearchNode {
                graph: root,
                action: None,
                parent: None,
                children: Vec::new(),
                untried: None,
                visits: 0,
                total_reward: 0.0,
                status,
                reward: None,
            }],
        }
    }

    /// Untried actions take precedence over revisiting children.
    pub fn step(&self, node: usize, c: f64) -> Step {
        let n = &self.nodes[node];
        if n.status != GraphStatus::Open {
            return Step::Stop;
        }
        match &n.untried {
            None => Step::Expand,
            Some(u) if !u.is_empty() => Step::Expand,
            _ => {
                // Children proven to fail are never revisited.
                let live: Vec<usize> = n
                    .children
                    .iter()
                    .copied()
                    .filter(|&ch| self.nodes[ch].status != GraphStatus::Failed)
                    .collect();
                let stats: Vec<(f64, u64)> = live
                    .iter()
                    .map(|&ch| (self.nodes[ch].total_reward, self.nodes[ch].visits))
                    .collect();
                uct_select(n.visits, &stats, c).map_or(Step::Stop, |i| Step::Descend(live[i]))
            }
        }
    }

    fn add_child(&mut self, parent: usize, action: Action, graph: TopologyGraph, status: GraphStatus) -> usize {
        let id = self.nodes.len();
        self.nodes.push(SearchNode {
            graph,
            action: Some(action),
            parent: Some(parent),
            children: Vec::new(),
            untried: None,
            visits: 0,
            total_reward: 0.0,
            status,
            reward: None,
        });
        self.nodes[parent].children.push(id);
        id
    }

    fn path_to(&self, mut node: usize) -> Vec<usize> {
        let mut path = vec![node];
        while let Some(p) = self.nodes[node].parent {
            path.push(p);
            node = p;
        }
        path
    }
}

/// One evaluated terminal graph. All fields are deterministic for a fixed
/// seed; wall-clock time is reported through [`SearchEvent`]s only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateRow {
    pub candidate: usize,
    pub epoch: usize,
    pub feasible: bool,
    pub reward: f64,
    pub latency_score: f64,
    pub mean_hops: f64,
    pub mean_disjoint_paths: f64,
    pub max_link_load: f64,
    pub max_node_load: f64,
    pub cost: f64,
    pub processing: usize,
    pub switches: usize,
    pub gateways: usize,
    pub links: usize,
    pub segments: usize,
}

impl CandidateRow {
    fn new(candidate: usize, epoch: usize, report: &EvaluationReport) -> Self {
        CandidateRow {
            candidate,
            epoch,
            feasible: report.gates.all_pass(),
            reward: report.reward,
            latency_score: report.latency_score,
            mean_hops: report.mean_hops,
            mean_disjoint_paths: report.mean_disjoint_paths,
            max_link_load: report.max_link_load,
            max_node_load: report.max_node_load,
            cost: report.cost,
            processing: report.processing_vertices,
            switches: report.switch_vertices,
            gateways: report.gateway_vertices,
            links: report.links,
            segments: report.segments,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub row: CandidateRow,
    pub graph: TopologyGraph,
    pub mapping: ModuleMapping,
    pub report: EvaluationReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SearchEvent {
    Started {
        epochs: usize,
        required_modules: usize,
        depth_cap: usize,
    },
    Candidate {
        epoch: usize,
        candidate: usize,
        reward: f64,
        feasible: bool,
        elapsed_s: f64,
    },
    Progress {
        epoch: usize,
        best_reward: f64,
        candidates: usize,
        feasible: usize,
        tree_nodes: usize,
        elapsed_s: f64,
    },
    Finished {
        epochs: usize,
        candidates: usize,
        feasible: usize,
        best_reward: f64,
        first_feasible_s: Option<f64>,
        elapsed_s: f64,
    },
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    /// Highest-reward candidate; among equal rewards the earliest.
    pub best: Option<Candidate>,
    pub candidates: Vec<CandidateRow>,
    pub epochs: usize,
    pub tree_nodes: usize,
    pub wall_time_s: f64,
    pub first_feasible_s: Option<f64>,
}

impl SearchResult {
    pub fn feasible_best(&self) -> Option<&Candidate> {
        self.best.as_ref().filter(|b| b.row.feasible)
    }
}

/// Default rollout depth cap: four actions per required module and per
/// expected switch, budgeting one switch per module.
pub fn default_depth_cap(required_modules: usize) -> usize {
    4 * (required_modules + required_modules)
}

struct Job {
    leaf: usize,
    path: Vec<usize>,
    seed: u64,
}

struct Outcome {
    reward: f64,
    candidate: Option<(TopologyGraph, ModuleMapping, EvaluationReport)>,
}

pub struct SearchInput<'a> {
    pub grammar: &'a Grammar,
    pub allocation: &'a AllocationSolution,
    pub catalog: &'a ModuleCatalog,
    pub config: &'a RunConfig,
    /// Graph to start from; the grammar's start graph when `None`.
    pub start: Option<&'a TopologyGraph>,
}

pub fn search(input: &SearchInput<'_>, seed: u64) -> Result<SearchResult> {
    search_with_events(input, seed, &mut |_| {})
}

pub fn search_with_events(
    input: &SearchInput<'_>,
    seed: u64,
    sink: &mut dyn FnMut(&SearchEvent),
) -> Result<SearchResult> {
    run_search(input, seed, sink).map(|(result, _)| result)
}

fn run_search(
    input: &SearchInput<'_>,
    seed: u64,
    sink: &mut dyn FnMut(&SearchEvent),
) -> Result<(SearchResult, SearchTree)> {
    let SearchInput {
        grammar,
        allocation,
        catalog,
        config,
        ..
    } = *input;
    let sp2 = &config.sp2;
    let started = Instant::now();
    let spec = TerminalSpec::new(allocation, grammar);
    let depth_cap = sp2
        .rollout_depth_cap
        .unwrap_or_else(|| default_depth_cap(spec.required_modules()));
    let root = input.start.unwrap_or(&grammar.start_graph).clone();
    let root_status = spec.status(&root, catalog);
    let mut tree = SearchTree::new(root, root_status);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sink(&SearchEvent::Started {
        epochs: sp2.max_epochs,
        required_modules: spec.required_modules(),
        depth_cap,
    });

    let mut rows: Vec<CandidateRow> = Vec::new();
    let mut best: Option<Candidate> = None;
    let mut feasible = 0usize;
    let mut first_feasible_s = None;
    let batch = sp2.parallel_rollouts.max(1);
    let progress_every = (sp2.max_epochs / 20).max(1);
    let mut epoch = 0;
    while epoch < sp2.max_epochs && tree.nodes[0].status != GraphStatus::Failed {
        let mut jobs = Vec::with_capacity(batch);
        while jobs.len() < batch
            && epoch + jobs.len() < sp2.max_epochs
            && tree.nodes[0].status != GraphStatus::Failed
        {
            let leaf = select_and_expand(&mut tree, input, &spec, &mut rng)?;
            let path = tree.path_to(leaf);
            // Visits count immediately so concurrent selections spread out.
            for &n in &path {
                tree.nodes[n].visits += 1;
            }
            jobs.push(Job {
                leaf,
                path,
                seed: rng.gen(),
            });
        }
        let outcomes: Vec<Result<Outcome>> = if jobs.len() == 1 {
            vec![simulate(&tree, &jobs[0], input, &spec, depth_cap)]
        } else {
            jobs.par_iter()
                .map(|job| simulate(&tree, job, input, &spec, depth_cap))
                .collect()
        };
        for (job, outcome) in jobs.iter().zip(outcomes) {
            let outcome = outcome?;
            epoch += 1;
            let leaf = &mut tree.nodes[job.leaf];
            if leaf.status == GraphStatus::Terminal && leaf.reward.is_none() {
                leaf.reward = Some(outcome.reward);
            }
            for &n in &job.path {
                tree.nodes[n].total_reward += outcome.reward;
            }
            if let Some((graph, mapping, report)) = outcome.candidate {
                let row = CandidateRow::new(rows.len(), epoch, &report);
                let elapsed_s = started.elapsed().as_secs_f64();
                if row.feasible {
                    feasible += 1;
                    first_feasible_s.get_or_insert(elapsed_s);
                }
                sink(&SearchEvent::Candidate {
                    epoch,
                    candidate: row.candidate,
                    reward: row.reward,
                    feasible: row.feasible,
                    elapsed_s,
                });
                let improves = best.as_ref().is_none_or(|b| row.reward > b.row.reward);
                rows.push(row.clone());
                if improves {
                    best = Some(Candidate {
                        row,
                        graph,
                        mapping,
                        report,
                    });
                }
            }
            if epoch % progress_every == 0 {
                sink(&SearchEvent::Progress {
                    epoch,
                    best_reward: best.as_ref().map_or(0.0, |b| b.row.reward),
                    candidates: rows.len(),
                    feasible,
                    tree_nodes: tree.nodes.len(),
                    elapsed_s: started.elapsed().as_secs_f64(),
                });
            }
        }
    }
    let wall_time_s = started.elapsed().as_secs_f64();
    sink(&SearchEvent::Finished {
        epochs: epoch,
        candidates: rows.len(),
        feasible,
        best_reward: best.as_ref().map_or(0.0, |b| b.row.reward),
        first_feasible_s,
        elapsed_s: wall_time_s,
    });
    let result = SearchResult {
        best,
        candidates: rows,
        epochs: epoch,
        tree_nodes: tree.nodes.len(),
        wall_time_s,
        first_feasible_s,
    };
    Ok((result, tree))
}

/// Walks down from the root and returns the node to simulate from,
/// expanding one child on the way if any node has untried actions.
fn select_and_expand(
    tree: &mut SearchTree,
    input: &SearchInput<'_>,
    spec: &TerminalSpec,
    rng: &mut impl Rng,
) -> Result<usize> {
    let c = input.config.sp2.uct_c;
    let mut node = 0;
    loop {
        match tree.step(node, c) {
            Step::Stop => {
                // An open node that cannot step has no live continuation.
                if tree.nodes[node].status == GraphStatus::Open {
                    tree.nodes[node].status = GraphStatus::Failed;
                }
                return Ok(node);
            }
            Step::Descend(child) => node = child,
            Step::Expand => {
                if tree.nodes[node].untried.is_none() {
                    let mut actions = enumerate_actions(&tree.nodes[node].graph, input.grammar);
                    let cap = input.config.sp2.max_untried;
                    if actions.len() > cap {
                        let mut keep = index::sample(rng, actions.len(), cap).into_vec();
                        keep.sort_unstable();
                        actions = keep.into_iter().map(|i| actions[i].clone()).collect();
                    }
                    tree.nodes[node].untried = Some(actions);
                    continue;
                }
                let untried = tree.nodes[node].untried.as_mut().expect("enumerated");
                let action = untried.swap_remove(rng.gen_range(0..untried.len()));
                let graph = apply_action(&tree.nodes[node].graph, input.grammar, &action)?;
                let status = spec.status(&graph, input.catalog);
                return Ok(tree.add_child(node, action, graph, status));
            }
        }
    }
}

fn simulate(
    tree: &SearchTree,
    job: &Job,
    input: &SearchInput<'_>,
    spec: &TerminalSpec,
    depth_cap: usize,
) -> Result<Outcome> {
    let leaf = &tree.nodes[job.leaf];
    let none = Outcome {
        reward: 0.0,
        candidate: None,
    };
    match leaf.status {
        GraphStatus::Failed => return Ok(none),
        GraphStatus::Terminal => {
            if let Some(reward) = leaf.reward {
                return Ok(Outcome {
                    reward,
                    candidate: None,
                });
            }
        }
        GraphStatus::Open => {}
    }
    let mut rng = ChaCha8Rng::seed_from_u64(job.seed);
    let terminal = if leaf.status == GraphStatus::Terminal {
        Some(leaf.graph.clone())
    } else {
        rollout(&leaf.graph, input.grammar, spec, input.catalog, depth_cap, &mut rng)?.map(|(g, _)| g)
    };
    let Some(graph) = terminal else {
        return Ok(none);
    };
    let evaluator = Evaluator::new(&graph, input.allocation, input.catalog, input.config)?;
    let mapped = solve_sp3(&evaluator, input.catalog, &input.config.sp3, &mut rng)?;
    drop(evaluator);
    Ok(Outcome {
        reward: mapped.report.reward,
        candidate: Some((graph, mapped.mapping, mapped.report)),
    })
}
