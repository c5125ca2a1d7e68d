//! Process allocation: which processing modules to include and which
//! module hosts each process.
//!
//! A candidate is a two-part genome over `q` candidate module slots: an
//! inclusion flag per slot and a slot index per process. Constraints are
//! checked as violation magnitudes so that infeasible genomes can still be
//! ranked:
//!
//! * compute: `sum(r_i) <= w_j` per slot;
//! * interfaces: outgoing and incoming bandwidth of messages whose
//!   endpoints sit on different slots, at most `v_j` each way. Messages
//!   between co-located processes use no interface bandwidth;
//! * parts: a slot hosts processes of a single part;
//! * every process sits on an included slot.

mod ga;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ApplicationModel, ModuleCatalog, ModuleSpec, Sp1Config};

pub use ga::{solve_sp1, solve_with_problem};

/// Magnitudes below this are rounding noise and count as satisfied.
const TOLERANCE: f64 = 1e-9;

/// Relative margin keeping tightened loads strictly below the threshold.
const STRICT_MARGIN: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AllocationGenome {
    pub inclusion: Vec<bool>,
    pub assignment: Vec<usize>,
}

impl AllocationGenome {
    pub fn included_slots(&self) -> impl Iterator<Item = usize> + '_ {
        self.inclusion
            .iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .map(|(j, _)| j)
    }

    /// True when every assignment entry names an included slot.
    pub fn is_valid(&self) -> bool {
        self.assignment
            .iter()
            .all(|&j| self.inclusion.get(j).copied().unwrap_or(false))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    ComputeOverflow,
    OutBandwidthOverflow,
    InBandwidthOverflow,
    /// Number of extra parts sharing a slot.
    PartMixing,
    /// Number of processes assigned to an excluded slot.
    ExcludedSlot,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub slot: usize,
    pub magnitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

impl Feasibility {
    pub fn total_magnitude(&self) -> f64 {
        self.violations.iter().fold(0.0, |acc, v| acc + v.magnitude)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// Minimize included module cost.
    Primary,
    /// Minimize the variance of compute utilization across included slots.
    Secondary,
}

/// Objective and total violation of a genome. Candidates are ranked
/// feasibility-first: lower violation wins, then lower objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fitness {
    pub violation: f64,
    pub objective: f64,
    /// `objective + penalty * violation`.
    pub score: f64,
}

impl Fitness {
    pub fn is_feasible(&self) -> bool {
        self.violation == 0.0
    }

    pub fn rank_cmp(&self, other: &Fitness) -> std::cmp::Ordering {
        self.violation
            .total_cmp(&other.violation)
            .then(self.objective.total_cmp(&other.objective))
    }
}

/// Per-slot resource use of a genome.
#[derive(Clone, Debug, PartialEq)]
pub struct SlotLoads {
    pub compute_mops: Vec<f64>,
    pub out_mbps: Vec<f64>,
    pub in_mbps: Vec<f64>,
    /// Distinct parts hosted per slot.
    pub parts: Vec<usize>,
}

/// Candidate slots for a catalog, processing types assigned round-robin.
pub fn candidate_slots(catalog: &ModuleCatalog, q: usize) -> Vec<ModuleSpec> {
    let types: Vec<&ModuleSpec> = catalog.processing_types().collect();
    (0..q).map(|j| types[j % types.len()].clone()).collect()
}

/// One allocation instance: a model, its candidate slots and the factor
/// applied to every slot capacity.
#[derive(Clone, Debug)]
pub struct AllocationProblem<'a> {
    model: &'a ApplicationModel,
    slots: Vec<ModuleSpec>,
    capacity_scale: f64,
    penalty: f64,
    demands: Vec<f64>,
    parts: Vec<usize>,
    n_parts: usize,
    members: Vec<Vec<usize>>,
    flows: Vec<(usize, usize, f64)>,
}

impl<'a> AllocationProblem<'a> {
    pub fn new(
        model: &'a ApplicationModel,
        slots: Vec<ModuleSpec>,
        capacity_scale: f64,
        penalty: f64,
    ) -> Result<Self> {
        if slots.is_empty() {
            return Err(Error::Config("at least one candidate slot is required".into()));
        }
        if !(capacity_scale > 0.0) {
            return Err(Error::Config("capacity scale must be positive".into()));
        }
        let parts = model.process_parts();
        let n_parts = model.parts().len();
        let mut members = vec![Vec::new(); n_parts];
        for (i, &p) in parts.iter().enumerate() {
            members[p].push(i);
        }
        Ok(AllocationProblem {
            model,
            slots,
            capacity_scale,
            penalty,
            demands: model.processes().iter().map(|p| p.compute_demand_mops).collect(),
            parts,
            n_parts,
            members,
            flows: model
                .flows()
                .iter()
                .map(|f| (f.src, f.dst, f.bandwidth_mbps))
                .collect(),
        })
    }

    /// Builds the problem described by a run configuration: `q` round-robin
    /// slots, capacities tightened to just below the overload threshold if
    /// requested and the penalty defaulting to ten times the catalog cost.
    pub fn from_config(
        model: &'a ApplicationModel,
        catalog: &ModuleCatalog,
        sp1: &Sp1Config,
        overload_threshold: f64,
    ) -> Result<Self> {
        let scale = if sp1.tighten_capacities {
            overload_threshold * (1.0 - STRICT_MARGIN)
        } else {
            1.0
        };
        let penalty = sp1.penalty.unwrap_or(10.0 * catalog.total_cost());
        Self::new(
            model,
            candidate_slots(catalog, sp1.candidate_module_slots),
            scale,
            penalty,
        )
    }

    pub fn model(&self) -> &'a ApplicationModel {
        self.model
    }

    pub fn slots(&self) -> &[ModuleSpec] {
        &self.slots
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    pub fn process_count(&self) -> usize {
        self.demands.len()
    }

    pub fn capacity_scale(&self) -> f64 {
        self.capacity_scale
    }

    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    pub(crate) fn demands(&self) -> &[f64] {
        &self.demands
    }

    pub(crate) fn process_part(&self, i: usize) -> usize {
        self.parts[i]
    }

    pub(crate) fn part_members(&self, part: usize) -> &[usize] {
        &self.members[part]
    }

    pub fn compute_capacity(&self, slot: usize) -> f64 {
        self.slots[slot].compute_capacity_mops * self.capacity_scale
    }

    pub fn link_capacity(&self, slot: usize) -> f64 {
        self.slots[slot].link_bandwidth_mbps * self.capacity_scale
    }

    /// Rejects instances no genome can satisfy: total demand above the
    /// total scaled capacity, or a process larger than every slot.
    pub fn check_satisfiable(&self) -> Result<()> {
        let total: f64 = self.demands.iter().sum();
        let capacity: f64 = (0..self.slots.len()).map(|j| self.compute_capacity(j)).sum();
        if total > capacity + TOLERANCE {
            return Err(Error::Infeasible(format!(
                "total compute demand {total:.3} Mops exceeds the {capacity:.3} Mops of {} candidate slots",
                self.slots.len()
            )));
        }
        let largest = (0..self.slots.len())
            .map(|j| self.compute_capacity(j))
            .fold(0.0, f64::max);
        if let Some(p) = self
            .model
            .processes()
            .iter()
            .find(|p| p.compute_demand_mops > largest + TOLERANCE)
        {
            return Err(Error::Infeasible(format!(
                "process {} needs {} Mops, more than any slot offers ({largest:.3})",
                p.id, p.compute_demand_mops
            )));
        }
        Ok(())
    }

    fn check_shape(&self, genome: &AllocationGenome) -> Result<()> {
        if genome.inclusion.len() != self.slots.len() {
            return Err(Error::Shape(format!(
                "inclusion has {} entries, expected {}",
                genome.inclusion.len(),
                self.slots.len()
            )));
        }
        if genome.assignment.len() != self.demands.len() {
            return Err(Error::Shape(format!(
                "assignment has {} entries, expected {}",
                genome.assignment.len(),
                self.demands.len()
            )));
        }
        if let Some(&j) = genome.assignment.iter().find(|&&j| j >= self.slots.len()) {
            return Err(Error::Shape(format!("assignment names slot {j} of {}", self.slots.len())));
        }
        Ok(())
    }

    pub fn loads(&self, genome: &AllocationGenome) -> Result<SlotLoads> {
        self.check_shape(genome)?;
        Ok(self.loads_unchecked(genome))
    }

    fn loads_unchecked(&self, genome: &AllocationGenome) -> SlotLoads {
        let q = self.slots.len();
        let a = &genome.assignment;
        let mut compute = vec![0.0; q];
        let mut out = vec![0.0; q];
        let mut inc = vec![0.0; q];
        for (i, &j) in a.iter().enumerate() {
            compute[j] += self.demands[i];
        }
        for &(s, d, bw) in &self.flows {
            if a[s] != a[d] {
                out[a[s]] += bw;
                inc[a[d]] += bw;
            }
        }
        let words = self.n_parts.div_ceil(64).max(1);
        let mut bits = vec![0u64; q * words];
        for (i, &j) in a.iter().enumerate() {
            let p = self.parts[i];
            bits[j * words + p / 64] |= 1 << (p % 64);
        }
        let parts = (0..q)
            .map(|j| {
                bits[j * words..(j + 1) * words]
                    .iter()
                    .map(|w| w.count_ones() as usize)
                    .sum()
            })
            .collect();
        SlotLoads {
            compute_mops: compute,
            out_mbps: out,
            in_mbps: inc,
            parts,
        }
    }

    pub fn check_feasibility(&self, genome: &AllocationGenome) -> Result<Feasibility> {
        self.check_shape(genome)?;
        let violations = self.violations(genome, &self.loads_unchecked(genome));
        Ok(Feasibility {
            feasible: violations.is_empty(),
            violations,
        })
    }

    fn violations(&self, genome: &AllocationGenome, loads: &SlotLoads) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |kind, slot, magnitude: f64| {
            if magnitude > TOLERANCE {
                out.push(Violation {
                    kind,
                    slot,
                    magnitude,
                });
            }
        };
        for j in 0..self.slots.len() {
            let link = self.link_capacity(j);
            push(ViolationKind::ComputeOverflow, j, loads.compute_mops[j] - self.compute_capacity(j));
            push(ViolationKind::OutBandwidthOverflow, j, loads.out_mbps[j] - link);
            push(ViolationKind::InBandwidthOverflow, j, loads.in_mbps[j] - link);
            push(ViolationKind::PartMixing, j, loads.parts[j].saturating_sub(1) as f64);
            if !genome.inclusion[j] {
                let stranded = genome.assignment.iter().filter(|&&s| s == j).count();
                push(ViolationKind::ExcludedSlot, j, stranded as f64);
            }
        }
        out
    }

    pub fn cost(&self, genome: &AllocationGenome) -> f64 {
        genome
            .included_slots()
            .map(|j| self.slots[j].cost)
            .sum()
    }

    /// Population variance of compute utilization over included slots.
    pub fn utilization_variance(&self, genome: &AllocationGenome, loads: &SlotLoads) -> f64 {
        let utils: Vec<f64> = genome
            .included_slots()
            .map(|j| loads.compute_mops[j] / self.slots[j].compute_capacity_mops)
            .collect();
        if utils.is_empty() {
            return 0.0;
        }
        let n = utils.len() as f64;
        let mean = utils.iter().sum::<f64>() / n;
        utils.iter().map(|u| (u - mean).powi(2)).sum::<f64>() / n
    }

    pub fn evaluate(&self, genome: &AllocationGenome, phase: Phase) -> Result<Fitness> {
        self.check_shape(genome)?;
        Ok(self.evaluate_unchecked(genome, phase))
    }

    pub(crate) fn evaluate_unchecked(&self, genome: &AllocationGenome, phase: Phase) -> Fitness {
        let loads = self.loads_unchecked(genome);
        let violation = self
            .violations(genome, &loads)
            .iter()
            .fold(0.0, |acc, v| acc + v.magnitude);
        let objective = match phase {
            Phase::Primary => self.cost(genome),
            Phase::Secondary => self.utilization_variance(genome, &loads),
        };
        Fitness {
            violation,
            objective,
            score: objective + self.penalty * violation,
        }
    }

    /// Penalized scalar fitness, lower is better.
    pub fn fitness(&self, genome: &AllocationGenome, phase: Phase) -> Result<f64> {
        Ok(self.evaluate(genome, phase)?.score)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllocatedModule {
    pub slot: usize,
    pub module_type: String,
    /// The part hosted, `None` for a module that mixes parts.
    pub part: Option<String>,
    pub processes: Vec<String>,
    pub compute_load_mops: f64,
    /// Compute load over the unscaled capacity.
    pub utilization: f64,
    pub out_mbps: f64,
    pub in_mbps: f64,
}

/// Aggregated traffic between two included modules, by module ordinal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModuleTraffic {
    pub src: usize,
    pub dst: usize,
    pub mbps: f64,
    pub messages: usize,
}

/// The chosen modules and process placement. Module ordinals are positions
/// in `modules`, in slot order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllocationSolution {
    pub candidate_slots: usize,
    pub modules: Vec<AllocatedModule>,
    /// Process id to slot.
    pub process_assignment: BTreeMap<String, usize>,
    pub inter_module_traffic: Vec<ModuleTraffic>,
    pub cost: f64,
    pub utilization_variance: f64,
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

impl AllocationSolution {
    /// Describes `genome`, dropping included slots that host nothing.
    pub fn from_genome(problem: &AllocationProblem<'_>, genome: &AllocationGenome) -> Result<Self> {
        let feas = problem.check_feasibility(genome)?;
        let loads = problem.loads_unchecked(genome);
        let model = problem.model();
        let mut hosted: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &j) in genome.assignment.iter().enumerate() {
            hosted.entry(j).or_default().push(i);
        }
        let ordinal: BTreeMap<usize, usize> = hosted.keys().enumerate().map(|(k, &j)| (j, k)).collect();
        let modules = hosted
            .iter()
            .map(|(&j, procs)| {
                let spec = &problem.slots()[j];
                let part = &model.processes()[procs[0]].part;
                let mixed = procs.iter().any(|&i| &model.processes()[i].part != part);
                AllocatedModule {
                    slot: j,
                    module_type: spec.type_name.clone(),
                    part: (!mixed).then(|| part.clone()),
                    processes: procs.iter().map(|&i| model.processes()[i].id.clone()).collect(),
                    compute_load_mops: loads.compute_mops[j],
                    utilization: loads.compute_mops[j] / spec.compute_capacity_mops,
                    out_mbps: loads.out_mbps[j],
                    in_mbps: loads.in_mbps[j],
                }
            })
            .collect();
        let mut traffic: BTreeMap<(usize, usize), (f64, usize)> = BTreeMap::new();
        for f in model.flows() {
            let (a, b) = (ordinal[&genome.assignment[f.src]], ordinal[&genome.assignment[f.dst]]);
            if a != b {
                let e = traffic.entry((a, b)).or_default();
                e.0 += f.bandwidth_mbps;
                e.1 += 1;
            }
        }
        let used = AllocationGenome {
            inclusion: (0..genome.inclusion.len()).map(|j| hosted.contains_key(&j)).collect(),
            assignment: genome.assignment.clone(),
        };
        Ok(AllocationSolution {
            candidate_slots: genome.inclusion.len(),
            modules,
            process_assignment: genome
                .assignment
                .iter()
                .enumerate()
                .map(|(i, &j)| (model.processes()[i].id.clone(), j))
                .collect(),
            inter_module_traffic: traffic
                .into_iter()
                .map(|((src, dst), (mbps, messages))| ModuleTraffic {
                    src,
                    dst,
                    mbps,
                    messages,
                })
                .collect(),
            cost: problem.cost(&used),
            utilization_variance: problem.utilization_variance(&used, &loads),
            feasible: feas.feasible,
            violations: feas.violations,
        })
    }

    pub fn module_count(&self) -> usize {
        self.modules.len()
    }

    /// Number of modules per processing type label.
    pub fn required_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for m in &self.modules {
            *counts.entry(m.module_type.clone()).or_insert(0) += 1;
        }
        counts
    }

    /// Module ordinal hosting each process of `model`, aligned with
    /// `model.processes()`.
    pub fn module_of_processes(&self, model: &ApplicationModel) -> Result<Vec<usize>> {
        let by_slot: BTreeMap<usize, usize> = self
            .modules
            .iter()
            .enumerate()
            .map(|(k, m)| (m.slot, k))
            .collect();
        model
            .processes()
            .iter()
            .map(|p| {
                let slot = self.process_assignment.get(&p.id).ok_or_else(|| {
                    Error::Mapping(format!("process {} has no module in the allocation", p.id))
                })?;
                by_slot.get(slot).copied().ok_or_else(|| {
                    Error::Mapping(format!("process {} sits on unknown slot {slot}", p.id))
                })
            })
            .collect()
    }

    /// Distinct part names hosted by each module; empty for a mixed module.
    pub fn module_parts(&self) -> Vec<Option<&str>> {
        self.modules.iter().map(|m| m.part.as_deref()).collect()
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        crate::model::parse_json(text, Path::new("<string>"))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("allocation serializes")
    }
}

pub fn load_allocation(path: impl AsRef<Path>) -> Result<AllocationSolution> {
    crate::model::read_json(path.as_ref())
}

pub fn save_allocation(solution: &AllocationSolution, path: impl AsRef<Path>) -> Result<()> {
    crate::model::write_json(path.as_ref(), solution)
}
