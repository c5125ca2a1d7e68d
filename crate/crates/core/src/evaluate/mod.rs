//! Scoring of a topology together with an allocation and a mapping of
//! allocated modules onto processing vertices.
//!
//! A candidate passes when its processing-vertex counts match the
//! allocation, every message can be routed, communicating modules have
//! enough disjoint paths and the parts occupy separate segments. Failing
//! candidates score 0. Passing candidates score the weighted average of a
//! latency score, a cost score and a path-redundancy score, each in
//! `[0, 1]`.

mod flow;
mod route;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::alloc::AllocationSolution;
use crate::error::{Error, Result};
use crate::model::{ApplicationModel, LatencyParams, ModuleCatalog, ModuleKind, RunConfig};
use crate::topology::{TopologyGraph, VertexId};

pub use flow::disjoint_paths;
pub use route::shortest_path;

/// Places allocated module `k` on processing vertex `vertex_of_module[k]`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleMapping {
    pub vertex_of_module: Vec<VertexId>,
}

impl ModuleMapping {
    pub fn new(vertex_of_module: Vec<VertexId>) -> Self {
        ModuleMapping { vertex_of_module }
    }

    /// Reads a permutation genome: position `p` is processing vertex
    /// `vertices[p]`, its value the module placed there.
    pub fn from_permutation(vertices: &[VertexId], genome: &[usize]) -> Result<Self> {
        if vertices.len() != genome.len() {
            return Err(Error::Mapping(format!(
                "genome of length {} for {} vertices",
                genome.len(),
                vertices.len()
            )));
        }
        let mut out = vec![None; genome.len()];
        for (p, &k) in genome.iter().enumerate() {
            match out.get_mut(k) {
                Some(slot @ None) => *slot = Some(vertices[p]),
                _ => return Err(Error::Mapping(format!("genome is not a permutation at {p}"))),
            }
        }
        Ok(ModuleMapping::new(out.into_iter().map(|v| v.expect("permutation")).collect()))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gates {
    pub module_count_ok: bool,
    pub disjoint_paths_ok: bool,
    pub segments_ok: bool,
    /// Every inter-module message has a route.
    pub routable: bool,
    /// No port overflow, or port limits are not enforced.
    pub ports_ok: bool,
}

impl Gates {
    pub fn all_pass(&self) -> bool {
        self.module_count_ok && self.disjoint_paths_ok && self.segments_ok && self.routable && self.ports_ok
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkLoad {
    pub src: VertexId,
    pub dst: VertexId,
    pub mbps: f64,
    pub capacity_mbps: f64,
    pub load: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeLoad {
    pub vertex: VertexId,
    pub module: usize,
    pub compute_mops: f64,
    pub utilization: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub gates: Gates,
    /// Why gates failed, one entry per failure.
    pub failures: Vec<String>,
    pub processing_vertices: usize,
    pub switch_vertices: usize,
    pub gateway_vertices: usize,
    pub links: usize,
    pub segments: usize,
    pub port_overflows: usize,
    /// Largest directed link load fraction.
    pub max_link_load: f64,
    /// Links loaded above the overload threshold.
    pub overloaded_links: usize,
    /// Mean vertex count of inter-module message routes.
    pub mean_hops: f64,
    pub latency_score: f64,
    pub cost: f64,
    pub cost_score: f64,
    pub mean_disjoint_paths: f64,
    pub dp_score: f64,
    pub max_node_load: f64,
    pub reward: f64,
    pub link_loads: Vec<LinkLoad>,
    pub node_loads: Vec<NodeLoad>,
}

/// Module costs plus `link_cost` per physical link.
pub fn topology_cost(topology: &TopologyGraph, catalog: &ModuleCatalog, link_cost: f64) -> f64 {
    let modules = topology
        .vertices()
        .fold(0.0, |acc, (_, l)| acc + catalog.get(l).map_or(0.0, |m| m.cost));
    modules + link_cost * topology.physical_link_count() as f64
}

/// `2 e^(1 - alpha x_l - beta o) / (gamma h)` clamped to `[0, 1]`. With no
/// inter-module traffic (`h <= 0`) the score is 1.
pub fn latency_score(x_l: f64, o: usize, h: f64, params: &LatencyParams) -> Result<f64> {
    if !(params.gamma > 0.0) {
        return Err(Error::Config("latency gamma must be positive".into()));
    }
    if h <= 0.0 {
        return Ok(1.0);
    }
    let raw = 2.0 * (1.0 - params.alpha * x_l - params.beta * o as f64).exp() / (params.gamma * h);
    Ok(raw.clamp(0.0, 1.0))
}

struct Route {
    path: Vec<VertexId>,
    edges: Vec<usize>,
    via_gateway: bool,
}

/// Everything about one topology that does not depend on the mapping,
/// computed once and shared by all mappings evaluated against it.
pub struct Evaluator<'a> {
    topology: &'a TopologyGraph,
    allocation: &'a AllocationSolution,
    catalog: &'a ModuleCatalog,
    config: &'a RunConfig,
    kinds: Vec<Option<ModuleKind>>,
    processing: Vec<VertexId>,
    ordinal: HashMap<VertexId, usize>,
    count_failure: Option<String>,
    segment_of: Vec<Option<usize>>,
    segments: usize,
    switches: usize,
    gateways: usize,
    links: usize,
    port_overflows: usize,
    cost: f64,
    edges: Vec<(VertexId, VertexId)>,
    edge_capacity: Vec<f64>,
    routes: Vec<Option<Route>>,
    disjoint: Vec<OnceLock<Option<usize>>>,
    module_part: Vec<Option<usize>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        topology: &'a TopologyGraph,
        allocation: &'a AllocationSolution,
        catalog: &'a ModuleCatalog,
        config: &'a RunConfig,
    ) -> Result<Self> {
        let kinds = topology.kinds(catalog)?;
        let kind_count = |k| kinds.iter().filter(|&&x| x == Some(k)).count();
        let processing: Vec<VertexId> = topology
            .vertex_ids()
            .filter(|&v| kinds[v as usize] == Some(ModuleKind::Processing))
            .collect();
        let ordinal = processing.iter().enumerate().map(|(i, &v)| (v, i)).collect();

        let mut present: BTreeMap<String, usize> = BTreeMap::new();
        for &v in &processing {
            *present.entry(topology.label(v).expect("live").to_string()).or_insert(0) += 1;
        }
        let required = allocation.required_counts();
        let count_failure = (present != required)
            .then(|| format!("processing vertices {present:?}, allocation needs {required:?}"));

        let segment_list = topology.segments(catalog)?;
        let mut segment_of = vec![None; topology.next_id() as usize];
        for (i, seg) in segment_list.iter().enumerate() {
            for &v in seg {
                segment_of[v as usize] = Some(i);
            }
        }

        let edges: Vec<(VertexId, VertexId)> = topology.edges().collect();
        let bandwidth = |v: VertexId| {
            catalog
                .get(topology.label(v).expect("live"))
                .map(|m| m.link_bandwidth_mbps)
                .unwrap_or(0.0)
        };
        let edge_capacity = edges.iter().map(|&(u, w)| bandwidth(u).min(bandwidth(w))).collect();
        let edge_index: HashMap<(VertexId, VertexId), usize> =
            edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();

        let port_overflows = topology
            .vertices()
            .filter(|&(v, l)| {
                catalog
                    .get(l)
                    .is_some_and(|m| topology.neighbor_count(v) > m.max_ports as usize)
            })
            .count();
        let links = topology.physical_link_count();

        let r = processing.len();
        let routes = route::all_routes(topology, &kinds, &processing)
            .into_iter()
            .map(|path| {
                path.map(|p| Route {
                    edges: p.windows(2).map(|w| edge_index[&(w[0], w[1])]).collect(),
                    via_gateway: p
                        .iter()
                        .any(|&v| kinds[v as usize] == Some(ModuleKind::Gateway)),
                    path: p,
                })
            })
            .collect();

        let model_parts: BTreeSet<&str> = allocation.modules.iter().filter_map(|m| m.part.as_deref()).collect();
        let part_ids: BTreeMap<&str, usize> = model_parts.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let module_part = allocation
            .modules
            .iter()
            .map(|m| m.part.as_deref().map(|p| part_ids[p]))
            .collect();

        Ok(Evaluator {
            topology,
            allocation,
            catalog,
            config,
            switches: kind_count(ModuleKind::Switch),
            gateways: kind_count(ModuleKind::Gateway),
            kinds,
            processing,
            ordinal,
            count_failure,
            segment_of,
            segments: segment_list.len(),
            links,
            port_overflows,
            cost: topology_cost(topology, catalog, config.link_cost),
            edges,
            edge_capacity,
            routes,
            disjoint: (0..r * r).map(|_| OnceLock::new()).collect(),
            module_part,
        })
    }

    /// Processing vertices in id order.
    pub fn processing_vertices(&self) -> &[VertexId] {
        &self.processing
    }

    pub fn topology(&self) -> &TopologyGraph {
        self.topology
    }

    pub fn allocation(&self) -> &AllocationSolution {
        self.allocation
    }

    /// Whether processing-vertex counts per type equal the allocation's.
    pub fn counts_match(&self) -> bool {
        self.count_failure.is_none()
    }

    /// A gate failure no mapping can repair, if any.
    pub fn static_failure(&self) -> Option<String> {
        if let Some(f) = &self.count_failure {
            return Some(f.clone());
        }
        (self.segments != self.config.required_segments).then(|| {
            format!(
                "{} segments, {} required",
                self.segments, self.config.required_segments
            )
        })
    }

    fn disjoint_between(&self, a: usize, b: usize) -> Option<usize> {
        let r = self.processing.len();
        *self.disjoint[a * r + b].get_or_init(|| {
            flow::disjoint_paths(self.topology, &self.kinds, self.processing[a], self.processing[b])
        })
    }

    fn check_mapping(&self, mapping: &ModuleMapping) -> Result<Vec<usize>> {
        let modules = &self.allocation.modules;
        if mapping.vertex_of_module.len() != modules.len() {
            return Err(Error::Mapping(format!(
                "mapping places {} modules, allocation has {}",
                mapping.vertex_of_module.len(),
                modules.len()
            )));
        }
        let mut seen = vec![false; self.processing.len()];
        mapping
            .vertex_of_module
            .iter()
            .zip(modules)
            .map(|(&v, m)| {
                let &p = self
                    .ordinal
                    .get(&v)
                    .ok_or_else(|| Error::Mapping(format!("vertex {v} is not a processing vertex")))?;
                if std::mem::replace(&mut seen[p], true) {
                    return Err(Error::Mapping(format!("vertex {v} hosts two modules")));
                }
                let label = self.topology.label(v).expect("live");
                if label != m.module_type {
                    return Err(Error::Mapping(format!(
                        "module of type {} placed on vertex {v} of type {label}",
                        m.module_type
                    )));
                }
                Ok(p)
            })
            .collect()
    }

    fn base_report(&self) -> EvaluationReport {
        EvaluationReport {
            gates: Gates::default(),
            failures: Vec::new(),
            processing_vertices: self.processing.len(),
            switch_vertices: self.switches,
            gateway_vertices: self.gateways,
            links: self.links,
            segments: self.segments,
            port_overflows: self.port_overflows,
            max_link_load: 0.0,
            overloaded_links: 0,
            mean_hops: 0.0,
            latency_score: 0.0,
            cost: self.cost,
            cost_score: self.cost_score(),
            mean_disjoint_paths: 0.0,
            dp_score: 0.0,
            max_node_load: 0.0,
            reward: 0.0,
            link_loads: Vec::new(),
            node_loads: Vec::new(),
        }
    }

    fn cost_score(&self) -> f64 {
        if self.cost <= 0.0 {
            return 1.0;
        }
        (self.allocation.cost / self.cost).clamp(0.0, 1.0)
    }

    /// Report for a candidate whose processing-vertex counts do not match;
    /// no mapping exists.
    fn count_mismatch_report(&self) -> EvaluationReport {
        let mut report = self.base_report();
        report.failures.push(self.count_failure.clone().expect("counts differ"));
        report.gates.ports_ok = self.ports_ok();
        report.gates.segments_ok = self.segments == self.config.required_segments;
        report
    }

    fn ports_ok(&self) -> bool {
        !self.config.enforce_port_limits || self.port_overflows == 0
    }

    /// Scores one mapping. Mapping-independent failures still yield a full
    /// report with reward 0.
    pub fn evaluate(&self, mapping: &ModuleMapping) -> Result<EvaluationReport> {
        if self.count_failure.is_some() {
            return Ok(self.count_mismatch_report());
        }
        let placed = self.check_mapping(mapping)?;
        let config = self.config;
        let r = self.processing.len();
        let mut report = self.base_report();
        let mut failures = Vec::new();

        let mut edge_mbps = vec![0.0; self.edges.len()];
        let mut routable = true;
        let mut via_ok = true;
        let mut hop_sum = 0.0;
        let mut messages = 0usize;
        let mut dp_sum = 0.0;
        let mut dp_count = 0usize;
        let mut dp_ok = true;
        let mut measured = BTreeSet::new();
        for t in &self.allocation.inter_module_traffic {
            let (a, b) = (placed[t.src], placed[t.dst]);
            let Some(route) = &self.routes[a * r + b] else {
                routable = false;
                failures.push(format!(
                    "no route from vertex {} to vertex {}",
                    self.processing[a], self.processing[b]
                ));
                continue;
            };
            for &e in &route.edges {
                edge_mbps[e] += t.mbps;
            }
            hop_sum += (route.path.len() * t.messages) as f64;
            messages += t.messages;
            if self.module_part[t.src] != self.module_part[t.dst] && !route.via_gateway {
                via_ok = false;
                failures.push(format!(
                    "cross-part traffic {}->{} bypasses every gateway",
                    t.src, t.dst
                ));
            }
            if measured.insert((a, b)) {
                if let Some(n) = self.disjoint_between(a, b) {
                    dp_sum += n as f64;
                    dp_count += 1;
                    if n < config.required_disjoint_paths {
                        dp_ok = false;
                        failures.push(format!(
                            "{n} disjoint paths between vertices {} and {}",
                            self.processing[a], self.processing[b]
                        ));
                    }
                }
            }
        }

        let mut segments_ok = true;
        if let Some(f) = self.static_failure() {
            segments_ok = false;
            failures.push(f);
        }
        let mut part_segment: BTreeMap<usize, BTreeSet<Option<usize>>> = BTreeMap::new();
        for (k, &p) in placed.iter().enumerate() {
            match self.module_part[k] {
                Some(part) => {
                    part_segment
                        .entry(part)
                        .or_default()
                        .insert(self.segment_of[self.processing[p] as usize]);
                }
                None => {
                    segments_ok = false;
                    failures.push(format!("module {k} mixes parts"));
                }
            }
        }
        let mut claimed = BTreeSet::new();
        for (part, segs) in &part_segment {
            if segs.len() != 1 {
                segments_ok = false;
                failures.push(format!("part #{part} spans {} segments", segs.len()));
            } else if !claimed.insert(*segs.iter().next().expect("one")) {
                segments_ok = false;
                failures.push(format!("part #{part} shares its segment with another part"));
            }
        }
        segments_ok &= via_ok;

        report.link_loads = self
            .edges
            .iter()
            .zip(&edge_mbps)
            .zip(&self.edge_capacity)
            .map(|((&(src, dst), &mbps), &cap)| LinkLoad {
                src,
                dst,
                mbps,
                capacity_mbps: cap,
                load: if cap > 0.0 {
                    mbps / cap
                } else if mbps > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                },
            })
            .collect();
        report.max_link_load = report.link_loads.iter().map(|l| l.load).fold(0.0, f64::max);
        report.overloaded_links = report
            .link_loads
            .iter()
            .filter(|l| l.load > config.overload_threshold)
            .count();
        report.node_loads = placed
            .iter()
            .zip(&self.allocation.modules)
            .enumerate()
            .map(|(k, (&p, m))| {
                let v = self.processing[p];
                let cap = self
                    .catalog
                    .get(&m.module_type)
                    .map_or(0.0, |s| s.compute_capacity_mops);
                NodeLoad {
                    vertex: v,
                    module: k,
                    compute_mops: m.compute_load_mops,
                    utilization: if cap > 0.0 { m.compute_load_mops / cap } else { 0.0 },
                }
            })
            .collect();
        report.max_node_load = report.node_loads.iter().map(|n| n.utilization).fold(0.0, f64::max);

        report.mean_hops = if messages > 0 { hop_sum / messages as f64 } else { 0.0 };
        report.latency_score = latency_score(
            report.max_link_load,
            report.overloaded_links,
            report.mean_hops,
            &config.latency,
        )?;
        report.mean_disjoint_paths = if dp_count > 0 {
            dp_sum / dp_count as f64
        } else {
            config.required_disjoint_paths as f64
        };
        report.dp_score =
            (report.mean_disjoint_paths / config.required_disjoint_paths as f64).clamp(0.0, 1.0);

        report.gates = Gates {
            module_count_ok: true,
            disjoint_paths_ok: dp_ok,
            segments_ok,
            routable,
            ports_ok: self.ports_ok(),
        };
        if !report.gates.ports_ok {
            failures.push(format!("{} vertices exceed their port limit", self.port_overflows));
        }
        report.failures = failures;
        if report.gates.all_pass() {
            let w = &config.weights;
            report.reward = ((w.latency * report.latency_score
                + w.cost * report.cost_score
                + w.resilience * report.dp_score)
                / w.sum())
            .clamp(0.0, 1.0);
        }
        Ok(report)
    }
}

/// Scores a candidate from scratch. Prefer [`Evaluator`] when scoring
/// several mappings against one topology.
pub fn evaluate(
    topology: &TopologyGraph,
    allocation: &AllocationSolution,
    mapping: &ModuleMapping,
    catalog: &ModuleCatalog,
    config: &RunConfig,
) -> Result<EvaluationReport> {
    Evaluator::new(topology, allocation, catalog, config)?.evaluate(mapping)
}

pub fn check_gates(
    topology: &TopologyGraph,
    allocation: &AllocationSolution,
    mapping: &ModuleMapping,
    catalog: &ModuleCatalog,
    config: &RunConfig,
) -> Result<Gates> {
    Ok(evaluate(topology, allocation, mapping, catalog, config)?.gates)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MessageRoute {
    pub message: String,
    /// Vertices from the source module to the destination module; empty
    /// for messages between co-located processes.
    pub path: Vec<VertexId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Routing {
    pub routes: Vec<MessageRoute>,
    /// Messages without a route.
    pub unroutable: Vec<String>,
    pub link_loads: Vec<LinkLoad>,
    pub node_loads: Vec<NodeLoad>,
}

/// Routes every message of `model` individually and accumulates loads.
pub fn route_and_load(
    topology: &TopologyGraph,
    allocation: &AllocationSolution,
    mapping: &ModuleMapping,
    model: &ApplicationModel,
    catalog: &ModuleCatalog,
    config: &RunConfig,
) -> Result<Routing> {
    let ev = Evaluator::new(topology, allocation, catalog, config)?;
    if let Some(f) = &ev.count_failure {
        return Err(Error::Mapping(f.clone()));
    }
    let placed = ev.check_mapping(mapping)?;
    let module_of = allocation.module_of_processes(model)?;
    let r = ev.processing.len();
    let mut edge_mbps = vec![0.0; ev.edges.len()];
    let mut routes = Vec::with_capacity(model.messages().len());
    let mut unroutable = Vec::new();
    for f in model.flows() {
        let id = model.messages()[f.message].id.clone();
        let (ma, mb) = (module_of[f.src], module_of[f.dst]);
        if ma == mb {
            routes.push(MessageRoute { message: id, path: Vec::new() });
            continue;
        }
        let (a, b) = (placed[ma], placed[mb]);
        match &ev.routes[a * r + b] {
            Some(route) => {
                for &e in &route.edges {
                    edge_mbps[e] += f.bandwidth_mbps;
                }
                routes.push(MessageRoute {
                    message: id,
                    path: route.path.clone(),
                });
            }
            None => unroutable.push(id),
        }
    }
    let report = ev.evaluate(mapping)?;
    let link_loads = ev
        .edges
        .iter()
        .zip(&edge_mbps)
        .zip(&ev.edge_capacity)
        .map(|((&(src, dst), &mbps), &cap)| LinkLoad {
            src,
            dst,
            mbps,
            capacity_mbps: cap,
            load: if cap > 0.0 { mbps / cap } else { 0.0 },
        })
        .collect();
    Ok(Routing {
        routes,
        unroutable,
        link_loads,
        node_loads: report.node_loads,
    })
}
