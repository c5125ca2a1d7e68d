//! Vertex-labelled directed graphs of hardware modules and links.

mod rewrite;

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grammar::DegreeSemantics;
use crate::model::{ModuleCatalog, ModuleKind};

pub use rewrite::{apply_action, enumerate_actions, find_matches, Action, Match};

pub type VertexId = u32;

/// A directed graph with labelled vertices. Vertex ids are assigned in
/// increasing order and never reused; removed vertices leave a hole.
///
/// There are no self-loops and at most one edge per ordered vertex pair.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TopologyGraph {
    labels: Vec<Option<Arc<str>>>,
    succ: Vec<Vec<VertexId>>,
    pred: Vec<Vec<VertexId>>,
    edge_labels: BTreeMap<(VertexId, VertexId), String>,
}

fn insert_sorted(v: &mut Vec<VertexId>, x: VertexId) -> bool {
    match v.binary_search(&x) {
        Ok(_) => false,
        Err(pos) => {
            v.insert(pos, x);
            true
        }
    }
}

fn remove_sorted(v: &mut Vec<VertexId>, x: VertexId) -> bool {
    match v.binary_search(&x) {
        Ok(pos) => {
            v.remove(pos);
            true
        }
        Err(_) => false,
    }
}

impl TopologyGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.vertex_count() == 0
    }

    /// The id the next added vertex will receive.
    pub fn next_id(&self) -> VertexId {
        self.labels.len() as VertexId
    }

    pub fn add_vertex(&mut self, label: &str) -> VertexId {
        self.add_vertex_arc(Arc::from(label))
    }

    pub(crate) fn add_vertex_arc(&mut self, label: Arc<str>) -> VertexId {
        let id = self.next_id();
        self.labels.push(Some(label));
        self.succ.push(Vec::new());
        self.pred.push(Vec::new());
        id
    }

    /// Removes a vertex and every edge incident to it.
    pub fn remove_vertex(&mut self, v: VertexId) -> bool {
        if !self.contains(v) {
            return false;
        }
        let i = v as usize;
        for w in std::mem::take(&mut self.succ[i]) {
            remove_sorted(&mut self.pred[w as usize], v);
            self.edge_labels.remove(&(v, w));
        }
        for u in std::mem::take(&mut self.pred[i]) {
            remove_sorted(&mut self.succ[u as usize], v);
            self.edge_labels.remove(&(u, v));
        }
        self.labels[i] = None;
        true
    }

    pub fn set_label(&mut self, v: VertexId, label: &str) -> Result<()> {
        match self.labels.get_mut(v as usize) {
            Some(slot @ Some(_)) => {
                *slot = Some(Arc::from(label));
                Ok(())
            }
            _ => Err(Error::Topology(format!("no vertex {v}"))),
        }
    }

    pub(crate) fn set_label_arc(&mut self, v: VertexId, label: Arc<str>) {
        self.labels[v as usize] = Some(label);
    }

    /// Adds `src -> dst`. Returns `false` if the edge already exists.
    pub fn add_edge(&mut self, src: VertexId, dst: VertexId) -> Result<bool> {
        if src == dst {
            return Err(Error::Topology(format!("self-loop on vertex {src}")));
        }
        if !self.contains(src) || !self.contains(dst) {
            return Err(Error::Topology(format!("edge {src}->{dst} has a missing endpoint")));
        }
        let added = insert_sorted(&mut self.succ[src as usize], dst);
        if added {
            insert_sorted(&mut self.pred[dst as usize], src);
        }
        Ok(added)
    }

    /// Adds edges in both directions.
    pub fn add_link(&mut self, a: VertexId, b: VertexId) -> Result<()> {
        self.add_edge(a, b)?;
        self.add_edge(b, a)?;
        Ok(())
    }

    pub fn remove_edge(&mut self, src: VertexId, dst: VertexId) -> bool {
        if !self.contains(src) || !self.contains(dst) {
            return false;
        }
        let removed = remove_sorted(&mut self.succ[src as usize], dst);
        if removed {
            remove_sorted(&mut self.pred[dst as usize], src);
            self.edge_labels.remove(&(src, dst));
        }
        removed
    }

    pub fn set_edge_label(&mut self, src: VertexId, dst: VertexId, label: &str) -> Result<()> {
        if !self.has_edge(src, dst) {
            return Err(Error::Topology(format!("no edge {src}->{dst}")));
        }
        self.edge_labels.insert((src, dst), label.to_string());
        Ok(())
    }

    pub fn edge_label(&self, src: VertexId, dst: VertexId) -> Option<&str> {
        self.edge_labels.get(&(src, dst)).map(String::as_str)
    }

    pub fn contains(&self, v: VertexId) -> bool {
        matches!(self.labels.get(v as usize), Some(Some(_)))
    }

    pub fn label(&self, v: VertexId) -> Option<&str> {
        self.labels.get(v as usize)?.as_deref()
    }


    pub fn has_edge(&self, src: VertexId, dst: VertexId) -> bool {
        self.contains(src) && self.succ[src as usize].binary_search(&dst).is_ok()
    }

    /// Vertices in id order.
    pub fn vertices(&self) -> impl Iterator<Item = (VertexId, &str)> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.as_deref().map(|l| (i as VertexId, l)))
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices().map(|(v, _)| v)
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }

    /// Directed edges in (src, dst) order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(u, out)| out.iter().map(move |&w| (u as VertexId, w)))
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn successors(&self, v: VertexId) -> &[VertexId] {
        self.succ.get(v as usize).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn predecessors(&self, v: VertexId) -> &[VertexId] {
        self.pred.get(v as usize).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Distinct adjacent vertices in either direction, sorted.
    pub fn neighbors(&self, v: VertexId) -> Vec<VertexId> {
        let (a, b) = (self.successors(v), self.predecessors(v));
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some(&x), Some(&y)) if x == y => {
                    i += 1;
                    j += 1;
                    x
                }
                (Some(&x), Some(&y)) if x < y => {
                    i += 1;
                    x
                }
                (Some(_), Some(&y)) => {
                    j += 1;
                    y
                }
                (Some(&x), None) => {
                    i += 1;
                    x
                }
                (None, Some(&y)) => {
                    j += 1;
                    y
                }
                (None, None) => unreachable!(),
            };
            out.push(next);
        }
        out
    }

    pub fn neighbor_count(&self, v: VertexId) -> usize {
        self.neighbors(v).len()
    }

    pub fn degree(&self, v: VertexId, semantics: DegreeSemantics) -> usize {
        match semantics {
            DegreeSemantics::IncidentEdges => self.successors(v).len() + self.predecessors(v).len(),
            DegreeSemantics::DistinctNeighbors => self.neighbor_count(v),
        }
    }

    /// Unordered vertex pairs joined by at least one edge, `(min, max)`.
    pub fn physical_links(&self) -> Vec<(VertexId, VertexId)> {
        let mut links: Vec<(VertexId, VertexId)> = self
            .edges()
            .filter(|&(u, w)| u < w || !self.has_edge(w, u))
            .map(|(u, w)| (u.min(w), u.max(w)))
            .collect();
        links.sort_unstable();
        links
    }

    pub fn physical_link_count(&self) -> usize {
        self.physical_links().len()
    }

    pub fn count_label(&self, label: &str) -> usize {
        self.vertices().filter(|(_, l)| *l == label).count()
    }

    /// Connected components of the undirected skeleton restricted to the
    /// vertices accepted by `keep`. Components are listed by smallest id.
    pub fn components_where(&self, keep: impl Fn(VertexId) -> bool) -> Vec<Vec<VertexId>> {
        let n = self.labels.len();
        let mut seen = vec![false; n];
        let mut comps = Vec::new();
        for start in self.vertex_ids() {
            if seen[start as usize] || !keep(start) {
                continue;
            }
            seen[start as usize] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &w in self.successors(u).iter().chain(self.predecessors(u)) {
                    if !seen[w as usize] && keep(w) {
                        seen[w as usize] = true;
                        comp.push(w);
                        queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    /// Whether all `targets` lie in one component of the undirected
    /// skeleton.
    pub fn mutually_reachable(&self, targets: &[VertexId]) -> bool {
        let Some(&first) = targets.first() else {
            return true;
        };
        let n = self.labels.len();
        let mut seen = vec![false; n];
        seen[first as usize] = true;
        let mut queue = VecDeque::from([first]);
        while let Some(u) = queue.pop_front() {
            for &w in self.successors(u).iter().chain(self.predecessors(u)) {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    queue.push_back(w);
                }
            }
        }
        targets.iter().all(|&t| seen[t as usize])
    }

    pub fn kind_of(&self, v: VertexId, catalog: &ModuleCatalog) -> Result<ModuleKind> {
        let label = self
            .label(v)
            .ok_or_else(|| Error::Topology(format!("no vertex {v}")))?;
        catalog
            .get(label)
            .map(|m| m.kind)
            .ok_or_else(|| Error::Topology(format!("label {label} is not in the catalog")))
    }

    /// Segments: components left after deleting gateway vertices.
    pub fn segments(&self, catalog: &ModuleCatalog) -> Result<Vec<Vec<VertexId>>> {
        let kinds = self.kinds(catalog)?;
        Ok(self.components_where(|v| kinds[v as usize] != Some(ModuleKind::Gateway)))
    }

    /// Module kind per vertex id (`None` for holes).
    pub fn kinds(&self, catalog: &ModuleCatalog) -> Result<Vec<Option<ModuleKind>>> {
        let mut kinds = vec![None; self.labels.len()];
        for (v, _) in self.vertices() {
            kinds[v as usize] = Some(self.kind_of(v, catalog)?);
        }
        Ok(kinds)
    }

    pub fn structural_stats(&self, catalog: &ModuleCatalog) -> Result<StructuralStats> {
        let mut per_kind = BTreeMap::new();
        let mut per_type = BTreeMap::new();
        for (v, label) in self.vertices() {
            let kind = self.kind_of(v, catalog)?;
            *per_kind.entry(kind.to_string()).or_insert(0) += 1;
            *per_type.entry(label.to_string()).or_insert(0) += 1;
        }
        Ok(StructuralStats {
            vertices: self.vertex_count(),
            per_kind,
            per_type,
            links: self.physical_link_count(),
            segments: self.segments(catalog)?.len(),
        })
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph topology {\n");
        for (v, label) in self.vertices() {
            let _ = writeln!(out, "  v{v} [label=\"{label}{v}\"];");
        }
        for (u, w) in self.physical_links() {
            let both = self.has_edge(u, w) && self.has_edge(w, u);
            let (src, dst) = if self.has_edge(u, w) { (u, w) } else { (w, u) };
            let attr = if both { " [dir=both]" } else { "" };
            let _ = writeln!(out, "  v{src} -> v{dst}{attr};");
        }
        out.push_str("}\n");
        out
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        crate::model::parse_json(text, Path::new("<string>"))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuralStats {
    pub vertices: usize,
    /// Vertex count per module kind (`processing`, `switch`, `gateway`).
    pub per_kind: BTreeMap<String, usize>,
    /// Vertex count per type label.
    pub per_type: BTreeMap<String, usize>,
    pub links: usize,
    pub segments: usize,
}

impl StructuralStats {
    pub fn kind_count(&self, kind: ModuleKind) -> usize {
        self.per_kind.get(&kind.to_string()).copied().unwrap_or(0)
    }
}

#[derive(Serialize, Deserialize)]
struct RawVertex {
    id: VertexId,
    label: String,
}

#[derive(Serialize, Deserialize)]
struct RawEdge {
    src: VertexId,
    dst: VertexId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct RawGraph {
    vertices: Vec<RawVertex>,
    edges: Vec<RawEdge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    next_id: Option<VertexId>,
}

impl Serialize for TopologyGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let max_live = self.vertex_ids().last().map(|v| v + 1).unwrap_or(0);
        RawGraph {
            vertices: self
                .vertices()
                .map(|(id, l)| RawVertex {
                    id,
                    label: l.to_string(),
                })
                .collect(),
            edges: self
                .edges()
                .map(|(src, dst)| RawEdge {
                    src,
                    dst,
                    label: self.edge_label(src, dst).map(str::to_string),
                })
                .collect(),
            next_id: (self.next_id() != max_live).then_some(self.next_id()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TopologyGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawGraph::deserialize(d)?;
        TopologyGraph::try_from(raw).map_err(serde::de::Error::custom)
    }
}

impl TryFrom<RawGraph> for TopologyGraph {
    type Error = Error;

    fn try_from(raw: RawGraph) -> Result<Self> {
        let max = raw.vertices.iter().map(|v| v.id + 1).max().unwrap_or(0);
        let len = raw.next_id.unwrap_or(max).max(max) as usize;
        let mut g = TopologyGraph {
            labels: vec![None; len],
            succ: vec![Vec::new(); len],
            pred: vec![Vec::new(); len],
            edge_labels: BTreeMap::new(),
        };
        for v in raw.vertices {
            if v.label.is_empty() || !v.label.chars().all(|c| c.is_ascii_alphabetic()) {
                return Err(Error::Topology(format!(
                    "vertex {} has invalid label {:?}",
                    v.id, v.label
                )));
            }
            if g.contains(v.id) {
                return Err(Error::Topology(format!("duplicate vertex id {}", v.id)));
            }
            g.labels[v.id as usize] = Some(Arc::from(v.label.as_str()));
        }
        for e in raw.edges {
            if !g.add_edge(e.src, e.dst)? {
                return Err(Error::Topology(format!("duplicate edge {}->{}", e.src, e.dst)));
            }
            if let Some(l) = e.label {
                g.edge_labels.insert((e.src, e.dst), l);
            }
        }
        Ok(g)
    }
}

pub fn load_topology(path: impl AsRef<Path>) -> Result<TopologyGraph> {
    crate::model::read_json(path.as_ref())
}

pub fn save_topology(graph: &TopologyGraph, path: impl AsRef<Path>) -> Result<()> {
    crate::model::write_json(path.as_ref(), graph)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(n: usize) -> TopologyGraph {
        let mut g = TopologyGraph::new();
        let ids: Vec<_> = (0..n).map(|_| g.add_vertex("S")).collect();
        for i in 0..n {
            g.add_link(ids[i], ids[(i + 1) % n]).unwrap();
        }
        g
    }

    #[test]
    fn ring_of_four_switches() {
        let stats = ring(4).structural_stats(&ModuleCatalog::standard()).unwrap();
        assert_eq!(stats.links, 4);
        assert_eq!(stats.segments, 1);
        assert_eq!(stats.kind_count(ModuleKind::Switch), 4);
    }

    #[test]
    fn gateway_splits_segments() {
        let mut g = TopologyGraph::new();
        let gw = g.add_vertex("G");
        let a = g.add_vertex("S");
        let b = g.add_vertex("S");
        g.add_link(gw, a).unwrap();
        g.add_link(gw, b).unwrap();
        let stats = g.structural_stats(&ModuleCatalog::standard()).unwrap();
        assert_eq!(stats.segments, 2);
        assert_eq!(stats.links, 2);
    }

    #[test]
    fn unknown_label_is_an_error() {
        let mut g = TopologyGraph::new();
        g.add_vertex("Q");
        assert!(g.structural_stats(&ModuleCatalog::standard()).is_err());
    }

    #[test]
    fn no_self_loops_or_parallel_edges() {
        let mut g = TopologyGraph::new();
        let a = g.add_vertex("A");
        let b = g.add_vertex("B");
        assert!(g.add_edge(a, a).is_err());
        assert!(g.add_edge(a, b).unwrap());
        assert!(!g.add_edge(a, b).unwrap());
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn degree_semantics() {
        let mut g = TopologyGraph::new();
        let a = g.add_vertex("A");
        let b = g.add_vertex("B");
        let c = g.add_vertex("C");
        g.add_link(a, b).unwrap();
        g.add_edge(c, a).unwrap();
        assert_eq!(g.degree(a, DegreeSemantics::IncidentEdges), 3);
        assert_eq!(g.degree(a, DegreeSemantics::DistinctNeighbors), 2);
        assert_eq!(g.neighbors(a), vec![b, c]);
    }

    #[test]
    fn remove_vertex_drops_incident_edges_and_keeps_ids() {
        let mut g = ring(3);
        g.remove_vertex(1);
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 2), (2, 0)]);
        assert_eq!(g.add_vertex("S"), 3);
    }

    #[test]
    fn json_round_trip_preserves_holes() {
        let mut g = ring(3);
        g.remove_vertex(2);
        g.set_edge_label(0, 1, "eth").unwrap();
        let back = TopologyGraph::from_json_str(&g.to_json_string()).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.next_id(), 3);
    }

    #[test]
    fn json_rejects_bad_edges() {
        let text = r#"{"vertices":[{"id":0,"label":"S"}],"edges":[{"src":0,"dst":0}]}"#;
        assert!(TopologyGraph::from_json_str(text).is_err());
        let text = r#"{"vertices":[{"id":0,"label":"S"}],"edges":[{"src":0,"dst":4}]}"#;
        assert!(TopologyGraph::from_json_str(text).is_err());
    }

    #[test]
    fn dot_lists_links_once() {
        let dot = ring(3).to_dot();
        assert_eq!(dot.matches("->").count(), 3);
        assert!(dot.contains("dir=both"));
    }
}
