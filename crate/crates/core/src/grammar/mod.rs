//! Topology graph grammars: production rules written as
//! `name: LHS => RHS;` with node patterns, `->`/`<->` edges, optional
//! `_index` suffixes and `[lo-hi]` degree intervals.

mod parser;

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModuleCatalog;
use crate::topology::TopologyGraph;

pub use parser::parse_grammar;

pub fn load_grammar(path: impl AsRef<Path>) -> Result<Grammar> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_grammar(&text)
}

/// Inclusive bounds on a vertex degree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DegreeInterval {
    pub lo: u32,
    pub hi: u32,
}

impl DegreeInterval {
    pub fn contains(&self, degree: usize) -> bool {
        (self.lo as usize..=self.hi as usize).contains(&degree)
    }
}

impl fmt::Display for DegreeInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == self.hi {
            write!(f, "[{}]", self.lo)
        } else {
            write!(f, "[{}-{}]", self.lo, self.hi)
        }
    }
}

/// Identity of a pattern node within one side of a rule: its type label
/// plus an optional index distinguishing nodes of the same type.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeKey {
    pub label: String,
    pub index: Option<u32>,
}

impl fmt::Display for NodeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "{}_{}", self.label, i),
            None => f.write_str(&self.label),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodePattern {
    pub key: NodeKey,
    pub interval: Option<DegreeInterval>,
}

impl NodePattern {
    pub fn label(&self) -> &str {
        &self.key.label
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Directed,
    Bidirectional,
}

/// An edge between two nodes of the same side, by position in that side's
/// node list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgePattern {
    pub src: usize,
    pub dst: usize,
    pub direction: Direction,
}

/// Items of a side in written order. Chains such as `A -> B -> C` are
/// stored as one item per edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Element {
    Node(usize),
    Edge(usize),
}

/// One side of a production. An empty pattern is the null graph `phi`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphPattern {
    pub nodes: Vec<NodePattern>,
    pub edges: Vec<EdgePattern>,
    pub elements: Vec<Element>,
}

impl GraphPattern {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn find(&self, key: &NodeKey) -> Option<usize> {
        self.nodes.iter().position(|n| &n.key == key)
    }

    /// Directed edges with bidirectional patterns expanded into both
    /// directions.
    pub fn directed_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edges.len() * 2);
        for e in &self.edges {
            push_unique(&mut out, (e.src, e.dst));
            if e.direction == Direction::Bidirectional {
                push_unique(&mut out, (e.dst, e.src));
            }
        }
        out
    }
}

fn push_unique(v: &mut Vec<(usize, usize)>, e: (usize, usize)) {
    if !v.contains(&e) {
        v.push(e);
    }
}

impl fmt::Display for GraphPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("phi");
        }
        let mut printed = vec![false; self.nodes.len()];
        let mut node = |f: &mut fmt::Formatter<'_>, i: usize| -> fmt::Result {
            let n = &self.nodes[i];
            write!(f, "{}", n.key)?;
            if !printed[i] {
                printed[i] = true;
                if let Some(iv) = n.interval {
                    write!(f, "{iv}")?;
                }
            }
            Ok(())
        };
        for (k, el) in self.elements.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            match *el {
                Element::Node(i) => node(f, i)?,
                Element::Edge(e) => {
                    let edge = self.edges[e];
                    node(f, edge.src)?;
                    f.write_str(match edge.direction {
                        Direction::Directed => " -> ",
                        Direction::Bidirectional => " <-> ",
                    })?;
                    node(f, edge.dst)?;
                }
            }
        }
        Ok(())
    }
}

/// A production `lhs => rhs`. `correspondence[i]` names the RHS node that
/// preserves LHS node `i`, or `None` when the node is deleted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductionRule {
    pub name: String,
    pub lhs: GraphPattern,
    pub rhs: GraphPattern,
    pub comment: Option<String>,
    correspondence: Vec<Option<usize>>,
}

impl ProductionRule {
    pub(crate) fn new(
        name: String,
        lhs: GraphPattern,
        rhs: GraphPattern,
        comment: Option<String>,
    ) -> Self {
        let correspondence = if is_relabel_shape(&lhs, &rhs) {
            vec![Some(0)]
        } else {
            lhs.nodes.iter().map(|n| rhs.find(&n.key)).collect()
        };
        ProductionRule {
            name,
            lhs,
            rhs,
            comment,
            correspondence,
        }
    }

    pub fn correspondence(&self) -> &[Option<usize>] {
        &self.correspondence
    }

    /// Inverse of [`Self::correspondence`]: the LHS node each RHS node
    /// preserves, `None` for created nodes.
    pub fn rhs_origins(&self) -> Vec<Option<usize>> {
        let mut origin = vec![None; self.rhs.nodes.len()];
        for (l, r) in self.correspondence.iter().enumerate() {
            if let Some(r) = r {
                origin[*r] = Some(l);
            }
        }
        origin
    }

    pub fn classify(&self) -> RuleEffect {
        classify_rule(self)
    }
}

/// A lone node rewritten into a lone node of another type keeps its vertex.
fn is_relabel_shape(lhs: &GraphPattern, rhs: &GraphPattern) -> bool {
    lhs.nodes.len() == 1
        && rhs.nodes.len() == 1
        && lhs.edges.is_empty()
        && rhs.edges.is_empty()
        && lhs.nodes[0].key.label != rhs.nodes[0].key.label
}

impl fmt::Display for ProductionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} => {};", self.name, self.lhs, self.rhs)?;
        if let Some(c) = &self.comment {
            write!(f, " # {c}")?;
        }
        Ok(())
    }
}

/// How the degree of a vertex is counted when checking a node pattern's
/// interval.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeSemantics {
    /// Incoming plus outgoing edges; a `<->` link counts twice.
    #[default]
    IncidentEdges,
    /// Distinct adjacent vertices; a `<->` link counts once.
    DistinctNeighbors,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grammar {
    pub rules: Vec<ProductionRule>,
    pub start_graph: TopologyGraph,
    pub degree_semantics: DegreeSemantics,
}

impl Grammar {
    pub fn rule(&self, name: &str) -> Option<&ProductionRule> {
        self.rules.iter().find(|r| r.name == name)
    }

    pub fn with_start_graph(mut self, graph: TopologyGraph) -> Self {
        self.start_graph = graph;
        self
    }

    pub fn with_degree_semantics(mut self, semantics: DegreeSemantics) -> Self {
        self.degree_semantics = semantics;
        self
    }

    /// Every vertex label any rule mentions, plus the start graph's.
    pub fn labels(&self) -> BTreeSet<&str> {
        let mut out: BTreeSet<&str> = self.start_graph.vertices().map(|(_, l)| l).collect();
        for rule in &self.rules {
            for pattern in [&rule.lhs, &rule.rhs] {
                out.extend(pattern.nodes.iter().map(|n| n.label()));
            }
        }
        out
    }

    /// Fails unless every label names a catalog module type.
    pub fn check_labels(&self, catalog: &ModuleCatalog) -> Result<()> {
        let unknown: Vec<&str> = self.labels().into_iter().filter(|l| catalog.get(l).is_none()).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::Grammar(format!("labels not in the module catalog: {}", unknown.join(", "))))
        }
    }

    /// True when no rule can remove a vertex labelled `label` or turn it
    /// into something else, so its count never decreases.
    pub fn never_removes(&self, label: &str) -> bool {
        self.rules.iter().all(|rule| {
            let effect = rule.classify();
            !effect.deleted_nodes.iter().any(|k| k.label == label)
                && !effect.relabeled.iter().any(|(from, _)| from.label == label)
        })
    }
}

impl fmt::Display for Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for rule in &self.rules {
            writeln!(f, "{rule}")?;
        }
        Ok(())
    }
}

/// What applying a rule does, in terms of its pattern nodes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleEffect {
    pub added_nodes: Vec<NodeKey>,
    pub deleted_nodes: Vec<NodeKey>,
    pub relabeled: Vec<(NodeKey, NodeKey)>,
    /// Created directed edges, named by RHS node keys.
    pub added_edges: Vec<(NodeKey, NodeKey)>,
    /// Removed directed edges, named by LHS node keys.
    pub deleted_edges: Vec<(NodeKey, NodeKey)>,
}

pub fn classify_rule(rule: &ProductionRule) -> RuleEffect {
    let lhs = &rule.lhs;
    let rhs = &rule.rhs;
    let corr = rule.correspondence();
    let origin = rule.rhs_origins();
    let mut effect = RuleEffect::default();

    for (i, n) in lhs.nodes.iter().enumerate() {
        match corr[i] {
            None => effect.deleted_nodes.push(n.key.clone()),
            Some(j) if rhs.nodes[j].key.label != n.key.label => effect
                .relabeled
                .push((n.key.clone(), rhs.nodes[j].key.clone())),
            Some(_) => {}
        }
    }
    for (j, n) in rhs.nodes.iter().enumerate() {
        if origin[j].is_none() {
            effect.added_nodes.push(n.key.clone());
        }
    }

    let lhs_edges = lhs.directed_edges();
    let rhs_edges = rhs.directed_edges();
    for &(s, d) in &lhs_edges {
        let kept = match (corr[s], corr[d]) {
            (Some(rs), Some(rd)) => rhs_edges.contains(&(rs, rd)),
            _ => false,
        };
        if !kept {
            effect
                .deleted_edges
                .push((lhs.nodes[s].key.clone(), lhs.nodes[d].key.clone()));
        }
    }
    for &(s, d) in &rhs_edges {
        let existed = match (origin[s], origin[d]) {
            (Some(ls), Some(ld)) => lhs_edges.contains(&(ls, ld)),
            _ => false,
        };
        if !existed {
            effect
                .added_edges
                .push((rhs.nodes[s].key.clone(), rhs.nodes[d].key.clone()));
        }
    }
    effect
}
