//! Matching production rules against a graph and applying them.
//!
//! A match binds LHS pattern node `i` to vertex `binding[i]`. Bindings are
//! injective and non-induced: the graph may hold edges among bound vertices
//! that the pattern does not mention. A match is an applicable action only
//! if the RHS would not add an edge that already exists between preserved
//! vertices.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{TopologyGraph, VertexId};
use crate::error::{Error, Result};
use crate::grammar::{DegreeSemantics, Grammar, ProductionRule};

/// A rule together with the vertices its LHS nodes bind to, in LHS node
/// order. Two actions are equal iff they rewrite the same graph the same way.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Action {
    pub rule: usize,
    pub binding: Vec<VertexId>,
}

impl Action {
    pub fn describe(&self, grammar: &Grammar) -> String {
        let name = grammar
            .rules
            .get(self.rule)
            .map(|r| r.name.as_str())
            .unwrap_or("?");
        format!("{name}{:?}", self.binding)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}{:?}", self.rule, self.binding)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Match {
    pub action: Action,
    /// Degree of each bound vertex at match time.
    pub degrees: Vec<usize>,
}

/// All matches of every rule, ordered by rule then binding.
pub fn find_matches(graph: &TopologyGraph, grammar: &Grammar) -> Vec<Match> {
    let sem = grammar.degree_semantics;
    let degrees: Vec<usize> = (0..graph.next_id())
        .map(|v| if graph.contains(v) { graph.degree(v, sem) } else { 0 })
        .collect();
    let mut out = Vec::new();
    for (r, rule) in grammar.rules.iter().enumerate() {
        let candidates: Vec<Vec<VertexId>> = rule
            .lhs
            .nodes
            .iter()
            .map(|n| {
                graph
                    .vertices()
                    .filter(|&(v, l)| {
                        l == n.label()
                            && n.interval.is_none_or(|iv| iv.contains(degrees[v as usize]))
                    })
                    .map(|(v, _)| v)
                    .collect()
            })
            .collect();
        let lhs_edges = rule.lhs.directed_edges();
        let guarded = guarded_edges(rule);
        let mut binding = Vec::with_capacity(rule.lhs.nodes.len());
        extend(graph, &candidates, &lhs_edges, &mut binding, &mut |b| {
            if guarded.iter().all(|&(s, d)| !graph.has_edge(b[s], b[d])) {
                out.push(Match {
                    action: Action {
                        rule: r,
                        binding: b.to_vec(),
                    },
                    degrees: b.iter().map(|&v| degrees[v as usize]).collect(),
                });
            }
        });
    }
    out
}

/// The applicable actions on `graph`, in deterministic order.
pub fn enumerate_actions(graph: &TopologyGraph, grammar: &Grammar) -> Vec<Action> {
    find_matches(graph, grammar)
        .into_iter()
        .map(|m| m.action)
        .collect()
}

fn extend(
    graph: &TopologyGraph,
    candidates: &[Vec<VertexId>],
    lhs_edges: &[(usize, usize)],
    binding: &mut Vec<VertexId>,
    emit: &mut impl FnMut(&[VertexId]),
) {
    let i = binding.len();
    if i == candidates.len() {
        emit(binding);
        return;
    }
    for &v in &candidates[i] {
        if binding.contains(&v) {
            continue;
        }
        binding.push(v);
        let ok = lhs_edges.iter().all(|&(s, d)| {
            s.max(d) != i || graph.has_edge(binding[s], binding[d])
        });
        if ok {
            extend(graph, candidates, lhs_edges, binding, emit);
        }
        binding.pop();
    }
}

/// LHS node pairs `(s, d)` for which the RHS creates `s -> d` between
/// preserved vertices. Such an edge must not already exist.
fn guarded_edges(rule: &ProductionRule) -> Vec<(usize, usize)> {
    let origin = rule.rhs_origins();
    let lhs_edges = rule.lhs.directed_edges();
    rule.rhs
        .directed_edges()
        .into_iter()
        .filter_map(|(s, d)| match (origin[s], origin[d]) {
            (Some(ls), Some(ld)) if !lhs_edges.contains(&(ls, ld)) => Some((ls, ld)),
            _ => None,
        })
        .collect()
}

fn check_action(graph: &TopologyGraph, grammar: &Grammar, action: &Action) -> Result<()> {
    let stale = |reason: String| Error::StaleAction {
        action: action.describe(grammar),
        reason,
    };
    let rule = grammar
        .rules
        .get(action.rule)
        .ok_or_else(|| stale(format!("grammar has no rule #{}", action.rule)))?;
    let lhs = &rule.lhs;
    if action.binding.len() != lhs.nodes.len() {
        return Err(stale(format!(
            "binding has {} vertices, rule {} needs {}",
            action.binding.len(),
            rule.name,
            lhs.nodes.len()
        )));
    }
    let sem: DegreeSemantics = grammar.degree_semantics;
    for (i, (&v, node)) in action.binding.iter().zip(&lhs.nodes).enumerate() {
        match graph.label(v) {
            None => return Err(stale(format!("vertex {v} does not exist"))),
            Some(l) if l != node.label() => {
                return Err(stale(format!("vertex {v} is {l}, pattern needs {}", node.key)))
            }
            _ => {}
        }
        if action.binding[..i].contains(&v) {
            return Err(stale(format!("vertex {v} is bound twice")));
        }
        if let Some(iv) = node.interval {
            let d = graph.degree(v, sem);
            if !iv.contains(d) {
                return Err(stale(format!("vertex {v} has degree {d}, outside {iv}")));
            }
        }
    }
    let b = &action.binding;
    for (s, d) in lhs.directed_edges() {
        if !graph.has_edge(b[s], b[d]) {
            return Err(stale(format!("edge {}->{} is missing", b[s], b[d])));
        }
    }
    for (s, d) in guarded_edges(rule) {
        if graph.has_edge(b[s], b[d]) {
            return Err(stale(format!("edge {}->{} already exists", b[s], b[d])));
        }
    }
    Ok(())
}

/// Returns the graph obtained by applying `action`. The input is not
/// modified. New vertices take fresh ids in RHS node order.
pub fn apply_action(graph: &TopologyGraph, grammar: &Grammar, action: &Action) -> Result<TopologyGraph> {
    check_action(graph, grammar, action)?;
    let rule = &grammar.rules[action.rule];
    let b = &action.binding;
    let corr = rule.correspondence();
    let mut out = graph.clone();

    let lhs_edges = rule.lhs.directed_edges();
    let rhs_edges = rule.rhs.directed_edges();
    for &(s, d) in &lhs_edges {
        let kept = matches!((corr[s], corr[d]), (Some(rs), Some(rd)) if rhs_edges.contains(&(rs, rd)));
        if !kept {
            out.remove_edge(b[s], b[d]);
        }
    }
    for (i, c) in corr.iter().enumerate() {
        match c {
            None => {
                out.remove_vertex(b[i]);
            }
            Some(j) => {
                let new_label = rule.rhs.nodes[*j].label();
                if graph.label(b[i]) != Some(new_label) {
                    out.set_label_arc(b[i], Arc::from(new_label));
                }
            }
        }
    }

    let origin = rule.rhs_origins();
    let image: Vec<VertexId> = rule
        .rhs
        .nodes
        .iter()
        .zip(&origin)
        .map(|(n, o)| match o {
            Some(l) => b[*l],
            None => out.add_vertex_arc(Arc::from(n.label())),
        })
        .collect();
    for (s, d) in rhs_edges {
        let existed = matches!((origin[s], origin[d]), (Some(ls), Some(ld)) if lhs_edges.contains(&(ls, ld)));
        if !existed {
            out.add_edge(image[s], image[d])?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::parse_grammar;

    fn grammar(text: &str) -> Grammar {
        parse_grammar(text).unwrap()
    }

    #[test]
    fn phi_rule_applies_to_any_graph() {
        let g = grammar("r0: phi => S;");
        let empty = TopologyGraph::new();
        let acts = enumerate_actions(&empty, &g);
        assert_eq!(acts, vec![Action { rule: 0, binding: vec![] }]);
        let one = apply_action(&empty, &g, &acts[0]).unwrap();
        assert_eq!(enumerate_actions(&one, &g).len(), 1);
        let two = apply_action(&one, &g, &acts[0]).unwrap();
        assert_eq!(two.count_label("S"), 2);
    }

    #[test]
    fn connecting_rule_skips_existing_links() {
        let g = grammar("r3: S_1, S_2 => S_1 <-> S_2;");
        let mut t = TopologyGraph::new();
        let a = t.add_vertex("S");
        let b = t.add_vertex("S");
        let c = t.add_vertex("S");
        t.add_link(a, b).unwrap();
        let acts = enumerate_actions(&t, &g);
        let pairs: Vec<_> = acts.iter().map(|x| x.binding.clone()).collect();
        assert_eq!(pairs, vec![vec![a, c], vec![b, c], vec![c, a], vec![c, b]]);
        let err = apply_action(&t, &g, &Action { rule: 0, binding: vec![a, b] });
        assert!(matches!(err, Err(Error::StaleAction { .. })));
    }

    #[test]
    fn degree_interval_gates_match() {
        let g = grammar("r1: G[0-2] => G <-> S;");
        let mut t = TopologyGraph::new();
        t.add_vertex("G");
        let t1 = apply_action(&t, &g, &enumerate_actions(&t, &g)[0]).unwrap();
        assert_eq!(enumerate_actions(&t1, &g).len(), 1);
        let t2 = apply_action(&t1, &g, &enumerate_actions(&t1, &g)[0]).unwrap();
        assert!(enumerate_actions(&t2, &g).is_empty());
        let g = g.with_degree_semantics(DegreeSemantics::DistinctNeighbors);
        assert_eq!(enumerate_actions(&t2, &g).len(), 1);
    }

    #[test]
    fn stale_after_vertex_removed() {
        let g = grammar("r0: A -> B => A;");
        let mut t = TopologyGraph::new();
        let a = t.add_vertex("A");
        let b = t.add_vertex("B");
        t.add_edge(a, b).unwrap();
        let act = enumerate_actions(&t, &g).remove(0);
        let t1 = apply_action(&t, &g, &act).unwrap();
        assert!(!t1.contains(b));
        assert!(apply_action(&t1, &g, &act).is_err());
        assert_eq!(t.vertex_count(), 2, "input untouched");
    }
}
