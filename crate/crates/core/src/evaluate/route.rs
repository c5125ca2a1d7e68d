//! Hop-count shortest paths whose intermediate vertices are all
//! infrastructure. Among equal-length paths the one with the
//! lexicographically smallest vertex-id sequence wins.

use std::collections::VecDeque;

use crate::model::ModuleKind;
use crate::topology::{TopologyGraph, VertexId};

const UNREACHED: u32 = u32::MAX;

/// Hop distance from every vertex to `t`, relaying only through
/// infrastructure vertices.
fn distances_to(graph: &TopologyGraph, kinds: &[Option<ModuleKind>], t: VertexId) -> Vec<u32> {
    let mut dist = vec![UNREACHED; graph.next_id() as usize];
    dist[t as usize] = 0;
    let mut queue = VecDeque::from([t]);
    while let Some(u) = queue.pop_front() {
        let relay = u == t || kinds[u as usize].is_some_and(|k| k.is_infrastructure());
        if !relay {
            continue;
        }
        for &p in graph.predecessors(u) {
            if dist[p as usize] == UNREACHED {
                dist[p as usize] = dist[u as usize] + 1;
                queue.push_back(p);
            }
        }
    }
    dist
}

fn walk(
    graph: &TopologyGraph,
    kinds: &[Option<ModuleKind>],
    dist: &[u32],
    s: VertexId,
    t: VertexId,
) -> Option<Vec<VertexId>> {
    if dist[s as usize] == UNREACHED {
        return None;
    }
    let mut path = vec![s];
    let mut u = s;
    while u != t {
        let want = dist[u as usize] - 1;
        u = *graph.successors(u).iter().find(|&&w| {
            dist[w as usize] == want
                && (w == t || kinds[w as usize].is_some_and(|k| k.is_infrastructure()))
        })?;
        path.push(u);
    }
    Some(path)
}

pub fn shortest_path(
    graph: &TopologyGraph,
    kinds: &[Option<ModuleKind>],
    s: VertexId,
    t: VertexId,
) -> Option<Vec<VertexId>> {
    if s == t {
        return Some(vec![s]);
    }
    walk(graph, kinds, &distances_to(graph, kinds, t), s, t)
}

/// Routes between every ordered pair of `terminals`, row-major by source.
/// The diagonal holds single-vertex paths.
pub(crate) fn all_routes(
    graph: &TopologyGraph,
    kinds: &[Option<ModuleKind>],
    terminals: &[VertexId],
) -> Vec<Option<Vec<VertexId>>> {
    let r = terminals.len();
    let mut routes = vec![None; r * r];
    for (b, &t) in terminals.iter().enumerate() {
        let dist = distances_to(graph, kinds, t);
        for (a, &s) in terminals.iter().enumerate() {
            routes[a * r + b] = if a == b {
                Some(vec![s])
            } else {
                walk(graph, kinds, &dist, s, t)
            };
        }
    }
    routes
}
