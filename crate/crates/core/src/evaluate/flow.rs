//! Disjoint paths between two module vertices by max-flow on a
//! vertex-split graph.
//!
//! Paths may share the endpoints, the endpoints' attachment vertices (any
//! infrastructure vertex adjacent to either endpoint) and the edges
//! incident to the endpoints. Every other infrastructure vertex and every
//! infrastructure-to-infrastructure edge carries at most one path.
//! Processing vertices other than the endpoints are never intermediates.

use std::collections::VecDeque;

use crate::model::ModuleKind;
use crate::topology::{TopologyGraph, VertexId};

const INF: u32 = u32::MAX / 4;

struct Arc {
    to: usize,
    cap: u32,
}

struct Network {
    arcs: Vec<Arc>,
    adj: Vec<Vec<usize>>,
}

impl Network {
    fn new(n: usize) -> Self {
        Network {
            arcs: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    fn add(&mut self, u: usize, v: usize, cap: u32) {
        self.adj[u].push(self.arcs.len());
        self.arcs.push(Arc { to: v, cap });
        self.adj[v].push(self.arcs.len());
        self.arcs.push(Arc { to: u, cap: 0 });
    }

    /// Edmonds-Karp. Stops once the flow reaches `limit`.
    fn max_flow(&mut self, s: usize, t: usize, limit: u32) -> u32 {
        let mut flow = 0;
        let mut parent = vec![usize::MAX; self.adj.len()];
        while flow < limit {
            parent.fill(usize::MAX);
            let mut queue = VecDeque::from([s]);
            let mut reached = false;
            while let Some(u) = queue.pop_front() {
                if u == t {
                    reached = true;
                    break;
                }
                for &a in &self.adj[u] {
                    let arc = &self.arcs[a];
                    if arc.cap > 0 && arc.to != s && parent[arc.to] == usize::MAX {
                        parent[arc.to] = a;
                        queue.push_back(arc.to);
                    }
                }
            }
            if !reached {
                break;
            }
            let mut bottleneck = limit - flow;
            let mut v = t;
            while v != s {
                let a = parent[v];
                bottleneck = bottleneck.min(self.arcs[a].cap);
                v = self.arcs[a ^ 1].to;
            }
            let mut v = t;
            while v != s {
                let a = parent[v];
                self.arcs[a].cap -= bottleneck;
                self.arcs[a ^ 1].cap += bottleneck;
                v = self.arcs[a ^ 1].to;
            }
            flow += bottleneck;
        }
        flow
    }
}

/// Number of disjoint paths from `src` to `dst`, or `None` when some path
/// uses only shared elements (the endpoints hang off a common attachment
/// vertex), making the count unbounded. `kinds` gives the module kind per
/// vertex id.
pub fn disjoint_paths(
    graph: &TopologyGraph,
    kinds: &[Option<ModuleKind>],
    src: VertexId,
    dst: VertexId,
) -> Option<usize> {
    if src == dst || !graph.contains(src) || !graph.contains(dst) {
        return Some(0);
    }
    let n = graph.next_id() as usize;
    let infra = |v: VertexId| kinds[v as usize].is_some_and(|k| k.is_infrastructure());
    let endpoint = |v: VertexId| v == src || v == dst;
    let mut attach = vec![false; n];
    for e in [src, dst] {
        for w in graph.neighbors(e) {
            if infra(w) {
                attach[w as usize] = true;
            }
        }
    }

    let mut net = Network::new(2 * n);
    for v in graph.vertex_ids() {
        let cap = if endpoint(v) || attach[v as usize] {
            INF
        } else if infra(v) {
            1
        } else {
            continue;
        };
        net.add(2 * v as usize, 2 * v as usize + 1, cap);
    }
    for (u, w) in graph.edges() {
        let cap = if (u, w) == (src, dst) {
            1
        } else if endpoint(u) || endpoint(w) {
            INF
        } else {
            1
        };
        net.add(2 * u as usize + 1, 2 * w as usize, cap);
    }
    let flow = net.max_flow(2 * src as usize + 1, 2 * dst as usize, INF);
    (flow < INF).then_some(flow as usize)
}
