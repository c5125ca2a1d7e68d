//! Seeded generator for synthetic application models.
//!
//! The default distributions are stand-ins: process periods and message
//! sizes are log-uniform over `[5, 200]` ms and `[64, 8192]` bits, compute
//! demand is uniform over `[0.1, 0.8]` Mops, and communication partners are
//! drawn by preferential attachment within each part. Parts never exchange
//! messages. Every message inherits the period of its source process.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ApplicationModel, Message, Process};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartSpec {
    pub name: String,
    pub processes: usize,
    /// Messages internal to this part. `None` takes a share of the
    /// remaining messages proportional to the part's process count.
    pub messages: Option<usize>,
}

impl PartSpec {
    pub fn new(name: impl Into<String>, processes: usize, messages: Option<usize>) -> Self {
        PartSpec {
            name: name.into(),
            processes,
            messages,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub parts: Vec<PartSpec>,
    pub period_range_ms: (f64, f64),
    pub size_range_bits: (f64, f64),
    pub demand_range_mops: (f64, f64),
}

impl SyntheticSpec {
    pub fn new(parts: Vec<PartSpec>) -> Self {
        SyntheticSpec {
            parts,
            period_range_ms: (5.0, 200.0),
            size_range_bits: (64.0, 8192.0),
            demand_range_mops: (0.1, 0.8),
        }
    }

    /// Flight-critical part of 91 processes / 629 messages plus a
    /// mission-oriented part of 8 processes / 31 messages.
    pub fn avionics_case() -> Self {
        SyntheticSpec::new(vec![
            PartSpec::new("FCP", 91, Some(629)),
            PartSpec::new("MOP", 8, Some(31)),
        ])
    }

    /// The threefold scaled-up flight-critical model (267 / 1887).
    pub fn scaled_case() -> Self {
        SyntheticSpec::new(vec![PartSpec::new("FCP", 267, Some(1887))])
    }

    /// The same part structure scaled to `n_processes` processes and
    /// `n_messages` messages. Parts keep their process shares with at least
    /// two each, and their message shares up to the ordered pairs they
    /// hold. Unchanged when the totals already match.
    pub fn resized(&self, n_processes: usize, n_messages: usize) -> Result<Self> {
        let explicit: usize = self.parts.iter().filter_map(|p| p.messages).sum();
        if self.total_processes() == n_processes && (explicit == n_messages || explicit == 0) {
            return Ok(self.clone());
        }
        let k = self.parts.len();
        if k == 0 || n_processes < 2 * k {
            return Err(Error::Model(format!(
                "{n_processes} processes cannot fill {k} parts of at least two"
            )));
        }
        let process_weights: Vec<f64> = self.parts.iter().map(|p| p.processes as f64).collect();
        let sizes: Vec<usize> = apportion(n_processes - 2 * k, &process_weights)
            .into_iter()
            .map(|n| n + 2)
            .collect();
        let message_weights: Vec<f64> = self
            .parts
            .iter()
            .map(|p| p.messages.unwrap_or(p.processes) as f64)
            .collect();
        let caps: Vec<usize> = sizes.iter().map(|&n| n * (n - 1)).collect();
        if n_messages > caps.iter().sum() {
            return Err(Error::Model(format!(
                "{n_messages} messages exceed the ordered pairs of {n_processes} processes in {k} parts"
            )));
        }
        let mut counts = apportion(n_messages, &message_weights);
        // Move overflow to parts with spare pairs, in part order.
        let mut spill: usize = counts.iter().zip(&caps).map(|(&c, &cap)| c.saturating_sub(cap)).sum();
        for (c, &cap) in counts.iter_mut().zip(&caps) {
            *c = (*c).min(cap);
        }
        for (c, &cap) in counts.iter_mut().zip(&caps) {
            let take = spill.min(cap - *c);
            *c += take;
            spill -= take;
        }
        let mut out = self.clone();
        for ((part, n), m) in out.parts.iter_mut().zip(sizes).zip(counts) {
            part.processes = n;
            part.messages = Some(m);
        }
        Ok(out)
    }

    pub fn total_processes(&self) -> usize {
        self.parts.iter().map(|p| p.processes).sum()
    }

    fn resolve_message_counts(&self, n_messages: usize) -> Result<Vec<usize>> {
        let explicit: usize = self.parts.iter().filter_map(|p| p.messages).sum();
        if explicit > n_messages {
            return Err(Error::Model(format!(
                "parts request {explicit} messages but only {n_messages} are available"
            )));
        }
        let open: Vec<usize> = (0..self.parts.len())
            .filter(|&i| self.parts[i].messages.is_none())
            .collect();
        let mut remaining = n_messages - explicit;
        if open.is_empty() && remaining > 0 {
            return Err(Error::Model(format!(
                "{remaining} messages are not assigned to any part"
            )));
        }
        let open_processes: usize = open.iter().map(|&i| self.parts[i].processes).sum();
        let mut counts: Vec<usize> = self.parts.iter().map(|p| p.messages.unwrap_or(0)).collect();
        for (k, &i) in open.iter().enumerate() {
            let share = if k + 1 == open.len() || open_processes == 0 {
                remaining
            } else {
                ((n_messages - explicit) * self.parts[i].processes) / open_processes
            };
            let share = share.min(remaining);
            counts[i] = share;
            remaining -= share;
        }
        for (part, &count) in self.parts.iter().zip(&counts) {
            let pairs = part.processes * part.processes.saturating_sub(1);
            if count > pairs {
                return Err(Error::Model(format!(
                    "part {} cannot carry {count} messages over {} processes without self-messages",
                    part.name, part.processes
                )));
            }
        }
        Ok(counts)
    }

    pub fn generate(&self, n_processes: usize, n_messages: usize, seed: u64) -> Result<ApplicationModel> {
        if self.parts.is_empty() {
            return Err(Error::Model("no parts given".into()));
        }
        if self.total_processes() != n_processes {
            return Err(Error::Model(format!(
                "parts hold {} processes, expected {n_processes}",
                self.total_processes()
            )));
        }
        let message_counts = self.resolve_message_counts(n_messages)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let mut processes = Vec::with_capacity(n_processes);
        let mut messages = Vec::with_capacity(n_messages);
        for (part, &count) in self.parts.iter().zip(&message_counts) {
            let first = processes.len();
            for i in 0..part.processes {
                let period = log_uniform(&mut rng, self.period_range_ms);
                let (lo, hi) = self.demand_range_mops;
                let demand = if hi > lo { rng.gen_range(lo..hi) } else { lo };
                processes.push(Process {
                    id: format!("{}_p{:03}", part.name, i),
                    part: part.name.clone(),
                    period_ms: round_to(period, 10.0),
                    compute_demand_mops: round_to(demand, 1000.0),
                });
            }
            let members = &processes[first..];
            for (k, (src, dst)) in attach_pairs(&mut rng, members.len(), count)
                .into_iter()
                .enumerate()
            {
                let size = log_uniform(&mut rng, self.size_range_bits).round();
                messages.push(Message {
                    id: format!("{}_m{:04}", part.name, k),
                    src: members[src].id.clone(),
                    dst: members[dst].id.clone(),
                    size_bits: size,
                    period_ms: members[src].period_ms,
                });
            }
        }
        ApplicationModel::new(processes, messages)
    }
}

/// Generates a model with the default distributions. A pure function of
/// its arguments.
pub fn generate_synthetic_usecase(
    n_processes: usize,
    n_messages: usize,
    parts: &[PartSpec],
    seed: u64,
) -> Result<ApplicationModel> {
    SyntheticSpec::new(parts.to_vec()).generate(n_processes, n_messages, seed)
}

/// Splits `total` by `weights` with largest-remainder rounding; ties go to
/// the earlier entry.
fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 {
        let mut out = vec![0; weights.len()];
        if let Some(first) = out.first_mut() {
            *first = total;
        }
        return out;
    }
    let exact: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut out: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let short = total - out.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        out[i] += 1;
    }
    out
}

fn log_uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi <= lo {
        return lo;
    }
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

fn round_to(v: f64, scale: f64) -> f64 {
    (v * scale).round() / scale
}

/// Draws `count` distinct ordered pairs over `n` nodes. Both endpoints are
/// chosen with weight `1 + degree`, so frequent communicators attract more
/// traffic.
fn attach_pairs(rng: &mut impl Rng, n: usize, count: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![0usize; n];
    let mut used = vec![vec![false; n]; n];
    let mut out_used = vec![0usize; n];
    let mut pairs = Vec::with_capacity(count);
    for _ in 0..count {
        let src = weighted_pick(rng, &degree, |i| out_used[i] + 1 < n);
        let dst = weighted_pick(rng, &degree, |j| j != src && !used[src][j]);
        used[src][dst] = true;
        out_used[src] += 1;
        degree[src] += 1;
        degree[dst] += 1;
        pairs.push((src, dst));
    }
    pairs
}

fn weighted_pick(rng: &mut impl Rng, degree: &[usize], allowed: impl Fn(usize) -> bool) -> usize {
    let total: usize = (0..degree.len())
        .filter(|&i| allowed(i))
        .map(|i| degree[i] + 1)
        .sum();
    debug_assert!(total > 0);
    let mut ticket = rng.gen_range(0..total);
    for (i, &d) in degree.iter().enumerate() {
        if !allowed(i) {
            continue;
        }
        let w = d + 1;
        if ticket < w {
            return i;
        }
        ticket -= w;
    }
    unreachable!("ticket below total weight")
}
