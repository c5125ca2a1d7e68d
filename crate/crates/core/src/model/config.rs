use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Process-allocation GA settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Sp1Config {
    pub max_generations: usize,
    pub population: usize,
    pub candidate_module_slots: usize,
    /// Generations of the load-balancing phase that runs after the cost
    /// phase with the inclusion vector frozen.
    pub secondary_generations: usize,
    pub tournament_size: usize,
    pub elitism: usize,
    pub crossover_rate: f64,
    /// Probability that a child receives one random mutation.
    pub mutation_rate: f64,
    /// Scale compute and interface capacities by the overload threshold so
    /// the allocation already respects it.
    pub tighten_capacities: bool,
    /// Solve each part independently instead of one run with a part-mixing
    /// penalty.
    pub per_part: bool,
    /// Penalty coefficient; `None` means ten times the total catalog cost.
    pub penalty: Option<f64>,
}

impl Default for Sp1Config {
    fn default() -> Self {
        Sp1Config {
            max_generations: 200,
            population: 400,
            candidate_module_slots: 30,
            secondary_generations: 200,
            tournament_size: 3,
            elitism: 2,
            crossover_rate: 0.9,
            mutation_rate: 0.5,
            tighten_capacities: true,
            per_part: false,
            penalty: None,
        }
    }
}

/// Topology search (MCTS) settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Sp2Config {
    pub max_epochs: usize,
    pub parallel_rollouts: usize,
    pub uct_c: f64,
    /// Maximum rule applications per rollout. `None` derives
    /// `4 * (required modules + expected switches)`.
    pub rollout_depth_cap: Option<usize>,
    /// Untried actions kept per tree node; larger action sets are sampled.
    pub max_untried: usize,
}

impl Default for Sp2Config {
    fn default() -> Self {
        Sp2Config {
            max_epochs: 10_000,
            parallel_rollouts: 1,
            uct_c: 2.8,
            rollout_depth_cap: None,
            max_untried: 256,
        }
    }
}

/// Module-mapping GA settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Sp3Config {
    pub max_generations: usize,
    pub population: usize,
    pub tournament_size: usize,
    pub elitism: usize,
    pub mutation_rate: f64,
}

impl Default for Sp3Config {
    fn default() -> Self {
        Sp3Config {
            max_generations: 3,
            population: 50,
            tournament_size: 3,
            elitism: 1,
            mutation_rate: 0.3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardWeights {
    pub latency: f64,
    pub cost: f64,
    pub resilience: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            latency: 1.0,
            cost: 1.0,
            resilience: 1.0,
        }
    }
}

impl RewardWeights {
    pub fn sum(&self) -> f64 {
        self.latency + self.cost + self.resilience
    }
}

/// Constants of the latency score.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LatencyParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for LatencyParams {
    fn default() -> Self {
        LatencyParams {
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub sp1: Sp1Config,
    pub sp2: Sp2Config,
    pub sp3: Sp3Config,
    pub weights: RewardWeights,
    pub latency: LatencyParams,
    pub overload_threshold: f64,
    pub required_disjoint_paths: usize,
    pub required_segments: usize,
    /// Cost of one physical link.
    pub link_cost: f64,
    /// Count vertices whose neighbor count exceeds their module type's port
    /// limit as a gate failure. Off by default; the count is always reported.
    pub enforce_port_limits: bool,
    pub rng_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            sp1: Sp1Config::default(),
            sp2: Sp2Config::default(),
            sp3: Sp3Config::default(),
            weights: RewardWeights::default(),
            latency: LatencyParams::default(),
            overload_threshold: 0.8,
            required_disjoint_paths: 2,
            required_segments: 2,
            link_cost: 0.1,
            enforce_port_limits: false,
            rng_seed: 1,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("sp1.max_generations", self.sp1.max_generations),
            ("sp1.population", self.sp1.population),
            ("sp1.candidate_module_slots", self.sp1.candidate_module_slots),
            ("sp1.tournament_size", self.sp1.tournament_size),
            ("sp2.max_epochs", self.sp2.max_epochs),
            ("sp2.parallel_rollouts", self.sp2.parallel_rollouts),
            ("sp2.max_untried", self.sp2.max_untried),
            ("sp3.max_generations", self.sp3.max_generations),
            ("sp3.population", self.sp3.population),
            ("sp3.tournament_size", self.sp3.tournament_size),
            ("required_disjoint_paths", self.required_disjoint_paths),
            ("required_segments", self.required_segments),
        ];
        for (name, value) in counts {
            if value < 1 {
                return Err(Error::Config(format!("{name} must be >= 1")));
            }
        }
        if self.sp2.rollout_depth_cap == Some(0) {
            return Err(Error::Config("sp2.rollout_depth_cap must be >= 1".into()));
        }
        let w = &self.weights;
        let weights = [w.latency, w.cost, w.resilience];
        if weights.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Config("reward weights must be non-negative".into()));
        }
        if w.sum() <= 0.0 {
            return Err(Error::Config("reward weights must not all be zero".into()));
        }
        if !(self.overload_threshold > 0.0 && self.overload_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "overload_threshold must lie in (0, 1], got {}",
                self.overload_threshold
            )));
        }
        if !(self.latency.gamma > 0.0) {
            return Err(Error::Config("latency.gamma must be positive".into()));
        }
        if !(self.sp2.uct_c >= 0.0) {
            return Err(Error::Config("sp2.uct_c must be non-negative".into()));
        }
        for (name, rate) in [
            ("sp1.crossover_rate", self.sp1.crossover_rate),
            ("sp1.mutation_rate", self.sp1.mutation_rate),
            ("sp3.mutation_rate", self.sp3.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::Config(format!("{name} must lie in [0, 1]")));
            }
        }
        if let Some(p) = self.sp1.penalty {
            if !(p > 0.0) {
                return Err(Error::Config("sp1.penalty must be positive".into()));
            }
        }
        if !(self.link_cost >= 0.0) {
            return Err(Error::Config("link_cost must be non-negative".into()));
        }
        Ok(())
    }
}
