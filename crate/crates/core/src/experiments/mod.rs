//! Seeded generators, Monte-Carlo estimators and the two reference
//! experiments: the one-dimensional uniform example and the resource
//! allocation LP.
//!
//! Every trial draws from its own ChaCha8 stream, selected by the trial
//! index, so results depend only on `(seed, trial)` and never on how trials
//! are scheduled across threads.

mod compare;
mod generators;
mod montecarlo;
pub mod output;

pub use compare::{
    compare_cost, committed_greedy_count, resource_compare, solver_call_count, CostComparison, SolverCounts, SweepRow,
};
pub use generators::{gen_analytic, gen_resource, Generator, ScenarioSampler, LAPLACE_MEAN, LAPLACE_SCALE, RESOURCE_GAIN};
pub use montecarlo::{
    estimate_violation, outer_probability_mc, OuterMcConfig, OuterMcRun, OuterProbabilityEstimate, Scheme, TrialRecord,
    ViolationEstimate, MAX_EXCLUDED_FRACTION,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::BoundError;
use crate::scenario::ScenarioError;

pub const RNG_ALGORITHM: &str = "chacha8/seed_from_u64/stream=index";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error("{excluded} of {trials} trials broke the support assumption (limit 1%)")]
    ExclusionRate { excluded: u64, trials: u64 },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomSource {
    pub seed: u64,
    pub algorithm: String,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            algorithm: RNG_ALGORITHM.to_string(),
        }
    }

    /// Independent stream `index` of this seed.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

/// How trials are scheduled. Results are identical either way; without the
/// `parallel` feature `Parallel` runs sequentially.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// `f(0), …, f(n-1)` in index order.
pub(crate) fn map_trials<T, F>(n: u64, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Parses `start:step:end` into an inclusive grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, ExperimentError> {
    let bad = || ExperimentError::Config(format!("grid must be start:step:end, got {spec:?}"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [start, step, end] = parts[..] else {
        return Err(bad());
    };
    if !step.is_finite() || step <= 0.0 || !start.is_finite() || !end.is_finite() || end < start {
        return Err(bad());
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    // snap to 12 decimals so 0.01 + 5·0.005 prints as 0.035
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}
