use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::lp::{Bound, LinearProgram, Row};
use crate::scenario::{Label, Scenario, ScenarioProgram};

/// Resource-use coefficients are `RESOURCE_GAIN · Laplace(mean, scale)`.
pub const RESOURCE_GAIN: f64 = 0.04;
pub const LAPLACE_MEAN: f64 = 1.0;
/// Variance 3 means scale `sqrt(3/2)`.
pub const LAPLACE_SCALE: f64 = 1.224_744_871_391_589;

/// Draws i.i.d. scenarios from a fixed law over a fixed deterministic part.
pub trait ScenarioSampler {
    fn base(&self) -> LinearProgram;

    fn sample<R: Rng + ?Sized>(&self, label: Label, rng: &mut R) -> Scenario;

    /// `labels 1..=m` in draw order.
    fn program<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> ScenarioProgram {
        let scenarios = (1..=m as Label).map(|l| self.sample(l, rng)).collect();
        ScenarioProgram::new(self.base(), scenarios).expect("generated blocks are well formed")
    }

    /// Closed-form violation probability of `x`, where one is known.
    fn exact_violation(&self, _x: &[f64]) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Generator {
    /// `min x` on `[0, 1]` subject to `x >= δ`, `δ ~ U[0, 1)`.
    Analytic,
    /// `max Σx` subject to `A(δ) x <= 1`, `x >= 0`, with `n` resource rows
    /// per scenario.
    Resource { d: usize, n: usize },
}

impl Generator {
    pub fn dim(&self) -> usize {
        match *self {
            Generator::Analytic => 1,
            Generator::Resource { d, .. } => d,
        }
    }
}

impl ScenarioSampler for Generator {
    fn base(&self) -> LinearProgram {
        match *self {
            Generator::Analytic => LinearProgram::new(vec![1.0], vec![], vec![Bound::new(0.0, 1.0)]),
            Generator::Resource { d, .. } => LinearProgram::new(vec![-1.0; d], vec![], vec![Bound::nonnegative(); d]),
        }
        .expect("generator dimensions are positive")
    }

    fn sample<R: Rng + ?Sized>(&self, label: Label, rng: &mut R) -> Scenario {
        match *self {
            Generator::Analytic => {
                let delta: f64 = rng.random();
                Scenario::new(label, vec![Row::new(vec![-1.0], -delta)])
            }
            Generator::Resource { d, n } => {
                let rows = (0..n)
                    .map(|_| {
                        let a = (0..d)
                            .map(|_| RESOURCE_GAIN * laplace(rng, LAPLACE_MEAN, LAPLACE_SCALE))
                            .collect();
                        Row::new(a, 1.0)
                    })
                    .collect();
                Scenario::new(label, rows)
            }
        }
    }

    fn exact_violation(&self, x: &[f64]) -> Option<f64> {
        match self {
            Generator::Analytic => Some((1.0 - x[0]).clamp(0.0, 1.0)),
            Generator::Resource { .. } => None,
        }
    }
}

pub fn gen_analytic<R: Rng + ?Sized>(m: usize, rng: &mut R) -> ScenarioProgram {
    Generator::Analytic.program(m, rng)
}

pub fn gen_resource<R: Rng + ?Sized>(d: usize, n: usize, m: usize, rng: &mut R) -> ScenarioProgram {
    Generator::Resource { d, n }.program(m, rng)
}

/// Inverse-CDF Laplace draw.
fn laplace<R: Rng + ?Sized>(rng: &mut R, mean: f64, scale: f64) -> f64 {
    let u: f64 = rng.sample::<f64, _>(Open01) - 0.5;
    mean - scale * u.signum() * (-2.0 * u.abs()).ln_1p()
}
