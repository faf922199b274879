use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::lp::Tolerances;
use crate::scenario::{greedy_removal, run_cascade, CascadeMode, ScenarioError};

use super::{map_trials, Execution, ExperimentError, Generator, RandomSource, ScenarioSampler};

/// Trials lost to the support assumption above this fraction fail the run.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.01;

const Z95: f64 = 1.96;

fn half_width(p: f64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    Z95 * (p * (1.0 - p) / n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViolationEstimate {
    pub point: f64,
    pub n_samples: u64,
    pub half_width_95: f64,
}

/// Fraction of `n_samples` fresh scenarios whose block `x` violates by more
/// than `feas`.
pub fn estimate_violation<S, R>(sampler: &S, x: &[f64], n_samples: u64, feas: f64, rng: &mut R) -> ViolationEstimate
where
    S: ScenarioSampler + ?Sized,
    R: Rng + ?Sized,
{
    let hits = (0..n_samples)
        .filter(|_| sampler.sample(0, rng).violated_by(x, feas))
        .count() as u64;
    let point = if n_samples == 0 { 0.0 } else { hits as f64 / n_samples as f64 };
    ViolationEstimate {
        point,
        n_samples,
        half_width_95: half_width(point, n_samples),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "kebab-case")]
pub enum Scheme {
    Cascade { ell: usize, mode: CascadeMode },
    Greedy { r: usize },
}

impl Scheme {
    /// Total number of discarded scenarios.
    pub fn removed(&self, d: usize) -> usize {
        match *self {
            Scheme::Cascade { ell, .. } => ell * d,
            Scheme::Greedy { r } => r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterMcConfig {
    pub generator: Generator,
    pub m: usize,
    pub scheme: Scheme,
    pub epsilon: f64,
    pub trials: u64,
    /// Fresh scenarios per trial where no closed-form violation exists.
    pub inner_samples: u64,
    pub source: RandomSource,
    pub tol: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub trial: u64,
    /// Empty for excluded trials.
    pub final_objective: Option<f64>,
    pub violation: Option<f64>,
    pub violation_half_width: Option<f64>,
    pub exceeded: bool,
    /// Estimated violation within its own half-width of ε.
    pub ambiguous: bool,
    pub excluded: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuterProbabilityEstimate {
    pub epsilon: f64,
    /// Trials counted, exclusions removed.
    pub trials: u64,
    pub exceed_count: u64,
    pub point: f64,
    pub half_width_95: f64,
    pub excluded: u64,
    pub ambiguous: u64,
    /// `half_width_95` widened by the fraction of ambiguous trials.
    pub combined_half_width: f64,
}

impl OuterProbabilityEstimate {
    pub fn from_records(epsilon: f64, records: &[TrialRecord]) -> Self {
        let kept: Vec<_> = records.iter().filter(|r| !r.excluded).collect();
        let trials = kept.len() as u64;
        let exceed_count = kept.iter().filter(|r| r.exceeded).count() as u64;
        let ambiguous = kept.iter().filter(|r| r.ambiguous).count() as u64;
        let point = if trials == 0 { 0.0 } else { exceed_count as f64 / trials as f64 };
        let hw = half_width(point, trials);
        Self {
            epsilon,
            trials,
            exceed_count,
            point,
            half_width_95: hw,
            excluded: records.len() as u64 - trials,
            ambiguous,
            combined_half_width: if trials == 0 { hw } else { hw + ambiguous as f64 / trials as f64 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterMcRun {
    pub estimate: OuterProbabilityEstimate,
    pub records: Vec<TrialRecord>,
}

/// Estimates `P^m{ V(x*) > ε }` by repeated draws of the whole sample.
///
/// Trial `t` draws its program and any inner scenarios from stream `t`.
/// Trials whose support breaks the mode's cardinality assumption are kept as
/// excluded records; any other error aborts, reporting the lowest failing
/// trial.
pub fn outer_probability_mc(cfg: &OuterMcConfig, exec: Execution) -> Result<OuterMcRun, ExperimentError> {
    if !(0.0..=1.0).contains(&cfg.epsilon) {
        return Err(ExperimentError::Config(format!("epsilon must lie in [0, 1], got {}", cfg.epsilon)));
    }
    if cfg.trials == 0 {
        return Err(ExperimentError::Config("need at least one trial".into()));
    }
    let outcomes = map_trials(cfg.trials, exec, |t| run_trial(cfg, t));
    let mut records = Vec::with_capacity(outcomes.len());
    for (t, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(rec) => records.push(rec),
            Err(e) if e.is_assumption() => records.push(TrialRecord {
                seed: cfg.source.seed,
                trial: t as u64,
                final_objective: None,
                violation: None,
                violation_half_width: None,
                exceeded: false,
                ambiguous: false,
                excluded: true,
            }),
            Err(e) => return Err(e.into()),
        }
    }
    let estimate = OuterProbabilityEstimate::from_records(cfg.epsilon, &records);
    if estimate.excluded as f64 > MAX_EXCLUDED_FRACTION * cfg.trials as f64 {
        return Err(ExperimentError::ExclusionRate {
            excluded: estimate.excluded,
            trials: cfg.trials,
        });
    }
    Ok(OuterMcRun { estimate, records })
}

fn run_trial(cfg: &OuterMcConfig, trial: u64) -> Result<TrialRecord, ScenarioError> {
    let mut rng = cfg.source.stream(trial);
    let program = cfg.generator.program(cfg.m, &mut rng);
    let (x, objective) = match cfg.scheme {
        Scheme::Cascade { ell, mode } => {
            let t = run_cascade(&program, ell, mode, &cfg.tol)?;
            (t.final_x, t.final_objective)
        }
        Scheme::Greedy { r } => {
            let t = greedy_removal(&program, r, &cfg.tol)?;
            (t.final_x().to_vec(), t.final_objective())
        }
    };
    let (violation, hw) = match cfg.generator.exact_violation(&x) {
        Some(v) => (v, 0.0),
        None => {
            let e = estimate_violation(&cfg.generator, &x, cfg.inner_samples, cfg.tol.feas, &mut rng);
            (e.point, e.half_width_95)
        }
    };
    Ok(TrialRecord {
        seed: cfg.source.seed,
        trial,
        final_objective: Some(objective),
        violation: Some(violation),
        violation_half_width: Some(hw),
        exceeded: violation > cfg.epsilon,
        ambiguous: hw > 0.0 && (violation - cfg.epsilon).abs() <= hw,
        excluded: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::analytic_violation_cdf;

    fn analytic(trials: u64, epsilon: f64) -> OuterMcConfig {
        OuterMcConfig {
            generator: Generator::Analytic,
            m: 20,
            scheme: Scheme::Cascade {
                ell: 2,
                mode: CascadeMode::FullySupported,
            },
            epsilon,
            trials,
            inner_samples: 0,
            source: RandomSource::new(11),
            tol: Tolerances::default(),
        }
    }

    #[test]
    fn analytic_estimate_matches_closed_form() {
        let run = outer_probability_mc(&analytic(4000, 0.15), Execution::Parallel).unwrap();
        let truth = analytic_violation_cdf(20, 2, 0.15).unwrap();
        let e = run.estimate;
        assert_eq!(e.excluded, 0);
        assert!((e.point - truth).abs() <= 3.0 * e.half_width_95, "{} vs {truth}", e.point);
    }

    #[test]
    fn epsilon_one_never_exceeded() {
        let run = outer_probability_mc(&analytic(200, 1.0), Execution::Sequential).unwrap();
        assert_eq!(run.estimate.exceed_count, 0);
        assert_eq!(run.estimate.point, 0.0);
    }

    #[test]
    fn execution_mode_does_not_change_records() {
        let cfg = analytic(300, 0.2);
        let a = outer_probability_mc(&cfg, Execution::Sequential).unwrap();
        let b = outer_probability_mc(&cfg, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn inner_estimate_tracks_analytic_truth() {
        let mut rng = RandomSource::new(5).stream(0);
        let e = estimate_violation(&Generator::Analytic, &[0.8], 100_000, 1e-7, &mut rng);
        assert!((e.point - 0.2).abs() <= 3.0 * e.half_width_95);
        let e = estimate_violation(&Generator::Analytic, &[1.0], 1000, 1e-7, &mut rng);
        assert_eq!(e.point, 0.0);
        assert_eq!(e.half_width_95, 0.0);
    }
}
