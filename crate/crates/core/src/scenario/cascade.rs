//! The batched discarding cascade.
//!
//! Stages `k = 0..=ℓ` are solved on the scenarios not yet discarded. Each
//! stage `k < ℓ` discards `R_k = supp_k ∪ Z_k`, where `Z_k` pads the support
//! up to `d` scenarios with the smallest available labels. Stage `ℓ` computes
//! `R_ℓ` the same way but discards nothing; the union of all `R_k` is the
//! compression candidate of size `(ℓ+1)·d`.

use serde::{Deserialize, Serialize};

use crate::lp::Tolerances;

use super::support::{padding_set, reproduces, support_at};
use super::{LabelSet, ScenarioError, ScenarioProgram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CascadeMode {
    /// Discard exactly the support; any stage with `|supp| != d` is an error.
    FullySupported,
    /// Pad short supports with the smallest available labels.
    Regularized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub k: usize,
    pub minimizer: Vec<f64>,
    pub objective: f64,
    pub support: LabelSet,
    pub padding: LabelSet,
    /// `support ∪ padding`. Discarded for `k < ℓ`; at `k = ℓ` only recorded.
    pub removed: LabelSet,
    /// Enforcing only `support` does not reproduce `minimizer`.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeTrace {
    pub mode: CascadeMode,
    pub ell: usize,
    pub d: usize,
    pub stages: Vec<StageRecord>,
    pub final_x: Vec<f64>,
    pub final_objective: f64,
    pub compression_candidate: LabelSet,
    /// One per stage.
    pub stage_solves: usize,
    /// Sub-problems solved for support and degeneracy detection.
    pub support_solves: usize,
}

impl CascadeTrace {
    /// Every label discarded by stages `0..ℓ`.
    pub fn discarded(&self) -> LabelSet {
        self.stages[..self.ell]
            .iter()
            .flat_map(|s| s.removed.iter().copied())
            .collect()
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.stages.iter().map(|s| s.objective).collect()
    }
}

pub fn run_cascade(
    program: &ScenarioProgram,
    ell: usize,
    mode: CascadeMode,
    tol: &Tolerances,
) -> Result<CascadeTrace, ScenarioError> {
    let needed = (ell + 1) * program.dim();
    if needed >= program.len() {
        return Err(ScenarioError::InsufficientScenarios {
            needed: needed + 1,
            available: program.len(),
        });
    }
    cascade(program, ell, mode, tol)
}

/// Runs the stages; needs only `(ℓ+1)·d <= m`, which the compression
/// re-run relies on.
fn cascade(
    program: &ScenarioProgram,
    ell: usize,
    mode: CascadeMode,
    tol: &Tolerances,
) -> Result<CascadeTrace, ScenarioError> {
    let d = program.dim();
    if (ell + 1) * d > program.len() {
        return Err(ScenarioError::InsufficientScenarios {
            needed: (ell + 1) * d,
            available: program.len(),
        });
    }
    let mut available = program.labels();
    let mut stages = Vec::with_capacity(ell + 1);
    let mut candidate = LabelSet::new();
    let mut support_solves = 0;

    for k in 0..=ell {
        let solution = program.solve_stage(&available, tol)?;
        if !solution.is_optimal() {
            return Err(ScenarioError::NotOptimal {
                stage: k,
                status: solution.status,
            });
        }
        let support = support_at(program, &available, solution, tol)?;
        support_solves += support.resolves;
        let size = support.labels.len();
        match mode {
            CascadeMode::FullySupported if size != d => {
                return Err(ScenarioError::AssumptionViolated { stage: k, support: size, d });
            }
            CascadeMode::Regularized if size > d => {
                return Err(ScenarioError::DegeneracyDetected { stage: k, support: size, d });
            }
            _ => {}
        }
        let degenerate = !reproduces(program, &support, tol)?;
        support_solves += 1;
        let padding = padding_set(&available, &support.labels, d - size)?;
        let removed: LabelSet = support.labels.union(&padding).copied().collect();
        candidate.extend(removed.iter().copied());
        if k < ell {
            available.retain(|l| !removed.contains(l));
        }
        stages.push(StageRecord {
            k,
            objective: support.solution.objective,
            minimizer: support.solution.x,
            support: support.labels,
            padding,
            removed,
            degenerate,
        });
    }

    let last = stages.last().expect("at least one stage");
    Ok(CascadeTrace {
        mode,
        ell,
        d,
        final_x: last.minimizer.clone(),
        final_objective: last.objective,
        stages,
        compression_candidate: candidate,
        stage_solves: ell + 1,
        support_solves,
    })
}

/// Re-runs the cascade on the trace's compression candidate alone and checks
/// that every stage minimizer (and, when regularized, every padding set) is
/// reproduced.
pub fn verify_compression(
    program: &ScenarioProgram,
    ell: usize,
    trace: &CascadeTrace,
    tol: &Tolerances,
) -> Result<bool, ScenarioError> {
    verify_compression_with(program, ell, trace, &trace.compression_candidate, tol)
}

/// As [`verify_compression`] with an arbitrary candidate subset.
pub fn verify_compression_with(
    program: &ScenarioProgram,
    ell: usize,
    trace: &CascadeTrace,
    candidate: &LabelSet,
    tol: &Tolerances,
) -> Result<bool, ScenarioError> {
    let sub = program.restrict(candidate)?;
    let rerun = cascade(&sub, ell, trace.mode, tol)?;
    Ok(rerun.stages.len() == trace.stages.len()
        && rerun.stages.iter().zip(&trace.stages).all(|(a, b)| {
            tol.same_point(&a.minimizer, &b.minimizer)
                && (trace.mode == CascadeMode::FullySupported || a.padding == b.padding)
        }))
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::{lines, max_problem};
    use super::*;

    const DELTAS: [f64; 10] = [0.31, 0.92, 0.45, 0.77, 0.08, 0.66, 0.59, 0.85, 0.13, 0.24];

    #[test]
    fn max_problem_strips_maxima_in_order() {
        let p = max_problem(&DELTAS);
        let tol = Tolerances::default();
        let t = run_cascade(&p, 3, CascadeMode::FullySupported, &tol).unwrap();
        let removed: Vec<_> = t.stages[..3].iter().map(|s| s.removed.clone()).collect();
        assert_eq!(removed, vec![[2].into(), [8].into(), [4].into()]);
        assert!((t.final_x[0] - 0.66).abs() < 1e-12);
        assert_eq!(t.compression_candidate, [2, 8, 4, 6].into());
        assert_eq!(t.stage_solves, 4);
        assert!(verify_compression(&p, 3, &t, &tol).unwrap());
    }

    #[test]
    fn needs_more_than_ell_plus_one_times_d_scenarios() {
        let p = max_problem(&DELTAS[..4]);
        assert!(matches!(
            run_cascade(&p, 3, CascadeMode::FullySupported, &Tolerances::default()),
            Err(ScenarioError::InsufficientScenarios { .. })
        ));
    }

    // d = 2, ℓ = 2, fully supported at every stage; line 7 never binds and
    // only makes m = 7 > (ℓ+1)·d. The final vertex (5, 0) still satisfies
    // lines 1 and 3, both discarded earlier.
    fn removed_but_satisfied() -> ScenarioProgram {
        lines(
            &[
                (1, -1.0, 3.0),
                (2, 1.0, 3.0),
                (3, -2.0, 2.0),
                (4, 0.5, 2.0),
                (5, -0.3, 1.5),
                (6, 0.3, -1.5),
                (7, 0.0, -5.0),
            ],
            (-10.0, 10.0),
        )
    }

    #[test]
    fn discarded_scenario_need_not_be_violated() {
        let p = removed_but_satisfied();
        let tol = Tolerances::default();
        let t = run_cascade(&p, 2, CascadeMode::FullySupported, &tol).unwrap();
        assert_eq!(t.stages[0].support, [1, 2].into());
        assert_eq!(t.stages[1].support, [3, 4].into());
        assert_eq!(t.stages[2].support, [5, 6].into());
        assert!(tol.same_point(&t.final_x, &[5.0, 0.0]));
        let satisfied: Vec<_> = t
            .discarded()
            .into_iter()
            .filter(|&l| !p.scenario(l).unwrap().violated_by(&t.final_x, tol.feas))
            .collect();
        assert_eq!(satisfied, vec![1, 3]);
        assert!(verify_compression(&p, 2, &t, &tol).unwrap());
    }

    // d = 2, m = 7: every line is increasing, so each minimizer sits on the
    // x1 = 0 face with a single support scenario.
    fn singly_supported() -> ScenarioProgram {
        lines(
            &[
                (1, 1.0, 6.0),
                (2, 1.0, 5.0),
                (3, 1.0, 4.5),
                (4, 1.0, 1.0),
                (5, 1.0, 7.0),
                (6, 1.0, 2.0),
                (7, 1.0, 3.0),
            ],
            (0.0, 10.0),
        )
    }

    #[test]
    fn regularized_padding_follows_label_order() {
        let p = singly_supported();
        let tol = Tolerances::default();
        let t = run_cascade(&p, 2, CascadeMode::Regularized, &tol).unwrap();
        assert_eq!((t.stages[0].support.clone(), t.stages[0].padding.clone()), ([5].into(), [1].into()));
        assert_eq!((t.stages[1].support.clone(), t.stages[1].padding.clone()), ([2].into(), [3].into()));
        assert_eq!((t.stages[2].support.clone(), t.stages[2].padding.clone()), ([7].into(), [4].into()));
        assert!(tol.same_point(&t.final_x, &[0.0, 3.0]));
        assert_eq!(t.compression_candidate.len(), 6);
        assert!(t.stages.iter().all(|s| !s.degenerate));
        assert!(verify_compression(&p, 2, &t, &tol).unwrap());

        assert!(matches!(
            run_cascade(&p, 2, CascadeMode::FullySupported, &tol),
            Err(ScenarioError::AssumptionViolated { stage: 0, support: 1, d: 2 })
        ));
    }

    #[test]
    fn swapping_a_padding_label_breaks_compression() {
        let p = singly_supported();
        let tol = Tolerances::default();
        let t = run_cascade(&p, 1, CascadeMode::Regularized, &tol).unwrap();
        // C = {5, 1, 2, 3}; label 6 is never support
        let mut mutated = t.compression_candidate.clone();
        mutated.remove(&3);
        mutated.insert(6);
        assert!(!verify_compression_with(&p, 1, &t, &mutated, &tol).unwrap());
    }
}
