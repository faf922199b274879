use serde::{Deserialize, Serialize};

use crate::bounds::{max_removable, Formula};
use crate::lp::Tolerances;
use crate::scenario::{greedy_removal, run_cascade, CascadeMode, ScenarioProgram};

use super::ExperimentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverCounts {
    /// Stage problems of the cascade, `ℓ + 1`.
    pub cascade: usize,
    /// Initial solve plus every candidate re-solve actually performed.
    pub greedy_raw: usize,
    /// `1 + r(d + 1)`, see [`committed_greedy_count`].
    pub greedy_committed: usize,
    /// Cascade re-solves spent on support and degeneracy detection.
    pub cascade_support: usize,
}

/// Greedy cost with every step re-solving one problem per support scenario
/// (`d` of them) and once more after committing the removal.
pub fn committed_greedy_count(r: usize, d: usize) -> usize {
    1 + r * (d + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostComparison {
    pub r: usize,
    pub ell: usize,
    pub cascade_objective: f64,
    pub greedy_objective: f64,
    /// `100 (f_cascade - f_greedy) / f_greedy`.
    pub relative_difference_pct: f64,
    pub counts: SolverCounts,
}

pub fn solver_call_count(c: &CostComparison) -> SolverCounts {
    c.counts
}

fn relative_pct(f: f64, reference: f64) -> f64 {
    if f == reference {
        0.0
    } else {
        100.0 * (f - reference) / reference
    }
}

/// Cascade with `ℓ = r/d` against greedy with `r` single removals on the
/// same program.
pub fn compare_cost(
    program: &ScenarioProgram,
    r: usize,
    mode: CascadeMode,
    tol: &Tolerances,
) -> Result<CostComparison, ExperimentError> {
    let d = program.dim();
    if !r.is_multiple_of(d) {
        return Err(ExperimentError::Config(format!("r = {r} is not a multiple of d = {d}")));
    }
    let ell = r / d;
    let cascade = run_cascade(program, ell, mode, tol)?;
    let greedy = greedy_removal(program, r, tol)?;
    Ok(CostComparison {
        r,
        ell,
        cascade_objective: cascade.final_objective,
        greedy_objective: greedy.final_objective(),
        relative_difference_pct: relative_pct(cascade.final_objective, greedy.final_objective()),
        counts: SolverCounts {
            cascade: cascade.stage_solves,
            greedy_raw: greedy.solves,
            greedy_committed: committed_greedy_count(r, d),
            cascade_support: cascade.support_solves,
        },
    })
}

/// One ε of the sizing comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub r_cascade_raw: u64,
    pub r_cascade: u64,
    pub r_cg11_raw: u64,
    pub r_cg11: u64,
    pub objective_full: f64,
    /// Cascade stopped after `r_cascade / d` stages.
    pub objective_cascade: f64,
    /// Cascade stopped after `r_cg11 / d` stages.
    pub objective_cg11: f64,
    /// `100 (objective_cascade - objective_cg11) / objective_cg11`.
    pub improvement_pct: f64,
    /// Greedy removing `r_cg11_raw` scenarios.
    pub objective_greedy_cg11: f64,
    pub improvement_vs_greedy_pct: f64,
}

/// For each ε, sizes the removal with both bounds at confidence `beta`
/// (batch-rounded to multiples of `d`) and compares the resulting costs.
///
/// One cascade with the largest `ℓ` needed serves every ε, since stopping a
/// cascade after `ℓ` stages is the same as running it with that `ℓ`; the
/// greedy arm is reused the same way.
pub fn resource_compare(
    program: &ScenarioProgram,
    grid: &[f64],
    beta: f64,
    mode: CascadeMode,
    tol: &Tolerances,
) -> Result<Vec<SweepRow>, ExperimentError> {
    let m = program.len() as u64;
    let d = program.dim() as u64;
    let mut sizes = Vec::with_capacity(grid.len());
    for &eps in grid {
        sizes.push((
            eps,
            max_removable(m, d, eps, beta, Formula::Cascade, false)?,
            max_removable(m, d, eps, beta, Formula::Cascade, true)?,
            max_removable(m, d, eps, beta, Formula::Cg11, false)?,
            max_removable(m, d, eps, beta, Formula::Cg11, true)?,
        ));
    }
    let ell_max = sizes.iter().map(|s| s.2.max(s.4) / d).max().unwrap_or(0) as usize;
    let r_greedy = sizes.iter().map(|s| s.3).max().unwrap_or(0) as usize;
    let cascade = run_cascade(program, ell_max, mode, tol)?;
    let greedy = greedy_removal(program, r_greedy, tol)?;
    let stage = |r: u64| cascade.stages[(r / d) as usize].objective;

    Ok(sizes
        .into_iter()
        .map(|(epsilon, r_cascade_raw, r_cascade, r_cg11_raw, r_cg11)| {
            let objective_cascade = stage(r_cascade);
            let objective_cg11 = stage(r_cg11);
            let objective_greedy_cg11 = greedy.objective_after(r_cg11_raw as usize);
            SweepRow {
                epsilon,
                r_cascade_raw,
                r_cascade,
                r_cg11_raw,
                r_cg11,
                objective_full: cascade.stages[0].objective,
                objective_cascade,
                objective_cg11,
                improvement_pct: relative_pct(objective_cascade, objective_cg11),
                objective_greedy_cg11,
                improvement_vs_greedy_pct: relative_pct(objective_cascade, objective_greedy_cg11),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{gen_analytic, gen_resource, RandomSource};

    #[test]
    fn no_removal_means_no_difference() {
        let p = gen_resource(2, 2, 30, &mut RandomSource::new(4).stream(0));
        let c = compare_cost(&p, 0, CascadeMode::Regularized, &Tolerances::default()).unwrap();
        assert_eq!(c.relative_difference_pct, 0.0);
        assert_eq!(c.cascade_objective, c.greedy_objective);
        let n = solver_call_count(&c);
        assert_eq!((n.cascade, n.greedy_raw, n.greedy_committed), (1, 1, 1));
    }

    #[test]
    fn one_dimensional_cascade_and_greedy_coincide() {
        let p = gen_analytic(40, &mut RandomSource::new(8).stream(0));
        let c = compare_cost(&p, 6, CascadeMode::FullySupported, &Tolerances::default()).unwrap();
        assert_eq!(c.cascade_objective, c.greedy_objective);
        assert_eq!(c.counts.cascade, 7);
    }

    #[test]
    fn committed_count_convention() {
        assert_eq!(committed_greedy_count(100, 10), 1101);
        assert_eq!(committed_greedy_count(0, 10), 1);
    }

    #[test]
    fn rejects_partial_batch() {
        let p = gen_resource(2, 2, 30, &mut RandomSource::new(4).stream(0));
        assert!(matches!(
            compare_cost(&p, 3, CascadeMode::Regularized, &Tolerances::default()),
            Err(ExperimentError::Config(_))
        ));
    }
}
