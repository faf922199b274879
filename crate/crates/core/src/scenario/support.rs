use crate::lp::{LpSolution, LpStatus, Tolerances};

use super::{Label, LabelSet, ScenarioError, ScenarioProgram};

/// Support scenarios of one stage together with the stage minimizer.
#[derive(Debug, Clone)]
pub struct Support {
    pub solution: LpSolution,
    pub labels: LabelSet,
    /// Sub-problems solved to decide membership.
    pub resolves: usize,
}

/// Scenarios of `active` whose removal moves the minimizer by more than
/// `tol.x` (or leaves the problem without a minimizer).
///
/// Only scenarios owning a row that is active at the minimizer are tested;
/// dropping any other scenario leaves the minimizer optimal and, the
/// tie-break being a function of the feasible set's optimal face, unchanged.
pub fn support_set(program: &ScenarioProgram, active: &LabelSet, tol: &Tolerances) -> Result<Support, ScenarioError> {
    let solution = program.solve_stage(active, tol)?;
    if !solution.is_optimal() {
        return Err(ScenarioError::NotOptimal {
            stage: 0,
            status: solution.status,
        });
    }
    support_at(program, active, solution, tol)
}

pub(crate) fn support_at(
    program: &ScenarioProgram,
    active: &LabelSet,
    solution: LpSolution,
    tol: &Tolerances,
) -> Result<Support, ScenarioError> {
    let mut labels = LabelSet::new();
    let mut resolves = 0;
    for &label in active {
        let scenario = program.scenario(label).ok_or(ScenarioError::UnknownLabel(label))?;
        if !scenario.touches(&solution.x, tol.active) {
            continue;
        }
        let mut rest = active.clone();
        rest.remove(&label);
        let without = program.solve_stage(&rest, tol)?;
        resolves += 1;
        if !without.is_optimal() || !tol.same_point(&without.x, &solution.x) {
            labels.insert(label);
        }
    }
    Ok(Support {
        solution,
        labels,
        resolves,
    })
}

/// True iff enforcing only the support scenarios reproduces the minimizer.
pub fn is_nondegenerate(program: &ScenarioProgram, active: &LabelSet, tol: &Tolerances) -> Result<bool, ScenarioError> {
    let support = support_set(program, active, tol)?;
    reproduces(program, &support, tol)
}

pub(crate) fn reproduces(program: &ScenarioProgram, support: &Support, tol: &Tolerances) -> Result<bool, ScenarioError> {
    let reduced = program.solve_stage(&support.labels, tol)?;
    Ok(reduced.status == LpStatus::Optimal && tol.same_point(&reduced.x, &support.solution.x))
}

/// The `nu` smallest labels of `available \ support`.
pub fn padding_set(available: &LabelSet, support: &LabelSet, nu: usize) -> Result<LabelSet, ScenarioError> {
    let chosen: LabelSet = available.difference(support).take(nu).copied().collect();
    if chosen.len() < nu {
        return Err(ScenarioError::InsufficientScenarios {
            needed: nu,
            available: chosen.len(),
        });
    }
    Ok(chosen)
}

pub(crate) fn smallest(labels: &LabelSet) -> Option<Label> {
    labels.iter().next().copied()
}
