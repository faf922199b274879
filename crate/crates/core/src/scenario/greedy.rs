//! One-at-a-time greedy discarding baseline.

use serde::{Deserialize, Serialize};

use crate::lp::{LpSolution, LpStatus, Tolerances};

use super::support::smallest;
use super::{Label, LabelSet, ScenarioError, ScenarioProgram};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyStep {
    pub removed: Label,
    pub objective: f64,
    pub x: Vec<f64>,
    /// Removals tried at this step.
    pub candidates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyTrace {
    pub initial_x: Vec<f64>,
    pub initial_objective: f64,
    pub steps: Vec<GreedyStep>,
    /// Initial solve plus one per candidate tried.
    pub solves: usize,
}

impl GreedyTrace {
    pub fn final_x(&self) -> &[f64] {
        self.steps.last().map_or(&self.initial_x, |s| &s.x)
    }

    pub fn final_objective(&self) -> f64 {
        self.steps.last().map_or(self.initial_objective, |s| s.objective)
    }

    /// Objective after `r` removals, for `r = 0..=steps.len()`.
    pub fn objective_after(&self, r: usize) -> f64 {
        if r == 0 {
            self.initial_objective
        } else {
            self.steps[r - 1].objective
        }
    }

    pub fn removed(&self) -> Vec<Label> {
        self.steps.iter().map(|s| s.removed).collect()
    }
}

/// Removes `r` scenarios one at a time, each time the one whose removal
/// gives the lowest re-solved objective (smallest label on ties).
///
/// Only scenarios owning an active row at the current minimizer are tried:
/// removing any other one cannot move the minimizer. Removals that leave the
/// program unbounded are skipped. When several removals tie (including a
/// degenerate vertex where none moves the minimizer) the smallest label wins.
pub fn greedy_removal(program: &ScenarioProgram, r: usize, tol: &Tolerances) -> Result<GreedyTrace, ScenarioError> {
    let d = program.dim();
    if r + d >= program.len() {
        return Err(ScenarioError::InsufficientScenarios {
            needed: r + d + 1,
            available: program.len(),
        });
    }
    let mut active = program.labels();
    let initial = program.solve_stage(&active, tol)?;
    if !initial.is_optimal() {
        return Err(ScenarioError::NotOptimal {
            stage: 0,
            status: initial.status,
        });
    }
    let mut trace = GreedyTrace {
        initial_x: initial.x.clone(),
        initial_objective: initial.objective,
        steps: Vec::with_capacity(r),
        solves: 1,
    };
    let mut current = initial;

    for step in 1..=r {
        let touching: LabelSet = active
            .iter()
            .copied()
            .filter(|&l| program.scenario(l).is_some_and(|s| s.touches(&current.x, tol.active)))
            .collect();
        let mut best: Option<(Label, LpSolution)> = None;
        for &label in &touching {
            let mut rest = active.clone();
            rest.remove(&label);
            let sol = program.solve_stage(&rest, tol)?;
            trace.solves += 1;
            if !sol.is_optimal() {
                continue;
            }
            let better = match &best {
                None => true,
                Some((_, b)) => sol.objective < b.objective - tie_width(b.objective),
            };
            if better {
                best = Some((label, sol));
            }
        }
        let (label, sol) = match best {
            Some(b) => b,
            // nothing binds, so any removal keeps the minimizer
            None if touching.is_empty() => (smallest(&active).expect("r + d < m"), current.clone()),
            None => {
                return Err(ScenarioError::NotOptimal {
                    stage: step,
                    status: LpStatus::Unbounded,
                })
            }
        };
        active.remove(&label);
        trace.steps.push(GreedyStep {
            removed: label,
            objective: sol.objective,
            x: sol.x.clone(),
            candidates: touching.len(),
        });
        current = sol;
    }
    Ok(trace)
}

fn tie_width(v: f64) -> f64 {
    1e-12 * (1.0 + v.abs())
}
