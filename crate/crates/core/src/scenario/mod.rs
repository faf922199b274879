//! Scenario programs and the discarding schemes built on them.
//!
//! A [`ScenarioProgram`] is a linear program whose uncertain constraints come
//! in labelled blocks, one block per sampled scenario. Scenarios are always
//! enforced or discarded as whole blocks.

mod cascade;
mod greedy;
mod support;

pub use cascade::{run_cascade, verify_compression, verify_compression_with, CascadeMode, CascadeTrace, StageRecord};
pub use greedy::{greedy_removal, GreedyStep, GreedyTrace};
pub use support::{is_nondegenerate, padding_set, support_set, Support};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{self, validate_row, Bound, LinearProgram, LpError, LpSolution, LpStatus, Row, Tolerances};

/// Scenario identifier; the numeric order is the linear order used for
/// padding.
pub type Label = u64;

pub type LabelSet = BTreeSet<Label>;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("duplicate scenario label {0}")]
    DuplicateLabel(Label),
    #[error("scenario {0} has no rows")]
    EmptyBlock(Label),
    #[error("unknown scenario label {0}")]
    UnknownLabel(Label),
    #[error("stage {stage}: program is {status:?}")]
    NotOptimal { stage: usize, status: LpStatus },
    #[error("stage {stage}: support has {support} scenarios, fully-supported mode needs {d}")]
    AssumptionViolated { stage: usize, support: usize, d: usize },
    #[error("stage {stage}: support has {support} > d = {d} scenarios")]
    DegeneracyDetected { stage: usize, support: usize, d: usize },
    #[error("need {needed} scenarios, only {available} available")]
    InsufficientScenarios { needed: usize, available: usize },
    #[error("invalid program file: {0}")]
    Json(#[from] serde_json::Error),
}

impl ScenarioError {
    /// Violations of a structural hypothesis (support cardinality) as opposed
    /// to solver or input failures.
    pub fn is_assumption(&self) -> bool {
        matches!(
            self,
            ScenarioError::AssumptionViolated { .. } | ScenarioError::DegeneracyDetected { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub label: Label,
    pub rows: Vec<Row>,
}

impl Scenario {
    pub fn new(label: Label, rows: Vec<Row>) -> Self {
        Self { label, rows }
    }

    /// True iff some row exceeds its right-hand side by more than `feas`.
    pub fn violated_by(&self, x: &[f64], feas: f64) -> bool {
        self.rows.iter().any(|r| r.residual(x) > feas)
    }

    fn touches(&self, x: &[f64], active: f64) -> bool {
        self.rows.iter().any(|r| r.residual(x).abs() <= active)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioProgram {
    base: LinearProgram,
    scenarios: Vec<Scenario>,
    by_label: BTreeMap<Label, usize>,
}

impl ScenarioProgram {
    /// `base` carries the cost and the deterministic domain (bounds plus any
    /// fixed rows).
    pub fn new(base: LinearProgram, scenarios: Vec<Scenario>) -> Result<Self, ScenarioError> {
        let mut by_label = BTreeMap::new();
        for (i, s) in scenarios.iter().enumerate() {
            if s.rows.is_empty() {
                return Err(ScenarioError::EmptyBlock(s.label));
            }
            for row in &s.rows {
                validate_row(row, base.dim())?;
            }
            if by_label.insert(s.label, i).is_some() {
                return Err(ScenarioError::DuplicateLabel(s.label));
            }
        }
        Ok(Self {
            base,
            scenarios,
            by_label,
        })
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn base(&self) -> &LinearProgram {
        &self.base
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn labels(&self) -> LabelSet {
        self.by_label.keys().copied().collect()
    }

    pub fn scenario(&self, label: Label) -> Option<&Scenario> {
        self.by_label.get(&label).map(|&i| &self.scenarios[i])
    }

    /// Same cost and domain, keeping only the scenarios in `labels`.
    pub fn restrict(&self, labels: &LabelSet) -> Result<Self, ScenarioError> {
        let scenarios = labels
            .iter()
            .map(|&l| self.scenario(l).cloned().ok_or(ScenarioError::UnknownLabel(l)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(self.base.clone(), scenarios)
    }

    /// Same program with its scenario list in a different order.
    pub fn reordered(&self, order: &[usize]) -> Result<Self, ScenarioError> {
        Self::new(
            self.base.clone(),
            order.iter().map(|&i| self.scenarios[i].clone()).collect(),
        )
    }

    /// The LP enforcing exactly the scenarios in `active`, blocks appended in
    /// label order.
    pub fn stage_program(&self, active: &LabelSet) -> Result<LinearProgram, ScenarioError> {
        let mut lp = self.base.clone();
        for &label in active {
            let s = self.scenario(label).ok_or(ScenarioError::UnknownLabel(label))?;
            for row in &s.rows {
                lp.push_row(row.clone())?;
            }
        }
        Ok(lp)
    }

    pub fn solve_stage(&self, active: &LabelSet, tol: &Tolerances) -> Result<LpSolution, ScenarioError> {
        Ok(lp::solve_with(&self.stage_program(active)?, tol)?)
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.base.objective(x)
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let file: ProgramFile = serde_json::from_str(text)?;
        file.into_program()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ProgramFile::from(self)).expect("program serializes")
    }
}

/// On-disk layout. Infinite bounds are written as `null`.
#[derive(Debug, Serialize, Deserialize)]
pub struct ProgramFile {
    pub d: usize,
    pub cost: Vec<f64>,
    pub bounds: Vec<[Option<f64>; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub domain_rows: Vec<Row>,
    pub scenarios: Vec<Scenario>,
}

impl ProgramFile {
    pub fn into_program(self) -> Result<ScenarioProgram, ScenarioError> {
        if self.cost.len() != self.d {
            return Err(LpError::DimensionMismatch {
                what: "cost",
                expected: self.d,
                found: self.cost.len(),
            }
            .into());
        }
        let bounds = self
            .bounds
            .iter()
            .map(|[lo, hi]| Bound::new(lo.unwrap_or(f64::NEG_INFINITY), hi.unwrap_or(f64::INFINITY)))
            .collect();
        let base = LinearProgram::new(self.cost, self.domain_rows, bounds)?;
        ScenarioProgram::new(base, self.scenarios)
    }
}

impl From<&ScenarioProgram> for ProgramFile {
    fn from(p: &ScenarioProgram) -> Self {
        let finite = |v: f64| v.is_finite().then_some(v);
        Self {
            d: p.dim(),
            cost: p.base.cost().to_vec(),
            bounds: p
                .base
                .bounds()
                .iter()
                .map(|b| [finite(b.lower), finite(b.upper)])
                .collect(),
            domain_rows: p.base.rows().to_vec(),
            scenarios: p.scenarios.clone(),
        }
    }
}
