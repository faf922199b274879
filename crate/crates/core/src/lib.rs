//! Cascaded sampling-and-discarding for linear scenario programs.
//!
//! * [`lp`]: dense simplex with a lexicographic tie-break, so every feasible
//!   bounded program has exactly one reported minimizer.
//! * [`scenario`]: scenario programs, support detection, the discarding
//!   cascade, compression checks and the greedy baseline.
//! * [`bounds`]: binomial-tail violation bounds and their inversion.
//! * [`experiments`]: seeded generators and Monte-Carlo validation.

pub mod bounds;
pub mod experiments;
pub mod lp;
pub mod scenario;

pub use lp::{Bound, LinearProgram, LpError, LpSolution, LpStatus, Row, Tolerances};
