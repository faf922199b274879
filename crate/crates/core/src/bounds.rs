//! Violation-probability bounds.
//!
//! Every bound here is a lower binomial tail
//! `Σ_{i=0}^{k} C(m,i) ε^i (1-ε)^{m-i}`, possibly times a combinatorial
//! factor. Terms are evaluated in log space with Loader's saddle-point
//! expansion (`stirlerr` + `bd0`), which keeps a few ulps of relative
//! accuracy per term even where `C(m,i)` overflows and `ε^i` underflows, and
//! they are accumulated with Neumaier summation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundError {
    #[error("epsilon must lie in [0, 1], got {0}")]
    Epsilon(f64),
    #[error("beta must lie in (0, 1], got {0}")]
    Beta(f64),
    #[error("dimension d must be at least 1")]
    Dimension,
    #[error("need k_max < m, got k_max = {k_max}, m = {m}")]
    TailIndex { m: u64, k_max: u64 },
    #[error("need m > r + d, got m = {m}, r = {r}, d = {d}")]
    SampleSize { m: u64, r: u64, d: u64 },
    #[error("need 1 <= zeta < m, got zeta = {zeta}, m = {m}")]
    Compression { m: u64, zeta: u64 },
    #[error("the analytic example is one-dimensional, got d = {0}")]
    AnalyticDimension(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formula {
    /// Classical sampling-and-discarding: `C(r+d-1, r) · tail(m, r+d-1, ε)`.
    Cg11,
    /// Unique compression set of size `ζ = r + d`: `tail(m, ζ-1, ε)`.
    Compression,
    /// Batched cascade: `tail(m, r+d-1, ε)`.
    Cascade,
    /// Exact law of the one-dimensional uniform example: `tail(m, r, ε)`.
    AnalyticToy,
}

impl std::fmt::Display for Formula {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Formula::Cg11 => "cg11",
            Formula::Compression => "compression",
            Formula::Cascade => "cascade",
            Formula::AnalyticToy => "analytic-toy",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundQuery {
    pub m: u64,
    pub d: u64,
    pub r: u64,
    pub epsilon: f64,
}

impl BoundQuery {
    pub fn new(m: u64, d: u64, r: u64, epsilon: f64) -> Result<Self, BoundError> {
        check_epsilon(epsilon)?;
        if d == 0 {
            return Err(BoundError::Dimension);
        }
        if m <= r + d {
            return Err(BoundError::SampleSize { m, r, d });
        }
        Ok(Self { m, d, r, epsilon })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    /// `min(raw, 1)`.
    pub value: f64,
    pub raw: f64,
    pub formula: Formula,
}

impl BoundValue {
    fn new(raw: f64, formula: Formula) -> Self {
        Self {
            value: raw.min(1.0),
            raw,
            formula,
        }
    }
}

fn check_epsilon(epsilon: f64) -> Result<(), BoundError> {
    if (0.0..=1.0).contains(&epsilon) {
        Ok(())
    } else {
        Err(BoundError::Epsilon(epsilon))
    }
}

/// `Σ_{i=0}^{k_max} C(m,i) ε^i (1-ε)^{m-i}`.
pub fn binom_tail(m: u64, k_max: u64, epsilon: f64) -> Result<f64, BoundError> {
    check_epsilon(epsilon)?;
    if k_max >= m {
        return Err(BoundError::TailIndex { m, k_max });
    }
    if epsilon == 0.0 {
        return Ok(1.0);
    }
    if epsilon == 1.0 {
        return Ok(0.0);
    }
    let n = m as f64;
    let q = 1.0 - epsilon;
    let mut sum = Neumaier::default();
    for i in 0..=k_max {
        sum.add(log_binom_pmf(i as f64, n, epsilon, q).exp());
    }
    Ok(sum.total().clamp(0.0, 1.0))
}

/// `C(n, k)` in floating point; exact up to 2^53.
pub fn binomial_coefficient(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn bound_cg11(q: &BoundQuery) -> BoundValue {
    let k = q.r + q.d - 1;
    let tail = binom_tail(q.m, k, q.epsilon).expect("validated query");
    BoundValue::new(binomial_coefficient(k, q.r) * tail, Formula::Cg11)
}

pub fn bound_cascade(q: &BoundQuery) -> BoundValue {
    let tail = binom_tail(q.m, q.r + q.d - 1, q.epsilon).expect("validated query");
    BoundValue::new(tail, Formula::Cascade)
}

pub fn bound_compression(m: u64, zeta: u64, epsilon: f64) -> Result<BoundValue, BoundError> {
    if zeta == 0 || zeta >= m {
        return Err(BoundError::Compression { m, zeta });
    }
    Ok(BoundValue::new(binom_tail(m, zeta - 1, epsilon)?, Formula::Compression))
}

/// Exact probability that the final minimizer of the uniform example lies
/// below `1 - ε` after `r` stripped maxima.
pub fn analytic_violation_cdf(m: u64, r: u64, epsilon: f64) -> Result<f64, BoundError> {
    binom_tail(m, r, epsilon)
}

/// Evaluates `formula` at `(m, d, r, ε)`. For [`Formula::Compression`] the
/// compression size is `r + d`; [`Formula::AnalyticToy`] requires `d = 1`.
pub fn evaluate(formula: Formula, m: u64, d: u64, r: u64, epsilon: f64) -> Result<BoundValue, BoundError> {
    let q = BoundQuery::new(m, d, r, epsilon)?;
    Ok(match formula {
        Formula::Cg11 => bound_cg11(&q),
        Formula::Cascade => bound_cascade(&q),
        Formula::Compression => bound_compression(m, r + d, epsilon)?,
        Formula::AnalyticToy => {
            if d != 1 {
                return Err(BoundError::AnalyticDimension(d));
            }
            BoundValue::new(analytic_violation_cdf(m, r, epsilon)?, Formula::AnalyticToy)
        }
    })
}

/// Absolute tolerance of [`invert_epsilon`] in ε.
pub const INVERSION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inversion {
    pub epsilon: f64,
    /// Set when the bound is already `<= beta` as ε → 0, so no positive ε
    /// is needed; `epsilon` is then 0.
    pub boundary: bool,
}

/// Smallest ε (to [`INVERSION_TOL`]) with `bound(m, d, r, ε) <= beta`,
/// using the unclamped value.
pub fn invert_epsilon(m: u64, d: u64, r: u64, beta: f64, formula: Formula) -> Result<Inversion, BoundError> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(BoundError::Beta(beta));
    }
    let raw = |eps: f64| evaluate(formula, m, d, r, eps).map(|v| v.raw);
    if raw(0.0)? <= beta {
        return Ok(Inversion {
            epsilon: 0.0,
            boundary: true,
        });
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > INVERSION_TOL {
        let mid = 0.5 * (lo + hi);
        if raw(mid)? <= beta {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Inversion {
        epsilon: hi,
        boundary: false,
    })
}

/// Largest `r` with `bound(m, d, r, ε) <= beta`, scanning upward from 0 and
/// stopping at the first failure. With `batch`, rounded down to a multiple
/// of `d`. Returns 0 when not even `r = 0` meets `beta`.
pub fn max_removable(
    m: u64,
    d: u64,
    epsilon: f64,
    beta: f64,
    formula: Formula,
    batch: bool,
) -> Result<u64, BoundError> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(BoundError::Beta(beta));
    }
    let mut best = None;
    let mut r = 0;
    while r + d < m {
        if evaluate(formula, m, d, r, epsilon)?.raw <= beta {
            best = Some(r);
            r += 1;
        } else {
            break;
        }
    }
    let r = best.unwrap_or(0);
    Ok(if batch { r / d * d } else { r })
}

#[derive(Default)]
struct Neumaier {
    sum: f64,
    carry: f64,
}

impl Neumaier {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

const LN_2PI: f64 = 1.837_877_066_409_345_5;

// Stirling-series remainder ln Γ(n+1) - [(n+½)ln n - n + ½ln 2π] at n/2 for
// n = 0..30; index 0 is unused.
#[allow(clippy::excessive_precision)]
const SFERR_HALVES: [f64; 31] = [
    0.0,
    0.1534264097200273452913848,
    0.0810614667953272582196702,
    0.0548141210519176538961390,
    0.0413406959554092940938221,
    0.03316287351993628748511048,
    0.02767792568499833914878929,
    0.02374616365629749597132920,
    0.02079067210376509311152277,
    0.01848845053267318523077934,
    0.01664469118982119216319487,
    0.01513497322191737887351255,
    0.01387612882307074799874573,
    0.01281046524292022692424986,
    0.01189670994589177009505572,
    0.01110455975820691732662991,
    0.010411265261972096497478567,
    0.009799416126158803298389475,
    0.009255462182712732917728637,
    0.008768700134139385462952823,
    0.008330563433362871256469318,
    0.007934114564314020547248100,
    0.007573675487951840794972024,
    0.007244554301320383179543912,
    0.006942840107209529865664152,
    0.006665247032707682442354394,
    0.006408994188004207068439631,
    0.006171712263039457647532867,
    0.005951370112758847735624416,
    0.005746216513010115682023589,
    0.005554733551962801371038690,
];

/// Stirling remainder for integer `n >= 1`.
fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    const S5: f64 = 691.0 / 360360.0;
    const S6: f64 = 1.0 / 156.0;
    if n <= 15.0 {
        return SFERR_HALVES[(n + n) as usize];
    }
    let nn = n * n;
    (S0 - (S1 - (S2 - (S3 - (S4 - (S5 - S6 / nn) / nn) / nn) / nn) / nn) / nn) / n
}

/// Deviance term `x ln(x/np) + np - x`, evaluated stably when `x ≈ np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        if s.abs() < f64::MIN_POSITIVE {
            return s;
        }
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
    }
    x * (x / np).ln() + np - x
}

/// `ln[C(n,x) p^x q^(n-x)]` for integer `0 <= x <= n`, `0 < p < 1`, `q = 1-p`.
fn log_binom_pmf(x: f64, n: f64, p: f64, q: f64) -> f64 {
    if x == 0.0 {
        return if p < 0.1 { -bd0(n, n * q) - n * p } else { n * q.ln() };
    }
    if x == n {
        return if q < 0.1 { -bd0(n, n * p) - n * q } else { n * p.ln() };
    }
    let lc = stirlerr(n) - stirlerr(x) - stirlerr(n - x) - bd0(x, n * p) - bd0(n - x, n * q);
    let lf = LN_2PI + x.ln() + (-x / n).ln_1p();
    lc - 0.5 * lf
}
