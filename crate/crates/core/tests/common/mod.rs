//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use scenario_discard::lp::{Bound, LinearProgram, Row, Tolerances};
use scenario_discard::scenario::{LabelSet, ScenarioProgram};

pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Exact `Σ_{i<=k} C(m,i) p^i (1-p)^(m-i)`.
pub fn exact_tail(m: u64, k: u64, p: &BigRational) -> BigRational {
    let q = BigRational::one() - p;
    let mut term = num_traits::pow(q.clone(), m as usize);
    let mut sum = term.clone();
    for i in 0..k {
        term = term * BigRational::from_integer(BigInt::from(m - i)) / BigRational::from_integer(BigInt::from(i + 1))
            * p
            / &q;
        sum += &term;
    }
    sum
}

pub fn exact_binomial(n: u64, k: u64) -> BigRational {
    let mut c = BigRational::one();
    for i in 0..k {
        c = c * BigRational::from_integer(BigInt::from(n - i)) / BigRational::from_integer(BigInt::from(i + 1));
    }
    c
}

pub fn min_one(v: BigRational) -> BigRational {
    if v > BigRational::one() {
        BigRational::one()
    } else {
        v
    }
}

/// `|got - want|` as an exact rational.
pub fn abs_diff(got: f64, want: &BigRational) -> BigRational {
    let g = BigRational::from_float(got).expect("finite value");
    let d = g - want;
    if d < BigRational::zero() {
        -d
    } else {
        d
    }
}

fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    let pivot_row = a[col].clone();
                    for (x, p) in a[r][col..].iter_mut().zip(&pivot_row[col..]) {
                        *x -= f * p;
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn subsets(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

/// Optimal vertex of a box-bounded LP by enumerating every basis, ties
/// broken lexicographically. `None` when infeasible.
pub fn brute_force_lp(lp: &LinearProgram) -> Option<(Vec<f64>, f64)> {
    let d = lp.dim();
    let mut cons: Vec<Row> = lp.rows().to_vec();
    for (j, b) in lp.bounds().iter().enumerate() {
        assert!(b.lower.is_finite() && b.upper.is_finite(), "oracle needs a box");
        let mut e = vec![0.0; d];
        e[j] = 1.0;
        cons.push(Row::new(e.clone(), b.upper));
        e[j] = -1.0;
        cons.push(Row::new(e, -b.lower));
    }
    let mut vertices: Vec<(Vec<f64>, f64)> = Vec::new();
    subsets(cons.len(), d, &mut |idx| {
        let a = idx.iter().map(|&i| cons[i].coeffs.clone()).collect();
        let b = idx.iter().map(|&i| cons[i].rhs).collect();
        if let Some(x) = solve_square(a, b) {
            if cons.iter().all(|r| r.residual(&x) <= 1e-9) {
                let f = lp.objective(&x);
                vertices.push((x, f));
            }
        }
    });
    let best = vertices.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return None;
    }
    let width = 1e-9 * (1.0 + best.abs());
    vertices
        .into_iter()
        .filter(|v| v.1 <= best + width)
        .min_by(|a, b| lex_cmp(&a.0, &b.0))
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > 1e-9 {
            return x.total_cmp(y);
        }
    }
    std::cmp::Ordering::Equal
}

/// Support by the definition: every active scenario whose removal moves the
/// minimizer, with no shortcut.
pub fn brute_force_support(program: &ScenarioProgram, active: &LabelSet, tol: &Tolerances) -> LabelSet {
    let full = program.solve_stage(active, tol).unwrap();
    active
        .iter()
        .copied()
        .filter(|&l| {
            let mut rest = active.clone();
            rest.remove(&l);
            let s = program.solve_stage(&rest, tol).unwrap();
            !s.is_optimal() || !tol.same_point(&s.x, &full.x)
        })
        .collect()
}

pub fn unit_box(d: usize, half: f64) -> Vec<Bound> {
    vec![Bound::new(-half, half); d]
}
