//! Closed-form limits of the model as `m → ∞`.
//!
//! Sign convention: `growth_rate` is the almost-sure limit of
//! `(1/m) log Ẑ`, i.e. `sup_{rate(x) ≤ q} {βx − rate(x)} ≥ 0`, and the
//! free energy is `−growth_rate/β`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{bisect, golden_max, linspace_step};
use crate::rates::{rate_inverse, RateFunction};

const OBJECTIVE_GRID: usize = 64;
const DERIVATIVE_STEP: f64 = 1e-5;
const SLOPE_SCAN_POINTS: usize = 200;
const SLOPE_SEARCH_CAP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitResult {
    pub growth_rate: f64,
    pub free_energy: f64,
    pub minimizer_x: f64,
    /// The optimum sits on the constraint `rate(x) = q`.
    pub constraint_active: bool,
}

/// Interpolation exponent ratio `α = k/m`, possibly infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alpha {
    Finite(f64),
    Infinite,
}

impl From<f64> for Alpha {
    fn from(a: f64) -> Self {
        if a == f64::INFINITY {
            Alpha::Infinite
        } else {
            Alpha::Finite(a)
        }
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Precondition(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Right end of the feasible set `{x ≥ 0 : rate(x) ≤ q}`.
fn feasible_end(rate: &RateFunction, q: f64, tol: f64) -> Result<f64> {
    match rate_inverse(rate, q, tol.min(1e-12)) {
        Ok(x) => Ok(x),
        Err(Error::OutOfRange(_)) if rate.finite_domain_sup().is_finite() => {
            Ok(rate.finite_domain_sup())
        }
        Err(e) => Err(e),
    }
}

struct Optimum {
    value: f64,
    arg: f64,
    boundary: f64,
}

/// `sup_{0 ≤ x ≤ x_q} {βx − weight·rate(x)}` by grid-then-golden with the
/// right boundary evaluated explicitly.
fn constrained_sup(rate: &RateFunction, beta: f64, q: f64, weight: f64, tol: f64) -> Result<Optimum> {
    let x_q = feasible_end(rate, q, tol)?;
    let mut failure = None;
    let mut h = |x: f64| match rate.eval_f64(x) {
        Ok(r) => beta * x - weight * r,
        Err(e) => {
            failure.get_or_insert(e);
            f64::NEG_INFINITY
        }
    };
    let grid: Vec<f64> = (0..=OBJECTIVE_GRID)
        .map(|i| x_q * i as f64 / OBJECTIVE_GRID as f64)
        .collect();
    let values: Vec<f64> = grid.iter().map(|&x| h(x)).collect();
    let k = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let lo = grid[k.saturating_sub(1)];
    let hi = grid[(k + 1).min(OBJECTIVE_GRID)];
    let e = golden_max(&mut h, lo, hi, 1e-14);
    let at_end = h(x_q);
    if let Some(err) = failure {
        return Err(err);
    }
    let (value, arg) = if at_end >= e.value {
        (at_end, x_q)
    } else {
        (e.value, e.arg)
    };
    Ok(Optimum {
        value,
        arg,
        boundary: x_q,
    })
}

/// Almost-sure limit of `(1/m) log Ẑ` for `N = ⌊e^{qm}⌋`.
pub fn growth_rate(rate: &RateFunction, beta: f64, q: f64, tol: f64) -> Result<LimitResult> {
    check_positive("beta", beta)?;
    check_positive("q", q)?;
    let opt = constrained_sup(rate, beta, q, 1.0, tol)?;
    let growth = opt.value;
    Ok(LimitResult {
        growth_rate: growth,
        free_energy: -growth / beta,
        minimizer_x: opt.arg,
        constraint_active: opt.boundary - opt.arg <= 1e-6 * (1.0 + opt.boundary),
    })
}

/// `inf_{φ(x) ≤ q} {φ(x) − x} − q`: the free energy of the classical model
/// with the unnormalized partition sum.
pub fn rem_free_energy(phi: &RateFunction, q: f64, tol: f64) -> Result<f64> {
    Ok(-growth_rate(phi, 1.0, q, tol)?.growth_rate - q)
}

/// Derivative of the rate by central differences, one-sided at the edges
/// of the finite domain.
fn rate_slope(rate: &RateFunction, x: f64, domain_sup: f64) -> Result<f64> {
    let h = DERIVATIVE_STEP;
    if x < h {
        return Ok((rate.eval_f64(x + h)? - rate.eval_f64(x)?) / h);
    }
    if x + h > domain_sup {
        return Ok((rate.eval_f64(x)? - rate.eval_f64(x - h)?) / h);
    }
    Ok((rate.eval_f64(x + h)? - rate.eval_f64(x - h)?) / (2.0 * h))
}

/// Critical value `q_cr = rate(x0)` where `rate′(x0) = β`.
///
/// For `q ≥ q_cr` the constraint in [`growth_rate`] no longer binds. The
/// smallest root of `rate′ − β` is located by a grid scan followed by
/// bisection, so nonconvex rates are handled too.
pub fn critical_q(rate: &RateFunction, beta: f64, tol: f64) -> Result<(f64, f64)> {
    check_positive("beta", beta)?;
    let sup = rate.finite_domain_sup();
    let upper = if sup.is_finite() {
        sup - DERIVATIVE_STEP
    } else {
        let mut u = 1.0;
        while rate_slope(rate, u, sup)? < beta {
            u *= 2.0;
            if u > SLOPE_SEARCH_CAP {
                return Err(Error::OutOfRange(format!(
                    "rate slope stays below beta = {beta} up to x = {SLOPE_SEARCH_CAP}"
                )));
            }
        }
        u
    };
    let mut prev = 0.0;
    for i in 1..=SLOPE_SCAN_POINTS {
        let x = upper * i as f64 / SLOPE_SCAN_POINTS as f64;
        if rate_slope(rate, x, sup)? >= beta {
            let mut failure = None;
            let x0 = bisect(
                |z| match rate_slope(rate, z, sup) {
                    Ok(d) => d >= beta,
                    Err(e) => {
                        failure.get_or_insert(e);
                        true
                    }
                },
                prev,
                x,
                tol.min(1e-10),
            )?;
            if let Some(e) = failure {
                return Err(e);
            }
            return Ok((rate.eval_f64(x0)?, x0));
        }
        prev = x;
    }
    Err(Error::OutOfRange(format!(
        "rate slope never reaches beta = {beta} on its finite domain [0, {sup}]"
    )))
}

/// Erdős–Rényi limit of `max_i R_i/m`: the solution of `rate(γ) = q`.
pub fn er_gamma(rate: &RateFunction, q: f64, tol: f64) -> Result<f64> {
    rate_inverse(rate, q, tol)
}

/// Limit of `log Y^{(k)}` with `k/m → α`:
/// `sup_{rate(x) ≤ q} {βx − rate(x)/α}`, and `β·x_q` when `α = ∞`.
pub fn interpolation_rate(
    rate: &RateFunction,
    beta: f64,
    q: f64,
    alpha: Alpha,
    tol: f64,
) -> Result<f64> {
    check_positive("beta", beta)?;
    check_positive("q", q)?;
    match alpha {
        Alpha::Infinite => Ok(beta * feasible_end(rate, q, tol)?),
        Alpha::Finite(a) => {
            if !(a >= 1.0) {
                return Err(Error::Precondition(format!("alpha must be >= 1, got {a}")));
            }
            Ok(constrained_sup(rate, beta, q, 1.0 / a, tol)?.value)
        }
    }
}

/// Rows of `growth_rate` over a q grid, for tabulation.
pub fn growth_curve(
    rate: &RateFunction,
    beta: f64,
    q_start: f64,
    q_stop: f64,
    q_step: f64,
    tol: f64,
) -> Result<Vec<(f64, LimitResult)>> {
    linspace_step(q_start, q_stop, q_step)
        .into_iter()
        .map(|q| growth_rate(rate, beta, q, tol).map(|r| (q, r)))
        .collect()
}
