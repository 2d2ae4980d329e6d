//! Rate functions: numerical Fenchel–Legendre conjugates of the energy cgf
//! (φ) and of the length scaling cgf (ψ), their convolution
//! `ν(x) = inf_{y ≥ 0} [ψ(y) + y·φ(x/y)]`, inverses, and the leading-order
//! exponential decay rate of the tail probability `P(R ≥ m·x)`.
//!
//! Conjugates are taken over `t ≥ 0` only, so every rate here vanishes on
//! `[0, mean]` and is nondecreasing on `x ≥ 0`.

use std::cell::Cell;
use std::fmt;
use std::ops::Add;

use crate::distributions::{EnergyLaw, LengthLaw, LOG_TAIL_CUTOFF};
use crate::error::{Error, Result};
use crate::numeric::{self, bisect, golden_max, golden_min, logspace, LogSumExp, DEFAULT_TOL};

/// Default upper limit of the conjugate search when the cgf is finite on all of `[0, inf)`.
pub const DEFAULT_T_CAP: f64 = 1e6;

/// Suprema above this are reported as [`ExtReal::PosInf`].
pub const OVERFLOW_THRESHOLD: f64 = 1e12;

const NU_GRID_POINTS: usize = 400;
const NU_Y_MIN: f64 = 1e-3;
const NU_PSI_CUTOFF: f64 = 1e3;
const REFINE_XTOL: f64 = 1e-13;

/// A real number or `+inf`, used for rate values.
///
/// Ordering places every finite value below `PosInf`; addition saturates.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum ExtReal {
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::PosInf => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    /// As an `f64`, with `PosInf` mapped to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::Finite(v) => v,
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    /// Multiplication by a nonnegative scalar; `0·inf = 0`.
    pub fn scale(self, c: f64) -> ExtReal {
        debug_assert!(c >= 0.0);
        match self {
            ExtReal::Finite(v) => ExtReal::from(c * v),
            ExtReal::PosInf if c == 0.0 => ExtReal::Finite(0.0),
            ExtReal::PosInf => ExtReal::PosInf,
        }
    }

    pub fn max(self, other: ExtReal) -> ExtReal {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        if v == f64::INFINITY || v > OVERFLOW_THRESHOLD {
            ExtReal::PosInf
        } else {
            ExtReal::Finite(v)
        }
    }
}

impl Add for ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: ExtReal) -> ExtReal {
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::from(a + b),
            _ => ExtReal::PosInf,
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::PosInf => f.write_str("inf"),
        }
    }
}

/// Outcome of a conjugate evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conjugate {
    pub value: ExtReal,
    /// Maximizing `t` (the cap itself when saturated).
    pub argmax: f64,
    /// The objective was still increasing at `t_cap`; `value` is the
    /// boundary value there, not an attained maximum.
    pub saturated_at_cap: bool,
}

/// `sup_{0 ≤ t < min(domain_sup, t_cap)} { x·t − cgf(t) }`.
///
/// `cgf` must be convex with `cgf(0) = 0`, returning `+inf` outside its
/// domain. The concave objective is bracketed by doubling from `t = 1`
/// and maximized by golden-section search. If the objective is still
/// growing by more than `tol` over the last doubling before `t_cap`, the
/// supremum is unbounded and `+inf` is returned.
pub fn conjugate<F>(cgf: F, domain_sup: f64, x: f64, tol: f64, t_cap: f64) -> Result<Conjugate>
where
    F: Fn(f64) -> f64,
{
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("conjugate needs x >= 0, got {x}")));
    }
    if !(tol > 0.0) || !(t_cap > 0.0) {
        return Err(Error::Precondition(format!(
            "conjugate needs tol > 0 and t_cap > 0 (got {tol}, {t_cap})"
        )));
    }
    let g = |t: f64| {
        let c = cgf(t);
        if c.is_finite() {
            x * t - c
        } else {
            f64::NEG_INFINITY
        }
    };
    let finish = |arg: f64, v: f64, saturated: bool| Conjugate {
        value: ExtReal::from(v),
        argmax: arg,
        saturated_at_cap: saturated,
    };

    if domain_sup <= t_cap {
        let e = golden_max(g, 0.0, domain_sup, 1e-15);
        return Ok(finish(e.arg, e.value, false));
    }

    let (mut lo, mut mid) = (0.0, 1.0_f64.min(t_cap));
    let (mut g_lo, mut g_mid) = (g(lo), g(mid));
    if g_mid <= g_lo {
        let e = golden_max(g, 0.0, mid, 1e-15);
        return Ok(finish(e.arg, e.value, false));
    }
    for _ in 0..numeric::MAX_ITER {
        if mid >= t_cap {
            if g_mid - g_lo > tol {
                return Ok(Conjugate {
                    value: ExtReal::PosInf,
                    argmax: t_cap,
                    saturated_at_cap: true,
                });
            }
            return Ok(finish(t_cap, g_mid, true));
        }
        let hi = (2.0 * mid).min(t_cap);
        let g_hi = g(hi);
        if g_hi <= g_mid {
            let e = golden_max(g, lo, hi, 1e-15);
            return Ok(finish(e.arg, e.value, false));
        }
        lo = mid;
        g_lo = g_mid;
        mid = hi;
        g_mid = g_hi;
    }
    Err(Error::NonConvergence {
        what: "conjugate bracketing",
        iterations: numeric::MAX_ITER,
    })
}

/// Where a rate function comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum RateSource {
    /// φ: conjugate of the energy cgf.
    EnergyConjugate(EnergyLaw),
    /// ψ: conjugate of the length scaling cgf.
    LengthConjugate(LengthLaw),
    /// ν: `inf_y [ψ(y) + y·φ(x/y)]`.
    Convolution {
        psi: Box<RateFunction>,
        phi: Box<RateFunction>,
    },
}

/// An evaluable nondecreasing rate function on `x ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFunction {
    pub source: RateSource,
    pub eval_tolerance: f64,
    pub t_cap: f64,
}

/// Details of one ν evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuEvaluation {
    pub value: ExtReal,
    /// Minimizing `y` (`0` when the `y → 0⁺` limit wins).
    pub argmin_y: f64,
    /// The infimum sits at the `y → 0⁺` limit or at the top of the search range.
    pub at_boundary: bool,
}

impl RateFunction {
    fn with_source(source: RateSource) -> Self {
        RateFunction {
            source,
            eval_tolerance: DEFAULT_TOL,
            t_cap: DEFAULT_T_CAP,
        }
    }

    /// φ for an energy law.
    pub fn phi(law: EnergyLaw) -> Self {
        Self::with_source(RateSource::EnergyConjugate(law))
    }

    /// ψ for a length law.
    pub fn psi(law: LengthLaw) -> Self {
        Self::with_source(RateSource::LengthConjugate(law))
    }

    /// ν built from a length law and an energy law.
    pub fn nu(length: LengthLaw, energy: EnergyLaw) -> Self {
        Self::convolution(Self::psi(length), Self::phi(energy))
    }

    pub fn convolution(psi: RateFunction, phi: RateFunction) -> Self {
        Self::with_source(RateSource::Convolution {
            psi: Box::new(psi),
            phi: Box::new(phi),
        })
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.eval_tolerance = tol;
        self
    }

    /// Right end of the region where the rate is finite (`+inf` if unbounded).
    pub fn finite_domain_sup(&self) -> f64 {
        match &self.source {
            RateSource::EnergyConjugate(law) => law.essential_sup(),
            RateSource::LengthConjugate(law) => law.scaled_sup(),
            RateSource::Convolution { psi, phi } => {
                psi.finite_domain_sup() * phi.finite_domain_sup()
            }
        }
    }

    /// `lim_{u→∞} rate(u)/u`.
    ///
    /// For a conjugate this is the right end of the cgf domain; for other
    /// sources it is estimated from `rate(u)/u` at `u = probe`.
    pub fn asymptotic_slope(&self, probe: f64) -> Result<f64> {
        match &self.source {
            RateSource::EnergyConjugate(law) => Ok(law.cgf_domain_sup()),
            // ψ grows superlinearly (or jumps to +inf) for every shipped length law
            RateSource::LengthConjugate(_) => Ok(f64::INFINITY),
            RateSource::Convolution { .. } => Ok(self.eval(probe)?.to_f64() / probe),
        }
    }

    /// The rate at `x ≥ 0`.
    pub fn eval(&self, x: f64) -> Result<ExtReal> {
        if !(x >= 0.0) {
            return Err(Error::Domain(format!("rate evaluated at x = {x} < 0")));
        }
        match &self.source {
            RateSource::EnergyConjugate(law) => {
                if x > law.essential_sup() {
                    return Ok(ExtReal::PosInf);
                }
                let law = *law;
                Ok(conjugate(
                    |t| law.cgf_unchecked(t),
                    law.cgf_domain_sup(),
                    x,
                    self.eval_tolerance,
                    self.t_cap,
                )?
                .value)
            }
            RateSource::LengthConjugate(law) => psi_with(*law, x, self.eval_tolerance, self.t_cap),
            RateSource::Convolution { psi, phi } => {
                Ok(nu_detail(psi, phi, x, self.eval_tolerance)?.value)
            }
        }
    }

    /// `x ↦ rate(x)` as a plain `f64` (`+inf` allowed).
    pub fn eval_f64(&self, x: f64) -> Result<f64> {
        Ok(self.eval(x)?.to_f64())
    }

    /// Kinks of the rate where a grid search should place a point.
    fn breakpoints(&self) -> Vec<f64> {
        match &self.source {
            RateSource::LengthConjugate(law) => {
                let mut v = vec![1.0];
                if law.scaled_sup().is_finite() {
                    v.push(law.scaled_sup());
                }
                v
            }
            _ => Vec::new(),
        }
    }

    /// Smallest `x ≥ 0` with `rate(x) = q`; see [`rate_inverse`].
    pub fn inverse(&self, q: f64, tol: f64) -> Result<f64> {
        rate_inverse(self, q, tol)
    }
}

fn psi_with(law: LengthLaw, s: f64, tol: f64, t_cap: f64) -> Result<ExtReal> {
    if !(s >= 0.0) {
        return Err(Error::Domain(format!("psi evaluated at s = {s} < 0")));
    }
    Ok(match law {
        LengthLaw::Deterministic => {
            if s <= 1.0 {
                ExtReal::Finite(0.0)
            } else {
                ExtReal::PosInf
            }
        }
        LengthLaw::Poisson => {
            if s <= 1.0 {
                ExtReal::Finite(0.0)
            } else {
                ExtReal::from(s * s.ln() - s + 1.0)
            }
        }
        LengthLaw::SymmetricBinomial => {
            if s > law.scaled_sup() {
                ExtReal::PosInf
            } else {
                conjugate(|t| law.chi_unchecked(t), f64::INFINITY, s, tol, t_cap)?.value
            }
        }
    })
}

/// ψ(s) for a length law: closed form for the deterministic and Poisson
/// families, numerical conjugation of `chi` otherwise.
pub fn psi(law: LengthLaw, s: f64) -> Result<ExtReal> {
    psi_with(law, s, DEFAULT_TOL, DEFAULT_T_CAP)
}

/// ν(x) from two rate functions.
pub fn nu(psi: &RateFunction, phi: &RateFunction, x: f64, tol: f64) -> Result<ExtReal> {
    Ok(nu_detail(psi, phi, x, tol)?.value)
}

/// ν(x) with the minimizing `y` and a boundary flag.
///
/// A 400-point log grid on `[1e-3, y_max]`, plus the kinks of ψ and the
/// edge `y = x/sup(φ-domain)`, locates the best bracket, which is then
/// refined by golden-section search. `y_max = max(4x, y_ψ)` with `y_ψ`
/// the smallest `y` where ψ exceeds 1e3. The `y → 0⁺` limit
/// `ψ(0) + x·lim φ(u)/u` is compared separately.
pub fn nu_detail(
    psi: &RateFunction,
    phi: &RateFunction,
    x: f64,
    tol: f64,
) -> Result<NuEvaluation> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("nu evaluated at x = {x} < 0")));
    }
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!("nu needs tol > 0, got {tol}")));
    }
    if x == 0.0 {
        return Ok(NuEvaluation {
            value: ExtReal::Finite(0.0),
            argmin_y: 1.0,
            at_boundary: false,
        });
    }

    let failure: Cell<Option<Error>> = Cell::new(None);
    let record = |r: Result<ExtReal>| match r {
        Ok(v) => v.to_f64(),
        Err(e) => {
            failure.set(Some(e));
            f64::INFINITY
        }
    };
    let objective = |y: f64| {
        let a = record(psi.eval(y));
        if a == f64::INFINITY {
            return a;
        }
        a + y * record(phi.eval(x / y))
    };

    let y_psi = psi_growth_cutoff(psi)?;
    let y_max = (4.0 * x).max(y_psi).max(NU_Y_MIN * 2.0);
    let mut grid = logspace(NU_Y_MIN, y_max, NU_GRID_POINTS);
    let mut extra = psi.breakpoints();
    let phi_sup = phi.finite_domain_sup();
    if phi_sup.is_finite() && phi_sup > 0.0 {
        extra.push(x / phi_sup);
    }
    grid.extend(extra.into_iter().filter(|&y| y > NU_Y_MIN && y < y_max));
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let values: Vec<f64> = grid.iter().map(|&y| objective(y)).collect();
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let (k, &grid_best) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty grid");

    let mut best_y = grid[k];
    let mut best = grid_best;
    if best.is_finite() {
        let lo = if k == 0 { NU_Y_MIN * 1e-3 } else { grid[k - 1] };
        let hi = grid[(k + 1).min(grid.len() - 1)];
        let e = golden_min(objective, lo, hi, REFINE_XTOL);
        if let Some(err) = failure.take() {
            return Err(err);
        }
        if e.value < best {
            best = e.value;
            best_y = e.arg;
        }
    }

    let slope = phi.asymptotic_slope(x / NU_Y_MIN)?;
    let at_zero = psi.eval(0.0)?.to_f64() + x * slope;
    let mut at_boundary = k + 1 == grid.len() && best.is_finite();
    if at_zero < best {
        best = at_zero;
        best_y = 0.0;
        at_boundary = true;
    }

    Ok(NuEvaluation {
        value: ExtReal::from(best),
        argmin_y: best_y,
        at_boundary,
    })
}

/// Smallest `y` with `ψ(y) > 1e3`.
fn psi_growth_cutoff(psi: &RateFunction) -> Result<f64> {
    let sup = psi.finite_domain_sup();
    if sup.is_finite() && psi.eval(sup)?.to_f64() <= NU_PSI_CUTOFF {
        return Ok(sup);
    }
    let above = |y: f64| psi.eval(y).map(|v| v.to_f64() > NU_PSI_CUTOFF).unwrap_or(true);
    let mut hi = 2.0;
    while !above(hi) {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::NonConvergence {
                what: "psi growth cutoff",
                iterations: 40,
            });
        }
    }
    bisect(above, hi / 2.0, hi, 1e-9)
}

/// The unique `x ≥ 0` with `rate(x) = q` (the smallest such `x`), by
/// bisection on the nondecreasing rate.
///
/// Fails with `OutOfRange` when `q` exceeds the supremum of the rate over
/// its finite domain.
pub fn rate_inverse(rate: &RateFunction, q: f64, tol: f64) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::Precondition(format!("rate inverse needs q > 0, got {q}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!("rate inverse needs tol > 0, got {tol}")));
    }
    let reaches = |x: f64| rate.eval_f64(x).map(|v| v >= q);
    let sup = rate.finite_domain_sup();
    let hi = if sup.is_finite() {
        let top = rate.eval_f64(sup)?;
        if top < q {
            return Err(Error::OutOfRange(format!(
                "q = {q} exceeds the rate's supremum {top} on [0, {sup}]"
            )));
        }
        sup
    } else {
        let mut hi = 1.0;
        let mut n = 0;
        while !reaches(hi)? {
            hi *= 2.0;
            n += 1;
            if n > 200 {
                return Err(Error::OutOfRange(format!("rate never reaches q = {q}")));
            }
        }
        hi
    };
    let failure: Cell<Option<Error>> = Cell::new(None);
    let x = bisect(
        |x| match reaches(x) {
            Ok(b) => b,
            Err(e) => {
                failure.set(Some(e));
                true
            }
        },
        0.0,
        hi,
        tol,
    )?;
    match failure.take() {
        Some(e) => Err(e),
        None => Ok(x),
    }
}

/// Leading-order decay rate of `S(x) = P(Σ_{j ≤ λ} η_j ≥ m·x)`:
/// `−(1/m)·log Σ_{l ≥ 1} p_l·exp(−l·φ(x·m/l))`.
///
/// The sum runs in log space over the support of λ⁽ᵐ⁾ and stops once the
/// remaining length-law tail is below 1e-15 of the running sum.
pub fn tail_rate(length: LengthLaw, phi: &RateFunction, x: f64, m: u64) -> Result<ExtReal> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("tail rate needs x > 0, got {x}")));
    }
    if m == 0 {
        return Err(Error::Domain("tail rate needs m >= 1".into()));
    }
    let mf = m as f64;
    let mut lse = LogSumExp::new();
    for (l, log_p) in length.log_pmf(m).skip_while(|&(l, _)| l == 0) {
        if length.log_tail_bound(m, l) < lse.value() + LOG_TAIL_CUTOFF {
            break;
        }
        let lf = l as f64;
        let r = phi.eval(x * mf / lf)?;
        if let ExtReal::Finite(v) = r {
            lse.push(log_p - lf * v);
        }
    }
    let s = lse.value();
    if s == f64::NEG_INFINITY {
        Ok(ExtReal::PosInf)
    } else {
        Ok(ExtReal::from(-s / mf))
    }
}
