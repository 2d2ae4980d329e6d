//! Small numerical building blocks shared by the rate and limit code:
//! bracketed golden-section search, bisection, a streaming log-sum-exp
//! accumulator and compensated summation.

use crate::error::{Error, Result};

/// Default absolute accuracy for rate and limit evaluations.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Iteration budget for golden-section and bisection loops.
pub const MAX_ITER: usize = 200;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Result of a one-dimensional maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub arg: f64,
    pub value: f64,
}

/// Maximizes a unimodal `f` on `[lo, hi]` by golden-section search.
///
/// Values may be `-inf` (outside an effective domain); they simply lose
/// every comparison. Stops once the bracket is narrower than `xtol`
/// (relative to the magnitude of the bracket) or the budget runs out;
/// the endpoints are compared against the interior estimate so a
/// boundary maximum is never missed.
pub fn golden_max<F>(mut f: F, lo: f64, hi: f64, xtol: f64) -> Extremum
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..MAX_ITER {
        if (b - a).abs() <= xtol * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mut best = if fc >= fd {
        Extremum { arg: c, value: fc }
    } else {
        Extremum { arg: d, value: fd }
    };
    for x in [lo, hi] {
        let v = f(x);
        if v > best.value {
            best = Extremum { arg: x, value: v };
        }
    }
    best
}

/// Minimizing counterpart of [`golden_max`].
pub fn golden_min<F>(mut f: F, lo: f64, hi: f64, xtol: f64) -> Extremum
where
    F: FnMut(f64) -> f64,
{
    let e = golden_max(|x| -f(x), lo, hi, xtol);
    Extremum {
        arg: e.arg,
        value: -e.value,
    }
}

/// Finds the switch point of a monotone predicate on `[lo, hi]`.
///
/// `pred(lo)` must be false and `pred(hi)` true; returns a point within
/// `xtol` of the boundary between the two regions.
pub fn bisect<P>(mut pred: P, mut lo: f64, mut hi: f64, xtol: f64) -> Result<f64>
where
    P: FnMut(f64) -> bool,
{
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= xtol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::NonConvergence {
        what: "bisection",
        iterations: MAX_ITER,
    })
}

/// Streaming log-sum-exp: keeps a running maximum and an accumulator
/// rescaled to it, so no term is ever exponentiated at full size.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    acc: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            acc: 0.0,
        }
    }

    pub fn push(&mut self, v: f64) {
        if v == f64::NEG_INFINITY {
            return;
        }
        if v > self.max {
            self.acc = self.acc * (self.max - v).exp() + 1.0;
            self.max = v;
        } else {
            self.acc += (v - self.max).exp();
        }
    }

    /// `log Σ exp(v)` over everything pushed; `-inf` when empty.
    pub fn value(&self) -> f64 {
        if self.acc == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.acc.ln()
        }
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for v in iter {
            s.add(v);
        }
        s
    }
}

/// Evenly spaced grid `start, start+step, …` up to `stop` inclusive
/// (with a half-step allowance for rounding).
pub fn linspace_step(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if step <= 0.0 || stop < start {
        return vec![start];
    }
    let n = ((stop - start) / step + 0.5).floor() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

/// `n` logarithmically spaced points covering `[lo, hi]`, endpoints included.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    debug_assert!(lo > 0.0 && hi >= lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}
