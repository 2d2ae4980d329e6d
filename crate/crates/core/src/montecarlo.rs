//! Finite-size simulation of the model.
//!
//! One replica draws `N = ⌊e^{qm}⌋` independent sums
//! `R_i = Σ_{j ≤ λ_i} η_ij` from its own RNG sub-stream (drawing λ_i, then
//! its η's, for i = 1..N in order) and reduces them on the fly: a
//! log-sum-exp for `log Ẑ` and `log Y^{(k)}`, a running max for the
//! Erdős–Rényi statistic, or a count for the tail estimator μ. Replicas run
//! in parallel; results are gathered in replica order, so reports are
//! bit-identical for any thread count.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{EnergyLaw, LengthLaw, LengthSampler};
use crate::error::{Error, Result};
use crate::limits::{er_gamma, growth_rate, interpolation_rate, Alpha};
use crate::numeric::{CompensatedSum, LogSumExp, DEFAULT_TOL};
use crate::rates::{tail_rate, RateFunction};
use crate::rng::{substream, StreamRng, REPLICA_STREAM};

/// Largest population a single replica may draw.
pub const MAX_POPULATION: u64 = 1 << 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub energy_law: EnergyLaw,
    pub length_law: LengthLaw,
    pub m: u64,
    pub q: f64,
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    pub replicas: u32,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_probe: Option<f64>,
}

impl ExperimentConfig {
    /// `N = ⌊e^{qm}⌋`.
    pub fn population(&self) -> u64 {
        (self.q * self.m as f64).exp().floor() as u64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Precondition(msg));
        if self.m == 0 {
            return bad("m must be at least 1".into());
        }
        if !(self.q > 0.0) || !self.q.is_finite() {
            return bad(format!("q must be positive, got {}", self.q));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return bad(format!("beta must be nonnegative, got {}", self.beta));
        }
        if self.replicas == 0 {
            return bad("replicas must be at least 1".into());
        }
        if let Some(k) = self.k {
            if k < self.m {
                return bad(format!("k = {k} must be at least m = {}", self.m));
            }
        }
        if let Some(x) = self.x_probe {
            if !(x > 0.0) || !x.is_finite() {
                return bad(format!("x_probe must be positive, got {x}"));
            }
        }
        let n = (self.q * self.m as f64).exp();
        if !(n < MAX_POPULATION as f64) {
            return bad(format!("N = e^(qm) = {n:e} exceeds the limit {MAX_POPULATION}"));
        }
        Ok(())
    }

    /// ν for this configuration's laws.
    pub fn rate(&self) -> RateFunction {
        RateFunction::nu(self.length_law, self.energy_law)
    }
}

/// Execution knobs that never affect results.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses rayon's global pool.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    FreeEnergy,
    ErMax,
    Interpolation,
    TailEstimator,
}

/// Extra output of the tail estimator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailDiagnostics {
    pub x_probe: f64,
    /// Sample variance of μ across replicas.
    pub empirical_variance: f64,
    /// Exact `S(x) = P(R ≥ m·x)`.
    pub exact_s: f64,
    /// `(S − S²)/N`.
    pub theoretical_variance: f64,
    /// `−(1/m) log(mean μ)`; absent when every replica saw μ = 0.
    pub empirical_rate: Option<f64>,
    /// Leading-order rate from the length-law sum; absent when infinite.
    pub tail_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub values: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation over √replicas; absent for one replica.
    pub std_error: Option<f64>,
    pub theory_value: f64,
    pub abs_error: f64,
    pub n_used: u64,
    /// Seconds.
    pub wall_time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailDiagnostics>,
}

/// Mean, sample variance (n − 1) and standard error, summed in index order.
pub fn summarize(values: &[f64]) -> (f64, Option<f64>, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().copied().collect::<CompensatedSum>().value() / n;
    if values.len() < 2 {
        return (mean, None, None);
    }
    let ss = values
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .collect::<CompensatedSum>()
        .value();
    let var = ss / (n - 1.0);
    (mean, Some(var), Some((var / n).sqrt()))
}

/// One draw of `R = Σ_{j ≤ λ} η_j`; `λ = 0` gives the empty sum 0.
pub fn sample_r<R: Rng + ?Sized>(energy: EnergyLaw, length: &LengthSampler, rng: &mut R) -> f64 {
    let lambda = length.sample(rng);
    let mut r = 0.0;
    for _ in 0..lambda {
        r += energy.sample(rng);
    }
    r
}

/// Draws the `N` sums of one replica, feeding `(λ_i, R_i)` to `sink`.
fn draw_population<F: FnMut(u64, f64)>(config: &ExperimentConfig, rng: &mut StreamRng, mut sink: F) {
    let lengths = config.length_law.sampler(config.m);
    let energy = config.energy_law;
    for _ in 0..config.population() {
        let lambda = lengths.sample(rng);
        let mut r = 0.0;
        for _ in 0..lambda {
            r += energy.sample(rng);
        }
        sink(lambda, r);
    }
}

/// `log Ẑ = logsumexp_i(β R_i) − log N`.
pub fn log_z_hat(config: &ExperimentConfig, rng: &mut StreamRng) -> f64 {
    let beta = config.beta;
    let mut lse = LogSumExp::new();
    draw_population(config, rng, |_, r| lse.push(beta * r));
    lse.value() - (config.population() as f64).ln()
}

/// `log Y^{(k)} = (1/k)[logsumexp_i((k/m) β R_i) − log N]`.
pub fn log_y(config: &ExperimentConfig, k: u64, rng: &mut StreamRng) -> f64 {
    let scale = (k as f64 / config.m as f64) * config.beta;
    let mut lse = LogSumExp::new();
    draw_population(config, rng, |_, r| lse.push(scale * r));
    (lse.value() - (config.population() as f64).ln()) / k as f64
}

/// `X = max_i R_i / m`.
pub fn er_max(config: &ExperimentConfig, rng: &mut StreamRng) -> f64 {
    let mut best = f64::NEG_INFINITY;
    draw_population(config, rng, |_, r| best = best.max(r));
    best / config.m as f64
}

/// `μ = (1/N) #{i : λ_i ≥ 1, R_i ≥ m·x}`.
pub fn tail_mu(config: &ExperimentConfig, x: f64, rng: &mut StreamRng) -> f64 {
    let threshold = config.m as f64 * x;
    let mut hits = 0u64;
    draw_population(config, rng, |lambda, r| {
        if lambda >= 1 && r >= threshold {
            hits += 1;
        }
    });
    hits as f64 / config.population() as f64
}

fn run_replicas<F>(config: &ExperimentConfig, opts: &RunOptions, f: F) -> Result<Vec<f64>>
where
    F: Fn(&mut StreamRng) -> f64 + Sync,
{
    let seed = config.master_seed;
    let work = || -> Vec<f64> {
        (0..config.replicas as u64)
            .into_par_iter()
            .map(|r| f(&mut substream(seed, REPLICA_STREAM, r)))
            .collect()
    };
    match opts.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Precondition(format!("cannot start {n} worker threads: {e}")))?;
            Ok(pool.install(work))
        }
        None => Ok(work()),
    }
}

fn report(
    kind: ExperimentKind,
    config: &ExperimentConfig,
    values: Vec<f64>,
    theory_value: f64,
    started: Instant,
) -> ExperimentReport {
    let (mean, _, std_error) = summarize(&values);
    ExperimentReport {
        kind,
        mean,
        std_error,
        theory_value,
        abs_error: (mean - theory_value).abs(),
        n_used: config.population(),
        wall_time: started.elapsed().as_secs_f64(),
        values,
        tail: None,
    }
}

/// Replicas of `(1/m) log Ẑ` against the limit from [`growth_rate`].
pub fn run_free_energy(config: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentReport> {
    config.validate()?;
    if !(config.beta > 0.0) {
        return Err(Error::Precondition(
            "free-energy runs need beta > 0 (the free energy divides by beta)".into(),
        ));
    }
    let started = Instant::now();
    let m = config.m as f64;
    let values = run_replicas(config, opts, |rng| log_z_hat(config, rng) / m)?;
    let theory = growth_rate(&config.rate(), config.beta, config.q, DEFAULT_TOL)?.growth_rate;
    Ok(report(ExperimentKind::FreeEnergy, config, values, theory, started))
}

/// Replicas of `max_i R_i/m` against the generalized Erdős–Rényi limit.
pub fn run_er_max(config: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentReport> {
    config.validate()?;
    let started = Instant::now();
    let values = run_replicas(config, opts, |rng| er_max(config, rng))?;
    let theory = er_gamma(&config.rate(), config.q, DEFAULT_TOL)?;
    Ok(report(ExperimentKind::ErMax, config, values, theory, started))
}

/// Replicas of `log Y^{(k)}` against the interpolation limit at `α = k/m`.
pub fn run_interpolation(config: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentReport> {
    config.validate()?;
    let k = config
        .k
        .ok_or_else(|| Error::Precondition("interpolation runs need k".into()))?;
    let started = Instant::now();
    let values = run_replicas(config, opts, |rng| log_y(config, k, rng))?;
    let theory = if config.beta == 0.0 {
        0.0
    } else {
        let alpha = Alpha::Finite(k as f64 / config.m as f64);
        interpolation_rate(&config.rate(), config.beta, config.q, alpha, DEFAULT_TOL)?
    };
    Ok(report(ExperimentKind::Interpolation, config, values, theory, started))
}

/// Replicas of μ(N, m; x) against the exact tail probability.
pub fn run_tail_estimator(config: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentReport> {
    config.validate()?;
    let x = config
        .x_probe
        .ok_or_else(|| Error::Precondition("tail-estimator runs need x_probe".into()))?;
    let started = Instant::now();
    let values = run_replicas(config, opts, |rng| tail_mu(config, x, rng))?;
    let exact_s = exact_tail_probability(config.energy_law, config.length_law, config.m, x);
    let n = config.population() as f64;
    let (mean, var, _) = summarize(&values);
    let rate = tail_rate(config.length_law, &RateFunction::phi(config.energy_law), x, config.m)?;
    let mut rep = report(ExperimentKind::TailEstimator, config, values, exact_s, started);
    rep.tail = Some(TailDiagnostics {
        x_probe: x,
        empirical_variance: var.unwrap_or(0.0),
        exact_s,
        theoretical_variance: (exact_s - exact_s * exact_s) / n,
        empirical_rate: (mean > 0.0).then(|| -mean.ln() / config.m as f64),
        tail_rate: rate.finite(),
    });
    Ok(rep)
}

/// Runs whichever experiment the config calls for.
pub fn run(kind: ExperimentKind, config: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentReport> {
    match kind {
        ExperimentKind::FreeEnergy => run_free_energy(config, opts),
        ExperimentKind::ErMax => run_er_max(config, opts),
        ExperimentKind::Interpolation => run_interpolation(config, opts),
        ExperimentKind::TailEstimator => run_tail_estimator(config, opts),
    }
}

/// `log P(Σ_{j ≤ l} η_j ≥ a)` for a fixed number of terms.
fn log_fixed_length_tail(energy: EnergyLaw, l: u64, a: f64) -> f64 {
    let lf = l as f64;
    match energy {
        EnergyLaw::Gaussian => (0.5 * libm::erfc(a / (2.0 * lf).sqrt())).ln(),
        EnergyLaw::Rademacher => {
            // sum = 2B − l with B ~ Binomial(l, ½)
            let b_min = ((a + lf) / 2.0).ceil().max(0.0);
            if b_min > lf {
                return f64::NEG_INFINITY;
            }
            let mut lse = LogSumExp::new();
            let mut log_c = 0.0; // log C(l, 0)
            for b in 0..=l {
                if b > 0 {
                    log_c += ((l - b + 1) as f64).ln() - (b as f64).ln();
                }
                if b as f64 >= b_min {
                    lse.push(log_c - lf * std::f64::consts::LN_2);
                }
            }
            lse.value()
        }
        EnergyLaw::ShiftedExponential => {
            // Σ (X_j − 1) ≥ a  ⇔  Gamma(l, 1) ≥ a + l
            let z = a + lf;
            if z <= 0.0 {
                return 0.0;
            }
            let mut lse = LogSumExp::new();
            let mut log_term = -z; // e^{-z} z^k / k!
            for k in 0..l {
                if k > 0 {
                    log_term += z.ln() - (k as f64).ln();
                }
                lse.push(log_term);
            }
            lse.value().min(0.0)
        }
    }
}

/// Exact `S(x) = Σ_{l ≥ 1} p_l · P(Σ_{j ≤ l} η_j ≥ m·x)` with the length
/// support truncated at tail mass 1e-15.
pub fn exact_tail_probability(energy: EnergyLaw, length: LengthLaw, m: u64, x: f64) -> f64 {
    let a = m as f64 * x;
    let mut lse = LogSumExp::new();
    for (l, log_p) in length.support_log_pmf(m) {
        if l == 0 {
            continue;
        }
        lse.push(log_p + log_fixed_length_tail(energy, l, a));
    }
    lse.value().exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(energy: EnergyLaw, length: LengthLaw, m: u64, q: f64) -> ExperimentConfig {
        ExperimentConfig {
            energy_law: energy,
            length_law: length,
            m,
            q,
            beta: 1.0,
            k: None,
            replicas: 4,
            master_seed: 2024,
            x_probe: None,
        }
    }

    #[test]
    fn population_is_floor_of_exponential() {
        let c = config(EnergyLaw::Gaussian, LengthLaw::Deterministic, 24, 0.4);
        assert_eq!(c.population(), 14764);
        let c = config(EnergyLaw::Gaussian, LengthLaw::Deterministic, 4, 1000.5f64.ln() / 4.0);
        assert_eq!(c.population(), 1000);
    }

    #[test]
    fn validation() {
        let mut c = config(EnergyLaw::Gaussian, LengthLaw::Poisson, 10, 0.3);
        assert!(c.validate().is_ok());
        c.k = Some(5);
        assert!(c.validate().is_err());
        c.k = None;
        c.q = 10.0;
        assert!(c.validate().is_err());
        c.q = 0.3;
        c.replicas = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn sample_r_examples() {
        let mut rng = substream(5, "t", 0);
        let one = LengthLaw::Deterministic.sampler(1);
        for _ in 0..100 {
            let r = sample_r(EnergyLaw::Rademacher, &one, &mut rng);
            assert!(r == 1.0 || r == -1.0);
        }
        let zero = LengthLaw::Deterministic.sampler(0);
        assert_eq!(sample_r(EnergyLaw::Gaussian, &zero, &mut rng), 0.0);
    }

    #[test]
    fn log_z_hat_trivial_cases() {
        let mut c = config(EnergyLaw::Gaussian, LengthLaw::Poisson, 8, 0.5);
        c.beta = 0.0;
        assert_eq!(log_z_hat(&c, &mut substream(1, REPLICA_STREAM, 0)), 0.0);

        // N = 1: log Ẑ = β R_1 on the same stream
        let mut c = config(EnergyLaw::Gaussian, LengthLaw::Deterministic, 10, 0.01);
        c.beta = 1.7;
        assert_eq!(c.population(), 1);
        let lz = log_z_hat(&c, &mut substream(3, REPLICA_STREAM, 0));
        let mut rng = substream(3, REPLICA_STREAM, 0);
        let r = sample_r(EnergyLaw::Gaussian, &LengthLaw::Deterministic.sampler(10), &mut rng);
        assert!((lz - 1.7 * r).abs() < 1e-12);
        let x = er_max(&c, &mut substream(3, REPLICA_STREAM, 0));
        assert_eq!(x, r / 10.0);
    }

    #[test]
    fn log_z_hat_does_not_overflow_at_large_beta() {
        let mut c = config(EnergyLaw::Gaussian, LengthLaw::Deterministic, 30, 0.2);
        c.beta = 50.0;
        let v = log_z_hat(&c, &mut substream(9, REPLICA_STREAM, 0));
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn log_y_at_k_equal_m_matches_log_z_hat() {
        let c = config(EnergyLaw::ShiftedExponential, LengthLaw::Poisson, 12, 0.4);
        let a = log_z_hat(&c, &mut substream(11, REPLICA_STREAM, 2)) / 12.0;
        let b = log_y(&c, 12, &mut substream(11, REPLICA_STREAM, 2));
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn exact_tail_enumerations() {
        // P(four Rademacher steps all +1) = 1/16
        let s = exact_tail_probability(EnergyLaw::Rademacher, LengthLaw::Deterministic, 4, 1.0);
        assert!((s - 0.0625).abs() < 1e-15);
        // P(N(0, 4) >= 2) = Q(1)
        let s = exact_tail_probability(EnergyLaw::Gaussian, LengthLaw::Deterministic, 4, 0.5);
        assert!((s - 0.158_655_253_931_457_05).abs() < 1e-12);
        // Gamma(2,1) >= 3: e^{-3}(1 + 3)
        let s = exact_tail_probability(EnergyLaw::ShiftedExponential, LengthLaw::Deterministic, 2, 0.5);
        assert!((s - 4.0 * (-3.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn free_energy_rejects_zero_beta() {
        let mut c = config(EnergyLaw::Gaussian, LengthLaw::Deterministic, 8, 0.3);
        c.beta = 0.0;
        assert!(matches!(
            run_free_energy(&c, &RunOptions::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn single_replica_has_no_std_error() {
        let mut c = config(EnergyLaw::Gaussian, LengthLaw::Deterministic, 8, 0.3);
        c.replicas = 1;
        let r = run_free_energy(&c, &RunOptions::default()).unwrap();
        assert_eq!(r.values.len(), 1);
        assert!(r.std_error.is_none());
        assert_eq!(r.n_used, 11);
    }

    #[test]
    fn summarize_basic() {
        let (mean, var, se) = summarize(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(mean, 2.5);
        assert!((var.unwrap() - 5.0 / 3.0).abs() < 1e-15);
        assert!((se.unwrap() - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }
}
