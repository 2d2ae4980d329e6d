use redem::montecarlo::{
    exact_tail_probability, run_er_max, run_free_energy, run_interpolation, run_tail_estimator,
    sample_r, summarize,
};
use redem::rng::substream;
use redem::{EnergyLaw, ExperimentConfig, LengthLaw, RunOptions};

fn base(energy: EnergyLaw, length: LengthLaw, m: u64, q: f64) -> ExperimentConfig {
    ExperimentConfig {
        energy_law: energy,
        length_law: length,
        m,
        q,
        beta: 1.0,
        k: None,
        replicas: 100,
        master_seed: 0x5eed,
        x_probe: None,
    }
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let c = base(EnergyLaw::Gaussian, LengthLaw::Poisson, 14, 0.4);
    let one = run_free_energy(&c, &RunOptions { threads: Some(1) }).unwrap();
    let four = run_free_energy(&c, &RunOptions { threads: Some(4) }).unwrap();
    let again = run_free_energy(&c, &RunOptions::default()).unwrap();
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&one.values), bits(&four.values));
    assert_eq!(bits(&one.values), bits(&again.values));
    assert_eq!(one.mean.to_bits(), four.mean.to_bits());
}

#[test]
fn interpolation_at_k_equal_m_reproduces_free_energy() {
    let mut c = base(EnergyLaw::Rademacher, LengthLaw::SymmetricBinomial, 12, 0.5);
    c.replicas = 20;
    let fe = run_free_energy(&c, &RunOptions::default()).unwrap();
    c.k = Some(12);
    let it = run_interpolation(&c, &RunOptions::default()).unwrap();
    for (a, b) in fe.values.iter().zip(&it.values) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    assert!((fe.theory_value - it.theory_value).abs() < 1e-12);
}

#[test]
fn interpolation_at_zero_beta_is_zero() {
    let mut c = base(EnergyLaw::Gaussian, LengthLaw::Poisson, 10, 0.3);
    c.beta = 0.0;
    c.k = Some(30);
    c.replicas = 3;
    let r = run_interpolation(&c, &RunOptions::default()).unwrap();
    assert!(r.values.iter().all(|&v| v == 0.0));
    assert_eq!(r.theory_value, 0.0);
}

#[test]
fn interpolation_at_large_k_tracks_theory() {
    let mut c = base(EnergyLaw::Gaussian, LengthLaw::Deterministic, 24, 0.5);
    c.k = Some(2400);
    let r = run_interpolation(&c, &RunOptions::default()).unwrap();
    assert!(r.abs_error < 0.15, "{} vs {}", r.mean, r.theory_value);
}

#[test]
fn free_energy_error_trend_over_m() {
    // soft trend check: each step in m may not raise the error by more than
    // one pooled standard error
    let errs: Vec<(f64, f64)> = [12u64, 18, 24, 30]
        .iter()
        .map(|&m| {
            let r = run_free_energy(
                &base(EnergyLaw::Gaussian, LengthLaw::Deterministic, m, 0.4),
                &RunOptions::default(),
            )
            .unwrap();
            (r.abs_error, r.std_error.unwrap())
        })
        .collect();
    for w in errs.windows(2) {
        let pooled = (w[0].1 * w[0].1 + w[1].1 * w[1].1).sqrt();
        assert!(w[1].0 <= w[0].0 + pooled, "{errs:?}");
    }
}

#[test]
fn er_max_classical_limit() {
    let c = base(EnergyLaw::Gaussian, LengthLaw::Deterministic, 24, 0.5);
    let r = run_er_max(&c, &RunOptions::default()).unwrap();
    assert!((r.theory_value - 1.0).abs() < 1e-8);
    assert!(r.abs_error < 0.15, "{}", r.mean);
}

#[test]
fn er_max_generalized_limit() {
    let c = base(EnergyLaw::Gaussian, LengthLaw::Poisson, 24, 0.4252);
    let r = run_er_max(&c, &RunOptions::default()).unwrap();
    assert!((r.theory_value - 1.0).abs() < 1e-3);
    assert!(r.abs_error < 0.15, "{}", r.mean);
}

#[test]
fn sum_variance_for_fixed_length() {
    let mut rng = substream(8, "var", 0);
    let len = LengthLaw::Deterministic.sampler(100);
    let draws: Vec<f64> = (0..100_000)
        .map(|_| sample_r(EnergyLaw::Gaussian, &len, &mut rng))
        .collect();
    let (_, var, _) = summarize(&draws);
    assert!((var.unwrap() - 100.0).abs() < 5.0);
}

#[test]
fn tail_estimator_mean_and_variance() {
    let mut c = base(EnergyLaw::Rademacher, LengthLaw::Deterministic, 4, 1000.5f64.ln() / 4.0);
    c.replicas = 500;
    c.x_probe = Some(1.0);
    let r = run_tail_estimator(&c, &RunOptions::default()).unwrap();
    assert_eq!(r.n_used, 1000);
    let tail = r.tail.as_ref().unwrap();
    assert!((tail.exact_s - 0.0625).abs() < 1e-15);
    assert!((r.mean - 0.0625).abs() < 5.0 * r.std_error.unwrap());
    assert!((tail.theoretical_variance - 0.0625 * 0.9375 / 1000.0).abs() < 1e-17);
}

#[test]
fn tail_estimator_mean_for_other_enumerable_configs() {
    for (energy, length, m, x) in [
        (EnergyLaw::Rademacher, LengthLaw::Deterministic, 6, 0.5),
        (EnergyLaw::Rademacher, LengthLaw::Poisson, 4, 0.5),
        (EnergyLaw::ShiftedExponential, LengthLaw::SymmetricBinomial, 3, 0.5),
    ] {
        let mut c = base(energy, length, m, 400f64.ln() / m as f64);
        c.replicas = 200;
        c.x_probe = Some(x);
        let r = run_tail_estimator(&c, &RunOptions::default()).unwrap();
        let s = exact_tail_probability(energy, length, m, x);
        assert!((r.mean - s).abs() < 5.0 * r.std_error.unwrap(), "{energy}/{length}: {} vs {s}", r.mean);
    }
}

#[test]
fn tail_estimator_is_mostly_zero_when_rate_exceeds_q() {
    let mut c = base(EnergyLaw::Gaussian, LengthLaw::Deterministic, 24, 0.18);
    c.x_probe = Some(1.0);
    let r = run_tail_estimator(&c, &RunOptions::default()).unwrap();
    let zeros = r.values.iter().filter(|&&v| v == 0.0).count();
    assert!(zeros >= 95, "{zeros} of 100 replicas were zero");
}
