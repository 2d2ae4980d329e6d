//! Energy laws for η and random-length laws for λ⁽ᵐ⁾.
//!
//! Every energy law is centred (E η = 0) and carries its exact cumulant
//! generating function `t ↦ log E e^{tη}`. Length laws are families indexed
//! by their mean `m`; `chi` is the per-unit-mean scaling cgf, so that
//! `log E e^{tλ} = m·chi(t)` holds exactly for all three shipped kinds.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp1, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LN_2: f64 = std::f64::consts::LN_2;

/// Log of the tail mass below which length supports are truncated.
pub const LOG_TAIL_CUTOFF: f64 = -34.538_776_394_910_684; // ln 1e-15

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyLaw {
    /// Standard normal.
    Gaussian,
    /// ±1 with probability ½ each.
    Rademacher,
    /// Exp(1) − 1.
    ShiftedExponential,
}

impl EnergyLaw {
    pub const ALL: [EnergyLaw; 3] = [
        EnergyLaw::Gaussian,
        EnergyLaw::Rademacher,
        EnergyLaw::ShiftedExponential,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            EnergyLaw::Gaussian => "gaussian",
            EnergyLaw::Rademacher => "rademacher",
            EnergyLaw::ShiftedExponential => "shifted_exponential",
        }
    }

    /// Supremum of the `t` for which the cgf is finite (`+inf` if none).
    pub fn cgf_domain_sup(self) -> f64 {
        match self {
            EnergyLaw::Gaussian | EnergyLaw::Rademacher => f64::INFINITY,
            EnergyLaw::ShiftedExponential => 1.0,
        }
    }

    /// Essential supremum of η; the rate function is `+inf` beyond it.
    pub fn essential_sup(self) -> f64 {
        match self {
            EnergyLaw::Rademacher => 1.0,
            EnergyLaw::Gaussian | EnergyLaw::ShiftedExponential => f64::INFINITY,
        }
    }

    pub fn variance(self) -> f64 {
        1.0
    }

    /// `log E e^{tη}` for `0 ≤ t < cgf_domain_sup`.
    pub fn cgf(self, t: f64) -> Result<f64> {
        if !(t >= 0.0) || t >= self.cgf_domain_sup() {
            return Err(Error::Domain(format!(
                "{} cgf evaluated at t = {t}, valid range is [0, {})",
                self.tag(),
                self.cgf_domain_sup()
            )));
        }
        Ok(self.cgf_unchecked(t))
    }

    /// The cgf without the domain check; `+inf` at or beyond the domain edge.
    pub(crate) fn cgf_unchecked(self, t: f64) -> f64 {
        match self {
            EnergyLaw::Gaussian => 0.5 * t * t,
            EnergyLaw::Rademacher => {
                // log cosh t, stable for large |t|
                let a = t.abs();
                a + (-2.0 * a).exp().ln_1p() - LN_2
            }
            EnergyLaw::ShiftedExponential => {
                if t >= 1.0 {
                    f64::INFINITY
                } else {
                    -t - (-t).ln_1p()
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            EnergyLaw::Gaussian => rng.sample(StandardNormal),
            EnergyLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            EnergyLaw::ShiftedExponential => {
                let x: f64 = rng.sample(Exp1);
                x - 1.0
            }
        }
    }
}

impl fmt::Display for EnergyLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for EnergyLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EnergyLaw::ALL
            .into_iter()
            .find(|l| l.tag() == s)
            .ok_or_else(|| Error::Domain(format!("unknown energy law `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthLaw {
    /// λ ≡ m.
    Deterministic,
    /// Poisson(m).
    Poisson,
    /// Binomial(2m, ½).
    SymmetricBinomial,
}

impl LengthLaw {
    pub const ALL: [LengthLaw; 3] = [
        LengthLaw::Deterministic,
        LengthLaw::Poisson,
        LengthLaw::SymmetricBinomial,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            LengthLaw::Deterministic => "deterministic",
            LengthLaw::Poisson => "poisson",
            LengthLaw::SymmetricBinomial => "symmetric_binomial",
        }
    }

    /// Essential supremum of λ/m (`+inf` for unbounded support).
    pub fn scaled_sup(self) -> f64 {
        match self {
            LengthLaw::Deterministic => 1.0,
            LengthLaw::Poisson => f64::INFINITY,
            LengthLaw::SymmetricBinomial => 2.0,
        }
    }

    /// Scaling cgf: `log E e^{tλ⁽ᵐ⁾} = m·chi(t)`.
    pub fn chi(self, t: f64) -> Result<f64> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!(
                "{} chi evaluated at t = {t}, valid range is [0, inf)",
                self.tag()
            )));
        }
        Ok(self.chi_unchecked(t))
    }

    pub(crate) fn chi_unchecked(self, t: f64) -> f64 {
        match self {
            LengthLaw::Deterministic => t,
            LengthLaw::Poisson => t.exp_m1(),
            // 2·log((1 + e^t)/2), written to stay finite for large t
            LengthLaw::SymmetricBinomial => 2.0 * (t + (-t).exp().ln_1p() - LN_2),
        }
    }

    /// Converts a real mean parameter to the integer the family is indexed by.
    pub fn mean_parameter(self, m: f64) -> Result<u64> {
        if !(m >= 1.0) || !m.is_finite() || m.fract() != 0.0 {
            return Err(Error::Domain(format!(
                "{} length law needs a positive integer mean, got {m}",
                self.tag()
            )));
        }
        Ok(m as u64)
    }

    /// Prepared sampler for mean `m`.
    pub fn sampler(self, m: u64) -> LengthSampler {
        if m == 0 {
            return LengthSampler::Fixed(0);
        }
        match self {
            LengthLaw::Deterministic => LengthSampler::Fixed(m),
            LengthLaw::Poisson => LengthSampler::Poisson(
                Poisson::new(m as f64).expect("positive Poisson mean"),
            ),
            LengthLaw::SymmetricBinomial => LengthSampler::Binomial(
                Binomial::new(2 * m, 0.5).expect("valid binomial parameters"),
            ),
        }
    }

    pub fn sample<R: Rng + ?Sized>(self, m: u64, rng: &mut R) -> u64 {
        self.sampler(m).sample(rng)
    }

    /// Upper bound on `log P(λ⁽ᵐ⁾ ≥ l)` (Chernoff), `0` when `l` is at or below the mean.
    pub fn log_tail_bound(self, m: u64, l: u64) -> f64 {
        let mf = m as f64;
        let s = l as f64 / mf;
        if l <= m {
            return 0.0;
        }
        match self {
            LengthLaw::Deterministic => f64::NEG_INFINITY,
            LengthLaw::Poisson => -mf * (s * s.ln() - s + 1.0),
            LengthLaw::SymmetricBinomial => {
                if s > 2.0 {
                    f64::NEG_INFINITY
                } else {
                    let r = if s >= 2.0 {
                        2.0 * LN_2
                    } else {
                        s * s.ln() + (2.0 - s) * (2.0 - s).ln()
                    };
                    -mf * r
                }
            }
        }
    }

    /// Iterator over `(l, log p_l)` in increasing `l`, covering the whole support.
    pub fn log_pmf(self, m: u64) -> LogPmfIter {
        LogPmfIter::new(self, m)
    }

    /// `(l, log p_l)` over the support, truncated where the remaining tail
    /// mass is below 1e-15.
    pub fn support_log_pmf(self, m: u64) -> Vec<(u64, f64)> {
        self.log_pmf(m)
            .take_while(|&(l, _)| self.log_tail_bound(m, l) >= LOG_TAIL_CUTOFF)
            .collect()
    }
}

impl fmt::Display for LengthLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for LengthLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LengthLaw::ALL
            .into_iter()
            .find(|l| l.tag() == s)
            .ok_or_else(|| Error::Domain(format!("unknown length law `{s}`")))
    }
}

/// A length law bound to a specific mean, ready to draw from.
#[derive(Debug, Clone, Copy)]
pub enum LengthSampler {
    Fixed(u64),
    Poisson(Poisson<f64>),
    Binomial(Binomial),
}

impl LengthSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            LengthSampler::Fixed(m) => *m,
            LengthSampler::Poisson(p) => p.sample(rng) as u64,
            LengthSampler::Binomial(b) => b.sample(rng),
        }
    }
}

/// Incremental log-pmf walk; see [`LengthLaw::log_pmf`].
#[derive(Debug, Clone)]
pub struct LogPmfIter {
    law: LengthLaw,
    m: u64,
    next_l: u64,
    log_p: f64,
    done: bool,
}

impl LogPmfIter {
    fn new(law: LengthLaw, m: u64) -> Self {
        let mf = m as f64;
        let (next_l, log_p) = match law {
            LengthLaw::Deterministic => (m, 0.0),
            LengthLaw::Poisson => (0, -mf),
            LengthLaw::SymmetricBinomial => (0, -2.0 * mf * LN_2),
        };
        let done = m == 0 && law != LengthLaw::Deterministic;
        LogPmfIter {
            law,
            m,
            next_l,
            log_p,
            done,
        }
    }
}

impl Iterator for LogPmfIter {
    type Item = (u64, f64);

    fn next(&mut self) -> Option<(u64, f64)> {
        if self.done {
            return None;
        }
        let item = (self.next_l, self.log_p);
        let l = self.next_l + 1;
        let lf = l as f64;
        match self.law {
            LengthLaw::Deterministic => self.done = true,
            LengthLaw::Poisson => self.log_p += (self.m as f64).ln() - lf.ln(),
            LengthLaw::SymmetricBinomial => {
                let n = 2 * self.m;
                if l > n {
                    self.done = true;
                } else {
                    self.log_p += ((n - l + 1) as f64).ln() - lf.ln();
                }
            }
        }
        self.next_l = l;
        Some(item)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn cgf_examples() {
        assert_eq!(EnergyLaw::Gaussian.cgf(0.0).unwrap(), 0.0);
        assert_eq!(EnergyLaw::Gaussian.cgf(2.0).unwrap(), 2.0);
        // oracle: log ∫ e^{0.5(x-1)} e^{-x} dx by quadrature = 0.193147180559945
        let v = EnergyLaw::ShiftedExponential.cgf(0.5).unwrap();
        assert!((v - 0.193_147_180_559_945).abs() < 1e-9);
        let big = EnergyLaw::Rademacher.cgf(800.0).unwrap();
        assert!((big - (800.0 - LN_2)).abs() < 1e-9);
    }

    #[test]
    fn cgf_domain_errors() {
        assert!(matches!(
            EnergyLaw::ShiftedExponential.cgf(1.0),
            Err(Error::Domain(_))
        ));
        assert!(EnergyLaw::Gaussian.cgf(-0.1).is_err());
        assert!(LengthLaw::Poisson.chi(-1e-3).is_err());
    }

    #[test]
    fn chi_examples() {
        assert_eq!(LengthLaw::Deterministic.chi(0.7).unwrap(), 0.7);
        assert_eq!(LengthLaw::Poisson.chi(0.0).unwrap(), 0.0);
        // oracle: log Σ e^{-1}e^{l}/l! = e - 1 (series at m = 1)
        let v = LengthLaw::Poisson.chi(1.0).unwrap();
        assert!((v - 1.718_281_828_459_045).abs() < 1e-12);
        let v = LengthLaw::SymmetricBinomial.chi(0.3).unwrap();
        assert!((v - 2.0 * ((1.0 + 0.3f64.exp()) / 2.0).ln()).abs() < 1e-14);
    }

    #[test]
    fn tags_round_trip() {
        for l in EnergyLaw::ALL {
            assert_eq!(l.tag().parse::<EnergyLaw>().unwrap(), l);
        }
        for l in LengthLaw::ALL {
            assert_eq!(l.tag().parse::<LengthLaw>().unwrap(), l);
        }
        assert!("geometric".parse::<LengthLaw>().is_err());
    }

    #[test]
    fn mean_parameter_requires_integer() {
        assert_eq!(LengthLaw::SymmetricBinomial.mean_parameter(5.0), Ok(5));
        assert!(matches!(
            LengthLaw::SymmetricBinomial.mean_parameter(5.5),
            Err(Error::Domain(_))
        ));
        assert!(LengthLaw::Poisson.mean_parameter(0.0).is_err());
    }

    #[test]
    fn sample_supports() {
        let mut rng = substream(1, "test", 0);
        for _ in 0..1000 {
            let v = EnergyLaw::Rademacher.sample(&mut rng);
            assert!(v == 1.0 || v == -1.0);
            assert!(LengthLaw::SymmetricBinomial.sample(5, &mut rng) <= 10);
        }
        assert_eq!(LengthLaw::Deterministic.sample(17, &mut rng), 17);
        assert_eq!(LengthLaw::Poisson.sample(0, &mut rng), 0);
    }

    #[test]
    fn sampling_is_deterministic_per_stream() {
        let a = EnergyLaw::Gaussian.sample(&mut substream(42, "s", 0));
        let b = EnergyLaw::Gaussian.sample(&mut substream(42, "s", 0));
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn pmf_sums_to_one() {
        for law in LengthLaw::ALL {
            for m in [1u64, 5, 20, 300] {
                let total: f64 = law.support_log_pmf(m).iter().map(|(_, lp)| lp.exp()).sum();
                assert!((total - 1.0).abs() < 1e-12, "{law} m={m}: {total}");
            }
        }
        let pts = LengthLaw::SymmetricBinomial.support_log_pmf(3);
        assert_eq!(pts.len(), 7);
        assert!((pts[3].1.exp() - 20.0 / 64.0).abs() < 1e-15);
    }
}
