//! Observation models for a monitored location.
//!
//! A model carries the pre-change density f and post-change density g of the
//! per-slot observations, can sample either regime, and exposes the
//! log-likelihood-ratio analytics every closed-form performance bound
//! consumes: the KL divergences D(f||g) and D(g||f), the ascent probability
//! q = P_g(Z > 0), the truncated mean E_f[Z 1{Z >= 0}], the post-change
//! second moment J = E_g[Z^2], and the derived constants
//! K = q exp(-J / (q D(g||f))) and C = E_f[Z 1{Z >= 0}] / D(f||g).
//!
//! Bound formulas only ever see `LlrAnalytics`, so other univariate families
//! can ship behind the same trait without touching them.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid model parameter {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error("non-finite observation: {0}")]
    NonFiniteObservation(f64),
}

/// Which hypothesis the observations are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    PreChange,
    PostChange,
}

/// Closed-form log-likelihood-ratio analytics of one location's model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LlrAnalytics {
    /// D(f||g), the pre-change KL divergence (mean downward drift of Z).
    pub d_f_g: f64,
    /// D(g||f), the post-change KL divergence (mean upward drift of Z).
    pub d_g_f: f64,
    /// q = P_g(Z > 0); the first ascent epoch is Geometric(q).
    pub q: f64,
    /// E_f[Z 1{Z >= 0}], truncated pre-change mean of the LLR.
    pub z_plus_mean: f64,
    /// J = E_g[Z^2].
    pub j: f64,
    /// K = q exp(-J / (q D(g||f))), in (0, 1).
    pub k: f64,
    /// C = E_f[Z 1{Z >= 0}] / D(f||g).
    pub c: f64,
}

/// Observation model of a single location.
pub trait DistributionModel: Send + Sync {
    /// Log-density under the pre-change law f.
    fn log_f(&self, y: f64) -> f64;
    /// Log-density under the post-change law g.
    fn log_g(&self, y: f64) -> f64;
    /// One i.i.d. draw from f or g.
    fn sample(&self, regime: Regime, rng: &mut dyn rand::RngCore) -> f64;
    /// LLR analytics, closed-form where available.
    fn analytics(&self) -> Result<LlrAnalytics, ModelError>;

    /// Log-likelihood ratio Z(y) = log g(y) - log f(y).
    fn llr(&self, y: f64) -> Result<f64, ModelError> {
        if !y.is_finite() {
            return Err(ModelError::NonFiniteObservation(y));
        }
        Ok(self.log_g(y) - self.log_f(y))
    }
}

/// Gaussian pre/post pair with a common standard deviation:
/// f = N(mu0, sigma^2), g = N(mu1, sigma^2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianPair {
    mu0: f64,
    mu1: f64,
    sigma: f64,
}

impl GaussianPair {
    pub fn new(mu0: f64, mu1: f64, sigma: f64) -> Result<Self, ModelError> {
        for (field, v) in [("mu0", mu0), ("mu1", mu1), ("sigma", sigma)] {
            if !v.is_finite() {
                return Err(ModelError::InvalidParameter {
                    field,
                    reason: format!("must be finite, got {v}"),
                });
            }
        }
        if sigma <= 0.0 {
            return Err(ModelError::InvalidParameter {
                field: "sigma",
                reason: format!("must be > 0, got {sigma}"),
            });
        }
        if mu0 == mu1 {
            return Err(ModelError::InvalidParameter {
                field: "mu1",
                reason: "mu0 == mu1 makes the KL divergence zero".to_string(),
            });
        }
        Ok(GaussianPair { mu0, mu1, sigma })
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// KL divergence between the two laws, (mu1 - mu0)^2 / (2 sigma^2).
    pub fn kl(&self) -> f64 {
        let d = (self.mu1 - self.mu0) / self.sigma;
        d * d / 2.0
    }
}

impl DistributionModel for GaussianPair {
    fn log_f(&self, y: f64) -> f64 {
        gaussian_log_density(y, self.mu0, self.sigma)
    }

    fn log_g(&self, y: f64) -> f64 {
        gaussian_log_density(y, self.mu1, self.sigma)
    }

    fn sample(&self, regime: Regime, rng: &mut dyn rand::RngCore) -> f64 {
        let mu = match regime {
            Regime::PreChange => self.mu0,
            Regime::PostChange => self.mu1,
        };
        let z: f64 = rng.sample(StandardNormal);
        mu + self.sigma * z
    }

    fn analytics(&self) -> Result<LlrAnalytics, ModelError> {
        // Z is Gaussian under both laws: N(-D, 2D) under f and N(D, 2D)
        // under g, where D is the (symmetric) KL divergence.
        let d = self.kl();
        let s = (2.0 * d).sqrt();
        let q = std_normal_cdf(d / s);
        // E[X 1{X >= 0}] for X ~ N(mu, s^2) is mu Phi(mu/s) + s phi(mu/s).
        let mu = -d;
        let z_plus_mean = mu * std_normal_cdf(mu / s) + s * std_normal_pdf(mu / s);
        let j = 2.0 * d + d * d;
        let k = q * (-j / (q * d)).exp();
        Ok(LlrAnalytics {
            d_f_g: d,
            d_g_f: d,
            q,
            z_plus_mean,
            j,
            k,
            c: z_plus_mean / d,
        })
    }
}

fn gaussian_log_density(y: f64, mu: f64, sigma: f64) -> f64 {
    const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;
    let z = (y - mu) / sigma;
    -0.5 * z * z - sigma.ln() - LN_SQRT_2PI
}

pub(crate) fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub(crate) fn std_normal_pdf(x: f64) -> f64 {
    const SQRT_2PI: f64 = 2.506_628_274_631_000_5;
    (-0.5 * x * x).exp() / SQRT_2PI
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StreamError {
    #[error("scripted LLR stream exhausted after {0} values")]
    Exhausted(usize),
    #[error("non-finite LLR increment: {0}")]
    NonFinite(f64),
}

/// Source of per-observation LLR increments for one location. Simulations
/// are written against this trait so tests can inject scripted sequences in
/// place of RNG-backed draws.
pub trait LlrStream {
    fn next_llr(&mut self, regime: Regime) -> Result<f64, StreamError>;
}

/// RNG-backed stream: draws an observation from the model in the requested
/// regime and returns its LLR.
pub struct ModelStream<'a, R: Rng> {
    model: &'a dyn DistributionModel,
    rng: R,
}

impl<'a, R: Rng> ModelStream<'a, R> {
    pub fn new(model: &'a dyn DistributionModel, rng: R) -> Self {
        ModelStream { model, rng }
    }
}

impl<R: Rng> LlrStream for ModelStream<'_, R> {
    fn next_llr(&mut self, regime: Regime) -> Result<f64, StreamError> {
        let y = self.model.sample(regime, &mut self.rng);
        self.model
            .llr(y)
            .map_err(|_| StreamError::NonFinite(f64::NAN))
    }
}

/// Scripted stream of LLR increments; the regime argument is ignored.
pub struct ScriptedStream {
    values: Vec<f64>,
    next: usize,
}

impl ScriptedStream {
    pub fn new(values: impl Into<Vec<f64>>) -> Self {
        ScriptedStream {
            values: values.into(),
            next: 0,
        }
    }

    /// Number of increments handed out so far.
    pub fn consumed(&self) -> usize {
        self.next
    }
}

impl LlrStream for ScriptedStream {
    fn next_llr(&mut self, _regime: Regime) -> Result<f64, StreamError> {
        match self.values.get(self.next) {
            Some(&z) if z.is_finite() => {
                self.next += 1;
                Ok(z)
            }
            Some(&z) => Err(StreamError::NonFinite(z)),
            None => Err(StreamError::Exhausted(self.next)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reference_model() -> GaussianPair {
        GaussianPair::new(0.0, 2.0, 1.0).unwrap()
    }

    /// Adaptive Simpson quadrature, the independent oracle for the
    /// closed-form analytics.
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson_rule<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        fn recurse<F: Fn(f64) -> f64>(
            f: &F,
            a: f64,
            b: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson_rule(f, a, m);
            let right = simpson_rule(f, m, b);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                recurse(f, a, m, left, tol / 2.0, depth - 1)
                    + recurse(f, m, b, right, tol / 2.0, depth - 1)
            }
        }
        recurse(f, a, b, simpson_rule(f, a, b), tol, 40)
    }

    #[test]
    fn construction_rejects_degenerate_parameters() {
        assert!(GaussianPair::new(0.0, 2.0, 0.0).is_err());
        assert!(GaussianPair::new(0.0, 2.0, -1.0).is_err());
        assert!(GaussianPair::new(1.0, 1.0, 1.0).is_err());
        assert!(GaussianPair::new(f64::NAN, 2.0, 1.0).is_err());
        assert!(GaussianPair::new(0.0, f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn llr_matches_hand_trace_for_reference_model() {
        let m = reference_model();
        // Z(y) = 2y - 2 for this pair.
        assert_eq!(m.llr(1.0).unwrap(), 0.0);
        assert_eq!(m.llr(2.0).unwrap(), 2.0);
        assert_eq!(m.llr(0.0).unwrap(), -2.0);
    }

    #[test]
    fn llr_rejects_non_finite_observations() {
        let m = reference_model();
        assert!(m.llr(f64::NAN).is_err());
        assert!(m.llr(f64::INFINITY).is_err());
    }

    #[test]
    fn llr_is_monotone_in_y_when_mu1_exceeds_mu0() {
        let m = reference_model();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..200 {
            let y = -5.0 + i as f64 * 0.05;
            let z = m.llr(y).unwrap();
            assert!(z > prev, "llr not increasing at y={y}");
            prev = z;
        }
    }

    #[test]
    fn analytics_matches_frozen_closed_forms() {
        let a = reference_model().analytics().unwrap();
        assert!((a.d_f_g - 2.0).abs() < 1e-15);
        assert!((a.d_g_f - 2.0).abs() < 1e-15);
        // 1e-10 tolerance: the erfc behind the normal CDF is good to ~1e-11.
        assert!((a.q - 0.841_344_746_068_542_9).abs() < 1e-10);
        assert!((a.z_plus_mean - 0.166_630_941_175_372_58).abs() < 1e-10);
        assert!((a.j - 8.0).abs() < 1e-15);
        assert!((a.k - 0.007_247_871_434_940_402).abs() < 1e-10);
        assert!((a.c - 0.083_315_470_587_686_29).abs() < 1e-10);
    }

    #[test]
    fn analytics_internal_identities_hold() {
        let a = reference_model().analytics().unwrap();
        assert_eq!(a.k, a.q * (-a.j / (a.q * a.d_g_f)).exp());
        assert_eq!(a.c, a.z_plus_mean / a.d_f_g);
        assert!(a.q > 0.0 && a.q < 1.0);
        assert!(a.k > 0.0 && a.k < 1.0);
    }

    #[test]
    fn analytics_agrees_with_quadrature_oracle() {
        // Integrands written directly in terms of the densities; the LLR
        // changes sign at y = 1 for this model.
        let m = reference_model();
        let f = |y: f64| (gaussian_log_density(y, 0.0, 1.0)).exp();
        let g = |y: f64| (gaussian_log_density(y, 2.0, 1.0)).exp();
        let z = |y: f64| 2.0 * y - 2.0;

        let q = simpson(&|y| g(y), 1.0, 22.0, 1e-12);
        let z_plus = simpson(&|y| z(y) * f(y), 1.0, 22.0, 1e-12);
        let j = simpson(&|y| z(y) * z(y) * g(y), -10.0, 14.0, 1e-12);
        let d_f_g = simpson(&|y| -z(y) * f(y), -12.0, 12.0, 1e-12);

        let a = m.analytics().unwrap();
        assert!((a.q - q).abs() < 1e-9, "q: {} vs {}", a.q, q);
        assert!((a.z_plus_mean - z_plus).abs() < 1e-9);
        assert!((a.j - j).abs() < 1e-9);
        assert!((a.d_f_g - d_f_g).abs() < 1e-9);
    }

    #[test]
    fn analytics_is_pure() {
        let m = reference_model();
        let a = m.analytics().unwrap();
        let b = m.analytics().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sample_means_match_regime_laws() {
        let m = reference_model();
        let n = 100_000;
        for (regime, expected) in [(Regime::PreChange, 0.0), (Regime::PostChange, 2.0)] {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let mean: f64 = (0..n).map(|_| m.sample(regime, &mut rng)).sum::<f64>() / n as f64;
            // 3 sigma / sqrt(n) CLT band.
            assert!(
                (mean - expected).abs() < 0.02,
                "regime {regime:?}: mean {mean}"
            );
        }
    }

    #[test]
    fn sample_streams_are_deterministic_given_seed() {
        let m = reference_model();
        let draw = |seed: u64| -> Vec<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| m.sample(Regime::PreChange, &mut rng))
                .collect()
        };
        assert_eq!(draw(7), draw(7));
        assert_ne!(draw(7), draw(8));
    }

    #[test]
    fn monte_carlo_q_and_z_plus_agree_with_analytics() {
        let m = reference_model();
        let a = m.analytics().unwrap();
        let n = 1_000_000u64;

        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let mut ascents = 0u64;
        for _ in 0..n {
            let z = m.llr(m.sample(Regime::PostChange, &mut rng)).unwrap();
            if z > 0.0 {
                ascents += 1;
            }
        }
        let q_hat = ascents as f64 / n as f64;
        let se = (a.q * (1.0 - a.q) / n as f64).sqrt();
        assert!((q_hat - a.q).abs() < 3.0 * se, "q_hat {q_hat} vs {}", a.q);

        let mut rng = ChaCha8Rng::seed_from_u64(102);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let z = m.llr(m.sample(Regime::PreChange, &mut rng)).unwrap();
            let zp = if z >= 0.0 { z } else { 0.0 };
            sum += zp;
            sum_sq += zp * zp;
        }
        let mean = sum / n as f64;
        let var = (sum_sq - sum * sum / n as f64) / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        assert!(
            (mean - a.z_plus_mean).abs() < 3.0 * se,
            "z_plus {mean} vs {}",
            a.z_plus_mean
        );
    }

    #[test]
    fn scripted_stream_replays_and_reports_exhaustion() {
        let mut s = ScriptedStream::new(vec![0.5, -1.0]);
        assert_eq!(s.next_llr(Regime::PreChange).unwrap(), 0.5);
        assert_eq!(s.next_llr(Regime::PostChange).unwrap(), -1.0);
        assert_eq!(s.consumed(), 2);
        assert!(matches!(
            s.next_llr(Regime::PreChange),
            Err(StreamError::Exhausted(2))
        ));
    }
}
