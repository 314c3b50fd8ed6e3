//! Point estimates with standard errors, batch-means variance estimation,
//! and compensated summation for order-stable aggregation.

use serde::Serialize;

/// Number of batches used by the batch-means standard error.
pub const BATCH_COUNT: usize = 50;

/// Compensated (Kahan) accumulator. Keeps aggregate rounding drift far below
/// the 1e-10 relative tolerance promised for pooled results.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// A Monte-Carlo point estimate: mean, standard error and replication count.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub reps: u64,
}

impl Estimate {
    /// Exact value with zero uncertainty (used for plug-in constants).
    pub fn exact(mean: f64) -> Self {
        Estimate {
            mean,
            se: 0.0,
            reps: 0,
        }
    }

    /// Batch-means estimate from independent replications.
    ///
    /// Samples are split into `BATCH_COUNT` near-equal contiguous batches
    /// (fewer only when the sample is tiny). The mean uses every sample; the
    /// standard error comes from the between-batch variance, which for
    /// unequal batch sizes n_i is s^2 = sum n_i (m_i - m)^2 / (B - 1) and
    /// se = sqrt(s^2 / n).
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        assert!(n >= 2, "need at least two samples for an estimate");
        let batches = BATCH_COUNT.min(n / 2).max(2);

        let mut grand = KahanSum::new();
        for &x in samples {
            grand.add(x);
        }
        let mean = grand.value() / n as f64;

        let base = n / batches;
        let extra = n % batches;
        let mut var_acc = KahanSum::new();
        let mut start = 0usize;
        for b in 0..batches {
            let len = base + usize::from(b < extra);
            let mut s = KahanSum::new();
            for &x in &samples[start..start + len] {
                s.add(x);
            }
            let bm = s.value() / len as f64;
            var_acc.add(len as f64 * (bm - mean) * (bm - mean));
            start += len;
        }
        let s2 = var_acc.value() / (batches as f64 - 1.0);
        Estimate {
            mean,
            se: (s2 / n as f64).sqrt(),
            reps: n as u64,
        }
    }

    /// Estimate of a Bernoulli proportion from a success count.
    pub fn from_proportion(successes: u64, trials: u64) -> Self {
        assert!(trials > 0);
        let p = successes as f64 / trials as f64;
        Estimate {
            mean: p,
            se: (p * (1.0 - p) / trials as f64).sqrt(),
            reps: trials,
        }
    }

    /// Three-sigma confidence interval.
    pub fn ci3(&self) -> (f64, f64) {
        (self.mean - 3.0 * self.se, self.mean + 3.0 * self.se)
    }
}

/// Combined standard error of two independent estimates, for A-vs-B checks.
pub fn combined_se(a: &Estimate, b: &Estimate) -> f64 {
    (a.se * a.se + b.se * b.se).sqrt()
}
