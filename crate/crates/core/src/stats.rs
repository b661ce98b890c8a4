//! Running mean/variance with Student-t confidence intervals.

use statrs::distribution::{ContinuousCDF, StudentsT};

/// Streaming estimate of a scalar metric over independent replicas.
///
/// Accumulates `(n, mean, M2)` with Welford updates; [`merge`](Self::merge)
/// is the associative, commutative combine used when replicas run concurrently.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReplicaEstimate {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl ReplicaEstimate {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_samples<I: IntoIterator<Item = f64>>(samples: I) -> Self {
        let mut e = Self::new();
        samples.into_iter().for_each(|x| e.push(x));
        e
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        ReplicaEstimate { n, mean, m2 }
    }

    /// Unbiased sample variance; zero for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            return f64::INFINITY;
        }
        (self.variance() / self.n as f64).sqrt()
    }

    /// Half-width of the 95% Student-t interval; infinite below two samples.
    pub fn ci_halfwidth(&self) -> f64 {
        if self.n < 2 {
            return f64::INFINITY;
        }
        t_quantile_975(self.n - 1) * self.std_error()
    }

    pub fn ci(&self) -> (f64, f64) {
        let h = self.ci_halfwidth();
        (self.mean - h, self.mean + h)
    }
}

/// 0.975 quantile of Student's t with `dof` degrees of freedom.
pub fn t_quantile_975(dof: u64) -> f64 {
    StudentsT::new(0.0, 1.0, dof as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975)
}
