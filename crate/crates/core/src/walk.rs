//! Free continuous-time random walk on the unbounded lattice `(1/k) Z²`.
//!
//! The walk jumps at total rate `r_k`, each of the four directions with rate
//! `r_k / 4`. Its mean squared distance from the origin at time `t` is
//! `(r_k / k²) t`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::rng::{stream, SimRng};
use crate::stats::ReplicaEstimate;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeWalkConfig {
    /// Step size is `1/k`.
    pub k: u32,
    /// Total jump rate `r_k`.
    pub rate: f64,
    pub t: f64,
    pub replicas: u64,
}

impl FreeWalkConfig {
    pub fn theory(&self) -> f64 {
        self.rate / (self.k as f64).powi(2) * self.t
    }

    fn check(&self) -> Result<()> {
        if self.k == 0 || !(self.rate > 0.0) || !(self.t >= 0.0) || !self.t.is_finite() || self.replicas == 0 {
            return Err(Error::InvalidArgument(
                "free walk needs k >= 1, rate > 0, finite t >= 0 and at least one replica".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsdEstimate {
    /// Squared distance from the origin at `t`.
    pub msd: ReplicaEstimate,
    pub x: ReplicaEstimate,
    pub y: ReplicaEstimate,
    pub theory: f64,
}

/// Position at time `t` of one walk started at the origin.
pub fn walk(k: u32, rate: f64, t: f64, rng: &mut SimRng) -> (f64, f64) {
    let (mut i, mut j) = (0i64, 0i64);
    let mut clock = 0.0;
    loop {
        let u: f64 = rng.random();
        clock += -(1.0 - u).ln() / rate;
        if clock > t {
            break;
        }
        match rng.random_range(0..4u8) {
            0 => i -= 1,
            1 => i += 1,
            2 => j -= 1,
            _ => j += 1,
        }
    }
    let step = 1.0 / k as f64;
    (i as f64 * step, j as f64 * step)
}

/// Monte Carlo estimate of the mean squared displacement; replica `i` uses
/// stream `i` of `seed`.
pub fn msd(config: &FreeWalkConfig, seed: u64, exec: Exec) -> Result<MsdEstimate> {
    config.check()?;
    let ends = exec.map_range(0, config.replicas, |i| {
        walk(config.k, config.rate, config.t, &mut stream(seed, i))
    });
    Ok(MsdEstimate {
        msd: ReplicaEstimate::from_samples(ends.iter().map(|(x, y)| x * x + y * y)),
        x: ReplicaEstimate::from_samples(ends.iter().map(|p| p.0)),
        y: ReplicaEstimate::from_samples(ends.iter().map(|p| p.1)),
        theory: config.theory(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(k: u32, rate: f64, t: f64) -> FreeWalkConfig {
        FreeWalkConfig {
            k,
            rate,
            t,
            replicas: 10_000,
        }
    }

    #[test]
    fn origin_at_time_zero() {
        let e = msd(&cfg(3, 9.0, 0.0), 1, Exec::default()).unwrap();
        assert_eq!(e.msd.mean, 0.0);
        assert_eq!(e.msd.ci_halfwidth(), 0.0);
    }

    #[test]
    fn unit_lattice_msd() {
        let e = msd(&cfg(1, 4.0, 2.0), 2, Exec::default()).unwrap();
        assert_eq!(e.theory, 8.0);
        assert!((e.msd.mean - 8.0).abs() < 0.05 * 8.0);
        assert!((e.msd.mean - 8.0).abs() < 1.5 * e.msd.ci_halfwidth());
    }

    #[test]
    fn scaled_rates_cover_the_same_distance() {
        let a = msd(&cfg(1, 1.0, 3.0), 3, Exec::default()).unwrap();
        let b = msd(&cfg(10, 100.0, 3.0), 4, Exec::default()).unwrap();
        assert_eq!(b.theory, 3.0);
        let gap = (a.msd.mean - b.msd.mean).abs();
        assert!(gap <= a.msd.ci_halfwidth() + b.msd.ci_halfwidth(), "{gap}");
    }

    #[test]
    fn displacement_has_zero_mean() {
        let e = msd(&cfg(2, 8.0, 4.0), 5, Exec::default()).unwrap();
        assert!(e.x.mean.abs() <= e.x.ci_halfwidth() * 1.5);
        assert!(e.y.mean.abs() <= e.y.ci_halfwidth() * 1.5);
    }

    #[test]
    fn msd_grows_linearly() {
        // least-squares slope through the origin
        let ts = [1.0, 2.0, 4.0, 8.0];
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for (n, &t) in ts.iter().enumerate() {
            let e = msd(&cfg(2, 8.0, t), 10 + n as u64, Exec::default()).unwrap();
            sxy += t * e.msd.mean;
            sxx += t * t;
        }
        assert!((sxy / sxx - 2.0).abs() < 0.05 * 2.0);
    }

    #[test]
    fn reproducible_and_validated() {
        let c = FreeWalkConfig {
            replicas: 200,
            ..cfg(1, 4.0, 2.0)
        };
        assert_eq!(
            msd(&c, 7, Exec::Sequential).unwrap(),
            msd(&c, 7, Exec::Parallel).unwrap()
        );
        assert!(msd(&FreeWalkConfig { k: 0, ..c }, 7, Exec::default()).is_err());
        assert!(msd(&FreeWalkConfig { replicas: 0, ..c }, 7, Exec::default()).is_err());
    }
}
