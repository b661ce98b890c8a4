//! Independent-replica estimation with a relative confidence-interval stopping rule.

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::rng::{stream, SimRng};
use crate::stats::ReplicaEstimate;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicaPolicy {
    pub min_replicas: u64,
    /// Stop once the 95% half-width is at most this fraction of `|mean|`.
    pub rel_ci_target: f64,
    /// Hard limit on the number of replicas.
    pub cap: u64,
    /// Replicas launched per round after the first `min_replicas`.
    pub batch: u64,
}

impl Default for ReplicaPolicy {
    fn default() -> Self {
        ReplicaPolicy {
            min_replicas: 10,
            rel_ci_target: 0.05,
            cap: 100_000,
            batch: 16,
        }
    }
}

impl ReplicaPolicy {
    pub fn with_min(mut self, min_replicas: u64) -> Self {
        self.min_replicas = min_replicas;
        self
    }

    /// Exactly `n` replicas, no early stop and no extension.
    pub fn fixed(n: u64) -> Self {
        ReplicaPolicy {
            min_replicas: n,
            rel_ci_target: f64::INFINITY,
            cap: n,
            batch: 1,
        }
    }

    fn check(&self) -> Result<()> {
        if self.min_replicas < 2 {
            return Err(Error::InvalidArgument("min_replicas must be >= 2".into()));
        }
        if self.cap < self.min_replicas || self.batch == 0 {
            return Err(Error::InvalidArgument(
                "replica cap must be >= min_replicas and batch >= 1".into(),
            ));
        }
        if !(self.rel_ci_target >= 0.0) {
            return Err(Error::InvalidArgument("ci target must be >= 0".into()));
        }
        Ok(())
    }

    fn satisfied(&self, e: &ReplicaEstimate) -> bool {
        e.n >= self.min_replicas && e.ci_halfwidth() <= self.rel_ci_target * e.mean.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicaReport {
    pub estimate: ReplicaEstimate,
    /// False when the cap was reached before the interval target.
    pub converged: bool,
}

/// Runs `metric` on replica streams `0, 1, 2, ...` of `seed` until `policy`
/// is satisfied. Rounds are fixed-size and merged in index order, so the
/// result does not depend on `exec`.
pub fn run_replicas_with<F>(policy: &ReplicaPolicy, seed: u64, exec: Exec, metric: F) -> Result<ReplicaReport>
where
    F: Fn(&mut SimRng) -> Result<f64> + Sync + Send,
{
    policy.check()?;
    let mut est = ReplicaEstimate::new();
    let mut next = 0u64;
    let mut round = policy.min_replicas;
    loop {
        let end = (next + round).min(policy.cap);
        let values = exec
            .map_range(next, end, |i| metric(&mut stream(seed, i)))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        est = est.merge(&ReplicaEstimate::from_samples(values));
        next = end;
        if policy.satisfied(&est) {
            return Ok(ReplicaReport {
                estimate: est,
                converged: true,
            });
        }
        if next >= policy.cap {
            return Ok(ReplicaReport {
                estimate: est,
                converged: false,
            });
        }
        round = policy.batch;
    }
}
