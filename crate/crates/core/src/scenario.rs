//! Built-in networks: epidemic routing, peer-to-peer file sharing, on/off
//! downloaders and pure diffusion.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::expr::RateExpr;
use crate::field::Field;
use crate::network::{NamedField, NetworkSpec, Reaction};

/// Think rate of the on/off case study.
pub const ONOFF_LAMBDA: f64 = 0.250;
/// Per-region download capacity of the on/off case study.
pub const ONOFF_CAPACITY: f64 = 2.857;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    Epidemic,
    P2p,
    OnOff,
    Heat,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::Epidemic, Scenario::P2p, Scenario::OnOff, Scenario::Heat];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Epidemic => "epidemic",
            Scenario::P2p => "p2p",
            Scenario::OnOff => "onoff",
            Scenario::Heat => "heat",
        }
    }

    pub fn spec(self) -> NetworkSpec {
        match self {
            Scenario::Epidemic => epidemic(),
            Scenario::P2p => p2p(),
            Scenario::OnOff => onoff(ONOFF_LAMBDA, ONOFF_CAPACITY, 0.001, 10.0),
            Scenario::Heat => heat(0.1),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scenario `{s}`")))
    }
}

fn consts(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

use RateExpr as E;

/// Susceptible density `a1` decays by contact with the infected `1 - a1`.
pub fn epidemic() -> NetworkSpec {
    let beta = 1.0;
    NetworkSpec {
        states: vec!["susceptible".into()],
        reactions: vec![Reaction::new(
            vec![1],
            vec![0],
            E::mul(E::mul(E::Lit(beta), E::Density(0)), E::sub(E::Lit(1.0), E::Density(0))),
        )],
        params: vec![],
        constants: consts(&[("beta", beta)]),
        mu: vec![0.001],
        initial: vec![Field::theta(0.9)],
        horizon: 10.0,
    }
}

/// Downloaders `a1` and seeds `a2`; arrivals follow a parameter field that
/// vanishes on the boundary.
pub fn p2p() -> NetworkSpec {
    let (sigma, gamma, c, upload, eta) = (0.2, 0.2, 1.0, 0.5, 0.5);
    NetworkSpec {
        states: vec!["downloader".into(), "seed".into()],
        reactions: vec![
            Reaction::new(vec![0, 0], vec![1, 0], E::Param(0)),
            Reaction::new(vec![1, 0], vec![0, 0], E::mul(E::Lit(sigma), E::Density(0))),
            Reaction::new(vec![0, 1], vec![0, 0], E::mul(E::Lit(gamma), E::Density(1))),
            Reaction::new(
                vec![1, 1],
                vec![0, 2],
                E::min(
                    E::mul(E::Lit(c), E::Density(0)),
                    E::mul(
                        E::Lit(upload),
                        E::add(E::mul(E::Lit(eta), E::Density(0)), E::Density(1)),
                    ),
                ),
            ),
        ],
        params: vec![NamedField {
            name: "arrival".into(),
            field: Field::theta(1.0),
        }],
        constants: consts(&[
            ("sigma", sigma),
            ("gamma", gamma),
            ("c", c),
            ("upload", upload),
            ("eta", eta),
        ]),
        mu: vec![0.001, 0.001],
        initial: vec![Field::theta(1.0), Field::zero()],
        horizon: 10.0,
    }
}

/// Off nodes `a1` think at rate `lambda` and move with base rate `mu1`; on
/// nodes `a2` share a per-region capacity `c` and stand still. Initially every
/// node is on, with density `v * theta`.
pub fn onoff(lambda: f64, c: f64, mu1: f64, v: f64) -> NetworkSpec {
    NetworkSpec {
        states: vec!["off".into(), "on".into()],
        reactions: vec![
            Reaction::new(vec![1, 0], vec![0, 1], E::mul(E::Lit(lambda), E::Density(0))),
            Reaction::new(
                vec![0, 1],
                vec![1, 0],
                E::mul(E::Lit(c), E::min(E::Density(1), E::Lit(1.0))),
            ),
        ],
        params: vec![],
        constants: consts(&[("lambda", lambda), ("c", c)]),
        mu: vec![mu1, 0.0],
        initial: vec![Field::zero(), Field::theta(v)],
        horizon: 10.0,
    }
}

/// A single non-reacting population that only diffuses.
pub fn heat(mu: f64) -> NetworkSpec {
    NetworkSpec {
        states: vec!["walker".into()],
        reactions: vec![Reaction::new(vec![1], vec![1], E::Lit(0.0))],
        params: vec![],
        constants: BTreeMap::new(),
        mu: vec![mu],
        initial: vec![Field::Sine { amplitude: 1.0 }],
        horizon: 1.0,
    }
}

/// Seeds the network with `v * theta`: the second state when there are at
/// least two, otherwise the only one. All other initial fields become zero.
pub fn set_theta_amplitude(spec: &mut NetworkSpec, v: f64) {
    let seeded = if spec.num_states() >= 2 { 1 } else { 0 };
    for (l, f) in spec.initial.iter_mut().enumerate() {
        *f = if l == seeded { Field::theta(v) } else { Field::zero() };
    }
}
