use std::fmt;

use thiserror::Error;

/// A single rule violation found while validating a network description.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub rule: Rule,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    Shape,
    UnknownVariable,
    NegativeValue,
    NonFinite,
    Dirichlet,
    Division,
    NonnegativityGuard,
    Horizon,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Rule::Shape => "shape",
            Rule::UnknownVariable => "unknown-variable",
            Rule::NegativeValue => "negative-value",
            Rule::NonFinite => "non-finite",
            Rule::Dirichlet => "dirichlet-boundary",
            Rule::Division => "guarded-division",
            Rule::NonnegativityGuard => "nonnegativity-guard",
            Rule::Horizon => "horizon",
        };
        f.write_str(name)
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.rule, self.message)
    }
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("expression error at offset {offset} in `{source_text}`: {message}")]
    Expr {
        source_text: String,
        offset: usize,
        message: String,
    },
    #[error("invalid network: {}", join(.0))]
    Validation(Vec<Violation>),
    #[error("region ({i}, {j}) is not on the lattice with K = {k}")]
    NotOnGrid { i: usize, j: usize, k: usize },
    #[error("point ({x}, {y}) is not a lattice point for K = {k}")]
    NotALatticePoint { x: f64, y: f64, k: usize },
    #[error("the discrete Laplacian is only defined at interior regions, got ({i}, {j})")]
    BoundaryRegion { i: usize, j: usize },
    #[error("non-finite value at step {step}, region ({i}, {j}), state {state}")]
    NonFinite {
        step: usize,
        i: usize,
        j: usize,
        state: usize,
    },
    #[error("negative rate {rate} for reaction {reaction} at region ({i}, {j})")]
    NegativeRate {
        reaction: usize,
        i: usize,
        j: usize,
        rate: f64,
    },
    #[error("non-finite rate for reaction {reaction} at region ({i}, {j})")]
    NonFiniteRate { reaction: usize, i: usize, j: usize },
    #[error("stability violated: r = {ratio} > 1/4 for state {state}")]
    Unstable { state: usize, ratio: f64 },
    #[error("horizon {horizon} is not an integer multiple of the step {dt}")]
    StepMismatch { horizon: f64, dt: f64 },
    #[error("grids with K = {coarse} and K = {fine} do not nest")]
    Incomparable { coarse: usize, fine: usize },
    #[error("grid spacing {0} is not of the form 1/K")]
    BadSpacing(f64),
    #[error("initial population is zero")]
    EmptyPopulation,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for failures raised by the numerical integrators and samplers.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. }
                | Error::NonFiniteRate { .. }
                | Error::NegativeRate { .. }
                | Error::Unstable { .. }
                | Error::StepMismatch { .. }
                | Error::EmptyPopulation
        )
    }
}
