//! Scalar fields on the unit square: parameter fields and initial densities.

use serde::{Deserialize, Serialize};

use crate::lattice::LatticeGrid;

/// Smooth bump centred at `(1/2, 1/2)` with value 1 at the centre and support
/// in the disc of radius 1/2; zero on the boundary of the unit square.
pub fn theta(x: f64, y: f64) -> f64 {
    let r2 = (x - 0.5).powi(2) + (y - 0.5).powi(2);
    if r2 >= 0.25 {
        0.0
    } else {
        (4.0 - 1.0 / (0.25 - r2)).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Field {
    Constant {
        value: f64,
    },
    /// `scale * theta(x, y)`.
    Theta {
        scale: f64,
    },
    /// `amplitude * sin(pi x) sin(pi y)`, the slowest Dirichlet eigenmode.
    Sine {
        amplitude: f64,
    },
    /// Samples on a uniform grid over the unit square, `values[i][j]` at
    /// `(i/(nx-1), j/(ny-1))`, bilinearly interpolated.
    Table {
        values: Vec<Vec<f64>>,
    },
}

impl Field {
    pub fn constant(value: f64) -> Self {
        Field::Constant { value }
    }

    pub fn theta(scale: f64) -> Self {
        Field::Theta { scale }
    }

    pub fn zero() -> Self {
        Field::Constant { value: 0.0 }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Field::Constant { value } => *value,
            Field::Theta { scale } => scale * theta(x, y),
            Field::Sine { amplitude } => amplitude * sin_pi(x) * sin_pi(y),
            Field::Table { values } => bilinear(values, x, y),
        }
    }

    /// Samples the field at every lattice point, boundary included.
    pub fn sample(&self, grid: &LatticeGrid) -> Vec<f64> {
        grid.regions()
            .map(|r| {
                let (x, y) = grid.coords(r);
                self.eval(x, y)
            })
            .collect()
    }

    /// Shape problems of a tabulated field; empty for the closed forms.
    pub fn shape_errors(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Field::Table { values } = self {
            if values.len() < 2 {
                out.push("table needs at least 2 rows".into());
            }
            let ny = values.first().map_or(0, Vec::len);
            if ny < 2 {
                out.push("table needs at least 2 columns".into());
            }
            if values.iter().any(|row| row.len() != ny) {
                out.push("table rows have different lengths".into());
            }
        }
        out
    }
}

/// `sin(pi t)` with exact zeros at the integers, so Dirichlet data stays exact.
pub fn sin_pi(t: f64) -> f64 {
    if t == t.round() {
        0.0
    } else {
        (std::f64::consts::PI * t).sin()
    }
}

fn bilinear(values: &[Vec<f64>], x: f64, y: f64) -> f64 {
    let nx = values.len();
    let ny = values[0].len();
    let fx = x.clamp(0.0, 1.0) * (nx - 1) as f64;
    let fy = y.clamp(0.0, 1.0) * (ny - 1) as f64;
    let i0 = (fx.floor() as usize).min(nx - 2);
    let j0 = (fy.floor() as usize).min(ny - 2);
    let tx = fx - i0 as f64;
    let ty = fy - j0 as f64;
    let v00 = values[i0][j0];
    let v10 = values[i0 + 1][j0];
    let v01 = values[i0][j0 + 1];
    let v11 = values[i0 + 1][j0 + 1];
    (1.0 - tx) * ((1.0 - ty) * v00 + ty * v01) + tx * ((1.0 - ty) * v10 + ty * v11)
}
