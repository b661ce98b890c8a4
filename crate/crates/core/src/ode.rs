//! Deterministic fluid limits: the stationary ODE of a single well-mixed
//! region and the spatial ODE system over all lattice regions.

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::lattice::{LatticeGrid, Region};
use crate::network::NetworkSpec;

/// Densities over every lattice region, boundary included, laid out
/// `[region * L + l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub values: Vec<f64>,
    pub num_states: usize,
    pub time: f64,
}

impl DensityField {
    pub fn zeros(grid: &LatticeGrid, num_states: usize) -> Self {
        DensityField {
            values: vec![0.0; grid.num_regions() * num_states],
            num_states,
            time: 0.0,
        }
    }

    /// The initial densities `α⁰` of `spec`, zero on the boundary.
    pub fn initial(spec: &NetworkSpec, grid: &LatticeGrid) -> Self {
        DensityField {
            values: spec.initial_densities(grid),
            num_states: spec.num_states(),
            time: 0.0,
        }
    }

    pub fn get(&self, grid: &LatticeGrid, region: Region, l: usize) -> f64 {
        self.values[grid.index(region) * self.num_states + l]
    }

    pub fn set(&mut self, grid: &LatticeGrid, region: Region, l: usize, v: f64) {
        self.values[grid.index(region) * self.num_states + l] = v;
    }

    /// Sum of state `l` over all regions.
    pub fn total_in(&self, l: usize) -> f64 {
        self.values.iter().skip(l).step_by(self.num_states).sum()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// True when every boundary value is `+0.0` bit for bit.
    pub fn boundary_is_zero(&self, grid: &LatticeGrid) -> bool {
        grid.boundary()
            .all(|r| (0..self.num_states).all(|l| self.get(grid, r, l).to_bits() == 0))
    }

    /// Largest absolute value over every entry.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn check_shape(&self, grid: &LatticeGrid, spec: &NetworkSpec) -> Result<()> {
        if self.num_states != spec.num_states() || self.values.len() != grid.num_regions() * self.num_states {
            return Err(Error::InvalidArgument(format!(
                "field has {} values for {} states, expected {} regions",
                self.values.len(),
                self.num_states,
                grid.num_regions()
            )));
        }
        Ok(())
    }
}

/// `Σ_{ñ ∈ N(x,y)} (a_ñ − a)`, summed in the fixed -x, +x, -y, +y order.
#[inline]
pub(crate) fn neighbor_diff_sum(values: &[f64], stencil: [usize; 4], l_count: usize, l: usize, a: f64) -> f64 {
    let d = |n: usize| values[n * l_count + l] - a;
    d(stencil[0]) + d(stencil[1]) + d(stencil[2]) + d(stencil[3])
}

/// `Σ_{ñ ∈ N(x,y)} (a_ñ − a) / Δs²` at an interior region.
pub fn discrete_laplacian(field: &DensityField, grid: &LatticeGrid, region: Region, l: usize) -> Result<f64> {
    if !grid.contains(region) {
        return Err(Error::NotOnGrid {
            i: region.i,
            j: region.j,
            k: grid.k(),
        });
    }
    if grid.is_boundary(region) {
        return Err(Error::BoundaryRegion {
            i: region.i,
            j: region.j,
        });
    }
    let idx = grid.index(region);
    let a = field.values[idx * field.num_states + l];
    let ds = grid.delta_s();
    Ok(neighbor_diff_sum(&field.values, grid.stencil(idx), field.num_states, l, a) / (ds * ds))
}

/// Adds `Σ_j (d_jl − c_jl) f_j(a, b)` into `out`.
pub(crate) fn add_reactions<F>(spec: &NetworkSpec, a: &[f64], b: &[f64], out: &mut [f64], rate: F)
where
    F: Fn(usize, &[f64], &[f64]) -> f64,
{
    for (j, reaction) in spec.reactions.iter().enumerate() {
        let f = rate(j, a, b);
        for (l, (&c, &d)) in reaction.consumed.iter().zip(&reaction.produced).enumerate() {
            if c != d {
                out[l] += (d as f64 - c as f64) * f;
            }
        }
    }
}

/// Reactive drift of one well-mixed region.
pub fn stationary_rhs(spec: &NetworkSpec, densities: &[f64], params: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; spec.num_states()];
    add_reactions(spec, densities, params, &mut out, |j, a, b| spec.eval_rate(j, a, b));
    out
}

/// Time derivative of the spatial ODE system; exactly zero on the boundary.
pub fn spatial_rhs(spec: &NetworkSpec, grid: &LatticeGrid, field: &DensityField) -> Result<DensityField> {
    field.check_shape(grid, spec)?;
    let l_count = spec.num_states();
    let p_count = spec.num_params();
    let params = spec.param_values(grid);
    let mu_k: Vec<f64> = (0..l_count).map(|l| spec.scaled_migration(grid.k(), l)).collect();
    let mut out = DensityField::zeros(grid, l_count);
    out.time = field.time;
    for r in grid.interior() {
        let idx = grid.index(r);
        let a = &field.values[idx * l_count..(idx + 1) * l_count];
        let b = &params[idx * p_count..(idx + 1) * p_count];
        let slot = &mut out.values[idx * l_count..(idx + 1) * l_count];
        add_reactions(spec, a, b, slot, |j, a, b| spec.eval_rate(j, a, b));
        let stencil = grid.stencil(idx);
        for (l, v) in slot.iter_mut().enumerate() {
            *v += mu_k[l] * neighbor_diff_sum(&field.values, stencil, l_count, l, a[l]);
        }
    }
    Ok(out)
}

/// One explicit Euler sweep `new = old + 𝟙 dt (diffusion(l, Σ(a_ñ − a)) + reactions)`.
/// Rows are processed independently, so the result does not depend on `exec`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn euler_sweep<D, R>(
    spec: &NetworkSpec,
    grid: &LatticeGrid,
    params: &[f64],
    old: &[f64],
    new: &mut [f64],
    dt: f64,
    exec: Exec,
    diffusion: D,
    rate: R,
) where
    D: Fn(usize, f64) -> f64 + Sync + Send,
    R: Fn(usize, &[f64], &[f64]) -> f64 + Sync + Send,
{
    let l_count = spec.num_states();
    let p_count = spec.num_params();
    let side = grid.side();
    let k = grid.k();
    exec.for_each_chunk(new, side * l_count, |i, row| {
        let mut react = vec![0.0; l_count];
        for j in 0..side {
            let out = &mut row[j * l_count..(j + 1) * l_count];
            if i == 0 || i == k || j == 0 || j == k {
                out.fill(0.0);
                continue;
            }
            let idx = i * side + j;
            let a = &old[idx * l_count..(idx + 1) * l_count];
            let b = &params[idx * p_count..(idx + 1) * p_count];
            react.fill(0.0);
            add_reactions(spec, a, b, &mut react, &rate);
            let stencil = grid.stencil(idx);
            for l in 0..l_count {
                let s = neighbor_diff_sum(old, stencil, l_count, l, a[l]);
                out[l] = a[l] + dt * (diffusion(l, s) + react[l]);
            }
        }
    });
}

pub(crate) fn find_non_finite(grid: &LatticeGrid, values: &[f64], l_count: usize, step: usize) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(n) => {
            let r = grid.region(n / l_count);
            Err(Error::NonFinite {
                step,
                i: r.i,
                j: r.j,
                state: n % l_count,
            })
        }
    }
}

/// Number of steps `M = T / dt`, which must be a positive integer.
pub fn steps_for(horizon: f64, dt: f64) -> Result<usize> {
    if !(horizon > 0.0 && dt > 0.0) || !horizon.is_finite() {
        return Err(Error::StepMismatch { horizon, dt });
    }
    let m = (horizon / dt).round();
    if m < 1.0 || (m * dt - horizon).abs() > 1e-9 * horizon {
        return Err(Error::StepMismatch { horizon, dt });
    }
    Ok(m as usize)
}

/// Step size `T/M` satisfying `μ_l^K dt ≤ 0.9/4` for every state, and at
/// most 0.01 so reactions are resolved when diffusion is slow or absent.
pub fn auto_dt(spec: &NetworkSpec, grid: &LatticeGrid, horizon: f64) -> f64 {
    let mu_max = spec.mu.iter().fold(0.0f64, |m, &v| m.max(v));
    crate::pde::capped_step(mu_max, grid.delta_s(), horizon, crate::pde::DEFAULT_SAFETY)
}

/// Fixed-step explicit Euler integrator of the spatial ODE system.
#[derive(Debug, Clone)]
pub struct EulerIntegrator<'a> {
    spec: &'a NetworkSpec,
    grid: LatticeGrid,
    params: Vec<f64>,
    mu_k: Vec<f64>,
    dt: f64,
    exec: Exec,
    field: DensityField,
    scratch: Vec<f64>,
    step: usize,
}

impl<'a> EulerIntegrator<'a> {
    pub fn new(spec: &'a NetworkSpec, grid: &LatticeGrid, initial: DensityField, dt: f64, exec: Exec) -> Result<Self> {
        initial.check_shape(grid, spec)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("step size {dt} must be positive")));
        }
        let mu_k = (0..spec.num_states())
            .map(|l| spec.scaled_migration(grid.k(), l))
            .collect();
        Ok(EulerIntegrator {
            spec,
            grid: *grid,
            params: spec.param_values(grid),
            mu_k,
            dt,
            exec,
            scratch: vec![0.0; initial.values.len()],
            field: initial,
            step: 0,
        })
    }

    pub fn field(&self) -> &DensityField {
        &self.field
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn step(&mut self) -> Result<&DensityField> {
        let mu_k = &self.mu_k;
        let spec = self.spec;
        euler_sweep(
            spec,
            &self.grid,
            &self.params,
            &self.field.values,
            &mut self.scratch,
            self.dt,
            self.exec,
            |l, s| mu_k[l] * s,
            |j, a, b| spec.eval_rate(j, a, b),
        );
        std::mem::swap(&mut self.field.values, &mut self.scratch);
        self.step += 1;
        self.field.time = self.step as f64 * self.dt;
        find_non_finite(&self.grid, &self.field.values, spec.num_states(), self.step)?;
        Ok(&self.field)
    }
}

/// Euler trajectory sampled at every step `m = 0..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeTrajectory {
    pub grid: LatticeGrid,
    pub dt: f64,
    pub fields: Vec<DensityField>,
}

impl OdeTrajectory {
    pub fn last(&self) -> &DensityField {
        self.fields.last().expect("trajectory holds the initial field")
    }

    /// Field at step `round(t / dt)`.
    pub fn at(&self, t: f64) -> Option<&DensityField> {
        let m = (t / self.dt).round();
        (m >= 0.0 && (m * self.dt - t).abs() <= 1e-9 * t.abs().max(1.0))
            .then(|| self.fields.get(m as usize))
            .flatten()
    }
}

/// The sequence `a(m+1) = a(m) + 𝟙 dt rhs(a(m))` for `m < T/dt`.
pub fn integrate_euler(
    spec: &NetworkSpec,
    grid: &LatticeGrid,
    initial: DensityField,
    horizon: f64,
    dt: f64,
    exec: Exec,
) -> Result<OdeTrajectory> {
    let m = steps_for(horizon, dt)?;
    let mut integ = EulerIntegrator::new(spec, grid, initial, dt, exec)?;
    let mut fields = Vec::with_capacity(m + 1);
    fields.push(integ.field().clone());
    for _ in 0..m {
        fields.push(integ.step()?.clone());
    }
    Ok(OdeTrajectory {
        grid: *grid,
        dt,
        fields,
    })
}

/// Classical fourth-order Runge–Kutta on the spatial system; for reference
/// solutions only. Returns the field at `T`.
pub fn integrate_rk4(
    spec: &NetworkSpec,
    grid: &LatticeGrid,
    initial: DensityField,
    horizon: f64,
    dt: f64,
) -> Result<DensityField> {
    let m = steps_for(horizon, dt)?;
    let mut y = initial;
    let axpy = |y: &DensityField, h: f64, k: &DensityField| {
        let mut out = y.clone();
        for (o, d) in out.values.iter_mut().zip(&k.values) {
            *o += h * d;
        }
        out
    };
    for step in 1..=m {
        let k1 = spatial_rhs(spec, grid, &y)?;
        let k2 = spatial_rhs(spec, grid, &axpy(&y, dt / 2.0, &k1))?;
        let k3 = spatial_rhs(spec, grid, &axpy(&y, dt / 2.0, &k2))?;
        let k4 = spatial_rhs(spec, grid, &axpy(&y, dt, &k3))?;
        for n in 0..y.values.len() {
            y.values[n] += dt / 6.0 * (k1.values[n] + 2.0 * k2.values[n] + 2.0 * k3.values[n] + k4.values[n]);
        }
        y.time = step as f64 * dt;
        find_non_finite(grid, &y.values, spec.num_states(), step)?;
    }
    Ok(y)
}

/// Euler integration of the stationary ODE `ȧ = ℒ(a)` from `a0` with fixed
/// parameters; returns the state at `T`.
pub fn integrate_stationary(spec: &NetworkSpec, a0: &[f64], params: &[f64], horizon: f64, dt: f64) -> Result<Vec<f64>> {
    let m = steps_for(horizon, dt)?;
    let mut a = a0.to_vec();
    let mut rhs = vec![0.0; a.len()];
    for step in 1..=m {
        rhs.fill(0.0);
        add_reactions(spec, &a, params, &mut rhs, |j, a, b| spec.eval_rate(j, a, b));
        for (v, d) in a.iter_mut().zip(&rhs) {
            *v += dt * d;
        }
        if let Some(l) = a.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                step,
                i: 0,
                j: 0,
                state: l,
            });
        }
    }
    Ok(a)
}
