//! Explicit finite differences for the reaction-diffusion limit with zero
//! Dirichlet data on the unit square.

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::lattice::LatticeGrid;
use crate::network::NetworkSpec;
use crate::ode::{euler_sweep, find_non_finite, steps_for, DensityField};

/// Margin applied to the `r ≤ 1/4` bound by the automatic step selection.
pub const DEFAULT_SAFETY: f64 = 0.9;
/// Upper bound on automatically chosen steps, so reactions stay resolved.
pub const REACTION_STEP_CAP: f64 = 0.01;

fn steps_at_cap(horizon: f64, cap: f64) -> f64 {
    (horizon / cap).ceil().max(1.0)
}

/// Largest `T/M` with `mu_max Δt / Δs² ≤ safety / 4`. Without diffusion the
/// step is `T / ceil(T / 0.01)`.
pub fn step_size_for(mu_max: f64, ds: f64, horizon: f64, safety: f64) -> f64 {
    if mu_max <= 0.0 {
        return horizon / steps_at_cap(horizon, REACTION_STEP_CAP);
    }
    let bound = safety / 4.0;
    let mut m = (mu_max * horizon / (ds * ds) / bound).ceil().max(1.0);
    while mu_max * (horizon / m) / (ds * ds) > bound {
        m += 1.0;
    }
    horizon / m
}

/// [`step_size_for`], further limited to at most [`REACTION_STEP_CAP`].
pub(crate) fn capped_step(mu_max: f64, ds: f64, horizon: f64, safety: f64) -> f64 {
    let diffusive = horizon / step_size_for(mu_max, ds, horizon, safety);
    horizon / diffusive.round().max(steps_at_cap(horizon, REACTION_STEP_CAP))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Clamp {
    #[default]
    Off,
    /// Radius `sqrt(L + P) (c + 1)` with `c` the largest initial density or
    /// parameter magnitude.
    Auto,
    Radius(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    pub ds: f64,
    pub dt: f64,
    pub horizon: f64,
    pub clamp: Clamp,
}

impl FdConfig {
    pub fn new(ds: f64, dt: f64, horizon: f64) -> Self {
        FdConfig {
            ds,
            dt,
            horizon,
            clamp: Clamp::Off,
        }
    }

    /// Stable step for `spec` at spacing `ds` with the default safety factor.
    pub fn auto(spec: &NetworkSpec, ds: f64, horizon: f64) -> Self {
        let mu_max = spec.mu.iter().fold(0.0f64, |m, &v| m.max(v));
        FdConfig::new(ds, capped_step(mu_max, ds, horizon, DEFAULT_SAFETY), horizon)
    }

    pub fn with_clamp(mut self, clamp: Clamp) -> Self {
        self.clamp = clamp;
        self
    }

    pub fn grid(&self) -> Result<LatticeGrid> {
        LatticeGrid::from_spacing(self.ds)
    }

    pub fn steps(&self) -> Result<usize> {
        steps_for(self.horizon, self.dt)
    }

    /// Largest stability ratio `r_l = μ_l Δt / Δs²` and the state attaining it.
    pub fn stability_ratio(&self, spec: &NetworkSpec) -> (usize, f64) {
        spec.mu
            .iter()
            .map(|&mu| mu * self.dt / (self.ds * self.ds))
            .enumerate()
            .fold((0, 0.0), |best, (l, r)| if r > best.1 { (l, r) } else { best })
    }

    pub fn check(&self, spec: &NetworkSpec) -> Result<LatticeGrid> {
        let grid = self.grid()?;
        if grid.k() < 2 {
            return Err(Error::InvalidArgument("PDE grid needs K >= 2".into()));
        }
        self.steps()?;
        let (state, ratio) = self.stability_ratio(spec);
        if ratio > 0.25 * (1.0 + 1e-12) {
            return Err(Error::Unstable { state, ratio });
        }
        Ok(grid)
    }
}

/// `f(z)` inside the ball of radius `c_prime`, `f(c_prime z / ‖z‖)` outside.
pub fn lipschitz_clamp<F: Fn(&[f64]) -> f64>(f: F, c_prime: f64, point: &[f64]) -> f64 {
    let norm = point.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= c_prime {
        f(point)
    } else {
        let scaled: Vec<f64> = point.iter().map(|v| c_prime * v / norm).collect();
        f(&scaled)
    }
}

/// Default clamp radius computed from the initial densities and parameters.
pub fn default_clamp_radius(spec: &NetworkSpec, grid: &LatticeGrid) -> f64 {
    let c = spec
        .initial_densities(grid)
        .iter()
        .chain(spec.param_values(grid).iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    ((spec.num_states() + spec.num_params()) as f64).sqrt() * (c + 1.0)
}

fn clamped_rate(spec: &NetworkSpec, j: usize, a: &[f64], b: &[f64], c_prime: f64) -> f64 {
    let norm = a.iter().chain(b).map(|v| v * v).sum::<f64>().sqrt();
    if norm <= c_prime {
        return spec.eval_rate(j, a, b);
    }
    let s = c_prime / norm;
    let sa: Vec<f64> = a.iter().map(|v| v * s).collect();
    let sb: Vec<f64> = b.iter().map(|v| v * s).collect();
    spec.eval_rate(j, &sa, &sb)
}

/// Time-stepping state of the finite-difference scheme.
#[derive(Debug, Clone)]
pub struct FdSolver<'a> {
    spec: &'a NetworkSpec,
    grid: LatticeGrid,
    config: FdConfig,
    params: Vec<f64>,
    clamp_radius: Option<f64>,
    exec: Exec,
    field: DensityField,
    scratch: Vec<f64>,
    step: usize,
}

impl<'a> FdSolver<'a> {
    pub fn new(spec: &'a NetworkSpec, config: FdConfig, exec: Exec) -> Result<Self> {
        let grid = config.check(spec)?;
        Self::from_field(spec, config, DensityField::initial(spec, &grid), exec)
    }

    pub fn from_field(spec: &'a NetworkSpec, config: FdConfig, field: DensityField, exec: Exec) -> Result<Self> {
        let grid = config.check(spec)?;
        if field.num_states != spec.num_states() || field.values.len() != grid.num_regions() * field.num_states {
            return Err(Error::InvalidArgument("field does not match the grid".into()));
        }
        let clamp_radius = match config.clamp {
            Clamp::Off => None,
            Clamp::Auto => Some(default_clamp_radius(spec, &grid)),
            Clamp::Radius(c) if c > 0.0 => Some(c),
            Clamp::Radius(c) => return Err(Error::InvalidArgument(format!("clamp radius {c} must be positive"))),
        };
        Ok(FdSolver {
            spec,
            grid,
            config,
            params: spec.param_values(&grid),
            clamp_radius,
            exec,
            scratch: vec![0.0; field.values.len()],
            field,
            step: 0,
        })
    }

    pub fn grid(&self) -> &LatticeGrid {
        &self.grid
    }

    pub fn field(&self) -> &DensityField {
        &self.field
    }

    pub fn into_field(self) -> DensityField {
        self.field
    }

    pub fn clamp_radius(&self) -> Option<f64> {
        self.clamp_radius
    }

    pub fn step(&mut self) -> Result<&DensityField> {
        let spec = self.spec;
        let ds = self.grid.delta_s();
        let ds2 = ds * ds;
        let mu = &spec.mu;
        let diffusion = |l: usize, s: f64| mu[l] * (s / ds2);
        let (old, new) = (&self.field.values, &mut self.scratch);
        match self.clamp_radius {
            None => euler_sweep(
                spec,
                &self.grid,
                &self.params,
                old,
                new,
                self.config.dt,
                self.exec,
                diffusion,
                |j, a, b| spec.eval_rate(j, a, b),
            ),
            Some(c) => euler_sweep(
                spec,
                &self.grid,
                &self.params,
                old,
                new,
                self.config.dt,
                self.exec,
                diffusion,
                |j, a, b| clamped_rate(spec, j, a, b, c),
            ),
        }
        std::mem::swap(&mut self.field.values, &mut self.scratch);
        self.step += 1;
        self.field.time = self.step as f64 * self.config.dt;
        find_non_finite(&self.grid, &self.field.values, spec.num_states(), self.step)?;
        Ok(&self.field)
    }
}

/// One step of the scheme from `field`.
pub fn fd_step(spec: &NetworkSpec, field: &DensityField, config: &FdConfig, exec: Exec) -> Result<DensityField> {
    let mut s = FdSolver::from_field(spec, *config, field.clone(), exec)?;
    s.step()?;
    let mut out = s.into_field();
    out.time = field.time + config.dt;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeSolution {
    pub grid: LatticeGrid,
    pub config: FdConfig,
    /// `Σ_l Σ_interior α_l⁰`.
    pub initial_total: f64,
    pub times: Vec<f64>,
    pub samples: Vec<DensityField>,
    pub final_field: DensityField,
}

impl PdeSolution {
    /// Grid sum of state `l` at the horizon over the grid sum of the initial field.
    pub fn state_fraction(&self, l: usize) -> Result<f64> {
        if !(self.initial_total > 0.0) {
            return Err(Error::EmptyPopulation);
        }
        Ok(self.final_field.total_in(l) / self.initial_total)
    }
}

/// Runs the scheme to the horizon, keeping the field at each of `sample_times`
/// (which must be step multiples).
pub fn solve_pde(spec: &NetworkSpec, config: FdConfig, sample_times: &[f64], exec: Exec) -> Result<PdeSolution> {
    let m = config.steps()?;
    let mut solver = FdSolver::new(spec, config, exec)?;
    let mut wanted = Vec::with_capacity(sample_times.len());
    for &t in sample_times {
        let s = (t / config.dt).round();
        if !(0.0..=m as f64).contains(&s) || (s * config.dt - t).abs() > 1e-9 * t.abs().max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "sample time {t} is not a step multiple of {} within the horizon",
                config.dt
            )));
        }
        wanted.push(s as usize);
    }
    if wanted.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("sample times must be ascending".into()));
    }
    let initial_total = solver.field().total();
    let mut samples = Vec::with_capacity(wanted.len());
    let mut next = 0;
    let mut take = |step: usize, f: &DensityField, samples: &mut Vec<DensityField>| {
        while next < wanted.len() && wanted[next] == step {
            samples.push(f.clone());
            next += 1;
        }
    };
    take(0, solver.field(), &mut samples);
    for step in 1..=m {
        solver.step()?;
        take(step, solver.field(), &mut samples);
    }
    Ok(PdeSolution {
        grid: *solver.grid(),
        config,
        initial_total,
        times: sample_times.to_vec(),
        samples,
        final_field: solver.into_field(),
    })
}

/// The values of a fine-grid field at the points of a coarser grid.
pub fn restrict(fine: &DensityField, fine_grid: &LatticeGrid, coarse_grid: &LatticeGrid) -> Result<DensityField> {
    let (kf, kc) = (fine_grid.k(), coarse_grid.k());
    if kf < kc || kf % kc != 0 {
        return Err(Error::Incomparable { coarse: kc, fine: kf });
    }
    let ratio = kf / kc;
    let mut out = DensityField::zeros(coarse_grid, fine.num_states);
    out.time = fine.time;
    for r in coarse_grid.regions() {
        let fr = crate::lattice::Region::new(r.i * ratio, r.j * ratio);
        for l in 0..fine.num_states {
            out.set(coarse_grid, r, l, fine.get(fine_grid, fr, l));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub ds_coarse: f64,
    pub ds_fine: f64,
    /// Sup-norm difference at the horizon on the coarse grid; `None` when the
    /// grids do not nest.
    pub sup_norm_diff: Option<f64>,
    /// `|m_fine − m_coarse| / |m_fine|` for the state-fraction metric.
    pub metric_rel_diff: f64,
}

/// Solves at each spacing with an automatic stable step and compares
/// consecutive entries.
pub fn refine_and_compare(
    spec: &NetworkSpec,
    horizon: f64,
    ds_list: &[f64],
    metric_state: usize,
    exec: Exec,
) -> Result<Vec<ConvergenceRow>> {
    if ds_list.len() < 2 {
        return Err(Error::InvalidArgument("need at least two grid spacings".into()));
    }
    if metric_state >= spec.num_states() {
        return Err(Error::InvalidArgument(format!(
            "metric state {metric_state} out of range"
        )));
    }
    let solutions = ds_list
        .iter()
        .map(|&ds| solve_pde(spec, FdConfig::auto(spec, ds, horizon), &[], exec))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(ds_list.len() - 1);
    for pair in solutions.windows(2) {
        let (c, f) = if pair[0].grid.k() <= pair[1].grid.k() {
            (&pair[0], &pair[1])
        } else {
            (&pair[1], &pair[0])
        };
        let sup_norm_diff = match restrict(&f.final_field, &f.grid, &c.grid) {
            Ok(r) => Some(
                r.values
                    .iter()
                    .zip(&c.final_field.values)
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())),
            ),
            Err(Error::Incomparable { .. }) => None,
            Err(e) => return Err(e),
        };
        let mf = f.state_fraction(metric_state)?;
        let mc = c.state_fraction(metric_state)?;
        let metric_rel_diff = if mf != 0.0 {
            (mf - mc).abs() / mf.abs()
        } else {
            (mf - mc).abs()
        };
        rows.push(ConvergenceRow {
            ds_coarse: c.config.ds,
            ds_fine: f.config.ds,
            sup_norm_diff,
            metric_rel_diff,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Region;
    use crate::ode::{integrate_euler, integrate_stationary};
    use crate::scenario::{heat, onoff, ONOFF_CAPACITY, ONOFF_LAMBDA};
    use proptest::prelude::*;

    #[test]
    fn step_size_arithmetic() {
        let dt = step_size_for(0.01, 1.0 / 256.0, 10.0, 1.0);
        let bound = 1.0 / (4.0 * 0.01 * 256.0 * 256.0);
        assert!(dt <= bound && dt > bound * 0.9999, "{dt}");
        assert!((bound - 3.8147e-4).abs() < 1e-8);
        let m = (10.0 / dt).round();
        assert!(0.01 * (10.0 / (m - 1.0)) * 65536.0 > 0.25);
        assert_eq!(step_size_for(0.0, 0.1, 10.0, 1.0), 0.01);
        let fine = step_size_for(0.01, 1.0 / 128.0, 10.0, 1.0);
        let coarse = step_size_for(0.01, 1.0 / 64.0, 10.0, 1.0);
        assert!((coarse / fine - 4.0).abs() < 0.01);
        assert_eq!(capped_step(0.001, 1.0 / 7.0, 10.0, 0.9), 0.01);
    }

    #[test]
    fn stability_is_enforced() {
        let spec = heat(0.1);
        let bad = FdConfig::new(1.0 / 16.0, 0.01, 1.0);
        assert!(matches!(bad.check(&spec), Err(Error::Unstable { state: 0, .. })));
        let dt = 0.25 / (0.1 * 256.0);
        let ok = FdConfig::new(1.0 / 16.0, dt, 100.0 * dt);
        assert!((ok.stability_ratio(&spec).1 - 0.25).abs() < 1e-15);
        ok.check(&spec).unwrap();
        assert!(FdConfig::new(0.3, 0.001, 1.0).check(&spec).is_err());
        assert!(FdConfig::new(1.0 / 16.0, 0.0007, 1.0).check(&spec).is_err());
    }

    #[test]
    fn heat_mode_decays_at_the_analytic_rate() {
        let spec = heat(0.1);
        let cfg = FdConfig::auto(&spec, 1.0 / 64.0, 1.0);
        let sol = solve_pde(&spec, cfg, &[], Exec::default()).unwrap();
        let centre = sol.final_field.get(&sol.grid, Region::new(32, 32), 0);
        let analytic = (-2.0 * std::f64::consts::PI.powi(2) * 0.1f64).exp();
        assert!((centre - analytic).abs() < 1e-3, "{centre} vs {analytic}");
        assert!((analytic - 0.13887).abs() < 1e-4);
    }

    #[test]
    fn single_peak_step() {
        let spec = heat(0.1);
        let g = LatticeGrid::new(4).unwrap();
        for r in [0.25, 0.2] {
            let dt = r * g.delta_s().powi(2) / 0.1;
            let cfg = FdConfig::new(g.delta_s(), dt, dt);
            let mut f = DensityField::zeros(&g, 1);
            let p = Region::new(2, 2);
            f.set(&g, p, 0, 1.0);
            f.set(&g, Region::new(1, 2), 0, 0.5);
            let next = fd_step(&spec, &f, &cfg, Exec::Sequential).unwrap();
            let want = (1.0 - 4.0 * r) * 1.0 + r * 0.5;
            assert!((next.get(&g, p, 0) - want).abs() < 1e-12);
            assert!(next.boundary_is_zero(&g));
        }
    }

    #[test]
    fn zero_field_stays_zero() {
        let mut spec = onoff(ONOFF_LAMBDA, ONOFF_CAPACITY, 0.01, 10.0);
        spec.initial = vec![crate::field::Field::zero(), crate::field::Field::zero()];
        let sol = solve_pde(&spec, FdConfig::auto(&spec, 1.0 / 16.0, 1.0), &[], Exec::default()).unwrap();
        assert!(sol.final_field.values.iter().all(|&v| v == 0.0));
        assert!(matches!(sol.state_fraction(0), Err(Error::EmptyPopulation)));
    }

    #[test]
    fn immobile_network_reduces_to_pointwise_stationary_odes() {
        let spec = onoff(ONOFF_LAMBDA, ONOFF_CAPACITY, 0.0, 10.0);
        let cfg = FdConfig::auto(&spec, 1.0 / 16.0, 10.0);
        let sol = solve_pde(&spec, cfg, &[], Exec::default()).unwrap();
        let g = sol.grid;
        let init = DensityField::initial(&spec, &g);
        let (mut off, mut total) = (0.0, 0.0);
        for r in g.interior() {
            let a0 = [init.get(&g, r, 0), init.get(&g, r, 1)];
            let a = integrate_stationary(&spec, &a0, &[], 10.0, cfg.dt).unwrap();
            assert_eq!(a[0], sol.final_field.get(&g, r, 0));
            off += a[0];
            total += a0[0] + a0[1];
        }
        assert!((sol.state_fraction(0).unwrap() - off / total).abs() < 1e-12);
    }

    #[test]
    fn fd_sequence_equals_ode_euler_sequence() {
        let spec = onoff(ONOFF_LAMBDA, ONOFF_CAPACITY, 0.01, 10.0);
        let g = LatticeGrid::new(8).unwrap();
        let dt = 0.005;
        let ode = integrate_euler(&spec, &g, DensityField::initial(&spec, &g), 1.0, dt, Exec::Sequential).unwrap();
        let mut fd = FdSolver::new(&spec, FdConfig::new(g.delta_s(), dt, 1.0), Exec::Parallel).unwrap();
        for f in &ode.fields[1..] {
            let p = fd.step().unwrap();
            assert!(p.values.iter().zip(&f.values).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }

    #[test]
    fn clamp_projection() {
        let f = |z: &[f64]| z[0] * 10.0 + z[1];
        assert!((lipschitz_clamp(f, 2.0, &[3.0, 4.0]) - (12.0 + 1.6)).abs() < 1e-12);
        assert_eq!(lipschitz_clamp(f, 10.0, &[3.0, 4.0]), 34.0);
        assert_eq!(lipschitz_clamp(f, 1.0, &[0.0, 0.0]), 0.0);
        let projected = [1.2, 1.6];
        assert!((lipschitz_clamp(f, 2.0, &projected) - lipschitz_clamp(f, 2.0, &[3.0, 4.0])).abs() < 1e-12);
    }

    #[test]
    fn clamp_is_neutral_on_bounded_trajectories() {
        let spec = onoff(ONOFF_LAMBDA, ONOFF_CAPACITY, 0.001, 10.0);
        let cfg = FdConfig::auto(&spec, 1.0 / 32.0, 10.0);
        let off = solve_pde(&spec, cfg, &[5.0], Exec::default()).unwrap();
        let on = solve_pde(&spec, cfg.with_clamp(Clamp::Auto), &[5.0], Exec::default()).unwrap();
        assert_eq!(off.samples, on.samples);
        assert_eq!(off.final_field, on.final_field);
        // a tiny ball changes the answer
        let tight = solve_pde(&spec, cfg.with_clamp(Clamp::Radius(0.5)), &[], Exec::default()).unwrap();
        assert_ne!(off.final_field, tight.final_field);
        assert!(solve_pde(&spec, cfg.with_clamp(Clamp::Radius(-1.0)), &[], Exec::default()).is_err());
    }

    #[test]
    fn restriction_and_comparison() {
        let spec = heat(0.1);
        let fine = LatticeGrid::new(16).unwrap();
        let coarse = LatticeGrid::new(8).unwrap();
        let f = DensityField::initial(&spec, &fine);
        let r = restrict(&f, &fine, &coarse).unwrap();
        assert_eq!(
            r.get(&coarse, Region::new(3, 5), 0),
            f.get(&fine, Region::new(6, 10), 0)
        );
        assert!(matches!(
            restrict(&f, &fine, &LatticeGrid::new(6).unwrap()),
            Err(Error::Incomparable { coarse: 6, fine: 16 })
        ));
        let rows = refine_and_compare(&spec, 0.5, &[1.0 / 16.0, 1.0 / 16.0], 0, Exec::default()).unwrap();
        assert_eq!(rows[0].sup_norm_diff, Some(0.0));
        assert_eq!(rows[0].metric_rel_diff, 0.0);
        let rows = refine_and_compare(&spec, 0.5, &[1.0 / 12.0, 1.0 / 16.0, 1.0 / 32.0], 0, Exec::default()).unwrap();
        assert_eq!(rows[0].sup_norm_diff, None);
        assert!(rows[1].sup_norm_diff.unwrap() > 0.0);
        assert!(refine_and_compare(&spec, 0.5, &[1.0 / 16.0], 0, Exec::default()).is_err());
    }

    #[test]
    fn samples_are_taken_on_step_multiples() {
        let spec = heat(0.1);
        let cfg = FdConfig::new(1.0 / 8.0, 1.0 / 128.0, 1.0);
        let sol = solve_pde(&spec, cfg, &[0.0, 0.5, 1.0], Exec::default()).unwrap();
        assert_eq!(sol.samples.len(), 3);
        assert_eq!(sol.samples[2], sol.final_field);
        assert_eq!(sol.samples[1].time, 0.5);
        assert!(solve_pde(&spec, cfg, &[0.3], Exec::default()).is_err());
        assert!(solve_pde(&spec, cfg, &[0.5, 0.25], Exec::default()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn pure_diffusion_obeys_maximum_principle(
            k in 3usize..12,
            r in 0.01f64..0.25,
            vals in proptest::collection::vec(-3.0f64..3.0, 150),
        ) {
            let spec = heat(0.1);
            let g = LatticeGrid::new(k).unwrap();
            let dt = r * g.delta_s().powi(2) / 0.1;
            let cfg = FdConfig::new(g.delta_s(), dt, 20.0 * dt);
            let mut f = DensityField::zeros(&g, 1);
            for (n, reg) in g.interior().enumerate() {
                f.set(&g, reg, 0, vals[n % vals.len()]);
            }
            let mut s = FdSolver::from_field(&spec, cfg, f, Exec::Sequential).unwrap();
            let mut last = s.field().sup_norm();
            for _ in 0..20 {
                let now = s.step().unwrap().sup_norm();
                prop_assert!(now <= last);
                prop_assert!(s.field().boundary_is_zero(&g));
                last = now;
            }
        }
    }
}
