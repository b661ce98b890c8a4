use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use mobnet::ctmc::{run_replicas, simulate};
use mobnet::exec::with_jobs;
use mobnet::field::Field;
use mobnet::io as csvout;
use mobnet::ode::{auto_dt, steps_for, DensityField, EulerIntegrator};
use mobnet::pde::{refine_and_compare, solve_pde, Clamp, FdConfig};
use mobnet::rng::stream;
use mobnet::scenario::set_theta_amplitude;
use mobnet::sweep::{compare, SweepSettings};
use mobnet::walk::{msd, FreeWalkConfig};
use mobnet::{parse_spec, serialize_spec, Exec, LatticeGrid, NetworkSpec, ReplicaPolicy, Scenario};
use rand::Rng;

use crate::args::{
    Command, CompareArgs, OdeArgs, PdeArgs, ReplicaArgs, RunArgs, RwArgs, SimArgs, SpecArgs, StepArgs, Switch,
    ValidateArgs,
};
use crate::Failure;

type Outcome = Result<(), Failure>;

pub fn run(command: Command) -> Outcome {
    match command {
        Command::Validate(a) => validate(a),
        Command::Sim(a) => with_jobs(a.run.jobs, || sim(a)),
        Command::Ode(a) => with_jobs(a.run.jobs, || ode(a)),
        Command::Pde(a) => with_jobs(a.run.jobs, || pde(a)),
        Command::Compare(a) => with_jobs(a.run.jobs, || cmd_compare(a)),
        Command::Rwcheck(a) => with_jobs(a.run.jobs, || rwcheck(a)),
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Invalid(msg.into())
}

fn load_spec(args: &SpecArgs) -> Result<NetworkSpec, Failure> {
    let mut spec = match (&args.config, &args.scenario) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            parse_spec(&text)?
        }
        (None, Some(name)) => name.parse::<Scenario>()?.spec(),
        (None, None) => return Err(invalid("one of --config or --scenario is required")),
    };
    if let Some(t) = args.horizon {
        spec.horizon = t;
    }
    for (l, mu) in [args.mu1, args.mu2].into_iter().enumerate() {
        if let Some(mu) = mu {
            let count = spec.num_states();
            *spec
                .mu
                .get_mut(l)
                .ok_or_else(|| invalid(format!("--mu{} given but the network has {count} state(s)", l + 1)))? = mu;
        }
    }
    if let Some(v) = args.v {
        set_theta_amplitude(&mut spec, v);
    }
    spec.validate()?;
    Ok(spec)
}

fn seed(run: &RunArgs) -> u64 {
    run.seed.unwrap_or_else(|| {
        let s: u64 = rand::rng().random();
        eprintln!("seed: {s}");
        s
    })
}

fn state_index(spec: &NetworkSpec, s: &str) -> Result<usize, Failure> {
    if let Some(l) = spec.states.iter().position(|n| n == s) {
        return Ok(l);
    }
    match s.parse::<usize>() {
        Ok(l) if l < spec.num_states() => Ok(l),
        _ => Err(invalid(format!("unknown state `{s}`"))),
    }
}

/// Parses `0.25`, `1e-3` or a fraction such as `1/256`.
fn parse_number(s: &str) -> Result<f64, Failure> {
    let bad = || invalid(format!("cannot read `{s}` as a number"));
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            a / b
        }
        None => s.trim().parse().map_err(|_| bad())?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

/// `None` means automatic step selection.
fn explicit_dt(step: &StepArgs) -> Result<Option<f64>, Failure> {
    match step.dt.as_deref() {
        None | Some("auto") => Ok(None),
        Some(_) if step.auto_dt => Err(invalid("--dt and --auto-dt conflict")),
        Some(s) => parse_number(s).map(Some),
    }
}

fn policy(r: &ReplicaArgs) -> ReplicaPolicy {
    ReplicaPolicy {
        min_replicas: r.replicas_min,
        rel_ci_target: r.ci_rel,
        cap: r.replica_cap,
        ..ReplicaPolicy::default()
    }
}

/// Writes to `path` through a temporary file in the same directory, or to
/// stdout without a path.
fn emit<F>(path: Option<&Path>, write: F) -> Outcome
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let io_err = |e: io::Error| Failure::Io(e.to_string());
    match path {
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock).and_then(|_| lock.flush()).map_err(io_err)
        }
        Some(p) => {
            let dir = match p.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let tmp =
                tempfile::NamedTempFile::new_in(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
            {
                let mut w = BufWriter::new(tmp.as_file());
                write(&mut w).and_then(|_| w.flush()).map_err(io_err)?;
            }
            tmp.persist(p)
                .map_err(|e| Failure::Io(format!("{}: {}", p.display(), e.error)))?;
            Ok(())
        }
    }
}

fn times_or(times: &[f64], default: &[f64]) -> Vec<f64> {
    if times.is_empty() {
        default.to_vec()
    } else {
        times.to_vec()
    }
}

fn validate(a: ValidateArgs) -> Outcome {
    let spec = load_spec(&a.spec)?;
    eprintln!(
        "valid: {} state(s), {} reaction(s), {} parameter field(s)",
        spec.num_states(),
        spec.num_reactions(),
        spec.num_params()
    );
    if a.emit {
        return emit(None, |w| writeln!(w, "{}", serialize_spec(&spec)));
    }
    Ok(())
}

fn sim(a: SimArgs) -> Outcome {
    let spec = load_spec(&a.spec)?;
    let grid = LatticeGrid::new(a.k)?;
    let state = state_index(&spec, &a.state)?;
    let seed = seed(&a.run);
    let report = run_replicas(
        &spec,
        &grid,
        a.n,
        spec.horizon,
        state,
        seed,
        &policy(&a.replicas),
        Exec::default(),
    )?;
    let e = report.estimate;
    let name = &spec.states[state];
    eprintln!(
        "fraction of initial nodes in `{name}` at T = {}: {:.6} ± {:.6} ({} replicas{})",
        spec.horizon,
        e.mean,
        e.ci_halfwidth(),
        e.n,
        if report.converged { "" } else { ", replica cap reached" }
    );
    if let Some(path) = &a.trajectory_out {
        let times = times_or(&a.snapshot_times, &[0.0, spec.horizon]);
        let traj = simulate(&spec, &grid, a.n, spec.horizon, &times, &mut stream(seed, 0))?;
        emit(Some(path), |w| csvout::write_trajectory(w, &spec.states, &traj))?;
    }
    emit(a.run.out.as_deref(), |w| {
        csvout::write_estimates(w, &[(format!("fraction_{name}"), e)])
    })
}

fn step_of(t: f64, dt: f64, steps: usize) -> Result<usize, Failure> {
    let m = (t / dt).round();
    if m < 0.0 || m > steps as f64 || (m * dt - t).abs() > 1e-9 * t.abs().max(1.0) {
        return Err(invalid(format!(
            "snapshot time {t} is not a multiple of dt = {dt} within the horizon"
        )));
    }
    Ok(m as usize)
}

fn ode(a: OdeArgs) -> Outcome {
    let spec = load_spec(&a.spec)?;
    let grid = LatticeGrid::new(a.k)?;
    let horizon = spec.horizon;
    let dt = explicit_dt(&a.step)?.unwrap_or_else(|| auto_dt(&spec, &grid, horizon));
    let steps = steps_for(horizon, dt)?;
    let times = times_or(&a.snapshot_times, &[0.0, horizon]);
    let wanted = times
        .iter()
        .map(|&t| step_of(t, dt, steps))
        .collect::<Result<Vec<_>, _>>()?;
    let initial = DensityField::initial(&spec, &grid);
    let initial_total = initial.total();
    let mut integ = EulerIntegrator::new(&spec, &grid, initial, dt, Exec::default())?;
    let mut snaps = Vec::new();
    let mut collect = |m: usize, f: &DensityField| {
        for &w in &wanted {
            if w == m {
                snaps.push(f.clone());
            }
        }
    };
    collect(0, integ.field());
    for m in 1..=steps {
        integ.step()?;
        collect(m, integ.field());
    }
    snaps.sort_by(|x, y| x.time.total_cmp(&y.time));
    eprintln!("dt = {dt}, {steps} steps");
    report_fractions(&spec, integ.field(), initial_total);
    emit(a.run.out.as_deref(), |w| {
        csvout::write_fields(w, &spec.states, &grid, &snaps)
    })
}

fn report_fractions(spec: &NetworkSpec, field: &DensityField, initial_total: f64) {
    for (l, name) in spec.states.iter().enumerate() {
        let frac = if initial_total > 0.0 {
            field.total_in(l) / initial_total
        } else {
            f64::NAN
        };
        eprintln!("fraction in `{name}` at T = {}: {frac:.6}", field.time);
    }
}

fn pde(a: PdeArgs) -> Outcome {
    let spec = load_spec(&a.spec)?;
    let state = state_index(&spec, &a.state)?;
    let horizon = spec.horizon;
    if !a.refine.is_empty() {
        let list = a
            .refine
            .iter()
            .map(|s| parse_number(s))
            .collect::<Result<Vec<_>, _>>()?;
        let rows = refine_and_compare(&spec, horizon, &list, state, Exec::default())?;
        for r in &rows {
            eprintln!(
                "ds {} vs {}: relative metric difference {:.3e}",
                r.ds_coarse, r.ds_fine, r.metric_rel_diff
            );
        }
        return emit(a.run.out.as_deref(), |w| csvout::write_convergence(w, &rows));
    }
    let ds = parse_number(&a.ds)?;
    let config = match explicit_dt(&a.step)? {
        None => FdConfig::auto(&spec, ds, horizon),
        Some(dt) => FdConfig::new(ds, dt, horizon),
    }
    .with_clamp(match a.clamp {
        Switch::On => Clamp::Auto,
        Switch::Off => Clamp::Off,
    });
    let times = times_or(&a.snapshot_times, &[horizon]);
    let sol = solve_pde(&spec, config, &times, Exec::default())?;
    eprintln!("ds = {}, dt = {}, {} steps", config.ds, config.dt, config.steps()?);
    report_fractions(&spec, &sol.final_field, sol.initial_total);
    emit(a.run.out.as_deref(), |w| {
        csvout::write_fields(w, &spec.states, &sol.grid, &sol.samples)
    })
}

fn cmd_compare(a: CompareArgs) -> Outcome {
    let mut spec = load_spec(&a.spec)?;
    if let Some(mu) = a.mu {
        spec.mu[0] = mu;
        spec.validate()?;
    }
    let state = state_index(&spec, &a.state)?;
    let v = a.spec.v.unwrap_or_else(|| {
        spec.initial
            .iter()
            .find_map(|f| match f {
                Field::Theta { scale } => Some(*scale),
                _ => None,
            })
            .unwrap_or(f64::NAN)
    });
    let settings = SweepSettings {
        horizon: spec.horizon,
        metric_state: state,
        pde_ds: parse_number(&a.ds)?,
        seed: seed(&a.run),
        policy: policy(&a.replicas),
        exec: Exec::default(),
    };
    let rows = compare(&spec, v, spec.mu[0], &a.n_list, &a.k_list, &settings)?;
    for r in &rows {
        eprintln!(
            "N = {}, K = {}: {} nodes, ctmc {:.4} ± {:.4}, pde {:.4}, error {:.4}",
            r.n, r.k, r.nodes, r.ctmc_mean, r.ctmc_ci, r.pde_metric, r.abs_error
        );
    }
    emit(a.run.out.as_deref(), |w| csvout::write_sweep(w, &rows))
}

fn rwcheck(a: RwArgs) -> Outcome {
    let seed = seed(&a.run);
    let mut rows = Vec::new();
    for &k in &a.k {
        for &t in &a.t {
            let cfg = FreeWalkConfig {
                k,
                rate: if a.scale_rate { a.r * (k as f64).powi(2) } else { a.r },
                t,
                replicas: a.replicas,
            };
            let row_seed: u64 = stream(seed, rows.len() as u64).random();
            let est = msd(&cfg, row_seed, Exec::default())?;
            eprintln!(
                "k = {k}, r = {}, t = {t}: msd {:.5} ± {:.5}, theory {}",
                cfg.rate,
                est.msd.mean,
                est.msd.ci_halfwidth(),
                est.theory
            );
            rows.push((cfg, est));
        }
    }
    emit(a.run.out.as_deref(), |w| csvout::write_msd(w, &rows))
}
