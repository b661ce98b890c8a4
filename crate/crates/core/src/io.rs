//! CSV output for trajectories, fields, estimates and comparison tables.
//!
//! Region columns hold lattice coordinates `(i/K, j/K)`; state columns hold
//! the state names of the network.

use std::io::{self, Write};

use crate::ctmc::Trajectory;
use crate::lattice::LatticeGrid;
use crate::ode::DensityField;
use crate::pde::ConvergenceRow;
use crate::stats::ReplicaEstimate;
use crate::sweep::SweepRow;
use crate::walk::{FreeWalkConfig, MsdEstimate};

fn writer<W: Write>(w: W, header: &[&str]) -> io::Result<csv::Writer<W>> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    Ok(out)
}

fn num(v: f64) -> String {
    format!("{v}")
}

/// `t,region_x,region_y,state,count` for every interior region; boundary
/// regions never hold nodes.
pub fn write_trajectory<W: Write>(w: W, states: &[String], traj: &Trajectory) -> io::Result<()> {
    let mut out = writer(w, &["t", "region_x", "region_y", "state", "count"])?;
    let g = traj.grid;
    for (t, snap) in traj.times.iter().zip(&traj.snapshots) {
        for r in g.interior() {
            let (x, y) = g.coords(r);
            for (l, name) in states.iter().enumerate() {
                let c = snap[g.index(r) * traj.num_states + l];
                out.write_record([num(*t), num(x), num(y), name.clone(), c.to_string()])?;
            }
        }
    }
    out.flush()
}

/// `t,region_x,region_y,state,density` for every region, boundary included.
pub fn write_fields<W: Write>(w: W, states: &[String], grid: &LatticeGrid, fields: &[DensityField]) -> io::Result<()> {
    let mut out = writer(w, &["t", "region_x", "region_y", "state", "density"])?;
    for f in fields {
        for r in grid.regions() {
            let (x, y) = grid.coords(r);
            for (l, name) in states.iter().enumerate() {
                out.write_record([num(f.time), num(x), num(y), name.clone(), num(f.get(grid, r, l))])?;
            }
        }
    }
    out.flush()
}

/// `metric,mean,ci_low,ci_high,replicas`.
pub fn write_estimates<W: Write>(w: W, rows: &[(String, ReplicaEstimate)]) -> io::Result<()> {
    let mut out = writer(w, &["metric", "mean", "ci_low", "ci_high", "replicas"])?;
    for (name, e) in rows {
        let (lo, hi) = e.ci();
        out.write_record([name.clone(), num(e.mean), num(lo), num(hi), e.n.to_string()])?;
    }
    out.flush()
}

/// `ds_coarse,ds_fine,sup_norm_diff,metric_rel_diff`; the sup-norm cell is
/// empty for grids that do not nest.
pub fn write_convergence<W: Write>(w: W, rows: &[ConvergenceRow]) -> io::Result<()> {
    let mut out = writer(w, &["ds_coarse", "ds_fine", "sup_norm_diff", "metric_rel_diff"])?;
    for r in rows {
        out.write_record([
            num(r.ds_coarse),
            num(r.ds_fine),
            r.sup_norm_diff.map(num).unwrap_or_default(),
            num(r.metric_rel_diff),
        ])?;
    }
    out.flush()
}

/// `k,r,t,msd,ci_low,ci_high,theory`.
pub fn write_msd<W: Write>(w: W, rows: &[(FreeWalkConfig, MsdEstimate)]) -> io::Result<()> {
    let mut out = writer(w, &["k", "r", "t", "msd", "ci_low", "ci_high", "theory"])?;
    for (c, e) in rows {
        let (lo, hi) = e.msd.ci();
        out.write_record([
            c.k.to_string(),
            num(c.rate),
            num(c.t),
            num(e.msd.mean),
            num(lo),
            num(hi),
            num(e.theory),
        ])?;
    }
    out.flush()
}

/// `N,K,V,mu,nodes,ctmc_mean,ctmc_ci,replicas,pde_metric,abs_error`.
pub fn write_sweep<W: Write>(w: W, rows: &[SweepRow]) -> io::Result<()> {
    let mut out = writer(
        w,
        &[
            "N",
            "K",
            "V",
            "mu",
            "nodes",
            "ctmc_mean",
            "ctmc_ci",
            "replicas",
            "pde_metric",
            "abs_error",
        ],
    )?;
    for r in rows {
        out.write_record([
            r.n.to_string(),
            r.k.to_string(),
            num(r.v),
            num(r.mu),
            r.nodes.to_string(),
            num(r.ctmc_mean),
            num(r.ctmc_ci),
            r.replicas.to_string(),
            num(r.pde_metric),
            num(r.abs_error),
        ])?;
    }
    out.flush()
}
