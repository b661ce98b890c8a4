//! Exact stochastic simulation of the mobile reaction network.
//!
//! Nodes live in the interior regions of the lattice. Each interior region
//! carries one channel per group of reactions with equal net stoichiometry,
//! one movement channel per state and interior neighbor (rate `μ_l^K A_l`),
//! and one lumped exit channel per state (rate `|N ∩ Ω| μ_l^K A_l`). Events are
//! drawn with the direct method over a two-level region/channel rate index;
//! firing a channel touches at most two regions, and only those are refreshed.

use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::lattice::{LatticeGrid, Region};
use crate::network::NetworkSpec;
use crate::replicas::{run_replicas_with, ReplicaPolicy, ReplicaReport};

/// Node counts per (region, local state), laid out `[region * L + l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationState {
    counts: Vec<u64>,
    num_states: usize,
    pub time: f64,
}

impl PopulationState {
    pub fn zeros(grid: &LatticeGrid, num_states: usize) -> Self {
        PopulationState {
            counts: vec![0; grid.num_regions() * num_states],
            num_states,
            time: 0.0,
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, region: usize, l: usize) -> u64 {
        self.counts[region * self.num_states + l]
    }

    pub fn set(&mut self, region: usize, l: usize, value: u64) {
        self.counts[region * self.num_states + l] = value;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn total_in(&self, l: usize) -> u64 {
        self.counts.iter().skip(l).step_by(self.num_states).sum()
    }

    /// True when every boundary region is empty.
    pub fn boundary_is_empty(&self, grid: &LatticeGrid) -> bool {
        grid.boundary()
            .all(|r| (0..self.num_states).all(|l| self.count(grid.index(r), l) == 0))
    }
}

/// `A_l(x, y) = floor(N α_l⁰(x, y))` at interior regions, zero on the boundary.
pub fn build_initial_state(spec: &NetworkSpec, grid: &LatticeGrid, n: u64) -> PopulationState {
    let mut s = PopulationState::zeros(grid, spec.num_states());
    let scale = n as f64;
    for r in grid.interior() {
        let (x, y) = grid.coords(r);
        for (l, f) in spec.initial.iter().enumerate() {
            let v = (scale * f.eval(x, y)).floor();
            s.set(grid.index(r), l, if v > 0.0 { v as u64 } else { 0 });
        }
    }
    s
}

#[derive(Debug, Clone)]
struct Group {
    delta: Vec<i64>,
    members: Vec<usize>,
}

fn group_reactions(spec: &NetworkSpec) -> Vec<Group> {
    let mut groups: Vec<Group> = Vec::new();
    for (j, r) in spec.reactions.iter().enumerate() {
        let delta = r.net_change();
        match groups.iter_mut().find(|g| g.delta == delta) {
            Some(g) => g.members.push(j),
            None => groups.push(Group {
                delta,
                members: vec![j],
            }),
        }
    }
    groups
}

/// What a channel does when it fires.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    /// Reaction group `group` (reactions with identical net change) in `region`.
    Reaction {
        region: usize,
        group: usize,
    },
    Move {
        from: usize,
        to: usize,
        state: usize,
    },
    Exit {
        region: usize,
        state: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub event: Event,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Fired {
        elapsed: f64,
        event: Event,
    },
    /// Total rate is zero; the state can no longer change.
    Absorbed,
}

const DIRS: usize = 4;

/// Cached channel rates for every interior region of one population state.
#[derive(Debug, Clone)]
pub struct TransitionTable<'a> {
    spec: &'a NetworkSpec,
    grid: LatticeGrid,
    scale: f64,
    inv_scale: f64,
    mu_k: Vec<f64>,
    params: Vec<f64>,
    groups: Vec<Group>,
    slots: Vec<usize>,
    slot_of: Vec<usize>,
    stride: usize,
    rates: Vec<f64>,
    totals: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> TransitionTable<'a> {
    pub fn new(spec: &'a NetworkSpec, grid: &LatticeGrid, n: u64, state: &PopulationState) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("population scale N must be >= 1".into()));
        }
        let l_count = spec.num_states();
        let slots: Vec<usize> = grid.interior().map(|r| grid.index(r)).collect();
        let mut slot_of = vec![usize::MAX; grid.num_regions()];
        for (s, &idx) in slots.iter().enumerate() {
            slot_of[idx] = s;
        }
        let groups = group_reactions(spec);
        let stride = groups.len() + l_count * (DIRS + 1);
        let mut table = TransitionTable {
            spec,
            grid: *grid,
            scale: n as f64,
            inv_scale: 1.0 / n as f64,
            mu_k: (0..l_count).map(|l| spec.scaled_migration(grid.k(), l)).collect(),
            params: spec.param_values(grid),
            groups,
            stride,
            rates: vec![0.0; slots.len() * stride],
            totals: vec![0.0; slots.len()],
            slots,
            slot_of,
            scratch: vec![0.0; l_count],
        };
        for s in 0..table.slots.len() {
            table.refresh(s, state)?;
        }
        Ok(table)
    }

    fn refresh(&mut self, slot: usize, state: &PopulationState) -> Result<()> {
        let l_count = self.spec.num_states();
        let p_count = self.spec.num_params();
        let region = self.slots[slot];
        let counts = &state.counts[region * l_count..(region + 1) * l_count];
        for (d, &c) in self.scratch.iter_mut().zip(counts) {
            *d = c as f64 * self.inv_scale;
        }
        let params = &self.params[region * p_count..(region + 1) * p_count];
        let base = slot * self.stride;
        for (g, group) in self.groups.iter().enumerate() {
            let mut sum = 0.0;
            for &j in &group.members {
                let reaction = &self.spec.reactions[j];
                if counts.iter().zip(&reaction.consumed).any(|(&a, &c)| a < c as u64) {
                    continue;
                }
                let rate = self.scale * reaction.rate.eval(&self.scratch, params);
                let r = self.grid.region(region);
                if !rate.is_finite() {
                    return Err(Error::NonFiniteRate {
                        reaction: j,
                        i: r.i,
                        j: r.j,
                    });
                }
                if rate < 0.0 {
                    return Err(Error::NegativeRate {
                        reaction: j,
                        i: r.i,
                        j: r.j,
                        rate,
                    });
                }
                sum += rate;
            }
            self.rates[base + g] = sum;
        }
        let stencil = self.grid.stencil(region);
        let mut off = base + self.groups.len();
        for (l, &count) in counts.iter().enumerate() {
            let m = self.mu_k[l] * count as f64;
            let mut exits = 0usize;
            for (d, &nb) in stencil.iter().enumerate() {
                if self.slot_of[nb] == usize::MAX {
                    exits += 1;
                    self.rates[off + d] = 0.0;
                } else {
                    self.rates[off + d] = m;
                }
            }
            self.rates[off + DIRS] = exits as f64 * m;
            off += DIRS + 1;
        }
        self.totals[slot] = self.rates[base..base + self.stride].iter().sum();
        Ok(())
    }

    /// Sum of all channel rates.
    pub fn total_rate(&self) -> f64 {
        self.totals.iter().sum()
    }

    /// Total propensity of one region; zero for boundary regions.
    pub fn region_rate(&self, region: Region) -> f64 {
        match self.slot_of.get(self.grid.index(region)) {
            Some(&s) if s != usize::MAX => self.totals[s],
            _ => 0.0,
        }
    }

    fn decode(&self, slot: usize, c: usize) -> Event {
        let region = self.slots[slot];
        if c < self.groups.len() {
            return Event::Reaction { region, group: c };
        }
        let k = c - self.groups.len();
        let (state, d) = (k / (DIRS + 1), k % (DIRS + 1));
        if d < DIRS {
            Event::Move {
                from: region,
                to: self.grid.stencil(region)[d],
                state,
            }
        } else {
            Event::Exit { region, state }
        }
    }

    /// Nonzero channels of an interior region: one per
    /// reaction group, one per interior neighbor and state, one lumped exit.
    pub fn channels(&self, region: Region) -> Vec<Channel> {
        let Some(&slot) = self.slot_of.get(self.grid.index(region)) else {
            return Vec::new();
        };
        if slot == usize::MAX {
            return Vec::new();
        }
        let base = slot * self.stride;
        (0..self.stride)
            .filter(|&c| self.rates[base + c] > 0.0)
            .map(|c| Channel {
                event: self.decode(slot, c),
                rate: self.rates[base + c],
            })
            .collect()
    }

    /// Samples the next event with the direct method, without applying it.
    pub fn next_event<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<(f64, Event)> {
        let total = self.total_rate();
        if !(total > 0.0) {
            return None;
        }
        let u: f64 = rng.random();
        let elapsed = -(1.0 - u).ln() / total;
        let mut target = rng.random::<f64>() * total;
        let mut chosen = None;
        let mut last_positive = 0;
        for (s, &t) in self.totals.iter().enumerate() {
            if t > 0.0 {
                last_positive = s;
                if target < t {
                    chosen = Some(s);
                    break;
                }
                target -= t;
            }
        }
        let slot = chosen.unwrap_or(last_positive);
        if chosen.is_none() {
            target = self.totals[slot];
        }
        let base = slot * self.stride;
        let mut channel = None;
        let mut last_positive = 0;
        for c in 0..self.stride {
            let r = self.rates[base + c];
            if r > 0.0 {
                last_positive = c;
                if target < r {
                    channel = Some(c);
                    break;
                }
                target -= r;
            }
        }
        Some((elapsed, self.decode(slot, channel.unwrap_or(last_positive))))
    }

    /// Applies `event` to `state` and refreshes the touched regions.
    pub fn apply(&mut self, event: Event, state: &mut PopulationState) -> Result<()> {
        let l_count = self.spec.num_states();
        match event {
            Event::Reaction { region, group } => {
                for (l, &d) in self.groups[group].delta.iter().enumerate() {
                    let c = &mut state.counts[region * l_count + l];
                    let next = *c as i64 + d;
                    assert!(next >= 0, "reaction drove a count negative");
                    *c = next as u64;
                }
                self.refresh(self.slot_of[region], state)?;
            }
            Event::Move { from, to, state: l } => {
                state.counts[from * l_count + l] -= 1;
                state.counts[to * l_count + l] += 1;
                self.refresh(self.slot_of[from], state)?;
                self.refresh(self.slot_of[to], state)?;
            }
            Event::Exit { region, state: l } => {
                state.counts[region * l_count + l] -= 1;
                self.refresh(self.slot_of[region], state)?;
            }
        }
        Ok(())
    }
}

/// A population state together with its transition table.
#[derive(Debug, Clone)]
pub struct Ctmc<'a> {
    table: TransitionTable<'a>,
    state: PopulationState,
}

impl<'a> Ctmc<'a> {
    pub fn new(spec: &'a NetworkSpec, grid: &LatticeGrid, n: u64) -> Result<Self> {
        Self::from_state(spec, grid, n, build_initial_state(spec, grid, n))
    }

    pub fn from_state(spec: &'a NetworkSpec, grid: &LatticeGrid, n: u64, state: PopulationState) -> Result<Self> {
        let table = TransitionTable::new(spec, grid, n, &state)?;
        Ok(Ctmc { table, state })
    }

    pub fn state(&self) -> &PopulationState {
        &self.state
    }

    pub fn table(&self) -> &TransitionTable<'a> {
        &self.table
    }

    /// One exact jump: draws the holding time and the firing channel, then
    /// updates the state. Absorption leaves the state untouched.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<StepOutcome> {
        match self.table.next_event(rng) {
            None => Ok(StepOutcome::Absorbed),
            Some((elapsed, event)) => {
                self.table.apply(event, &mut self.state)?;
                self.state.time += elapsed;
                Ok(StepOutcome::Fired { elapsed, event })
            }
        }
    }
}

/// Piecewise-constant CTMC path sampled at fixed times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: LatticeGrid,
    pub num_states: usize,
    pub scale: u64,
    pub times: Vec<f64>,
    /// One count vector per sample time, laid out like [`PopulationState`].
    pub snapshots: Vec<Vec<u64>>,
}

impl Trajectory {
    fn sample_index(&self, t: f64) -> Option<usize> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
    }

    pub fn total_at(&self, k: usize) -> u64 {
        self.snapshots[k].iter().sum()
    }

    pub fn total_in_state_at(&self, k: usize, l: usize) -> u64 {
        self.snapshots[k].iter().skip(l).step_by(self.num_states).sum()
    }

    /// Counts divided by `N` at sample `k`.
    pub fn density_at(&self, k: usize) -> Vec<f64> {
        let inv = 1.0 / self.scale as f64;
        self.snapshots[k].iter().map(|&c| c as f64 * inv).collect()
    }

    /// Nodes in state `l` at time `t` over all nodes at time 0.
    pub fn off_fraction(&self, l: usize, t: f64) -> Result<f64> {
        let k0 = self
            .sample_index(0.0)
            .ok_or_else(|| Error::InvalidArgument("trajectory has no sample at t = 0".into()))?;
        let kt = self
            .sample_index(t)
            .ok_or_else(|| Error::InvalidArgument(format!("trajectory has no sample at t = {t}")))?;
        let initial = self.total_at(k0);
        if initial == 0 {
            return Err(Error::EmptyPopulation);
        }
        Ok(self.total_in_state_at(kt, l) as f64 / initial as f64)
    }
}

/// Simulates `[0, horizon]` and records the state at each of `sample_times`
/// (ascending, within the horizon). The value at a sample time includes every
/// jump at or before it.
pub fn simulate<R: Rng + ?Sized>(
    spec: &NetworkSpec,
    grid: &LatticeGrid,
    n: u64,
    horizon: f64,
    sample_times: &[f64],
    rng: &mut R,
) -> Result<Trajectory> {
    simulate_observed(spec, grid, n, horizon, sample_times, rng, |_| {})
}

/// [`simulate`] with a callback invoked after every applied jump.
pub fn simulate_observed<R, F>(
    spec: &NetworkSpec,
    grid: &LatticeGrid,
    n: u64,
    horizon: f64,
    sample_times: &[f64],
    rng: &mut R,
    mut on_jump: F,
) -> Result<Trajectory>
where
    R: Rng + ?Sized,
    F: FnMut(&PopulationState),
{
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    if sample_times.windows(2).any(|w| w[0] > w[1]) || sample_times.iter().any(|&t| !(0.0..=horizon).contains(&t)) {
        return Err(Error::InvalidArgument(
            "sample times must be ascending and inside [0, horizon]".into(),
        ));
    }
    let mut ctmc = Ctmc::new(spec, grid, n)?;
    let mut snapshots = Vec::with_capacity(sample_times.len());
    while let Some((elapsed, event)) = ctmc.table.next_event(rng) {
        let t_next = ctmc.state.time + elapsed;
        while snapshots.len() < sample_times.len() && sample_times[snapshots.len()] < t_next {
            snapshots.push(ctmc.state.counts.clone());
        }
        if t_next > horizon {
            break;
        }
        ctmc.table.apply(event, &mut ctmc.state)?;
        ctmc.state.time = t_next;
        on_jump(&ctmc.state);
    }
    while snapshots.len() < sample_times.len() {
        snapshots.push(ctmc.state.counts.clone());
    }
    Ok(Trajectory {
        grid: *grid,
        num_states: spec.num_states(),
        scale: n,
        times: sample_times.to_vec(),
        snapshots,
    })
}

/// Replica estimate of the fraction of the initial population found in
/// state `metric_state` at `horizon`.
#[allow(clippy::too_many_arguments)]
pub fn run_replicas(
    spec: &NetworkSpec,
    grid: &LatticeGrid,
    n: u64,
    horizon: f64,
    metric_state: usize,
    seed: u64,
    policy: &ReplicaPolicy,
    exec: Exec,
) -> Result<ReplicaReport> {
    if metric_state >= spec.num_states() {
        return Err(Error::InvalidArgument(format!(
            "metric state {metric_state} out of range"
        )));
    }
    run_replicas_with(policy, seed, exec, |rng| {
        simulate(spec, grid, n, horizon, &[0.0, horizon], rng)?.off_fraction(metric_state, horizon)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::RateExpr;
    use crate::field::Field;
    use crate::network::Reaction;
    use crate::rng::stream;
    use crate::scenario::{heat, onoff, Scenario, ONOFF_CAPACITY, ONOFF_LAMBDA};
    use crate::stats::ReplicaEstimate;
    use proptest::prelude::*;

    fn theta_onoff(mu: f64, v: f64) -> NetworkSpec {
        onoff(ONOFF_LAMBDA, ONOFF_CAPACITY, mu, v)
    }

    #[test]
    fn initial_totals_match_case_study_node_counts() {
        let g7 = LatticeGrid::new(7).unwrap();
        for (v, n, nodes) in [(10.0, 1, 56), (25.0, 1, 156), (50.0, 1, 320), (10.0, 2, 124)] {
            let s = build_initial_state(&theta_onoff(0.001, v), &g7, n);
            assert_eq!(s.total(), nodes, "V = {v}, N = {n}");
            assert_eq!(s.total_in(0), 0);
            assert!(s.boundary_is_empty(&g7));
        }
    }

    #[test]
    fn sub_unit_densities_floor_to_zero() {
        let spec = theta_onoff(0.001, 0.99);
        let s = build_initial_state(&spec, &LatticeGrid::new(9).unwrap(), 1);
        assert_eq!(s.total(), 0);
    }

    #[test]
    fn empty_state_is_absorbed() {
        let spec = theta_onoff(0.001, 0.5);
        let g = LatticeGrid::new(5).unwrap();
        let mut c = Ctmc::new(&spec, &g, 1).unwrap();
        let before = c.state().clone();
        assert_eq!(c.step(&mut stream(0, 0)).unwrap(), StepOutcome::Absorbed);
        assert_eq!(c.state(), &before);
    }

    #[test]
    fn channel_rates_follow_the_walk_definition() {
        let spec = theta_onoff(0.01, 10.0);
        let g = LatticeGrid::new(3).unwrap();
        let mut s = PopulationState::zeros(&g, 2);
        let r = Region::new(1, 1);
        s.set(g.index(r), 0, 5);
        s.set(g.index(r), 1, 3);
        let t = TransitionTable::new(&spec, &g, 1, &s).unwrap();
        let mu_k = 0.01 * 9.0;
        let ch = t.channels(r);
        let exit: Vec<_> = ch.iter().filter(|c| matches!(c.event, Event::Exit { .. })).collect();
        assert_eq!(exit.len(), 1);
        // (1,1) on K=3 touches the boundary on two sides
        assert!((exit[0].rate - 2.0 * mu_k * 5.0).abs() < 1e-12);
        let moves: Vec<_> = ch.iter().filter(|c| matches!(c.event, Event::Move { .. })).collect();
        assert_eq!(moves.len(), 2);
        for m in moves {
            assert!((m.rate - mu_k * 5.0).abs() < 1e-12);
        }
        let reactions: f64 = ch
            .iter()
            .filter(|c| matches!(c.event, Event::Reaction { .. }))
            .map(|c| c.rate)
            .sum();
        assert!((reactions - (0.25 * 5.0 + 2.857 * 1.0)).abs() < 1e-12);
        assert_eq!(t.region_rate(Region::new(0, 1)), 0.0);
    }

    #[test]
    fn immobile_states_have_no_movement_channels() {
        let spec = theta_onoff(0.0, 10.0);
        let g = LatticeGrid::new(7).unwrap();
        let c = Ctmc::new(&spec, &g, 1).unwrap();
        for r in g.interior() {
            assert!(c
                .table()
                .channels(r)
                .iter()
                .all(|ch| matches!(ch.event, Event::Reaction { .. })));
        }
    }

    #[test]
    fn equal_net_changes_are_aggregated() {
        let mut spec = theta_onoff(0.0, 10.0);
        spec.reactions.push(Reaction::new(
            vec![1, 0],
            vec![0, 1],
            RateExpr::mul(RateExpr::Lit(0.5), RateExpr::Density(0)),
        ));
        spec.validate().unwrap();
        let g = LatticeGrid::new(4).unwrap();
        let mut s = PopulationState::zeros(&g, 2);
        let r = Region::new(2, 2);
        s.set(g.index(r), 0, 4);
        s.set(g.index(r), 1, 2);
        let t = TransitionTable::new(&spec, &g, 1, &s).unwrap();
        let ch = t.channels(r);
        assert_eq!(ch.len(), 2);
        let sum = 0.25 * 4.0 + 0.5 * 4.0 + 2.857 * 1.0;
        assert!((t.region_rate(r) - sum).abs() < 1e-12);
    }

    #[test]
    fn consumption_below_stoichiometry_is_disabled() {
        // the p2p completion rate is positive at a2 = 0, but the reaction needs one seed
        let spec = Scenario::P2p.spec();
        let g = LatticeGrid::new(2).unwrap();
        let mut s = PopulationState::zeros(&g, 2);
        s.set(g.index(Region::new(1, 1)), 0, 3);
        let t = TransitionTable::new(&spec, &g, 1, &s).unwrap();
        assert!(t
            .channels(Region::new(1, 1))
            .iter()
            .all(|c| !matches!(c.event, Event::Reaction { group: 3, .. })));
    }

    #[test]
    fn pure_death_matches_exponential_decay() {
        // 1 A -> 0 with f = a; one interior region holding 100 nodes
        let spec = NetworkSpec {
            states: vec!["a".into()],
            reactions: vec![Reaction::new(vec![1], vec![0], RateExpr::Density(0))],
            params: vec![],
            constants: Default::default(),
            mu: vec![0.0],
            initial: vec![Field::theta(100.0)],
            horizon: 1.0,
        };
        spec.validate().unwrap();
        let g = LatticeGrid::new(2).unwrap();
        assert_eq!(build_initial_state(&spec, &g, 1).total(), 100);
        let est = ReplicaEstimate::from_samples((0..4000).map(|i| {
            let tr = simulate(&spec, &g, 1, 1.0, &[1.0], &mut stream(11, i)).unwrap();
            tr.total_at(0) as f64
        }));
        let exact = 100.0 * (-1.0f64).exp();
        // binomial(100, e^-1) standard error over 4000 replicas is ~0.076
        assert!((est.mean - exact).abs() < 4.0 * est.std_error(), "{est:?}");
        let var_exact = 100.0 * (-1.0f64).exp() * (1.0 - (-1.0f64).exp());
        assert!((est.variance() - var_exact).abs() < 0.1 * var_exact);
    }

    #[test]
    fn sampling_is_piecewise_constant() {
        let spec = theta_onoff(0.01, 10.0);
        let g = LatticeGrid::new(7).unwrap();
        let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.5).collect();
        let tr = simulate(&spec, &g, 1, 10.0, &times, &mut stream(5, 0)).unwrap();
        assert_eq!(tr.snapshots.len(), times.len());
        assert_eq!(tr.total_at(0), 56);
        assert!(simulate(&spec, &g, 1, 10.0, &[2.0, 1.0], &mut stream(5, 0)).is_err());
        assert!(simulate(&spec, &g, 1, 10.0, &[11.0], &mut stream(5, 0)).is_err());
    }

    #[test]
    fn off_fraction_edge_cases() {
        let g = LatticeGrid::new(7).unwrap();
        // nothing can react: every node stays on
        let spec = onoff(ONOFF_LAMBDA, 0.0, 0.0, 10.0);
        let tr = simulate(&spec, &g, 1, 10.0, &[0.0, 10.0], &mut stream(1, 0)).unwrap();
        assert_eq!(tr.off_fraction(0, 10.0).unwrap(), 0.0);
        // everyone switches off immediately and nobody moves or comes back
        let spec = onoff(0.0, 1e6, 0.0, 10.0);
        let tr = simulate(&spec, &g, 1, 10.0, &[0.0, 10.0], &mut stream(1, 0)).unwrap();
        assert_eq!(tr.off_fraction(0, 10.0).unwrap(), 1.0);
        let spec = onoff(ONOFF_LAMBDA, 1.0, 0.0, 0.5);
        let tr = simulate(&spec, &g, 1, 10.0, &[0.0, 10.0], &mut stream(1, 0)).unwrap();
        assert!(matches!(tr.off_fraction(0, 10.0), Err(Error::EmptyPopulation)));
    }

    #[test]
    fn replica_runs_are_seed_deterministic() {
        let spec = theta_onoff(0.01, 10.0);
        let g = LatticeGrid::new(7).unwrap();
        let p = ReplicaPolicy::default();
        let a = run_replicas(&spec, &g, 1, 10.0, 0, 42, &p, Exec::Sequential).unwrap();
        let b = run_replicas(&spec, &g, 1, 10.0, 0, 42, &p, Exec::Parallel).unwrap();
        assert_eq!(a, b);
        assert!(run_replicas(&spec, &g, 1, 10.0, 2, 42, &p, Exec::Sequential).is_err());
    }

    fn walk<F: FnMut(&PopulationState)>(spec: &NetworkSpec, k: usize, n: u64, seed: u64, f: F) {
        let g = LatticeGrid::new(k).unwrap();
        simulate_observed(spec, &g, n, spec.horizon, &[], &mut stream(seed, 0), f).unwrap();
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn counts_stay_nonnegative_and_boundary_empty(seed in any::<u64>(), v in 1.0f64..30.0, k in 2usize..9) {
            let spec = theta_onoff(0.01, v);
            let g = LatticeGrid::new(k).unwrap();
            let mut ok = true;
            walk(&spec, k, 1, seed, |s| ok &= s.boundary_is_empty(&g));
            prop_assert!(ok);
        }

        #[test]
        fn immobile_conservative_network_conserves_population(seed in any::<u64>(), v in 1.0f64..30.0, k in 2usize..9) {
            let spec = theta_onoff(0.0, v);
            let g = LatticeGrid::new(k).unwrap();
            let start = build_initial_state(&spec, &g, 2).total();
            let mut ok = true;
            walk(&spec, k, 2, seed, |s| ok &= s.total() == start);
            prop_assert!(ok);
        }

        #[test]
        fn diffusion_only_loses_nodes(seed in any::<u64>()) {
            let mut spec = heat(0.05);
            spec.initial = vec![Field::theta(20.0)];
            let mut last = u64::MAX;
            let mut ok = true;
            let mut reacted = false;
            walk(&spec, 6, 1, seed, |s| {
                ok &= s.total() <= last;
                last = s.total();
            });
            let g = LatticeGrid::new(6).unwrap();
            let c = Ctmc::new(&spec, &g, 1).unwrap();
            for r in g.interior() {
                reacted |= c.table().channels(r).iter().any(|ch| matches!(ch.event, Event::Reaction { .. }));
            }
            prop_assert!(ok);
            prop_assert!(!reacted);
        }

        #[test]
        fn identical_seeds_give_identical_paths(seed in any::<u64>()) {
            let spec = theta_onoff(0.01, 25.0);
            let g = LatticeGrid::new(7).unwrap();
            let times: Vec<f64> = (0..=10).map(|k| k as f64).collect();
            let a = simulate(&spec, &g, 1, 10.0, &times, &mut stream(seed, 3)).unwrap();
            let b = simulate(&spec, &g, 1, 10.0, &times, &mut stream(seed, 3)).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
