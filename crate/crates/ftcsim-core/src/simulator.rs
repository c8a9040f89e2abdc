//! Fixed-step integration of the closed loop over a switching schedule.
//!
//! Solutions are taken in the Caratheodory sense: the right-hand side is
//! discontinuous only at switch instants, so every integration step is kept
//! strictly inside one schedule segment (steps shorten to land exactly on
//! each switch time). Near consensus the right-hand side is Holder but not
//! Lipschitz and fixed steps would chatter; once the per-component spread
//! falls below `consensus_tol` all agents snap to the midpoint of max and
//! min, which realizes the exact finite-time agreement of the limit solution.

use crate::dynamics::{
    closed_loop_rhs, exponent_schedule, sig_pow, ControllerSpec, InherentDynamics,
};
use crate::error::{Error, Result};
use crate::graph::SwitchingSchedule;
use crate::state::{disagreement_of, AgentState};
use crate::trace::{EventKind, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Euler,
    Rk4,
}

/// Step size, horizon, and consensus snapping for a run.
#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub horizon: f64,
    pub consensus_tol: f64,
    pub scheme: Scheme,
    pub record_controls: bool,
}

impl IntegratorConfig {
    pub fn new(dt: f64, horizon: f64, consensus_tol: f64, scheme: Scheme) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {dt}"
            )));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if !(consensus_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "consensus_tol must be positive, got {consensus_tol}"
            )));
        }
        Ok(Self {
            dt,
            horizon,
            consensus_tol,
            scheme,
            record_controls: false,
        })
    }

    pub fn with_controls(mut self) -> Self {
        self.record_controls = true;
        self
    }
}

/// One explicit step of the scheme on a flat state vector.
pub(crate) fn step_slice<F>(scheme: Scheme, f: &F, t: f64, y: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    let out = match scheme {
        Scheme::Euler => {
            let k1 = f(t, y);
            y.iter()
                .zip(&k1)
                .map(|(yi, ki)| yi + h * ki)
                .collect::<Vec<f64>>()
        }
        Scheme::Rk4 => {
            let k1 = f(t, y);
            let y2: Vec<f64> = y
                .iter()
                .zip(&k1)
                .map(|(yi, ki)| yi + 0.5 * h * ki)
                .collect();
            let k2 = f(t + 0.5 * h, &y2);
            let y3: Vec<f64> = y
                .iter()
                .zip(&k2)
                .map(|(yi, ki)| yi + 0.5 * h * ki)
                .collect();
            let k3 = f(t + 0.5 * h, &y3);
            let y4: Vec<f64> = y.iter().zip(&k3).map(|(yi, ki)| yi + h * ki).collect();
            let k4 = f(t + h, &y4);
            y.iter()
                .enumerate()
                .map(|(i, yi)| yi + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect()
        }
    };
    if out.iter().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(Error::IntegrationBlowup { t: t + h })
    }
}

/// One explicit step of the chosen scheme. The step interval must not
/// contain a switch time; `simulate` enforces that for full runs.
pub fn step<F>(scheme: Scheme, rhs: F, state: &AgentState, dt: f64) -> Result<AgentState>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step size must be positive, got {dt}"
        )));
    }
    let y = step_slice(scheme, &rhs, state.t, state.values(), dt)?;
    AgentState::new(state.n(), state.m(), y, state.t + dt)
}

/// Walks `[t0, t1]` in full steps of `dt` plus one final partial step,
/// calling `on_step` with the absolute time after each step. `on_step` may
/// mutate the state (snapping).
pub(crate) fn integrate_span<F, C>(
    scheme: Scheme,
    f: &F,
    y: &mut Vec<f64>,
    t0: f64,
    t1: f64,
    dt: f64,
    mut on_step: C,
) -> Result<()>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
    C: FnMut(f64, &mut Vec<f64>),
{
    debug_assert!(t1 > t0);
    let span = t1 - t0;
    let n_full = ((span / dt) - 1e-9).floor().max(0.0) as usize;
    for k in 0..n_full {
        let t = t0 + k as f64 * dt;
        *y = step_slice(scheme, f, t, y, dt)?;
        on_step(t0 + (k + 1) as f64 * dt, y);
    }
    let t = t0 + n_full as f64 * dt;
    let h = t1 - t;
    if h > 0.0 {
        *y = step_slice(scheme, f, t, y, h)?;
        on_step(t1, y);
    }
    Ok(())
}

/// Window boundaries of a schedule over `[0, horizon]`: start, every switch
/// instant strictly inside, and the horizon.
pub(crate) fn schedule_windows(schedule: &SwitchingSchedule, horizon: f64) -> Vec<f64> {
    let mut bounds = vec![0.0];
    bounds.extend(schedule.switch_times_in(0.0, horizon));
    bounds.push(horizon);
    bounds
}

/// Integrates the closed loop over the schedule, recording every step.
///
/// Steps never straddle a switch instant. After the per-component spread
/// drops below `consensus_tol` the agents are snapped to their common
/// midpoint and evolve identically under the drift alone.
pub fn simulate(
    spec: &ControllerSpec,
    dynamics: &InherentDynamics,
    schedule: &SwitchingSchedule,
    r0: &AgentState,
    cfg: &IntegratorConfig,
) -> Result<Trace> {
    let (n, m) = (r0.n(), r0.m());
    if n != schedule.n() {
        return Err(Error::InvalidParameter(format!(
            "initial state has n = {n} but the schedule has n = {}",
            schedule.n()
        )));
    }
    if !r0.is_finite() {
        return Err(Error::InvalidParameter(
            "initial state must be finite".into(),
        ));
    }
    if cfg.dt > schedule.min_segment_duration() {
        return Err(Error::InvalidParameter(format!(
            "dt = {} exceeds the shortest schedule segment {}",
            cfg.dt,
            schedule.min_segment_duration()
        )));
    }
    if !schedule.repeat() && cfg.horizon > schedule.total_duration() {
        return Err(Error::OutOfHorizon {
            t: cfg.horizon,
            total: schedule.total_duration(),
        });
    }

    let mut trace = Trace {
        n,
        m,
        times: Vec::new(),
        states: Vec::new(),
        disagreement: Vec::new(),
        controls: cfg.record_controls.then(Vec::new),
        events: Vec::new(),
    };
    let mut y = r0.values().to_vec();
    let mut snapped = false;

    let record = |t: f64,
                  y: &mut Vec<f64>,
                  trace: &mut Trace,
                  graph: &crate::graph::DirectedGraph,
                  snapped: &mut bool| {
        let dis = disagreement_of(y, n, m);
        if !*snapped && dis.iter().all(|&d| d < cfg.consensus_tol) {
            for k in 0..m {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for i in 0..n {
                    lo = lo.min(y[i * m + k]);
                    hi = hi.max(y[i * m + k]);
                }
                let mid = 0.5 * (lo + hi);
                for i in 0..n {
                    y[i * m + k] = mid;
                }
            }
            *snapped = true;
            trace.events.push((t, EventKind::ConsensusSnap));
        }
        trace.times.push(t);
        trace.states.push(y.clone());
        trace.disagreement.push(disagreement_of(y, n, m));
        if let Some(controls) = trace.controls.as_mut() {
            let state = AgentState::new(n, m, y.clone(), t).expect("finite state");
            let mut u = vec![0.0; n * m];
            for i in 0..n {
                let ui = crate::dynamics::control_input(spec, graph, &state, i);
                u[i * m..(i + 1) * m].copy_from_slice(&ui);
            }
            controls.push(u);
        }
    };

    let bounds = schedule_windows(schedule, cfg.horizon);
    let first_graph = schedule.graph_at(0.0)?.clone();
    record(0.0, &mut y, &mut trace, &first_graph, &mut snapped);

    for w in 0..bounds.len() - 1 {
        let (start, end) = (bounds[w], bounds[w + 1]);
        let graph = schedule.graph_at(start)?.clone();
        if w > 0 {
            trace.events.push((start, EventKind::Switch));
        }
        let f = |t: f64, y: &[f64]| {
            let state = AgentState::new_unchecked(n, m, y.to_vec(), t);
            closed_loop_rhs(spec, dynamics, &graph, t, &state)
        };
        integrate_span(cfg.scheme, &f, &mut y, start, end, cfg.dt, |t, y| {
            record(t, y, &mut trace, &graph, &mut snapped)
        })?;
    }
    trace.events.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(trace)
}

/// The two worst-case chain systems the closed loop is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComparisonKind {
    /// Each agent is damped toward the largest state strictly below its own;
    /// the minimum holder drifts freely.
    MaxBelow,
    /// Each agent is damped toward the smallest state strictly above its own;
    /// the maximum holder drifts freely.
    MinAbove,
}

/// Parameters of the comparison dynamics.
#[derive(Debug, Clone, Copy)]
pub struct ComparisonParams {
    /// Inflated Lipschitz constant (gamma + epsilon1).
    pub gamma_hat: f64,
    /// Protocol gain.
    pub beta: f64,
    /// Weight lower bound; the damping coefficient is `beta * a_lower`.
    pub a_lower: f64,
    pub alpha_star: f64,
    /// States closer than this are treated as one agent from then on.
    pub merge_tol: f64,
}

impl ComparisonParams {
    pub fn new(gamma_hat: f64, beta: f64, a_lower: f64, alpha_star: f64) -> Result<Self> {
        if !(alpha_star > 0.0 && alpha_star < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha_star must lie in (0, 1), got {alpha_star}"
            )));
        }
        if !(gamma_hat >= 0.0 && beta >= 0.0 && a_lower > 0.0) {
            return Err(Error::InvalidParameter(
                "gamma_hat, beta must be nonnegative and a_lower positive".into(),
            ));
        }
        Ok(Self {
            gamma_hat,
            beta,
            a_lower,
            alpha_star,
            merge_tol: 1e-10,
        })
    }

    pub fn with_merge_tol(mut self, merge_tol: f64) -> Self {
        self.merge_tol = merge_tol;
        self
    }
}

/// Assigns a comparison kind to each time segment.
#[derive(Debug, Clone)]
pub struct SwitchScript {
    segments: Vec<(f64, ComparisonKind)>,
    repeat: bool,
    ends: Vec<f64>,
}

impl SwitchScript {
    pub fn new(segments: Vec<(f64, ComparisonKind)>, repeat: bool) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidParameter(
                "switch script has no segments".into(),
            ));
        }
        for (d, _) in &segments {
            if !(*d > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "script segment duration must be positive, got {d}"
                )));
            }
        }
        let mut ends = Vec::with_capacity(segments.len());
        let mut acc = 0.0;
        for (d, _) in &segments {
            acc += d;
            ends.push(acc);
        }
        Ok(Self {
            segments,
            repeat,
            ends,
        })
    }

    /// A script that holds one kind forever.
    pub fn constant(kind: ComparisonKind) -> Self {
        Self {
            segments: vec![(f64::MAX, kind)],
            repeat: false,
            ends: vec![f64::MAX],
        }
    }

    pub fn kind_at(&self, t: f64) -> ComparisonKind {
        let total = *self.ends.last().unwrap();
        let local = if self.repeat {
            t % total
        } else {
            t.min(total * (1.0 - f64::EPSILON))
        };
        let idx = self.ends.partition_point(|&end| end <= local);
        self.segments[idx.min(self.segments.len() - 1)].1
    }

    /// Script boundaries strictly inside `(t0, t1)`.
    pub fn boundaries_in(&self, t0: f64, t1: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let total = *self.ends.last().unwrap();
        if self.repeat {
            let mut cycle = (t0 / total).floor().max(0.0) - 1.0;
            loop {
                let base = cycle * total;
                if base > t1 {
                    break;
                }
                for &end in &self.ends {
                    let s = base + end;
                    if s > t0 && s < t1 {
                        out.push(s);
                    }
                }
                cycle += 1.0;
            }
        } else {
            for &end in &self.ends[..self.ends.len() - 1] {
                if end > t0 && end < t1 {
                    out.push(end);
                }
            }
        }
        out
    }
}

/// Distinct state levels plus the agents sitting on each level. Agents that
/// merge stay merged: they receive identical derivatives ever after.
#[derive(Debug, Clone)]
pub(crate) struct LevelState {
    pub values: Vec<f64>,
    pub members: Vec<Vec<usize>>,
}

impl LevelState {
    pub fn from_agents(xi: &[f64], merge_tol: f64) -> Self {
        let mut order: Vec<usize> = (0..xi.len()).collect();
        order.sort_by(|&a, &b| xi[a].total_cmp(&xi[b]));
        let mut values: Vec<f64> = Vec::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        for &agent in &order {
            let v = xi[agent];
            match values.last() {
                Some(&last) if v - last <= merge_tol => {
                    // weighted mean keeps the level at the member centroid
                    let k = values.len() - 1;
                    let w = members[k].len() as f64;
                    values[k] = (values[k] * w + v) / (w + 1.0);
                    members[k].push(agent);
                }
                _ => {
                    values.push(v);
                    members.push(vec![agent]);
                }
            }
        }
        Self { values, members }
    }

    /// Merges adjacent levels closer than `merge_tol` (also collapsing any
    /// tiny inversion a step may have produced).
    pub fn merge_pass(&mut self, merge_tol: f64) {
        let mut k = 0;
        while k + 1 < self.values.len() {
            if self.values[k + 1] - self.values[k] <= merge_tol {
                let w0 = self.members[k].len() as f64;
                let w1 = self.members[k + 1].len() as f64;
                self.values[k] = (self.values[k] * w0 + self.values[k + 1] * w1) / (w0 + w1);
                let moved = self.members.remove(k + 1);
                self.members[k].extend(moved);
                self.values.remove(k + 1);
            } else {
                k += 1;
            }
        }
    }

    /// Per-agent expansion of the level values.
    pub fn expand(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (lvl, members) in self.members.iter().enumerate() {
            for &a in members {
                out[a] = self.values[lvl];
            }
        }
        out
    }

    pub fn fully_merged(&self) -> bool {
        self.values.len() <= 1
    }
}

/// Level derivatives of the comparison dynamics.
pub(crate) fn comparison_rhs(
    levels: &[f64],
    kind: ComparisonKind,
    params: &ComparisonParams,
) -> Vec<f64> {
    let l = levels.len();
    let ba = params.beta * params.a_lower;
    (0..l)
        .map(|k| {
            let mut dv = params.gamma_hat * levels[k];
            let neighbor = match kind {
                ComparisonKind::MaxBelow => (k > 0).then(|| levels[k - 1]),
                ComparisonKind::MinAbove => (k + 1 < l).then(|| levels[k + 1]),
            };
            if let Some(nb) = neighbor {
                let d = levels[k] - nb;
                dv -= ba * sig_pow(d, exponent_schedule(d.abs(), params.alpha_star));
            }
            dv
        })
        .collect()
}

/// Integrates the comparison system under a kind script.
///
/// Pass `stop_on_full_merge` to end the trace at the sample where all agents
/// have coalesced (the spread is exactly zero from then on).
pub fn simulate_comparison(
    params: &ComparisonParams,
    script: &SwitchScript,
    xi0: &[f64],
    cfg: &IntegratorConfig,
    stop_on_full_merge: bool,
) -> Result<Trace> {
    if xi0.is_empty() || !xi0.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidParameter(
            "xi0 must be nonempty and finite".into(),
        ));
    }
    let n = xi0.len();
    let mut levels = LevelState::from_agents(xi0, params.merge_tol);

    let mut trace = Trace {
        n,
        m: 1,
        times: Vec::new(),
        states: Vec::new(),
        disagreement: Vec::new(),
        controls: None,
        events: Vec::new(),
    };
    let push = |t: f64, levels: &LevelState, trace: &mut Trace| {
        let expanded = levels.expand(n);
        let spread = if levels.fully_merged() {
            0.0
        } else {
            levels.values[levels.values.len() - 1] - levels.values[0]
        };
        trace.times.push(t);
        trace.states.push(expanded);
        trace.disagreement.push(vec![spread]);
    };
    push(0.0, &levels, &mut trace);

    let mut bounds = vec![0.0];
    bounds.extend(script.boundaries_in(0.0, cfg.horizon));
    bounds.push(cfg.horizon);

    'outer: for w in 0..bounds.len() - 1 {
        let (start, end) = (bounds[w], bounds[w + 1]);
        let kind = script.kind_at(start);
        if w > 0 {
            trace.events.push((start, EventKind::Switch));
        }
        let mut y = levels.values.clone();
        let span = end - start;
        let n_full = ((span / cfg.dt) - 1e-9).floor().max(0.0) as usize;
        for k in 0..=n_full {
            let t = start + k as f64 * cfg.dt;
            let h = if k < n_full { cfg.dt } else { end - t };
            if h <= 0.0 {
                break;
            }
            let f = |_t: f64, v: &[f64]| comparison_rhs(v, kind, params);
            y = step_slice(cfg.scheme, &f, t, &y, h)?;
            levels.values = y.clone();
            levels.merge_pass(params.merge_tol);
            y = levels.values.clone();
            let t_next = if k < n_full {
                start + (k + 1) as f64 * cfg.dt
            } else {
                end
            };
            push(t_next, &levels, &mut trace);
            if stop_on_full_merge && levels.fully_merged() {
                break 'outer;
            }
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{DirectedGraph, WeightBounds};

    fn single_graph_schedule(n: usize, horizon: f64) -> SwitchingSchedule {
        let edges: Vec<(usize, usize)> = (1..n).map(|i| (i, i - 1)).collect();
        let g = DirectedGraph::from_unit_edges(n, &edges).unwrap();
        SwitchingSchedule::new(vec![(horizon, g)], true, horizon, WeightBounds::unit()).unwrap()
    }

    #[test]
    fn step_identity_on_zero_rhs() {
        let state = AgentState::from_scalars(vec![1.0, -2.0], 0.0).unwrap();
        let next = step(Scheme::Rk4, |_, y| vec![0.0; y.len()], &state, 0.1).unwrap();
        assert_eq!(next.values(), state.values());
        assert_eq!(next.t, 0.1);
    }

    #[test]
    fn euler_step_constant_rhs() {
        let state = AgentState::from_scalars(vec![0.0], 0.0).unwrap();
        let next = step(Scheme::Euler, |_, y| vec![1.0; y.len()], &state, 0.1).unwrap();
        assert!((next.values()[0] - 0.1).abs() < 1e-16);
    }

    #[test]
    fn rk4_step_matches_exponential() {
        let state = AgentState::from_scalars(vec![1.0], 0.0).unwrap();
        let next = step(Scheme::Rk4, |_, y| y.to_vec(), &state, 0.1).unwrap();
        assert!((next.values()[0] - 0.1_f64.exp()).abs() <= 1e-7);
    }

    #[test]
    fn step_reports_blowup() {
        let state = AgentState::from_scalars(vec![1.0], 0.0).unwrap();
        let err = step(Scheme::Euler, |_, _| vec![f64::INFINITY], &state, 0.1);
        assert!(matches!(err, Err(Error::IntegrationBlowup { .. })));
    }

    #[test]
    fn consensus_start_stays_at_consensus() {
        let spec = ControllerSpec::variable_exponent(3.0, 0.8).unwrap();
        let dynamics = InherentDynamics::sine();
        let schedule = single_graph_schedule(3, 1.0);
        let r0 = AgentState::from_scalars(vec![0.7, 0.7, 0.7], 0.0).unwrap();
        let cfg = IntegratorConfig::new(1e-2, 2.0, 1e-9, Scheme::Rk4).unwrap();
        let trace = simulate(&spec, &dynamics, &schedule, &r0, &cfg).unwrap();
        assert!(trace.g_scalar().iter().all(|&g| g == 0.0));
        // all agents identical at every sample
        for s in &trace.states {
            assert_eq!(s[0], s[1]);
            assert_eq!(s[1], s[2]);
        }
        // snap event fires at t = 0 on a consensus start
        assert_eq!(trace.events[0], (0.0, EventKind::ConsensusSnap));
    }

    #[test]
    fn simulate_rejects_bad_config() {
        let spec = ControllerSpec::variable_exponent(3.0, 0.8).unwrap();
        let dynamics = InherentDynamics::zero();
        let schedule = single_graph_schedule(2, 0.5);
        let r0 = AgentState::from_scalars(vec![0.0, 1.0], 0.0).unwrap();
        // dt longer than the shortest segment
        let cfg = IntegratorConfig::new(0.6, 1.0, 1e-9, Scheme::Rk4).unwrap();
        assert!(simulate(&spec, &dynamics, &schedule, &r0, &cfg).is_err());
    }

    #[test]
    fn horizon_beyond_non_repeating_schedule_is_rejected() {
        let g = DirectedGraph::from_unit_edges(2, &[(0, 1)]).unwrap();
        let schedule =
            SwitchingSchedule::new(vec![(1.0, g)], false, 1.0, WeightBounds::unit()).unwrap();
        let spec = ControllerSpec::variable_exponent(1.0, 0.8).unwrap();
        let r0 = AgentState::from_scalars(vec![0.0, 1.0], 0.0).unwrap();
        let cfg = IntegratorConfig::new(1e-2, 2.0, 1e-9, Scheme::Rk4).unwrap();
        assert!(matches!(
            simulate(&spec, &InherentDynamics::zero(), &schedule, &r0, &cfg),
            Err(Error::OutOfHorizon { .. })
        ));
    }

    #[test]
    fn steps_land_exactly_on_switch_times() {
        let g1 = DirectedGraph::from_unit_edges(2, &[(0, 1)]).unwrap();
        let g2 = DirectedGraph::from_unit_edges(2, &[(1, 0)]).unwrap();
        let schedule = SwitchingSchedule::new(
            vec![(0.25, g1), (0.25, g2)],
            true,
            0.25,
            WeightBounds::unit(),
        )
        .unwrap();
        let spec = ControllerSpec::variable_exponent(1.0, 0.8).unwrap();
        let r0 = AgentState::from_scalars(vec![0.0, 2.0], 0.0).unwrap();
        // dt that does not divide 0.25
        let cfg = IntegratorConfig::new(0.06, 1.0, 1e-12, Scheme::Rk4).unwrap();
        let trace = simulate(&spec, &InherentDynamics::zero(), &schedule, &r0, &cfg).unwrap();
        for b in [0.25, 0.5, 0.75] {
            assert!(trace.times.contains(&b), "missing boundary sample {b}");
        }
        // no recorded step straddles a boundary
        let switches: Vec<f64> = trace
            .events
            .iter()
            .filter(|(_, k)| *k == EventKind::Switch)
            .map(|(t, _)| *t)
            .collect();
        assert_eq!(switches, vec![0.25, 0.5, 0.75]);
        for w in trace.times.windows(2) {
            for &s in &switches {
                assert!(!(w[0] < s && s < w[1]), "step {w:?} straddles switch {s}");
            }
        }
    }

    #[test]
    fn snap_event_fires_once_and_spread_stays_zero() {
        let spec = ControllerSpec::pure_sig(1.0, 0.8).unwrap();
        let dynamics = InherentDynamics::zero();
        let schedule = single_graph_schedule(2, 1.0);
        // mutual edges so the pair closes fast
        let g = DirectedGraph::from_unit_edges(2, &[(0, 1), (1, 0)]).unwrap();
        let schedule2 =
            SwitchingSchedule::new(vec![(1.0, g)], true, 1.0, WeightBounds::unit()).unwrap();
        let _ = schedule;
        let r0 = AgentState::from_scalars(vec![0.0, 0.4], 0.0).unwrap();
        let cfg = IntegratorConfig::new(1e-3, 4.0, 1e-9, Scheme::Rk4).unwrap();
        let trace = simulate(&spec, &dynamics, &schedule2, &r0, &cfg).unwrap();
        let snaps: Vec<_> = trace
            .events
            .iter()
            .filter(|(_, k)| *k == EventKind::ConsensusSnap)
            .collect();
        assert_eq!(snaps.len(), 1);
        let snap_t = snaps[0].0;
        for (idx, &t) in trace.times.iter().enumerate() {
            if t >= snap_t {
                assert_eq!(trace.disagreement[idx][0], 0.0);
            }
        }
    }

    #[test]
    fn recorded_controls_match_the_controller() {
        let g = DirectedGraph::from_unit_edges(2, &[(0, 1), (1, 0)]).unwrap();
        let schedule =
            SwitchingSchedule::new(vec![(1.0, g.clone())], true, 1.0, WeightBounds::unit())
                .unwrap();
        let spec = ControllerSpec::variable_exponent(1.0, 0.8).unwrap();
        let r0 = AgentState::from_scalars(vec![0.0, 2.0], 0.0).unwrap();
        let cfg = IntegratorConfig::new(1e-2, 0.1, 1e-9, Scheme::Rk4)
            .unwrap()
            .with_controls();
        let trace = simulate(&spec, &InherentDynamics::zero(), &schedule, &r0, &cfg).unwrap();
        let controls = trace.controls.as_ref().unwrap();
        assert_eq!(controls.len(), trace.times.len());
        // gap 2 with unit gain: u = [2, -2] at the start
        assert_eq!(controls[0], vec![2.0, -2.0]);
    }

    #[test]
    fn vector_states_snap_per_component() {
        let g = DirectedGraph::from_unit_edges(2, &[(0, 1), (1, 0)]).unwrap();
        let schedule =
            SwitchingSchedule::new(vec![(1.0, g)], true, 1.0, WeightBounds::unit()).unwrap();
        let spec = ControllerSpec::pure_sig(1.0, 0.8).unwrap();
        let r0 = AgentState::new(2, 2, vec![0.0, 1.0, 0.5, 0.2], 0.0).unwrap();
        let cfg = IntegratorConfig::new(1e-3, 5.0, 1e-9, Scheme::Rk4).unwrap();
        let trace = simulate(&spec, &InherentDynamics::zero(), &schedule, &r0, &cfg).unwrap();
        assert_eq!(trace.m, 2);
        assert_eq!(trace.disagreement[0], vec![0.5, 0.8]);
        let final_d = trace.disagreement.last().unwrap();
        assert_eq!(final_d, &vec![0.0, 0.0]);
        assert!(trace
            .events
            .iter()
            .any(|(_, k)| *k == EventKind::ConsensusSnap));
    }

    #[test]
    fn comparison_spread_decreases_from_even_chain_under_gain_condition() {
        // beta = gamma_hat / (a q_2) + eps2 with q_2 = 1/2
        let gamma_hat = 0.5;
        let beta = gamma_hat / 0.5 + 0.5;
        let params = ComparisonParams::new(gamma_hat, beta, 1.0, 0.8).unwrap();
        let script = SwitchScript::new(
            vec![
                (0.5, ComparisonKind::MaxBelow),
                (0.5, ComparisonKind::MinAbove),
            ],
            true,
        )
        .unwrap();
        let cfg = IntegratorConfig::new(1e-3, 30.0, 1e-9, Scheme::Rk4).unwrap();
        let trace = simulate_comparison(&params, &script, &[0.0, 1.0, 2.0], &cfg, true).unwrap();
        let spread: Vec<f64> = trace.disagreement.iter().map(|d| d[0]).collect();
        for w in spread.windows(2) {
            if w[0] > 1e-8 {
                assert!(w[1] < w[0], "spread rose from {} to {}", w[0], w[1]);
            }
        }
        assert_eq!(*spread.last().unwrap(), 0.0);
    }

    #[test]
    fn comparison_two_agent_derivatives() {
        // xi = [0, 1], gamma_hat 1, beta*a 3: bottom drifts at 0, top at -2
        let params = ComparisonParams::new(1.0, 3.0, 1.0, 0.8).unwrap();
        let rhs = comparison_rhs(&[0.0, 1.0], ComparisonKind::MaxBelow, &params);
        assert_eq!(rhs[0], 0.0);
        assert_eq!(rhs[1], 1.0 - 3.0);
    }

    #[test]
    fn comparison_equal_states_share_derivative() {
        let params = ComparisonParams::new(0.7, 3.0, 1.0, 0.8).unwrap();
        let levels = LevelState::from_agents(&[2.0, 2.0, 2.0], params.merge_tol);
        assert_eq!(levels.values.len(), 1);
        let rhs = comparison_rhs(&levels.values, ComparisonKind::MaxBelow, &params);
        assert_eq!(rhs, vec![0.7 * 2.0]);
    }

    #[test]
    fn comparison_min_above_mirrors_max_below() {
        let params = ComparisonParams::new(0.0, 2.0, 1.0, 0.5).unwrap();
        let down = comparison_rhs(&[0.0, 1.0], ComparisonKind::MaxBelow, &params);
        let up = comparison_rhs(&[0.0, 1.0], ComparisonKind::MinAbove, &params);
        // MaxBelow damps the top toward the bottom; MinAbove lifts the bottom
        assert_eq!(down, vec![0.0, -2.0]);
        assert_eq!(up, vec![2.0, 0.0]);
    }

    #[test]
    fn comparison_run_merges_and_stops() {
        let params = ComparisonParams::new(0.0, 2.0, 1.0, 0.8).unwrap();
        let script = SwitchScript::constant(ComparisonKind::MaxBelow);
        let cfg = IntegratorConfig::new(1e-3, 30.0, 1e-9, Scheme::Rk4).unwrap();
        let trace = simulate_comparison(&params, &script, &[0.0, 0.5, 1.5], &cfg, true).unwrap();
        let last = trace.disagreement.last().unwrap()[0];
        assert_eq!(last, 0.0);
        assert!(
            trace.times.last().unwrap() < &30.0,
            "should stop early on full merge"
        );
    }
}
