//! Metrics, audits, and scenario constructors over traces and schedules.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{sig_pow, ControllerSpec, InherentDynamics};
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, SwitchingSchedule, WeightBounds};
use crate::simulator::{step_slice, Scheme};
use crate::state::AgentState;
use crate::trace::Trace;

/// Per-component spread `max_i r_i - min_i r_i`.
pub fn disagreement(state: &AgentState) -> Vec<f64> {
    state.disagreement()
}

/// Per-component `ln(1 + spread)`; zero exactly when the spread is zero.
pub fn log_disagreement(state: &AgentState) -> Vec<f64> {
    state.disagreement().iter().map(|d| d.ln_1p()).collect()
}

/// Smallest recorded time from which the spread stays at or below `tol`
/// for the rest of the trace. `None` when the trace never settles.
pub fn settling_time(trace: &Trace, tol: f64) -> Option<f64> {
    debug_assert!(tol > 0.0);
    let g = trace.g_scalar();
    let mut idx = None;
    for (k, &v) in g.iter().enumerate().rev() {
        if v <= tol {
            idx = Some(k);
        } else {
            break;
        }
    }
    idx.map(|k| trace.times[k])
}

/// Empirical Lipschitz-constant audit: samples state pairs over a domain and
/// a time grid and compares the worst difference quotient against the
/// declared constant. A failure is a certificate; a pass is only evidence.
#[derive(Debug, Clone)]
pub struct LipschitzReport {
    pub gamma: f64,
    pub max_ratio: f64,
    pub worst: (f64, f64, f64),
    pub samples: usize,
    pub pass: bool,
}

pub fn lipschitz_audit(
    dynamics: &InherentDynamics,
    domain: (f64, f64),
    samples: usize,
    seed: u64,
) -> Result<LipschitzReport> {
    if samples < 2 {
        return Err(Error::InvalidParameter(
            "lipschitz audit needs at least 2 samples".into(),
        ));
    }
    if !(domain.1 > domain.0) {
        return Err(Error::InvalidParameter("empty audit domain".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t_grid: Vec<f64> = (0..=16).map(|k| k as f64 * 10.0 / 16.0).collect();
    let mut max_ratio: f64 = 0.0;
    let mut worst = (0.0, domain.0, domain.1);
    for _ in 0..samples {
        let a = rng.random_range(domain.0..domain.1);
        let b = rng.random_range(domain.0..domain.1);
        if (a - b).abs() < 1e-12 {
            continue;
        }
        for &t in &t_grid {
            let ratio = (dynamics.phi(t, a) - dynamics.phi(t, b)).abs() / (a - b).abs();
            if ratio > max_ratio {
                max_ratio = ratio;
                worst = (t, a, b);
            }
        }
    }
    let gamma = dynamics.gamma();
    Ok(LipschitzReport {
        gamma,
        max_ratio,
        worst,
        samples,
        pass: max_ratio <= gamma * (1.0 + 1e-9),
    })
}

/// Spanning-tree check per schedule segment.
pub fn spanning_tree_audit(schedule: &SwitchingSchedule) -> Vec<bool> {
    schedule
        .segments()
        .iter()
        .map(|s| s.graph.has_directed_spanning_tree())
        .collect()
}

/// Verdict summary for a finished run.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub settling_time: Option<f64>,
    pub settling_tol: f64,
    pub final_g: f64,
    /// Spread never increased (beyond 1e-12) between consecutive samples.
    pub g_monotone: bool,
    pub snap_time: Option<f64>,
    pub analytic_bound: Option<f64>,
    pub per_segment_spanning_tree: Vec<bool>,
}

pub fn convergence_report(
    trace: &Trace,
    schedule: &SwitchingSchedule,
    settling_tol: f64,
    analytic_bound: Option<f64>,
) -> ConvergenceReport {
    let g = trace.g_scalar();
    let monotone = g.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let snap_time = trace
        .events
        .iter()
        .find(|(_, k)| *k == crate::trace::EventKind::ConsensusSnap)
        .map(|(t, _)| *t);
    ConvergenceReport {
        settling_time: settling_time(trace, settling_tol),
        settling_tol,
        final_g: *g.last().unwrap_or(&f64::NAN),
        g_monotone: monotone,
        snap_time,
        analytic_bound,
        per_segment_spanning_tree: spanning_tree_audit(schedule),
    }
}

impl fmt::Display for ConvergenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "convergence report")?;
        match self.settling_time {
            Some(t) => writeln!(
                f,
                "  settling time (tol {:.1e}): {t:.6} s",
                self.settling_tol
            )?,
            None => writeln!(f, "  settling time (tol {:.1e}): none", self.settling_tol)?,
        }
        match self.snap_time {
            Some(t) => writeln!(f, "  consensus snap:            {t:.6} s")?,
            None => writeln!(f, "  consensus snap:            none")?,
        }
        writeln!(f, "  final spread:              {:.6e}", self.final_g)?;
        writeln!(f, "  spread monotone:           {}", self.g_monotone)?;
        if let Some(b) = self.analytic_bound {
            writeln!(f, "  analytic settling bound:   {b:.6} s")?;
        }
        writeln!(
            f,
            "  spanning tree per segment: {:?}",
            self.per_segment_spanning_tree
        )?;
        Ok(())
    }
}

/// Closed-form extinction time of the scalar gap equation `d' = -c * d^{a}`
/// from `d(0) = d0`: `d0^{1-a} / (c (1 - a))`.
pub fn gap_extinction_time(d0: f64, c: f64, alpha: f64) -> f64 {
    debug_assert!(d0 >= 0.0 && c > 0.0 && alpha > 0.0 && alpha < 1.0);
    d0.powf(1.0 - alpha) / (c * (1.0 - alpha))
}

/// Time for a single follower under the fixed-exponent rule to land within
/// `target_gap` of a stationary target `d0` away, found by bisection on the
/// simulated meeting time with the same scheme and step the full run uses.
pub fn bisect_meeting_duration(
    d0: f64,
    epsilon: f64,
    alpha_star: f64,
    dt: f64,
    scheme: Scheme,
    target_gap: f64,
) -> Result<f64> {
    let gap_after = |duration: f64| -> Result<f64> {
        // follower chases a target fixed at d0; gap d obeys d' = -eps d^{a}
        let mut y = vec![0.0_f64];
        let f = |_t: f64, v: &[f64]| vec![epsilon * sig_pow(d0 - v[0], alpha_star)];
        let n_full = ((duration / dt) - 1e-9).floor().max(0.0) as usize;
        for k in 0..n_full {
            y = step_slice(scheme, &f, k as f64 * dt, &y, dt)?;
        }
        let h = duration - n_full as f64 * dt;
        if h > 0.0 {
            y = step_slice(scheme, &f, n_full as f64 * dt, &y, h)?;
        }
        Ok(d0 - y[0])
    };
    let mut lo = 0.0;
    let mut hi = 1.5 * gap_extinction_time(d0, epsilon, alpha_star);
    if gap_after(hi)? > target_gap {
        return Err(Error::InvalidParameter(
            "bisection bracket does not reach the target gap".into(),
        ));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if gap_after(mid)? <= target_gap {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// The three-agent schedule on which the overall spread never moves even
/// though the union of the graphs over a cycle has a directed spanning tree.
#[derive(Debug, Clone)]
pub struct JointConnectivityCounterexample {
    pub schedule: SwitchingSchedule,
    pub r0: AgentState,
    pub controller: ControllerSpec,
    /// Duration of the opening segment (gap 1) and of each later segment
    /// (gap 2).
    pub first_duration: f64,
    pub phase_duration: f64,
    pub cycles: usize,
}

impl JointConnectivityCounterexample {
    /// Graphs of one repeating cycle, for union audits.
    pub fn cycle_graphs(&self) -> Vec<&DirectedGraph> {
        self.schedule.segments()[1..4]
            .iter()
            .map(|s| &s.graph)
            .collect()
    }
}

/// Default construction: unit gain, exponent 0.8, four cycles.
pub fn joint_connectivity_counterexample() -> Result<JointConnectivityCounterexample> {
    joint_connectivity_counterexample_with(1.0, 0.8, 4)
}

/// Builds the counterexample schedule for the fixed-exponent rule.
///
/// Starting from `r = [0, 1, 2]`, a single edge moves one agent at a time
/// between the extreme values. The first segment lets agent 2 (1-based) meet
/// agent 3; afterwards the single-edge graphs rotate so that the moving agent
/// always travels between the extremes while two resting agents pin the
/// maximum and minimum. Segment durations come from bisection on the
/// simulated pairwise meeting time.
pub fn joint_connectivity_counterexample_with(
    epsilon: f64,
    alpha_star: f64,
    cycles: usize,
) -> Result<JointConnectivityCounterexample> {
    if cycles == 0 {
        return Err(Error::InvalidParameter("need at least one cycle".into()));
    }
    let dt = 1e-3;
    let first_duration = bisect_meeting_duration(1.0, epsilon, alpha_star, dt, Scheme::Rk4, 1e-12)?;
    let phase_duration = bisect_meeting_duration(2.0, epsilon, alpha_star, dt, Scheme::Rk4, 1e-12)?;

    // 1-based a_23: agent 2 hears agent 3 -> edge (source 2, sink 1) 0-based
    let e23 = DirectedGraph::from_unit_edges(3, &[(2, 1)])?;
    // a_31: agent 3 hears agent 1
    let e31 = DirectedGraph::from_unit_edges(3, &[(0, 2)])?;
    // a_12: agent 1 hears agent 2
    let e12 = DirectedGraph::from_unit_edges(3, &[(1, 0)])?;

    let mut segments = vec![(first_duration, e23.clone())];
    for _ in 0..cycles {
        segments.push((phase_duration, e31.clone()));
        segments.push((phase_duration, e12.clone()));
        segments.push((phase_duration, e23.clone()));
    }
    let t_l = first_duration.min(phase_duration);
    let schedule = SwitchingSchedule::new(segments, false, t_l, WeightBounds::unit())?;
    Ok(JointConnectivityCounterexample {
        schedule,
        r0: AgentState::from_scalars(vec![0.0, 1.0, 2.0], 0.0)?,
        controller: ControllerSpec::pure_sig(epsilon, alpha_star)?,
        first_duration,
        phase_duration,
        cycles,
    })
}
