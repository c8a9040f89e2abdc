//! Lyapunov accounting for the comparison systems and the analytic
//! settling-time bound, plus the trajectory-dominance audit.

use crate::error::{Error, Result};
use crate::graph::SwitchingSchedule;
use crate::simulator::{
    comparison_rhs, step_slice, ComparisonKind, ComparisonParams, IntegratorConfig, LevelState,
};
use crate::trace::Trace;

/// Gap energy `sum_i integral_0^{d_i} tau^{alpha(|tau|)} dtau` over the
/// ascending sorted vector's adjacent gaps. Piecewise closed form per gap:
/// `d^{1+a*}/(1+a*)` for `d <= 1`, else `1/(1+a*) + (d^2 - 1)/2`.
pub fn lyapunov_g_tilde(xi_sorted: &[f64], alpha_star: f64) -> Result<f64> {
    check_sorted(xi_sorted)?;
    check_alpha(alpha_star)?;
    let mut sum = 0.0;
    for w in xi_sorted.windows(2) {
        sum += gap_integral(w[1] - w[0], alpha_star);
    }
    Ok(sum)
}

/// The sub-unit-gap form `(1/(1+a*)) * sum (xi_{i+1} - xi_i)^{1+a*}`;
/// equals [`lyapunov_g_tilde`] whenever every gap is below one.
pub fn lyapunov_g_tilde_small(xi_sorted: &[f64], alpha_star: f64) -> Result<f64> {
    check_sorted(xi_sorted)?;
    check_alpha(alpha_star)?;
    let mut sum = 0.0;
    for w in xi_sorted.windows(2) {
        let d = w[1] - w[0];
        if d >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "small-gap form requires every gap below 1, found {d}"
            )));
        }
        sum += d.powf(1.0 + alpha_star);
    }
    Ok(sum / (1.0 + alpha_star))
}

fn gap_integral(d: f64, alpha_star: f64) -> f64 {
    if d <= 1.0 {
        d.powf(1.0 + alpha_star) / (1.0 + alpha_star)
    } else {
        1.0 / (1.0 + alpha_star) + (d * d - 1.0) / 2.0
    }
}

fn check_sorted(xi: &[f64]) -> Result<()> {
    if xi.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter(
            "vector must be sorted ascending".into(),
        ));
    }
    Ok(())
}

fn check_alpha(alpha_star: f64) -> Result<()> {
    if !(alpha_star > 0.0 && alpha_star < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha_star must lie in (0, 1), got {alpha_star}"
        )));
    }
    Ok(())
}

/// Inputs of the scalar majorant `mu' = -c * mu^{2a*/(1+a*)}` anchored at the
/// first time all gaps are below one.
#[derive(Debug, Clone, Copy)]
pub struct BoundParams {
    pub alpha_star: f64,
    pub a_lower: f64,
    /// q_{n-1} for the agent count in play.
    pub q: f64,
    pub epsilon2: f64,
    /// Gap energy at the anchor time.
    pub g_tilde_at_tbar: f64,
}

impl BoundParams {
    pub fn new(
        alpha_star: f64,
        a_lower: f64,
        q: f64,
        epsilon2: f64,
        g_tilde_at_tbar: f64,
    ) -> Result<Self> {
        check_alpha(alpha_star)?;
        for (name, v) in [("a_lower", a_lower), ("q", q), ("epsilon2", epsilon2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(g_tilde_at_tbar >= 0.0) {
            return Err(Error::InvalidParameter(
                "g_tilde_at_tbar must be nonnegative".into(),
            ));
        }
        Ok(Self {
            alpha_star,
            a_lower,
            q,
            epsilon2,
            g_tilde_at_tbar,
        })
    }

    /// Decay coefficient `a_lower * q * epsilon2 * (1+a*)^{2a*/(1+a*)}`.
    pub fn coefficient(&self) -> f64 {
        let p = 2.0 * self.alpha_star / (1.0 + self.alpha_star);
        self.a_lower * self.q * self.epsilon2 * (1.0 + self.alpha_star).powf(p)
    }
}

/// Closed-form solution of the majorant at `t - tbar`, clamped to zero after
/// extinction: `mu^{e} = mu0^{e} - e * c * dt` with `e = (1-a*)/(1+a*)`.
pub fn mu_trajectory(p: &BoundParams, t_minus_tbar: f64) -> f64 {
    debug_assert!(t_minus_tbar >= 0.0);
    if t_minus_tbar == 0.0 {
        return p.g_tilde_at_tbar;
    }
    let e = (1.0 - p.alpha_star) / (1.0 + p.alpha_star);
    let base = p.g_tilde_at_tbar.powf(e) - e * p.coefficient() * t_minus_tbar;
    if base <= 0.0 {
        0.0
    } else {
        base.powf(1.0 / e)
    }
}

/// Extinction time of the majorant:
/// `((1+a*)/(1-a*)) * G~(tbar)^{(1-a*)/(1+a*)} / c`.
pub fn settling_bound(p: &BoundParams) -> f64 {
    let e = (1.0 - p.alpha_star) / (1.0 + p.alpha_star);
    p.g_tilde_at_tbar.powf(e) / (e * p.coefficient())
}

/// Gap energy along a trace (each sample sorted first). Requires m = 1.
pub fn g_tilde_series(trace: &Trace, alpha_star: f64) -> Result<Vec<f64>> {
    if trace.m != 1 {
        return Err(Error::InvalidParameter(
            "gap energy is defined for m = 1 traces".into(),
        ));
    }
    trace
        .states
        .iter()
        .map(|s| {
            let mut sorted = s.clone();
            sorted.sort_by(f64::total_cmp);
            lyapunov_g_tilde(&sorted, alpha_star)
        })
        .collect()
}

/// First sample index from which the largest adjacent gap stays below
/// `1 - 1e-9` for the rest of the trace.
pub fn find_tbar(trace: &Trace) -> Option<usize> {
    let max_gap: Vec<f64> = trace
        .states
        .iter()
        .map(|s| {
            let mut sorted = s.clone();
            sorted.sort_by(f64::total_cmp);
            sorted.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
        })
        .collect();
    let mut idx = None;
    for (k, &g) in max_gap.iter().enumerate().rev() {
        if g < 1.0 - 1e-9 {
            idx = Some(k);
        } else {
            break;
        }
    }
    idx
}

/// One sample where the primary spread exceeded the comparison spread.
#[derive(Debug, Clone, Copy)]
pub struct DominanceViolation {
    pub t: f64,
    pub g: f64,
    pub f: f64,
}

/// Result of comparing `G(r(t))` against `F(xi(t))` sample by sample.
#[derive(Debug, Clone)]
pub struct DominanceReport {
    pub tol: f64,
    pub samples: usize,
    pub violations: Vec<DominanceViolation>,
}

impl DominanceReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Compares the primary trace's spread against the comparison trace's spread
/// on a shared time grid, reporting every sample with `G > F + tol`.
pub fn dominance_audit(primary: &Trace, comparison: &Trace, tol: f64) -> Result<DominanceReport> {
    if primary.m != 1 {
        return Err(Error::GridMismatch("primary trace must have m = 1".into()));
    }
    let len = primary.len().min(comparison.len());
    if len == 0 {
        return Err(Error::GridMismatch("empty trace".into()));
    }
    for k in 0..len {
        if (primary.times[k] - comparison.times[k]).abs() > 1e-12 {
            return Err(Error::GridMismatch(format!(
                "sample {k}: t = {} vs {}",
                primary.times[k], comparison.times[k]
            )));
        }
    }
    // a comparison trace may end early once fully merged; spread is zero after
    let mut violations = Vec::new();
    for k in 0..primary.len() {
        let g = primary.disagreement[k][0];
        let f = if k < comparison.len() {
            comparison.disagreement[k][0]
        } else {
            0.0
        };
        if g > f + tol {
            violations.push(DominanceViolation {
                t: primary.times[k],
                g,
                f,
            });
        }
    }
    Ok(DominanceReport {
        tol,
        samples: primary.len(),
        violations,
    })
}

/// How the comparison state is re-tied to the primary trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReanchorMode {
    /// One run from `xi(0) = r(0)`.
    None,
    /// Reset `xi = r` at every schedule switch.
    Switches,
    /// Reset `xi = r` at every recorded sample (checks the one-step
    /// derivative ordering along the whole run).
    EveryStep,
}

/// How the comparison kind is chosen per schedule window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KindPolicy {
    Fixed(ComparisonKind),
    /// Damp toward the neighbor below when some maximum holder has
    /// in-neighbors in the active graph, otherwise toward the neighbor above.
    Auto,
}

/// Runs the comparison system alongside a recorded primary trace, on the
/// primary's own time grid, and returns the comparison trace.
pub fn comparison_run(
    primary: &Trace,
    schedule: &SwitchingSchedule,
    params: &ComparisonParams,
    cfg: &IntegratorConfig,
    mode: ReanchorMode,
    policy: KindPolicy,
) -> Result<Trace> {
    if primary.m != 1 {
        return Err(Error::InvalidParameter(
            "comparison runs require m = 1".into(),
        ));
    }
    let n = primary.n;
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
        let spread = if levels.fully_merged() {
            0.0
        } else {
            levels.values[levels.values.len() - 1] - levels.values[0]
        };
        trace.times.push(t);
        trace.states.push(levels.expand(n));
        trace.disagreement.push(vec![spread]);
    };

    let kind_for = |t: f64, state: &[f64]| -> Result<ComparisonKind> {
        Ok(match policy {
            KindPolicy::Fixed(kind) => kind,
            KindPolicy::Auto => {
                let g = schedule.graph_at(t)?;
                let mx = state.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let max_has_neighbors = state
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v >= mx - 1e-15)
                    .any(|(i, _)| !g.in_neighbors(i).is_empty());
                if max_has_neighbors {
                    ComparisonKind::MaxBelow
                } else {
                    ComparisonKind::MinAbove
                }
            }
        })
    };

    let mut levels = LevelState::from_agents(&primary.states[0], params.merge_tol);
    push(primary.times[0], &levels, &mut trace);

    let switch_times = schedule.switch_times_in(0.0, *primary.times.last().unwrap());
    let mut kind = kind_for(primary.times[0], &primary.states[0])?;

    for k in 0..primary.len() - 1 {
        let (t0, t1) = (primary.times[k], primary.times[k + 1]);
        let at_switch = switch_times.contains(&t0);
        if at_switch {
            kind = kind_for(t0, &primary.states[k])?;
            if mode == ReanchorMode::Switches {
                levels = LevelState::from_agents(&primary.states[k], params.merge_tol);
            }
        }
        if mode == ReanchorMode::EveryStep {
            levels = LevelState::from_agents(&primary.states[k], params.merge_tol);
            kind = kind_for(t0, &primary.states[k])?;
        }
        let f = |_t: f64, v: &[f64]| comparison_rhs(v, kind, params);
        levels.values = step_slice(cfg.scheme, &f, t0, &levels.values, t1 - t0)?;
        levels.merge_pass(params.merge_tol);
        push(t1, &levels, &mut trace);
    }
    Ok(trace)
}
