//! Subcommand implementations. Each writes its artifacts under an output
//! directory and returns a summary the binary prints; rerunning a command on
//! the same config yields byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ftcsim_core::analysis::{
    convergence_report, joint_connectivity_counterexample_with, lipschitz_audit,
    spanning_tree_audit, ConvergenceReport, LipschitzReport,
};
use ftcsim_core::comparison::{
    comparison_run, dominance_audit, find_tbar, g_tilde_series, mu_trajectory, settling_bound,
    BoundParams, DominanceReport,
};
use ftcsim_core::dynamics::{ControllerSpec, InherentDynamics};
use ftcsim_core::gains::{check_gain, q_n, GainCertificate, Slack};
use ftcsim_core::graph::DirectedGraph;
use ftcsim_core::simulator::simulate;
use ftcsim_core::trace::{fmt_f64, EventKind, Trace};

use crate::config::{load_scenario, Scenario};
use crate::error::CliError;

pub struct SimulateOutput {
    pub trace: Trace,
    pub report: ConvergenceReport,
    pub certificate: GainCertificate,
    pub lipschitz: Option<LipschitzReport>,
    pub trace_path: PathBuf,
    pub report_text: String,
}

/// Runs the scenario, writing `trace.csv`, `report.txt`, and
/// `certificate.txt` under `out`.
pub fn run_simulate(
    config: &Path,
    out: &Path,
    seed_override: Option<u64>,
) -> Result<SimulateOutput, CliError> {
    let scenario = load_scenario(config)?;
    let seed = seed_override.unwrap_or(scenario.seed);
    std::fs::create_dir_all(out)?;

    let trace = simulate(
        &scenario.controller,
        &scenario.dynamics,
        &scenario.schedule,
        &scenario.initial,
        &scenario.integrator,
    )?;
    let report = convergence_report(&trace, &scenario.schedule, scenario.settling_tol, None);
    let certificate = check_gain(
        &scenario.controller,
        &scenario.dynamics,
        &scenario.schedule,
        Slack::default(),
    )?;
    let lipschitz = scenario
        .lipschitz_audit
        .then(|| {
            lipschitz_audit(
                &scenario.dynamics,
                scenario.lipschitz_domain,
                scenario.lipschitz_samples,
                seed,
            )
        })
        .transpose()?;

    let trace_path = out.join("trace.csv");
    std::fs::write(&trace_path, trace.to_csv())?;
    std::fs::write(out.join("certificate.txt"), certificate.to_string())?;

    let mut text = report.to_string();
    let _ = writeln!(text, "{}", per_window_spread(&trace));
    if let Some(audit) = &lipschitz {
        let _ = writeln!(
            text,
            "lipschitz audit: max ratio {:.6} vs gamma {} -> {}",
            audit.max_ratio,
            audit.gamma,
            if audit.pass { "pass" } else { "FAIL" }
        );
    }
    std::fs::write(out.join("report.txt"), &text)?;

    Ok(SimulateOutput {
        trace,
        report,
        certificate,
        lipschitz,
        trace_path,
        report_text: text,
    })
}

/// Largest spread inside each inter-switch window.
fn per_window_spread(trace: &Trace) -> String {
    let mut bounds = vec![trace.times[0]];
    bounds.extend(
        trace
            .events
            .iter()
            .filter(|(_, k)| *k == EventKind::Switch)
            .map(|(t, _)| *t),
    );
    bounds.push(*trace.times.last().unwrap());
    let g = trace.g_scalar();
    let mut text = String::from("max spread per window:");
    for w in bounds.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let peak = trace
            .times
            .iter()
            .zip(&g)
            .filter(|(t, _)| **t >= lo && **t <= hi)
            .map(|(_, v)| *v)
            .fold(f64::NEG_INFINITY, f64::max);
        let _ = write!(text, "\n  [{lo:.4}, {hi:.4}] -> {peak:.6e}");
    }
    text
}

/// Loads the scenario and evaluates the gain condition.
pub fn run_check_gains(config: &Path) -> Result<GainCertificate, CliError> {
    let scenario = load_scenario(config)?;
    Ok(check_gain(
        &scenario.controller,
        &scenario.dynamics,
        &scenario.schedule,
        Slack::default(),
    )?)
}

pub struct CompareOutput {
    pub dominance: DominanceReport,
    pub tbar: Option<f64>,
    pub settling_bound: Option<f64>,
    /// Gap energy never increased between consecutive samples inside one
    /// script window.
    pub g_tilde_monotone: bool,
    pub report_text: String,
}

/// Runs the primary and comparison systems on a shared grid, audits
/// dominance, and writes the gap-energy curve with its analytic majorant.
pub fn run_compare(config: &Path, out: &Path) -> Result<CompareOutput, CliError> {
    let scenario = load_scenario(config)?;
    let setup = scenario
        .comparison
        .clone()
        .ok_or_else(|| CliError::Usage("config has no [comparison] section".into()))?;
    if scenario.m != 1 {
        return Err(CliError::Usage(
            "compare requires one-dimensional agents".into(),
        ));
    }
    std::fs::create_dir_all(out)?;

    let primary = simulate(
        &scenario.controller,
        &scenario.dynamics,
        &scenario.schedule,
        &scenario.initial,
        &scenario.integrator,
    )?;
    let comparison = comparison_run(
        &primary,
        &scenario.schedule,
        &setup.params,
        &scenario.integrator,
        setup.reanchor,
        setup.policy,
    )?;
    let dominance = dominance_audit(&primary, &comparison, setup.dominance_tol)?;

    let alpha_star = setup.params.alpha_star;
    let g_tilde = g_tilde_series(&comparison, alpha_star)?;
    let tbar_idx = find_tbar(&comparison);
    let bound_params = match tbar_idx {
        Some(idx) if scenario.n >= 2 => Some(BoundParams::new(
            alpha_star,
            scenario.schedule.bounds().lower(),
            q_n(scenario.n - 1)?,
            setup.epsilon2,
            g_tilde[idx],
        )?),
        _ => None,
    };
    let tbar = tbar_idx.map(|idx| comparison.times[idx]);
    let bound = bound_params.as_ref().map(settling_bound);

    // gap-energy curve with the majorant anchored at tbar
    let mut curve = String::from("t,g_tilde,mu\n");
    for (k, &t) in comparison.times.iter().enumerate() {
        let mu = match (tbar, &bound_params) {
            (Some(tb), Some(p)) if t >= tb => fmt_f64(mu_trajectory(p, t - tb)),
            _ => String::new(),
        };
        let _ = writeln!(curve, "{},{},{mu}", fmt_f64(t), fmt_f64(g_tilde[k]));
    }

    let switch_times: Vec<f64> = comparison
        .events
        .iter()
        .filter(|(_, k)| *k == EventKind::Switch)
        .map(|(t, _)| *t)
        .collect();
    let g_tilde_monotone = comparison
        .times
        .windows(2)
        .zip(g_tilde.windows(2))
        .filter(|(tw, _)| !switch_times.iter().any(|&s| tw[0] < s && s < tw[1]))
        .all(|(_, gw)| gw[1] <= gw[0] + 1e-8);

    let mut text = String::new();
    let _ = writeln!(text, "dominance audit (tol {:.1e})", dominance.tol);
    let _ = writeln!(text, "  samples:    {}", dominance.samples);
    let _ = writeln!(text, "  violations: {}", dominance.violations.len());
    for v in dominance.violations.iter().take(20) {
        let _ = writeln!(
            text,
            "    t = {:.6}: G = {:.6e} > F = {:.6e}",
            v.t, v.g, v.f
        );
    }
    if dominance.violations.len() > 20 {
        let _ = writeln!(text, "    ... {} more", dominance.violations.len() - 20);
    }
    match tbar {
        Some(tb) => {
            let _ = writeln!(text, "all gaps below one from: {tb:.6} s");
        }
        None => {
            let _ = writeln!(text, "all gaps below one from: never");
        }
    }
    if let Some(b) = bound {
        let _ = writeln!(text, "analytic settling bound:  {b:.6} s past that time");
    }
    let _ = writeln!(
        text,
        "gap energy monotone between switches: {g_tilde_monotone}"
    );

    let mut violations_csv = String::from("t,G,F\n");
    for v in &dominance.violations {
        let _ = writeln!(
            violations_csv,
            "{},{},{}",
            fmt_f64(v.t),
            fmt_f64(v.g),
            fmt_f64(v.f)
        );
    }

    std::fs::write(out.join("primary_trace.csv"), primary.to_csv())?;
    std::fs::write(out.join("comparison_trace.csv"), comparison.to_csv())?;
    std::fs::write(out.join("gap_energy.csv"), curve)?;
    std::fs::write(out.join("violations.csv"), violations_csv)?;
    std::fs::write(out.join("dominance.txt"), &text)?;

    Ok(CompareOutput {
        dominance,
        tbar,
        settling_bound: bound,
        g_tilde_monotone,
        report_text: text,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Beta,
    K,
    AlphaStar,
    Dt,
}

impl std::str::FromStr for SweepParam {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "beta" => Ok(Self::Beta),
            "k" => Ok(Self::K),
            "alpha_star" => Ok(Self::AlphaStar),
            "dt" => Ok(Self::Dt),
            other => Err(CliError::Usage(format!(
                "unknown sweep parameter {other:?}; expected beta, k, alpha_star, or dt"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub settling_time: Option<f64>,
    pub snap_time: Option<f64>,
    pub final_g: f64,
}

fn patched_scenario(base: &Scenario, param: SweepParam, value: f64) -> Result<Scenario, CliError> {
    let mut scenario = base.clone();
    match param {
        SweepParam::Dt => {
            if !(value > 0.0) {
                return Err(CliError::Usage(format!(
                    "dt value {value} must be positive"
                )));
            }
            scenario.integrator.dt = value;
        }
        SweepParam::Beta => match &mut scenario.controller {
            ControllerSpec::VariableExponent { beta, .. }
            | ControllerSpec::Combined { beta, .. } => *beta = value,
            other => {
                return Err(CliError::Usage(format!(
                    "family {} has no beta gain",
                    other.family_name()
                )))
            }
        },
        SweepParam::K => match &mut scenario.controller {
            ControllerSpec::Combined { k, .. } | ControllerSpec::Linear { k } => *k = value,
            other => {
                return Err(CliError::Usage(format!(
                    "family {} has no k gain",
                    other.family_name()
                )))
            }
        },
        SweepParam::AlphaStar => {
            if !(value > 0.0 && value < 1.0) {
                return Err(CliError::Usage(format!(
                    "alpha_star value {value} must lie in (0, 1)"
                )));
            }
            match &mut scenario.controller {
                ControllerSpec::VariableExponent { alpha_star, .. }
                | ControllerSpec::PureSig { alpha_star, .. }
                | ControllerSpec::Combined { alpha_star, .. } => *alpha_star = value,
                ControllerSpec::SignedAggregate { alpha, .. } => *alpha = value,
                ControllerSpec::Linear { .. } => {
                    return Err(CliError::Usage("family linear has no exponent".into()))
                }
            }
        }
    }
    Ok(scenario)
}

/// One simulation per value, run concurrently; per-cell traces land in
/// `cell_<idx>/trace.csv` and the settling summary in `summary.csv`.
pub fn run_sweep(
    config: &Path,
    param: SweepParam,
    values: &[f64],
    out: &Path,
) -> Result<Vec<SweepRow>, CliError> {
    if values.is_empty() {
        return Err(CliError::Usage("sweep needs at least one value".into()));
    }
    let base = load_scenario(config)?;
    std::fs::create_dir_all(out)?;

    let cells: Vec<Result<(Trace, SweepRow), CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = values
            .iter()
            .map(|&value| {
                let base = &base;
                scope.spawn(move || -> Result<(Trace, SweepRow), CliError> {
                    let scenario = patched_scenario(base, param, value)?;
                    let trace = simulate(
                        &scenario.controller,
                        &scenario.dynamics,
                        &scenario.schedule,
                        &scenario.initial,
                        &scenario.integrator,
                    )?;
                    let report =
                        convergence_report(&trace, &scenario.schedule, scenario.settling_tol, None);
                    let row = SweepRow {
                        value,
                        settling_time: report.settling_time,
                        snap_time: report.snap_time,
                        final_g: report.final_g,
                    };
                    Ok((trace, row))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep cell panicked"))
            .collect()
    });

    let param_name = match param {
        SweepParam::Beta => "beta",
        SweepParam::K => "k",
        SweepParam::AlphaStar => "alpha_star",
        SweepParam::Dt => "dt",
    };
    let mut summary = String::from("parameter,value,settling_time,snap_time,final_G\n");
    let mut rows = Vec::with_capacity(values.len());
    for (idx, cell) in cells.into_iter().enumerate() {
        let (trace, row) = cell?;
        let dir = out.join(format!("cell_{idx}"));
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("trace.csv"), trace.to_csv())?;
        let _ = writeln!(
            summary,
            "{param_name},{},{},{},{}",
            fmt_f64(row.value),
            row.settling_time.map(fmt_f64).unwrap_or_default(),
            row.snap_time.map(fmt_f64).unwrap_or_default(),
            fmt_f64(row.final_g),
        );
        rows.push(row);
    }
    std::fs::write(out.join("summary.csv"), summary)?;
    Ok(rows)
}

pub struct CounterexampleOutput {
    pub trace: Trace,
    pub per_segment_tree: Vec<bool>,
    pub cycle_union_has_tree: bool,
    pub max_spread_deviation: f64,
    pub report_text: String,
}

/// Builds and runs the joint-connectivity counterexample, writing the
/// generated scenario, its trace, and an audit report.
pub fn run_counterexample(
    out: &Path,
    epsilon: f64,
    alpha_star: f64,
    cycles: usize,
) -> Result<CounterexampleOutput, CliError> {
    let cx = joint_connectivity_counterexample_with(epsilon, alpha_star, cycles)?;
    std::fs::create_dir_all(out)?;

    let cfg = ftcsim_core::simulator::IntegratorConfig::new(
        1e-3,
        cx.schedule.total_duration(),
        1e-9,
        ftcsim_core::simulator::Scheme::Rk4,
    )?;
    let trace = simulate(
        &cx.controller,
        &InherentDynamics::zero(),
        &cx.schedule,
        &cx.r0,
        &cfg,
    )?;

    let per_segment_tree = spanning_tree_audit(&cx.schedule);
    let union = DirectedGraph::union(cx.cycle_graphs())?;
    let cycle_union_has_tree = union.has_directed_spanning_tree();
    let max_spread_deviation = trace
        .g_scalar()
        .iter()
        .map(|g| (g - 2.0).abs())
        .fold(0.0, f64::max);

    std::fs::write(
        out.join("scenario.toml"),
        counterexample_toml(&cx, epsilon, alpha_star),
    )?;
    std::fs::write(out.join("trace.csv"), trace.to_csv())?;

    let mut text = String::new();
    let _ = writeln!(text, "joint-connectivity counterexample");
    let _ = writeln!(
        text,
        "  segments:                  {}",
        cx.schedule.segments().len()
    );
    let _ = writeln!(
        text,
        "  first / later durations:   {:.6} / {:.6} s",
        cx.first_duration, cx.phase_duration
    );
    let _ = writeln!(text, "  per-segment spanning tree: {per_segment_tree:?}");
    let _ = writeln!(text, "  one-cycle union has tree:  {cycle_union_has_tree}");
    let _ = writeln!(
        text,
        "  max |spread - 2|:          {max_spread_deviation:.3e}"
    );
    std::fs::write(out.join("report.txt"), &text)?;

    Ok(CounterexampleOutput {
        trace,
        per_segment_tree,
        cycle_union_has_tree,
        max_spread_deviation,
        report_text: text,
    })
}

/// Emits the generated counterexample as a loadable scenario file.
fn counterexample_toml(
    cx: &ftcsim_core::analysis::JointConnectivityCounterexample,
    epsilon: f64,
    alpha_star: f64,
) -> String {
    let mut text = String::new();
    let _ = writeln!(text, "# generated by `ftcsim counterexample`");
    let _ = writeln!(text, "seed = 0\n");
    let _ = writeln!(text, "[agents]\nn = 3\ninitial = [0.0, 1.0, 2.0]\n");
    let _ = writeln!(text, "[dynamics]\nkind = \"zero\"\n");
    let _ = writeln!(
        text,
        "[controller]\nfamily = \"pure-sig\"\nepsilon = {}\nalpha_star = {}\n",
        fmt_f64(epsilon),
        fmt_f64(alpha_star)
    );
    let _ = writeln!(
        text,
        "[schedule]\nt_l = {}\nrepeat = false\nbounds = {{ lower = 1.0, upper = 1.0 }}\n",
        fmt_f64(cx.schedule.t_l())
    );
    let _ = writeln!(
        text,
        "[[schedule.graphs]]\nname = \"e23\"\nedges = [{{ from = 3, to = 2 }}]\n"
    );
    let _ = writeln!(
        text,
        "[[schedule.graphs]]\nname = \"e31\"\nedges = [{{ from = 1, to = 3 }}]\n"
    );
    let _ = writeln!(
        text,
        "[[schedule.graphs]]\nname = \"e12\"\nedges = [{{ from = 2, to = 1 }}]\n"
    );
    let names = ["e23", "e31", "e12"];
    for (idx, segment) in cx.schedule.segments().iter().enumerate() {
        let name = if idx == 0 { "e23" } else { names[idx % 3] };
        let _ = writeln!(
            text,
            "[[schedule.segments]]\nduration = {}\ngraph = \"{name}\"\n",
            fmt_f64(segment.duration)
        );
    }
    let _ = writeln!(
        text,
        "[integrator]\nscheme = \"rk4\"\ndt = 1e-3\nhorizon = {}\nconsensus_tol = 1e-9",
        fmt_f64(cx.schedule.total_duration())
    );
    text
}
