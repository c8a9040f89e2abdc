//! Integration tests for config loading, the subcommand pipelines, and the
//! installed binary.

use std::path::{Path, PathBuf};
use std::process::Command;

use ftcsim_cli::{
    load_scenario, run_check_gains, run_compare, run_counterexample, run_simulate, run_sweep,
    CliError, SweepParam,
};
use ftcsim_core::comparison::g_tilde_series;
use ftcsim_core::gains::QConvention;
use ftcsim_core::simulator::{
    simulate_comparison, ComparisonKind, ComparisonParams, IntegratorConfig, Scheme, SwitchScript,
};

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
}

fn temp_dir(tag: &str) -> tempfile::TempDir {
    tempfile::Builder::new().prefix(tag).tempdir().unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("scenario.toml");
    std::fs::write(&path, text).unwrap();
    path
}

const MINIMAL_PREFIX: &str = r#"
[agents]
n = 2
initial = [0.0, 1.0]

[dynamics]
kind = "zero"

[schedule]
t_l = 1.0
repeat = true
bounds = { lower = 1.0, upper = 1.0 }

[[schedule.graphs]]
name = "pair"
edges = [{ from = 1, to = 2 }, { from = 2, to = 1 }]

[[schedule.segments]]
duration = 1.0
graph = "pair"
"#;

#[test]
fn bundled_scenario_loads_and_cross_validates() {
    let scenario = load_scenario(&config_path("four_agent_sine.toml")).unwrap();
    assert_eq!(scenario.n, 4);
    assert_eq!(scenario.m, 1);
    assert_eq!(scenario.initial.values()[0], std::f64::consts::FRAC_PI_2);
    assert_eq!(scenario.schedule.segments().len(), 2);
    assert!(scenario.comparison.is_some());
}

#[test]
fn malformed_config_names_the_offending_field() {
    let dir = temp_dir("bad-alpha");
    let text = format!(
        "{MINIMAL_PREFIX}\n[controller]\nfamily = \"variable-exponent\"\nbeta = 1.0\nalpha_star = 1.2\n"
    );
    let path = write_config(dir.path(), &text);
    let err = load_scenario(&path).unwrap_err();
    assert!(err.to_string().contains("controller"), "got: {err}");

    let text = format!(
        "{MINIMAL_PREFIX}\n[controller]\nfamily = \"variable-exponent\"\nbeta = 1.0\nalpha_star = \"pi/\"\n"
    );
    let path = write_config(dir.path(), &text);
    let err = load_scenario(&path).unwrap_err();
    assert!(
        err.to_string().contains("controller.alpha_star"),
        "got: {err}"
    );

    let text = format!(
        "{MINIMAL_PREFIX}\n[controller]\nfamily = \"variable-exponent\"\nbeta = 1.0\nalpha_star = 0.8\n\n[integrator]\ndt = 2.0\n"
    );
    let path = write_config(dir.path(), &text);
    let err = load_scenario(&path).unwrap_err();
    assert!(err.to_string().contains("integrator.dt"), "got: {err}");
}

#[test]
fn unknown_graph_reference_is_reported() {
    let dir = temp_dir("bad-graph");
    let text = r#"
[agents]
n = 2
initial = [0.0, 1.0]

[dynamics]
kind = "zero"

[controller]
family = "linear"
k = 1.0

[schedule]
t_l = 1.0
repeat = true
bounds = { lower = 1.0, upper = 1.0 }

[[schedule.graphs]]
name = "pair"
edges = [{ from = 1, to = 2 }]

[[schedule.segments]]
duration = 1.0
graph = "nope"
"#;
    let err = load_scenario(&write_config(dir.path(), text)).unwrap_err();
    assert!(err.to_string().contains("segments[0].graph"), "got: {err}");
}

#[test]
fn simulate_consensus_start_settles_at_zero() {
    let dir = temp_dir("consensus-start");
    let text = r#"
[agents]
n = 3
initial = [0.5, 0.5, 0.5]

[dynamics]
kind = "zero"

[controller]
family = "variable-exponent"
beta = 2.0
alpha_star = 0.8

[schedule]
t_l = 1.0
repeat = true
bounds = { lower = 1.0, upper = 1.0 }

[[schedule.graphs]]
name = "chain"
edges = [{ from = 1, to = 2 }, { from = 2, to = 3 }]

[[schedule.segments]]
duration = 1.0
graph = "chain"

[integrator]
horizon = 2.0
"#;
    let path = write_config(dir.path(), text);
    let out = temp_dir("consensus-start-out");
    let result = run_simulate(&path, out.path(), None).unwrap();
    assert_eq!(result.report.settling_time, Some(0.0));
    assert_eq!(result.report.final_g, 0.0);
}

#[test]
fn simulate_is_byte_deterministic() {
    let config = config_path("four_agent_sine.toml");
    let out_a = temp_dir("det-a");
    let out_b = temp_dir("det-b");
    run_simulate(&config, out_a.path(), None).unwrap();
    run_simulate(&config, out_b.path(), None).unwrap();
    let a = std::fs::read(out_a.path().join("trace.csv")).unwrap();
    let b = std::fs::read(out_b.path().join("trace.csv")).unwrap();
    assert_eq!(a, b);
    assert!(!a.is_empty());
}

#[test]
fn trace_csv_round_trips_through_parser() {
    let config = config_path("drift_free.toml");
    let out = temp_dir("roundtrip");
    let result = run_simulate(&config, out.path(), None).unwrap();
    let text = std::fs::read_to_string(out.path().join("trace.csv")).unwrap();
    let parsed = ftcsim_core::trace::Trace::from_csv(&text, 4, 1).unwrap();
    assert_eq!(parsed.times, result.trace.times);
    assert_eq!(parsed.states, result.trace.states);
    assert_eq!(parsed.disagreement, result.trace.disagreement);
    assert_eq!(parsed.events, result.trace.events);
}

#[test]
fn check_gains_verdicts_per_convention() {
    let cert = run_check_gains(&config_path("four_agent_sine.toml")).unwrap();
    assert_eq!(cert.verdict(QConvention::Tight).unwrap(), Some(false));
    assert_eq!(cert.verdict(QConvention::Reported).unwrap(), Some(true));
}

#[test]
fn check_gains_not_applicable_for_signed_aggregate() {
    let dir = temp_dir("sa");
    let text = format!(
        "{MINIMAL_PREFIX}\n[controller]\nfamily = \"signed-aggregate\"\nepsilon = 1.0\nalpha_star = 0.8\n"
    );
    let cert = run_check_gains(&write_config(dir.path(), &text)).unwrap();
    assert!(!cert.applicable);
    assert_eq!(cert.verdict(QConvention::Tight).unwrap(), None);
}

#[test]
fn compare_bundled_scenario_dominates_within_slack() {
    let out = temp_dir("cmp");
    let result = run_compare(&config_path("four_agent_sine.toml"), out.path()).unwrap();
    assert!(
        result.dominance.holds(),
        "violations: {:?}",
        result.dominance.violations
    );
    assert!(result.tbar.is_some());
    assert!(result.settling_bound.unwrap() > 0.0);
    for file in [
        "primary_trace.csv",
        "comparison_trace.csv",
        "gap_energy.csv",
        "violations.csv",
        "dominance.txt",
    ] {
        assert!(out.path().join(file).exists(), "missing {file}");
    }
}

#[test]
fn compare_negative_control_reports_violations() {
    let out = temp_dir("cmp-neg");
    let result = run_compare(&config_path("negative_control.toml"), out.path()).unwrap();
    assert!(!result.dominance.holds());
    assert!(result.dominance.violations.len() > 100);
}

#[test]
fn drift_free_comparison_gap_energy_is_monotone() {
    // gamma_hat = 0 run of the comparison system alone
    let params = ComparisonParams::new(0.0, 3.0, 1.0, 0.8).unwrap();
    let script = SwitchScript::new(
        vec![
            (0.5, ComparisonKind::MaxBelow),
            (0.5, ComparisonKind::MinAbove),
        ],
        true,
    )
    .unwrap();
    let cfg = IntegratorConfig::new(1e-3, 10.0, 1e-9, Scheme::Rk4).unwrap();
    let trace = simulate_comparison(&params, &script, &[0.0, 0.7, 1.9, 3.1], &cfg, true).unwrap();
    let series = g_tilde_series(&trace, 0.8).unwrap();
    for w in series.windows(2) {
        assert!(w[1] <= w[0] + 1e-8);
    }
}

#[test]
fn sweep_beta_produces_one_row_per_value() {
    let out = temp_dir("sweep-beta");
    let rows = run_sweep(
        &config_path("four_agent_sine.toml"),
        SweepParam::Beta,
        &[1.0, 2.0, 3.0, 4.0],
        out.path(),
    )
    .unwrap();
    assert_eq!(rows.len(), 4);
    for (idx, _) in rows.iter().enumerate() {
        assert!(out.path().join(format!("cell_{idx}/trace.csv")).exists());
    }
    let summary = std::fs::read_to_string(out.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 5);

    // rerunning writes identical bytes
    let out2 = temp_dir("sweep-beta-2");
    run_sweep(
        &config_path("four_agent_sine.toml"),
        SweepParam::Beta,
        &[1.0, 2.0, 3.0, 4.0],
        out2.path(),
    )
    .unwrap();
    let again = std::fs::read_to_string(out2.path().join("summary.csv")).unwrap();
    assert_eq!(summary, again);
}

#[test]
fn sweep_dt_settling_times_agree() {
    let out = temp_dir("sweep-dt");
    let rows = run_sweep(
        &config_path("four_agent_sine.toml"),
        SweepParam::Dt,
        &[1e-2, 1e-3, 1e-4],
        out.path(),
    )
    .unwrap();
    let times: Vec<f64> = rows.iter().map(|r| r.settling_time.unwrap()).collect();
    for w in times.windows(2) {
        assert!(
            (w[0] - w[1]).abs() <= 1e-2,
            "settling times {times:?} spread too far"
        );
    }
}

#[test]
fn sweep_rejects_empty_values_and_foreign_gains() {
    let out = temp_dir("sweep-err");
    let err = run_sweep(
        &config_path("four_agent_sine.toml"),
        SweepParam::Beta,
        &[],
        out.path(),
    );
    assert!(matches!(err, Err(CliError::Usage(_))));
    let err = run_sweep(
        &config_path("four_agent_sine.toml"),
        SweepParam::K,
        &[1.0],
        out.path(),
    );
    assert!(matches!(err, Err(CliError::Usage(_))));
}

#[test]
fn counterexample_emits_reloadable_scenario() {
    let out = temp_dir("cx");
    let result = run_counterexample(out.path(), 1.0, 0.8, 3).unwrap();
    assert!(result.per_segment_tree.iter().all(|&b| !b));
    assert!(result.cycle_union_has_tree);
    assert!(result.max_spread_deviation <= 1e-9);

    // the emitted scenario parses and reproduces the pinned spread
    let scenario = load_scenario(&out.path().join("scenario.toml")).unwrap();
    let rerun = ftcsim_core::simulator::simulate(
        &scenario.controller,
        &scenario.dynamics,
        &scenario.schedule,
        &scenario.initial,
        &scenario.integrator,
    )
    .unwrap();
    for g in rerun.g_scalar() {
        assert!((g - 2.0).abs() <= 1e-9);
    }
}

// ---------------------------------------------------------------------------
// binary end-to-end

#[test]
fn binary_simulate_and_check_gains_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_ftcsim");
    let out = temp_dir("bin-sim");
    let status = Command::new(bin)
        .args(["simulate", "--config"])
        .arg(config_path("four_agent_sine.toml"))
        .arg("--out")
        .arg(out.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let status = Command::new(bin)
        .args(["check-gains", "--q-convention", "tight", "--config"])
        .arg(config_path("four_agent_sine.toml"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    let status = Command::new(bin)
        .args(["check-gains", "--q-convention", "paper", "--config"])
        .arg(config_path("four_agent_sine.toml"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let status = Command::new(bin)
        .args(["simulate", "--config", "/nonexistent.toml", "--out"])
        .arg(out.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn binary_compare_flags_negative_control() {
    let bin = env!("CARGO_BIN_EXE_ftcsim");
    let out = temp_dir("bin-cmp");
    let status = Command::new(bin)
        .args(["compare", "--config"])
        .arg(config_path("negative_control.toml"))
        .arg("--out")
        .arg(out.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
