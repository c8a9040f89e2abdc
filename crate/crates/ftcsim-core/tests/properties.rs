//! Property tests for the graph, protocol, and simulation invariants.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ftcsim_core::comparison::g_tilde_series;
use ftcsim_core::dynamics::{
    closed_loop_rhs, control_input, exponent_schedule, sig_pow, ControllerSpec, InherentDynamics,
};
use ftcsim_core::gains::beta_threshold;
use ftcsim_core::graph::{DirectedGraph, SwitchingSchedule, WeightBounds};
use ftcsim_core::simulator::{
    simulate, simulate_comparison, ComparisonKind, ComparisonParams, IntegratorConfig, Scheme,
    SwitchScript,
};
use ftcsim_core::state::AgentState;
use ftcsim_core::trace::{EventKind, Trace};

// ---------------------------------------------------------------------------
// graph invariants

/// All-roots breadth-first oracle, independent of the mother-vertex scan.
fn spanning_tree_oracle(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut out = vec![Vec::new(); n];
    for &(j, i) in edges {
        out[j].push(i);
    }
    (0..n).any(|root| {
        let mut seen = vec![false; n];
        let mut queue = vec![root];
        seen[root] = true;
        while let Some(v) = queue.pop() {
            for &w in &out[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push(w);
                }
            }
        }
        seen.iter().all(|&s| s)
    })
}

fn all_ordered_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if i != j {
                pairs.push((j, i));
            }
        }
    }
    pairs
}

#[test]
fn spanning_tree_matches_oracle_exhaustively_small_n() {
    for n in 1..=3usize {
        let pairs = all_ordered_pairs(n);
        for mask in 0..(1u32 << pairs.len()) {
            let edges: Vec<(usize, usize)> = pairs
                .iter()
                .enumerate()
                .filter(|(b, _)| mask & (1 << b) != 0)
                .map(|(_, &e)| e)
                .collect();
            let g = DirectedGraph::from_unit_edges(n, &edges).unwrap();
            assert_eq!(
                g.has_directed_spanning_tree(),
                spanning_tree_oracle(n, &edges),
                "n = {n}, edges = {edges:?}"
            );
        }
    }
}

#[test]
fn spanning_tree_matches_oracle_randomized_n4_n5() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for n in [4usize, 5] {
        let pairs = all_ordered_pairs(n);
        for _ in 0..10_000 {
            let edges: Vec<(usize, usize)> = pairs
                .iter()
                .filter(|_| rng.random_bool(0.3))
                .cloned()
                .collect();
            let g = DirectedGraph::from_unit_edges(n, &edges).unwrap();
            assert_eq!(
                g.has_directed_spanning_tree(),
                spanning_tree_oracle(n, &edges),
                "n = {n}, edges = {edges:?}"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn laplacian_annihilates_the_ones_vector(
        n in 2usize..8,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for j in 0..n {
            for i in 0..n {
                if i != j && rng.random_bool(0.4) {
                    edges.push((j, i, rng.random_range(0.1..5.0)));
                }
            }
        }
        let g = DirectedGraph::new(n, &edges).unwrap();
        for row in g.laplacian() {
            let sum: f64 = row.iter().sum();
            prop_assert!(sum.abs() <= 1e-12);
        }
    }

    #[test]
    fn graph_at_is_right_continuous(
        durations in prop::collection::vec(0.3f64..2.0, 1..5),
        repeat in any::<bool>(),
    ) {
        let n = 3;
        let graphs: Vec<DirectedGraph> = (0..durations.len())
            .map(|k| {
                let j = k % n;
                DirectedGraph::from_unit_edges(n, &[(j, (j + 1) % n)]).unwrap()
            })
            .collect();
        let segments: Vec<(f64, DirectedGraph)> =
            durations.iter().cloned().zip(graphs).collect();
        let schedule = SwitchingSchedule::new(segments, repeat, 0.3, WeightBounds::unit()).unwrap();
        let horizon = if repeat { 3.0 * schedule.total_duration() } else { schedule.total_duration() };
        let h = 0.3 * 1e-3;
        for tau in schedule.switch_times_in(0.0, horizon) {
            prop_assert_eq!(
                schedule.graph_at(tau).unwrap(),
                schedule.graph_at(tau + h).unwrap()
            );
        }
    }

    #[test]
    fn sig_pow_is_odd_and_monotone(
        x in -50.0f64..50.0,
        y in -50.0f64..50.0,
        alpha in 0.05f64..1.5,
    ) {
        prop_assert_eq!(sig_pow(-x, alpha), -sig_pow(x, alpha));
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        prop_assert!(sig_pow(lo, alpha) <= sig_pow(hi, alpha));
    }

    #[test]
    fn consensus_absorption_for_every_family(
        value in -10.0f64..10.0,
        n in 2usize..6,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for j in 0..n {
            for i in 0..n {
                if i != j && rng.random_bool(0.5) {
                    edges.push((j, i));
                }
            }
        }
        let g = DirectedGraph::from_unit_edges(n, &edges).unwrap();
        let state = AgentState::from_scalars(vec![value; n], 0.0).unwrap();
        let dynamics = InherentDynamics::sine();
        for spec in [
            ControllerSpec::variable_exponent(3.0, 0.8).unwrap(),
            ControllerSpec::pure_sig(1.0, 0.8).unwrap(),
            ControllerSpec::signed_aggregate(1.0, 0.5).unwrap(),
            ControllerSpec::combined(2.0, 1.0, 0.6).unwrap(),
            ControllerSpec::linear(2.0).unwrap(),
        ] {
            let rhs = closed_loop_rhs(&spec, &dynamics, &g, 0.0, &state);
            for i in 1..n {
                prop_assert_eq!(rhs[i], rhs[0]);
            }
        }
    }

    #[test]
    fn max_holder_control_is_nonpositive(
        values in prop::collection::vec(-5.0f64..5.0, 2..6),
        seed in any::<u64>(),
    ) {
        let n = values.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for j in 0..n {
            for i in 0..n {
                if i != j && rng.random_bool(0.5) {
                    edges.push((j, i));
                }
            }
        }
        let g = DirectedGraph::from_unit_edges(n, &edges).unwrap();
        let spec = ControllerSpec::variable_exponent(3.0, 0.8).unwrap();
        let state = AgentState::from_scalars(values.clone(), 0.0).unwrap();
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for (i, &v) in values.iter().enumerate() {
            if v == max {
                let u = control_input(&spec, &g, &state, i);
                prop_assert!(u[0] <= 1e-12);
            }
        }
    }

    #[test]
    fn threshold_monotone_in_gamma_and_a_lower(
        gamma in 0.0f64..5.0,
        bump in 0.01f64..2.0,
        a in 0.1f64..3.0,
        n in 2usize..9,
    ) {
        let base = beta_threshold(gamma, a, n, 0.01, 0.01).unwrap();
        let more_drift = beta_threshold(gamma + bump, a, n, 0.01, 0.01).unwrap();
        let stronger_weights = beta_threshold(gamma, a + bump, n, 0.01, 0.01).unwrap();
        prop_assert!(more_drift > base);
        prop_assert!(stronger_weights < base);
    }
}

// ---------------------------------------------------------------------------
// protocol nonlinearity

#[test]
fn composite_is_continuous_and_odd_at_the_exponent_switch() {
    let composite = |x: f64, alpha_star: f64| sig_pow(x, exponent_schedule(x.abs(), alpha_star));
    for alpha_star in [0.2, 0.5, 0.8] {
        for h in [1e-15, 1e-14, 1e-13] {
            for sign in [1.0, -1.0] {
                let inside = composite(sign * (1.0 - h), alpha_star);
                let outside = composite(sign * (1.0 + h), alpha_star);
                assert!((inside - sign).abs() <= 1e-12);
                assert!((outside - sign).abs() <= 1e-12);
                assert!((inside - outside).abs() <= 1e-12);
            }
        }
        let mut x = -3.0;
        while x <= 3.0 {
            assert_eq!(composite(-x, alpha_star), -composite(x, alpha_star));
            x += 0.0625;
        }
    }
}

#[test]
fn power_sum_dominates_sum_power() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for alpha_star in [0.2, 0.5, 0.8] {
        for _ in 0..10_000 {
            let len = rng.random_range(1..=10);
            let x: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..10.0)).collect();
            let lhs: f64 = x.iter().map(|v| v.powf(alpha_star)).sum();
            let rhs = x.iter().sum::<f64>().powf(alpha_star);
            assert!(
                lhs >= rhs - 1e-12,
                "alpha* = {alpha_star}, x = {x:?}: {lhs} < {rhs}"
            );
        }
    }
}

// ---------------------------------------------------------------------------
// simulation invariants

fn two_chain_schedule(first_g1: bool) -> SwitchingSchedule {
    let g1 = DirectedGraph::from_unit_edges(4, &[(1, 0), (2, 1), (3, 2)]).unwrap();
    let g2 = DirectedGraph::from_unit_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
    let segments = if first_g1 {
        vec![(0.5, g1), (0.5, g2)]
    } else {
        vec![(0.5, g2), (0.5, g1)]
    };
    SwitchingSchedule::new(segments, true, 0.5, WeightBounds::unit()).unwrap()
}

#[test]
fn identical_configs_produce_bit_identical_traces() {
    let spec = ControllerSpec::variable_exponent(3.0, 0.8).unwrap();
    let dynamics = InherentDynamics::sine();
    let schedule = two_chain_schedule(false);
    let half_pi = std::f64::consts::FRAC_PI_2;
    let r0 = AgentState::from_scalars(vec![half_pi, -half_pi, -half_pi, -half_pi], 0.0).unwrap();
    let cfg = IntegratorConfig::new(1e-3, 2.0, 1e-9, Scheme::Rk4).unwrap();
    let a = simulate(&spec, &dynamics, &schedule, &r0, &cfg).unwrap();
    let b = simulate(&spec, &dynamics, &schedule, &r0, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_csv(), b.to_csv());
}

#[test]
fn spread_trace_is_invariant_under_common_shift_without_drift() {
    let spec = ControllerSpec::variable_exponent(3.0, 0.8).unwrap();
    let dynamics = InherentDynamics::zero();
    let schedule = two_chain_schedule(false);
    let cfg = IntegratorConfig::new(1e-3, 4.0, 1e-9, Scheme::Rk4).unwrap();
    let base = vec![1.2, -0.4, 0.9, -1.6];
    let eta = 7.3;
    let shifted: Vec<f64> = base.iter().map(|v| v + eta).collect();
    let a = simulate(
        &spec,
        &dynamics,
        &schedule,
        &AgentState::from_scalars(base, 0.0).unwrap(),
        &cfg,
    )
    .unwrap();
    let b = simulate(
        &spec,
        &dynamics,
        &schedule,
        &AgentState::from_scalars(shifted, 0.0).unwrap(),
        &cfg,
    )
    .unwrap();
    for (ga, gb) in a.g_scalar().iter().zip(b.g_scalar()) {
        assert!((ga - gb).abs() <= 1e-9);
    }
}

#[test]
fn comparison_gap_dynamics_shift_invariant_when_gamma_hat_is_zero() {
    let params = ComparisonParams::new(0.0, 3.0, 1.0, 0.8).unwrap();
    let script = SwitchScript::new(
        vec![
            (0.7, ComparisonKind::MaxBelow),
            (0.4, ComparisonKind::MinAbove),
        ],
        true,
    )
    .unwrap();
    let cfg = IntegratorConfig::new(1e-3, 5.0, 1e-9, Scheme::Rk4).unwrap();
    let xi0 = [0.0, 0.4, 1.1, 2.4];
    let shifted: Vec<f64> = xi0.iter().map(|v| v + 7.3).collect();
    let a = simulate_comparison(&params, &script, &xi0, &cfg, false).unwrap();
    let b = simulate_comparison(&params, &script, &shifted, &cfg, false).unwrap();
    let ga = g_tilde_series(&a, 0.8).unwrap();
    let gb = g_tilde_series(&b, 0.8).unwrap();
    for (x, y) in ga.iter().zip(&gb) {
        assert!((x - y).abs() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trips_arbitrary_traces(
        n in 1usize..5,
        m in 1usize..3,
        rows in 1usize..6,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trace = Trace {
            n,
            m,
            times: Vec::new(),
            states: Vec::new(),
            disagreement: Vec::new(),
            controls: None,
            events: Vec::new(),
        };
        let mut t = 0.0;
        for row in 0..rows {
            t += rng.random_range(1e-6..2.0);
            let state: Vec<f64> = (0..n * m).map(|_| rng.random_range(-1e3..1e3)).collect();
            let st = AgentState::new(n, m, state.clone(), t).unwrap();
            trace.times.push(t);
            trace.disagreement.push(st.disagreement());
            trace.states.push(state);
            if row % 2 == 1 {
                trace.events.push((t, EventKind::Switch));
            }
        }
        let parsed = Trace::from_csv(&trace.to_csv(), n, m).unwrap();
        prop_assert_eq!(parsed, trace);
    }
}

#[test]
fn comparison_preserves_initial_ordering() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let params = ComparisonParams::new(1.01, 6.0, 1.0, 0.8).unwrap();
    for _ in 0..5 {
        let xi0: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
        let script = SwitchScript::new(
            vec![
                (rng.random_range(0.3..0.8), ComparisonKind::MaxBelow),
                (rng.random_range(0.3..0.8), ComparisonKind::MinAbove),
            ],
            true,
        )
        .unwrap();
        let cfg = IntegratorConfig::new(1e-3, 10.0, 1e-9, Scheme::Rk4).unwrap();
        let trace = simulate_comparison(&params, &script, &xi0, &cfg, true).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                if xi0[i] <= xi0[j] {
                    for s in &trace.states {
                        assert!(s[i] <= s[j] + 1e-8);
                    }
                }
            }
        }
    }
}
