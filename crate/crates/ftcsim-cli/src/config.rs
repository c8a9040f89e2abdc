//! Scenario configuration: a single TOML file describing agents, dynamics,
//! controller, schedule, integrator, and analysis settings. Numeric fields
//! accept either literals or expressions such as `"pi/2"`. Agents are
//! numbered from 1 in config files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use ftcsim_core::comparison::{KindPolicy, ReanchorMode};
use ftcsim_core::dynamics::{ControllerSpec, InherentDynamics};
use ftcsim_core::graph::{DirectedGraph, SwitchingSchedule, WeightBounds};
use ftcsim_core::simulator::{ComparisonKind, ComparisonParams, IntegratorConfig, Scheme};
use ftcsim_core::state::AgentState;

use crate::error::CliError;
use crate::expr;

/// A number that may be written as a literal or an expression string.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Float(f64),
    Int(i64),
    Expr(String),
}

impl Num {
    fn eval(&self, field: &str) -> Result<f64, CliError> {
        match self {
            Num::Float(v) => Ok(*v),
            Num::Int(v) => Ok(*v as f64),
            Num::Expr(s) => expr::eval(s).map_err(|message| CliError::Config {
                field: field.to_string(),
                message: format!("{message} (in expression {s:?})"),
            }),
        }
    }
}

fn bad(field: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub seed: u64,
    pub agents: AgentsSection,
    pub dynamics: DynamicsSection,
    pub controller: ControllerSection,
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub comparison: Option<ComparisonSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentsSection {
    pub n: usize,
    #[serde(default = "one")]
    pub m: usize,
    pub initial: Vec<Num>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    pub kind: String,
    #[serde(default)]
    pub gamma: Option<Num>,
    #[serde(default)]
    pub slope: Option<Num>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub family: String,
    #[serde(default)]
    pub beta: Option<Num>,
    #[serde(default)]
    pub k: Option<Num>,
    #[serde(default)]
    pub epsilon: Option<Num>,
    #[serde(default)]
    pub alpha_star: Option<Num>,
    #[serde(default)]
    pub per_component_exponent: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub t_l: Num,
    #[serde(default)]
    pub repeat: bool,
    pub bounds: BoundsSection,
    pub graphs: Vec<GraphSection>,
    pub segments: Vec<SegmentSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    pub lower: Num,
    pub upper: Num,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub name: String,
    pub edges: Vec<EdgeSection>,
}

/// `from` is the neighbor supplying information, `to` the agent receiving
/// it; both 1-based.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSection {
    pub from: usize,
    pub to: usize,
    #[serde(default)]
    pub weight: Option<Num>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSection {
    pub duration: Num,
    pub graph: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default = "default_dt")]
    pub dt: Num,
    #[serde(default = "default_horizon")]
    pub horizon: Num,
    #[serde(default = "default_consensus_tol")]
    pub consensus_tol: Num,
}

fn default_scheme() -> String {
    "rk4".into()
}
fn default_dt() -> Num {
    Num::Float(1e-3)
}
fn default_horizon() -> Num {
    Num::Float(10.0)
}
fn default_consensus_tol() -> Num {
    Num::Float(1e-9)
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self {
            scheme: default_scheme(),
            dt: default_dt(),
            horizon: default_horizon(),
            consensus_tol: default_consensus_tol(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default = "default_settling_tol")]
    pub settling_tol: Num,
    #[serde(default = "default_true")]
    pub lipschitz_audit: bool,
    #[serde(default = "default_lipschitz_domain")]
    pub lipschitz_domain: [f64; 2],
    #[serde(default = "default_lipschitz_samples")]
    pub lipschitz_samples: usize,
}

fn default_settling_tol() -> Num {
    Num::Float(1e-3)
}
fn default_true() -> bool {
    true
}
fn default_lipschitz_domain() -> [f64; 2] {
    [-10.0, 10.0]
}
fn default_lipschitz_samples() -> usize {
    2000
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            settling_tol: default_settling_tol(),
            lipschitz_audit: true,
            lipschitz_domain: default_lipschitz_domain(),
            lipschitz_samples: default_lipschitz_samples(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonSection {
    #[serde(default = "default_slack")]
    pub epsilon1: Num,
    #[serde(default = "default_slack")]
    pub epsilon2: Num,
    /// `auto`, `max-below`, or `min-above`.
    #[serde(default = "default_kind")]
    pub kind: String,
    /// `none`, `switches`, or `steps`.
    #[serde(default = "default_reanchor")]
    pub reanchor: String,
    #[serde(default = "default_merge_tol")]
    pub merge_tol: Num,
    #[serde(default = "default_dominance_tol")]
    pub dominance_tol: Num,
    /// Overrides `gamma + epsilon1` for constructed experiments.
    #[serde(default)]
    pub gamma_hat: Option<Num>,
    /// Overrides the controller gain used in the comparison damping.
    #[serde(default)]
    pub beta: Option<Num>,
}

fn default_slack() -> Num {
    Num::Float(0.01)
}
fn default_kind() -> String {
    "auto".into()
}
fn default_reanchor() -> String {
    "steps".into()
}
fn default_merge_tol() -> Num {
    Num::Float(1e-10)
}
fn default_dominance_tol() -> Num {
    Num::Float(0.05)
}

/// A fully validated scenario, ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub initial: AgentState,
    pub dynamics: InherentDynamics,
    pub controller: ControllerSpec,
    pub schedule: SwitchingSchedule,
    pub integrator: IntegratorConfig,
    pub settling_tol: f64,
    pub lipschitz_audit: bool,
    pub lipschitz_domain: (f64, f64),
    pub lipschitz_samples: usize,
    pub comparison: Option<ComparisonSetup>,
}

#[derive(Debug, Clone)]
pub struct ComparisonSetup {
    pub params: ComparisonParams,
    pub policy: KindPolicy,
    pub reanchor: ReanchorMode,
    pub dominance_tol: f64,
    pub epsilon1: f64,
    pub epsilon2: f64,
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    let raw: RawConfig = toml::from_str(&text).map_err(|e| CliError::Parse(e.to_string()))?;
    scenario_from_raw(raw)
}

pub fn scenario_from_raw(raw: RawConfig) -> Result<Scenario, CliError> {
    let n = raw.agents.n;
    let m = raw.agents.m;
    if n == 0 {
        return Err(bad("agents.n", "agent count must be positive"));
    }
    if m == 0 {
        return Err(bad("agents.m", "state dimension must be positive"));
    }
    if raw.agents.initial.len() != n * m {
        return Err(bad(
            "agents.initial",
            format!(
                "expected n*m = {} values, found {}",
                n * m,
                raw.agents.initial.len()
            ),
        ));
    }
    let mut initial = Vec::with_capacity(n * m);
    for (idx, num) in raw.agents.initial.iter().enumerate() {
        initial.push(num.eval(&format!("agents.initial[{idx}]"))?);
    }
    let initial =
        AgentState::new(n, m, initial, 0.0).map_err(|e| bad("agents.initial", e.to_string()))?;

    let dynamics = build_dynamics(&raw.dynamics)?;
    let controller = build_controller(&raw.controller)?;
    let schedule = build_schedule(&raw.schedule, n)?;
    let integrator = build_integrator(&raw.integrator)?;

    if integrator.dt > schedule.min_segment_duration() {
        return Err(bad(
            "integrator.dt",
            format!(
                "dt = {} exceeds the shortest schedule segment {}",
                integrator.dt,
                schedule.min_segment_duration()
            ),
        ));
    }
    if !schedule.repeat() && integrator.horizon > schedule.total_duration() {
        return Err(bad(
            "integrator.horizon",
            format!(
                "horizon {} exceeds the non-repeating schedule duration {}",
                integrator.horizon,
                schedule.total_duration()
            ),
        ));
    }

    let settling_tol = raw.analysis.settling_tol.eval("analysis.settling_tol")?;
    if !(settling_tol > 0.0) {
        return Err(bad("analysis.settling_tol", "must be positive"));
    }
    let [dom_lo, dom_hi] = raw.analysis.lipschitz_domain;
    if !(dom_hi > dom_lo) {
        return Err(bad(
            "analysis.lipschitz_domain",
            "must be a nonempty interval",
        ));
    }

    let comparison = match &raw.comparison {
        None => None,
        Some(section) => Some(build_comparison(
            section,
            &dynamics,
            &controller,
            &schedule,
        )?),
    };

    Ok(Scenario {
        seed: raw.seed,
        n,
        m,
        initial,
        dynamics,
        controller,
        schedule,
        integrator,
        settling_tol,
        lipschitz_audit: raw.analysis.lipschitz_audit,
        lipschitz_domain: (dom_lo, dom_hi),
        lipschitz_samples: raw.analysis.lipschitz_samples,
        comparison,
    })
}

fn build_dynamics(section: &DynamicsSection) -> Result<InherentDynamics, CliError> {
    let base = match section.kind.as_str() {
        "zero" => InherentDynamics::zero(),
        "sine" => InherentDynamics::sine(),
        "linear" => {
            let slope = section
                .slope
                .as_ref()
                .ok_or_else(|| bad("dynamics.slope", "required for kind = \"linear\""))?
                .eval("dynamics.slope")?;
            InherentDynamics::linear(slope)
        }
        other => {
            return Err(bad(
                "dynamics.kind",
                format!("unknown kind {other:?}; expected zero, sine, or linear"),
            ))
        }
    };
    match &section.gamma {
        None => Ok(base),
        Some(num) => {
            let gamma = num.eval("dynamics.gamma")?;
            base.with_gamma(gamma)
                .map_err(|e| bad("dynamics.gamma", e.to_string()))
        }
    }
}

fn build_controller(section: &ControllerSection) -> Result<ControllerSpec, CliError> {
    let get = |num: &Option<Num>, field: &str| -> Result<f64, CliError> {
        num.as_ref()
            .ok_or_else(|| bad(field, format!("required for family {:?}", section.family)))?
            .eval(field)
    };
    let spec = match section.family.as_str() {
        "variable-exponent" => {
            let beta = get(&section.beta, "controller.beta")?;
            let alpha_star = get(&section.alpha_star, "controller.alpha_star")?;
            let mut spec = ControllerSpec::variable_exponent(beta, alpha_star)
                .map_err(|e| bad("controller", e.to_string()))?;
            if section.per_component_exponent {
                if let ControllerSpec::VariableExponent {
                    per_component_exponent,
                    ..
                } = &mut spec
                {
                    *per_component_exponent = true;
                }
            }
            spec
        }
        "pure-sig" => ControllerSpec::pure_sig(
            get(&section.epsilon, "controller.epsilon")?,
            get(&section.alpha_star, "controller.alpha_star")?,
        )
        .map_err(|e| bad("controller", e.to_string()))?,
        "signed-aggregate" => ControllerSpec::signed_aggregate(
            get(&section.epsilon, "controller.epsilon")?,
            get(&section.alpha_star, "controller.alpha_star")?,
        )
        .map_err(|e| bad("controller", e.to_string()))?,
        "combined" => ControllerSpec::combined(
            get(&section.k, "controller.k")?,
            get(&section.beta, "controller.beta")?,
            get(&section.alpha_star, "controller.alpha_star")?,
        )
        .map_err(|e| bad("controller", e.to_string()))?,
        "linear" => ControllerSpec::linear(get(&section.k, "controller.k")?)
            .map_err(|e| bad("controller", e.to_string()))?,
        other => {
            return Err(bad(
                "controller.family",
                format!(
                    "unknown family {other:?}; expected variable-exponent, pure-sig, \
                     signed-aggregate, combined, or linear"
                ),
            ))
        }
    };
    Ok(spec)
}

fn build_schedule(section: &ScheduleSection, n: usize) -> Result<SwitchingSchedule, CliError> {
    let lower = section.bounds.lower.eval("schedule.bounds.lower")?;
    let upper = section.bounds.upper.eval("schedule.bounds.upper")?;
    let bounds =
        WeightBounds::new(lower, upper).map_err(|e| bad("schedule.bounds", e.to_string()))?;

    let mut graphs: BTreeMap<&str, DirectedGraph> = BTreeMap::new();
    for g in &section.graphs {
        if graphs.contains_key(g.name.as_str()) {
            return Err(bad(
                "schedule.graphs",
                format!("duplicate graph name {:?}", g.name),
            ));
        }
        let mut edges = Vec::with_capacity(g.edges.len());
        for (idx, e) in g.edges.iter().enumerate() {
            let field = format!("schedule.graphs[{}].edges[{idx}]", g.name);
            if e.from == 0 || e.to == 0 || e.from > n || e.to > n {
                return Err(bad(&field, format!("agents are numbered 1..={n}")));
            }
            let weight = match &e.weight {
                None => 1.0,
                Some(w) => w.eval(&format!("{field}.weight"))?,
            };
            edges.push((e.from - 1, e.to - 1, weight));
        }
        let graph = DirectedGraph::new(n, &edges)
            .map_err(|e| bad(&format!("schedule.graphs[{}]", g.name), e.to_string()))?;
        graphs.insert(g.name.as_str(), graph);
    }

    let t_l = section.t_l.eval("schedule.t_l")?;
    let mut segments = Vec::with_capacity(section.segments.len());
    for (idx, seg) in section.segments.iter().enumerate() {
        let duration = seg
            .duration
            .eval(&format!("schedule.segments[{idx}].duration"))?;
        let graph = graphs.get(seg.graph.as_str()).ok_or_else(|| {
            bad(
                &format!("schedule.segments[{idx}].graph"),
                format!("unknown graph name {:?}", seg.graph),
            )
        })?;
        segments.push((duration, graph.clone()));
    }
    SwitchingSchedule::new(segments, section.repeat, t_l, bounds)
        .map_err(|e| bad("schedule", e.to_string()))
}

fn build_integrator(section: &IntegratorSection) -> Result<IntegratorConfig, CliError> {
    let scheme = match section.scheme.as_str() {
        "rk4" => Scheme::Rk4,
        "euler" => Scheme::Euler,
        other => {
            return Err(bad(
                "integrator.scheme",
                format!("unknown scheme {other:?}; expected rk4 or euler"),
            ))
        }
    };
    IntegratorConfig::new(
        section.dt.eval("integrator.dt")?,
        section.horizon.eval("integrator.horizon")?,
        section.consensus_tol.eval("integrator.consensus_tol")?,
        scheme,
    )
    .map_err(|e| bad("integrator", e.to_string()))
}

fn build_comparison(
    section: &ComparisonSection,
    dynamics: &InherentDynamics,
    controller: &ControllerSpec,
    schedule: &SwitchingSchedule,
) -> Result<ComparisonSetup, CliError> {
    let epsilon1 = section.epsilon1.eval("comparison.epsilon1")?;
    let epsilon2 = section.epsilon2.eval("comparison.epsilon2")?;
    let gamma_hat = match &section.gamma_hat {
        Some(num) => num.eval("comparison.gamma_hat")?,
        None => dynamics.gamma() + epsilon1,
    };
    let beta = match &section.beta {
        Some(num) => num.eval("comparison.beta")?,
        None => match controller {
            ControllerSpec::VariableExponent { beta, .. } => *beta,
            ControllerSpec::PureSig { epsilon, .. } => *epsilon,
            ControllerSpec::Combined { beta, .. } => *beta,
            ControllerSpec::SignedAggregate { epsilon, .. } => *epsilon,
            ControllerSpec::Linear { k } => *k,
        },
    };
    let alpha_star = match controller {
        ControllerSpec::VariableExponent { alpha_star, .. }
        | ControllerSpec::PureSig { alpha_star, .. }
        | ControllerSpec::Combined { alpha_star, .. } => *alpha_star,
        ControllerSpec::SignedAggregate { alpha, .. } => *alpha,
        ControllerSpec::Linear { .. } => {
            return Err(bad(
                "comparison",
                "the linear family has no exponent; comparison runs need one",
            ))
        }
    };
    let merge_tol = section.merge_tol.eval("comparison.merge_tol")?;
    let params = ComparisonParams::new(gamma_hat, beta, schedule.bounds().lower(), alpha_star)
        .map_err(|e| bad("comparison", e.to_string()))?
        .with_merge_tol(merge_tol);
    let policy = match section.kind.as_str() {
        "auto" => KindPolicy::Auto,
        "max-below" => KindPolicy::Fixed(ComparisonKind::MaxBelow),
        "min-above" => KindPolicy::Fixed(ComparisonKind::MinAbove),
        other => {
            return Err(bad(
                "comparison.kind",
                format!("unknown kind {other:?}; expected auto, max-below, or min-above"),
            ))
        }
    };
    let reanchor = match section.reanchor.as_str() {
        "none" => ReanchorMode::None,
        "switches" => ReanchorMode::Switches,
        "steps" => ReanchorMode::EveryStep,
        other => {
            return Err(bad(
                "comparison.reanchor",
                format!("unknown mode {other:?}; expected none, switches, or steps"),
            ))
        }
    };
    Ok(ComparisonSetup {
        params,
        policy,
        reanchor,
        dominance_tol: section.dominance_tol.eval("comparison.dominance_tol")?,
        epsilon1,
        epsilon2,
    })
}
