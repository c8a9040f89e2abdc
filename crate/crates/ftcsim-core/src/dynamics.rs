//! Inherent nonlinear dynamics and the consensus controller families.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::state::AgentState;

/// Signed fractional power: `sign(x) * |x|^alpha`, with `sig_pow(0, _) = 0`.
pub fn sig_pow(x: f64, alpha: f64) -> f64 {
    debug_assert!(alpha > 0.0);
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(alpha)
    }
}

/// Exponent rule for the variable-exponent protocol: `alpha_star` while the
/// pairwise distance is below one, linear feedback (exponent 1) at or above.
pub fn exponent_schedule(d: f64, alpha_star: f64) -> f64 {
    debug_assert!(d >= 0.0);
    if d < 1.0 {
        alpha_star
    } else {
        1.0
    }
}

/// Per-component drift shared by all agents, with a declared Lipschitz
/// constant `gamma` that the analysis module can audit.
#[derive(Clone)]
pub struct InherentDynamics {
    kind: DynamicsKind,
    gamma: f64,
}

#[derive(Clone)]
pub(crate) enum DynamicsKind {
    Zero,
    Sine,
    Linear { slope: f64 },
    Custom(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for InherentDynamics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            DynamicsKind::Zero => "zero".to_string(),
            DynamicsKind::Sine => "sine".to_string(),
            DynamicsKind::Linear { slope } => format!("linear({slope})"),
            DynamicsKind::Custom(_) => "custom".to_string(),
        };
        write!(
            f,
            "InherentDynamics {{ kind: {kind}, gamma: {} }}",
            self.gamma
        )
    }
}

impl InherentDynamics {
    pub fn zero() -> Self {
        Self {
            kind: DynamicsKind::Zero,
            gamma: 0.0,
        }
    }

    pub fn sine() -> Self {
        Self {
            kind: DynamicsKind::Sine,
            gamma: 1.0,
        }
    }

    pub fn linear(slope: f64) -> Self {
        Self {
            kind: DynamicsKind::Linear { slope },
            gamma: slope.abs(),
        }
    }

    /// A user-supplied scalar drift of `(t, x)`, applied per component.
    /// Vector-coupled dynamics are not expressible here on purpose.
    pub fn custom(gamma: f64, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Lipschitz constant gamma must be nonnegative, got {gamma}"
            )));
        }
        Ok(Self {
            kind: DynamicsKind::Custom(Arc::new(f)),
            gamma,
        })
    }

    /// Overrides the declared Lipschitz constant.
    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Lipschitz constant gamma must be nonnegative, got {gamma}"
            )));
        }
        self.gamma = gamma;
        Ok(self)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Evaluates the drift on one state component.
    pub fn phi(&self, t: f64, x: f64) -> f64 {
        match &self.kind {
            DynamicsKind::Zero => 0.0,
            DynamicsKind::Sine => x.sin(),
            DynamicsKind::Linear { slope } => slope * x,
            DynamicsKind::Custom(f) => f(t, x),
        }
    }
}

/// The controller families. `alpha_star` (or the fixed exponent `alpha` of
/// the signed-aggregate rule) must lie strictly in (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub enum ControllerSpec {
    /// `u_i = -beta * sum_j a_ij * sig(r_i - r_j)^{alpha(|r_i - r_j|)}` with
    /// the exponent switching per the pairwise norm.
    VariableExponent {
        beta: f64,
        alpha_star: f64,
        /// Pick the exponent per component instead of from the pair norm.
        /// Identical for m = 1.
        per_component_exponent: bool,
    },
    /// `u_i = -epsilon * sum_j a_ij * sig(x_i - x_j)^{alpha_star}`, fixed exponent.
    PureSig { epsilon: f64, alpha_star: f64 },
    /// `u_i = -epsilon * sig( sum_j a_ij (x_i - x_j) )^{alpha}` applied to the
    /// aggregate, fixed exponent.
    SignedAggregate { epsilon: f64, alpha: f64 },
    /// `u_i = -k * sum_j a_ij (r_i - r_j) - beta * sum_j a_ij sig(r_i - r_j)^{alpha_star}`.
    Combined { k: f64, beta: f64, alpha_star: f64 },
    /// `u_i = -k * sum_j a_ij (r_i - r_j)`.
    Linear { k: f64 },
}

impl ControllerSpec {
    pub fn variable_exponent(beta: f64, alpha_star: f64) -> Result<Self> {
        check_gain("beta", beta)?;
        check_alpha(alpha_star)?;
        Ok(Self::VariableExponent {
            beta,
            alpha_star,
            per_component_exponent: false,
        })
    }

    pub fn pure_sig(epsilon: f64, alpha_star: f64) -> Result<Self> {
        check_positive_gain("epsilon", epsilon)?;
        check_alpha(alpha_star)?;
        Ok(Self::PureSig {
            epsilon,
            alpha_star,
        })
    }

    pub fn signed_aggregate(epsilon: f64, alpha: f64) -> Result<Self> {
        check_positive_gain("epsilon", epsilon)?;
        check_alpha(alpha)?;
        Ok(Self::SignedAggregate { epsilon, alpha })
    }

    pub fn combined(k: f64, beta: f64, alpha_star: f64) -> Result<Self> {
        check_gain("k", k)?;
        check_gain("beta", beta)?;
        check_alpha(alpha_star)?;
        Ok(Self::Combined {
            k,
            beta,
            alpha_star,
        })
    }

    pub fn linear(k: f64) -> Result<Self> {
        check_gain("k", k)?;
        Ok(Self::Linear { k })
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Self::VariableExponent { .. } => "variable-exponent",
            Self::PureSig { .. } => "pure-sig",
            Self::SignedAggregate { .. } => "signed-aggregate",
            Self::Combined { .. } => "combined",
            Self::Linear { .. } => "linear",
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "exponent must lie strictly in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

fn check_gain(name: &str, value: f64) -> Result<()> {
    if !(value >= 0.0 && value.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gain {name} must be nonnegative, got {value}"
        )));
    }
    Ok(())
}

fn check_positive_gain(name: &str, value: f64) -> Result<()> {
    if !(value > 0.0 && value.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gain {name} must be positive, got {value}"
        )));
    }
    Ok(())
}

/// Control input of agent `i` under the given graph and controller family.
/// Agents with no in-neighbors get the zero vector.
pub fn control_input(
    spec: &ControllerSpec,
    g: &DirectedGraph,
    state: &AgentState,
    i: usize,
) -> Vec<f64> {
    let m = state.m();
    let mut u = vec![0.0; m];
    let r_i = state.agent(i);
    match spec {
        ControllerSpec::VariableExponent {
            beta,
            alpha_star,
            per_component_exponent,
        } => {
            for &(j, w) in g.in_neighbors(i) {
                let r_j = state.agent(j);
                if *per_component_exponent {
                    for k in 0..m {
                        let d = r_i[k] - r_j[k];
                        let a = exponent_schedule(d.abs(), *alpha_star);
                        u[k] -= beta * w * sig_pow(d, a);
                    }
                } else {
                    let norm = pair_norm(r_i, r_j);
                    let a = exponent_schedule(norm, *alpha_star);
                    for k in 0..m {
                        u[k] -= beta * w * sig_pow(r_i[k] - r_j[k], a);
                    }
                }
            }
        }
        ControllerSpec::PureSig {
            epsilon,
            alpha_star,
        } => {
            for &(j, w) in g.in_neighbors(i) {
                let r_j = state.agent(j);
                for k in 0..m {
                    u[k] -= epsilon * w * sig_pow(r_i[k] - r_j[k], *alpha_star);
                }
            }
        }
        ControllerSpec::SignedAggregate { epsilon, alpha } => {
            let mut agg = vec![0.0; m];
            for &(j, w) in g.in_neighbors(i) {
                let r_j = state.agent(j);
                for k in 0..m {
                    agg[k] += w * (r_i[k] - r_j[k]);
                }
            }
            for k in 0..m {
                u[k] = -epsilon * sig_pow(agg[k], *alpha);
            }
        }
        ControllerSpec::Combined {
            k: kg,
            beta,
            alpha_star,
        } => {
            for &(j, w) in g.in_neighbors(i) {
                let r_j = state.agent(j);
                for k in 0..m {
                    let d = r_i[k] - r_j[k];
                    u[k] -= w * (kg * d + beta * sig_pow(d, *alpha_star));
                }
            }
        }
        ControllerSpec::Linear { k: kg } => {
            for &(j, w) in g.in_neighbors(i) {
                let r_j = state.agent(j);
                for k in 0..m {
                    u[k] -= kg * w * (r_i[k] - r_j[k]);
                }
            }
        }
    }
    u
}

fn pair_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Right-hand side of the closed loop: `phi(t, r_i) + u_i` per component,
/// flattened agent-major.
pub fn closed_loop_rhs(
    spec: &ControllerSpec,
    dynamics: &InherentDynamics,
    g: &DirectedGraph,
    t: f64,
    state: &AgentState,
) -> Vec<f64> {
    let (n, m) = (state.n(), state.m());
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        let u = control_input(spec, g, state, i);
        let r_i = state.agent(i);
        for k in 0..m {
            out[i * m + k] = dynamics.phi(t, r_i[k]) + u[k];
        }
    }
    out
}
