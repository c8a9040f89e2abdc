//! Stacked agent states.

use crate::error::{Error, Result};

/// The stacked state of `n` agents, each of dimension `m`, at a point in time.
///
/// Values are stored row-major: agent `i`'s state occupies
/// `values[i * m .. (i + 1) * m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    values: Vec<f64>,
    n: usize,
    m: usize,
    /// Simulation time in seconds.
    pub t: f64,
}

impl AgentState {
    pub fn new(n: usize, m: usize, values: Vec<f64>, t: f64) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidParameter(
                "agent count and dimension must be positive".into(),
            ));
        }
        if values.len() != n * m {
            return Err(Error::InvalidParameter(format!(
                "state length {} does not match n*m = {}",
                values.len(),
                n * m
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter(
                "state contains non-finite entries".into(),
            ));
        }
        Ok(Self { values, n, m, t })
    }

    /// Scalar (m = 1) state from one value per agent.
    pub fn from_scalars(values: Vec<f64>, t: f64) -> Result<Self> {
        let n = values.len();
        Self::new(n, 1, values, t)
    }

    /// Integrator-internal constructor: stage states may be transiently
    /// non-finite and the step itself reports blowups.
    pub(crate) fn new_unchecked(n: usize, m: usize, values: Vec<f64>, t: f64) -> Self {
        debug_assert_eq!(values.len(), n * m);
        Self { values, n, m, t }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Agent `i`'s state as a slice of length `m`.
    pub fn agent(&self, i: usize) -> &[f64] {
        &self.values[i * self.m..(i + 1) * self.m]
    }

    /// Component `k` of agent `i`.
    pub fn component(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.m + k]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Per-component max − min across agents.
    pub fn disagreement(&self) -> Vec<f64> {
        disagreement_of(&self.values, self.n, self.m)
    }
}

/// Per-component max − min of a flattened n×m state.
pub(crate) fn disagreement_of(values: &[f64], n: usize, m: usize) -> Vec<f64> {
    let mut out = vec![0.0; m];
    for (k, slot) in out.iter_mut().enumerate() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let v = values[i * m + k];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        *slot = hi - lo;
    }
    out
}
