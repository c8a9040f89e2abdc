//! Gain thresholds for the controller families.
//!
//! `q_n` is the largest constant with
//! `-sum x_i^2 + sum_{i>=2} x_i x_{i-1} <= -q_n * sum x_i^2` for all real x,
//! i.e. the smallest eigenvalue of the symmetric tridiagonal matrix with unit
//! diagonal and -1/2 off-diagonal. Closed form: `1 - cos(pi / (n + 1))`.

use std::fmt;

use crate::dynamics::{ControllerSpec, InherentDynamics};
use crate::error::{Error, Result};
use crate::graph::SwitchingSchedule;

/// Alternative reported value of q_3 seen alongside this family of gain
/// conditions. It
/// equals `1 - cos(2*pi/5)` and does not coincide with the tight constant
/// `q_3 = 1 - cos(pi/4)`; both are surfaced side by side and this one is
/// never asserted.
pub const Q3_REPORTED: f64 = 0.6910;

/// Tight constant of the chain quadratic-form inequality.
pub fn q_n(n: usize) -> Result<f64> {
    match n {
        0 => Err(Error::InvalidParameter("q_n requires n >= 1".into())),
        // the closed form takes these exact algebraic values
        1 => Ok(1.0),
        2 => Ok(0.5),
        _ => Ok(1.0 - (std::f64::consts::PI / (n as f64 + 1.0)).cos()),
    }
}

/// The alternative convention for q_k, known only for k = 3 from the worked
/// example.
pub fn q_reported(k: usize) -> Option<f64> {
    (k == 3).then_some(Q3_REPORTED)
}

/// Slack constants of the gain condition. Any positive values are admissible;
/// small defaults keep the threshold near its infimum.
#[derive(Debug, Clone, Copy)]
pub struct Slack {
    pub epsilon1: f64,
    pub epsilon2: f64,
}

impl Default for Slack {
    fn default() -> Self {
        Self {
            epsilon1: 0.01,
            epsilon2: 0.01,
        }
    }
}

/// Minimum variable-exponent gain for `n` agents:
/// `(gamma + epsilon1) / (a_lower * q_{n-1}) + epsilon2`.
pub fn beta_threshold(
    gamma: f64,
    a_lower: f64,
    n: usize,
    epsilon1: f64,
    epsilon2: f64,
) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter(
            "gain threshold needs n >= 2 (q_{n-1} undefined for n = 1)".into(),
        ));
    }
    if !(gamma >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be nonnegative, got {gamma}"
        )));
    }
    for (name, v) in [
        ("a_lower", a_lower),
        ("epsilon1", epsilon1),
        ("epsilon2", epsilon2),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    Ok((gamma + epsilon1) / (a_lower * q_n(n - 1)?) + epsilon2)
}

/// Which q convention a satisfied/violated verdict refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QConvention {
    /// Tight eigenvalue constant.
    Tight,
    /// The reported q_3 = 0.6910 convention (only available for n = 4).
    Reported,
}

/// Outcome of checking a controller's gain against its threshold, carrying
/// both q conventions where the reported one is known.
#[derive(Debug, Clone)]
pub struct GainCertificate {
    pub family: &'static str,
    /// Name of the gain the condition constrains (beta or k); None when the
    /// family has no quantitative condition.
    pub gain_name: Option<&'static str>,
    pub gain_value: Option<f64>,
    pub n: usize,
    pub gamma: f64,
    pub a_lower: f64,
    pub epsilon1: f64,
    pub epsilon2: f64,
    /// Tight q_{n-1}.
    pub q_value: f64,
    /// Reported-convention q_{n-1}, when known (n = 4 only).
    pub q_reported: Option<f64>,
    pub threshold: Option<f64>,
    pub threshold_reported: Option<f64>,
    pub satisfied: Option<bool>,
    pub satisfied_reported: Option<bool>,
    /// False when the family has no quantitative gain condition.
    pub applicable: bool,
}

impl GainCertificate {
    /// The verdict under the chosen convention. Errors when the reported
    /// convention is requested but q is only known for n = 4.
    pub fn verdict(&self, convention: QConvention) -> Result<Option<bool>> {
        match convention {
            QConvention::Tight => Ok(self.satisfied),
            QConvention::Reported => {
                if !self.applicable {
                    return Ok(None);
                }
                self.satisfied_reported.map(Some).ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "reported q convention is only known for q_3 (n = 4), not n = {}",
                        self.n
                    ))
                })
            }
        }
    }
}

impl fmt::Display for GainCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "gain certificate")?;
        writeln!(f, "  family:              {}", self.family)?;
        if !self.applicable {
            writeln!(
                f,
                "  condition:           not applicable (no quantitative gain threshold)"
            )?;
            return Ok(());
        }
        if let (Some(name), Some(value)) = (self.gain_name, self.gain_value) {
            writeln!(f, "  gain:                {name} = {value}")?;
        }
        writeln!(f, "  n:                   {}", self.n)?;
        writeln!(f, "  gamma:               {}", self.gamma)?;
        writeln!(f, "  a_lower:             {}", self.a_lower)?;
        writeln!(
            f,
            "  epsilon1, epsilon2:  {}, {}",
            self.epsilon1, self.epsilon2
        )?;
        writeln!(f, "  q_{} (tight):        {:.12}", self.n - 1, self.q_value)?;
        match self.q_reported {
            Some(q) => writeln!(f, "  q_{} (reported):     {q}", self.n - 1)?,
            None => writeln!(f, "  q_{} (reported):     unknown", self.n - 1)?,
        }
        if let Some(t) = self.threshold {
            writeln!(f, "  threshold (tight):   {t:.6}")?;
        }
        if let Some(t) = self.threshold_reported {
            writeln!(f, "  threshold (reported): {t:.6}")?;
        }
        if let Some(s) = self.satisfied {
            writeln!(f, "  satisfied (tight):   {s}")?;
        }
        if let Some(s) = self.satisfied_reported {
            writeln!(f, "  satisfied (reported): {s}")?;
        }
        Ok(())
    }
}

/// Checks the family-appropriate gain condition for a scenario.
pub fn check_gain(
    spec: &ControllerSpec,
    dynamics: &InherentDynamics,
    schedule: &SwitchingSchedule,
    slack: Slack,
) -> Result<GainCertificate> {
    let n = schedule.n();
    let gamma = dynamics.gamma();
    let a_lower = schedule.bounds().lower();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "gain conditions need at least two agents".into(),
        ));
    }
    let q = q_n(n - 1)?;
    let q_rep = q_reported(n - 1);

    let mut cert = GainCertificate {
        family: spec.family_name(),
        gain_name: None,
        gain_value: None,
        n,
        gamma,
        a_lower,
        epsilon1: slack.epsilon1,
        epsilon2: slack.epsilon2,
        q_value: q,
        q_reported: q_rep,
        threshold: None,
        threshold_reported: None,
        satisfied: None,
        satisfied_reported: None,
        applicable: true,
    };

    match spec {
        ControllerSpec::VariableExponent { beta, .. } => {
            let thr = beta_threshold(gamma, a_lower, n, slack.epsilon1, slack.epsilon2)?;
            cert.gain_name = Some("beta");
            cert.gain_value = Some(*beta);
            cert.threshold = Some(thr);
            cert.satisfied = Some(*beta >= thr);
            if let Some(qr) = q_rep {
                let thr_r = (gamma + slack.epsilon1) / (a_lower * qr) + slack.epsilon2;
                cert.threshold_reported = Some(thr_r);
                cert.satisfied_reported = Some(*beta >= thr_r);
            }
        }
        ControllerSpec::Linear { k } => {
            let thr = beta_threshold(gamma, a_lower, n, slack.epsilon1, slack.epsilon2)?;
            cert.gain_name = Some("k");
            cert.gain_value = Some(*k);
            cert.threshold = Some(thr);
            cert.satisfied = Some(*k >= thr);
            if let Some(qr) = q_rep {
                let thr_r = (gamma + slack.epsilon1) / (a_lower * qr) + slack.epsilon2;
                cert.threshold_reported = Some(thr_r);
                cert.satisfied_reported = Some(*k >= thr_r);
            }
        }
        ControllerSpec::Combined { k, beta, .. } => {
            // strict condition k > gamma / (a_lower q_{n-1}) and beta > 0,
            // no slack constants involved
            let thr = gamma / (a_lower * q);
            cert.gain_name = Some("k");
            cert.gain_value = Some(*k);
            cert.threshold = Some(thr);
            cert.satisfied = Some(*k > thr && *beta > 0.0);
            if let Some(qr) = q_rep {
                let thr_r = gamma / (a_lower * qr);
                cert.threshold_reported = Some(thr_r);
                cert.satisfied_reported = Some(*k > thr_r && *beta > 0.0);
            }
        }
        ControllerSpec::PureSig { epsilon, .. } => {
            if gamma == 0.0 {
                // any positive gain works in the drift-free case
                cert.gain_name = Some("epsilon");
                cert.gain_value = Some(*epsilon);
                cert.threshold = Some(0.0);
                cert.satisfied = Some(*epsilon > 0.0);
                cert.threshold_reported = q_rep.map(|_| 0.0);
                cert.satisfied_reported = q_rep.map(|_| *epsilon > 0.0);
            } else {
                // no condition covers the fixed-exponent rule with drift
                cert.applicable = false;
            }
        }
        ControllerSpec::SignedAggregate { .. } => {
            cert.applicable = false;
        }
    }
    Ok(cert)
}
