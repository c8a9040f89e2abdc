//! Time-indexed simulation records and their CSV form.
//!
//! CSV schema: header `t,r_1,...,r_{n*m},G,event` (one `G_k` column per
//! component when m > 1). Floats are serialized with 17 significant digits so
//! parsing the file back reproduces the trace exactly.

use std::fmt;

use crate::error::{Error, Result};
use crate::state::AgentState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Switch,
    ConsensusSnap,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventKind::Switch => write!(f, "switch"),
            EventKind::ConsensusSnap => write!(f, "consensus-snap"),
        }
    }
}

/// Recorded run of a simulation: states, disagreement, optional controls,
/// and timestamped events. Times are strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub n: usize,
    pub m: usize,
    pub times: Vec<f64>,
    /// Flattened n*m state per sample.
    pub states: Vec<Vec<f64>>,
    /// Per-component max - min per sample.
    pub disagreement: Vec<Vec<f64>>,
    /// Flattened n*m control input per sample, when recorded.
    pub controls: Option<Vec<Vec<f64>>>,
    pub events: Vec<(f64, EventKind)>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state_at(&self, idx: usize) -> AgentState {
        AgentState::new(self.n, self.m, self.states[idx].clone(), self.times[idx])
            .expect("trace rows are well-formed")
    }

    /// Scalar disagreement per sample: the max across components.
    pub fn g_scalar(&self) -> Vec<f64> {
        self.disagreement
            .iter()
            .map(|d| d.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
            .collect()
    }

    pub fn final_state(&self) -> AgentState {
        self.state_at(self.len() - 1)
    }

    fn event_label(&self, t: f64) -> String {
        let mut parts: Vec<String> = Vec::new();
        for &(et, kind) in &self.events {
            if et == t {
                parts.push(kind.to_string());
            }
        }
        parts.join(";")
    }

    /// Serializes the trace; floats carry 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push('t');
        for c in 1..=self.n * self.m {
            out.push_str(&format!(",r_{c}"));
        }
        if self.m == 1 {
            out.push_str(",G");
        } else {
            for k in 1..=self.m {
                out.push_str(&format!(",G_{k}"));
            }
        }
        out.push_str(",event\n");
        for (idx, &t) in self.times.iter().enumerate() {
            out.push_str(&fmt_f64(t));
            for v in &self.states[idx] {
                out.push(',');
                out.push_str(&fmt_f64(*v));
            }
            for d in &self.disagreement[idx] {
                out.push(',');
                out.push_str(&fmt_f64(*d));
            }
            out.push(',');
            out.push_str(&self.event_label(t));
            out.push('\n');
        }
        out
    }

    /// Parses a trace previously written by [`Trace::to_csv`]. Controls are
    /// not serialized and come back as `None`.
    pub fn from_csv(text: &str, n: usize, m: usize) -> Result<Trace> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidParameter("empty trace file".into()))?;
        let expected_cols = 1 + n * m + m + 1;
        if header.split(',').count() != expected_cols {
            return Err(Error::InvalidParameter(format!(
                "trace header has {} columns, expected {expected_cols} for n = {n}, m = {m}",
                header.split(',').count()
            )));
        }
        let mut trace = Trace {
            n,
            m,
            times: Vec::new(),
            states: Vec::new(),
            disagreement: Vec::new(),
            controls: None,
            events: Vec::new(),
        };
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != expected_cols {
                return Err(Error::InvalidParameter(format!(
                    "trace line {} has {} fields, expected {expected_cols}",
                    lineno + 2,
                    fields.len()
                )));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|_| {
                    Error::InvalidParameter(format!("bad float {s:?} on line {}", lineno + 2))
                })
            };
            let t = parse(fields[0])?;
            let state: Vec<f64> = fields[1..1 + n * m]
                .iter()
                .map(|s| parse(s))
                .collect::<Result<_>>()?;
            let dis: Vec<f64> = fields[1 + n * m..1 + n * m + m]
                .iter()
                .map(|s| parse(s))
                .collect::<Result<_>>()?;
            let event = fields[expected_cols - 1];
            if !event.is_empty() {
                for part in event.split(';') {
                    let kind = match part {
                        "switch" => EventKind::Switch,
                        "consensus-snap" => EventKind::ConsensusSnap,
                        other => {
                            return Err(Error::InvalidParameter(format!(
                                "unknown event {other:?} on line {}",
                                lineno + 2
                            )))
                        }
                    };
                    trace.events.push((t, kind));
                }
            }
            if let Some(&prev) = trace.times.last() {
                if t <= prev {
                    return Err(Error::InvalidParameter(format!(
                        "times not strictly increasing at line {}",
                        lineno + 2
                    )));
                }
            }
            trace.times.push(t);
            trace.states.push(state);
            trace.disagreement.push(dis);
        }
        Ok(trace)
    }
}

/// 17-significant-digit float form, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
