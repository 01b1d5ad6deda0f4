//! Pulse schedules: timed sequences of tunable-coupling settings, and their
//! JSON form.
//!
//! ```json
//! {"segments":[{"duration":0.785,"couplings":{"b0:2-3":1.0,
//!   "b1:2-3":{"shape":"sin2","peak":0.2}}}],
//!  "metadata":{"gate":"...","global_phase":0.0,"byproducts":{},"predictions":{}}}
//! ```
//!
//! Edge keys are `b<block>:<a>-<b>` with 1-based qubit labels. Floats are
//! written in shortest round-trip form, so `from_json(to_json(s)) == s` bit
//! for bit.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A tunable edge of a chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct EdgeKey {
    pub block: usize,
    pub a: u8,
    pub b: u8,
}

impl EdgeKey {
    pub fn new(block: usize, a: u8, b: u8) -> Self {
        Self { block, a: a.min(b), b: a.max(b) }
    }
}

impl fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b{}:{}-{}", self.block, self.a, self.b)
    }
}

impl FromStr for EdgeKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("malformed edge key {s:?}"));
        let rest = s.strip_prefix('b').ok_or_else(bad)?;
        let (block, pair) = rest.split_once(':').ok_or_else(bad)?;
        let (a, b) = pair.split_once('-').ok_or_else(bad)?;
        let (a, b): (u8, u8) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
        if a == b {
            return Err(bad());
        }
        Ok(Self::new(block.parse().map_err(|_| bad())?, a, b))
    }
}

impl TryFrom<String> for EdgeKey {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<EdgeKey> for String {
    fn from(k: EdgeKey) -> String {
        k.to_string()
    }
}

/// Coupling profile over the local time `tau` of a segment of length `duration`.
pub trait Ramp {
    fn value(&self, tau: f64, duration: f64) -> f64;
}

impl<F: Fn(f64, f64) -> f64> Ramp for F {
    fn value(&self, tau: f64, duration: f64) -> f64 {
        self(tau, duration)
    }
}

/// Serializable ramp shapes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum RampSpec {
    /// `peak * sin^2(pi tau / duration)`; zero with zero slope at both ends.
    Sin2 { peak: f64 },
    Constant { value: f64 },
    Linear { start: f64, end: f64 },
    /// Piecewise-linear interpolation of equally spaced samples spanning the segment.
    Table { values: Vec<f64> },
}

impl Ramp for RampSpec {
    fn value(&self, tau: f64, duration: f64) -> f64 {
        let x = if duration > 0.0 { (tau / duration).clamp(0.0, 1.0) } else { 0.0 };
        match self {
            RampSpec::Sin2 { peak } => peak * (PI * x).sin().powi(2),
            RampSpec::Constant { value } => *value,
            RampSpec::Linear { start, end } => start + (end - start) * x,
            RampSpec::Table { values } => match values.len() {
                0 => 0.0,
                1 => values[0],
                n => {
                    let pos = x * (n - 1) as f64;
                    let i = (pos.floor() as usize).min(n - 2);
                    let f = pos - i as f64;
                    values[i] * (1.0 - f) + values[i + 1] * f
                }
            },
        }
    }
}

impl RampSpec {
    pub fn is_finite(&self) -> bool {
        match self {
            RampSpec::Sin2 { peak } => peak.is_finite(),
            RampSpec::Constant { value } => value.is_finite(),
            RampSpec::Linear { start, end } => start.is_finite() && end.is_finite(),
            RampSpec::Table { values } => values.iter().all(|v| v.is_finite()),
        }
    }
}

/// Setting of one edge during a segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coupling {
    Constant(f64),
    Ramp(RampSpec),
}

impl Coupling {
    pub fn value(&self, tau: f64, duration: f64) -> f64 {
        match self {
            Coupling::Constant(v) => *v,
            Coupling::Ramp(r) => r.value(tau, duration),
        }
    }

    pub fn is_ramp(&self) -> bool {
        matches!(self, Coupling::Ramp(_))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration: f64,
    pub couplings: BTreeMap<EdgeKey, Coupling>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Segment {
    pub fn constant(duration: f64, couplings: impl IntoIterator<Item = (EdgeKey, f64)>) -> Self {
        Self { duration, couplings: couplings.into_iter().map(|(k, v)| (k, Coupling::Constant(v))).collect(), label: None }
    }

    pub fn idle(duration: f64) -> Self {
        Self::constant(duration, [])
    }

    pub fn ramped(duration: f64, edge: EdgeKey, ramp: RampSpec) -> Self {
        Self { duration, couplings: BTreeMap::from([(edge, Coupling::Ramp(ramp))]), label: None }
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn has_ramp(&self) -> bool {
        self.couplings.values().any(Coupling::is_ramp)
    }

    /// Coupling values at local time `tau`.
    pub fn values_at(&self, tau: f64) -> BTreeMap<EdgeKey, f64> {
        self.couplings.iter().map(|(k, c)| (*k, c.value(tau, self.duration))).collect()
    }
}

/// Phases and predictions attached by the compiler.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScheduleMetadata {
    #[serde(default)]
    pub gate: String,
    #[serde(default)]
    pub global_phase: f64,
    #[serde(default)]
    pub byproducts: BTreeMap<String, f64>,
    #[serde(default)]
    pub predictions: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub segments: Vec<Segment>,
    #[serde(default)]
    pub metadata: ScheduleMetadata,
}

impl PulseSchedule {
    pub fn new(gate: impl Into<String>) -> Self {
        Self { segments: Vec::new(), metadata: ScheduleMetadata { gate: gate.into(), ..Default::default() } }
    }

    /// Appends a segment; zero-length segments are dropped.
    pub fn push(&mut self, segment: Segment) {
        if segment.duration > 0.0 {
            self.segments.push(segment);
        }
    }

    /// Appends all segments of `other`, adding its global phase to ours.
    pub fn extend(&mut self, other: &PulseSchedule) {
        for s in &other.segments {
            self.push(s.clone());
        }
        self.metadata.global_phase += other.metadata.global_phase;
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn is_piecewise_constant(&self) -> bool {
        !self.segments.iter().any(Segment::has_ramp)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.duration > 0.0) || !s.duration.is_finite() {
                return Err(Error::InvalidParameter(format!("segment {i} has non-positive duration {}", s.duration)));
            }
            let finite = s.couplings.values().all(|c| match c {
                Coupling::Constant(v) => v.is_finite(),
                Coupling::Ramp(r) => r.is_finite(),
            });
            if !finite {
                return Err(Error::InvalidParameter(format!("segment {i} has non-finite couplings")));
            }
        }
        Ok(())
    }

    /// Whether every tunable coupling starts and ends at zero, so the path begins and ends at the idle point.
    pub fn is_cyclic(&self) -> bool {
        let (Some(first), Some(last)) = (self.segments.first(), self.segments.last()) else {
            return true;
        };
        let start = first.values_at(0.0);
        let end = last.values_at(last.duration);
        start.values().chain(end.values()).all(|v| v.abs() <= 1e-12)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let schedule: PulseSchedule = serde_json::from_str(s)?;
        schedule.validate()?;
        Ok(schedule)
    }
}
