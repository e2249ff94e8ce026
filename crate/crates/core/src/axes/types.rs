use std::fmt;

use serde::{Deserialize, Serialize};

use crate::datamodel::Stream;
use crate::error::{Error, Result};
use crate::probes::ProbeKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Informativeness,
    PEquivariance,
    REquivariance,
    Invariance,
    DisentanglementDelta,
    Mig,
}

impl Axis {
    pub const ALL: [Axis; 6] = [
        Axis::Informativeness,
        Axis::PEquivariance,
        Axis::REquivariance,
        Axis::Invariance,
        Axis::DisentanglementDelta,
        Axis::Mig,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Axis::Informativeness => "informativeness",
            Axis::PEquivariance => "p_equivariance",
            Axis::REquivariance => "r_equivariance",
            Axis::Invariance => "invariance",
            Axis::DisentanglementDelta => "disentanglement_delta",
            Axis::Mig => "mig",
        }
    }

    /// Axes keyed by a task; the others are keyed by a transform (or, for MIG,
    /// by the stream alone).
    pub fn is_task_axis(self) -> bool {
        matches!(self, Axis::Informativeness | Axis::DisentanglementDelta)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Axis::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown axis `{s}`")))
    }
}

/// Stream a task is probed on. `Concat` only appears in task declarations
/// that explicitly ask for the concatenated input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStream {
    Timbre,
    Structure,
    Concat,
}

impl TaskStream {
    pub fn single(self) -> Option<Stream> {
        match self {
            TaskStream::Timbre => Some(Stream::Timbre),
            TaskStream::Structure => Some(Stream::Structure),
            TaskStream::Concat => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TaskStream::Timbre => "timbre",
            TaskStream::Structure => "structure",
            TaskStream::Concat => "concat",
        }
    }
}

impl From<Stream> for TaskStream {
    fn from(s: Stream) -> Self {
        match s {
            Stream::Timbre => TaskStream::Timbre,
            Stream::Structure => TaskStream::Structure,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskTarget {
    InstrumentClass,
    PitchClass,
    ChordType,
    TempoRegression,
    Multipitch,
}

impl TaskTarget {
    pub fn default_metric(self) -> Metric {
        match self {
            TaskTarget::InstrumentClass | TaskTarget::PitchClass | TaskTarget::ChordType => {
                Metric::Accuracy
            }
            TaskTarget::TempoRegression => Metric::Mse,
            TaskTarget::Multipitch => Metric::F1Track,
        }
    }

    pub fn probe_kind(self) -> ProbeKind {
        match self.default_metric() {
            Metric::Accuracy => ProbeKind::LinearClassifier,
            Metric::Mse => ProbeKind::LinearRegressor,
            _ => ProbeKind::MlpMultilabel,
        }
    }

    pub fn is_discrete(self) -> bool {
        self.default_metric() == Metric::Accuracy
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    Mse,
    F1Track,
    Cosine,
    Mig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    HigherIsBetter,
    LowerIsBetter,
}

impl Direction {
    pub fn arrow(self) -> &'static str {
        match self {
            Direction::HigherIsBetter => "↑",
            Direction::LowerIsBetter => "↓",
        }
    }
}

impl Metric {
    pub fn direction(self) -> Direction {
        match self {
            Metric::Mse => Direction::LowerIsBetter,
            _ => Direction::HigherIsBetter,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Metric::Accuracy => "Acc",
            Metric::Mse => "MSE",
            Metric::F1Track => "F1",
            Metric::Cosine => "Cos sim",
            Metric::Mig => "MIG",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub name: String,
    pub stream: TaskStream,
    pub target: TaskTarget,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Metric>,
}

impl TaskSpec {
    pub fn new(name: &str, stream: TaskStream, target: TaskTarget) -> Self {
        Self {
            name: name.to_string(),
            stream,
            target,
            metric: None,
        }
    }

    pub fn metric(&self) -> Metric {
        self.metric.unwrap_or(self.target.default_metric())
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Config("task name must be non-empty".into()));
        }
        if self.metric() != self.target.default_metric() {
            return Err(Error::Config(format!(
                "task `{}`: metric {:?} does not fit target {:?}",
                self.name,
                self.metric(),
                self.target
            )));
        }
        Ok(())
    }
}

/// Per-axis switches for the variants the engine supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AxisOptions {
    pub p_equivariance_input: PairInput,
    pub invariance_mode: InvarianceMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairInput {
    /// `z(x) ⊕ z(t(x))`, both pooled.
    #[default]
    Pair,
    /// `z(t(x))` alone.
    TransformedOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvarianceMode {
    #[default]
    Pooled,
    /// Cosine per frame over the common prefix, averaged over frames.
    Framewise,
}

fn is_false(v: &bool) -> bool {
    !*v
}

/// One cell of a run: an axis evaluated for one model, stream, task (or
/// transform) and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisResult {
    pub axis: Axis,
    pub model: String,
    pub stream: TaskStream,
    /// Task name, transform name, or `mig`.
    pub task: String,
    pub metric: Metric,
    pub value: f64,
    pub seed: u64,
    pub config_fingerprint: String,
    pub sample_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std: Option<f64>,
    /// Δ only: metric of the probe on the task's own stream.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_own: Option<f64>,
    /// Δ only: metric of the probe on own ⊕ complement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_concat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped_zero_vectors: Option<usize>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub degenerate: bool,
    /// Base model this row is an ablation of, for report layout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant_of: Option<String>,
}

impl AxisResult {
    pub fn new(
        axis: Axis,
        stream: TaskStream,
        task: &str,
        metric: Metric,
        value: f64,
        seed: u64,
        sample_count: usize,
    ) -> Self {
        Self {
            axis,
            model: String::new(),
            stream,
            task: task.to_string(),
            metric,
            value,
            seed,
            config_fingerprint: String::new(),
            sample_count,
            std: None,
            raw_own: None,
            raw_concat: None,
            skipped_zero_vectors: None,
            degenerate: false,
            variant_of: None,
        }
    }

    /// Sort key of the results file.
    pub fn sort_key(&self) -> (Axis, TaskStream, &str, &str, u64) {
        (self.axis, self.stream, &self.task, &self.model, self.seed)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| {
            Err(Error::Config(format!(
                "{} result for {}/{}: {msg}",
                self.axis, self.model, self.task
            )))
        };
        if !self.value.is_finite() {
            return bad("value is not finite");
        }
        let v = self.value;
        if self.axis == Axis::DisentanglementDelta {
            if v < 0.0 {
                return bad("delta is negative");
            }
        } else {
            match self.metric {
                Metric::Cosine if !(-1.0..=1.0).contains(&v) => return bad("cosine outside [-1, 1]"),
                Metric::Accuracy | Metric::F1Track if !(0.0..=1.0).contains(&v) => {
                    return bad("score outside [0, 1]")
                }
                Metric::Mse if v < 0.0 => return bad("negative mse"),
                _ => {}
            }
        }
        Ok(())
    }
}
