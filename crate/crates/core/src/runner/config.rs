use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::axes::{Axis, AxisOptions, TaskSpec, TaskTarget};
use crate::datamodel::{Stream, Transform};
use crate::error::{Error, Result};
use crate::probes::ProbeConfig;

/// A transform to evaluate on one stream. `axes` restricts which of the
/// transform axes (P-/R-equivariance, invariance) use it; empty means all.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformSpec {
    pub stream: Stream,
    pub transform: Transform,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub axes: Vec<Axis>,
}

impl TransformSpec {
    pub fn applies_to(&self, axis: Axis) -> bool {
        self.axes.is_empty() || self.axes.contains(&axis)
    }
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Manifest path per model name. Relative paths resolve against the
    /// config file's directory.
    pub datasets: BTreeMap<String, PathBuf>,
    /// Ablation rows: variant model name to the model it modifies.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub variants: BTreeMap<String, String>,
    pub tasks: Vec<TaskSpec>,
    pub axes: Vec<Axis>,
    #[serde(default)]
    pub transforms: Vec<TransformSpec>,
    /// Discrete factors for the MIG cross-check.
    #[serde(default)]
    pub mig_factors: Vec<TaskTarget>,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub options: AxisOptions,
    pub seeds: Vec<u64>,
    #[serde(default = "one")]
    pub workers: usize,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file and resolves its relative paths.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in cfg.datasets.values_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.datasets.is_empty() {
            return bad("at least one dataset is required".into());
        }
        if self.tasks.is_empty() {
            return bad("at least one task is required".into());
        }
        if self.axes.is_empty() {
            return bad("at least one axis is required".into());
        }
        if self.seeds.is_empty() {
            return bad("seeds must be non-empty".into());
        }
        if self.workers == 0 {
            return bad("workers must be >= 1".into());
        }
        let mut names = Vec::new();
        for t in &self.tasks {
            t.validate()?;
            if names.contains(&&t.name) {
                return bad(format!("task `{}` declared twice", t.name));
            }
            names.push(&t.name);
        }
        for (variant, base) in &self.variants {
            if !self.datasets.contains_key(variant) || !self.datasets.contains_key(base) {
                return bad(format!("variant `{variant}` -> `{base}` names an unknown model"));
            }
            if self.variants.contains_key(base) {
                return bad(format!("variant `{variant}` is based on another variant"));
            }
        }
        let transform_axes = [Axis::PEquivariance, Axis::REquivariance, Axis::Invariance];
        if self.axes.iter().any(|a| transform_axes.contains(a)) && self.transforms.is_empty() {
            return bad("transform axes requested but no transforms listed".into());
        }
        if self.axes.contains(&Axis::Mig) {
            if self.mig_factors.len() < 2 {
                return bad("mig needs at least two mig_factors".into());
            }
            if let Some(f) = self.mig_factors.iter().find(|f| !f.is_discrete()) {
                return bad(format!("mig factor {f:?} is not discrete"));
            }
        }
        let spec = crate::probes::ProbeSpec::new(
            crate::probes::ProbeKind::MlpMultilabel,
            1,
            1,
            &self.probe,
            0,
        );
        spec.validate()
    }
}
