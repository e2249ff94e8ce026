use serde::{Deserialize, Serialize};

use super::generate::{build_world, Resolved};
use super::spec::{Encoding, FactorKind, FactorWorldSpec};
use crate::axes::TaskStream;
use crate::datamodel::{Stream, Transform};
use crate::error::{Error, Result};
use crate::numerics::{dot, matmul_nt, Rng};

pub const MONTE_CARLO_SAMPLES: usize = 100_000;
const ORACLE_STREAM: u64 = 999;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleQuery {
    /// Best achievable test accuracy for a categorical factor's label when the
    /// probe sees `input` (pooled).
    BayesAccuracy { factor: String, input: TaskStream },
    /// Mean pooled cosine between clean and transformed views of `stream`.
    ExpectedInvariance { stream: Stream, transform: Transform },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleValue {
    pub value: f64,
    /// Monte-Carlo standard error; 0 for exact answers.
    pub std_error: f64,
}

impl OracleValue {
    fn exact(value: f64) -> Self {
        Self { value, std_error: 0.0 }
    }
}

/// Ground truth for `query`, derived from the generative model rather than
/// from generated files.
pub fn world_oracle(spec: &FactorWorldSpec, query: &OracleQuery) -> Result<OracleValue> {
    spec.validate()?;
    match query {
        OracleQuery::BayesAccuracy { factor, input } => bayes_accuracy(spec, factor, *input),
        OracleQuery::ExpectedInvariance { stream, transform } => {
            expected_invariance(spec, *stream, *transform)
        }
    }
}

/// A noisy copy of the factor encoding visible to the probe.
struct Copy {
    gain: f64,
    sigma: f64,
}

fn bayes_accuracy(spec: &FactorWorldSpec, name: &str, input: TaskStream) -> Result<OracleValue> {
    let f = spec
        .factors
        .iter()
        .find(|f| f.name == name)
        .ok_or_else(|| Error::UnsupportedQuery(format!("no factor named `{name}`")))?;
    let FactorKind::Categorical(k) = f.kind else {
        return Err(Error::UnsupportedQuery(format!(
            "`{name}` is continuous; accuracy is undefined"
        )));
    };
    let chance = OracleValue::exact(1.0 / k as f64);
    if f.shuffle_labels {
        return Ok(chance);
    }
    // pooling T frames of independent noise divides its std by sqrt(T)
    let sigma = |s: Stream| spec.noise_std / (spec.frames(s) as f64).sqrt();
    let sees = |s: Stream| input == TaskStream::Concat || input.single() == Some(s);
    let mut copies = Vec::new();
    if sees(f.stream) && f.gain > 0.0 {
        copies.push(Copy {
            gain: f.gain,
            sigma: sigma(f.stream),
        });
    }
    if sees(f.stream.complement()) && f.leakage > 0.0 {
        copies.push(Copy {
            gain: f.leakage,
            sigma: sigma(f.stream.complement()),
        });
    }
    if copies.is_empty() {
        return Ok(chance);
    }
    if copies.iter().any(|c| c.sigma == 0.0) {
        return Ok(OracleValue::exact(1.0));
    }

    let one_hot = f.encoding() == Encoding::OneHot;
    let mut rng = Rng::fork(spec.seed, ORACLE_STREAM);
    let mut hits = 0usize;
    let mut scores = vec![0.0; k];
    let mut obs = vec![0.0; k];
    for _ in 0..MONTE_CARLO_SAMPLES {
        let c = rng.below(k);
        scores.iter_mut().for_each(|s| *s = 0.0);
        for copy in &copies {
            let inv_var = 1.0 / (copy.sigma * copy.sigma);
            if one_hot {
                for (j, o) in obs.iter_mut().enumerate() {
                    let mean = if j == c { copy.gain } else { 0.0 };
                    *o = mean + copy.sigma * rng.normal();
                }
                // log-likelihood up to class-independent terms
                for (s, o) in scores.iter_mut().zip(&obs) {
                    *s += copy.gain * o * inv_var;
                }
            } else {
                let x = copy.gain * c as f64 + copy.sigma * rng.normal();
                for (j, s) in scores.iter_mut().enumerate() {
                    let d = x - copy.gain * j as f64;
                    *s -= 0.5 * d * d * inv_var;
                }
            }
        }
        let mut best = 0;
        for j in 1..k {
            if scores[j] > scores[best] {
                best = j;
            }
        }
        hits += (best == c) as usize;
    }
    let n = MONTE_CARLO_SAMPLES as f64;
    let acc = hits as f64 / n;
    Ok(OracleValue {
        value: acc,
        std_error: (acc * (1.0 - acc) / n).sqrt(),
    })
}

fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let (na, nb) = (dot(a, a), dot(b, b));
    if na.sqrt() < 1e-12 || nb.sqrt() < 1e-12 {
        return None;
    }
    Some((dot(a, b) / (na * nb).sqrt()).clamp(-1.0, 1.0))
}

fn expected_invariance(spec: &FactorWorldSpec, stream: Stream, transform: Transform) -> Result<OracleValue> {
    let j = spec
        .transforms
        .iter()
        .position(|t| t.transform == transform)
        .ok_or_else(|| Error::UnsupportedQuery(format!("world has no {transform} model")))?;
    if spec.transforms[j].stream != stream {
        return Ok(OracleValue::exact(1.0));
    }
    let world = build_world(spec)?;
    let action = &world.actions[j];
    if matches!(action, Resolved::Noise) {
        return Err(Error::UnsupportedQuery(
            "invariance under noise replacement has no closed form".into(),
        ));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for view in world.views.iter().filter(|v| v.model == j) {
        let z = world.items[view.base].streams[&stream].column_means();
        let p = view.meta.param_norm;
        let sim = match action {
            Resolved::Additive(u) => {
                // (|z|^2 + p z.u) / (|z| |z + p u|)
                let z = z.as_slice();
                let zz = dot(z, z);
                let zu = dot(z, u);
                let uu = dot(u, u);
                let moved = zz + 2.0 * p * zu + p * p * uu;
                (zz.sqrt() >= 1e-12 && moved.sqrt() >= 1e-12)
                    .then(|| ((zz + p * zu) / (zz * moved).sqrt()).clamp(-1.0, 1.0))
            }
            Resolved::Linear { a, b } => {
                let mut az = matmul_nt(&z, a)?;
                for (v, bi) in az.as_mut_slice().iter_mut().zip(b) {
                    *v += p * bi;
                }
                cosine(z.as_slice(), az.as_slice())
            }
            Resolved::Noise => unreachable!(),
        };
        if let Some(s) = sim {
            sum += s;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Degenerate("every clean embedding has zero norm".into()));
    }
    Ok(OracleValue::exact(sum / count as f64))
}
