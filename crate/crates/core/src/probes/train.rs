use super::net::{sigmoid, Network, Targets};
use super::spec::{ProbeKind, ProbeSpec};
use crate::error::{Error, Result};
use crate::numerics::{Adam, AdamConfig, Rng, Tensor2};

/// Per-dimension affine normalisation fitted on the training split.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Population mean and standard deviation per column; zero-variance columns
    /// get `std = 1`.
    pub fn fit(x: &Tensor2) -> Self {
        let mean = x.column_means().into_vec();
        let mut var = vec![0.0f64; x.cols()];
        for r in 0..x.rows() {
            for ((v, &m), &xi) in var.iter_mut().zip(&mean).zip(x.row(r)) {
                let d = xi - m;
                *v += d * d;
            }
        }
        let n = x.rows().max(1) as f64;
        let std = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > 1e-12 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    pub fn apply(&self, x: &Tensor2) -> Tensor2 {
        let mut out = x.clone();
        for r in 0..out.rows() {
            for ((v, m), s) in out.row_mut(r).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        out
    }
}

/// A fitted probe with its input normalisation.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedProbe {
    pub spec: ProbeSpec,
    pub standardizer: Standardizer,
    pub best_val_loss: f64,
    pub epochs_run: usize,
    /// Decision threshold for the multilabel MLP (0.5 until tuned).
    pub threshold: Option<f64>,
    pub(crate) network: Network,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predictions {
    Classes(Vec<usize>),
    Real(Tensor2),
    Multilabel { scores: Tensor2, active: Tensor2 },
}

fn check_inputs(spec: &ProbeSpec, x: &Tensor2, y: &Targets, split: &str) -> Result<()> {
    if x.rows() == 0 {
        return Err(Error::Degenerate(format!("{split} split is empty")));
    }
    if x.rows() != y.len() {
        return Err(Error::Shape(format!(
            "{split}: {} input rows but {} targets",
            x.rows(),
            y.len()
        )));
    }
    if x.cols() != spec.input_dim {
        return Err(Error::Shape(format!(
            "{split}: input width {} but probe expects {}",
            x.cols(),
            spec.input_dim
        )));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite(format!("{split} inputs")));
    }
    y.check(spec.kind, spec.output_dim)
}

/// Mini-batch Adam on the probe loss with early stopping on validation loss.
///
/// Patience resets only when validation loss improves on the last reference by
/// more than `min_delta`; the returned parameters are those of the epoch with
/// the lowest validation loss.
pub fn train_probe(
    spec: &ProbeSpec,
    x_train: &Tensor2,
    y_train: &Targets,
    x_val: &Tensor2,
    y_val: &Targets,
) -> Result<TrainedProbe> {
    spec.validate()?;
    check_inputs(spec, x_train, y_train, "train")?;
    check_inputs(spec, x_val, y_val, "val")?;
    if let Targets::Classes(c) = y_train {
        let first = c[0];
        if c.iter().all(|&v| v == first) {
            return Err(Error::Degenerate(
                "fewer than 2 classes present in train split".into(),
            ));
        }
    }

    let standardizer = Standardizer::fit(x_train);
    let xt = standardizer.apply(x_train);
    let xv = standardizer.apply(x_val);

    let mut rng = Rng::new(spec.seed);
    let mut network = Network::init(spec, &mut rng);
    let mut adam = Adam::new(AdamConfig::with_lr(spec.learning_rate), &network.params());

    let mut best_loss = f64::INFINITY;
    let mut best_network = network.clone();
    let mut reference = f64::INFINITY;
    let mut wait = 0;
    let mut epochs_run = 0;
    let mut order: Vec<usize> = (0..xt.rows()).collect();

    for epoch in 1..=spec.max_epochs {
        rng.shuffle(&mut order);
        for batch in order.chunks(spec.batch_size) {
            let xb = xt.select_rows(batch);
            let yb = y_train.select(batch);
            let (loss, grads) = network.loss_and_grad(&xb, &yb);
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("training loss at epoch {epoch}")));
            }
            let grads: Vec<&Tensor2> = grads.iter().collect();
            adam.step(&mut network.params_mut(), &grads)?;
        }
        epochs_run = epoch;

        let val_loss = network.loss(&xv, y_val);
        if !val_loss.is_finite() {
            return Err(Error::NonFinite(format!("validation loss at epoch {epoch}")));
        }
        if val_loss < best_loss {
            best_loss = val_loss;
            best_network = network.clone();
        }
        if val_loss < reference - spec.min_delta {
            reference = val_loss;
            wait = 0;
        } else {
            wait += 1;
            if wait >= spec.patience {
                break;
            }
        }
    }

    Ok(TrainedProbe {
        spec: *spec,
        standardizer,
        best_val_loss: best_loss,
        epochs_run,
        threshold: (spec.kind == ProbeKind::MlpMultilabel).then_some(0.5),
        network: best_network,
    })
}

impl TrainedProbe {
    /// Raw network outputs on already-standardised inputs.
    pub fn raw_outputs_standardized(&self, x_std: &Tensor2) -> Result<Tensor2> {
        if x_std.cols() != self.spec.input_dim {
            return Err(Error::Shape(format!(
                "input width {} but probe expects {}",
                x_std.cols(),
                self.spec.input_dim
            )));
        }
        Ok(self.network.forward(x_std))
    }

    pub fn raw_outputs(&self, x: &Tensor2) -> Result<Tensor2> {
        if x.cols() != self.spec.input_dim {
            return Err(Error::Shape(format!(
                "input width {} but probe expects {}",
                x.cols(),
                self.spec.input_dim
            )));
        }
        self.raw_outputs_standardized(&self.standardizer.apply(x))
    }

    /// Sigmoid scores of the multilabel MLP.
    pub fn scores(&self, x: &Tensor2) -> Result<Tensor2> {
        if self.spec.kind != ProbeKind::MlpMultilabel {
            return Err(Error::Config("scores only exist for mlp_multilabel".into()));
        }
        Ok(self.raw_outputs(x)?.map(sigmoid))
    }

    /// Mean loss on arbitrary data, using the stored standardisation.
    pub fn loss(&self, x: &Tensor2, y: &Targets) -> Result<f64> {
        check_inputs(&self.spec, x, y, "eval")?;
        Ok(self.network.loss(&self.standardizer.apply(x), y))
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = Some(threshold);
        self
    }
}

/// Applies a trained probe: class ids, real outputs, or sigmoid scores plus the
/// thresholded binary matrix (`score >= threshold`).
pub fn predict(probe: &TrainedProbe, x: &Tensor2) -> Result<Predictions> {
    let out = probe.raw_outputs(x)?;
    Ok(match probe.spec.kind {
        ProbeKind::LinearClassifier => Predictions::Classes(
            (0..out.rows())
                .map(|r| {
                    let row = out.row(r);
                    // first maximum wins
                    let mut best = 0;
                    for (c, &v) in row.iter().enumerate() {
                        if v > row[best] {
                            best = c;
                        }
                    }
                    best
                })
                .collect(),
        ),
        ProbeKind::LinearRegressor | ProbeKind::LinearMap => Predictions::Real(out),
        ProbeKind::MlpMultilabel => {
            let scores = out.map(sigmoid);
            let t = probe.threshold.unwrap_or(0.5);
            let active = scores.map(|s| if s >= t { 1.0 } else { 0.0 });
            Predictions::Multilabel { scores, active }
        }
    })
}
