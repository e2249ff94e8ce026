//! Forward pass, loss and hand-written gradients for the fixed probe family.

use super::spec::{ProbeKind, ProbeSpec};
use crate::error::{Error, Result};
use crate::numerics::{matmul, matmul_nt, matmul_tn, softmax_rows, Rng, Tensor2};

/// Supervision for a probe, one entry (or row) per input row.
#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    /// Class ids for the classifier.
    Classes(Vec<usize>),
    /// Real targets, `n x output_dim`, for regressor and linear map.
    Real(Tensor2),
    /// 0/1 targets, `n x output_dim`, for the multilabel MLP.
    Binary(Tensor2),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Classes(c) => c.len(),
            Targets::Real(t) | Targets::Binary(t) => t.rows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn select(&self, idx: &[usize]) -> Targets {
        match self {
            Targets::Classes(c) => Targets::Classes(idx.iter().map(|&i| c[i]).collect()),
            Targets::Real(t) => Targets::Real(t.select_rows(idx)),
            Targets::Binary(t) => Targets::Binary(t.select_rows(idx)),
        }
    }

    pub(crate) fn check(&self, kind: ProbeKind, output_dim: usize) -> Result<()> {
        match (kind, self) {
            (ProbeKind::LinearClassifier, Targets::Classes(c)) => {
                if let Some(&bad) = c.iter().find(|&&c| c >= output_dim) {
                    return Err(Error::Shape(format!(
                        "class id {bad} outside {output_dim} outputs"
                    )));
                }
                Ok(())
            }
            (ProbeKind::LinearRegressor | ProbeKind::LinearMap, Targets::Real(t))
            | (ProbeKind::MlpMultilabel, Targets::Binary(t)) => {
                if t.cols() != output_dim {
                    return Err(Error::Shape(format!(
                        "targets have {} columns, probe has {output_dim} outputs",
                        t.cols()
                    )));
                }
                Ok(())
            }
            _ => Err(Error::Shape(format!("targets do not fit a {kind:?} probe"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Dense {
    pub w: Tensor2,
    pub b: Tensor2,
}

impl Dense {
    fn zeros(input: usize, output: usize) -> Self {
        Self {
            w: Tensor2::zeros(input, output),
            b: Tensor2::zeros(1, output),
        }
    }

    fn uniform(input: usize, output: usize, bound: f64, rng: &mut Rng) -> Self {
        let values = (0..input * output)
            .map(|_| rng.uniform_range(-bound, bound))
            .collect();
        Self {
            w: Tensor2::from_vec(input, output, values).expect("sized above"),
            b: Tensor2::zeros(1, output),
        }
    }

    fn forward(&self, x: &Tensor2) -> Tensor2 {
        let mut out = matmul(x, &self.w).expect("input width checked by caller");
        out.add_row_broadcast(&self.b);
        out
    }
}

/// Parameters of one probe: a single dense layer, or two for the MLP.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Network {
    pub kind: ProbeKind,
    pub layers: Vec<Dense>,
}

impl Network {
    /// Linear probes start at zero; the MLP uses He-uniform hidden weights and
    /// Glorot-uniform output weights drawn from `rng`.
    pub fn init(spec: &ProbeSpec, rng: &mut Rng) -> Self {
        let layers = match spec.kind {
            ProbeKind::MlpMultilabel => {
                let h = spec.hidden_dim.expect("validated spec");
                let hidden = Dense::uniform(spec.input_dim, h, (6.0 / spec.input_dim as f64).sqrt(), rng);
                let out = Dense::uniform(
                    h,
                    spec.output_dim,
                    (6.0 / (h + spec.output_dim) as f64).sqrt(),
                    rng,
                );
                vec![hidden, out]
            }
            _ => vec![Dense::zeros(spec.input_dim, spec.output_dim)],
        };
        Self {
            kind: spec.kind,
            layers,
        }
    }

    pub fn params(&self) -> Vec<&Tensor2> {
        self.layers.iter().flat_map(|l| [&l.w, &l.b]).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor2> {
        self.layers.iter_mut().flat_map(|l| [&mut l.w, &mut l.b]).collect()
    }

    /// Raw outputs: logits for the classifier and MLP, values for the linear
    /// regressors.
    pub fn forward(&self, x: &Tensor2) -> Tensor2 {
        match self.layers.as_slice() {
            [single] => single.forward(x),
            [hidden, out] => out.forward(&hidden.forward(x).map(relu)),
            _ => unreachable!("probes have one or two layers"),
        }
    }

    pub fn loss(&self, x: &Tensor2, y: &Targets) -> f64 {
        loss_from_outputs(self.kind, &self.forward(x), y).0
    }

    /// Mean loss over the batch and its gradient for every parameter tensor, in
    /// [`Network::params`] order.
    pub fn loss_and_grad(&self, x: &Tensor2, y: &Targets) -> (f64, Vec<Tensor2>) {
        match self.layers.as_slice() {
            [single] => {
                let out = single.forward(x);
                let (loss, d_out) = loss_from_outputs(self.kind, &out, y);
                let gw = matmul_tn(x, &d_out).expect("shapes agree");
                let gb = d_out.column_sums();
                (loss, vec![gw, gb])
            }
            [hidden, out_layer] => {
                let pre = hidden.forward(x);
                let act = pre.map(relu);
                let out = out_layer.forward(&act);
                let (loss, d_out) = loss_from_outputs(self.kind, &out, y);
                let gw2 = matmul_tn(&act, &d_out).expect("shapes agree");
                let gb2 = d_out.column_sums();
                let mut d_act = matmul_nt(&d_out, &out_layer.w).expect("shapes agree");
                for (d, &p) in d_act.as_mut_slice().iter_mut().zip(pre.as_slice()) {
                    if p <= 0.0 {
                        *d = 0.0;
                    }
                }
                let gw1 = matmul_tn(x, &d_act).expect("shapes agree");
                let gb1 = d_act.column_sums();
                (loss, vec![gw1, gb1, gw2, gb2])
            }
            _ => unreachable!("probes have one or two layers"),
        }
    }
}

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

pub(crate) fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Mean loss and its derivative with respect to the raw outputs.
fn loss_from_outputs(kind: ProbeKind, out: &Tensor2, y: &Targets) -> (f64, Tensor2) {
    let n = out.rows().max(1) as f64;
    match (kind, y) {
        (ProbeKind::LinearClassifier, Targets::Classes(classes)) => {
            let mut probs = softmax_rows(out);
            let mut loss = 0.0;
            for (r, &c) in classes.iter().enumerate() {
                loss -= probs[(r, c)].max(f64::MIN_POSITIVE).ln();
                probs[(r, c)] -= 1.0;
            }
            (loss / n, probs.map(|v| v / n))
        }
        (ProbeKind::LinearRegressor | ProbeKind::LinearMap, Targets::Real(t)) => {
            let cells = n * out.cols() as f64;
            let mut loss = 0.0;
            let mut grad = out.clone();
            for (g, &target) in grad.as_mut_slice().iter_mut().zip(t.as_slice()) {
                let diff = *g - target;
                loss += diff * diff;
                *g = 2.0 * diff / cells;
            }
            (loss / cells, grad)
        }
        (ProbeKind::MlpMultilabel, Targets::Binary(t)) => {
            let cells = n * out.cols() as f64;
            let mut loss = 0.0;
            let mut grad = out.clone();
            for (g, &target) in grad.as_mut_slice().iter_mut().zip(t.as_slice()) {
                let s = *g;
                // stable log(1 + e^s) - s * y
                loss += s.max(0.0) - s * target + (-s.abs()).exp().ln_1p();
                *g = (sigmoid(s) - target) / cells;
            }
            (loss / cells, grad)
        }
        _ => unreachable!("targets checked against probe kind"),
    }
}
