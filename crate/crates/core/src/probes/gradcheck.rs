use super::net::{Network, Targets};
use super::spec::{ProbeKind, ProbeSpec};
use crate::error::{Error, Result};
use crate::numerics::{Rng, Tensor2};

const STEP: f64 = 1e-4;
/// Denominator floor for the relative error of near-zero gradients.
const FLOOR: f64 = 1e-8;

/// Analytic MLP gradients against central finite differences.
///
/// Returns `max |g_a - g_n| / max(|g_a|, |g_n|, 1e-8)` over every parameter of
/// a network initialised from `spec.seed`. Limited to at most 8 samples, 16
/// input dims and 8 hidden units.
pub fn mlp_gradient_check(spec: &ProbeSpec, x: &Tensor2, y: &Tensor2) -> Result<f64> {
    if spec.kind != ProbeKind::MlpMultilabel {
        return Err(Error::Config("gradient check targets mlp_multilabel".into()));
    }
    spec.validate()?;
    let hidden = spec.hidden_dim.unwrap_or(0);
    if x.rows() > 8 || spec.input_dim > 16 || hidden > 8 {
        return Err(Error::Config(
            "gradient check instance must have <= 8 samples, <= 16 dims, <= 8 hidden".into(),
        ));
    }
    let targets = Targets::Binary(y.clone());
    targets.check(spec.kind, spec.output_dim)?;
    if x.cols() != spec.input_dim || x.rows() != y.rows() {
        return Err(Error::Shape("gradient check inputs disagree with spec".into()));
    }

    let net = Network::init(spec, &mut Rng::new(spec.seed));
    let (_, analytic) = analytic_gradients(&net, x, &targets);
    let mut worst = 0.0f64;
    for (p, grad) in analytic.iter().enumerate() {
        for j in 0..grad.as_slice().len() {
            let mut plus = net.clone();
            plus.params_mut()[p].as_mut_slice()[j] += STEP;
            let mut minus = net.clone();
            minus.params_mut()[p].as_mut_slice()[j] -= STEP;
            let numeric = (plus.loss(x, &targets) - minus.loss(x, &targets)) / (2.0 * STEP);
            let a = grad.as_slice()[j];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FLOOR);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}

pub(crate) fn analytic_gradients(net: &Network, x: &Tensor2, y: &Targets) -> (f64, Vec<Tensor2>) {
    net.loss_and_grad(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probes::spec::ProbeConfig;

    fn instance(seed: u64) -> (ProbeSpec, Tensor2, Tensor2) {
        let cfg = ProbeConfig {
            hidden_dim: 8,
            ..ProbeConfig::default()
        };
        let spec = ProbeSpec::new(ProbeKind::MlpMultilabel, 16, 12, &cfg, seed);
        let mut rng = Rng::new(seed + 100);
        let x = Tensor2::from_vec(8, 16, (0..128).map(|_| rng.normal()).collect()).unwrap();
        let y = Tensor2::from_vec(8, 12, (0..96).map(|_| (rng.uniform() < 0.3) as u8 as f64).collect())
            .unwrap();
        (spec, x, y)
    }

    #[test]
    fn random_instances_pass() {
        for seed in 0..3 {
            let (spec, x, y) = instance(seed);
            let err = mlp_gradient_check(&spec, &x, &y).unwrap();
            assert!(err <= 1e-4, "seed {seed}: {err}");
        }
    }

    #[test]
    fn analytic_gradients_are_deterministic() {
        let (spec, x, y) = instance(7);
        let net = Network::init(&spec, &mut Rng::new(spec.seed));
        let t = Targets::Binary(y);
        assert_eq!(analytic_gradients(&net, &x, &t), analytic_gradients(&net, &x, &t));
    }

    #[test]
    fn oversized_instance_rejected() {
        let cfg = ProbeConfig::default();
        let spec = ProbeSpec::new(ProbeKind::MlpMultilabel, 4, 2, &cfg, 0);
        assert!(mlp_gradient_check(&spec, &Tensor2::zeros(2, 4), &Tensor2::zeros(2, 2)).is_err());
    }
}
