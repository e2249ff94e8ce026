use super::metrics::{metric_cosine, metric_cosine_frames, metric_mse};
use super::types::{Axis, AxisResult, InvarianceMode, Metric, PairInput};
use crate::datamodel::{pair_views, pool_time, Dataset, Split, Stream, Transform, ViewPair};
use crate::error::{Error, Result};
use crate::numerics::Tensor2;
use crate::probes::{predict, train_probe, Predictions, ProbeConfig, ProbeKind, ProbeSpec, Targets};

fn by_split<'p, 'a>(pairs: &'p [ViewPair<'a>], split: Split) -> Vec<&'p ViewPair<'a>> {
    pairs.iter().filter(|p| p.split == split).collect()
}

fn require_splits(pairs: &[ViewPair<'_>], transform: Transform) -> Result<()> {
    for split in [Split::Train, Split::Val, Split::Test] {
        if !pairs.iter().any(|p| p.split == split) {
            return Err(Error::Empty(format!("no {transform} pairs in the {split:?} split")));
        }
    }
    Ok(())
}

fn rows(pairs: &[&ViewPair<'_>], f: impl Fn(&ViewPair<'_>) -> Result<Tensor2>) -> Result<Tensor2> {
    let blocks = pairs.iter().map(|p| f(p)).collect::<Result<Vec<_>>>()?;
    Tensor2::vcat(&blocks)
}

/// Predicts `param_norm` from the pooled pair `z(x) ⊕ z(t(x))` (or `z(t(x))`
/// alone) with a linear regressor and reports test MSE. A constant parameter
/// across training pairs is flagged as degenerate, not rejected.
pub fn run_p_equivariance(
    ds: &Dataset,
    stream: Stream,
    transform: Transform,
    input: PairInput,
    probe: &ProbeConfig,
    seed: u64,
) -> Result<AxisResult> {
    let pairs = pair_views(ds, stream, transform)?;
    require_splits(&pairs, transform)?;
    let features = |p: &ViewPair<'_>| -> Result<Tensor2> {
        let t = pool_time(p.transformed).data;
        match input {
            PairInput::Pair => pool_time(p.clean).data.hcat(&t),
            PairInput::TransformedOnly => Ok(t),
        }
    };
    let target = |ps: &[&ViewPair<'_>]| {
        Tensor2::from_vec(ps.len(), 1, ps.iter().map(|p| p.param_norm()).collect())
    };
    let [train, val, test] = [Split::Train, Split::Val, Split::Test].map(|s| by_split(&pairs, s));
    let (x_tr, x_va, x_te) = (rows(&train, features)?, rows(&val, features)?, rows(&test, features)?);
    let (y_tr, y_va, y_te) = (target(&train)?, target(&val)?, target(&test)?);

    let spec = ProbeSpec::new(ProbeKind::LinearRegressor, x_tr.cols(), 1, probe, seed);
    let trained = train_probe(&spec, &x_tr, &Targets::Real(y_tr.clone()), &x_va, &Targets::Real(y_va))?;
    let Predictions::Real(pred) = predict(&trained, &x_te)? else { unreachable!() };
    let mse = metric_mse(pred.as_slice(), y_te.as_slice())?;

    let (lo, hi) = y_tr
        .as_slice()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let mut out = AxisResult::new(
        Axis::PEquivariance,
        stream.into(),
        transform.as_str(),
        Metric::Mse,
        mse,
        seed,
        test.len(),
    );
    if hi - lo < 1e-12 {
        log::warn!("{stream}/{transform}: parameter is constant across training pairs");
        out.degenerate = true;
    }
    Ok(out)
}

/// Fits a linear map from `z(x) ⊕ [param_norm]` to `z(t(x))` (pooled) and
/// reports the mean test cosine between predicted and actual embeddings.
/// Zero-norm vectors are skipped and counted.
pub fn run_r_equivariance(
    ds: &Dataset,
    stream: Stream,
    transform: Transform,
    probe: &ProbeConfig,
    seed: u64,
) -> Result<AxisResult> {
    let pairs = pair_views(ds, stream, transform)?;
    require_splits(&pairs, transform)?;
    let features = |p: &ViewPair<'_>| {
        pool_time(p.clean)
            .data
            .hcat(&Tensor2::filled(1, 1, p.param_norm()))
    };
    let target = |p: &ViewPair<'_>| Ok(pool_time(p.transformed).data);
    let [train, val, test] = [Split::Train, Split::Val, Split::Test].map(|s| by_split(&pairs, s));
    let x_tr = rows(&train, features)?;
    let y_tr = rows(&train, target)?;
    let spec = ProbeSpec::new(ProbeKind::LinearMap, x_tr.cols(), y_tr.cols(), probe, seed);
    let trained = train_probe(
        &spec,
        &x_tr,
        &Targets::Real(y_tr),
        &rows(&val, features)?,
        &Targets::Real(rows(&val, target)?),
    )?;
    let Predictions::Real(pred) = predict(&trained, &rows(&test, features)?)? else { unreachable!() };
    let actual = rows(&test, target)?;

    let mut sims = Vec::with_capacity(test.len());
    let mut skipped = 0;
    for r in 0..actual.rows() {
        match metric_cosine(pred.row(r), actual.row(r)) {
            Ok(c) => sims.push(c),
            Err(Error::ZeroVector) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    let (mean, _) = mean_std(&sims, stream, transform)?;
    let mut out = AxisResult::new(
        Axis::REquivariance,
        stream.into(),
        transform.as_str(),
        Metric::Cosine,
        mean,
        seed,
        sims.len(),
    );
    out.skipped_zero_vectors = Some(skipped);
    Ok(out)
}

fn mean_std(values: &[f64], stream: Stream, transform: Transform) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::Degenerate(format!(
            "{stream}/{transform}: every pair had a zero-norm embedding"
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

/// Probe-free: mean (and standard deviation) of the cosine similarity between
/// clean and transformed embeddings over every pair in every split.
pub fn run_invariance(
    ds: &Dataset,
    stream: Stream,
    transform: Transform,
    mode: InvarianceMode,
) -> Result<AxisResult> {
    let pairs = pair_views(ds, stream, transform)?;
    let mut sims = Vec::with_capacity(pairs.len());
    let mut skipped = 0;
    for p in &pairs {
        let sim = match mode {
            InvarianceMode::Pooled => metric_cosine(
                pool_time(p.clean).data.as_slice(),
                pool_time(p.transformed).data.as_slice(),
            ),
            InvarianceMode::Framewise => metric_cosine_frames(&p.clean.data, &p.transformed.data),
        };
        match sim {
            Ok(c) => sims.push(c),
            Err(Error::ZeroVector) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    let (mean, std) = mean_std(&sims, stream, transform)?;
    let mut out = AxisResult::new(
        Axis::Invariance,
        stream.into(),
        transform.as_str(),
        Metric::Cosine,
        mean,
        0,
        sims.len(),
    );
    out.std = Some(std);
    out.skipped_zero_vectors = Some(skipped);
    Ok(out)
}
