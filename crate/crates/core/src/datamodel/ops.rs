use super::manifest::Dataset;
use super::types::{EmbeddingRecord, Pianoroll, Split, Stream, Transform, ViewMeta};
use crate::error::{Error, Result};

/// Mean over frames; a `(1, D)` record is returned unchanged.
pub fn pool_time(rec: &EmbeddingRecord) -> EmbeddingRecord {
    if rec.frames() == 1 {
        return rec.clone();
    }
    EmbeddingRecord {
        item_id: rec.item_id.clone(),
        stream: rec.stream,
        data: rec.data.column_means(),
        frame_rate: rec.frame_rate,
    }
}

/// `a ⊕ b` for two pooled records of the same item: `a`'s dims, then `b`'s.
///
/// The result keeps `a`'s stream tag.
pub fn concat_streams(a: &EmbeddingRecord, b: &EmbeddingRecord) -> Result<EmbeddingRecord> {
    if a.item_id != b.item_id {
        return Err(Error::Mismatch(format!(
            "cannot concatenate `{}` with `{}`",
            a.item_id, b.item_id
        )));
    }
    if a.frames() != 1 || b.frames() != 1 {
        return Err(Error::Shape(format!(
            "concat_streams expects pooled records, got {} and {} frames",
            a.frames(),
            b.frames()
        )));
    }
    Ok(EmbeddingRecord {
        item_id: a.item_id.clone(),
        stream: a.stream,
        data: a.data.hcat(&b.data)?,
        frame_rate: 1,
    })
}

/// A transformed view together with its clean base, same stream.
#[derive(Debug, Clone)]
pub struct ViewPair<'a> {
    pub clean: &'a EmbeddingRecord,
    pub transformed: &'a EmbeddingRecord,
    pub view: ViewMeta,
    pub split: Split,
}

impl ViewPair<'_> {
    pub fn param_norm(&self) -> f64 {
        self.view.param_norm
    }
}

/// Every `(clean, transformed)` pair for `transform`, sorted by the transformed
/// item's id.
pub fn pair_views(ds: &Dataset, stream: Stream, transform: Transform) -> Result<Vec<ViewPair<'_>>> {
    if transform == Transform::None {
        return Err(Error::Empty("no pairs exist for transform `none`".into()));
    }
    if !ds.has_stream(stream) {
        return Err(Error::Empty(format!("dataset has no {stream} stream")));
    }
    let mut views: Vec<_> = ds
        .records()
        .iter()
        .filter(|r| r.transform() == transform)
        .collect();
    views.sort_by(|a, b| a.item_id.cmp(&b.item_id));
    let mut pairs = Vec::with_capacity(views.len());
    for rec in views {
        let view = rec.view_meta();
        let clean = ds
            .embedding(&view.base_item_id, stream)
            .expect("validated manifest resolves base ids");
        let transformed = ds
            .embedding(&rec.item_id, stream)
            .expect("validated manifest has every stream");
        pairs.push(ViewPair {
            clean,
            transformed,
            view,
            split: rec.split,
        });
    }
    if pairs.is_empty() {
        return Err(Error::Empty(format!("no {transform} views in dataset")));
    }
    Ok(pairs)
}

/// Index of the source frame nearest to target frame `t`: `round(t * src / dst)`,
/// halves rounding up.
pub(crate) fn nearest_source(t: usize, src: usize, dst: usize) -> usize {
    ((2 * t * src + dst) / (2 * dst)).min(src - 1)
}

/// Resamples a pianoroll to `target_frames` by nearest-frame lookup.
pub fn align_pianoroll(roll: &Pianoroll, target_frames: usize) -> Result<Pianoroll> {
    if target_frames == 0 {
        return Err(Error::Shape("target_frames must be >= 1".into()));
    }
    let src = roll.frames();
    if src == target_frames {
        return Ok(roll.clone());
    }
    let mut data = Vec::with_capacity(target_frames * super::PIANOROLL_PITCHES);
    for t in 0..target_frames {
        data.extend_from_slice(roll.frame(nearest_source(t, src, target_frames)));
    }
    Ok(Pianoroll::new(target_frames, data).expect("copied frames stay binary"))
}

impl Dataset {
    /// The item's pianoroll resampled to `target_frames`.
    pub fn aligned_pianoroll(&self, item_id: &str, target_frames: usize) -> Result<Pianoroll> {
        align_pianoroll(self.pianoroll(item_id)?, target_frames)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{Rng, Tensor2};

    fn rec(id: &str, rows: &[&[f64]]) -> EmbeddingRecord {
        EmbeddingRecord {
            item_id: id.into(),
            stream: Stream::Structure,
            data: Tensor2::from_rows(rows).unwrap(),
            frame_rate: rows.len(),
        }
    }

    #[test]
    fn pool_identity_and_mean() {
        let g = rec("a", &[&[1.0, 2.0, 3.0, 4.0]]);
        assert_eq!(pool_time(&g), g);
        let p = pool_time(&rec("a", &[&[1.0, 3.0], &[3.0, 5.0]]));
        assert_eq!(p.data.as_slice(), &[2.0, 4.0]);
    }

    #[test]
    fn pool_matches_naive_column_means() {
        let mut rng = Rng::new(4);
        let rows: Vec<Vec<f64>> = (0..86)
            .map(|_| (0..12).map(|_| rng.normal()).collect())
            .collect();
        let data = Tensor2::from_rows(&rows).unwrap();
        let r = EmbeddingRecord {
            item_id: "x".into(),
            stream: Stream::Structure,
            data,
            frame_rate: 86,
        };
        let pooled = pool_time(&r);
        for d in 0..12 {
            let mut s = 0.0;
            for row in &rows {
                s += row[d];
            }
            assert!((pooled.data[(0, d)] - s / 86.0).abs() < 1e-6);
        }
        assert_eq!(pool_time(&pooled), pooled);
    }

    #[test]
    fn concat_layout() {
        let c = concat_streams(&rec("a", &[&[1.0, 2.0]]), &rec("a", &[&[3.0]])).unwrap();
        assert_eq!(c.data.as_slice(), &[1.0, 2.0, 3.0]);
        let t = rec("a", &[&[0.0; 6]]);
        let s = pool_time(&rec("a", &[&[1.0; 12], &[2.0; 12]]));
        assert_eq!(concat_streams(&t, &s).unwrap().dim(), 18);
        assert!(matches!(
            concat_streams(&rec("a", &[&[1.0]]), &rec("b", &[&[1.0]])),
            Err(Error::Mismatch(_))
        ));
    }

    fn roll_with(frames: usize, active: &[usize]) -> Pianoroll {
        let mut r = Pianoroll::zeros(frames);
        for &t in active {
            r.set(t, 60, true);
        }
        r
    }

    #[test]
    fn align_identity_and_constant() {
        let r = roll_with(7, &[1, 3]);
        assert_eq!(align_pianoroll(&r, 7).unwrap(), r);
        let ones = Pianoroll::new(100, vec![1; 100 * 128]).unwrap();
        let out = align_pianoroll(&ones, 86).unwrap();
        assert_eq!(out.frames(), 86);
        assert!(out.as_slice().iter().all(|&v| v == 1));
        assert!(align_pianoroll(&r, 0).is_err());
    }

    /// Brute force: the source frame minimising |j * dst - t * src|, later index
    /// winning ties.
    fn oracle_nearest(t: usize, src: usize, dst: usize) -> usize {
        let dist = |j: usize| ((j * dst) as i64 - (t * src) as i64).unsigned_abs();
        let best = (0..src).map(dist).min().unwrap();
        (0..src).filter(|&j| dist(j) == best).max().unwrap()
    }

    #[test]
    fn single_active_frame_lands_on_index_five() {
        let r = roll_with(100, &[50]);
        let out = align_pianoroll(&r, 10).unwrap();
        let active: Vec<usize> = (0..10).filter(|&t| out.get(t, 60)).collect();
        assert_eq!(active, vec![5]);
        for t in 0..10 {
            assert_eq!(nearest_source(t, 100, 10), oracle_nearest(t, 100, 10));
        }
    }

    #[test]
    fn nearest_source_matches_brute_force() {
        for src in 1..40 {
            for dst in 1..40 {
                for t in 0..dst {
                    assert_eq!(
                        nearest_source(t, src, dst),
                        oracle_nearest(t, src, dst),
                        "t={t} src={src} dst={dst}"
                    );
                }
            }
        }
    }
}
