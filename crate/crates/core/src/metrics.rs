//! Verification and identification metrics.
//!
//! Verification works on scored pairs: a pair of records is labeled "same
//! identity" or not, scored by negative Euclidean distance (higher means
//! more likely the same person), and summarized by the equal error rate.
//! The EER is read off the FAR/FRR curves by sweeping an acceptance
//! threshold over the observed scores and linearly interpolating at the
//! crossing, which makes the value exactly reproducible by a brute-force
//! sweep.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{EmbeddingRecord, Modality};
use crate::error::{Error, Result};
use crate::loss::euclidean_distance;
use crate::mat::Mat;
use crate::twobranch::TwoBranchModel;

/// How verification trial lists are built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairPolicy {
    /// Every cross pair (minus self-pairs). Quadratic; fine at desk scale
    /// and required by the oracle tests.
    Exhaustive,
    /// All positive pairs plus an equal-count seeded sample of negatives.
    Balanced { seed: u64 },
}

/// One verification trial: indices into the two record slices handed to
/// [`make_pairs`], plus the same-identity label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pair {
    pub a: usize,
    pub b: usize,
    pub same: bool,
}

/// Scores split by ground truth. Higher score = more same-identity-like.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoredPairs {
    pub positive_scores: Vec<f64>,
    pub negative_scores: Vec<f64>,
}

impl ScoredPairs {
    /// CSV export (`label,score`), positives first with label 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,score\n");
        for s in &self.positive_scores {
            out.push_str(&format!("1,{s}\n"));
        }
        for s in &self.negative_scores {
            out.push_str(&format!("0,{s}\n"));
        }
        out
    }
}

/// Builds verification trials between two record lists.
///
/// Pairs with identical sample ids are skipped, so passing the same slice
/// twice (voice-voice verification) never pairs a record with itself. It
/// is a protocol error if no same-identity pair can be formed at all.
pub fn make_pairs(
    a_records: &[&EmbeddingRecord],
    b_records: &[&EmbeddingRecord],
    policy: &PairPolicy,
) -> Result<Vec<Pair>> {
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for (i, a) in a_records.iter().enumerate() {
        for (j, b) in b_records.iter().enumerate() {
            if a.sample_id == b.sample_id {
                continue;
            }
            let pair = Pair {
                a: i,
                b: j,
                same: a.identity == b.identity,
            };
            if pair.same {
                positives.push(pair);
            } else {
                negatives.push(pair);
            }
        }
    }
    if positives.is_empty() {
        return Err(Error::Protocol(
            "no same-identity pairs can be formed from these records".into(),
        ));
    }

    match *policy {
        PairPolicy::Exhaustive => {
            positives.extend(negatives);
            Ok(positives)
        }
        PairPolicy::Balanced { seed } => {
            let keep = positives.len().min(negatives.len());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut chosen: Vec<usize> = index::sample(&mut rng, negatives.len(), keep).into_vec();
            chosen.sort_unstable();
            positives.extend(chosen.into_iter().map(|i| negatives[i]));
            Ok(positives)
        }
    }
}

/// Projects every record through its modality's branch. Rows come back in
/// record order regardless of how modalities are interleaved.
fn project_records(model: &TwoBranchModel, records: &[&EmbeddingRecord]) -> Result<Mat> {
    let mut out = Mat::zeros(records.len(), model.out_dim());
    for modality in [Modality::Face, Modality::Voice] {
        let in_dim = match modality {
            Modality::Face => model.face_in_dim(),
            Modality::Voice => model.voice_in_dim(),
        };
        let idxs: Vec<usize> = records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.modality == modality)
            .map(|(i, _)| i)
            .collect();
        if idxs.is_empty() {
            continue;
        }
        for &i in &idxs {
            if records[i].vector.len() != in_dim {
                return Err(Error::Shape(format!(
                    "sample `{}` has {} coordinates but the {modality} branch expects {in_dim}",
                    records[i].sample_id,
                    records[i].vector.len()
                )));
            }
        }
        let rows: Vec<&[f64]> = idxs.iter().map(|&i| records[i].vector.as_slice()).collect();
        let batch = Mat::from_rows(&rows);
        let (projected, _) = model.project(modality, &batch)?;
        for (bi, &i) in idxs.iter().enumerate() {
            out.row_mut(i).copy_from_slice(projected.row(bi));
        }
    }
    Ok(out)
}

/// Scores trials through the model: each record is projected into the
/// joint space and the pair score is the negative Euclidean distance
/// between the projections (in [-2, 0] on the unit sphere).
pub fn score_pairs(
    model: &TwoBranchModel,
    a_records: &[&EmbeddingRecord],
    b_records: &[&EmbeddingRecord],
    pairs: &[Pair],
) -> Result<ScoredPairs> {
    let a_proj = project_records(model, a_records)?;
    let b_proj = project_records(model, b_records)?;
    collect_scores(pairs, a_records.len(), b_records.len(), |p| {
        euclidean_distance(a_proj.row(p.a), b_proj.row(p.b)).map(|d| -d)
    })
}

/// Scores trials directly on the stored embedding vectors, no model
/// involved. Used for raw-embedding speaker verification.
pub fn score_pairs_raw(
    a_records: &[&EmbeddingRecord],
    b_records: &[&EmbeddingRecord],
    pairs: &[Pair],
) -> Result<ScoredPairs> {
    collect_scores(pairs, a_records.len(), b_records.len(), |p| {
        euclidean_distance(&a_records[p.a].vector, &b_records[p.b].vector).map(|d| -d)
    })
}

fn collect_scores(
    pairs: &[Pair],
    a_len: usize,
    b_len: usize,
    mut score: impl FnMut(&Pair) -> Result<f64>,
) -> Result<ScoredPairs> {
    let mut scored = ScoredPairs::default();
    for p in pairs {
        if p.a >= a_len || p.b >= b_len {
            return Err(Error::Shape(format!(
                "pair ({}, {}) is out of range for record lists of {a_len} and {b_len}",
                p.a, p.b
            )));
        }
        let s = score(p)?;
        if p.same {
            scored.positive_scores.push(s);
        } else {
            scored.negative_scores.push(s);
        }
    }
    Ok(scored)
}

/// Equal error rate with linear interpolation at the FAR/FRR crossing.
///
/// Accepting iff `score >= t`, FAR(t) falls from 1 to 0 and FRR(t) rises
/// from 0 to 1 as `t` sweeps upward, so `FAR - FRR` is non-increasing and
/// crosses zero exactly once (possibly along a plateau; the
/// lowest-threshold bracket is used). Returns `(eer, threshold)` at the
/// interpolated crossing.
pub fn compute_eer(s: &ScoredPairs) -> Result<(f64, f64)> {
    if s.positive_scores.is_empty() || s.negative_scores.is_empty() {
        return Err(Error::Argument(
            "EER needs at least one positive and one negative score".into(),
        ));
    }
    if s.positive_scores.iter().chain(&s.negative_scores).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("scores contain a non-finite value".into()));
    }

    let mut pos = s.positive_scores.clone();
    let mut neg = s.negative_scores.clone();
    pos.sort_unstable_by(f64::total_cmp);
    neg.sort_unstable_by(f64::total_cmp);

    // Candidate thresholds: every distinct score, plus one sentinel on
    // each side standing in for -inf / +inf.
    let mut thresholds: Vec<f64> = pos.iter().chain(&neg).copied().collect();
    thresholds.sort_unstable_by(f64::total_cmp);
    thresholds.dedup();
    let lo = thresholds[0] - 1.0;
    let hi = thresholds[thresholds.len() - 1] + 1.0;
    thresholds.insert(0, lo);
    thresholds.push(hi);

    let far = |t: f64| {
        let below = neg.partition_point(|x| *x < t);
        (neg.len() - below) as f64 / neg.len() as f64
    };
    let frr = |t: f64| pos.partition_point(|x| *x < t) as f64 / pos.len() as f64;

    for w in thresholds.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let (far0, frr0) = (far(t0), frr(t0));
        let (far1, frr1) = (far(t1), frr(t1));
        let d0 = far0 - frr0;
        let d1 = far1 - frr1;
        if d0 >= 0.0 && d1 <= 0.0 {
            if d0 == 0.0 {
                return Ok((far0, t0));
            }
            let alpha = d0 / (d0 - d1);
            let eer = far0 + alpha * (far1 - far0);
            let threshold = t0 + alpha * (t1 - t0);
            return Ok((eer, threshold));
        }
    }
    // FAR - FRR starts at 1 and ends at -1, so a bracket always exists.
    unreachable!("no FAR/FRR crossing found");
}

/// Fraction of positions where the predicted label equals the true label.
pub fn top1_accuracy<S: AsRef<str>, T: AsRef<str>>(predicted: &[S], truth: &[T]) -> Result<f64> {
    if predicted.is_empty() {
        return Err(Error::Argument("top-1 accuracy of an empty prediction list".into()));
    }
    if predicted.len() != truth.len() {
        return Err(Error::Argument(format!(
            "{} predictions against {} true labels",
            predicted.len(),
            truth.len()
        )));
    }
    let correct = predicted
        .iter()
        .zip(truth)
        .filter(|(p, t)| p.as_ref() == t.as_ref())
        .count();
    Ok(correct as f64 / predicted.len() as f64)
}
