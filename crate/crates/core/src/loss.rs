//! In-batch triplet mining and the four-term hinge objective.
//!
//! Given projected face rows and voice rows with identity labels, we
//! enumerate every valid triplet inside the batch for four terms: face
//! anchors against voice positives/negatives, the symmetric voice-anchored
//! term, and one neighborhood term within each modality. The loss is a
//! weighted combination of per-term hinge reductions, and the gradients
//! with respect to the embeddings are computed analytically alongside it.

use crate::error::{Error, Result};
use crate::mat::Mat;

/// How each term's hinge values collapse to a scalar.
///
/// `Mean` divides by the full length of the term's triplet list (inactive
/// hinges included), keeping the scale independent of batch composition;
/// `Sum` adds them up as written.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    Sum,
    Mean,
}

impl std::str::FromStr for Reduction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Reduction> {
        match s {
            "sum" => Ok(Reduction::Sum),
            "mean" => Ok(Reduction::Mean),
            _ => Err(Error::Argument(format!(
                "unknown reduction `{s}`: expected `sum` or `mean`"
            ))),
        }
    }
}

/// Margin and term weights of the objective.
#[derive(Debug, Clone, PartialEq)]
pub struct LossWeights {
    /// Hinge margin applied in every term.
    pub margin: f64,
    /// Weight of the voice-anchored cross-modal term.
    pub lambda1: f64,
    /// Weight of the face-face neighborhood term.
    pub lambda2: f64,
    /// Weight of the voice-voice neighborhood term.
    pub lambda3: f64,
    pub reduction: Reduction,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            margin: 0.1,
            lambda1: 2.0,
            lambda2: 0.1,
            lambda3: 0.2,
            reduction: Reduction::Mean,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("margin", self.margin),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("lambda3", self.lambda3),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Argument(format!(
                    "{name} must be a finite nonnegative number, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Row indices of one (anchor, positive, negative) combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triplet {
    pub anchor: usize,
    pub positive: usize,
    pub negative: usize,
}

/// The four mined triplet lists, one per loss term.
///
/// Anchor indices refer to the anchor modality's rows; positive and
/// negative indices refer to the other column of the term (voices for
/// `face_voice`, faces for `voice_face`, the anchor's own modality for the
/// two neighborhood terms).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TripletSet {
    pub face_voice: Vec<Triplet>,
    pub voice_face: Vec<Triplet>,
    pub face_face: Vec<Triplet>,
    pub voice_voice: Vec<Triplet>,
}

impl TripletSet {
    /// Total triplets across all four terms.
    pub fn len(&self) -> usize {
        self.face_voice.len() + self.voice_face.len() + self.face_face.len() + self.voice_voice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `‖u − v‖₂`.
pub fn euclidean_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Shape(format!(
            "distance between vectors of length {} and {}",
            u.len(),
            v.len()
        )));
    }
    Ok(dist(u, v))
}

fn dist(u: &[f64], v: &[f64]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Exhaustively enumerates every valid triplet within the batch.
///
/// Labels are identity names aligned with the embedding rows. Terms with
/// no valid combination (a single identity, say, which leaves no negatives)
/// come back empty; that is not an error.
pub fn mine_triplets<S: AsRef<str>>(face_labels: &[S], voice_labels: &[S]) -> TripletSet {
    let faces: Vec<&str> = face_labels.iter().map(AsRef::as_ref).collect();
    let voices: Vec<&str> = voice_labels.iter().map(AsRef::as_ref).collect();
    TripletSet {
        face_voice: mine_cross(&faces, &voices),
        voice_face: mine_cross(&voices, &faces),
        face_face: mine_within(&faces),
        voice_voice: mine_within(&voices),
    }
}

fn mine_cross(anchors: &[&str], others: &[&str]) -> Vec<Triplet> {
    let mut out = Vec::new();
    for (a, la) in anchors.iter().enumerate() {
        for (p, lp) in others.iter().enumerate() {
            if lp != la {
                continue;
            }
            for (n, ln) in others.iter().enumerate() {
                if ln != la {
                    out.push(Triplet {
                        anchor: a,
                        positive: p,
                        negative: n,
                    });
                }
            }
        }
    }
    out
}

fn mine_within(labels: &[&str]) -> Vec<Triplet> {
    let mut out = Vec::new();
    for (a, la) in labels.iter().enumerate() {
        for (p, lp) in labels.iter().enumerate() {
            if p == a || lp != la {
                continue;
            }
            for (n, ln) in labels.iter().enumerate() {
                if ln != la {
                    out.push(Triplet {
                        anchor: a,
                        positive: p,
                        negative: n,
                    });
                }
            }
        }
    }
    out
}

/// Loss value, embedding gradients, and hinge activity counters for one
/// batch.
#[derive(Debug, Clone)]
pub struct BatchLoss {
    pub loss: f64,
    pub grad_face: Mat,
    pub grad_voice: Mat,
    /// Triplets whose hinge was strictly positive.
    pub active_triplets: usize,
    /// Total mined triplets across all four terms.
    pub total_triplets: usize,
}

/// Evaluates the four-term objective and its gradients with respect to the
/// projected embeddings.
///
/// Subgradient conventions: a hinge sitting exactly at zero contributes no
/// gradient, and the gradient of a distance between identical vectors is
/// the zero vector.
pub fn batch_loss(
    face_out: &Mat,
    voice_out: &Mat,
    triplets: &TripletSet,
    w: &LossWeights,
) -> Result<BatchLoss> {
    w.validate()?;
    if face_out.cols() != voice_out.cols() {
        return Err(Error::Shape(format!(
            "face rows have {} columns but voice rows have {}",
            face_out.cols(),
            voice_out.cols()
        )));
    }
    if !face_out.is_finite() || !voice_out.is_finite() {
        return Err(Error::Numeric("embedding matrix contains a non-finite value".into()));
    }

    let mut grad_face = Mat::zeros(face_out.rows(), face_out.cols());
    let mut grad_voice = Mat::zeros(voice_out.rows(), voice_out.cols());
    let mut loss = 0.0;
    let mut active = 0;

    // `grad_others: None` marks a within-modality term: positives and
    // negatives live in the anchor matrix, so their gradient rows do too.
    let term = |trips: &[Triplet],
                weight: f64,
                anchors: &Mat,
                others: &Mat,
                grad_anchors: &mut Mat,
                mut grad_others: Option<&mut Mat>|
     -> Result<(f64, usize)> {
        check_indices(trips, anchors.rows(), others.rows())?;
        let coeff = match w.reduction {
            Reduction::Sum => weight,
            Reduction::Mean if trips.is_empty() => 0.0,
            Reduction::Mean => weight / trips.len() as f64,
        };
        let mut sum = 0.0;
        let mut term_active = 0;
        for t in trips {
            let d_ap = dist(anchors.row(t.anchor), others.row(t.positive));
            let d_an = dist(anchors.row(t.anchor), others.row(t.negative));
            let h = w.margin + d_ap - d_an;
            if h <= 0.0 {
                continue;
            }
            sum += h;
            term_active += 1;
            let cols = anchors.cols();
            for j in 0..cols {
                let av = anchors[(t.anchor, j)];
                if d_ap > 0.0 {
                    let g = coeff * (av - others[(t.positive, j)]) / d_ap;
                    grad_anchors[(t.anchor, j)] += g;
                    match grad_others {
                        Some(ref mut go) => go[(t.positive, j)] -= g,
                        None => grad_anchors[(t.positive, j)] -= g,
                    }
                }
                if d_an > 0.0 {
                    let g = coeff * (av - others[(t.negative, j)]) / d_an;
                    grad_anchors[(t.anchor, j)] -= g;
                    match grad_others {
                        Some(ref mut go) => go[(t.negative, j)] += g,
                        None => grad_anchors[(t.negative, j)] += g,
                    }
                }
            }
        }
        let reduced = match w.reduction {
            Reduction::Sum => sum,
            Reduction::Mean if trips.is_empty() => 0.0,
            Reduction::Mean => sum / trips.len() as f64,
        };
        Ok((weight * reduced, term_active))
    };

    let (l1, a1) = term(
        &triplets.face_voice,
        1.0,
        face_out,
        voice_out,
        &mut grad_face,
        Some(&mut grad_voice),
    )?;
    let (l2, a2) = term(
        &triplets.voice_face,
        w.lambda1,
        voice_out,
        face_out,
        &mut grad_voice,
        Some(&mut grad_face),
    )?;
    let (l3, a3) = term(&triplets.face_face, w.lambda2, face_out, face_out, &mut grad_face, None)?;
    let (l4, a4) = term(
        &triplets.voice_voice,
        w.lambda3,
        voice_out,
        voice_out,
        &mut grad_voice,
        None,
    )?;
    loss += l1 + l2 + l3 + l4;
    active += a1 + a2 + a3 + a4;

    if !loss.is_finite() {
        return Err(Error::Numeric("loss overflowed to a non-finite value".into()));
    }
    Ok(BatchLoss {
        loss,
        grad_face,
        grad_voice,
        active_triplets: active,
        total_triplets: triplets.len(),
    })
}

fn check_indices(trips: &[Triplet], anchor_rows: usize, other_rows: usize) -> Result<()> {
    for t in trips {
        if t.anchor >= anchor_rows || t.positive >= other_rows || t.negative >= other_rows {
            return Err(Error::Shape(format!(
                "triplet ({}, {}, {}) is out of range for batches of {} anchor and {} other rows",
                t.anchor, t.positive, t.negative, anchor_rows, other_rows
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_mat(rows: usize, cols: usize, seed: u64) -> Mat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Mat::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    // ── euclidean_distance ──────────────────────────────────────────────

    #[test]
    fn distance_basics() {
        assert_eq!(euclidean_distance(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(euclidean_distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert!(matches!(
            euclidean_distance(&[1.0], &[1.0, 2.0]),
            Err(Error::Shape(_))
        ));
    }

    // ── mining ──────────────────────────────────────────────────────────

    /// Independent enumeration oracle: count all index triples satisfying
    /// each term's validity predicate directly.
    fn oracle_counts(faces: &[&str], voices: &[&str]) -> [usize; 4] {
        let count_cross = |anchors: &[&str], others: &[&str]| {
            let mut c = 0;
            for la in anchors {
                for lp in others {
                    for ln in others {
                        if lp == la && ln != la {
                            c += 1;
                        }
                    }
                }
            }
            c
        };
        let count_within = |labels: &[&str]| {
            let mut c = 0;
            for (a, la) in labels.iter().enumerate() {
                for (p, lp) in labels.iter().enumerate() {
                    for ln in labels {
                        if p != a && lp == la && ln != la {
                            c += 1;
                        }
                    }
                }
            }
            c
        };
        [
            count_cross(faces, voices),
            count_cross(voices, faces),
            count_within(faces),
            count_within(voices),
        ]
    }

    #[test]
    fn single_identity_mines_nothing() {
        let labels = ["a", "a", "a"];
        let set = mine_triplets(&labels, &labels);
        assert!(set.is_empty());
    }

    #[test]
    fn two_identities_two_samples_each() {
        let labels = ["a", "a", "b", "b"];
        let set = mine_triplets(&labels, &labels);
        assert_eq!(set.face_voice.len(), 16);
        assert_eq!(set.voice_face.len(), 16);
        assert_eq!(set.face_face.len(), 8);
        assert_eq!(set.voice_voice.len(), 8);

        let counts = oracle_counts(&labels, &labels);
        assert_eq!(counts, [16, 16, 8, 8]);
    }

    #[test]
    fn mined_triplets_satisfy_validity_predicates() {
        let faces = ["a", "b", "a", "c"];
        let voices = ["b", "a", "c", "a", "b"];
        let set = mine_triplets(&faces, &voices);
        for t in &set.face_voice {
            assert_eq!(faces[t.anchor], voices[t.positive]);
            assert_ne!(faces[t.anchor], voices[t.negative]);
        }
        for t in &set.voice_face {
            assert_eq!(voices[t.anchor], faces[t.positive]);
            assert_ne!(voices[t.anchor], faces[t.negative]);
        }
        for t in &set.face_face {
            assert_ne!(t.anchor, t.positive);
            assert_eq!(faces[t.anchor], faces[t.positive]);
            assert_ne!(faces[t.anchor], faces[t.negative]);
        }
        for t in &set.voice_voice {
            assert_ne!(t.anchor, t.positive);
            assert_eq!(voices[t.anchor], voices[t.positive]);
            assert_ne!(voices[t.anchor], voices[t.negative]);
        }
        let counts = oracle_counts(&faces, &voices);
        assert_eq!(
            [
                set.face_voice.len(),
                set.voice_face.len(),
                set.face_face.len(),
                set.voice_voice.len()
            ],
            counts
        );
    }

    // ── batch_loss ──────────────────────────────────────────────────────

    /// Naive reference: evaluate each term with explicit label loops,
    /// without going through `mine_triplets` or the gradient machinery.
    fn naive_loss(
        face: &Mat,
        voice: &Mat,
        face_labels: &[&str],
        voice_labels: &[&str],
        w: &LossWeights,
    ) -> f64 {
        let reduce = |hinges: Vec<f64>| -> f64 {
            if hinges.is_empty() {
                return 0.0;
            }
            let sum: f64 = hinges.iter().sum();
            match w.reduction {
                Reduction::Sum => sum,
                Reduction::Mean => sum / hinges.len() as f64,
            }
        };
        let cross = |a_mat: &Mat, a_lab: &[&str], b_mat: &Mat, b_lab: &[&str]| {
            let mut hinges = Vec::new();
            for (i, la) in a_lab.iter().enumerate() {
                for (p, lp) in b_lab.iter().enumerate() {
                    if lp != la {
                        continue;
                    }
                    for (n, ln) in b_lab.iter().enumerate() {
                        if ln == la {
                            continue;
                        }
                        let d_ap = dist(a_mat.row(i), b_mat.row(p));
                        let d_an = dist(a_mat.row(i), b_mat.row(n));
                        hinges.push((w.margin + d_ap - d_an).max(0.0));
                    }
                }
            }
            reduce(hinges)
        };
        let within = |m: &Mat, lab: &[&str]| {
            let mut hinges = Vec::new();
            for (i, la) in lab.iter().enumerate() {
                for (p, lp) in lab.iter().enumerate() {
                    if p == i || lp != la {
                        continue;
                    }
                    for (n, ln) in lab.iter().enumerate() {
                        if ln == la {
                            continue;
                        }
                        let d_ap = dist(m.row(i), m.row(p));
                        let d_an = dist(m.row(i), m.row(n));
                        hinges.push((w.margin + d_ap - d_an).max(0.0));
                    }
                }
            }
            reduce(hinges)
        };
        cross(face, face_labels, voice, voice_labels)
            + w.lambda1 * cross(voice, voice_labels, face, face_labels)
            + w.lambda2 * within(face, face_labels)
            + w.lambda3 * within(voice, voice_labels)
    }

    #[test]
    fn empty_triplets_give_zero() {
        let face = random_mat(2, 3, 1);
        let voice = random_mat(2, 3, 2);
        let set = TripletSet::default();
        let bl = batch_loss(&face, &voice, &set, &LossWeights::default()).unwrap();
        assert_eq!(bl.loss, 0.0);
        assert_eq!(bl.total_triplets, 0);
        assert!(bl.grad_face.as_slice().iter().all(|v| *v == 0.0));
        assert!(bl.grad_voice.as_slice().iter().all(|v| *v == 0.0));
    }

    /// Builds 1-D embeddings at given positions so distances are exact.
    fn line_points(points: &[f64]) -> Mat {
        Mat::from_fn(points.len(), 1, |r, _| points[r])
    }

    #[test]
    fn single_triplet_examples() {
        // Anchor at 0, positive at 0.2, negative at 0.9: hinge inactive.
        let face = line_points(&[0.0]);
        let voice = line_points(&[0.2, 0.9]);
        let set = TripletSet {
            face_voice: vec![Triplet { anchor: 0, positive: 0, negative: 1 }],
            ..Default::default()
        };
        let w = LossWeights::default();
        let bl = batch_loss(&face, &voice, &set, &w).unwrap();
        assert_eq!(bl.loss, 0.0);
        assert_eq!(bl.active_triplets, 0);
        assert_eq!(bl.total_triplets, 1);

        // d(a,p)=0.5, d(a,n)=0.4, m=0.1: hinge = 0.2.
        let voice = line_points(&[0.5, 0.4]);
        let bl = batch_loss(&face, &voice, &set, &w).unwrap();
        assert!((bl.loss - 0.2).abs() < 1e-15, "loss {}", bl.loss);
        assert_eq!(bl.active_triplets, 1);
    }

    #[test]
    fn hinge_exactly_at_zero_contributes_nothing() {
        // d(a,p) = 0, d(a,n) = m, so m + 0 - m = 0 exactly.
        let w = LossWeights::default();
        let face = line_points(&[0.0]);
        let voice = line_points(&[0.0, w.margin]);
        let set = TripletSet {
            face_voice: vec![Triplet { anchor: 0, positive: 0, negative: 1 }],
            ..Default::default()
        };
        let bl = batch_loss(&face, &voice, &set, &w).unwrap();
        assert_eq!(bl.loss, 0.0);
        assert_eq!(bl.active_triplets, 0);
        assert!(bl.grad_face.as_slice().iter().all(|v| *v == 0.0));
        assert!(bl.grad_voice.as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn coincident_anchor_and_positive_give_finite_gradients() {
        // d(a,p) = 0 with an active hinge: the distance gradient at zero is
        // defined as zero, so no NaN can leak out.
        let face = line_points(&[0.0]);
        let voice = line_points(&[0.0, 0.05]);
        let set = TripletSet {
            face_voice: vec![Triplet { anchor: 0, positive: 0, negative: 1 }],
            ..Default::default()
        };
        let bl = batch_loss(&face, &voice, &set, &LossWeights::default()).unwrap();
        assert!(bl.loss > 0.0);
        assert!(bl.grad_face.is_finite());
        assert!(bl.grad_voice.is_finite());
    }

    #[test]
    fn rejects_bad_inputs() {
        let face = random_mat(2, 3, 3);
        let voice = random_mat(2, 4, 4);
        let set = TripletSet::default();
        assert!(matches!(
            batch_loss(&face, &voice, &set, &LossWeights::default()),
            Err(Error::Shape(_))
        ));

        let voice = random_mat(2, 3, 4);
        let set = TripletSet {
            face_voice: vec![Triplet { anchor: 5, positive: 0, negative: 1 }],
            ..Default::default()
        };
        assert!(matches!(
            batch_loss(&face, &voice, &set, &LossWeights::default()),
            Err(Error::Shape(_))
        ));

        let bad = LossWeights {
            margin: -0.1,
            ..Default::default()
        };
        assert!(matches!(
            batch_loss(&face, &voice, &TripletSet::default(), &bad),
            Err(Error::Argument(_))
        ));

        let mut nan_mat = random_mat(2, 3, 5);
        nan_mat[(0, 0)] = f64::NAN;
        assert!(matches!(
            batch_loss(&nan_mat, &voice, &TripletSet::default(), &LossWeights::default()),
            Err(Error::Numeric(_))
        ));
    }

    fn random_labels(n: usize, identities: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
        (0..n)
            .map(|_| format!("id{}", rng.gen_range(0..identities)))
            .collect()
    }

    #[test]
    fn matches_naive_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for case in 0..40 {
            let nf = rng.gen_range(1..=8);
            let nv = rng.gen_range(1..=8);
            let dim = rng.gen_range(1..=4);
            let face = random_mat(nf, dim, 1000 + case);
            let voice = random_mat(nv, dim, 2000 + case);
            let face_labels = random_labels(nf, 3, &mut rng);
            let voice_labels = random_labels(nv, 3, &mut rng);
            let w = LossWeights {
                margin: rng.gen_range(0.0..0.5),
                lambda1: rng.gen_range(0.0..3.0),
                lambda2: rng.gen_range(0.0..1.0),
                lambda3: rng.gen_range(0.0..1.0),
                reduction: if case % 2 == 0 { Reduction::Mean } else { Reduction::Sum },
            };
            let set = mine_triplets(&face_labels, &voice_labels);
            let bl = batch_loss(&face, &voice, &set, &w).unwrap();
            let fl: Vec<&str> = face_labels.iter().map(String::as_str).collect();
            let vl: Vec<&str> = voice_labels.iter().map(String::as_str).collect();
            let expected = naive_loss(&face, &voice, &fl, &vl, &w);
            assert!(
                (bl.loss - expected).abs() <= 1e-9,
                "case {case}: batched {} vs naive {expected}",
                bl.loss
            );
        }
    }

    #[test]
    fn embedding_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(88);
        for case in 0..6 {
            let dim = 3;
            let mut face = random_mat(4, dim, 3000 + case);
            let mut voice = random_mat(4, dim, 4000 + case);
            let face_labels = random_labels(4, 2, &mut rng);
            let voice_labels = random_labels(4, 2, &mut rng);
            let set = mine_triplets(&face_labels, &voice_labels);
            let w = LossWeights {
                reduction: if case % 2 == 0 { Reduction::Mean } else { Reduction::Sum },
                ..Default::default()
            };
            let bl = batch_loss(&face, &voice, &set, &w).unwrap();

            let h = 1e-6;
            let mut max_rel = 0.0_f64;
            for idx in 0..face.as_slice().len() {
                let orig = face.as_slice()[idx];
                face.as_mut_slice()[idx] = orig + h;
                let up = batch_loss(&face, &voice, &set, &w).unwrap().loss;
                face.as_mut_slice()[idx] = orig - h;
                let down = batch_loss(&face, &voice, &set, &w).unwrap().loss;
                face.as_mut_slice()[idx] = orig;
                let numeric = (up - down) / (2.0 * h);
                let analytic = bl.grad_face.as_slice()[idx];
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
                max_rel = max_rel.max(rel);
            }
            for idx in 0..voice.as_slice().len() {
                let orig = voice.as_slice()[idx];
                voice.as_mut_slice()[idx] = orig + h;
                let up = batch_loss(&face, &voice, &set, &w).unwrap().loss;
                voice.as_mut_slice()[idx] = orig - h;
                let down = batch_loss(&face, &voice, &set, &w).unwrap().loss;
                voice.as_mut_slice()[idx] = orig;
                let numeric = (up - down) / (2.0 * h);
                let analytic = bl.grad_voice.as_slice()[idx];
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
                max_rel = max_rel.max(rel);
            }
            assert!(max_rel <= 1e-4, "case {case}: max relative error {max_rel}");
        }
    }

    #[test]
    fn well_separated_identities_give_zero_loss() {
        // Identity clusters 10 apart with intra-cluster spread well under
        // the margin headroom: every hinge is inactive.
        let face = line_points(&[0.0, 0.01, 10.0, 10.01]);
        let voice = line_points(&[0.02, 0.03, 10.02, 10.03]);
        let labels = ["a", "a", "b", "b"];
        let set = mine_triplets(&labels, &labels);
        assert!(!set.is_empty());
        let bl = batch_loss(&face, &voice, &set, &LossWeights::default()).unwrap();
        assert_eq!(bl.loss, 0.0);
        assert_eq!(bl.active_triplets, 0);
    }

    // ── property tests ──────────────────────────────────────────────────

    fn small_batch_strategy() -> impl Strategy<Value = (Mat, Mat, Vec<String>, Vec<String>)> {
        let labels = proptest::collection::vec(prop_oneof![Just("a"), Just("b"), Just("c")], 1..6);
        (labels.clone(), labels, 0u64..1000).prop_map(|(fl, vl, seed)| {
            let face = random_mat(fl.len(), 3, seed);
            let voice = random_mat(vl.len(), 3, seed.wrapping_add(1));
            (
                face,
                voice,
                fl.into_iter().map(String::from).collect(),
                vl.into_iter().map(String::from).collect(),
            )
        })
    }

    proptest! {
        #[test]
        fn prop_distance_is_symmetric(
            u in proptest::collection::vec(-10.0..10.0_f64, 4),
            v in proptest::collection::vec(-10.0..10.0_f64, 4),
        ) {
            let duv = euclidean_distance(&u, &v).unwrap();
            let dvu = euclidean_distance(&v, &u).unwrap();
            prop_assert_eq!(duv, dvu);
            prop_assert!(duv >= 0.0);
        }

        #[test]
        fn prop_loss_is_nonnegative((face, voice, fl, vl) in small_batch_strategy()) {
            let set = mine_triplets(&fl, &vl);
            let bl = batch_loss(&face, &voice, &set, &LossWeights::default()).unwrap();
            prop_assert!(bl.loss >= 0.0);
            prop_assert!(bl.active_triplets <= bl.total_triplets);
        }

        #[test]
        fn prop_loss_is_nondecreasing_in_margin(
            (face, voice, fl, vl) in small_batch_strategy(),
            m1 in 0.0..0.5_f64,
            dm in 0.0..0.5_f64,
        ) {
            let set = mine_triplets(&fl, &vl);
            let lo = LossWeights { margin: m1, ..Default::default() };
            let hi = LossWeights { margin: m1 + dm, ..Default::default() };
            let l_lo = batch_loss(&face, &voice, &set, &lo).unwrap().loss;
            let l_hi = batch_loss(&face, &voice, &set, &hi).unwrap().loss;
            prop_assert!(l_hi >= l_lo - 1e-12, "loss {l_lo} -> {l_hi}");
        }
    }
}
