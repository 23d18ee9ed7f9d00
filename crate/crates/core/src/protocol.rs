//! Evaluation protocols: split construction, evaluation runs, and report
//! assembly.
//!
//! Three protocols are covered. Cross-modal verification holds out a set
//! of identities entirely and asks whether a face and a voice belong to
//! the same unseen person, per test language. Speaker identification keeps
//! the same identities on both sides but holds out voice samples: training
//! samples come from the training language, test samples are the held-out
//! tracks plus every other language. Speaker verification holds out
//! identities and scores voice-voice trials on raw embeddings, pairing
//! each training-language (enrollment) record against the test language's
//! (probe) records so cross-language trials actually cross the language
//! boundary.
//!
//! Every evaluation emits rows of `(kind, train_lang, test_lang, heard,
//! metric, value, seed)`; heard marks the test language that matches the
//! training language.

use std::collections::{BTreeMap, BTreeSet};

use rand::distributions::{Distribution, Uniform};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, EmbeddingRecord, Modality};
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::metrics::{
    compute_eer, make_pairs, score_pairs, score_pairs_raw, top1_accuracy, PairPolicy,
};
use crate::twobranch::TwoBranchModel;

/// Which protocol a split was built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    CrossModalVerification,
    SpeakerIdentification,
    SpeakerVerification,
}

impl SplitKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SplitKind::CrossModalVerification => "cross_modal_verification",
            SplitKind::SpeakerIdentification => "speaker_identification",
            SplitKind::SpeakerVerification => "speaker_verification",
        }
    }
}

impl std::fmt::Display for SplitKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SplitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<SplitKind> {
        match s {
            "cross_modal_verification" => Ok(SplitKind::CrossModalVerification),
            "speaker_identification" => Ok(SplitKind::SpeakerIdentification),
            "speaker_verification" => Ok(SplitKind::SpeakerVerification),
            _ => Err(Error::Argument(format!("unknown split kind `{s}`"))),
        }
    }
}

/// Per-identity voice-sample assignments for the identification protocol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackAssignment {
    /// Training-language sample ids used to fit the classifier.
    pub train_sample_ids: Vec<String>,
    /// Test sample ids keyed by language. For the training language these
    /// are the held-out samples; for every other language, all samples.
    pub test_sample_ids: BTreeMap<String, Vec<String>>,
}

/// A train/test assignment, serializable as JSON.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub kind: SplitKind,
    pub train_identities: BTreeSet<String>,
    pub test_identities: BTreeSet<String>,
    pub train_language: String,
    pub test_languages: Vec<String>,
    /// Only populated for the identification kind.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tracks: BTreeMap<String, TrackAssignment>,
}

impl SplitSpec {
    pub fn to_json(&self) -> String {
        // Serialization of these plain containers cannot fail.
        let mut text = serde_json::to_string_pretty(self).expect("split serialization");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<SplitSpec> {
        serde_json::from_str(text).map_err(|e| Error::Format(format!("invalid split JSON: {e}")))
    }
}

/// Presence map: which (language, modality) cells each identity covers.
fn coverage(corpus: &Corpus) -> BTreeMap<&str, BTreeSet<(&str, Modality)>> {
    let mut map: BTreeMap<&str, BTreeSet<(&str, Modality)>> = BTreeMap::new();
    for rec in corpus.records() {
        map.entry(rec.identity.as_str())
            .or_default()
            .insert((rec.language.as_str(), rec.modality));
    }
    map
}

fn check_train_language(corpus: &Corpus, train_language: &str) -> Result<()> {
    if !corpus.languages().contains(train_language) {
        return Err(Error::Protocol(format!(
            "training language `{train_language}` does not occur in the corpus"
        )));
    }
    Ok(())
}

fn disjoint_identity_split(
    corpus: &Corpus,
    n_test: usize,
    train_language: &str,
    seed: u64,
    kind: SplitKind,
    need_face: bool,
) -> Result<SplitSpec> {
    if n_test == 0 {
        return Err(Error::Argument("n_test_identities must be at least 1".into()));
    }
    check_train_language(corpus, train_language)?;
    let cover = coverage(corpus);
    if cover.len() < n_test + 2 {
        return Err(Error::Protocol(format!(
            "corpus has {} identities; holding out {n_test} for test needs at least {}",
            cover.len(),
            n_test + 2
        )));
    }

    // Test identities must support evaluation in every language.
    let eligible: Vec<&str> = cover
        .iter()
        .filter(|(_, cells)| {
            corpus.languages().iter().all(|lang| {
                cells.contains(&(lang.as_str(), Modality::Voice))
                    && (!need_face || cells.contains(&(lang.as_str(), Modality::Face)))
            })
        })
        .map(|(id, _)| *id)
        .collect();
    if eligible.len() < n_test {
        let needed = if need_face { "face and voice" } else { "voice" };
        return Err(Error::Protocol(format!(
            "only {} identities have {needed} records in every language; need {n_test} for test",
            eligible.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let test_identities: BTreeSet<String> = index::sample(&mut rng, eligible.len(), n_test)
        .iter()
        .map(|i| eligible[i].to_string())
        .collect();
    let train_identities: BTreeSet<String> = cover
        .keys()
        .filter(|id| !test_identities.contains(**id))
        .map(|id| id.to_string())
        .collect();

    Ok(SplitSpec {
        kind,
        train_identities,
        test_identities,
        train_language: train_language.to_string(),
        test_languages: corpus.languages().iter().cloned().collect(),
        tracks: BTreeMap::new(),
    })
}

/// Holds out `n_test` identities (with both modalities present in every
/// language) for cross-modal verification; the remainder trains.
pub fn make_cross_modal_split(
    corpus: &Corpus,
    n_test: usize,
    train_language: &str,
    seed: u64,
) -> Result<SplitSpec> {
    disjoint_identity_split(
        corpus,
        n_test,
        train_language,
        seed,
        SplitKind::CrossModalVerification,
        true,
    )
}

/// Holds out `n_test` identities (with voice records in every language)
/// for voice-voice speaker verification.
pub fn make_speaker_verification_split(
    corpus: &Corpus,
    n_test: usize,
    train_language: &str,
    seed: u64,
) -> Result<SplitSpec> {
    disjoint_identity_split(
        corpus,
        n_test,
        train_language,
        seed,
        SplitKind::SpeakerVerification,
        false,
    )
}

/// Splits every identity's training-language voice samples into train and
/// test tracks (at least one on each side), and routes all other-language
/// voice samples to test.
pub fn make_identification_split(
    corpus: &Corpus,
    train_language: &str,
    test_fraction: f64,
    seed: u64,
) -> Result<SplitSpec> {
    if !test_fraction.is_finite() || test_fraction <= 0.0 || test_fraction >= 1.0 {
        return Err(Error::Argument(format!(
            "test_fraction must lie strictly between 0 and 1, got {test_fraction}"
        )));
    }
    check_train_language(corpus, train_language)?;

    // Voice sample ids per (identity, language), in corpus order.
    let mut voices: BTreeMap<&str, BTreeMap<&str, Vec<&str>>> = BTreeMap::new();
    for rec in corpus.records() {
        if rec.modality == Modality::Voice {
            voices
                .entry(rec.identity.as_str())
                .or_default()
                .entry(rec.language.as_str())
                .or_default()
                .push(rec.sample_id.as_str());
        }
    }
    if voices.is_empty() {
        return Err(Error::Protocol("corpus has no voice records".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tracks = BTreeMap::new();
    let empty = BTreeMap::new();
    for id in corpus.identities() {
        let by_lang = voices.get(id).unwrap_or(&empty);
        let heard = by_lang.get(train_language).map_or(&[][..], |v| &v[..]);
        if heard.len() < 2 {
            return Err(Error::Protocol(format!(
                "identity `{id}` has {} voice records in language `{train_language}`, need at least 2 to split",
                heard.len()
            )));
        }
        for lang in corpus.languages() {
            let n = by_lang.get(lang.as_str()).map_or(0, |v| v.len());
            if n == 0 {
                return Err(Error::Protocol(format!(
                    "identity `{id}` has no voice records in language `{lang}`"
                )));
            }
        }

        let n = heard.len();
        let n_test = ((test_fraction * n as f64).round() as usize).clamp(1, n - 1);
        let mut test_idx: Vec<usize> = index::sample(&mut rng, n, n_test).into_vec();
        test_idx.sort_unstable();
        let test_set: BTreeSet<usize> = test_idx.iter().copied().collect();

        let mut test_sample_ids: BTreeMap<String, Vec<String>> = BTreeMap::new();
        test_sample_ids.insert(
            train_language.to_string(),
            test_idx.iter().map(|&i| heard[i].to_string()).collect(),
        );
        for lang in corpus.languages() {
            if lang != train_language {
                test_sample_ids.insert(
                    lang.clone(),
                    by_lang[lang.as_str()].iter().map(|s| s.to_string()).collect(),
                );
            }
        }

        tracks.insert(
            id.to_string(),
            TrackAssignment {
                train_sample_ids: heard
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !test_set.contains(i))
                    .map(|(_, s)| s.to_string())
                    .collect(),
                test_sample_ids,
            },
        );
    }

    let identities: BTreeSet<String> = tracks.keys().cloned().collect();
    Ok(SplitSpec {
        kind: SplitKind::SpeakerIdentification,
        train_identities: identities.clone(),
        test_identities: identities,
        train_language: train_language.to_string(),
        test_languages: corpus.languages().iter().cloned().collect(),
        tracks,
    })
}

// ── evaluation reports ──────────────────────────────────────────────────

/// One metric measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub kind: SplitKind,
    pub train_lang: String,
    pub test_lang: String,
    pub heard: bool,
    pub metric: String,
    pub value: f64,
    pub seed: u64,
}

/// An ordered list of measurements, exportable as CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
}

pub const REPORT_HEADER: &str = "kind,train_lang,test_lang,heard,metric,value,seed";

impl EvalReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.kind, r.train_lang, r.test_lang, r.heard, r.metric, r.value, r.seed
            ));
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<EvalReport> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty report: expected a header line".into()))?;
        if header != REPORT_HEADER {
            return Err(Error::Format(format!(
                "bad report header `{header}`: expected `{REPORT_HEADER}`"
            )));
        }
        let mut rows = Vec::new();
        for (idx, line) in lines.enumerate() {
            let line_no = idx + 2;
            let row = |msg: String| Error::Row { line: line_no, msg };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(row(format!("expected 7 fields, found {}", fields.len())));
            }
            let kind: SplitKind = fields[0]
                .parse()
                .map_err(|_| row(format!("unknown split kind `{}`", fields[0])))?;
            let heard = match fields[3] {
                "true" => true,
                "false" => false,
                other => return Err(row(format!("invalid heard flag `{other}`"))),
            };
            let value: f64 = fields[5]
                .parse()
                .map_err(|_| row(format!("invalid value `{}`", fields[5])))?;
            let seed: u64 = fields[6]
                .parse()
                .map_err(|_| row(format!("invalid seed `{}`", fields[6])))?;
            rows.push(EvalRow {
                kind,
                train_lang: fields[1].to_string(),
                test_lang: fields[2].to_string(),
                heard,
                metric: fields[4].to_string(),
                value,
                seed,
            });
        }
        Ok(EvalReport { rows })
    }

    /// Appends percentage-decrease rows comparing each unheard language
    /// against the heard row of the same (kind, train language, metric,
    /// seed) group: EER is expected to rise (so the decrease is
    /// `100·(unheard − heard)/heard`) and Top-1 to fall
    /// (`100·(heard − unheard)/heard`). Groups without a usable heard
    /// baseline (missing, duplicated, or zero) are skipped.
    pub fn with_degradation_rows(&self) -> EvalReport {
        let mut groups: BTreeMap<(SplitKind, String, String, u64), Vec<&EvalRow>> = BTreeMap::new();
        for r in &self.rows {
            if r.metric != "eer" && r.metric != "top1" {
                continue;
            }
            groups
                .entry((r.kind, r.train_lang.clone(), r.metric.clone(), r.seed))
                .or_default()
                .push(r);
        }

        // Rerunning on an already-derived report must not duplicate rows.
        let existing: BTreeSet<(SplitKind, &str, &str, &str, u64)> = self
            .rows
            .iter()
            .map(|r| (r.kind, r.train_lang.as_str(), r.test_lang.as_str(), r.metric.as_str(), r.seed))
            .collect();

        let mut out = self.clone();
        for ((kind, train_lang, metric, seed), rows) in &groups {
            let heard_rows: Vec<&&EvalRow> = rows.iter().filter(|r| r.heard).collect();
            let [baseline] = heard_rows.as_slice() else {
                continue;
            };
            if baseline.value == 0.0 {
                continue;
            }
            for r in rows.iter().filter(|r| !r.heard) {
                let (name, value) = match metric.as_str() {
                    "eer" => ("eer_pct_decrease", 100.0 * (r.value - baseline.value) / baseline.value),
                    _ => ("top1_pct_decrease", 100.0 * (baseline.value - r.value) / baseline.value),
                };
                if existing.contains(&(*kind, train_lang.as_str(), r.test_lang.as_str(), name, *seed)) {
                    continue;
                }
                out.rows.push(EvalRow {
                    kind: *kind,
                    train_lang: train_lang.clone(),
                    test_lang: r.test_lang.clone(),
                    heard: false,
                    metric: name.to_string(),
                    value,
                    seed: *seed,
                });
            }
        }
        out
    }
}

// ── cross-modal verification ────────────────────────────────────────────

/// Scores face-voice verification over the split's test identities, one
/// EER row per test language.
pub fn evaluate_cross_modal(
    model: &TwoBranchModel,
    corpus: &Corpus,
    split: &SplitSpec,
    policy: &PairPolicy,
    seed: u64,
) -> Result<EvalReport> {
    if split.kind != SplitKind::CrossModalVerification {
        return Err(Error::Protocol(format!(
            "cross-modal evaluation needs a cross_modal_verification split, got {}",
            split.kind
        )));
    }
    let mut report = EvalReport::default();
    for lang in &split.test_languages {
        let faces = corpus.select(Some(lang.as_str()), Some(Modality::Face), Some(&split.test_identities));
        let voices = corpus.select(Some(lang.as_str()), Some(Modality::Voice), Some(&split.test_identities));
        let pairs = make_pairs(&faces, &voices, policy)?;
        let scoredpairs = score_pairs(model, &faces, &voices, &pairs)?;
        let (eer, _) = compute_eer(&scoredpairs)?;
        report.rows.push(EvalRow {
            kind: split.kind,
            train_lang: split.train_language.clone(),
            test_lang: lang.clone(),
            heard: *lang == split.train_language,
            metric: "eer".to_string(),
            value: eer,
            seed,
        });
    }
    Ok(report)
}

// ── speaker identification ──────────────────────────────────────────────

/// Multinomial logistic regression over raw voice embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    /// One row of weights per class, aligned with `classes`.
    pub weights: Mat,
    pub bias: Vec<f64>,
    /// Sorted class labels; prediction returns one of these.
    pub classes: Vec<String>,
}

impl LinearClassifier {
    /// Highest-logit class, lowest index winning ties.
    pub fn predict(&self, v: &[f64]) -> Result<&str> {
        if v.len() != self.weights.cols() {
            return Err(Error::Shape(format!(
                "input has {} coordinates but the classifier expects {}",
                v.len(),
                self.weights.cols()
            )));
        }
        let mut best = 0;
        let mut best_logit = f64::NEG_INFINITY;
        for c in 0..self.classes.len() {
            let logit: f64 = self.bias[c]
                + self
                    .weights
                    .row(c)
                    .iter()
                    .zip(v)
                    .map(|(w, x)| w * x)
                    .sum::<f64>();
            if logit > best_logit {
                best_logit = logit;
                best = c;
            }
        }
        Ok(&self.classes[best])
    }
}

/// Fits the classifier by full-batch gradient descent on softmax
/// cross-entropy. Deterministic given the seed (which only drives the
/// weight initialization).
pub fn train_linear_classifier(
    records: &[&EmbeddingRecord],
    identities: &BTreeSet<String>,
    epochs: usize,
    lr: f64,
    seed: u64,
) -> Result<LinearClassifier> {
    if identities.is_empty() {
        return Err(Error::Argument("classifier needs a non-empty identity set".into()));
    }
    if !lr.is_finite() || lr < 0.0 {
        return Err(Error::Argument(format!(
            "learning rate must be finite and nonnegative, got {lr}"
        )));
    }
    let classes: Vec<String> = identities.iter().cloned().collect();
    let class_idx: BTreeMap<&str, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();

    let mut counts = vec![0usize; classes.len()];
    let mut labels = Vec::with_capacity(records.len());
    for rec in records {
        let Some(&c) = class_idx.get(rec.identity.as_str()) else {
            return Err(Error::Protocol(format!(
                "training sample `{}` has identity `{}` outside the classifier's label set",
                rec.sample_id, rec.identity
            )));
        };
        counts[c] += 1;
        labels.push(c);
    }
    if let Some(missing) = counts.iter().position(|c| *c == 0) {
        return Err(Error::Protocol(format!(
            "identity `{}` has no training records",
            classes[missing]
        )));
    }

    let dim = records[0].vector.len();
    for rec in records {
        if rec.vector.len() != dim {
            return Err(Error::Shape(format!(
                "sample `{}` has {} coordinates, expected {dim}",
                rec.sample_id,
                rec.vector.len()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = 1.0 / (dim as f64).sqrt();
    let dist = Uniform::new(-bound, bound);
    let mut weights = Mat::from_fn(classes.len(), dim, |_, _| dist.sample(&mut rng));
    let mut bias = vec![0.0; classes.len()];

    let n = records.len() as f64;
    let n_classes = classes.len();
    let mut probs = vec![0.0; n_classes];
    for _ in 0..epochs {
        let mut grad_w = Mat::zeros(n_classes, dim);
        let mut grad_b = vec![0.0; n_classes];
        for (rec, &y) in records.iter().zip(&labels) {
            let x = &rec.vector;
            let mut max_logit = f64::NEG_INFINITY;
            for c in 0..n_classes {
                let logit: f64 = bias[c]
                    + weights.row(c).iter().zip(x).map(|(w, xv)| w * xv).sum::<f64>();
                probs[c] = logit;
                max_logit = max_logit.max(logit);
            }
            let mut z = 0.0;
            for p in probs.iter_mut() {
                *p = (*p - max_logit).exp();
                z += *p;
            }
            for (c, p) in probs.iter_mut().enumerate() {
                let mut g = *p / z;
                if c == y {
                    g -= 1.0;
                }
                grad_b[c] += g;
                let gw = grad_w.row_mut(c);
                for (slot, xv) in gw.iter_mut().zip(x) {
                    *slot += g * xv;
                }
            }
        }
        for c in 0..n_classes {
            bias[c] -= lr * grad_b[c] / n;
            let w = weights.row_mut(c);
            let g = grad_w.row(c);
            for (wv, gv) in w.iter_mut().zip(g) {
                *wv -= lr * gv / n;
            }
        }
    }

    Ok(LinearClassifier {
        weights,
        bias,
        classes,
    })
}

/// Top-1 accuracy per test language over the split's held-out samples.
pub fn evaluate_identification(
    classifier: &LinearClassifier,
    corpus: &Corpus,
    split: &SplitSpec,
    seed: u64,
) -> Result<EvalReport> {
    if split.kind != SplitKind::SpeakerIdentification {
        return Err(Error::Protocol(format!(
            "identification evaluation needs a speaker_identification split, got {}",
            split.kind
        )));
    }
    let by_id = corpus.sample_index();
    let mut report = EvalReport::default();
    for lang in &split.test_languages {
        let mut predicted = Vec::new();
        let mut truth = Vec::new();
        for (identity, track) in &split.tracks {
            let Some(sample_ids) = track.test_sample_ids.get(lang) else {
                continue;
            };
            for sid in sample_ids {
                let rec = by_id.get(sid.as_str()).ok_or_else(|| {
                    Error::Protocol(format!("split references sample `{sid}` which is not in the corpus"))
                })?;
                predicted.push(classifier.predict(&rec.vector)?.to_string());
                truth.push(identity.clone());
            }
        }
        let top1 = top1_accuracy(&predicted, &truth)?;
        report.rows.push(EvalRow {
            kind: split.kind,
            train_lang: split.train_language.clone(),
            test_lang: lang.clone(),
            heard: *lang == split.train_language,
            metric: "top1".to_string(),
            value: top1,
            seed,
        });
    }
    Ok(report)
}

// ── speaker verification ────────────────────────────────────────────────

/// Voice-voice verification on raw embeddings over the split's test
/// identities, one EER row per test language.
///
/// Trials pair enrollment records (test identities, training language)
/// against probe records in the test language, so the unheard rows measure
/// verification across the language boundary while the heard row reduces
/// to ordinary within-language trials.
pub fn evaluate_speaker_verification(
    corpus: &Corpus,
    split: &SplitSpec,
    policy: &PairPolicy,
    seed: u64,
) -> Result<EvalReport> {
    if split.kind != SplitKind::SpeakerVerification {
        return Err(Error::Protocol(format!(
            "speaker verification needs a speaker_verification split, got {}",
            split.kind
        )));
    }
    let enroll = corpus.select(
        Some(split.train_language.as_str()),
        Some(Modality::Voice),
        Some(&split.test_identities),
    );
    let mut report = EvalReport::default();
    for lang in &split.test_languages {
        let probes =
            corpus.select(Some(lang.as_str()), Some(Modality::Voice), Some(&split.test_identities));
        let pairs = make_pairs(&enroll, &probes, policy)?;
        let scoredpairs = score_pairs_raw(&enroll, &probes, &pairs)?;
        let (eer, _) = compute_eer(&scoredpairs)?;
        report.rows.push(EvalRow {
            kind: split.kind,
            train_lang: split.train_language.clone(),
            test_lang: lang.clone(),
            heard: *lang == split.train_language,
            metric: "eer".to_string(),
            value: eer,
            seed,
        });
    }
    Ok(report)
}
