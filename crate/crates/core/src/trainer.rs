//! Seeded minibatch sampling and SGD-with-momentum training.
//!
//! Batches are composed per identity: P identities are drawn without
//! replacement, then K face and K voice records for each, so every loss
//! term can find positives and negatives inside the batch. An epoch is a
//! fixed number of sampled batches derived from the corpus size rather
//! than a partition pass, since sampling (not shuffling) drives batch
//! composition here.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, Modality};
use crate::error::{Error, Result};
use crate::loss::{batch_loss, mine_triplets, LossWeights};
use crate::mat::Mat;
use crate::twobranch::{init_model, BranchParams, TwoBranchModel};

/// Batch composition, optimizer settings, and model dims for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// P: identities per batch. At least 2, otherwise no negatives exist.
    pub identities_per_batch: usize,
    /// K: face records and voice records drawn per identity.
    pub samples_per_identity: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub hidden_dim: usize,
    pub out_dim: usize,
    pub seed: u64,
    pub loss: LossWeights,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            identities_per_batch: 8,
            samples_per_identity: 4,
            learning_rate: 0.05,
            momentum: 0.9,
            epochs: 12,
            hidden_dim: 1024,
            out_dim: 256,
            seed: 0,
            loss: LossWeights::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.identities_per_batch < 2 {
            return Err(Error::Argument(
                "identities_per_batch must be at least 2 so batches contain negatives".into(),
            ));
        }
        if self.samples_per_identity < 1 {
            return Err(Error::Argument("samples_per_identity must be at least 1".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::Argument(format!(
                "learning_rate must be finite and nonnegative, got {}",
                self.learning_rate
            )));
        }
        if !self.momentum.is_finite() || !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Argument(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        if self.hidden_dim == 0 || self.out_dim == 0 {
            return Err(Error::Argument("model dims must be at least 1".into()));
        }
        self.loss.validate()
    }
}

/// One sampled batch: K face rows and K voice rows for each of P
/// identities, with per-row identity labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Minibatch {
    pub face_inputs: Mat,
    pub face_labels: Vec<String>,
    pub voice_inputs: Mat,
    pub voice_labels: Vec<String>,
}

/// Momentum buffers, one velocity block per parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct OptState {
    pub face: BranchParams,
    pub voice: BranchParams,
}

impl OptState {
    /// Zero velocities shaped like the model's parameters.
    pub fn zeros_like(model: &TwoBranchModel) -> Self {
        OptState {
            face: BranchParams::zeros(model.face_in_dim(), model.hidden_dim(), model.out_dim()),
            voice: BranchParams::zeros(model.voice_in_dim(), model.hidden_dim(), model.out_dim()),
        }
    }
}

/// Diagnostics from one optimization step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    /// Loss before the parameter update.
    pub loss: f64,
    pub active_triplets: usize,
    pub total_triplets: usize,
    /// Batch rows that hit the zero-norm output case in the forward pass.
    pub degenerate_outputs: usize,
}

/// Per-epoch training diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub mean_loss: Vec<f64>,
    pub active_fraction: Vec<f64>,
    /// Total zero-norm forward outputs seen across the whole run.
    pub degenerate_outputs: usize,
}

impl TrainHistory {
    /// CSV with one row per completed epoch.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,mean_loss,active_fraction\n");
        for (i, (loss, frac)) in self.mean_loss.iter().zip(&self.active_fraction).enumerate() {
            out.push_str(&format!("{},{loss},{frac}\n", i + 1));
        }
        out
    }
}

/// Draws one minibatch: P identities uniformly without replacement, then K
/// face and K voice records per identity without replacement.
///
/// The whole corpus is checked for capacity first, so the error names the
/// first (alphabetically) identity that cannot supply K records per
/// modality, independent of the draw.
pub fn sample_minibatch(corpus: &Corpus, cfg: &TrainConfig, rng: &mut ChaCha8Rng) -> Result<Minibatch> {
    cfg.validate()?;
    let (p, k) = (cfg.identities_per_batch, cfg.samples_per_identity);

    let mut groups: BTreeMap<&str, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, rec) in corpus.records().iter().enumerate() {
        let entry = groups.entry(rec.identity.as_str()).or_default();
        match rec.modality {
            Modality::Face => entry.0.push(i),
            Modality::Voice => entry.1.push(i),
        }
    }

    if groups.len() < p {
        return Err(Error::Capacity(format!(
            "corpus has {} identities but a batch needs {p}",
            groups.len()
        )));
    }
    for (id, (faces, voices)) in &groups {
        if faces.len() < k || voices.len() < k {
            return Err(Error::Capacity(format!(
                "identity `{id}` has {} face and {} voice records, need at least {k} of each",
                faces.len(),
                voices.len()
            )));
        }
    }

    let ids: Vec<&str> = groups.keys().copied().collect();
    let chosen = index::sample(rng, ids.len(), p);

    let face_dim = corpus.face_dim().unwrap_or(0);
    let voice_dim = corpus.voice_dim().unwrap_or(0);
    let mut face_inputs = Mat::zeros(p * k, face_dim);
    let mut voice_inputs = Mat::zeros(p * k, voice_dim);
    let mut face_labels = Vec::with_capacity(p * k);
    let mut voice_labels = Vec::with_capacity(p * k);

    let mut row = 0;
    for idx in chosen.iter() {
        let id = ids[idx];
        let (faces, voices) = &groups[id];
        for (j, fi) in index::sample(rng, faces.len(), k).iter().enumerate() {
            let rec = &corpus.records()[faces[fi]];
            face_inputs.row_mut(row + j).copy_from_slice(&rec.vector);
            face_labels.push(rec.identity.clone());
        }
        for (j, vi) in index::sample(rng, voices.len(), k).iter().enumerate() {
            let rec = &corpus.records()[voices[vi]];
            voice_inputs.row_mut(row + j).copy_from_slice(&rec.vector);
            voice_labels.push(rec.identity.clone());
        }
        row += k;
    }

    Ok(Minibatch {
        face_inputs,
        face_labels,
        voice_inputs,
        voice_labels,
    })
}

/// Runs one forward/backward/update cycle. On any numeric failure the
/// model and optimizer state are left untouched so they can be inspected.
pub fn train_step(
    model: &mut TwoBranchModel,
    opt: &mut OptState,
    batch: &Minibatch,
    cfg: &TrainConfig,
) -> Result<StepStats> {
    let (face_out, face_cache) = model.face.forward(&batch.face_inputs)?;
    let (voice_out, voice_cache) = model.voice.forward(&batch.voice_inputs)?;

    let triplets = mine_triplets(&batch.face_labels, &batch.voice_labels);
    let bl = batch_loss(&face_out, &voice_out, &triplets, &cfg.loss)?;

    let (face_grads, _) = model.face.backward(&face_cache, &bl.grad_face)?;
    let (voice_grads, _) = model.voice.backward(&voice_cache, &bl.grad_voice)?;
    if !face_grads.is_finite() || !voice_grads.is_finite() {
        return Err(Error::Numeric(
            "parameter gradient contains a non-finite value; model left unchanged".into(),
        ));
    }

    apply_sgd(&mut model.face, &mut opt.face, &face_grads, cfg.learning_rate, cfg.momentum);
    apply_sgd(&mut model.voice, &mut opt.voice, &voice_grads, cfg.learning_rate, cfg.momentum);

    Ok(StepStats {
        loss: bl.loss,
        active_triplets: bl.active_triplets,
        total_triplets: bl.total_triplets,
        degenerate_outputs: face_cache.degenerate_count() + voice_cache.degenerate_count(),
    })
}

fn apply_sgd(params: &mut BranchParams, vel: &mut BranchParams, grads: &BranchParams, lr: f64, mu: f64) {
    let blocks = [
        (params.w1.as_mut_slice(), vel.w1.as_mut_slice(), grads.w1.as_slice()),
        (&mut params.b1[..], &mut vel.b1[..], &grads.b1[..]),
        (params.w2.as_mut_slice(), vel.w2.as_mut_slice(), grads.w2.as_slice()),
        (&mut params.b2[..], &mut vel.b2[..], &grads.b2[..]),
    ];
    for (p, v, g) in blocks {
        for i in 0..p.len() {
            v[i] = mu * v[i] + g[i];
            p[i] -= lr * v[i];
        }
    }
}

/// Full training run: initializes a model from the config seed and runs
/// `epochs × ⌈records / (P·K)⌉` sampled-batch steps.
///
/// The corpus is expected to already be restricted to the training
/// language and training identities; this function samples whatever it is
/// given.
pub fn train(corpus: &Corpus, cfg: &TrainConfig) -> Result<(TwoBranchModel, TrainHistory)> {
    cfg.validate()?;
    let face_dim = corpus
        .face_dim()
        .ok_or_else(|| Error::Capacity("corpus has no face records to train on".into()))?;
    let voice_dim = corpus
        .voice_dim()
        .ok_or_else(|| Error::Capacity("corpus has no voice records to train on".into()))?;
    if cfg.samples_per_identity == 1 {
        log::warn!(
            "samples_per_identity is 1: the face-face and voice-voice loss terms \
             will mine no triplets (a positive needs a second sample of the identity)"
        );
    }

    let mut model = init_model(face_dim, voice_dim, cfg.hidden_dim, cfg.out_dim, cfg.seed)?;
    let mut opt = OptState::zeros_like(&model);
    let mut history = TrainHistory::default();

    // The init draw and the batch draws come from separate streams of the
    // same seed so neither perturbs the other.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);

    let batch_span = cfg.identities_per_batch * cfg.samples_per_identity;
    let steps_per_epoch = corpus.len().div_ceil(batch_span).max(1);

    for _ in 0..cfg.epochs {
        let mut loss_sum = 0.0;
        let mut active = 0usize;
        let mut total = 0usize;
        for _ in 0..steps_per_epoch {
            let batch = sample_minibatch(corpus, cfg, &mut rng)?;
            let stats = train_step(&mut model, &mut opt, &batch, cfg)?;
            loss_sum += stats.loss;
            active += stats.active_triplets;
            total += stats.total_triplets;
            history.degenerate_outputs += stats.degenerate_outputs;
        }
        history.mean_loss.push(loss_sum / steps_per_epoch as f64);
        history
            .active_fraction
            .push(if total == 0 { 0.0 } else { active as f64 / total as f64 });
    }

    Ok((model, history))
}
