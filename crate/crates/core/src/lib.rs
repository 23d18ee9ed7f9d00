//! Cross-modal face-voice embedding alignment.
//!
//! This crate takes precomputed face and voice embeddings that live in
//! unrelated spaces and learns a pair of small projection networks mapping
//! both into one shared space, where matched identities sit close together
//! and mismatched ones far apart. Around that core it provides the full
//! loop needed to study the approach: a corpus format for labelled
//! embeddings, exhaustive in-batch triplet mining with a four-term hinge
//! loss, SGD training, verification and identification metrics, evaluation
//! protocols that contrast a heard language against unheard ones, and a
//! synthetic corpus generator with a controllable cross-language shift.
//!
//! Everything is deterministic given explicit seeds: corpora, splits,
//! initial weights, batch order, and evaluations reproduce exactly.

mod corpus;
mod error;
mod loss;
mod mat;
mod metrics;
mod protocol;
mod synth;
mod trainer;
mod util;

pub mod twobranch;

pub use corpus::{
    parse_corpus, valid_label, write_corpus, Corpus, EmbeddingRecord, Modality, CSV_HEADER,
};
pub use error::{Error, Result};
pub use loss::{
    batch_loss, euclidean_distance, mine_triplets, BatchLoss, LossWeights, Reduction, Triplet,
    TripletSet,
};
pub use mat::Mat;
pub use metrics::{
    compute_eer, make_pairs, score_pairs, score_pairs_raw, top1_accuracy, Pair, PairPolicy,
    ScoredPairs,
};
pub use protocol::{
    evaluate_cross_modal, evaluate_identification, evaluate_speaker_verification,
    make_cross_modal_split, make_identification_split, make_speaker_verification_split,
    train_linear_classifier, EvalReport, EvalRow, LinearClassifier, SplitKind, SplitSpec,
    TrackAssignment, REPORT_HEADER,
};
pub use synth::{generate, SynthConfig};
pub use trainer::{
    sample_minibatch, train, train_step, Minibatch, OptState, StepStats, TrainConfig, TrainHistory,
};
pub use twobranch::{init_model, load_model, save_model, BranchParams, ForwardCache, TwoBranchModel};
