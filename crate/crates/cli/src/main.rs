//! Command-line pipeline for the cross-modal toolkit.
//!
//! Six subcommands cover the full workflow: `synth` writes a corpus CSV,
//! `split` derives a protocol assignment, `train` fits the two-branch
//! model, `eval-ver` and `eval-id` score verification and identification
//! protocols, and `report` merges result CSVs and appends degradation
//! rows.
//!
//! Every parameter resolves with the same precedence: explicit flag, then
//! `--config` file entry, then built-in default. Each run writes a
//! `<out>.manifest` file listing the resolved values as flat `key = value`
//! lines; a manifest is itself a valid config file, so passing it back via
//! `--config` reproduces the run byte for byte.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use xmodal_core::{
    evaluate_cross_modal, evaluate_identification, evaluate_speaker_verification, generate,
    load_model, make_cross_modal_split, make_identification_split,
    make_speaker_verification_split, parse_corpus, save_model, train, train_linear_classifier,
    write_corpus, EmbeddingRecord, EvalReport, LossWeights, PairPolicy, SplitKind, SplitSpec,
    SynthConfig, TrainConfig,
};

#[derive(Parser)]
#[command(
    name = "xmodal",
    about = "Cross-modal face-voice embedding toolkit",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic two-modality corpus CSV.
    Synth(SynthArgs),
    /// Derive a train/test split from a corpus and save it as JSON.
    Split(SplitArgs),
    /// Train the two-branch projection model on a corpus and split.
    Train(TrainArgs),
    /// Evaluate cross-modal or speaker verification on a split.
    EvalVer(EvalVerArgs),
    /// Evaluate speaker identification with a linear classifier.
    EvalId(EvalIdArgs),
    /// Merge report CSVs and append heard-vs-unheard degradation rows.
    Report(ReportArgs),
}

#[derive(clap::Args)]
struct SynthArgs {
    /// Flat `key = value` config file; flags override its entries.
    #[arg(long)]
    config: Option<String>,
    /// Output corpus CSV path.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_identities: Option<usize>,
    #[arg(long)]
    samples_per_cell: Option<usize>,
    #[arg(long)]
    latent_dim: Option<usize>,
    #[arg(long)]
    face_dim: Option<usize>,
    #[arg(long)]
    voice_dim: Option<usize>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// L2 norm of the voice-space offset applied to non-primary languages.
    #[arg(long)]
    shift: Option<f64>,
    /// Draw an independent offset per identity instead of one per language.
    #[arg(long)]
    per_identity_shift: Option<bool>,
    /// Comma-separated language labels; the first is the primary.
    #[arg(long)]
    languages: Option<String>,
}

#[derive(clap::Args)]
struct SplitArgs {
    #[arg(long)]
    config: Option<String>,
    /// Output split JSON path.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Input corpus CSV.
    #[arg(long)]
    corpus: Option<String>,
    /// cross_modal_verification, speaker_identification, or
    /// speaker_verification.
    #[arg(long)]
    kind: Option<String>,
    /// Held-out identity count for the verification kinds.
    #[arg(long)]
    n_test: Option<usize>,
    /// Held-out sample fraction for the identification kind.
    #[arg(long)]
    test_fraction: Option<f64>,
    /// Training language.
    #[arg(long)]
    lang: Option<String>,
}

#[derive(clap::Args)]
struct TrainArgs {
    #[arg(long)]
    config: Option<String>,
    /// Output checkpoint path; the history CSV lands beside it.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    corpus: Option<String>,
    #[arg(long)]
    split: Option<String>,
    /// Training language; defaults to the split's train_language.
    #[arg(long)]
    lang: Option<String>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    #[arg(long)]
    lambda3: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Identities per batch.
    #[arg(long = "P")]
    p: Option<usize>,
    /// Samples per identity per modality per batch.
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long)]
    hidden_dim: Option<usize>,
    #[arg(long)]
    out_dim: Option<usize>,
    /// Hinge reduction: sum or mean.
    #[arg(long)]
    reduction: Option<String>,
}

#[derive(clap::Args)]
struct EvalVerArgs {
    #[arg(long)]
    config: Option<String>,
    /// Output report CSV path.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    corpus: Option<String>,
    #[arg(long)]
    split: Option<String>,
    /// Model checkpoint; required for cross_modal_verification splits.
    #[arg(long)]
    checkpoint: Option<String>,
    /// exhaustive or balanced; balanced negatives are seeded from --seed.
    #[arg(long)]
    pair_policy: Option<String>,
}

#[derive(clap::Args)]
struct EvalIdArgs {
    #[arg(long)]
    config: Option<String>,
    /// Output report CSV path.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    corpus: Option<String>,
    #[arg(long)]
    split: Option<String>,
    /// Classifier training epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Classifier learning rate.
    #[arg(long)]
    lr: Option<f64>,
}

#[derive(clap::Args)]
struct ReportArgs {
    /// Report CSVs to merge, in order.
    #[arg(required = true)]
    inputs: Vec<String>,
    #[arg(long)]
    config: Option<String>,
    /// Output merged report CSV path.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

/// Flag-then-config-then-default parameter resolution, recording every
/// resolved value for the run manifest.
struct Resolver {
    config: BTreeMap<String, String>,
    recorded: BTreeMap<String, String>,
}

impl Resolver {
    fn load(config_path: Option<&str>) -> Result<Resolver> {
        let config = match config_path {
            None => BTreeMap::new(),
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading config `{path}`"))?;
                parse_flat_config(&text)?
            }
        };
        Ok(Resolver {
            config,
            recorded: BTreeMap::new(),
        })
    }

    /// Resolves one parameter. `default: None` marks it required.
    fn value<T>(&mut self, key: &str, flag: Option<T>, default: Option<T>) -> Result<T>
    where
        T: FromStr + ToString,
        T::Err: Display,
    {
        let resolved = if let Some(v) = flag {
            v
        } else if let Some(raw) = self.config.get(key) {
            raw.parse::<T>()
                .map_err(|e| anyhow!("config key `{key}`: cannot parse `{raw}`: {e}"))?
        } else if let Some(d) = default {
            d
        } else {
            bail!("missing `--{key}`: pass the flag or provide the config key");
        };
        self.recorded.insert(key.to_string(), resolved.to_string());
        Ok(resolved)
    }

    /// Records a derived fact (an output path, say) in the manifest.
    fn note(&mut self, key: &str, value: impl ToString) {
        self.recorded.insert(key.to_string(), value.to_string());
    }

    fn manifest(&self, command: &str) -> String {
        let mut text = format!("command = {command}\n");
        for (k, v) in &self.recorded {
            text.push_str(&format!("{k} = {v}\n"));
        }
        text
    }
}

fn parse_flat_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("config line {}: expected `key = value`, got `{line}`", i + 1);
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn write_output(path: &str, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing `{path}`"))
}

fn write_manifest(resolver: &Resolver, command: &str, out: &str) -> Result<()> {
    let path = format!("{out}.manifest");
    write_output(&path, &resolver.manifest(command))
}

fn read_corpus_file(path: &str) -> Result<xmodal_core::Corpus> {
    let text = fs::read_to_string(path).with_context(|| format!("reading corpus `{path}`"))?;
    parse_corpus(&text).with_context(|| format!("parsing corpus `{path}`"))
}

fn read_split_file(path: &str) -> Result<SplitSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading split `{path}`"))?;
    SplitSpec::from_json(&text).with_context(|| format!("parsing split `{path}`"))
}

fn run_synth(args: SynthArgs) -> Result<()> {
    let mut r = Resolver::load(args.config.as_deref())?;
    let defaults = SynthConfig::default();
    let out: String = r.value("out", args.out, None)?;
    let languages: String =
        r.value("languages", args.languages, Some(defaults.languages.join(",")))?;
    let cfg = SynthConfig {
        n_identities: r.value("n-identities", args.n_identities, Some(defaults.n_identities))?,
        samples_per_cell: r.value(
            "samples-per-cell",
            args.samples_per_cell,
            Some(defaults.samples_per_cell),
        )?,
        latent_dim: r.value("latent-dim", args.latent_dim, Some(defaults.latent_dim))?,
        face_dim: r.value("face-dim", args.face_dim, Some(defaults.face_dim))?,
        voice_dim: r.value("voice-dim", args.voice_dim, Some(defaults.voice_dim))?,
        noise_sigma: r.value("noise-sigma", args.noise_sigma, Some(defaults.noise_sigma))?,
        shift_magnitude: r.value("shift", args.shift, Some(defaults.shift_magnitude))?,
        per_identity_shift: r.value(
            "per-identity-shift",
            args.per_identity_shift,
            Some(defaults.per_identity_shift),
        )?,
        languages: languages.split(',').map(|s| s.trim().to_string()).collect(),
        seed: r.value("seed", args.seed, Some(defaults.seed))?,
    };
    let corpus = generate(&cfg)?;
    write_output(&out, &write_corpus(&corpus))?;
    write_manifest(&r, "synth", &out)
}

fn run_split(args: SplitArgs) -> Result<()> {
    let mut r = Resolver::load(args.config.as_deref())?;
    let out: String = r.value("out", args.out, None)?;
    let corpus_path: String = r.value("corpus", args.corpus, None)?;
    let kind_name: String =
        r.value("kind", args.kind, Some(SplitKind::CrossModalVerification.to_string()))?;
    let kind: SplitKind = kind_name.parse()?;
    let lang: String = r.value("lang", args.lang, Some("E".to_string()))?;
    let seed: u64 = r.value("seed", args.seed, Some(0))?;

    let corpus = read_corpus_file(&corpus_path)?;
    let split = match kind {
        SplitKind::CrossModalVerification => {
            let n_test: usize = r.value("n-test", args.n_test, Some(6))?;
            make_cross_modal_split(&corpus, n_test, &lang, seed)?
        }
        SplitKind::SpeakerVerification => {
            let n_test: usize = r.value("n-test", args.n_test, Some(6))?;
            make_speaker_verification_split(&corpus, n_test, &lang, seed)?
        }
        SplitKind::SpeakerIdentification => {
            let fraction: f64 = r.value("test-fraction", args.test_fraction, Some(0.3))?;
            make_identification_split(&corpus, &lang, fraction, seed)?
        }
    };
    write_output(&out, &split.to_json())?;
    write_manifest(&r, "split", &out)
}

fn run_train(args: TrainArgs) -> Result<()> {
    let mut r = Resolver::load(args.config.as_deref())?;
    let defaults = TrainConfig::default();
    let out: String = r.value("out", args.out, None)?;
    let corpus_path: String = r.value("corpus", args.corpus, None)?;
    let split_path: String = r.value("split", args.split, None)?;

    let corpus = read_corpus_file(&corpus_path)?;
    let split = read_split_file(&split_path)?;
    let lang: String = r.value("lang", args.lang, Some(split.train_language.clone()))?;
    let reduction_name: String = r.value("reduction", args.reduction, Some("mean".to_string()))?;

    let cfg = TrainConfig {
        identities_per_batch: r.value("P", args.p, Some(defaults.identities_per_batch))?,
        samples_per_identity: r.value("K", args.k, Some(defaults.samples_per_identity))?,
        learning_rate: r.value("lr", args.lr, Some(defaults.learning_rate))?,
        momentum: defaults.momentum,
        epochs: r.value("epochs", args.epochs, Some(defaults.epochs))?,
        hidden_dim: r.value("hidden-dim", args.hidden_dim, Some(defaults.hidden_dim))?,
        out_dim: r.value("out-dim", args.out_dim, Some(defaults.out_dim))?,
        seed: r.value("seed", args.seed, Some(defaults.seed))?,
        loss: LossWeights {
            margin: r.value("margin", args.margin, Some(defaults.loss.margin))?,
            lambda1: r.value("lambda1", args.lambda1, Some(defaults.loss.lambda1))?,
            lambda2: r.value("lambda2", args.lambda2, Some(defaults.loss.lambda2))?,
            lambda3: r.value("lambda3", args.lambda3, Some(defaults.loss.lambda3))?,
            reduction: reduction_name.parse()?,
        },
    };

    let train_corpus = corpus.filter(Some(&lang), None, Some(&split.train_identities));
    let (model, history) = train(&train_corpus, &cfg)?;
    let history_path = format!("{out}.history.csv");
    write_output(&out, &save_model(&model))?;
    write_output(&history_path, &history.to_csv())?;
    r.note("history", &history_path);
    write_manifest(&r, "train", &out)
}

fn run_eval_ver(args: EvalVerArgs) -> Result<()> {
    let mut r = Resolver::load(args.config.as_deref())?;
    let out: String = r.value("out", args.out, None)?;
    let corpus_path: String = r.value("corpus", args.corpus, None)?;
    let split_path: String = r.value("split", args.split, None)?;
    let seed: u64 = r.value("seed", args.seed, Some(0))?;
    let policy_name: String =
        r.value("pair-policy", args.pair_policy, Some("balanced".to_string()))?;
    let policy = match policy_name.as_str() {
        "exhaustive" => PairPolicy::Exhaustive,
        "balanced" => PairPolicy::Balanced { seed },
        other => bail!("unknown pair policy `{other}`: expected `exhaustive` or `balanced`"),
    };

    let corpus = read_corpus_file(&corpus_path)?;
    let split = read_split_file(&split_path)?;
    let report = match split.kind {
        SplitKind::CrossModalVerification => {
            let checkpoint: String = r.value("checkpoint", args.checkpoint, None).map_err(|_| {
                anyhow!("cross_modal_verification evaluation needs `--checkpoint`")
            })?;
            let text = fs::read_to_string(&checkpoint)
                .with_context(|| format!("reading checkpoint `{checkpoint}`"))?;
            let model = load_model(&text)?;
            evaluate_cross_modal(&model, &corpus, &split, &policy, seed)?
        }
        SplitKind::SpeakerVerification => {
            if args.checkpoint.is_some() {
                bail!("`--checkpoint` only applies to cross_modal_verification splits");
            }
            evaluate_speaker_verification(&corpus, &split, &policy, seed)?
        }
        SplitKind::SpeakerIdentification => {
            bail!("speaker_identification splits are evaluated with `eval-id`")
        }
    };
    write_output(&out, &report.to_csv())?;
    write_manifest(&r, "eval-ver", &out)
}

fn run_eval_id(args: EvalIdArgs) -> Result<()> {
    let mut r = Resolver::load(args.config.as_deref())?;
    let out: String = r.value("out", args.out, None)?;
    let corpus_path: String = r.value("corpus", args.corpus, None)?;
    let split_path: String = r.value("split", args.split, None)?;
    let seed: u64 = r.value("seed", args.seed, Some(0))?;
    let epochs: usize = r.value("epochs", args.epochs, Some(200))?;
    let lr: f64 = r.value("lr", args.lr, Some(0.5))?;

    let corpus = read_corpus_file(&corpus_path)?;
    let split = read_split_file(&split_path)?;
    if split.kind != SplitKind::SpeakerIdentification {
        bail!("`eval-id` needs a speaker_identification split, got {}", split.kind);
    }

    let index = corpus.sample_index();
    let mut train_records: Vec<&EmbeddingRecord> = Vec::new();
    for (identity, track) in &split.tracks {
        for sid in &track.train_sample_ids {
            let record = index.get(sid.as_str()).ok_or_else(|| {
                anyhow!("split references unknown sample `{sid}` of identity `{identity}`")
            })?;
            train_records.push(record);
        }
    }
    let classifier =
        train_linear_classifier(&train_records, &split.train_identities, epochs, lr, seed)?;
    let report = evaluate_identification(&classifier, &corpus, &split, seed)?;
    write_output(&out, &report.to_csv())?;
    write_manifest(&r, "eval-id", &out)
}

fn run_report(args: ReportArgs) -> Result<()> {
    let mut r = Resolver::load(args.config.as_deref())?;
    let out: String = r.value("out", args.out, None)?;
    let seed: u64 = r.value("seed", args.seed, Some(0))?;
    let _ = seed;

    let mut merged = EvalReport::default();
    for (i, path) in args.inputs.iter().enumerate() {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading report `{path}`"))?;
        let report =
            EvalReport::parse_csv(&text).with_context(|| format!("parsing report `{path}`"))?;
        merged.rows.extend(report.rows);
        r.note(&format!("input-{i}"), path);
    }
    let with_deltas = merged.with_degradation_rows();
    write_output(&out, &with_deltas.to_csv())?;
    write_manifest(&r, "report", &out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(args) => run_synth(args),
        Command::Split(args) => run_split(args),
        Command::Train(args) => run_train(args),
        Command::EvalVer(args) => run_eval_ver(args),
        Command::EvalId(args) => run_eval_id(args),
        Command::Report(args) => run_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
