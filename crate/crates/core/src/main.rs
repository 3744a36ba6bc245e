//! `lmtc` command-line entry point.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use lmtc::config::Config;
use lmtc::corpus::{
    assign_parallel_splits, ingest, to_jsonl_string, label_stats, parse_language_list, Corpus, Format,
    LanguageCode, LanguageRegistry, Split, SplitPolicy,
};
use lmtc::eurovoc::{build_label_index, parse_thesaurus, parse_thesaurus_str, LabelIndex};
use lmtc::manifest::{sha256_hex, RunManifest};
use lmtc::metrics::{read_predictions, write_predictions, EvalReport, PredictionRow, ScoreRecord};
use lmtc::model::{load_checkpoint, EncoderModel};
use lmtc::pipeline::{pretrain, run_ablation, run_transfer, AblationAxis, Resources};
use lmtc::synth::generate_parallel;
use lmtc::tokenizer::{train_vocab, Vocab};
use lmtc::training::{encode_documents, evaluate_transfer, predict_rows, CheckpointStore, NoopObserver};

const LABELS_FILE: &str = "labels.txt";

#[derive(Parser)]
#[command(name = "lmtc", version, about = "Cross-lingual multi-label document classification toolkit")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` configuration file; built-in desk defaults otherwise.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override any configuration key, e.g. `--set train.epochs=5`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Run seed; same as `--set seed=N`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory under which default inputs and outputs live.
    #[arg(long, global = true, env = "LMTC_ARTIFACT_ROOT", default_value = "artifacts")]
    artifact_root: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic parallel corpus, thesaurus and general-domain text.
    Synth {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Read raw corpora, assign parallel splits and write normalised corpus files.
    Ingest(IngestArgs),
    /// Train a subword vocabulary.
    BuildVocab(TextArgs),
    /// Masked-LM pretraining of a fresh encoder.
    Pretrain(TextArgs),
    /// LM finetuning, classifier training, checkpoint selection and test evaluation.
    Train(TrainArgs),
    /// Per-language metrics for a checkpoint or a predictions file.
    Evaluate(EvaluateArgs),
    /// Run the transfer pipeline over one ablation axis and several seeds.
    Ablate(AblateArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// `LANG=PATH`, repeatable.
    #[arg(long = "input", required = true, value_name = "LANG=PATH")]
    inputs: Vec<String>,
    /// `jsonl` or `jrc-xml`.
    #[arg(long, default_value = "jsonl")]
    format: String,
    /// Language whose splits are copied onto the other languages' parallel documents.
    #[arg(long)]
    anchor: Option<LanguageCode>,
    /// Thesaurus used to validate and resolve observed labels.
    #[arg(long)]
    thesaurus: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TextArgs {
    /// Text files (one document per line) or corpus JSONL files (train and unsplit
    /// documents only). Defaults to the synthetic general-domain text.
    #[arg(long = "text")]
    texts: Vec<PathBuf>,
    /// Languages the vocabulary is declared for.
    #[arg(long)]
    languages: Option<String>,
    /// Vocabulary (pretrain only).
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ModelInputs {
    /// Directory of `<lang>.jsonl` corpus files and `labels.txt`. Repeatable.
    #[arg(long = "corpus")]
    corpora: Vec<PathBuf>,
    #[arg(long)]
    vocab: Option<PathBuf>,
}

#[derive(Args)]
struct PlanFlags {
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    source: Option<String>,
    /// Target languages.
    #[arg(long, alias = "target")]
    languages: Option<String>,
    #[arg(long)]
    lmft_cycles: Option<String>,
    #[arg(long)]
    unfrozen_layers: Option<String>,
    #[arg(long)]
    gduf: Option<String>,
    /// Cut-offs for RP@K and nDCG@K, e.g. `3,5`.
    #[arg(long)]
    k: Option<String>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    inputs: ModelInputs,
    /// Pretrained encoder checkpoint.
    #[arg(long)]
    base: Option<PathBuf>,
    #[command(flatten)]
    plan: PlanFlags,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    inputs: ModelInputs,
    /// Classifier checkpoint.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Score a predictions file instead of a model: `LANG=PATH`, repeatable.
    #[arg(long = "predictions", value_name = "LANG=PATH")]
    predictions: Vec<String>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    languages: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    inputs: ModelInputs,
    #[arg(long)]
    base: Option<PathBuf>,
    /// Unfrozen-layer axis, e.g. `2,3,4,5,6,6+emb`.
    #[arg(long)]
    unfrozen_layers: Option<String>,
    /// LM finetuning axis, e.g. `0,1,3,10`.
    #[arg(long)]
    lmft_cycles: Option<String>,
    /// Gradual-unfreezing axis, e.g. `off,on`.
    #[arg(long)]
    gduf: Option<String>,
    #[arg(long, default_value = "1,2,3,4,5")]
    seeds: String,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    source: Option<String>,
    #[arg(long)]
    languages: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Ctx {
    cfg: Config,
    root: PathBuf,
    argv: Vec<String>,
}

impl Ctx {
    fn manifest(&self, subcommand: &str) -> Result<RunManifest> {
        Ok(RunManifest::start(
            subcommand,
            self.argv.clone(),
            self.cfg.hash(),
            self.cfg.seed()?,
        ))
    }

    fn out_dir(&self, given: &Option<PathBuf>, default: &str) -> PathBuf {
        given.clone().unwrap_or_else(|| self.root.join(default))
    }

    fn corpus_dirs(&self, given: &[PathBuf]) -> Vec<PathBuf> {
        if given.is_empty() {
            vec![self.root.join("corpus")]
        } else {
            given.to_vec()
        }
    }

    fn vocab_path(&self, given: &Option<PathBuf>) -> PathBuf {
        given.clone().unwrap_or_else(|| self.root.join("vocab").join("vocab.txt"))
    }

    fn default_texts(&self) -> Result<Vec<PathBuf>> {
        let dir = self.root.join("general");
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)
            .with_context(|| format!("no --text given and {} is unreadable", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "txt"))
            .collect();
        files.sort();
        if files.is_empty() {
            bail!("no --text given and {} has no .txt files", dir.display());
        }
        Ok(files)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.common.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    for kv in &cli.common.overrides {
        let (k, v) = kv
            .split_once('=')
            .with_context(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(seed) = cli.common.seed {
        cfg.set("seed", &seed.to_string())?;
    }
    let ctx = Ctx {
        cfg,
        root: cli.common.artifact_root.clone(),
        argv: std::env::args().collect(),
    };
    match cli.command {
        Command::Synth { out } => cmd_synth(ctx, out),
        Command::Ingest(a) => cmd_ingest(ctx, a),
        Command::BuildVocab(a) => cmd_build_vocab(ctx, a),
        Command::Pretrain(a) => cmd_pretrain(ctx, a),
        Command::Train(a) => cmd_train(ctx, a),
        Command::Evaluate(a) => cmd_evaluate(ctx, a),
        Command::Ablate(a) => cmd_ablate(ctx, a),
    }
}

fn split_pair(s: &str) -> Result<(LanguageCode, PathBuf)> {
    let (l, p) = s
        .split_once('=')
        .with_context(|| format!("expected LANG=PATH, got `{s}`"))?;
    let lang: LanguageCode = l.parse().map_err(|e| anyhow::anyhow!("{e}"))?;
    Ok((lang, PathBuf::from(p)))
}

/// Labels observed on train documents, resolved through the thesaurus when one is given.
fn label_index_for(corpora: &[Corpus], thesaurus: Option<&lmtc::eurovoc::DescriptorGraph>) -> Result<LabelIndex> {
    let mut observed = BTreeSet::new();
    for c in corpora {
        observed.extend(label_stats(c, Split::Train).frequency.into_keys());
    }
    Ok(match thesaurus {
        Some(g) => build_label_index(g, &observed)?,
        None => LabelIndex::from_ids(observed),
    })
}

fn print_split_table(corpora: &[Corpus]) {
    println!("LANG TRAIN DEV TEST NONE TOTAL");
    for c in corpora {
        for &l in c.languages() {
            println!("{}", c.counts_for(l).table_row(l));
        }
    }
}

fn cmd_synth(ctx: Ctx, out: Option<PathBuf>) -> Result<()> {
    let root = out.unwrap_or_else(|| ctx.root.clone());
    let mut m = ctx.manifest("synth")?;
    let sc = ctx.cfg.synth_config()?;
    let synth = generate_parallel(&sc)?;
    let graph = parse_thesaurus_str(&synth.thesaurus_text())?;
    let labels = label_index_for(&synth.corpora, Some(&graph))?;
    // Everything is generated before the first write.
    let mut files: Vec<(String, PathBuf, Vec<u8>)> = Vec::new();
    for c in &synth.corpora {
        for &l in c.languages() {
            files.push((
                format!("corpus_{l}"),
                root.join("corpus").join(format!("{l}.jsonl")),
                to_jsonl_string(c).into_bytes(),
            ));
            let general = synth.general_text(l, ctx.cfg.general_docs()?, sc.seed);
            files.push((
                format!("general_{l}"),
                root.join("general").join(format!("{l}.txt")),
                (general.join("\n") + "\n").into_bytes(),
            ));
        }
    }
    files.push(("labels".into(), root.join("corpus").join(LABELS_FILE), labels.to_text().into_bytes()));
    files.push(("thesaurus".into(), root.join("thesaurus.tsv"), synth.thesaurus_text().into_bytes()));
    for (name, path, bytes) in &files {
        m.write_artifact(name, path, bytes)?;
    }
    print_split_table(&synth.corpora);
    m.finish(&root)?;
    Ok(())
}

fn cmd_ingest(ctx: Ctx, a: IngestArgs) -> Result<()> {
    let out = ctx.out_dir(&a.out, "corpus");
    let mut m = ctx.manifest("ingest")?;
    let format: Format = a.format.parse().map_err(|e: String| anyhow::anyhow!(e))?;
    let pairs = a.inputs.iter().map(|s| split_pair(s)).collect::<Result<Vec<_>>>()?;
    let registry = LanguageRegistry::new(pairs.iter().map(|(l, _)| *l));
    let policy = if a.anchor.is_some() {
        SplitPolicy::FromAnchor
    } else {
        SplitPolicy::Require
    };
    let mut corpora = Vec::new();
    for (lang, path) in &pairs {
        if !path.exists() {
            bail!("input {} does not exist", path.display());
        }
        let c = ingest(path, *lang, format, &registry, policy)
            .with_context(|| format!("ingesting {}", path.display()))?;
        corpora.push(c);
    }
    let corpora = match a.anchor {
        Some(anchor) => assign_parallel_splits(&corpora, anchor)?,
        None => corpora,
    };
    let graph = a.thesaurus.as_deref().map(parse_thesaurus).transpose()?;
    let labels = label_index_for(&corpora, graph.as_ref())?;

    for (_, path) in &pairs {
        if path.is_file() {
            m.add_input(path)?;
        }
    }
    if let Some(t) = &a.thesaurus {
        m.add_input(t)?;
    }
    let mut table = String::from("LANG TRAIN DEV TEST NONE TOTAL\n");
    let mut files = Vec::new();
    for c in &corpora {
        for &l in c.languages() {
            table.push_str(&c.counts_for(l).table_row(l));
            table.push('\n');
            files.push((format!("corpus_{l}"), out.join(format!("{l}.jsonl")), to_jsonl_string(c)));
        }
    }
    files.push(("labels".into(), out.join(LABELS_FILE), labels.to_text()));
    files.push(("split_table".into(), out.join("splits.txt"), table.clone()));
    for (name, path, text) in &files {
        m.write_artifact(name, path, text.as_bytes())?;
    }
    print!("{table}");
    m.finish(&out)?;
    Ok(())
}

/// Documents for vocabulary or pretraining: text lines, or train and unsplit corpus records.
fn read_texts(paths: &[PathBuf], m: &mut RunManifest) -> Result<(Vec<String>, BTreeSet<LanguageCode>)> {
    let mut texts = Vec::new();
    let mut langs = BTreeSet::new();
    for p in paths {
        m.add_input(p).with_context(|| format!("reading {}", p.display()))?;
        let stem_lang = p
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.parse::<LanguageCode>().ok());
        if p.extension().is_some_and(|x| x == "jsonl") {
            let lang = stem_lang.with_context(|| format!("{}: corpus files are named <lang>.jsonl", p.display()))?;
            let c = ingest(p, lang, Format::Jsonl, &LanguageRegistry::new([lang]), SplitPolicy::Require)?;
            texts.extend(
                c.documents()
                    .iter()
                    .filter(|d| matches!(d.split, Split::Train | Split::NoSplit))
                    .map(|d| d.text()),
            );
            langs.insert(lang);
        } else {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            texts.extend(text.lines().filter(|l| !l.trim().is_empty()).map(str::to_string));
            langs.extend(stem_lang);
        }
    }
    Ok((texts, langs))
}

fn cmd_build_vocab(ctx: Ctx, a: TextArgs) -> Result<()> {
    let out = ctx.out_dir(&a.out, "vocab");
    let mut m = ctx.manifest("build-vocab")?;
    let paths = if a.texts.is_empty() { ctx.default_texts()? } else { a.texts.clone() };
    let (texts, found) = read_texts(&paths, &mut m)?;
    let langs = match &a.languages {
        Some(s) => parse_language_list(s)?,
        None => found,
    };
    let vocab = train_vocab(&texts, ctx.cfg.vocab_size()?, &langs)?;
    m.write_artifact("vocab", &out.join("vocab.txt"), vocab.to_text().as_bytes())?;
    println!("vocabulary of {} tokens from {} documents", vocab.len(), texts.len());
    m.finish(&out)?;
    Ok(())
}

fn cmd_pretrain(ctx: Ctx, a: TextArgs) -> Result<()> {
    let out = ctx.out_dir(&a.out, "pretrain");
    let mut m = ctx.manifest("pretrain")?;
    let paths = if a.texts.is_empty() { ctx.default_texts()? } else { a.texts.clone() };
    let (texts, _) = read_texts(&paths, &mut m)?;
    let vocab_path = ctx.vocab_path(&a.vocab);
    let vocab = Vocab::load(&vocab_path).with_context(|| format!("loading {}", vocab_path.display()))?;
    m.add_input(&vocab_path)?;
    let config = ctx.cfg.model_config(vocab.len(), 1)?;
    let model = pretrain(config, &texts, &vocab, &ctx.cfg.optimizer("pretrain")?, ctx.cfg.seed()?)?;
    let bytes = model.to_checkpoint_bytes();
    m.write_artifact("base", &out.join("base.ckpt"), &bytes)?;
    println!("pretrained {} parameters on {} documents", model.parameter_count(), texts.len());
    m.finish(&out)?;
    Ok(())
}

/// Corpus directories plus their label index (from the first directory with one).
fn load_corpora(dirs: &[PathBuf], m: &mut RunManifest) -> Result<(Vec<Corpus>, LabelIndex)> {
    let mut corpora = Vec::new();
    let mut labels = None;
    for dir in dirs {
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .with_context(|| format!("reading corpus directory {}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        files.sort();
        for p in files {
            let lang: LanguageCode = p
                .file_stem()
                .and_then(|s| s.to_str())
                .and_then(|s| s.parse().ok())
                .with_context(|| format!("{}: corpus files are named <lang>.jsonl", p.display()))?;
            m.add_input(&p)?;
            corpora.push(ingest(&p, lang, Format::Jsonl, &LanguageRegistry::new([lang]), SplitPolicy::Require)?);
        }
        let lp = dir.join(LABELS_FILE);
        if labels.is_none() && lp.exists() {
            m.add_input(&lp)?;
            labels = Some(LabelIndex::load(&lp)?);
        }
    }
    if corpora.is_empty() {
        bail!("no corpus files found");
    }
    let labels = match labels {
        Some(l) => l,
        None => label_index_for(&corpora, None)?,
    };
    Ok((corpora, labels))
}

fn apply_plan_flags(cfg: &mut Config, f: &PlanFlags) -> Result<()> {
    let pairs = [
        ("train.scheme", &f.scheme),
        ("train.source", &f.source),
        ("train.target", &f.languages),
        ("lmft.cycles", &f.lmft_cycles),
        ("unfreeze.layers", &f.unfrozen_layers),
        ("unfreeze.mode", &f.gduf),
        ("eval.k", &f.k),
    ];
    for (key, v) in pairs {
        if let Some(v) = v {
            cfg.set(key, v)?;
        }
    }
    Ok(())
}

fn report_table(reports: &[EvalReport]) -> String {
    reports.iter().map(|r| format!("{r}\n")).collect()
}

fn reports_json(reports: &[EvalReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialise")
}

fn cmd_train(mut ctx: Ctx, a: TrainArgs) -> Result<()> {
    apply_plan_flags(&mut ctx.cfg, &a.plan)?;
    let plan = ctx.cfg.train_plan()?;
    let out = ctx.out_dir(&a.out, "train");
    let mut m = ctx.manifest("train")?;
    let (corpora, labels) = load_corpora(&ctx.corpus_dirs(&a.inputs.corpora), &mut m)?;
    let vocab_path = ctx.vocab_path(&a.inputs.vocab);
    let vocab = Vocab::load(&vocab_path).with_context(|| format!("loading {}", vocab_path.display()))?;
    m.add_input(&vocab_path)?;
    let base_path = a.base.clone().unwrap_or_else(|| ctx.root.join("pretrain").join("base.ckpt"));
    let base = load_checkpoint(&base_path).with_context(|| format!("loading {}", base_path.display()))?;
    m.add_input(&base_path)?;

    let res = Resources {
        corpora: &corpora,
        vocab: &vocab,
        labels: &labels,
    };
    let mut store = CheckpointStore::memory();
    let outcome = run_transfer(&base, &plan, res, &mut store, &mut NoopObserver)?;

    for rec in &outcome.log.records {
        let bytes = store.bytes(&rec.checkpoint)?;
        m.write_artifact(
            &format!("checkpoint_{:03}", rec.epoch),
            &out.join("checkpoints").join(&rec.checkpoint.name),
            &bytes,
        )?;
    }
    let selected = outcome.model.to_checkpoint_bytes();
    m.write_artifact("selected", &out.join("selected.ckpt"), &selected)?;
    let reports: Vec<EvalReport> = outcome.reports.values().cloned().collect();
    m.write_artifact("selection_log", &out.join("selection_log.json"), outcome.log.to_json().as_bytes())?;
    m.write_artifact("report", &out.join("report.json"), reports_json(&reports).as_bytes())?;
    m.write_artifact("report_table", &out.join("report.txt"), report_table(&reports).as_bytes())?;
    m.write_artifact("labels", &out.join(LABELS_FILE), labels.to_text().as_bytes())?;

    // The written checkpoint must load back to the selected model.
    let back = load_checkpoint(&out.join("selected.ckpt"))?;
    if back.to_checkpoint_bytes() != selected {
        bail!("selected checkpoint does not round-trip");
    }
    m.metrics = serde_json::json!({
        "scheme": plan.scheme.to_string(),
        "selected_epoch": outcome.selected_epoch,
        "reports": reports,
    });
    println!("scheme {} selected epoch {}", plan.scheme, outcome.selected_epoch);
    print!("{}", report_table(&reports));
    m.finish(&out)?;
    Ok(())
}

fn cmd_evaluate(mut ctx: Ctx, a: EvaluateArgs) -> Result<()> {
    if let Some(s) = &a.scheme {
        ctx.cfg.set("train.scheme", s)?;
    }
    if let Some(k) = &a.k {
        ctx.cfg.set("eval.k", k)?;
    }
    let scheme: lmtc::training::Scheme = ctx.cfg.get("train.scheme").parse().map_err(|e: String| anyhow::anyhow!(e))?;
    let ks = ctx.cfg.ks()?;
    let threshold: f64 = ctx.cfg.get("eval.threshold").parse().context("eval.threshold")?;
    let out = ctx.out_dir(&a.out, "evaluate");
    let mut m = ctx.manifest("evaluate")?;
    let (corpora, labels) = load_corpora(&ctx.corpus_dirs(&a.inputs.corpora), &mut m)?;
    let languages = match &a.languages {
        Some(s) => parse_language_list(s)?,
        None => ctx.cfg.train_plan()?.target_languages,
    };

    let mut files: Vec<(String, PathBuf, String)> = Vec::new();
    let reports: Vec<EvalReport> = if a.predictions.is_empty() {
        let model_path = a.model.clone().unwrap_or_else(|| ctx.root.join("train").join("selected.ckpt"));
        let model: EncoderModel<f32> =
            load_checkpoint(&model_path).with_context(|| format!("loading {}", model_path.display()))?;
        m.add_input(&model_path)?;
        if model.config.label_count != labels.len() {
            bail!(
                "model predicts {} labels but the label index has {}",
                model.config.label_count,
                labels.len()
            );
        }
        let vocab_path = ctx.vocab_path(&a.inputs.vocab);
        let vocab = Vocab::load(&vocab_path).with_context(|| format!("loading {}", vocab_path.display()))?;
        m.add_input(&vocab_path)?;
        let reports = evaluate_transfer(&model, &corpora, &languages, &labels, &vocab, &ks, threshold)?;
        for &l in &languages {
            let docs: Vec<_> = corpora
                .iter()
                .flat_map(|c| c.read(l, Split::Test, lmtc::corpus::ReadPurpose::Evaluation))
                .collect();
            let encoded = encode_documents(docs, &vocab, model.config.max_seq_len, Some(&labels))?;
            let rows = predict_rows(&model, &encoded)?;
            let records: Vec<ScoreRecord> = rows
                .into_iter()
                .map(|r| ScoreRecord {
                    celex_id: r.celex_id,
                    scores: r.scores,
                })
                .collect();
            let mut buf = Vec::new();
            write_predictions(&mut buf, &records)?;
            files.push((
                format!("predictions_{l}"),
                out.join(format!("predictions_{l}.jsonl")),
                String::from_utf8(buf).expect("utf-8"),
            ));
        }
        reports.into_values().collect()
    } else {
        let mut reports = Vec::new();
        for s in &a.predictions {
            let (l, path) = split_pair(s)?;
            m.add_input(&path)?;
            let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let records = read_predictions(text.as_bytes())?;
            let gold: BTreeMap<String, BTreeSet<usize>> = corpora
                .iter()
                .flat_map(|c| c.read(l, Split::Test, lmtc::corpus::ReadPurpose::Evaluation))
                .map(|d| (d.celex_id.clone(), d.labels.iter().filter_map(|x| labels.index_of(x)).collect()))
                .collect();
            let rows = records
                .into_iter()
                .map(|r| {
                    let g = gold
                        .get(&r.celex_id)
                        .with_context(|| format!("{} is not a {l} test document", r.celex_id))?;
                    Ok(PredictionRow {
                        celex_id: r.celex_id,
                        scores: r.scores,
                        gold: g.clone(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            reports.push(EvalReport::compute(l.as_str(), &rows, &ks, threshold)?);
        }
        reports
    };
    files.push(("report".into(), out.join("report.json"), reports_json(&reports)));
    files.push(("report_table".into(), out.join("report.txt"), report_table(&reports)));
    for (name, path, text) in &files {
        m.write_artifact(name, path, text.as_bytes())?;
    }
    m.metrics = serde_json::json!({ "scheme": scheme.to_string(), "reports": reports });
    print!("{}", report_table(&reports));
    m.finish(&out)?;
    Ok(())
}

fn cmd_ablate(mut ctx: Ctx, a: AblateArgs) -> Result<()> {
    let axis = AblationAxis::from_flags(a.unfrozen_layers.as_deref(), a.lmft_cycles.as_deref(), a.gduf.as_deref())
        .map_err(|e| anyhow::anyhow!(e))?;
    let flags = PlanFlags {
        scheme: a.scheme.clone(),
        source: a.source.clone(),
        languages: a.languages.clone(),
        lmft_cycles: None,
        unfrozen_layers: None,
        gduf: None,
        k: a.k.clone(),
    };
    apply_plan_flags(&mut ctx.cfg, &flags)?;
    let seeds: Vec<u64> = a
        .seeds
        .split(',')
        .map(|s| s.trim().parse().with_context(|| format!("`{s}` is not a seed")))
        .collect::<Result<_>>()?;
    let plan = ctx.cfg.train_plan()?;
    let out = ctx.out_dir(&a.out, &format!("ablate/{}", axis.name()));
    let mut m = ctx.manifest("ablate")?;
    let (corpora, labels) = load_corpora(&ctx.corpus_dirs(&a.inputs.corpora), &mut m)?;
    let vocab_path = ctx.vocab_path(&a.inputs.vocab);
    let vocab = Vocab::load(&vocab_path).with_context(|| format!("loading {}", vocab_path.display()))?;
    m.add_input(&vocab_path)?;
    let base_path = a.base.clone().unwrap_or_else(|| ctx.root.join("pretrain").join("base.ckpt"));
    let base = load_checkpoint(&base_path).with_context(|| format!("loading {}", base_path.display()))?;
    m.add_input(&base_path)?;
    let res = Resources {
        corpora: &corpora,
        vocab: &vocab,
        labels: &labels,
    };
    let report = run_ablation(&axis, &seeds, &plan, &base, res)?;
    let table = report.to_string();
    let json = report.to_json();
    m.write_artifact("ablation_table", &out.join("ablation.txt"), table.as_bytes())?;
    m.write_artifact("ablation", &out.join("ablation.json"), json.as_bytes())?;
    m.metrics = serde_json::json!({ "ablation_sha256": sha256_hex(json.as_bytes()) });
    print!("{table}");
    m.finish(&out)?;
    Ok(())
}
