//! End-to-end workflows: desk pretraining, the transfer pipeline (LM finetuning,
//! classifier training, checkpoint selection, test evaluation) and the ablation grids.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::config::UnfrozenSpec;
use crate::corpus::{lmft_pool, Corpus, LanguageCode};
use crate::eurovoc::LabelIndex;
use crate::metrics::{relative_improvement, EvalReport};
use crate::model::{EncoderModel, ModelConfig};
use crate::tokenizer::{TokenSequence, Vocab};
use crate::training::{
    evaluate_transfer, run_classifier_training, run_lmft, run_mlm, select_checkpoint, CheckpointStore,
    OptimizerSettings, Result, SelectionLog, TrainPlan, TrainingError, TrainingObserver, UnfreezeMode,
    UnfreezeSchedule,
};

/// Everything a transfer run reads besides the plan and the encoder.
#[derive(Clone, Copy)]
pub struct Resources<'a> {
    pub corpora: &'a [Corpus],
    pub vocab: &'a Vocab,
    pub labels: &'a LabelIndex,
}

/// MLM training of a freshly initialised encoder on raw texts, `settings.epochs` passes.
pub fn pretrain(
    config: ModelConfig,
    texts: &[String],
    vocab: &Vocab,
    settings: &OptimizerSettings,
    seed: u64,
) -> Result<EncoderModel<f32>> {
    let seqs = texts
        .iter()
        .map(|t| vocab.encode(t, config.max_seq_len))
        .collect::<std::result::Result<Vec<TokenSequence>, _>>()?;
    let model = EncoderModel::init(&config, seed)?;
    run_mlm(model, &seqs, settings.epochs, vocab.len(), settings, seed)
}

/// LM finetuning of `base` on the plan's pool (train and unsplit text of `lmft_languages`).
pub fn finetune_lm(base: &EncoderModel<f32>, plan: &TrainPlan, res: Resources<'_>) -> Result<EncoderModel<f32>> {
    if plan.lmft_cycles == 0 {
        return Ok(base.clone());
    }
    let pool = lmft_pool(res.corpora, &plan.lmft_languages);
    run_lmft(
        base.clone(),
        &pool,
        plan.lmft_cycles,
        res.vocab,
        &plan.lmft_optimizer,
        plan.seed,
    )
}

#[derive(Clone, Debug)]
pub struct TransferOutcome {
    pub log: SelectionLog,
    pub selected_epoch: usize,
    pub model: EncoderModel<f32>,
    /// Test-split reports of the target languages.
    pub reports: BTreeMap<LanguageCode, EvalReport>,
}

/// Classifier training on top of an (already LM-finetuned) encoder, selection of the best
/// epoch under the plan's scheme, and test evaluation on the target languages.
pub fn train_and_evaluate(
    encoder: &EncoderModel<f32>,
    plan: &TrainPlan,
    res: Resources<'_>,
    store: &mut CheckpointStore,
    observer: &mut dyn TrainingObserver,
) -> Result<TransferOutcome> {
    plan.validate()?;
    let model = encoder.clone().with_new_classifier(res.labels.len(), plan.seed)?;
    let log = run_classifier_training(model, plan, res.corpora, res.vocab, res.labels, store, observer)?;
    let selected = select_checkpoint(&log, plan)?;
    let model = store.load(&selected.checkpoint)?;
    let reports = evaluate_transfer(
        &model,
        res.corpora,
        &plan.target_languages,
        res.labels,
        res.vocab,
        &plan.ks,
        plan.threshold,
    )?;
    Ok(TransferOutcome {
        selected_epoch: selected.epoch,
        log,
        model,
        reports,
    })
}

/// The whole transfer pipeline from a pretrained encoder.
pub fn run_transfer(
    base: &EncoderModel<f32>,
    plan: &TrainPlan,
    res: Resources<'_>,
    store: &mut CheckpointStore,
    observer: &mut dyn TrainingObserver,
) -> Result<TransferOutcome> {
    plan.validate()?;
    let encoder = finetune_lm(base, plan, res)?;
    train_and_evaluate(&encoder, plan, res, store, observer)
}

/// The single axis an ablation grid varies; the first point is the baseline.
#[derive(Clone, Debug, PartialEq)]
pub enum AblationAxis {
    UnfrozenLayers(Vec<UnfrozenSpec>),
    LmftCycles(Vec<usize>),
    Gduf(Vec<UnfreezeMode>),
}

impl AblationAxis {
    /// Builds the axis from the three optional grid flags; exactly one must be given.
    pub fn from_flags(
        unfrozen_layers: Option<&str>,
        lmft_cycles: Option<&str>,
        gduf: Option<&str>,
    ) -> std::result::Result<AblationAxis, String> {
        let given = [unfrozen_layers, lmft_cycles, gduf].iter().filter(|f| f.is_some()).count();
        if given != 1 {
            return Err(format!(
                "an ablation grid varies exactly one axis (unfrozen layers, LMFT cycles or GDUF); {given} given"
            ));
        }
        let items = |s: &str| -> Vec<String> {
            s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect()
        };
        let axis = if let Some(s) = unfrozen_layers {
            AblationAxis::UnfrozenLayers(items(s).iter().map(|x| x.parse()).collect::<std::result::Result<_, _>>()?)
        } else if let Some(s) = lmft_cycles {
            AblationAxis::LmftCycles(
                items(s)
                    .iter()
                    .map(|x| x.parse().map_err(|_| format!("`{x}` is not a cycle count")))
                    .collect::<std::result::Result<_, _>>()?,
            )
        } else {
            let s = gduf.unwrap_or_default();
            AblationAxis::Gduf(
                items(s)
                    .iter()
                    .map(|x| match x.to_ascii_lowercase().as_str() {
                        "on" => Ok(UnfreezeMode::Gradual),
                        "off" => Ok(UnfreezeMode::None),
                        _ => Err(format!("`{x}` is neither on nor off")),
                    })
                    .collect::<std::result::Result<_, _>>()?,
            )
        };
        if axis.is_empty() {
            return Err("ablation axis has no points".into());
        }
        Ok(axis)
    }

    pub fn name(&self) -> &'static str {
        match self {
            AblationAxis::UnfrozenLayers(_) => "unfrozen_layers",
            AblationAxis::LmftCycles(_) => "lmft_cycles",
            AblationAxis::Gduf(_) => "gduf",
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn len(&self) -> usize {
        match self {
            AblationAxis::UnfrozenLayers(v) => v.len(),
            AblationAxis::LmftCycles(v) => v.len(),
            AblationAxis::Gduf(v) => v.len(),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        match self {
            AblationAxis::UnfrozenLayers(v) => v.iter().map(ToString::to_string).collect(),
            AblationAxis::LmftCycles(v) => v.iter().map(ToString::to_string).collect(),
            AblationAxis::Gduf(v) => v
                .iter()
                .map(|m| if *m == UnfreezeMode::Gradual { "on" } else { "off" }.to_string())
                .collect(),
        }
    }

    /// `plan` with point `i` of the axis applied.
    pub fn apply(&self, i: usize, plan: &TrainPlan, model_layers: usize) -> TrainPlan {
        let mut p = plan.clone();
        match self {
            AblationAxis::UnfrozenLayers(v) => {
                let mut u = UnfreezeSchedule::top_layers(model_layers, v[i].layers, v[i].with_emb, plan.unfreeze.mode);
                u.epochs_per_stage = plan.unfreeze.epochs_per_stage;
                p.unfreeze = u;
            }
            AblationAxis::LmftCycles(v) => p.lmft_cycles = v[i],
            AblationAxis::Gduf(v) => p.unfreeze.mode = v[i],
        }
        p
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AblationCell {
    pub point: String,
    pub seed: u64,
    pub selected_epoch: usize,
    pub reports: BTreeMap<LanguageCode, EvalReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AblationReport {
    pub axis: String,
    pub points: Vec<String>,
    pub seeds: Vec<u64>,
    pub languages: Vec<LanguageCode>,
    pub ks: Vec<usize>,
    pub cells: Vec<AblationCell>,
}

/// Mean over seeds of one grid point and language.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeanMetrics {
    pub micro_f1: f64,
    pub rp_at: BTreeMap<usize, f64>,
    pub ndcg_at: BTreeMap<usize, f64>,
}

impl AblationReport {
    pub fn cell(&self, point: &str, seed: u64) -> Option<&AblationCell> {
        self.cells.iter().find(|c| c.point == point && c.seed == seed)
    }

    /// Target F1 of `point` per seed, in seed order.
    pub fn f1_by_seed(&self, point: &str, language: LanguageCode) -> Vec<f64> {
        self.seeds
            .iter()
            .filter_map(|&s| self.cell(point, s))
            .filter_map(|c| c.reports.get(&language).map(|r| r.micro_f1))
            .collect()
    }

    pub fn mean(&self, point: &str, language: LanguageCode) -> Option<MeanMetrics> {
        let reports: Vec<&EvalReport> = self
            .cells
            .iter()
            .filter(|c| c.point == point)
            .filter_map(|c| c.reports.get(&language))
            .collect();
        if reports.is_empty() {
            return None;
        }
        let n = reports.len() as f64;
        let avg = |f: &dyn Fn(&EvalReport) -> f64| reports.iter().map(|r| f(r)).sum::<f64>() / n;
        Some(MeanMetrics {
            micro_f1: avg(&|r| r.micro_f1),
            rp_at: self.ks.iter().map(|&k| (k, avg(&|r| r.rp_at[&k]))).collect(),
            ndcg_at: self.ks.iter().map(|&k| (k, avg(&|r| r.ndcg_at[&k]))).collect(),
        })
    }

    /// Relative F1 improvement (percent) of `point` over the first point, per language.
    /// `None` when the baseline mean is zero.
    pub fn relative_f1(&self, point: &str, language: LanguageCode) -> Option<f64> {
        let base = self.mean(&self.points[0], language)?.micro_f1;
        let treat = self.mean(point, language)?.micro_f1;
        relative_improvement(base, treat).ok()
    }

    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serialises");
        let mut means = serde_json::Map::new();
        for p in &self.points {
            let mut per_lang = serde_json::Map::new();
            for &l in &self.languages {
                if let Some(m) = self.mean(p, l) {
                    let mut entry = serde_json::to_value(&m).expect("mean serialises");
                    entry["relative_f1_percent"] = serde_json::json!(self.relative_f1(p, l));
                    per_lang.insert(l.to_string(), entry);
                }
            }
            means.insert(p.clone(), per_lang.into());
        }
        v["means"] = means.into();
        serde_json::to_string_pretty(&v).expect("report serialises")
    }
}

impl fmt::Display for AblationReport {
    /// One row per grid point: per target language the mean F1, RP@K and nDCG@K over
    /// seeds, then the relative F1 change against the first row.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut header = format!("{:<16}", self.axis);
        for l in &self.languages {
            let tag = l.as_str().to_ascii_uppercase();
            write!(header, " | {tag} F1  ").unwrap();
            for k in &self.ks {
                write!(header, " RP@{k:<2} ").unwrap();
            }
            for k in &self.ks {
                write!(header, " nDCG@{k:<2}").unwrap();
            }
            write!(header, "  {tag} rel.F1").unwrap();
        }
        writeln!(f, "{header}")?;
        writeln!(f, "{}", "-".repeat(header.len()))?;
        for p in &self.points {
            write!(f, "{p:<16}")?;
            for &l in &self.languages {
                match self.mean(p, l) {
                    Some(m) => {
                        write!(f, " | {:>7.3}", m.micro_f1)?;
                        for k in &self.ks {
                            write!(f, " {:>6.3}", m.rp_at[k])?;
                        }
                        for k in &self.ks {
                            write!(f, " {:>7.3}", m.ndcg_at[k])?;
                        }
                        match self.relative_f1(p, l) {
                            Some(r) => write!(f, "  {r:>+8.1}%")?,
                            None => write!(f, "  {:>9}", "n/a")?,
                        }
                    }
                    None => write!(f, " | {:>7}", "-")?,
                }
            }
            writeln!(f)?;
        }
        writeln!(f, "means over {} seed(s): {:?}", self.seeds.len(), self.seeds)
    }
}

/// Runs the transfer pipeline for every point of `axis` and every seed, starting each run
/// from the same pretrained `base`. LM-finetuned encoders are shared between points that
/// only differ after LM finetuning.
pub fn run_ablation(
    axis: &AblationAxis,
    seeds: &[u64],
    plan: &TrainPlan,
    base: &EncoderModel<f32>,
    res: Resources<'_>,
) -> Result<AblationReport> {
    if seeds.is_empty() {
        return Err(TrainingError::InvalidPlan("ablation needs at least one seed".into()));
    }
    let labels = axis.labels();
    let mut cells = Vec::new();
    for &seed in seeds {
        let mut lm_cache: BTreeMap<usize, EncoderModel<f32>> = BTreeMap::new();
        for (i, point) in labels.iter().enumerate() {
            let mut p = axis.apply(i, plan, base.config.layers);
            p.seed = seed;
            p.validate()?;
            p.unfreeze.validate(base.config.layers)?;
            if let std::collections::btree_map::Entry::Vacant(e) = lm_cache.entry(p.lmft_cycles) {
                e.insert(finetune_lm(base, &p, res)?);
            }
            let encoder = &lm_cache[&p.lmft_cycles];
            let mut store = CheckpointStore::memory();
            let out = train_and_evaluate(encoder, &p, res, &mut store, &mut crate::training::NoopObserver)?;
            log::info!(
                "ablation {}={point} seed={seed}: {}",
                axis.name(),
                out.reports
                    .iter()
                    .map(|(l, r)| format!("{l} F1={:.3}", r.micro_f1))
                    .collect::<Vec<_>>()
                    .join(" ")
            );
            cells.push(AblationCell {
                point: point.clone(),
                seed,
                selected_epoch: out.selected_epoch,
                reports: out.reports,
            });
        }
    }
    let languages: BTreeSet<LanguageCode> = plan.target_languages.clone();
    Ok(AblationReport {
        axis: axis.name().to_string(),
        points: labels,
        seeds: seeds.to_vec(),
        languages: languages.into_iter().collect(),
        ks: plan.ks.clone(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_flags_are_exclusive() {
        assert!(AblationAxis::from_flags(Some("2,4"), Some("0,3"), None).is_err());
        assert!(AblationAxis::from_flags(None, None, None).is_err());
        let a = AblationAxis::from_flags(None, None, Some("off,on")).unwrap();
        assert_eq!(a, AblationAxis::Gduf(vec![UnfreezeMode::None, UnfreezeMode::Gradual]));
        let a = AblationAxis::from_flags(Some("2,6+emb"), None, None).unwrap();
        assert_eq!(a.labels(), vec!["2", "6+emb"]);
        assert!(AblationAxis::from_flags(None, Some("0,x"), None).is_err());
    }

    #[test]
    fn axis_points_change_only_their_field() {
        let plan = crate::config::Config::default().train_plan().unwrap();
        let a = AblationAxis::UnfrozenLayers(vec!["6+emb".parse().unwrap()]);
        let p = a.apply(0, &plan, 6);
        assert_eq!(p.unfreeze.target_groups.len(), 7);
        assert_eq!(p.lmft_cycles, plan.lmft_cycles);
        let a = AblationAxis::LmftCycles(vec![0, 3]);
        assert_eq!(a.apply(1, &plan, 6).lmft_cycles, 3);
        assert_eq!(a.apply(1, &plan, 6).unfreeze, plan.unfreeze);
    }
}
