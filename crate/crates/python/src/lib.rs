//! Python bindings: vocabulary, corpus files, the encoder, metrics, thesaurus parsing and
//! the synthetic corpus generator.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

use lmtc::corpus::{ingest, parse_language_list, to_jsonl_string, Corpus, Format, LanguageCode, LanguageRegistry, SplitPolicy};
use lmtc::metrics::{self, EvalReport, PredictionRow};
use lmtc::model::{load_checkpoint, save_checkpoint, Batch, EncoderModel, ModelConfig};
use lmtc::tokenizer::{train_vocab, TokenSequence, Vocab};

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn language(s: &str) -> PyResult<LanguageCode> {
    s.parse().map_err(value_err)
}

/// Score rows with synthetic document ids; `gold` holds label indices per document.
fn rows(scores: Vec<Vec<f64>>, gold: Vec<Vec<usize>>) -> PyResult<Vec<PredictionRow>> {
    if scores.len() != gold.len() {
        return Err(PyValueError::new_err("scores and gold differ in length"));
    }
    Ok(scores
        .into_iter()
        .zip(gold)
        .enumerate()
        .map(|(i, (s, g))| PredictionRow {
            celex_id: format!("doc{i}"),
            scores: s,
            gold: g.into_iter().collect(),
        })
        .collect())
}

#[pyclass(name = "Vocab", module = "lmtc_py")]
struct PyVocab {
    inner: Vocab,
}

#[pymethods]
impl PyVocab {
    /// Train a byte-level BPE vocabulary of `size` tokens.
    #[staticmethod]
    #[pyo3(signature = (texts, size, languages = "en,fr,de"))]
    fn train(texts: Vec<String>, size: usize, languages: &str) -> PyResult<Self> {
        let langs = parse_language_list(languages).map_err(value_err)?;
        Ok(PyVocab {
            inner: train_vocab(&texts, size, &langs).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyVocab {
            inner: Vocab::load(&path).map_err(value_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(value_err)
    }

    fn encode(&self, text: &str, max_seq_len: usize) -> PyResult<Vec<u32>> {
        Ok(self.inner.encode(text, max_seq_len).map_err(value_err)?.ids)
    }

    fn decode(&self, ids: Vec<u32>) -> String {
        String::from_utf8_lossy(&self.inner.decode(&ids)).into_owned()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyclass(name = "Corpus", module = "lmtc_py")]
struct PyCorpus {
    inner: Corpus,
}

#[pymethods]
impl PyCorpus {
    /// Read a corpus JSONL file of one language; labeled records must state their split.
    #[staticmethod]
    fn load_jsonl(path: PathBuf, language: &str) -> PyResult<Self> {
        let l = self::language(language)?;
        let inner = ingest(&path, l, Format::Jsonl, &LanguageRegistry::new([l]), SplitPolicy::Require)
            .map_err(value_err)?;
        Ok(PyCorpus { inner })
    }

    /// (train, dev, test, none) document counts.
    fn split_counts(&self, language: &str) -> PyResult<(usize, usize, usize, usize)> {
        let c = self.inner.counts_for(self::language(language)?);
        Ok((c.train, c.dev, c.test, c.none))
    }

    fn table_row(&self, language: &str) -> PyResult<String> {
        let l = self::language(language)?;
        Ok(self.inner.counts_for(l).table_row(l))
    }

    fn languages(&self) -> Vec<String> {
        self.inner.languages().iter().map(ToString::to_string).collect()
    }

    fn to_jsonl(&self) -> String {
        to_jsonl_string(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyclass(name = "Model", module = "lmtc_py")]
struct PyModel {
    inner: EncoderModel<f32>,
}

#[pymethods]
impl PyModel {
    #[new]
    #[pyo3(signature = (vocab_size, label_count, layers = 6, hidden = 32, heads = 2, ff_dim = 64, max_seq_len = 48, seed = 0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        vocab_size: usize,
        label_count: usize,
        layers: usize,
        hidden: usize,
        heads: usize,
        ff_dim: usize,
        max_seq_len: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let config = ModelConfig {
            layers,
            hidden,
            heads,
            ff_dim,
            vocab_size,
            max_seq_len,
            label_count,
        };
        Ok(PyModel {
            inner: EncoderModel::init(&config, seed).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyModel {
            inner: load_checkpoint(&path).map_err(value_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_checkpoint(&self.inner, &path).map_err(value_err)
    }

    fn checkpoint_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.inner.to_checkpoint_bytes())
    }

    /// Parameter group names, e.g. `EMB`, `LAYER_1`, `CLS_HEAD`.
    fn groups(&self) -> Vec<String> {
        self.inner.group_ids().iter().map(ToString::to_string).collect()
    }

    fn parameter_count(&self) -> usize {
        self.inner.parameter_count()
    }

    /// Sigmoid label scores for a batch of token id sequences.
    fn predict_proba(&self, sequences: Vec<Vec<u32>>) -> PyResult<Vec<Vec<f32>>> {
        let seqs: Vec<TokenSequence> = sequences.into_iter().map(|ids| TokenSequence { ids }).collect();
        self.inner.predict_proba(&Batch::pad(&seqs)).map_err(value_err)
    }
}

#[pyfunction]
#[pyo3(signature = (scores, gold, threshold = 0.5))]
fn micro_f1(scores: Vec<Vec<f64>>, gold: Vec<Vec<usize>>, threshold: f64) -> PyResult<(f64, f64, f64)> {
    let s = metrics::micro_f1(&rows(scores, gold)?, threshold).map_err(value_err)?;
    Ok((s.precision, s.recall, s.f1))
}

#[pyfunction]
fn rp_at_k(scores: Vec<Vec<f64>>, gold: Vec<Vec<usize>>, k: usize) -> PyResult<f64> {
    metrics::rp_at_k(&rows(scores, gold)?, k).map_err(value_err)
}

#[pyfunction]
fn ndcg_at_k(scores: Vec<Vec<f64>>, gold: Vec<Vec<usize>>, k: usize) -> PyResult<f64> {
    metrics::ndcg_at_k(&rows(scores, gold)?, k).map_err(value_err)
}

#[pyfunction]
fn relative_improvement(baseline: f64, treatment: f64) -> PyResult<f64> {
    metrics::relative_improvement(baseline, treatment).map_err(value_err)
}

/// Full report as a dict with the fields of the CLI's `report.json` rows.
#[pyfunction]
#[pyo3(signature = (language, scores, gold, ks = vec![3, 5], threshold = 0.5))]
fn evaluate<'py>(
    py: Python<'py>,
    language: &str,
    scores: Vec<Vec<f64>>,
    gold: Vec<Vec<usize>>,
    ks: Vec<usize>,
    threshold: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = EvalReport::compute(language, &rows(scores, gold)?, &ks, threshold).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("language", &r.language)?;
    d.set_item("n_docs", r.n_docs)?;
    d.set_item("micro_f1", r.micro_f1)?;
    d.set_item("precision", r.precision)?;
    d.set_item("recall", r.recall)?;
    d.set_item("rp_at", r.rp_at.clone())?;
    d.set_item("ndcg_at", r.ndcg_at.clone())?;
    d.set_item("threshold", r.threshold)?;
    Ok(d)
}

/// Counts of a parsed thesaurus: (domains, micro-thesauri, descriptors).
#[pyfunction]
fn parse_thesaurus(text: &str) -> PyResult<(usize, usize, usize)> {
    let g = lmtc::eurovoc::parse_thesaurus_str(text).map_err(value_err)?;
    Ok((g.domains.len(), g.micro_thesauri.len(), g.descriptors.len()))
}

#[pyfunction]
#[pyo3(signature = (domains, micro_thesauri, descriptors, with_cycle = false, seed = 0))]
fn thesaurus_fixture(domains: usize, micro_thesauri: usize, descriptors: usize, with_cycle: bool, seed: u64) -> String {
    lmtc::synth::eurovoc_fixture(domains, micro_thesauri, descriptors, with_cycle, seed)
}

/// Synthetic parallel corpus as `{language: jsonl_text}`.
#[pyfunction]
#[pyo3(signature = (labeled_docs = 500, unlabeled_docs = 100, labels = 20, seed = 0))]
fn synthetic_corpus(labeled_docs: usize, unlabeled_docs: usize, labels: usize, seed: u64) -> PyResult<Vec<(String, String)>> {
    let cfg = lmtc::synth::SynthConfig {
        labeled_docs,
        unlabeled_docs,
        labels,
        seed,
        ..Default::default()
    };
    let s = lmtc::synth::generate_parallel(&cfg).map_err(value_err)?;
    Ok(s.corpora
        .iter()
        .flat_map(|c| c.languages().iter().map(move |l| (l.to_string(), to_jsonl_string(c))))
        .collect())
}

#[pymodule]
fn lmtc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyVocab>()?;
    m.add_class::<PyCorpus>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(micro_f1, m)?)?;
    m.add_function(wrap_pyfunction!(rp_at_k, m)?)?;
    m.add_function(wrap_pyfunction!(ndcg_at_k, m)?)?;
    m.add_function(wrap_pyfunction!(relative_improvement, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(parse_thesaurus, m)?)?;
    m.add_function(wrap_pyfunction!(thesaurus_fixture, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_corpus, m)?)?;
    Ok(())
}
