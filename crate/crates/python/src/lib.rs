//! Python bindings: tree parsing, substitution, MELF I/O, corpus loading,
//! sampling, export, histograms and error rates.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use ::syntaxsplice::corpus::{sample_augmented, ExportError, Exporter, PairUniverse};
use ::syntaxsplice::stats::histograms_from_manifest;
use ::syntaxsplice::{self as ss, ConstituentPolicy, SampleMode, SampleSpec, Span};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn io_err(e: impl std::fmt::Display) -> PyErr {
    PyIOError::new_err(e.to_string())
}

fn make_policy(
    min_words: usize,
    max_words: Option<usize>,
    include_preterminals: bool,
    labels: Option<Vec<String>>,
    normalize_labels: bool,
) -> ConstituentPolicy {
    ConstituentPolicy {
        include_preterminals,
        exclude_full_span: true,
        min_words,
        max_words,
        label_allowlist: labels.map(|l| l.into_iter().collect::<BTreeSet<_>>()),
        normalize_labels,
    }
}

/// A parsed constituency tree.
#[pyclass(name = "ParseTree", frozen)]
struct PyParseTree(ss::ParseTree);

#[pymethods]
impl PyParseTree {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        ss::parse_bracketed(text).map(Self).map_err(value_err)
    }

    fn tokens(&self) -> Vec<String> {
        self.0.leaf_tokens()
    }

    fn to_bracketed(&self) -> String {
        self.0.to_bracketed()
    }

    /// `(label, start, end)` for every eligible constituent, in pre-order.
    #[pyo3(signature = (min_words=1, max_words=None, include_preterminals=true, labels=None, normalize_labels=false))]
    fn constituents(
        &self,
        min_words: usize,
        max_words: Option<usize>,
        include_preterminals: bool,
        labels: Option<Vec<String>>,
        normalize_labels: bool,
    ) -> Vec<(String, usize, usize)> {
        let policy = make_policy(min_words, max_words, include_preterminals, labels, normalize_labels);
        self.0
            .enumerate_constituents(&policy)
            .into_iter()
            .map(|c| (c.label, c.span.start, c.span.end))
            .collect()
    }

    fn __len__(&self) -> usize {
        self.0.token_count()
    }

    fn __repr__(&self) -> String {
        format!("ParseTree({:?})", self.0.to_bracketed())
    }
}

/// Replaces `host[host_span]` with `donor[donor_span]`.
#[pyfunction]
fn substitute_text(
    host: Vec<String>,
    host_span: (usize, usize),
    donor: Vec<String>,
    donor_span: (usize, usize),
) -> PyResult<Vec<String>> {
    ss::substitute_text(&host, Span::new(host_span.0, host_span.1), &donor, Span::new(donor_span.0, donor_span.1))
        .map_err(value_err)
}

/// A mel feature matrix, `n_frames x n_bins` f32 values in row-major order.
#[pyclass(name = "FeatureMatrix", frozen)]
struct PyFeatureMatrix(ss::FeatureMatrix);

#[pymethods]
impl PyFeatureMatrix {
    #[new]
    fn new(n_frames: usize, n_bins: usize, values: Vec<f32>) -> PyResult<Self> {
        ss::FeatureMatrix::new(n_frames, n_bins, values).map(Self).map_err(value_err)
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.0.n_frames(), self.0.n_bins())
    }

    fn values(&self) -> Vec<f32> {
        self.0.values().to_vec()
    }

    /// The encoded MELF file contents.
    fn to_bytes(&self) -> Vec<u8> {
        self.0.to_bytes()
    }
}

#[pyfunction]
fn read_features(path: PathBuf) -> PyResult<PyFeatureMatrix> {
    let file = File::open(&path).map_err(io_err)?;
    ss::read_features(BufReader::new(file)).map(PyFeatureMatrix).map_err(value_err)
}

/// Writes a MELF file and returns the number of bytes written.
#[pyfunction]
fn write_features(path: PathBuf, matrix: &PyFeatureMatrix) -> PyResult<usize> {
    let mut out = BufWriter::new(File::create(&path).map_err(io_err)?);
    let n = ss::write_features(&matrix.0, &mut out).map_err(value_err)?;
    out.flush().map_err(io_err)?;
    Ok(n)
}

/// One augmented example, without its feature matrix.
#[pyclass(name = "AugmentedExample", frozen, get_all)]
struct PyExample {
    tokens: Vec<String>,
    phonemes: Vec<String>,
    joint_tags: Vec<u8>,
    n_frames: usize,
    host: String,
    donor: String,
    host_span: (usize, usize),
    donor_span: (usize, usize),
    label: String,
}

impl From<ss::AugmentedExample> for PyExample {
    fn from(ex: ss::AugmentedExample) -> Self {
        let p = ex.provenance;
        Self {
            tokens: ex.tokens,
            phonemes: ex.phonemes,
            joint_tags: ex.joint_tags,
            n_frames: ex.features.n_frames(),
            host: p.host_id,
            donor: p.donor_id,
            host_span: (p.host_span.start, p.host_span.end),
            donor_span: (p.donor_span.start, p.donor_span.end),
            label: p.label,
        }
    }
}

#[pymethods]
impl PyExample {
    fn __repr__(&self) -> String {
        format!("AugmentedExample({:?}, host={:?}, donor={:?})", self.tokens.join(" "), self.host, self.donor)
    }
}

fn parse_mode(mode: &str) -> PyResult<SampleMode> {
    mode.parse().map_err(value_err)
}

/// A loaded corpus manifest.
#[pyclass(name = "Corpus", frozen)]
struct PyCorpus(ss::Corpus);

#[pymethods]
impl PyCorpus {
    #[staticmethod]
    #[pyo3(signature = (manifest, min_words=1, max_words=None, include_preterminals=true, labels=None, normalize_labels=false))]
    fn load(
        py: Python<'_>,
        manifest: PathBuf,
        min_words: usize,
        max_words: Option<usize>,
        include_preterminals: bool,
        labels: Option<Vec<String>>,
        normalize_labels: bool,
    ) -> PyResult<Self> {
        let policy = make_policy(min_words, max_words, include_preterminals, labels, normalize_labels);
        py.detach(|| ss::load_corpus_file(&manifest, policy)).map(Self).map_err(value_err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn ids(&self) -> Vec<String> {
        self.0.records().iter().map(|r| r.id().to_string()).collect()
    }

    fn labels(&self) -> Vec<String> {
        self.0.labels().map(str::to_string).collect()
    }

    #[pyo3(signature = (self_pairs=false))]
    fn tuple_count(&self, self_pairs: bool) -> u64 {
        PairUniverse::new(&self.0, self_pairs).len()
    }

    /// Builds examples in memory. `count` is ignored in exhaustive mode.
    #[pyo3(signature = (count=0, seed=0, mode="random", dedupe=false, self_pairs=false))]
    fn sample(
        &self,
        py: Python<'_>,
        count: usize,
        seed: u64,
        mode: &str,
        dedupe: bool,
        self_pairs: bool,
    ) -> PyResult<Vec<PyExample>> {
        let spec = self.spec(count, seed, parse_mode(mode)?, dedupe, self_pairs);
        py.detach(|| sample_augmented(&self.0, spec).map(|r| r.map(PyExample::from)).collect::<Result<Vec<_>, _>>())
            .map_err(value_err)
    }

    /// Exports originals and augmented examples to `out_dir`; returns the
    /// report as a dict.
    #[pyo3(signature = (out_dir, count=0, seed=0, mode="random", dedupe=false, self_pairs=false, workers=1))]
    #[allow(clippy::too_many_arguments)]
    fn augment(
        &self,
        py: Python<'_>,
        out_dir: PathBuf,
        count: usize,
        seed: u64,
        mode: &str,
        dedupe: bool,
        self_pairs: bool,
        workers: usize,
    ) -> PyResult<BTreeMap<&'static str, usize>> {
        let spec = self.spec(count, seed, parse_mode(mode)?, dedupe, self_pairs);
        let report = py
            .detach(|| {
                let mut exporter = Exporter::create(&out_dir, &self.0)?;
                sample_augmented(&self.0, spec).for_each_parallel::<ExportError, _>(workers, |ex| {
                    let host_len = self.0.get(&ex.provenance.host_id).map(|r| r.tokens().len());
                    exporter.write_augmented(&ex, host_len).map(drop)
                })?;
                exporter.finish()
            })
            .map_err(value_err)?;
        Ok(BTreeMap::from([
            ("n_original", report.n_original),
            ("n_augmented", report.n_augmented),
            ("total_frames", report.total_frames),
        ]))
    }
}

impl PyCorpus {
    fn spec(&self, count: usize, seed: u64, mode: SampleMode, dedupe: bool, self_pairs: bool) -> SampleSpec {
        SampleSpec {
            target_count: count,
            seed,
            policy: self.0.policy().clone(),
            dedupe,
            mode,
            allow_self_pairs: self_pairs,
        }
    }
}

/// `(inserted, removed)` length histograms of an exported manifest.
#[pyfunction]
fn length_histograms(manifest: PathBuf) -> PyResult<(BTreeMap<usize, u64>, BTreeMap<usize, u64>)> {
    let file = File::open(&manifest).map_err(io_err)?;
    let (inserted, removed) = histograms_from_manifest(BufReader::new(file)).map_err(value_err)?;
    Ok((inserted.counts, removed.counts))
}

/// Substitution/insertion/deletion counts and rate of `hypothesis` against `reference`.
#[pyfunction]
fn edit_rate(reference: Vec<String>, hypothesis: Vec<String>) -> PyResult<BTreeMap<&'static str, f64>> {
    let r = ss::edit_rate(&reference, &hypothesis).map_err(value_err)?;
    Ok(BTreeMap::from([
        ("substitutions", r.substitutions as f64),
        ("insertions", r.insertions as f64),
        ("deletions", r.deletions as f64),
        ("reference_length", r.reference_length as f64),
        ("rate", r.rate),
    ]))
}

#[pyfunction]
fn relative_rates(rates: BTreeMap<String, f64>, baseline: &str) -> PyResult<BTreeMap<String, f64>> {
    ss::relative_rates(&rates, baseline).map_err(value_err)
}

#[pymodule]
#[pyo3(name = "syntaxsplice")]
fn syntaxsplice_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParseTree>()?;
    m.add_class::<PyFeatureMatrix>()?;
    m.add_class::<PyExample>()?;
    m.add_class::<PyCorpus>()?;
    m.add_function(wrap_pyfunction!(substitute_text, m)?)?;
    m.add_function(wrap_pyfunction!(read_features, m)?)?;
    m.add_function(wrap_pyfunction!(write_features, m)?)?;
    m.add_function(wrap_pyfunction!(length_histograms, m)?)?;
    m.add_function(wrap_pyfunction!(edit_rate, m)?)?;
    m.add_function(wrap_pyfunction!(relative_rates, m)?)?;
    m.add("MELF_MAGIC", &ss::features::MAGIC[..])?;
    Ok(())
}
