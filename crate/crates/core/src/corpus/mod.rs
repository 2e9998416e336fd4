//! Corpus ingestion, the label-indexed constituent store, sampling of
//! augmented examples and dataset export.

mod export;
mod manifest;
mod record;
mod sampler;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::alignment::{load_alignment, AlignmentError};
use crate::features::{read_features, FeatureError, DEFAULT_FRAME_SHIFT_MS};
use crate::splice::SpliceError;
use crate::treebank::{parse_bracketed, Constituent, ConstituentPolicy, TreeError};

pub use export::{export_dataset, ExportError, ExportReport, Exporter};
pub use manifest::{InputRow, ManifestRow, Origin};
pub use record::UtteranceRecord;
pub use sampler::{enumerate_pairs, sample_augmented, AugmentStream, PairTuple, PairUniverse, SampleMode, SampleSpec, TupleSampler};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("manifest line {line}: {message}")]
    ManifestParse { line: usize, message: String },
    #[error("missing file {}", path.display())]
    MissingFile { path: PathBuf },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("record `{id}`: bad tree: {source}")]
    Tree { id: String, source: TreeError },
    #[error("record `{id}`: alignment {}: {source}", path.display())]
    Alignment { id: String, path: PathBuf, source: AlignmentError },
    #[error("record `{id}`: features {}: {source}", path.display())]
    Features { id: String, path: PathBuf, source: FeatureError },
    #[error("record `{id}`: tokens {tokens:?} differ from tree leaves {leaves:?}")]
    TokenTreeMismatch { id: String, tokens: Vec<String>, leaves: Vec<String> },
    #[error("record `{id}`: alignment covers {words} words but there are {tokens} tokens")]
    AlignmentWordMismatch { id: String, words: usize, tokens: usize },
    #[error("record `{id}`: alignment spans {alignment} frames but the feature file has {features}")]
    FrameCountMismatch { id: String, alignment: usize, features: usize },
    #[error("record `{id}`: {found} mel bins, corpus uses {expected}")]
    MixedBins { id: String, expected: usize, found: usize },
    #[error("record `{id}`: frame shift {found} ms, corpus uses {expected} ms")]
    MixedFrameShift { id: String, expected: f64, found: f64 },
    #[error("duplicate record id `{0}`")]
    DuplicateId(String),
    #[error("manifest line {line}: {source}")]
    AtLine { line: usize, source: Box<CorpusError> },
    #[error("accepted {accepted} of {target} examples before giving up after {rejections} rejections")]
    ExhaustedUniverse { target: usize, accepted: usize, rejections: u64 },
    #[error(transparent)]
    Splice(#[from] SpliceError),
}

impl CorpusError {
    /// The error with any line-number wrapper removed.
    pub fn root_cause(&self) -> &CorpusError {
        match self {
            CorpusError::AtLine { source, .. } => source.root_cause(),
            other => other,
        }
    }
}

/// Position of a constituent: record index and index into that record's
/// constituent list.
pub(crate) type EntryRef = (usize, usize);

/// Immutable collection of utterances, sorted by id, with every constituent
/// accepted by the corpus policy indexed by label. Cloning is cheap.
#[derive(Debug, Clone)]
pub struct Corpus {
    records: Arc<Vec<UtteranceRecord>>,
    policy: ConstituentPolicy,
    constituents: Arc<Vec<Vec<Constituent>>>,
    label_index: Arc<BTreeMap<String, Vec<EntryRef>>>,
}

impl Corpus {
    pub fn from_records(mut records: Vec<UtteranceRecord>, policy: ConstituentPolicy) -> Result<Self, CorpusError> {
        records.sort_by(|a, b| a.id().cmp(b.id()));
        if let Some(w) = records.windows(2).find(|w| w[0].id() == w[1].id()) {
            return Err(CorpusError::DuplicateId(w[0].id().to_string()));
        }
        if let Some(first) = records.first() {
            let (bins, shift) = (first.features().n_bins(), first.features().frame_shift_ms());
            for r in &records {
                if r.features().n_bins() != bins {
                    return Err(CorpusError::MixedBins {
                        id: r.id().to_string(),
                        expected: bins,
                        found: r.features().n_bins(),
                    });
                }
                if r.features().frame_shift_ms() != shift {
                    return Err(CorpusError::MixedFrameShift {
                        id: r.id().to_string(),
                        expected: shift,
                        found: r.features().frame_shift_ms(),
                    });
                }
            }
        }
        Ok(Self::index(Arc::new(records), policy))
    }

    fn index(records: Arc<Vec<UtteranceRecord>>, policy: ConstituentPolicy) -> Self {
        let constituents: Vec<Vec<Constituent>> =
            records.iter().map(|r| r.tree().enumerate_constituents(&policy)).collect();
        let mut label_index: BTreeMap<String, Vec<EntryRef>> = BTreeMap::new();
        for (ri, cs) in constituents.iter().enumerate() {
            for (ci, c) in cs.iter().enumerate() {
                label_index.entry(c.label.clone()).or_default().push((ri, ci));
            }
        }
        Self {
            records,
            policy,
            constituents: Arc::new(constituents),
            label_index: Arc::new(label_index),
        }
    }

    /// The same records indexed under another policy.
    pub fn with_policy(&self, policy: ConstituentPolicy) -> Self {
        if policy == self.policy {
            return self.clone();
        }
        Self::index(Arc::clone(&self.records), policy)
    }

    pub fn policy(&self) -> &ConstituentPolicy {
        &self.policy
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[UtteranceRecord] {
        &self.records
    }

    pub fn get(&self, id: &str) -> Option<&UtteranceRecord> {
        self.records
            .binary_search_by(|r| r.id().cmp(id))
            .ok()
            .map(|i| &self.records[i])
    }

    /// Constituents of record `idx` under the corpus policy, in document order.
    pub fn constituents(&self, idx: usize) -> &[Constituent] {
        &self.constituents[idx]
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> + '_ {
        self.label_index.keys().map(String::as_str)
    }

    /// All `(record id, constituent)` entries carrying `label`, in record-id then document order.
    pub fn label_entries<'a>(&'a self, label: &str) -> impl Iterator<Item = (&'a str, &'a Constituent)> + 'a {
        self.label_index
            .get(label)
            .into_iter()
            .flatten()
            .map(move |&(r, c)| (self.records[r].id(), &self.constituents[r][c]))
    }

    pub(crate) fn label_list(&self, label: &str) -> &[EntryRef] {
        self.label_index.get(label).map_or(&[], Vec::as_slice)
    }

    pub fn total_frames(&self) -> usize {
        self.records.iter().map(UtteranceRecord::duration_frames).sum()
    }
}

/// Reads a JSONL manifest; relative paths resolve against `base_dir`.
pub fn load_corpus<R: BufRead>(manifest: R, base_dir: &Path, policy: ConstituentPolicy) -> Result<Corpus, CorpusError> {
    let mut records = Vec::new();
    for (idx, line) in manifest.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| CorpusError::ManifestParse { line: lineno, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let row: InputRow = serde_json::from_str(&line)
            .map_err(|e| CorpusError::ManifestParse { line: lineno, message: e.to_string() })?;
        let record = load_record(row, base_dir)
            .map_err(|e| CorpusError::AtLine { line: lineno, source: Box::new(e) })?;
        records.push(record);
    }
    Corpus::from_records(records, policy)
}

pub fn load_corpus_file(path: &Path, policy: ConstituentPolicy) -> Result<Corpus, CorpusError> {
    let file = File::open(path).map_err(|e| open_error(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    load_corpus(BufReader::new(file), base, policy)
}

fn open_error(path: &Path, e: std::io::Error) -> CorpusError {
    if e.kind() == std::io::ErrorKind::NotFound {
        CorpusError::MissingFile { path: path.to_path_buf() }
    } else {
        CorpusError::Io { path: path.to_path_buf(), source: e }
    }
}

fn load_record(row: InputRow, base_dir: &Path) -> Result<UtteranceRecord, CorpusError> {
    let id = row.id;
    let tree = parse_bracketed(&row.tree).map_err(|source| CorpusError::Tree { id: id.clone(), source })?;

    let features_path = base_dir.join(&row.features);
    let file = File::open(&features_path).map_err(|e| open_error(&features_path, e))?;
    let mut features = read_features(BufReader::new(file)).map_err(|source| CorpusError::Features {
        id: id.clone(),
        path: features_path.clone(),
        source,
    })?;
    features.set_frame_shift_ms(row.frame_shift_ms.unwrap_or(DEFAULT_FRAME_SHIFT_MS));

    let alignment_path = base_dir.join(&row.alignment);
    let file = File::open(&alignment_path).map_err(|e| open_error(&alignment_path, e))?;
    let alignment = load_alignment(BufReader::new(file), features.n_frames()).map_err(|source| match source {
        AlignmentError::ExceedsTotalFrames { end, total } => CorpusError::FrameCountMismatch {
            id: id.clone(),
            alignment: end,
            features: total,
        },
        source => CorpusError::Alignment { id: id.clone(), path: alignment_path.clone(), source },
    })?;

    Ok(UtteranceRecord::new(id, row.tokens, tree, alignment, Arc::new(features))?.with_features_ref(features_path))
}
