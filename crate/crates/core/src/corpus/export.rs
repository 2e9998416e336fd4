//! Writes an augmented dataset: `manifest.jsonl` plus one MELF file per row
//! under `features/`. Original utterances are always re-emitted first with
//! all-zero joint tags, so the identity transform is part of every dataset.

use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::features::{write_features, FeatureError, FeatureMatrix};
use crate::splice::AugmentedExample;

use super::{Corpus, CorpusError, ManifestRow, Origin};

pub const MANIFEST_NAME: &str = "manifest.jsonl";
pub const FEATURES_DIR: &str = "features";

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("i/o failure on {}: {source}", path.display())]
    IoFailure { path: PathBuf, source: std::io::Error },
    #[error("writing features for `{id}`: {source}")]
    Features { id: String, source: FeatureError },
    #[error("augmented example {index} violates invariants: {reason}")]
    InvalidExample { index: usize, reason: String },
    #[error("output id `{0}` collides with an existing row")]
    IdCollision(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ExportReport {
    pub n_original: usize,
    pub n_augmented: usize,
    pub total_frames: usize,
}

/// Incremental dataset writer.
pub struct Exporter {
    out_dir: PathBuf,
    manifest: BufWriter<File>,
    stems: HashSet<String>,
    report: ExportReport,
}

impl Exporter {
    /// Creates `out_dir` and writes every original record as an identity row.
    pub fn create(out_dir: &Path, originals: &Corpus) -> Result<Self, ExportError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| ExportError::IoFailure { path, source }
        };
        let features_dir = out_dir.join(FEATURES_DIR);
        fs::create_dir_all(&features_dir).map_err(io(&features_dir))?;
        let manifest_path = out_dir.join(MANIFEST_NAME);
        let manifest = File::create(&manifest_path).map_err(io(&manifest_path))?;
        let mut exporter = Self {
            out_dir: out_dir.to_path_buf(),
            manifest: BufWriter::new(manifest),
            stems: HashSet::new(),
            report: ExportReport::default(),
        };
        for r in originals.records() {
            let row = ManifestRow {
                id: r.id().to_string(),
                origin: Origin::Original,
                tokens: r.tokens().to_vec(),
                phonemes: r.phonemes(),
                joint_tags: vec![0; r.alignment().phoneme_count()],
                features: String::new(),
                provenance: None,
            };
            exporter.write_row(row, r.features())?;
            exporter.report.n_original += 1;
        }
        Ok(exporter)
    }

    /// `host_token_count` enables the token-count invariant check when known.
    pub fn write_augmented(
        &mut self,
        example: &AugmentedExample,
        host_token_count: Option<usize>,
    ) -> Result<(), ExportError> {
        let index = self.report.n_augmented;
        example
            .check_invariants(host_token_count)
            .map_err(|reason| ExportError::InvalidExample { index, reason })?;
        let row = ManifestRow {
            id: format!("aug-{index:08}"),
            origin: Origin::Augmented,
            tokens: example.tokens.clone(),
            phonemes: example.phonemes.clone(),
            joint_tags: example.joint_tags.clone(),
            features: String::new(),
            provenance: Some(example.provenance.clone()),
        };
        self.write_row(row, &example.features)?;
        self.report.n_augmented += 1;
        Ok(())
    }

    fn write_row(&mut self, mut row: ManifestRow, features: &FeatureMatrix) -> Result<(), ExportError> {
        let stem = file_stem(&row.id);
        if !self.stems.insert(stem.clone()) {
            return Err(ExportError::IdCollision(row.id));
        }
        let rel = format!("{FEATURES_DIR}/{stem}.melf");
        let path = self.out_dir.join(&rel);
        let file = File::create(&path).map_err(|source| ExportError::IoFailure { path: path.clone(), source })?;
        let mut w = BufWriter::new(file);
        write_features(features, &mut w).map_err(|source| ExportError::Features { id: row.id.clone(), source })?;
        w.flush().map_err(|source| ExportError::IoFailure { path: path.clone(), source })?;

        row.features = rel;
        let line = serde_json::to_string(&row).expect("manifest rows serialize");
        let manifest_path = self.out_dir.join(MANIFEST_NAME);
        writeln!(self.manifest, "{line}").map_err(|source| ExportError::IoFailure { path: manifest_path, source })?;
        self.report.total_frames += features.n_frames();
        Ok(())
    }

    pub fn report(&self) -> ExportReport {
        self.report
    }

    pub fn finish(mut self) -> Result<ExportReport, ExportError> {
        let path = self.out_dir.join(MANIFEST_NAME);
        self.manifest.flush().map_err(|source| ExportError::IoFailure { path, source })?;
        Ok(self.report)
    }
}

/// Maps an id to a file stem made of `[A-Za-z0-9._-]`.
fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect()
}

/// Writes originals followed by every example of `augmented`.
pub fn export_dataset<I>(originals: &Corpus, augmented: I, out_dir: &Path) -> Result<ExportReport, ExportError>
where
    I: IntoIterator<Item = Result<AugmentedExample, CorpusError>>,
{
    let mut exporter = Exporter::create(out_dir, originals)?;
    for example in augmented {
        let example = example?;
        let host_len = host_token_count(originals, &example);
        exporter.write_augmented(&example, host_len)?;
    }
    exporter.finish()
}

fn host_token_count(corpus: &Corpus, example: &AugmentedExample) -> Option<usize> {
    corpus.get(&example.provenance.host_id).map(|r| r.tokens().len())
}
