use std::path::PathBuf;
use std::sync::Arc;

use crate::alignment::Alignment;
use crate::features::FeatureMatrix;
use crate::treebank::ParseTree;

use super::CorpusError;

/// One corpus utterance: text with its parse, the phoneme alignment and the
/// feature matrix the alignment refers to.
#[derive(Debug, Clone)]
pub struct UtteranceRecord {
    id: String,
    tokens: Vec<String>,
    tree: ParseTree,
    alignment: Alignment,
    features: Arc<FeatureMatrix>,
    features_ref: Option<PathBuf>,
}

impl UtteranceRecord {
    pub fn new(
        id: impl Into<String>,
        tokens: Vec<String>,
        tree: ParseTree,
        alignment: Alignment,
        features: Arc<FeatureMatrix>,
    ) -> Result<Self, CorpusError> {
        let id = id.into();
        if tree.leaf_token_refs() != tokens.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(CorpusError::TokenTreeMismatch { id, tokens, leaves: tree.leaf_tokens() });
        }
        if alignment.word_count() != tokens.len() {
            return Err(CorpusError::AlignmentWordMismatch {
                id,
                words: alignment.word_count(),
                tokens: tokens.len(),
            });
        }
        if alignment.total_frames() != features.n_frames() {
            return Err(CorpusError::FrameCountMismatch {
                id,
                alignment: alignment.total_frames(),
                features: features.n_frames(),
            });
        }
        Ok(Self { id, tokens, tree, alignment, features, features_ref: None })
    }

    /// Builds a record whose tokens are the tree's leaves.
    pub fn from_tree(
        id: impl Into<String>,
        tree: ParseTree,
        alignment: Alignment,
        features: Arc<FeatureMatrix>,
    ) -> Result<Self, CorpusError> {
        let tokens = tree.leaf_tokens();
        Self::new(id, tokens, tree, alignment, features)
    }

    pub fn with_features_ref(mut self, path: PathBuf) -> Self {
        self.features_ref = Some(path);
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn tree(&self) -> &ParseTree {
        &self.tree
    }

    pub fn alignment(&self) -> &Alignment {
        &self.alignment
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn features_ref(&self) -> Option<&PathBuf> {
        self.features_ref.as_ref()
    }

    pub fn duration_frames(&self) -> usize {
        self.features.n_frames()
    }

    pub fn phonemes(&self) -> Vec<String> {
        self.alignment.phonemes().map(str::to_string).collect()
    }
}
