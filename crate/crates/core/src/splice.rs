//! The augmentation operator: one label-matched constituent substitution
//! between exactly two utterances, with joint tags at the audio seams.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::UtteranceRecord;
use crate::features::{concat_segments, FeatureError, FeatureMatrix};
use crate::treebank::{Constituent, ConstituentPolicy, ParseTree, Span};

#[derive(Debug, Error)]
pub enum SpliceError {
    #[error("label mismatch: host constituent `{host}` vs donor constituent `{donor}`")]
    LabelMismatch { host: String, donor: String },
    #[error("host has {host} mel bins, donor has {donor}")]
    BinMismatch { host: usize, donor: usize },
    #[error("record `{id}`: alignment has {words} words but there are {tokens} tokens")]
    AlignmentInconsistent { id: String, words: usize, tokens: usize },
    #[error("span {span} out of bounds for {len} tokens")]
    SpanOutOfBounds { span: Span, len: usize },
    #[error(transparent)]
    Features(#[from] FeatureError),
}

/// Where an augmented example came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(rename = "host")]
    pub host_id: String,
    #[serde(rename = "donor")]
    pub donor_id: String,
    pub host_span: Span,
    pub donor_span: Span,
    pub label: String,
}

/// Frame counts of the three spliced pieces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SpliceLayout {
    pub prefix_frames: usize,
    pub insert_frames: usize,
    pub suffix_frames: usize,
}

impl SpliceLayout {
    pub fn total(&self) -> usize {
        self.prefix_frames + self.insert_frames + self.suffix_frames
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedExample {
    pub tokens: Vec<String>,
    pub phonemes: Vec<String>,
    /// 1 on the first phoneme after an audio joint, 0 elsewhere.
    pub joint_tags: Vec<u8>,
    pub features: FeatureMatrix,
    pub provenance: Provenance,
    pub layout: SpliceLayout,
}

impl AugmentedExample {
    pub fn joint_count(&self) -> usize {
        self.joint_tags.iter().map(|&t| t as usize).sum()
    }

    /// Checks the structural invariants; returns a description of the first violation.
    pub fn check_invariants(&self, host_token_count: Option<usize>) -> Result<(), String> {
        if self.joint_tags.len() != self.phonemes.len() {
            return Err(format!("{} joint tags for {} phonemes", self.joint_tags.len(), self.phonemes.len()));
        }
        if self.joint_tags.iter().any(|&t| t > 1) {
            return Err("joint tag outside {0,1}".into());
        }
        if self.joint_count() > 2 {
            return Err(format!("{} joints, at most 2 allowed", self.joint_count()));
        }
        if self.features.n_frames() != self.layout.total() {
            return Err(format!(
                "{} frames but layout sums to {}",
                self.features.n_frames(),
                self.layout.total()
            ));
        }
        if let Some(host_len) = host_token_count {
            let p = &self.provenance;
            let expected = host_len - p.host_span.len() + p.donor_span.len();
            if self.tokens.len() != expected {
                return Err(format!("{} tokens, expected {expected}", self.tokens.len()));
            }
        }
        Ok(())
    }
}

/// All ordered (host, donor) constituent pairs with equal labels, host first.
pub fn find_matches(
    host: &ParseTree,
    donor: &ParseTree,
    policy: &ConstituentPolicy,
) -> Vec<(Constituent, Constituent)> {
    let host_cs = host.enumerate_constituents(policy);
    let donor_cs = donor.enumerate_constituents(policy);
    let mut out = Vec::new();
    for m in &host_cs {
        for n in donor_cs.iter().filter(|n| n.label == m.label) {
            out.push((m.clone(), n.clone()));
        }
    }
    out
}

/// `host[..a] ++ donor[a_d..b_d] ++ host[b..]`.
pub fn substitute_text<T: Clone>(
    host: &[T],
    host_span: Span,
    donor: &[T],
    donor_span: Span,
) -> Result<Vec<T>, SpliceError> {
    check_span(host_span, host.len())?;
    check_span(donor_span, donor.len())?;
    let mut out = Vec::with_capacity(host.len() - host_span.len() + donor_span.len());
    out.extend_from_slice(&host[..host_span.start]);
    out.extend_from_slice(&donor[donor_span.range()]);
    out.extend_from_slice(&host[host_span.end..]);
    Ok(out)
}

fn check_span(span: Span, len: usize) -> Result<(), SpliceError> {
    if span.start >= span.end || span.end > len {
        return Err(SpliceError::SpanOutOfBounds { span, len });
    }
    Ok(())
}

fn check_alignment(r: &UtteranceRecord) -> Result<(), SpliceError> {
    let words = r.alignment().word_count();
    if words != r.tokens().len() {
        return Err(SpliceError::AlignmentInconsistent {
            id: r.id().to_string(),
            words,
            tokens: r.tokens().len(),
        });
    }
    Ok(())
}

/// Replaces host constituent `host_c` with donor constituent `donor_c`.
///
/// Features are host frames before the onset of word `a` (leading silence
/// included), the donor frames of its word range, then host frames from the
/// onset of word `b` to the end. A joint tag goes on the first inserted
/// phoneme when host audio precedes it, and on the first suffix phoneme when
/// the suffix is non-empty. A seam between frames that are adjacent in the
/// same recording is not a joint, so replacing a constituent with itself
/// yields no tags.
pub fn build_augmented(
    host: &UtteranceRecord,
    host_c: &Constituent,
    donor: &UtteranceRecord,
    donor_c: &Constituent,
) -> Result<AugmentedExample, SpliceError> {
    if host_c.label != donor_c.label {
        return Err(SpliceError::LabelMismatch { host: host_c.label.clone(), donor: donor_c.label.clone() });
    }
    check_alignment(host)?;
    check_alignment(donor)?;
    let (hf, df) = (host.features(), donor.features());
    if hf.n_bins() != df.n_bins() {
        return Err(SpliceError::BinMismatch { host: hf.n_bins(), donor: df.n_bins() });
    }
    let (a, b) = (host_c.span.start, host_c.span.end);
    let tokens = substitute_text(host.tokens(), host_c.span, donor.tokens(), donor_c.span)?;

    let ha = host.alignment();
    let da = donor.alignment();
    let host_phones: Vec<&str> = ha.phonemes().collect();
    let donor_phones: Vec<&str> = da.phonemes().collect();
    let inserted: Range<usize> = da.word_phoneme_span(donor_c.span).expect("span checked");
    let host_removed: Range<usize> = ha.word_phoneme_span(host_c.span).expect("span checked");

    let prefix: Range<usize> = 0..ha.word_onset(a);
    let insert: Range<usize> = da.word_frame_span(donor_c.span).expect("span checked");
    let suffix: Range<usize> = if b < ha.word_count() { ha.word_onset(b)..ha.total_frames() } else { 0..0 };

    let same_recording = host.id() == donor.id();
    let prefix_joint = !prefix.is_empty() && !(same_recording && prefix.end == insert.start);
    let suffix_joint = !suffix.is_empty() && !(same_recording && insert.end == suffix.start);

    let mut phonemes = Vec::with_capacity(host_phones.len() - host_removed.len() + inserted.len());
    let mut joint_tags = Vec::with_capacity(phonemes.capacity());
    let push = |phonemes: &mut Vec<String>, tags: &mut Vec<u8>, src: &[&str], joint: bool| {
        for (i, p) in src.iter().enumerate() {
            phonemes.push((*p).to_string());
            tags.push(u8::from(i == 0 && joint));
        }
    };
    push(&mut phonemes, &mut joint_tags, &host_phones[..host_removed.start], false);
    push(&mut phonemes, &mut joint_tags, &donor_phones[inserted], prefix_joint);
    push(&mut phonemes, &mut joint_tags, &host_phones[host_removed.end..], suffix_joint);

    let layout = SpliceLayout {
        prefix_frames: prefix.len(),
        insert_frames: insert.len(),
        suffix_frames: suffix.len(),
    };
    let features = concat_segments(&[(hf, prefix), (df, insert), (hf, suffix)])?;

    Ok(AugmentedExample {
        tokens,
        phonemes,
        joint_tags,
        features,
        provenance: Provenance {
            host_id: host.id().to_string(),
            donor_id: donor.id().to_string(),
            host_span: host_c.span,
            donor_span: donor_c.span,
            label: host_c.label.clone(),
        },
        layout,
    })
}
