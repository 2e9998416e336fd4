//! Phoneme-to-frame forced alignments.
//!
//! Frame ranges are in feature-frame units. Inter-word silence belongs to the
//! preceding word, so a word's frame span runs from its first phoneme's start
//! to the next word's first phoneme start (or to the end of the utterance for
//! the last word). Leading silence before the first phoneme belongs to no word.

use std::io::BufRead;
use std::ops::Range;

use thiserror::Error;

use crate::treebank::Span;

#[derive(Debug, Error)]
pub enum AlignmentError {
    #[error("line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("line {line}: frames [{start},{end}) overlap the previous phoneme ending at {prev_end}")]
    OverlappingFrames { line: usize, start: usize, end: usize, prev_end: usize },
    #[error("line {line}: word index jumps from {prev:?} to {found}")]
    WordIndexGap { line: usize, prev: Option<usize>, found: usize },
    #[error("line {line}: {reason}")]
    NonMonotonic { line: usize, reason: &'static str },
    #[error("alignment ends at frame {end} but the utterance has {total} frames")]
    ExceedsTotalFrames { end: usize, total: usize },
    #[error("word range {span} out of bounds for {word_count} words")]
    RangeOutOfBounds { span: Span, word_count: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhonemeEntry {
    pub phoneme: String,
    pub word_index: usize,
    pub frame_start: usize,
    pub frame_end: usize,
}

/// A validated alignment. Row line numbers in errors are 0 for in-memory input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    entries: Vec<PhonemeEntry>,
    total_frames: usize,
    /// `word_starts[w]` is the index of the first phoneme of word `w`;
    /// a final sentinel holds the phoneme count.
    word_starts: Vec<usize>,
}

impl Alignment {
    pub fn new(entries: Vec<PhonemeEntry>, total_frames: usize) -> Result<Self, AlignmentError> {
        let lines: Vec<usize> = vec![0; entries.len()];
        Self::validated(entries, total_frames, &lines)
    }

    fn validated(entries: Vec<PhonemeEntry>, total_frames: usize, lines: &[usize]) -> Result<Self, AlignmentError> {
        let mut word_starts = Vec::new();
        let mut prev: Option<&PhonemeEntry> = None;
        for (i, e) in entries.iter().enumerate() {
            let line = lines[i];
            if e.phoneme.is_empty() || e.phoneme.starts_with('#') || e.phoneme.contains(char::is_whitespace) {
                return Err(AlignmentError::MalformedRow { line, reason: format!("invalid phoneme `{}`", e.phoneme) });
            }
            if e.frame_end <= e.frame_start {
                return Err(AlignmentError::MalformedRow {
                    line,
                    reason: format!("empty frame range [{},{})", e.frame_start, e.frame_end),
                });
            }
            match prev {
                None => {
                    if e.word_index != 0 {
                        return Err(AlignmentError::WordIndexGap { line, prev: None, found: e.word_index });
                    }
                    word_starts.push(0);
                }
                Some(p) => {
                    if e.frame_start < p.frame_start {
                        return Err(AlignmentError::NonMonotonic { line, reason: "frame_start decreases" });
                    }
                    if e.frame_start < p.frame_end {
                        return Err(AlignmentError::OverlappingFrames {
                            line,
                            start: e.frame_start,
                            end: e.frame_end,
                            prev_end: p.frame_end,
                        });
                    }
                    if e.word_index < p.word_index {
                        return Err(AlignmentError::NonMonotonic { line, reason: "word index decreases" });
                    }
                    if e.word_index > p.word_index + 1 {
                        return Err(AlignmentError::WordIndexGap {
                            line,
                            prev: Some(p.word_index),
                            found: e.word_index,
                        });
                    }
                    if e.word_index == p.word_index + 1 {
                        word_starts.push(i);
                    }
                }
            }
            prev = Some(e);
        }
        if let Some(last) = entries.last() {
            if last.frame_end > total_frames {
                return Err(AlignmentError::ExceedsTotalFrames { end: last.frame_end, total: total_frames });
            }
        }
        word_starts.push(entries.len());
        Ok(Self { entries, total_frames, word_starts })
    }

    pub fn entries(&self) -> &[PhonemeEntry] {
        &self.entries
    }

    pub fn total_frames(&self) -> usize {
        self.total_frames
    }

    pub fn word_count(&self) -> usize {
        self.word_starts.len() - 1
    }

    pub fn phoneme_count(&self) -> usize {
        self.entries.len()
    }

    pub fn phonemes(&self) -> impl Iterator<Item = &str> + '_ {
        self.entries.iter().map(|e| e.phoneme.as_str())
    }

    /// Serializes in the TSV format read by [`load_alignment`], with header.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("#phoneme\tword\tstart\tend\n");
        for e in &self.entries {
            out.push_str(&format!("{}\t{}\t{}\t{}\n", e.phoneme, e.word_index, e.frame_start, e.frame_end));
        }
        out
    }

    /// First phoneme index of word `w`; the phoneme count for `w == word_count`.
    pub fn word_phoneme_start(&self, w: usize) -> usize {
        self.word_starts[w.min(self.word_count())]
    }

    /// Frames before the first phoneme.
    pub fn leading_silence(&self) -> usize {
        self.entries.first().map_or(self.total_frames, |e| e.frame_start)
    }

    fn check(&self, words: Span) -> Result<(), AlignmentError> {
        if words.start >= words.end || words.end > self.word_count() {
            return Err(AlignmentError::RangeOutOfBounds { span: words, word_count: self.word_count() });
        }
        Ok(())
    }

    /// First frame of word `w`, or the total frame count for `w == word_count`.
    pub fn word_onset(&self, w: usize) -> usize {
        if w >= self.word_count() {
            self.total_frames
        } else {
            self.entries[self.word_starts[w]].frame_start
        }
    }

    /// Frame range owned by a word range, silence going to the left.
    pub fn word_frame_span(&self, words: Span) -> Result<Range<usize>, AlignmentError> {
        self.check(words)?;
        Ok(self.word_onset(words.start)..self.word_onset(words.end))
    }

    /// Phoneme-index range of the phonemes belonging to a word range.
    pub fn word_phoneme_span(&self, words: Span) -> Result<Range<usize>, AlignmentError> {
        self.check(words)?;
        Ok(self.word_starts[words.start]..self.word_starts[words.end])
    }
}

/// Parses the alignment TSV: `phoneme<TAB>word_index<TAB>frame_start<TAB>frame_end`.
/// Lines starting with `#` and blank lines are skipped.
pub fn load_alignment<R: BufRead>(source: R, total_frames: usize) -> Result<Alignment, AlignmentError> {
    let mut entries = Vec::new();
    let mut lines = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let row = line.trim_end_matches('\r');
        if row.trim().is_empty() || row.starts_with('#') {
            continue;
        }
        entries.push(parse_row(row, lineno)?);
        lines.push(lineno);
    }
    Alignment::validated(entries, total_frames, &lines)
}

fn parse_row(row: &str, line: usize) -> Result<PhonemeEntry, AlignmentError> {
    let fields: Vec<&str> = row.split('\t').collect();
    if fields.len() != 4 {
        return Err(AlignmentError::MalformedRow {
            line,
            reason: format!("expected 4 tab-separated fields, found {}", fields.len()),
        });
    }
    let phoneme = fields[0].trim();
    if phoneme.is_empty() {
        return Err(AlignmentError::MalformedRow { line, reason: "empty phoneme".into() });
    }
    let num = |s: &str, what: &str| {
        s.trim().parse::<usize>().map_err(|_| AlignmentError::MalformedRow {
            line,
            reason: format!("{what} `{s}` is not a non-negative integer"),
        })
    };
    Ok(PhonemeEntry {
        phoneme: phoneme.to_string(),
        word_index: num(fields[1], "word index")?,
        frame_start: num(fields[2], "frame start")?,
        frame_end: num(fields[3], "frame end")?,
    })
}

/// Converts a time interval in seconds to a frame range, rounding the start
/// down and the end up.
pub fn seconds_to_frames(start_s: f64, end_s: f64, frame_shift_ms: f64) -> Range<usize> {
    let shift = frame_shift_ms / 1000.0;
    let start = (start_s / shift + 1e-9).floor().max(0.0) as usize;
    let end = (end_s / shift - 1e-9).ceil().max(0.0) as usize;
    start..end.max(start)
}
