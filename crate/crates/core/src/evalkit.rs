//! Word and phoneme error rates.
//!
//! Unit-cost Levenshtein alignment without transpositions. When several
//! minimal alignments exist, the one with the most substitutions (fewest
//! insertions plus deletions) is reported, which makes the split symmetric:
//! insertions of `(ref, hyp)` equal deletions of `(hyp, ref)`. Corpus scores
//! pool the counts over utterances before dividing.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("reference is empty")]
    EmptyReference,
    #[error("baseline `{0}` has rate {1}, which cannot be normalized against")]
    ZeroBaseline(String, f64),
    #[error("baseline key `{0}` not present")]
    MissingBaselineKey(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorRateReport {
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    pub reference_length: usize,
    pub rate: f64,
}

impl ErrorRateReport {
    fn from_counts(substitutions: usize, insertions: usize, deletions: usize, reference_length: usize) -> Self {
        let errors = substitutions + insertions + deletions;
        Self {
            substitutions,
            insertions,
            deletions,
            reference_length,
            rate: errors as f64 / reference_length as f64,
        }
    }

    pub fn errors(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }
}

/// Minimal edit operations turning `reference` into `hypothesis`.
pub fn edit_rate<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> Result<ErrorRateReport, EvalError> {
    if reference.is_empty() {
        return Err(EvalError::EmptyReference);
    }
    let (cost, indels) = edit_cost(reference, hypothesis);
    let (m, n) = (reference.len() as isize, hypothesis.len() as isize);
    // deletions - insertions = m - n for any alignment.
    let deletions = ((indels as isize + (m - n)) / 2) as usize;
    let insertions = indels - deletions;
    Ok(ErrorRateReport::from_counts(cost - indels, insertions, deletions, reference.len()))
}

/// Lexicographically smallest `(edits, insertions + deletions)`.
fn edit_cost<T: PartialEq>(a: &[T], b: &[T]) -> (usize, usize) {
    let mut prev: Vec<(usize, usize)> = (0..=b.len()).map(|j| (j, j)).collect();
    let mut curr = vec![(0, 0); b.len() + 1];
    for i in 1..=a.len() {
        curr[0] = (i, i);
        for j in 1..=b.len() {
            let (dc, di) = prev[j];
            let (ic, ii) = curr[j - 1];
            let (sc, si) = prev[j - 1];
            let sub = (sc + usize::from(a[i - 1] != b[j - 1]), si);
            curr[j] = sub.min((dc + 1, di + 1)).min((ic + 1, ii + 1));
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    edit_cost(a, b).0
}

/// Divides every rate by the baseline's rate.
pub fn relative_rates(rates: &BTreeMap<String, f64>, baseline_key: &str) -> Result<BTreeMap<String, f64>, EvalError> {
    let base = *rates
        .get(baseline_key)
        .ok_or_else(|| EvalError::MissingBaselineKey(baseline_key.to_string()))?;
    if !(base > 0.0 && base.is_finite()) {
        return Err(EvalError::ZeroBaseline(baseline_key.to_string(), base));
    }
    Ok(rates.iter().map(|(k, &v)| (k.clone(), v / base)).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct UtteranceScore {
    pub id: String,
    #[serde(flatten)]
    pub report: ErrorRateReport,
}

/// Pooled score over a set of utterances.
#[derive(Debug, Clone, Serialize)]
pub struct CorpusScore {
    pub utterances: usize,
    pub pooled: ErrorRateReport,
    pub per_utterance: Vec<UtteranceScore>,
}

/// Scores `utterance_id<TAB>reference<TAB>hypothesis` rows with
/// whitespace-separated tokens.
pub fn score_tsv<R: BufRead>(input: R) -> Result<CorpusScore, EvalError> {
    let mut per_utterance = Vec::new();
    let (mut s, mut i, mut d, mut n) = (0, 0, 0, 0);
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| EvalError::Parse { line: line_no, message: e.to_string() })?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(EvalError::Parse {
                line: line_no,
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        let reference: Vec<&str> = fields[1].split_whitespace().collect();
        let hypothesis: Vec<&str> = fields.get(2).map_or(Vec::new(), |h| h.split_whitespace().collect());
        let report = edit_rate(&reference, &hypothesis).map_err(|e| EvalError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        s += report.substitutions;
        i += report.insertions;
        d += report.deletions;
        n += report.reference_length;
        per_utterance.push(UtteranceScore { id: fields[0].to_string(), report });
    }
    if n == 0 {
        return Err(EvalError::EmptyReference);
    }
    Ok(CorpusScore {
        utterances: per_utterance.len(),
        pooled: ErrorRateReport::from_counts(s, i, d, n),
        per_utterance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_sequences() {
        let r = edit_rate(&["he", "never", "lied"], &["he", "never", "lied"]).unwrap();
        assert_eq!(r.rate, 0.0);
        assert_eq!(r.errors(), 0);
    }

    #[test]
    fn one_substitution() {
        let r = edit_rate(&["he", "never", "lied"], &["he", "never", "shook"]).unwrap();
        assert_eq!((r.substitutions, r.insertions, r.deletions), (1, 0, 0));
        assert_eq!(r.rate, 1.0 / 3.0);
    }

    #[test]
    fn full_deletion_and_empty_reference() {
        let r = edit_rate(&["he", "never", "lied"], &[]).unwrap();
        assert_eq!((r.deletions, r.rate), (3, 1.0));
        assert_eq!(edit_rate::<&str>(&[], &["x"]), Err(EvalError::EmptyReference));
    }

    #[test]
    fn prefers_substitutions_on_ties() {
        let r = edit_rate(&['a', 'b'], &['b', 'a']).unwrap();
        assert_eq!((r.substitutions, r.insertions, r.deletions), (2, 0, 0));
        let r = edit_rate(&['a'], &['b', 'a', 'c']).unwrap();
        assert_eq!((r.substitutions, r.insertions, r.deletions), (0, 2, 0));
    }

    #[test]
    fn relative_normalization() {
        let rates = BTreeMap::from([("base".to_string(), 0.04), ("ours".to_string(), 0.01)]);
        let rel = relative_rates(&rates, "base").unwrap();
        assert_eq!(rel["base"], 1.0);
        assert_eq!(rel["ours"], 0.25);
        let equal = BTreeMap::from([("a".to_string(), 0.3), ("b".to_string(), 0.3)]);
        assert!(relative_rates(&equal, "a").unwrap().values().all(|&v| v == 1.0));
        assert!(matches!(relative_rates(&rates, "nope"), Err(EvalError::MissingBaselineKey(_))));
        let zero = BTreeMap::from([("base".to_string(), 0.0)]);
        assert!(matches!(relative_rates(&zero, "base"), Err(EvalError::ZeroBaseline(..))));
    }

    #[test]
    fn pooled_tsv_score() {
        let tsv = "u1\the never lied\the never shook\nu2\ta b\ta b\nu3\tx y z\t\n";
        let score = score_tsv(tsv.as_bytes()).unwrap();
        assert_eq!(score.utterances, 3);
        assert_eq!(score.pooled.reference_length, 8);
        assert_eq!(score.pooled.errors(), 4);
        assert_eq!(score.pooled.rate, 0.5);
        assert!(matches!(score_tsv("u\t\thyp\n".as_bytes()), Err(EvalError::Parse { line: 1, .. })));
    }
}
