//! Length distributions of the constituents used to build a dataset.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufRead;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{ManifestRow, Origin};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("augmented row `{id}` has no provenance")]
    MissingProvenance { id: String },
    #[error("manifest line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HistogramKind {
    /// Lengths of donor constituents inserted into hosts.
    Inserted,
    /// Lengths of host constituents that were replaced.
    Removed,
}

/// Counts keyed by constituent length in words.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LengthHistogram {
    pub kind: HistogramKind,
    pub total: u64,
    pub counts: BTreeMap<usize, u64>,
}

impl LengthHistogram {
    pub fn new(kind: HistogramKind) -> Self {
        Self { kind, total: 0, counts: BTreeMap::new() }
    }

    pub fn add(&mut self, len: usize) {
        *self.counts.entry(len).or_default() += 1;
        self.total += 1;
    }

    /// Folds a partial histogram of the same kind into this one.
    pub fn merge(&mut self, other: &LengthHistogram) {
        debug_assert_eq!(self.kind, other.kind);
        for (&len, &n) in &other.counts {
            *self.counts.entry(len).or_default() += n;
        }
        self.total += other.total;
    }

    /// Fraction of the mass on lengths in `[lo, hi]`; 0 for an empty histogram.
    pub fn mass_between(&self, lo: usize, hi: usize) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let n: u64 = self.counts.range(lo..=hi).map(|(_, &n)| n).sum();
        n as f64 / self.total as f64
    }
}

/// Inserted and removed length histograms over augmented rows; original
/// rows are skipped.
pub fn constituent_length_histograms<'a, I>(rows: I) -> Result<(LengthHistogram, LengthHistogram), StatsError>
where
    I: IntoIterator<Item = &'a ManifestRow>,
{
    let mut inserted = LengthHistogram::new(HistogramKind::Inserted);
    let mut removed = LengthHistogram::new(HistogramKind::Removed);
    for row in rows {
        if row.origin == Origin::Original {
            continue;
        }
        let p = row
            .provenance
            .as_ref()
            .ok_or_else(|| StatsError::MissingProvenance { id: row.id.clone() })?;
        inserted.add(p.donor_span.len());
        removed.add(p.host_span.len());
    }
    Ok((inserted, removed))
}

/// Streams an exported manifest into histograms without holding all rows.
pub fn histograms_from_manifest<R: BufRead>(manifest: R) -> Result<(LengthHistogram, LengthHistogram), StatsError> {
    let mut inserted = LengthHistogram::new(HistogramKind::Inserted);
    let mut removed = LengthHistogram::new(HistogramKind::Removed);
    for (idx, line) in manifest.lines().enumerate() {
        let parse_err = |message: String| StatsError::Parse { line: idx + 1, message };
        let line = line.map_err(|e| parse_err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: ManifestRow = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        let (i, r) = constituent_length_histograms([&row])?;
        inserted.merge(&i);
        removed.merge(&r);
    }
    Ok((inserted, removed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Tsv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tsv" => Ok(ReportFormat::Tsv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format `{other}`")),
        }
    }
}

/// `length<TAB>count` lines, or a JSON object `{"length": count}`, sorted by length.
pub fn render_report(hist: &LengthHistogram, format: ReportFormat) -> String {
    match format {
        ReportFormat::Tsv => {
            let mut out = String::new();
            for (len, n) in &hist.counts {
                let _ = writeln!(out, "{len}\t{n}");
            }
            out
        }
        ReportFormat::Json => serde_json::to_string(&hist.counts).expect("counts serialize"),
    }
}

/// Both histograms in one document. TSV rows are `kind<TAB>length<TAB>count`.
pub fn render_pair(inserted: &LengthHistogram, removed: &LengthHistogram, format: ReportFormat) -> String {
    match format {
        ReportFormat::Tsv => {
            let mut out = String::new();
            for (name, h) in [("inserted", inserted), ("removed", removed)] {
                for (len, n) in &h.counts {
                    let _ = writeln!(out, "{name}\t{len}\t{n}");
                }
            }
            out
        }
        ReportFormat::Json => {
            let doc = serde_json::json!({
                "inserted": { "total": inserted.total, "counts": inserted.counts },
                "removed": { "total": removed.total, "counts": removed.counts },
            });
            doc.to_string()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splice::Provenance;
    use crate::treebank::Span;

    fn row(origin: Origin, spans: Option<(Span, Span)>) -> ManifestRow {
        ManifestRow {
            id: "r".into(),
            origin,
            tokens: vec![],
            phonemes: vec![],
            joint_tags: vec![],
            features: String::new(),
            provenance: spans.map(|(h, d)| Provenance {
                host_id: "a".into(),
                donor_id: "b".into(),
                host_span: h,
                donor_span: d,
                label: "NP".into(),
            }),
        }
    }

    #[test]
    fn skips_original_rows() {
        let rows = [row(Origin::Original, None)];
        let (i, r) = constituent_length_histograms(&rows).unwrap();
        assert_eq!((i.total, r.total), (0, 0));
        let (i, _) = constituent_length_histograms(&[]).unwrap();
        assert!(i.counts.is_empty());
    }

    #[test]
    fn counts_both_kinds() {
        let rows = [
            row(Origin::Augmented, Some((Span::new(2, 3), Span::new(1, 4)))),
            row(Origin::Augmented, Some((Span::new(0, 1), Span::new(2, 3)))),
        ];
        let (i, r) = constituent_length_histograms(&rows).unwrap();
        assert_eq!(i.counts, BTreeMap::from([(1, 1), (3, 1)]));
        assert_eq!(r.counts, BTreeMap::from([(1, 2)]));
        assert_eq!(i.total, 2);
    }

    #[test]
    fn missing_provenance() {
        let rows = [row(Origin::Augmented, None)];
        assert!(matches!(constituent_length_histograms(&rows), Err(StatsError::MissingProvenance { .. })));
    }

    #[test]
    fn render_formats() {
        let mut h = LengthHistogram::new(HistogramKind::Inserted);
        for _ in 0..8 {
            h.add(1);
        }
        h.add(3);
        h.add(3);
        assert_eq!(render_report(&h, ReportFormat::Tsv), "1\t8\n3\t2\n");
        let empty = LengthHistogram::new(HistogramKind::Inserted);
        assert_eq!(render_report(&empty, ReportFormat::Json), "{}");
        assert_eq!(empty.total, 0);
        let mut five = LengthHistogram::new(HistogramKind::Removed);
        (0..5).for_each(|_| five.add(2));
        assert_eq!(render_report(&five, ReportFormat::Json), r#"{"2":5}"#);
    }

    #[test]
    fn keys_sort_numerically() {
        let mut h = LengthHistogram::new(HistogramKind::Inserted);
        h.add(10);
        h.add(2);
        assert_eq!(render_report(&h, ReportFormat::Tsv), "2\t1\n10\t1\n");
        assert_eq!(render_report(&h, ReportFormat::Json), r#"{"2":1,"10":1}"#);
    }

    #[test]
    fn merge_partials() {
        let mut a = LengthHistogram::new(HistogramKind::Inserted);
        let mut b = LengthHistogram::new(HistogramKind::Inserted);
        a.add(1);
        b.add(1);
        b.add(4);
        a.merge(&b);
        assert_eq!(a.total, 3);
        assert_eq!(a.counts, BTreeMap::from([(1, 2), (4, 1)]));
        assert!((a.mass_between(1, 3) - 2.0 / 3.0).abs() < 1e-12);
    }
}
