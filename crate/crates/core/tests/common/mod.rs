//! Independent reference implementations used to check the library.
#![allow(dead_code)]

use syntaxsplice::treebank::{normalize_label, Node};
use syntaxsplice::{ConstituentPolicy, ParseTree, Span, UtteranceRecord};

/// `(label, span, is_preterminal)` for every node, found by a separate walk.
pub fn all_nodes(tree: &ParseTree) -> Vec<(String, Span, bool)> {
    fn walk(node: &Node, start: &mut usize, out: &mut Vec<(String, Span, bool)>) {
        let slot = out.len();
        let begin = *start;
        out.push((node.label().to_string(), Span::new(0, 0), false));
        match node {
            Node::Leaf { .. } => *start += 1,
            Node::Phrase { children, .. } => {
                for c in children {
                    walk(c, start, out);
                }
            }
        }
        out[slot].1 = Span::new(begin, *start);
        out[slot].2 = matches!(node, Node::Leaf { .. });
    }
    let mut out = Vec::new();
    walk(tree.root(), &mut 0, &mut out);
    out
}

pub fn naive_constituents(tree: &ParseTree, policy: &ConstituentPolicy) -> Vec<(String, Span)> {
    let n = tree.leaf_tokens().len();
    all_nodes(tree)
        .into_iter()
        .filter(|(_, _, leaf)| policy.include_preterminals || !leaf)
        .filter(|(_, span, _)| !(policy.exclude_full_span && span.start == 0 && span.end == n))
        .filter(|(_, span, _)| span.end - span.start >= policy.min_words)
        .filter(|(_, span, _)| policy.max_words.is_none_or(|m| span.end - span.start <= m))
        .map(|(label, span, _)| {
            let label = if policy.normalize_labels { normalize_label(&label).to_string() } else { label };
            (label, span)
        })
        .filter(|(label, _)| policy.label_allowlist.as_ref().is_none_or(|a| a.contains(label)))
        .collect()
}

/// `(host id, host span, donor id, donor span, label)` for every pair of
/// distinct records and every pair of equal-label constituents.
pub fn naive_pairs(records: &[UtteranceRecord], policy: &ConstituentPolicy) -> Vec<(String, Span, String, Span, String)> {
    let mut out = Vec::new();
    for h in records {
        for d in records {
            if h.id() == d.id() {
                continue;
            }
            for (hl, hs) in naive_constituents(h.tree(), policy) {
                for (dl, ds) in naive_constituents(d.tree(), policy) {
                    if hl == dl {
                        out.push((h.id().to_string(), hs, d.id().to_string(), ds, hl.clone()));
                    }
                }
            }
        }
    }
    out.sort();
    out
}

/// Plain exponential recursion over suffixes.
pub fn brute_edit<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    match (a.split_first(), b.split_first()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((x, ar)), Some((y, br))) => {
            let sub = brute_edit(ar, br) + usize::from(x != y);
            let del = brute_edit(ar, b) + 1;
            let ins = brute_edit(a, br) + 1;
            sub.min(del).min(ins)
        }
    }
}

/// Same recursion, memoized on suffix lengths, for exhaustive sweeps.
pub fn memo_edit<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    fn go<T: PartialEq>(a: &[T], b: &[T], i: usize, j: usize, memo: &mut Vec<Vec<Option<usize>>>) -> usize {
        if let Some(v) = memo[i][j] {
            return v;
        }
        let v = if i == a.len() {
            b.len() - j
        } else if j == b.len() {
            a.len() - i
        } else {
            let sub = go(a, b, i + 1, j + 1, memo) + usize::from(a[i] != b[j]);
            let del = go(a, b, i + 1, j, memo) + 1;
            let ins = go(a, b, i, j + 1, memo) + 1;
            sub.min(del).min(ins)
        };
        memo[i][j] = Some(v);
        v
    }
    let mut memo = vec![vec![None; b.len() + 1]; a.len() + 1];
    go(a, b, 0, 0, &mut memo)
}

/// Frame count of a splice computed from word onsets alone.
pub fn expected_frames(host: &UtteranceRecord, hs: Span, donor: &UtteranceRecord, ds: Span) -> (usize, usize, usize) {
    let onset = |r: &UtteranceRecord, w: usize| {
        r.alignment()
            .entries()
            .iter()
            .find(|e| e.word_index == w)
            .map_or(r.alignment().total_frames(), |e| e.frame_start)
    };
    let n = host.tokens().len();
    let prefix = onset(host, hs.start);
    let insert = onset(donor, ds.end) - onset(donor, ds.start);
    let suffix = if hs.end < n { host.alignment().total_frames() - onset(host, hs.end) } else { 0 };
    (prefix, insert, suffix)
}

/// All sequences over `alphabet` of length at most `max_len`.
pub fn all_sequences(alphabet: &[u8], max_len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for &c in alphabet {
                let mut t: Vec<u8> = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}
