//! Small hand-written corpora and a seeded synthetic corpus generator, used
//! by the test suites, benchmarks and the `synth` subcommand.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alignment::{Alignment, PhonemeEntry};
use crate::corpus::{InputRow, UtteranceRecord};
use crate::features::{write_features, FeatureMatrix, DEFAULT_MEL_BINS};
use crate::treebank::{parse_bracketed, Node, ParseTree};

pub const TOY_HOST_TREE: &str = "(S (NP (PRP He)) (ADVP (RB never)) (VP (VBD lied)))";
pub const TOY_DONOR_TREE: &str = "(S (NP (PRP She)) (VP (VBD shook) (NP (PRP$ her) (NN head))))";

/// Features whose every value encodes `(tag, frame, bin)` exactly.
pub fn tagged_features(tag: u32, n_frames: usize, n_bins: usize) -> FeatureMatrix {
    let values = (0..n_frames)
        .flat_map(|f| (0..n_bins).map(move |b| (tag * 100_000 + f as u32 * 100 + b as u32) as f32))
        .collect();
    FeatureMatrix::new(n_frames, n_bins, values).expect("valid shape")
}

/// Builds a record from a bracketed tree and `(phoneme, word, start, end)` rows.
pub fn record_from_rows(
    id: &str,
    tree: &str,
    rows: &[(&str, usize, usize, usize)],
    features: FeatureMatrix,
) -> UtteranceRecord {
    let entries = rows
        .iter()
        .map(|&(p, w, s, e)| PhonemeEntry { phoneme: p.to_string(), word_index: w, frame_start: s, frame_end: e })
        .collect();
    let alignment = Alignment::new(entries, features.n_frames()).expect("valid toy alignment");
    let tree = parse_bracketed(tree).expect("valid toy tree");
    UtteranceRecord::from_tree(id, tree, alignment, Arc::new(features)).expect("consistent toy record")
}

/// "He never lied": one phoneme per word at frames [0,10), [10,25), [25,40); 45 frames.
pub fn toy_host() -> UtteranceRecord {
    record_from_rows(
        "u1",
        TOY_HOST_TREE,
        &[("HH", 0, 0, 10), ("N", 1, 10, 25), ("L", 2, 25, 40)],
        tagged_features(1, 45, DEFAULT_MEL_BINS),
    )
}

/// "She shook her head": words start at frames 0, 8, 20, 28; 40 frames.
pub fn toy_donor() -> UtteranceRecord {
    record_from_rows(
        "u2",
        TOY_DONOR_TREE,
        &[
            ("SH", 0, 0, 4),
            ("IY", 0, 4, 8),
            ("SH", 1, 8, 12),
            ("UH", 1, 12, 16),
            ("K", 1, 16, 20),
            ("HH", 2, 20, 24),
            ("ER", 2, 24, 28),
            ("HH", 3, 28, 31),
            ("EH", 3, 31, 34),
            ("D", 3, 34, 38),
        ],
        tagged_features(2, 40, DEFAULT_MEL_BINS),
    )
}

pub fn toy_pair() -> Vec<UtteranceRecord> {
    vec![toy_host(), toy_donor()]
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub utterances: usize,
    pub seed: u64,
    pub n_bins: usize,
    /// Phrase nesting limit; deeper expansions fall back to short phrases.
    pub max_depth: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { utterances: 100, seed: 0, n_bins: DEFAULT_MEL_BINS, max_depth: 4 }
    }
}

const DT: &[&str] = &["the", "a", "this", "every", "that"];
const NN: &[&str] = &["dog", "house", "river", "teacher", "window", "garden", "letter", "song", "city", "horse"];
const NNS: &[&str] = &["dogs", "friends", "stories", "trees", "papers"];
const NNP: &[&str] = &["Anna", "Boston", "Peter", "London", "Maria"];
const PRP: &[&str] = &["he", "she", "they", "we", "it"];
const JJ: &[&str] = &["old", "quiet", "bright", "small", "strange", "green"];
const VBD: &[&str] = &["saw", "found", "opened", "painted", "wrote", "heard", "left", "liked"];
const VB: &[&str] = &["see", "find", "open", "paint", "write", "hear"];
const MD: &[&str] = &["could", "would", "might", "should"];
const RB: &[&str] = &["never", "often", "quickly", "again", "slowly"];
const IN: &[&str] = &["in", "near", "with", "under", "behind", "from"];

struct Grammar<'r> {
    rng: &'r mut ChaCha8Rng,
    max_depth: usize,
}

impl Grammar<'_> {
    fn leaf(&mut self, label: &str, vocab: &[&str]) -> Node {
        let token = vocab[self.rng.gen_range(0..vocab.len())].to_string();
        Node::Leaf { label: label.to_string(), token }
    }

    fn phrase(label: &str, children: Vec<Node>) -> Node {
        Node::Phrase { label: label.to_string(), children }
    }

    fn sentence(&mut self) -> Node {
        let mut children = vec![self.np(1), self.vp(1)];
        if self.rng.gen_bool(0.25) {
            children.push(self.pp(1));
        }
        Self::phrase("S", children)
    }

    fn np(&mut self, depth: usize) -> Node {
        let deep = depth < self.max_depth;
        let roll: f64 = self.rng.gen();
        let children = if roll < 0.2 {
            vec![self.leaf("PRP", PRP)]
        } else if roll < 0.3 {
            vec![self.leaf("NNP", NNP)]
        } else if roll < 0.4 {
            vec![self.leaf("NNS", NNS)]
        } else if roll < 0.65 || !deep {
            vec![self.leaf("DT", DT), self.leaf("NN", NN)]
        } else if roll < 0.85 {
            vec![self.leaf("DT", DT), self.leaf("JJ", JJ), self.leaf("NN", NN)]
        } else {
            vec![self.np(depth + 1), self.pp(depth + 1)]
        };
        Self::phrase("NP", children)
    }

    fn vp(&mut self, depth: usize) -> Node {
        let deep = depth < self.max_depth;
        let roll: f64 = self.rng.gen();
        let children = if roll < 0.15 || !deep {
            vec![self.leaf("VBD", VBD)]
        } else if roll < 0.5 {
            vec![self.leaf("VBD", VBD), self.np(depth + 1)]
        } else if roll < 0.65 {
            vec![self.leaf("VBD", VBD), self.np(depth + 1), self.pp(depth + 1)]
        } else if roll < 0.75 {
            vec![self.leaf("VBD", VBD), Self::phrase("ADVP", vec![self.leaf("RB", RB)])]
        } else if roll < 0.88 {
            let inner = Self::phrase("VP", vec![self.leaf("VB", VB), self.np(depth + 2)]);
            vec![self.leaf("MD", MD), inner]
        } else {
            vec![self.leaf("VBD", VBD), self.pp(depth + 1)]
        };
        Self::phrase("VP", children)
    }

    fn pp(&mut self, depth: usize) -> Node {
        let np = self.np(depth + 1);
        Self::phrase("PP", vec![self.leaf("IN", IN), np])
    }
}

/// Pseudo-phonemes: the word's letters in upper-case pairs.
fn pseudo_phonemes(word: &str) -> Vec<String> {
    let chars: Vec<char> = word.to_uppercase().chars().collect();
    chars.chunks(2).take(4).map(|c| c.iter().collect()).collect()
}

/// Generates `cfg.utterances` records with random parses, alignments with
/// variable silences, and random feature values. Deterministic in `cfg.seed`.
pub fn synthetic_corpus(cfg: &SynthConfig) -> Vec<UtteranceRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.utterances)
        .map(|i| synthetic_record(&format!("syn{i:05}"), cfg, &mut rng))
        .collect()
}

fn synthetic_record(id: &str, cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> UtteranceRecord {
    let root = Grammar { rng, max_depth: cfg.max_depth.max(1) }.sentence();
    let tree = ParseTree::new(root).expect("generated tree is valid");

    let mut entries = Vec::new();
    let mut frame = rng.gen_range(0..6);
    for (w, token) in tree.leaf_token_refs().iter().enumerate() {
        for p in pseudo_phonemes(token) {
            let len = rng.gen_range(2..9);
            entries.push(PhonemeEntry { phoneme: p, word_index: w, frame_start: frame, frame_end: frame + len });
            frame += len;
        }
        if rng.gen_bool(0.3) {
            frame += rng.gen_range(1..7);
        }
    }
    let total = frame + rng.gen_range(0..8);
    let values = (0..total * cfg.n_bins).map(|_| rng.gen_range(-4.0f32..4.0)).collect();
    let features = FeatureMatrix::new(total, cfg.n_bins, values).expect("valid shape");
    let alignment = Alignment::new(entries, total).expect("generated alignment is valid");
    UtteranceRecord::from_tree(id, tree, alignment, Arc::new(features)).expect("consistent record")
}

/// Writes records as a loadable corpus: `manifest.jsonl`, `align/<id>.tsv`
/// and `feats/<id>.melf`. Returns the manifest path.
pub fn write_corpus(dir: &Path, records: &[UtteranceRecord]) -> io::Result<PathBuf> {
    fs::create_dir_all(dir.join("align"))?;
    fs::create_dir_all(dir.join("feats"))?;
    let manifest_path = dir.join("manifest.jsonl");
    let mut manifest = io::BufWriter::new(fs::File::create(&manifest_path)?);
    for r in records {
        let alignment = format!("align/{}.tsv", r.id());
        let features = format!("feats/{}.melf", r.id());
        fs::write(dir.join(&alignment), r.alignment().to_tsv())?;
        let mut f = io::BufWriter::new(fs::File::create(dir.join(&features))?);
        write_features(r.features(), &mut f).map_err(io::Error::other)?;
        f.flush()?;
        let row = InputRow {
            id: r.id().to_string(),
            tokens: r.tokens().to_vec(),
            tree: r.tree().to_bracketed(),
            alignment,
            features,
            frame_shift_ms: Some(r.features().frame_shift_ms()),
        };
        writeln!(manifest, "{}", serde_json::to_string(&row).map_err(io::Error::other)?)?;
    }
    manifest.flush()?;
    Ok(manifest_path)
}
