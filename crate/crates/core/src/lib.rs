//! Text-to-speech corpus augmentation by constituency-subtree substitution.
//!
//! Given utterances with a constituency parse, a phoneme alignment and a
//! mel feature matrix, a new example is built from exactly two originals:
//! one labelled constituent of the host is replaced by a constituent with
//! the same label from the donor, and the aligned feature frames are
//! spliced accordingly. Every phoneme that directly follows an audio joint
//! is marked with a joint tag so a downstream model can condition on it.

pub mod alignment;
pub mod cli;
pub mod corpus;
pub mod evalkit;
pub mod features;
pub mod splice;
pub mod stats;
pub mod synth;
pub mod treebank;

pub use alignment::{Alignment, AlignmentError, PhonemeEntry};
pub use corpus::{
    export_dataset, load_corpus, load_corpus_file, Corpus, CorpusError, ExportError,
    ExportReport, Exporter, PairTuple, SampleMode, SampleSpec, UtteranceRecord, sample_augmented,
};
pub use evalkit::{edit_rate, relative_rates, ErrorRateReport, EvalError};
pub use features::{concat_segments, read_features, write_features, FeatureError, FeatureMatrix};
pub use splice::{build_augmented, find_matches, substitute_text, AugmentedExample, Provenance, SpliceError};
pub use stats::{constituent_length_histograms, render_report, LengthHistogram, ReportFormat};
pub use treebank::{parse_bracketed, Constituent, ConstituentPolicy, ParseTree, Span, TreeError};
