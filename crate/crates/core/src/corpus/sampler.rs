//! The augmentation universe and reproducible draws from it.
//!
//! The universe is the ordered list of `(host, host constituent, donor, donor
//! constituent)` tuples with equal labels, ordered by host id, host
//! constituent, donor id, donor constituent. Tuple `i` is reachable by index
//! arithmetic, so random mode samples uniformly over tuples rather than over
//! utterance pairs.

use std::collections::HashSet;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::splice::{build_augmented, substitute_text, AugmentedExample};
use crate::treebank::{Constituent, ConstituentPolicy};

use super::{Corpus, CorpusError, EntryRef, UtteranceRecord};

/// Rejections allowed per universe tuple before random sampling gives up.
const REJECTION_FACTOR: u64 = 10;

/// Tuples built per parallel batch.
const BATCH: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleMode {
    #[default]
    Random,
    Exhaustive,
}

impl FromStr for SampleMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(SampleMode::Random),
            "exhaustive" => Ok(SampleMode::Exhaustive),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

impl fmt::Display for SampleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SampleMode::Random => "random",
            SampleMode::Exhaustive => "exhaustive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleSpec {
    /// Number of examples to accept in random mode; exhaustive mode ignores it.
    pub target_count: usize,
    pub seed: u64,
    pub policy: ConstituentPolicy,
    /// Reject examples whose tokens equal an original or an earlier example.
    pub dedupe: bool,
    pub mode: SampleMode,
    /// Let host and donor be the same utterance (distinct nodes only).
    pub allow_self_pairs: bool,
}

/// Indices of one universe tuple into a [`Corpus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairTuple {
    pub host: usize,
    pub host_constituent: usize,
    pub donor: usize,
    pub donor_constituent: usize,
}

impl Corpus {
    pub fn resolve(&self, t: &PairTuple) -> (&UtteranceRecord, &Constituent, &UtteranceRecord, &Constituent) {
        (
            &self.records()[t.host],
            &self.constituents(t.host)[t.host_constituent],
            &self.records()[t.donor],
            &self.constituents(t.donor)[t.donor_constituent],
        )
    }

    pub fn build(&self, t: &PairTuple) -> Result<AugmentedExample, CorpusError> {
        let (h, hc, d, dc) = self.resolve(t);
        Ok(build_augmented(h, hc, d, dc)?)
    }

    fn tokens_of(&self, t: &PairTuple) -> Vec<String> {
        let (h, hc, d, dc) = self.resolve(t);
        substitute_text(h.tokens(), hc.span, d.tokens(), dc.span).expect("indexed spans are valid")
    }
}

/// Index over every valid tuple of a corpus.
#[derive(Debug, Clone)]
pub struct PairUniverse {
    corpus: Corpus,
    allow_self_pairs: bool,
    hosts: Vec<EntryRef>,
    /// `offsets[i]` is the universe index of host entry `i`'s first tuple.
    offsets: Vec<u64>,
}

impl PairUniverse {
    pub fn new(corpus: &Corpus, allow_self_pairs: bool) -> Self {
        let mut hosts = Vec::new();
        let mut offsets = vec![0u64];
        let mut total = 0u64;
        for r in 0..corpus.len() {
            for (c, constituent) in corpus.constituents(r).iter().enumerate() {
                let list = corpus.label_list(&constituent.label);
                let excluded = excluded_range(list, (r, c), allow_self_pairs);
                total += (list.len() - excluded.len()) as u64;
                hosts.push((r, c));
                offsets.push(total);
            }
        }
        Self { corpus: corpus.clone(), allow_self_pairs, hosts, offsets }
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn len(&self) -> u64 {
        *self.offsets.last().expect("offsets start with 0")
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn donor_at(&self, host_pos: usize, k: u64) -> PairTuple {
        let (r, c) = self.hosts[host_pos];
        let label = &self.corpus.constituents(r)[c].label;
        let list = self.corpus.label_list(label);
        let excluded = excluded_range(list, (r, c), self.allow_self_pairs);
        let k = k as usize;
        let (dr, dc) = if k < excluded.start { list[k] } else { list[k + excluded.len()] };
        PairTuple { host: r, host_constituent: c, donor: dr, donor_constituent: dc }
    }

    /// The `idx`-th tuple in enumeration order.
    pub fn tuple_at(&self, idx: u64) -> Option<PairTuple> {
        if idx >= self.len() {
            return None;
        }
        let host_pos = self.offsets.partition_point(|&o| o <= idx) - 1;
        Some(self.donor_at(host_pos, idx - self.offsets[host_pos]))
    }

    pub fn iter(&self) -> Pairs<'_> {
        Pairs { universe: self, host_pos: 0, k: 0 }
    }
}

/// Entries of `list` that may not serve as donor for `host`: the host node
/// itself, or every node of the host's record when self-pairing is off.
fn excluded_range(list: &[EntryRef], host: EntryRef, allow_self_pairs: bool) -> Range<usize> {
    if allow_self_pairs {
        let p = list.binary_search(&host).expect("host is indexed under its own label");
        p..p + 1
    } else {
        let lo = list.partition_point(|e| e.0 < host.0);
        let hi = list.partition_point(|e| e.0 <= host.0);
        lo..hi
    }
}

/// Sequential walk over a [`PairUniverse`].
pub struct Pairs<'a> {
    universe: &'a PairUniverse,
    host_pos: usize,
    k: u64,
}

impl Iterator for Pairs<'_> {
    type Item = PairTuple;

    fn next(&mut self) -> Option<PairTuple> {
        let u = self.universe;
        while self.host_pos < u.hosts.len() {
            let count = u.offsets[self.host_pos + 1] - u.offsets[self.host_pos];
            if self.k < count {
                let t = u.donor_at(self.host_pos, self.k);
                self.k += 1;
                return Some(t);
            }
            self.host_pos += 1;
            self.k = 0;
        }
        None
    }
}

/// Every valid tuple under `policy`, in enumeration order.
pub fn enumerate_pairs(corpus: &Corpus, policy: &ConstituentPolicy, allow_self_pairs: bool) -> Vec<PairTuple> {
    let universe = PairUniverse::new(&corpus.with_policy(policy.clone()), allow_self_pairs);
    universe.iter().collect()
}

/// Selects tuples according to a [`SampleSpec`] without building examples.
pub struct TupleSampler {
    universe: PairUniverse,
    spec: SampleSpec,
    rng: ChaCha8Rng,
    seen: HashSet<Vec<String>>,
    next_exhaustive: u64,
    accepted: usize,
    rejections: u64,
    failed: bool,
}

impl TupleSampler {
    pub fn new(corpus: &Corpus, spec: SampleSpec) -> Self {
        let corpus = corpus.with_policy(spec.policy.clone());
        let universe = PairUniverse::new(&corpus, spec.allow_self_pairs);
        let seen = if spec.dedupe {
            corpus.records().iter().map(|r| r.tokens().to_vec()).collect()
        } else {
            HashSet::new()
        };
        Self {
            universe,
            rng: ChaCha8Rng::seed_from_u64(spec.seed),
            spec,
            seen,
            next_exhaustive: 0,
            accepted: 0,
            rejections: 0,
            failed: false,
        }
    }

    pub fn universe(&self) -> &PairUniverse {
        &self.universe
    }

    pub fn corpus(&self) -> &Corpus {
        self.universe.corpus()
    }

    fn is_new(&mut self, t: &PairTuple) -> bool {
        !self.spec.dedupe || self.seen.insert(self.universe.corpus().tokens_of(t))
    }

    fn next_random(&mut self) -> Option<Result<PairTuple, CorpusError>> {
        let size = self.universe.len();
        let limit = size.saturating_mul(REJECTION_FACTOR);
        while self.accepted < self.spec.target_count {
            if size == 0 || self.rejections > limit {
                self.failed = true;
                return Some(Err(CorpusError::ExhaustedUniverse {
                    target: self.spec.target_count,
                    accepted: self.accepted,
                    rejections: self.rejections,
                }));
            }
            let idx = self.rng.gen_range(0..size);
            let t = self.universe.tuple_at(idx).expect("index below universe size");
            if self.is_new(&t) {
                self.accepted += 1;
                return Some(Ok(t));
            }
            self.rejections += 1;
        }
        None
    }

    fn next_exhaustive(&mut self) -> Option<Result<PairTuple, CorpusError>> {
        while let Some(t) = self.universe.tuple_at(self.next_exhaustive) {
            self.next_exhaustive += 1;
            if self.is_new(&t) {
                self.accepted += 1;
                return Some(Ok(t));
            }
            self.rejections += 1;
        }
        None
    }
}

impl Iterator for TupleSampler {
    type Item = Result<PairTuple, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        match self.spec.mode {
            SampleMode::Random => self.next_random(),
            SampleMode::Exhaustive => self.next_exhaustive(),
        }
    }
}

/// Stream of augmented examples; a pure function of corpus and spec.
pub struct AugmentStream {
    tuples: TupleSampler,
}

impl AugmentStream {
    pub fn corpus(&self) -> &Corpus {
        self.tuples.corpus()
    }

    /// Builds examples on `workers` threads in fixed-size batches and hands
    /// them to `sink` in draw order, so output does not depend on `workers`.
    pub fn for_each_parallel<E, F>(self, workers: usize, mut sink: F) -> Result<(), E>
    where
        E: From<CorpusError> + Send,
        F: FnMut(AugmentedExample) -> Result<(), E>,
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .expect("thread pool");
        let corpus = self.tuples.corpus().clone();
        let mut tuples = self.tuples;
        loop {
            let batch: Vec<PairTuple> = tuples.by_ref().take(BATCH).collect::<Result<_, _>>()?;
            if batch.is_empty() {
                return Ok(());
            }
            let built: Vec<Result<AugmentedExample, CorpusError>> =
                pool.install(|| batch.par_iter().map(|t| corpus.build(t)).collect());
            for example in built {
                sink(example?)?;
            }
        }
    }
}

impl Iterator for AugmentStream {
    type Item = Result<AugmentedExample, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        let t = match self.tuples.next()? {
            Ok(t) => t,
            Err(e) => return Some(Err(e)),
        };
        Some(self.tuples.corpus().build(&t))
    }
}

pub fn sample_augmented(corpus: &Corpus, spec: SampleSpec) -> AugmentStream {
    AugmentStream { tuples: TupleSampler::new(corpus, spec) }
}
