//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any fails.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::panic;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use syntaxsplice::corpus::enumerate_pairs;
use syntaxsplice::stats::HistogramKind;
use syntaxsplice::synth::{synthetic_corpus, toy_donor, toy_host, toy_pair, write_corpus, SynthConfig};
use syntaxsplice::{
    build_augmented, edit_rate, find_matches, read_features, relative_rates, sample_augmented, substitute_text,
    write_features, ConstituentPolicy, Corpus, ExportError, Exporter, FeatureMatrix, LengthHistogram, SampleMode,
    SampleSpec,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn synth(utterances: usize, seed: u64, n_bins: usize) -> Corpus {
    let records = synthetic_corpus(&SynthConfig { utterances, seed, n_bins, ..Default::default() });
    Corpus::from_records(records, ConstituentPolicy::default()).expect("synthetic corpus loads")
}

fn golden_vp_substitution() -> Outcome {
    let (host, donor) = (toy_host(), toy_donor());
    let policy = ConstituentPolicy::default();
    let matches = find_matches(host.tree(), donor.tree(), &policy);
    let (hc, dc) = matches
        .iter()
        .find(|(h, _)| h.label == "VP")
        .ok_or("no VP match")?;
    let text = substitute_text(host.tokens(), hc.span, donor.tokens(), dc.span).map_err(|e| e.to_string())?;
    check(text == ["He", "never", "shook", "her", "head"], || format!("tokens {text:?}"))?;
    let ex = build_augmented(&host, hc, &donor, dc).map_err(|e| e.to_string())?;
    check(ex.tokens == text, || format!("augmented tokens {:?}", ex.tokens))?;
    Ok(text.join(" "))
}

fn enumeration_oracle() -> Outcome {
    let policy = ConstituentPolicy::default();
    let toy = Corpus::from_records(toy_pair(), policy.clone()).map_err(|e| e.to_string())?;
    let exhaustive = SampleSpec { mode: SampleMode::Exhaustive, ..Default::default() };
    let n_toy = sample_augmented(&toy, exhaustive.clone()).collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?.len();
    check(n_toy == 10, || format!("toy corpus gave {n_toy} examples"))?;

    let as_rows = |corpus: &Corpus| {
        let mut rows: Vec<_> = enumerate_pairs(corpus, &policy, false)
            .iter()
            .map(|t| {
                let (h, hc, d, dc) = corpus.resolve(t);
                (h.id().to_string(), hc.span, d.id().to_string(), dc.span, hc.label.clone())
            })
            .collect();
        rows.sort();
        rows
    };
    check(as_rows(&toy) == common::naive_pairs(toy.records(), &policy), || "toy corpus differs from oracle".into())?;

    let mut checked = 0;
    for seed in 0..40u64 {
        let n = 1 + (seed as usize * 7) % 20;
        let corpus = synth(n, seed, 2);
        let oracle = common::naive_pairs(corpus.records(), &policy);
        let got = as_rows(&corpus);
        check(got == oracle, || format!("seed {seed}: {} tuples vs oracle {}", got.len(), oracle.len()))?;
        let streamed = sample_augmented(&corpus, exhaustive.clone()).count();
        check(streamed == oracle.len(), || format!("seed {seed}: exhaustive stream gave {streamed}"))?;
        checked += oracle.len();
    }
    Ok(format!("toy = 10; 40 random corpora, {checked} tuples"))
}

fn identity_invariance() -> Outcome {
    let corpus = synth(100, 21, 80);
    for r in corpus.records() {
        let root = r.tree().root_constituent();
        let ex = build_augmented(r, &root, r, &root).map_err(|e| e.to_string())?;
        check(ex.features.bit_eq(r.features()), || format!("{}: features differ", r.id()))?;
        check(ex.joint_tags.iter().all(|&t| t == 0), || format!("{}: tags {:?}", r.id(), ex.joint_tags))?;
        check(ex.tokens == r.tokens(), || format!("{}: tokens differ", r.id()))?;
        check(ex.phonemes == r.phonemes(), || format!("{}: phonemes differ", r.id()))?;
    }
    Ok("100 records".into())
}

fn conservation() -> Outcome {
    let corpus = synth(150, 5, 16);
    let spec = SampleSpec { target_count: 1000, seed: 99, ..Default::default() };
    let mut n = 0;
    for ex in sample_augmented(&corpus, spec) {
        let ex = ex.map_err(|e| e.to_string())?;
        let p = &ex.provenance;
        let host = corpus.get(&p.host_id).ok_or("unknown host")?;
        let donor = corpus.get(&p.donor_id).ok_or("unknown donor")?;
        let (pre, ins, suf) = common::expected_frames(host, p.host_span, donor, p.donor_span);
        check(ex.features.n_frames() == pre + ins + suf, || format!("{p:?}: {} frames", ex.features.n_frames()))?;
        check(ex.joint_tags.len() == ex.phonemes.len(), || format!("{p:?}: tag/phoneme length"))?;
        let tags: usize = ex.joint_tags.iter().map(|&t| t as usize).sum();
        check(tags <= 2, || format!("{p:?}: {tags} joint tags"))?;
        let count = |r: &syntaxsplice::UtteranceRecord, lo: usize, hi: usize| {
            r.alignment().entries().iter().filter(|e| (lo..hi).contains(&e.word_index)).count()
        };
        let expected_phones = count(host, 0, p.host_span.start)
            + count(donor, p.donor_span.start, p.donor_span.end)
            + count(host, p.host_span.end, usize::MAX);
        check(ex.phonemes.len() == expected_phones, || format!("{p:?}: phoneme count"))?;
        n += 1;
    }
    check(n == 1000, || format!("only {n} examples"))?;
    Ok("1000 examples".into())
}

fn digest_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, Sha256::digest(fs::read(&path).unwrap()).to_vec());
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let records = synthetic_corpus(&SynthConfig { utterances: 60, seed: 8, ..Default::default() });
    let manifest = write_corpus(&tmp.path().join("corpus"), &records).map_err(|e| e.to_string())?;
    let mut digests = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_syntaxsplice"))
            .args(["augment", "--mode", "random", "--count", "1000", "--seed", "7", "--manifest"])
            .arg(&manifest)
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        check(status.status.success(), || String::from_utf8_lossy(&status.stderr).into_owned())?;
        digests.push(digest_tree(&out));
    }
    check(digests[0].len() == 1061, || format!("{} files", digests[0].len()))?;
    check(digests[0] == digests[1], || "outputs differ".into())?;
    Ok(format!("{} files hash-identical", digests[0].len()))
}

fn melf_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..100 {
        let n_frames = if i == 0 { 0 } else { rng.gen_range(0..200) };
        let n_bins = rng.gen_range(1..128);
        let values = (0..n_frames * n_bins).map(|_| f32::from_bits(rng.gen::<u32>() & 0xbf7f_ffff)).collect();
        let m = FeatureMatrix::new(n_frames, n_bins, values).map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        let written = write_features(&m, &mut buf).map_err(|e| e.to_string())?;
        check(written == buf.len() && buf.len() == 16 + 4 * n_frames * n_bins, || format!("matrix {i}: size"))?;
        let back = read_features(buf.as_slice()).map_err(|e| e.to_string())?;
        check(back.bit_eq(&m), || format!("matrix {i}: values differ"))?;
    }
    Ok("100 matrices incl. 0 frames".into())
}

fn short_insertions() -> Outcome {
    let corpus = synth(200, 2024, 4);
    let spec = SampleSpec { target_count: 5000, seed: 1, ..Default::default() };
    let mut hist = LengthHistogram::new(HistogramKind::Inserted);
    for t in syntaxsplice::corpus::TupleSampler::new(&corpus, spec) {
        let t = t.map_err(|e| e.to_string())?;
        hist.add(corpus.resolve(&t).3.span.len());
    }
    let share = hist.mass_between(1, 3);
    check(share >= 0.60, || format!("mass on 1-3 words is {share:.3}"))?;
    Ok(format!("mass on 1-3 words = {share:.3}"))
}

fn eval_oracle() -> Outcome {
    let seqs = common::all_sequences(&[0, 1, 2], 6);
    let mut pairs = 0u64;
    for r in seqs.iter().filter(|s| !s.is_empty()) {
        for h in &seqs {
            let report = edit_rate(r, h).map_err(|e| e.to_string())?;
            let expected = common::memo_edit(r, h);
            check(report.errors() == expected, || format!("{r:?} vs {h:?}: {} != {expected}", report.errors()))?;
            check(r.len() + report.insertions - report.deletions == h.len(), || format!("{r:?} vs {h:?}: bad split"))?;
            if r.len() <= 4 && h.len() <= 4 {
                check(expected == common::brute_edit(r, h), || format!("{r:?} vs {h:?}: memo != brute"))?;
            }
            pairs += 1;
        }
    }
    let rates: BTreeMap<String, f64> = [("base".to_string(), 0.137), ("aug".to_string(), 0.121)].into();
    let rel = relative_rates(&rates, "base").map_err(|e| e.to_string())?;
    check(rel["base"] == 1.0, || format!("baseline maps to {}", rel["base"]))?;
    Ok(format!("{pairs} pairs"))
}

fn throughput() -> Outcome {
    let corpus = synth(1000, 77, 80);
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let target = 20_000;
    let spec = SampleSpec { target_count: target, seed: 3, ..Default::default() };
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(8);
    let start = Instant::now();
    let mut exporter = Exporter::create(tmp.path(), &corpus).map_err(|e| e.to_string())?;
    sample_augmented(&corpus, spec)
        .for_each_parallel::<ExportError, _>(workers, |ex| exporter.write_augmented(&ex, None).map(drop))
        .map_err(|e| e.to_string())?;
    let report = exporter.finish().map_err(|e| e.to_string())?;
    let per_min = report.n_augmented as f64 / start.elapsed().as_secs_f64() * 60.0;
    check(report.n_augmented == target, || format!("wrote {}", report.n_augmented))?;
    check(per_min >= 10_000.0, || format!("{per_min:.0} examples/min"))?;
    Ok(format!("{per_min:.0} examples/min written to disk, {workers} workers"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("golden VP substitution", golden_vp_substitution, Duration::from_secs(1)),
        ("enumeration oracle", enumeration_oracle, Duration::from_secs(10)),
        ("identity invariance", identity_invariance, Duration::from_secs(10)),
        ("frame/phoneme conservation", conservation, Duration::from_secs(30)),
        ("determinism", determinism, Duration::from_secs(60)),
        ("MELF round trip", melf_round_trip, Duration::from_secs(10)),
        ("short insertions", short_insertions, Duration::from_secs(60)),
        ("eval kit oracle", eval_oracle, Duration::from_secs(60)),
        ("throughput", throughput, Duration::from_secs(60)),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, f, budget) in criteria {
        let start = Instant::now();
        let outcome = panic::catch_unwind(f).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > budget => Err(format!("{detail}; took {elapsed:.2?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS  {name:<28} {elapsed:>9.2?}  {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name:<28} {elapsed:>9.2?}  {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
