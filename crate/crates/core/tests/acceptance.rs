//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails or overruns its time budget.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use evidence_core::aggregate::{percent_yes, read_tallies, wilson_interval};
use evidence_core::conllu::write_block;
use evidence_core::crowd::{crowd_report, merge_histogram, overall_stats, read_ratings, Histogram5, VideoStats};
use evidence_core::report::{build_reports, counts_text, fmt_fraction, fmt_hundredths};
use evidence_core::rounding::round_half_up;
use evidence_core::{
    binomial_test, extract_claim, extract_claims, levenshtein, load_corpus, mean_proportion, media_difference,
    HypothesisSpec, SentenceTree, Token,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(), String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn neymar_spec() -> HypothesisSpec {
    HypothesisSpec::from_json(&fs::read_to_string(fixture("neymar.spec.json")).unwrap()).unwrap()
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn canonical_polarities() -> Outcome {
    let corpus =
        load_corpus(&fixture("canonical.records.jsonl"), &fixture("canonical.conllu")).map_err(|e| e.to_string())?;
    let spec = neymar_spec();
    let got: Vec<Option<bool>> = corpus
        .records
        .iter()
        .map(|r| extract_claim(r, &spec).map(|c| c.positive))
        .collect();
    let want = [true, true, true, false, false, true].map(Some).to_vec();
    check(got == want, || format!("polarities {got:?}, expected {want:?}"))
}

fn claims_table() -> Outcome {
    let corpus = load_corpus(&fixture("claims_table.records.jsonl"), &fixture("claims_table.conllu"))
        .map_err(|e| e.to_string())?;
    let spec = neymar_spec();
    let claims = extract_claims(&corpus, &spec);
    let got: Vec<(&str, bool)> = claims.iter().map(|c| (c.url.as_str(), c.positive)).collect();
    let want = vec![
        ("http://tinyurl.com/hn4hndq", false),
        ("http://tinyurl.com/jns5bt8", true),
    ];
    check(got == want, || format!("claims {got:?}, expected {want:?}"))
}

fn counts_arithmetic() -> Outcome {
    let tallies =
        read_tallies(fs::File::open(fixture("counts_table.tallies.csv")).unwrap()).map_err(|e| e.to_string())?;
    let pct: Vec<String> = tallies
        .iter()
        .map(|t| fmt_hundredths(percent_yes(t).unwrap()))
        .collect();
    let want = [".77", ".98", ".25", ".33", ".96", ".92"];
    check(pct == want, || format!("%YES {pct:?}"))?;

    let diffs: Vec<i64> = tallies
        .chunks(2)
        .map(|p| media_difference(&p[0], &p[1]).unwrap())
        .collect();
    check(diffs == [21, 8, -4], || format!("media differences {diffs:?}"))?;

    let means: Vec<f64> = tallies
        .chunks(2)
        .map(|p| mean_proportion(&p[0], &p[1]).unwrap())
        .collect();
    check(means[0] == 0.875 && means[2] == 0.94, || {
        format!("mean proportions {means:?}")
    })?;

    let text = counts_text(&build_reports(&tallies, None, 0.5, 0.05));
    for needle in [
        "+21 points",
        "+8 points",
        "-4 points",
        "mean proportion 87.5%",
        "mean proportion 94%",
    ] {
        check(text.contains(needle), || {
            format!("rendered table lacks {needle:?}:\n{text}")
        })?;
    }
    Ok(())
}

const CROWD_TABLE: [(&str, f64, f64); 11] = [
    ("qC3wmWTUDWw", 0.65, 0.43),
    ("BSMwAy_xbII", 0.55, 0.43),
    ("OZxkCJTTRps", 0.60, 0.40),
    ("G0pPkSR4Fxw", 0.70, 0.48),
    ("bEhVeFlP6w4", 0.60, 0.48),
    ("TiusCQv-3NM", 0.50, 0.50),
    ("pytMcZRJnKQ", 0.50, 0.53),
    ("rpLMXXl4cV4", 0.75, 0.60),
    ("j3UyAR64evA", 0.50, 0.60),
    ("IJGorSmEJM4", 0.55, 0.50),
    ("UCM4b61nZpM", 0.90, 0.75),
];

fn shift_points(bias: f64, rating: f64) -> f64 {
    round_half_up((round_half_up(bias, 2) - round_half_up(rating, 2)) * 100.0, 0)
}

fn crowd_statistics() -> Outcome {
    let table: Vec<VideoStats> = CROWD_TABLE
        .iter()
        .map(|&(id, b, r)| VideoStats {
            video_id: id.into(),
            n_ratings: 10,
            avg_bias: b,
            avg_rating: r,
        })
        .collect();
    let (bias, rating) = overall_stats(&table).map_err(|e| e.to_string())?;
    let shown = (fmt_fraction(bias), fmt_fraction(rating), shift_points(bias, rating));
    check(shown == (".62".into(), ".52".into(), 10.0), || {
        format!("table overall {shown:?}")
    })?;

    let merged = merge_histogram(&Histogram5::new([16, 15, 35, 26, 8]));
    check(merged.bins == [31, 35, 34], || format!("merged {:?}", merged.bins))?;

    let ratings = read_ratings(fs::File::open(fixture("crowd_110.csv")).unwrap()).map_err(|e| e.to_string())?;
    let report = crowd_report(&ratings).map_err(|e| e.to_string())?;
    check(report.accepted_ratings == 110, || {
        format!("accepted {}", report.accepted_ratings)
    })?;
    for (v, &(id, b, r)) in report.per_video.iter().zip(CROWD_TABLE.iter()) {
        let row = (
            v.video_id.as_str(),
            fmt_fraction(v.avg_bias),
            fmt_fraction(v.avg_rating),
        );
        let want = (id, fmt_fraction(b), fmt_fraction(r));
        check(row == want, || format!("per-video row {row:?}, expected {want:?}"))?;
    }
    let shown = (
        fmt_fraction(report.avg_bias),
        fmt_fraction(report.avg_rating),
        report.shift_points,
    );
    check(shown == (".62".into(), ".52".into(), 10.0), || {
        format!("fixture overall {shown:?}")
    })
}

fn choose(n: u64, k: u64) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * u128::from(n - i) / u128::from(i + 1))
}

/// Two-sided p-value by enumerating every outcome, using integer
/// coefficients. Exact rational arithmetic at p = 1/2.
fn oracle_p_value(n: u64, k: u64, p: f64) -> f64 {
    if p == 0.5 {
        let obs = choose(n, k);
        let mass: u128 = (0..=n).map(|i| choose(n, i)).filter(|&c| c <= obs).sum();
        return (mass as f64 / 2f64.powi(n as i32)).min(1.0);
    }
    let pmf = |i: u64| choose(n, i) as f64 * p.powi(i as i32) * (1.0 - p).powi((n - i) as i32);
    let obs = pmf(k);
    let total: f64 = (0..=n).map(pmf).filter(|&q| q <= obs * (1.0 + 1e-7)).sum();
    total.min(1.0)
}

fn binomial_oracle() -> Outcome {
    for &p in &[0.5, 0.3, 0.05, 0.7, 0.9] {
        for n in 1..=20u64 {
            for k in 0..=n {
                let got = binomial_test(k, n - k, p, 0.05).map_err(|e| e.to_string())?.p_value;
                let want = oracle_p_value(n, k, p);
                check((got - want).abs() <= 1e-12, || {
                    format!("n={n} k={k} p={p}: {got} vs oracle {want}")
                })?;
            }
        }
    }

    let mut runner = TestRunner::new(Config {
        cases: 10_000,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = (1u64..=5000).prop_flat_map(|n| (Just(n), 0..=n, 0.001f64..0.5));
    runner
        .run(&strategy, |(n, k, alpha)| {
            let (lo, hi) = wilson_interval(k, n, alpha).unwrap();
            let p = k as f64 / n as f64;
            prop_assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
            prop_assert!(lo <= p && p <= hi, "{lo} <= {p} <= {hi}");
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Plain recursive edit distance, memoized on suffix positions.
fn oracle_levenshtein(a: &[char], b: &[char]) -> usize {
    fn go(a: &[char], b: &[char], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&d) = memo.get(&(i, j)) {
            return d;
        }
        let sub = go(a, b, i + 1, j + 1, memo) + usize::from(a[i] != b[j]);
        let del = go(a, b, i + 1, j, memo) + 1;
        let ins = go(a, b, i, j + 1, memo) + 1;
        let d = sub.min(del).min(ins);
        memo.insert((i, j), d);
        d
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

fn levenshtein_oracle() -> Outcome {
    let word = proptest::collection::vec(
        prop_oneof![Just('a'), Just('b'), Just('c'), Just('é'), Just('ß'), any::<char>()],
        0..=12,
    )
    .prop_map(|v| v.into_iter().collect::<String>());
    let mut runner = TestRunner::new(Config {
        cases: 10_000,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&(word.clone(), word.clone(), word), |(a, b, c)| {
            let (ca, cb): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
            let d = levenshtein(&a, &b);
            prop_assert_eq!(d, oracle_levenshtein(&ca, &cb));
            prop_assert_eq!(levenshtein(&a, &a), 0);
            prop_assert_eq!(d == 0, a == b);
            prop_assert_eq!(d, levenshtein(&b, &a));
            prop_assert!(d <= levenshtein(&a, &c) + levenshtein(&c, &b));
            Ok(())
        })
        .map_err(|e| e.to_string())
}

const FILLER: [(&str, &str, &str); 8] = [
    ("the", "the", "DET"),
    ("match", "match", "NOUN"),
    ("Messi", "Messi", "PROPN"),
    ("not", "not", "PART"),
    ("is", "be", "AUX"),
    ("goal", "goal", "NOUN"),
    ("Why", "why", "ADV"),
    ("scores", "score", "VERB"),
];
const DEPRELS: [&str; 7] = ["nsubj", "poss", "neg", "dobj", "attr", "advmod", "det"];

fn random_sentence(rng: &mut ChaCha8Rng) -> SentenceTree {
    let n = rng.gen_range(2..=9);
    let mut tokens = Vec::with_capacity(n + 1);
    for id in 1..=n {
        let (form, lemma, upos) = match rng.gen_range(0..10) {
            0 | 1 => ("Neymar", "Neymar", "PROPN"),
            2 => ("Neymr", "Neymr", "PROPN"),
            3 => ("dives", "dive", "VERB"),
            4 => ("diver", "diver", "NOUN"),
            _ => *FILLER.choose(rng).unwrap(),
        };
        let (head, deprel) = if id == 1 {
            (0, "ROOT")
        } else {
            (rng.gen_range(1..id), *DEPRELS.choose(rng).unwrap())
        };
        tokens.push(Token::new(id, form, lemma, upos, head, deprel));
    }
    if rng.gen_bool(0.3) {
        tokens.push(Token::new(n + 1, "?", "?", "PUNCT", 1, "punct"));
    }
    SentenceTree::from_tokens(tokens).unwrap()
}

/// Writes a seeded synthetic corpus; some urls repeat to exercise dedup.
fn synthetic_corpus(dir: &Path, records: usize, seed: u64) -> (PathBuf, PathBuf) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jsonl = String::new();
    let mut conllu = Vec::new();
    for i in 0..records {
        let url = if i > 0 && rng.gen_bool(0.1) {
            format!("u{}", rng.gen_range(0..i))
        } else {
            format!("u{i}")
        };
        let media = if rng.gen_bool(0.5) { "text" } else { "video" };
        let line = serde_json::json!({"url": url, "media": media, "title": "t", "snippet": "s"});
        jsonl.push_str(&line.to_string());
        jsonl.push('\n');
        for _ in 0..rng.gen_range(0..=3) {
            let segment = if rng.gen_bool(0.4) { "title" } else { "snippet" };
            write_block(
                &mut conllu,
                &[("url", &url), ("segment", segment)],
                &random_sentence(&mut rng),
            )
            .unwrap();
        }
    }
    let records_path = dir.join("records.jsonl");
    let parses_path = dir.join("parses.conllu");
    fs::write(&records_path, jsonl).unwrap();
    fs::write(&parses_path, conllu).unwrap();
    (records_path, parses_path)
}

fn determinism_one_count() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (records, parses) = synthetic_corpus(dir.path(), 500, 0x5eed);
    let spec = neymar_spec();
    let run = || -> Result<(Vec<u8>, usize), String> {
        let corpus = load_corpus(&records, &parses).map_err(|e| e.to_string())?;
        let claims = extract_claims(&corpus, &spec);
        let urls: BTreeSet<&str> = claims.iter().map(|c| c.url.as_str()).collect();
        if urls.len() != claims.len() {
            return Err(format!("{} claims over {} urls", claims.len(), urls.len()));
        }
        let mut out = Vec::new();
        evidence_core::claim::write_claims(&mut out, &claims).map_err(|e| e.to_string())?;
        Ok((out, claims.len()))
    };
    let (first, count) = run()?;
    let (second, _) = run()?;
    check(first == second, || "claim files differ between runs".into())?;
    check(count <= 500, || format!("{count} claims from 500 records"))?;
    check(count > 0, || "synthetic corpus yielded no claims".into())
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("polarity rule suite", Duration::from_secs(1), canonical_polarities),
        ("claims table reproduction", Duration::from_secs(1), claims_table),
        ("counts table arithmetic", Duration::from_secs(1), counts_arithmetic),
        ("crowd statistics", Duration::from_secs(1), crowd_statistics),
        ("binomial oracle equivalence", Duration::from_secs(30), binomial_oracle),
        (
            "levenshtein oracle equivalence",
            Duration::from_secs(30),
            levenshtein_oracle,
        ),
        (
            "determinism and one claim per url",
            Duration::from_secs(10),
            determinism_one_count,
        ),
    ];
    let mut failures: BTreeMap<&str, String> = BTreeMap::new();
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome =
            outcome.and_then(|()| check(elapsed <= budget, || format!("took {elapsed:?}, budget {budget:?}")));
        match outcome {
            Ok(()) => println!("PASS {name} ({elapsed:.2?})"),
            Err(msg) => {
                println!("FAIL {name} ({elapsed:.2?}): {msg}");
                failures.insert(name, msg);
            }
        }
    }
    if !failures.is_empty() {
        eprintln!("{} of 7 acceptance criteria failed", failures.len());
        std::process::exit(1);
    }
}
