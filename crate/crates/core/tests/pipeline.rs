use std::fs;
use std::path::{Path, PathBuf};

use evidence_core::aggregate::{read_tallies, tally, Verdict};
use evidence_core::claim::{read_claims, write_claims};
use evidence_core::report::{build_reports, counts_csv};
use evidence_core::validate::{validate_inputs, ValidationInputs};
use evidence_core::{decide, extract_claims, load_corpus, Error, HypothesisSpec, Media, Segment};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn spec() -> HypothesisSpec {
    HypothesisSpec::from_json(&fs::read_to_string(fixture("neymar.spec.json")).unwrap()).unwrap()
}

const BLOCK: &str = "# url = {URL}\n# segment = {SEG}\n# text = Neymar is not a diver\n\
1\tNeymar\tNeymar\tPROPN\t_\t_\t2\tnsubj\t_\t_\n\
2\tis\tbe\tAUX\t_\t_\t0\tROOT\t_\t_\n\
3\tnot\tnot\tPART\t_\t_\t2\tneg\t_\t_\n\
4\ta\ta\tDET\t_\t_\t5\tdet\t_\t_\n\
5\tdiver\tdiver\tNOUN\t_\t_\t2\tattr\t_\t_\n\n";

fn block(url: &str, segment: &str) -> String {
    BLOCK.replace("{URL}", url).replace("{SEG}", segment)
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn claims_table_claim_details() {
    let corpus = load_corpus(&fixture("claims_table.records.jsonl"), &fixture("claims_table.conllu")).unwrap();
    let claims = extract_claims(&corpus, &spec());
    assert_eq!(claims.len(), 2);
    assert_eq!(claims[0].media, Media::Text);
    assert_eq!(claims[0].segment, Segment::Snippet);
    assert_eq!(claims[0].sentence_index, 1);
    assert!(claims[0].sentence_text.starts_with("When did Neymar dive"));
    assert_eq!(claims[1].media, Media::Video);
    assert!(claims[1].positive);
}

#[test]
fn duplicate_records_count_once() {
    let dir = tempfile::tempdir().unwrap();
    let records = write(
        dir.path(),
        "r.jsonl",
        concat!(
            r#"{"url":"a","media":"text","title":"","snippet":"x"}"#,
            "\n",
            r#"{"url":"a","media":"video","title":"","snippet":"x"}"#,
            "\n",
            r#"{"url":"b","media":"video","title":"","snippet":"x"}"#,
            "\n"
        ),
    );
    let parses = write(
        dir.path(),
        "p.conllu",
        &[block("a", "snippet"), block("a", "title"), block("b", "snippet")].concat(),
    );
    let corpus = load_corpus(&records, &parses).unwrap();
    assert_eq!(corpus.dedup.input_records, 3);
    assert_eq!(corpus.dedup.unique_records, 2);
    assert_eq!(corpus.dedup.media_conflicts, vec!["a".to_string()]);
    assert_eq!(corpus.url_counts()[&Media::Text], 1);
    assert_eq!(corpus.url_counts()[&Media::Video], 1);

    let claims = extract_claims(&corpus, &spec());
    assert_eq!(claims.len(), 2);
    // title sentences are considered before snippet sentences
    assert_eq!(claims[0].segment, Segment::Title);
    assert!(claims.iter().all(|c| !c.positive));
}

#[test]
fn orphan_sentence_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let records = write(
        dir.path(),
        "r.jsonl",
        "{\"url\":\"a\",\"media\":\"text\",\"title\":\"\",\"snippet\":\"\"}\n",
    );
    let parses = write(dir.path(), "p.conllu", &block("zzz", "snippet"));
    match load_corpus(&records, &parses) {
        Err(Error::OrphanSentence { url, line }) => {
            assert_eq!(url, "zzz");
            assert_eq!(line, 1);
        }
        other => panic!("expected orphan error, got {other:?}"),
    }
    let findings = validate_inputs(&ValidationInputs {
        records: Some(records),
        parses: Some(parses),
        ..Default::default()
    });
    assert_eq!(findings.len(), 1, "{findings:?}");
    assert!(findings[0].to_string().contains("zzz"));
}

#[test]
fn records_without_sentences_yield_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let records = write(
        dir.path(),
        "r.jsonl",
        "{\"url\":\"a\",\"media\":\"video\",\"title\":\"\",\"snippet\":\"\"}\n",
    );
    let parses = write(dir.path(), "p.conllu", "");
    let corpus = load_corpus(&records, &parses).unwrap();
    assert!(extract_claims(&corpus, &spec()).is_empty());
    let tallies = tally(&[], &corpus.url_counts(), "Neymar").unwrap();
    let video = tallies.iter().find(|t| t.media == Media::Video).unwrap();
    assert_eq!((video.n_urls, video.n_claims), (1, 0));
    let reports = build_reports(&tallies, None, 0.5, 0.05);
    assert!(counts_csv(&reports).contains("Neymar,video,1,0,0,0,NA"));
}

#[test]
fn fixtures_validate_clean() {
    let findings = validate_inputs(&ValidationInputs {
        records: Some(fixture("canonical.records.jsonl")),
        parses: Some(fixture("canonical.conllu")),
        spec: Some(fixture("neymar.spec.json")),
        ratings: Some(fixture("crowd_110.csv")),
        weights: Some("text=0.5,video=0.5".into()),
    });
    assert!(findings.is_empty(), "{findings:?}");
}

#[test]
fn claims_file_round_trip() {
    let corpus = load_corpus(&fixture("canonical.records.jsonl"), &fixture("canonical.conllu")).unwrap();
    let claims = extract_claims(&corpus, &spec());
    let mut buf = Vec::new();
    write_claims(&mut buf, &claims).unwrap();
    assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 6);
    assert_eq!(read_claims(buf.as_slice()).unwrap(), claims);
}

#[test]
fn counts_table_decisions() {
    let tallies = read_tallies(fs::File::open(fixture("counts_table.tallies.csv")).unwrap()).unwrap();
    let neymar = decide(&tallies[0..2], None, 0.5, 0.05).unwrap();
    assert_eq!(neymar.combined_score, 0.875);
    assert_eq!((neymar.pooled_yes, neymar.pooled_n), (117, 134));
    assert_eq!(neymar.verdict, Verdict::Supported);
    let messi = decide(&tallies[2..4], None, 0.5, 0.05).unwrap();
    assert_eq!(messi.verdict, Verdict::Refuted);
}
