//! Source records and their parsed sentences.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::conllu::{check_blocks, SentenceBlock, SentenceTree};
use crate::error::{Error, Result};

/// Search modality a record was retrieved from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Media {
    Text,
    Video,
}

impl Media {
    pub const ALL: [Media; 2] = [Media::Text, Media::Video];

    pub fn as_str(self) -> &'static str {
        match self {
            Media::Text => "text",
            Media::Video => "video",
        }
    }
}

impl fmt::Display for Media {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Media {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "text" => Ok(Media::Text),
            "video" => Ok(Media::Video),
            other => Err(format!("unknown media {other:?} (expected text or video)")),
        }
    }
}

/// Which part of a record a sentence came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Segment {
    Title,
    Snippet,
}

impl FromStr for Segment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "title" => Ok(Segment::Title),
            "snippet" => Ok(Segment::Snippet),
            other => Err(format!("unknown segment {other:?} (expected title or snippet)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SourceRecord {
    pub url: String,
    pub media: Media,
    pub title: String,
    pub snippet: String,
    /// Title sentences first, then snippet sentences.
    pub sentences: Vec<SentenceTree>,
    pub title_sentence_count: usize,
}

impl SourceRecord {
    pub fn new(url: impl Into<String>, media: Media, title: impl Into<String>, snippet: impl Into<String>) -> Self {
        SourceRecord {
            url: url.into(),
            media,
            title: title.into(),
            snippet: snippet.into(),
            sentences: Vec::new(),
            title_sentence_count: 0,
        }
    }

    /// Attaches parsed title and snippet sentences, title first.
    pub fn with_sentences(mut self, title: Vec<SentenceTree>, snippet: Vec<SentenceTree>) -> Self {
        self.title_sentence_count = title.len();
        self.sentences = title;
        self.sentences.extend(snippet);
        self
    }

    pub fn segment_of(&self, sentence_index: usize) -> Segment {
        if sentence_index < self.title_sentence_count {
            Segment::Title
        } else {
            Segment::Snippet
        }
    }
}

/// What deduplication removed.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DedupReport {
    pub input_records: usize,
    pub unique_records: usize,
    /// Urls seen more than once, in first-seen order.
    pub duplicate_urls: Vec<String>,
    /// Urls whose later duplicates carried a different media tag than the kept one.
    pub media_conflicts: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Corpus {
    pub records: Vec<SourceRecord>,
    pub entity_label: String,
    pub dedup: DedupReport,
}

impl Corpus {
    pub fn with_entity_label(mut self, label: impl Into<String>) -> Self {
        self.entity_label = label.into();
        self
    }

    /// Number of records per media, after deduplication.
    pub fn url_counts(&self) -> std::collections::BTreeMap<Media, u64> {
        let mut counts: std::collections::BTreeMap<Media, u64> = Media::ALL.iter().map(|m| (*m, 0)).collect();
        for r in &self.records {
            *counts.entry(r.media).or_default() += 1;
        }
        counts
    }
}

/// First occurrence of each url wins; survivor order is preserved.
pub fn dedup_by_url(records: Vec<SourceRecord>) -> Vec<SourceRecord> {
    dedup_with_report(records).0
}

pub fn dedup_with_report(records: Vec<SourceRecord>) -> (Vec<SourceRecord>, DedupReport) {
    let input_records = records.len();
    let mut kept_media: HashMap<String, Media> = HashMap::new();
    let mut dup_seen = HashSet::new();
    let mut conflict_seen = HashSet::new();
    let mut report = DedupReport {
        input_records,
        ..DedupReport::default()
    };
    let mut out = Vec::with_capacity(records.len());
    for record in records {
        match kept_media.get(&record.url) {
            None => {
                kept_media.insert(record.url.clone(), record.media);
                out.push(record);
            }
            Some(&media) => {
                if dup_seen.insert(record.url.clone()) {
                    report.duplicate_urls.push(record.url.clone());
                }
                if media != record.media && conflict_seen.insert(record.url.clone()) {
                    report.media_conflicts.push(record.url.clone());
                }
            }
        }
    }
    report.unique_records = out.len();
    (out, report)
}

#[derive(Deserialize)]
struct RecordLine {
    url: String,
    media: String,
    #[serde(default)]
    title: String,
    #[serde(default)]
    snippet: String,
}

/// Reads JSON-lines records, failing on the first bad line. Blank lines are ignored.
pub fn read_records<R: BufRead>(reader: R) -> Result<Vec<SourceRecord>> {
    let (records, mut findings) = scan_records(reader);
    if findings.is_empty() {
        Ok(records)
    } else {
        Err(findings.swap_remove(0))
    }
}

/// Reads every well-formed record and reports every bad line.
pub fn scan_records<R: BufRead>(reader: R) -> (Vec<SourceRecord>, Vec<Error>) {
    let mut records = Vec::new();
    let mut findings = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                findings.push(Error::InvalidRecord {
                    line: line_no,
                    msg: format!("read failed: {e}"),
                });
                break;
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        match parse_record_line(&line) {
            Ok(r) => records.push(r),
            Err(msg) => findings.push(Error::InvalidRecord { line: line_no, msg }),
        }
    }
    (records, findings)
}

fn parse_record_line(line: &str) -> std::result::Result<SourceRecord, String> {
    let raw: RecordLine = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if raw.url.is_empty() {
        return Err("empty url".to_string());
    }
    let media = raw.media.parse::<Media>()?;
    Ok(SourceRecord::new(raw.url, media, raw.title, raw.snippet))
}

/// Attaches parsed sentence blocks (tagged with `# url` and `# segment`)
/// to deduplicated records. Blocks of one url may be interleaved; title
/// sentences are moved ahead of snippet sentences, otherwise file order is kept.
pub fn attach_sentences(records: Vec<SourceRecord>, blocks: Vec<SentenceBlock>) -> Result<Corpus> {
    let (records, dedup) = dedup_with_report(records);
    let index: HashMap<String, usize> = records.iter().enumerate().map(|(i, r)| (r.url.clone(), i)).collect();

    let mut title: Vec<Vec<SentenceTree>> = vec![Vec::new(); records.len()];
    let mut snippet: Vec<Vec<SentenceTree>> = vec![Vec::new(); records.len()];
    for block in blocks {
        let (url, segment) = block_tags(&block)?;
        let &slot = index.get(url).ok_or_else(|| Error::OrphanSentence {
            line: block.line,
            url: url.to_string(),
        })?;
        match segment {
            Segment::Title => title[slot].push(block.tree),
            Segment::Snippet => snippet[slot].push(block.tree),
        }
    }
    let records = records
        .into_iter()
        .zip(title)
        .zip(snippet)
        .map(|((record, t), s)| record.with_sentences(t, s))
        .collect();
    Ok(Corpus {
        records,
        entity_label: String::new(),
        dedup,
    })
}

pub fn block_tags(block: &SentenceBlock) -> Result<(&str, Segment)> {
    let invalid = |msg: String| Error::InvalidSentence {
        line: block.line,
        sentence: block.tree.text().to_string(),
        msg,
    };
    let url = block
        .meta("url")
        .filter(|u| !u.is_empty())
        .ok_or_else(|| invalid("missing `# url` comment".to_string()))?;
    let segment = block
        .meta("segment")
        .ok_or_else(|| invalid("missing `# segment` comment".to_string()))?
        .parse::<Segment>()
        .map_err(invalid)?;
    Ok((url, segment))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

/// Loads JSON-lines records and a CoNLL-U parses file into a deduplicated corpus.
pub fn load_corpus(records_file: &Path, conllu_file: &Path) -> Result<Corpus> {
    let records = read_records(open(records_file)?)?;
    let (blocks, mut findings) = check_blocks(open(conllu_file)?);
    if !findings.is_empty() {
        return Err(findings.swap_remove(0));
    }
    let corpus = attach_sentences(records, blocks)?;
    log::info!(
        "loaded {} records ({} before url dedup), {} media conflicts",
        corpus.dedup.unique_records,
        corpus.dedup.input_records,
        corpus.dedup.media_conflicts.len()
    );
    Ok(corpus)
}
