//! Structural checks over input files, reported as findings rather than
//! stopping at the first problem.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use crate::aggregate::Weights;
use crate::claim::HypothesisSpec;
use crate::conllu::check_blocks;
use crate::corpus::{block_tags, scan_records};
use crate::crowd::scan_ratings;
use crate::error::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Finding {
    /// File the finding refers to, or a flag name such as `--weights`.
    pub source: String,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.source, self.message)
    }
}

fn finding(source: &Path, message: impl ToString) -> Finding {
    Finding {
        source: source.display().to_string(),
        message: message.to_string(),
    }
}

fn open(path: &Path) -> Result<BufReader<File>, Finding> {
    File::open(path).map(BufReader::new).map_err(|e| finding(path, e))
}

/// Inputs to check; any subset may be given.
#[derive(Clone, Debug, Default)]
pub struct ValidationInputs {
    pub records: Option<PathBuf>,
    pub parses: Option<PathBuf>,
    pub spec: Option<PathBuf>,
    pub ratings: Option<PathBuf>,
    pub weights: Option<String>,
}

pub fn validate_inputs(inputs: &ValidationInputs) -> Vec<Finding> {
    let mut findings = Vec::new();
    let mut known_urls: Option<HashSet<String>> = None;

    if let Some(path) = &inputs.records {
        match open(path) {
            Ok(reader) => {
                let (records, errors) = scan_records(reader);
                findings.extend(errors.into_iter().map(|e| finding(path, e)));
                known_urls = Some(records.into_iter().map(|r| r.url).collect());
            }
            Err(f) => findings.push(f),
        }
    }

    if let Some(path) = &inputs.parses {
        match open(path) {
            Ok(reader) => {
                let (blocks, errors) = check_blocks(reader);
                findings.extend(errors.into_iter().map(|e| finding(path, e)));
                for block in &blocks {
                    match block_tags(block) {
                        Ok((url, _)) => {
                            if let Some(urls) = &known_urls {
                                if !urls.contains(url) {
                                    let e = Error::OrphanSentence {
                                        line: block.line,
                                        url: url.to_string(),
                                    };
                                    findings.push(finding(path, e));
                                }
                            }
                        }
                        Err(e) => findings.push(finding(path, e)),
                    }
                }
            }
            Err(f) => findings.push(f),
        }
    }

    if let Some(path) = &inputs.spec {
        match std::fs::read_to_string(path) {
            Ok(text) => match serde_json::from_str::<HypothesisSpec>(&text) {
                Ok(spec) => findings.extend(spec.findings().into_iter().map(|m| finding(path, m))),
                Err(e) => findings.push(finding(path, e)),
            },
            Err(e) => findings.push(finding(path, e)),
        }
    }

    if let Some(path) = &inputs.ratings {
        match open(path) {
            Ok(reader) => {
                let (_, errors) = scan_ratings(reader);
                findings.extend(errors.into_iter().map(|e| finding(path, e)));
            }
            Err(f) => findings.push(f),
        }
    }

    if let Some(text) = &inputs.weights {
        let source = Path::new("--weights");
        match text.parse::<Weights>() {
            Ok(w) => findings.extend(w.findings().into_iter().map(|m| finding(source, m))),
            Err(e) => findings.push(finding(source, e)),
        }
    }

    findings
}
