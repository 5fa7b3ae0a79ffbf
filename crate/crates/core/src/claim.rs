//! Sentence-level claim detection and polarity classification.
//!
//! A claim is a sentence in which a token matching the target entity and a
//! token matching the target property stand in one of two syntactic shapes:
//! the entity is a direct dependent of the property (subject or possessor),
//! or both hang off the same copula. Polarity is the parity of negation cues
//! counted from the entity upwards.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conllu::SentenceTree;
use crate::corpus::{Corpus, Media, Segment, SourceRecord};
use crate::error::{Error, Result};
use crate::similarity::similarity;

pub const DEFAULT_SIM_THRESHOLD: f64 = 0.85;

fn default_threshold() -> f64 {
    DEFAULT_SIM_THRESHOLD
}

fn default_child_deprels() -> BTreeSet<String> {
    ["nsubj", "nsubjpass", "poss"].iter().map(|s| s.to_string()).collect()
}

fn default_be_lemmas() -> BTreeSet<String> {
    BTreeSet::from(["be".to_string()])
}

fn default_wh_words() -> BTreeSet<String> {
    BTreeSet::from(["why".to_string()])
}

/// The hypothesis "entity HAS property" and the matching configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisSpec {
    pub entity_name: String,
    pub property_lemmas: BTreeSet<String>,
    pub canonical_property: String,
    #[serde(default = "default_threshold")]
    pub entity_sim_threshold: f64,
    #[serde(default = "default_threshold")]
    pub property_sim_threshold: f64,
    #[serde(default = "default_child_deprels")]
    pub child_deprels: BTreeSet<String>,
    #[serde(default = "default_be_lemmas")]
    pub be_lemmas: BTreeSet<String>,
    #[serde(default = "default_wh_words")]
    pub affirmative_wh_words: BTreeSet<String>,
}

impl HypothesisSpec {
    pub fn new<I, S>(entity_name: impl Into<String>, property_lemmas: I, canonical_property: impl Into<String>) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        HypothesisSpec {
            entity_name: entity_name.into(),
            property_lemmas: property_lemmas.into_iter().map(Into::into).collect(),
            canonical_property: canonical_property.into(),
            entity_sim_threshold: DEFAULT_SIM_THRESHOLD,
            property_sim_threshold: DEFAULT_SIM_THRESHOLD,
            child_deprels: default_child_deprels(),
            be_lemmas: default_be_lemmas(),
            affirmative_wh_words: default_wh_words(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: HypothesisSpec = serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Every violated constraint, one message each.
    pub fn findings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.entity_name.trim().is_empty() {
            out.push("entity_name is empty".to_string());
        }
        if self.property_lemmas.is_empty() || self.property_lemmas.iter().all(|l| l.is_empty()) {
            out.push("property_lemmas is empty".to_string());
        }
        if self.canonical_property.trim().is_empty() {
            out.push("canonical_property is empty".to_string());
        }
        for (name, value) in [
            ("entity_sim_threshold", self.entity_sim_threshold),
            ("property_sim_threshold", self.property_sim_threshold),
        ] {
            if !(0.0..=1.0).contains(&value) {
                out.push(format!("{name} = {value} is outside [0, 1]"));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.findings().into_iter().next() {
            None => Ok(()),
            Some(msg) => Err(Error::InvalidSpec(msg)),
        }
    }
}

/// One validated, polarized claim.
///
/// Field order is the column order of the claims JSON-lines file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub url: String,
    pub media: Media,
    pub segment: Segment,
    pub sentence_index: usize,
    pub sentence_text: String,
    pub entity_token_id: usize,
    pub property_token_id: usize,
    pub negation_count: usize,
    pub positive: bool,
}

/// Tokens tagged PROPN whose form is close enough to the entity name.
pub fn detect_entity(sentence: &SentenceTree, spec: &HypothesisSpec) -> Vec<usize> {
    sentence
        .tokens()
        .iter()
        .filter(|t| t.upos == "PROPN")
        .filter(|t| similarity(&t.form, &spec.entity_name) >= spec.entity_sim_threshold)
        .map(|t| t.id)
        .collect()
}

/// Tokens whose lemma is close enough to any property lemma.
pub fn detect_property(sentence: &SentenceTree, spec: &HypothesisSpec) -> Vec<usize> {
    sentence
        .tokens()
        .iter()
        .filter(|t| {
            spec.property_lemmas
                .iter()
                .any(|p| similarity(&t.lemma, p) >= spec.property_sim_threshold)
        })
        .map(|t| t.id)
        .collect()
}

pub fn validate_structure(
    sentence: &SentenceTree,
    entity_id: usize,
    property_id: usize,
    spec: &HypothesisSpec,
) -> bool {
    let (Some(entity), Some(property)) = (sentence.token(entity_id), sentence.token(property_id)) else {
        return false;
    };
    if entity_id == property_id {
        return false;
    }
    let direct_child = entity.head == property_id && spec.child_deprels.contains(&entity.deprel);
    let copula_siblings = entity.head == property.head
        && entity.head != 0
        && sentence
            .token(entity.head)
            .is_some_and(|h| spec.be_lemmas.contains(&h.lemma));
    direct_child || copula_siblings
}

/// Negation cues seen from the entity token: `neg` relations on or hanging
/// off the path to the root, one for a question mark, and one more for an
/// affirmative wh-word inside a question.
pub fn count_negations(sentence: &SentenceTree, entity_id: usize, spec: &HypothesisSpec) -> usize {
    let path = sentence.path_to_root(entity_id);
    let on_path = |id: usize| path.contains(&id);
    let neg = sentence
        .tokens()
        .iter()
        .filter(|t| t.deprel == "neg" && (on_path(t.head) || on_path(t.id)))
        .count();

    let question = sentence.tokens().iter().any(|t| t.form.contains('?'));
    let wh = question
        && sentence
            .tokens()
            .iter()
            .any(|t| spec.affirmative_wh_words.contains(&t.form.to_lowercase()));
    neg + usize::from(question) + usize::from(wh)
}

pub fn classify_polarity(negation_count: usize) -> bool {
    negation_count.is_multiple_of(2)
}

/// First (entity, property) pair satisfying the structure check, scanning
/// entities then properties left to right.
pub fn find_pair(sentence: &SentenceTree, spec: &HypothesisSpec) -> Option<(usize, usize)> {
    let entities = detect_entity(sentence, spec);
    if entities.is_empty() {
        return None;
    }
    let properties = detect_property(sentence, spec);
    entities.iter().find_map(|&e| {
        properties
            .iter()
            .find(|&&p| validate_structure(sentence, e, p, spec))
            .map(|&p| (e, p))
    })
}

/// The record's single claim: the first validated pair in title-then-snippet order.
pub fn extract_claim(record: &SourceRecord, spec: &HypothesisSpec) -> Option<Claim> {
    record.sentences.iter().enumerate().find_map(|(idx, sentence)| {
        let (entity, property) = find_pair(sentence, spec)?;
        let negation_count = count_negations(sentence, entity, spec);
        Some(Claim {
            url: record.url.clone(),
            media: record.media,
            segment: record.segment_of(idx),
            sentence_index: idx,
            sentence_text: sentence.text().to_string(),
            entity_token_id: entity,
            property_token_id: property,
            negation_count,
            positive: classify_polarity(negation_count),
        })
    })
}

/// At most one claim per record, in record order.
pub fn extract_claims(corpus: &Corpus, spec: &HypothesisSpec) -> Vec<Claim> {
    corpus
        .records
        .par_iter()
        .filter_map(|r| extract_claim(r, spec))
        .collect()
}

pub fn write_claims<W: Write>(out: &mut W, claims: &[Claim]) -> Result<()> {
    for claim in claims {
        serde_json::to_writer(&mut *out, claim)?;
        out.write_all(b"\n").map_err(|e| Error::io("<claims output>", e))?;
    }
    Ok(())
}

pub fn read_claims<R: BufRead>(reader: R) -> Result<Vec<Claim>> {
    let mut claims = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: idx + 1,
            msg: format!("read failed: {e}"),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let claim = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: idx + 1,
            msg: e.to_string(),
        })?;
        claims.push(claim);
    }
    Ok(claims)
}
