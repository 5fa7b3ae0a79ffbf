//! Evaluation of "entity HAS property" hypotheses from dependency-parsed
//! web results and crowd ratings.
//!
//! The pipeline: [`corpus::load_corpus`] reads records and their CoNLL-U
//! parses, [`claim::extract_claims`] finds at most one polarized claim per
//! record, [`aggregate`] tallies and tests them per media, and [`report`]
//! renders the tables. [`crowd`] covers the independent crowd-rating study.

pub mod aggregate;
pub mod claim;
pub mod conllu;
pub mod corpus;
pub mod crowd;
pub mod error;
pub mod report;
pub mod rounding;
pub mod similarity;
pub mod validate;

pub use aggregate::{
    binomial_test, combine_scores, decide, mean_proportion, media_difference, proportion_yes, tally,
    BinomialTestResult, ClaimTally, DecisionReport, MediaEvidence, Verdict, Weights,
};
pub use claim::{
    classify_polarity, count_negations, detect_entity, detect_property, extract_claim, extract_claims,
    validate_structure, Claim, HypothesisSpec,
};
pub use conllu::{parse_conllu, SentenceTree, Token};
pub use corpus::{dedup_by_url, load_corpus, Corpus, Media, Segment, SourceRecord};
pub use error::{Error, Result};
pub use similarity::{levenshtein, similarity};
