//! Claim tallies, proportion statistics, binomial tests, and the weighted
//! per-media decision.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, ContinuousCDF, Discrete, Normal};

use crate::claim::Claim;
use crate::corpus::Media;
use crate::error::{Error, Result};
use crate::rounding::percent_of;

pub const DEFAULT_NULL_P: f64 = 0.5;
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Relative slack when comparing outcome probabilities against the observed
/// one, so that mathematically equal probabilities are not split by rounding.
const TIE_TOLERANCE: f64 = 1e-7;

const WEIGHT_TOLERANCE: f64 = 1e-9;

/// Yes/no claim counts for one entity in one media.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimTally {
    pub entity: String,
    pub media: Media,
    pub n_urls: u64,
    pub n_claims: u64,
    pub yes: u64,
    pub no: u64,
}

impl ClaimTally {
    pub fn new(entity: impl Into<String>, media: Media, n_urls: u64, yes: u64, no: u64) -> Result<Self> {
        let entity = entity.into();
        let n_claims = yes + no;
        if n_claims > n_urls {
            return Err(Error::InvalidTally(format!(
                "{entity} {media}: {n_claims} claims exceed {n_urls} urls"
            )));
        }
        Ok(ClaimTally {
            entity,
            media,
            n_urls,
            n_claims,
            yes,
            no,
        })
    }
}

/// One tally per media in `url_counts`, text before video.
pub fn tally(claims: &[Claim], url_counts: &BTreeMap<Media, u64>, entity: &str) -> Result<Vec<ClaimTally>> {
    let mut counts: BTreeMap<Media, (u64, u64)> = url_counts.keys().map(|m| (*m, (0, 0))).collect();
    for claim in claims {
        let entry = counts.get_mut(&claim.media).ok_or_else(|| {
            Error::InvalidTally(format!("no url count for media {} (claim {})", claim.media, claim.url))
        })?;
        if claim.positive {
            entry.0 += 1;
        } else {
            entry.1 += 1;
        }
    }
    counts
        .into_iter()
        .map(|(media, (yes, no))| ClaimTally::new(entity, media, url_counts[&media], yes, no))
        .collect()
}

fn undefined(t: &ClaimTally) -> Error {
    Error::UndefinedProportion {
        entity: t.entity.clone(),
        media: t.media.to_string(),
    }
}

/// Unrounded `yes / n_claims`.
pub fn proportion_yes(t: &ClaimTally) -> Result<f64> {
    if t.n_claims == 0 {
        return Err(undefined(t));
    }
    Ok(t.yes as f64 / t.n_claims as f64)
}

/// `%YES` rounded half-up to whole percent (i.e. the 2-decimal proportion).
pub fn percent_yes(t: &ClaimTally) -> Result<u64> {
    if t.n_claims == 0 {
        return Err(undefined(t));
    }
    Ok(percent_of(t.yes, t.n_claims))
}

/// Video minus text, in percentage points of the rounded proportions.
pub fn media_difference(text: &ClaimTally, video: &ClaimTally) -> Result<i64> {
    Ok(percent_yes(video)? as i64 - percent_yes(text)? as i64)
}

/// Mean of the two rounded proportions.
pub fn mean_proportion(text: &ClaimTally, video: &ClaimTally) -> Result<f64> {
    Ok((percent_yes(text)? + percent_yes(video)?) as f64 / 200.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Supported,
    Refuted,
    Undecided,
}

impl Verdict {
    fn from_interval(low: f64, high: f64, null_p: f64) -> Self {
        if low > null_p {
            Verdict::Supported
        } else if high < null_p {
            Verdict::Refuted
        } else {
            Verdict::Undecided
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Supported => "supported",
            Verdict::Refuted => "refuted",
            Verdict::Undecided => "undecided",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinomialTestResult {
    pub n: u64,
    pub k: u64,
    pub p_hat: f64,
    pub p_value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub null_p: f64,
    pub alpha: f64,
    pub verdict: Verdict,
}

fn check_unit_open(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} = {value} must lie strictly between 0 and 1"
        )))
    }
}

fn z_score(alpha: f64) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    normal.inverse_cdf(1.0 - alpha / 2.0)
}

/// Wilson score interval for `k` successes in `n` trials at level `1 - alpha`,
/// clamped to `[0, 1]` and widened to include `k / n` against rounding.
pub fn wilson_interval(k: u64, n: u64, alpha: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "wilson interval needs at least one trial".into(),
        ));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!("{k} successes exceed {n} trials")));
    }
    check_unit_open("alpha", alpha)?;
    let z = z_score(alpha);
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = z / denom * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt();
    let low = (center - half).clamp(0.0, 1.0).min(p);
    let high = (center + half).clamp(0.0, 1.0).max(p);
    Ok((low, high))
}

/// Exact two-sided binomial test of `yes` successes out of `yes + no`.
///
/// The p-value sums the probabilities of every outcome no more likely than
/// the observed one under `Binomial(n, null_p)`.
pub fn binomial_test(yes: u64, no: u64, null_p: f64, alpha: f64) -> Result<BinomialTestResult> {
    let n = yes + no;
    if n == 0 {
        return Err(Error::InvalidArgument("binomial test needs at least one claim".into()));
    }
    check_unit_open("null_p", null_p)?;
    check_unit_open("alpha", alpha)?;

    let dist = Binomial::new(null_p, n).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let observed = dist.pmf(yes) * (1.0 + TIE_TOLERANCE);
    let p_value: f64 = (0..=n).map(|i| dist.pmf(i)).filter(|&p| p <= observed).sum();
    let p_value = p_value.min(1.0);

    let (ci_low, ci_high) = wilson_interval(yes, n, alpha)?;
    Ok(BinomialTestResult {
        n,
        k: yes,
        p_hat: yes as f64 / n as f64,
        p_value,
        ci_low,
        ci_high,
        null_p,
        alpha,
        verdict: Verdict::from_interval(ci_low, ci_high, null_p),
    })
}

/// Non-negative media weights summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Weights(pub BTreeMap<Media, f64>);

impl Weights {
    pub fn equal<I: IntoIterator<Item = Media>>(media: I) -> Self {
        let media: Vec<Media> = media.into_iter().collect();
        let w = 1.0 / media.len() as f64;
        Weights(media.into_iter().map(|m| (m, w)).collect())
    }

    pub fn get(&self, media: Media) -> Option<f64> {
        self.0.get(&media).copied()
    }

    pub fn findings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.0.is_empty() {
            out.push("no weights given".to_string());
            return out;
        }
        for (m, w) in &self.0 {
            if !w.is_finite() || *w < 0.0 {
                out.push(format!("weight for {m} is {w}, must be non-negative"));
            }
        }
        let sum: f64 = self.0.values().sum();
        if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
            out.push(format!("weights sum to {sum}, expected 1"));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.findings().into_iter().next() {
            None => Ok(()),
            Some(msg) => Err(Error::InvalidWeights(msg)),
        }
    }
}

impl FromStr for Weights {
    type Err = Error;

    /// Parses `text=0.5,video=0.5`. Does not check the sum.
    fn from_str(s: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidWeights(format!("expected media=weight, got {part:?}")))?;
            let media: Media = name.trim().parse().map_err(Error::InvalidWeights)?;
            let weight: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::InvalidWeights(format!("weight {value:?} is not a number")))?;
            if map.insert(media, weight).is_some() {
                return Err(Error::InvalidWeights(format!("weight for {media} given twice")));
            }
        }
        Ok(Weights(map))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MediaEvidence {
    pub tally: ClaimTally,
    pub test: BinomialTestResult,
}

impl MediaEvidence {
    pub fn new(tally: ClaimTally, null_p: f64, alpha: f64) -> Result<Self> {
        let test = binomial_test(tally.yes, tally.no, null_p, alpha)?;
        Ok(MediaEvidence { tally, test })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionReport {
    pub entity: String,
    pub per_media: BTreeMap<Media, MediaEvidence>,
    pub weights: Weights,
    /// Weighted sum of the 2-decimal `%YES` proportions.
    pub combined_score: f64,
    pub pooled_yes: u64,
    pub pooled_n: u64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub null_p: f64,
    pub verdict: Verdict,
}

/// Weighted decision over per-media evidence.
///
/// The pooled counts are `round(M * sum(w_m * count_m))` for `M` media, so
/// equal weights reproduce plain pooling; the verdict comes from their
/// Wilson interval against `null_p`.
pub fn combine_scores(
    per_media: &BTreeMap<Media, MediaEvidence>,
    weights: &Weights,
    null_p: f64,
    alpha: f64,
) -> Result<DecisionReport> {
    if per_media.is_empty() {
        return Err(Error::InvalidArgument("no media evidence to combine".into()));
    }
    weights.validate()?;
    check_unit_open("null_p", null_p)?;
    for media in weights.0.keys() {
        if !per_media.contains_key(media) {
            return Err(Error::InvalidWeights(format!("weight given for absent media {media}")));
        }
    }

    let entity = per_media
        .values()
        .next()
        .map(|e| e.tally.entity.clone())
        .unwrap_or_default();
    let mut combined_score = 0.0;
    let mut weighted_yes = 0.0;
    let mut weighted_n = 0.0;
    for (media, evidence) in per_media {
        let w = weights
            .get(*media)
            .ok_or_else(|| Error::InvalidWeights(format!("no weight for media {media}")))?;
        if w == 0.0 {
            continue;
        }
        combined_score += w * percent_yes(&evidence.tally)? as f64 / 100.0;
        weighted_yes += w * evidence.tally.yes as f64;
        weighted_n += w * evidence.tally.n_claims as f64;
    }
    let scale = per_media.len() as f64;
    let pooled_yes = (scale * weighted_yes).round() as u64;
    let pooled_n = (scale * weighted_n).round() as u64;
    let (ci_low, ci_high) = wilson_interval(pooled_yes, pooled_n, alpha)?;

    Ok(DecisionReport {
        entity,
        per_media: per_media.clone(),
        weights: weights.clone(),
        combined_score: combined_score.clamp(0.0, 1.0),
        pooled_yes,
        pooled_n,
        ci_low,
        ci_high,
        null_p,
        verdict: Verdict::from_interval(ci_low, ci_high, null_p),
    })
}

/// Runs a test per media with claims and combines them. Without explicit
/// weights, media with claims are weighted equally.
pub fn decide(tallies: &[ClaimTally], weights: Option<&Weights>, null_p: f64, alpha: f64) -> Result<DecisionReport> {
    let mut per_media = BTreeMap::new();
    for t in tallies.iter().filter(|t| t.n_claims > 0) {
        per_media.insert(t.media, MediaEvidence::new(t.clone(), null_p, alpha)?);
    }
    let weights = match weights {
        Some(w) => w.clone(),
        None if per_media.is_empty() => return Err(Error::InvalidArgument("no media with claims to combine".into())),
        None => Weights::equal(per_media.keys().copied()),
    };
    combine_scores(&per_media, &weights, null_p, alpha)
}

#[derive(Deserialize)]
struct TallyRow {
    entity: String,
    media: Media,
    n_urls: u64,
    yes: u64,
    no: u64,
}

/// Reads tallies entered directly: `entity,media,n_urls,yes,no`.
pub fn read_tallies<R: std::io::Read>(reader: R) -> Result<Vec<ClaimTally>> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for row in csv.deserialize::<TallyRow>() {
        let row = row?;
        out.push(ClaimTally::new(row.entity, row.media, row.n_urls, row.yes, row.no)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrlCount {
    pub entity: String,
    pub media: Media,
    pub n_urls: u64,
}

/// Reads `entity,media,n_urls` rows.
pub fn read_url_counts<R: std::io::Read>(reader: R) -> Result<Vec<UrlCount>> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let rows: std::result::Result<Vec<UrlCount>, csv::Error> = csv.deserialize().collect();
    Ok(rows?)
}

pub fn write_url_counts<W: std::io::Write>(out: W, counts: &[UrlCount]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(out);
    for c in counts {
        csv.serialize(c)?;
    }
    csv.flush().map_err(|e| Error::io("<url counts output>", e))?;
    Ok(())
}
