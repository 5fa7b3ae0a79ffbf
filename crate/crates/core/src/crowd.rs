//! Crowd ratings: acceptance filtering, normalized averages, histograms and
//! the prior-to-evidence shift.

use std::collections::HashMap;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rounding::{percent_of, round_half_up};

/// Prior opinion declared before watching the video (form values No/Neutral/Yes).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bias {
    Skeptical,
    Neutral,
    Supportive,
}

impl Bias {
    pub fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for Bias {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "no" => Ok(Bias::Skeptical),
            "neutral" => Ok(Bias::Neutral),
            "yes" => Ok(Bias::Supportive),
            other => Err(format!("prior_bias {other:?} is not one of no, neutral, yes")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CrowdRating {
    pub worker_id: String,
    pub video_id: String,
    pub prior_bias: Bias,
    /// 1 = no dives ... 5 = massive dives.
    pub rating: u8,
    pub proof_correct: bool,
}

impl CrowdRating {
    pub fn new(
        worker_id: impl Into<String>,
        video_id: impl Into<String>,
        prior_bias: Bias,
        rating: u8,
        proof_correct: bool,
    ) -> Result<Self> {
        if !(1..=5).contains(&rating) {
            return Err(Error::InvalidArgument(format!("rating {rating} outside 1..=5")));
        }
        Ok(CrowdRating {
            worker_id: worker_id.into(),
            video_id: video_id.into(),
            prior_bias,
            rating,
            proof_correct,
        })
    }
}

/// Keeps ratings whose gotcha answer was correct.
pub fn filter_accepted(ratings: &[CrowdRating]) -> Vec<CrowdRating> {
    ratings.iter().filter(|r| r.proof_correct).cloned().collect()
}

pub fn normalize_bias(b: Bias) -> f64 {
    match b {
        Bias::Skeptical => 0.0,
        Bias::Neutral => 0.5,
        Bias::Supportive => 1.0,
    }
}

pub fn normalize_rating(r: u8) -> Result<f64> {
    if !(1..=5).contains(&r) {
        return Err(Error::InvalidArgument(format!("rating {r} outside 1..=5")));
    }
    Ok(f64::from(r - 1) / 4.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VideoStats {
    pub video_id: String,
    pub n_ratings: usize,
    pub avg_bias: f64,
    pub avg_rating: f64,
}

/// Per-video averages, videos in order of first appearance.
pub fn per_video_stats(ratings: &[CrowdRating]) -> Vec<VideoStats> {
    let mut order: Vec<&str> = Vec::new();
    let mut sums: HashMap<&str, (usize, f64, f64)> = HashMap::new();
    for r in ratings {
        let entry = sums.entry(r.video_id.as_str()).or_insert_with(|| {
            order.push(r.video_id.as_str());
            (0, 0.0, 0.0)
        });
        entry.0 += 1;
        entry.1 += normalize_bias(r.prior_bias);
        entry.2 += f64::from(r.rating - 1) / 4.0;
    }
    order
        .into_iter()
        .map(|id| {
            let (n, bias, rating) = sums[id];
            VideoStats {
                video_id: id.to_string(),
                n_ratings: n,
                avg_bias: bias / n as f64,
                avg_rating: rating / n as f64,
            }
        })
        .collect()
}

/// Unweighted mean over videos of `(avg_bias, avg_rating)`.
pub fn overall_stats(per_video: &[VideoStats]) -> Result<(f64, f64)> {
    if per_video.is_empty() {
        return Err(Error::InvalidArgument("no videos to average".into()));
    }
    let n = per_video.len() as f64;
    let bias = per_video.iter().map(|v| v.avg_bias).sum::<f64>() / n;
    let rating = per_video.iter().map(|v| v.avg_rating).sum::<f64>() / n;
    Ok((bias, rating))
}

/// Mean over all individual ratings, ignoring the video grouping.
pub fn pooled_stats(ratings: &[CrowdRating]) -> Result<(f64, f64)> {
    if ratings.is_empty() {
        return Err(Error::InvalidArgument("no ratings to average".into()));
    }
    let n = ratings.len() as f64;
    let bias = ratings.iter().map(|r| normalize_bias(r.prior_bias)).sum::<f64>() / n;
    let rating = ratings.iter().map(|r| f64::from(r.rating - 1) / 4.0).sum::<f64>() / n;
    Ok((bias, rating))
}

/// Percentage points by which ratings sit below the prior bias.
pub fn shift(avg_bias: f64, avg_rating: f64) -> f64 {
    (avg_bias - avg_rating) * 100.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Histogram<const N: usize> {
    #[serde(serialize_with = "serialize_bins")]
    pub bins: [u64; N],
}

fn serialize_bins<S: serde::Serializer, const N: usize>(bins: &[u64; N], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(bins.iter())
}

pub type Histogram3 = Histogram<3>;
pub type Histogram5 = Histogram<5>;

pub const BIAS_LABELS: [&str; 3] = ["skeptical", "neutral", "supportive"];
pub const RATING_LABELS: [&str; 5] = ["no-dives", "little-bit", "sometimes", "many-times", "massive-dives"];

impl<const N: usize> Histogram<N> {
    pub fn new(bins: [u64; N]) -> Self {
        Histogram { bins }
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().sum()
    }

    /// Whole percents, rounded half up; all zero for an empty histogram.
    pub fn percents(&self) -> [u64; N] {
        let total = self.total();
        if total == 0 {
            return [0; N];
        }
        self.bins.map(|c| percent_of(c, total))
    }
}

impl<const N: usize> Default for Histogram<N> {
    fn default() -> Self {
        Histogram { bins: [0; N] }
    }
}

/// Folds the five rating bins onto the three bias categories.
pub fn merge_histogram(h5: &Histogram5) -> Histogram3 {
    let b = h5.bins;
    Histogram::new([b[0] + b[1], b[2], b[3] + b[4]])
}

pub fn bias_histogram(ratings: &[CrowdRating]) -> Histogram3 {
    let mut h = Histogram3::default();
    for r in ratings {
        h.bins[r.prior_bias.index()] += 1;
    }
    h
}

pub fn rating_histogram(ratings: &[CrowdRating]) -> Histogram5 {
    let mut h = Histogram5::default();
    for r in ratings {
        h.bins[usize::from(r.rating - 1)] += 1;
    }
    h
}

#[derive(Deserialize)]
struct RatingRow {
    worker_id: String,
    video_id: String,
    prior_bias: String,
    rating: String,
    proof_correct: String,
}

/// Reads the ratings CSV (`worker_id,video_id,prior_bias,rating,proof_correct`),
/// failing on the first bad row.
pub fn read_ratings<R: Read>(reader: R) -> Result<Vec<CrowdRating>> {
    let (ratings, mut findings) = scan_ratings(reader);
    if findings.is_empty() {
        Ok(ratings)
    } else {
        Err(findings.swap_remove(0))
    }
}

/// Reads every well-formed row and reports every bad one.
pub fn scan_ratings<R: Read>(reader: R) -> (Vec<CrowdRating>, Vec<Error>) {
    let mut csv = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let csv_error = |e: csv::Error| Error::InvalidRating {
        line: e.position().map(|p| p.line()).unwrap_or(1),
        msg: e.to_string(),
    };
    let mut out = Vec::new();
    let mut findings = Vec::new();
    let headers = match csv.headers() {
        Ok(h) => h.clone(),
        Err(e) => return (out, vec![csv_error(e)]),
    };
    let mut record = csv::StringRecord::new();
    loop {
        match csv.read_record(&mut record) {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) => {
                findings.push(csv_error(e));
                break;
            }
        }
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        match parse_rating_row(&record, &headers) {
            Ok(r) => out.push(r),
            Err(msg) => findings.push(Error::InvalidRating { line, msg }),
        }
    }
    (out, findings)
}

fn parse_rating_row(
    record: &csv::StringRecord,
    headers: &csv::StringRecord,
) -> std::result::Result<CrowdRating, String> {
    if record.len() != headers.len() {
        return Err(format!("expected {} fields, found {}", headers.len(), record.len()));
    }
    let row: RatingRow = record.deserialize(Some(headers)).map_err(|e| e.to_string())?;
    let prior_bias = row.prior_bias.parse::<Bias>()?;
    let rating = row
        .rating
        .parse::<u8>()
        .ok()
        .filter(|r| (1..=5).contains(r))
        .ok_or_else(|| format!("rating {:?} is not an integer in 1..=5", row.rating))?;
    let proof_correct = match row.proof_correct.to_ascii_lowercase().as_str() {
        "true" => true,
        "false" => false,
        other => return Err(format!("proof_correct {other:?} is not true or false")),
    };
    if row.video_id.is_empty() {
        return Err("empty video_id".into());
    }
    Ok(CrowdRating {
        worker_id: row.worker_id,
        video_id: row.video_id,
        prior_bias,
        rating,
        proof_correct,
    })
}

/// Everything the crowd report shows.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrowdReport {
    pub total_ratings: usize,
    pub accepted_ratings: usize,
    pub per_video: Vec<VideoStats>,
    /// Mean of per-video averages.
    pub avg_bias: f64,
    pub avg_rating: f64,
    /// Mean over all accepted ratings.
    pub pooled_avg_bias: f64,
    pub pooled_avg_rating: f64,
    /// Shift between the 2-decimal rounded averages, in whole points.
    pub shift_points: f64,
    pub pooled_shift_points: f64,
    pub bias_histogram: Histogram3,
    pub rating_histogram: Histogram5,
    pub posterior_histogram: Histogram3,
}

fn rounded_shift(bias: f64, rating: f64) -> f64 {
    round_half_up(shift(round_half_up(bias, 2), round_half_up(rating, 2)), 0)
}

pub fn crowd_report(ratings: &[CrowdRating]) -> Result<CrowdReport> {
    let accepted = filter_accepted(ratings);
    if accepted.is_empty() {
        return Err(Error::NoAcceptedRatings);
    }
    let per_video = per_video_stats(&accepted);
    let (avg_bias, avg_rating) = overall_stats(&per_video)?;
    let (pooled_avg_bias, pooled_avg_rating) = pooled_stats(&accepted)?;
    let rating_hist = rating_histogram(&accepted);
    Ok(CrowdReport {
        total_ratings: ratings.len(),
        accepted_ratings: accepted.len(),
        per_video,
        avg_bias,
        avg_rating,
        pooled_avg_bias,
        pooled_avg_rating,
        shift_points: rounded_shift(avg_bias, avg_rating),
        pooled_shift_points: rounded_shift(pooled_avg_bias, pooled_avg_rating),
        bias_histogram: bias_histogram(&accepted),
        rating_histogram: rating_hist,
        posterior_histogram: merge_histogram(&rating_hist),
    })
}
