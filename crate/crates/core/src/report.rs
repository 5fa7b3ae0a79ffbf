//! Table and document renderings for the counts report and the crowd report.

use std::fmt::Write as _;

use serde::Serialize;

use crate::aggregate::{
    binomial_test, decide, mean_proportion, media_difference, percent_yes, BinomialTestResult, ClaimTally,
    DecisionReport, Weights,
};
use crate::corpus::Media;
use crate::crowd::{CrowdReport, Histogram, BIAS_LABELS, RATING_LABELS};
use crate::rounding::round_half_up;

pub const MISSING: &str = "NA";

/// `.77` style; `1.00` at the top of the scale.
pub fn fmt_hundredths(h: u64) -> String {
    if h >= 100 {
        format!("{}.{:02}", h / 100, h % 100)
    } else {
        format!(".{h:02}")
    }
}

pub fn fmt_fraction(x: f64) -> String {
    fmt_hundredths((round_half_up(x, 2) * 100.0).round() as u64)
}

fn fmt_signed(points: i64) -> String {
    if points > 0 {
        format!("+{points}")
    } else {
        points.to_string()
    }
}

fn fmt_percent(fraction: f64) -> String {
    format!("{}%", round_half_up(fraction * 100.0, 1))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountsRow {
    pub tally: ClaimTally,
    /// `None` when there are no claims.
    pub percent_yes: Option<u64>,
    pub test: Option<BinomialTestResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntityReport {
    pub entity: String,
    pub rows: Vec<CountsRow>,
    /// Video minus text `%YES`, in points.
    pub media_difference: Option<i64>,
    pub mean_proportion: Option<f64>,
    pub decision: Option<DecisionReport>,
    /// Why `decision` is absent, if it is.
    pub decision_error: Option<String>,
}

impl EntityReport {
    fn row(&self, media: Media) -> Option<&ClaimTally> {
        self.rows.iter().map(|r| &r.tally).find(|t| t.media == media)
    }
}

/// Groups tallies by entity (first-seen order) and computes every statistic.
/// Statistics that are undefined for an entity are left empty rather than failing.
pub fn build_reports(tallies: &[ClaimTally], weights: Option<&Weights>, null_p: f64, alpha: f64) -> Vec<EntityReport> {
    let mut entities: Vec<&str> = Vec::new();
    for t in tallies {
        if !entities.contains(&t.entity.as_str()) {
            entities.push(&t.entity);
        }
    }
    entities
        .into_iter()
        .map(|entity| {
            let own: Vec<ClaimTally> = tallies.iter().filter(|t| t.entity == entity).cloned().collect();
            let rows = own
                .iter()
                .map(|t| CountsRow {
                    tally: t.clone(),
                    percent_yes: percent_yes(t).ok(),
                    test: binomial_test(t.yes, t.no, null_p, alpha).ok(),
                })
                .collect();
            let mut report = EntityReport {
                entity: entity.to_string(),
                rows,
                media_difference: None,
                mean_proportion: None,
                decision: None,
                decision_error: None,
            };
            if let (Some(text), Some(video)) = (report.row(Media::Text).cloned(), report.row(Media::Video).cloned()) {
                report.media_difference = media_difference(&text, &video).ok();
                report.mean_proportion = mean_proportion(&text, &video).ok();
            }
            match decide(&own, weights, null_p, alpha) {
                Ok(d) => report.decision = Some(d),
                Err(e) => report.decision_error = Some(e.to_string()),
            }
            report
        })
        .collect()
}

const COUNT_HEADERS: [&str; 11] = [
    "ENTITY", "MEDIA", "#URLS", "#CLAIMS", "YES", "NO", "%YES", "P_VALUE", "CI_LOW", "CI_HIGH", "VERDICT",
];

fn count_cells(row: &CountsRow) -> Vec<String> {
    let t = &row.tally;
    let mut cells = vec![
        t.entity.clone(),
        t.media.to_string(),
        t.n_urls.to_string(),
        t.n_claims.to_string(),
        t.yes.to_string(),
        t.no.to_string(),
        row.percent_yes.map_or_else(|| MISSING.to_string(), fmt_hundredths),
    ];
    match &row.test {
        Some(test) => cells.extend([
            format!("{:.6}", test.p_value),
            format!("{:.4}", test.ci_low),
            format!("{:.4}", test.ci_high),
            test.verdict.to_string(),
        ]),
        None => cells.extend(std::iter::repeat_n(MISSING.to_string(), 4)),
    }
    cells
}

pub fn counts_csv(reports: &[EntityReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COUNT_HEADERS).expect("in-memory write");
    for row in reports.iter().flat_map(|r| &r.rows) {
        w.write_record(count_cells(row)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn aligned(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &mut dyn Iterator<Item = &str>| {
        let padded: Vec<String> = cells
            .zip(&widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        out.push_str(padded.join("  ").trim_end());
        out.push('\n');
    };
    line(&mut headers.iter().copied());
    for row in rows {
        line(&mut row.iter().map(String::as_str));
    }
    out
}

/// Counts table plus per-entity difference, mean and decision lines.
pub fn counts_text(reports: &[EntityReport]) -> String {
    let rows: Vec<Vec<String>> = reports.iter().flat_map(|r| &r.rows).map(count_cells).collect();
    let mut out = aligned(&COUNT_HEADERS, &rows);
    out.push('\n');
    for r in reports {
        let diff = r.media_difference.map_or_else(|| MISSING.to_string(), fmt_signed);
        let mean = r.mean_proportion.map_or_else(|| MISSING.to_string(), fmt_percent);
        let _ = writeln!(
            out,
            "{}: video-text difference {diff} points, mean proportion {mean}",
            r.entity
        );
        match (&r.decision, &r.decision_error) {
            (Some(d), _) => {
                let _ = writeln!(
                    out,
                    "{}: combined score {:.4}, pooled {}/{}, CI [{:.4}, {:.4}], {}",
                    r.entity, d.combined_score, d.pooled_yes, d.pooled_n, d.ci_low, d.ci_high, d.verdict
                );
            }
            (None, Some(e)) => {
                let _ = writeln!(out, "{}: no decision ({e})", r.entity);
            }
            (None, None) => {}
        }
    }
    out
}

pub fn reports_json(reports: &[EntityReport]) -> String {
    serde_json::to_string_pretty(reports).expect("report serializes") + "\n"
}

/// Per-video table with a trailing TOTAL AVERAGE row.
pub fn per_video_csv(report: &CrowdReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["video_id", "n_ratings", "avg_bias", "avg_rating"])
        .expect("in-memory write");
    for v in &report.per_video {
        w.write_record([
            v.video_id.clone(),
            v.n_ratings.to_string(),
            fmt_fraction(v.avg_bias),
            fmt_fraction(v.avg_rating),
        ])
        .expect("in-memory write");
    }
    w.write_record([
        "TOTAL AVERAGE".to_string(),
        report.accepted_ratings.to_string(),
        fmt_fraction(report.avg_bias),
        fmt_fraction(report.avg_rating),
    ])
    .expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn histogram_csv<const N: usize>(h: &Histogram<N>, labels: &[&str; N]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["category", "count", "percent"])
        .expect("in-memory write");
    for ((label, count), pct) in labels.iter().zip(h.bins).zip(h.percents()) {
        w.write_record([label.to_string(), count.to_string(), pct.to_string()])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn bias_histogram_csv(report: &CrowdReport) -> String {
    histogram_csv(&report.bias_histogram, &BIAS_LABELS)
}

pub fn rating_histogram_csv(report: &CrowdReport) -> String {
    histogram_csv(&report.rating_histogram, &RATING_LABELS)
}

pub fn posterior_histogram_csv(report: &CrowdReport) -> String {
    histogram_csv(&report.posterior_histogram, &BIAS_LABELS)
}

fn pct_list<const N: usize>(h: &Histogram<N>) -> String {
    h.percents().map(|p| format!("{p}%")).join("/")
}

pub fn crowd_summary_text(report: &CrowdReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "accepted {} of {} ratings over {} videos",
        report.accepted_ratings,
        report.total_ratings,
        report.per_video.len()
    );
    let _ = writeln!(
        out,
        "per-video mean: avg bias {}, avg rating {}, shift {} points",
        fmt_fraction(report.avg_bias),
        fmt_fraction(report.avg_rating),
        fmt_signed(report.shift_points as i64)
    );
    let _ = writeln!(
        out,
        "pooled mean: avg bias {}, avg rating {}, shift {} points",
        fmt_fraction(report.pooled_avg_bias),
        fmt_fraction(report.pooled_avg_rating),
        fmt_signed(report.pooled_shift_points as i64)
    );
    let _ = writeln!(out, "prior bias: {}", pct_list(&report.bias_histogram));
    let _ = writeln!(out, "ratings: {}", pct_list(&report.rating_histogram));
    let _ = writeln!(out, "posterior: {}", pct_list(&report.posterior_histogram));
    out
}
