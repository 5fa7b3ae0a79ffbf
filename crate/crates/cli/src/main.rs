//! `evidence`: detect polarized claims, report per-media evidence, and
//! summarize crowd ratings.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use evidence_core::aggregate::{
    read_tallies, read_url_counts, write_url_counts, UrlCount, DEFAULT_ALPHA, DEFAULT_NULL_P,
};
use evidence_core::claim::{read_claims, write_claims};
use evidence_core::crowd::{crowd_report, read_ratings};
use evidence_core::report::{self, build_reports, counts_csv, counts_text, reports_json};
use evidence_core::validate::{validate_inputs, ValidationInputs};
use evidence_core::{extract_claims, load_corpus, tally, ClaimTally, HypothesisSpec, Media, Weights};
use serde::Deserialize;

#[derive(Parser)]
#[command(
    name = "evidence",
    version,
    about = "Claim evidence from parsed web results and crowd ratings"
)]
struct Cli {
    /// JSON file with defaults for null_p, alpha, weights and format. Flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract at most one polarized claim per record.
    Detect(DetectArgs),
    /// Tally claims per media, test them and render the counts table.
    Report(ReportArgs),
    /// Summarize crowd ratings.
    Crowd(CrowdArgs),
    /// Check input files and print every finding.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    records: PathBuf,
    #[arg(long)]
    parses: PathBuf,
    #[arg(long)]
    spec: PathBuf,
    /// Output directory for claims.jsonl and urls.csv.
    #[arg(long)]
    out: PathBuf,
    /// Entity label for urls.csv; defaults to the spec's entity name.
    #[arg(long)]
    entity: Option<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// Claims files written by `detect`, as PATH or ENTITY=PATH.
    #[arg(long, num_args = 1.., requires = "urls", conflicts_with = "tallies")]
    claims: Vec<String>,
    /// Url counts (entity,media,n_urls) matching the claims files.
    #[arg(long)]
    urls: Option<PathBuf>,
    /// Tallies entered directly: entity,media,n_urls,yes,no.
    #[arg(long, required_unless_present = "claims")]
    tallies: Option<PathBuf>,
    /// Media weights, e.g. text=0.5,video=0.5. Defaults to equal weights.
    #[arg(long)]
    weights: Option<String>,
    #[arg(long)]
    null_p: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CrowdArgs {
    #[arg(long)]
    ratings: PathBuf,
    /// Output directory for the per-video table, histograms and summary.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    records: Option<PathBuf>,
    #[arg(long)]
    parses: Option<PathBuf>,
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    ratings: Option<PathBuf>,
    #[arg(long)]
    weights: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
    #[default]
    Text,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Config {
    null_p: Option<f64>,
    alpha: Option<f64>,
    weights: Option<String>,
    format: Option<Format>,
}

/// Failures split by exit code.
enum Failure {
    /// Bad invocation or a missing input path (exit 2).
    Usage(anyhow::Error),
    /// Inputs were read but are invalid (exit 1).
    Data(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

impl From<evidence_core::Error> for Failure {
    fn from(e: evidence_core::Error) -> Self {
        Failure::Data(e.into())
    }
}

type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(anyhow!(msg.into()))
}

fn require_existing<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Outcome {
    for path in paths {
        if !path.exists() {
            return Err(usage(format!("input not found: {}", path.display())));
        }
    }
    Ok(())
}

fn load_config(path: Option<&Path>) -> Result<Config, Failure> {
    let Some(path) = path else {
        return Ok(Config::default());
    };
    require_existing([path])?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("config {}", path.display()))
        .map_err(Failure::Usage)
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn write_file(path: &Path, body: &[u8]) -> anyhow::Result<()> {
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn detect(args: &DetectArgs) -> Outcome {
    require_existing([args.records.as_path(), args.parses.as_path(), args.spec.as_path()])?;
    let spec_text = fs::read_to_string(&args.spec).with_context(|| format!("reading {}", args.spec.display()))?;
    let spec = HypothesisSpec::from_json(&spec_text).with_context(|| format!("spec {}", args.spec.display()))?;
    let entity = args.entity.clone().unwrap_or_else(|| spec.entity_name.clone());

    let corpus = load_corpus(&args.records, &args.parses)?.with_entity_label(&entity);
    let claims = extract_claims(&corpus, &spec);

    create_dir(&args.out)?;
    let mut buf = Vec::new();
    write_claims(&mut buf, &claims)?;
    write_file(&args.out.join("claims.jsonl"), &buf)?;

    let counts: Vec<UrlCount> = corpus
        .url_counts()
        .into_iter()
        .map(|(media, n_urls)| UrlCount {
            entity: entity.clone(),
            media,
            n_urls,
        })
        .collect();
    let mut buf = Vec::new();
    write_url_counts(&mut buf, &counts)?;
    write_file(&args.out.join("urls.csv"), &buf)?;

    for c in &counts {
        let in_media: Vec<_> = claims.iter().filter(|cl| cl.media == c.media).collect();
        let yes = in_media.iter().filter(|cl| cl.positive).count();
        println!(
            "{} {}: urls={} claims={} yes={} no={}",
            entity,
            c.media,
            c.n_urls,
            in_media.len(),
            yes,
            in_media.len() - yes
        );
    }
    let yes = claims.iter().filter(|c| c.positive).count();
    println!("claims={} yes={} no={}", claims.len(), yes, claims.len() - yes);
    Ok(())
}

fn parse_unit(name: &str, value: f64) -> Result<f64, Failure> {
    if value > 0.0 && value < 1.0 {
        Ok(value)
    } else {
        Err(usage(format!(
            "--{name} must lie strictly between 0 and 1, got {value}"
        )))
    }
}

fn tallies_from_claims(specs: &[String], urls: &Path) -> Result<Vec<ClaimTally>, Failure> {
    let counts = read_url_counts(open(urls)?).with_context(|| format!("url counts {}", urls.display()))?;
    let mut by_entity: BTreeMap<&str, BTreeMap<Media, u64>> = BTreeMap::new();
    let mut entity_order: Vec<&str> = Vec::new();
    for c in &counts {
        if !by_entity.contains_key(c.entity.as_str()) {
            entity_order.push(&c.entity);
        }
        by_entity.entry(&c.entity).or_default().insert(c.media, c.n_urls);
    }

    let mut tallies = Vec::new();
    for spec in specs {
        let (entity, path) = match spec.split_once('=') {
            Some((entity, path)) => (entity.to_string(), PathBuf::from(path)),
            None => match entity_order.as_slice() {
                [only] => (only.to_string(), PathBuf::from(spec)),
                _ => {
                    return Err(usage(format!(
                        "{spec}: name the entity as ENTITY=PATH when {} lists {} entities",
                        urls.display(),
                        entity_order.len()
                    )))
                }
            },
        };
        require_existing([path.as_path()])?;
        let url_counts = by_entity
            .get(entity.as_str())
            .ok_or_else(|| anyhow!("{} has no url counts for {entity}", urls.display()))?;
        let claims = read_claims(open(&path)?).with_context(|| format!("claims {}", path.display()))?;
        tallies.extend(tally(&claims, url_counts, &entity).with_context(|| format!("claims {}", path.display()))?);
    }
    Ok(tallies)
}

fn run_report(args: &ReportArgs, config: &Config) -> Outcome {
    let null_p = parse_unit("null-p", args.null_p.or(config.null_p).unwrap_or(DEFAULT_NULL_P))?;
    let alpha = parse_unit("alpha", args.alpha.or(config.alpha).unwrap_or(DEFAULT_ALPHA))?;
    let weights = match args.weights.as_ref().or(config.weights.as_ref()) {
        Some(text) => {
            let w: Weights = text.parse().map_err(|e: evidence_core::Error| usage(e.to_string()))?;
            w.validate().map_err(|e| usage(e.to_string()))?;
            Some(w)
        }
        None => None,
    };
    let format = args.format.or(config.format).unwrap_or_default();

    let tallies = match (&args.tallies, &args.urls) {
        (Some(path), _) => {
            require_existing([path.as_path()])?;
            read_tallies(open(path)?).with_context(|| format!("tallies {}", path.display()))?
        }
        (None, Some(urls)) => {
            require_existing([urls.as_path()])?;
            tallies_from_claims(&args.claims, urls)?
        }
        (None, None) => return Err(usage("give --tallies, or --claims with --urls")),
    };

    let reports = build_reports(&tallies, weights.as_ref(), null_p, alpha);
    for r in &reports {
        if let Some(msg) = &r.decision_error {
            log::warn!("{}: no combined decision: {msg}", r.entity);
        }
    }
    let body = match format {
        Format::Csv => counts_csv(&reports),
        Format::Json => reports_json(&reports),
        Format::Text => counts_text(&reports),
    };
    match &args.out {
        Some(path) => write_file(path, body.as_bytes())?,
        None => std::io::stdout().write_all(body.as_bytes()).context("writing report")?,
    }
    Ok(())
}

fn crowd(args: &CrowdArgs) -> Outcome {
    require_existing([args.ratings.as_path()])?;
    let ratings = read_ratings(open(&args.ratings)?).with_context(|| format!("ratings {}", args.ratings.display()))?;
    let summary = crowd_report(&ratings)?;

    create_dir(&args.out)?;
    write_file(
        &args.out.join("per_video.csv"),
        report::per_video_csv(&summary).as_bytes(),
    )?;
    write_file(
        &args.out.join("bias_histogram.csv"),
        report::bias_histogram_csv(&summary).as_bytes(),
    )?;
    write_file(
        &args.out.join("rating_histogram.csv"),
        report::rating_histogram_csv(&summary).as_bytes(),
    )?;
    write_file(
        &args.out.join("posterior_histogram.csv"),
        report::posterior_histogram_csv(&summary).as_bytes(),
    )?;
    let json = serde_json::to_string_pretty(&summary).context("serializing crowd summary")? + "\n";
    write_file(&args.out.join("summary.json"), json.as_bytes())?;

    print!("{}", report::crowd_summary_text(&summary));
    Ok(())
}

fn validate(args: &ValidateArgs) -> Outcome {
    let inputs = ValidationInputs {
        records: args.records.clone(),
        parses: args.parses.clone(),
        spec: args.spec.clone(),
        ratings: args.ratings.clone(),
        weights: args.weights.clone(),
    };
    let given: Vec<&Path> = [&inputs.records, &inputs.parses, &inputs.spec, &inputs.ratings]
        .into_iter()
        .flatten()
        .map(PathBuf::as_path)
        .collect();
    if given.is_empty() && inputs.weights.is_none() {
        return Err(usage("nothing to validate"));
    }
    require_existing(given)?;

    let findings = validate_inputs(&inputs);
    for f in &findings {
        println!("{f}");
    }
    println!("{} findings", findings.len());
    if findings.is_empty() {
        Ok(())
    } else {
        Err(Failure::Data(anyhow!("validation failed")))
    }
}

fn run(cli: &Cli) -> Outcome {
    let config = load_config(cli.config.as_deref())?;
    match &cli.command {
        Command::Detect(args) => detect(args),
        Command::Report(args) => run_report(args, &config),
        Command::Crowd(args) => crowd(args),
        Command::Validate(args) => validate(args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EVIDENCE_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
