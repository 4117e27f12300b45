use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chrono::Utc;
use clap::{ArgAction, Args, Parser, Subcommand};
use log::LevelFilter;
use serde_json::json;

use wikipersona::ingest::{
    self, EligibilityCriteria, MediaWikiClient, QualityClass, DEFAULT_API_URL,
    DEFAULT_MAX_IN_FLIGHT,
};
use wikipersona::personas::ClassifierConfig;
use wikipersona::pool;
use wikipersona::report::{
    analyze_article, render_oscillation_chart, run_study, write_persona_csv, StudyManifest,
};
use wikipersona::stats::{chi_square_independence, read_contingency_csv, write_table_report};
use wikipersona::timeline::{derivative_series, CorrelationMode};

const EXIT_PARTIAL: u8 = 1;
const EXIT_FATAL: u8 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "wikipersona",
    version,
    about = "Mine Wikipedia revision histories for editor personas and compare them across article quality classes"
)]
struct Cli {
    /// MediaWiki Action API endpoint
    #[arg(long, env = "WIKI_API_URL", default_value = DEFAULT_API_URL, global = true)]
    api_url: String,

    /// Directory holding cached revision histories
    #[arg(
        long,
        env = "WIKI_CACHE_DIR",
        default_value = ".wiki-cache",
        global = true
    )]
    cache_dir: PathBuf,

    /// -v info, -vv debug
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fetch and cache revision histories, or sample random eligible articles
    Fetch(FetchArgs),
    /// Timeline, correlations, personas and chart for one article
    Analyze(AnalyzeArgs),
    /// Chi-square independence test on a contingency CSV
    Stats(StatsArgs),
    /// Full two-class study: Featured vs Non-Assessed
    Study(StudyArgs),
}

#[derive(Args, Debug)]
struct FetchArgs {
    /// Titles to fetch
    titles: Vec<String>,

    /// File with one title per line ('#' starts a comment)
    #[arg(long)]
    titles_file: Option<PathBuf>,

    /// Draw N random main-namespace articles and keep the eligible ones
    #[arg(long, value_name = "N", conflicts_with_all = ["titles", "titles_file"])]
    random: Option<usize>,

    #[arg(long, default_value_t = ingest::DEFAULT_MIN_EDITS)]
    min_edits: usize,

    #[arg(long, default_value_t = ingest::DEFAULT_MIN_AUTHORS)]
    min_authors: usize,

    /// Latest revisions below this many bytes count as stubs
    #[arg(long, default_value_t = ingest::DEFAULT_STUB_MAX_BYTES)]
    stub_bytes: u64,

    /// Also write the eligible titles of a --random draw to this file
    #[arg(long)]
    eligible_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ClassifierArgs {
    /// TOML file with classifier settings (flat keys); flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    top_n: Option<usize>,
    #[arg(long)]
    cowboy_max_active_quarters: Option<usize>,
    #[arg(long)]
    cowboy_peak_share: Option<f64>,
    #[arg(long)]
    rebel_negative_fraction: Option<f64>,
    #[arg(long)]
    conqueror_min_dominant_quarters: Option<usize>,
    #[arg(long)]
    sustained_min_active_fraction: Option<f64>,
    /// counts | derivatives
    #[arg(long)]
    correlation_mode: Option<CorrelationMode>,
    /// Leave out editors whose name ends in "bot"
    #[arg(long)]
    exclude_bots: bool,
}

impl ClassifierArgs {
    fn resolve(&self) -> Result<ClassifierConfig> {
        let mut cfg = match &self.config {
            Some(p) => ClassifierConfig::from_file(p)?,
            None => ClassifierConfig::default(),
        };
        macro_rules! apply {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { cfg.$f = v; } )* };
        }
        apply!(
            top_n,
            cowboy_max_active_quarters,
            cowboy_peak_share,
            rebel_negative_fraction,
            conqueror_min_dominant_quarters,
            sustained_min_active_fraction,
            correlation_mode
        );
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    title: String,

    /// featured | non-assessed | other
    #[arg(long, default_value = "other", value_parser = parse_class)]
    class: QualityClass,

    /// Write the oscillation chart (SVG) here
    #[arg(long)]
    chart: Option<PathBuf>,

    /// Write timeline, correlations and assignments as JSON here
    #[arg(long)]
    json: Option<PathBuf>,

    #[command(flatten)]
    classifier: ClassifierArgs,
}

#[derive(Args, Debug)]
struct StatsArgs {
    /// Contingency CSV: header of persona names, one row per class
    csv: PathBuf,

    /// Write the full-precision result as JSON here
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StudyArgs {
    /// Featured article titles, one per line
    #[arg(long)]
    featured: PathBuf,

    /// Non-assessed article titles, one per line
    #[arg(long = "na")]
    non_assessed: PathBuf,

    /// Output directory for the report bundle
    #[arg(long, default_value = "study-out")]
    out: PathBuf,

    #[command(flatten)]
    classifier: ClassifierArgs,
}

fn parse_class(s: &str) -> Result<QualityClass, String> {
    match s.to_ascii_lowercase().as_str() {
        "featured" | "fa" => Ok(QualityClass::Featured),
        "non-assessed" | "nonassessed" | "na" => Ok(QualityClass::NonAssessed),
        "other" => Ok(QualityClass::Other),
        _ => Err(format!("unknown quality class {s:?}")),
    }
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn cmd_fetch(cli: &Cli, args: &FetchArgs) -> Result<u8> {
    let client = MediaWikiClient::from_url(&cli.api_url);
    if let Some(n) = args.random {
        return fetch_random(cli, args, &client, n);
    }
    let mut titles: Vec<String> = args
        .titles
        .iter()
        .map(|t| ingest::normalize_title(t))
        .collect();
    if let Some(path) = &args.titles_file {
        titles.extend(ingest::read_title_list(path)?);
    }
    if titles.is_empty() {
        bail!("nothing to fetch: give titles, --titles-file or --random N");
    }
    let results = ingest::fetch_many(&client, &titles, &cli.cache_dir, DEFAULT_MAX_IN_FLIGHT);
    let mut failed = 0;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for (title, result) in titles.iter().zip(results) {
        match result {
            Ok(records) => writeln!(out, "{title}\t{}", records.len())?,
            Err(e) => {
                failed += 1;
                eprintln!("{title}: {e}");
            }
        }
    }
    Ok(if failed > 0 { EXIT_PARTIAL } else { 0 })
}

fn fetch_random(cli: &Cli, args: &FetchArgs, client: &MediaWikiClient, n: usize) -> Result<u8> {
    let criteria = EligibilityCriteria {
        min_edits: args.min_edits,
        min_authors: args.min_authors,
        stub_max_bytes: args.stub_bytes,
    };
    let candidates = client.random_titles(n)?;
    log::info!("drew {} random candidates", candidates.len());
    let checked = pool::bounded_map(&candidates, DEFAULT_MAX_IN_FLIGHT, |title| {
        let records = ingest::fetch_revisions(client, title, &cli.cache_dir)?;
        client.article_meta(
            title,
            QualityClass::NonAssessed,
            &records,
            criteria.stub_max_bytes,
            Utc::now(),
        )
    });
    let mut eligible = Vec::new();
    let mut failed = 0;
    for (title, result) in candidates.iter().zip(checked) {
        match result {
            Ok(meta) if criteria.accepts(&meta) => eligible.push(title.clone()),
            Ok(meta) => log::info!(
                "{title}: ineligible ({} edits, {} authors, stub: {})",
                meta.revision_count,
                meta.distinct_editor_count,
                meta.is_stub
            ),
            Err(e) => {
                failed += 1;
                eprintln!("{title}: {e}");
            }
        }
    }
    eprintln!(
        "{} of {} random articles eligible (min {} edits, min {} authors, non-stub)",
        eligible.len(),
        candidates.len(),
        criteria.min_edits,
        criteria.min_authors
    );
    let listing: String = eligible.iter().map(|t| format!("{t}\n")).collect();
    print!("{listing}");
    if let Some(path) = &args.eligible_out {
        write_output(path, listing.as_bytes())?;
    }
    Ok(if failed > 0 { EXIT_PARTIAL } else { 0 })
}

fn cmd_analyze(cli: &Cli, args: &AnalyzeArgs) -> Result<u8> {
    let config = args.classifier.resolve()?;
    let client = MediaWikiClient::from_url(&cli.api_url);
    let analysis = analyze_article(
        &client,
        &args.title,
        args.class,
        &cli.cache_dir,
        &config,
        args.classifier.exclude_bots,
    )?;
    write_persona_csv(&analysis.assignments, io::stdout().lock())?;
    if let Some(path) = &args.chart {
        let svg = render_oscillation_chart(&analysis.timeline, &analysis.assignments);
        write_output(path, svg.as_bytes())?;
    }
    if let Some(path) = &args.json {
        let derivatives: Vec<_> = analysis
            .timeline
            .series
            .iter()
            .map(
                |s| json!({"editor_key": s.editor_key, "derivative": derivative_series(&s.counts)}),
            )
            .collect();
        let doc = json!({
            "config": config,
            "distinct_editors": analysis.distinct_editors,
            "timeline": analysis.timeline,
            "start_quarter_label": analysis.timeline.start_quarter.to_string(),
            "derivatives": derivatives,
            "correlation": analysis.correlation,
            "assignments": analysis.assignments,
        });
        let mut bytes = serde_json::to_vec_pretty(&doc)?;
        bytes.push(b'\n');
        write_output(path, &bytes)?;
    }
    Ok(0)
}

fn cmd_stats(args: &StatsArgs) -> Result<u8> {
    let mut table = read_contingency_csv(&args.csv)?;
    let dropped = table.drop_empty_columns();
    if !dropped.is_empty() {
        eprintln!("dropping empty columns: {}", dropped.join(", "));
    }
    let result = chi_square_independence(&table)?;
    write_table_report(&table, Some(&result), io::stdout().lock())?;
    if let Some(path) = &args.json {
        let doc = json!({ "table": table, "dropped_columns": dropped, "result": result });
        let mut bytes = serde_json::to_vec_pretty(&doc)?;
        bytes.push(b'\n');
        write_output(path, &bytes)?;
    }
    Ok(0)
}

fn cmd_study(cli: &Cli, args: &StudyArgs) -> Result<u8> {
    let manifest = StudyManifest {
        featured_titles: ingest::read_title_list(&args.featured)?,
        non_assessed_titles: ingest::read_title_list(&args.non_assessed)?,
        config: args.classifier.resolve()?,
        cache_dir: cli.cache_dir.clone(),
        output_dir: args.out.clone(),
        exclude_bots: args.classifier.exclude_bots,
    };
    let client = MediaWikiClient::from_url(&cli.api_url);
    let report = run_study(&manifest, &client)?;
    eprintln!(
        "analyzed {} articles, skipped {}; bundle written to {}",
        report.articles.len(),
        report.errors.len(),
        args.out.display()
    );
    match (&report.chi_square, &report.chi_square_error) {
        (Some(r), _) => eprintln!(
            "chi-square {:.2}, df {}, p-value {:.6}",
            r.statistic, r.df, r.p_value
        ),
        (None, Some(e)) => eprintln!("chi-square test not run: {e}"),
        (None, None) => {}
    }
    for e in &report.errors {
        eprintln!("skipped {}: {}", e.article_key, e.message);
    }
    Ok(if report.errors.is_empty() {
        0
    } else {
        EXIT_PARTIAL
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        _ => LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();

    let result = match &cli.command {
        Command::Fetch(a) => cmd_fetch(&cli, a),
        Command::Analyze(a) => cmd_analyze(&cli, a),
        Command::Stats(a) => cmd_stats(a),
        Command::Study(a) => cmd_study(&cli, a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FATAL)
        }
    }
}
