//! Command-line front end for `lexnet`.
//!
//! Exit codes: 0 success, 1 domain error (invalid corpus or config,
//! infeasible generation), 2 I/O error.

pub mod config;
pub mod run;

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use lexnet::ingest::{generate_synthetic, load_corpus, parse_corpus, save_corpus, SynthConfig};
use lexnet::metrics::{self, ShareNormalization};
use lexnet::perspective::NetworkSpace;
use lexnet::projection::{mean_strengths, project_in, strength, Direction, GroupBy, Normalization, PresenceRule, WeightingMode};
use lexnet::report::{self, Format, Table, DEFAULT_DIGITS};
use lexnet::scalar::parse_ratio;
use lexnet::{validate, LevelTag, Mass, NodeFilter, Perspective, Side, SplitRule, WeightingSpec};

pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "lexnet", version, about = "Multi-perspective analysis of court-to-legislation citation networks")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// JSON config: a run config for `run`, a synthetic config for `generate`.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides the seed of a synthetic config.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory (`run`) or file (other commands; stdout if omitted).
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Table format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
    /// Worker threads for `run`; 0 picks one per core.
    #[arg(long, global = true, default_value_t = 0, value_name = "N")]
    pub threads: usize,
    /// Fractional digits in decimal columns.
    #[arg(long, global = true, default_value_t = DEFAULT_DIGITS, value_name = "N")]
    pub digits: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a corpus file against all structural invariants; the report goes to stderr.
    Validate {
        corpus: PathBuf,
    },
    /// Generate a seeded synthetic corpus from --config (defaults if omitted).
    Generate,
    /// Run a full configuration (--config) into an output directory (--out).
    Run,
    /// Derive one bipartite network and print its edge list.
    Derive {
        corpus: PathBuf,
        #[command(flatten)]
        perspective: PerspectiveArgs,
    },
    /// Build one one-mode projection and print its edge list.
    Project {
        corpus: PathBuf,
        #[command(flatten)]
        perspective: PerspectiveArgs,
        #[command(flatten)]
        weighting: WeightingArgs,
    },
    /// Compute one metric.
    Metric {
        corpus: PathBuf,
        #[arg(value_enum)]
        metric: MetricName,
        #[command(flatten)]
        perspective: PerspectiveArgs,
        #[command(flatten)]
        weighting: WeightingArgs,
        /// Threshold k for decisions-at-least.
        #[arg(long, default_value_t = 1)]
        threshold_k: u64,
        /// Overrepresentation threshold, e.g. 1/4.
        #[arg(long, default_value = "1/4")]
        threshold: String,
        /// Focal legislative node for target/source distributions.
        #[arg(long)]
        focal: Option<String>,
        /// Source grouping: a judicial level name, or attr:<key>.
        #[arg(long, default_value = "court")]
        group_by: String,
        #[arg(long, value_enum, default_value = "corpus-total")]
        share: ShareArg,
        #[arg(long, value_enum, default_value = "incoming")]
        direction: DirectionArg,
        #[arg(long, value_enum, default_value = "sum")]
        normalization: NormalizationArg,
    },
}

#[derive(Debug, Args)]
pub struct PerspectiveArgs {
    /// Judicial level: court, panel, decision, paragraph.
    #[arg(long, default_value = "decision")]
    pub judicial: String,
    /// Legislative level: statute, section, sub, sub2, sub3.
    #[arg(long, default_value = "section")]
    pub legislative: String,
    /// Judicial filter as JSON, e.g. '{"attr_eq":{"key":"area","value":"tax"}}'.
    #[arg(long)]
    pub judicial_filter: Option<String>,
    /// Legislative filter as JSON, e.g. '{"ancestor_in":{"ids":["B"]}}'.
    #[arg(long)]
    pub legislative_filter: Option<String>,
    /// Split rule for dynamic counting.
    #[arg(long, value_enum, default_value = "per-child")]
    pub split: SplitArg,
}

#[derive(Debug, Args)]
pub struct WeightingArgs {
    #[arg(long, value_enum, default_value = "unit-count")]
    pub mode: ModeArg,
    /// Witness level (judicial).
    #[arg(long, default_value = "paragraph")]
    pub witness: String,
    #[arg(long, default_value_t = 1)]
    pub k: u64,
    /// Count co-reference events (min mass) instead of units.
    #[arg(long)]
    pub multiplicity: bool,
    #[arg(long, value_enum, default_value = "legislative")]
    pub side: SideArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MetricName {
    InDegree,
    DecisionsAtLeast,
    Strength,
    MeanStrength,
    Overrepresentation,
    Target,
    Source,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModeArg {
    UnitCount,
    EventCount,
    Combined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SideArg {
    Legislative,
    Judicial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SplitArg {
    PerChild,
    UniformFrontier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ShareArg {
    CorpusTotal,
    PerGroupTotal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum DirectionArg {
    Incoming,
    Outgoing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum NormalizationArg {
    Sum,
    Max,
}

fn domain(msg: String) -> anyhow::Error {
    lexnet::Error::InvalidArgument(msg).into()
}

fn level(name: &str) -> Result<LevelTag> {
    LevelTag::from_name(name).ok_or_else(|| domain(format!("unknown level {name:?}")))
}

fn filter(json: &Option<String>) -> Result<NodeFilter> {
    match json {
        None => Ok(NodeFilter::All),
        Some(text) => serde_json::from_str(text).map_err(|e| domain(format!("filter {text}: {e}"))),
    }
}

impl PerspectiveArgs {
    fn perspective(&self) -> Result<Perspective> {
        let p = Perspective::new(level(&self.judicial)?, level(&self.legislative)?)
            .with_judicial_filter(filter(&self.judicial_filter)?)
            .with_legislative_filter(filter(&self.legislative_filter)?);
        p.check()?;
        Ok(p)
    }

    fn rule(&self) -> SplitRule {
        match self.split {
            SplitArg::PerChild => SplitRule::PerChild,
            SplitArg::UniformFrontier => SplitRule::UniformFrontier,
        }
    }
}

impl WeightingArgs {
    fn spec(&self) -> Result<WeightingSpec> {
        let mode = match self.mode {
            ModeArg::UnitCount => WeightingMode::UnitCount,
            ModeArg::EventCount => WeightingMode::EventCount,
            ModeArg::Combined => WeightingMode::Combined,
        };
        let presence = if self.multiplicity { PresenceRule::Multiplicity } else { PresenceRule::Binary };
        Ok(WeightingSpec { descriptive_rank: level(&self.witness)?, mode, k: self.k, presence_rule: presence })
    }

    fn side(&self) -> Side {
        match self.side {
            SideArg::Legislative => Side::Legislative,
            SideArg::Judicial => Side::Judicial,
        }
    }
}

/// 2 for I/O failures anywhere in the chain, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
        if let Some(lexnet::Error::Io(_)) = cause.downcast_ref::<lexnet::Error>() {
            return 2;
        }
    }
    1
}

/// Runs the parsed command; the returned code is the process exit status.
pub fn execute(cli: Cli) -> i32 {
    let threads = cli.global.threads;
    let outcome = if threads > 0 {
        match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => Err(anyhow::anyhow!("thread pool: {e}")),
        }
    } else {
        dispatch(&cli)
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

fn emit_text(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let g = &cli.global;
    let format: Format = g.format.map(Into::into).unwrap_or_default();
    match &cli.command {
        Command::Validate { corpus } => cmd_validate(corpus),
        Command::Generate => {
            let cfg = match &g.config {
                Some(path) => {
                    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                    SynthConfig::from_json(&text)?
                }
                None => SynthConfig::default(),
            };
            let cfg = match g.seed {
                Some(s) => cfg.with_seed(s),
                None => cfg,
            };
            let generated = generate_synthetic(&cfg)?;
            let out = g.out.clone().ok_or_else(|| domain("generate needs --out FILE".into()))?;
            save_corpus(&generated.base, &out).with_context(|| format!("writing {}", out.display()))?;
            let mut summary = format!(
                "generated {} nodes, {} reference edges, total multiplicity {} (seed {})",
                generated.base.node_count(),
                generated.base.refs().len(),
                generated.base.total_references(),
                cfg.seed
            );
            if let Some(p) = &generated.planted.procedural {
                summary.push_str(&format!(
                    "; planted procedural norm {} in {} decisions ({} mentions)",
                    p.node, p.decisions, p.mentions
                ));
            }
            for (i, c) in generated.planted.clusters.iter().enumerate() {
                let ids: Vec<&str> = c.sections.iter().map(|s| s.as_str()).collect();
                summary.push_str(&format!("; cluster {i}: {} in {} paragraphs", ids.join(","), c.paragraphs.len()));
            }
            println!("{summary}");
            Ok(0)
        }
        Command::Run => {
            let path = g.config.as_ref().ok_or_else(|| domain("run needs --config PATH".into()))?;
            let mut cfg = RunConfig::load(path)?;
            if let Some(f) = g.format {
                cfg.format = f.into();
            }
            if g.digits != DEFAULT_DIGITS {
                cfg.digits = g.digits;
            }
            let out = g
                .out
                .clone()
                .or_else(|| cfg.out.clone())
                .ok_or_else(|| domain("run needs --out DIR (or \"out\" in the config)".into()))?;
            let manifest = run::run(&cfg, &out, g.seed)?;
            eprintln!(
                "wrote {} files for {} perspectives to {} ({} outputs skipped)",
                manifest.files.len(),
                manifest.perspectives.len(),
                out.display(),
                manifest.skipped.len()
            );
            Ok(0)
        }
        Command::Derive { corpus, perspective } => {
            let base = load_corpus(corpus)?;
            let space = NetworkSpace::<Mass>::with_rule(&base, perspective.rule());
            let net = space.derive(&perspective.perspective()?)?;
            emit_text(&g.out, &report::bipartite_edges(&net, &base, g.digits).render(format))?;
            Ok(0)
        }
        Command::Project { corpus, perspective, weighting } => {
            let base = load_corpus(corpus)?;
            let space = NetworkSpace::<Mass>::with_rule(&base, perspective.rule());
            let graph = project_in(&space, &perspective.perspective()?, &weighting.spec()?, weighting.side())?;
            emit_text(&g.out, &report::projection_edges(&graph, g.digits).render(format))?;
            Ok(0)
        }
        Command::Metric {
            corpus,
            metric,
            perspective,
            weighting,
            threshold_k,
            threshold,
            focal,
            group_by,
            share,
            direction,
            normalization,
        } => {
            let base = load_corpus(corpus)?;
            let space = NetworkSpace::<Mass>::with_rule(&base, perspective.rule());
            let p = perspective.perspective()?;
            let need_focal = || focal.clone().ok_or_else(|| domain("this metric needs --focal ID".into()));
            let project = || -> Result<_> { Ok(project_in(&space, &p, &weighting.spec()?, weighting.side())?) };
            let table: Table = match metric {
                MetricName::InDegree => report::rank_table(&metrics::in_degree_in(&space, &p)?.with_labels(&base), g.digits),
                MetricName::DecisionsAtLeast => {
                    report::rank_table(&metrics::decisions_with_at_least_in(&space, &p, *threshold_k)?.with_labels(&base), g.digits)
                }
                MetricName::Strength => {
                    let dir = match direction {
                        DirectionArg::Incoming => Direction::Incoming,
                        DirectionArg::Outgoing => Direction::Outgoing,
                    };
                    let norm = match normalization {
                        NormalizationArg::Sum => Normalization::Sum,
                        NormalizationArg::Max => Normalization::Max,
                    };
                    report::strength_matrix(&strength(&project()?, dir, norm), g.digits)
                }
                MetricName::MeanStrength => report::mean_strength_table(&mean_strengths(&project()?), g.digits),
                MetricName::Overrepresentation => {
                    let t = parse_ratio(threshold).ok_or_else(|| domain(format!("threshold {threshold:?} is not a number")))?;
                    report::rank_table(&metrics::overrepresentation(&project()?, &t)?.with_labels(&base), g.digits)
                }
                MetricName::Target => report::target_distribution(&metrics::target_distribution::<Mass>(&base, &need_focal()?)?, g.digits),
                MetricName::Source => {
                    let group = match group_by.strip_prefix("attr:") {
                        Some(key) => GroupBy::Attribute(key.to_owned()),
                        None => GroupBy::Level(level(group_by)?),
                    };
                    let norm = match share {
                        ShareArg::CorpusTotal => ShareNormalization::CorpusTotal,
                        ShareArg::PerGroupTotal => ShareNormalization::PerGroupTotal,
                    };
                    report::source_distribution(&metrics::source_distribution(&space, &need_focal()?, &group, norm)?, g.digits)
                }
            };
            emit_text(&g.out, &table.render(format))?;
            Ok(0)
        }
    }
}

fn cmd_validate(path: &Path) -> Result<i32> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let base = match parse_corpus(std::io::BufReader::new(file)) {
        Ok(b) => b,
        Err(lexnet::Error::Io(e)) => return Err(anyhow::Error::new(e).context(format!("reading {}", path.display()))),
        Err(e) => {
            eprintln!("{}: 1 violation", path.display());
            eprintln!("  {e}");
            return Ok(1);
        }
    };
    let report = validate(&base);
    if report.is_empty() {
        eprintln!("{}: valid ({} nodes, {} references)", path.display(), base.node_count(), base.total_references());
        return Ok(0);
    }
    eprintln!("{}: {} violation(s)", path.display(), report.violations.len());
    for v in &report.violations {
        eprintln!("  {v}");
    }
    Ok(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn io_errors_map_to_two() {
        let e = anyhow::Error::new(std::io::Error::new(std::io::ErrorKind::NotFound, "x")).context("reading");
        assert_eq!(exit_code(&e), 2);
        let e: anyhow::Error = lexnet::Error::Invalid("x".into()).into();
        assert_eq!(exit_code(&e), 1);
        let e: anyhow::Error = lexnet::Error::Io(std::io::Error::other("x")).into();
        assert_eq!(exit_code(&e), 2);
    }
}
