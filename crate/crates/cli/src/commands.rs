//! One struct per subcommand. Every command resolves a `PipelineConfig`, writes
//! its artefacts into the output directory and finishes with a manifest.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use ccid_core::botnets::{self, BotnetTimeline};
use ccid_core::ccid::{self, detect_all, sweep_jaccard, sweep_window, write_events, JaccardSweepRow};
use ccid_core::community::CommunityAssignment;
use ccid_core::copygraph::{self, build_graph, export_graph, filter_graph, import_graph, CopyGraph, GraphFormat};
use ccid_core::corpus::{self, AccountId, CorpusIndex, LoadOptions};
use ccid_core::features::{self, compare_cdf, compute_features, creation_histogram};
use ccid_core::layers::{self, LayerGraph, LayerKind};
use ccid_core::pipeline::{file_label, run_pipeline, with_workers, PipelineConfig, RunManifest};
use ccid_core::stats::CdfPoint;
use ccid_core::synth::{self, ScenarioSpec};
use ccid_core::trends;
use clap::Args;
use serde_json::{json, Value};

use crate::config::{
    overlay, parse_format, read_document, resolve, CommonArgs, CommunityArgs, DetectorArgs, EvolutionArgs,
    FilterArgs, Flags, InputArgs,
};
use crate::UsageError;

fn out_dir(cfg: &PipelineConfig) -> Result<PathBuf> {
    let dir = cfg
        .output
        .clone()
        .ok_or_else(|| UsageError("no output directory; pass --out or set `output` in the config".into()))?;
    Ok(dir)
}

/// Writes one output file, creating the directory on first use so that a run
/// failing on its inputs leaves nothing behind.
fn emit(
    m: &mut RunManifest,
    dir: &Path,
    name: &str,
    f: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> std::io::Result<()>,
) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    m.write_output(dir, name, f)?;
    Ok(())
}

/// An input that must exist; its absence is an error with status 1.
fn require<'a>(path: Option<&'a PathBuf>, what: &str, flag: &str) -> Result<&'a Path> {
    let path = path.ok_or_else(|| anyhow!("missing input: no {what} given (--{flag} or the config file)"))?;
    if !path.is_file() {
        return Err(anyhow!("missing input: {what} {} does not exist", path.display()));
    }
    Ok(path)
}

fn optional<'a>(path: Option<&'a PathBuf>, what: &str, flag: &str) -> Result<Option<&'a Path>> {
    path.map(|p| require(Some(p), what, flag)).transpose()
}

fn manifest(command: &str, cfg: &PipelineConfig, args: Value) -> Result<RunManifest> {
    Ok(RunManifest::new(
        command,
        &json!({ "pipeline": cfg.for_manifest(), "args": args }),
    )?)
}

fn load_index(cfg: &PipelineConfig, m: &mut RunManifest) -> Result<CorpusIndex> {
    let path = require(cfg.inputs.corpus.as_ref(), "corpus", "corpus")?;
    let report = corpus::load_corpus(
        path,
        &LoadOptions {
            periods: cfg.period_scheme(),
        },
    )?;
    if !report.skipped.is_empty() {
        log::warn!(
            "{}: skipped {} of {} records, first at line {}",
            path.display(),
            report.skipped.len(),
            report.records_read,
            report.skipped[0].line
        );
    }
    log::info!(
        "{} tweets in {} periods",
        report.index.len(),
        report.index.periods().len()
    );
    m.add_input("corpus", path)?;
    Ok(report.index)
}

fn load_bots(cfg: &PipelineConfig, m: &mut RunManifest) -> Result<BTreeSet<AccountId>> {
    let path = require(cfg.inputs.bots.as_ref(), "bot list", "bots")?;
    m.add_input("bots", path)?;
    Ok(corpus::load_account_list(path)?)
}

fn load_accounts(cfg: &PipelineConfig, m: &mut RunManifest) -> Result<Vec<corpus::Account>> {
    let Some(path) = optional(cfg.inputs.accounts.as_ref(), "accounts", "accounts")? else {
        return Ok(Vec::new());
    };
    let (accounts, skipped) = corpus::load_accounts(path)?;
    if !skipped.is_empty() {
        log::warn!("{}: skipped {} account records", path.display(), skipped.len());
    }
    m.add_input("accounts", path)?;
    Ok(accounts)
}

fn load_layers(cfg: &PipelineConfig, m: &mut RunManifest) -> Result<Vec<LayerGraph>> {
    let mut out = Vec::new();
    for (name, path) in &cfg.inputs.layers {
        let kind: LayerKind = name.parse().map_err(|e: ccid_core::Error| UsageError(e.to_string()))?;
        let path = require(Some(path), &format!("{kind} layer"), "layer")?;
        let load = layers::load_layer(path, kind)?;
        if !load.skipped.is_empty() {
            log::warn!("{}: skipped {} rows", path.display(), load.skipped.len());
        }
        m.add_input(&format!("layer_{kind}"), path)?;
        out.push(load.graph);
    }
    Ok(out)
}

fn format_of(path: &Path) -> Result<GraphFormat> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or_default();
    parse_format(ext).map_err(|e| UsageError(format!("{}: {e}", path.display())).into())
}

fn graph_inputs(paths: &[PathBuf], m: &mut RunManifest) -> Result<Vec<(PathBuf, copygraph::ImportedGraph)>> {
    paths
        .iter()
        .map(|p| {
            let p = require(Some(p), "graph", "graph")?;
            let g = import_graph(p, format_of(p)?)?;
            m.add_input(&format!("graph:{}", file_name(p)), p)?;
            Ok((p.to_path_buf(), g))
        })
        .collect()
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn write_json(m: &mut RunManifest, dir: &Path, name: &str, value: &impl serde::Serialize) -> Result<()> {
    emit(m, dir, name, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })?;
    Ok(())
}

fn finish(m: &RunManifest, dir: &Path) -> Result<()> {
    let path = m.finish(dir)?;
    log::info!("wrote {} outputs and {}", m.outputs.len(), path.display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct DetectCmd {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    inputs: InputArgs,
    #[command(flatten)]
    detector: DetectorArgs,
}

impl DetectCmd {
    pub fn run(self) -> Result<()> {
        let cfg = resolve(&Flags {
            common: Some(&self.common),
            inputs: Some(&self.inputs),
            detector: Some(&self.detector),
            ..Default::default()
        })?;
        let dir = out_dir(&cfg)?;
        let mut m = manifest("detect", &cfg, json!({}))?;
        let index = load_index(&cfg, &mut m)?;
        let detection = with_workers(cfg.workers, || detect_all(&index, &cfg.detector))??;
        let summary = detection.summary();
        log::info!("{} events, {} copy pairs", summary.events, summary.copy_pairs);
        emit(&mut m, &dir, "events.jsonl", |w| write_events(&detection.events, w))?;
        write_json(&mut m, &dir, "summary.json", &summary)?;
        finish(&m, &dir)
    }
}

fn write_cdf_rows(w: &mut impl Write, name: &str, cdf: &[CdfPoint]) -> std::io::Result<()> {
    for p in cdf {
        writeln!(w, "{name}\t{}\t{:.6}", p.value, p.cumulative)?;
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct SweepJaccardCmd {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    inputs: InputArgs,
    #[command(flatten)]
    detector: DetectorArgs,
    /// Comma-separated similarity thresholds.
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.6, 0.7, 0.8, 0.9])]
    thresholds: Vec<f64>,
}

impl SweepJaccardCmd {
    pub fn run(self) -> Result<()> {
        let cfg = resolve(&Flags {
            common: Some(&self.common),
            inputs: Some(&self.inputs),
            detector: Some(&self.detector),
            ..Default::default()
        })?;
        let dir = out_dir(&cfg)?;
        let mut m = manifest("sweep-jaccard", &cfg, json!({ "thresholds": self.thresholds }))?;
        let index = load_index(&cfg, &mut m)?;
        let rows: Vec<JaccardSweepRow> =
            with_workers(cfg.workers, || sweep_jaccard(&index, &cfg.detector, &self.thresholds))??;
        for r in &rows {
            emit(&mut m, &dir, &format!("cdf_jaccard_{:.2}.tsv", r.threshold), |w| {
                writeln!(w, "distribution\tvalue\tcumulative")?;
                write_cdf_rows(w, "copied_tweets_per_user", &r.copied_tweets_per_user)?;
                write_cdf_rows(w, "events_per_user_pair", &r.events_per_user_pair)
            })?;
        }
        emit(&mut m, &dir, "sweep_jaccard.tsv", |w| {
            writeln!(
                w,
                "threshold\tevents\tsimilar_pairs\tcopy_pairs\taccount_pairs\tcopied_tweets\tsingle_copy_users"
            )?;
            for r in &rows {
                let s = &r.summary;
                writeln!(
                    w,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    r.threshold, s.events, s.similar_pairs, s.copy_pairs, s.account_pairs, s.copied_tweets,
                    r.single_copy_users
                )?;
            }
            Ok(())
        })?;
        finish(&m, &dir)
    }
}

#[derive(Args, Debug)]
pub struct SweepWindowCmd {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    inputs: InputArgs,
    #[command(flatten)]
    detector: DetectorArgs,
    /// Comma-separated window lengths in minutes; each slides by half its length.
    #[arg(long, value_delimiter = ',', default_values_t = [2.5, 5.0, 10.0, 15.0, 20.0])]
    windows: Vec<f64>,
}

impl SweepWindowCmd {
    pub fn run(self) -> Result<()> {
        let cfg = resolve(&Flags {
            common: Some(&self.common),
            inputs: Some(&self.inputs),
            detector: Some(&self.detector),
            ..Default::default()
        })?;
        let dir = out_dir(&cfg)?;
        let mut m = manifest("sweep-window", &cfg, json!({ "windows": self.windows }))?;
        let index = load_index(&cfg, &mut m)?;
        let rows = with_workers(cfg.workers, || sweep_window(&index, &cfg.detector, &self.windows))??;
        // Timings stay in the log so that outputs are reproducible.
        for r in &rows {
            log::info!("{} min: {:.2}s", r.window_minutes, r.elapsed_secs);
        }
        emit(&mut m, &dir, "sweep_window.tsv", |w| {
            writeln!(
                w,
                "window_minutes\twindow_secs\tslide_secs\tevents\tsimilar_pairs\tcopy_pairs\taccount_pairs"
            )?;
            for r in &rows {
                let s = &r.summary;
                writeln!(
                    w,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    r.window_minutes, r.window_secs, r.slide_secs, s.events, s.similar_pairs, s.copy_pairs,
                    s.account_pairs
                )?;
            }
            Ok(())
        })?;
        finish(&m, &dir)
    }
}

#[derive(Args, Debug)]
pub struct GraphCmd {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    inputs: InputArgs,
    /// Events written by `detect`.
    #[arg(long, value_name = "FILE")]
    events: PathBuf,
    /// Graph output format: graphml or tsv.
    #[arg(long, value_parser = parse_format)]
    format: Option<GraphFormat>,
}

impl GraphCmd {
    pub fn run(self) -> Result<()> {
        let filter = FilterArgs {
            format: self.format,
            ..Default::default()
        };
        let cfg = resolve(&Flags {
            common: Some(&self.common),
            inputs: Some(&self.inputs),
            filter: Some(&filter),
            ..Default::default()
        })?;
        let dir = out_dir(&cfg)?;
        let mut m = manifest("graph", &cfg, json!({}))?;
        let index = load_index(&cfg, &mut m)?;
        let events_path = require(Some(&self.events), "events", "events")?;
        let events = ccid::read_events(events_path)?;
        m.add_input("events", events_path)?;
        let ext = cfg.graph_format.extension();
        for p in index.periods() {
            let g = build_graph(&events, &index, p);
            log::info!("period {}: {} nodes, {} edges", p.label, g.node_count(), g.edge_count());
            emit(&mut m, &dir, &format!("graph_{}.{ext}", file_label(&p.label)), |w| {
                export_graph(&g, cfg.graph_format, None, w)
            })?;
        }
        finish(&m, &dir)
    }
}

/// `graph_2020.graphml` → `filtered_2020`.
fn filtered_name(input: &Path) -> String {
    let stem = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    format!("filtered_{}", stem.strip_prefix("graph_").unwrap_or(&stem))
}

#[derive(Args, Debug)]
pub struct FilterCmd {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    filter: FilterArgs,
    /// Copy graphs written by `graph`; the format follows the extension.
    #[arg(long = "graph", value_name = "FILE", required = true, num_args = 1..)]
    graphs: Vec<PathBuf>,
}

impl FilterCmd {
    pub fn run(self) -> Result<()> {
        let cfg = resolve(&Flags {
            common: Some(&self.common),
            filter: Some(&self.filter),
            ..Default::default()
        })?;
        let dir = out_dir(&cfg)?;
        let mut m = manifest("filter", &cfg, json!({}))?;
        let ext = cfg.graph_format.extension();
        for (path, imported) in graph_inputs(&self.graphs, &mut m)? {
            let f = filter_graph(&imported.graph, &cfg.filter)?;
            log::info!(
                "{}: {} of {} nodes kept",
                path.display(),
                f.node_count(),
                imported.graph.node_count()
            );
            emit(&mut m, &dir, &format!("{}.{ext}", filtered_name(&path)), |w| {
                export_graph(&f, cfg.graph_format, None, w)
            })?;
        }
        finish(&m, &dir)
    }
}

/// Graphs in period order; graphs without periods keep their argument order, first.
fn by_period(mut graphs: Vec<CopyGraph>) -> Vec<CopyGraph> {
    graphs.sort_by_key(|g| g.periods.iter().map(|p| p.start).min());
    graphs
}

#[derive(Args, Debug)]
pub struct CommunitiesCmd {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    community: CommunityArgs,
    /// Graph output format: graphml or tsv.
    #[arg(long, value_parser = parse_format)]
    format: Option<GraphFormat>,
    /// Filtered per-period graphs.
    #[arg(long = "graph", value_name = "FILE", required = true, num_args = 1..)]
    graphs: Vec<PathBuf>,
}

impl CommunitiesCmd {
    pub fn run(self) -> Result<()> {
        let filter = FilterArgs {
            format: self.format,
            ..Default::default()
        };
        let cfg = resolve(&Flags {
            common: Some(&self.common),
            filter: Some(&filter),
            community: Some(&self.community),
            ..Default::default()
        })?;
        let dir = out_dir(&cfg)?;
        let mut m = manifest("communities", &cfg, json!({}))?;
        let graphs = by_period(graph_inputs(&self.graphs, &mut m)?.into_iter().map(|(_, g)| g.graph).collect());
        let merged = botnets::merge_graphs(&graphs)?;
        let assignment = botnets::detect_communities(&merged, &cfg.community)?;
        log::info!(
            "{} communities over {} accounts, modularity {:.4}",
            assignment.community_count(),
            merged.node_count(),
            assignment.modularity
        );
        emit(&mut m, &dir, &format!("merged.{}", cfg.graph_format.extension()), |w| {
            export_graph(&merged, cfg.graph_format, Some(&assignment.membership), w)
        })?;
        emit(&mut m, &dir, "communities.tsv", |w| {
            botnets::write_assignment(&assignment.membership, w)
        })?;
        write_json(
            &mut m,
            &dir,
            "communities.json",
            &json!({
                "communities": assignment.community_count(),
                "accounts": assignment.membership.len(),
                "modularity": assignment.modularity,
            }),
        )?;
        finish(&m, &dir)
    }
}

#[derive(Args, Debug)]
pub struct EvolveCmd {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    evolution: EvolutionArgs,
    /// Community assignment written by `communities`.
    #[arg(long, value_name = "FILE")]
    communities: PathBuf,
    /// Filtered per-period graphs, at least two.
    #[arg(long = "graph", value_name = "FILE", required = true, num_args = 1..)]
    graphs: Vec<PathBuf>,
}

impl EvolveCmd {
    pub fn run(self) -> Result<()> {
        let cfg = resolve(&Flags {
            common: Some(&self.common),
            evolution: Some(&self.evolution),
            ..Default::default()
        })?;
        let dir = out_dir(&cfg)?;
        let mut m = manifest("evolve", &cfg, json!({}))?;
        let membership_path = require(Some(&self.communities), "community assignment", "communities")?;
        let total = CommunityAssignment {
            membership: botnets::read_assignment(membership_path)?,
            modularity: 0.0,
            config: cfg.community,
        };
        m.add_input("communities", membership_path)?;
        let graphs = by_period(graph_inputs(&self.graphs, &mut m)?.into_iter().map(|(_, g)| g.graph).collect());
        let projections = graphs
            .iter()
            .map(|g| botnets::project_communities(&total, g))
            .collect::<ccid_core::Result<Vec<_>>>()?;
        let timeline: BotnetTimeline = botnets::evolution_metrics(&projections, &graphs, &cfg.evolution)?;
        emit(&mut m, &dir, "timeline.tsv", |w| botnets::write_timeline(&timeline, w))?;
        write_json(&mut m, &dir, "timeline.json", &timeline)?;
        finish(&m, &dir)
    }
}

#[derive(Args, Debug)]
pub struct LayersCmd {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    inputs: InputArgs,
    #[command(flatten)]
    community: CommunityArgs,
    /// Interesting clusters to report per layer.
    #[arg(long, default_value_t = 5)]
    top: usize,
}

impl LayersCmd {
    pub fn run(self) -> Result<()> {
        let cfg = resolve(&Flags {
            common: Some(&self.common),
            inputs: Some(&self.inputs),
            community: Some(&self.community),
            ..Default::default()
        })?;
        let dir = out_dir(&cfg)?;
        let mut m = manifest("layers", &cfg, json!({ "top": self.top }))?;
        let graphs = load_layers(&cfg, &mut m)?;
        if graphs.is_empty() {
            return Err(anyhow!("missing input: no layer given (--layer KIND=FILE or inputs.layers)"));
        }
        let bots = match &cfg.inputs.bots {
            Some(_) => load_bots(&cfg, &mut m)?,
            None => BTreeSet::new(),
        };
        let exemplars = match optional(cfg.inputs.exemplars.as_ref(), "exemplars", "exemplars")? {
            Some(path) => {
                let load = layers::load_exemplars(path)?;
                for o in &load.overlaps {
                    log::warn!("exemplar {} listed as {:?} and {:?}; kept the first", o.account, o.kept, o.dropped);
                }
                m.add_input("exemplars", path)?;
                Some(load.set)
            }
            None => None,
        };
        let mut report = Vec::new();
        for g in &graphs {
            let assignment = layers::cluster_layer(g, &cfg.community)?;
            emit(&mut m, &dir, &format!("clusters_{}.tsv", g.kind), |w| {
                botnets::write_assignment(&assignment.membership, w)
            })?;
            let clusters = exemplars
                .as_ref()
                .map(|ex| layers::classify_clusters(&assignment.membership, ex, &bots, self.top));
            report.push(json!({
                "kind": g.kind,
                "nodes": g.nodes.len(),
                "edges": g.edges.len(),
                "communities": assignment.community_count(),
                "modularity": assignment.modularity,
                "clusters": clusters,
            }));
        }
        let engagement = if bots.is_empty() {
            None
        } else {
            Some(layers::bot_engagement(&graphs, &bots)?)
        };
        write_json(&mut m, &dir, "layers.json", &json!({ "layers": report, "engagement": engagement }))?;
        finish(&m, &dir)
    }
}

#[derive(Args, Debug)]
pub struct TrendsCmd {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    inputs: InputArgs,
    /// Events written by `detect`.
    #[arg(long, value_name = "FILE")]
    events: PathBuf,
    /// Hours before and after a tweet in which a trending hashtag counts.
    #[arg(long)]
    horizon_hours: Option<f64>,
}

impl TrendsCmd {
    pub fn run(self) -> Result<()> {
        let cfg = resolve(&Flags {
            common: Some(&self.common),
            inputs: Some(&self.inputs),
            horizon_hours: self.horizon_hours,
            ..Default::default()
        })?;
        let dir = out_dir(&cfg)?;
        let mut m = manifest("trends", &cfg, json!({}))?;
        let index = load_index(&cfg, &mut m)?;
        let bots = load_bots(&cfg, &mut m)?;
        let events_path = require(Some(&self.events), "events", "events")?;
        let events = ccid::read_events(events_path)?;
        m.add_input("events", events_path)?;
        let trends_path = require(cfg.inputs.trends.as_ref(), "trend snapshots", "trends")?;
        let load = trends::load_snapshots(trends_path)?;
        if !load.skipped.is_empty() {
            log::warn!("{}: skipped {} rows", trends_path.display(), load.skipped.len());
        }
        m.add_input("trends", trends_path)?;

        let tweets = trends::bot_tweets_from_events(&events, &index, &bots);
        let report = trends::trend_interaction(&tweets, &load.snapshots, cfg.trend_horizon_secs)?;
        emit(&mut m, &dir, "trend_flags.tsv", |w| {
            writeln!(w, "account_id\tposted_hashtags\ttrending_before\ttrending_after\tbefore_only\tafter_only")?;
            for f in &report.accounts {
                let b = |x: bool| u8::from(x);
                writeln!(
                    w,
                    "{}\t{}\t{}\t{}\t{}\t{}",
                    f.account,
                    b(f.posted_hashtags),
                    b(f.trending_before),
                    b(f.trending_after),
                    b(f.before_only),
                    b(f.after_only)
                )?;
            }
            Ok(())
        })?;
        write_json(&mut m, &dir, "trends.json", &report)?;
        finish(&m, &dir)
    }
}

#[derive(Args, Debug)]
pub struct FeaturesCmd {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    inputs: InputArgs,
    /// Feature to compare; repeatable. Every feature with values on both sides
    /// is compared when none is given.
    #[arg(long = "feature", value_name = "NAME")]
    features: Vec<String>,
    /// Width of the account creation histogram bins, in days.
    #[arg(long, default_value_t = 30.0)]
    bin_days: f64,
}

impl FeaturesCmd {
    pub fn run(self) -> Result<()> {
        let cfg = resolve(&Flags {
            common: Some(&self.common),
            inputs: Some(&self.inputs),
            ..Default::default()
        })?;
        let dir = out_dir(&cfg)?;
        let mut m = manifest(
            "features",
            &cfg,
            json!({ "features": self.features, "bin_days": self.bin_days }),
        )?;
        let index = load_index(&cfg, &mut m)?;
        let bots = load_bots(&cfg, &mut m)?;
        let accounts = load_accounts(&cfg, &mut m)?;
        let graphs = load_layers(&cfg, &mut m)?;
        let table = compute_features(&index, &graphs, &accounts);
        let clear: BTreeSet<AccountId> = table.rows.keys().filter(|a| !bots.contains(a)).copied().collect();
        emit(&mut m, &dir, "features.tsv", |w| features::write_features(&table, w))?;

        let mut compared = Vec::new();
        if self.features.is_empty() {
            for name in &table.names {
                match compare_cdf(&table, name, &bots, &clear) {
                    Ok(c) => compared.push(c),
                    Err(e) => log::warn!("skipping {name}: {e}"),
                }
            }
        } else {
            for name in &self.features {
                compared.push(compare_cdf(&table, name, &bots, &clear)?);
            }
        }
        compared.sort_by(|x, y| y.ks.total_cmp(&x.ks).then_with(|| x.feature.cmp(&y.feature)));
        for c in &compared {
            emit(&mut m, &dir, &format!("cdf_{}.tsv", c.feature), |w| features::write_cdf(c, w))?;
        }
        emit(&mut m, &dir, "ranking.tsv", |w| {
            writeln!(w, "feature\tks")?;
            for c in &compared {
                writeln!(w, "{}\t{:.6}", c.feature, c.ks)?;
            }
            Ok(())
        })?;
        if !accounts.is_empty() {
            let bins = creation_histogram(&accounts, &bots, self.bin_days)?;
            emit(&mut m, &dir, "creation_histogram.tsv", |w| {
                writeln!(w, "bin_start\tcount")?;
                for b in &bins {
                    writeln!(w, "{}\t{}", b.start, b.count)?;
                }
                Ok(())
            })?;
        }
        finish(&m, &dir)
    }
}

#[derive(Args, Debug)]
pub struct SynthCmd {
    /// Output directory, created if missing.
    #[arg(long, short, value_name = "DIR")]
    out: PathBuf,
    /// TOML or JSON scenario; keys it sets override --seed.
    #[arg(long, value_name = "FILE")]
    spec: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

impl SynthCmd {
    pub fn run(self) -> Result<()> {
        let mut value = serde_json::to_value(ScenarioSpec {
            seed: self.seed.unwrap_or_default(),
            ..ScenarioSpec::default()
        })?;
        if let Some(path) = &self.spec {
            overlay(&mut value, read_document(require(Some(path), "scenario", "spec")?)?);
        }
        let spec: ScenarioSpec = serde_json::from_value(value).map_err(|e| UsageError(format!("scenario: {e}")))?;
        let scenario = synth::generate(&spec)?;
        std::fs::create_dir_all(&self.out).with_context(|| format!("cannot create {}", self.out.display()))?;
        let manifest = scenario.write_to_dir(&self.out)?;
        for w in &manifest.warnings {
            log::warn!("{w}");
        }
        log::info!(
            "{} tweets, {} bots in {} botnets written to {}",
            scenario.tweets.len(),
            manifest.expected.bots,
            scenario.truth.botnets.len(),
            self.out.display()
        );
        Ok(())
    }
}

#[derive(Args, Debug)]
pub struct ExportCmd {
    #[command(flatten)]
    common: CommonArgs,
    /// Graph to convert; the input format follows the extension.
    #[arg(long, value_name = "FILE")]
    graph: PathBuf,
    /// Target format: graphml or tsv.
    #[arg(long, value_parser = parse_format)]
    to: GraphFormat,
    /// Community assignment to attach; otherwise any carried by the input is kept.
    #[arg(long, value_name = "FILE")]
    communities: Option<PathBuf>,
}

impl ExportCmd {
    pub fn run(self) -> Result<()> {
        let cfg = resolve(&Flags {
            common: Some(&self.common),
            ..Default::default()
        })?;
        let dir = out_dir(&cfg)?;
        let mut m = manifest("export", &cfg, json!({ "to": self.to }))?;
        let (path, imported) = graph_inputs(std::slice::from_ref(&self.graph), &mut m)?
            .pop()
            .expect("one graph requested");
        let membership = match optional(self.communities.as_ref(), "community assignment", "communities")? {
            Some(p) => {
                m.add_input("communities", p)?;
                botnets::read_assignment(p)?
            }
            None => imported.communities,
        };
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let communities = (!membership.is_empty()).then_some(&membership);
        emit(&mut m, &dir, &format!("{stem}.{}", self.to.extension()), |w| {
            export_graph(&imported.graph, self.to, communities, w)
        })?;
        finish(&m, &dir)
    }
}

#[derive(Args, Debug)]
pub struct PipelineCmd {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    inputs: InputArgs,
    #[command(flatten)]
    detector: DetectorArgs,
    #[command(flatten)]
    filter: FilterArgs,
    #[command(flatten)]
    community: CommunityArgs,
    #[command(flatten)]
    evolution: EvolutionArgs,
}

impl PipelineCmd {
    pub fn run(self) -> Result<()> {
        let cfg = resolve(&Flags {
            common: Some(&self.common),
            inputs: Some(&self.inputs),
            detector: Some(&self.detector),
            filter: Some(&self.filter),
            community: Some(&self.community),
            evolution: Some(&self.evolution),
            ..Default::default()
        })?;
        let dir = out_dir(&cfg)?;
        let mut m = manifest("pipeline", &cfg, json!({}))?;
        let index = load_index(&cfg, &mut m)?;
        let run = run_pipeline(&index, &cfg)?;
        let s = run.summary();
        log::info!(
            "{} events; {} accounts in {} communities after filtering",
            s.detection.events,
            s.merged_nodes,
            s.communities
        );
        run.write_outputs(&dir, cfg.graph_format, &mut m)?;
        finish(&m, &dir)
    }
}
