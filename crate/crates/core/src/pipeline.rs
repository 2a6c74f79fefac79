//! One serializable configuration for a whole run, the fused detect → graph →
//! filter → communities → evolution pipeline, and run manifests.
//!
//! A manifest records the configuration, the SHA-256 of every input and output
//! and the tool version. The worker count never enters a manifest, so runs that
//! differ only in parallelism produce identical manifests.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::botnets::{self, BotnetTimeline, EvolutionConfig, PeriodProjection};
use crate::ccid::{detect_all, write_events, Detection, DetectorConfig};
use crate::community::{CommunityAssignment, CommunityConfig};
use crate::copygraph::{self, build_graph, filter_graph, CopyGraph, FilterConfig, GraphFormat};
use crate::corpus::{CorpusIndex, Period, PeriodScheme};
use crate::digest::sha256_file;
use crate::error::{Error, Result};
use crate::trends::DEFAULT_HORIZON_SECS;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputPaths {
    pub corpus: Option<PathBuf>,
    pub accounts: Option<PathBuf>,
    pub bots: Option<PathBuf>,
    pub trends: Option<PathBuf>,
    pub exemplars: Option<PathBuf>,
    /// Layer kind name → edge or membership file.
    pub layers: BTreeMap<String, PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub detector: DetectorConfig,
    pub filter: FilterConfig,
    pub community: CommunityConfig,
    pub evolution: EvolutionConfig,
    pub trend_horizon_secs: i64,
    /// Explicit periods; calendar years when empty.
    pub periods: Vec<Period>,
    pub graph_format: GraphFormat,
    pub inputs: InputPaths,
    pub output: Option<PathBuf>,
    /// Rayon worker count; `None` uses the global pool. Excluded from manifests.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            detector: DetectorConfig::default(),
            filter: FilterConfig::default(),
            community: CommunityConfig::default(),
            evolution: EvolutionConfig::default(),
            trend_horizon_secs: DEFAULT_HORIZON_SECS,
            periods: Vec::new(),
            graph_format: GraphFormat::GraphMl,
            inputs: InputPaths::default(),
            output: None,
            workers: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.detector.validate()?;
        self.filter.validate()?;
        if self.trend_horizon_secs <= 0 {
            return Err(Error::arg("trend horizon must be positive"));
        }
        if self.workers == Some(0) {
            return Err(Error::arg("worker count must be at least 1"));
        }
        Ok(())
    }

    pub fn period_scheme(&self) -> PeriodScheme {
        if self.periods.is_empty() {
            PeriodScheme::CalendarYears
        } else {
            PeriodScheme::Ranges(self.periods.clone())
        }
    }

    /// The configuration as recorded in manifests: no worker count and no file
    /// paths, since inputs are recorded by digest.
    pub fn for_manifest(&self) -> PipelineConfig {
        PipelineConfig {
            workers: None,
            inputs: InputPaths::default(),
            output: None,
            ..self.clone()
        }
    }
}

/// Runs `f` inside a dedicated pool of `workers` threads, or on the global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::arg(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub detection: Detection,
    /// Unfiltered per-period graphs, in period order.
    pub graphs: Vec<CopyGraph>,
    pub filtered: Vec<CopyGraph>,
    pub merged: CopyGraph,
    pub communities: CommunityAssignment,
    pub projections: Vec<PeriodProjection>,
    /// Present when the corpus spans at least two periods.
    pub timeline: Option<BotnetTimeline>,
}

pub fn run_pipeline(index: &CorpusIndex, config: &PipelineConfig) -> Result<PipelineRun> {
    config.validate()?;
    with_workers(config.workers, || run_stages(index, config))?
}

fn run_stages(index: &CorpusIndex, config: &PipelineConfig) -> Result<PipelineRun> {
    let detection = detect_all(index, &config.detector)?;
    let graphs: Vec<CopyGraph> = index
        .periods()
        .iter()
        .map(|p| build_graph(&detection.events, index, p))
        .collect();
    let filtered = graphs
        .iter()
        .map(|g| filter_graph(g, &config.filter))
        .collect::<Result<Vec<_>>>()?;
    let merged = botnets::merge_graphs(&filtered)?;
    let communities = botnets::detect_communities(&merged, &config.community)?;
    let projections = filtered
        .iter()
        .map(|g| botnets::project_communities(&communities, g))
        .collect::<Result<Vec<_>>>()?;
    let timeline = if projections.len() >= 2 {
        Some(botnets::evolution_metrics(&projections, &filtered, &config.evolution)?)
    } else {
        None
    };
    Ok(PipelineRun {
        detection,
        graphs,
        filtered,
        merged,
        communities,
        projections,
        timeline,
    })
}

/// File-name-safe form of a period label.
pub fn file_label(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: serde_json::Value,
    /// Input name → SHA-256.
    pub inputs: BTreeMap<String, String>,
    /// Output file name → SHA-256.
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, config: &impl Serialize) -> Result<Self> {
        Ok(RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: serde_json::to_value(config)?,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        })
    }

    pub fn add_input(&mut self, name: &str, path: &Path) -> Result<()> {
        self.inputs.insert(name.to_string(), sha256_file(path)?);
        Ok(())
    }

    /// Creates `dir/name`, lets `f` fill it and records its digest.
    pub fn write_output(
        &mut self,
        dir: &Path,
        name: &str,
        f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> Result<PathBuf> {
        let path = dir.join(name);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(&path, e))?;
        self.outputs.insert(name.to_string(), sha256_file(&path)?);
        Ok(path)
    }

    /// Writes `manifest.json` into `dir`.
    pub fn finish(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub detection: crate::ccid::DetectionSummary,
    pub periods: Vec<PeriodSummary>,
    pub merged_nodes: usize,
    pub merged_edges: usize,
    pub communities: usize,
    pub modularity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodSummary {
    pub period: String,
    pub nodes: usize,
    pub edges: usize,
    pub filtered_nodes: usize,
    pub filtered_edges: usize,
}

impl PipelineRun {
    pub fn summary(&self) -> RunSummary {
        RunSummary {
            detection: self.detection.summary(),
            periods: self
                .graphs
                .iter()
                .zip(&self.filtered)
                .zip(&self.projections)
                .map(|((g, f), p)| PeriodSummary {
                    period: p.label.clone(),
                    nodes: g.node_count(),
                    edges: g.edge_count(),
                    filtered_nodes: f.node_count(),
                    filtered_edges: f.edge_count(),
                })
                .collect(),
            merged_nodes: self.merged.node_count(),
            merged_edges: self.merged.edge_count(),
            communities: self.communities.community_count(),
            modularity: self.communities.modularity,
        }
    }

    /// Writes every artefact of the run into `dir` and records it in `manifest`.
    pub fn write_outputs(&self, dir: &Path, format: GraphFormat, manifest: &mut RunManifest) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        manifest.write_output(dir, "events.jsonl", |w| write_events(&self.detection.events, w))?;
        let ext = format.extension();
        for ((g, f), p) in self.graphs.iter().zip(&self.filtered).zip(&self.projections) {
            let label = file_label(&p.label);
            manifest.write_output(dir, &format!("graph_{label}.{ext}"), |w| {
                copygraph::export_graph(g, format, None, w)
            })?;
            manifest.write_output(dir, &format!("filtered_{label}.{ext}"), |w| {
                copygraph::export_graph(f, format, Some(&p.membership), w)
            })?;
        }
        manifest.write_output(dir, &format!("merged.{ext}"), |w| {
            copygraph::export_graph(&self.merged, format, Some(&self.communities.membership), w)
        })?;
        manifest.write_output(dir, "communities.tsv", |w| {
            botnets::write_assignment(&self.communities.membership, w)
        })?;
        if let Some(t) = &self.timeline {
            manifest.write_output(dir, "timeline.tsv", |w| botnets::write_timeline(t, w))?;
        }
        let summary = self.summary();
        manifest.write_output(dir, "summary.json", |w| {
            serde_json::to_writer_pretty(&mut *w, &summary)?;
            writeln!(w)
        })?;
        Ok(())
    }
}
