//! Turning flags and an optional config file into one `PipelineConfig`.
//!
//! Flags are applied over the defaults first; the keys present in the config
//! file are then laid over the result, so the file wins wherever both speak.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ccid_core::botnets::GrowthMode;
use ccid_core::ccid::{minutes_to_secs, Grouping};
use ccid_core::copygraph::GraphFormat;
use ccid_core::corpus::Period;
use ccid_core::pipeline::PipelineConfig;
use clap::Args;
use serde_json::Value;

use crate::UsageError;

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// TOML or JSON run configuration; keys it sets override the flags.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, short, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads for detection; defaults to one per core.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct InputArgs {
    /// Newline-delimited JSON corpus.
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    /// Newline-delimited JSON account records.
    #[arg(long, value_name = "FILE")]
    pub accounts: Option<PathBuf>,
    /// Account list, one id per line (first column of a TSV).
    #[arg(long, value_name = "FILE")]
    pub bots: Option<PathBuf>,
    /// Trend snapshots, `timestamp\ttopic` rows.
    #[arg(long, value_name = "FILE")]
    pub trends: Option<PathBuf>,
    /// Exemplar accounts, `category\taccount_id` rows.
    #[arg(long, value_name = "FILE")]
    pub exemplars: Option<PathBuf>,
    /// Interaction layer as KIND=FILE, e.g. `follow=follow.tsv`; repeatable.
    #[arg(long = "layer", value_name = "KIND=FILE", value_parser = parse_layer)]
    pub layers: Vec<(String, PathBuf)>,
    /// Analysis period as LABEL:START:END in unix seconds; repeatable.
    /// Calendar years are used when none is given.
    #[arg(long = "period", value_name = "LABEL:START:END", value_parser = parse_period)]
    pub periods: Vec<Period>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct DetectorArgs {
    #[arg(long)]
    pub jaccard_threshold: Option<f64>,
    /// Window length in minutes. Without --slide-min the slide is half of it.
    #[arg(long)]
    pub window_min: Option<f64>,
    #[arg(long)]
    pub slide_min: Option<f64>,
    #[arg(long, value_parser = ["component", "clique"])]
    pub grouping: Option<String>,
    #[arg(long)]
    pub include_retweets: bool,
    #[arg(long)]
    pub allow_self_copies: bool,
    /// Tweets with fewer tokens are never compared.
    #[arg(long)]
    pub min_tokens: Option<usize>,
    /// Compare tokens case-sensitively.
    #[arg(long)]
    pub keep_case: bool,
}

#[derive(Args, Debug, Clone, Default)]
pub struct FilterArgs {
    /// Minimum share of copied tweets per account, in percent.
    #[arg(long)]
    pub copy_pct: Option<f64>,
    /// Minimum tweets per account and period.
    #[arg(long)]
    pub min_tweets: Option<u64>,
    /// Graph output format: graphml or tsv.
    #[arg(long, value_parser = parse_format)]
    pub format: Option<GraphFormat>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommunityArgs {
    #[arg(long)]
    pub community_seed: Option<u64>,
    #[arg(long)]
    pub resolution: Option<f64>,
    /// Count every edge once regardless of weight.
    #[arg(long)]
    pub unweighted: bool,
}

#[derive(Args, Debug, Clone, Default)]
pub struct EvolutionArgs {
    /// Measure size changes in members or relative to the previous size.
    #[arg(long, value_parser = ["raw", "relative"])]
    pub growth_mode: Option<String>,
    /// A size change must exceed this to count as growth or shrinkage.
    #[arg(long)]
    pub growth_threshold: Option<f64>,
}

pub fn parse_format(s: &str) -> Result<GraphFormat, String> {
    s.parse().map_err(|e: ccid_core::Error| e.to_string())
}

fn parse_layer(s: &str) -> Result<(String, PathBuf), String> {
    let (kind, path) = s.split_once('=').ok_or("expected KIND=FILE")?;
    let kind = kind.parse::<ccid_core::layers::LayerKind>().map_err(|e| e.to_string())?;
    Ok((kind.as_str().to_string(), PathBuf::from(path)))
}

fn parse_period(s: &str) -> Result<Period, String> {
    let parts: Vec<&str> = s.rsplitn(3, ':').collect();
    let [end, start, label] = parts.as_slice() else {
        return Err("expected LABEL:START:END".into());
    };
    let num = |x: &str| x.trim().parse::<i64>().map_err(|e| format!("{x:?}: {e}"));
    Period::new(*label, num(start)?, num(end)?).map_err(|e| e.to_string())
}

/// Everything a subcommand may contribute to the run configuration.
#[derive(Default)]
pub struct Flags<'a> {
    pub common: Option<&'a CommonArgs>,
    pub inputs: Option<&'a InputArgs>,
    pub detector: Option<&'a DetectorArgs>,
    pub filter: Option<&'a FilterArgs>,
    pub community: Option<&'a CommunityArgs>,
    pub evolution: Option<&'a EvolutionArgs>,
    pub horizon_hours: Option<f64>,
}

fn apply_flags(cfg: &mut PipelineConfig, f: &Flags) -> Result<()> {
    if let Some(c) = f.common {
        cfg.output = c.out.clone().or(cfg.output.take());
        cfg.workers = c.workers.or(cfg.workers);
    }
    if let Some(i) = f.inputs {
        let inp = &mut cfg.inputs;
        for (slot, flag) in [
            (&mut inp.corpus, &i.corpus),
            (&mut inp.accounts, &i.accounts),
            (&mut inp.bots, &i.bots),
            (&mut inp.trends, &i.trends),
            (&mut inp.exemplars, &i.exemplars),
        ] {
            if flag.is_some() {
                *slot = flag.clone();
            }
        }
        inp.layers.extend(i.layers.iter().cloned());
        if !i.periods.is_empty() {
            cfg.periods = i.periods.clone();
        }
    }
    if let Some(d) = f.detector {
        let det = &mut cfg.detector;
        if let Some(t) = d.jaccard_threshold {
            det.jaccard_threshold = t;
        }
        match (d.window_min, d.slide_min) {
            (Some(w), None) => *det = det.clone().with_window_minutes(w).map_err(usage)?,
            (w, s) => {
                if let Some(w) = w {
                    det.window_secs = minutes_to_secs(w).map_err(usage)?;
                }
                if let Some(s) = s {
                    det.slide_secs = minutes_to_secs(s).map_err(usage)?;
                }
            }
        }
        if let Some(g) = &d.grouping {
            det.grouping = g.parse::<Grouping>().map_err(usage)?;
        }
        det.include_retweets |= d.include_retweets;
        det.allow_self_copies |= d.allow_self_copies;
        if let Some(n) = d.min_tokens {
            det.tokenizer.min_token_count = n;
        }
        if d.keep_case {
            det.tokenizer.lowercase = false;
        }
    }
    if let Some(fl) = f.filter {
        if let Some(p) = fl.copy_pct {
            cfg.filter.copy_pct_threshold = p;
        }
        if let Some(n) = fl.min_tweets {
            cfg.filter.min_tweets = n;
        }
        if let Some(fmt) = fl.format {
            cfg.graph_format = fmt;
        }
    }
    if let Some(c) = f.community {
        if let Some(s) = c.community_seed {
            cfg.community.seed = s;
        }
        if let Some(r) = c.resolution {
            cfg.community.resolution = r;
        }
        if c.unweighted {
            cfg.community.weighted = false;
        }
    }
    if let Some(e) = f.evolution {
        match e.growth_mode.as_deref() {
            Some("relative") => cfg.evolution.mode = GrowthMode::Relative,
            Some(_) => cfg.evolution.mode = GrowthMode::Raw,
            None => {}
        }
        if let Some(t) = e.growth_threshold {
            cfg.evolution.threshold = t;
        }
    }
    if let Some(h) = f.horizon_hours {
        let secs = h * 3600.0;
        if !(secs.is_finite() && secs >= 1.0) {
            return Err(UsageError(format!("horizon of {h} hours is not positive")).into());
        }
        cfg.trend_horizon_secs = secs.round() as i64;
    }
    Ok(())
}

fn usage(e: ccid_core::Error) -> anyhow::Error {
    UsageError(e.to_string()).into()
}

/// Parses a TOML or JSON document by file extension into a JSON value.
pub fn read_document(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    let value = if is_toml {
        let v: toml::Value = toml::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
        serde_json::to_value(v)?
    } else {
        serde_json::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())))?
    };
    if !value.is_object() {
        bail!(UsageError(format!("{}: expected a table at the top level", path.display())));
    }
    Ok(value)
}

/// Recursively lays `over` onto `base`; tables merge, everything else replaces.
pub fn overlay(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => overlay(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

pub fn resolve(flags: &Flags) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    apply_flags(&mut cfg, flags)?;
    if let Some(path) = flags.common.and_then(|c| c.config.as_ref()) {
        let mut value = serde_json::to_value(&cfg)?;
        overlay(&mut value, read_document(path)?);
        cfg = serde_json::from_value(value).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
    }
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn overlay_merges_tables() {
        let mut base = json!({"a": {"x": 1, "y": 2}, "b": [1, 2]});
        overlay(&mut base, json!({"a": {"y": 3}, "b": [9], "c": true}));
        assert_eq!(base, json!({"a": {"x": 1, "y": 3}, "b": [9], "c": true}));
    }

    #[test]
    fn config_file_beats_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "[detector]\njaccard_threshold = 0.9\n[filter]\nmin_tweets = 7\n").unwrap();
        let common = CommonArgs {
            config: Some(path),
            ..Default::default()
        };
        let det = DetectorArgs {
            jaccard_threshold: Some(0.5),
            window_min: Some(20.0),
            ..Default::default()
        };
        let cfg = resolve(&Flags {
            common: Some(&common),
            detector: Some(&det),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(cfg.detector.jaccard_threshold, 0.9);
        assert_eq!((cfg.detector.window_secs, cfg.detector.slide_secs), (1200, 600));
        assert_eq!(cfg.filter.min_tweets, 7);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_usage_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"detektor": {}}"#).unwrap();
        let common = CommonArgs {
            config: Some(path),
            ..Default::default()
        };
        let err = resolve(&Flags {
            common: Some(&common),
            ..Default::default()
        })
        .unwrap_err();
        assert!(err.is::<UsageError>());
        let det = DetectorArgs {
            window_min: Some(10.0),
            slide_min: Some(3.0),
            ..Default::default()
        };
        let err = resolve(&Flags {
            detector: Some(&det),
            ..Default::default()
        })
        .unwrap_err();
        assert!(err.is::<UsageError>());
    }

    #[test]
    fn periods_and_layers_parse() {
        let p = parse_period("q1:0:100").unwrap();
        assert_eq!((p.label.as_str(), p.start, p.end), ("q1", 0, 100));
        assert!(parse_period("q1:100:0").is_err());
        assert!(parse_period("0:100").is_err());
        assert_eq!(parse_layer("follows=f.tsv").unwrap().0, "follow");
        assert!(parse_layer("likes=f.tsv").is_err());
    }
}
