//! Concurrent content injection detection.
//!
//! The corpus is cut into epoch-aligned windows of `window_secs` that advance by
//! `slide_secs`. Each window is an independent task: its tweets are compared
//! pairwise, near-duplicates are grouped, and each group spanning at least two
//! authors becomes a [`CopyEvent`] whose earliest tweet is the source. Events found
//! by overlapping windows are merged by source tweet id.

mod detector;
mod sweep;
mod windows;

use serde::{Deserialize, Serialize};

use crate::corpus::{AccountId, Timestamp, TweetId};
use crate::error::{Error, Result};
use crate::tokenize::TokenizerConfig;

pub use detector::{account_pairs, detect_all, Detection, DetectionSummary, Detector, SimilarPair, WindowResult};
pub use sweep::{sweep_jaccard, sweep_window, JaccardSweepRow, WindowSweepRow};
pub use windows::{make_windows, WindowTask};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    /// Connected components of the above-threshold similarity relation.
    #[default]
    Component,
    /// Greedy clique cover in time order: a tweet joins the first group whose
    /// every member it is similar to.
    Clique,
}

impl std::str::FromStr for Grouping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "component" => Ok(Grouping::Component),
            "clique" => Ok(Grouping::Clique),
            _ => Err(Error::arg(format!(
                "unknown grouping {s:?}, expected component or clique"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub jaccard_threshold: f64,
    pub window_secs: i64,
    pub slide_secs: i64,
    pub grouping: Grouping,
    pub tokenizer: TokenizerConfig,
    /// Native retweets are legitimate duplicates and are skipped unless set.
    pub include_retweets: bool,
    /// Count tweets by the source's own author as copies.
    pub allow_self_copies: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            jaccard_threshold: 0.70,
            window_secs: 600,
            slide_secs: 300,
            grouping: Grouping::Component,
            tokenizer: TokenizerConfig::default(),
            include_retweets: false,
            allow_self_copies: false,
        }
    }
}

impl DetectorConfig {
    /// Window of `minutes` sliding by half its length.
    pub fn with_window_minutes(mut self, minutes: f64) -> Result<Self> {
        let secs = minutes_to_secs(minutes)?;
        if secs % 2 != 0 {
            return Err(Error::arg(format!(
                "window of {minutes} minutes has no whole-second half"
            )));
        }
        self.window_secs = secs;
        self.slide_secs = secs / 2;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.jaccard_threshold > 0.0 && self.jaccard_threshold <= 1.0) {
            return Err(Error::arg(format!(
                "jaccard threshold {} outside (0, 1]",
                self.jaccard_threshold
            )));
        }
        if self.window_secs <= 0 || self.slide_secs <= 0 {
            return Err(Error::arg("window and slide must be positive"));
        }
        if self.slide_secs > self.window_secs || self.window_secs % self.slide_secs != 0 {
            return Err(Error::arg(format!(
                "slide {}s does not divide window {}s",
                self.slide_secs, self.window_secs
            )));
        }
        Ok(())
    }

    /// Number of windows every interior tweet is visited by.
    pub fn windows_per_tweet(&self) -> i64 {
        self.window_secs / self.slide_secs
    }
}

/// Converts a minute count given on the command line to whole seconds.
pub fn minutes_to_secs(minutes: f64) -> Result<i64> {
    let secs = minutes * 60.0;
    if !secs.is_finite() || secs <= 0.0 || (secs - secs.round()).abs() > 1e-9 {
        return Err(Error::arg(format!(
            "{minutes} minutes is not a positive whole number of seconds"
        )));
    }
    Ok(secs.round() as i64)
}

/// One copied tweet inside an event.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Copy {
    pub tweet_id: TweetId,
    pub author: AccountId,
    pub timestamp: Timestamp,
    /// Jaccard similarity to the source tweet.
    pub similarity: f64,
    /// Highest similarity to any other member of the group; this is the link that
    /// put the tweet in the group and is always at or above the threshold.
    pub link_similarity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CopyEvent {
    pub source_tweet_id: TweetId,
    pub source_author: AccountId,
    pub source_timestamp: Timestamp,
    /// Lowest window index the event was found in.
    pub window_index: i64,
    /// Sorted by `(timestamp, tweet_id)`.
    pub copies: Vec<Copy>,
}

impl CopyEvent {
    /// Distinct copier accounts other than the source author.
    pub fn copier_accounts(&self) -> Vec<AccountId> {
        let mut v: Vec<AccountId> = self
            .copies
            .iter()
            .map(|c| c.author)
            .filter(|&a| a != self.source_author)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Writes events as newline-delimited JSON.
pub fn write_events(events: &[CopyEvent], mut out: impl std::io::Write) -> std::io::Result<()> {
    for e in events {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_events(path: &std::path::Path) -> Result<Vec<CopyEvent>> {
    use std::io::BufRead;
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut events = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let event = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            path: path.to_path_buf(),
            reason: format!("line {}: {e}", i + 1),
        })?;
        events.push(event);
    }
    Ok(events)
}
