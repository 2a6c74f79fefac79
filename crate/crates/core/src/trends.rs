//! Hashtags posted by bots versus trending-topic snapshots around each post.
//!
//! For a tweet at `t` with hashtag `h`, `h` was trending *before* when some snapshot
//! in `[t − horizon, t)` lists it and *after* when one in `(t, t + horizon]` does. A
//! snapshot exactly at `t` counts for both directions.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ccid::CopyEvent;
use crate::corpus::{AccountId, CorpusIndex, Timestamp, TweetId};
use crate::error::{Error, Result};
use crate::layers::SkippedRow;
use crate::tokenize::{tokenize_tweet, TokenizerConfig};
use crate::tsv::read_rows;

pub const DEFAULT_HORIZON_SECS: i64 = 24 * 3600;

/// Lowercased, without leading `#`.
pub fn normalize_topic(s: &str) -> String {
    s.trim().trim_start_matches('#').to_lowercase()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrendSnapshot {
    pub timestamp: Timestamp,
    pub topics: BTreeSet<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SnapshotLoad {
    /// Time-sorted, one per distinct timestamp.
    pub snapshots: Vec<TrendSnapshot>,
    pub skipped: Vec<SkippedRow>,
}

/// Reads `timestamp\ttopic` rows; rows sharing a timestamp form one snapshot.
pub fn load_snapshots(path: &Path) -> Result<SnapshotLoad> {
    let mut by_time: BTreeMap<Timestamp, BTreeSet<String>> = BTreeMap::new();
    let mut skipped = Vec::new();
    for row in read_rows(path, 0)? {
        let parsed = match row.fields.as_slice() {
            [t, topic] => match t.parse::<Timestamp>() {
                Ok(t) if !normalize_topic(topic).is_empty() => Ok((t, normalize_topic(topic))),
                Ok(_) => Err("empty topic".to_string()),
                Err(e) => Err(format!("bad timestamp {t:?}: {e}")),
            },
            f => Err(format!("expected 2 columns, found {}", f.len())),
        };
        match parsed {
            Ok((t, topic)) => {
                by_time.entry(t).or_default().insert(topic);
            }
            Err(reason) => skipped.push(SkippedRow {
                line: row.line,
                reason,
            }),
        }
    }
    Ok(SnapshotLoad {
        snapshots: by_time
            .into_iter()
            .map(|(timestamp, topics)| TrendSnapshot { timestamp, topics })
            .collect(),
        skipped,
    })
}

pub fn write_snapshots(snapshots: &[TrendSnapshot], out: &mut impl std::io::Write) -> std::io::Result<()> {
    writeln!(out, "timestamp\ttopic")?;
    for s in snapshots {
        for topic in &s.topics {
            writeln!(out, "{}\t{topic}", s.timestamp)?;
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BotTweet {
    pub account: AccountId,
    pub timestamp: Timestamp,
    pub hashtags: Vec<String>,
}

/// Tweets by `bots` that take part in a copy event, as source or copy, with the
/// hashtags from the record and from the text.
pub fn bot_tweets_from_events(
    events: &[CopyEvent],
    index: &CorpusIndex,
    bots: &BTreeSet<AccountId>,
) -> Vec<BotTweet> {
    let mut ids: BTreeSet<TweetId> = BTreeSet::new();
    for e in events {
        if bots.contains(&e.source_author) {
            ids.insert(e.source_tweet_id);
        }
        ids.extend(e.copies.iter().filter(|c| bots.contains(&c.author)).map(|c| c.tweet_id));
    }
    let cfg = TokenizerConfig::default();
    index
        .tweets()
        .iter()
        .filter(|t| ids.contains(&t.tweet_id))
        .map(|t| {
            let tags: BTreeSet<String> = tokenize_tweet(t, &cfg)
                .tokens()
                .iter()
                .filter(|tok| tok.starts_with('#'))
                .map(|tok| normalize_topic(tok))
                .filter(|tag| !tag.is_empty())
                .collect();
            BotTweet {
                account: t.author_id,
                timestamp: t.timestamp,
                hashtags: tags.into_iter().collect(),
            }
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountTrendFlags {
    pub account: AccountId,
    pub posted_hashtags: bool,
    pub trending_before: bool,
    pub trending_after: bool,
    pub before_only: bool,
    pub after_only: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrendSummary {
    pub accounts: usize,
    pub posted_hashtags: usize,
    pub trending_before: usize,
    pub trending_after: usize,
    pub before_only: usize,
    pub after_only: usize,
    pub trending_either: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrendInteractionReport {
    pub horizon_secs: i64,
    pub accounts: Vec<AccountTrendFlags>,
    pub summary: TrendSummary,
    pub warnings: Vec<String>,
}

/// Snapshot times per topic, sorted.
struct TopicIndex(HashMap<String, Vec<Timestamp>>);

impl TopicIndex {
    fn new(snapshots: &[TrendSnapshot]) -> Self {
        let mut m: HashMap<String, Vec<Timestamp>> = HashMap::new();
        for s in snapshots {
            for topic in &s.topics {
                m.entry(normalize_topic(topic)).or_default().push(s.timestamp);
            }
        }
        for v in m.values_mut() {
            v.sort_unstable();
            v.dedup();
        }
        TopicIndex(m)
    }

    /// Whether `topic` trends somewhere in `[lo, hi]`.
    fn any_in(&self, topic: &str, lo: Timestamp, hi: Timestamp) -> bool {
        self.0.get(topic).is_some_and(|times| {
            let i = times.partition_point(|&s| s < lo);
            i < times.len() && times[i] <= hi
        })
    }
}

pub fn trend_interaction(
    tweets: &[BotTweet],
    snapshots: &[TrendSnapshot],
    horizon_secs: i64,
) -> Result<TrendInteractionReport> {
    if horizon_secs <= 0 {
        return Err(Error::arg(format!("horizon {horizon_secs}s must be positive")));
    }
    let mut warnings = Vec::new();
    if snapshots.is_empty() {
        let w = "no trend snapshots; all trend flags are false".to_string();
        log::warn!("{w}");
        warnings.push(w);
    }
    let index = TopicIndex::new(snapshots);

    let mut flags: BTreeMap<AccountId, AccountTrendFlags> = BTreeMap::new();
    for tw in tweets {
        let f = flags.entry(tw.account).or_insert_with(|| AccountTrendFlags {
            account: tw.account,
            ..Default::default()
        });
        for tag in tw.hashtags.iter().map(|h| normalize_topic(h)) {
            if tag.is_empty() {
                continue;
            }
            f.posted_hashtags = true;
            let t = tw.timestamp;
            f.trending_before |= index.any_in(&tag, t.saturating_sub(horizon_secs), t);
            f.trending_after |= index.any_in(&tag, t, t.saturating_add(horizon_secs));
        }
    }

    let mut summary = TrendSummary::default();
    let accounts: Vec<AccountTrendFlags> = flags
        .into_values()
        .map(|mut f| {
            f.before_only = f.trending_before && !f.trending_after;
            f.after_only = f.trending_after && !f.trending_before;
            summary.accounts += 1;
            summary.posted_hashtags += f.posted_hashtags as usize;
            summary.trending_before += f.trending_before as usize;
            summary.trending_after += f.trending_after as usize;
            summary.before_only += f.before_only as usize;
            summary.after_only += f.after_only as usize;
            summary.trending_either += (f.trending_before || f.trending_after) as usize;
            f
        })
        .collect();
    Ok(TrendInteractionReport {
        horizon_secs,
        accounts,
        summary,
        warnings,
    })
}
