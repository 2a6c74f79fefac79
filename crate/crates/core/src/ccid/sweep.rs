//! Parameter sweeps over the similarity threshold and the window length.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{CopyEvent, DetectionSummary, Detector, DetectorConfig};
use crate::corpus::{AccountId, CorpusIndex, TweetId};
use crate::error::{Error, Result};
use crate::stats::{ecdf, CdfPoint};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JaccardSweepRow {
    pub threshold: f64,
    pub summary: DetectionSummary,
    /// Distribution over copier accounts of their distinct copied tweets.
    pub copied_tweets_per_user: Vec<CdfPoint>,
    /// Distribution over unordered (source, copier) account pairs of the number of
    /// events they share.
    pub events_per_user_pair: Vec<CdfPoint>,
    /// Copiers with exactly one copied tweet.
    pub single_copy_users: usize,
    /// Raw per-pair counts behind `events_per_user_pair`.
    #[serde(skip)]
    pub pair_counts: BTreeMap<(AccountId, AccountId), u64>,
}

pub(crate) fn copied_tweets_per_user(events: &[CopyEvent]) -> BTreeMap<AccountId, u64> {
    let mut per_user: BTreeMap<AccountId, BTreeSet<TweetId>> = BTreeMap::new();
    for e in events {
        for c in e.copies.iter().filter(|c| c.author != e.source_author) {
            per_user.entry(c.author).or_default().insert(c.tweet_id);
        }
    }
    per_user
        .into_iter()
        .map(|(u, s)| (u, s.len() as u64))
        .collect()
}

pub(crate) fn events_per_user_pair(events: &[CopyEvent]) -> BTreeMap<(AccountId, AccountId), u64> {
    let mut counts = BTreeMap::new();
    for e in events {
        for c in e.copier_accounts() {
            let key = (e.source_author.min(c), e.source_author.max(c));
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    counts
}

fn to_f64<K>(m: &BTreeMap<K, u64>) -> Vec<f64> {
    m.values().map(|&v| v as f64).collect()
}

/// Runs the detector once per threshold, keeping every other setting of `base`.
pub fn sweep_jaccard(
    index: &CorpusIndex,
    base: &DetectorConfig,
    thresholds: &[f64],
) -> Result<Vec<JaccardSweepRow>> {
    if let Some(bad) = thresholds.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
        return Err(Error::arg(format!("threshold {bad} outside (0, 1]")));
    }
    let mut detector = Detector::new(index, base)?;
    let mut rows = Vec::with_capacity(thresholds.len());
    for &threshold in thresholds {
        let config = DetectorConfig {
            jaccard_threshold: threshold,
            ..base.clone()
        };
        detector.reconfigure(&config)?;
        let detection = detector.detect_all()?;
        let per_user = copied_tweets_per_user(&detection.events);
        let per_pair = events_per_user_pair(&detection.events);
        rows.push(JaccardSweepRow {
            threshold,
            summary: detection.summary(),
            copied_tweets_per_user: ecdf(&to_f64(&per_user)),
            events_per_user_pair: ecdf(&to_f64(&per_pair)),
            single_copy_users: per_user.values().filter(|&&n| n == 1).count(),
            pair_counts: per_pair,
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSweepRow {
    pub window_minutes: f64,
    pub window_secs: i64,
    pub slide_secs: i64,
    pub summary: DetectionSummary,
    /// Wall-clock seconds; the only non-deterministic field.
    pub elapsed_secs: f64,
}

/// Runs the detector once per window length, each sliding by half its length.
pub fn sweep_window(
    index: &CorpusIndex,
    base: &DetectorConfig,
    window_minutes: &[f64],
) -> Result<Vec<WindowSweepRow>> {
    let mut detector = Detector::new(index, base)?;
    let mut rows = Vec::with_capacity(window_minutes.len());
    for &minutes in window_minutes {
        let config = base.clone().with_window_minutes(minutes)?;
        detector.reconfigure(&config)?;
        let started = Instant::now();
        let detection = detector.detect_all()?;
        rows.push(WindowSweepRow {
            window_minutes: minutes,
            window_secs: config.window_secs,
            slide_secs: config.slide_secs,
            summary: detection.summary(),
            elapsed_secs: started.elapsed().as_secs_f64(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ccid::detect_all;
    use crate::corpus::{PeriodScheme, Tweet};

    fn tw(id: u64, author: u64, ts: i64, text: &str) -> Tweet {
        Tweet {
            tweet_id: id,
            author_id: AccountId(author),
            timestamp: ts,
            text: text.into(),
            hashtags: vec![],
            urls: vec![],
            source_app: None,
            is_retweet: false,
        }
    }

    fn botnet_fixture() -> CorpusIndex {
        // five accounts posting identical text in 20 campaigns
        let mut tweets = Vec::new();
        let mut id = 0;
        for campaign in 0..20 {
            let text = format!("campaign{campaign} buy now limited offer best price");
            for member in 0..5u64 {
                id += 1;
                tweets.push(tw(id, member + 1, campaign * 3600 + member as i64 * 10, &text));
            }
        }
        CorpusIndex::from_tweets(tweets, &PeriodScheme::CalendarYears).unwrap()
    }

    #[test]
    fn planted_botnet_pairs_present_at_every_threshold() {
        let idx = botnet_fixture();
        let rows = sweep_jaccard(&idx, &DetectorConfig::default(), &[0.5, 0.7, 0.9, 1.0]).unwrap();
        for row in &rows {
            // account 1 posts first in every campaign
            let pairs: Vec<_> = row.pair_counts.keys().copied().collect();
            let expected: Vec<_> = (2..=5).map(|b| (AccountId(1), AccountId(b))).collect();
            assert_eq!(pairs, expected, "threshold {}", row.threshold);
            assert!(row.pair_counts.values().all(|&n| n == 20));
        }
    }

    #[test]
    fn single_threshold_matches_direct_detection() {
        let idx = botnet_fixture();
        let rows = sweep_jaccard(&idx, &DetectorConfig::default(), &[0.7]).unwrap();
        let direct = detect_all(&idx, &DetectorConfig::default()).unwrap();
        assert_eq!(rows[0].summary, direct.summary());
        assert_eq!(rows[0].pair_counts, events_per_user_pair(&direct.events));
    }

    #[test]
    fn bad_threshold_rejected() {
        let idx = botnet_fixture();
        assert!(sweep_jaccard(&idx, &DetectorConfig::default(), &[0.0]).is_err());
        assert!(sweep_jaccard(&idx, &DetectorConfig::default(), &[1.5]).is_err());
    }

    #[test]
    fn twelve_minute_gap_needs_fifteen_minute_window() {
        let text = "exactly the same words repeated here";
        // start 100 s past a 7.5 minute boundary so the pair is interior for both sizes
        let idx = CorpusIndex::from_tweets(
            vec![
                tw(1, 1, 0, "warm up filler text"),
                tw(2, 1, 1000, text),
                tw(3, 2, 1720, text),
                tw(4, 3, 5000, "cool down filler text"),
            ],
            &PeriodScheme::CalendarYears,
        )
        .unwrap();
        let rows = sweep_window(&idx, &DetectorConfig::default(), &[10.0, 15.0]).unwrap();
        assert_eq!(rows[0].summary.similar_pairs, 0);
        assert_eq!(rows[1].summary.similar_pairs, 1);
        assert_eq!((rows[1].window_secs, rows[1].slide_secs), (900, 450));
    }
}
