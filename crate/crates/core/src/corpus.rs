//! Corpus ingestion and time indexing.
//!
//! The corpus is a newline-delimited JSON file, one tweet per line. Loading never
//! aborts on a bad record: malformed lines and duplicate tweet ids are collected in
//! the [`LoadReport`] with their 1-based line numbers and skipped.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type TweetId = u64;

/// Seconds since the UTC epoch.
pub type Timestamp = i64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AccountId(pub u64);

impl fmt::Display for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for AccountId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        s.trim().parse().map(AccountId)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tweet {
    pub tweet_id: TweetId,
    pub author_id: AccountId,
    pub timestamp: Timestamp,
    pub text: String,
    #[serde(default)]
    pub hashtags: Vec<String>,
    #[serde(default)]
    pub urls: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_app: Option<String>,
    #[serde(default)]
    pub is_retweet: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Account {
    pub account_id: AccountId,
    pub created_at: Timestamp,
    pub screen_name: String,
    #[serde(default)]
    pub yearly_tweet_counts: BTreeMap<String, u64>,
}

/// A labelled half-open time range `[start, end)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Period {
    pub label: String,
    pub start: Timestamp,
    pub end: Timestamp,
}

impl Period {
    pub fn new(label: impl Into<String>, start: Timestamp, end: Timestamp) -> Result<Self> {
        if start >= end {
            return Err(Error::arg(format!(
                "period start {start} must be before end {end}"
            )));
        }
        Ok(Period {
            label: label.into(),
            start,
            end,
        })
    }

    /// The calendar year `year` in UTC.
    pub fn year(year: i32) -> Self {
        let start = Utc
            .with_ymd_and_hms(year, 1, 1, 0, 0, 0)
            .single()
            .expect("January 1st is unambiguous in UTC")
            .timestamp();
        let end = Utc
            .with_ymd_and_hms(year + 1, 1, 1, 0, 0, 0)
            .single()
            .expect("January 1st is unambiguous in UTC")
            .timestamp();
        Period {
            label: year.to_string(),
            start,
            end,
        }
    }

    pub fn contains(&self, t: Timestamp) -> bool {
        self.start <= t && t < self.end
    }

    pub fn overlaps(&self, other: &Period) -> bool {
        self.start < other.end && other.start < self.end
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{},{})", self.label, self.start, self.end)
    }
}

/// Accepts either a calendar year (`2016`) or `label:start:end` in epoch seconds.
impl FromStr for Period {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [year] => year
                .trim()
                .parse::<i32>()
                .map(Period::year)
                .map_err(|_| Error::arg(format!("bad period {s:?}: expected a year"))),
            [label, start, end] => {
                let start = start
                    .trim()
                    .parse()
                    .map_err(|_| Error::arg(format!("bad period start in {s:?}")))?;
                let end = end
                    .trim()
                    .parse()
                    .map_err(|_| Error::arg(format!("bad period end in {s:?}")))?;
                Period::new(label.trim(), start, end)
            }
            _ => Err(Error::arg(format!(
                "bad period {s:?}: expected YEAR or LABEL:START:END"
            ))),
        }
    }
}

/// How tweets are assigned to analysis periods.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "ranges")]
pub enum PeriodScheme {
    /// One period per UTC calendar year spanned by the corpus.
    #[default]
    CalendarYears,
    /// Explicit disjoint ranges; tweets outside all of them are rejected at load time.
    Ranges(Vec<Period>),
}

impl PeriodScheme {
    fn validate(&self) -> Result<()> {
        if let PeriodScheme::Ranges(ranges) = self {
            for (i, a) in ranges.iter().enumerate() {
                if a.start >= a.end {
                    return Err(Error::arg(format!("inverted period {a}")));
                }
                if let Some(b) = ranges[i + 1..].iter().find(|b| a.overlaps(b)) {
                    return Err(Error::arg(format!("periods {a} and {b} overlap")));
                }
            }
        }
        Ok(())
    }

    fn resolve(&self, min_t: Option<Timestamp>, max_t: Option<Timestamp>) -> Vec<Period> {
        match self {
            PeriodScheme::CalendarYears => match (min_t, max_t) {
                (Some(lo), Some(hi)) => {
                    let first = year_of(lo);
                    let last = year_of(hi);
                    (first..=last).map(Period::year).collect()
                }
                _ => Vec::new(),
            },
            PeriodScheme::Ranges(ranges) => {
                let mut ranges = ranges.clone();
                ranges.sort_by_key(|p| p.start);
                ranges
            }
        }
    }
}

fn year_of(t: Timestamp) -> i32 {
    Utc.timestamp_opt(t, 0)
        .single()
        .map(|d| d.year())
        .unwrap_or(1970)
}

#[derive(Clone, Debug, Default)]
pub struct LoadOptions {
    pub periods: PeriodScheme,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecordErrorKind {
    Malformed { reason: String },
    DuplicateId { id: u64 },
    NegativeTimestamp { timestamp: Timestamp },
    OutsidePeriods { timestamp: Timestamp },
}

/// A rejected input record.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RecordError {
    pub line: usize,
    #[serde(flatten)]
    pub kind: RecordErrorKind,
}

impl fmt::Display for RecordError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            RecordErrorKind::Malformed { reason } => write!(f, "line {}: {reason}", self.line),
            RecordErrorKind::DuplicateId { id } => {
                write!(f, "line {}: duplicate id {id}, first occurrence kept", self.line)
            }
            RecordErrorKind::NegativeTimestamp { timestamp } => {
                write!(f, "line {}: negative timestamp {timestamp}", self.line)
            }
            RecordErrorKind::OutsidePeriods { timestamp } => write!(
                f,
                "line {}: timestamp {timestamp} outside every configured period",
                self.line
            ),
        }
    }
}

/// Tweets sorted by `(timestamp, tweet_id)` together with their period partition.
///
/// The index is immutable once built and is shared read-only by the parallel
/// window detectors.
#[derive(Clone, Debug, PartialEq)]
pub struct CorpusIndex {
    tweets: Vec<Tweet>,
    periods: Vec<Period>,
}

impl CorpusIndex {
    /// Builds an index from in-memory tweets. Duplicate ids keep the first occurrence.
    pub fn from_tweets(tweets: Vec<Tweet>, scheme: &PeriodScheme) -> Result<Self> {
        let (index, errors) = Self::build(tweets.into_iter().map(|t| (0, t)), scheme)?;
        if let Some(e) = errors.first() {
            log::warn!("{} tweets rejected while indexing, first: {e}", errors.len());
        }
        Ok(index)
    }

    fn build(
        records: impl Iterator<Item = (usize, Tweet)>,
        scheme: &PeriodScheme,
    ) -> Result<(Self, Vec<RecordError>)> {
        scheme.validate()?;
        let mut errors = Vec::new();
        let mut seen = HashMap::new();
        let mut tweets = Vec::new();
        for (line, tweet) in records {
            if tweet.timestamp < 0 {
                errors.push(RecordError {
                    line,
                    kind: RecordErrorKind::NegativeTimestamp {
                        timestamp: tweet.timestamp,
                    },
                });
                continue;
            }
            if seen.insert(tweet.tweet_id, line).is_some() {
                errors.push(RecordError {
                    line,
                    kind: RecordErrorKind::DuplicateId { id: tweet.tweet_id },
                });
                continue;
            }
            tweets.push((line, tweet));
        }

        if let PeriodScheme::Ranges(ranges) = scheme {
            tweets.retain(|(line, t)| {
                let inside = ranges.iter().any(|p| p.contains(t.timestamp));
                if !inside {
                    errors.push(RecordError {
                        line: *line,
                        kind: RecordErrorKind::OutsidePeriods {
                            timestamp: t.timestamp,
                        },
                    });
                }
                inside
            });
        }

        let mut tweets: Vec<Tweet> = tweets.into_iter().map(|(_, t)| t).collect();
        tweets.sort_by_key(|t| (t.timestamp, t.tweet_id));
        let periods = scheme.resolve(
            tweets.first().map(|t| t.timestamp),
            tweets.last().map(|t| t.timestamp),
        );
        errors.sort_by_key(|e| e.line);
        Ok((CorpusIndex { tweets, periods }, errors))
    }

    pub fn tweets(&self) -> &[Tweet] {
        &self.tweets
    }

    pub fn periods(&self) -> &[Period] {
        &self.periods
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    /// Index range of tweets with `start <= timestamp < end`.
    pub fn range_of(&self, start: Timestamp, end: Timestamp) -> std::ops::Range<usize> {
        let lo = self.tweets.partition_point(|t| t.timestamp < start);
        let hi = self.tweets.partition_point(|t| t.timestamp < end);
        lo..hi.max(lo)
    }

    /// Restriction to tweets inside `period`, order preserved.
    pub fn slice_period(&self, period: &Period) -> Result<CorpusIndex> {
        if period.start >= period.end {
            return Err(Error::arg(format!("inverted period {period}")));
        }
        let range = self.range_of(period.start, period.end);
        Ok(CorpusIndex {
            tweets: self.tweets[range].to_vec(),
            periods: vec![period.clone()],
        })
    }

    /// Number of tweets per author.
    pub fn tweet_counts(&self) -> HashMap<AccountId, u64> {
        let mut counts = HashMap::new();
        for t in &self.tweets {
            *counts.entry(t.author_id).or_insert(0) += 1;
        }
        counts
    }

    /// The period a timestamp falls into, if any.
    pub fn period_of(&self, t: Timestamp) -> Option<&Period> {
        self.periods.iter().find(|p| p.contains(t))
    }
}

#[derive(Debug)]
pub struct LoadReport {
    pub index: CorpusIndex,
    /// Non-blank lines read.
    pub records_read: usize,
    pub skipped: Vec<RecordError>,
}

/// Loads a newline-delimited JSON corpus.
pub fn load_corpus(path: &Path, options: &LoadOptions) -> Result<LoadReport> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut parsed = Vec::new();
    let mut skipped = Vec::new();
    let mut records_read = 0;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        records_read += 1;
        match serde_json::from_str::<Tweet>(&line) {
            Ok(t) => parsed.push((lineno, t)),
            Err(e) => skipped.push(RecordError {
                line: lineno,
                kind: RecordErrorKind::Malformed {
                    reason: e.to_string(),
                },
            }),
        }
    }
    let (index, mut rejected) = CorpusIndex::build(parsed.into_iter(), &options.periods)?;
    skipped.append(&mut rejected);
    skipped.sort_by_key(|e| e.line);
    Ok(LoadReport {
        index,
        records_read,
        skipped,
    })
}

/// Loads a newline-delimited JSON accounts file. Duplicate ids keep the first record.
pub fn load_accounts(path: &Path) -> Result<(Vec<Account>, Vec<RecordError>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut seen = HashMap::new();
    let mut accounts = Vec::new();
    let mut skipped = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Account>(&line) {
            Ok(a) => {
                if seen.insert(a.account_id, lineno).is_some() {
                    skipped.push(RecordError {
                        line: lineno,
                        kind: RecordErrorKind::DuplicateId { id: a.account_id.0 },
                    });
                } else {
                    accounts.push(a);
                }
            }
            Err(e) => skipped.push(RecordError {
                line: lineno,
                kind: RecordErrorKind::Malformed {
                    reason: e.to_string(),
                },
            }),
        }
    }
    Ok((accounts, skipped))
}

/// Reads a set of account ids from the first column of a TSV file (bot lists,
/// ground-truth labels). Any further columns are ignored.
pub fn load_account_list(path: &Path) -> Result<BTreeSet<AccountId>> {
    crate::tsv::read_rows(path, 0)?
        .into_iter()
        .map(|row| {
            row.fields[0].parse::<AccountId>().map_err(|_| Error::Malformed {
                path: path.to_path_buf(),
                reason: format!("line {}: bad account id {:?}", row.line, row.fields[0]),
            })
        })
        .collect()
}

/// Writes tweets as newline-delimited JSON in index order.
pub fn write_corpus(tweets: &[Tweet], mut out: impl std::io::Write) -> std::io::Result<()> {
    for t in tweets {
        serde_json::to_writer(&mut out, t)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_accounts(accounts: &[Account], mut out: impl std::io::Write) -> std::io::Result<()> {
    for a in accounts {
        serde_json::to_writer(&mut out, a)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
