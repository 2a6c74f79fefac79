//! Per-account content and interaction features, and their distribution
//! contrast between bot and clear accounts.
//!
//! Content features come from tweet text; graph features come from the layer
//! graphs and are left out of the table entirely when the layer they need is not
//! supplied. Accounts without tweets get null content features.
//!
//! Definitions not fixed by the observed feature names:
//!
//! * a *capital word* is a word token of at least two characters that contains a
//!   letter and whose letters are all uppercase; `capital_words_pct` is relative
//!   to all word tokens (URLs and emoji excluded);
//! * `digits_pct` is digit characters over non-whitespace characters;
//! * `urls_per_tweet_avg` counts the distinct URLs of a tweet, from its text and
//!   its `urls` field together;
//! * `words_per_tweet_stddev` is the population standard deviation;
//! * `favorited_out_count` is the number of distinct accounts favorited and
//!   `favorited_out_pct` that number over all favorites given, in percent. The
//!   inbound pair is defined the same way over favorites received;
//! * `*_degree` counts distinct neighbours, `*_weighted` sums edge weights;
//!   `mentions_in`/`mentions_out` are weighted.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Account, AccountId, CorpusIndex, Timestamp, Tweet};
use crate::error::{Error, Result};
use crate::layers::{LayerGraph, LayerKind};
use crate::stats::{self, CdfPoint};
use crate::tokenize::{raw_pieces, Piece};

pub const CONTENT_FEATURES: [&str; 9] = [
    "capital_words_pct",
    "capital_words_count",
    "digits_pct",
    "digits_count",
    "emoji_count",
    "emoticon_count",
    "urls_per_tweet_avg",
    "words_per_tweet_stddev",
    "unique_retweet_hashtags",
];

/// Graph features and the layer each one needs.
pub const GRAPH_FEATURES: [(&str, LayerKind); 15] = [
    ("favorited_out_count", LayerKind::Favorite),
    ("favorited_out_pct", LayerKind::Favorite),
    ("favoriters_in_count", LayerKind::Favorite),
    ("favoriters_in_pct", LayerKind::Favorite),
    ("mentions_in", LayerKind::Mention),
    ("mentions_out", LayerKind::Mention),
    ("quotes_in_degree", LayerKind::Quote),
    ("quotes_in_weighted", LayerKind::Quote),
    ("quotes_out_degree", LayerKind::Quote),
    ("quotes_out_weighted", LayerKind::Quote),
    ("retweets_in_degree", LayerKind::Retweet),
    ("retweets_in_weighted", LayerKind::Retweet),
    ("retweets_out_degree", LayerKind::Retweet),
    ("retweets_out_weighted", LayerKind::Retweet),
    ("friends_followers_jaccard", LayerKind::Follow),
];

pub fn is_emoticon(chunk: &str) -> bool {
    static LEXICON: OnceLock<BTreeSet<&'static str>> = OnceLock::new();
    LEXICON
        .get_or_init(|| {
            include_str!("../data/emoticons.txt")
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .collect()
        })
        .contains(chunk)
}

fn is_capital_word(word: &str) -> bool {
    word.chars().count() >= 2
        && word.chars().any(char::is_alphabetic)
        && word.chars().filter(|c| c.is_alphabetic()).all(char::is_uppercase)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub names: Vec<String>,
    pub rows: BTreeMap<AccountId, Vec<Option<f64>>>,
}

impl FeatureTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get(&self, account: AccountId, name: &str) -> Option<f64> {
        let col = self.column(name)?;
        self.rows.get(&account)?[col]
    }

    /// Non-null values of `name` for the accounts in `set`, in account order.
    pub fn values(&self, name: &str, set: &BTreeSet<AccountId>) -> Result<Vec<f64>> {
        let col = self
            .column(name)
            .ok_or_else(|| Error::arg(format!("unknown feature {name:?}")))?;
        Ok(set
            .iter()
            .filter_map(|a| self.rows.get(a).and_then(|r| r[col]))
            .collect())
    }
}

fn content_features(tweets: &[&Tweet]) -> [Option<f64>; 9] {
    if tweets.is_empty() {
        return [None; 9];
    }
    let (mut words, mut capitals, mut chars, mut digits) = (0u64, 0u64, 0u64, 0u64);
    let (mut emoji, mut emoticons, mut urls) = (0u64, 0u64, 0u64);
    let mut words_per_tweet = Vec::with_capacity(tweets.len());
    let mut rt_tags = BTreeSet::new();
    for t in tweets {
        let mut n_words = 0u64;
        let mut tweet_urls: BTreeSet<&str> = t.urls.iter().map(|u| u.trim()).filter(|u| !u.is_empty()).collect();
        for piece in raw_pieces(&t.text) {
            match piece {
                Piece::Url(u) => {
                    tweet_urls.insert(u);
                }
                Piece::Emoji(_) => emoji += 1,
                Piece::Word(w) => {
                    n_words += 1;
                    capitals += is_capital_word(w) as u64;
                    if t.is_retweet && w.starts_with('#') && w.len() > 1 {
                        rt_tags.insert(w[1..].to_lowercase());
                    }
                }
            }
        }
        if t.is_retweet {
            rt_tags.extend(
                t.hashtags
                    .iter()
                    .map(|h| h.trim().trim_start_matches('#').to_lowercase())
                    .filter(|h| !h.is_empty()),
            );
        }
        for chunk in t.text.split_whitespace() {
            emoticons += is_emoticon(chunk) as u64;
            for c in chunk.chars() {
                chars += 1;
                digits += c.is_ascii_digit() as u64;
            }
        }
        urls += tweet_urls.len() as u64;
        words += n_words;
        words_per_tweet.push(n_words as f64);
    }
    let pct = |num: u64, den: u64| if den == 0 { 0.0 } else { 100.0 * num as f64 / den as f64 };
    let n = tweets.len() as f64;
    let mean = words_per_tweet.iter().sum::<f64>() / n;
    let var = words_per_tweet.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / n;
    [
        Some(pct(capitals, words)),
        Some(capitals as f64),
        Some(pct(digits, chars)),
        Some(digits as f64),
        Some(emoji as f64),
        Some(emoticons as f64),
        Some(urls as f64 / n),
        Some(var.sqrt()),
        Some(rt_tags.len() as f64),
    ]
}

#[derive(Default)]
struct Degrees {
    out_deg: HashMap<AccountId, u64>,
    out_w: HashMap<AccountId, u64>,
    in_deg: HashMap<AccountId, u64>,
    in_w: HashMap<AccountId, u64>,
}

impl Degrees {
    fn add(&mut self, edges: &BTreeMap<(AccountId, AccountId), u64>) {
        for (&(a, b), &w) in edges {
            *self.out_deg.entry(a).or_default() += 1;
            *self.out_w.entry(a).or_default() += w;
            *self.in_deg.entry(b).or_default() += 1;
            *self.in_w.entry(b).or_default() += w;
        }
    }
}

/// Layer-derived lookups. Several layers of one kind are combined; a pair that
/// appears in two of them counts once per layer.
struct GraphLookup {
    present: BTreeSet<LayerKind>,
    degrees: BTreeMap<LayerKind, Degrees>,
    friends: HashMap<AccountId, BTreeSet<AccountId>>,
    followers: HashMap<AccountId, BTreeSet<AccountId>>,
}

impl GraphLookup {
    fn new(layers: &[LayerGraph]) -> Self {
        let mut lookup = GraphLookup {
            present: BTreeSet::new(),
            degrees: BTreeMap::new(),
            friends: HashMap::new(),
            followers: HashMap::new(),
        };
        for g in layers {
            lookup.present.insert(g.kind);
            if g.kind == LayerKind::Follow {
                for &(a, b) in g.edges.keys() {
                    lookup.friends.entry(a).or_default().insert(b);
                    lookup.followers.entry(b).or_default().insert(a);
                }
            } else if g.kind.directed() {
                lookup.degrees.entry(g.kind).or_default().add(&g.edges);
            }
        }
        lookup
    }

    fn value(&self, name: &str, kind: LayerKind, a: AccountId) -> Option<f64> {
        if kind == LayerKind::Follow {
            let empty = BTreeSet::new();
            let friends = self.friends.get(&a).unwrap_or(&empty);
            let followers = self.followers.get(&a).unwrap_or(&empty);
            let union = friends.union(followers).count();
            if union == 0 {
                return None;
            }
            return Some(friends.intersection(followers).count() as f64 / union as f64);
        }
        let d = self.degrees.get(&kind)?;
        let get = |m: &HashMap<AccountId, u64>| m.get(&a).copied().unwrap_or(0) as f64;
        let ratio = |deg: f64, w: f64| if w == 0.0 { None } else { Some(100.0 * deg / w) };
        match name {
            "favorited_out_count" | "quotes_out_degree" | "retweets_out_degree" => Some(get(&d.out_deg)),
            "favoriters_in_count" | "quotes_in_degree" | "retweets_in_degree" => Some(get(&d.in_deg)),
            "mentions_out" | "quotes_out_weighted" | "retweets_out_weighted" => Some(get(&d.out_w)),
            "mentions_in" | "quotes_in_weighted" | "retweets_in_weighted" => Some(get(&d.in_w)),
            "favorited_out_pct" => ratio(get(&d.out_deg), get(&d.out_w)),
            "favoriters_in_pct" => ratio(get(&d.in_deg), get(&d.in_w)),
            _ => unreachable!("unhandled graph feature {name}"),
        }
    }
}

/// Computes the feature table over every corpus author and every listed account.
pub fn compute_features(index: &CorpusIndex, layers: &[LayerGraph], accounts: &[Account]) -> FeatureTable {
    let mut by_author: BTreeMap<AccountId, Vec<&Tweet>> = BTreeMap::new();
    for t in index.tweets() {
        by_author.entry(t.author_id).or_default().push(t);
    }
    let created: HashMap<AccountId, Timestamp> = accounts.iter().map(|a| (a.account_id, a.created_at)).collect();
    let ids: Vec<AccountId> = by_author
        .keys()
        .copied()
        .chain(accounts.iter().map(|a| a.account_id))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let lookup = GraphLookup::new(layers);
    let graph: Vec<(&str, LayerKind)> = GRAPH_FEATURES
        .iter()
        .copied()
        .filter(|(_, k)| lookup.present.contains(k))
        .collect();
    let with_created = !accounts.is_empty();

    let mut names: Vec<String> = CONTENT_FEATURES.iter().map(|s| s.to_string()).collect();
    names.extend(graph.iter().map(|(n, _)| n.to_string()));
    if with_created {
        names.push("created_at".into());
    }

    let rows: Vec<Vec<Option<f64>>> = ids
        .par_iter()
        .map(|&a| {
            let tweets = by_author.get(&a).map(Vec::as_slice).unwrap_or(&[]);
            let mut row = content_features(tweets).to_vec();
            row.extend(graph.iter().map(|&(n, k)| lookup.value(n, k, a)));
            if with_created {
                row.push(created.get(&a).map(|&t| t as f64));
            }
            row
        })
        .collect();
    FeatureTable {
        names,
        rows: ids.into_iter().zip(rows).collect(),
    }
}

/// Features table as TSV; nulls are written as `-`.
pub fn write_features(table: &FeatureTable, mut out: impl Write) -> std::io::Result<()> {
    write!(out, "account_id")?;
    for n in &table.names {
        write!(out, "\t{n}")?;
    }
    writeln!(out)?;
    for (a, row) in &table.rows {
        write!(out, "{a}")?;
        for v in row {
            match v {
                Some(v) => write!(out, "\t{v}")?,
                None => write!(out, "\t-")?,
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdfComparison {
    pub feature: String,
    pub bots: Vec<CdfPoint>,
    pub clear: Vec<CdfPoint>,
    pub ks: f64,
}

pub fn compare_cdf(
    table: &FeatureTable,
    feature: &str,
    bots: &BTreeSet<AccountId>,
    clear: &BTreeSet<AccountId>,
) -> Result<CdfComparison> {
    let b = table.values(feature, bots)?;
    let c = table.values(feature, clear)?;
    if b.is_empty() || c.is_empty() {
        return Err(Error::arg(format!(
            "feature {feature}: {} bot and {} clear values, both sides need at least one",
            b.len(),
            c.len()
        )));
    }
    Ok(CdfComparison {
        feature: feature.to_string(),
        bots: stats::ecdf(&b),
        clear: stats::ecdf(&c),
        ks: stats::ks_statistic(&b, &c),
    })
}

/// Every feature in the table ordered by KS descending, ties by name.
pub fn rank_features(
    table: &FeatureTable,
    bots: &BTreeSet<AccountId>,
    clear: &BTreeSet<AccountId>,
) -> Result<Vec<CdfComparison>> {
    let mut out = table
        .names
        .iter()
        .map(|n| compare_cdf(table, n, bots, clear))
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|x, y| y.ks.total_cmp(&x.ks).then_with(|| x.feature.cmp(&y.feature)));
    Ok(out)
}

/// Both CDFs evaluated at every value observed on either side.
pub fn write_cdf(cmp: &CdfComparison, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "value\tcum_bots\tcum_clear")?;
    let mut xs: Vec<f64> = cmp.bots.iter().chain(&cmp.clear).map(|p| p.value).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    for x in xs {
        writeln!(
            out,
            "{x}\t{:.6}\t{:.6}",
            stats::cdf_at(&cmp.bots, x),
            stats::cdf_at(&cmp.clear, x)
        )?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub start: Timestamp,
    pub count: usize,
}

/// Creation dates of the listed bots in bins of `bin_days` days starting at the
/// earliest one. Bots missing from `accounts` are not counted.
pub fn creation_histogram(
    accounts: &[Account],
    bots: &BTreeSet<AccountId>,
    bin_days: f64,
) -> Result<Vec<HistogramBin>> {
    if !(bin_days > 0.0 && bin_days.is_finite()) {
        return Err(Error::arg(format!("bin width must be positive, got {bin_days} days")));
    }
    let created: BTreeMap<AccountId, Timestamp> = accounts
        .iter()
        .filter(|a| bots.contains(&a.account_id))
        .map(|a| (a.account_id, a.created_at))
        .collect();
    let values: Vec<f64> = created.values().map(|&t| t as f64).collect();
    Ok(stats::histogram(&values, bin_days * 86_400.0)
        .into_iter()
        .map(|(start, count)| HistogramBin {
            start: start.round() as Timestamp,
            count,
        })
        .collect())
}
