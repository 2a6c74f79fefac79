use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{make_windows, Copy, CopyEvent, DetectorConfig, Grouping, WindowTask};
use crate::corpus::{AccountId, CorpusIndex, TweetId};
use crate::error::Result;
use crate::tokenize::{intersection_size, tokenize_tweet};

/// Two tweets found above the similarity threshold inside a shared window,
/// ordered by `(timestamp, tweet_id)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarPair {
    pub earlier: TweetId,
    pub later: TweetId,
    pub similarity: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WindowResult {
    pub window_index: i64,
    pub events: Vec<CopyEvent>,
    /// Only pairs by distinct authors, unless self-copies are enabled.
    pub pairs: Vec<SimilarPair>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Detection {
    /// Sorted by source tweet id; no two events share a source.
    pub events: Vec<CopyEvent>,
    /// Distinct similar pairs over all windows, sorted by `(earlier, later)`.
    pub similar_pairs: Vec<SimilarPair>,
    pub windows: usize,
}

/// Event counts at the three granularities the literature mixes up: groups
/// (events), tweet-level source→copy pairs and account-level source→copier pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionSummary {
    pub windows: usize,
    pub events: usize,
    pub copy_pairs: usize,
    pub account_pairs: usize,
    pub similar_pairs: usize,
    pub copied_tweets: usize,
    pub involved_accounts: usize,
    pub source_accounts: usize,
    pub copier_accounts: usize,
}

impl Detection {
    pub fn summary(&self) -> DetectionSummary {
        let mut copied = std::collections::BTreeSet::new();
        let mut sources = std::collections::BTreeSet::new();
        let mut copiers = std::collections::BTreeSet::new();
        let mut account_pairs = 0;
        for e in &self.events {
            sources.insert(e.source_author);
            let accounts = e.copier_accounts();
            account_pairs += accounts.len();
            copiers.extend(accounts);
            copied.extend(e.copies.iter().map(|c| c.tweet_id));
        }
        DetectionSummary {
            windows: self.windows,
            events: self.events.len(),
            copy_pairs: self.events.iter().map(|e| e.copies.len()).sum(),
            account_pairs,
            similar_pairs: self.similar_pairs.len(),
            copied_tweets: copied.len(),
            involved_accounts: sources.union(&copiers).count(),
            source_accounts: sources.len(),
            copier_accounts: copiers.len(),
        }
    }
}

/// Token ids of every corpus tweet, ranked rarest-first so that a set's leading
/// ids form its prefix-filter signature.
#[derive(Debug)]
struct Prepared {
    tokens: Vec<Vec<u32>>,
    eligible: Vec<bool>,
}

impl Prepared {
    fn build(index: &CorpusIndex, config: &DetectorConfig) -> Self {
        let sets: Vec<_> = index
            .tweets()
            .par_iter()
            .map(|t| tokenize_tweet(t, &config.tokenizer))
            .collect();
        let eligible: Vec<bool> = index
            .tweets()
            .iter()
            .zip(&sets)
            .map(|(t, s)| {
                (config.include_retweets || !t.is_retweet) && !s.is_too_short(&config.tokenizer)
            })
            .collect();

        let mut freq: HashMap<&str, u32> = HashMap::new();
        for (set, _) in sets.iter().zip(&eligible).filter(|(_, &ok)| ok) {
            for tok in set.tokens() {
                *freq.entry(tok.as_str()).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(&str, u32)> = freq.into_iter().collect();
        ranked.sort_unstable_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(b.0)));
        let ids: HashMap<&str, u32> = ranked
            .iter()
            .enumerate()
            .map(|(i, (tok, _))| (*tok, i as u32))
            .collect();

        let tokens = sets
            .iter()
            .zip(&eligible)
            .map(|(set, &ok)| {
                if !ok {
                    return Vec::new();
                }
                let mut v: Vec<u32> = set.tokens().iter().map(|t| ids[t.as_str()]).collect();
                v.sort_unstable();
                v
            })
            .collect();
        Prepared { tokens, eligible }
    }
}

/// Prefix length that guarantees two sets with Jaccard ≥ `threshold` share a
/// prefix token. Rounds towards longer prefixes.
fn prefix_len(len: usize, threshold: f64) -> usize {
    let required = (threshold * len as f64 - 1e-9).ceil().max(0.0) as usize;
    (len + 1).saturating_sub(required.max(1)).min(len)
}

fn meets(inter: usize, len_a: usize, len_b: usize, threshold: f64) -> bool {
    let union = len_a + len_b - inter;
    union > 0 && inter as f64 / union as f64 >= threshold
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        // the smaller root wins so roots are the earliest members
        if ra < rb {
            self.0[rb] = ra;
        } else {
            self.0[ra] = rb;
        }
    }
}

pub struct Detector<'a> {
    index: &'a CorpusIndex,
    config: DetectorConfig,
    prepared: Prepared,
}

impl<'a> Detector<'a> {
    pub fn new(index: &'a CorpusIndex, config: &DetectorConfig) -> Result<Self> {
        config.validate()?;
        Ok(Detector {
            index,
            config: config.clone(),
            prepared: Prepared::build(index, config),
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    /// Switches to another configuration, re-tokenizing only when the tokenizer or
    /// retweet policy changed.
    pub fn reconfigure(&mut self, config: &DetectorConfig) -> Result<()> {
        config.validate()?;
        if config.tokenizer != self.config.tokenizer
            || config.include_retweets != self.config.include_retweets
        {
            self.prepared = Prepared::build(self.index, config);
        }
        self.config = config.clone();
        Ok(())
    }

    pub fn windows(&self) -> Result<Vec<WindowTask>> {
        make_windows(self.index, &self.config)
    }

    /// Whether a tweet (by corpus position) takes part in comparisons.
    pub fn is_eligible(&self, position: usize) -> bool {
        self.prepared.eligible[position]
    }

    /// Above-threshold pairs among eligible tweets of one window, as local index
    /// pairs `(a, b)` with `a < b`.
    fn similarity_join(&self, local: &[usize]) -> Vec<(usize, usize, f64)> {
        let threshold = self.config.jaccard_threshold;
        let toks = |i: usize| &self.prepared.tokens[local[i]];

        let mut order: Vec<usize> = (0..local.len()).collect();
        order.sort_by_key(|&i| (toks(i).len(), i));

        let mut postings: HashMap<u32, Vec<usize>> = HashMap::new();
        let mut stamp = vec![usize::MAX; local.len()];
        let mut out = Vec::new();
        for (rank, &x) in order.iter().enumerate() {
            let tx = toks(x);
            let min_len = threshold * tx.len() as f64 - 1e-9;
            for tok in &tx[..prefix_len(tx.len(), threshold)] {
                let Some(list) = postings.get(tok) else {
                    continue;
                };
                for &y in list {
                    if stamp[y] == rank {
                        continue;
                    }
                    stamp[y] = rank;
                    let ty = toks(y);
                    if (ty.len() as f64) < min_len {
                        continue;
                    }
                    let inter = intersection_size(tx, ty);
                    if meets(inter, tx.len(), ty.len(), threshold) {
                        let sim = inter as f64 / (tx.len() + ty.len() - inter) as f64;
                        out.push((x.min(y), x.max(y), sim));
                    }
                }
            }
            for tok in &tx[..prefix_len(tx.len(), threshold)] {
                postings.entry(*tok).or_default().push(x);
            }
        }
        out.sort_by_key(|&(a, b, _)| (a, b));
        out
    }

    fn groups(&self, n: usize, pairs: &[(usize, usize, f64)]) -> Vec<Vec<usize>> {
        match self.config.grouping {
            Grouping::Component => {
                let mut uf = UnionFind::new(n);
                for &(a, b, _) in pairs {
                    uf.union(a, b);
                }
                let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
                for i in 0..n {
                    let r = uf.find(i);
                    by_root.entry(r).or_default().push(i);
                }
                by_root.into_values().filter(|g| g.len() > 1).collect()
            }
            Grouping::Clique => {
                // pairs arrive sorted by (a, b), which leaves every list ascending
                let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); n];
                for &(a, b, _) in pairs {
                    neighbours[a].push(b);
                    neighbours[b].push(a);
                }
                let mut groups: Vec<Vec<usize>> = Vec::new();
                let mut group_of: Vec<Option<usize>> = vec![None; n];
                for x in 0..n {
                    if neighbours[x].is_empty() {
                        continue;
                    }
                    let mut candidates: Vec<usize> = neighbours[x]
                        .iter()
                        .filter(|&&y| y < x)
                        .filter_map(|&y| group_of[y])
                        .collect();
                    candidates.sort_unstable();
                    candidates.dedup();
                    let joined = candidates.into_iter().find(|&g| {
                        groups[g]
                            .iter()
                            .all(|m| neighbours[x].binary_search(m).is_ok())
                    });
                    match joined {
                        Some(g) => {
                            groups[g].push(x);
                            group_of[x] = Some(g);
                        }
                        None => {
                            group_of[x] = Some(groups.len());
                            groups.push(vec![x]);
                        }
                    }
                }
                groups.into_iter().filter(|g| g.len() > 1).collect()
            }
        }
    }

    pub fn detect_window(&self, task: &WindowTask) -> WindowResult {
        let tweets = self.index.tweets();
        let local: Vec<usize> = task
            .range
            .clone()
            .filter(|&p| self.prepared.eligible[p])
            .collect();
        let pairs = self.similarity_join(&local);
        let tweet = |i: usize| &tweets[local[i]];

        let mut link: HashMap<(usize, usize), f64> = HashMap::with_capacity(pairs.len());
        for &(a, b, s) in &pairs {
            link.insert((a, b), s);
        }

        let mut events = Vec::new();
        for group in self.groups(local.len(), &pairs) {
            let src = group[0];
            let source = tweet(src);
            let mut copies = Vec::new();
            for &c in &group[1..] {
                let t = tweet(c);
                if !self.config.allow_self_copies && t.author_id == source.author_id {
                    continue;
                }
                let link_similarity = group
                    .iter()
                    .filter(|&&o| o != c)
                    .filter_map(|&o| link.get(&(o.min(c), o.max(c))))
                    .fold(0.0f64, |acc, &s| acc.max(s));
                let ts = &self.prepared.tokens[local[src]];
                let tc = &self.prepared.tokens[local[c]];
                let inter = intersection_size(ts, tc);
                copies.push(Copy {
                    tweet_id: t.tweet_id,
                    author: t.author_id,
                    timestamp: t.timestamp,
                    similarity: inter as f64 / (ts.len() + tc.len() - inter) as f64,
                    link_similarity,
                });
            }
            if copies.is_empty() {
                continue;
            }
            events.push(CopyEvent {
                source_tweet_id: source.tweet_id,
                source_author: source.author_id,
                source_timestamp: source.timestamp,
                window_index: task.window_index,
                copies,
            });
        }

        let pairs = pairs
            .into_iter()
            .filter(|&(a, b, _)| {
                self.config.allow_self_copies || tweet(a).author_id != tweet(b).author_id
            })
            .map(|(a, b, s)| SimilarPair {
                earlier: tweet(a).tweet_id,
                later: tweet(b).tweet_id,
                similarity: s,
            })
            .collect();

        WindowResult {
            window_index: task.window_index,
            events,
            pairs,
        }
    }

    /// Runs every window on the current rayon pool and merges the results.
    pub fn detect_all(&self) -> Result<Detection> {
        let tasks = self.windows()?;
        let results: Vec<WindowResult> = tasks.par_iter().map(|t| self.detect_window(t)).collect();
        Ok(merge_windows(results, tasks.len()))
    }
}

/// Deterministic sequential reduction of per-window results: events sharing a
/// source tweet are merged by taking the union of their copies.
pub(crate) fn merge_windows(results: Vec<WindowResult>, windows: usize) -> Detection {
    let mut by_source: BTreeMap<TweetId, (CopyEvent, BTreeMap<TweetId, Copy>)> = BTreeMap::new();
    let mut pairs: BTreeMap<(TweetId, TweetId), f64> = BTreeMap::new();
    for result in results {
        for event in result.events {
            let (merged, copies) = by_source.entry(event.source_tweet_id).or_insert_with(|| {
                let mut shell = event.clone();
                shell.copies.clear();
                (shell, BTreeMap::new())
            });
            merged.window_index = merged.window_index.min(event.window_index);
            for copy in event.copies {
                copies
                    .entry(copy.tweet_id)
                    .and_modify(|c| c.link_similarity = c.link_similarity.max(copy.link_similarity))
                    .or_insert(copy);
            }
        }
        for p in result.pairs {
            pairs.insert((p.earlier, p.later), p.similarity);
        }
    }
    let events = by_source
        .into_values()
        .map(|(mut event, copies)| {
            event.copies = copies.into_values().collect();
            event.copies.sort_by_key(|c| (c.timestamp, c.tweet_id));
            event
        })
        .collect();
    let similar_pairs = pairs
        .into_iter()
        .map(|((earlier, later), similarity)| SimilarPair {
            earlier,
            later,
            similarity,
        })
        .collect();
    Detection {
        events,
        similar_pairs,
        windows,
    }
}

/// Convenience wrapper: prepare, run all windows, merge.
pub fn detect_all(index: &CorpusIndex, config: &DetectorConfig) -> Result<Detection> {
    Detector::new(index, config)?.detect_all()
}

/// Account-level view of an event list: copier accounts per source account.
pub fn account_pairs(events: &[CopyEvent]) -> Vec<(AccountId, AccountId)> {
    events
        .iter()
        .flat_map(|e| e.copier_accounts().into_iter().map(move |c| (e.source_author, c)))
        .collect()
}
