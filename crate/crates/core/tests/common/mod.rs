//! Shared fixtures for the integration tests: a random corpus generator with
//! planted near-duplicates and a brute-force detector oracle.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};

use ccid_core::ccid::{CopyEvent, DetectorConfig, Grouping};
use ccid_core::corpus::{AccountId, CorpusIndex, PeriodScheme, Tweet, TweetId};
use ccid_core::tokenize::tokenize_tweet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn tweet(id: TweetId, author: u64, ts: i64, text: &str) -> Tweet {
    Tweet {
        tweet_id: id,
        author_id: AccountId(author),
        timestamp: ts,
        text: text.to_string(),
        hashtags: vec![],
        urls: vec![],
        source_app: None,
        is_retweet: false,
    }
}

pub fn index(tweets: Vec<Tweet>) -> CorpusIndex {
    CorpusIndex::from_tweets(tweets, &PeriodScheme::CalendarYears).unwrap()
}

/// `n` tweets over `span` seconds from 60 authors and a 300-word vocabulary.
/// About a quarter are edited copies of an earlier tweet posted up to half an
/// hour later; a few are retweets or too short to compare.
pub fn random_corpus(seed: u64, n: usize, span: i64) -> Vec<Tweet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = 1_500_000_000 + rng.random_range(0..86_400);
    let mut tweets: Vec<Tweet> = Vec::with_capacity(n);
    for i in 0..n {
        let id = 10_000 + i as u64;
        let author = rng.random_range(1..=60);
        let (ts, words) = if !tweets.is_empty() && rng.random_bool(0.25) {
            let base = &tweets[rng.random_range(0..tweets.len())];
            let mut words: Vec<String> = base.text.split(' ').map(str::to_string).collect();
            for _ in 0..rng.random_range(0..=3) {
                let p = rng.random_range(0..words.len());
                words[p] = format!("w{}", rng.random_range(0..300));
            }
            (base.timestamp + rng.random_range(0..1800), words)
        } else {
            let len = if rng.random_bool(0.03) { 1 } else { rng.random_range(4..=12) };
            let words = (0..len).map(|_| format!("w{}", rng.random_range(0..300))).collect();
            (start + rng.random_range(0..span), words)
        };
        let mut t = tweet(id, author, ts, &words.join(" "));
        t.is_retweet = rng.random_bool(0.03);
        tweets.push(t);
    }
    tweets
}

fn tokens(t: &Tweet, cfg: &DetectorConfig) -> HashSet<String> {
    tokenize_tweet(t, &cfg.tokenizer).tokens().iter().cloned().collect()
}

fn meets(a: &HashSet<String>, b: &HashSet<String>, threshold: f64) -> bool {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    union > 0 && inter as f64 / union as f64 >= threshold
}

#[derive(Debug, Default)]
pub struct OracleResult {
    /// Above-threshold pairs sharing a window, `(earlier, later)`; distinct
    /// authors only unless self-copies are allowed.
    pub similar: BTreeSet<(TweetId, TweetId)>,
    /// `(source tweet, copy tweet)` over all windows.
    pub copies: BTreeSet<(TweetId, TweetId)>,
    pub sources: BTreeSet<TweetId>,
}

/// All-pairs reference detector. Windows are epoch-aligned slots
/// `[k, k + m)` for `k` from the first slot to `max(first, last − m + 1)`.
/// Groups are connected components of the above-threshold relation, or for
/// clique grouping, built greedily in time order: a tweet joins the earliest
/// group all of whose members it is similar to.
pub fn oracle(tweets: &[Tweet], cfg: &DetectorConfig) -> OracleResult {
    let slide = cfg.slide_secs;
    let m = cfg.window_secs / slide;
    let mut all: Vec<&Tweet> = tweets.iter().collect();
    all.sort_by_key(|t| (t.timestamp, t.tweet_id));
    let mut out = OracleResult::default();
    let (Some(first), Some(last)) = (all.first(), all.last()) else {
        return out;
    };
    let first_slot = first.timestamp.div_euclid(slide);
    let last_slot = last.timestamp.div_euclid(slide);

    let eligible: Vec<(&Tweet, HashSet<String>, i64)> = all
        .iter()
        .filter(|t| cfg.include_retweets || !t.is_retweet)
        .map(|t| (*t, tokens(t, cfg), t.timestamp.div_euclid(slide)))
        .filter(|(_, s, _)| s.len() >= cfg.tokenizer.min_token_count)
        .collect();

    for i in 0..eligible.len() {
        for j in i + 1..eligible.len() {
            let (a, sa, ka) = &eligible[i];
            let (b, sb, kb) = &eligible[j];
            let authors_ok = cfg.allow_self_copies || a.author_id != b.author_id;
            if (kb - ka).abs() < m && authors_ok && meets(sa, sb, cfg.jaccard_threshold) {
                out.similar.insert((a.tweet_id, b.tweet_id));
            }
            if kb - ka >= m {
                break;
            }
        }
    }

    for k in first_slot..=first_slot.max(last_slot - m + 1) {
        let members: Vec<usize> = (0..eligible.len())
            .filter(|&i| (k..k + m).contains(&eligible[i].2))
            .collect();
        let similar = |x: usize, y: usize| meets(&eligible[members[x]].1, &eligible[members[y]].1, cfg.jaccard_threshold);
        let groups: Vec<Vec<&Tweet>> = match cfg.grouping {
            Grouping::Component => components(members.len(), similar),
            Grouping::Clique => greedy_cliques(members.len(), similar),
        }
        .into_iter()
        .map(|g| g.into_iter().map(|x| eligible[members[x]].0).collect())
        .collect();
        for g in groups.iter().filter(|g| g.len() > 1) {
            let src = g.iter().min_by_key(|t| (t.timestamp, t.tweet_id)).unwrap();
            let mut any = false;
            let copier = |c: &&&Tweet| c.tweet_id != src.tweet_id && (cfg.allow_self_copies || c.author_id != src.author_id);
            for c in g.iter().filter(copier) {
                out.copies.insert((src.tweet_id, c.tweet_id));
                any = true;
            }
            if any {
                out.sources.insert(src.tweet_id);
            }
        }
    }
    out
}

fn components(n: usize, similar: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    fn find(p: &mut [usize], x: usize) -> usize {
        if p[x] != x {
            let r = find(p, p[x]);
            p[x] = r;
        }
        p[x]
    }
    let mut parent: Vec<usize> = (0..n).collect();
    for x in 0..n {
        for y in x + 1..n {
            if similar(x, y) {
                let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
                parent[rx.max(ry)] = rx.min(ry);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for x in 0..n {
        let r = find(&mut parent, x);
        groups.entry(r).or_default().push(x);
    }
    groups.into_values().collect()
}

fn greedy_cliques(n: usize, similar: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for x in 0..n {
        let target = groups
            .iter()
            .position(|g| g.iter().any(|&y| similar(x, y)) && g.iter().all(|&y| similar(x, y)));
        match target {
            Some(i) => groups[i].push(x),
            None if (0..n).any(|y| y != x && similar(x, y)) => groups.push(vec![x]),
            None => {}
        }
    }
    groups
}

pub fn copy_pairs(events: &[CopyEvent]) -> BTreeSet<(TweetId, TweetId)> {
    events
        .iter()
        .flat_map(|e| e.copies.iter().map(move |c| (e.source_tweet_id, c.tweet_id)))
        .collect()
}

/// Reports one acceptance criterion and remembers failures.
#[derive(Default)]
pub struct Report {
    failures: Vec<String>,
}

impl Report {
    pub fn check(&mut self, name: &str, result: Result<String, String>) {
        match result {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                println!("FAIL {name}: {why}");
                self.failures.push(format!("{name}: {why}"));
            }
        }
    }

    pub fn finish(self) {
        assert!(self.failures.is_empty(), "failed criteria:\n{}", self.failures.join("\n"));
    }
}

pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}
