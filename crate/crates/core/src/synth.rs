//! Labelled synthetic scenarios: background users, headline reposters and
//! planted botnets that run copy campaigns, plus trend snapshots, interaction
//! layers and exemplars in the formats the loaders read.
//!
//! All randomness comes from one ChaCha8 stream seeded with
//! `ChaCha8Rng::seed_from_u64(spec.seed)` and consumed in a fixed order, so a spec
//! always produces byte-identical files. Generation is single-threaded.
//!
//! Vocabulary words are `v` followed by four base-26 letters; mutation decoys use
//! an `x` prefix, so a decoy never collides with a campaign token and a copy with
//! `k` of its `n` tokens replaced has Jaccard `(n - k) / (n + k)` to its source.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{self, Account, AccountId, Period, Timestamp, Tweet, TweetId};
use crate::digest::sha256_file;
use crate::error::{Error, Result};
use crate::layers::{self, Category, LayerGraph, LayerKind};
use crate::tokenize::{jaccard, tokenize_tweet, TokenizerConfig};
use crate::trends::{self, TrendSnapshot};

const DAY: i64 = 86_400;
const CAMPAIGN_TOKENS: (usize, usize) = (12, 16);
const BACKGROUND_TOKENS: (usize, usize) = (6, 14);
const TREND_SPAN: i64 = 10 * 3600;

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const ACCOUNTS_FILE: &str = "accounts.jsonl";
pub const BOTS_FILE: &str = "bots.tsv";
pub const TRUTH_FILE: &str = "ground_truth.json";
pub const TRENDS_FILE: &str = "trends.tsv";
pub const EXEMPLARS_FILE: &str = "exemplars.tsv";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn layer_file(kind: LayerKind) -> String {
    format!("layer_{}.tsv", kind.as_str())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BotnetSpec {
    pub size: usize,
    pub campaigns: usize,
    /// Copy delays are drawn uniformly from `[delay_min_secs, delay_max_secs]`.
    pub delay_min_secs: i64,
    pub delay_max_secs: i64,
    /// Fraction of a campaign tweet's tokens replaced in each copy.
    pub mutation: f64,
    /// Unrelated tweets per member.
    pub filler_tweets: usize,
    pub created_at: Timestamp,
    pub created_spread_days: f64,
}

impl Default for BotnetSpec {
    fn default() -> Self {
        BotnetSpec {
            size: 10,
            campaigns: 40,
            delay_min_secs: 5,
            delay_max_secs: 240,
            mutation: 0.1,
            filler_tweets: 20,
            created_at: 1_425_168_000,
            created_spread_days: 5.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub start: Timestamp,
    pub duration_secs: i64,
    pub background_users: usize,
    pub background_tweets: usize,
    pub vocabulary_size: usize,
    pub decoy_vocabulary_size: usize,
    pub background_topics: usize,
    /// News accounts whose headlines get reposted verbatim by a few heavy users.
    pub headline_sources: usize,
    pub headlines: usize,
    pub headline_reposters: usize,
    pub max_reposts_per_headline: usize,
    /// Posting-rate multiplier of headline reposters over ordinary users.
    pub reposter_activity: usize,
    pub botnets: Vec<BotnetSpec>,
    /// Activity floor for the copy-graph filter, scaled to this scenario.
    pub min_tweets: u64,
    /// Detector settings the feasibility warnings are computed against.
    pub detector_threshold: f64,
    pub detector_window_secs: i64,
    pub snapshot_interval_secs: i64,
    pub collision_check_pairs: usize,
    pub exemplars_per_category: usize,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        let created = [1_425_168_000, 1_425_168_000 + 400 * DAY];
        ScenarioSpec {
            seed: 0,
            start: 1_576_368_000,
            duration_secs: 31 * DAY,
            background_users: 400,
            background_tweets: 10_000,
            vocabulary_size: 50_000,
            decoy_vocabulary_size: 20_000,
            background_topics: 40,
            headline_sources: 5,
            headlines: 8,
            headline_reposters: 15,
            max_reposts_per_headline: 3,
            reposter_activity: 8,
            botnets: [5, 8, 12, 16, 20]
                .iter()
                .enumerate()
                .map(|(i, &size)| BotnetSpec {
                    size,
                    created_at: created[i % 2],
                    ..BotnetSpec::default()
                })
                .collect(),
            min_tweets: 10,
            detector_threshold: 0.7,
            detector_window_secs: 600,
            snapshot_interval_secs: 3600,
            collision_check_pairs: 200_000,
            exemplars_per_category: 5,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::arg(msg));
        if self.duration_secs <= 0 {
            return bad(format!("duration must be positive, got {}", self.duration_secs));
        }
        if self.vocabulary_size < 1000 || self.vocabulary_size > 26usize.pow(4) {
            return bad(format!("vocabulary size must be in [1000, 456976], got {}", self.vocabulary_size));
        }
        if self.decoy_vocabulary_size < CAMPAIGN_TOKENS.1 || self.decoy_vocabulary_size > 26usize.pow(4) {
            return bad(format!("decoy vocabulary size {} out of range", self.decoy_vocabulary_size));
        }
        if self.background_users < 4 * self.exemplars_per_category.max(1) {
            return bad(format!(
                "{} background users cannot hold {} exemplars per category",
                self.background_users, self.exemplars_per_category
            ));
        }
        if self.headline_reposters > self.background_users {
            return bad("more headline reposters than background users".into());
        }
        if self.headlines > 0 && (self.headline_sources == 0 || self.headline_reposters == 0) {
            return bad("headlines need at least one source and one reposter".into());
        }
        if self.snapshot_interval_secs <= 0 {
            return bad("snapshot interval must be positive".into());
        }
        if !(self.detector_threshold > 0.0 && self.detector_threshold <= 1.0) {
            return bad(format!("detector threshold {} outside (0, 1]", self.detector_threshold));
        }
        for (i, b) in self.botnets.iter().enumerate() {
            if b.size < 2 {
                return bad(format!("botnet {i}: size must be at least 2"));
            }
            if !(0.0..=1.0).contains(&b.mutation) {
                return bad(format!("botnet {i}: mutation rate {} outside [0, 1]", b.mutation));
            }
            if b.delay_min_secs < 0 || b.delay_min_secs > b.delay_max_secs {
                return bad(format!(
                    "botnet {i}: delays [{}, {}] invalid",
                    b.delay_min_secs, b.delay_max_secs
                ));
            }
            if b.delay_max_secs >= self.duration_secs {
                return bad(format!("botnet {i}: delays exceed the scenario duration"));
            }
            if !(b.created_spread_days >= 0.0 && b.created_spread_days.is_finite()) {
                return bad(format!("botnet {i}: creation spread must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn end(&self) -> Timestamp {
        self.start + self.duration_secs
    }
}

/// Number of tokens replaced in a copy of an `n`-token tweet.
pub fn replaced_tokens(n: usize, mutation: f64) -> usize {
    (((mutation * n as f64) - 1e-9).ceil().max(0.0) as usize).min(n)
}

/// Jaccard similarity of an `n`-token tweet and a copy mutated at rate `mutation`.
pub fn analytic_jaccard(n: usize, mutation: f64) -> f64 {
    let k = replaced_tokens(n, mutation);
    (n - k) as f64 / (n + k) as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignTruth {
    pub botnet: usize,
    pub source_tweet_id: TweetId,
    pub source_author: AccountId,
    pub timestamp: Timestamp,
    pub tokens: usize,
    pub replaced: usize,
    /// `(copy tweet id, copier)` in copier order.
    pub copies: Vec<(TweetId, AccountId)>,
    pub hashtag: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Members of each planted botnet, sorted.
    pub botnets: Vec<Vec<AccountId>>,
    pub campaigns: Vec<CampaignTruth>,
    pub headline_sources: Vec<AccountId>,
    pub headline_reposters: Vec<AccountId>,
}

impl GroundTruth {
    pub fn bots(&self) -> BTreeSet<AccountId> {
        self.botnets.iter().flatten().copied().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BotnetExpectation {
    pub botnet: usize,
    pub size: usize,
    pub mutation: f64,
    pub replaced_tokens: (usize, usize),
    /// Analytic source–copy Jaccard over the campaign token counts.
    pub jaccard_min: f64,
    pub jaccard_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionCheck {
    pub pairs: usize,
    pub hits: usize,
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectedDetection {
    pub bots: usize,
    pub campaigns: usize,
    pub copy_tweets: usize,
    pub headline_events: usize,
    pub headline_reposts: usize,
    pub min_tweets: u64,
    pub botnets: Vec<BotnetExpectation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthManifest {
    pub generator: String,
    pub prng: String,
    pub spec: ScenarioSpec,
    pub expected: ExpectedDetection,
    pub collision_check: CollisionCheck,
    pub warnings: Vec<String>,
    /// File name → SHA-256, filled in by [`Scenario::write_to_dir`].
    pub files: BTreeMap<String, String>,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub tweets: Vec<Tweet>,
    pub accounts: Vec<Account>,
    pub truth: GroundTruth,
    pub snapshots: Vec<TrendSnapshot>,
    /// The six directed layers; the list layer is kept as memberships.
    pub layers: Vec<LayerGraph>,
    pub list_memberships: Vec<(AccountId, String)>,
    pub exemplars: Vec<(Category, AccountId)>,
    pub manifest: SynthManifest,
}

impl Scenario {
    pub fn bots(&self) -> BTreeSet<AccountId> {
        self.truth.bots()
    }

    /// All seven layers, the list layer rebuilt from memberships.
    pub fn layer_graphs(&self) -> Vec<LayerGraph> {
        let mut out = self.layers.clone();
        out.push(LayerGraph::from_memberships(self.list_memberships.iter().cloned()));
        out
    }

    /// Writes every output and the manifest with their digests into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<SynthManifest> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut manifest = self.manifest.clone();
        let mut emit = |name: &str, f: &dyn Fn(&mut BufWriter<File>) -> std::io::Result<()>| -> Result<()> {
            let path = dir.join(name);
            let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
            let mut w = BufWriter::new(file);
            f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(&path, e))?;
            manifest.files.insert(name.to_string(), sha256_file(&path)?);
            Ok(())
        };
        emit(CORPUS_FILE, &|w| corpus::write_corpus(&self.tweets, w))?;
        emit(ACCOUNTS_FILE, &|w| corpus::write_accounts(&self.accounts, w))?;
        emit(BOTS_FILE, &|w| {
            writeln!(w, "account_id\tbotnet")?;
            for (i, members) in self.truth.botnets.iter().enumerate() {
                for a in members {
                    writeln!(w, "{a}\t{i}")?;
                }
            }
            Ok(())
        })?;
        emit(TRUTH_FILE, &|w| {
            serde_json::to_writer_pretty(&mut *w, &self.truth)?;
            writeln!(w)
        })?;
        emit(TRENDS_FILE, &|w| trends::write_snapshots(&self.snapshots, w))?;
        for g in &self.layers {
            emit(&layer_file(g.kind), &|w| layers::write_layer(g, w))?;
        }
        emit(&layer_file(LayerKind::List), &|w| {
            writeln!(w, "account_id\tlist_id")?;
            for (a, l) in &self.list_memberships {
                writeln!(w, "{a}\t{l}")?;
            }
            Ok(())
        })?;
        emit(EXEMPLARS_FILE, &|w| {
            writeln!(w, "category\taccount_id")?;
            for (c, a) in &self.exemplars {
                writeln!(w, "{c}\t{a}")?;
            }
            Ok(())
        })?;
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    }
}

fn letters(mut idx: usize) -> String {
    let mut out = [b'a'; 4];
    for slot in out.iter_mut().rev() {
        *slot = b'a' + (idx % 26) as u8;
        idx /= 26;
    }
    String::from_utf8(out.to_vec()).unwrap()
}

fn word(idx: usize) -> String {
    format!("v{}", letters(idx))
}

fn decoy(idx: usize) -> String {
    format!("x{}", letters(idx))
}

struct Draft {
    author: AccountId,
    timestamp: Timestamp,
    tokens: Vec<String>,
    is_retweet: bool,
    kind: DraftKind,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum DraftKind {
    Filler,
    Headline,
    Repost,
    Campaign(usize),
    Copy(usize),
}

struct Gen<'a> {
    spec: &'a ScenarioSpec,
    rng: ChaCha8Rng,
    url_counter: usize,
}

impl Gen<'_> {
    fn range(&mut self, lo: i64, hi_inclusive: i64) -> i64 {
        self.rng.random_range(lo..=hi_inclusive)
    }

    fn pick(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n as u64) as usize
    }

    fn words(&mut self, n: usize) -> Vec<String> {
        index::sample(&mut self.rng, self.spec.vocabulary_size, n)
            .into_iter()
            .map(word)
            .collect()
    }

    fn url(&mut self) -> String {
        self.url_counter += 1;
        format!("https://ex.org/p/{}", self.url_counter)
    }

    fn filler(&mut self) -> Vec<String> {
        let n = self.range(BACKGROUND_TOKENS.0 as i64, BACKGROUND_TOKENS.1 as i64) as usize;
        let mut tokens = self.words(n);
        for t in tokens.iter_mut() {
            if self.rng.random_bool(0.04) {
                *t = t.to_uppercase();
            }
        }
        if self.spec.background_topics > 0 && self.rng.random_bool(0.15) {
            let k = self.pick(self.spec.background_topics);
            tokens.push(format!("#t{k}"));
        }
        if self.rng.random_bool(0.1) {
            let u = self.url();
            tokens.push(u);
        }
        if self.rng.random_bool(0.05) {
            tokens.push("🙂".into());
        }
        if self.rng.random_bool(0.05) {
            tokens.push(":)".into());
        }
        tokens
    }

    fn time(&mut self, lo: Timestamp, hi_exclusive: Timestamp) -> Timestamp {
        self.range(lo, hi_exclusive - 1)
    }
}

fn to_tweet(id: TweetId, d: &Draft) -> Tweet {
    let hashtags = d
        .tokens
        .iter()
        .filter_map(|t| t.strip_prefix('#'))
        .map(str::to_string)
        .collect();
    let urls = d.tokens.iter().filter(|t| t.starts_with("https://")).cloned().collect();
    Tweet {
        tweet_id: id,
        author_id: d.author,
        timestamp: d.timestamp,
        text: d.tokens.join(" "),
        hashtags,
        urls,
        source_app: None,
        is_retweet: d.is_retweet,
    }
}

/// Calendar-year periods overlapping `[start, end)` with the covered fraction.
fn period_fractions(start: Timestamp, end: Timestamp) -> Vec<(String, f64)> {
    use chrono::{Datelike, TimeZone, Utc};
    let first = Utc.timestamp_opt(start, 0).unwrap().year();
    let last = Utc.timestamp_opt(end - 1, 0).unwrap().year();
    (first..=last)
        .map(|y| {
            let p = Period::year(y);
            let covered = p.end.min(end) - p.start.max(start);
            (p.label, covered as f64 / (end - start) as f64)
        })
        .collect()
}

pub fn generate(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let mut g = Gen {
        spec,
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        url_counter: 0,
    };
    let (start, end) = (spec.start, spec.end());

    // Account ids are shuffled so roles cannot be read off the numbering.
    let n_bots: usize = spec.botnets.iter().map(|b| b.size).sum();
    let total = spec.background_users + spec.headline_sources + n_bots;
    let mut ids: Vec<AccountId> = (1..=total as u64).map(|i| AccountId(1000 + i)).collect();
    ids.shuffle(&mut g.rng);
    let background: Vec<AccountId> = ids[..spec.background_users].to_vec();
    let sources: Vec<AccountId> = ids[spec.background_users..spec.background_users + spec.headline_sources].to_vec();
    let mut botnets: Vec<Vec<AccountId>> = Vec::new();
    let mut offset = spec.background_users + spec.headline_sources;
    for b in &spec.botnets {
        botnets.push(ids[offset..offset + b.size].to_vec());
        offset += b.size;
    }
    let community = |i: usize| i % Category::ALL.len();
    let reposter_idx: Vec<usize> = index::sample(&mut g.rng, spec.background_users, spec.headline_reposters).into_vec();
    let reposters: Vec<AccountId> = reposter_idx.iter().map(|&i| background[i]).collect();

    let mut accounts = Vec::with_capacity(total);
    for &a in background.iter().chain(&sources) {
        let created_at = g.time(start - 3650 * DAY, start - 30 * DAY);
        accounts.push(Account {
            account_id: a,
            created_at,
            screen_name: format!("u{a}"),
            yearly_tweet_counts: BTreeMap::new(),
        });
    }
    for (b, members) in spec.botnets.iter().zip(&botnets) {
        let spread = (b.created_spread_days * DAY as f64) as i64;
        for &a in members {
            let created_at = b.created_at + g.range(0, spread);
            accounts.push(Account {
                account_id: a,
                created_at,
                screen_name: format!("u{a}"),
                yearly_tweet_counts: BTreeMap::new(),
            });
        }
    }
    accounts.sort_by_key(|a| a.account_id);

    let mut drafts: Vec<Draft> = Vec::new();

    // Background posting: reposters post `reposter_activity` times as often.
    let mut weights: Vec<usize> = vec![1; spec.background_users];
    for &i in &reposter_idx {
        weights[i] = spec.reposter_activity.max(1);
    }
    let cumulative: Vec<usize> = weights
        .iter()
        .scan(0, |acc, &w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    let weight_total = *cumulative.last().unwrap();
    for _ in 0..spec.background_tweets {
        let r = g.pick(weight_total);
        let user = background[cumulative.partition_point(|&c| c <= r)];
        let timestamp = g.time(start, end);
        let tokens = g.filler();
        let is_retweet = g.rng.random_bool(0.1);
        drafts.push(Draft {
            author: user,
            timestamp,
            tokens,
            is_retweet,
            kind: DraftKind::Filler,
        });
    }

    // Headlines reposted verbatim within ten minutes.
    let mut headline_reposts = 0;
    for _ in 0..spec.headlines {
        let source = sources[g.pick(sources.len())];
        let timestamp = g.time(start, (end - 601).max(start + 1));
        let mut tokens = g.words(10);
        let u = g.url();
        tokens.push(u);
        let k = g.range(1, spec.max_reposts_per_headline.max(1) as i64) as usize;
        let k = k.min(reposters.len());
        let chosen = index::sample(&mut g.rng, reposters.len(), k).into_vec();
        drafts.push(Draft {
            author: source,
            timestamp,
            tokens: tokens.clone(),
            is_retweet: false,
            kind: DraftKind::Headline,
        });
        for i in chosen {
            let delay = g.range(1, 600);
            drafts.push(Draft {
                author: reposters[i],
                timestamp: timestamp + delay,
                tokens: tokens.clone(),
                is_retweet: false,
                kind: DraftKind::Repost,
            });
            headline_reposts += 1;
        }
    }
    for &s in &sources {
        for _ in 0..20 {
            let timestamp = g.time(start, end);
            let tokens = g.filler();
            drafts.push(Draft {
                author: s,
                timestamp,
                tokens,
                is_retweet: false,
                kind: DraftKind::Filler,
            });
        }
    }

    // Campaigns: the source role rotates through the members.
    struct Pending {
        botnet: usize,
        hashtag: String,
        tokens: usize,
        replaced: usize,
    }
    let mut pending: Vec<Pending> = Vec::new();
    for (bi, (b, members)) in spec.botnets.iter().zip(&botnets).enumerate() {
        for k in 0..b.campaigns {
            let source = members[k % members.len()];
            let timestamp = g.time(start, end - b.delay_max_secs);
            let n = g.range(CAMPAIGN_TOKENS.0 as i64, CAMPAIGN_TOKENS.1 as i64) as usize;
            let hashtag = format!("c{bi}x{k}");
            let mut tokens = g.words(n - 1);
            for t in tokens.iter_mut() {
                if g.rng.random_bool(0.3) {
                    *t = t.to_uppercase();
                }
            }
            tokens.insert(0, format!("#{hashtag}"));
            let replaced = replaced_tokens(n, b.mutation);
            let ci = pending.len();
            pending.push(Pending {
                botnet: bi,
                hashtag,
                tokens: n,
                replaced,
            });
            drafts.push(Draft {
                author: source,
                timestamp,
                tokens: tokens.clone(),
                is_retweet: false,
                kind: DraftKind::Campaign(ci),
            });
            for &copier in members.iter().filter(|&&m| m != source) {
                let delay = g.range(b.delay_min_secs, b.delay_max_secs);
                let mut copy = tokens.clone();
                let positions = index::sample(&mut g.rng, n, replaced).into_vec();
                let decoys = index::sample(&mut g.rng, spec.decoy_vocabulary_size, replaced).into_vec();
                for (p, d) in positions.into_iter().zip(decoys) {
                    copy[p] = decoy(d);
                }
                drafts.push(Draft {
                    author: copier,
                    timestamp: timestamp + delay,
                    tokens: copy,
                    is_retweet: false,
                    kind: DraftKind::Copy(ci),
                });
            }
        }
        for &m in members {
            for _ in 0..b.filler_tweets {
                let timestamp = g.time(start, end);
                let tokens = g.filler();
                drafts.push(Draft {
                    author: m,
                    timestamp,
                    tokens,
                    is_retweet: false,
                    kind: DraftKind::Filler,
                });
            }
        }
    }

    // Ids follow (timestamp, generation order); a source generated before its
    // zero-delay copies gets the smaller id.
    let mut order: Vec<usize> = (0..drafts.len()).collect();
    order.sort_by_key(|&i| (drafts[i].timestamp, i));
    let mut tweets = Vec::with_capacity(drafts.len());
    let mut campaigns: Vec<Option<CampaignTruth>> = (0..pending.len()).map(|_| None).collect();
    let mut copies: Vec<Vec<(TweetId, AccountId)>> = vec![Vec::new(); pending.len()];
    for (pos, &i) in order.iter().enumerate() {
        let id = pos as TweetId + 1;
        let d = &drafts[i];
        tweets.push(to_tweet(id, d));
        match d.kind {
            DraftKind::Campaign(ci) => {
                let p = &pending[ci];
                campaigns[ci] = Some(CampaignTruth {
                    botnet: p.botnet,
                    source_tweet_id: id,
                    source_author: d.author,
                    timestamp: d.timestamp,
                    tokens: p.tokens,
                    replaced: p.replaced,
                    copies: Vec::new(),
                    hashtag: p.hashtag.clone(),
                });
            }
            DraftKind::Copy(ci) => copies[ci].push((id, d.author)),
            DraftKind::Filler | DraftKind::Headline | DraftKind::Repost => {}
        }
    }
    let campaigns: Vec<CampaignTruth> = campaigns
        .into_iter()
        .zip(copies)
        .map(|(c, mut cp)| {
            let mut c = c.expect("every campaign has a source");
            cp.sort();
            c.copies = cp;
            c
        })
        .collect();

    let collision_check = collision_check(&mut g, &tweets, &drafts, &order);
    let snapshots = snapshots(&mut g, &campaigns);
    let (layers, list_memberships, exemplars) = build_layers(&mut g, &background, &botnets, &community);

    let mut sorted_botnets = botnets.clone();
    for m in sorted_botnets.iter_mut() {
        m.sort();
    }
    let mut sorted_sources = sources.clone();
    sorted_sources.sort();
    let mut sorted_reposters = reposters.clone();
    sorted_reposters.sort();
    let truth = GroundTruth {
        botnets: sorted_botnets,
        campaigns,
        headline_sources: sorted_sources,
        headline_reposters: sorted_reposters,
    };

    let expected = ExpectedDetection {
        bots: n_bots,
        campaigns: truth.campaigns.len(),
        copy_tweets: truth.campaigns.iter().map(|c| c.copies.len()).sum(),
        headline_events: spec.headlines,
        headline_reposts,
        min_tweets: spec.min_tweets,
        botnets: spec
            .botnets
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let js: Vec<f64> = (CAMPAIGN_TOKENS.0..=CAMPAIGN_TOKENS.1)
                    .map(|n| analytic_jaccard(n, b.mutation))
                    .collect();
                BotnetExpectation {
                    botnet: i,
                    size: b.size,
                    mutation: b.mutation,
                    replaced_tokens: (
                        replaced_tokens(CAMPAIGN_TOKENS.0, b.mutation),
                        replaced_tokens(CAMPAIGN_TOKENS.1, b.mutation),
                    ),
                    jaccard_min: js.iter().copied().fold(f64::INFINITY, f64::min),
                    jaccard_max: js.iter().copied().fold(0.0, f64::max),
                }
            })
            .collect(),
    };
    let warnings = feasibility_warnings(spec, &expected, &collision_check);
    for w in &warnings {
        log::warn!("{w}");
    }
    let manifest = SynthManifest {
        generator: format!("ccid-core {}", env!("CARGO_PKG_VERSION")),
        prng: "ChaCha8 (rand_chacha), seed_from_u64(seed)".into(),
        spec: spec.clone(),
        expected,
        collision_check,
        warnings,
        files: BTreeMap::new(),
    };
    Ok(Scenario {
        tweets,
        accounts,
        truth,
        snapshots,
        layers,
        list_memberships,
        exemplars,
        manifest,
    })
}

/// Samples random pairs of filler tweets and counts those at or above the
/// detector threshold.
fn collision_check(g: &mut Gen<'_>, tweets: &[Tweet], drafts: &[Draft], order: &[usize]) -> CollisionCheck {
    let config = TokenizerConfig::default();
    let sets: Vec<_> = order
        .iter()
        .zip(tweets)
        .filter(|(&i, _)| drafts[i].kind == DraftKind::Filler)
        .map(|(_, t)| tokenize_tweet(t, &config))
        .collect();
    let threshold = g.spec.detector_threshold;
    let mut pairs = 0;
    let mut hits = 0;
    if sets.len() >= 2 {
        for _ in 0..g.spec.collision_check_pairs {
            let a = g.pick(sets.len());
            let mut b = g.pick(sets.len() - 1);
            if b >= a {
                b += 1;
            }
            pairs += 1;
            hits += (jaccard(&sets[a], &sets[b]) >= threshold) as usize;
        }
    }
    CollisionCheck { pairs, hits, threshold }
}

/// Hourly snapshots. Each campaign hashtag trends before its campaign, after it,
/// or not at all; background topics trend at random.
fn snapshots(g: &mut Gen<'_>, campaigns: &[CampaignTruth]) -> Vec<TrendSnapshot> {
    let (start, end) = (g.spec.start - DAY, g.spec.end() + DAY);
    let mut spans: Vec<(Timestamp, Timestamp, String)> = Vec::new();
    for c in campaigns {
        match g.pick(3) {
            0 => spans.push((c.timestamp - 2 * 3600 - TREND_SPAN, c.timestamp - 2 * 3600, c.hashtag.clone())),
            1 => spans.push((c.timestamp + 2 * 3600, c.timestamp + 2 * 3600 + TREND_SPAN, c.hashtag.clone())),
            _ => {}
        }
    }
    for k in 0..g.spec.background_topics {
        for _ in 0..3 {
            let s = g.time(start, end);
            spans.push((s, s + TREND_SPAN, format!("t{k}")));
        }
    }
    let mut out = Vec::new();
    let mut t = start;
    while t <= end {
        let topics: BTreeSet<String> = spans
            .iter()
            .filter(|(a, b, _)| *a <= t && t <= *b)
            .map(|(_, _, topic)| trends::normalize_topic(topic))
            .collect();
        if !topics.is_empty() {
            out.push(TrendSnapshot { timestamp: t, topics });
        }
        t += g.spec.snapshot_interval_secs;
    }
    out
}

type LayerOutput = (Vec<LayerGraph>, Vec<(AccountId, String)>, Vec<(Category, AccountId)>);

/// Interest communities over the background users, one per exemplar category;
/// most interactions stay inside a community. Bots interact densely with their
/// own botnet and reach into the politics community.
fn build_layers(
    g: &mut Gen<'_>,
    background: &[AccountId],
    botnets: &[Vec<AccountId>],
    community: &dyn Fn(usize) -> usize,
) -> LayerOutput {
    let kinds = [
        (LayerKind::Follow, 8),
        (LayerKind::Retweet, 4),
        (LayerKind::Favorite, 6),
        (LayerKind::Mention, 3),
        (LayerKind::Reply, 2),
        (LayerKind::Quote, 1),
    ];
    let groups: Vec<Vec<AccountId>> = (0..Category::ALL.len())
        .map(|c| {
            background
                .iter()
                .enumerate()
                .filter(|(i, _)| community(*i) == c)
                .map(|(_, &a)| a)
                .collect()
        })
        .collect();
    let mut layers = Vec::new();
    for (kind, degree) in kinds {
        let mut layer = LayerGraph::new(kind);
        for (i, &a) in background.iter().enumerate() {
            for _ in 0..degree {
                let pool = if g.rng.random_bool(0.8) {
                    &groups[community(i)]
                } else {
                    background
                };
                let b = pool[g.pick(pool.len())];
                let w = g.range(1, 5) as u64;
                if a != b {
                    layer.add_edge(a, b, w);
                }
            }
        }
        for members in botnets {
            for &a in members {
                let mates: Vec<AccountId> = members.iter().copied().filter(|&m| m != a).collect();
                let k = match kind {
                    LayerKind::Follow => mates.len(),
                    _ => degree.min(mates.len()),
                };
                for i in index::sample(&mut g.rng, mates.len(), k) {
                    let w = g.range(1, 10) as u64;
                    layer.add_edge(a, mates[i], w);
                }
                for _ in 0..2 {
                    let b = groups[0][g.pick(groups[0].len())];
                    let w = g.range(1, 3) as u64;
                    layer.add_edge(a, b, w);
                }
            }
        }
        layers.push(layer);
    }

    let mut memberships = Vec::new();
    for (c, members) in groups.iter().enumerate() {
        for l in 0..5 {
            let k = members.len().min(15);
            for i in index::sample(&mut g.rng, members.len(), k) {
                memberships.push((members[i], format!("c{c}l{l}")));
            }
        }
    }
    for (b, members) in botnets.iter().enumerate() {
        for &a in members {
            memberships.push((a, format!("b{b}")));
        }
    }

    let exemplars = Category::ALL
        .iter()
        .zip(&groups)
        .flat_map(|(&c, members)| {
            members
                .iter()
                .take(g.spec.exemplars_per_category)
                .map(move |&a| (c, a))
        })
        .collect();
    (layers, memberships, exemplars)
}

fn feasibility_warnings(spec: &ScenarioSpec, expected: &ExpectedDetection, check: &CollisionCheck) -> Vec<String> {
    let mut warnings = Vec::new();
    let slide = spec.detector_window_secs / 2;
    let periods = period_fractions(spec.start, spec.end());
    for (i, b) in spec.botnets.iter().enumerate() {
        let e = &expected.botnets[i];
        if e.jaccard_min < spec.detector_threshold {
            warnings.push(format!(
                "botnet {i}: mutation {} gives copies with Jaccard down to {:.3}, below the detection threshold {}",
                b.mutation, e.jaccard_min, spec.detector_threshold
            ));
        }
        if b.delay_max_secs > slide {
            warnings.push(format!(
                "botnet {i}: delays up to {} s exceed the {slide} s slide; some copies may share no window with their source",
                b.delay_max_secs
            ));
        }
        let per_account = (b.campaigns + b.filler_tweets) as f64;
        for (label, fraction) in &periods {
            if per_account * fraction < spec.min_tweets as f64 {
                warnings.push(format!(
                    "botnet {i}: about {:.0} tweets per member in period {label}, below min_tweets {}",
                    per_account * fraction,
                    spec.min_tweets
                ));
            }
        }
    }
    if check.hits > 0 {
        warnings.push(format!(
            "{} of {} random background pairs reach Jaccard {}; enlarge the vocabulary",
            check.hits, check.pairs, check.threshold
        ));
    }
    warnings
}
