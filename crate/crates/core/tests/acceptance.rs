//! Acceptance suite. Every criterion prints one PASS or FAIL line; the test fails
//! if any criterion does. Run with `cargo test --test acceptance -- --nocapture`
//! to see the lines.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use ccid_core::ccid::{detect_all, sweep_jaccard, CopyEvent, DetectorConfig};
use ccid_core::community::CommunityId;
use ccid_core::copygraph::{
    build_graph, export_graph, filter_graph, import_graph, CopyGraph, FilterConfig, GraphFormat, NodeStats,
};
use ccid_core::corpus::{self, AccountId, CorpusIndex, Period, PeriodScheme, TweetId};
use ccid_core::digest::sha256_file;
use ccid_core::features::{compare_cdf, compute_features, creation_histogram, rank_features};
use ccid_core::pipeline::{run_pipeline, PipelineConfig, RunManifest, MANIFEST_FILE};
use ccid_core::stats::{ecdf, histogram, ks_statistic};
use ccid_core::synth::{self, generate, BotnetSpec, Scenario, ScenarioSpec};
use ccid_core::trends::{trend_interaction, BotTweet, TrendSnapshot};
use common::{copy_pairs, ensure, index, oracle, random_corpus, tweet, Report};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn scenario_index(s: &Scenario) -> CorpusIndex {
    index(s.tweets.clone())
}

fn small_spec(seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        seed,
        background_users: 120,
        background_tweets: 3000,
        headlines: 4,
        collision_check_pairs: 20_000,
        botnets: vec![
            BotnetSpec { size: 5, campaigns: 25, ..Default::default() },
            BotnetSpec { size: 9, campaigns: 25, ..Default::default() },
            BotnetSpec { size: 6, campaigns: 25, mutation: 0.0, ..Default::default() },
        ],
        ..ScenarioSpec::default()
    }
}

fn pipeline_config(min_tweets: u64) -> PipelineConfig {
    PipelineConfig {
        filter: FilterConfig {
            copy_pct_threshold: 5.0,
            min_tweets,
        },
        ..PipelineConfig::default()
    }
}

fn oracle_equivalence() -> Check {
    let thresholds = [0.5, 0.6, 0.7, 0.8, 0.9];
    let windows = [10.0, 20.0, 5.0];
    let started = Instant::now();
    let mut detect_secs = 0.0;
    let mut total_pairs = 0;
    for seed in 0..50u64 {
        let n = 200 + (seed as usize * 97) % 4801;
        let tweets = random_corpus(seed, n, n as i64 * 30);
        let cfg = DetectorConfig {
            jaccard_threshold: thresholds[seed as usize % thresholds.len()],
            ..DetectorConfig::default()
        }
        .with_window_minutes(windows[seed as usize % windows.len()])
        .map_err(|e| e.to_string())?;
        let idx = index(tweets.clone());
        let t0 = Instant::now();
        let det = detect_all(&idx, &cfg).map_err(|e| e.to_string())?;
        detect_secs += t0.elapsed().as_secs_f64();
        let want = oracle(&tweets, &cfg);
        let got_pairs = copy_pairs(&det.events);
        ensure(got_pairs == want.copies, || {
            format!(
                "seed {seed}: {} copy pairs vs {} from the oracle; first difference {:?}",
                got_pairs.len(),
                want.copies.len(),
                got_pairs.symmetric_difference(&want.copies).next()
            )
        })?;
        let got_similar: BTreeSet<(TweetId, TweetId)> =
            det.similar_pairs.iter().map(|p| (p.earlier, p.later)).collect();
        ensure(got_similar == want.similar, || format!("seed {seed}: similar pairs differ"))?;
        let sources: BTreeSet<TweetId> = det.events.iter().map(|e| e.source_tweet_id).collect();
        ensure(sources == want.sources, || format!("seed {seed}: event sources differ"))?;
        total_pairs += want.copies.len();
    }
    let total = started.elapsed().as_secs_f64();
    ensure(detect_secs < 60.0, || format!("detection took {detect_secs:.1}s"))?;
    Ok(format!(
        "50 corpora, {total_pairs} copy pairs equal; detection {detect_secs:.2}s, with oracle {total:.2}s"
    ))
}

fn planted_recovery() -> Check {
    let mut details = Vec::new();
    let variants = [
        ScenarioSpec { seed: 11, ..ScenarioSpec::default() },
        ScenarioSpec {
            seed: 12,
            botnets: ScenarioSpec::default()
                .botnets
                .into_iter()
                .map(|b| BotnetSpec { delay_max_secs: 300, ..b })
                .collect(),
            ..ScenarioSpec::default()
        },
    ];
    for spec in variants {
        let s = generate(&spec).map_err(|e| e.to_string())?;
        ensure(s.manifest.warnings.is_empty(), || format!("generator warnings {:?}", s.manifest.warnings))?;
        let idx = scenario_index(&s);
        let run = run_pipeline(&idx, &pipeline_config(s.manifest.expected.min_tweets)).map_err(|e| e.to_string())?;
        let bots = s.bots();
        let predicted: BTreeSet<AccountId> = run.merged.nodes.keys().copied().collect();
        let hit = predicted.intersection(&bots).count() as f64;
        let precision = if predicted.is_empty() { 0.0 } else { hit / predicted.len() as f64 };
        let recall = hit / bots.len() as f64;
        ensure(precision >= 0.95 && recall >= 0.95, || {
            format!("seed {}: precision {precision:.3}, recall {recall:.3}", spec.seed)
        })?;
        // Up to relabelling: every planted botnet maps to one community of its own.
        let mut owner: BTreeMap<CommunityId, usize> = BTreeMap::new();
        for (b, members) in s.truth.botnets.iter().enumerate() {
            let ids: BTreeSet<CommunityId> = members.iter().filter_map(|&a| run.communities.get(a)).collect();
            ensure(ids.len() == 1, || format!("botnet {b} spread over communities {ids:?}"))?;
            let c = *ids.iter().next().unwrap();
            ensure(owner.insert(c, b).is_none(), || format!("community {c} holds two botnets"))?;
        }
        details.push(format!(
            "seed {}: P={precision:.3} R={recall:.3}, {} botnets recovered",
            spec.seed,
            s.truth.botnets.len()
        ));
    }
    Ok(details.join("; "))
}

fn non_increasing(xs: &[usize]) -> bool {
    xs.windows(2).all(|w| w[0] >= w[1])
}

fn monotonicity() -> Check {
    let s = generate(&small_spec(5)).map_err(|e| e.to_string())?;
    let idx = scenario_index(&s);
    let thresholds = [0.5, 0.6, 0.7, 0.8, 0.9];
    let rows = sweep_jaccard(&idx, &DetectorConfig::default(), &thresholds).map_err(|e| e.to_string())?;
    let similar: Vec<usize> = rows.iter().map(|r| r.summary.similar_pairs).collect();
    let account_pairs: Vec<usize> = rows.iter().map(|r| r.summary.account_pairs).collect();
    let copy_pairs: Vec<usize> = rows.iter().map(|r| r.summary.copy_pairs).collect();
    let noise: Vec<usize> = rows.iter().map(|r| r.single_copy_users).collect();
    ensure(non_increasing(&similar), || format!("similar pairs over thresholds {similar:?}"))?;
    ensure(non_increasing(&account_pairs), || format!("account pairs over thresholds {account_pairs:?}"))?;
    ensure(non_increasing(&copy_pairs), || format!("copy pairs over thresholds {copy_pairs:?}"))?;
    ensure(noise.last() <= noise.first(), || format!("single-copy users {noise:?}"))?;

    let minutes = [2.5, 5.0, 10.0, 15.0, 20.0];
    let mut pair_sets = Vec::new();
    let mut counts = Vec::new();
    for &m in &minutes {
        let cfg = DetectorConfig::default().with_window_minutes(m).map_err(|e| e.to_string())?;
        let det = detect_all(&idx, &cfg).map_err(|e| e.to_string())?;
        counts.push(det.similar_pairs.len());
        pair_sets.push(det.similar_pairs.iter().map(|p| (p.earlier, p.later)).collect::<BTreeSet<_>>());
    }
    ensure(counts.windows(2).all(|w| w[0] <= w[1]), || format!("pair counts over windows {counts:?}"))?;
    // 2.5→5, 5→10 and 10→15 min: every smaller window fits inside a larger one.
    for i in 0..3 {
        ensure(pair_sets[i].is_subset(&pair_sets[i + 1]), || {
            format!("pairs at {} min not kept at {} min", minutes[i], minutes[i + 1])
        })?;
    }
    Ok(format!(
        "similar pairs by threshold {similar:?}, copy pairs {copy_pairs:?}, single-copy users {noise:?}; \
         pairs by window {counts:?}"
    ))
}

/// Campaigns confined to one slide interval each, far apart, over background
/// tweets made of unique words.
fn slot_confined_corpus(seed: u64, slide: i64) -> Vec<corpus::Tweet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tweets = Vec::new();
    let mut id = 1u64;
    let mut unique = 0u64;
    let base_slot = 5_000_000 + rng.random_range(0..1000);
    for c in 0..30i64 {
        let slot = base_slot + c * 5;
        let words: Vec<String> = (0..10).map(|k| format!("c{c}w{k}")).collect();
        for _ in 0..rng.random_range(2..=6) {
            let mut w = words.clone();
            let p = rng.random_range(0..w.len());
            w[p] = format!("edit{}", rng.random_range(0..3));
            let ts = slot * slide + rng.random_range(0..slide);
            tweets.push(tweet(id, rng.random_range(1..=40), ts, &w.join(" ")));
            id += 1;
        }
    }
    let (lo, hi) = (base_slot * slide, (base_slot + 150) * slide);
    for _ in 0..400 {
        let words: Vec<String> = (0..8)
            .map(|_| {
                unique += 1;
                format!("u{unique}")
            })
            .collect();
        tweets.push(tweet(id, rng.random_range(1..=40), rng.random_range(lo..hi), &words.join(" ")));
        id += 1;
    }
    tweets
}

/// Groups computed on tumbling (non-overlapping) slide intervals.
fn tumbling_events(tweets: &[corpus::Tweet], cfg: &DetectorConfig) -> BTreeMap<TweetId, BTreeSet<TweetId>> {
    let tumbling = DetectorConfig {
        window_secs: cfg.slide_secs,
        ..cfg.clone()
    };
    let o = oracle(tweets, &tumbling);
    let mut out: BTreeMap<TweetId, BTreeSet<TweetId>> = BTreeMap::new();
    for (s, c) in o.copies {
        out.entry(s).or_default().insert(c);
    }
    out
}

fn dedup() -> Check {
    let mut events_checked = 0;
    for seed in 0..20u64 {
        let det = detect_all(&index(random_corpus(100 + seed, 2000, 40_000)), &DetectorConfig::default())
            .map_err(|e| e.to_string())?;
        let sources: BTreeSet<TweetId> = det.events.iter().map(|e| e.source_tweet_id).collect();
        ensure(sources.len() == det.events.len(), || format!("seed {seed}: repeated source ids"))?;
        let listed: usize = det.events.iter().map(|e| e.copies.len()).sum();
        ensure(listed == copy_pairs(&det.events).len(), || format!("seed {seed}: a copy pair listed twice"))?;
        events_checked += det.events.len();
    }
    let cfg = DetectorConfig::default();
    for seed in 0..10u64 {
        let tweets = slot_confined_corpus(seed, cfg.slide_secs);
        let det = detect_all(&index(tweets.clone()), &cfg).map_err(|e| e.to_string())?;
        let got: BTreeMap<TweetId, BTreeSet<TweetId>> = det
            .events
            .iter()
            .map(|e| (e.source_tweet_id, e.copies.iter().map(|c| c.tweet_id).collect()))
            .collect();
        let want = tumbling_events(&tweets, &cfg);
        ensure(det.events.len() == want.len(), || {
            format!("seed {seed}: {} events vs {} on tumbling windows", det.events.len(), want.len())
        })?;
        ensure(got == want, || format!("seed {seed}: events differ from the tumbling-window oracle"))?;
        events_checked += det.events.len();
    }
    Ok(format!("{events_checked} events, unique sources, slot-confined events counted once"))
}

fn period_graphs(idx: &CorpusIndex, events: &[CopyEvent]) -> Vec<CopyGraph> {
    idx.periods().iter().map(|p| build_graph(events, idx, p)).collect()
}

fn filter_invariants() -> Check {
    let levels = [0.0, 1.0, 3.0, 5.0, 10.0];
    let mut corpora = 0;
    let mut graphs: Vec<(CopyGraph, u64)> = Vec::new();
    for seed in 0..4 {
        let s = generate(&small_spec(seed)).map_err(|e| e.to_string())?;
        let idx = scenario_index(&s);
        let det = detect_all(&idx, &DetectorConfig::default()).map_err(|e| e.to_string())?;
        graphs.extend(period_graphs(&idx, &det.events).into_iter().map(|g| (g, s.manifest.expected.min_tweets)));
        corpora += 1;
    }
    for seed in 0..10 {
        let idx = index(random_corpus(200 + seed, 3000, 200_000));
        let det = detect_all(&idx, &DetectorConfig::default()).map_err(|e| e.to_string())?;
        graphs.extend(period_graphs(&idx, &det.events).into_iter().map(|g| (g, 20)));
        corpora += 1;
    }
    for (g, min_tweets) in &graphs {
        let mut prev: Option<(usize, usize)> = None;
        for &t in &levels {
            let cfg = FilterConfig {
                copy_pct_threshold: t,
                min_tweets: *min_tweets,
            };
            let f = filter_graph(g, &cfg).map_err(|e| e.to_string())?;
            let again = filter_graph(&f, &cfg).map_err(|e| e.to_string())?;
            ensure(again == f, || format!("filter at {t}% is not idempotent"))?;
            let now = (f.node_count(), f.edge_count());
            if let Some(p) = prev {
                ensure(now.0 <= p.0 && now.1 <= p.1, || format!("counts grew to {now:?} from {p:?} at {t}%"))?;
            }
            prev = Some(now);
        }
    }
    Ok(format!("{} period graphs from {corpora} corpora, T over {levels:?}", graphs.len()))
}

fn random_graph(rng: &mut ChaCha8Rng, i: usize) -> CopyGraph {
    let mut g = CopyGraph {
        periods: vec![Period::new(format!("p{i}<&\"'>"), 0, 1_000 + i as i64).unwrap()],
        ..Default::default()
    };
    for a in 0..100u64 {
        let total = rng.random_range(1..500);
        g.nodes.insert(
            AccountId(a + 1),
            NodeStats {
                total_tweets: if rng.random_bool(0.9) { Some(total) } else { None },
                copied_count: rng.random_range(0..=total),
            },
        );
    }
    for _ in 0..rng.random_range(100..400) {
        let a = rng.random_range(1..=100);
        let b = rng.random_range(1..=100);
        if a != b {
            g.edges.insert((AccountId(a), AccountId(b)), rng.random_range(1..50));
        }
    }
    g
}

fn graph_invariants() -> Check {
    let mut checked = 0;
    let mut corpora: Vec<(CorpusIndex, Vec<CopyEvent>)> = Vec::new();
    let s = generate(&small_spec(3)).map_err(|e| e.to_string())?;
    let idx = scenario_index(&s);
    let det = detect_all(&idx, &DetectorConfig::default()).map_err(|e| e.to_string())?;
    corpora.push((idx, det.events));
    for seed in 0..5 {
        let idx = index(random_corpus(300 + seed, 3000, 100_000));
        let events = detect_all(&idx, &DetectorConfig::default()).map_err(|e| e.to_string())?.events;
        corpora.push((idx, events));
    }
    for (idx, events) in &corpora {
        for p in idx.periods() {
            let g = build_graph(events, idx, p);
            let mut pairs: BTreeMap<(AccountId, AccountId), u64> = BTreeMap::new();
            for e in events.iter().filter(|e| p.contains(e.source_timestamp)) {
                for c in e.copier_accounts() {
                    *pairs.entry((e.source_author, c)).or_insert(0) += 1;
                }
            }
            let dedup: u64 = pairs.values().sum();
            ensure(g.total_weight() == dedup, || {
                format!("period {p}: weight {} vs {dedup} deduplicated pairs", g.total_weight())
            })?;
            let stray = g.edges.keys().filter(|k| !pairs.contains_key(k)).count();
            ensure(stray == 0, || format!("period {p}: {stray} edges not from source to copier"))?;
            ensure(g.edges == pairs, || format!("period {p}: edge weights differ from event pairs"))?;
            checked += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for i in 0..100 {
        let g = random_graph(&mut rng, i);
        let communities: BTreeMap<AccountId, CommunityId> =
            g.nodes.keys().map(|&a| (a, rng.random_range(0..5))).collect();
        for format in [GraphFormat::GraphMl, GraphFormat::Tsv] {
            let path = dir.path().join(format!("g.{}", format.extension()));
            let mut file = std::fs::File::create(&path).map_err(|e| e.to_string())?;
            export_graph(&g, format, Some(&communities), &mut file).map_err(|e| e.to_string())?;
            drop(file);
            let back = import_graph(&path, format).map_err(|e| e.to_string())?;
            match format {
                GraphFormat::GraphMl => {
                    ensure(back.graph == g, || format!("graph {i}: GraphML round trip differs"))?;
                    ensure(back.communities == communities, || format!("graph {i}: communities lost"))?;
                }
                GraphFormat::Tsv => ensure(back.graph.edges == g.edges, || format!("graph {i}: TSV edges differ"))?,
            }
        }
    }
    Ok(format!("{checked} period graphs conserve weight, 100 random graphs round-trip"))
}

fn projection_stability() -> Check {
    let mut checked = 0;
    let s = generate(&ScenarioSpec { seed: 21, ..ScenarioSpec::default() }).map_err(|e| e.to_string())?;
    let idx = scenario_index(&s);
    let (start, end) = (s.manifest.spec.start, s.manifest.spec.end());
    let third = (end - start) / 3;
    let mut configs = vec![pipeline_config(s.manifest.expected.min_tweets)];
    configs.push(PipelineConfig {
        periods: (0..3)
            .map(|k| {
                let hi = if k == 2 { end } else { start + (k + 1) * third };
                Period::new(format!("part{k}"), start + k * third, hi).unwrap()
            })
            .collect(),
        ..pipeline_config(s.manifest.expected.min_tweets / 2)
    });
    for cfg in configs {
        let idx = if cfg.periods.is_empty() {
            idx.clone()
        } else {
            CorpusIndex::from_tweets(s.tweets.clone(), &cfg.period_scheme()).map_err(|e| e.to_string())?
        };
        let run = run_pipeline(&idx, &cfg).map_err(|e| e.to_string())?;
        ensure(run.projections.len() >= 2, || "fewer than two periods".to_string())?;
        let mut seen: BTreeMap<AccountId, CommunityId> = BTreeMap::new();
        for p in &run.projections {
            for (&a, &c) in &p.membership {
                ensure(run.communities.get(a) == Some(c), || format!("{a} relabelled in {}", p.label))?;
                if let Some(prev) = seen.insert(a, c) {
                    ensure(prev == c, || format!("{a} has ids {prev} and {c}"))?;
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} (account, period) placements keep their community id"))
}

fn trend_logic() -> Check {
    let t = 1_000_000i64;
    let mut cases = 0;
    for h in [3600i64, 86_400] {
        let offsets = [-h - 1, -h, -h + 1, -1, 0, 1, h - 1, h, h + 1];
        let within_before = |d: i64| (-h..=0).contains(&d);
        let within_after = |d: i64| (0..=h).contains(&d);
        for &d1 in &offsets {
            for &d2 in offsets.iter().chain([&i64::MAX]) {
                let mut snaps = vec![TrendSnapshot {
                    timestamp: t + d1,
                    topics: ["vote".to_string()].into(),
                }];
                if d2 != i64::MAX && d2 != d1 {
                    snaps.push(TrendSnapshot {
                        timestamp: t + d2,
                        topics: ["other".to_string(), "vote".to_string()].into(),
                    });
                }
                snaps.sort_by_key(|s| s.timestamp);
                let tweets = [
                    BotTweet { account: AccountId(1), timestamp: t, hashtags: vec!["#VOTE".into()] },
                    BotTweet { account: AccountId(2), timestamp: t, hashtags: vec![] },
                ];
                let r = trend_interaction(&tweets, &snaps, h).map_err(|e| e.to_string())?;
                let again = trend_interaction(&tweets, &snaps, h).map_err(|e| e.to_string())?;
                ensure(r == again, || "non-deterministic report".to_string())?;
                let ds: Vec<i64> = snaps.iter().map(|s| s.timestamp - t).collect();
                let before = ds.iter().any(|&d| within_before(d));
                let after = ds.iter().any(|&d| within_after(d));
                let f = r.accounts.iter().find(|f| f.account == AccountId(1)).unwrap();
                ensure(f.posted_hashtags && f.trending_before == before && f.trending_after == after, || {
                    format!("h={h} offsets {ds:?}: got before={} after={}", f.trending_before, f.trending_after)
                })?;
                ensure(f.before_only == (before && !after) && f.after_only == (after && !before), || {
                    format!("h={h} offsets {ds:?}: only-flags wrong")
                })?;
                let quiet = r.accounts.iter().find(|f| f.account == AccountId(2));
                ensure(quiet.is_none_or(|f| !f.posted_hashtags && !f.trending_before && !f.trending_after), || {
                    "account without hashtags flagged".to_string()
                })?;
                cases += 1;
            }
        }
    }
    // Random fixtures: horizon monotonicity and the subset-count inequalities.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let tweets: Vec<BotTweet> = (0..rng.random_range(1..30))
            .map(|_| BotTweet {
                account: AccountId(rng.random_range(1..8)),
                timestamp: rng.random_range(0..400_000),
                hashtags: (0..rng.random_range(0..3)).map(|_| format!("h{}", rng.random_range(0..5))).collect(),
            })
            .collect();
        let mut snaps: Vec<TrendSnapshot> = (0..rng.random_range(0..20))
            .map(|_| TrendSnapshot {
                timestamp: rng.random_range(0..400_000),
                topics: (0..rng.random_range(1..3)).map(|_| format!("h{}", rng.random_range(0..5))).collect(),
            })
            .collect();
        snaps.sort_by_key(|s| s.timestamp);
        snaps.dedup_by_key(|s| s.timestamp);
        let mut prev: Option<Vec<(bool, bool)>> = None;
        for h in [3_600, 43_200, 86_400, 172_800] {
            let r = trend_interaction(&tweets, &snaps, h).map_err(|e| e.to_string())?;
            let s = &r.summary;
            ensure(s.before_only <= s.trending_before && s.after_only <= s.trending_after, || {
                format!("only-counts exceed directional counts: {s:?}")
            })?;
            ensure(s.trending_either <= s.posted_hashtags && s.posted_hashtags <= s.accounts, || {
                format!("either/posted counts inconsistent: {s:?}")
            })?;
            let flags: Vec<(bool, bool)> = r.accounts.iter().map(|f| (f.trending_before, f.trending_after)).collect();
            if let Some(p) = &prev {
                let kept = p.iter().zip(&flags).all(|(a, b)| (!a.0 || b.0) && (!a.1 || b.1));
                ensure(kept, || format!("enlarging the horizon to {h}s unset a flag"))?;
            }
            prev = Some(flags);
            cases += 1;
        }
    }
    Ok(format!("{cases} fixtures"))
}

fn cdf_checks() -> Check {
    let s = generate(&small_spec(9)).map_err(|e| e.to_string())?;
    let idx = scenario_index(&s);
    let table = compute_features(&idx, &s.layer_graphs(), &s.accounts);
    let bots = s.bots();
    let clear: BTreeSet<AccountId> = s.accounts.iter().map(|a| a.account_id).filter(|a| !bots.contains(a)).collect();
    let ranked = rank_features(&table, &bots, &clear).map_err(|e| e.to_string())?;
    let well_formed = |cdf: &[ccid_core::stats::CdfPoint]| {
        cdf.windows(2).all(|w| w[0].value < w[1].value && w[0].cumulative <= w[1].cumulative)
            && cdf.last().is_some_and(|p| p.cumulative == 1.0)
    };
    for c in &ranked {
        ensure(well_formed(&c.bots) && well_formed(&c.clear), || format!("{}: malformed CDF", c.feature))?;
        ensure((0.0..=1.0).contains(&c.ks), || format!("{}: KS {}", c.feature, c.ks))?;
        let swapped = compare_cdf(&table, &c.feature, &clear, &bots).map_err(|e| e.to_string())?;
        ensure(swapped.ks == c.ks, || format!("{}: KS not symmetric", c.feature))?;
        let one: BTreeSet<AccountId> = bots.iter().take(1).copied().collect();
        if let Ok(same) = compare_cdf(&table, &c.feature, &one, &one) {
            ensure(same.ks == 0.0, || format!("{}: KS of a set with itself {}", c.feature, same.ks))?;
        }
    }
    let known = s.accounts.iter().filter(|a| bots.contains(&a.account_id)).count();
    for days in [1.0, 7.0, 30.0] {
        let h = creation_histogram(&s.accounts, &bots, days).map_err(|e| e.to_string())?;
        let sum: usize = h.iter().map(|b| b.count).sum();
        ensure(sum == known, || format!("{days}-day bins hold {sum} of {known} bots"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..500 {
        let a: Vec<f64> = (0..rng.random_range(1..40)).map(|_| rng.random_range(0..20) as f64 / 2.0).collect();
        let b: Vec<f64> = (0..rng.random_range(1..40)).map(|_| rng.random_range(0..20) as f64 / 2.0).collect();
        let ks = ks_statistic(&a, &b);
        ensure(ks == ks_statistic(&b, &a) && (0.0..=1.0).contains(&ks), || format!("KS {ks}"))?;
        ensure(ks_statistic(&a[..1], &a[..1]) == 0.0, || "KS({x},{x}) != 0".to_string())?;
        ensure(well_formed(&ecdf(&a)), || "malformed ecdf".to_string())?;
        let total: usize = histogram(&a, 1.5).iter().map(|(_, c)| c).sum();
        ensure(total == a.len(), || "histogram lost values".to_string())?;
    }
    Ok(format!("{} features ranked; top {} (KS {:.3})", ranked.len(), ranked[0].feature, ranked[0].ks))
}

fn run_digest(corpus_path: &std::path::Path, cfg: &PipelineConfig) -> Result<String, String> {
    let report = corpus::load_corpus(
        corpus_path,
        &corpus::LoadOptions {
            periods: PeriodScheme::CalendarYears,
        },
    )
    .map_err(|e| e.to_string())?;
    let run = run_pipeline(&report.index, cfg).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut m = RunManifest::new("pipeline", &cfg.for_manifest()).map_err(|e| e.to_string())?;
    m.add_input("corpus", corpus_path).map_err(|e| e.to_string())?;
    run.write_outputs(dir.path(), cfg.graph_format, &mut m).map_err(|e| e.to_string())?;
    m.finish(dir.path()).map_err(|e| e.to_string())?;
    sha256_file(&dir.path().join(MANIFEST_FILE)).map_err(|e| e.to_string())
}

fn reproducibility() -> Check {
    let spec = small_spec(4);
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let ma = generate(&spec).and_then(|s| s.write_to_dir(a.path())).map_err(|e| e.to_string())?;
    let mb = generate(&spec).and_then(|s| s.write_to_dir(b.path())).map_err(|e| e.to_string())?;
    let da = sha256_file(&a.path().join(synth::MANIFEST_FILE)).map_err(|e| e.to_string())?;
    let db = sha256_file(&b.path().join(synth::MANIFEST_FILE)).map_err(|e| e.to_string())?;
    ensure(ma == mb && da == db, || "synthetic scenario differs between runs".to_string())?;

    let corpus_path = a.path().join(synth::CORPUS_FILE);
    let mut digests = Vec::new();
    for workers in [1, 4, 8, 4] {
        let cfg = PipelineConfig {
            workers: Some(workers),
            ..pipeline_config(spec.min_tweets)
        };
        digests.push((workers, run_digest(&corpus_path, &cfg)?));
    }
    ensure(digests.iter().all(|(_, d)| *d == digests[0].1), || format!("manifest digests {digests:?}"))?;
    Ok(format!("manifest {} for 1, 4 and 8 workers", &digests[0].1[..16]))
}

#[test]
fn acceptance() {
    let mut report = Report::default();
    report.check("1 oracle equivalence", oracle_equivalence());
    report.check("2 planted botnet recovery", planted_recovery());
    report.check("3 monotonicity", monotonicity());
    report.check("4 dedup", dedup());
    report.check("5 filter invariants", filter_invariants());
    report.check("6 graph invariants", graph_invariants());
    report.check("7 projection id stability", projection_stability());
    report.check("8 trend logic", trend_logic());
    report.check("9 feature CDFs", cdf_checks());
    report.check("10 reproducibility", reproducibility());
    report.finish();
}
