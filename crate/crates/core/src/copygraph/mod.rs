//! Weighted source→copier account graphs built from copy events.

mod io;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use petgraph::algo::{connected_components, kosaraju_scc};
use petgraph::graphmap::DiGraphMap;
use serde::{Deserialize, Serialize};

use crate::ccid::CopyEvent;
use crate::corpus::{AccountId, CorpusIndex, Period, TweetId};
use crate::error::{Error, Result};

pub use io::{export_graph, import_graph, GraphFormat, ImportedGraph};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeStats {
    /// Tweets by the account in the graph's periods; `None` when the account is
    /// absent from the corpus the graph was built against.
    pub total_tweets: Option<u64>,
    /// Distinct tweets by the account that appear as copies in events.
    pub copied_count: u64,
}

impl NodeStats {
    /// Copied share of the account's tweets in percent.
    pub fn copied_pct(&self) -> Option<f64> {
        match self.total_tweets {
            Some(0) | None => None,
            Some(t) => Some(100.0 * self.copied_count as f64 / t as f64),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CopyGraph {
    pub periods: Vec<Period>,
    pub nodes: BTreeMap<AccountId, NodeStats>,
    /// `(source, copier) → number of events`.
    pub edges: BTreeMap<(AccountId, AccountId), u64>,
}

impl CopyGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Undirected weighted projection: `{a, b} → w(a→b) + w(b→a)` keyed with `a < b`.
    pub fn undirected_weights(&self) -> BTreeMap<(AccountId, AccountId), u64> {
        let mut out = BTreeMap::new();
        for (&(a, b), &w) in &self.edges {
            *out.entry((a.min(b), a.max(b))).or_insert(0) += w;
        }
        out
    }

    fn digraph(&self) -> DiGraphMap<u64, u64> {
        let mut g = DiGraphMap::with_capacity(self.nodes.len(), self.edges.len());
        for id in self.nodes.keys() {
            g.add_node(id.0);
        }
        for (&(a, b), &w) in &self.edges {
            g.add_edge(a.0, b.0, w);
        }
        g
    }

    /// Drops nodes with no incident edge.
    fn prune_isolated(&mut self) {
        let touched: BTreeSet<AccountId> =
            self.edges.keys().flat_map(|&(a, b)| [a, b]).collect();
        self.nodes.retain(|id, _| touched.contains(id));
    }
}

/// Builds the copy graph of `period`: events are assigned by source timestamp,
/// every event adds 1 to `source → copier` for each distinct copier account.
/// Copied counts only include copy tweets that themselves fall in the period, so
/// `copied_count ≤ total_tweets` holds for every known node.
pub fn build_graph(events: &[CopyEvent], index: &CorpusIndex, period: &Period) -> CopyGraph {
    let range = index.range_of(period.start, period.end);
    let mut totals: HashMap<AccountId, u64> = HashMap::new();
    for t in &index.tweets()[range] {
        *totals.entry(t.author_id).or_insert(0) += 1;
    }
    let known: BTreeSet<AccountId> = index.tweets().iter().map(|t| t.author_id).collect();

    let mut edges: BTreeMap<(AccountId, AccountId), u64> = BTreeMap::new();
    let mut copied: BTreeMap<AccountId, BTreeSet<TweetId>> = BTreeMap::new();
    for e in events.iter().filter(|e| period.contains(e.source_timestamp)) {
        for copier in e.copier_accounts() {
            *edges.entry((e.source_author, copier)).or_insert(0) += 1;
        }
        for c in &e.copies {
            if c.author != e.source_author && period.contains(c.timestamp) {
                copied.entry(c.author).or_default().insert(c.tweet_id);
            }
        }
    }

    let mut nodes = BTreeMap::new();
    for &(a, b) in edges.keys() {
        for id in [a, b] {
            nodes.entry(id).or_insert_with(|| NodeStats {
                total_tweets: known
                    .contains(&id)
                    .then(|| totals.get(&id).copied().unwrap_or(0)),
                copied_count: copied.get(&id).map_or(0, |s| s.len() as u64),
            });
        }
    }
    for (id, stats) in &nodes {
        if stats.total_tweets.is_none() {
            log::warn!("account {id} in events but not in corpus; tweets unknown");
        }
    }
    CopyGraph {
        periods: vec![period.clone()],
        nodes,
        edges,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    /// Minimum share of copied tweets, in percent.
    pub copy_pct_threshold: f64,
    pub min_tweets: u64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            copy_pct_threshold: 5.0,
            min_tweets: 100,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=100.0).contains(&self.copy_pct_threshold) {
            return Err(Error::arg(format!(
                "copy percentage {} outside [0, 100]",
                self.copy_pct_threshold
            )));
        }
        Ok(())
    }

    fn passes_copy_pct(&self, s: &NodeStats) -> bool {
        match s.total_tweets {
            Some(t) => 100.0 * s.copied_count as f64 >= self.copy_pct_threshold * t as f64,
            None => self.copy_pct_threshold == 0.0,
        }
    }

    fn passes_activity(&self, s: &NodeStats) -> bool {
        match s.total_tweets {
            Some(t) => t >= self.min_tweets,
            None => self.min_tweets == 0,
        }
    }
}

/// Percentage filter, then activity filter; incident edges go with removed nodes
/// and nodes left without edges are dropped.
pub fn filter_graph(g: &CopyGraph, cfg: &FilterConfig) -> Result<CopyGraph> {
    cfg.validate()?;
    let mut out = g.clone();
    out.nodes.retain(|_, s| cfg.passes_copy_pct(s));
    out.nodes.retain(|_, s| cfg.passes_activity(s));
    let nodes = &out.nodes;
    out.edges
        .retain(|(a, b), _| nodes.contains_key(a) && nodes.contains_key(b));
    out.prune_isolated();
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub total_weight: u64,
    pub weak_components: usize,
    pub strong_components: usize,
    pub largest_weak_component: usize,
    /// Nodes with outgoing but no incoming edges.
    pub source_only: usize,
    /// Nodes with at least one incoming edge.
    pub copiers: usize,
    /// `(weight, number of edges with that weight)`, ascending.
    pub weight_distribution: Vec<(u64, usize)>,
}

pub fn graph_stats(g: &CopyGraph) -> GraphStats {
    let dg = g.digraph();
    let mut in_deg: BTreeMap<AccountId, usize> = BTreeMap::new();
    let mut out_deg: BTreeMap<AccountId, usize> = BTreeMap::new();
    let mut weights: BTreeMap<u64, usize> = BTreeMap::new();
    for (&(a, b), &w) in &g.edges {
        *out_deg.entry(a).or_insert(0) += 1;
        *in_deg.entry(b).or_insert(0) += 1;
        *weights.entry(w).or_insert(0) += 1;
    }
    let components = weak_component_sizes(g);
    GraphStats {
        nodes: g.node_count(),
        edges: g.edge_count(),
        total_weight: g.total_weight(),
        weak_components: connected_components(&dg),
        strong_components: kosaraju_scc(&dg).len(),
        largest_weak_component: components.into_iter().max().unwrap_or(0),
        source_only: out_deg.keys().filter(|a| !in_deg.contains_key(a)).count(),
        copiers: in_deg.len(),
        weight_distribution: weights.into_iter().collect(),
    }
}

/// Node sets of the weakly connected components, each sorted, ordered by their
/// smallest member.
pub fn weak_components(g: &CopyGraph) -> Vec<Vec<AccountId>> {
    let ids: Vec<AccountId> = g.nodes.keys().copied().collect();
    let pos: HashMap<AccountId, usize> = ids.iter().enumerate().map(|(i, &a)| (a, i)).collect();
    let mut parent: Vec<usize> = (0..ids.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(a, b) in g.edges.keys() {
        let (Some(&i), Some(&j)) = (pos.get(&a), pos.get(&b)) else {
            continue;
        };
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri.max(rj)] = ri.min(rj);
        }
    }
    let mut groups: BTreeMap<usize, Vec<AccountId>> = BTreeMap::new();
    for i in 0..ids.len() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(ids[i]);
    }
    groups.into_values().collect()
}

fn weak_component_sizes(g: &CopyGraph) -> Vec<usize> {
    weak_components(g).iter().map(Vec::len).collect()
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::ccid::Copy;
    use crate::corpus::{PeriodScheme, Tweet};

    pub(crate) fn event(src_tweet: u64, src: u64, ts: i64, copies: &[(u64, u64)]) -> CopyEvent {
        CopyEvent {
            source_tweet_id: src_tweet,
            source_author: AccountId(src),
            source_timestamp: ts,
            window_index: 0,
            copies: copies
                .iter()
                .enumerate()
                .map(|(i, &(tid, author))| Copy {
                    tweet_id: tid,
                    author: AccountId(author),
                    timestamp: ts + 1 + i as i64,
                    similarity: 1.0,
                    link_similarity: 1.0,
                })
                .collect(),
        }
    }

    fn corpus_for(events: &[CopyEvent], extra: &[(u64, usize)]) -> CorpusIndex {
        let mut tweets = Vec::new();
        let mut push = |id: u64, author: u64, ts: i64| {
            tweets.push(Tweet {
                tweet_id: id,
                author_id: AccountId(author),
                timestamp: ts,
                text: String::new(),
                hashtags: vec![],
                urls: vec![],
                source_app: None,
                is_retweet: false,
            })
        };
        for e in events {
            push(e.source_tweet_id, e.source_author.0, e.source_timestamp);
            for c in &e.copies {
                push(c.tweet_id, c.author.0, c.timestamp);
            }
        }
        let mut next = 1_000_000;
        for &(author, n) in extra {
            for _ in 0..n {
                next += 1;
                push(next, author, 500);
            }
        }
        CorpusIndex::from_tweets(tweets, &PeriodScheme::CalendarYears).unwrap()
    }

    fn whole() -> Period {
        Period::new("all", 0, 1 << 40).unwrap()
    }

    #[test]
    fn star_edges_without_copier_links() {
        let events = vec![event(1, 1, 10, &[(2, 2), (3, 3)])];
        let g = build_graph(&events, &corpus_for(&events, &[]), &whole());
        let edges: Vec<_> = g.edges.iter().map(|(&(a, b), &w)| (a.0, b.0, w)).collect();
        assert_eq!(edges, vec![(1, 2, 1), (1, 3, 1)]);
    }

    #[test]
    fn repeated_pairs_collapse_into_weight() {
        let events: Vec<_> = (0..3)
            .map(|i| event(10 * i + 1, 1, 100 * i as i64, &[(10 * i + 2, 2)]))
            .collect();
        let g = build_graph(&events, &corpus_for(&events, &[]), &whole());
        assert_eq!(g.edges.len(), 1);
        assert_eq!(g.edges[&(AccountId(1), AccountId(2))], 3);
        assert_eq!(g.nodes[&AccountId(2)].copied_count, 3);
        assert_eq!(g.nodes[&AccountId(1)].copied_count, 0);
    }

    #[test]
    fn empty_events_empty_graph() {
        let g = build_graph(&[], &corpus_for(&[], &[(1, 3)]), &whole());
        assert!(g.is_empty());
        assert_eq!(graph_stats(&g), GraphStats::default());
    }

    #[test]
    fn events_assigned_by_source_period() {
        let events = vec![event(1, 1, 10, &[(2, 2)]), event(3, 1, 200, &[(4, 3)])];
        let idx = corpus_for(&events, &[]);
        let g = build_graph(&events, &idx, &Period::new("a", 0, 100).unwrap());
        assert_eq!(g.edges.len(), 1);
        assert_eq!(g.nodes[&AccountId(1)].total_tweets, Some(1));
    }

    #[test]
    fn unknown_accounts_flagged() {
        let events = vec![event(1, 1, 10, &[(2, 2)])];
        let idx = corpus_for(&[event(1, 1, 10, &[])], &[]);
        let g = build_graph(&events, &idx, &whole());
        assert_eq!(g.nodes[&AccountId(2)].total_tweets, None);
        let kept = filter_graph(&g, &FilterConfig::default()).unwrap();
        assert!(kept.is_empty());
        let open = FilterConfig {
            copy_pct_threshold: 0.0,
            min_tweets: 0,
        };
        assert_eq!(filter_graph(&g, &open).unwrap(), g);
    }

    fn graph_of(nodes: &[(u64, u64, u64)], edges: &[(u64, u64)]) -> CopyGraph {
        CopyGraph {
            periods: vec![],
            nodes: nodes
                .iter()
                .map(|&(id, total, copied)| {
                    (
                        AccountId(id),
                        NodeStats {
                            total_tweets: Some(total),
                            copied_count: copied,
                        },
                    )
                })
                .collect(),
            edges: edges
                .iter()
                .map(|&(a, b)| ((AccountId(a), AccountId(b)), 1))
                .collect(),
        }
    }

    #[test]
    fn percentage_boundary_is_inclusive() {
        let cfg = FilterConfig {
            copy_pct_threshold: 5.0,
            min_tweets: 100,
        };
        for (copied, kept) in [(4, false), (5, true)] {
            let g = graph_of(&[(1, 100, 50), (2, 100, copied)], &[(1, 2)]);
            let f = filter_graph(&g, &cfg).unwrap();
            assert_eq!(f.nodes.contains_key(&AccountId(2)), kept, "{copied} copied");
        }
    }

    #[test]
    fn source_only_accounts_fail_positive_threshold() {
        let g = graph_of(&[(1, 100, 0), (2, 100, 60), (3, 100, 60)], &[(1, 2), (1, 3), (2, 3)]);
        let f = filter_graph(&g, &FilterConfig::default()).unwrap();
        assert_eq!(f.nodes.keys().map(|a| a.0).collect::<Vec<_>>(), vec![2, 3]);
        assert_eq!(f.edge_count(), 1);
    }

    #[test]
    fn activity_filter() {
        let events = vec![event(1, 1, 10, &[(2, 2)])];
        let idx = corpus_for(&events, &[(1, 150), (2, 98)]);
        let g = build_graph(&events, &idx, &whole());
        let cfg = FilterConfig {
            copy_pct_threshold: 0.0,
            min_tweets: 100,
        };
        assert!(filter_graph(&g, &cfg).unwrap().is_empty());
        let cfg = FilterConfig {
            min_tweets: 100 - 1,
            ..cfg
        };
        assert_eq!(filter_graph(&g, &cfg).unwrap().edge_count(), 1);
    }

    #[test]
    fn two_disjoint_edges_two_components() {
        let events = vec![event(1, 1, 10, &[(2, 2)]), event(3, 3, 20, &[(4, 4)])];
        let g = build_graph(&events, &corpus_for(&events, &[]), &whole());
        let s = graph_stats(&g);
        assert_eq!((s.nodes, s.edges, s.weak_components), (4, 2, 2));
        assert_eq!(s.strong_components, 4);
        assert_eq!(s.source_only, 2);
        assert_eq!(s.copiers, 2);
    }

    #[test]
    fn planted_botnet_star() {
        let events = vec![event(1, 1, 10, &[(2, 2), (3, 3), (4, 4), (5, 5)])];
        let g = build_graph(&events, &corpus_for(&events, &[]), &whole());
        let s = graph_stats(&g);
        assert_eq!(s.weak_components, 1);
        assert_eq!(s.largest_weak_component, 5);
        assert_eq!(g.edges.keys().filter(|(a, _)| *a == AccountId(1)).count(), 4);
        assert_eq!(s.weight_distribution, vec![(1, 4)]);
    }

    #[test]
    fn reciprocal_copying_forms_strong_component() {
        let events = vec![event(1, 1, 10, &[(2, 2)]), event(3, 2, 20, &[(4, 1)])];
        let g = build_graph(&events, &corpus_for(&events, &[]), &whole());
        let s = graph_stats(&g);
        assert_eq!((s.weak_components, s.strong_components, s.source_only), (1, 1, 0));
        let u = g.undirected_weights();
        assert_eq!(u[&(AccountId(1), AccountId(2))], 2);
    }

    mod props {
        use super::*;
        use crate::copygraph::arb::arb_graph;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn filter_monotone_and_idempotent(g in arb_graph(), min in 0u64..200) {
                let mut prev: Option<CopyGraph> = None;
                for t in [0.0, 1.0, 3.0, 5.0, 10.0] {
                    let cfg = FilterConfig { copy_pct_threshold: t, min_tweets: min };
                    let f = filter_graph(&g, &cfg).unwrap();
                    prop_assert_eq!(&filter_graph(&f, &cfg).unwrap(), &f);
                    for (id, s) in &f.nodes {
                        let total = s.total_tweets.unwrap_or(0);
                        prop_assert!(total >= min);
                        prop_assert!(100.0 * s.copied_count as f64 >= t * total as f64);
                        prop_assert_eq!(Some(s), g.nodes.get(id));
                    }
                    if let Some(p) = &prev {
                        prop_assert!(f.nodes.keys().all(|k| p.nodes.contains_key(k)));
                        prop_assert!(f.edges.keys().all(|k| p.edges.contains_key(k)));
                    }
                    prev = Some(f);
                }
            }

            #[test]
            fn zero_thresholds_are_identity(g in arb_graph()) {
                let cfg = FilterConfig { copy_pct_threshold: 0.0, min_tweets: 0 };
                prop_assert_eq!(filter_graph(&g, &cfg).unwrap(), g);
            }

            #[test]
            fn component_counts_agree(g in arb_graph()) {
                let s = graph_stats(&g);
                prop_assert_eq!(s.weak_components, weak_components(&g).len());
                prop_assert!(s.strong_components >= s.weak_components);
                prop_assert_eq!(s.weight_distribution.iter().map(|w| w.1).sum::<usize>(), s.edges);
            }
        }
    }
}
