//! Modularity-based community detection on undirected weighted graphs.
//!
//! Greedy agglomeration (Clauset–Newman–Moore): start from singletons and
//! repeatedly merge the adjacent pair with the largest modularity gain until no
//! merge gains. Equal gains are broken by the smallest community ids and a merged
//! community keeps the smaller id. A seeded local-moving pass then moves single
//! nodes to a neighbouring community while that strictly improves modularity,
//! communities that fell apart are split, and ids are relabelled densely in order of
//! each community's smallest account id.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::AccountId;
use crate::error::{Error, Result};

pub type CommunityId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommunityConfig {
    pub resolution: f64,
    /// When false every edge counts with weight 1.
    pub weighted: bool,
    /// Seeds the node order of the refinement pass.
    pub seed: u64,
    pub refine: bool,
}

impl Default for CommunityConfig {
    fn default() -> Self {
        CommunityConfig {
            resolution: 1.0,
            weighted: true,
            seed: 0,
            refine: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CommunityAssignment {
    pub membership: BTreeMap<AccountId, CommunityId>,
    pub modularity: f64,
    pub config: CommunityConfig,
}

impl CommunityAssignment {
    pub fn community_count(&self) -> usize {
        self.membership
            .values()
            .max()
            .map_or(0, |&m| m as usize + 1)
    }

    pub fn get(&self, account: AccountId) -> Option<CommunityId> {
        self.membership.get(&account).copied()
    }

    /// Members of each community, indexed by id.
    pub fn communities(&self) -> Vec<Vec<AccountId>> {
        let mut out = vec![Vec::new(); self.community_count()];
        for (&a, &c) in &self.membership {
            out[c as usize].push(a);
        }
        out
    }
}

/// Sums parallel edges into `{a, b} → w` with `a < b`. Self-loops and
/// non-positive weights are rejected.
fn normalize_edges(
    edges: impl IntoIterator<Item = (AccountId, AccountId, f64)>,
    weighted: bool,
) -> Result<BTreeMap<(AccountId, AccountId), f64>> {
    let mut out = BTreeMap::new();
    for (a, b, w) in edges {
        if a == b {
            return Err(Error::arg(format!("self-loop on {a}")));
        }
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::arg(format!("edge {a}-{b} has weight {w}")));
        }
        let w = if weighted { w } else { 1.0 };
        *out.entry((a.min(b), a.max(b))).or_insert(0.0) += w;
    }
    if !weighted {
        out.values_mut().for_each(|w| *w = 1.0);
    }
    Ok(out)
}

/// Newman modularity `Σ_c [L_c/W − γ (D_c / 2W)²]` of `membership`. Zero for a
/// graph without edges.
pub fn modularity(
    edges: &BTreeMap<(AccountId, AccountId), f64>,
    membership: &BTreeMap<AccountId, CommunityId>,
    resolution: f64,
) -> f64 {
    let total: f64 = edges.values().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mut internal: HashMap<CommunityId, f64> = HashMap::new();
    let mut degree: HashMap<CommunityId, f64> = HashMap::new();
    for (&(a, b), &w) in edges {
        let (ca, cb) = (membership.get(&a), membership.get(&b));
        if let Some(&ca) = ca {
            *degree.entry(ca).or_insert(0.0) += w;
        }
        if let Some(&cb) = cb {
            *degree.entry(cb).or_insert(0.0) += w;
        }
        if let Some(&c) = ca.filter(|_| ca == cb) {
            *internal.entry(c).or_insert(0.0) += w;
        }
    }
    let mut ids: Vec<CommunityId> = degree.keys().copied().collect();
    ids.sort_unstable();
    ids.iter()
        .map(|c| {
            let l = internal.get(c).copied().unwrap_or(0.0);
            let d = degree[c];
            l / total - resolution * (d / (2.0 * total)).powi(2)
        })
        .sum()
}

#[derive(PartialEq)]
struct Candidate {
    gain: f64,
    lo: usize,
    hi: usize,
    versions: (u32, u32),
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.lo.cmp(&self.lo))
            .then_with(|| other.hi.cmp(&self.hi))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Graph {
    nodes: Vec<AccountId>,
    adj: Vec<Vec<(usize, f64)>>,
    degree: Vec<f64>,
    total: f64,
}

impl Graph {
    fn new(nodes: Vec<AccountId>, edges: &BTreeMap<(AccountId, AccountId), f64>) -> Result<Self> {
        let pos: HashMap<AccountId, usize> = nodes.iter().enumerate().map(|(i, &a)| (a, i)).collect();
        let mut adj = vec![Vec::new(); nodes.len()];
        let mut degree = vec![0.0; nodes.len()];
        let mut total = 0.0;
        for (&(a, b), &w) in edges {
            let (Some(&i), Some(&j)) = (pos.get(&a), pos.get(&b)) else {
                return Err(Error::arg(format!("edge {a}-{b} references an unknown node")));
            };
            adj[i].push((j, w));
            adj[j].push((i, w));
            degree[i] += w;
            degree[j] += w;
            total += w;
        }
        Ok(Graph {
            nodes,
            adj,
            degree,
            total,
        })
    }

    /// Greedy agglomeration; returns a community label per node.
    fn agglomerate(&self, gamma: f64) -> Vec<usize> {
        let n = self.nodes.len();
        let two_w = 2.0 * self.total;
        let mut links: Vec<HashMap<usize, f64>> = self
            .adj
            .iter()
            .map(|row| row.iter().copied().collect())
            .collect();
        let mut deg = self.degree.clone();
        let mut alive = vec![true; n];
        let mut version = vec![0u32; n];
        let mut parent: Vec<usize> = (0..n).collect();
        // gains scaled by 2W², exact for integer weights at γ = 1
        let gain = |w: f64, di: f64, dj: f64| two_w * w - gamma * di * dj;

        let mut heap = BinaryHeap::new();
        for i in 0..n {
            for (&j, &w) in &links[i] {
                if i < j {
                    heap.push(Candidate {
                        gain: gain(w, deg[i], deg[j]),
                        lo: i,
                        hi: j,
                        versions: (0, 0),
                    });
                }
            }
        }

        while let Some(c) = heap.pop() {
            if !(alive[c.lo] && alive[c.hi] && (version[c.lo], version[c.hi]) == c.versions) {
                continue;
            }
            if c.gain <= 0.0 {
                break;
            }
            let (keep, gone) = (c.lo, c.hi);
            let moved = std::mem::take(&mut links[gone]);
            for (k, w) in moved {
                if k == keep {
                    continue;
                }
                *links[keep].entry(k).or_insert(0.0) += w;
                let row = &mut links[k];
                row.remove(&gone);
                *row.entry(keep).or_insert(0.0) += w;
            }
            links[keep].remove(&gone);
            deg[keep] += deg[gone];
            alive[gone] = false;
            parent[gone] = keep;
            version[keep] += 1;
            for (&k, &w) in &links[keep] {
                let (lo, hi) = (keep.min(k), keep.max(k));
                heap.push(Candidate {
                    gain: gain(w, deg[keep], deg[k]),
                    lo,
                    hi,
                    versions: (version[lo], version[hi]),
                });
            }
        }

        (0..n)
            .map(|mut i| {
                while parent[i] != i {
                    i = parent[i];
                }
                i
            })
            .collect()
    }

    /// Single-node moves to neighbouring communities while modularity strictly
    /// increases.
    fn refine(&self, labels: &mut [usize], gamma: f64, seed: u64) {
        let n = self.nodes.len();
        let two_w = 2.0 * self.total;
        let mut comm_deg: HashMap<usize, f64> = HashMap::new();
        for i in 0..n {
            *comm_deg.entry(labels[i]).or_insert(0.0) += self.degree[i];
        }
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..64 {
            order.shuffle(&mut rng);
            let mut moved = false;
            for &i in &order {
                let k = self.degree[i];
                if k == 0.0 {
                    continue;
                }
                let own = labels[i];
                let mut to: BTreeMap<usize, f64> = BTreeMap::new();
                for &(j, w) in &self.adj[i] {
                    *to.entry(labels[j]).or_insert(0.0) += w;
                }
                let w_own = to.get(&own).copied().unwrap_or(0.0);
                let d_own = comm_deg[&own] - k;
                // ΔQ scaled by 2W²
                let mut best: Option<(f64, usize)> = None;
                for (&c, &w_c) in to.iter().filter(|(&c, _)| c != own) {
                    let g = two_w * (w_c - w_own) - gamma * k * (comm_deg[&c] - d_own);
                    if g > 1e-9 && best.is_none_or(|(bg, _)| g > bg) {
                        best = Some((g, c));
                    }
                }
                if let Some((_, c)) = best {
                    *comm_deg.get_mut(&own).unwrap() -= k;
                    *comm_deg.get_mut(&c).unwrap() += k;
                    labels[i] = c;
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }
    }

    /// Splits every community into its connected parts and numbers them by their
    /// smallest node index.
    fn connected_relabel(&self, labels: &[usize]) -> Vec<CommunityId> {
        let n = self.nodes.len();
        let mut out = vec![CommunityId::MAX; n];
        let mut next: CommunityId = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if out[start] != CommunityId::MAX {
                continue;
            }
            out[start] = next;
            stack.push(start);
            while let Some(i) = stack.pop() {
                for &(j, _) in &self.adj[i] {
                    if out[j] == CommunityId::MAX && labels[j] == labels[start] {
                        out[j] = next;
                        stack.push(j);
                    }
                }
            }
            next += 1;
        }
        out
    }
}

/// Detects communities on an undirected graph. Every listed node is assigned;
/// nodes without edges become singletons. Edge endpoints must be listed nodes.
pub fn detect(
    nodes: impl IntoIterator<Item = AccountId>,
    edges: impl IntoIterator<Item = (AccountId, AccountId, f64)>,
    config: &CommunityConfig,
) -> Result<CommunityAssignment> {
    if !(config.resolution.is_finite() && config.resolution > 0.0) {
        return Err(Error::arg(format!(
            "resolution {} must be positive",
            config.resolution
        )));
    }
    let mut nodes: Vec<AccountId> = nodes.into_iter().collect();
    nodes.sort_unstable();
    nodes.dedup();
    let edges = normalize_edges(edges, config.weighted)?;
    let graph = Graph::new(nodes, &edges)?;

    let mut labels = graph.agglomerate(config.resolution);
    if config.refine && graph.total > 0.0 {
        graph.refine(&mut labels, config.resolution, config.seed);
    }
    let ids = graph.connected_relabel(&labels);
    let membership: BTreeMap<AccountId, CommunityId> =
        graph.nodes.iter().copied().zip(ids).collect();
    Ok(CommunityAssignment {
        modularity: modularity(&edges, &membership, config.resolution),
        membership,
        config: *config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: u64) -> Vec<AccountId> {
        (0..n).map(AccountId).collect()
    }

    fn e(a: u64, b: u64, w: f64) -> (AccountId, AccountId, f64) {
        (AccountId(a), AccountId(b), w)
    }

    fn two_cliques() -> Vec<(AccountId, AccountId, f64)> {
        let mut edges = Vec::new();
        for base in [0, 5] {
            for i in 0..5 {
                for j in i + 1..5 {
                    edges.push(e(base + i, base + j, 1.0));
                }
            }
        }
        edges.push(e(4, 5, 1.0));
        edges
    }

    /// Best 2-partition by exhaustive enumeration (node 0 fixed in block 0).
    fn best_bipartition(n: u64, edges: &[(AccountId, AccountId, f64)]) -> (f64, Vec<u32>) {
        let norm = normalize_edges(edges.iter().copied(), true).unwrap();
        let mut best = (f64::NEG_INFINITY, Vec::new());
        for mask in 0u32..(1 << (n - 1)) {
            let labels: Vec<u32> = (0..n).map(|i| if i == 0 { 0 } else { (mask >> (i - 1)) & 1 }).collect();
            let m: BTreeMap<_, _> = ids(n).into_iter().zip(labels.iter().copied()).collect();
            let q = modularity(&norm, &m, 1.0);
            if q > best.0 + 1e-12 {
                best = (q, labels);
            }
        }
        best
    }

    #[test]
    fn two_cliques_match_brute_force() {
        let edges = two_cliques();
        let (q_best, labels) = best_bipartition(10, &edges);
        assert_eq!(labels, vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
        let a = detect(ids(10), edges, &CommunityConfig::default()).unwrap();
        let got: Vec<u32> = a.membership.values().copied().collect();
        assert_eq!(got, labels);
        assert!((a.modularity - q_best).abs() < 1e-12);
    }

    #[test]
    fn planted_two_block_graph_on_twelve_nodes() {
        // two blocks of six: dense inside, two light bridges
        let mut edges = Vec::new();
        for base in [0, 6] {
            for i in 0..6 {
                for j in i + 1..6 {
                    if (i + j) % 4 != 0 {
                        edges.push(e(base + i, base + j, 2.0));
                    }
                }
            }
        }
        edges.push(e(0, 6, 1.0));
        edges.push(e(3, 9, 1.0));
        let (_, labels) = best_bipartition(12, &edges);
        let a = detect(ids(12), edges, &CommunityConfig::default()).unwrap();
        assert_eq!(a.membership.values().copied().collect::<Vec<_>>(), labels);
    }

    #[test]
    fn single_edge_is_one_community() {
        let a = detect(ids(2), [e(0, 1, 3.0)], &CommunityConfig::default()).unwrap();
        assert_eq!(a.community_count(), 1);
        assert_eq!(a.modularity, 0.0);
    }

    #[test]
    fn empty_graph_gives_empty_assignment() {
        let a = detect(Vec::new(), Vec::new(), &CommunityConfig::default()).unwrap();
        assert!(a.membership.is_empty());
        assert_eq!(a.community_count(), 0);
    }

    #[test]
    fn isolated_nodes_are_singletons() {
        let a = detect(ids(4), [e(0, 1, 1.0)], &CommunityConfig::default()).unwrap();
        assert_eq!(a.membership.values().copied().collect::<Vec<_>>(), vec![0, 0, 1, 2]);
    }

    #[test]
    fn ids_follow_smallest_member() {
        let mut edges = two_cliques();
        for x in edges.iter_mut() {
            // relabel so the second clique holds the smallest ids
            x.0 = AccountId((x.0 .0 + 5) % 10);
            x.1 = AccountId((x.1 .0 + 5) % 10);
        }
        let a = detect(ids(10), edges, &CommunityConfig::default()).unwrap();
        assert_eq!(a.get(AccountId(0)), Some(0));
        assert_eq!(a.communities()[0], ids(5));
    }

    #[test]
    fn bad_inputs_rejected() {
        let cfg = CommunityConfig::default();
        assert!(detect(ids(2), [e(0, 0, 1.0)], &cfg).is_err());
        assert!(detect(ids(2), [e(0, 1, 0.0)], &cfg).is_err());
        assert!(detect(ids(2), [e(0, 7, 1.0)], &cfg).is_err());
        let cfg = CommunityConfig {
            resolution: 0.0,
            ..cfg
        };
        assert!(detect(ids(2), [e(0, 1, 1.0)], &cfg).is_err());
    }

    #[test]
    fn unweighted_mode_ignores_weights() {
        let cfg = CommunityConfig {
            weighted: false,
            ..Default::default()
        };
        let heavy = detect(ids(3), [e(0, 1, 50.0), e(1, 2, 1.0)], &cfg).unwrap();
        let flat = detect(ids(3), [e(0, 1, 1.0), e(1, 2, 1.0)], &cfg).unwrap();
        assert_eq!(heavy, flat);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_edges() -> impl Strategy<Value = Vec<(AccountId, AccountId, f64)>> {
            proptest::collection::vec((0u64..25, 0u64..25, 1u32..5), 0..70).prop_map(|v| {
                v.into_iter()
                    .filter(|(a, b, _)| a != b)
                    .map(|(a, b, w)| e(a, b, f64::from(w)))
                    .collect()
            })
        }

        fn component_of(edges: &[(AccountId, AccountId, f64)], n: u64) -> Vec<u64> {
            let mut p: Vec<u64> = (0..n).collect();
            fn find(p: &mut [u64], x: u64) -> u64 {
                let mut r = x;
                while p[r as usize] != r {
                    r = p[r as usize];
                }
                r
            }
            for &(a, b, _) in edges {
                let (ra, rb) = (find(&mut p, a.0), find(&mut p, b.0));
                p[ra.max(rb) as usize] = ra.min(rb);
            }
            (0..n).map(|x| find(&mut p, x)).collect()
        }

        proptest! {
            #[test]
            fn invariants(edges in arb_edges(), seed in 0u64..4) {
                let cfg = CommunityConfig { seed, ..Default::default() };
                let a = detect(ids(25), edges.clone(), &cfg).unwrap();
                // dense ids, every node assigned
                prop_assert_eq!(a.membership.len(), 25);
                let k = a.community_count() as u32;
                prop_assert!(a.membership.values().all(|&c| c < k));
                // seeded determinism
                prop_assert_eq!(&detect(ids(25), edges.clone(), &cfg).unwrap(), &a);
                // never worse than singletons
                let norm = normalize_edges(edges.iter().copied(), true).unwrap();
                let singles: BTreeMap<_, _> = ids(25).into_iter().zip(0u32..).collect();
                prop_assert!(a.modularity >= modularity(&norm, &singles, 1.0) - 1e-12);
                // communities never span components
                let comp = component_of(&edges, 25);
                for (x, cx) in &a.membership {
                    for (y, cy) in &a.membership {
                        if cx == cy {
                            prop_assert_eq!(comp[x.0 as usize], comp[y.0 as usize]);
                        }
                    }
                }
            }
        }
    }
}
