//! Interaction-layer graphs, their clusters, and exemplar/bot composition of
//! each cluster.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::community::{self, CommunityAssignment, CommunityConfig, CommunityId};
use crate::corpus::AccountId;
use crate::error::{Error, Result};
use crate::tsv::read_rows;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Follow,
    Retweet,
    Favorite,
    Mention,
    Reply,
    Quote,
    List,
}

impl LayerKind {
    pub const ALL: [LayerKind; 7] = [
        LayerKind::Follow,
        LayerKind::Retweet,
        LayerKind::Favorite,
        LayerKind::Mention,
        LayerKind::Reply,
        LayerKind::Quote,
        LayerKind::List,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LayerKind::Follow => "follow",
            LayerKind::Retweet => "retweet",
            LayerKind::Favorite => "favorite",
            LayerKind::Mention => "mention",
            LayerKind::Reply => "reply",
            LayerKind::Quote => "quote",
            LayerKind::List => "list",
        }
    }

    pub fn directed(self) -> bool {
        self != LayerKind::List
    }

    pub fn weighted(self) -> bool {
        self != LayerKind::Follow
    }

    /// Expected columns per input row.
    pub fn arity(self) -> usize {
        match self {
            LayerKind::Follow | LayerKind::List => 2,
            _ => 3,
        }
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LayerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        LayerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s || format!("{}s", k.as_str()) == s)
            .ok_or_else(|| Error::arg(format!("unknown layer kind {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerGraph {
    pub kind: LayerKind,
    pub nodes: BTreeSet<AccountId>,
    /// Directed kinds key by `(src, dst)`; the list layer keys by `(low, high)`.
    /// Follow edges all have weight 1.
    pub edges: BTreeMap<(AccountId, AccountId), u64>,
}

impl LayerGraph {
    pub fn new(kind: LayerKind) -> Self {
        LayerGraph {
            kind,
            nodes: BTreeSet::new(),
            edges: BTreeMap::new(),
        }
    }

    /// Adds `w` to an edge, collapsing direction for undirected kinds.
    pub fn add_edge(&mut self, a: AccountId, b: AccountId, w: u64) {
        let key = if self.kind.directed() {
            (a, b)
        } else {
            (a.min(b), a.max(b))
        };
        let weight = self.edges.entry(key).or_insert(0);
        *weight = if self.kind.weighted() { *weight + w } else { 1 };
        self.nodes.insert(a);
        self.nodes.insert(b);
    }

    /// Builds the list layer from `(account, list)` memberships: accounts sharing
    /// `n` lists are joined by an edge of weight `n`.
    pub fn from_memberships<L: Ord>(memberships: impl IntoIterator<Item = (AccountId, L)>) -> Self {
        let mut lists: BTreeMap<L, BTreeSet<AccountId>> = BTreeMap::new();
        let mut g = LayerGraph::new(LayerKind::List);
        for (a, l) in memberships {
            lists.entry(l).or_default().insert(a);
            g.nodes.insert(a);
        }
        for members in lists.values() {
            let members: Vec<AccountId> = members.iter().copied().collect();
            for (i, &a) in members.iter().enumerate() {
                for &b in &members[i + 1..] {
                    *g.edges.entry((a, b)).or_insert(0) += 1;
                }
            }
        }
        g
    }

    fn undirected(&self) -> impl Iterator<Item = (AccountId, AccountId, f64)> + '_ {
        self.edges.iter().map(|(&(a, b), &w)| (a, b, w as f64))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedRow {
    pub line: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerLoad {
    pub graph: LayerGraph,
    pub skipped: Vec<SkippedRow>,
}

/// Reads a layer edge file (`src\tdst[\tweight]`) or, for the list layer, a
/// membership file (`account_id\tlist_id`). The first data row fixes the arity;
/// a mismatch with the kind is fatal, later bad rows are skipped and reported.
pub fn load_layer(path: &Path, kind: LayerKind) -> Result<LayerLoad> {
    let rows = read_rows(path, 0)?;
    let mut skipped = Vec::new();
    if let Some(first) = rows.first() {
        if first.fields.len() != kind.arity() {
            return Err(Error::Malformed {
                path: path.to_path_buf(),
                reason: format!(
                    "{kind} layer expects {} columns, line {} has {}",
                    kind.arity(),
                    first.line,
                    first.fields.len()
                ),
            });
        }
    }
    let mut skip = |line: usize, reason: String| skipped.push(SkippedRow { line, reason });

    if kind == LayerKind::List {
        let mut memberships = Vec::new();
        for row in &rows {
            match (row.fields.len(), row.fields[0].parse::<AccountId>()) {
                (2, Ok(a)) if !row.fields[1].is_empty() => {
                    memberships.push((a, row.fields[1].clone()))
                }
                (2, _) => skip(row.line, "bad account id or empty list id".into()),
                (n, _) => skip(row.line, format!("expected 2 columns, found {n}")),
            }
        }
        return Ok(LayerLoad {
            graph: LayerGraph::from_memberships(memberships),
            skipped,
        });
    }

    let mut g = LayerGraph::new(kind);
    for row in &rows {
        if row.fields.len() != kind.arity() {
            skip(
                row.line,
                format!("expected {} columns, found {}", kind.arity(), row.fields.len()),
            );
            continue;
        }
        let (a, b) = match (row.fields[0].parse::<AccountId>(), row.fields[1].parse::<AccountId>()) {
            (Ok(a), Ok(b)) => (a, b),
            _ => {
                skip(row.line, "bad account id".into());
                continue;
            }
        };
        if a == b {
            skip(row.line, format!("self-loop on {a}"));
            continue;
        }
        let w = if kind.weighted() {
            match row.fields[2].parse::<u64>() {
                Ok(w) if w > 0 => w,
                _ => {
                    skip(row.line, format!("bad weight {:?}", row.fields[2]));
                    continue;
                }
            }
        } else {
            1
        };
        g.add_edge(a, b, w);
    }
    Ok(LayerLoad { graph: g, skipped })
}

/// Writes a directed or weighted layer in the format [`load_layer`] reads. The
/// list layer has no edge-file form; write its memberships instead.
pub fn write_layer(g: &LayerGraph, mut out: impl std::io::Write) -> std::io::Result<()> {
    assert!(g.kind != LayerKind::List, "list layers are stored as memberships");
    if g.kind.weighted() {
        writeln!(out, "source_id\ttarget_id\tweight")?;
        for (&(a, b), w) in &g.edges {
            writeln!(out, "{a}\t{b}\t{w}")?;
        }
    } else {
        writeln!(out, "source_id\ttarget_id")?;
        for &(a, b) in g.edges.keys() {
            writeln!(out, "{a}\t{b}")?;
        }
    }
    Ok(())
}

/// Clusters a layer with the shared community engine on its undirected projection.
pub fn cluster_layer(g: &LayerGraph, config: &CommunityConfig) -> Result<CommunityAssignment> {
    let mut merged: BTreeMap<(AccountId, AccountId), f64> = BTreeMap::new();
    for (a, b, w) in g.undirected() {
        *merged.entry((a.min(b), a.max(b))).or_insert(0.0) += w;
    }
    community::detect(
        g.nodes.iter().copied(),
        merged.into_iter().map(|((a, b), w)| (a, b, w)),
        config,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Politics,
    Celebrities,
    NewsMedia,
    Brands,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Politics,
        Category::Celebrities,
        Category::NewsMedia,
        Category::Brands,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Politics => "politics",
            Category::Celebrities => "celebrities",
            Category::NewsMedia => "news_media",
            Category::Brands => "brands",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
            .collect();
        match norm.as_str() {
            "politics" | "political" | "politician" | "politicians" => Ok(Category::Politics),
            "celebrities" | "celebrity" => Ok(Category::Celebrities),
            "news_media" | "news___media" | "news_and_media" | "news" | "media" => {
                Ok(Category::NewsMedia)
            }
            "brands" | "brand" => Ok(Category::Brands),
            _ => Err(Error::arg(format!("unknown exemplar category {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExemplarSet {
    pub categories: BTreeMap<Category, BTreeSet<AccountId>>,
}

impl ExemplarSet {
    pub fn category_of(&self, a: AccountId) -> Option<Category> {
        self.categories
            .iter()
            .find(|(_, set)| set.contains(&a))
            .map(|(&c, _)| c)
    }

    pub fn len(&self) -> usize {
        self.categories.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExemplarOverlap {
    pub account: AccountId,
    pub kept: Category,
    pub dropped: Category,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExemplarLoad {
    pub set: ExemplarSet,
    /// Accounts listed under more than one category; the first listing wins.
    pub overlaps: Vec<ExemplarOverlap>,
    pub skipped: Vec<SkippedRow>,
}

/// Reads `category\taccount_id` rows.
pub fn load_exemplars(path: &Path) -> Result<ExemplarLoad> {
    let mut out = ExemplarLoad::default();
    let mut seen: BTreeMap<AccountId, Category> = BTreeMap::new();
    for row in read_rows(path, 1)? {
        let parsed = match row.fields.as_slice() {
            [c, a] => c.parse::<Category>().and_then(|c| {
                a.parse::<AccountId>()
                    .map(|a| (c, a))
                    .map_err(|_| Error::arg(format!("bad account id {a:?}")))
            }),
            f => Err(Error::arg(format!("expected 2 columns, found {}", f.len()))),
        };
        match parsed {
            Ok((c, a)) => match seen.get(&a) {
                Some(&kept) if kept != c => out.overlaps.push(ExemplarOverlap {
                    account: a,
                    kept,
                    dropped: c,
                }),
                Some(_) => {}
                None => {
                    seen.insert(a, c);
                    out.set.categories.entry(c).or_default().insert(a);
                }
            },
            Err(e) => out.skipped.push(SkippedRow {
                line: row.line,
                reason: e.to_string(),
            }),
        }
    }
    for o in &out.overlaps {
        log::warn!(
            "exemplar {} listed as {} and {}; keeping {}",
            o.account,
            o.kept,
            o.dropped,
            o.kept
        );
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterTally {
    pub cluster: CommunityId,
    pub size: usize,
    pub bots: usize,
    pub exemplars: BTreeMap<Category, usize>,
    /// Holds at least one bot and at least one exemplar.
    pub interesting: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterReport {
    /// Every cluster, by id.
    pub clusters: Vec<ClusterTally>,
    /// Up to `k` interesting clusters, most bots first, ties by smaller id.
    pub top: Vec<CommunityId>,
}

pub fn classify_clusters(
    membership: &BTreeMap<AccountId, CommunityId>,
    exemplars: &ExemplarSet,
    bots: &BTreeSet<AccountId>,
    k: usize,
) -> ClusterReport {
    let mut tallies: BTreeMap<CommunityId, ClusterTally> = BTreeMap::new();
    for (&a, &c) in membership {
        let t = tallies.entry(c).or_insert_with(|| ClusterTally {
            cluster: c,
            size: 0,
            bots: 0,
            exemplars: Category::ALL.iter().map(|&cat| (cat, 0)).collect(),
            interesting: false,
        });
        t.size += 1;
        if bots.contains(&a) {
            t.bots += 1;
        }
        if let Some(cat) = exemplars.category_of(a) {
            *t.exemplars.get_mut(&cat).expect("all categories present") += 1;
        }
    }
    let clusters: Vec<ClusterTally> = tallies
        .into_values()
        .map(|mut t| {
            t.interesting = t.bots > 0 && t.exemplars.values().any(|&n| n > 0);
            t
        })
        .collect();
    let mut ranked: Vec<&ClusterTally> = clusters.iter().filter(|t| t.interesting).collect();
    ranked.sort_by(|a, b| b.bots.cmp(&a.bots).then(a.cluster.cmp(&b.cluster)));
    let top = ranked.iter().take(k).map(|t| t.cluster).collect();
    ClusterReport { clusters, top }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Engagement {
    pub kind: LayerKind,
    pub present: usize,
    pub bots: usize,
    pub fraction: f64,
}

/// Share of `bots` that appear as nodes of each layer.
pub fn bot_engagement(layers: &[LayerGraph], bots: &BTreeSet<AccountId>) -> Result<Vec<Engagement>> {
    if bots.is_empty() {
        return Err(Error::arg("bot engagement is undefined for an empty bot set"));
    }
    Ok(layers
        .iter()
        .map(|g| {
            let present = bots.iter().filter(|b| g.nodes.contains(b)).count();
            Engagement {
                kind: g.kind,
                present,
                bots: bots.len(),
                fraction: present as f64 / bots.len() as f64,
            }
        })
        .collect())
}
