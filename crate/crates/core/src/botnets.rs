//! Botnets: communities of the merged multi-period copy graph, their projection
//! onto each period and their evolution between consecutive periods.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::community::{self, CommunityAssignment, CommunityConfig, CommunityId};
use crate::copygraph::{CopyGraph, NodeStats};
use crate::corpus::AccountId;
use crate::error::{Error, Result};
use crate::tsv::read_rows;

/// Union of per-period graphs: edge weights, tweet totals and copied counts add up.
/// A node total stays unknown only when it is unknown in every input.
pub fn merge_graphs(graphs: &[CopyGraph]) -> Result<CopyGraph> {
    let mut out = CopyGraph::default();
    for g in graphs {
        for p in &g.periods {
            if let Some(q) = out.periods.iter().find(|q| q.overlaps(p)) {
                return Err(Error::arg(format!("periods {q} and {p} overlap")));
            }
            out.periods.push(p.clone());
        }
        for (&id, s) in &g.nodes {
            let merged = out.nodes.entry(id).or_insert(NodeStats {
                total_tweets: None,
                copied_count: 0,
            });
            merged.total_tweets = match (merged.total_tweets, s.total_tweets) {
                (Some(a), Some(b)) => Some(a + b),
                (a, b) => a.or(b),
            };
            merged.copied_count += s.copied_count;
        }
        for (&e, &w) in &g.edges {
            *out.edges.entry(e).or_insert(0) += w;
        }
    }
    out.periods.sort_by_key(|p| p.start);
    Ok(out)
}

/// Communities on the undirected weighted projection of `g`.
pub fn detect_communities(g: &CopyGraph, config: &CommunityConfig) -> Result<CommunityAssignment> {
    community::detect(
        g.nodes.keys().copied(),
        g.undirected_weights()
            .into_iter()
            .map(|((a, b), w)| (a, b, w as f64)),
        config,
    )
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodProjection {
    pub label: String,
    pub membership: BTreeMap<AccountId, CommunityId>,
}

/// Restricts the total assignment to the nodes of one period graph.
pub fn project_communities(total: &CommunityAssignment, period: &CopyGraph) -> Result<PeriodProjection> {
    let mut membership = BTreeMap::new();
    for &id in period.nodes.keys() {
        let c = total.get(id).ok_or(Error::MissingAccount(id))?;
        membership.insert(id, c);
    }
    Ok(PeriodProjection {
        label: period_label(period),
        membership,
    })
}

fn period_label(g: &CopyGraph) -> String {
    g.periods
        .iter()
        .map(|p| p.label.as_str())
        .collect::<Vec<_>>()
        .join("+")
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthMode {
    /// Size change in members.
    #[default]
    Raw,
    /// Size change as a fraction of the previous size.
    Relative,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    pub mode: GrowthMode,
    /// A change must exceed this to count as growth or shrinkage.
    pub threshold: f64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            mode: GrowthMode::Raw,
            threshold: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Born,
    Active,
    Grew,
    Shrank,
    Disappeared,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Born => "born",
            Status::Active => "active",
            Status::Grew => "grew",
            Status::Shrank => "shrank",
            Status::Disappeared => "disappeared",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodSlice {
    pub period: String,
    pub members: Vec<AccountId>,
    /// Sum of edge weights with both ends in the community.
    pub internal_weight: u64,
    pub size_delta: i64,
    /// Jaccard overlap with the previous period's members; `None` in the first
    /// period and while the community is absent in both.
    pub overlap: Option<f64>,
    /// Transition from the previous period; `None` in the first period and while
    /// absent in both.
    pub status: Option<Status>,
}

impl PeriodSlice {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BotnetTimeline {
    pub periods: Vec<String>,
    /// One slice per period, in period order.
    pub communities: BTreeMap<CommunityId, Vec<PeriodSlice>>,
}

fn classify(prev: usize, cur: usize, cfg: &EvolutionConfig) -> Option<Status> {
    match (prev, cur) {
        (0, 0) => None,
        (0, _) => Some(Status::Born),
        (_, 0) => Some(Status::Disappeared),
        (p, c) => {
            let delta = c as f64 - p as f64;
            let change = match cfg.mode {
                GrowthMode::Raw => delta,
                GrowthMode::Relative => delta / p as f64,
            };
            Some(if change > cfg.threshold {
                Status::Grew
            } else if change < -cfg.threshold {
                Status::Shrank
            } else {
                Status::Active
            })
        }
    }
}

/// Per-community member sets, sizes and transition labels across periods.
/// `projections[k]` must come from `graphs[k]`.
pub fn evolution_metrics(
    projections: &[PeriodProjection],
    graphs: &[CopyGraph],
    config: &EvolutionConfig,
) -> Result<BotnetTimeline> {
    if projections.len() < 2 {
        return Err(Error::arg("evolution needs at least two periods"));
    }
    if projections.len() != graphs.len() {
        return Err(Error::arg(format!(
            "{} projections for {} graphs",
            projections.len(),
            graphs.len()
        )));
    }
    if !(config.threshold >= 0.0) {
        return Err(Error::arg("growth threshold must be non-negative"));
    }
    let ids: BTreeSet<CommunityId> = projections
        .iter()
        .flat_map(|p| p.membership.values().copied())
        .collect();

    let mut communities = BTreeMap::new();
    for &c in &ids {
        let mut slices: Vec<PeriodSlice> = Vec::with_capacity(projections.len());
        let mut prev: Option<BTreeSet<AccountId>> = None;
        for (proj, g) in projections.iter().zip(graphs) {
            let members: BTreeSet<AccountId> = proj
                .membership
                .iter()
                .filter(|&(_, &m)| m == c)
                .map(|(&a, _)| a)
                .collect();
            let internal_weight = g
                .edges
                .iter()
                .filter(|((a, b), _)| members.contains(a) && members.contains(b))
                .map(|(_, &w)| w)
                .sum();
            let (overlap, status, size_delta) = match &prev {
                None => (None, None, 0),
                Some(p) => {
                    let status = classify(p.len(), members.len(), config);
                    let overlap = status.map(|_| {
                        let inter = p.intersection(&members).count();
                        let union = p.len() + members.len() - inter;
                        inter as f64 / union as f64
                    });
                    (overlap, status, members.len() as i64 - p.len() as i64)
                }
            };
            slices.push(PeriodSlice {
                period: proj.label.clone(),
                members: members.iter().copied().collect(),
                internal_weight,
                size_delta,
                overlap,
                status,
            });
            prev = Some(members);
        }
        communities.insert(c, slices);
    }
    Ok(BotnetTimeline {
        periods: projections.iter().map(|p| p.label.clone()).collect(),
        communities,
    })
}

/// `account_id\tcommunity_id` rows.
pub fn write_assignment(
    membership: &BTreeMap<AccountId, CommunityId>,
    out: &mut impl Write,
) -> std::io::Result<()> {
    writeln!(out, "account_id\tcommunity_id")?;
    for (a, c) in membership {
        writeln!(out, "{a}\t{c}")?;
    }
    Ok(())
}

/// Reads rows written by [`write_assignment`].
pub fn read_assignment(path: &Path) -> Result<BTreeMap<AccountId, CommunityId>> {
    let mut out = BTreeMap::new();
    for row in read_rows(path, 0)? {
        let parsed = match row.fields.as_slice() {
            [a, c] => a.parse::<AccountId>().ok().zip(c.parse::<CommunityId>().ok()),
            _ => None,
        };
        let (a, c) = parsed.ok_or_else(|| Error::Malformed {
            path: path.to_path_buf(),
            reason: format!("line {}: expected account_id and community_id", row.line),
        })?;
        out.insert(a, c);
    }
    Ok(out)
}

/// `community_id\tperiod\tsize\tstatus\toverlap\tinternal_weight` rows; `-` marks
/// an undefined status or overlap.
pub fn write_timeline(t: &BotnetTimeline, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "community_id\tperiod\tsize\tstatus\toverlap\tinternal_weight")?;
    for (c, slices) in &t.communities {
        for s in slices {
            let status = s.status.map_or("-", Status::as_str);
            let overlap = s.overlap.map_or("-".to_string(), |o| format!("{o:.6}"));
            writeln!(
                out,
                "{c}\t{}\t{}\t{status}\t{overlap}\t{}",
                s.period,
                s.size(),
                s.internal_weight
            )?;
        }
    }
    Ok(())
}
