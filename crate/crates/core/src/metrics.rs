//! Node metrics: reference counts, decision thresholds, source and target
//! distributions, overrepresentation among co-reference neighbours, and
//! rank comparisons across metrics.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{BaseNetwork, LevelTag, NodeId};
use crate::error::{Error, Result};
use crate::perspective::{NetworkSpace, Perspective, Side};
use crate::projection::{GroupBy, ProjectedGraph};
use crate::scalar::Scalar;

pub const TIE_RULE: &str = "value descending, then id ascending";

#[derive(Debug, Clone, PartialEq)]
pub struct RankRow<M> {
    pub id: NodeId,
    pub label: String,
    pub value: M,
    /// 1-based position in the table.
    pub rank: usize,
}

/// Nodes ordered by a metric. Ties are broken by id, so ranks are a total,
/// gap-free order.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTable<M = crate::Mass> {
    pub metric: String,
    pub tie_rule: &'static str,
    rows: Vec<RankRow<M>>,
}

impl<M: Scalar> RankTable<M> {
    pub fn new(metric: impl Into<String>, values: impl IntoIterator<Item = (NodeId, String, M)>) -> Self {
        let mut rows: Vec<RankRow<M>> = values
            .into_iter()
            .map(|(id, label, value)| RankRow { id, label, value, rank: 0 })
            .collect();
        rows.sort_by(|a, b| {
            b.value
                .partial_cmp(&a.value)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.id.cmp(&b.id))
        });
        for (i, row) in rows.iter_mut().enumerate() {
            row.rank = i + 1;
        }
        RankTable { metric: metric.into(), tie_rule: TIE_RULE, rows }
    }

    pub fn rows(&self) -> &[RankRow<M>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn value(&self, id: &str) -> Option<&M> {
        self.rows.iter().find(|r| r.id.as_str() == id).map(|r| &r.value)
    }

    pub fn rank(&self, id: &str) -> Option<usize> {
        self.rows.iter().find(|r| r.id.as_str() == id).map(|r| r.rank)
    }

    pub fn universe(&self) -> BTreeSet<&NodeId> {
        self.rows.iter().map(|r| &r.id).collect()
    }

    /// Fills labels from the corpus.
    pub fn with_labels(mut self, base: &BaseNetwork) -> Self {
        for row in &mut self.rows {
            if let Some(n) = base.node(row.id.as_str()) {
                row.label = n.label.clone();
            }
        }
        self
    }
}

fn labelled(base: &BaseNetwork, id: &NodeId) -> (NodeId, String) {
    let label = base.node(id.as_str()).map(|n| n.label.clone()).unwrap_or_default();
    (id.clone(), label)
}

fn require_legislative(level: LevelTag) -> Result<()> {
    if level.is_legislative() {
        Ok(())
    } else {
        Err(Error::LevelMismatch { expected: "legislative", found: level })
    }
}

/// Total dynamically counted mass per legislative unit at `level`.
pub fn in_degree<M: Scalar>(base: &BaseNetwork, level: LevelTag) -> Result<RankTable<M>> {
    require_legislative(level)?;
    in_degree_in(&NetworkSpace::new(base), &Perspective::new(LevelTag::PARAGRAPH, level))
}

/// In-degree under a perspective's filters. Units with zero mass are absent.
pub fn in_degree_in<M: Scalar>(space: &NetworkSpace<'_, M>, p: &Perspective) -> Result<RankTable<M>> {
    let masses = space.filtered(p, LevelTag::COURT)?;
    let mut totals: BTreeMap<usize, M> = BTreeMap::new();
    for (_, l, m) in masses.iter() {
        *totals.entry(l).or_insert_with(M::zero) += m.clone();
    }
    let base = space.base();
    let leg = base.legislative();
    let values = totals.into_iter().filter(|(_, m)| *m > M::zero()).map(|(l, m)| {
        let (id, label) = labelled(base, leg.id(l));
        (id, label, m)
    });
    Ok(RankTable::new(format!("in_degree@{}", p.legislative_level), values))
}

/// D_{R≥k}: number of decisions whose mass toward the unit is at least `k`.
pub fn decisions_with_at_least<M: Scalar>(base: &BaseNetwork, level: LevelTag, k: u64) -> Result<RankTable<M>> {
    require_legislative(level)?;
    decisions_with_at_least_in(&NetworkSpace::new(base), &Perspective::new(LevelTag::PARAGRAPH, level), k)
}

/// D_{R≥k} under a perspective's filters, over the units that receive any
/// mass (so the universe matches [`in_degree_in`]).
pub fn decisions_with_at_least_in<M: Scalar>(space: &NetworkSpace<'_, M>, p: &Perspective, k: u64) -> Result<RankTable<M>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let masses = space.filtered(p, LevelTag::DECISION)?;
    let threshold = M::from_count(k);
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    for (_, l, m) in masses.iter() {
        if *m <= M::zero() {
            continue;
        }
        let c = counts.entry(l).or_insert(0);
        if *m >= threshold {
            *c += 1;
        }
    }
    let base = space.base();
    let leg = base.legislative();
    let values = counts.into_iter().map(|(l, c)| {
        let (id, label) = labelled(base, leg.id(l));
        (id, label, M::from_count(c))
    });
    Ok(RankTable::new(format!("decisions_with_at_least_{k}@{}", p.legislative_level), values))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShareNormalization {
    /// Share of all mass the focal unit receives.
    #[default]
    CorpusTotal,
    /// Mass toward the focal unit relative to the group's total outgoing mass.
    PerGroupTotal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Share<M> {
    pub mass: M,
    pub denominator: M,
    /// `None` when the denominator is zero.
    pub share: Option<M>,
}

fn share_of<M: Scalar>(mass: M, denominator: M) -> Share<M> {
    let share = (denominator > M::zero()).then(|| mass.clone() / denominator.clone());
    Share { mass, denominator, share }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceDistribution<M = crate::Mass> {
    pub focal: NodeId,
    pub group_by: GroupBy,
    pub normalization: ShareNormalization,
    /// Groups with positive mass toward the focal unit, by group key.
    pub groups: BTreeMap<String, Share<M>>,
}

/// Breaks down the mass a legislative unit receives by the group of the
/// citing paragraph (court, panel, or a court attribute).
pub fn source_distribution<M: Scalar>(
    space: &NetworkSpace<'_, M>,
    focal: &str,
    group_by: &GroupBy,
    normalization: ShareNormalization,
) -> Result<SourceDistribution<M>> {
    let base = space.base();
    let leg = base.legislative();
    let f = leg.idx(focal).ok_or_else(|| Error::NodeNotFound(focal.to_owned()))?;
    if let GroupBy::Level(level) = group_by {
        if !level.is_judicial() {
            return Err(Error::LevelMismatch { expected: "judicial", found: *level });
        }
    }
    let agg = space.aggregate(leg.level(f))?;
    let mut toward: BTreeMap<String, M> = BTreeMap::new();
    let mut outgoing: BTreeMap<String, M> = BTreeMap::new();
    let mut group_cache: BTreeMap<usize, String> = BTreeMap::new();
    for (q, l, m) in agg.iter() {
        let g = group_cache.entry(q).or_insert_with(|| group_by.key(base, q)).clone();
        if l == f {
            *toward.entry(g.clone()).or_insert_with(M::zero) += m.clone();
        }
        *outgoing.entry(g).or_insert_with(M::zero) += m.clone();
    }
    let total: M = toward.values().cloned().sum();
    let groups = toward
        .into_iter()
        .filter(|(_, m)| *m > M::zero())
        .map(|(g, m)| {
            let denom = match normalization {
                ShareNormalization::CorpusTotal => total.clone(),
                ShareNormalization::PerGroupTotal => outgoing[&g].clone(),
            };
            (g, share_of(m, denom))
        })
        .collect();
    Ok(SourceDistribution { focal: leg.id(f).clone(), group_by: group_by.clone(), normalization, groups })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetRow<M> {
    pub id: NodeId,
    pub level: LevelTag,
    pub direct: u64,
    pub share: Option<M>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetDistribution<M = crate::Mass> {
    pub focal: NodeId,
    pub total: u64,
    /// Subtree of the focal unit in preorder, focal first.
    pub rows: Vec<TargetRow<M>>,
}

/// How the focal unit's direct references (no broadcasting) spread over its
/// own substructure.
pub fn target_distribution<M: Scalar>(base: &BaseNetwork, focal: &str) -> Result<TargetDistribution<M>> {
    let leg = base.legislative();
    let f = leg.idx(focal).ok_or_else(|| Error::NodeNotFound(focal.to_owned()))?;
    let subtree = leg.descendants_inclusive(f);
    let mut direct: BTreeMap<usize, u64> = BTreeMap::new();
    for (_, t, m) in base.resolved_refs() {
        *direct.entry(t).or_insert(0) += m;
    }
    let total: u64 = subtree.iter().map(|n| direct.get(n).copied().unwrap_or(0)).sum();
    let rows = subtree
        .into_iter()
        .map(|n| {
            let d = direct.get(&n).copied().unwrap_or(0);
            TargetRow {
                id: leg.id(n).clone(),
                level: leg.level(n),
                direct: d,
                share: (total > 0).then(|| M::ratio(d, total)),
            }
        })
        .collect();
    Ok(TargetDistribution { focal: leg.id(f).clone(), total, rows })
}

/// For each node s: the fraction of connected nodes i for which s accounts
/// for at least `threshold` of i's co-reference weight.
///
/// The denominator counts nodes with at least one neighbour; isolated nodes
/// still appear in the table with score zero.
pub fn overrepresentation<M: Scalar>(g: &ProjectedGraph<M>, threshold: &M) -> Result<RankTable<M>> {
    if *threshold <= M::zero() || *threshold > M::one() {
        return Err(Error::InvalidArgument("threshold must lie in (0, 1]".into()));
    }
    if let Some(p) = g.provenance() {
        if p.side != Side::Legislative {
            return Err(Error::InvalidArgument("overrepresentation needs a legislative-side projection".into()));
        }
    }
    let adj = g.adjacency();
    let mut hits = vec![0u64; adj.len()];
    let mut connected = 0u64;
    for row in &adj {
        if row.is_empty() {
            continue;
        }
        connected += 1;
        let sum: M = row.iter().map(|(_, w)| w.clone()).sum();
        for (s, w) in row {
            if w.clone() / sum.clone() >= *threshold {
                hits[*s] += 1;
            }
        }
    }
    let values = g.nodes().iter().zip(hits).map(|(id, h)| {
        let score = if connected == 0 { M::zero() } else { M::ratio(h, connected) };
        (id.clone(), String::new(), score)
    });
    Ok(RankTable::new("overrepresentation", values))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow<M> {
    pub id: NodeId,
    pub label: String,
    /// Rank in each compared table, in table order.
    pub ranks: Vec<usize>,
    pub values: Vec<M>,
    /// Largest minus smallest rank.
    pub displacement: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankComparison<M = crate::Mass> {
    pub metrics: Vec<String>,
    pub top_n: usize,
    pub rows: Vec<ComparisonRow<M>>,
}

/// Union of the top-`top_n` nodes of every table, each with its rank in all
/// tables, ordered by rank in the first table.
pub fn rank_compare<M: Scalar>(tables: &[&RankTable<M>], top_n: usize) -> Result<RankComparison<M>> {
    if tables.len() < 2 {
        return Err(Error::InvalidArgument("rank comparison needs at least two tables".into()));
    }
    let universe = tables[0].universe();
    for t in &tables[1..] {
        if t.universe() != universe {
            return Err(Error::InvalidArgument(format!(
                "tables {} and {} rank different node sets",
                tables[0].metric, t.metric
            )));
        }
    }
    let selected: BTreeSet<&NodeId> = tables
        .iter()
        .flat_map(|t| t.rows.iter().take(top_n).map(|r| &r.id))
        .collect();
    let rows = tables[0]
        .rows
        .iter()
        .filter(|r| selected.contains(&r.id))
        .map(|r| {
            let found: Vec<&RankRow<M>> = tables
                .iter()
                .map(|t| t.rows.iter().find(|x| x.id == r.id).expect("universes are equal"))
                .collect();
            let ranks: Vec<usize> = found.iter().map(|x| x.rank).collect();
            let displacement = ranks.iter().max().unwrap() - ranks.iter().min().unwrap();
            ComparisonRow {
                id: r.id.clone(),
                label: r.label.clone(),
                values: found.iter().map(|x| x.value.clone()).collect(),
                ranks,
                displacement,
            }
        })
        .collect();
    Ok(RankComparison { metrics: tables.iter().map(|t| t.metric.clone()).collect(), top_n, rows })
}
