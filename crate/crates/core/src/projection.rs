//! One-mode projections and co-reference strength.
//!
//! A legislative-side projection links two legislative units when the same
//! witness unit (a decision, a paragraph, ...) references both. "References"
//! means positive dynamically counted mass, so a paragraph citing a
//! sub-section witnesses co-occurrence for the enclosing section.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{BaseNetwork, LevelTag, NodeId, NodeIdx};
use crate::counting::MassTable;
use crate::error::{Error, Result};
use crate::perspective::{NetworkSpace, Perspective, Side};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightingMode {
    /// Number of witness units referencing both endpoints.
    UnitCount,
    /// Σ over witness units of min(mass toward i, mass toward j).
    EventCount,
    /// Number of counting units (the perspective's judicial level) that
    /// contain at least `k` witness units referencing both endpoints.
    Combined,
}

/// How much a single witness unit contributes to a pair it co-references.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresenceRule {
    /// Contributes 1.
    #[default]
    Binary,
    /// Contributes min(mass toward i, mass toward j). Under `combined` this
    /// counts co-reference events toward `k` instead of qualifying units.
    Multiplicity,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WeightingSpec {
    /// Judicial rank of the co-occurrence witness.
    pub descriptive_rank: LevelTag,
    pub mode: WeightingMode,
    #[serde(default = "default_k")]
    pub k: u64,
    #[serde(default)]
    pub presence_rule: PresenceRule,
}

fn default_k() -> u64 {
    1
}

impl WeightingSpec {
    pub fn unit_count(descriptive_rank: LevelTag) -> Self {
        WeightingSpec { descriptive_rank, mode: WeightingMode::UnitCount, k: 1, presence_rule: PresenceRule::Binary }
    }

    pub fn event_count(descriptive_rank: LevelTag) -> Self {
        WeightingSpec { descriptive_rank, mode: WeightingMode::EventCount, k: 1, presence_rule: PresenceRule::Binary }
    }

    /// Paragraph witnesses counted per unit of the perspective's judicial level.
    pub fn combined(k: u64) -> Self {
        WeightingSpec {
            descriptive_rank: LevelTag::PARAGRAPH,
            mode: WeightingMode::Combined,
            k,
            presence_rule: PresenceRule::Binary,
        }
    }

    pub fn with_presence(mut self, rule: PresenceRule) -> Self {
        self.presence_rule = rule;
        self
    }

    /// Short stable name, used for output file names.
    pub fn slug(&self) -> String {
        let mode = match self.mode {
            WeightingMode::UnitCount => "unit",
            WeightingMode::EventCount => "event",
            WeightingMode::Combined => "combined",
        };
        let mut s = format!("{mode}_{}", self.descriptive_rank);
        if self.mode == WeightingMode::Combined {
            s.push_str(&format!("_k{}", self.k));
        }
        if self.presence_rule == PresenceRule::Multiplicity && self.mode != WeightingMode::EventCount {
            s.push_str("_mult");
        }
        s
    }

    fn check(&self, p: &Perspective, side: Side) -> Result<()> {
        if !self.descriptive_rank.is_judicial() {
            return Err(Error::LevelMismatch { expected: "judicial", found: self.descriptive_rank });
        }
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        match (side, self.mode) {
            (Side::Judicial, WeightingMode::Combined) => Err(Error::RankMismatch(
                "combined weighting is defined for legislative-side projections".into(),
            )),
            (Side::Judicial, _) => Ok(()),
            (Side::Legislative, WeightingMode::Combined) => {
                if self.descriptive_rank.rank() <= p.judicial_level.rank() {
                    return Err(Error::RankMismatch(format!(
                        "combined weighting needs a witness rank finer than the counting rank {}, got {}",
                        p.judicial_level, self.descriptive_rank
                    )));
                }
                Ok(())
            }
            (Side::Legislative, _) => {
                if self.descriptive_rank.rank() < p.judicial_level.rank() {
                    return Err(Error::RankMismatch(format!(
                        "witness rank {} is coarser than the perspective's {}",
                        self.descriptive_rank, p.judicial_level
                    )));
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for WeightingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.slug())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub perspective: Perspective,
    pub weighting: WeightingSpec,
    pub side: Side,
}

/// Undirected weighted graph over one side of a bipartite network.
///
/// Nodes are kept in id order; edges are stored once per unordered pair with
/// the smaller node position first. Only positive weights are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedGraph<M = crate::Mass> {
    nodes: Vec<NodeId>,
    edges: BTreeMap<(usize, usize), M>,
    provenance: Option<Provenance>,
}

impl<M: Scalar> ProjectedGraph<M> {
    /// Builds a graph from explicit weighted pairs. Self-loops and
    /// non-positive weights are dropped; repeated pairs accumulate.
    pub fn from_edges<I, S>(nodes: impl IntoIterator<Item = S>, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S, M)>,
        S: Into<String>,
    {
        let mut nodes: Vec<NodeId> = nodes.into_iter().map(|s| NodeId::new(s)).collect();
        nodes.sort();
        nodes.dedup();
        let pos = |id: &str| {
            nodes
                .binary_search_by(|n| n.as_str().cmp(id))
                .map_err(|_| Error::NodeNotFound(id.to_owned()))
        };
        let mut map = BTreeMap::new();
        for (a, b, w) in edges {
            let (a, b) = (pos(&a.into())?, pos(&b.into())?);
            if a == b || w <= M::zero() {
                continue;
            }
            accumulate(&mut map, (a.min(b), a.max(b)), w);
        }
        Ok(ProjectedGraph { nodes, edges: map, provenance: None })
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.nodes.binary_search_by(|n| n.as_str().cmp(id)).ok()
    }

    /// Symmetric lookup; absent pairs (and self-pairs) weigh zero.
    pub fn weight(&self, a: &str, b: &str) -> M {
        match (self.position(a), self.position(b)) {
            (Some(a), Some(b)) if a != b => self.edges.get(&(a.min(b), a.max(b))).cloned().unwrap_or_else(M::zero),
            _ => M::zero(),
        }
    }

    /// Edges as (i, j, weight) with i < j by id.
    pub fn edges(&self) -> impl Iterator<Item = (&NodeId, &NodeId, &M)> {
        self.edges.iter().map(|(&(a, b), w)| (&self.nodes[a], &self.nodes[b], w))
    }


    /// Neighbour lists by node position, neighbours in id order.
    pub fn adjacency(&self) -> Vec<Vec<(usize, M)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (&(a, b), w) in &self.edges {
            adj[a].push((b, w.clone()));
            adj[b].push((a, w.clone()));
        }
        for row in &mut adj {
            row.sort_by_key(|(n, _)| *n);
        }
        adj
    }
}

fn accumulate<K: Ord, M: Scalar>(map: &mut BTreeMap<K, M>, key: K, value: M) {
    match map.get_mut(&key) {
        Some(v) => *v += value,
        None => {
            map.insert(key, value);
        }
    }
}

fn min_of<M: Scalar>(a: &M, b: &M) -> M {
    if a <= b { a.clone() } else { b.clone() }
}

/// Pairwise contributions of one witness unit's target list.
fn witness_pairs<M: Scalar>(targets: &[(usize, M)], rule: PresenceRule, mode: WeightingMode, out: &mut BTreeMap<(usize, usize), M>) {
    for (x, (a, ma)) in targets.iter().enumerate() {
        for (b, mb) in &targets[x + 1..] {
            let contribution = match (mode, rule) {
                (WeightingMode::EventCount, _) | (_, PresenceRule::Multiplicity) => min_of(ma, mb),
                _ => M::one(),
            };
            accumulate(out, (*a, *b), contribution);
        }
    }
}

/// Core of the legislative-side projection.
///
/// `masses` are witness × legislative masses (already filtered); targets are
/// translated to positions via `pos`. For combined mode, `counting_unit`
/// maps a witness to its counting unit.
fn project_legislative<M: Scalar>(
    masses: &MassTable<M>,
    pos: &BTreeMap<NodeIdx, usize>,
    w: &WeightingSpec,
    counting_unit: impl Fn(NodeIdx) -> NodeIdx,
    include: impl Fn(NodeIdx) -> bool,
) -> BTreeMap<(usize, usize), M> {
    // witness -> targets with positive mass, target positions ascending
    let mut by_witness: BTreeMap<NodeIdx, Vec<(usize, M)>> = BTreeMap::new();
    for (witness, l, m) in masses.iter() {
        if *m <= M::zero() || !include(witness) {
            continue;
        }
        if let Some(&p) = pos.get(&l) {
            by_witness.entry(witness).or_default().push((p, m.clone()));
        }
    }
    let mut out = BTreeMap::new();
    match w.mode {
        WeightingMode::UnitCount | WeightingMode::EventCount => {
            for targets in by_witness.values_mut() {
                targets.sort_by_key(|(p, _)| *p);
                witness_pairs(targets, w.presence_rule, w.mode, &mut out);
            }
        }
        WeightingMode::Combined => {
            let mut by_unit: BTreeMap<NodeIdx, BTreeMap<(usize, usize), M>> = BTreeMap::new();
            for (witness, targets) in by_witness.iter_mut() {
                targets.sort_by_key(|(p, _)| *p);
                let counts = by_unit.entry(counting_unit(*witness)).or_default();
                witness_pairs(targets, w.presence_rule, WeightingMode::UnitCount, counts);
            }
            let k = M::from_count(w.k);
            for counts in by_unit.values() {
                for (pair, c) in counts {
                    if *c >= k {
                        accumulate(&mut out, *pair, M::one());
                    }
                }
            }
        }
    }
    out
}

/// One-mode projection of the perspective's bipartite network.
pub fn project<M: Scalar>(base: &BaseNetwork, p: &Perspective, w: &WeightingSpec, side: Side) -> Result<ProjectedGraph<M>> {
    project_in(&NetworkSpace::new(base), p, w, side)
}

/// As [`project`], reusing a shared [`NetworkSpace`].
pub fn project_in<M: Scalar>(space: &NetworkSpace<'_, M>, p: &Perspective, w: &WeightingSpec, side: Side) -> Result<ProjectedGraph<M>> {
    p.check()?;
    w.check(p, side)?;
    let base = space.base();
    let net = space.derive(p)?;
    let provenance = Some(Provenance { perspective: p.clone(), weighting: w.clone(), side });
    match side {
        Side::Legislative => {
            let leg = base.legislative();
            let nodes: Vec<NodeId> = net.right().iter().map(|&l| leg.id(l).clone()).collect();
            let pos: BTreeMap<NodeIdx, usize> = net.right().iter().enumerate().map(|(i, &l)| (l, i)).collect();
            let masses = space.filtered(p, w.descriptive_rank)?;
            let jud = base.judicial();
            let counting = p.judicial_level.rank();
            let edges = project_legislative(
                &masses,
                &pos,
                w,
                |witness| jud.unit_at(witness, counting).expect("judicial roots are courts"),
                |_| true,
            );
            Ok(ProjectedGraph { nodes, edges, provenance })
        }
        Side::Judicial => {
            let jud = base.judicial();
            let nodes: Vec<NodeId> = net.left().iter().map(|&j| jud.id(j).clone()).collect();
            let pos: BTreeMap<NodeIdx, usize> = net.left().iter().enumerate().map(|(i, &j)| (j, i)).collect();
            let mut by_target: BTreeMap<NodeIdx, Vec<(usize, M)>> = BTreeMap::new();
            for (j, l, m) in net.masses().iter() {
                if let Some(&p) = pos.get(&j) {
                    if *m > M::zero() {
                        by_target.entry(l).or_default().push((p, m.clone()));
                    }
                }
            }
            let mut edges = BTreeMap::new();
            for targets in by_target.values_mut() {
                targets.sort_by_key(|(p, _)| *p);
                witness_pairs(targets, w.presence_rule, w.mode, &mut edges);
            }
            Ok(ProjectedGraph { nodes, edges, provenance })
        }
    }
}

/// What partitions the witness units in [`grouped_project`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    /// The witness's unit at this judicial level.
    Level(LevelTag),
    /// The nearest ancestor-or-self value of this attribute.
    Attribute(String),
}

/// Group key used for units that lack the grouping attribute.
pub const UNGROUPED: &str = "(none)";

impl GroupBy {
    pub(crate) fn key(&self, base: &BaseNetwork, judicial: NodeIdx) -> String {
        let jud = base.judicial();
        match self {
            GroupBy::Level(level) => jud
                .unit_at(judicial, level.rank())
                .map(|u| jud.id(u).0.clone())
                .unwrap_or_else(|| UNGROUPED.to_owned()),
            GroupBy::Attribute(key) => jud.inherited_attribute(judicial, key).unwrap_or(UNGROUPED).to_owned(),
        }
    }
}

/// One legislative-side projection per group of witness units, each built
/// only from the witnesses inside its group.
pub fn grouped_project<M: Scalar>(
    space: &NetworkSpace<'_, M>,
    p: &Perspective,
    w: &WeightingSpec,
    group_by: &GroupBy,
) -> Result<BTreeMap<String, ProjectedGraph<M>>> {
    p.check()?;
    w.check(p, Side::Legislative)?;
    if let GroupBy::Level(level) = group_by {
        if !level.is_judicial() {
            return Err(Error::LevelMismatch { expected: "judicial", found: *level });
        }
        if level.rank() >= w.descriptive_rank.rank() {
            return Err(Error::RankMismatch(format!(
                "group level {level} is not coarser than witness rank {}",
                w.descriptive_rank
            )));
        }
        if w.mode == WeightingMode::Combined && level.rank() > p.judicial_level.rank() {
            return Err(Error::RankMismatch(format!(
                "group level {level} splits counting units at {}",
                p.judicial_level
            )));
        }
    }
    let base = space.base();
    let jud = base.judicial();
    let leg = base.legislative();
    let net = space.derive(p)?;
    let nodes: Vec<NodeId> = net.right().iter().map(|&l| leg.id(l).clone()).collect();
    let pos: BTreeMap<NodeIdx, usize> = net.right().iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let masses = space.filtered(p, w.descriptive_rank)?;
    let mut group_of: BTreeMap<NodeIdx, String> = BTreeMap::new();
    for (witness, _, _) in masses.iter() {
        group_of.entry(witness).or_insert_with(|| group_by.key(base, witness));
    }
    let groups: std::collections::BTreeSet<&String> = group_of.values().collect();
    let counting = p.judicial_level.rank();
    let mut out = BTreeMap::new();
    for g in groups {
        let edges = project_legislative(
            &masses,
            &pos,
            w,
            |witness| jud.unit_at(witness, counting).expect("judicial roots are courts"),
            |witness| group_of.get(&witness) == Some(g),
        );
        let provenance = Some(Provenance { perspective: p.clone(), weighting: w.clone(), side: Side::Legislative });
        out.insert(g.clone(), ProjectedGraph { nodes: nodes.clone(), edges, provenance });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Row i normalized by i's own neighbourhood: P(s_j | s_i).
    #[default]
    Incoming,
    /// Entry (i, j) normalized by j's neighbourhood: P(s_i | s_j).
    Outgoing,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Divide by the neighbourhood sum.
    #[default]
    Sum,
    /// Divide by the neighbourhood maximum.
    Max,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Incoming => "incoming",
            Direction::Outgoing => "outgoing",
        })
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::Sum => "sum",
            Normalization::Max => "max",
        })
    }
}

/// Normalized co-reference weights over ordered node pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct StrengthMatrix<M = crate::Mass> {
    pub direction: Direction,
    pub normalization: Normalization,
    nodes: Vec<NodeId>,
    entries: BTreeMap<(usize, usize), M>,
    zero_rows: Vec<usize>,
}

impl<M: Scalar> StrengthMatrix<M> {
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    /// Strength of (i, j); zero when the pair is not connected.
    pub fn get(&self, i: &str, j: &str) -> M {
        let pos = |id: &str| self.nodes.binary_search_by(|n| n.as_str().cmp(id)).ok();
        match (pos(i), pos(j)) {
            (Some(a), Some(b)) => self.entries.get(&(a, b)).cloned().unwrap_or_else(M::zero),
            _ => M::zero(),
        }
    }

    /// Nonzero entries in (i, j) id order.
    pub fn entries(&self) -> impl Iterator<Item = (&NodeId, &NodeId, &M)> {
        self.entries.iter().map(|(&(a, b), v)| (&self.nodes[a], &self.nodes[b], v))
    }

    pub fn row(&self, i: &str) -> Vec<(&NodeId, &M)> {
        let Some(a) = self.nodes.binary_search_by(|n| n.as_str().cmp(i)).ok() else {
            return Vec::new();
        };
        self.entries
            .range((a, 0)..(a + 1, 0))
            .map(|(&(_, b), v)| (&self.nodes[b], v))
            .collect()
    }

    /// Nodes without neighbours; their rows are all zero.
    pub fn zero_rows(&self) -> impl Iterator<Item = &NodeId> {
        self.zero_rows.iter().map(|&i| &self.nodes[i])
    }
}

/// Normalizes every row of the projection.
///
/// Incoming (i, j) = w(i,j) / N(i) and outgoing (i, j) = w(i,j) / N(j),
/// where N is the neighbourhood sum or maximum.
pub fn strength<M: Scalar>(g: &ProjectedGraph<M>, direction: Direction, normalization: Normalization) -> StrengthMatrix<M> {
    let adj = g.adjacency();
    let scale: Vec<Option<M>> = adj
        .iter()
        .map(|row| {
            if row.is_empty() {
                return None;
            }
            Some(match normalization {
                Normalization::Sum => row.iter().map(|(_, w)| w.clone()).sum(),
                Normalization::Max => row
                    .iter()
                    .map(|(_, w)| w.clone())
                    .fold(M::zero(), |acc, w| if w > acc { w } else { acc }),
            })
        })
        .collect();
    let mut entries = BTreeMap::new();
    for (i, row) in adj.iter().enumerate() {
        for (j, w) in row {
            let denom = match direction {
                Direction::Incoming => &scale[i],
                Direction::Outgoing => &scale[*j],
            };
            let denom = denom.as_ref().expect("connected nodes have a scale");
            entries.insert((i, *j), w.clone() / denom.clone());
        }
    }
    let zero_rows = (0..adj.len()).filter(|&i| adj[i].is_empty()).collect();
    StrengthMatrix { direction, normalization, nodes: g.nodes.clone(), entries, zero_rows }
}

/// Mean incoming and outgoing sum-normalized strength over each node's
/// neighbours. Isolated nodes map to `None`.
pub fn mean_strengths<M: Scalar>(g: &ProjectedGraph<M>) -> BTreeMap<NodeId, Option<(M, M)>> {
    let incoming = strength(g, Direction::Incoming, Normalization::Sum);
    let outgoing = strength(g, Direction::Outgoing, Normalization::Sum);
    let adj = g.adjacency();
    let mut out = BTreeMap::new();
    for (i, row) in adj.iter().enumerate() {
        let id = g.nodes[i].clone();
        if row.is_empty() {
            out.insert(id, None);
            continue;
        }
        let n = M::from_count(row.len() as u64);
        let sum_in: M = row.iter().map(|(j, _)| incoming.entries[&(i, *j)].clone()).sum();
        let sum_out: M = row.iter().map(|(j, _)| outgoing.entries[&(i, *j)].clone()).sum();
        out.insert(id, Some((sum_in / n.clone(), sum_out / n)));
    }
    out
}
