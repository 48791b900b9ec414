//! Dynamic counting: lossless granularity changes on the legislative side.
//!
//! Every reference's mass is pushed down to a single global leaf frontier
//! (the deepest legislative rank present in the corpus). A node that has
//! children splits its share evenly among them; a node above the frontier
//! without children keeps its share on a proxy leaf. Any coarser level is
//! then obtained by summing leaf masses over subtrees.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{BaseNetwork, Branch, HierForest, LevelTag, NodeId, NodeIdx, PROXY_SUFFIX};
use crate::error::{Error, Result};
use crate::scalar::{num_den, Scalar};

/// How a node's share is divided among the leaves below it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitRule {
    /// Split evenly among immediate children, recursively.
    #[default]
    PerChild,
    /// Split evenly among all frontier descendants at once.
    UniformFrontier,
}

/// A frontier position: a real node at the frontier rank, or the proxy that
/// stands in for a childless node above it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Leaf {
    Real(NodeIdx),
    Proxy(NodeIdx),
}

impl Leaf {
    /// The real node the leaf belongs to.
    pub fn anchor(self) -> NodeIdx {
        match self {
            Leaf::Real(n) | Leaf::Proxy(n) => n,
        }
    }

    pub fn id(self, forest: &HierForest) -> String {
        match self {
            Leaf::Real(n) => forest.id(n).0.clone(),
            Leaf::Proxy(n) => proxy_id(forest.id(n)),
        }
    }
}

pub fn proxy_id(ancestor: &NodeId) -> String {
    format!("{}{PROXY_SUFFIX}", ancestor)
}

/// Per-(paragraph, frontier leaf) mass.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafMassTable<M = crate::Mass> {
    frontier: Option<u8>,
    rule: SplitRule,
    entries: BTreeMap<(NodeIdx, Leaf), M>,
}

impl<M: Scalar> LeafMassTable<M> {
    /// Frontier rank, `None` when the corpus has no legislative nodes.
    pub fn frontier(&self) -> Option<u8> {
        self.frontier
    }

    pub fn rule(&self) -> SplitRule {
        self.rule
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeIdx, Leaf, &M)> {
        self.entries.iter().map(|(&(q, l), m)| (q, l, m))
    }

    pub fn get(&self, base: &BaseNetwork, source: &str, leaf: &str) -> Option<&M> {
        let q = base.judicial().idx(source)?;
        let leg = base.legislative();
        let key = match leaf.strip_suffix(PROXY_SUFFIX) {
            Some(anchor) => Leaf::Proxy(leg.idx(anchor)?),
            None => Leaf::Real(leg.idx(leaf)?),
        };
        self.entries.get(&(q, key))
    }

    pub fn total(&self) -> M {
        M::total(self.entries.values().cloned())
    }

    /// Rows as (source id, leaf id, mass), sorted by ids.
    pub fn rows(&self, base: &BaseNetwork) -> Vec<(String, String, M)> {
        let mut rows: Vec<_> = self
            .iter()
            .map(|(q, l, m)| (base.judicial().id(q).0.clone(), l.id(base.legislative()), m.clone()))
            .collect();
        rows.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
        rows
    }

    /// JSON-lines debug dump: one `{source, leaf, numerator, denominator}` per entry.
    pub fn to_jsonl(&self, base: &BaseNetwork) -> String {
        let mut out = String::new();
        for (source, leaf, m) in self.rows(base) {
            let (numerator, denominator) = num_den(&m);
            let line = serde_json::json!({
                "source": source,
                "leaf": leaf,
                "numerator": numerator,
                "denominator": denominator,
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }
}

/// Broadcast with the default per-child split rule.
pub fn broadcast_to_leaves<M: Scalar>(base: &BaseNetwork) -> LeafMassTable<M> {
    broadcast_with_rule(base, SplitRule::PerChild)
}

pub fn broadcast_with_rule<M: Scalar>(base: &BaseNetwork, rule: SplitRule) -> LeafMassTable<M> {
    let leg = base.legislative();
    let frontier = leg.max_rank_present();
    let mut entries: BTreeMap<(NodeIdx, Leaf), M> = BTreeMap::new();
    let Some(frontier) = frontier else {
        return LeafMassTable { frontier, rule, entries };
    };
    let mut frontier_cache: HashMap<NodeIdx, Vec<Leaf>> = HashMap::new();
    for (source, target, multiplicity) in base.resolved_refs() {
        let mass = M::from_count(multiplicity);
        match rule {
            SplitRule::PerChild => {
                let mut stack = vec![(target, mass)];
                while let Some((node, share)) = stack.pop() {
                    let children = leg.children(node);
                    if leg.rank(node) >= frontier {
                        add(&mut entries, (source, Leaf::Real(node)), share);
                    } else if children.is_empty() {
                        add(&mut entries, (source, Leaf::Proxy(node)), share);
                    } else {
                        let part = share / M::from_count(children.len() as u64);
                        stack.extend(children.iter().map(|&c| (c, part.clone())));
                    }
                }
            }
            SplitRule::UniformFrontier => {
                let leaves = frontier_cache
                    .entry(target)
                    .or_insert_with(|| frontier_leaves(leg, target, frontier));
                let part = mass / M::from_count(leaves.len() as u64);
                for &leaf in leaves.iter() {
                    add(&mut entries, (source, leaf), part.clone());
                }
            }
        }
    }
    LeafMassTable { frontier: Some(frontier), rule, entries }
}

fn frontier_leaves(leg: &HierForest, root: NodeIdx, frontier: u8) -> Vec<Leaf> {
    leg.descendants_inclusive(root)
        .into_iter()
        .filter_map(|n| {
            if leg.rank(n) >= frontier {
                Some(Leaf::Real(n))
            } else if leg.children(n).is_empty() {
                Some(Leaf::Proxy(n))
            } else {
                None
            }
        })
        .collect()
}

fn add<K: Ord, M: Scalar>(map: &mut BTreeMap<K, M>, key: K, value: M) {
    match map.get_mut(&key) {
        Some(v) => *v += value,
        None => {
            map.insert(key, value);
        }
    }
}

/// Mass per (judicial unit, legislative unit) at a fixed pair of levels.
///
/// Keys are node positions in their forests; because forests are sorted by
/// id, iteration order is (judicial id, legislative id).
#[derive(Debug, Clone, PartialEq)]
pub struct MassTable<M = crate::Mass> {
    judicial_level: LevelTag,
    legislative_level: LevelTag,
    entries: BTreeMap<(NodeIdx, NodeIdx), M>,
}

impl<M: Scalar> MassTable<M> {
    pub(crate) fn from_entries(
        judicial_level: LevelTag,
        legislative_level: LevelTag,
        entries: BTreeMap<(NodeIdx, NodeIdx), M>,
    ) -> Self {
        MassTable { judicial_level, legislative_level, entries }
    }

    pub fn judicial_level(&self) -> LevelTag {
        self.judicial_level
    }

    pub fn legislative_level(&self) -> LevelTag {
        self.legislative_level
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeIdx, NodeIdx, &M)> {
        self.entries.iter().map(|(&(j, l), m)| (j, l, m))
    }

    pub fn get_idx(&self, judicial: NodeIdx, legislative: NodeIdx) -> Option<&M> {
        self.entries.get(&(judicial, legislative))
    }

    pub fn get(&self, base: &BaseNetwork, judicial: &str, legislative: &str) -> Option<&M> {
        let j = base.judicial().idx(judicial)?;
        let l = base.legislative().idx(legislative)?;
        self.entries.get(&(j, l))
    }

    pub fn total(&self) -> M {
        M::total(self.entries.values().cloned())
    }

    /// Rows as (judicial id, legislative id, mass) in id order.
    pub fn rows<'a>(&'a self, base: &'a BaseNetwork) -> impl Iterator<Item = (&'a NodeId, &'a NodeId, &'a M)> {
        self.iter().map(|(j, l, m)| (base.judicial().id(j), base.legislative().id(l), m))
    }

}

/// Sums leaf masses into legislative units at `level`, keeping paragraphs
/// as sources.
///
/// A unit is the deepest node at or above `level` on a leaf's path; when the
/// path has no node at exactly `level` (a proxy, or a skipped rank), the
/// nearest coarser node stands in for it.
pub fn aggregate_at_level<M: Scalar>(
    table: &LeafMassTable<M>,
    base: &BaseNetwork,
    level: LevelTag,
) -> Result<MassTable<M>> {
    if !level.is_legislative() {
        return Err(Error::LevelMismatch { expected: "legislative", found: level });
    }
    let leg = base.legislative();
    let mut units: HashMap<Leaf, NodeIdx> = HashMap::new();
    let mut entries = BTreeMap::new();
    for (q, leaf, m) in table.iter() {
        let unit = *units.entry(leaf).or_insert_with(|| {
            leg.unit_at(leaf.anchor(), level.rank()).expect("every legislative path has a statute-level root")
        });
        add(&mut entries, (q, unit), m.clone());
    }
    Ok(MassTable { judicial_level: LevelTag::PARAGRAPH, legislative_level: level, entries })
}

/// Re-keys an aggregated table to the coarser legislative `level`; equal to
/// aggregating the leaves at `level` directly.
pub fn coarsen_target<M: Scalar>(masses: &MassTable<M>, base: &BaseNetwork, level: LevelTag) -> Result<MassTable<M>> {
    if !level.is_legislative() {
        return Err(Error::LevelMismatch { expected: "legislative", found: level });
    }
    if level.rank() > masses.legislative_level.rank() {
        return Err(Error::RankMismatch(format!(
            "cannot refine {} masses to {level}",
            masses.legislative_level
        )));
    }
    let leg = base.legislative();
    let mut entries = BTreeMap::new();
    for (j, l, m) in masses.iter() {
        let unit = leg.unit_at(l, level.rank()).expect("every legislative path has a statute-level root");
        add(&mut entries, (j, unit), m.clone());
    }
    Ok(MassTable { judicial_level: masses.judicial_level, legislative_level: level, entries })
}

/// Sums paragraph-level masses into judicial units at `level`.
pub fn roll_up_source<M: Scalar>(masses: &MassTable<M>, base: &BaseNetwork, level: LevelTag) -> Result<MassTable<M>> {
    if !level.is_judicial() {
        return Err(Error::LevelMismatch { expected: "judicial", found: level });
    }
    if level.rank() > masses.judicial_level.rank() {
        return Err(Error::RankMismatch(format!(
            "cannot roll {} masses down to {level}",
            masses.judicial_level
        )));
    }
    let jud = base.judicial();
    let mut entries = BTreeMap::new();
    for (j, l, m) in masses.iter() {
        let unit = jud.unit_at(j, level.rank()).expect("judicial roots are courts");
        add(&mut entries, (unit, l), m.clone());
    }
    Ok(MassTable { judicial_level: level, legislative_level: masses.legislative_level, entries })
}

/// The legislative units that can appear as keys at `level`: nodes at that
/// rank plus coarser nodes standing in for missing substructure.
pub fn legislative_units(base: &BaseNetwork, level: LevelTag) -> Vec<NodeIdx> {
    let leg = base.legislative();
    let Some(frontier) = leg.max_rank_present() else {
        return Vec::new();
    };
    let rank = level.rank().min(frontier);
    (0..leg.len())
        .filter(|&n| {
            let r = leg.rank(n);
            r == rank
                || (r < rank
                    && (leg.children(n).is_empty() || leg.children(n).iter().any(|&c| leg.rank(c) > rank)))
        })
        .collect()
}

/// Units of `level` on the given branch (judicial chains are complete, so
/// this is just the level's nodes there).
pub fn units(base: &BaseNetwork, level: LevelTag) -> Vec<NodeIdx> {
    match level.branch() {
        Branch::Judicial => base.judicial().level_indices(level),
        Branch::Legislative => legislative_units(base, level),
    }
}

impl fmt::Display for SplitRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitRule::PerChild => "per_child",
            SplitRule::UniformFrontier => "uniform_frontier",
        })
    }
}
