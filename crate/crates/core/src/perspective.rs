//! Points in the network space and the bipartite networks they induce.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::corpus::{BaseNetwork, Branch, HierForest, LevelTag, NodeId, NodeIdx};
use crate::counting::{self, LeafMassTable, MassTable, SplitRule};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Predicate over nodes of one forest.
///
/// `attr_eq` reads the nearest ancestor-or-self that defines the key, so a
/// court-level attribute such as an allocation-plan area selects every
/// decision authored under that court. `ancestor_in` is also
/// ancestor-or-self.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeFilter {
    #[default]
    All,
    AttrEq { key: String, value: String },
    AncestorIn { ids: BTreeSet<String> },
    RankEq { level: LevelTag },
    And(Vec<NodeFilter>),
    Or(Vec<NodeFilter>),
    Not(Box<NodeFilter>),
}

impl NodeFilter {
    pub fn attr_eq(key: impl Into<String>, value: impl Into<String>) -> Self {
        NodeFilter::AttrEq { key: key.into(), value: value.into() }
    }

    pub fn ancestor_in<I, S>(ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        NodeFilter::AncestorIn { ids: ids.into_iter().map(Into::into).collect() }
    }

    pub fn and(self, other: NodeFilter) -> Self {
        match self {
            NodeFilter::All => other,
            NodeFilter::And(mut parts) => {
                parts.push(other);
                NodeFilter::And(parts)
            }
            f => NodeFilter::And(vec![f, other]),
        }
    }

    pub fn is_pass_all(&self) -> bool {
        matches!(self, NodeFilter::All)
    }

    pub fn matches(&self, forest: &HierForest, idx: NodeIdx) -> bool {
        match self {
            NodeFilter::All => true,
            NodeFilter::AttrEq { key, value } => forest.inherited_attribute(idx, key) == Some(value.as_str()),
            NodeFilter::AncestorIn { ids } => std::iter::once(idx)
                .chain(forest.ancestors(idx))
                .any(|a| ids.contains(forest.id(a).as_str())),
            NodeFilter::RankEq { level } => forest.level(idx) == *level,
            NodeFilter::And(parts) => parts.iter().all(|f| f.matches(forest, idx)),
            NodeFilter::Or(parts) => parts.iter().any(|f| f.matches(forest, idx)),
            NodeFilter::Not(inner) => !inner.matches(forest, idx),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Perspective {
    pub judicial_level: LevelTag,
    pub legislative_level: LevelTag,
    #[serde(default, skip_serializing_if = "NodeFilter::is_pass_all")]
    pub judicial_filter: NodeFilter,
    #[serde(default, skip_serializing_if = "NodeFilter::is_pass_all")]
    pub legislative_filter: NodeFilter,
}

impl Perspective {
    pub fn new(judicial_level: LevelTag, legislative_level: LevelTag) -> Self {
        Perspective {
            judicial_level,
            legislative_level,
            judicial_filter: NodeFilter::All,
            legislative_filter: NodeFilter::All,
        }
    }

    pub fn with_judicial_filter(mut self, f: NodeFilter) -> Self {
        self.judicial_filter = f;
        self
    }

    pub fn with_legislative_filter(mut self, f: NodeFilter) -> Self {
        self.legislative_filter = f;
        self
    }

    pub fn check(&self) -> Result<()> {
        if !self.judicial_level.is_judicial() {
            return Err(Error::LevelMismatch { expected: "judicial", found: self.judicial_level });
        }
        if !self.legislative_level.is_legislative() {
            return Err(Error::LevelMismatch { expected: "legislative", found: self.legislative_level });
        }
        Ok(())
    }

    pub fn is_unfiltered(&self) -> bool {
        self.judicial_filter.is_pass_all() && self.legislative_filter.is_pass_all()
    }
}

impl fmt::Display for Perspective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.judicial_level, self.legislative_level)
    }
}

/// Which side of a bipartite network a projection keeps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    #[default]
    Legislative,
    Judicial,
}

impl Side {
    pub fn branch(self) -> Branch {
        match self {
            Side::Legislative => Branch::Legislative,
            Side::Judicial => Branch::Judicial,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.branch().name())
    }
}

/// A derived bipartite network: judicial units (left) referencing
/// legislative units (right). Zero-mass pairs are absent.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteNetwork<M = crate::Mass> {
    perspective: Perspective,
    left: Vec<NodeIdx>,
    right: Vec<NodeIdx>,
    table: MassTable<M>,
}

impl<M: Scalar> BipartiteNetwork<M> {
    pub fn perspective(&self) -> &Perspective {
        &self.perspective
    }

    /// Judicial units passing the filter, in id order.
    pub fn left(&self) -> &[NodeIdx] {
        &self.left
    }

    /// Legislative units passing the filter, in id order.
    pub fn right(&self) -> &[NodeIdx] {
        &self.right
    }

    pub fn masses(&self) -> &MassTable<M> {
        &self.table
    }

    pub fn edge_count(&self) -> usize {
        self.table.len()
    }

    pub fn total_weight(&self) -> M {
        self.table.total()
    }

    pub fn weight(&self, base: &BaseNetwork, left: &str, right: &str) -> Option<&M> {
        self.table.get(base, left, right)
    }

    /// Edges as (left id, right id, weight) in id order.
    pub fn edges<'a>(&'a self, base: &'a BaseNetwork) -> impl Iterator<Item = (&'a NodeId, &'a NodeId, &'a M)> {
        self.table.rows(base)
    }
}

/// Shared counting state for deriving many perspectives from one corpus.
///
/// Holds the leaf table and lazily caches one aggregation per legislative
/// level and one roll-up per (judicial, legislative) pair, so a full grid
/// costs five aggregations and twenty roll-ups regardless of how many
/// filters are swept. Safe to share across threads.
pub struct NetworkSpace<'a, M = crate::Mass> {
    base: &'a BaseNetwork,
    leaves: LeafMassTable<M>,
    aggregated: [OnceLock<MassTable<M>>; 5],
    rolled: [[OnceLock<MassTable<M>>; 5]; 4],
}

impl<'a, M: Scalar> NetworkSpace<'a, M> {
    pub fn new(base: &'a BaseNetwork) -> Self {
        Self::with_rule(base, SplitRule::PerChild)
    }

    pub fn with_rule(base: &'a BaseNetwork, rule: SplitRule) -> Self {
        NetworkSpace {
            base,
            leaves: counting::broadcast_with_rule(base, rule),
            aggregated: Default::default(),
            rolled: Default::default(),
        }
    }

    pub fn base(&self) -> &'a BaseNetwork {
        self.base
    }

    pub fn leaves(&self) -> &LeafMassTable<M> {
        &self.leaves
    }

    /// Paragraph × `level` masses.
    pub fn aggregate(&self, level: LevelTag) -> Result<&MassTable<M>> {
        if !level.is_legislative() {
            return Err(Error::LevelMismatch { expected: "legislative", found: level });
        }
        let slot = &self.aggregated[level.rank() as usize - 1];
        if let Some(t) = slot.get() {
            return Ok(t);
        }
        let t = if level.rank() >= self.leaves.frontier().unwrap_or(1) {
            counting::aggregate_at_level(&self.leaves, self.base, level)?
        } else {
            let finer = self.aggregate(LevelTag::new(Branch::Legislative, level.rank() + 1)?)?;
            counting::coarsen_target(finer, self.base, level)?
        };
        Ok(slot.get_or_init(|| t))
    }

    /// Unfiltered `judicial` × `legislative` masses.
    pub fn rolled(&self, judicial: LevelTag, legislative: LevelTag) -> Result<&MassTable<M>> {
        if !judicial.is_judicial() {
            return Err(Error::LevelMismatch { expected: "judicial", found: judicial });
        }
        let agg = self.aggregate(legislative)?;
        let slot = &self.rolled[judicial.rank() as usize - 1][legislative.rank() as usize - 1];
        if let Some(t) = slot.get() {
            return Ok(t);
        }
        // roll from the next finer level: each step only merges siblings
        let t = if judicial == LevelTag::PARAGRAPH {
            agg.clone()
        } else {
            let finer = self.rolled(LevelTag::new(Branch::Judicial, judicial.rank() + 1)?, legislative)?;
            counting::roll_up_source(finer, self.base, judicial)?
        };
        Ok(slot.get_or_init(|| t))
    }

    /// Masses at (`unit_level`, p.legislative_level) restricted by `p`'s filters.
    ///
    /// The judicial filter is evaluated on each paragraph's unit at
    /// `p.judicial_level`, so `unit_level` may be finer or coarser than the
    /// perspective's own level. Removed mass is dropped, never redistributed.
    pub fn filtered(&self, p: &Perspective, unit_level: LevelTag) -> Result<MassTable<M>> {
        p.check()?;
        if !unit_level.is_judicial() {
            return Err(Error::LevelMismatch { expected: "judicial", found: unit_level });
        }
        if p.is_unfiltered() {
            return Ok(self.rolled(unit_level, p.legislative_level)?.clone());
        }
        let jud = self.base.judicial();
        let leg = self.base.legislative();
        let agg = self.aggregate(p.legislative_level)?;
        let mut keep_source: BTreeMap<NodeIdx, bool> = BTreeMap::new();
        let mut keep_target: BTreeMap<NodeIdx, bool> = BTreeMap::new();
        let mut entries: BTreeMap<(NodeIdx, NodeIdx), M> = BTreeMap::new();
        for (q, l, m) in agg.iter() {
            let src_ok = *keep_source.entry(q).or_insert_with(|| {
                jud.unit_at(q, p.judicial_level.rank())
                    .is_some_and(|u| p.judicial_filter.matches(jud, u))
            });
            let tgt_ok = *keep_target.entry(l).or_insert_with(|| p.legislative_filter.matches(leg, l));
            if !(src_ok && tgt_ok) {
                continue;
            }
            let unit = jud.unit_at(q, unit_level.rank()).expect("judicial roots are courts");
            match entries.get_mut(&(unit, l)) {
                Some(v) => *v += m.clone(),
                None => {
                    entries.insert((unit, l), m.clone());
                }
            }
        }
        Ok(MassTable::from_entries(unit_level, p.legislative_level, entries))
    }

    pub fn derive(&self, p: &Perspective) -> Result<BipartiteNetwork<M>> {
        let table = self.filtered(p, p.judicial_level)?;
        let jud = self.base.judicial();
        let leg = self.base.legislative();
        let left = jud
            .level_indices(p.judicial_level)
            .into_iter()
            .filter(|&j| p.judicial_filter.matches(jud, j))
            .collect();
        let right = counting::legislative_units(self.base, p.legislative_level)
            .into_iter()
            .filter(|&l| p.legislative_filter.matches(leg, l))
            .collect();
        Ok(BipartiteNetwork { perspective: p.clone(), left, right, table })
    }
}

/// One-shot derivation. Prefer [`NetworkSpace`] when deriving several
/// perspectives from the same corpus.
pub fn derive<M: Scalar>(base: &BaseNetwork, p: &Perspective) -> Result<BipartiteNetwork<M>> {
    p.check()?;
    NetworkSpace::new(base).derive(p)
}

/// Alternative filters swept by [`enumerate_grid`] in addition to pass-all.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridFilters {
    #[serde(default)]
    pub judicial: Vec<NodeFilter>,
    #[serde(default)]
    pub legislative: Vec<NodeFilter>,
}

/// Judicial rank major, then legislative rank, then filter choice (judicial
/// filter index major). Pass-all is always filter choice 0 on each side.
pub fn enumerate_grid(filters: Option<&GridFilters>) -> Vec<Perspective> {
    let mut jf = vec![NodeFilter::All];
    let mut lf = vec![NodeFilter::All];
    if let Some(f) = filters {
        jf.extend(f.judicial.iter().cloned());
        lf.extend(f.legislative.iter().cloned());
    }
    let mut out = Vec::with_capacity(20 * jf.len() * lf.len());
    for j in Branch::Judicial.levels() {
        for l in Branch::Legislative.levels() {
            for a in &jf {
                for b in &lf {
                    out.push(
                        Perspective::new(j, l)
                            .with_judicial_filter(a.clone())
                            .with_legislative_filter(b.clone()),
                    );
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "side")]
pub enum NetworkView {
    Bipartite,
    Projection(Side),
}

/// Every network reachable from the perspectives: each bipartite network
/// and its two one-mode projections.
pub fn network_views(perspectives: &[Perspective]) -> Vec<(Perspective, NetworkView)> {
    perspectives
        .iter()
        .flat_map(|p| {
            [
                NetworkView::Bipartite,
                NetworkView::Projection(Side::Legislative),
                NetworkView::Projection(Side::Judicial),
            ]
            .map(|v| (p.clone(), v))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use num_rational::BigRational;

    use super::*;
    use crate::fixtures::t1;

    type Q = BigRational;

    fn edges(base: &BaseNetwork, net: &BipartiteNetwork<Q>) -> Vec<(String, String, Q)> {
        net.edges(base).map(|(a, b, w)| (a.0.clone(), b.0.clone(), w.clone())).collect()
    }

    fn e(a: &str, b: &str, w: u64) -> (String, String, Q) {
        (a.into(), b.into(), Q::from_count(w))
    }

    #[test]
    fn t1_decision_by_section() {
        let base = t1();
        let net = derive::<Q>(&base, &Perspective::new(LevelTag::DECISION, LevelTag::SECTION)).unwrap();
        assert_eq!(
            edges(&base, &net),
            [e("D1", "A1", 2), e("D1", "A2", 1), e("D2", "A1", 1), e("D2", "A2", 1), e("D2", "B1", 1)]
        );
        assert_eq!(net.left().len(), 2);
        assert_eq!(net.right().len(), 3);
    }

    #[test]
    fn t1_court_by_statute() {
        let base = t1();
        let net = derive::<Q>(&base, &Perspective::new(LevelTag::COURT, LevelTag::STATUTE)).unwrap();
        assert_eq!(edges(&base, &net), [e("C1", "A", 5), e("C1", "B", 1)]);
    }

    #[test]
    fn t1_legislative_filter() {
        let base = t1();
        let p = Perspective::new(LevelTag::DECISION, LevelTag::SECTION)
            .with_legislative_filter(NodeFilter::ancestor_in(["B"]));
        let net = derive::<Q>(&base, &p).unwrap();
        assert_eq!(edges(&base, &net), [e("D2", "B1", 1)]);
        assert_eq!(net.right().len(), 1);
    }

    #[test]
    fn judicial_filter_on_inherited_attribute() {
        let base = t1();
        let p = Perspective::new(LevelTag::DECISION, LevelTag::STATUTE)
            .with_judicial_filter(NodeFilter::attr_eq("competence", "civil"));
        let net = derive::<Q>(&base, &p).unwrap();
        assert_eq!(net.total_weight(), Q::from_count(6));
        let p = p.with_judicial_filter(NodeFilter::attr_eq("competence", "tax"));
        assert_eq!(derive::<Q>(&base, &p).unwrap().edge_count(), 0);
    }

    #[test]
    fn filter_combinators() {
        let base = t1();
        let jud = base.judicial();
        let d1 = jud.idx("D1").unwrap();
        let d2 = jud.idx("D2").unwrap();
        let not_d1 = NodeFilter::Not(Box::new(NodeFilter::ancestor_in(["D1"])));
        assert!(!not_d1.matches(jud, d1));
        assert!(not_d1.matches(jud, d2));
        let either = NodeFilter::Or(vec![NodeFilter::ancestor_in(["D1"]), NodeFilter::ancestor_in(["D2"])]);
        assert!(either.matches(jud, d1) && either.matches(jud, d2));
        let rank = NodeFilter::RankEq { level: LevelTag::DECISION };
        assert!(rank.clone().and(not_d1).matches(jud, d2));
        assert!(!rank.matches(jud, jud.idx("q1").unwrap()));
    }

    #[test]
    fn filter_json_shape() {
        let f = NodeFilter::And(vec![NodeFilter::attr_eq("area", "tax"), NodeFilter::All]);
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(json, r#"{"and":[{"attr_eq":{"key":"area","value":"tax"}},"all"]}"#);
        assert_eq!(serde_json::from_str::<NodeFilter>(&json).unwrap(), f);
    }

    #[test]
    fn level_branch_mismatch_is_error() {
        let base = t1();
        let p = Perspective::new(LevelTag::SECTION, LevelTag::DECISION);
        assert!(matches!(derive::<Q>(&base, &p), Err(Error::LevelMismatch { .. })));
    }

    #[test]
    fn grid_sizes_and_order() {
        let grid = enumerate_grid(None);
        assert_eq!(grid.len(), 20);
        assert_eq!(grid[0], Perspective::new(LevelTag::COURT, LevelTag::STATUTE));
        assert_eq!(grid[1], Perspective::new(LevelTag::COURT, LevelTag::SECTION));
        assert_eq!(grid[19], Perspective::new(LevelTag::PARAGRAPH, LevelTag::SUB3));

        let extra = GridFilters { judicial: vec![NodeFilter::attr_eq("k", "v")], legislative: vec![] };
        let grid = enumerate_grid(Some(&extra));
        assert_eq!(grid.len(), 40);
        assert!(grid[0].judicial_filter.is_pass_all());
        assert!(!grid[1].judicial_filter.is_pass_all());
        assert_eq!(grid[1].legislative_level, LevelTag::STATUTE);

        assert_eq!(network_views(&enumerate_grid(None)).len(), 60);
    }

    #[test]
    fn empty_corpus_grid_is_all_empty() {
        let base = BaseNetwork::empty();
        let space = NetworkSpace::<Q>::new(&base);
        for p in enumerate_grid(None) {
            assert_eq!(space.derive(&p).unwrap().edge_count(), 0);
        }
    }

    #[test]
    fn unfiltered_grid_conserves_mass() {
        let base = t1();
        let space = NetworkSpace::<Q>::new(&base);
        for p in enumerate_grid(None) {
            assert_eq!(space.derive(&p).unwrap().total_weight(), Q::from_count(6), "{p}");
        }
    }
}
