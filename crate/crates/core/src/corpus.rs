//! The base network: a judicial and a legislative forest joined by
//! paragraph → legislative-node reference edges.
//!
//! Nodes inside a forest are stored sorted by [`NodeId`], so a node's
//! position ([`NodeIdx`]) orders the same way its id does. Every table built
//! on top of positions is therefore deterministic without re-sorting.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Position of a node inside its forest.
pub type NodeIdx = usize;

/// Suffix reserved for proxy leaves created by dynamic counting.
pub const PROXY_SUFFIX: &str = "::proxy";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_owned())
    }
}

impl std::borrow::Borrow<str> for NodeId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Judicial,
    Legislative,
}

impl Branch {
    pub fn max_rank(self) -> u8 {
        match self {
            Branch::Judicial => 4,
            Branch::Legislative => 5,
        }
    }

    pub fn levels(self) -> impl Iterator<Item = LevelTag> {
        (1..=self.max_rank()).map(move |rank| LevelTag { branch: self, rank })
    }

    pub fn name(self) -> &'static str {
        match self {
            Branch::Judicial => "judicial",
            Branch::Legislative => "legislative",
        }
    }
}

/// A granularity level: branch plus ordinal depth (1 = coarsest).
///
/// Ranks are only comparable within a branch; use [`LevelTag::coarser_than`]
/// rather than comparing tags across branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LevelTag {
    branch: Branch,
    rank: u8,
}

impl LevelTag {
    pub const COURT: LevelTag = LevelTag { branch: Branch::Judicial, rank: 1 };
    pub const PANEL: LevelTag = LevelTag { branch: Branch::Judicial, rank: 2 };
    pub const DECISION: LevelTag = LevelTag { branch: Branch::Judicial, rank: 3 };
    pub const PARAGRAPH: LevelTag = LevelTag { branch: Branch::Judicial, rank: 4 };
    pub const STATUTE: LevelTag = LevelTag { branch: Branch::Legislative, rank: 1 };
    pub const SECTION: LevelTag = LevelTag { branch: Branch::Legislative, rank: 2 };
    pub const SUB: LevelTag = LevelTag { branch: Branch::Legislative, rank: 3 };
    pub const SUB2: LevelTag = LevelTag { branch: Branch::Legislative, rank: 4 };
    pub const SUB3: LevelTag = LevelTag { branch: Branch::Legislative, rank: 5 };

    pub fn new(branch: Branch, rank: u8) -> Result<Self> {
        if rank == 0 || rank > branch.max_rank() {
            return Err(Error::InvalidArgument(format!(
                "{} rank {rank} out of range 1..={}",
                branch.name(),
                branch.max_rank()
            )));
        }
        Ok(LevelTag { branch, rank })
    }

    pub fn branch(self) -> Branch {
        self.branch
    }

    pub fn rank(self) -> u8 {
        self.rank
    }

    pub fn is_judicial(self) -> bool {
        self.branch == Branch::Judicial
    }

    pub fn is_legislative(self) -> bool {
        self.branch == Branch::Legislative
    }

    /// `Some(true)` if strictly coarser, `None` across branches.
    pub fn coarser_than(self, other: LevelTag) -> Option<bool> {
        (self.branch == other.branch).then_some(self.rank < other.rank)
    }

    pub fn name(self) -> &'static str {
        match (self.branch, self.rank) {
            (Branch::Judicial, 1) => "court",
            (Branch::Judicial, 2) => "panel",
            (Branch::Judicial, 3) => "decision",
            (Branch::Judicial, 4) => "paragraph",
            (Branch::Legislative, 1) => "statute",
            (Branch::Legislative, 2) => "section",
            (Branch::Legislative, 3) => "sub",
            (Branch::Legislative, 4) => "sub2",
            (Branch::Legislative, _) => "sub3",
            _ => unreachable!("rank checked on construction"),
        }
    }

    pub fn from_name(name: &str) -> Option<LevelTag> {
        let tag = match name.to_ascii_lowercase().as_str() {
            "court" => Self::COURT,
            "panel" => Self::PANEL,
            "decision" => Self::DECISION,
            "paragraph" => Self::PARAGRAPH,
            "statute" => Self::STATUTE,
            "section" => Self::SECTION,
            "sub" => Self::SUB,
            "sub2" => Self::SUB2,
            "sub3" => Self::SUB3,
            _ => return None,
        };
        Some(tag)
    }

    pub fn all() -> impl Iterator<Item = LevelTag> {
        Branch::Judicial.levels().chain(Branch::Legislative.levels())
    }
}

impl fmt::Display for LevelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for LevelTag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for LevelTag {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        LevelTag::from_name(&name)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown level {name:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HierEdgeKind {
    Organizational,
    Authorship,
    Containment,
}

impl HierEdgeKind {
    /// Court→Panel is organizational, Panel→Decision is authorship,
    /// everything else is containment.
    pub fn between(parent: LevelTag, child: LevelTag) -> HierEdgeKind {
        match (parent, child) {
            (LevelTag::COURT, LevelTag::PANEL) => HierEdgeKind::Organizational,
            (LevelTag::PANEL, LevelTag::DECISION) => HierEdgeKind::Authorship,
            _ => HierEdgeKind::Containment,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: NodeId,
    pub level: LevelTag,
    pub parent: Option<NodeId>,
    pub label: String,
    pub attributes: BTreeMap<String, String>,
}

impl Node {
    pub fn new(id: impl Into<String>, level: LevelTag, parent: Option<&str>, label: impl Into<String>) -> Self {
        Node {
            id: NodeId::new(id),
            level,
            parent: parent.map(NodeId::from),
            label: label.into(),
            attributes: BTreeMap::new(),
        }
    }

    pub fn with_attribute(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.attributes.insert(key.into(), value.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RefEdge {
    pub source: NodeId,
    pub target: NodeId,
    pub multiplicity: u64,
}

impl RefEdge {
    pub fn new(source: impl Into<String>, target: impl Into<String>, multiplicity: u64) -> Self {
        RefEdge {
            source: NodeId::new(source),
            target: NodeId::new(target),
            multiplicity,
        }
    }
}

/// One branch's hierarchy.
#[derive(Debug, Clone)]
pub struct HierForest {
    branch: Branch,
    nodes: Vec<Node>,
    index: HashMap<NodeId, NodeIdx>,
    parent: Vec<Option<NodeIdx>>,
    children: Vec<Vec<NodeIdx>>,
    roots: Vec<NodeIdx>,
    duplicates: Vec<NodeId>,
}

impl HierForest {
    /// Builds the forest without validating it. Duplicate ids keep the first
    /// occurrence; parents that do not resolve inside this forest are left
    /// unlinked. Both are reported by [`validate`].
    pub fn new(branch: Branch, mut nodes: Vec<Node>) -> Self {
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        let mut duplicates = Vec::new();
        nodes.dedup_by(|later, first| {
            let dup = later.id == first.id;
            if dup {
                duplicates.push(later.id.clone());
            }
            dup
        });
        let index: HashMap<NodeId, NodeIdx> =
            nodes.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();
        let parent: Vec<Option<NodeIdx>> = nodes
            .iter()
            .map(|n| n.parent.as_ref().and_then(|p| index.get(p).copied()))
            .collect();
        let mut children = vec![Vec::new(); nodes.len()];
        let mut roots = Vec::new();
        for (i, p) in parent.iter().enumerate() {
            match p {
                Some(p) => children[*p].push(i),
                None => roots.push(i),
            }
        }
        HierForest { branch, nodes, index, parent, children, roots, duplicates }
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, idx: NodeIdx) -> &Node {
        &self.nodes[idx]
    }

    pub fn idx(&self, id: &str) -> Option<NodeIdx> {
        self.index.get(id).copied()
    }

    pub fn id(&self, idx: NodeIdx) -> &NodeId {
        &self.nodes[idx].id
    }

    pub fn level(&self, idx: NodeIdx) -> LevelTag {
        self.nodes[idx].level
    }

    pub fn rank(&self, idx: NodeIdx) -> u8 {
        self.nodes[idx].level.rank
    }

    pub fn parent(&self, idx: NodeIdx) -> Option<NodeIdx> {
        self.parent[idx]
    }

    pub fn children(&self, idx: NodeIdx) -> &[NodeIdx] {
        &self.children[idx]
    }

    pub fn roots(&self) -> &[NodeIdx] {
        &self.roots
    }

    /// Ancestors starting at the parent, nearest first.
    pub fn ancestors(&self, idx: NodeIdx) -> Ancestors<'_> {
        Ancestors { forest: self, next: self.parent[idx], steps: 0 }
    }

    /// The deepest node on the path root..=idx whose rank is at most `rank`.
    ///
    /// For complete chains this is the ancestor at exactly `rank`; when a
    /// rank is skipped it is the node that stands in for the missing level.
    pub fn unit_at(&self, idx: NodeIdx, rank: u8) -> Option<NodeIdx> {
        if self.rank(idx) <= rank {
            return Some(idx);
        }
        self.ancestors(idx).find(|&a| self.rank(a) <= rank)
    }

    /// Nearest ancestor-or-self value of an attribute.
    pub fn inherited_attribute(&self, idx: NodeIdx, key: &str) -> Option<&str> {
        std::iter::once(idx)
            .chain(self.ancestors(idx))
            .find_map(|a| self.nodes[a].attributes.get(key).map(String::as_str))
    }

    /// Preorder walk of the subtree rooted at `idx`, children in id order.
    pub fn descendants_inclusive(&self, idx: NodeIdx) -> Vec<NodeIdx> {
        let mut out = Vec::new();
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![idx];
        while let Some(n) = stack.pop() {
            if std::mem::replace(&mut seen[n], true) {
                continue;
            }
            out.push(n);
            stack.extend(self.children[n].iter().rev().copied());
        }
        out
    }

    pub fn is_within(&self, idx: NodeIdx, ancestor: NodeIdx) -> bool {
        idx == ancestor || self.ancestors(idx).any(|a| a == ancestor)
    }

    pub fn max_rank_present(&self) -> Option<u8> {
        self.nodes.iter().map(|n| n.level.rank).max()
    }

    pub fn level_indices(&self, level: LevelTag) -> Vec<NodeIdx> {
        if level.branch != self.branch {
            return Vec::new();
        }
        (0..self.nodes.len()).filter(|&i| self.nodes[i].level == level).collect()
    }
}

pub struct Ancestors<'a> {
    forest: &'a HierForest,
    next: Option<NodeIdx>,
    steps: usize,
}

impl Iterator for Ancestors<'_> {
    type Item = NodeIdx;

    fn next(&mut self) -> Option<NodeIdx> {
        let cur = self.next?;
        // cycles only exist in corpora that fail validation; stop anyway
        self.steps += 1;
        if self.steps > self.forest.nodes.len() {
            self.next = None;
            return None;
        }
        self.next = self.forest.parent[cur];
        Some(cur)
    }
}

/// Two forests plus the references between them. Immutable once built.
#[derive(Debug, Clone)]
pub struct BaseNetwork {
    judicial: HierForest,
    legislative: HierForest,
    refs: Vec<RefEdge>,
    resolved: Vec<Option<(NodeIdx, NodeIdx)>>,
    cross_duplicates: Vec<NodeId>,
}

impl BaseNetwork {
    /// Splits `nodes` by branch and assembles the network without
    /// validation. Use [`validate`] (or `ingest::load_corpus`, which refuses
    /// invalid input) before running counting operations.
    pub fn new(nodes: Vec<Node>, refs: Vec<RefEdge>) -> Self {
        let (jud, leg): (Vec<Node>, Vec<Node>) =
            nodes.into_iter().partition(|n| n.level.is_judicial());
        let judicial = HierForest::new(Branch::Judicial, jud);
        let legislative = HierForest::new(Branch::Legislative, leg);
        let cross_duplicates = judicial
            .nodes
            .iter()
            .filter(|n| legislative.index.contains_key(&n.id))
            .map(|n| n.id.clone())
            .collect();
        let resolved = refs
            .iter()
            .map(|r| Some((judicial.idx(r.source.as_str())?, legislative.idx(r.target.as_str())?)))
            .collect();
        BaseNetwork { judicial, legislative, refs, resolved, cross_duplicates }
    }

    pub fn empty() -> Self {
        Self::new(Vec::new(), Vec::new())
    }

    pub fn judicial(&self) -> &HierForest {
        &self.judicial
    }

    pub fn legislative(&self) -> &HierForest {
        &self.legislative
    }

    pub fn forest(&self, branch: Branch) -> &HierForest {
        match branch {
            Branch::Judicial => &self.judicial,
            Branch::Legislative => &self.legislative,
        }
    }

    pub fn refs(&self) -> &[RefEdge] {
        &self.refs
    }

    /// References whose endpoints resolve, as (paragraph, legislative node, multiplicity).
    pub fn resolved_refs(&self) -> impl Iterator<Item = (NodeIdx, NodeIdx, u64)> + '_ {
        self.refs
            .iter()
            .zip(&self.resolved)
            .filter_map(|(r, res)| res.map(|(s, t)| (s, t, r.multiplicity)))
    }

    pub fn total_references(&self) -> u64 {
        self.refs.iter().map(|r| r.multiplicity).sum()
    }

    pub fn node_count(&self) -> usize {
        self.judicial.len() + self.legislative.len()
    }

    pub fn find(&self, id: &str) -> Option<(Branch, NodeIdx)> {
        if let Some(i) = self.judicial.idx(id) {
            return Some((Branch::Judicial, i));
        }
        self.legislative.idx(id).map(|i| (Branch::Legislative, i))
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.find(id).map(|(b, i)| self.forest(b).node(i))
    }

    pub fn level_nodes(&self, level: LevelTag) -> Vec<NodeId> {
        let forest = self.forest(level.branch);
        forest.level_indices(level).into_iter().map(|i| forest.id(i).clone()).collect()
    }

    pub fn subtree(&self, root: &str) -> Result<BTreeSet<NodeId>> {
        let (branch, idx) = self.find(root).ok_or_else(|| Error::NodeNotFound(root.to_owned()))?;
        let forest = self.forest(branch);
        Ok(forest.descendants_inclusive(idx).into_iter().map(|i| forest.id(i).clone()).collect())
    }

    /// Hierarchy edges with their kind, as (parent, child, kind).
    pub fn hierarchy_edges(&self) -> Vec<(NodeId, NodeId, HierEdgeKind)> {
        let mut out = Vec::new();
        for forest in [&self.judicial, &self.legislative] {
            for (i, n) in forest.nodes.iter().enumerate() {
                if let Some(p) = forest.parent[i] {
                    let kind = HierEdgeKind::between(forest.level(p), n.level);
                    out.push((forest.id(p).clone(), n.id.clone(), kind));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    DuplicateId,
    ReservedId,
    DanglingParent,
    CrossBranchParent,
    RankNotCoarser,
    IncompleteJudicialChain,
    RootNotTopRank,
    Cycle,
    UnknownSource,
    UnknownTarget,
    SourceNotParagraph,
    TargetNotLegislative,
    ZeroMultiplicity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Node id, or `source->target` for reference edges.
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, kind: ViolationKind, subject: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation { kind, subject: subject.into(), message: message.into() });
    }
}

/// Checks every structural invariant and lists the violations.
pub fn validate(base: &BaseNetwork) -> ValidationReport {
    let mut report = ValidationReport::default();
    for forest in [&base.judicial, &base.legislative] {
        check_forest(base, forest, &mut report);
    }
    for id in &base.cross_duplicates {
        report.push(ViolationKind::DuplicateId, id.as_str(), "id used in both forests");
    }
    for r in &base.refs {
        let subject = format!("{}->{}", r.source, r.target);
        match base.find(r.source.as_str()) {
            None => report.push(ViolationKind::UnknownSource, &subject, "source not found"),
            Some((b, i)) if b != Branch::Judicial || base.forest(b).level(i) != LevelTag::PARAGRAPH => {
                report.push(ViolationKind::SourceNotParagraph, &subject, "source not a Paragraph")
            }
            Some(_) => {}
        }
        match base.find(r.target.as_str()) {
            None => report.push(ViolationKind::UnknownTarget, &subject, "target not found"),
            Some((Branch::Judicial, _)) => {
                report.push(ViolationKind::TargetNotLegislative, &subject, "target not a legislative node")
            }
            Some(_) => {}
        }
        if r.multiplicity == 0 {
            report.push(ViolationKind::ZeroMultiplicity, &subject, "multiplicity must be at least 1");
        }
    }
    report
}

fn check_forest(base: &BaseNetwork, forest: &HierForest, report: &mut ValidationReport) {
    for id in &forest.duplicates {
        report.push(ViolationKind::DuplicateId, id.as_str(), "duplicate node id");
    }
    for (i, n) in forest.nodes.iter().enumerate() {
        if n.id.as_str().ends_with(PROXY_SUFFIX) {
            report.push(ViolationKind::ReservedId, n.id.as_str(), format!("ids ending in {PROXY_SUFFIX:?} are reserved"));
        }
        match (&n.parent, forest.parent[i]) {
            (None, _) => {
                if n.level.rank != 1 {
                    report.push(
                        ViolationKind::RootNotTopRank,
                        n.id.as_str(),
                        format!("root at rank {} ({}), expected {}", n.level.rank, n.level, LevelTag::new(n.level.branch, 1).unwrap()),
                    );
                }
            }
            (Some(p), None) => {
                if base.find(p.as_str()).is_some() {
                    report.push(ViolationKind::CrossBranchParent, n.id.as_str(), format!("parent {p} is in the other forest"));
                } else {
                    report.push(ViolationKind::DanglingParent, n.id.as_str(), format!("parent {p} not found"));
                }
            }
            (Some(_), Some(p)) => {
                let pl = forest.level(p);
                if pl.rank >= n.level.rank {
                    report.push(
                        ViolationKind::RankNotCoarser,
                        n.id.as_str(),
                        format!("parent {} ({pl}) is not coarser than {}", forest.id(p), n.level),
                    );
                } else if forest.branch == Branch::Judicial && pl.rank + 1 != n.level.rank {
                    report.push(
                        ViolationKind::IncompleteJudicialChain,
                        n.id.as_str(),
                        format!("judicial chain skips from {pl} to {}", n.level),
                    );
                }
            }
        }
    }
    // cycles: nodes that never reach a root
    let mut state = vec![0u8; forest.len()]; // 0 unknown, 1 reaches root, 2 on cycle
    for start in 0..forest.len() {
        if state[start] != 0 {
            continue;
        }
        let mut path = Vec::new();
        let mut on_path = std::collections::HashSet::new();
        let mut cur = Some(start);
        let verdict = loop {
            match cur {
                None => break 1,
                Some(c) if state[c] != 0 => break state[c],
                Some(c) if !on_path.insert(c) => break 2,
                Some(c) => {
                    path.push(c);
                    cur = forest.parent[c];
                }
            }
        };
        for &p in &path {
            state[p] = verdict;
        }
    }
    for (i, s) in state.iter().enumerate() {
        if *s == 2 {
            report.push(ViolationKind::Cycle, forest.id(i).as_str(), "node lies on or below a parent cycle");
        }
    }
}
