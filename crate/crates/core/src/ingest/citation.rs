//! Canonical citation strings: `§ <sec>[ Abs. <sub>][ S. <sub2>][ Nr. <sub3>] <statute>`.
//!
//! Ranged or enumerated citations (`§§ 705 ff. BGB`) are outside the grammar.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::corpus::{BaseNetwork, LevelTag, NodeId, NodeIdx, RefEdge};
use crate::error::{Error, Result};

const MARKERS: [(&str, LevelTag); 3] = [("Abs.", LevelTag::SUB), ("S.", LevelTag::SUB2), ("Nr.", LevelTag::SUB3)];

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CitationPath {
    steps: Vec<(LevelTag, String)>,
}

impl CitationPath {
    /// Checks that ranks start at statute and strictly increase.
    pub fn new(steps: Vec<(LevelTag, String)>) -> Result<Self> {
        let bad = |m: &str| Error::InvalidArgument(format!("citation path {m}"));
        match steps.first() {
            Some((l, _)) if *l == LevelTag::STATUTE => {}
            _ => return Err(bad("must start at statute level")),
        }
        if steps.iter().any(|(l, _)| !l.is_legislative()) {
            return Err(bad("must be legislative"));
        }
        if steps.windows(2).any(|w| w[0].0.rank() >= w[1].0.rank()) {
            return Err(bad("ranks must strictly increase"));
        }
        if steps.iter().any(|(_, t)| t.is_empty() || t.chars().any(char::is_whitespace)) {
            return Err(bad("tokens must be non-empty words"));
        }
        Ok(CitationPath { steps })
    }

    pub fn steps(&self) -> &[(LevelTag, String)] {
        &self.steps
    }

    pub fn statute(&self) -> &str {
        &self.steps[0].1
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

impl fmt::Display for CitationPath {
    /// Canonical text form; `parse_citation` inverts it for paths that
    /// include a section.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (level, token) in &self.steps[1..] {
            match *level {
                LevelTag::SECTION => write!(f, "§ {token} ")?,
                l => {
                    let marker = MARKERS.iter().find(|(_, m)| *m == l).map(|(s, _)| *s).unwrap_or("?");
                    write!(f, "{marker} {token} ")?
                }
            }
        }
        f.write_str(self.statute())
    }
}

pub fn parse_citation(text: &str) -> Result<CitationPath> {
    let tokens: Vec<(usize, &str)> = text
        .split_whitespace()
        .map(|t| (t.as_ptr() as usize - text.as_ptr() as usize, t))
        .collect();
    let err = |position: usize, message: &str| Error::Citation { position, message: message.to_owned() };
    let Some(&(pos0, first)) = tokens.first() else {
        return Err(err(0, "empty citation"));
    };
    if first != "§" {
        return Err(err(pos0, "missing § section token"));
    }
    if tokens.len() < 3 {
        return Err(err(text.len(), "expected <section> <statute> after §"));
    }
    let (statute_pos, statute) = tokens[tokens.len() - 1];
    if is_marker(statute) {
        return Err(err(statute_pos, "missing statute abbreviation"));
    }
    let mut steps = vec![(LevelTag::STATUTE, statute.to_owned())];
    let (sec_pos, section) = tokens[1];
    if is_marker(section) {
        return Err(err(sec_pos, "missing section number"));
    }
    steps.push((LevelTag::SECTION, section.to_owned()));
    let body = &tokens[2..tokens.len() - 1];
    if body.len() % 2 != 0 {
        let (p, _) = body[body.len() - 1];
        return Err(err(p, "sub-level marker without value"));
    }
    for pair in body.chunks(2) {
        let (mpos, marker) = pair[0];
        let (vpos, value) = pair[1];
        let Some(&(_, level)) = MARKERS.iter().find(|(m, _)| *m == marker) else {
            return Err(err(mpos, "expected Abs., S. or Nr."));
        };
        if is_marker(value) {
            return Err(err(vpos, "marker value missing"));
        }
        if steps.last().is_some_and(|(l, _)| l.rank() >= level.rank()) {
            return Err(err(mpos, "sub-level markers out of order"));
        }
        steps.push((level, value.to_owned()));
    }
    CitationPath::new(steps)
}

fn is_marker(token: &str) -> bool {
    token == "§" || MARKERS.iter().any(|(m, _)| *m == token)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum Resolution {
    /// `depth` counts matched path steps (1 = statute only).
    Resolved { node: NodeId, depth: usize, truncated: bool },
    Unresolved { statute: String },
}

impl Resolution {
    pub fn node(&self) -> Option<&NodeId> {
        match self {
            Resolution::Resolved { node, .. } => Some(node),
            Resolution::Unresolved { .. } => None,
        }
    }

    pub fn is_truncated(&self) -> bool {
        matches!(self, Resolution::Resolved { truncated: true, .. })
    }
}

/// Deepest legislative node whose label path matches a prefix of `path`.
pub fn resolve_citation(path: &CitationPath, base: &BaseNetwork) -> Resolution {
    let leg = base.legislative();
    let root = leg
        .roots()
        .iter()
        .copied()
        .find(|&r| leg.level(r) == LevelTag::STATUTE && leg.node(r).label == path.statute());
    let Some(mut cur) = root else {
        return Resolution::Unresolved { statute: path.statute().to_owned() };
    };
    let mut depth = 1;
    for (level, token) in &path.steps()[1..] {
        let next: Option<NodeIdx> = leg
            .children(cur)
            .iter()
            .copied()
            .find(|&c| leg.level(c) == *level && leg.node(c).label == *token);
        match next {
            Some(n) => {
                cur = n;
                depth += 1;
            }
            None => break,
        }
    }
    Resolution::Resolved { node: leg.id(cur).clone(), depth, truncated: depth < path.len() }
}

/// Label path from the statute down to a legislative node; `None` for
/// unknown ids and judicial nodes.
pub fn citation_for(base: &BaseNetwork, id: &str) -> Option<CitationPath> {
    let leg = base.legislative();
    let idx = leg.idx(id)?;
    let mut chain: Vec<NodeIdx> = leg.ancestors(idx).collect();
    chain.reverse();
    chain.push(idx);
    CitationPath::new(chain.into_iter().map(|i| (leg.level(i), leg.node(i).label.clone())).collect()).ok()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CitationIssue {
    pub source: String,
    pub citation: String,
    pub problem: String,
}

/// Loss accounting for a batch of citations.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CitationReport {
    pub resolved: usize,
    pub truncated: Vec<CitationIssue>,
    pub unresolved: Vec<CitationIssue>,
    pub malformed: Vec<CitationIssue>,
}

/// Turns (paragraph id, citation text) pairs into reference edges,
/// collapsing repeats into multiplicities. Nothing is dropped silently:
/// every citation that does not resolve cleanly lands in the report.
pub fn references_from_citations<'a>(
    base: &BaseNetwork,
    citations: impl IntoIterator<Item = (&'a str, &'a str)>,
) -> (Vec<RefEdge>, CitationReport) {
    let mut counts: BTreeMap<(String, NodeId), u64> = BTreeMap::new();
    let mut report = CitationReport::default();
    for (source, text) in citations {
        let issue = |problem: String| CitationIssue { source: source.to_owned(), citation: text.to_owned(), problem };
        let path = match parse_citation(text) {
            Ok(p) => p,
            Err(e) => {
                report.malformed.push(issue(e.to_string()));
                continue;
            }
        };
        match resolve_citation(&path, base) {
            Resolution::Unresolved { statute } => report.unresolved.push(issue(format!("unknown statute {statute}"))),
            Resolution::Resolved { node, depth, truncated } => {
                if truncated {
                    report.truncated.push(issue(format!("resolved to {node} after {depth} of {} steps", path.len())));
                }
                report.resolved += 1;
                *counts.entry((source.to_owned(), node)).or_insert(0) += 1;
            }
        }
    }
    let refs = counts
        .into_iter()
        .map(|((source, target), multiplicity)| RefEdge { source: NodeId(source), target, multiplicity })
        .collect();
    (refs, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::t1;

    fn steps(p: &CitationPath) -> Vec<(&'static str, &str)> {
        p.steps().iter().map(|(l, t)| (l.name(), t.as_str())).collect()
    }

    #[test]
    fn parses_full_path() {
        let p = parse_citation("§ 433 Abs. 1 S. 2 BGB").unwrap();
        assert_eq!(steps(&p), [("statute", "BGB"), ("section", "433"), ("sub", "1"), ("sub2", "2")]);
        assert_eq!(p.to_string(), "§ 433 Abs. 1 S. 2 BGB");
    }

    #[test]
    fn parses_section_only() {
        let p = parse_citation("§ 154 VwGO").unwrap();
        assert_eq!(steps(&p), [("statute", "VwGO"), ("section", "154")]);
    }

    #[test]
    fn skipped_marker_is_allowed() {
        let p = parse_citation("§ 7 Nr. 3 GG").unwrap();
        assert_eq!(steps(&p), [("statute", "GG"), ("section", "7"), ("sub3", "3")]);
    }

    #[test]
    fn rejects_non_canonical() {
        match parse_citation("Abs. 1 BGB") {
            Err(Error::Citation { position, message }) => {
                assert_eq!(position, 0);
                assert_eq!(message, "missing § section token");
            }
            other => panic!("{other:?}"),
        }
        for bad in ["", "§", "§ 433", "§ 433 Abs. BGB", "§ 433 S. 1 Abs. 2 BGB", "§ 433 Foo 1 BGB", "§ 433 Abs."] {
            assert!(parse_citation(bad).is_err(), "{bad:?}");
        }
        match parse_citation("§ 433 S. 1 Abs. 2 BGB") {
            Err(Error::Citation { position, .. }) => assert_eq!(position, 12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn resolves_on_t1() {
        let base = t1();
        let r = resolve_citation(&parse_citation("§ 433 Abs. 1 BGB").unwrap(), &base);
        assert_eq!(r, Resolution::Resolved { node: "A1a".into(), depth: 3, truncated: false });
        let r = resolve_citation(&parse_citation("§ 433 Abs. 9 BGB").unwrap(), &base);
        assert_eq!(r, Resolution::Resolved { node: "A1".into(), depth: 2, truncated: true });
        let r = resolve_citation(&parse_citation("§ 1 XYZ").unwrap(), &base);
        assert_eq!(r, Resolution::Unresolved { statute: "XYZ".into() });
        let r = resolve_citation(&parse_citation("§ 999 BGB").unwrap(), &base);
        assert_eq!(r, Resolution::Resolved { node: "A".into(), depth: 1, truncated: true });
    }

    #[test]
    fn citation_for_roundtrips() {
        let base = t1();
        let p = citation_for(&base, "A1b").unwrap();
        assert_eq!(p.to_string(), "§ 433 Abs. 2 BGB");
        assert_eq!(resolve_citation(&parse_citation(&p.to_string()).unwrap(), &base).node().unwrap().as_str(), "A1b");
        assert!(citation_for(&base, "q1").is_none());
    }

    #[test]
    fn citations_to_references() {
        let base = t1();
        let (refs, report) = references_from_citations(
            &base,
            [
                ("q1", "§ 433 Abs. 1 BGB"),
                ("q1", "§ 433 Abs. 1 BGB"),
                ("q1", "§ 154 VwGO"),
                ("q2", "§ 1 XYZ"),
                ("q2", "Abs. 1 BGB"),
                ("q3", "§ 433 Abs. 9 BGB"),
            ],
        );
        assert_eq!(
            refs,
            [RefEdge::new("q1", "A1a", 2), RefEdge::new("q1", "B1", 1), RefEdge::new("q3", "A1", 1)]
        );
        assert_eq!(report.resolved, 4);
        assert_eq!(report.unresolved.len(), 1);
        assert_eq!(report.malformed.len(), 1);
        assert_eq!(report.truncated.len(), 1);
    }
}
