//! Line-oriented corpus format: one JSON object per line.
//!
//! ```text
//! {"kind":"node","id":"C1","branch":"judicial","rank":"court","parent":null,"label":"Court 1","attributes":{}}
//! {"kind":"edge","source":"q1","target":"A1a","multiplicity":1}
//! ```
//!
//! Node records must precede their children and all edge records.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{validate, BaseNetwork, Branch, LevelTag, Node, NodeId, RefEdge};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum CorpusRecord {
    Node {
        id: String,
        branch: Branch,
        rank: LevelName,
        parent: Option<String>,
        label: String,
        attributes: BTreeMap<String, String>,
    },
    Edge {
        source: String,
        target: String,
        multiplicity: u64,
    },
}

/// Level name as written in the file; checked against the branch on load.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LevelName(pub String);

impl CorpusRecord {
    fn from_node(n: &Node) -> Self {
        CorpusRecord::Node {
            id: n.id.0.clone(),
            branch: n.level.branch(),
            rank: LevelName(n.level.name().to_owned()),
            parent: n.parent.as_ref().map(|p| p.0.clone()),
            label: n.label.clone(),
            attributes: n.attributes.clone(),
        }
    }
}

/// Reads and validates a corpus file. Fails on the first malformed line,
/// ordering violation or structural invariant violation.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<BaseNetwork> {
    let file = std::fs::File::open(path)?;
    read_corpus(std::io::BufReader::new(file))
}

pub fn read_corpus(reader: impl BufRead) -> Result<BaseNetwork> {
    let base = parse_corpus(reader)?;
    let report = validate(&base);
    if let Some(v) = report.violations.first() {
        return Err(Error::Invalid(format!("{v} ({} violation(s) total)", report.violations.len())));
    }
    Ok(base)
}

/// Line-level checks only (syntax, ordering, known ids); structural
/// invariants are left to [`validate`].
pub fn parse_corpus(reader: impl BufRead) -> Result<BaseNetwork> {
    let mut nodes: Vec<Node> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut refs: Vec<RefEdge> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line: line_no, message };
        let record: CorpusRecord = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        match record {
            CorpusRecord::Node { id, branch, rank, parent, label, attributes } => {
                if !refs.is_empty() {
                    return Err(err(format!("node {id} after edge records")));
                }
                let level = LevelTag::from_name(&rank.0)
                    .filter(|l| l.branch() == branch)
                    .ok_or_else(|| err(format!("rank {:?} is not a {} level", rank.0, branch.name())))?;
                if let Some(p) = &parent {
                    if !seen.contains(p) {
                        return Err(err(format!("parent {p} of {id} is not defined on an earlier line")));
                    }
                }
                if !seen.insert(id.clone()) {
                    return Err(err(format!("duplicate node id {id}")));
                }
                nodes.push(Node { id: NodeId(id), level, parent: parent.map(NodeId), label, attributes });
            }
            CorpusRecord::Edge { source, target, multiplicity } => {
                for endpoint in [&source, &target] {
                    if !seen.contains(endpoint) {
                        return Err(err(format!("edge endpoint {endpoint} is not a known node")));
                    }
                }
                if multiplicity == 0 {
                    return Err(err("multiplicity must be at least 1".into()));
                }
                refs.push(RefEdge { source: NodeId(source), target: NodeId(target), multiplicity });
            }
        }
    }
    Ok(BaseNetwork::new(nodes, refs))
}

/// Canonical records: judicial then legislative nodes in preorder (roots
/// and children by id), then edges sorted by (source, target).
pub fn corpus_records(base: &BaseNetwork) -> Vec<CorpusRecord> {
    let mut out = Vec::with_capacity(base.node_count() + base.refs().len());
    for forest in [base.judicial(), base.legislative()] {
        let mut emitted = vec![false; forest.len()];
        for &root in forest.roots() {
            for n in forest.descendants_inclusive(root) {
                emitted[n] = true;
                out.push(CorpusRecord::from_node(forest.node(n)));
            }
        }
        // nodes on parent cycles are unreachable from roots; keep them so
        // invalid corpora survive a save for inspection
        for (n, done) in emitted.iter().enumerate() {
            if !done {
                out.push(CorpusRecord::from_node(forest.node(n)));
            }
        }
    }
    let mut refs: Vec<&RefEdge> = base.refs().iter().collect();
    refs.sort_by(|a, b| (&a.source, &a.target, a.multiplicity).cmp(&(&b.source, &b.target, b.multiplicity)));
    out.extend(refs.into_iter().map(|r| CorpusRecord::Edge {
        source: r.source.0.clone(),
        target: r.target.0.clone(),
        multiplicity: r.multiplicity,
    }));
    out
}

pub fn write_corpus(base: &BaseNetwork, mut writer: impl Write) -> Result<()> {
    for record in corpus_records(base) {
        serde_json::to_writer(&mut writer, &record).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn corpus_to_string(base: &BaseNetwork) -> String {
    let mut buf = Vec::new();
    write_corpus(base, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

pub fn save_corpus(base: &BaseNetwork, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_corpus(base, &mut w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::t1;

    fn load(text: &str) -> Result<BaseNetwork> {
        read_corpus(text.as_bytes())
    }

    #[test]
    fn t1_roundtrip() {
        let text = corpus_to_string(&t1());
        let base = load(&text).unwrap();
        assert_eq!(base.node_count(), 14);
        assert_eq!(base.refs().len(), 6);
        assert_eq!(corpus_to_string(&base), text);
    }

    #[test]
    fn exact_key_layout() {
        let text = corpus_to_string(&t1());
        let first = text.lines().next().unwrap();
        assert_eq!(
            first,
            r#"{"kind":"node","id":"C1","branch":"judicial","rank":"court","parent":null,"label":"Court 1","attributes":{"competence":"civil"}}"#
        );
        let last = text.lines().last().unwrap();
        assert_eq!(last, r#"{"kind":"edge","source":"q3","target":"B1","multiplicity":1}"#);
    }

    #[test]
    fn empty_file_is_empty_network() {
        let base = load("").unwrap();
        assert_eq!(base.node_count(), 0);
        assert!(base.refs().is_empty());
    }

    #[test]
    fn unknown_target_names_the_line() {
        let mut text = corpus_to_string(&t1());
        text.push_str(r#"{"kind":"edge","source":"q1","target":"ZZ","multiplicity":1}"#);
        text.push('\n');
        match load(&text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 21);
                assert!(message.contains("ZZ"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_lines() {
        let node = |id: &str, parent: &str| {
            format!(r#"{{"kind":"node","id":"{id}","branch":"legislative","rank":"statute","parent":{parent},"label":"","attributes":{{}}}}"#)
        };
        assert!(matches!(load("{not json"), Err(Error::Parse { line: 1, .. })));
        let dup = format!("{}\n{}\n", node("A", "null"), node("A", "null"));
        assert!(matches!(load(&dup), Err(Error::Parse { line: 2, .. })));
        let dangling = node("A", "\"B\"");
        assert!(matches!(load(&dangling), Err(Error::Parse { line: 1, .. })));
        let wrong_rank = r#"{"kind":"node","id":"A","branch":"judicial","rank":"statute","parent":null,"label":"","attributes":{}}"#;
        assert!(matches!(load(wrong_rank), Err(Error::Parse { line: 1, .. })));
        let extra_key = r#"{"kind":"edge","source":"a","target":"b","multiplicity":1,"weight":2}"#;
        assert!(matches!(load(extra_key), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn invariant_violation_fails_load() {
        // a section as a root passes line checks but fails validation
        let text = r#"{"kind":"node","id":"S","branch":"legislative","rank":"section","parent":null,"label":"","attributes":{}}"#;
        assert!(matches!(load(text), Err(Error::Invalid(_))));
    }

    #[test]
    fn node_after_edge_is_rejected() {
        let mut text = corpus_to_string(&t1());
        text.push_str(r#"{"kind":"node","id":"Z","branch":"legislative","rank":"statute","parent":null,"label":"","attributes":{}}"#);
        assert!(matches!(load(&text), Err(Error::Parse { line: 21, .. })));
    }
}
