//! Small hand-built corpora used by tests, examples and the acceptance suite.

use crate::corpus::{BaseNetwork, LevelTag, Node, RefEdge};

/// The 14-node micro-corpus used for golden values.
///
/// ```text
/// Legislative: A "BGB" { A1 "433" { A1a "1", A1b "2" }, A2 "434" }, B "VwGO" { B1 "154" }
/// Judicial:    C1 -> P1 -> D1 { q1, q2 }, D2 { q3 }
/// References:  q1->A1a, q1->A2, q2->A1, q3->A1b, q3->A2, q3->B1
/// ```
pub fn t1() -> BaseNetwork {
    BaseNetwork::new(t1_nodes(), t1_refs())
}

pub fn t1_nodes() -> Vec<Node> {
    vec![
        Node::new("C1", LevelTag::COURT, None, "Court 1").with_attribute("competence", "civil"),
        Node::new("P1", LevelTag::PANEL, Some("C1"), "Panel 1"),
        Node::new("D1", LevelTag::DECISION, Some("P1"), "Decision 1"),
        Node::new("D2", LevelTag::DECISION, Some("P1"), "Decision 2"),
        Node::new("q1", LevelTag::PARAGRAPH, Some("D1"), "1"),
        Node::new("q2", LevelTag::PARAGRAPH, Some("D1"), "2"),
        Node::new("q3", LevelTag::PARAGRAPH, Some("D2"), "1"),
        Node::new("A", LevelTag::STATUTE, None, "BGB"),
        Node::new("A1", LevelTag::SECTION, Some("A"), "433"),
        Node::new("A1a", LevelTag::SUB, Some("A1"), "1"),
        Node::new("A1b", LevelTag::SUB, Some("A1"), "2"),
        Node::new("A2", LevelTag::SECTION, Some("A"), "434"),
        Node::new("B", LevelTag::STATUTE, None, "VwGO"),
        Node::new("B1", LevelTag::SECTION, Some("B"), "154"),
    ]
}

pub fn t1_refs() -> Vec<RefEdge> {
    vec![
        RefEdge::new("q1", "A1a", 1),
        RefEdge::new("q1", "A2", 1),
        RefEdge::new("q2", "A1", 1),
        RefEdge::new("q3", "A1b", 1),
        RefEdge::new("q3", "A2", 1),
        RefEdge::new("q3", "B1", 1),
    ]
}

/// A random valid corpus with at most `max_nodes` nodes (at least 6).
///
/// Judicial chains are complete; legislative children may skip ranks, and
/// references may target any legislative node with multiplicities up to 3.
/// Sibling labels are positional so canonical citations resolve.
pub fn random_corpus(seed: u64, max_nodes: usize) -> BaseNetwork {
    use rand::{Rng, SeedableRng};
    use std::collections::BTreeMap;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let max_nodes = max_nodes.max(6);
    let n_jud = rng.random_range(4..=(max_nodes / 2).max(4));
    let n_leg = rng.random_range(1..=(max_nodes - n_jud).max(1));
    let mut nodes = Vec::new();
    let mut child_count: BTreeMap<String, usize> = BTreeMap::new();
    let mut add = |nodes: &mut Vec<Node>, id: String, level: LevelTag, parent: Option<String>, label: Option<String>| {
        let label = label.unwrap_or_else(|| {
            let c = child_count.entry(parent.clone().unwrap_or_default()).or_insert(0);
            *c += 1;
            c.to_string()
        });
        nodes.push(Node::new(id, level, parent.as_deref(), label));
    };

    let jl = [LevelTag::COURT, LevelTag::PANEL, LevelTag::DECISION, LevelTag::PARAGRAPH];
    let mut jud: Vec<(String, u8)> = Vec::new();
    for (r, level) in jl.iter().enumerate() {
        let id = format!("j{r}");
        let parent = (r > 0).then(|| format!("j{}", r - 1));
        add(&mut nodes, id.clone(), *level, parent, None);
        jud.push((id, level.rank()));
    }
    for i in jl.len()..n_jud {
        let id = format!("j{i}");
        let open: Vec<&(String, u8)> = jud.iter().filter(|(_, r)| *r < 4).collect();
        let (parent, level) = if rng.random_bool(0.1) {
            (None, LevelTag::COURT)
        } else {
            let (p, r) = open[rng.random_range(0..open.len())];
            (Some(p.clone()), jl[*r as usize])
        };
        add(&mut nodes, id.clone(), level, parent, None);
        jud.push((id, level.rank()));
    }

    let mut leg: Vec<(String, u8)> = Vec::new();
    let mut statutes = 0;
    for i in 0..n_leg {
        let id = format!("l{i}");
        let open: Vec<&(String, u8)> = leg.iter().filter(|(_, r)| *r < 5).collect();
        if leg.is_empty() || open.is_empty() || rng.random_bool(0.15) {
            statutes += 1;
            add(&mut nodes, id.clone(), LevelTag::STATUTE, None, Some(format!("L{statutes}")));
            leg.push((id, 1));
            continue;
        }
        let (p, r) = open[rng.random_range(0..open.len())];
        let rank = (r + rng.random_range(1..=2)).min(5);
        let level = LevelTag::new(crate::corpus::Branch::Legislative, rank).expect("rank in range");
        add(&mut nodes, id.clone(), level, Some(p.clone()), None);
        leg.push((id, rank));
    }

    let paragraphs: Vec<&String> = jud.iter().filter(|(_, r)| *r == 4).map(|(id, _)| id).collect();
    let mut refs: BTreeMap<(String, String), u64> = BTreeMap::new();
    for _ in 0..rng.random_range(0..=25) {
        let q = paragraphs[rng.random_range(0..paragraphs.len())];
        let t = &leg[rng.random_range(0..leg.len())].0;
        *refs.entry((q.clone(), t.clone())).or_insert(0) += rng.random_range(1..=3);
    }
    BaseNetwork::new(nodes, refs.into_iter().map(|((s, t), m)| RefEdge::new(s, t, m)).collect())
}
