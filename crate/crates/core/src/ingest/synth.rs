//! Seeded synthetic corpora.
//!
//! Node counts per level are exact; children are spread over parents at
//! random subject to a branching cap. References are drawn one at a time
//! (paragraph, then target rank, then a uniform node of that rank) and
//! collapsed into multiplicities, so their total equals the configured
//! count exactly. Planted patterns are placed first and count towards it.

use std::collections::{BTreeMap, BTreeSet};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{BaseNetwork, LevelTag, Node, NodeId, NodeIdx, RefEdge};
use crate::error::{Error, Result};

const AREAS: [&str; 4] = ["civil", "criminal", "administrative", "tax"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LevelCounts {
    pub court: usize,
    pub panel: usize,
    pub decision: usize,
    pub paragraph: usize,
    pub statute: usize,
    pub section: usize,
    pub sub: usize,
    pub sub2: usize,
    pub sub3: usize,
}

impl LevelCounts {
    pub fn get(&self, level: LevelTag) -> usize {
        match level {
            LevelTag::COURT => self.court,
            LevelTag::PANEL => self.panel,
            LevelTag::DECISION => self.decision,
            LevelTag::PARAGRAPH => self.paragraph,
            LevelTag::STATUTE => self.statute,
            LevelTag::SECTION => self.section,
            LevelTag::SUB => self.sub,
            LevelTag::SUB2 => self.sub2,
            _ => self.sub3,
        }
    }
}

/// Share of drawn references aimed at each legislative rank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankFractions {
    pub statute: f64,
    pub section: f64,
    pub sub: f64,
    pub sub2: f64,
    pub sub3: f64,
}

impl Default for RankFractions {
    fn default() -> Self {
        RankFractions { statute: 0.05, section: 0.45, sub: 0.3, sub2: 0.15, sub3: 0.05 }
    }
}

impl RankFractions {
    fn as_array(&self) -> [f64; 5] {
        [self.statute, self.section, self.sub, self.sub2, self.sub3]
    }
}

/// How drawn references are spread over paragraphs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParagraphDistribution {
    #[default]
    Uniform,
    /// Weight of the i-th paragraph (in a seeded random order) ∝ 1/i^exponent.
    Zipf { exponent: f64 },
}

/// A section mentioned by nearly every decision, at most `max_mentions`
/// times each, in distinct paragraphs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProceduralSpec {
    pub decision_fraction: f64,
    #[serde(default = "two")]
    pub max_mentions: usize,
}

fn two() -> usize {
    2
}

/// `size` sections co-referenced together in `occurrences` paragraphs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSpec {
    pub size: usize,
    pub occurrences: usize,
    /// Restrict the paragraphs to one court (0-based court index).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub court: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantedSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub procedural: Option<ProceduralSpec>,
    pub clusters: Vec<ClusterSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub counts: LevelCounts,
    /// Upper bound on children per parent, all levels.
    pub max_branching: usize,
    /// Total reference multiplicity, planted references included.
    pub references: u64,
    pub rank_fractions: RankFractions,
    pub paragraph_distribution: ParagraphDistribution,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub planted: Option<PlantedSpec>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            counts: LevelCounts {
                court: 3,
                panel: 8,
                decision: 40,
                paragraph: 400,
                statute: 6,
                section: 120,
                sub: 200,
                sub2: 120,
                sub3: 40,
            },
            max_branching: 40,
            references: 900,
            rank_fractions: RankFractions::default(),
            paragraph_distribution: ParagraphDistribution::Uniform,
            planted: None,
        }
    }
}

impl SynthConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("synthetic config: {e}")))
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn check(&self) -> Result<()> {
        let fr = self.rank_fractions.as_array();
        if fr.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(Error::InvalidArgument("rank fractions must be non-negative".into()));
        }
        let sum: f64 = fr.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("rank fractions sum to {sum}, expected 1")));
        }
        if let ParagraphDistribution::Zipf { exponent } = self.paragraph_distribution {
            if !exponent.is_finite() || exponent < 0.0 {
                return Err(Error::InvalidArgument("zipf exponent must be non-negative".into()));
            }
        }
        if let Some(pr) = self.planted.as_ref().and_then(|p| p.procedural) {
            if !(pr.decision_fraction > 0.0 && pr.decision_fraction <= 1.0) {
                return Err(Error::InvalidArgument("procedural decision_fraction must lie in (0, 1]".into()));
            }
            if !(1..=2).contains(&pr.max_mentions) {
                return Err(Error::InvalidArgument("procedural max_mentions must be 1 or 2".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlantedProcedural {
    pub node: NodeId,
    pub decisions: usize,
    pub mentions: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlantedCluster {
    pub sections: Vec<NodeId>,
    pub paragraphs: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct PlantedReport {
    pub procedural: Option<PlantedProcedural>,
    pub clusters: Vec<PlantedCluster>,
}

#[derive(Debug, Clone)]
pub struct GeneratedCorpus {
    pub base: BaseNetwork,
    pub planted: PlantedReport,
}

pub fn generate_synthetic(config: &SynthConfig) -> Result<GeneratedCorpus> {
    config.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut nodes = Vec::new();

    // judicial: global numbering per level
    let courts: Vec<String> = (1..=config.counts.court).map(|i| format!("C{i}")).collect();
    for (i, c) in courts.iter().enumerate() {
        nodes.push(Node::new(c, LevelTag::COURT, None, format!("Court {}", i + 1)).with_attribute("area", AREAS[i % AREAS.len()]));
    }
    let mut parents = courts;
    let mut judicial_levels = vec![parents.clone()];
    for (level, prefix, label) in [
        (LevelTag::PANEL, "P", "Panel"),
        (LevelTag::DECISION, "D", "Decision"),
        (LevelTag::PARAGRAPH, "Q", "Paragraph"),
    ] {
        let per_parent = spread(&mut rng, parents.len(), config.counts.get(level), config.max_branching, level)?;
        let mut next = Vec::new();
        for (parent, n) in parents.iter().zip(per_parent) {
            for k in 1..=n {
                let id = format!("{prefix}{}", next.len() + 1);
                let lbl = if level == LevelTag::PARAGRAPH { k.to_string() } else { format!("{label} {}", next.len() + 1) };
                nodes.push(Node::new(&id, level, Some(parent), lbl));
                next.push(id);
            }
        }
        judicial_levels.push(next.clone());
        parents = next;
    }

    // legislative: hierarchical ids, labels are sibling positions so that
    // canonical citations resolve
    let statutes: Vec<String> = (1..=config.counts.statute).map(|i| format!("S{i}")).collect();
    for (i, s) in statutes.iter().enumerate() {
        nodes.push(Node::new(s, LevelTag::STATUTE, None, format!("L{}", i + 1)).with_attribute("area", AREAS[i % AREAS.len()]));
    }
    let mut parents = statutes;
    let mut legislative_levels = vec![parents.clone()];
    for level in [LevelTag::SECTION, LevelTag::SUB, LevelTag::SUB2, LevelTag::SUB3] {
        let per_parent = spread(&mut rng, parents.len(), config.counts.get(level), config.max_branching, level)?;
        let mut next = Vec::new();
        for (parent, n) in parents.iter().zip(per_parent) {
            for k in 1..=n {
                let id = format!("{parent}.{k}");
                nodes.push(Node::new(&id, level, Some(parent), k.to_string()));
                next.push(id);
            }
        }
        legislative_levels.push(next.clone());
        parents = next;
    }

    let skeleton = BaseNetwork::new(nodes.clone(), Vec::new());
    let mut refs: BTreeMap<(String, String), u64> = BTreeMap::new();
    let mut planted_total = 0u64;
    let mut report = PlantedReport::default();
    let mut excluded: BTreeSet<String> = BTreeSet::new();
    let mut busy_paragraphs: BTreeSet<String> = BTreeSet::new();
    let sections = &legislative_levels[1];
    let paragraphs = &judicial_levels[3];
    let spec = config.planted.clone().unwrap_or_default();
    let mut free_sections: Vec<&String> = sections.iter().collect();

    if let Some(pr) = spec.procedural {
        if free_sections.is_empty() {
            return Err(Error::Infeasible("procedural norm needs at least one section".into()));
        }
        let pick = rng.random_range(0..free_sections.len());
        let norm = free_sections.remove(pick).clone();
        let decisions = &judicial_levels[2];
        let n_dec = ((pr.decision_fraction * decisions.len() as f64).ceil() as usize).min(decisions.len());
        let jud = skeleton.judicial();
        let with_paragraphs: Vec<NodeIdx> = decisions
            .iter()
            .map(|d| jud.idx(d).expect("generated"))
            .filter(|&d| !jud.children(d).is_empty())
            .collect();
        if with_paragraphs.len() < n_dec {
            return Err(Error::Infeasible(format!(
                "procedural norm needs {n_dec} decisions with paragraphs, only {} have any",
                with_paragraphs.len()
            )));
        }
        let chosen = index::sample(&mut rng, with_paragraphs.len(), n_dec);
        let mut chosen: Vec<NodeIdx> = chosen.iter().map(|i| with_paragraphs[i]).collect();
        chosen.sort_unstable();
        let mut mentions = 0u64;
        for d in chosen {
            let kids = jud.children(d);
            let m = rng.random_range(1..=pr.max_mentions.min(kids.len()));
            for k in index::sample(&mut rng, kids.len(), m) {
                let q = jud.id(kids[k]).as_str().to_owned();
                busy_paragraphs.insert(q.clone());
                *refs.entry((q, norm.clone())).or_insert(0) += 1;
                mentions += 1;
            }
        }
        planted_total += mentions;
        // keep drawn references off the norm, its subtree and its statute,
        // so its mention count and placement stay as planted
        let leg = skeleton.legislative();
        let ni = leg.idx(&norm).expect("generated");
        excluded.extend(leg.descendants_inclusive(ni).into_iter().map(|i| leg.id(i).as_str().to_owned()));
        excluded.extend(leg.ancestors(ni).map(|i| leg.id(i).as_str().to_owned()));
        report.procedural = Some(PlantedProcedural { node: NodeId(norm), decisions: n_dec, mentions });
    }

    for cl in &spec.clusters {
        if cl.size > free_sections.len() {
            return Err(Error::Infeasible(format!("cluster of {} sections, only {} unused", cl.size, free_sections.len())));
        }
        let mut members: Vec<String> = Vec::with_capacity(cl.size);
        for _ in 0..cl.size {
            let k = rng.random_range(0..free_sections.len());
            members.push(free_sections.remove(k).clone());
        }
        members.sort();
        let jud = skeleton.judicial();
        let eligible: Vec<&String> = paragraphs
            .iter()
            .filter(|q| !busy_paragraphs.contains(*q))
            .filter(|q| match cl.court {
                None => true,
                Some(c) => {
                    let qi = jud.idx(q).expect("generated");
                    jud.unit_at(qi, 1).map(|ci| jud.id(ci).as_str()) == courts_id(c).as_deref()
                }
            })
            .collect();
        if let Some(c) = cl.court {
            if c >= config.counts.court {
                return Err(Error::Infeasible(format!("cluster pinned to court index {c}, only {} courts", config.counts.court)));
            }
        }
        if eligible.len() < cl.occurrences {
            return Err(Error::Infeasible(format!(
                "cluster needs {} paragraphs, {} are eligible",
                cl.occurrences,
                eligible.len()
            )));
        }
        let mut picked: Vec<String> =
            index::sample(&mut rng, eligible.len(), cl.occurrences).iter().map(|i| eligible[i].clone()).collect();
        picked.sort();
        for q in &picked {
            for s in &members {
                *refs.entry((q.clone(), s.clone())).or_insert(0) += 1;
            }
        }
        planted_total += (cl.size * cl.occurrences) as u64;
        report.clusters.push(PlantedCluster {
            sections: members.into_iter().map(NodeId).collect(),
            paragraphs: picked.into_iter().map(NodeId).collect(),
        });
    }

    if planted_total > config.references {
        return Err(Error::Infeasible(format!(
            "planted patterns need {planted_total} references, only {} configured",
            config.references
        )));
    }
    let free = config.references - planted_total;
    if free > 0 {
        if paragraphs.is_empty() {
            return Err(Error::Infeasible("references configured but no paragraphs".into()));
        }
        let targets: Vec<Vec<&String>> =
            legislative_levels.iter().map(|lvl| lvl.iter().filter(|id| !excluded.contains(*id)).collect()).collect();
        let fractions = rank_fractions_for(&config.rank_fractions, &targets)?;
        let rank_pick = WeightedIndex::new(fractions).map_err(|e| Error::Infeasible(e.to_string()))?;
        let mut order: Vec<usize> = (0..paragraphs.len()).collect();
        let weights: Vec<f64> = match config.paragraph_distribution {
            ParagraphDistribution::Uniform => vec![1.0; paragraphs.len()],
            ParagraphDistribution::Zipf { exponent } => {
                order.shuffle(&mut rng);
                (1..=paragraphs.len()).map(|i| (i as f64).powf(-exponent)).collect()
            }
        };
        let para_pick = WeightedIndex::new(&weights).map_err(|e| Error::Infeasible(e.to_string()))?;
        for _ in 0..free {
            let q = &paragraphs[order[para_pick.sample(&mut rng)]];
            let lvl = &targets[rank_pick.sample(&mut rng)];
            let t = lvl[rng.random_range(0..lvl.len())];
            *refs.entry((q.clone(), t.clone())).or_insert(0) += 1;
        }
    }

    let refs = refs.into_iter().map(|((s, t), m)| RefEdge::new(s, t, m)).collect();
    Ok(GeneratedCorpus { base: BaseNetwork::new(nodes, refs), planted: report })
}

fn courts_id(index: usize) -> Option<String> {
    Some(format!("C{}", index + 1))
}

fn rank_fractions_for(fr: &RankFractions, targets: &[Vec<&String>]) -> Result<Vec<f64>> {
    let fr = fr.as_array();
    for (d, (f, t)) in fr.iter().zip(targets).enumerate() {
        if *f > 0.0 && t.is_empty() {
            let level = LevelTag::new(crate::corpus::Branch::Legislative, d as u8 + 1)?;
            return Err(Error::Infeasible(format!("fraction {f} of references targets {level}, which has no eligible nodes")));
        }
    }
    Ok(fr.to_vec())
}

/// Child counts per parent: every parent gets one child while they last,
/// the rest go to random parents below the cap.
fn spread(rng: &mut ChaCha8Rng, parents: usize, children: usize, cap: usize, level: LevelTag) -> Result<Vec<usize>> {
    if children > parents.saturating_mul(cap) {
        return Err(Error::Infeasible(format!(
            "{children} {level} nodes exceed {parents} parents × max branching {cap}"
        )));
    }
    let mut counts = vec![0usize; parents];
    let first = children.min(parents);
    for i in index::sample(rng, parents, first) {
        counts[i] = 1;
    }
    let mut open: Vec<usize> = (0..parents).filter(|&i| counts[i] < cap).collect();
    for _ in first..children {
        let k = rng.random_range(0..open.len());
        let p = open[k];
        counts[p] += 1;
        if counts[p] == cap {
            open.swap_remove(k);
        }
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::validate;
    use crate::ingest::format::corpus_to_string;

    fn small() -> SynthConfig {
        SynthConfig {
            counts: LevelCounts {
                court: 2,
                panel: 3,
                decision: 10,
                paragraph: 40,
                statute: 2,
                section: 12,
                sub: 10,
                sub2: 5,
                sub3: 2,
            },
            max_branching: 10,
            references: 150,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_synthetic(&small().with_seed(7)).unwrap();
        let b = generate_synthetic(&small().with_seed(7)).unwrap();
        let c = generate_synthetic(&small().with_seed(8)).unwrap();
        assert_eq!(corpus_to_string(&a.base), corpus_to_string(&b.base));
        assert_ne!(corpus_to_string(&a.base), corpus_to_string(&c.base));
    }

    #[test]
    fn valid_with_exact_counts() {
        let cfg = small();
        let g = generate_synthetic(&cfg).unwrap();
        assert!(validate(&g.base).is_empty(), "{:?}", validate(&g.base));
        for level in LevelTag::all() {
            assert_eq!(g.base.level_nodes(level).len(), cfg.counts.get(level), "{level}");
        }
        assert_eq!(g.base.total_references(), 150);
    }

    #[test]
    fn zero_references() {
        let g = generate_synthetic(&SynthConfig { references: 0, ..small() }).unwrap();
        assert!(g.base.refs().is_empty());
    }

    #[test]
    fn infeasible_branching() {
        let cfg = SynthConfig { counts: LevelCounts { court: 2, panel: 7, ..small().counts }, max_branching: 3, ..small() };
        assert!(matches!(generate_synthetic(&cfg), Err(Error::Infeasible(_))));
    }

    #[test]
    fn bad_fractions() {
        let cfg = SynthConfig { rank_fractions: RankFractions { statute: 0.5, ..RankFractions::default() }, ..small() };
        assert!(matches!(generate_synthetic(&cfg), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn planted_procedural_norm() {
        let cfg = SynthConfig {
            planted: Some(PlantedSpec {
                procedural: Some(ProceduralSpec { decision_fraction: 0.9, max_mentions: 2 }),
                clusters: vec![ClusterSpec { size: 3, occurrences: 5, court: Some(1) }],
            }),
            ..small()
        };
        let g = generate_synthetic(&cfg).unwrap();
        let pr = g.planted.procedural.clone().unwrap();
        let jud = g.base.judicial();
        let mut per_decision: BTreeMap<NodeIdx, u64> = BTreeMap::new();
        let mut norm_paragraphs = BTreeSet::new();
        for r in g.base.refs().iter().filter(|r| r.target == pr.node) {
            let q = jud.idx(r.source.as_str()).unwrap();
            *per_decision.entry(jud.unit_at(q, 3).unwrap()).or_insert(0) += r.multiplicity;
            norm_paragraphs.insert(r.source.clone());
        }
        assert!(per_decision.len() * 10 >= 9 * cfg.counts.decision);
        assert!(per_decision.values().all(|&m| m <= 2));
        let cl = &g.planted.clusters[0];
        assert_eq!(cl.sections.len(), 3);
        for q in &cl.paragraphs {
            assert!(!norm_paragraphs.contains(q));
            let qi = jud.idx(q.as_str()).unwrap();
            assert_eq!(jud.id(jud.unit_at(qi, 1).unwrap()).as_str(), "C2");
        }
        assert_eq!(g.base.total_references(), 150);
    }

    #[test]
    fn config_json_roundtrip() {
        let cfg = SynthConfig {
            paragraph_distribution: ParagraphDistribution::Zipf { exponent: 1.1 },
            planted: Some(PlantedSpec { procedural: Some(ProceduralSpec { decision_fraction: 0.95, max_mentions: 2 }), clusters: vec![] }),
            ..small()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(SynthConfig::from_json(&text).unwrap(), cfg);
        assert!(SynthConfig::from_json(r#"{"sed":1}"#).is_err());
        assert_eq!(SynthConfig::from_json(r#"{"seed":3}"#).unwrap().seed, 3);
    }
}
