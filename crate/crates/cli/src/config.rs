//! Run configuration: a single JSON document.
//!
//! ```json
//! {
//!   "corpus": "t1.jsonl",
//!   "perspectives": "full-grid",
//!   "weightings": [{"mode": "combined", "k": [1, 2, 3]}],
//!   "metrics": [{"metric": "in_degree"}, {"metric": "decisions_with_at_least", "k": [1, 2]}],
//!   "global": {"leaf_masses": true, "target_distributions": ["A1"]}
//! }
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use lexnet::ingest::SynthConfig;
use lexnet::metrics::ShareNormalization;
use lexnet::perspective::GridFilters;
use lexnet::projection::{Direction, GroupBy, Normalization, PresenceRule, WeightingMode};
use lexnet::report::{Format, DEFAULT_DIGITS};
use lexnet::{LevelTag, Perspective, SplitRule, WeightingSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Corpus file; relative paths are taken from the config file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SynthConfig>,
    #[serde(default)]
    pub perspectives: PerspectiveSelection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_filters: Option<GridFilters>,
    #[serde(default)]
    pub split_rule: SplitRule,
    #[serde(default)]
    pub weightings: Vec<WeightingEntry>,
    #[serde(default)]
    pub metrics: Vec<MetricSpec>,
    #[serde(default)]
    pub global: GlobalOutputs,
    #[serde(default)]
    pub emit_bipartite: bool,
    #[serde(default)]
    pub format: Format,
    #[serde(default = "default_digits")]
    pub digits: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn default_digits() -> u32 {
    DEFAULT_DIGITS
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerspectiveSelection {
    #[default]
    #[serde(with = "full_grid")]
    FullGrid,
    List(Vec<Perspective>),
}

mod full_grid {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("full-grid")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        if s == "full-grid" {
            Ok(())
        } else {
            Err(serde::de::Error::custom(format!("expected \"full-grid\" or a list of perspectives, got {s:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SideSelection {
    #[default]
    Legislative,
    Judicial,
    Both,
}

/// A weighting with a list of k values; expands to one spec per k.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightingEntry {
    pub mode: WeightingMode,
    /// Defaults to paragraph.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub descriptive_rank: Option<LevelTag>,
    #[serde(default = "default_ks")]
    pub k: Vec<u64>,
    #[serde(default)]
    pub presence_rule: PresenceRule,
    #[serde(default)]
    pub side: SideSelection,
}

fn default_ks() -> Vec<u64> {
    vec![1]
}

impl WeightingEntry {
    pub fn expand(&self) -> Vec<WeightingSpec> {
        let rank = self.descriptive_rank.unwrap_or(LevelTag::PARAGRAPH);
        let ks: &[u64] = if self.mode == WeightingMode::Combined { &self.k } else { &[1] };
        ks.iter()
            .map(|&k| WeightingSpec { descriptive_rank: rank, mode: self.mode, k, presence_rule: self.presence_rule })
            .collect()
    }

    pub fn sides(&self) -> Vec<lexnet::Side> {
        match self.side {
            SideSelection::Legislative => vec![lexnet::Side::Legislative],
            SideSelection::Judicial => vec![lexnet::Side::Judicial],
            SideSelection::Both => vec![lexnet::Side::Legislative, lexnet::Side::Judicial],
        }
    }
}

/// Per-perspective metrics. Strength-based metrics run on every
/// legislative-side projection of the perspective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSpec {
    InDegree,
    DecisionsWithAtLeast {
        k: Vec<u64>,
    },
    Strength {
        #[serde(default)]
        direction: Direction,
        #[serde(default)]
        normalization: Normalization,
    },
    MeanStrength,
    Overrepresentation {
        /// Rational as text, e.g. "1/4".
        #[serde(default = "quarter")]
        threshold: String,
    },
    /// Compares rank tables produced in the same perspective, named by
    /// their file stems (e.g. "in_degree", "decisions_at_least_k2").
    RankCompare {
        tables: Vec<String>,
        #[serde(default = "ten")]
        top_n: usize,
    },
}

fn quarter() -> String {
    "1/4".into()
}

fn ten() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlobalOutputs {
    pub leaf_masses: bool,
    pub target_distributions: Vec<String>,
    pub source_distributions: Vec<SourceSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub focal: String,
    #[serde(default = "by_court")]
    pub group_by: GroupBy,
    #[serde(default)]
    pub normalization: ShareNormalization,
}

fn by_court() -> GroupBy {
    GroupBy::Level(LevelTag::COURT)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| lexnet::Error::InvalidArgument(format!("config {}: {e}", path.display())))?;
        if let (Some(c), Some(dir)) = (&cfg.corpus, path.parent()) {
            if c.is_relative() {
                cfg.corpus = Some(dir.join(c));
            }
        }
        Ok(cfg)
    }

    pub fn perspectives(&self) -> Vec<Perspective> {
        match &self.perspectives {
            PerspectiveSelection::FullGrid => lexnet::enumerate_grid(self.grid_filters.as_ref()),
            PerspectiveSelection::List(list) => list.clone(),
        }
    }

    pub fn check(&self) -> Result<()> {
        let domain = |m: String| lexnet::Error::InvalidArgument(m);
        match (&self.corpus, &self.synthetic) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => return Err(domain("config needs exactly one of \"corpus\" or \"synthetic\"".into()).into()),
        }
        if self.grid_filters.is_some() && self.perspectives != PerspectiveSelection::FullGrid {
            bail!(domain("grid_filters only apply to \"full-grid\"".into()));
        }
        for p in self.perspectives() {
            p.check()?;
        }
        for w in &self.weightings {
            ensure!(!w.k.is_empty(), domain("weighting k list is empty".into()));
            ensure!(w.k.iter().all(|&k| k >= 1), domain("k values must be at least 1".into()));
            if let Some(r) = w.descriptive_rank {
                ensure!(r.is_judicial(), domain(format!("descriptive_rank {r} is not a judicial level")));
            }
        }
        let mut stems: Vec<String> = Vec::new();
        for m in &self.metrics {
            match m {
                MetricSpec::InDegree => stems.push("in_degree".into()),
                MetricSpec::DecisionsWithAtLeast { k } => {
                    ensure!(!k.is_empty() && k.iter().all(|&k| k >= 1), domain("decisions_with_at_least needs k ≥ 1".into()));
                    stems.extend(k.iter().map(|k| format!("decisions_at_least_k{k}")));
                }
                MetricSpec::Overrepresentation { threshold } => {
                    let t = lexnet::scalar::parse_ratio(threshold)
                        .ok_or_else(|| domain(format!("threshold {threshold:?} is not a number")))?;
                    ensure!(
                        t > lexnet::Mass::from_integer(0.into()) && t <= lexnet::Mass::from_integer(1.into()),
                        domain("threshold must lie in (0, 1]".into())
                    );
                }
                MetricSpec::RankCompare { tables, .. } => {
                    ensure!(tables.len() >= 2, domain("rank_compare needs at least two tables".into()));
                    for t in tables {
                        ensure!(stems.contains(t), domain(format!("rank_compare table {t:?} is not computed before it")));
                    }
                }
                MetricSpec::Strength { .. } | MetricSpec::MeanStrength => {}
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_example() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"corpus":"t1.jsonl","perspectives":"full-grid",
                "weightings":[{"mode":"combined","k":[1,2,3]},{"mode":"unit_count","descriptive_rank":"decision","side":"both"}],
                "metrics":[{"metric":"in_degree"},{"metric":"decisions_with_at_least","k":[1,2]},
                           {"metric":"rank_compare","tables":["in_degree","decisions_at_least_k1"]}],
                "global":{"leaf_masses":true,"target_distributions":["A1"]}}"#,
        )
        .unwrap();
        cfg.check().unwrap();
        assert_eq!(cfg.perspectives().len(), 20);
        assert_eq!(cfg.weightings[0].expand().len(), 3);
        assert_eq!(cfg.weightings[1].sides().len(), 2);
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn explicit_perspectives() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"corpus":"x","perspectives":[{"judicial_level":"decision","legislative_level":"section",
                "legislative_filter":{"ancestor_in":{"ids":["B"]}}}]}"#,
        )
        .unwrap();
        cfg.check().unwrap();
        assert_eq!(cfg.perspectives().len(), 1);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            r#"{"perspectives":"full-grid"}"#,
            r#"{"corpus":"x","weightings":[{"mode":"combined","k":[]}]}"#,
            r#"{"corpus":"x","metrics":[{"metric":"overrepresentation","threshold":"2"}]}"#,
            r#"{"corpus":"x","metrics":[{"metric":"rank_compare","tables":["in_degree","x"]}]}"#,
        ];
        for b in bad {
            let cfg: RunConfig = serde_json::from_str(b).unwrap();
            assert!(cfg.check().is_err(), "{b}");
        }
        assert!(serde_json::from_str::<RunConfig>(r#"{"corpus":"x","perspectives":"grid"}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"corpus":"x","metric":[]}"#).is_err());
    }
}
