//! Tabular output for metrics, networks and distributions.
//!
//! Every exact value is written as reduced numerator/denominator columns
//! plus a decimal rounded half-to-even, so files are diffable and lossless.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::BaseNetwork;
use crate::error::{Error, Result};
use crate::metrics::{RankComparison, RankTable, SourceDistribution, TargetDistribution};
use crate::perspective::BipartiteNetwork;
use crate::projection::{ProjectedGraph, StrengthMatrix};
use crate::scalar::{num_den, to_decimal, Scalar};

pub const DEFAULT_DIGITS: u32 = 6;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::InvalidArgument(format!("unknown format {s:?}, expected csv or json"))),
        }
    }
}

/// String cells under named columns, plus metadata that only the JSON
/// rendering carries.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Table {
    pub meta: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table { meta: BTreeMap::new(), columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn meta(mut self, key: &str, value: impl Into<String>) -> Self {
        self.meta.insert(key.to_owned(), value.into());
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("cells are UTF-8")
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<serde_json::Map<String, serde_json::Value>> = self
            .rows
            .iter()
            .map(|r| {
                self.columns
                    .iter()
                    .zip(r)
                    .map(|(c, v)| (c.clone(), serde_json::Value::String(v.clone())))
                    .collect()
            })
            .collect();
        let doc = serde_json::json!({ "meta": self.meta, "columns": self.columns, "rows": rows });
        let mut s = serde_json::to_string_pretty(&doc).expect("plain JSON");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

fn exact<M: Scalar>(v: &M, digits: u32) -> [String; 3] {
    let (n, d) = num_den(v);
    [n, d, to_decimal(v, digits)]
}

fn value_columns(prefix: &str) -> [String; 3] {
    [format!("{prefix}_num"), format!("{prefix}_den"), format!("{prefix}_float")]
}

fn optional<M: Scalar>(v: Option<&M>, digits: u32) -> [String; 3] {
    match v {
        Some(v) => exact(v, digits),
        None => [String::new(), String::new(), String::new()],
    }
}

/// `id,label,value_num,value_den,value_float,rank`
pub fn rank_table<M: Scalar>(table: &RankTable<M>, digits: u32) -> Table {
    let mut cols = vec!["id".to_owned(), "label".to_owned()];
    cols.extend(value_columns("value"));
    cols.push("rank".into());
    let mut t = Table::new(cols).meta("metric", &table.metric).meta("tie_rule", table.tie_rule);
    for r in table.rows() {
        let mut row = vec![r.id.to_string(), r.label.clone()];
        row.extend(exact(&r.value, digits));
        row.push(r.rank.to_string());
        t.push(row);
    }
    t
}

/// `left,right,weight_num,weight_den,weight_float`, judicial unit on the left.
pub fn bipartite_edges<M: Scalar>(net: &BipartiteNetwork<M>, base: &BaseNetwork, digits: u32) -> Table {
    let mut cols = vec!["left".to_owned(), "right".to_owned()];
    cols.extend(value_columns("weight"));
    let mut t = Table::new(cols).meta("perspective", net.perspective().to_string());
    for (l, r, w) in net.edges(base) {
        let mut row = vec![l.to_string(), r.to_string()];
        row.extend(exact(w, digits));
        t.push(row);
    }
    t
}

/// `i,j,weight_num,weight_den,weight_float`, one row per unordered pair.
pub fn projection_edges<M: Scalar>(g: &ProjectedGraph<M>, digits: u32) -> Table {
    let mut cols = vec!["i".to_owned(), "j".to_owned()];
    cols.extend(value_columns("weight"));
    let mut t = Table::new(cols);
    if let Some(p) = g.provenance() {
        t = t
            .meta("perspective", p.perspective.to_string())
            .meta("weighting", p.weighting.slug())
            .meta("side", p.side.to_string());
    }
    for (i, j, w) in g.edges() {
        let mut row = vec![i.to_string(), j.to_string()];
        row.extend(exact(w, digits));
        t.push(row);
    }
    t
}

/// `i,j,direction,normalization,strength_num,strength_den,strength_float`
pub fn strength_matrix<M: Scalar>(s: &StrengthMatrix<M>, digits: u32) -> Table {
    let mut cols = vec!["i".to_owned(), "j".to_owned(), "direction".to_owned(), "normalization".to_owned()];
    cols.extend(value_columns("strength"));
    let mut t = Table::new(cols);
    let (dir, norm) = (s.direction.to_string(), s.normalization.to_string());
    for (i, j, v) in s.entries() {
        let mut row = vec![i.to_string(), j.to_string(), dir.clone(), norm.clone()];
        row.extend(exact(v, digits));
        t.push(row);
    }
    t
}

/// Mean sum-normalized strengths; isolated nodes get empty cells.
pub fn mean_strength_table<M: Scalar>(means: &BTreeMap<crate::NodeId, Option<(M, M)>>, digits: u32) -> Table {
    let mut cols = vec!["id".to_owned()];
    cols.extend(value_columns("mean_incoming"));
    cols.extend(value_columns("mean_outgoing"));
    let mut t = Table::new(cols);
    for (id, v) in means {
        let mut row = vec![id.to_string()];
        row.extend(optional(v.as_ref().map(|(i, _)| i), digits));
        row.extend(optional(v.as_ref().map(|(_, o)| o), digits));
        t.push(row);
    }
    t
}

/// `group,mass_*,denominator_*,share_*`
pub fn source_distribution<M: Scalar>(d: &SourceDistribution<M>, digits: u32) -> Table {
    let mut cols = vec!["group".to_owned()];
    cols.extend(value_columns("mass"));
    cols.extend(value_columns("denominator"));
    cols.extend(value_columns("share"));
    let norm = serde_json::to_value(d.normalization).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
    let mut t = Table::new(cols).meta("focal", d.focal.to_string()).meta("normalization", norm);
    for (g, s) in &d.groups {
        let mut row = vec![g.clone()];
        row.extend(exact(&s.mass, digits));
        row.extend(exact(&s.denominator, digits));
        row.extend(optional(s.share.as_ref(), digits));
        t.push(row);
    }
    t
}

/// `id,level,direct,share_*` in subtree preorder.
pub fn target_distribution<M: Scalar>(d: &TargetDistribution<M>, digits: u32) -> Table {
    let mut cols = vec!["id".to_owned(), "level".to_owned(), "direct".to_owned()];
    cols.extend(value_columns("share"));
    let mut t = Table::new(cols).meta("focal", d.focal.to_string()).meta("total", d.total.to_string());
    for r in &d.rows {
        let mut row = vec![r.id.to_string(), r.level.to_string(), r.direct.to_string()];
        row.extend(optional(r.share.as_ref(), digits));
        t.push(row);
    }
    t
}

/// `id,label,rank_1..rank_n,displacement`; metric names live in the metadata.
pub fn rank_comparison<M: Scalar>(c: &RankComparison<M>) -> Table {
    let mut cols = vec!["id".to_owned(), "label".to_owned()];
    cols.extend((1..=c.metrics.len()).map(|i| format!("rank_{i}")));
    cols.push("displacement".into());
    let mut t = Table::new(cols).meta("top_n", c.top_n.to_string());
    for (i, m) in c.metrics.iter().enumerate() {
        t = t.meta(&format!("rank_{}", i + 1), m.clone());
    }
    for r in &c.rows {
        let mut row = vec![r.id.to_string(), r.label.clone()];
        row.extend(r.ranks.iter().map(|k| k.to_string()));
        row.push(r.displacement.to_string());
        t.push(row);
    }
    t
}
