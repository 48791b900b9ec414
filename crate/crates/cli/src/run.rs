//! The `run` pipeline: corpus → perspectives → projections → metrics → files.
//!
//! Output layout:
//!
//! ```text
//! out/
//!   manifest.json            written last
//!   global/leaf_masses.jsonl
//!   global/target_<id>.csv
//!   decisionxsection/in_degree.csv
//!   decisionxsection/projection_legislative_combined_paragraph_k2.csv
//!   ...
//! ```
//!
//! Perspective cells run in parallel; each file is written to a temporary
//! name and renamed into place. A failed run leaves a `_PARTIAL` marker.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lexnet::ingest::{corpus_to_string, generate_synthetic, load_corpus};
use lexnet::metrics::{self, RankTable};
use lexnet::perspective::NetworkSpace;
use lexnet::projection::{mean_strengths, project_in, strength, ProjectedGraph};
use lexnet::report::{self, Table};
use lexnet::scalar::parse_ratio;
use lexnet::{BaseNetwork, Mass, Perspective, Side};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{MetricSpec, RunConfig};

pub const MANIFEST: &str = "manifest.json";
pub const PARTIAL: &str = "_PARTIAL";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Skipped {
    pub directory: String,
    pub output: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct PerspectiveEntry {
    pub directory: String,
    pub perspective: Perspective,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub corpus_sha256: String,
    pub nodes: usize,
    pub references: u64,
    pub perspectives: Vec<PerspectiveEntry>,
    pub files: Vec<FileEntry>,
    pub skipped: Vec<Skipped>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Loads or generates the corpus named by the config. `seed` overrides the
/// synthetic config's seed.
pub fn corpus_for(cfg: &RunConfig, seed: Option<u64>) -> Result<BaseNetwork> {
    match (&cfg.corpus, &cfg.synthetic) {
        (Some(path), _) => load_corpus(path).with_context(|| format!("loading corpus {}", path.display())),
        (None, Some(synth)) => {
            let synth = match seed {
                Some(s) => synth.clone().with_seed(s),
                None => synth.clone(),
            };
            Ok(generate_synthetic(&synth)?.base)
        }
        (None, None) => bail!(lexnet::Error::InvalidArgument("config names no corpus".into())),
    }
}

/// Runs the whole pipeline into `out`, replacing a previous run's output.
pub fn run(cfg: &RunConfig, out: &Path, seed: Option<u64>) -> Result<Manifest> {
    cfg.check()?;
    let base = corpus_for(cfg, seed)?;
    prepare_out_dir(out)?;
    match run_into(cfg, &base, out, seed) {
        Ok(m) => Ok(m),
        Err(e) => {
            let _ = std::fs::write(out.join(PARTIAL), format!("run failed: {e:#}\n"));
            Err(e)
        }
    }
}

fn prepare_out_dir(out: &Path) -> Result<()> {
    if out.exists() {
        let ours = out.join(MANIFEST).exists() || out.join(PARTIAL).exists();
        let empty = std::fs::read_dir(out)?.next().is_none();
        if !ours && !empty {
            bail!(lexnet::Error::InvalidArgument(format!(
                "{} exists and does not hold a previous run; refusing to overwrite",
                out.display()
            )));
        }
        std::fs::remove_dir_all(out)?;
    }
    std::fs::create_dir_all(out)?;
    Ok(())
}

fn write_atomic(out: &Path, rel: &str, contents: &[u8]) -> Result<FileEntry> {
    let path = out.join(rel);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp~");
    std::fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, &path)?;
    Ok(FileEntry { path: rel.to_owned(), sha256: sha256_hex(contents), bytes: contents.len() as u64 })
}

/// Directory names: the perspective's display form, with `_f<n>` on later
/// perspectives sharing the same level pair.
pub fn directory_names(ps: &[Perspective]) -> Vec<String> {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    ps.iter()
        .map(|p| {
            let name = p.to_string();
            let n = seen.entry(name.clone()).or_insert(0);
            *n += 1;
            if *n == 1 {
                name
            } else {
                format!("{name}_f{}", *n - 1)
            }
        })
        .collect()
}

struct Cell {
    files: Vec<(String, Vec<u8>)>,
    skipped: Vec<Skipped>,
}

fn run_into(cfg: &RunConfig, base: &BaseNetwork, out: &Path, seed: Option<u64>) -> Result<Manifest> {
    let space = NetworkSpace::<Mass>::with_rule(base, cfg.split_rule);
    let ext = cfg.format.extension();
    let mut files: Vec<FileEntry> = Vec::new();

    // global outputs
    if cfg.global.leaf_masses {
        files.push(write_atomic(out, "global/leaf_masses.jsonl", space.leaves().to_jsonl(base).as_bytes())?);
    }
    for focal in &cfg.global.target_distributions {
        let d = metrics::target_distribution::<Mass>(base, focal)?;
        let t = report::target_distribution(&d, cfg.digits);
        files.push(write_atomic(out, &format!("global/target_{}.{ext}", file_safe(focal)), t.render(cfg.format).as_bytes())?);
    }
    for (i, s) in cfg.global.source_distributions.iter().enumerate() {
        let d = metrics::source_distribution(&space, &s.focal, &s.group_by, s.normalization)?;
        let t = report::source_distribution(&d, cfg.digits);
        let name = format!("global/source_{}_{i}.{ext}", file_safe(&s.focal));
        files.push(write_atomic(out, &name, t.render(cfg.format).as_bytes())?);
    }

    let perspectives = cfg.perspectives();
    let dirs = directory_names(&perspectives);
    let cells: Vec<Result<Cell>> = perspectives
        .par_iter()
        .zip(dirs.par_iter())
        .map(|(p, dir)| perspective_cell(cfg, &space, p, dir))
        .collect();
    let mut skipped = Vec::new();
    for cell in cells {
        let cell = cell?;
        for (rel, bytes) in cell.files {
            files.push(write_atomic(out, &rel, &bytes)?);
        }
        skipped.extend(cell.skipped);
    }
    files.sort_by(|a, b| a.path.cmp(&b.path));

    let mut hashed_cfg = cfg.clone();
    if let (Some(s), Some(synth)) = (seed, hashed_cfg.synthetic.as_mut()) {
        synth.seed = s;
    }
    // the corpus is identified by its own hash, not by where it was read from
    hashed_cfg.corpus = None;
    hashed_cfg.out = None;
    let manifest = Manifest {
        tool: "lexnet",
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: sha256_hex(&serde_json::to_vec(&hashed_cfg)?),
        corpus_sha256: sha256_hex(corpus_to_string(base).as_bytes()),
        nodes: base.node_count(),
        references: base.total_references(),
        perspectives: perspectives
            .iter()
            .zip(&dirs)
            .map(|(p, d)| PerspectiveEntry { directory: d.clone(), perspective: p.clone() })
            .collect(),
        files,
        skipped,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    write_atomic(out, MANIFEST, text.as_bytes())?;
    Ok(manifest)
}

fn file_safe(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' }).collect()
}

fn perspective_cell(cfg: &RunConfig, space: &NetworkSpace<'_, Mass>, p: &Perspective, dir: &str) -> Result<Cell> {
    let base = space.base();
    let fmt = cfg.format;
    let ext = fmt.extension();
    let digits = cfg.digits;
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    let mut skipped = Vec::new();
    let mut emit = |name: String, t: Table| files.push((format!("{dir}/{name}.{ext}"), t.render(fmt).into_bytes()));

    if cfg.emit_bipartite {
        let net = space.derive(p)?;
        emit("bipartite".into(), report::bipartite_edges(&net, base, digits));
    }

    let mut projections: Vec<(String, Side, ProjectedGraph<Mass>)> = Vec::new();
    for entry in &cfg.weightings {
        for spec in entry.expand() {
            for side in entry.sides() {
                let name = format!("projection_{side}_{}", spec.slug());
                match project_in(space, p, &spec, side) {
                    Ok(g) => {
                        emit(name, report::projection_edges(&g, digits));
                        projections.push((spec.slug(), side, g));
                    }
                    Err(e @ (lexnet::Error::RankMismatch(_) | lexnet::Error::LevelMismatch { .. })) => {
                        skipped.push(Skipped { directory: dir.to_owned(), output: name, reason: e.to_string() })
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }
    }

    let mut tables: BTreeMap<String, RankTable<Mass>> = BTreeMap::new();
    let mut compare_count = 0;
    for m in &cfg.metrics {
        match m {
            MetricSpec::InDegree => {
                let t = metrics::in_degree_in(space, p)?.with_labels(base);
                emit("in_degree".into(), report::rank_table(&t, digits));
                tables.insert("in_degree".into(), t);
            }
            MetricSpec::DecisionsWithAtLeast { k } => {
                for &k in k {
                    let name = format!("decisions_at_least_k{k}");
                    let t = metrics::decisions_with_at_least_in(space, p, k)?.with_labels(base);
                    emit(name.clone(), report::rank_table(&t, digits));
                    tables.insert(name, t);
                }
            }
            MetricSpec::Strength { direction, normalization } => {
                for (slug, side, g) in &projections {
                    let s = strength(g, *direction, *normalization);
                    emit(format!("strength_{side}_{slug}_{direction}_{normalization}"), report::strength_matrix(&s, digits));
                }
            }
            MetricSpec::MeanStrength => {
                for (slug, side, g) in &projections {
                    emit(format!("mean_strength_{side}_{slug}"), report::mean_strength_table(&mean_strengths(g), digits));
                }
            }
            MetricSpec::Overrepresentation { threshold } => {
                let t = parse_ratio(threshold).expect("checked with the config");
                for (slug, side, g) in &projections {
                    if *side != Side::Legislative {
                        continue;
                    }
                    let r = metrics::overrepresentation(g, &t)?.with_labels(base);
                    emit(format!("overrepresentation_{slug}"), report::rank_table(&r, digits));
                }
            }
            MetricSpec::RankCompare { tables: names, top_n } => {
                let name = if compare_count == 0 { "rank_compare".to_owned() } else { format!("rank_compare_{compare_count}") };
                compare_count += 1;
                let chosen: Vec<&RankTable<Mass>> = names.iter().map(|n| &tables[n]).collect();
                match metrics::rank_compare(&chosen, *top_n) {
                    Ok(c) => emit(name, report::rank_comparison(&c)),
                    Err(e) => skipped.push(Skipped { directory: dir.to_owned(), output: name, reason: e.to_string() }),
                }
            }
        }
    }
    Ok(Cell { files, skipped })
}

/// Re-hashes the files under `out` and compares them with the manifest.
pub fn verify_manifest(out: &Path) -> Result<bool> {
    let text = std::fs::read_to_string(out.join(MANIFEST))?;
    let v: serde_json::Value = serde_json::from_str(&text)?;
    let mut listed: Vec<(String, String)> = v["files"]
        .as_array()
        .map(|a| {
            a.iter()
                .map(|f| (f["path"].as_str().unwrap_or("").to_owned(), f["sha256"].as_str().unwrap_or("").to_owned()))
                .collect()
        })
        .unwrap_or_default();
    listed.sort();
    let mut on_disk: Vec<(String, String)> = Vec::new();
    let mut stack: Vec<PathBuf> = vec![out.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d)? {
            let e = e?;
            let path = e.path();
            if e.file_type()?.is_dir() {
                stack.push(path);
                continue;
            }
            let rel = path.strip_prefix(out)?.to_string_lossy().replace('\\', "/");
            if rel == MANIFEST {
                continue;
            }
            on_disk.push((rel, sha256_hex(&std::fs::read(&path)?)));
        }
    }
    on_disk.sort();
    Ok(listed == on_disk)
}
