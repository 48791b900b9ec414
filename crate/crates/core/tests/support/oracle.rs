//! Brute-force reference implementations, written against the raw node and
//! reference lists only (no forest indices, no library aggregation).

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use lexnet::{BaseNetwork, Branch, Mass, Scalar};

pub struct Raw {
    pub parent: BTreeMap<String, Option<String>>,
    pub rank: BTreeMap<String, u8>,
    pub branch: BTreeMap<String, Branch>,
    pub children: BTreeMap<String, Vec<String>>,
}

impl Raw {
    pub fn new(base: &BaseNetwork) -> Raw {
        let mut raw = Raw {
            parent: BTreeMap::new(),
            rank: BTreeMap::new(),
            branch: BTreeMap::new(),
            children: BTreeMap::new(),
        };
        for n in base.judicial().nodes().iter().chain(base.legislative().nodes()) {
            let id = n.id.0.clone();
            raw.parent.insert(id.clone(), n.parent.as_ref().map(|p| p.0.clone()));
            raw.rank.insert(id.clone(), n.level.rank());
            raw.branch.insert(id.clone(), n.level.branch());
            raw.children.entry(id.clone()).or_default();
            if let Some(p) = &n.parent {
                raw.children.entry(p.0.clone()).or_default().push(id);
            }
        }
        raw
    }

    /// Deepest ancestor-or-self with rank ≤ `rank`.
    pub fn unit(&self, id: &str, rank: u8) -> String {
        let mut cur = id.to_owned();
        loop {
            if self.rank[&cur] <= rank {
                return cur;
            }
            cur = self.parent[&cur].clone().expect("roots have rank 1");
        }
    }

    fn frontier(&self) -> u8 {
        self.rank
            .iter()
            .filter(|(id, _)| self.branch[*id] == Branch::Legislative)
            .map(|(_, r)| *r)
            .max()
            .unwrap_or(1)
    }
}

fn add(map: &mut BTreeMap<(String, String), Mass>, key: (String, String), v: Mass) {
    let slot = map.entry(key).or_insert_with(|| Mass::from_count(0));
    *slot = slot.clone() + v;
}

/// Every downward path from the target to a frontier node (or a childless
/// node above it) gets the product of 1/#children along the way.
pub fn leaf_masses(base: &BaseNetwork) -> BTreeMap<(String, String), Mass> {
    let raw = Raw::new(base);
    let frontier = raw.frontier();
    let mut out = BTreeMap::new();
    for r in base.refs() {
        let mut paths = vec![(r.target.0.clone(), Mass::from_count(r.multiplicity))];
        while let Some((node, m)) = paths.pop() {
            let kids = &raw.children[&node];
            if raw.rank[&node] == frontier {
                add(&mut out, (r.source.0.clone(), node), m);
            } else if kids.is_empty() {
                add(&mut out, (r.source.0.clone(), format!("{node}::proxy")), m);
            } else {
                let share = m / Mass::from_count(kids.len() as u64);
                for k in kids {
                    paths.push((k.clone(), share.clone()));
                }
            }
        }
    }
    out
}

/// (judicial unit at rank `j`, legislative unit at rank `d`) → mass.
pub fn aggregate(base: &BaseNetwork, j: u8, d: u8) -> BTreeMap<(String, String), Mass> {
    let raw = Raw::new(base);
    let mut out = BTreeMap::new();
    for ((q, leaf), m) in leaf_masses(base) {
        let anchor = leaf.strip_suffix("::proxy").unwrap_or(&leaf);
        add(&mut out, (raw.unit(&q, j), raw.unit(anchor, d)), m);
    }
    out
}

pub enum Mode {
    Unit,
    Event,
    Combined(u64),
}

/// Legislative-side projection by enumeration over (witness unit, pair).
/// `j` is the perspective's judicial rank (the counting unit for combined),
/// `w` the witness rank, `d` the legislative rank.
pub fn projection(base: &BaseNetwork, j: u8, w: u8, d: u8, mode: Mode) -> BTreeMap<(String, String), Mass> {
    let raw = Raw::new(base);
    let masses = aggregate(base, w, d);
    let mut per_witness: BTreeMap<String, BTreeMap<String, Mass>> = BTreeMap::new();
    for ((wit, l), m) in masses {
        if m > Mass::from_count(0) {
            per_witness.entry(wit).or_default().insert(l, m);
        }
    }
    let mut out = BTreeMap::new();
    match mode {
        Mode::Unit | Mode::Event => {
            for targets in per_witness.values() {
                for (a, ma) in targets {
                    for (b, mb) in targets {
                        if a < b {
                            let c = match mode {
                                Mode::Unit => Mass::from_count(1),
                                _ => if ma < mb { ma.clone() } else { mb.clone() },
                            };
                            add(&mut out, (a.clone(), b.clone()), c);
                        }
                    }
                }
            }
        }
        Mode::Combined(k) => {
            let mut tuples: BTreeMap<(String, String, String), u64> = BTreeMap::new();
            for (wit, targets) in &per_witness {
                let c = raw.unit(wit, j);
                for a in targets.keys() {
                    for b in targets.keys() {
                        if a < b {
                            *tuples.entry((c.clone(), a.clone(), b.clone())).or_insert(0) += 1;
                        }
                    }
                }
            }
            for ((_, a, b), n) in tuples {
                if n >= k {
                    add(&mut out, (a, b), Mass::from_count(1));
                }
            }
        }
    }
    out
}

/// Decisions whose mass toward each legislative unit at rank `d` is ≥ k,
/// for units with any positive mass.
pub fn decisions_at_least(base: &BaseNetwork, d: u8, k: u64) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    for ((_, l), m) in aggregate(base, 3, d) {
        let c = out.entry(l).or_insert(0);
        if m >= Mass::from_count(k) {
            *c += 1;
        }
    }
    out
}

pub fn node_set(base: &BaseNetwork, branch: Branch) -> BTreeSet<String> {
    base.forest(branch).nodes().iter().map(|n| n.id.0.clone()).collect()
}
