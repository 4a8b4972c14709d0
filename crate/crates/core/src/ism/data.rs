//! Infinite-sites data: every mutation has a distinct position in `(0, 1)` and
//! is carried by the leaves below the edge it arose on.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::tau::RankedTopology;

#[derive(Clone, Debug, PartialEq)]
pub struct IsmDataset {
    /// Mutation positions carried by each leaf, sorted.
    leaves: Vec<Vec<f64>>,
    /// Distinct carrier sets (sorted 0-based leaf ids) with their mutation counts.
    groups: Vec<(Vec<usize>, u32)>,
    total: u32,
}

impl IsmDataset {
    /// Validates per-leaf mutation lists (one list per leaf).
    pub fn new(mut leaves: Vec<Vec<f64>>) -> Result<Self> {
        let n = leaves.len();
        if n < 2 {
            return Err(Error::data("a dataset needs at least two leaves"));
        }
        let mut carriers: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for (leaf, muts) in leaves.iter_mut().enumerate() {
            muts.sort_by(f64::total_cmp);
            for w in muts.windows(2) {
                if w[0] == w[1] {
                    return Err(Error::data(format!("leaf {} lists mutation {} twice", leaf + 1, w[0])));
                }
            }
            for &x in muts.iter() {
                if !(x > 0.0 && x < 1.0) {
                    return Err(Error::data(format!("mutation position {x} is outside (0, 1)")));
                }
                carriers.entry(x.to_bits()).or_default().push(leaf);
            }
        }
        let mut by_set: BTreeMap<Vec<usize>, u32> = BTreeMap::new();
        for (bits, set) in &carriers {
            if set.len() == n {
                return Err(Error::data(format!(
                    "mutation {} is carried by every leaf and cannot be placed on any edge",
                    f64::from_bits(*bits)
                )));
            }
            *by_set.entry(set.clone()).or_default() += 1;
        }
        let groups: Vec<(Vec<usize>, u32)> = by_set.into_iter().collect();
        for (a, (sa, _)) in groups.iter().enumerate() {
            for (sb, _) in &groups[a + 1..] {
                if !nested_or_disjoint(sa, sb) {
                    return Err(Error::data(format!(
                        "carrier sets {:?} and {:?} cross; the data violate the infinite-sites model",
                        labels(sa),
                        labels(sb)
                    )));
                }
            }
        }
        let total = groups.iter().map(|g| g.1).sum();
        Ok(Self { leaves, groups, total })
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::new(vec![Vec::new(); n])
    }

    pub fn n(&self) -> usize {
        self.leaves.len()
    }

    pub fn leaves(&self) -> &[Vec<f64>] {
        &self.leaves
    }

    pub fn total_mutations(&self) -> u32 {
        self.total
    }

    /// Distinct carrier sets and their multiplicities.
    pub fn groups(&self) -> &[(Vec<usize>, u32)] {
        &self.groups
    }

    /// Number of mutations on the edge above every node (indexed by child node
    /// id), or `None` when some carrier set is not subtended by any edge.
    pub fn assign(&self, topo: &RankedTopology) -> Option<Vec<u32>> {
        let counts = topo.leaf_counts();
        let mut out = vec![0u32; topo.root()];
        for (set, m) in &self.groups {
            let mut node = set[0];
            for &leaf in &set[1..] {
                node = lca(topo, node, leaf);
            }
            if counts[node] != set.len() || node == topo.root() {
                return None;
            }
            out[node] += m;
        }
        Some(out)
    }

    /// Watterson's estimate `M / sum_{k<n} 1/k`.
    pub fn watterson(&self) -> f64 {
        let h: f64 = (1..self.n()).map(|k| 1.0 / k as f64).sum();
        f64::from(self.total) / h
    }

    /// Distinct leaf types with their multiplicities, most frequent first.
    pub fn type_counts(&self) -> Vec<(usize, Vec<f64>)> {
        let mut map: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
        for l in &self.leaves {
            *map.entry(l.iter().map(|x| x.to_bits()).collect()).or_default() += 1;
        }
        let mut out: Vec<(usize, Vec<f64>)> = map
            .into_iter()
            .map(|(k, c)| (c, k.into_iter().map(f64::from_bits).collect()))
            .collect();
        out.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.len().cmp(&b.1.len())));
        out
    }

    /// Text form: header `n=<n> model=ism`, then one line of space-separated
    /// positions per leaf.
    pub fn to_text(&self) -> String {
        let mut s = format!("n={} model=ism\n", self.n());
        for l in &self.leaves {
            let parts: Vec<String> = l.iter().map(|x| x.to_string()).collect();
            let _ = writeln!(s, "{}", parts.join(" "));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::data("empty dataset file"))?;
        let fields = header_fields(header);
        if fields.get("model").map(String::as_str) != Some("ism") {
            return Err(Error::data("dataset header must declare model=ism"));
        }
        let n: usize = fields
            .get("n")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::data("dataset header lacks n=<leaves>"))?;
        let mut leaves = Vec::with_capacity(n);
        for (k, line) in lines.enumerate() {
            if leaves.len() == n {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(Error::data(format!("more than {n} leaf lines")));
            }
            let muts = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::data(format!("line {}: cannot parse mutation positions", k + 2)))?;
            leaves.push(muts);
        }
        // trailing leaves without mutations may lose their empty lines
        leaves.resize(n, Vec::new());
        Self::new(leaves)
    }

    /// Summary form: one line `<count> <positions...>` per distinct type.
    pub fn to_summary(&self) -> String {
        let mut s = String::from("# count positions\n");
        for (c, t) in self.type_counts() {
            let parts: Vec<String> = t.iter().map(|x| x.to_string()).collect();
            let _ = writeln!(s, "{c} {}", parts.join(" "));
        }
        s
    }

    /// Expands the summary form back into one leaf per counted copy.
    pub fn from_summary(text: &str) -> Result<Self> {
        let mut leaves = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let count: usize = it
                .next()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| Error::data(format!("summary line {}: missing count", k + 1)))?;
            let muts = it
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::data(format!("summary line {}: bad position", k + 1)))?;
            leaves.extend(std::iter::repeat_n(muts, count));
        }
        Self::new(leaves)
    }
}

pub(crate) fn header_fields(line: &str) -> BTreeMap<String, String> {
    line.split_whitespace()
        .filter_map(|kv| kv.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn labels(set: &[usize]) -> Vec<usize> {
    set.iter().map(|l| l + 1).collect()
}

fn nested_or_disjoint(a: &[usize], b: &[usize]) -> bool {
    let common = a.iter().filter(|x| b.binary_search(x).is_ok()).count();
    common == 0 || common == a.len() || common == b.len()
}

/// Lowest common ancestor: the node with the smaller rank cannot be an
/// ancestor of the other, so it moves up.
fn lca(topo: &RankedTopology, mut a: usize, mut b: usize) -> usize {
    while a != b {
        if topo.rank(a) <= topo.rank(b) {
            a = topo.parent(a).expect("only the root lacks a parent");
        } else {
            b = topo.parent(b).expect("only the root lacks a parent");
        }
    }
    a
}
