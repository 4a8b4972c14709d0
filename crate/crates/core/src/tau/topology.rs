//! Ranked topologies of ultrametric binary trees.
//!
//! Leaves carry node ids `0..n` (printed as labels `1..=n`); the node created by
//! the `r`-th merger (1-based rank `r`) has id `n + r - 1`, so the root is
//! `2n - 2`. The two children of every merger are stored ordered by their least
//! leaf label.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

const NONE: u32 = u32::MAX;

/// Which of the two nearest-neighbour interchanges a pivot performs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PivotDir {
    Up,
    Down,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryType {
    /// Boundary of the whole space: `t_1 = 0` or `theta = 0`.
    Type1,
    /// Two simultaneous mergers; crossing swaps their order.
    Type2,
    /// Simultaneous merger of three lineages; crossing pivots.
    Type3,
}

/// Boundary type of the face `coords[k - 1] = 0` (1-based `k`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BoundaryClass {
    pub kind: BoundaryType,
    pub k: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RankedTopology {
    n: usize,
    children: Vec<[u32; 2]>,
    parent: Vec<u32>,
    min_leaf: Vec<u32>,
}

impl RankedTopology {
    /// Builds a topology from merger child pairs given as node ids.
    pub fn from_mergers(n: usize, mergers: &[[usize; 2]]) -> Result<Self> {
        if n < 2 {
            return Err(Error::data("a tree needs at least two leaves"));
        }
        if mergers.len() != n - 1 {
            return Err(Error::data(format!(
                "expected {} mergers for {n} leaves, got {}",
                n - 1,
                mergers.len()
            )));
        }
        let nodes = 2 * n - 1;
        let mut parent = vec![NONE; nodes];
        let mut min_leaf: Vec<u32> = (0..nodes as u32).collect();
        let mut children = Vec::with_capacity(n - 1);
        for (j, pair) in mergers.iter().enumerate() {
            let id = n + j;
            for &c in pair {
                if c >= id {
                    return Err(Error::data(format!(
                        "merger {} references node {c} which does not exist yet",
                        j + 1
                    )));
                }
                if parent[c] != NONE {
                    return Err(Error::data(format!("node {c} merged twice")));
                }
                parent[c] = id as u32;
            }
            if pair[0] == pair[1] {
                return Err(Error::data(format!("merger {} joins a node with itself", j + 1)));
            }
            min_leaf[id] = min_leaf[pair[0]].min(min_leaf[pair[1]]);
            let mut p = [pair[0] as u32, pair[1] as u32];
            if min_leaf[p[0] as usize] > min_leaf[p[1] as usize] {
                p.swap(0, 1);
            }
            children.push(p);
        }
        Ok(Self {
            n,
            children,
            parent,
            min_leaf,
        })
    }

    /// Parses the set notation `({1,2},{{1,2},3})`: one `{a,b}` pair per
    /// merger, where each entry is a leaf label or a flat set of leaf labels.
    pub fn parse(n: usize, text: &str) -> Result<Self> {
        let sets = parse_merger_sets(text)?;
        let mut known: Vec<(Vec<usize>, usize)> = (0..n).map(|i| (vec![i], i)).collect();
        let mut mergers = Vec::with_capacity(sets.len());
        for (j, (a, b)) in sets.into_iter().enumerate() {
            let mut ids = [0usize; 2];
            for (slot, set) in ids.iter_mut().zip([a, b]) {
                let set: Vec<usize> = set.into_iter().map(|l| l - 1).collect();
                *slot = known
                    .iter()
                    .find(|(s, _)| *s == set)
                    .map(|(_, id)| *id)
                    .ok_or_else(|| Error::data(format!("unknown label {set:?} in merger {}", j + 1)))?;
            }
            let mut union: Vec<usize> = known[ids[0]].0.iter().chain(&known[ids[1]].0).copied().collect();
            union.sort_unstable();
            known.push((union, n + j));
            mergers.push(ids);
        }
        Self::from_mergers(n, &mergers)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn node_count(&self) -> usize {
        2 * self.n - 1
    }

    pub fn root(&self) -> usize {
        2 * self.n - 2
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        node < self.n
    }

    /// Node id created by the merger of 1-based rank `rank`.
    pub fn merger_node(&self, rank: usize) -> usize {
        self.n + rank - 1
    }

    /// 1-based merger rank of a node; leaves have rank 0.
    pub fn rank(&self, node: usize) -> usize {
        if node < self.n {
            0
        } else {
            node - self.n + 1
        }
    }

    /// Children of the merger of 1-based rank `rank`, ordered by least leaf.
    pub fn merger(&self, rank: usize) -> [usize; 2] {
        let [a, b] = self.children[rank - 1];
        [a as usize, b as usize]
    }

    pub fn mergers(&self) -> impl Iterator<Item = [usize; 2]> + '_ {
        self.children.iter().map(|&[a, b]| [a as usize, b as usize])
    }

    pub fn children_of(&self, node: usize) -> Option<[usize; 2]> {
        (node >= self.n).then(|| self.merger(self.rank(node)))
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        let p = self.parent[node];
        (p != NONE).then_some(p as usize)
    }

    pub fn min_leaf(&self, node: usize) -> usize {
        self.min_leaf[node] as usize
    }

    pub fn sibling(&self, node: usize) -> Option<usize> {
        let p = self.parent(node)?;
        let [a, b] = self.merger(self.rank(p));
        Some(if a == node { b } else { a })
    }

    /// `E_{i-1} ∈ E_i`: the node of merger `i - 1` is a child of merger `i`.
    pub fn nested_at(&self, i: usize) -> bool {
        i >= 2 && i < self.n && self.merger(i).contains(&self.merger_node(i - 1))
    }

    /// Classifies the boundary face where coordinate `k` (1-based) vanishes;
    /// `k = n` denotes the mutation-rate coordinate.
    pub fn classify_boundary(&self, k: usize) -> BoundaryClass {
        let kind = if k <= 1 || k >= self.n {
            BoundaryType::Type1
        } else if self.nested_at(k) {
            BoundaryType::Type3
        } else {
            BoundaryType::Type2
        };
        BoundaryClass { kind, k }
    }

    /// Swaps the order of mergers `i - 1` and `i` (1-based `2 <= i <= n - 2`).
    pub fn swap(&self, i: usize) -> Result<Self> {
        if i < 2 || i + 2 > self.n {
            return Err(Error::InvalidOperator {
                op: "swap",
                index: i,
                reason: "index must lie in 2..=n-2",
            });
        }
        if self.nested_at(i) {
            return Err(Error::InvalidOperator {
                op: "swap",
                index: i,
                reason: "merger i-1 is a child of merger i",
            });
        }
        let mut out = self.clone();
        let (a, b) = (i - 2, i - 1);
        let (x, y) = (self.n + a, self.n + b);
        out.children.swap(a, b);
        for c in out.children[a] {
            out.parent[c as usize] = x as u32;
        }
        for c in out.children[b] {
            out.parent[c as usize] = y as u32;
        }
        let (px, py) = (self.parent[x], self.parent[y]);
        out.parent[x] = py;
        out.parent[y] = px;
        out.min_leaf.swap(x, y);
        for p in [px, py] {
            let slot = &mut out.children[p as usize - self.n];
            if slot.contains(&(x as u32)) || slot.contains(&(y as u32)) {
                for c in slot.iter_mut() {
                    if *c == x as u32 {
                        *c = y as u32;
                    } else if *c == y as u32 {
                        *c = x as u32;
                    }
                }
            }
            if px == py {
                break;
            }
        }
        // relabelled entries keep their leaf content, so no re-sorting is needed
        // except when both were children of the same parent
        if px == py {
            out.sort_pair(px as usize - self.n);
        }
        Ok(out)
    }

    /// Nearest-neighbour interchange between merger `i` and its child merger
    /// `i - 1` (1-based `2 <= i <= n - 1`).
    pub fn pivot(&self, i: usize, dir: PivotDir) -> Result<Self> {
        if i < 2 || i + 1 > self.n {
            return Err(Error::InvalidOperator {
                op: "pivot",
                index: i,
                reason: "index must lie in 2..=n-1",
            });
        }
        if !self.nested_at(i) {
            return Err(Error::InvalidOperator {
                op: "pivot",
                index: i,
                reason: "merger i-1 is not a child of merger i",
            });
        }
        let mut out = self.clone();
        let (a, b) = (i - 2, i - 1);
        let (x, y) = (self.n + a, self.n + b);
        let [low, high] = self.children[a];
        let sib = self.sibling(x).expect("merger i-1 has a parent") as u32;
        let (keep, moved) = match dir {
            PivotDir::Down => (low, high),
            PivotDir::Up => (high, low),
        };
        out.children[a] = [keep, sib];
        out.children[b] = [x as u32, moved];
        out.parent[keep as usize] = x as u32;
        out.parent[sib as usize] = x as u32;
        out.parent[moved as usize] = y as u32;
        out.min_leaf[x] = self.min_leaf[keep as usize].min(self.min_leaf[sib as usize]);
        out.sort_pair(a);
        out.sort_pair(b);
        Ok(out)
    }

    fn sort_pair(&mut self, idx: usize) {
        let [p, q] = self.children[idx];
        if self.min_leaf[p as usize] > self.min_leaf[q as usize] {
            self.children[idx] = [q, p];
        }
    }

    /// Leaf ids subtended by every node, indexed by node id and sorted.
    pub fn leaf_sets(&self) -> Vec<Vec<usize>> {
        let mut sets: Vec<Vec<usize>> = (0..self.n).map(|l| vec![l]).collect();
        for [a, b] in self.mergers() {
            let mut s: Vec<usize> = sets[a].iter().chain(&sets[b]).copied().collect();
            s.sort_unstable();
            sets.push(s);
        }
        sets
    }

    /// Number of leaves below every node.
    pub fn leaf_counts(&self) -> Vec<usize> {
        let mut counts = vec![1usize; self.node_count()];
        for (j, [a, b]) in self.mergers().enumerate() {
            counts[self.n + j] = counts[a] + counts[b];
        }
        counts
    }

    /// Multiset of mergers as pairs of leaf-label sets (used to compare operator
    /// outputs independently of node numbering).
    pub fn merger_label_pairs(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        let sets = self.leaf_sets();
        let mut pairs: Vec<_> = self
            .mergers()
            .map(|[a, b]| (sets[a].clone(), sets[b].clone()))
            .collect();
        pairs.sort();
        pairs
    }

    /// Stable 64-bit identifier (FNV-1a over the merger sequence).
    pub fn mode_id(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        let mut feed = |w: u32| {
            for byte in w.to_le_bytes() {
                h ^= u64::from(byte);
                h = h.wrapping_mul(PRIME);
            }
        };
        feed(self.n as u32);
        for &[a, b] in &self.children {
            feed(a);
            feed(b);
        }
        h
    }

    /// Run-log line `id <hash> mergers <pair list>`.
    pub fn id_line(&self) -> String {
        format!("id {:016x} mergers {}", self.mode_id(), self)
    }

    /// Newick text with branch lengths from holding times `times`
    /// (`times[r - 1]` separates mergers `r - 1` and `r`).
    pub fn to_newick(&self, times: &[f64]) -> String {
        let mut node_time = vec![0.0; self.node_count()];
        let mut acc = 0.0;
        for r in 1..self.n {
            acc += times[r - 1];
            node_time[self.merger_node(r)] = acc;
        }
        let mut out = String::new();
        self.newick_node(self.root(), &node_time, &mut out);
        out.push(';');
        out
    }

    fn newick_node(&self, node: usize, node_time: &[f64], out: &mut String) {
        if let Some([a, b]) = self.children_of(node) {
            out.push('(');
            for (k, c) in [a, b].into_iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                self.newick_node(c, node_time, out);
                out.push_str(&format!(":{}", node_time[node] - node_time[c]));
            }
            out.push(')');
        } else {
            out.push_str(&(node + 1).to_string());
        }
    }

    /// Draws a ranked topology and holding times from the Kingman coalescent.
    pub fn simulate_coalescent<G: Rng + ?Sized>(n: usize, rng: &mut G) -> Result<(Self, Vec<f64>)> {
        if n < 2 {
            return Err(Error::data("a tree needs at least two leaves"));
        }
        let mut lineages: Vec<usize> = (0..n).collect();
        let mut mergers = Vec::with_capacity(n - 1);
        let mut times = Vec::with_capacity(n - 1);
        for r in 1..n {
            let k = lineages.len();
            let rate = (k * (k - 1) / 2) as f64;
            let u: f64 = rng.random::<f64>();
            times.push(-(1.0 - u).ln() / rate);
            let i = rng.random_range(0..k);
            let mut j = rng.random_range(0..k - 1);
            if j >= i {
                j += 1;
            }
            mergers.push([lineages[i], lineages[j]]);
            let (hi, lo) = if i > j { (i, j) } else { (j, i) };
            lineages.swap_remove(hi);
            lineages[lo] = n + r - 1;
        }
        Ok((Self::from_mergers(n, &mergers)?, times))
    }

    /// Every ranked topology on `n` leaves, in a deterministic order.
    pub fn enumerate(n: usize) -> Vec<Self> {
        fn rec(n: usize, lineages: &[usize], acc: &mut Vec<[usize; 2]>, out: &mut Vec<RankedTopology>) {
            if lineages.len() == 1 {
                out.push(RankedTopology::from_mergers(n, acc).expect("enumerated mergers are valid"));
                return;
            }
            let next = n + acc.len();
            let k = lineages.len();
            for i in 0..k {
                for j in i + 1..k {
                    let (a, b) = (lineages[i], lineages[j]);
                    let mut rest: Vec<usize> = lineages
                        .iter()
                        .enumerate()
                        .filter(|&(q, _)| q != i && q != j)
                        .map(|(_, &l)| l)
                        .collect();
                    rest.push(next);
                    acc.push([a, b]);
                    rec(n, &rest, acc, out);
                    acc.pop();
                }
            }
        }
        let mut out = Vec::new();
        if n >= 2 {
            rec(n, &(0..n).collect::<Vec<_>>(), &mut Vec::new(), &mut out);
        }
        out
    }

    /// Checks the structural invariants; used by tests and after decoding.
    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.node_count()];
        for (j, [a, b]) in self.mergers().enumerate() {
            let id = self.n + j;
            for c in [a, b] {
                if c >= id || seen[c] || self.parent(c) != Some(id) {
                    return Err(Error::data(format!("merger {} is malformed", j + 1)));
                }
                seen[c] = true;
            }
            if self.min_leaf(a) >= self.min_leaf(b) {
                return Err(Error::data(format!("merger {} is not ordered", j + 1)));
            }
            if self.min_leaf(id) != self.min_leaf(a) {
                return Err(Error::data(format!("stale least leaf at merger {}", j + 1)));
            }
        }
        if seen[self.root()] || self.parent(self.root()).is_some() {
            return Err(Error::data("root has a parent"));
        }
        if seen.iter().take(self.root()).any(|s| !s) {
            return Err(Error::data("some node is never merged"));
        }
        Ok(())
    }
}

impl fmt::Display for RankedTopology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sets = self.leaf_sets();
        let label = |node: usize| -> String {
            if node < self.n {
                (node + 1).to_string()
            } else {
                let inner: Vec<String> = sets[node].iter().map(|l| (l + 1).to_string()).collect();
                format!("{{{}}}", inner.join(","))
            }
        };
        write!(f, "(")?;
        for (j, [a, b]) in self.mergers().enumerate() {
            if j > 0 {
                write!(f, ",")?;
            }
            write!(f, "{{{},{}}}", label(a), label(b))?;
        }
        write!(f, ")")
    }
}

type LabelSet = Vec<usize>;

fn parse_merger_sets(text: &str) -> Result<Vec<(LabelSet, LabelSet)>> {
    let bad = || Error::data(format!("cannot parse ranked topology `{text}`"));
    let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
    let mut pos = 0;
    let eat = |pos: &mut usize, c: char| -> Result<()> {
        if chars.get(*pos) == Some(&c) {
            *pos += 1;
            Ok(())
        } else {
            Err(bad())
        }
    };
    let number = |pos: &mut usize| -> Result<usize> {
        let start = *pos;
        while chars.get(*pos).is_some_and(|c| c.is_ascii_digit()) {
            *pos += 1;
        }
        let s: String = chars[start..*pos].iter().collect();
        match s.parse::<usize>() {
            Ok(v) if v >= 1 => Ok(v),
            _ => Err(bad()),
        }
    };
    let entry = |pos: &mut usize| -> Result<LabelSet> {
        if chars.get(*pos) == Some(&'{') {
            *pos += 1;
            let mut set = vec![number(pos)?];
            while chars.get(*pos) == Some(&',') {
                *pos += 1;
                set.push(number(pos)?);
            }
            eat(pos, '}')?;
            set.sort_unstable();
            Ok(set)
        } else {
            Ok(vec![number(pos)?])
        }
    };
    eat(&mut pos, '(')?;
    let mut out = Vec::new();
    loop {
        eat(&mut pos, '{')?;
        let a = entry(&mut pos)?;
        eat(&mut pos, ',')?;
        let b = entry(&mut pos)?;
        eat(&mut pos, '}')?;
        out.push((a, b));
        match chars.get(pos) {
            Some(',') => pos += 1,
            Some(')') => {
                pos += 1;
                break;
            }
            _ => return Err(bad()),
        }
    }
    if pos != chars.len() {
        return Err(bad());
    }
    Ok(out)
}
