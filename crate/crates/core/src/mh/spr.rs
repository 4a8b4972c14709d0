//! Subtree-prune-regraft on ranked trees with holding times.
//!
//! A move detaches the subtree below node `c` (removing its parent `p`) and
//! reattaches it at time `t'` on the edge above node `u` of the pruned tree.
//! Node ids in a move refer to the tree it is applied to.
//!
//! Proposal: an ordered edge pair `(gamma, gamma')` is drawn uniformly from
//! `F_n x (F_n + MRCA edge)`. The edge `gamma'` of the unpruned tree maps to an
//! edge of the pruned tree with a time interval; both edges adjacent to `p`
//! map to the edge above the sibling `s`. The uniform attachment interval is
//! `(max(t_c, t_child), t_parent)`; above the root the offset from
//! `max(t_c, t_root)` is `Exp(1)`.
//!
//! The proposal density of a result sums over every `gamma'` producing it.
//! Pruning `s` instead of `c` yields the same result only when the move merely
//! shifts the time of `p`; that factor of two appears in both directions and
//! cancels, as does the uniform edge-pair weight.

use rand::Rng;
use rand_distr::Exp1;

use crate::tau::RankedTopology;

/// Prune `pruned`, regraft onto the edge above `target` (in the pruned tree)
/// at `time`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SprMove {
    pub pruned: usize,
    pub target: usize,
    pub time: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SprResult {
    pub topo: RankedTopology,
    pub times: Vec<f64>,
    /// The move that undoes this one, in the numbering of the new tree.
    pub reverse: SprMove,
    /// `ln q(reverse) - ln q(forward)`.
    pub log_ratio: f64,
}

/// Explicit rooted tree over the ids of a ranked topology.
#[derive(Clone, Debug)]
struct Tree {
    n: usize,
    parent: Vec<Option<usize>>,
    children: Vec<[usize; 2]>,
    time: Vec<f64>,
}

impl Tree {
    fn new(topo: &RankedTopology, holding: &[f64]) -> Self {
        let n = topo.n();
        let nodes = topo.node_count();
        let mut time = vec![0.0; nodes];
        let mut acc = 0.0;
        for r in 1..n {
            acc += holding[r - 1];
            time[n + r - 1] = acc;
        }
        let parent = (0..nodes).map(|v| topo.parent(v)).collect();
        let mut children = vec![[0, 0]; nodes];
        for (j, pair) in topo.mergers().enumerate() {
            children[n + j] = pair;
        }
        Self {
            n,
            parent,
            children,
            time,
        }
    }

    fn is_leaf(&self, v: usize) -> bool {
        v < self.n
    }

    fn sibling(&self, v: usize) -> Option<usize> {
        let p = self.parent[v]?;
        let [a, b] = self.children[p];
        Some(if a == v { b } else { a })
    }

    /// Whether `v` lies in the subtree rooted at `top`.
    fn in_subtree(&self, mut v: usize, top: usize) -> bool {
        loop {
            if v == top {
                return true;
            }
            match self.parent[v] {
                Some(p) if self.time[p] <= self.time[top] => v = p,
                _ => return false,
            }
        }
    }

    fn replace_child(&mut self, parent: usize, old: usize, new: usize) {
        for x in self.children[parent].iter_mut() {
            if *x == old {
                *x = new;
            }
        }
    }

    /// Ranked topology and holding times; `None` when two mergers coincide.
    fn to_ranked(&self) -> Option<(RankedTopology, Vec<f64>)> {
        let n = self.n;
        let mut internal: Vec<usize> = (n..self.time.len()).collect();
        internal.sort_by(|&a, &b| self.time[a].total_cmp(&self.time[b]));
        let mut new_id = vec![0; self.time.len()];
        for (v, id) in new_id.iter_mut().enumerate().take(n) {
            *id = v;
        }
        for (r, &v) in internal.iter().enumerate() {
            new_id[v] = n + r;
        }
        let mut mergers = Vec::with_capacity(n - 1);
        let mut holding = Vec::with_capacity(n - 1);
        let mut prev = 0.0;
        for &v in &internal {
            let t = self.time[v];
            if !(t > prev) {
                return None;
            }
            holding.push(t - prev);
            prev = t;
            let [a, b] = self.children[v];
            mergers.push([new_id[a], new_id[b]]);
        }
        let topo = RankedTopology::from_mergers(n, &mergers).ok()?;
        Some((topo, holding))
    }
}

/// View of the tree with `c` and its parent `p` removed.
struct Pruned<'a> {
    tree: &'a Tree,
    c: usize,
    p: usize,
    sib: usize,
}

impl Pruned<'_> {
    fn parent(&self, v: usize) -> Option<usize> {
        if v == self.sib {
            self.tree.parent[self.p]
        } else {
            self.tree.parent[v]
        }
    }

    /// Density of attaching `c` above `u` at time `t` when `c`'s parent sat at
    /// `t_par` above sibling `sib`.
    fn density(&self, sib: usize, t_par: f64, u: usize, t: f64) -> f64 {
        let time = &self.tree.time;
        let t_c = time[self.c];
        let lo = t_c.max(time[u]);
        let mut q = 0.0;
        if u == sib {
            // gamma' below the removed parent
            if lo < t && t < t_par {
                q += 1.0 / (t_par - lo);
            }
            match self.parent(u) {
                Some(w) => {
                    if t_par < t && t < time[w] {
                        q += 1.0 / (time[w] - t_par);
                    }
                }
                None => {
                    if t > lo {
                        q += (lo - t).exp();
                    }
                }
            }
        } else {
            match self.parent(u) {
                Some(w) => {
                    if lo < t && t < time[w] {
                        q += 1.0 / (time[w] - lo);
                    }
                }
                None => {
                    if t > lo {
                        q += (lo - t).exp();
                    }
                }
            }
        }
        q
    }
}

/// Applies a move; `None` when it is infeasible (target inside the pruned
/// subtree, time outside the target edge, or coinciding merger times).
pub fn apply_spr(topo: &RankedTopology, holding: &[f64], mv: SprMove) -> Option<SprResult> {
    let tree = Tree::new(topo, holding);
    let SprMove {
        pruned: c,
        target: u,
        time: t_new,
    } = mv;
    let p = tree.parent[c]?;
    let s = tree.sibling(c)?;
    if u == p || tree.in_subtree(u, c) {
        return None;
    }
    let view = Pruned {
        tree: &tree,
        c,
        p,
        sib: s,
    };
    let t_p = tree.time[p];
    let fwd = view.density(s, t_p, u, t_new);
    if !(fwd > 0.0) {
        return None;
    }
    let rev = view.density(u, t_new, s, t_p);
    if !(rev > 0.0) {
        return None;
    }

    let mut y = tree.clone();
    // remove p
    let pp = y.parent[p];
    y.parent[s] = pp;
    if let Some(pp) = pp {
        y.replace_child(pp, p, s);
    }
    // reinsert it above u
    let w = y.parent[u];
    y.children[p] = [c, u];
    y.parent[u] = Some(p);
    y.parent[p] = w;
    if let Some(w) = w {
        y.replace_child(w, u, p);
    }
    y.time[p] = t_new;
    let (new_topo, new_holding) = y.to_ranked()?;

    // ids change with the re-ranking; leaves keep theirs
    let relabel = |v: usize| -> usize {
        if y.is_leaf(v) {
            v
        } else {
            let t = y.time[v];
            tree.n + y.time[tree.n..].iter().filter(|&&x| x < t).count()
        }
    };
    Some(SprResult {
        topo: new_topo,
        times: new_holding,
        reverse: SprMove {
            pruned: relabel(c),
            target: relabel(s),
            time: t_p,
        },
        log_ratio: rev.ln() - fwd.ln(),
    })
}

/// Draws a move from the uniform edge-pair proposal. `None` when the pair is
/// infeasible, which counts as a rejection.
pub fn propose_spr<G: Rng + ?Sized>(topo: &RankedTopology, holding: &[f64], rng: &mut G) -> Option<SprMove> {
    let tree = Tree::new(topo, holding);
    let root = topo.root();
    let c = rng.random_range(0..root);
    // index `root` stands for the edge above the root
    let g = rng.random_range(0..=root);
    let p = tree.parent[c]?;
    let s = tree.sibling(c)?;
    if tree.in_subtree(g, c) {
        return None;
    }
    let time = &tree.time;
    let t_c = time[c];
    let uniform = |rng: &mut G, lo: f64, hi: f64| -> Option<f64> {
        if lo < hi {
            Some(lo + (hi - lo) * rng.random::<f64>())
        } else {
            None
        }
    };
    let (u, t) = if g == root {
        let u = if p == root { s } else { root };
        let e: f64 = rng.sample(Exp1);
        (u, t_c.max(time[u]) + e)
    } else if g == s {
        (s, uniform(rng, t_c.max(time[s]), time[p])?)
    } else if g == p {
        let pp = tree.parent[p]?;
        (s, uniform(rng, time[p], time[pp])?)
    } else {
        let w = tree.parent[g]?;
        (g, uniform(rng, t_c.max(time[g]), time[w])?)
    };
    Some(SprMove {
        pruned: c,
        target: u,
        time: t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::stream_rng;

    #[test]
    fn reverse_restores_the_tree() {
        let mut rng = stream_rng(3, 0);
        let mut done = 0;
        for _ in 0..2000 {
            let (topo, times) = RankedTopology::simulate_coalescent(6, &mut rng).unwrap();
            let Some(mv) = propose_spr(&topo, &times, &mut rng) else {
                continue;
            };
            let Some(fwd) = apply_spr(&topo, &times, mv) else {
                continue;
            };
            let back = apply_spr(&fwd.topo, &fwd.times, fwd.reverse).unwrap();
            assert_eq!(back.topo, topo);
            for (a, b) in back.times.iter().zip(&times) {
                assert!((a - b).abs() < 1e-12);
            }
            assert!((back.log_ratio + fwd.log_ratio).abs() < 1e-9);
            done += 1;
        }
        assert!(done > 500);
    }

    #[test]
    fn target_inside_pruned_subtree_is_infeasible() {
        let topo = RankedTopology::parse(3, "({1,2},{{1,2},3})").unwrap();
        let mv = SprMove {
            pruned: 3,
            target: 0,
            time: 0.5,
        };
        assert!(apply_spr(&topo, &[0.3, 0.4], mv).is_none());
    }

    #[test]
    fn time_shift_of_a_parent() {
        // moving leaf 1 to the edge above its sibling only changes the time of
        // their parent; the rank order here stays the same
        let topo = RankedTopology::parse(3, "({1,2},{{1,2},3})").unwrap();
        let mv = SprMove {
            pruned: 0,
            target: 1,
            time: 0.1,
        };
        let r = apply_spr(&topo, &[0.3, 0.4], mv).unwrap();
        assert_eq!(r.topo, topo);
        assert!((r.times[0] - 0.1).abs() < 1e-15 && (r.times[1] - 0.6).abs() < 1e-15);
        // forward: uniform on (0, 0.3); reverse: uniform on (0.1, 0.7)
        assert!((r.log_ratio - (0.3f64 / 0.6).ln()).abs() < 1e-12);
    }
}
