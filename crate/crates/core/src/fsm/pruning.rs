//! Felsenstein pruning with an outside pass for branch-length gradients.
//!
//! Partial likelihoods are rescaled at every node. Per-edge quantities are
//! reported as ratios whose numerator and denominator share the same scaled
//! inside and outside vectors, so the scale factors cancel.

use crate::real::Real;
use crate::tau::RankedTopology;

pub(crate) type Mat<R> = [[R; 2]; 2];

/// Scratch space for one site, reused across sites.
#[derive(Clone, Debug)]
pub(crate) struct Workspace<R> {
    inside: Vec<[R; 2]>,
    /// Message sent from each child to its parent: `sum_g Q_hg L_c(g)`.
    up: Vec<[R; 2]>,
    outside: Vec<[R; 2]>,
    /// `sum_h A(h) L_c(h) / D` per child node.
    pub same: Vec<R>,
    /// `sum_h A(h) L_c(1 - h) / D` per child node.
    pub diff: Vec<R>,
}

impl<R: Real> Workspace<R> {
    pub fn new(nodes: usize) -> Self {
        let z = [R::zero(); 2];
        Self {
            inside: vec![z; nodes],
            up: vec![z; nodes],
            outside: vec![z; nodes],
            same: vec![R::zero(); nodes],
            diff: vec![R::zero(); nodes],
        }
    }
}

/// Inside pass; returns the site log-likelihood with the root weighted by the
/// uniform stationary distribution.
pub(crate) fn inside<R: Real>(topo: &RankedTopology, mats: &[Mat<R>], leaves: &[u8], ws: &mut Workspace<R>) -> R {
    let n = topo.n();
    for (leaf, &h) in leaves.iter().enumerate() {
        ws.inside[leaf] = if h == 0 {
            [R::one(), R::zero()]
        } else {
            [R::zero(), R::one()]
        };
    }
    let mut log_scale = R::zero();
    for (j, [a, b]) in topo.mergers().enumerate() {
        let p = n + j;
        for c in [a, b] {
            let q = &mats[c];
            let l = ws.inside[c];
            ws.up[c] = [q[0][0] * l[0] + q[0][1] * l[1], q[1][0] * l[0] + q[1][1] * l[1]];
        }
        let mut v = [ws.up[a][0] * ws.up[b][0], ws.up[a][1] * ws.up[b][1]];
        let m = v[0].max(v[1]);
        if m > R::zero() {
            v[0] /= m;
            v[1] /= m;
            log_scale += m.ln();
        }
        ws.inside[p] = v;
    }
    let root = ws.inside[topo.root()];
    let half = R::of(0.5);
    (half * (root[0] + root[1])).ln() + log_scale
}

/// Inside and outside passes; fills `ws.same` and `ws.diff` and returns the
/// site log-likelihood.
pub(crate) fn inside_outside<R: Real>(
    topo: &RankedTopology,
    mats: &[Mat<R>],
    leaves: &[u8],
    ws: &mut Workspace<R>,
) -> R {
    let ll = inside(topo, mats, leaves, ws);
    let n = topo.n();
    let root = topo.root();
    ws.outside[root] = [R::of(0.5); 2];
    for j in (0..n - 1).rev() {
        let p = n + j;
        let o = ws.outside[p];
        let [a, b] = topo.merger(j + 1);
        for (c, sib) in [(a, b), (b, a)] {
            let s = ws.up[sib];
            let act = [o[0] * s[0], o[1] * s[1]];
            let l = ws.inside[c];
            let u = ws.up[c];
            let d = act[0] * u[0] + act[1] * u[1];
            if d > R::zero() {
                ws.same[c] = (act[0] * l[0] + act[1] * l[1]) / d;
                ws.diff[c] = (act[0] * l[1] + act[1] * l[0]) / d;
            } else {
                ws.same[c] = R::zero();
                ws.diff[c] = R::zero();
            }
            if c >= n {
                let q = &mats[c];
                let mut oc = [act[0] * q[0][0] + act[1] * q[1][0], act[0] * q[0][1] + act[1] * q[1][1]];
                let m = oc[0].max(oc[1]);
                if m > R::zero() {
                    oc[0] /= m;
                    oc[1] /= m;
                }
                ws.outside[c] = oc;
            }
        }
    }
    ll
}
