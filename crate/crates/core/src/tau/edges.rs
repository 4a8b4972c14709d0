//! Edge table of the graphical tree induced by a ranked topology and holding
//! times.

use std::ops::Range;

use super::RankedTopology;
use crate::real::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Edge<R> {
    pub child: usize,
    pub parent: usize,
    /// 0-based holding-time indices spanned by the edge.
    pub span: Range<usize>,
    pub length: R,
    /// Rate of change of `length` under the current velocities.
    pub velocity: R,
    pub mutations: u32,
}

impl<R: Real> Edge<R> {
    pub fn spans(&self, coord: usize) -> bool {
        self.span.contains(&coord)
    }

    /// Length after moving for `dt` units of process time.
    #[inline]
    pub fn length_at(&self, dt: R) -> R {
        self.length + self.velocity * dt
    }
}

/// One edge per non-root node, indexed by child node id.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeTable<R> {
    edges: Vec<Edge<R>>,
}

impl<R: Real> EdgeTable<R> {
    /// Builds the table; `vels`, when given, fills each edge's velocity sum.
    pub fn build(topo: &RankedTopology, times: &[R], vels: Option<&[R]>) -> Self {
        let n = topo.n();
        debug_assert!(times.len() >= n - 1);
        // prefix sums give node times and velocity sums in O(1) per edge
        let mut tp = Vec::with_capacity(n);
        let mut vp = Vec::with_capacity(n);
        tp.push(R::zero());
        vp.push(R::zero());
        for j in 0..n - 1 {
            tp.push(tp[j] + times[j]);
            vp.push(vp[j] + vels.map_or(R::zero(), |v| v[j]));
        }
        let edges = (0..topo.root())
            .map(|c| {
                let p = topo.parent(c).expect("non-root node has a parent");
                let (lo, hi) = (topo.rank(c), topo.rank(p));
                Edge {
                    child: c,
                    parent: p,
                    span: lo..hi,
                    length: span_sum(times, lo..hi, tp[hi] - tp[lo]),
                    velocity: vp[hi] - vp[lo],
                    mutations: 0,
                }
            })
            .collect();
        Self { edges }
    }

    pub fn edges(&self) -> &[Edge<R>] {
        &self.edges
    }

    pub fn edge(&self, child: usize) -> &Edge<R> {
        &self.edges[child]
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn set_mutations(&mut self, counts: &[u32]) {
        for (e, &m) in self.edges.iter_mut().zip(counts) {
            e.mutations = m;
        }
    }

    pub fn total_length(&self) -> R {
        self.edges.iter().map(|e| e.length).sum()
    }

    /// Edges spanning the 0-based holding time `coord`.
    pub fn spanning(&self, coord: usize) -> impl Iterator<Item = &Edge<R>> {
        self.edges.iter().filter(move |e| e.spans(coord))
    }

    /// The shorter child branch of the merger of 1-based rank `rank`.
    pub fn shorter_child(&self, topo: &RankedTopology, rank: usize) -> &Edge<R> {
        let [a, b] = topo.merger(rank);
        let (ea, eb) = (&self.edges[a], &self.edges[b]);
        if eb.length < ea.length {
            eb
        } else {
            ea
        }
    }
}

// Short spans are summed directly so that an edge spanning a single holding time
// has exactly that length.
fn span_sum<R: Real>(times: &[R], span: Range<usize>, prefix: R) -> R {
    if span.len() <= 8 {
        times[span].iter().copied().sum()
    } else {
        prefix
    }
}
