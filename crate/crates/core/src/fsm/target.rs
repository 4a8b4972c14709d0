use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng;

use super::data::FsmDataset;
use super::kernel::matrix;
use super::pruning::{inside, inside_outside, Mat, Workspace};
use crate::engine::{BoundaryOutcome, HybridState, SimRng, TargetModel};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::tau::{cross_boundary, log_prior, merger_rate, prior_mean, EdgeTable, RankedTopology, TreeTarget};
use crate::theta::ThetaPrior;

/// Finite-sites coalescent posterior with the symmetric two-state kernel.
///
/// Mutations hit each site at rate `theta / (2|S|)`, so the kernel is
/// evaluated at the per-site rate `theta / |S|`.
#[derive(Debug)]
pub struct FsmTarget<R> {
    data: Arc<FsmDataset>,
    n: usize,
    sites: R,
    patterns: Vec<(Vec<u8>, R)>,
    segregating: bool,
    prior: ThetaPrior,
    guard: R,
    max_increment: R,
    density_evals: AtomicU64,
    edge_site_ops: AtomicU64,
}

impl<R: Real> Clone for FsmTarget<R> {
    fn clone(&self) -> Self {
        Self {
            data: self.data.clone(),
            n: self.n,
            sites: self.sites,
            patterns: self.patterns.clone(),
            segregating: self.segregating,
            prior: self.prior,
            guard: self.guard,
            max_increment: self.max_increment,
            density_evals: AtomicU64::new(0),
            edge_site_ops: AtomicU64::new(0),
        }
    }
}

#[derive(Debug)]
pub struct FsmContext<R> {
    edges: EdgeTable<R>,
}

/// Log-likelihood and its gradient with respect to `(t_1, ..., t_{n-1}, theta)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LikelihoodGradient<R> {
    pub log_likelihood: R,
    pub gradient: Vec<R>,
}

impl<R: Real> FsmTarget<R> {
    pub fn new(data: FsmDataset) -> Result<Self> {
        if data.alphabet().len() != 2 {
            return Err(Error::config("the finite-sites kernel needs a two-symbol alphabet"));
        }
        let patterns = data
            .patterns()
            .into_iter()
            .map(|(col, w)| (col, R::of_usize(w)))
            .collect();
        Ok(Self {
            n: data.n(),
            sites: R::of_usize(data.sites()),
            segregating: data.segregating_sites() > 0,
            data: Arc::new(data),
            patterns,
            prior: ThetaPrior::Flat,
            guard: R::of(4.0),
            max_increment: R::one(),
            density_evals: AtomicU64::new(0),
            edge_site_ops: AtomicU64::new(0),
        })
    }

    pub fn with_prior(mut self, prior: ThetaPrior) -> Self {
        self.prior = prior;
        self
    }

    pub fn with_guard(mut self, c: R) -> Self {
        self.guard = c;
        self
    }

    pub fn with_max_increment(mut self, k: R) -> Self {
        self.max_increment = k;
        self
    }

    pub fn data(&self) -> &FsmDataset {
        &self.data
    }

    pub fn prior(&self) -> ThetaPrior {
        self.prior
    }

    pub fn density_evals(&self) -> u64 {
        self.density_evals.load(Ordering::Relaxed)
    }

    /// Edge-site operations performed by pruning passes so far.
    pub fn edge_site_ops(&self) -> u64 {
        self.edge_site_ops.load(Ordering::Relaxed)
    }

    fn count_pass(&self) {
        let ops = (2 * self.n - 2) * self.patterns.len();
        self.edge_site_ops.fetch_add(ops as u64, Ordering::Relaxed);
    }

    fn matrices(&self, edges: &EdgeTable<R>, lengths: impl Fn(usize) -> R, theta: R) -> Vec<Mat<R>> {
        let rate = theta / self.sites;
        (0..edges.len()).map(|c| matrix(lengths(c), rate)).collect()
    }

    pub fn log_likelihood(&self, topo: &RankedTopology, times: &[R], theta: R) -> R {
        let edges = EdgeTable::build(topo, times, None);
        let mats = self.matrices(&edges, |c| edges.edge(c).length, theta);
        let mut ws = Workspace::new(topo.node_count());
        self.count_pass();
        self.patterns
            .iter()
            .map(|(col, w)| *w * inside(topo, &mats, col, &mut ws))
            .sum()
    }

    /// Exact log-likelihood gradient by one inside-outside pass per site pattern.
    pub fn gradient(&self, topo: &RankedTopology, times: &[R], theta: R) -> LikelihoodGradient<R> {
        let edges = EdgeTable::build(topo, times, None);
        let (ll, per_edge) = self.edge_gradients(topo, &edges, |c| edges.edge(c).length, theta);
        let n = self.n;
        let mut gradient = spread(&edges, &per_edge, n - 1);
        let mut gt = R::zero();
        for e in edges.edges() {
            if theta > R::zero() {
                gt += e.length / theta * per_edge[e.child];
            }
        }
        gradient.push(gt);
        LikelihoodGradient {
            log_likelihood: ll,
            gradient,
        }
    }

    /// Log-likelihood and the derivative with respect to every edge length.
    fn edge_gradients(
        &self,
        topo: &RankedTopology,
        edges: &EdgeTable<R>,
        lengths: impl Fn(usize) -> R,
        theta: R,
    ) -> (R, Vec<R>) {
        let mats = self.matrices(edges, &lengths, theta);
        let rate = theta / self.sites;
        let half = R::of(0.5);
        let slope: Vec<R> = (0..edges.len())
            .map(|c| half * rate * (-rate * lengths(c)).exp())
            .collect();
        let mut ws = Workspace::new(topo.node_count());
        let mut per_edge = vec![R::zero(); edges.len()];
        let mut ll = R::zero();
        self.count_pass();
        for (col, w) in &self.patterns {
            ll += *w * inside_outside(topo, &mats, col, &mut ws);
            for c in 0..edges.len() {
                per_edge[c] += *w * slope[c] * (ws.diff[c] - ws.same[c]);
            }
        }
        (ll, per_edge)
    }

    /// Initial state: a coalescent draw, Watterson's estimate from the
    /// segregating sites, and speeds with random signs.
    pub fn initial_state<G: Rng + ?Sized>(
        &self,
        rng: &mut G,
        theta_speed: f64,
    ) -> Result<HybridState<RankedTopology, R>> {
        let n = self.n;
        let (topo, times) = RankedTopology::simulate_coalescent(n, rng)?;
        let h: f64 = (1..n).map(|k| 1.0 / k as f64).sum();
        let theta0 = (self.data.segregating_sites() as f64 / h).max(0.1);
        let mut coords: Vec<R> = times.iter().map(|&t| R::of(t)).collect();
        coords.push(R::of(theta0));
        let mut vels: Vec<R> = (1..n).map(|i| R::of(prior_mean(n, i))).collect();
        vels.push(R::of(theta_speed));
        for v in vels.iter_mut() {
            if rng.random::<bool>() {
                *v = -*v;
            }
        }
        Ok(HybridState::new(topo, coords, vels))
    }
}

/// Sums per-edge values onto the holding times each edge spans.
fn spread<R: Real>(edges: &EdgeTable<R>, per_edge: &[R], d: usize) -> Vec<R> {
    let mut diff = vec![R::zero(); d + 1];
    for e in edges.edges() {
        diff[e.span.start] += per_edge[e.child];
        diff[e.span.end] -= per_edge[e.child];
    }
    let mut acc = R::zero();
    diff.truncate(d);
    for x in diff.iter_mut() {
        acc += *x;
        *x = acc;
    }
    diff
}

impl<R: Real> TargetModel<R> for FsmTarget<R> {
    type Mode = RankedTopology;
    type Context = FsmContext<R>;

    fn dim(&self) -> usize {
        self.n
    }

    fn log_density(&self, topo: &RankedTopology, coords: &[R]) -> R {
        self.density_evals.fetch_add(1, Ordering::Relaxed);
        if coords.iter().any(|&x| x < R::zero() || x.is_nan()) {
            return R::neg_infinity();
        }
        let n = self.n;
        let theta = coords[n - 1];
        let times = &coords[..n - 1];
        let ll = self.log_likelihood(topo, times, theta);
        if ll.is_nan() {
            return R::neg_infinity();
        }
        ll + log_prior(n, times) + self.prior.log_density(theta)
    }

    fn max_increment(&self) -> R {
        self.max_increment
    }

    fn guard_constant(&self) -> R {
        self.guard
    }

    fn prepare(&self, state: &HybridState<RankedTopology, R>) -> FsmContext<R> {
        let n = self.n;
        FsmContext {
            edges: EdgeTable::build(&state.mode, &state.coords[..n - 1], Some(&state.vels[..n - 1])),
        }
    }

    fn guarded(&self, state: &HybridState<RankedTopology, R>, _: &FsmContext<R>, i: usize) -> bool {
        if i == self.n - 1 {
            return self.segregating;
        }
        if i == 0 {
            let [a, b] = state.mode.merger(1);
            return self.data.differences(a, b) > 0;
        }
        false
    }

    fn flip_rate(&self, state: &HybridState<RankedTopology, R>, ctx: &FsmContext<R>, i: usize, s: R) -> R {
        let n = self.n;
        let th = n - 1;
        let theta = state.coord_at(th, s);
        let edges = &ctx.edges;
        let (_, per_edge) = self.edge_gradients(&state.mode, edges, |c| edges.edge(c).length_at(s), theta);
        let v = state.vels[i];
        if i == th {
            let mut g = self.prior.grad(theta);
            for e in edges.edges() {
                g += e.length_at(s) / theta * per_edge[e.child];
            }
            (-v * g).pos()
        } else {
            let mut g = merger_rate::<R>(n, i + 1);
            for e in edges.spanning(i) {
                g -= per_edge[e.child];
            }
            (v * g).pos()
        }
    }

    fn flip_bounds(&self, state: &HybridState<RankedTopology, R>, ctx: &FsmContext<R>, window: R) -> Vec<R> {
        let n = self.n;
        let th = n - 1;
        let topo = &*state.mode;
        let edges = &ctx.edges;
        let half = R::of(0.5);
        let theta = state.coords[th];
        let vt = state.vels[th] * window;
        let rate_lo = (theta + vt.neg_part()) / self.sites;
        let rate_hi = (theta + vt.pos()) / self.sites;
        let ne = edges.len();

        // window extremes of the kernel entries and of |dQ/dl|, |dQ/dtheta|
        let mut up: Vec<Mat<R>> = Vec::with_capacity(ne);
        let mut lo: Vec<Mat<R>> = Vec::with_capacity(ne);
        let mut dl = Vec::with_capacity(ne);
        let mut dth = Vec::with_capacity(ne);
        for e in edges.edges() {
            let l_min = e.length + (e.velocity * window).neg_part();
            let l_max = e.length + (e.velocity * window).pos();
            let e_big = (-rate_lo * l_min).exp();
            let e_small = (-rate_hi * l_max).exp();
            let (same_hi, diff_hi) = (half * (R::one() + e_big), half * (R::one() - e_small));
            let (same_lo, diff_lo) = (half * (R::one() + e_small), half * (R::one() - e_big));
            up.push([[same_hi, diff_hi], [diff_hi, same_hi]]);
            lo.push([[same_lo, diff_lo], [diff_lo, same_lo]]);
            dl.push((half * rate_lo * e_small, half * rate_hi * e_big));
            let per_site = half / self.sites;
            dth.push((per_site * l_min * e_small, per_site * l_max * e_big));
        }

        // per-edge lower/upper bounds on d log L / d l and d log L / d theta,
        // plus magnitudes for rounding slack
        let mut gl = vec![(R::zero(), R::zero(), R::zero()); ne];
        let mut gt = vec![(R::zero(), R::zero(), R::zero()); ne];
        let mut ws_up = Workspace::new(topo.node_count());
        let mut ws_lo = Workspace::new(topo.node_count());
        self.count_pass();
        self.count_pass();
        for (col, w) in &self.patterns {
            let ll_up = inside_outside(topo, &up, col, &mut ws_up);
            let ll_lo = inside_outside(topo, &lo, col, &mut ws_lo);
            // D_up / D_low
            let r = (ll_up - ll_lo).exp();
            for c in 0..ne {
                let (a_up, a_lo) = (ws_up.diff[c] * r, ws_lo.diff[c] / r);
                let (b_up, b_lo) = (ws_up.same[c] * r, ws_lo.same[c] / r);
                let ((dl_lo, dl_hi), (dt_lo, dt_hi)) = (dl[c], dth[c]);
                gl[c].0 += *w * (dl_lo * a_lo - dl_hi * b_up);
                gl[c].1 += *w * (dl_hi * a_up - dl_lo * b_lo);
                gl[c].2 += *w * dl_hi * (a_up + b_up);
                gt[c].0 += *w * (dt_lo * a_lo - dt_hi * b_up);
                gt[c].1 += *w * (dt_hi * a_up - dt_lo * b_lo);
                gt[c].2 += *w * dt_hi * (a_up + b_up);
            }
        }

        let slack = R::of(1e-10);
        let low = spread(edges, &gl.iter().map(|g| g.0).collect::<Vec<_>>(), n - 1);
        let high = spread(edges, &gl.iter().map(|g| g.1).collect::<Vec<_>>(), n - 1);
        let mag = spread(edges, &gl.iter().map(|g| g.2).collect::<Vec<_>>(), n - 1);
        let mut out = Vec::with_capacity(n);
        for i in 0..n - 1 {
            let v = state.vels[i];
            let c = merger_rate::<R>(n, i + 1);
            let g = if v > R::zero() { c - low[i] } else { c - high[i] };
            out.push((v * g).pos() + slack * v.abs() * (c + mag[i]));
        }
        let v = state.vels[th];
        let end = theta + vt;
        let (a, b) = if end < theta { (end, theta) } else { (theta, end) };
        let (inf, sup) = self.prior.grad_range(a, b);
        let (gt_lo, gt_hi, gt_mag) = gt.iter().fold((R::zero(), R::zero(), R::zero()), |acc, g| {
            (acc.0 + g.0, acc.1 + g.1, acc.2 + g.2)
        });
        let g = if v > R::zero() { inf + gt_lo } else { sup + gt_hi };
        out.push((-v * g).pos() + slack * v.abs() * (inf.abs() + sup.abs() + gt_mag));
        out
    }

    fn boundary_jump(
        &self,
        state: &HybridState<RankedTopology, R>,
        coord: usize,
        rng: &mut SimRng,
    ) -> Result<BoundaryOutcome<RankedTopology>> {
        Ok(match cross_boundary(&state.mode, coord, rng)? {
            None => BoundaryOutcome::Reflect,
            Some(t) => BoundaryOutcome::Cross(t),
        })
    }
}

impl<R: Real> TreeTarget<R> for FsmTarget<R> {
    fn leaves(&self) -> usize {
        self.n
    }

    fn has_theta(&self) -> bool {
        true
    }

    fn topology<'a>(&self, mode: &'a RankedTopology) -> &'a RankedTopology {
        mode
    }

    fn mode_for(&self, topo: RankedTopology) -> Option<RankedTopology> {
        Some(topo)
    }
}
