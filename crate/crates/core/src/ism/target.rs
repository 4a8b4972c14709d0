use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng;

use super::data::IsmDataset;
use crate::engine::{BoundaryOutcome, HybridState, ModeId, SimRng, TargetModel};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::tau::{cross_boundary, prior_mean, EdgeTable, RankedTopology, TreeTarget};
use crate::theta::ThetaPrior;

/// Ranked topology together with the number of mutations on every edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsmMode {
    pub topo: RankedTopology,
    /// Mutation count of the edge above each non-root node.
    pub mutations: Vec<u32>,
}

impl ModeId for IsmMode {
    fn mode_id(&self) -> u64 {
        self.topo.mode_id()
    }
}

/// Infinite-sites coalescent posterior on `(topology, t_1..t_{n-1}, theta)`.
#[derive(Debug)]
pub struct IsmTarget<R> {
    data: Arc<IsmDataset>,
    n: usize,
    prior: ThetaPrior,
    guard: R,
    max_increment: R,
    density_evals: AtomicU64,
}

impl<R: Real> Clone for IsmTarget<R> {
    fn clone(&self) -> Self {
        Self {
            data: self.data.clone(),
            n: self.n,
            prior: self.prior,
            guard: self.guard,
            max_increment: self.max_increment,
            density_evals: AtomicU64::new(0),
        }
    }
}

/// Per-window data: edge table with velocities and, per coordinate, the
/// mutated edges spanning it.
#[derive(Debug)]
pub struct IsmContext<R> {
    edges: EdgeTable<R>,
    /// `(length, velocity, mutations)` of mutated edges spanning each holding time.
    spanning: Vec<Vec<(R, R, R)>>,
    total: R,
}

impl<R: Real> IsmTarget<R> {
    pub fn new(data: IsmDataset) -> Self {
        let n = data.n();
        Self {
            data: Arc::new(data),
            n,
            prior: ThetaPrior::Flat,
            guard: R::of(4.0),
            max_increment: R::one(),
            density_evals: AtomicU64::new(0),
        }
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

    pub fn data(&self) -> &IsmDataset {
        &self.data
    }

    pub fn prior(&self) -> ThetaPrior {
        self.prior
    }

    /// Number of posterior density evaluations so far.
    pub fn density_evals(&self) -> u64 {
        self.density_evals.load(Ordering::Relaxed)
    }

    pub fn mode(&self, topo: RankedTopology) -> Option<IsmMode> {
        let mutations = self.data.assign(&topo)?;
        Some(IsmMode { topo, mutations })
    }

    fn theta_index(&self) -> usize {
        self.n - 1
    }

    /// Coefficient `(n + 1 - i)(n + theta - i) / 2` of the 1-based holding time `i`.
    fn coefficient(&self, i: usize, theta: R) -> R {
        R::of_usize(self.n + 1 - i) * (R::of_usize(self.n - i) + theta) * R::of(0.5)
    }

    /// Initial state: a coalescent draw consistent with the data (up to
    /// `attempts` rejection trials, then the tree implied by the nested
    /// carrier sets), Watterson's estimate for theta, and speeds with random
    /// signs. `theta_speed` is the magnitude of the theta velocity.
    pub fn initial_state<G: Rng + ?Sized>(
        &self,
        rng: &mut G,
        attempts: usize,
        theta_speed: f64,
    ) -> Result<HybridState<IsmMode, R>> {
        let n = self.n;
        let mut start = None;
        for _ in 0..attempts {
            let (topo, times) = RankedTopology::simulate_coalescent(n, rng)?;
            if let Some(mode) = self.mode(topo) {
                start = Some((mode, times));
                break;
            }
        }
        let (mode, times) = match start {
            Some(s) => s,
            None => {
                let topo = perfect_phylogeny(&self.data)?;
                let mode = self
                    .mode(topo)
                    .ok_or_else(|| Error::InvalidInit("constructed tree does not fit the data".into()))?;
                // prior draws, not means: mean times equal the speed magnitudes and
                // would send several coordinates to zero at the same instant
                let times = (1..n)
                    .map(|i| prior_mean(n, i) * rng.sample::<f64, _>(rand_distr::Exp1))
                    .collect();
                (mode, times)
            }
        };
        let mut coords: Vec<R> = times.iter().map(|&t| R::of(t)).collect();
        coords.push(R::of(self.data.watterson().max(0.1)));
        let mut vels: Vec<R> = (1..n).map(|i| R::of(prior_mean(n, i))).collect();
        vels.push(R::of(theta_speed));
        for v in vels.iter_mut() {
            if rng.random::<bool>() {
                *v = -*v;
            }
        }
        Ok(HybridState::new(mode, coords, vels))
    }
}

/// Tree whose internal nodes realize every carrier set: each set, smallest
/// first, merges the clusters it contains one after another.
pub fn perfect_phylogeny(data: &IsmDataset) -> Result<RankedTopology> {
    let n = data.n();
    let mut sets: Vec<&Vec<usize>> = data.groups().iter().map(|g| &g.0).collect();
    sets.sort_by_key(|s| s.len());
    // cluster[leaf] = current top node containing that leaf
    let mut cluster: Vec<usize> = (0..n).collect();
    let mut mergers: Vec<[usize; 2]> = Vec::new();
    let merge_all = |leaves: &[usize], cluster: &mut Vec<usize>, mergers: &mut Vec<[usize; 2]>| {
        let mut tops: Vec<usize> = leaves.iter().map(|&l| cluster[l]).collect();
        tops.sort_unstable();
        tops.dedup();
        let mut acc = tops[0];
        for &t in &tops[1..] {
            mergers.push([acc, t]);
            acc = n + mergers.len() - 1;
        }
        for &l in leaves {
            cluster[l] = acc;
        }
    };
    for s in sets {
        merge_all(s, &mut cluster, &mut mergers);
    }
    let all: Vec<usize> = (0..n).collect();
    merge_all(&all, &mut cluster, &mut mergers);
    RankedTopology::from_mergers(n, &mergers)
}

impl<R: Real> TargetModel<R> for IsmTarget<R> {
    type Mode = IsmMode;
    type Context = IsmContext<R>;

    fn dim(&self) -> usize {
        self.n
    }

    fn log_density(&self, mode: &IsmMode, coords: &[R]) -> R {
        self.density_evals.fetch_add(1, Ordering::Relaxed);
        if coords.iter().any(|&x| x < R::zero() || x.is_nan()) {
            return R::neg_infinity();
        }
        let n = self.n;
        let theta = coords[n - 1];
        let mut edges = EdgeTable::build(&mode.topo, &coords[..n - 1], None);
        edges.set_mutations(&mode.mutations);
        let half = R::of(0.5);
        let mut lp = R::zero();
        for e in edges.edges().iter().filter(|e| e.mutations > 0) {
            let rate = theta * e.length * half;
            if !(rate > R::zero()) {
                return R::neg_infinity();
            }
            lp += R::of_usize(e.mutations as usize) * rate.ln();
        }
        for (j, &t) in coords[..n - 1].iter().enumerate() {
            lp -= self.coefficient(j + 1, theta) * t;
        }
        lp + self.prior.log_density(theta)
    }

    fn max_increment(&self) -> R {
        self.max_increment
    }

    fn guard_constant(&self) -> R {
        self.guard
    }

    fn prepare(&self, state: &HybridState<IsmMode, R>) -> IsmContext<R> {
        let n = self.n;
        let mut edges = EdgeTable::build(&state.mode.topo, &state.coords[..n - 1], Some(&state.vels[..n - 1]));
        edges.set_mutations(&state.mode.mutations);
        let mut spanning = vec![Vec::new(); n - 1];
        for e in edges.edges().iter().filter(|e| e.mutations > 0) {
            let m = R::of_usize(e.mutations as usize);
            for j in e.span.clone() {
                spanning[j].push((e.length, e.velocity, m));
            }
        }
        IsmContext {
            edges,
            spanning,
            total: R::of_usize(self.data.total_mutations() as usize),
        }
    }

    fn guarded(&self, state: &HybridState<IsmMode, R>, ctx: &IsmContext<R>, i: usize) -> bool {
        let topo = &state.mode.topo;
        if i == self.theta_index() {
            return ctx.total > R::zero();
        }
        let k = i + 1;
        if k == 1 {
            let [a, b] = topo.merger(1);
            return ctx.edges.edge(a).mutations + ctx.edges.edge(b).mutations > 0;
        }
        // at a type 3 face the edge from merger k-1 to merger k is the shorter
        // child branch of merger k, and it is the one that vanishes
        topo.nested_at(k) && ctx.edges.edge(topo.merger_node(k - 1)).mutations > 0
    }

    fn flip_rate(&self, state: &HybridState<IsmMode, R>, ctx: &IsmContext<R>, i: usize, s: R) -> R {
        let n = self.n;
        let th = self.theta_index();
        let theta = state.coord_at(th, s);
        let v = state.vels[i];
        if i == th {
            let half = R::of(0.5);
            let mut g = R::zero();
            for j in 0..n - 1 {
                g += R::of_usize(n - j) * half * state.coord_at(j, s);
            }
            if ctx.total > R::zero() {
                g -= ctx.total / theta;
            }
            g -= self.prior.grad(theta);
            (v * g).pos()
        } else {
            let mut g = self.coefficient(i + 1, theta);
            for &(l, vg, m) in &ctx.spanning[i] {
                g -= m / (l + vg * s);
            }
            (v * g).pos()
        }
    }

    fn flip_bounds(&self, state: &HybridState<IsmMode, R>, ctx: &IsmContext<R>, window: R) -> Vec<R> {
        let n = self.n;
        let th = self.theta_index();
        let theta = state.coords[th];
        let vt = state.vels[th] * window;
        let half = R::of(0.5);
        // (x)^+ for positive velocities, (x)^- for negative ones
        let pm = |v: R, x: R| if v > R::zero() { x.pos() } else { x.neg_part() };
        let mut out = Vec::with_capacity(n);
        for i in 0..n - 1 {
            let v = state.vels[i];
            let mut g = self.coefficient(i + 1, theta + pm(v, vt));
            for &(l, vg, m) in &ctx.spanning[i] {
                g -= m / (l + pm(v, vg * window));
            }
            out.push((v * g).pos());
        }
        let v = state.vels[th];
        let mut g = R::zero();
        for j in 0..n - 1 {
            g += R::of_usize(n - j) * half * (state.coords[j] + pm(v, state.vels[j] * window));
        }
        let end = theta + vt;
        if ctx.total > R::zero() {
            g -= ctx.total / end;
        }
        let (lo, hi) = if end < theta { (end, theta) } else { (theta, end) };
        let (inf, sup) = self.prior.grad_range(lo, hi);
        g -= if v > R::zero() { inf } else { sup };
        out.push((v * g).pos());
        out
    }

    fn boundary_jump(
        &self,
        state: &HybridState<IsmMode, R>,
        coord: usize,
        rng: &mut SimRng,
    ) -> Result<BoundaryOutcome<IsmMode>> {
        match cross_boundary(&state.mode.topo, coord, rng)? {
            None => Ok(BoundaryOutcome::Reflect),
            Some(topo) => self
                .mode(topo)
                .map(BoundaryOutcome::Cross)
                .ok_or(Error::InconsistentJump { coord }),
        }
    }
}

impl<R: Real> TreeTarget<R> for IsmTarget<R> {
    fn leaves(&self) -> usize {
        self.n
    }

    fn has_theta(&self) -> bool {
        true
    }

    fn topology<'a>(&self, mode: &'a IsmMode) -> &'a RankedTopology {
        &mode.topo
    }

    fn mode_for(&self, topo: RankedTopology) -> Option<IsmMode> {
        self.mode(topo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::stream_rng;

    #[test]
    fn two_leaves_without_mutations() {
        let target = IsmTarget::<f64>::new(IsmDataset::empty(2).unwrap());
        let mode = target.mode(RankedTopology::parse(2, "({1,2})").unwrap()).unwrap();
        assert_eq!(target.log_density(&mode, &[1.0, 1.0]), -2.0);
        let state = HybridState::new(mode, vec![1.0, 1.0], vec![-1.0, 1.0]);
        let ctx = target.prepare(&state);
        assert_eq!(target.flip_rate(&state, &ctx, 0, 0.0), 0.0);
        // (n + 1 - 1)/2 * t_1 with no mutations
        assert_eq!(target.flip_rate(&state, &ctx, 1, 0.0), 1.0);
    }

    #[test]
    fn mutated_edge_of_zero_length_has_no_density() {
        let data = IsmDataset::new(vec![vec![0.3], vec![], vec![]]).unwrap();
        let target = IsmTarget::<f64>::new(data);
        let mode = target
            .mode(RankedTopology::parse(3, "({1,2},{{1,2},3})").unwrap())
            .unwrap();
        assert_eq!(target.log_density(&mode, &[0.0, 1.0, 1.0]), f64::NEG_INFINITY);
        assert!(target.log_density(&mode, &[0.1, 1.0, 1.0]).is_finite());
    }

    #[test]
    fn guards_follow_mutations() {
        let data = IsmDataset::new(vec![vec![0.7], vec![0.7], vec![], vec![0.2]]).unwrap();
        let target = IsmTarget::<f64>::new(data);
        let mode = target
            .mode(RankedTopology::parse(4, "({1,2},{{1,2},3},{{1,2,3},4})").unwrap())
            .unwrap();
        let state = HybridState::new(mode, vec![0.5, 0.5, 0.5, 1.0], vec![-1.0, -1.0, -1.0, -1.0]);
        let ctx = target.prepare(&state);
        // no mutation on leaves 1, 2; the edge {1,2} -> {1,2,3} carries 0.7;
        // the edge {1,2,3} -> root carries nothing; theta is guarded
        let flags: Vec<bool> = (0..4).map(|i| target.guarded(&state, &ctx, i)).collect();
        assert_eq!(flags, vec![false, true, false, true]);
        let loc = target.localize(&state, &ctx);
        assert_eq!(loc.hit, None);
        assert!((loc.horizon - 0.1).abs() < 1e-15);
    }

    #[test]
    fn fallback_initialization_fits_data() {
        let mut rng = stream_rng(5, 0);
        let topo = RankedTopology::parse(6, "({1,2},{3,4},{{1,2},5},{{3,4},6},{{1,2,5},{3,4,6}})").unwrap();
        let data = super::super::simulate_ism_data(&topo, &[0.3, 0.4, 0.5, 0.6, 0.9], 20.0, &mut rng).unwrap();
        let target = IsmTarget::<f64>::new(data);
        let s = target.initial_state(&mut rng, 0, 1.0).unwrap();
        assert!(target.log_density(&s.mode, &s.coords).is_finite());
    }
}
