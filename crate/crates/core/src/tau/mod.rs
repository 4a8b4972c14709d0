//! Tree space: ranked topologies, edge tables, the coalescent prior, and the
//! boundary kernel shared by every tree target.

mod edges;
mod prior;
mod topology;

use rand::Rng;

pub use edges::{Edge, EdgeTable};
pub use prior::{log_prior, merger_rate, prior_gradient, prior_mean, prior_mean_height};
pub use topology::{BoundaryClass, BoundaryType, PivotDir, RankedTopology};

use crate::engine::{BoundaryOutcome, HybridState, ModeId, SimRng, TargetModel};
use crate::error::Result;
use crate::real::Real;

impl ModeId for RankedTopology {
    fn mode_id(&self) -> u64 {
        RankedTopology::mode_id(self)
    }
}

/// A target whose modes are (decorated) ranked topologies and whose first
/// `n - 1` coordinates are holding times.
pub trait TreeTarget<R: Real>: TargetModel<R> {
    fn leaves(&self) -> usize;

    /// Whether the last coordinate is the mutation rate.
    fn has_theta(&self) -> bool;

    fn topology<'a>(&self, mode: &'a Self::Mode) -> &'a RankedTopology;

    /// Decorates a bare topology; `None` when the target density vanishes on it.
    fn mode_for(&self, topo: RankedTopology) -> Option<Self::Mode>;
}

/// Topology reached by crossing the face where the 0-based coordinate
/// `coord` vanishes: `None` for a reflecting (type 1) face, the swapped
/// topology for type 2, and a fair choice between the two pivots for type 3.
pub fn cross_boundary<G: Rng + ?Sized>(
    topo: &RankedTopology,
    coord: usize,
    rng: &mut G,
) -> Result<Option<RankedTopology>> {
    let k = coord + 1;
    match topo.classify_boundary(k).kind {
        BoundaryType::Type1 => Ok(None),
        BoundaryType::Type2 => topo.swap(k).map(Some),
        BoundaryType::Type3 => {
            let dir = if rng.random::<bool>() {
                PivotDir::Up
            } else {
                PivotDir::Down
            };
            topo.pivot(k, dir).map(Some)
        }
    }
}

/// Default speeds `2 / [(n + 1 - i)(n - i)]` for the holding times, i.e. each
/// speed equals the prior mean of its coordinate.
pub fn default_speeds(n: usize) -> Vec<f64> {
    (1..n).map(|i| prior_mean(n, i)).collect()
}

/// Kingman coalescent prior on (ranked topology, holding times), with no
/// mutation rate coordinate. Its flip rates are constant in each orthant.
#[derive(Clone, Debug)]
pub struct KingmanPrior<R> {
    n: usize,
    max_increment: R,
}

impl<R: Real> KingmanPrior<R> {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            max_increment: R::one(),
        }
    }

    pub fn with_max_increment(mut self, k: R) -> Self {
        self.max_increment = k;
        self
    }
}

impl<R: Real> TargetModel<R> for KingmanPrior<R> {
    type Mode = RankedTopology;
    type Context = ();

    fn dim(&self) -> usize {
        self.n - 1
    }

    fn log_density(&self, _: &RankedTopology, coords: &[R]) -> R {
        if coords.iter().any(|&x| x < R::zero()) {
            return R::neg_infinity();
        }
        log_prior(self.n, coords)
    }

    fn max_increment(&self) -> R {
        self.max_increment
    }

    fn guard_constant(&self) -> R {
        R::of(4.0)
    }

    fn prepare(&self, _: &HybridState<RankedTopology, R>) {}

    fn guarded(&self, _: &HybridState<RankedTopology, R>, _: &(), _: usize) -> bool {
        false
    }

    fn flip_rate(&self, state: &HybridState<RankedTopology, R>, _: &(), i: usize, _: R) -> R {
        (state.vels[i] * merger_rate::<R>(self.n, i + 1)).pos()
    }

    fn flip_bounds(&self, state: &HybridState<RankedTopology, R>, ctx: &(), _: R) -> Vec<R> {
        (0..self.dim())
            .map(|i| self.flip_rate(state, ctx, i, R::zero()))
            .collect()
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

impl<R: Real> TreeTarget<R> for KingmanPrior<R> {
    fn leaves(&self) -> usize {
        self.n
    }

    fn has_theta(&self) -> bool {
        false
    }

    fn topology<'a>(&self, mode: &'a RankedTopology) -> &'a RankedTopology {
        mode
    }

    fn mode_for(&self, topo: RankedTopology) -> Option<RankedTopology> {
        Some(topo)
    }
}
