use super::state::{HybridState, ModeId};
use super::SimRng;
use crate::error::Result;
use crate::real::Real;

/// Result of a boundary hit.
#[derive(Clone, Debug)]
pub enum BoundaryOutcome<M> {
    /// Same mode; the velocity of the hit coordinate flips.
    Reflect,
    /// New mode; the velocity of the hit coordinate flips.
    Cross(M),
}

/// Time localization of one step.
#[derive(Clone, Debug, PartialEq)]
pub struct Localization<R> {
    /// Length of the window over which thinning bounds are computed.
    pub horizon: R,
    /// Coordinate whose (unguarded) boundary is reached exactly at `horizon`.
    /// `None` means the window ends with a refresh.
    pub hit: Option<usize>,
    /// Coordinates whose boundary must not be reached inside a window.
    pub guarded: Vec<bool>,
}

/// Everything the zig-zag engine needs from a target density.
///
/// Rate evaluations take `&self` and must not mutate shared state, so that
/// per-coordinate thinning can run concurrently.
pub trait TargetModel<R: Real>: Sync {
    type Mode: Clone + std::fmt::Debug + Send + Sync + ModeId;
    /// Per-window precomputation (edge tables, partial likelihoods, ...).
    type Context: Send + Sync;

    fn dim(&self) -> usize;

    /// Log target density up to a constant; `-inf` outside the support.
    fn log_density(&self, mode: &Self::Mode, coords: &[R]) -> R;

    /// Largest window used when no boundary limits the step.
    fn max_increment(&self) -> R;

    /// Localization constant `c`: guarded coordinates may shrink by at most
    /// a fraction `1 / (1 + c)` within one window.
    fn guard_constant(&self) -> R;

    fn prepare(&self, state: &HybridState<Self::Mode, R>) -> Self::Context;

    /// Whether the boundary of coordinate `i` must never be reached from
    /// `state` (the density or the flip rate degenerates there).
    fn guarded(&self, state: &HybridState<Self::Mode, R>, ctx: &Self::Context, i: usize) -> bool;

    /// Flip rate of coordinate `i` after moving for `offset` from `state`.
    fn flip_rate(&self, state: &HybridState<Self::Mode, R>, ctx: &Self::Context, i: usize, offset: R) -> R;

    /// Constant rates dominating every flip rate on `[0, window]`.
    fn flip_bounds(&self, state: &HybridState<Self::Mode, R>, ctx: &Self::Context, window: R) -> Vec<R>;

    /// Boundary kernel at a state whose coordinate `coord` is exactly zero.
    fn boundary_jump(
        &self,
        state: &HybridState<Self::Mode, R>,
        coord: usize,
        rng: &mut SimRng,
    ) -> Result<BoundaryOutcome<Self::Mode>>;

    /// Window length and boundary information for the next step.
    fn localize(&self, state: &HybridState<Self::Mode, R>, ctx: &Self::Context) -> Localization<R> {
        let one = R::one();
        let divisor = one + self.guard_constant();
        let mut horizon = self.max_increment();
        let mut hit = None;
        let mut guarded = vec![false; self.dim()];
        for (i, flag) in guarded.iter_mut().enumerate() {
            let v = state.vels[i];
            if v >= R::zero() {
                continue;
            }
            *flag = self.guarded(state, ctx, i);
            let d = if *flag { divisor } else { one };
            let candidate = -state.coords[i] / (d * v);
            if candidate < horizon {
                horizon = candidate;
                hit = (!*flag).then_some(i);
            }
        }
        Localization { horizon, hit, guarded }
    }
}
