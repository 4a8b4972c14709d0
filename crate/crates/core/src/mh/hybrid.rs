use rand::Rng;

use super::moves::{spr_step, theta_step};
use super::MhStats;
use crate::engine::{HybridState, Interleave, MhMoveKind, SimRng};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::tau::TreeTarget;

/// Theta-walk and SPR moves at the arrivals of a rate-`kappa` Poisson process.
/// Each arrival applies one move chosen uniformly (SPR only when the target
/// has no theta). Velocities are left as they are.
#[derive(Clone, Debug)]
pub struct HybridMoves {
    pub kappa: f64,
    pub sigma_theta: f64,
    pub stats: MhStats,
}

impl HybridMoves {
    pub fn new(kappa: f64, sigma_theta: f64) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::config("kappa must be non-negative"));
        }
        if !(sigma_theta > 0.0) {
            return Err(Error::config("sigma_theta must be positive"));
        }
        Ok(Self {
            kappa,
            sigma_theta,
            stats: MhStats::default(),
        })
    }
}

impl<T: TreeTarget<R>, R: Real> Interleave<T, R> for HybridMoves {
    fn rate(&self) -> R {
        R::of(self.kappa)
    }

    fn apply(
        &mut self,
        model: &T,
        state: &mut HybridState<T::Mode, R>,
        rng: &mut SimRng,
    ) -> Result<(MhMoveKind, bool)> {
        let mut lp = model.log_density(&state.mode, &state.coords);
        if !lp.is_finite() {
            return Err(Error::Numerical(format!("log density {lp} before an interleaved move")));
        }
        let o = if model.has_theta() && rng.random::<bool>() {
            theta_step(model, state, &mut lp, self.sigma_theta, rng)
        } else {
            spr_step(model, state, &mut lp, rng, &mut self.stats)
        };
        self.stats.count(o.kind, o.accepted);
        Ok((o.kind, o.accepted))
    }
}
