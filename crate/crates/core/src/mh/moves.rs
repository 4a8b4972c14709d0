use rand::Rng;
use rand_distr::StandardNormal;

use super::spr::{apply_spr, propose_spr};
use super::{truncnorm, MhStats};
use crate::engine::{HybridState, MhMoveKind, SimRng};
use crate::real::Real;
use crate::tau::TreeTarget;

/// Result of one accept/reject step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub kind: MhMoveKind,
    pub accepted: bool,
    /// Acceptance probability, 0 for instant rejections.
    pub alpha: f64,
}

fn decide(rng: &mut SimRng, log_alpha: f64) -> (bool, f64) {
    if log_alpha.is_nan() {
        return (false, 0.0);
    }
    let alpha = log_alpha.min(0.0).exp();
    let u: f64 = rng.random();
    (u < alpha, alpha)
}

/// Reflected Gaussian walk on theta, `theta' = |theta + sigma xi|`.
///
/// `lp` holds the log density of the current state and is updated on
/// acceptance.
pub fn theta_step<T: TreeTarget<R>, R: Real>(
    target: &T,
    state: &mut HybridState<T::Mode, R>,
    lp: &mut R,
    sigma: f64,
    rng: &mut SimRng,
) -> StepOutcome {
    let th = target.dim() - 1;
    let xi: f64 = rng.sample(StandardNormal);
    let proposal = (state.coords[th].as_f64() + sigma * xi).abs();
    let mut coords = state.coords.clone();
    coords[th] = R::of(proposal);
    let new_lp = target.log_density(&state.mode, &coords);
    let (accepted, alpha) = decide(rng, (new_lp - *lp).as_f64());
    if accepted {
        state.coords = coords;
        *lp = new_lp;
    }
    StepOutcome {
        kind: MhMoveKind::Theta,
        accepted,
        alpha,
    }
}

/// Standard deviations of the sequential merger-time proposal for `n` leaves.
pub fn times_scales(n: usize, sigma: f64) -> Vec<f64> {
    let nf = n as f64;
    (1..n)
        .map(|i| {
            let v = if i == 1 {
                nf * (nf - 1.0) * (nf - 1.0)
            } else {
                let i = i as f64;
                (nf - 1.0) * (nf - i + 1.0) * (nf - i)
            };
            sigma / v.sqrt()
        })
        .collect()
}

/// Sequential truncated-normal update of the merger times under a fixed
/// topology. Merger `i` is centred on its current time and truncated below by
/// the newly proposed time of merger `i - 1` (or zero).
pub fn times_step<T: TreeTarget<R>, R: Real>(
    target: &T,
    state: &mut HybridState<T::Mode, R>,
    lp: &mut R,
    sigma: f64,
    rng: &mut SimRng,
) -> StepOutcome {
    let n = target.leaves();
    let scales = times_scales(n, sigma);
    let mut old_prev = 0.0;
    let mut new_prev = 0.0;
    let mut old_node = 0.0;
    let mut log_q = 0.0;
    let mut coords = state.coords.clone();
    for (i, &sd) in scales.iter().enumerate() {
        old_node += state.coords[i].as_f64();
        let x = truncnorm::sample(rng, old_node, sd, new_prev);
        log_q += truncnorm::log_density(old_node, x, sd, old_prev) - truncnorm::log_density(x, old_node, sd, new_prev);
        coords[i] = R::of(x - new_prev);
        old_prev = old_node;
        new_prev = x;
    }
    if coords[..n - 1].iter().any(|&t| !(t > R::zero())) {
        return StepOutcome {
            kind: MhMoveKind::Times,
            accepted: false,
            alpha: 0.0,
        };
    }
    let new_lp = target.log_density(&state.mode, &coords);
    let (accepted, alpha) = decide(rng, (new_lp - *lp).as_f64() + log_q);
    if accepted {
        state.coords = coords;
        *lp = new_lp;
    }
    StepOutcome {
        kind: MhMoveKind::Times,
        accepted,
        alpha,
    }
}

/// Subtree-prune-regraft with the exact reverse-move density. Infeasible
/// pairs and results that the data rule out are rejected before any density
/// evaluation.
pub fn spr_step<T: TreeTarget<R>, R: Real>(
    target: &T,
    state: &mut HybridState<T::Mode, R>,
    lp: &mut R,
    rng: &mut SimRng,
    stats: &mut MhStats,
) -> StepOutcome {
    let n = target.leaves();
    let reject = StepOutcome {
        kind: MhMoveKind::Spr,
        accepted: false,
        alpha: 0.0,
    };
    let holding: Vec<f64> = state.coords[..n - 1].iter().map(|t| t.as_f64()).collect();
    let topo = target.topology(&state.mode);
    let Some(result) = propose_spr(topo, &holding, rng).and_then(|mv| apply_spr(topo, &holding, mv)) else {
        stats.spr_infeasible += 1;
        return reject;
    };
    let mut coords = state.coords.clone();
    for (c, &t) in coords.iter_mut().zip(&result.times) {
        *c = R::of(t);
    }
    if coords[..n - 1].iter().any(|&t| !(t > R::zero())) {
        stats.spr_infeasible += 1;
        return reject;
    }
    let Some(mode) = target.mode_for(result.topo) else {
        stats.spr_incompatible += 1;
        return reject;
    };
    let new_lp = target.log_density(&mode, &coords);
    let (accepted, alpha) = decide(rng, (new_lp - *lp).as_f64() + result.log_ratio);
    if accepted {
        state.set_mode(mode);
        state.coords = coords;
        *lp = new_lp;
    }
    StepOutcome {
        kind: MhMoveKind::Spr,
        accepted,
        alpha,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scales_follow_the_merger_index() {
        let s = times_scales(4, 1.0);
        assert!((s[0] - 1.0 / 36f64.sqrt()).abs() < 1e-15);
        assert!((s[1] - 1.0 / 18f64.sqrt()).abs() < 1e-15);
        assert!((s[2] - 1.0 / 6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn untruncated_proposal_is_symmetric() {
        let (a, b, sd) = (1.3, 0.4, 0.2);
        let lo = f64::NEG_INFINITY;
        let r = truncnorm::log_density(a, b, sd, lo) - truncnorm::log_density(b, a, sd, lo);
        assert!(r.abs() < 1e-15);
    }
}
