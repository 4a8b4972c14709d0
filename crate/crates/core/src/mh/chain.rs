use super::moves::{spr_step, theta_step, times_step, StepOutcome};
use super::{MhConfig, MhStats};
use crate::engine::{stream_rng, EventKind, HybridState, Recorder};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::tau::TreeTarget;

/// Outcome of an MH run.
#[derive(Clone, Debug)]
pub struct MhRun<M, R> {
    pub final_state: HybridState<M, R>,
    /// Counts after warm-up.
    pub stats: MhStats,
    /// Scales after warm-up tuning (unchanged when no warm-up was run).
    pub config: MhConfig,
}

const TARGET_ACCEPTANCE: f64 = 0.25;

/// Runs `warmup + iterations` scans of theta, times and SPR steps (theta is
/// skipped for targets without it).
///
/// During warm-up the log scales follow a Robbins-Monro recursion towards an
/// acceptance probability of 1/4; they are then frozen. Post-warm-up moves go
/// to `recorder` as events at spacing `1 / moves per scan`, so a scan takes
/// one unit of time and the trace ends at `iterations`. Recorded velocities
/// are zero.
pub fn run_mh<T, R, Rec>(
    target: &T,
    init: HybridState<T::Mode, R>,
    iterations: usize,
    warmup: usize,
    config: MhConfig,
    seed: u64,
    recorder: &mut Rec,
) -> Result<MhRun<T::Mode, R>>
where
    T: TreeTarget<R>,
    R: Real,
    Rec: Recorder<T::Mode, R>,
{
    config.validate()?;
    if iterations == 0 {
        return Err(Error::config("an MH run needs at least one iteration"));
    }
    if init.dim() != target.dim() {
        return Err(Error::InvalidInit(format!(
            "state has {} coordinates, target expects {}",
            init.dim(),
            target.dim()
        )));
    }
    let mut state = init;
    state.vels.iter_mut().for_each(|v| *v = R::zero());
    let mut lp = target.log_density(&state.mode, &state.coords);
    if !lp.is_finite() {
        return Err(Error::InvalidInit(format!("log density at the initial state is {lp}")));
    }

    let mut rng = stream_rng(seed, 0);
    let mut cfg = config;
    let mut stats = MhStats::default();
    let moves = if target.has_theta() { 3 } else { 2 };
    let dt = 1.0 / moves as f64;

    for k in 0..warmup {
        let gain = 1.0 / (k as f64 + 1.0).powf(0.6);
        if target.has_theta() {
            let o = theta_step(target, &mut state, &mut lp, cfg.sigma_theta, &mut rng);
            cfg.sigma_theta *= (gain * (o.alpha - TARGET_ACCEPTANCE)).exp();
        }
        let o = times_step(target, &mut state, &mut lp, cfg.sigma_times, &mut rng);
        cfg.sigma_times *= (gain * (o.alpha - TARGET_ACCEPTANCE)).exp();
        spr_step(target, &mut state, &mut lp, &mut rng, &mut MhStats::default());
    }

    recorder.start(&state);
    let mut step = 0usize;
    let mut emit = |o: StepOutcome, state: &HybridState<T::Mode, R>, stats: &mut MhStats, rec: &mut Rec| {
        step += 1;
        stats.count(o.kind, o.accepted);
        let kind = EventKind::MhMove {
            kind: o.kind,
            accepted: o.accepted,
        };
        rec.record(R::of(step as f64 * dt), kind, state);
    };
    for _ in 0..iterations {
        if target.has_theta() {
            let o = theta_step(target, &mut state, &mut lp, cfg.sigma_theta, &mut rng);
            emit(o, &state, &mut stats, recorder);
        }
        let o = times_step(target, &mut state, &mut lp, cfg.sigma_times, &mut rng);
        emit(o, &state, &mut stats, recorder);
        let o = spr_step(target, &mut state, &mut lp, &mut rng, &mut stats);
        emit(o, &state, &mut stats, recorder);
    }
    recorder.finish(R::of_usize(iterations), &state);
    Ok(MhRun {
        final_state: state,
        stats,
        config: cfg,
    })
}
