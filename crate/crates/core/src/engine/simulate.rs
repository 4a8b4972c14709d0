use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use super::model::{BoundaryOutcome, TargetModel};
use super::state::{EventKind, HybridState, MhMoveKind};
use super::thinning::next_flip;
use super::trace::{EventTrace, Recorder};
use crate::error::{Error, Result};
use crate::real::Real;

pub type SimRng = ChaCha8Rng;

/// Expected thinning proposals per window above which the window is halved.
const PROPOSAL_BUDGET: f64 = 16.0;
const MAX_HALVINGS: usize = 30;

/// Independent random stream `stream` derived from `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SimOptions {
    /// Run per-coordinate thinning on the rayon pool. Results do not depend on
    /// this flag.
    pub parallel: bool,
}

/// Counters collected during a run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunStats {
    pub windows: u64,
    pub flips: u64,
    pub boundary_crosses: u64,
    pub reflects: u64,
    pub refreshes: u64,
    pub mh_moves: u64,
    pub mh_accepted: u64,
    /// Number of flip-rate evaluations made by thinning.
    pub rate_evals: u64,
    /// Number of thinning-bound computations (one per coordinate per window).
    pub bound_evals: u64,
}

impl RunStats {
    pub fn events(&self) -> u64 {
        self.flips + self.boundary_crosses + self.reflects + self.refreshes + self.mh_moves
    }

    fn count(&mut self, kind: EventKind) {
        match kind {
            EventKind::Flip(_) => self.flips += 1,
            EventKind::BoundaryCross(_) => self.boundary_crosses += 1,
            EventKind::Reflect(_) => self.reflects += 1,
            EventKind::Refresh => self.refreshes += 1,
            EventKind::MhMove { accepted, .. } => {
                self.mh_moves += 1;
                self.mh_accepted += u64::from(accepted);
            }
        }
    }
}

/// Discrete-time moves interleaved with the zig-zag motion at the arrival
/// times of a homogeneous Poisson process.
pub trait Interleave<T: TargetModel<R>, R: Real> {
    /// Arrival rate; zero disables the moves.
    fn rate(&self) -> R;

    /// Applies one move in place, returning its kind and whether it was
    /// accepted. Velocities must be left unchanged.
    fn apply(&mut self, model: &T, state: &mut HybridState<T::Mode, R>, rng: &mut SimRng)
        -> Result<(MhMoveKind, bool)>;
}

/// No interleaved moves: the pure zig-zag process.
#[derive(Clone, Copy, Debug, Default)]
pub struct Pure;

impl<T: TargetModel<R>, R: Real> Interleave<T, R> for Pure {
    fn rate(&self) -> R {
        R::zero()
    }

    fn apply(&mut self, _: &T, _: &mut HybridState<T::Mode, R>, _: &mut SimRng) -> Result<(MhMoveKind, bool)> {
        Err(Error::Numerical("pure zig-zag has no interleaved moves".into()))
    }
}

/// Simulates the zig-zag process on `[0, t_end]` and returns the full trace.
pub fn simulate<T: TargetModel<R>, R: Real>(
    model: &T,
    init: HybridState<T::Mode, R>,
    t_end: R,
    seed: u64,
) -> Result<EventTrace<T::Mode, R>> {
    let mut trace = EventTrace::new(init.clone());
    simulate_with(model, init, t_end, seed, SimOptions::default(), &mut Pure, &mut trace)?;
    Ok(trace)
}

/// Simulates on `[0, t_end]`, streaming events into `recorder`.
///
/// Random streams: coordinate `i` uses stream `i`, the boundary kernel stream
/// `d`, the interleaving clock stream `d + 1` and the interleaved moves stream
/// `d + 2`.
pub fn simulate_with<T, R, I, Rec>(
    model: &T,
    init: HybridState<T::Mode, R>,
    t_end: R,
    seed: u64,
    opts: SimOptions,
    interleave: &mut I,
    recorder: &mut Rec,
) -> Result<(HybridState<T::Mode, R>, RunStats)>
where
    T: TargetModel<R>,
    R: Real,
    I: Interleave<T, R>,
    Rec: Recorder<T::Mode, R>,
{
    let d = model.dim();
    if init.dim() != d {
        return Err(Error::InvalidInit(format!(
            "state has {} coordinates, target expects {d}",
            init.dim()
        )));
    }
    if !(t_end > R::zero()) {
        return Err(Error::config("end time must be positive"));
    }
    if init.coords.iter().any(|&x| !(x > R::zero()) || !x.is_finite()) {
        return Err(Error::InvalidInit("all coordinates must be positive and finite".into()));
    }
    let lp = model.log_density(&init.mode, &init.coords);
    if !lp.is_finite() {
        return Err(Error::InvalidInit(format!("log density at the initial state is {lp}")));
    }

    let mut coord_rngs: Vec<SimRng> = (0..d as u64).map(|i| stream_rng(seed, i)).collect();
    let mut jump_rng = stream_rng(seed, d as u64);
    let mut clock_rng = stream_rng(seed, d as u64 + 1);
    let mut move_rng = stream_rng(seed, d as u64 + 2);

    let mut state = init;
    let mut stats = RunStats::default();
    let mut t = R::zero();
    recorder.start(&state);

    while t < t_end {
        stats.windows += 1;
        let ctx = model.prepare(&state);
        let mut loc = model.localize(&state, &ctx);
        let mut bounds = model.flip_bounds(&state, &ctx, loc.horizon);
        stats.bound_evals += d as u64;
        // loose bounds on a long window waste rate evaluations; shorter
        // windows give tighter bounds and end in a refresh
        for _ in 0..MAX_HALVINGS {
            let load = bounds.iter().fold(R::zero(), |a, &b| a + b) * loc.horizon;
            if !(load > R::of(PROPOSAL_BUDGET)) {
                break;
            }
            loc.horizon *= R::of(0.5);
            loc.hit = None;
            bounds = model.flip_bounds(&state, &ctx, loc.horizon);
            stats.bound_evals += d as u64;
        }

        let window = loc.horizon;
        let draw = |(i, rng): (usize, &mut SimRng)| -> Result<(R, u64)> {
            let mut evals = 0;
            let rho = next_flip(
                i,
                bounds[i],
                window,
                |s| model.flip_rate(&state, &ctx, i, s),
                rng,
                &mut evals,
            )?;
            Ok((rho, evals))
        };
        let proposals: Vec<(R, u64)> = if opts.parallel {
            coord_rngs.par_iter_mut().enumerate().map(draw).collect::<Result<_>>()?
        } else {
            coord_rngs.iter_mut().enumerate().map(draw).collect::<Result<_>>()?
        };

        let mut tau = window;
        let mut flip = None;
        for (i, &(rho, evals)) in proposals.iter().enumerate() {
            stats.rate_evals += evals;
            if rho < tau {
                tau = rho;
                flip = Some(i);
            }
        }

        let kappa = interleave.rate();
        let mut mh_now = false;
        if kappa > R::zero() {
            let e: f64 = clock_rng.sample(Exp1);
            let arrival = R::of(e) / kappa;
            if arrival < tau {
                tau = arrival;
                mh_now = true;
            }
        }

        if t + tau >= t_end {
            state.advance(t_end - t);
            t = t_end;
            break;
        }
        t += tau;
        state.advance(tau);

        let kind = if mh_now {
            let (kind, accepted) = interleave.apply(model, &mut state, &mut move_rng)?;
            EventKind::MhMove { kind, accepted }
        } else if let Some(i) = flip {
            state.flip(i);
            EventKind::Flip(i)
        } else if let Some(i) = loc.hit {
            state.coords[i] = R::zero();
            let outcome = model.boundary_jump(&state, i, &mut jump_rng)?;
            state.flip(i);
            match outcome {
                BoundaryOutcome::Reflect => EventKind::Reflect(i),
                BoundaryOutcome::Cross(mode) => {
                    state.set_mode(mode);
                    EventKind::BoundaryCross(i)
                }
            }
        } else {
            EventKind::Refresh
        };
        stats.count(kind);
        recorder.record(t, kind, &state);
    }
    recorder.finish(t, &state);
    Ok((state, stats))
}
