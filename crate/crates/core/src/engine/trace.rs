use std::collections::HashMap;

use super::state::{EventKind, HybridState, ModeId};
use crate::real::Real;

/// One event and the state right after it.
#[derive(Clone, Debug, PartialEq)]
pub struct EventRecord<M, R> {
    pub time: R,
    pub kind: EventKind,
    pub state: HybridState<M, R>,
}

/// Sink for events produced by a sampler.
pub trait Recorder<M, R> {
    fn start(&mut self, state: &HybridState<M, R>);
    /// Called with the state right after the event at `time`.
    fn record(&mut self, time: R, kind: EventKind, state: &HybridState<M, R>);
    /// Called once at the end time with the final state.
    fn finish(&mut self, time: R, state: &HybridState<M, R>);
}

impl<M, R: Copy, A: Recorder<M, R>, B: Recorder<M, R>> Recorder<M, R> for (A, B) {
    fn start(&mut self, state: &HybridState<M, R>) {
        self.0.start(state);
        self.1.start(state);
    }

    fn record(&mut self, time: R, kind: EventKind, state: &HybridState<M, R>) {
        self.0.record(time, kind, state);
        self.1.record(time, kind, state);
    }

    fn finish(&mut self, time: R, state: &HybridState<M, R>) {
        self.0.finish(time, state);
        self.1.finish(time, state);
    }
}

/// Recorder that drops everything.
#[derive(Clone, Copy, Debug, Default)]
pub struct NullRecorder;

impl<M, R> Recorder<M, R> for NullRecorder {
    fn start(&mut self, _: &HybridState<M, R>) {}
    fn record(&mut self, _: R, _: EventKind, _: &HybridState<M, R>) {}
    fn finish(&mut self, _: R, _: &HybridState<M, R>) {}
}

/// Full piecewise-linear trajectory on `[0, end_time]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EventTrace<M, R> {
    pub initial: HybridState<M, R>,
    pub events: Vec<EventRecord<M, R>>,
    pub end_time: R,
}

impl<M: Clone, R: Real> EventTrace<M, R> {
    pub fn new(initial: HybridState<M, R>) -> Self {
        Self {
            initial,
            events: Vec::new(),
            end_time: R::zero(),
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Start time and state of every linear segment, in order.
    fn segments(&self) -> impl Iterator<Item = (R, R, &HybridState<M, R>)> {
        let starts = std::iter::once((R::zero(), &self.initial)).chain(self.events.iter().map(|e| (e.time, &e.state)));
        let ends = self.events.iter().map(|e| e.time).chain(std::iter::once(self.end_time));
        starts.zip(ends).map(|((s, st), e)| (s, e, st))
    }

    /// State at process time `time` (right-continuous at events).
    pub fn state_at(&self, time: R) -> HybridState<M, R> {
        let k = self.events.partition_point(|e| e.time <= time);
        let (t0, base) = if k == 0 {
            (R::zero(), &self.initial)
        } else {
            (self.events[k - 1].time, &self.events[k - 1].state)
        };
        let mut out = base.clone();
        let dt = time - t0;
        for (x, &v) in out.coords.iter_mut().zip(&base.vels) {
            *x += v * dt;
        }
        out
    }

    pub fn final_state(&self) -> HybridState<M, R> {
        self.state_at(self.end_time)
    }

    /// Time average of `f` along the path. Each segment is integrated with the
    /// midpoint rule, which is exact for functionals affine in the coordinates.
    pub fn path_mean<F>(&self, mut f: F) -> f64
    where
        F: FnMut(&M, &[R]) -> f64,
    {
        let total = self.end_time.as_f64();
        if total <= 0.0 {
            return f(&self.initial.mode, &self.initial.coords);
        }
        let half = R::of(0.5);
        let mut acc = 0.0;
        for (s, e, st) in self.segments() {
            let dt = e - s;
            if dt <= R::zero() {
                continue;
            }
            let mid = st.coords_at(dt * half);
            acc += dt.as_f64() * f(&st.mode, &mid);
        }
        acc / total
    }

    /// `n` snapshots at equally spaced times `0, T/(n-1), ..., T`.
    pub fn discretize(&self, n: usize) -> Vec<HybridState<M, R>> {
        assert!(n >= 2, "discretization needs at least two samples");
        let step = self.end_time / R::of_usize(n - 1);
        let mut out = Vec::with_capacity(n);
        let mut k = 0;
        for j in 0..n {
            let time = if j + 1 == n {
                self.end_time
            } else {
                step * R::of_usize(j)
            };
            while k < self.events.len() && self.events[k].time <= time {
                k += 1;
            }
            let (t0, base) = if k == 0 {
                (R::zero(), &self.initial)
            } else {
                (self.events[k - 1].time, &self.events[k - 1].state)
            };
            let mut s = base.clone();
            let dt = time - t0;
            for (x, &v) in s.coords.iter_mut().zip(&base.vels) {
                *x += v * dt;
            }
            out.push(s);
        }
        out
    }

    /// Equally spaced samples of a scalar functional.
    pub fn discretize_fn<F>(&self, n: usize, mut f: F) -> Vec<f64>
    where
        F: FnMut(&M, &[R]) -> f64,
    {
        self.discretize(n).iter().map(|s| f(&s.mode, &s.coords)).collect()
    }

    pub fn count(&self, pred: impl Fn(&EventKind) -> bool) -> usize {
        self.events.iter().filter(|e| pred(&e.kind)).count()
    }
}

impl<M: Clone + ModeId, R: Real> EventTrace<M, R> {
    /// Fraction of process time spent in each mode, keyed by mode id.
    pub fn occupation(&self) -> HashMap<u64, f64> {
        let mut out = HashMap::new();
        let total = self.end_time.as_f64();
        for (s, e, st) in self.segments() {
            *out.entry(st.mode.mode_id()).or_insert(0.0) += (e - s).as_f64() / total;
        }
        out
    }
}

impl<M: Clone, R: Real> Recorder<M, R> for EventTrace<M, R> {
    fn start(&mut self, state: &HybridState<M, R>) {
        self.initial = state.clone();
        self.events.clear();
        self.end_time = R::zero();
    }

    fn record(&mut self, time: R, kind: EventKind, state: &HybridState<M, R>) {
        self.events.push(EventRecord {
            time,
            kind,
            state: state.clone(),
        });
    }

    fn finish(&mut self, time: R, _: &HybridState<M, R>) {
        self.end_time = time;
    }
}

pub type Functional<'a, M, R> = Box<dyn Fn(&M, &[R]) -> f64 + Send + 'a>;

/// Streams equally spaced samples and exact path integrals of a set of scalar
/// functionals without storing the trajectory.
pub struct GridRecorder<'a, M, R> {
    functionals: Vec<Functional<'a, M, R>>,
    end: R,
    step: R,
    n: usize,
    next: usize,
    last_time: R,
    last: Option<HybridState<M, R>>,
    /// `samples[f][j]`: functional `f` at grid time `j`.
    pub samples: Vec<Vec<f64>>,
    /// Time integral of each functional along the path.
    pub integrals: Vec<f64>,
    pub end_time: R,
}

impl<'a, M: Clone, R: Real> GridRecorder<'a, M, R> {
    /// Samples `n >= 2` points over `[0, end]`; `end` must be the run's end time.
    pub fn new(end: R, n: usize, functionals: Vec<Functional<'a, M, R>>) -> Self {
        assert!(n >= 2, "grid needs at least two points");
        let k = functionals.len();
        Self {
            functionals,
            end,
            step: end / R::of_usize(n - 1),
            n,
            next: 0,
            last_time: R::zero(),
            last: None,
            samples: vec![Vec::with_capacity(n); k],
            integrals: vec![0.0; k],
            end_time: R::zero(),
        }
    }

    fn grid_time(&self, j: usize) -> R {
        if j + 1 == self.n {
            self.end
        } else {
            self.step * R::of_usize(j)
        }
    }

    /// Emits grid points strictly before `until` (or up to and including it
    /// when `inclusive`) and integrates up to `until` from the stored state.
    fn flush(&mut self, until: R, inclusive: bool) {
        let Some(st) = self.last.as_ref() else { return };
        while self.next < self.n {
            let g = self.grid_time(self.next);
            if g > until || (!inclusive && g == until) {
                break;
            }
            let x = st.coords_at(g - self.last_time);
            for (f, out) in self.functionals.iter().zip(self.samples.iter_mut()) {
                out.push(f(&st.mode, &x));
            }
            self.next += 1;
        }
        let dt = until - self.last_time;
        if dt > R::zero() {
            let mid = st.coords_at(dt * R::of(0.5));
            for (f, acc) in self.functionals.iter().zip(self.integrals.iter_mut()) {
                *acc += dt.as_f64() * f(&st.mode, &mid);
            }
        }
    }

    pub fn means(&self) -> Vec<f64> {
        let t = self.end_time.as_f64();
        self.integrals.iter().map(|&a| a / t).collect()
    }
}

impl<M: Clone, R: Real> Recorder<M, R> for GridRecorder<'_, M, R> {
    fn start(&mut self, state: &HybridState<M, R>) {
        self.last = Some(state.clone());
        self.last_time = R::zero();
    }

    fn record(&mut self, time: R, _: EventKind, state: &HybridState<M, R>) {
        self.flush(time, false);
        self.last = Some(state.clone());
        self.last_time = time;
    }

    fn finish(&mut self, time: R, _: &HybridState<M, R>) {
        self.flush(time, true);
        self.end_time = time;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::state::ModeHash;

    fn line() -> EventTrace<ModeHash, f64> {
        // t_1 falls from 1 to 0 over [0, 1], then rises for another 0.5
        let mut tr = EventTrace::new(HybridState::new(ModeHash(7), vec![1.0], vec![-1.0]));
        tr.events.push(EventRecord {
            time: 1.0,
            kind: EventKind::Reflect(0),
            state: HybridState::new(ModeHash(7), vec![0.0], vec![1.0]),
        });
        tr.end_time = 1.5;
        tr
    }

    #[test]
    fn constant_path() {
        let mut tr = EventTrace::new(HybridState::new(ModeHash(1), vec![2.5], vec![0.0]));
        tr.end_time = 3.0;
        assert_eq!(tr.path_mean(|_, x| x[0]), 2.5);
        assert!(tr.discretize(5).iter().all(|s| s.coords == vec![2.5]));
    }

    #[test]
    fn triangle_area() {
        let mut tr = EventTrace::new(HybridState::new(ModeHash(1), vec![0.0], vec![1.0]));
        tr.end_time = 1.0;
        assert_eq!(tr.path_mean(|_, x| x[0]), 0.5);
        let xs: Vec<f64> = tr.discretize(5).iter().map(|s| s.coords[0]).collect();
        assert_eq!(xs, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn state_lookup_is_right_continuous() {
        let tr = line();
        assert_eq!(tr.state_at(0.25).coords, vec![0.75]);
        assert_eq!(tr.state_at(1.0).vels, vec![1.0]);
        assert_eq!(tr.final_state().coords, vec![0.5]);
        assert!((tr.path_mean(|_, x| x[0]) - (0.5 + 0.125) / 1.5).abs() < 1e-15);
    }

    #[test]
    fn grid_recorder_matches_discretization() {
        let tr = line();
        let mut g = GridRecorder::new(1.5, 7, vec![Box::new(|_: &ModeHash, x: &[f64]| x[0])]);
        g.start(&tr.initial);
        for e in &tr.events {
            g.record(e.time, e.kind, &e.state);
        }
        g.finish(tr.end_time, &tr.final_state());
        assert_eq!(g.samples[0], tr.discretize_fn(7, |_, x| x[0]));
        assert!((g.means()[0] - tr.path_mean(|_, x| x[0])).abs() < 1e-15);
    }

    #[test]
    fn occupation_sums_to_one() {
        let mut tr = line();
        tr.events[0].state.mode = std::sync::Arc::new(ModeHash(9));
        let occ = tr.occupation();
        assert!((occ[&7] - 2.0 / 3.0).abs() < 1e-15);
        assert!((occ[&9] - 1.0 / 3.0).abs() < 1e-15);
    }
}
