use std::fmt;
use std::sync::Arc;

use crate::real::Real;

/// Stable identifier of a discrete mode, written to trace files.
pub trait ModeId {
    fn mode_id(&self) -> u64;
}

/// Mode placeholder used when a trace is read back from disk and only the
/// identifier survives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeHash(pub u64);

impl ModeId for ModeHash {
    fn mode_id(&self) -> u64 {
        self.0
    }
}

/// Zig-zag state: discrete mode, continuous coordinates, and velocities.
///
/// Velocities are signed speeds; their magnitudes never change during a run.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridState<M, R> {
    pub mode: Arc<M>,
    pub coords: Vec<R>,
    pub vels: Vec<R>,
}

impl<M, R: Real> HybridState<M, R> {
    pub fn new(mode: M, coords: Vec<R>, vels: Vec<R>) -> Self {
        assert_eq!(coords.len(), vels.len(), "one velocity per coordinate");
        Self {
            mode: Arc::new(mode),
            coords,
            vels,
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Coordinates after moving for `dt` without events.
    pub fn coords_at(&self, dt: R) -> Vec<R> {
        self.coords.iter().zip(&self.vels).map(|(&x, &v)| x + v * dt).collect()
    }

    /// Coordinate `i` after moving for `dt`.
    #[inline]
    pub fn coord_at(&self, i: usize, dt: R) -> R {
        self.coords[i] + self.vels[i] * dt
    }

    pub(crate) fn advance(&mut self, dt: R) {
        for (x, &v) in self.coords.iter_mut().zip(&self.vels) {
            *x += v * dt;
            if *x < R::zero() {
                // rounding residue of a coordinate that reaches zero at the same
                // instant as the event that ends this segment
                *x = R::zero();
            }
        }
    }

    pub(crate) fn flip(&mut self, i: usize) {
        self.vels[i] = -self.vels[i];
    }

    pub fn set_mode(&mut self, mode: M) {
        self.mode = Arc::new(mode);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MhMoveKind {
    Theta,
    Times,
    Spr,
}

impl MhMoveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MhMoveKind::Theta => "theta",
            MhMoveKind::Times => "times",
            MhMoveKind::Spr => "spr",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "theta" => Some(MhMoveKind::Theta),
            "times" => Some(MhMoveKind::Times),
            "spr" => Some(MhMoveKind::Spr),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EventKind {
    Flip(usize),
    /// Boundary hit that moved the process into another mode.
    BoundaryCross(usize),
    /// Boundary hit that kept the mode and only flipped the velocity.
    Reflect(usize),
    /// Localization window expired; rates and bounds were recomputed.
    Refresh,
    MhMove {
        kind: MhMoveKind,
        accepted: bool,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Flip(_) => "flip",
            EventKind::BoundaryCross(_) => "boundary_cross",
            EventKind::Reflect(_) => "reflect",
            EventKind::Refresh => "refresh",
            EventKind::MhMove { .. } => "mh_move",
        }
    }

    pub fn coord(&self) -> Option<usize> {
        match *self {
            EventKind::Flip(i) | EventKind::BoundaryCross(i) | EventKind::Reflect(i) => Some(i),
            _ => None,
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.coord() {
            Some(i) => write!(f, "{}({i})", self.name()),
            None => f.write_str(self.name()),
        }
    }
}
