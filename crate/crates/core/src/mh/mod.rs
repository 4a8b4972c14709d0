//! Metropolis-Hastings baseline with three proposals (reflected theta walk,
//! sequential truncated-normal merger times, subtree-prune-regraft), and the
//! hybrid sampler that interleaves theta and SPR moves with zig-zag motion.

mod chain;
mod hybrid;
mod moves;
pub mod spr;
pub mod truncnorm;

pub use chain::{run_mh, MhRun};
pub use hybrid::HybridMoves;
pub use moves::{spr_step, theta_step, times_scales, times_step, StepOutcome};
pub use spr::{apply_spr, propose_spr, SprMove, SprResult};

use std::fmt;
use std::str::FromStr;

use crate::engine::MhMoveKind;
use crate::error::{Error, Result};

/// Proposal scales and hybrid rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MhConfig {
    pub sigma_theta: f64,
    pub sigma_times: f64,
    /// Rate of interleaved moves in the hybrid sampler.
    pub kappa: f64,
}

impl Default for MhConfig {
    fn default() -> Self {
        Self {
            sigma_theta: 1.0,
            sigma_times: 0.5,
            kappa: 10.0,
        }
    }
}

impl MhConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_theta > 0.0 && self.sigma_theta.is_finite()) {
            return Err(Error::config("sigma_theta must be positive"));
        }
        if !(self.sigma_times > 0.0 && self.sigma_times.is_finite()) {
            return Err(Error::config("sigma_times must be positive"));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::config("kappa must be non-negative"));
        }
        Ok(())
    }
}

/// Published tuning for six reference datasets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Infinite sites, 55 sequences.
    IsmDefault,
    /// Infinite sites, `n = 550`, `theta = 5.5`.
    IsmLargeSample,
    /// Infinite sites, `n = 55`, `theta = 55`.
    IsmHighTheta,
    /// Finite sites, small real dataset.
    FsmDefault,
    /// Finite sites, `n = 500`, 20 sites.
    FsmLargeSample,
    /// Finite sites, `n = 50`, 200 sites.
    FsmManySites,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::IsmDefault,
        Preset::IsmLargeSample,
        Preset::IsmHighTheta,
        Preset::FsmDefault,
        Preset::FsmLargeSample,
        Preset::FsmManySites,
    ];

    /// `(v_theta, mh sigma_theta, sigma_times, hybrid sigma_theta, kappa)`
    fn row(self) -> (f64, f64, f64, f64, f64) {
        match self {
            Preset::IsmDefault => (8.0, 8.0, 0.6, 10.0, 10.0),
            Preset::IsmLargeSample => (6.0, 6.0, 0.25, 6.0, 10.0),
            Preset::IsmHighTheta => (40.0, 18.0, 0.4, 18.0, 10.0),
            Preset::FsmDefault => (4.0, 4.0, 0.7, 4.0, 100.0),
            Preset::FsmLargeSample => (4.0, 4.0, 0.3, 3.0, 100.0),
            Preset::FsmManySites => (20.0, 14.0, 0.6, 14.0, 100.0),
        }
    }

    /// Speed of the theta coordinate for zig-zag and hybrid runs.
    pub fn theta_speed(self) -> f64 {
        self.row().0
    }

    pub fn mh(self) -> MhConfig {
        let (_, st, sh, _, _) = self.row();
        MhConfig {
            sigma_theta: st,
            sigma_times: sh,
            kappa: 0.0,
        }
    }

    pub fn hybrid(self) -> MhConfig {
        let (_, _, sh, st, k) = self.row();
        MhConfig {
            sigma_theta: st,
            sigma_times: sh,
            kappa: k,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::IsmDefault => "ism-default",
            Preset::IsmLargeSample => "ism-large-sample",
            Preset::IsmHighTheta => "ism-high-theta",
            Preset::FsmDefault => "fsm-default",
            Preset::FsmLargeSample => "fsm-large-sample",
            Preset::FsmManySites => "fsm-many-sites",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::config(format!("unknown preset `{s}`")))
    }
}

/// Proposal and acceptance counts per move kind.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MhStats {
    pub proposed: [u64; 3],
    pub accepted: [u64; 3],
    /// SPR pairs with no valid attachment (rejected without evaluation).
    pub spr_infeasible: u64,
    /// SPR results the data rule out (rejected without evaluation).
    pub spr_incompatible: u64,
}

fn slot(kind: MhMoveKind) -> usize {
    match kind {
        MhMoveKind::Theta => 0,
        MhMoveKind::Times => 1,
        MhMoveKind::Spr => 2,
    }
}

impl MhStats {
    pub fn count(&mut self, kind: MhMoveKind, accepted: bool) {
        self.proposed[slot(kind)] += 1;
        self.accepted[slot(kind)] += u64::from(accepted);
    }

    /// Fraction of accepted proposals; `None` before the first proposal.
    pub fn acceptance(&self, kind: MhMoveKind) -> Option<f64> {
        let i = slot(kind);
        (self.proposed[i] > 0).then(|| self.accepted[i] as f64 / self.proposed[i] as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_carry_the_table() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
            p.mh().validate().unwrap();
            p.hybrid().validate().unwrap();
        }
        assert_eq!(Preset::IsmDefault.mh().sigma_theta, 8.0);
        assert_eq!(Preset::FsmManySites.hybrid().kappa, 100.0);
        assert!("nope".parse::<Preset>().is_err());
    }

    #[test]
    fn acceptance_counts() {
        let mut s = MhStats::default();
        assert_eq!(s.acceptance(MhMoveKind::Spr), None);
        s.count(MhMoveKind::Spr, true);
        s.count(MhMoveKind::Spr, false);
        assert_eq!(s.acceptance(MhMoveKind::Spr), Some(0.5));
    }
}
