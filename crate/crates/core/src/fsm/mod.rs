//! Finite-sites coalescent posterior.

mod data;
pub mod kernel;
mod pruning;
mod simulate;
mod target;

pub use data::FsmDataset;
pub use kernel::{transition, transition_derivatives};
pub use simulate::simulate_fsm_data;
pub use target::{FsmContext, FsmTarget, LikelihoodGradient};
