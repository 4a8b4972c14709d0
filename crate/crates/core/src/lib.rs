//! Zig-zag sampling of coalescent tree posteriors.
//!
//! The crate is generic over the scalar type (`f32` or `f64`, see [`Real`]);
//! the aliases at the crate root fix it to `f64`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod engine;
pub mod error;
pub mod fsm;
pub mod ism;
pub mod mh;
pub mod real;
pub mod run;
pub mod tau;
pub mod theta;

pub use error::{Error, Result};
pub use real::Real;

pub type State<M> = engine::HybridState<M, f64>;
pub type Trace<M> = engine::EventTrace<M, f64>;
