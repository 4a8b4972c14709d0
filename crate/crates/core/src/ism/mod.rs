//! Infinite-sites coalescent posterior.

mod data;
mod simulate;
mod target;

pub(crate) use data::header_fields;
pub use data::IsmDataset;
pub(crate) use simulate::poisson;
pub use simulate::simulate_ism_data;
pub use target::{perfect_phylogeny, IsmContext, IsmMode, IsmTarget};
