//! Outage analysis of HARQ with incremental redundancy (HARQ-IR) over
//! exponentially time-correlated Rayleigh fading channels.

pub mod error;
pub mod channel;
pub mod design;
pub mod negmult;
pub mod outage;
pub mod product_dist;
pub mod quad;
pub mod special_fn;

pub use error::{Error, Result};
