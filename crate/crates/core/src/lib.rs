//! Numerical laboratory for two-agent bilateral trade: gains-from-trade of
//! fixed-price, seller-pricing, buyer-pricing and random-offerer mechanisms
//! against the first-best benchmark, with numerical certificates for the
//! known approximation bounds.

pub mod bounds;
pub mod dist;
pub mod error;
pub mod mechanisms;
pub mod montecarlo;
pub mod quadrature;
pub mod search;

pub use dist::{Atom, Distribution, PiecewiseLaw, QuantileMap, Segment, SegmentKind};
pub use error::{Error, Result};
