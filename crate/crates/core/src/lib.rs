//! Proportional-lottery ("Chinese") auctions: several items, each drawn by
//! lottery among the weight placed in its basket.
//!
//! * [`model`]: instances, profiles and expected utilities.
//! * [`continuous`]: best responses, closed-form equilibria and best-response dynamics
//!   for divisible weight.
//! * [`discrete`]: enumeration and constructive equilibria for indivisible tickets.
//! * [`verify`]: equilibrium certificates, grid audits and Monte Carlo checks.

pub mod continuous;
pub mod discrete;
pub mod error;
pub mod exact;
pub mod model;
pub mod verify;

pub use error::{Error, Result};
pub use exact::Exact;
pub use model::{AuctionInstance, Budget, ContinuousProfile, DiscreteAssignment, Mode, Player, ValidationIssue};
