//! Two-good auction menus: exact revenue, menu-size accounting, a duality-gap
//! certificate for the i.i.d. Beta(1,2) instance, piecewise-linear
//! approximation of its exclusion curve, and price-rounding menu compressors.

pub mod dist;
pub mod duality;
pub mod error;
pub mod model;
pub mod oracle;
pub mod plapprox;
pub mod poly;
pub mod revenue;
pub mod rounding;
pub mod rng;

pub use error::{Error, Result};
pub use model::{comm_complexity, BuyerType, Menu, MenuEntry};
