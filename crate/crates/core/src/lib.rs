//! Deterministic simulator for commitment-based lottery and sealed-bid
//! auction protocols run by a small set of miners over authenticated links.
//!
//! The numerical commitment model is generic over [`scalar::Scalar`]; the
//! aliases below fix it to `f64`.

pub mod auction;
pub mod bits;
pub mod commitment;
pub mod consensus;
pub mod events;
pub mod ledger;
pub mod lottery;
pub mod party;
pub mod qbc;
pub mod scalar;
pub mod scenario;
pub mod seed;
pub mod sim;
pub mod transport;

pub type PureState64 = qbc::PureState<f64>;
pub type DensityOperator64 = qbc::DensityOperator<f64>;
pub type QbcScheme64 = qbc::QbcScheme<f64>;
pub use lottery::Share;
