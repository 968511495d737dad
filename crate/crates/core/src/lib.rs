//! Polar codes for the two-user multiple-access channel.
//!
//! The crate is organised bottom-up:
//!
//! * [`field`]: prime-field arithmetic.
//! * [`channel`]: MACs and point-to-point channels as probability tables,
//!   with lossless canonicalisation (output merging).
//! * [`transform`]: the minus/plus MAC syntheses, marginal and linear-combination
//!   channels, and the single-user bad/good transforms.
//! * [`metrics`]: mutual informations, Bhattacharyya parameter, ML error
//!   probability, extremal classification and rate-region geometry.
//! * [`polarizer`]: exact and Monte Carlo polarization sweeps.
//! * [`codec`]: encoder, joint successive-cancellation decoder, code
//!   construction, block simulation, and the rate-splitting corner scheme.
//! * [`registry`]: name-keyed registries of channel families, reliability
//!   estimators and coding schemes used by the command line front end.
//! * [`cli`]: the `macpolar` command line tool.

pub mod channel;
pub mod cli;
pub mod codec;
pub mod error;
pub mod field;
pub mod metrics;
pub mod polarizer;
pub mod registry;
pub mod stats;
pub mod transform;

pub use channel::{Mac, PointChannel};
pub use error::{Error, Result};
pub use field::Field;
pub use metrics::InfoTriple;
