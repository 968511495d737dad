//! Encoding, decoding, code construction and simulation.

pub mod construct;
pub mod corner;
pub mod encoder;
pub mod joint;
pub mod sc;
pub mod scheme;
pub mod simulate;

pub use construct::{construct, CodeSpec, ConstructParams, Role};
pub use corner::{
    corner_channels, corner_construct, simulate_corner, CornerCode, CornerDecoder, PointCodeSpec,
};
pub use encoder::{bit_reversal_perm, polar_encode, polar_invert};
pub use joint::{JointDecision, JointDecoder};
pub use simulate::{simulate_block, SimReport};
