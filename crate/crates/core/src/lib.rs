//! Space-time block code laboratory.
//!
//! Encoders, a quasi-static Rayleigh fading channel, pairwise conditional
//! ML and reference decoders, determinant-criterion diversity analysis and
//! a deterministic Monte Carlo harness for the rate-2 4×3 and 4×4 codes and
//! the Alamouti, Jafarkhani, Ozbek, CIOD and ACIOD comparison codes.

pub mod analysis;
pub mod channel;
pub mod cli;
pub mod codes;
pub mod constellation;
pub mod decoders;
pub mod linalg;
pub mod montecarlo;

pub use codes::{PairAngles, Scheme, SchemeDescriptor};
pub use constellation::{build_qam, Constellation, Modulation};
pub use linalg::{CMatrix, C64};
