//! Simulation and analysis toolkit for high-dimensional quantum key
//! distribution: BB84, (d+1)-MUB, SIC-POVM (Singapore) and Chau15 sessions
//! over noisy channels, secret key rates and error thresholds, mutual
//! information of SIC joint statistics, and maximum-likelihood process
//! tomography.

pub mod channel;
pub mod error;
pub mod gf2n;
pub mod keyrate;
pub mod protocols;
pub mod qmath;
pub mod states;
pub mod tomography;
pub mod transport;

pub use error::{Error, Result};
