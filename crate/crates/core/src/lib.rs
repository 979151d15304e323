//! System-level simulator of two spectrally coexisting radio networks (an IoT
//! operator and a mobile-broadband operator) steered by a radio service map
//! (RSM) subsystem.
//!
//! The crate is organised bottom-up:
//!
//! - [`scenario`]: deployment geometry, user populations, mobility, run configuration
//! - [`channel`]: Winner II path loss, log-normal shadowing and EPA/Jakes fading
//! - [`link`]: per-RB SINR, EESM effective SNR and MCS selection
//! - [`scheduler`]: proportional-fair scheduling with soft frequency reuse
//! - [`sim`]: the per-TTI world loop tying the above together
//! - [`rsm`]: map layers, repositories, policy store and conformance checks
//! - [`usecases`]: LSA policy engine, adaptive outdoor protection, traffic-map scheduling
//! - [`load`]: worst-case RSM storage/throughput calculator
//! - [`runner`]: end-to-end experiments writing deterministic CSV outputs

pub mod channel;
pub mod ids;
pub mod link;
pub mod load;
pub mod rng;
pub mod rsm;
pub mod runner;
pub mod scenario;
pub mod scheduler;
pub mod sim;
pub mod units;
pub mod usecases;

pub use ids::{BsId, UeId};
