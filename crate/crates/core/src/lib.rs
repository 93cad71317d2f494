//! System-level simulator for cell-free millimeter-wave massive MIMO networks.
//!
//! The simulator models a square coverage area in which `M` multi-antenna
//! access points, driven by a central processing unit over capacity-limited
//! fronthaul links, jointly serve `K` single-antenna mobile stations. Each
//! access point applies a statistical phase-only RF precoder in front of a
//! small number of RF chains; the CPU applies zero-forcing baseband
//! precoding/combining on MMSE channel estimates obtained from uplink pilots.
//!
//! The main pipeline (see [`harness::run_drop`]) is:
//!
//! 1. draw a random network drop ([`geometry`]),
//! 2. realize the three-state clustered channel and its per-link spatial
//!    covariance matrices ([`channel`]),
//! 3. build the RF precoders and select which users each AP beamforms
//!    ([`rf`]),
//! 4. assign uplink pilots ([`pilot`]),
//! 5. estimate the post-RF equivalent channels ([`estimation`]),
//! 6. evaluate the Monte Carlo expectation terms behind the achievable-rate
//!    expressions and the fronthaul consumption bounds ([`rates`]),
//! 7. jointly optimize transmit powers and fronthaul quantization noise for
//!    max-min per-user rate via block coordinate descent ([`optimizer`]).
//!
//! Campaigns over many drops, sweeps, CSV/JSON reporting and the CLI surface
//! live in [`harness`].

pub mod channel;
pub mod config;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod optimizer;
pub mod parallel;
pub mod pilot;
pub mod rates;
pub mod rf;
pub mod rng;
pub mod validate;

pub use config::SimConfig;
pub use error::SimError;

/// Complex scalar used throughout the simulator.
pub type C64 = nalgebra::Complex<f64>;
/// Dynamically sized complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dynamically sized complex column vector.
pub type CVec = nalgebra::DVector<C64>;
/// Dynamically sized real matrix.
pub type RMat = nalgebra::DMatrix<f64>;
/// Dynamically sized real column vector.
pub type RVec = nalgebra::DVector<f64>;
