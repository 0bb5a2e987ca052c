//! Secret capacity of time-frequency quantum key distribution.
//!
//! Alice encodes one of `M` time slots (or the conjugate frequency bins) on a
//! Gaussian photon pulse. This crate builds the resulting conditional
//! probability matrices for Bob and for an intercept-resend eavesdropper,
//! turns them into mutual information and secret capacity, optimizes the
//! pulse widths, and cross-checks everything against a Monte Carlo simulator
//! and a discrete spectral oracle.
//!
//! Units are dimensionless: one time bin has unit width and frequencies are
//! measured in units of the inverse bin width.

// `!(x > 0.0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod faddeeva;
pub mod info;
pub mod optimizer;
pub mod oracle;
pub mod par;
pub mod pulse;
pub mod quadrature;

pub use channel::{
    attack_matrix, bob_matrix, eve_matrix, make_layout, mixed_bob_matrix, p_correct, p_second_correct, p_wrong,
    BinLayout, ConditionalMatrix, ProtocolParams,
};
pub use error::{Error, Result};
pub use info::{capacity, i_ab, i_ae, key_rate, mutual_info_dual, mutual_info_single, qser, CapacityReport};
pub use optimizer::{
    c_surface, grid_golden_min, minimize_beta, optimize_point, sweep, u_functional, OptimizationResult,
    OptimizerConfig, Scheme, SearchBox, SurfaceGrid, SweepEntry, UVariant,
};
pub use pulse::{build_spectrum, truncated_pulse_fourier, PulseDensity, TruncatedSpectrum, DEFAULT_ACCURACY};
