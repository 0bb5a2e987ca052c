//! Independent checks of the analytic model: a photon-level Monte Carlo
//! simulation and a brute-force discrete Fourier evaluation of the filtered
//! conjugate-pulse spectra.

pub mod compare;
pub mod dft;
pub mod mc;

pub use compare::{compare_empirical, ColumnChiSquare, Comparison, LOW_POWER_COLUMN_COUNT};
pub use dft::{compare_spectra, dft_spectrum_oracle, inner_bins, DftConfig, DftSpectrum, SpectrumComparison};
pub use mc::{run_mc, EmpiricalMatrix, McConfig};
