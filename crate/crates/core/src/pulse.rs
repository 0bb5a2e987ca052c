//! Gaussian pulse densities, exact bin masses and the spectra of
//! time-truncated conjugate pulses.
//!
//! Everything here is dimensionless: time is measured in units of the symbol
//! slot Δt and frequency in units of the channel spacing Δω. A pulse of width
//! parameter `σ` has energy density `ρ_σ(z) = exp(-z²/σ²) / (σ√π)`, i.e. a
//! normal density with standard deviation `σ/√2`.
//!
//! A conjugate pulse passed through one rectangular time filter has, in the
//! frequency variable `w`, the density `g(w) = |F(w)|²/√π` where
//! `F(w) = ∫ φ(x) e^{-iwx} dx` over the filter window `[x_lo, x_hi]` and `φ`
//! is the standard normal pdf. `g` is even because `φ` is real, so its
//! cumulative only ever needs integrals over `[0, |w|]`; infinite bounds are
//! resolved from the closed-form total mass and never integrated.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use libm::{erf, erfc};
use num_complex::Complex64;

use crate::channel::bin_bounds;
use crate::error::{Error, Result};
use crate::faddeeva::faddeeva;
use crate::quadrature::{integrate, integrate_breaks, QuadConfig};

/// Default absolute accuracy for spectral bin masses.
pub const DEFAULT_ACCURACY: f64 = 1e-8;

const INV_SQRT_PI: f64 = 0.564_189_583_547_756_3;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn std_normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Normalized Gaussian energy density of one pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseDensity {
    width: f64,
    center: f64,
}

impl PulseDensity {
    pub fn new(width: f64, center: f64) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::domain(format!(
                "pulse width must be positive and finite, got {width}"
            )));
        }
        if !center.is_finite() {
            return Err(Error::domain(format!("pulse center must be finite, got {center}")));
        }
        Ok(PulseDensity { width, center })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    /// Standard deviation of the photon's arrival coordinate.
    pub fn std_dev(&self) -> f64 {
        self.width * FRAC_1_SQRT_2
    }

    pub fn density(&self, z: f64) -> f64 {
        let u = (z - self.center) / self.width;
        INV_SQRT_PI / self.width * (-u * u).exp()
    }

    /// The real amplitude `ψ` with `ψ² = ρ`.
    pub fn amplitude(&self, z: f64) -> f64 {
        self.density(z).sqrt()
    }

    pub fn bin_mass(&self, lo: f64, hi: f64) -> Result<f64> {
        density_bin_mass(self.width, self.center, lo, hi)
    }
}

/// Probability mass of a pulse of the given width and center inside `[lo, hi]`.
///
/// Bounds may be infinite. Tails are evaluated with `erfc` so that masses far
/// from the center keep full relative precision.
pub fn density_bin_mass(width: f64, center: f64, lo: f64, hi: f64) -> Result<f64> {
    if !(width > 0.0) || !width.is_finite() {
        return Err(Error::domain(format!(
            "pulse width must be positive and finite, got {width}"
        )));
    }
    if lo.is_nan() || hi.is_nan() || !center.is_finite() {
        return Err(Error::domain("bin bounds and center must not be NaN"));
    }
    if lo > hi {
        return Err(Error::domain(format!("empty bin: lo = {lo} > hi = {hi}")));
    }
    let u = (hi - center) / width;
    let l = (lo - center) / width;
    let mass = if l >= 0.0 {
        0.5 * (erfc_ext(l) - erfc_ext(u))
    } else if u <= 0.0 {
        0.5 * (erfc_ext(-u) - erfc_ext(-l))
    } else {
        0.5 * (erf_ext(u) - erf_ext(l))
    };
    Ok(mass.clamp(0.0, 1.0))
}

fn erf_ext(x: f64) -> f64 {
    if x == f64::INFINITY {
        1.0
    } else if x == f64::NEG_INFINITY {
        -1.0
    } else {
        erf(x)
    }
}

fn erfc_ext(x: f64) -> f64 {
    if x == f64::INFINITY {
        0.0
    } else if x == f64::NEG_INFINITY {
        2.0
    } else {
        erfc(x)
    }
}

/// `exp(-w²/2) · erfc((x + iw)/√2)`, evaluated without overflow.
fn scaled_erfc(x: f64, w: f64) -> Complex64 {
    if x == f64::INFINITY {
        Complex64::new(0.0, 0.0)
    } else if x == f64::NEG_INFINITY {
        Complex64::new(2.0 * (-0.5 * w * w).exp(), 0.0)
    } else if x >= 0.0 && w == 0.0 {
        Complex64::new(erfc(x * FRAC_1_SQRT_2), 0.0)
    } else if x >= 0.0 {
        let phase = Complex64::new(-0.5 * x * x, -x * w).exp();
        phase * faddeeva(Complex64::new(-w, x) * FRAC_1_SQRT_2)
    } else {
        Complex64::new(2.0 * (-0.5 * w * w).exp(), 0.0) - scaled_erfc(-x, -w)
    }
}

/// `F(w) = ∫_{x_lo}^{x_hi} φ(x) e^{-iwx} dx` with `φ` the standard normal pdf.
pub fn truncated_pulse_fourier(x_lo: f64, x_hi: f64, w: f64) -> Result<Complex64> {
    if x_lo.is_nan() || x_hi.is_nan() || !w.is_finite() {
        return Err(Error::domain("window bounds must not be NaN and w must be finite"));
    }
    if x_lo > x_hi {
        return Err(Error::domain(format!("empty window: {x_lo} > {x_hi}")));
    }
    Ok(fourier_unchecked(x_lo, x_hi, w))
}

fn fourier_unchecked(x_lo: f64, x_hi: f64, w: f64) -> Complex64 {
    0.5 * (scaled_erfc(x_lo, w) - scaled_erfc(x_hi, w))
}

/// Frequency-domain energy density of a conjugate pulse after one
/// rectangular time filter.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSpectrum {
    filter: Option<usize>,
    x_lo: f64,
    x_hi: f64,
    total: f64,
    accuracy: f64,
}

/// Spectrum behind time filter `filter` (0-based, `< m`) for conjugate-pulse
/// width `beta`. The filter window `[b_low, b_up]` maps to
/// `x ∈ [2 b_low/(βM), 2 b_up/(βM)]`.
pub fn build_spectrum(filter: usize, m: usize, beta: f64, accuracy: f64) -> Result<TruncatedSpectrum> {
    if m < 2 {
        return Err(Error::domain(format!("symbol count must be at least 2, got {m}")));
    }
    if filter >= m {
        return Err(Error::domain(format!("filter index {filter} out of range for M = {m}")));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::domain(format!("beta must be positive and finite, got {beta}")));
    }
    let (lo, hi) = bin_bounds(filter, m);
    let scale = 2.0 / (beta * m as f64);
    let mut spec = TruncatedSpectrum::from_window(lo * scale, hi * scale, accuracy)?;
    spec.filter = Some(filter);
    Ok(spec)
}

impl TruncatedSpectrum {
    /// Spectrum for an explicit window in standard-normal units.
    pub fn from_window(x_lo: f64, x_hi: f64, accuracy: f64) -> Result<Self> {
        if x_lo.is_nan() || x_hi.is_nan() || x_lo >= x_hi {
            return Err(Error::domain(format!("invalid window [{x_lo}, {x_hi}]")));
        }
        if !(accuracy > 0.0) {
            return Err(Error::domain(format!("accuracy must be positive, got {accuracy}")));
        }
        // Parseval: ∫ g = 2√π ∫_window φ² = mass of e^{-x²}/√π over the window.
        let total = density_bin_mass(1.0, 0.0, x_lo, x_hi)?;
        Ok(TruncatedSpectrum {
            filter: None,
            x_lo,
            x_hi,
            total,
            accuracy,
        })
    }

    /// The unfiltered conjugate pulse: `g(w) = e^{-w²}/√π`.
    pub fn untruncated(accuracy: f64) -> Result<Self> {
        Self::from_window(f64::NEG_INFINITY, f64::INFINITY, accuracy)
    }

    pub fn filter(&self) -> Option<usize> {
        self.filter
    }

    pub fn window(&self) -> (f64, f64) {
        (self.x_lo, self.x_hi)
    }

    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }

    /// Closed-form total mass; equals the time-filter pass probability.
    pub fn total_mass(&self) -> f64 {
        self.total
    }

    pub fn amplitude(&self, w: f64) -> Complex64 {
        fourier_unchecked(self.x_lo, self.x_hi, w)
    }

    pub fn density(&self, w: f64) -> f64 {
        INV_SQRT_PI * self.amplitude(w).norm_sqr()
    }

    /// `G(w) = ∫_{-∞}^{w} g`.
    pub fn cumulative(&self, w: f64) -> Result<f64> {
        Ok(self.cumulative_many(&[w])?[0])
    }

    /// Evaluates `G` at every point, sharing the quadrature between them.
    /// Each returned value is within `accuracy` of the exact cumulative.
    pub fn cumulative_many(&self, points: &[f64]) -> Result<Vec<f64>> {
        if points.iter().any(|w| w.is_nan()) {
            return Err(Error::domain("cumulative evaluated at NaN"));
        }
        let mut nodes: Vec<f64> = points
            .iter()
            .filter(|w| w.is_finite())
            .map(|w| w.abs())
            .filter(|&w| w > 0.0)
            .collect();
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();

        let piece_tol = self.accuracy / (2.0 * nodes.len().max(1) as f64);
        let cfg = QuadConfig::absolute(piece_tol);
        let mut partial = Vec::with_capacity(nodes.len());
        let mut acc = 0.0;
        let mut prev = 0.0;
        for &node in &nodes {
            let est =
                integrate(|w| self.density(w), prev, node, cfg).map_err(|e| spectrum_failure(e, self.accuracy))?;
            acc += est.value;
            partial.push(acc);
            prev = node;
        }

        let half = 0.5 * self.total;
        Ok(points
            .iter()
            .map(|&w| {
                if w == f64::INFINITY {
                    self.total
                } else if w == f64::NEG_INFINITY {
                    0.0
                } else if w == 0.0 {
                    half
                } else {
                    let idx = nodes.binary_search_by(|n| n.total_cmp(&w.abs())).expect("node present");
                    let inner = partial[idx];
                    let g = if w > 0.0 { half + inner } else { half - inner };
                    g.clamp(0.0, self.total)
                }
            })
            .collect())
    }

    /// Total mass obtained by integrating the density itself: quadrature on
    /// `[-W, W]` plus an asymptotic expansion of the `~1/w²` tails. Agreement
    /// with [`total_mass`](Self::total_mass) is the Parseval identity.
    pub fn numeric_total(&self) -> Result<f64> {
        let ends: Vec<f64> = [self.x_lo, self.x_hi].into_iter().filter(|x| x.is_finite()).collect();
        let reach = ends.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let length = self.x_hi - self.x_lo;
        let mut cutoff = 200.0f64.max(20.0 * reach);
        if length.is_finite() {
            cutoff = cutoff.max(60.0 / length);
        }
        // Breakpoints every half oscillation period keep the adaptive
        // refinement local.
        let step = if length.is_finite() {
            (PI / length).min(10.0)
        } else {
            10.0
        };
        let n = (cutoff / step).ceil() as usize;
        let breaks: Vec<f64> = (0..=n).map(|k| cutoff * k as f64 / n as f64).collect();
        let inner = integrate_breaks(|w| self.density(w), &breaks, QuadConfig::absolute(1e-12))
            .map_err(|e| spectrum_failure(e, 1e-12))?;

        let mut tail = 0.0;
        for &x in &ends {
            let p = std_normal_pdf(x);
            tail += p * p / cutoff + (2.0 - x * x) * p * p / (3.0 * cutoff.powi(3));
        }
        if ends.len() == 2 {
            let (a, b) = (self.x_lo, self.x_hi);
            let (pa, pb) = (std_normal_pdf(a), std_normal_pdf(b));
            let (dpa, dpb) = (-a * pa, -b * pb);
            let i2 = oscillatory_tail(length, cutoff, 2);
            let i3 = oscillatory_tail(length, cutoff, 3);
            let cross = pa * pb * i2 + Complex64::i() * (pa * dpb - dpa * pb) * i3;
            tail -= 2.0 * cross.re;
        }
        Ok(2.0 * (inner.value + INV_SQRT_PI * tail))
    }
}

/// `∫_W^∞ e^{iLw} w^{-n} dw` by repeated integration by parts (valid for `LW ≫ n`).
fn oscillatory_tail(l: f64, w: f64, n: i32) -> Complex64 {
    const DEPTH: i32 = 8;
    let il = Complex64::new(0.0, l);
    let edge = Complex64::new(0.0, l * w).exp();
    let mut acc = Complex64::new(0.0, 0.0);
    for k in (n..n + DEPTH).rev() {
        acc = -edge / (il * w.powi(k)) + (k as f64 / il) * acc;
    }
    acc
}

fn spectrum_failure(err: Error, target: f64) -> Error {
    match err {
        Error::NumericFailure { achieved, .. } => Error::NumericFailure {
            context: "truncated spectrum quadrature".into(),
            achieved,
            target,
        },
        other => other,
    }
}

/// Mass of `spec` in the frequency bin `[w_lo, w_hi]`.
pub fn spectrum_bin_mass(spec: &TruncatedSpectrum, w_lo: f64, w_hi: f64) -> Result<f64> {
    if w_lo.is_nan() || w_hi.is_nan() || w_lo > w_hi {
        return Err(Error::domain(format!("invalid frequency bin [{w_lo}, {w_hi}]")));
    }
    if w_lo == w_hi {
        return Ok(0.0);
    }
    let g = spec.cumulative_many(&[w_lo, w_hi])?;
    Ok((g[1] - g[0]).max(0.0))
}
