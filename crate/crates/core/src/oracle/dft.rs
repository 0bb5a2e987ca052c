//! Brute-force spectra of filtered conjugate pulses.
//!
//! The truncated amplitude `φ(x)·H_f(x)` is sampled on a dense x-grid and its
//! Fourier transform is formed by direct trapezoid summation at every node of
//! a w-grid; `g = |F|²/√π` is then integrated over bins by the trapezoid rule.
//! Nothing here shares code with the closed-form evaluation in
//! [`crate::pulse`] beyond the bin geometry.
//!
//! Every quantity is computed twice, on the grid and on the grid with doubled
//! steps; since both rules are second order, `|fine - coarse|/3` estimates the
//! error of the fine result.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::channel::bin_bounds;
use crate::error::{Error, Result};
use crate::par;
use crate::pulse::{build_spectrum, density_bin_mass, spectrum_bin_mass, std_normal_pdf};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DftConfig {
    pub x_step: f64,
    pub w_step: f64,
    /// The spectrum is tabulated on `[-w_span, w_span]`.
    pub w_span: f64,
    /// Infinite windows are cut at `±x_cutoff` (φ(8.5) ≈ 2e-16).
    pub x_cutoff: f64,
    /// Largest spectral mass allowed outside the span.
    pub tail_tolerance: f64,
}

impl Default for DftConfig {
    fn default() -> Self {
        DftConfig {
            x_step: 5e-4,
            w_step: 2e-3,
            w_span: 30.0,
            x_cutoff: 8.5,
            tail_tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DftSpectrum {
    pub filter: usize,
    pub window: (f64, f64),
    w_step: f64,
    /// `g(k·w_step)` for `k = 0..=K`; g is even.
    fine: Vec<f64>,
    /// Same nodes, x-grid step doubled.
    coarse: Vec<f64>,
    /// Total spectral mass via discrete Parseval, `2√π Σ h φ(x)²`.
    pub total: f64,
    /// Total minus the tabulated mass on `[-span, span]`.
    pub tail_mass: f64,
}

/// Trapezoid weights over `[a, b]` with an even number of intervals.
fn x_grid(a: f64, b: f64, step: f64) -> (Vec<f64>, f64) {
    let mut n = ((b - a) / step).ceil().max(2.0) as usize;
    if n % 2 == 1 {
        n += 1;
    }
    let h = (b - a) / n as f64;
    ((0..=n).map(|j| a + j as f64 * h).collect(), h)
}

pub fn dft_spectrum_oracle(filter: usize, m: usize, beta: f64, cfg: &DftConfig) -> Result<DftSpectrum> {
    if m < 2 || filter >= m {
        return Err(Error::domain(format!("filter {filter} out of range for M = {m}")));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::domain(format!("beta must be positive, got {beta}")));
    }
    if !(cfg.x_step > 0.0) || !(cfg.w_step > 0.0) || !(cfg.w_span > 0.0) || !(cfg.x_cutoff > 0.0) {
        return Err(Error::domain("grid steps, span and cutoff must be positive"));
    }
    let (lo, hi) = bin_bounds(filter, m);
    let scale = 2.0 / (beta * m as f64);
    let window = (lo * scale, hi * scale);
    let a = window.0.max(-cfg.x_cutoff);
    let b = window.1.min(cfg.x_cutoff);
    if b <= a {
        // The window lies entirely in the negligible tails.
        let k = (cfg.w_span / cfg.w_step).ceil() as usize;
        return Ok(DftSpectrum {
            filter,
            window,
            w_step: cfg.w_span / k as f64,
            fine: vec![0.0; k + 1],
            coarse: vec![0.0; k + 1],
            total: 0.0,
            tail_mass: 0.0,
        });
    }

    let (xs, h) = x_grid(a, b, cfg.x_step);
    let nx = xs.len();
    let weights: Vec<f64> = xs
        .iter()
        .enumerate()
        .map(|(j, &x)| if j == 0 || j == nx - 1 { 0.5 } else { 1.0 } * std_normal_pdf(x))
        .collect();
    let coarse_weights: Vec<f64> = xs
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            if j % 2 == 1 {
                0.0
            } else if j == 0 || j == nx - 1 {
                0.5 * std_normal_pdf(x)
            } else {
                std_normal_pdf(x)
            }
        })
        .collect();

    let k_max = (cfg.w_span / cfg.w_step).ceil() as usize;
    let dw = cfg.w_span / k_max as f64;
    let inv_sqrt_pi = 1.0 / PI.sqrt();
    let samples = par::map_range(k_max + 1, |k| {
        let w = k as f64 * dw;
        let step = Complex64::from_polar(1.0, -w * h);
        let mut phase = Complex64::from_polar(1.0, -w * a);
        let (mut f, mut fc) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for j in 0..nx {
            f += weights[j] * phase;
            fc += coarse_weights[j] * phase;
            phase *= step;
            if j % 1024 == 1023 {
                // Re-anchor the rotation to keep round-off from accumulating.
                phase = Complex64::from_polar(1.0, -w * xs[(j + 1).min(nx - 1)]);
            }
        }
        let f = f * h;
        let fc = fc * (2.0 * h);
        (f.norm_sqr() * inv_sqrt_pi, fc.norm_sqr() * inv_sqrt_pi)
    });
    let fine: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let coarse: Vec<f64> = samples.iter().map(|s| s.1).collect();

    let total = 2.0
        * PI.sqrt()
        * h
        * weights
            .iter()
            .zip(&xs)
            .map(|(wt, &x)| wt * std_normal_pdf(x))
            .sum::<f64>();
    let mut spec = DftSpectrum {
        filter,
        window,
        w_step: dw,
        fine,
        coarse,
        total,
        tail_mass: 0.0,
    };
    let inner = 2.0 * spec.half_integral(&spec.fine, 1, cfg.w_span);
    spec.tail_mass = total - inner;
    if spec.tail_mass > cfg.tail_tolerance {
        return Err(Error::NumericFailure {
            context: format!("spectral tail beyond |w| = {} for filter {filter}", cfg.w_span),
            achieved: spec.tail_mass,
            target: cfg.tail_tolerance,
        });
    }
    Ok(spec)
}

impl DftSpectrum {
    pub fn span(&self) -> f64 {
        (self.fine.len() - 1) as f64 * self.w_step
    }

    /// Tabulated `g(w)` with linear interpolation.
    pub fn density(&self, w: f64) -> Option<f64> {
        let u = w.abs() / self.w_step;
        let k = u.floor() as usize;
        if k + 1 >= self.fine.len() {
            return (u <= (self.fine.len() - 1) as f64 + 1e-9).then(|| *self.fine.last().unwrap_or(&0.0));
        }
        let t = u - k as f64;
        Some(self.fine[k] * (1.0 - t) + self.fine[k + 1] * t)
    }

    /// `∫_0^b g` of the piecewise-linear interpolant on every `stride`-th node.
    fn half_integral(&self, values: &[f64], stride: usize, b: f64) -> f64 {
        let step = self.w_step * stride as f64;
        let nodes = (values.len() - 1) / stride;
        let u = (b / step).min(nodes as f64);
        let k = u.floor() as usize;
        let mut sum = 0.0;
        for i in 0..k {
            sum += 0.5 * (values[i * stride] + values[(i + 1) * stride]);
        }
        sum *= step;
        let t = u - k as f64;
        if t > 0.0 && k < nodes {
            let g0 = values[k * stride];
            let g1 = values[(k + 1) * stride];
            sum += step * t * (g0 + 0.5 * t * (g1 - g0));
        }
        sum
    }

    fn signed_integral(&self, values: &[f64], stride: usize, w: f64) -> f64 {
        w.signum() * self.half_integral(values, stride, w.abs())
    }

    /// Mass of `[lo, hi]` and an estimate of its discretization error.
    pub fn bin_mass(&self, lo: f64, hi: f64) -> Result<(f64, f64)> {
        if lo > hi || lo.is_nan() || hi.is_nan() {
            return Err(Error::domain(format!("empty bin [{lo}, {hi}]")));
        }
        let span = self.span();
        if lo.abs() > span * (1.0 + 1e-12) || hi.abs() > span * (1.0 + 1e-12) {
            return Err(Error::domain(format!(
                "bin [{lo}, {hi}] exceeds the tabulated span {span}"
            )));
        }
        let fine = self.signed_integral(&self.fine, 1, hi) - self.signed_integral(&self.fine, 1, lo);
        let coarse = self.signed_integral(&self.coarse, 2, hi) - self.signed_integral(&self.coarse, 2, lo);
        Ok((fine, (fine - coarse).abs() / 3.0))
    }
}

/// Frequency bins between the nodes `±(k + ½)·2/α`, `k = 0..M-2`: every
/// finite bin `p_second_correct` reads from a spectrum.
pub fn inner_bins(m: usize, alpha: f64) -> Vec<(f64, f64)> {
    let s = 2.0 / alpha;
    let mut nodes: Vec<f64> = (0..m.saturating_sub(1))
        .flat_map(|k| {
            let v = (k as f64 + 0.5) * s;
            [-v, v]
        })
        .collect();
    nodes.sort_by(f64::total_cmp);
    nodes.windows(2).map(|w| (w[0], w[1])).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumComparison {
    pub bins_checked: usize,
    /// Largest `|closed form - oracle|` over inner bins.
    pub max_bin_deviation: f64,
    /// Largest `|closed form total - oracle total|`.
    pub max_total_deviation: f64,
    /// Largest `|oracle total - time-filter probability|`.
    pub max_parseval_deviation: f64,
    /// Largest oracle discretization error estimate.
    pub max_error_estimate: f64,
}

/// Checks every filter's closed-form spectrum against the oracle on the
/// inner bins implied by `alpha`.
pub fn compare_spectra(m: usize, beta: f64, alpha: f64, accuracy: f64, cfg: &DftConfig) -> Result<SpectrumComparison> {
    if !(alpha > 0.0) {
        return Err(Error::domain(format!("alpha must be positive, got {alpha}")));
    }
    let bins = inner_bins(m, alpha);
    let needed = bins.last().map_or(0.0, |b| b.1);
    let cfg = DftConfig {
        w_span: cfg.w_span.max(needed),
        ..*cfg
    };
    let mut out = SpectrumComparison {
        bins_checked: 0,
        max_bin_deviation: 0.0,
        max_total_deviation: 0.0,
        max_parseval_deviation: 0.0,
        max_error_estimate: 0.0,
    };
    for f in 0..m {
        let spec = build_spectrum(f, m, beta, accuracy)?;
        let oracle = dft_spectrum_oracle(f, m, beta, &cfg)?;
        let (lo, hi) = bin_bounds(f, m);
        let filter_mass = density_bin_mass(beta * m as f64 / 2.0, 0.0, lo, hi)?;
        out.max_total_deviation = out.max_total_deviation.max((spec.total_mass() - oracle.total).abs());
        out.max_parseval_deviation = out.max_parseval_deviation.max((oracle.total - filter_mass).abs());
        for &(a, b) in &bins {
            let (mass, err) = oracle.bin_mass(a, b)?;
            let exact = spectrum_bin_mass(&spec, a, b)?;
            out.max_bin_deviation = out.max_bin_deviation.max((exact - mass).abs());
            out.max_error_estimate = out.max_error_estimate.max(err);
            out.bins_checked += 1;
        }
    }
    Ok(out)
}
