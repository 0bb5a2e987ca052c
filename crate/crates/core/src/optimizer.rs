//! Pulse-width optimization: the capacity surface over (α, β), the overlap
//! functional `U_α(β)` between symbol pulses and the conjugate pulse, and the
//! two-stage search for `(α_opt, β_opt)` at a given `(M, ε)`.
//!
//! All reductions (argmax, argmin) scan in index order with strict
//! comparisons, so ties go to the smaller parameter and results do not depend
//! on how grid points were scheduled.

use serde::Serialize;

use crate::channel::{make_layout, ProtocolParams};
use crate::error::{Error, Result};
use crate::info::{capacity, CapacityReport};
use crate::par;
use crate::pulse::{PulseDensity, DEFAULT_ACCURACY};
use crate::quadrature::{integrate_breaks, QuadConfig};

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Which reading of the overlap functional to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UVariant {
    /// `∫ Σ_s |ρ_sym(t - c(s)) - ρ_conj(t)| dt`
    PerTerm,
    /// `∫ |Σ_s ρ_sym(t - c(s)) - M ρ_conj(t)| dt`
    WholeSum,
}

impl UVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            UVariant::PerTerm => "per-term",
            UVariant::WholeSum => "whole-sum",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// α from the joint capacity maximum, then β from the overlap minimum.
    Staged,
    /// β chosen by the overlap minimum inside every α evaluation.
    Nested,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Staged => "staged",
            Scheme::Nested => "nested",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchBox {
    pub lo: f64,
    pub hi: f64,
}

impl SearchBox {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0) || !(hi > lo) || !hi.is_finite() {
            return Err(Error::domain(format!("search box needs 0 < lo < hi, got [{lo}, {hi}]")));
        }
        Ok(SearchBox { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizerConfig {
    pub alpha_box: SearchBox,
    pub beta_box: SearchBox,
    /// Coarse grid spacing for both axes.
    pub step: f64,
    /// Golden-section tolerance on the optimal widths.
    pub tol: f64,
    /// Absolute accuracy of spectral bin masses.
    pub accuracy: f64,
    pub u_variant: UVariant,
    pub scheme: Scheme,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            alpha_box: SearchBox { lo: 0.05, hi: 1.5 },
            beta_box: SearchBox { lo: 0.05, hi: 1.5 },
            step: 0.05,
            tol: 1e-3,
            accuracy: DEFAULT_ACCURACY,
            u_variant: UVariant::PerTerm,
            scheme: Scheme::Staged,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        SearchBox::new(self.alpha_box.lo, self.alpha_box.hi)?;
        SearchBox::new(self.beta_box.lo, self.beta_box.hi)?;
        if !(self.step > 0.0) || !(self.tol > 0.0) || !(self.accuracy > 0.0) {
            return Err(Error::domain("step, tol and accuracy must be positive"));
        }
        Ok(())
    }
}

/// `lo, lo + step, …` up to `hi`, inclusive when within half a step.
pub fn grid_axis(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !lo.is_finite() || !hi.is_finite() || !(step > 0.0) || hi < lo {
        return Err(Error::domain(format!("invalid range {lo}:{hi}:{step}")));
    }
    let n = ((hi - lo) / step + 0.5).floor() as usize;
    Ok((0..=n).map(|k| lo + k as f64 * step).collect())
}

/// Capacity samples over an (α, β) grid, row-major in α.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGrid {
    pub alpha_axis: Vec<f64>,
    pub beta_axis: Vec<f64>,
    /// Per-point outcome; numeric failures are kept, never zeroed.
    pub cells: Vec<Result<CapacityReport>>,
}

impl SurfaceGrid {
    pub fn report(&self, i: usize, j: usize) -> Option<&CapacityReport> {
        self.cells[i * self.beta_axis.len() + j].as_ref().ok()
    }

    pub fn value(&self, i: usize, j: usize) -> Option<f64> {
        self.report(i, j).map(|r| r.capacity)
    }

    pub fn failures(&self) -> impl Iterator<Item = (f64, f64, &Error)> {
        let nb = self.beta_axis.len();
        self.cells.iter().enumerate().filter_map(move |(k, c)| {
            c.as_ref()
                .err()
                .map(|e| (self.alpha_axis[k / nb], self.beta_axis[k % nb], e))
        })
    }
}

fn check_axis(axis: &[f64], name: &str) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::domain(format!("{name} axis is empty")));
    }
    if axis.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::domain(format!("{name} axis must be positive and finite")));
    }
    if axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain(format!("{name} axis must be strictly increasing")));
    }
    Ok(())
}

pub fn c_surface(m: usize, epsilon: f64, alpha_axis: &[f64], beta_axis: &[f64], accuracy: f64) -> Result<SurfaceGrid> {
    check_axis(alpha_axis, "alpha")?;
    check_axis(beta_axis, "beta")?;
    ProtocolParams::new(m, alpha_axis[0], beta_axis[0], epsilon)?;
    let nb = beta_axis.len();
    let cells = par::map_range(alpha_axis.len() * nb, |k| {
        let params = ProtocolParams::new(m, alpha_axis[k / nb], beta_axis[k % nb], epsilon)?;
        capacity(&params, accuracy)
    });
    Ok(SurfaceGrid {
        alpha_axis: alpha_axis.to_vec(),
        beta_axis: beta_axis.to_vec(),
        cells,
    })
}

/// Overlap functional `U_α(β)` in slot units.
///
/// Symbol pulses have width `α/2` at the centers `c(s)`, the conjugate pulse
/// width `βM/2` at the origin. The integration range covers every pulse to
/// six widths (tail mass below 1e-15).
pub fn u_functional(m: usize, alpha: f64, beta: f64, variant: UVariant, accuracy: f64) -> Result<f64> {
    let params = ProtocolParams::new(m, alpha, beta, 0.0)?;
    let layout = make_layout(m)?;
    let sym_width = params.symbol_width();
    let conj = PulseDensity::new(params.conjugate_width(), 0.0)?;
    let sym = PulseDensity::new(sym_width, 0.0)?;
    let offset = 0.5 * (m as f64 - 1.0);
    let reach = 9.0 * sym_width;

    let edge = (offset + 6.0 * sym_width).max(6.0 * conj.width());
    // Each symbol pulse gets its own segment so narrow peaks are never
    // straddled by a wide interval whose nodes miss them.
    let mut breaks = vec![-edge, edge];
    for &c in layout.centers() {
        breaks.extend([c - 6.0 * sym_width, c, c + 6.0 * sym_width]);
    }
    breaks.extend((-6..=6).map(|k| k as f64 * conj.width()));
    breaks.retain(|x| x.abs() <= edge);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * edge);

    // Symbol pulses farther than nine widths from t contribute < 1e-35 of
    // their peak and are treated as zero.
    let near = |t: f64| -> std::ops::RangeInclusive<usize> {
        let lo = (t - reach + offset).ceil().max(0.0);
        let hi = (t + reach + offset).floor().min(m as f64 - 1.0);
        if hi < lo {
            #[allow(clippy::reversed_empty_ranges)]
            return 1..=0;
        }
        lo as usize..=hi as usize
    };

    let integrand = |t: f64| -> f64 {
        let c = conj.density(t);
        let range = near(t);
        let n_near = range.clone().count();
        match variant {
            UVariant::PerTerm => {
                let close: f64 = range.map(|s| (sym.density(t - layout.centers()[s]) - c).abs()).sum();
                close + (m - n_near) as f64 * c
            }
            UVariant::WholeSum => {
                let total: f64 = range.map(|s| sym.density(t - layout.centers()[s])).sum();
                (total - m as f64 * c).abs()
            }
        }
    };

    let cfg = QuadConfig {
        abs_tol: accuracy,
        rel_tol: 1e-12,
        max_subdivisions: 20_000,
    };
    let est = integrate_breaks(integrand, &breaks, cfg)?;
    if !est.value.is_finite() {
        return Err(Error::NumericFailure {
            context: "overlap functional".into(),
            achieved: f64::INFINITY,
            target: accuracy,
        });
    }
    Ok(est.value.max(0.0))
}

/// Golden-section minimization of `f` on `[a, b]` until the bracket is no
/// wider than `tol`. Returns the best point evaluated; equal values prefer
/// the smaller abscissa.
pub fn golden_section_min<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(b >= a) || !(tol > 0.0) {
        return Err(Error::domain(format!(
            "invalid golden-section bracket [{a}, {b}] tol {tol}"
        )));
    }
    let (mut lo, mut hi) = (a, b);
    let mut c = hi - GOLDEN * (hi - lo);
    let mut d = lo + GOLDEN * (hi - lo);
    let mut fc = finite(f(c)?)?;
    let mut fd = finite(f(d)?)?;
    let mut best = if fd < fc { (d, fd) } else { (c, fc) };
    while hi - lo > tol {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - GOLDEN * (hi - lo);
            fc = finite(f(c)?)?;
            if fc < best.1 || (fc == best.1 && c < best.0) {
                best = (c, fc);
            }
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + GOLDEN * (hi - lo);
            fd = finite(f(d)?)?;
            if fd < best.1 || (fd == best.1 && d < best.0) {
                best = (d, fd);
            }
        }
    }
    Ok(best)
}

fn finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NumericFailure {
            context: "non-finite objective value".into(),
            achieved: f64::INFINITY,
            target: 0.0,
        })
    }
}

/// Index of the smallest value, first occurrence on ties.
fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// Index of the largest value, first occurrence on ties.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Refines a grid optimum at index `i` by golden section on the
/// neighbouring cells, keeping the grid point unless strictly beaten.
fn refine<F>(axis: &[f64], i: usize, grid_value: f64, tol: f64, mut objective: F) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let lo = axis[i.saturating_sub(1)];
    let hi = axis[(i + 1).min(axis.len() - 1)];
    if hi <= lo {
        return Ok((axis[i], grid_value));
    }
    let (x, fx) = golden_section_min(&mut objective, lo, hi, tol)?;
    if fx < grid_value {
        Ok((x, fx))
    } else {
        Ok((axis[i], grid_value))
    }
}

/// Minimizes `f` over `search`: coarse grid with spacing `step`, then golden
/// section around the best grid point down to `tol`.
pub fn grid_golden_min<F>(f: F, search: SearchBox, step: f64, tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let axis = grid_axis(search.lo, search.hi, step)?;
    let values = par::map(&axis, |&x| f(x))
        .into_iter()
        .map(|r| r.and_then(finite))
        .collect::<Result<Vec<_>>>()?;
    let i = argmin(&values);
    refine(&axis, i, values[i], tol, &f)
}

/// β minimizing the overlap functional at fixed α, as `(β_opt, U_min)`.
pub fn minimize_beta(
    m: usize,
    alpha: f64,
    variant: UVariant,
    search: SearchBox,
    step: f64,
    tol: f64,
    accuracy: f64,
) -> Result<(f64, f64)> {
    grid_golden_min(|b| u_functional(m, alpha, b, variant, accuracy), search, step, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub alpha: f64,
    pub beta: f64,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub m: usize,
    pub epsilon: f64,
    pub alpha_opt: f64,
    pub beta_opt: f64,
    /// Capacity at `(alpha_opt, beta_opt)`.
    pub c_opt: f64,
    pub u_min: f64,
    pub report: CapacityReport,
    /// Best capacity found by the α search before β is fixed by the overlap
    /// minimum; never below the best coarse-grid value.
    pub search_capacity: f64,
    pub grid_max: f64,
    pub scheme: Scheme,
    pub u_variant: UVariant,
    #[serde(skip)]
    pub trace: Vec<TracePoint>,
}

pub fn optimize_point(m: usize, epsilon: f64, config: &OptimizerConfig) -> Result<OptimizationResult> {
    config.validate()?;
    ProtocolParams::new(m, config.alpha_box.lo, config.beta_box.lo, epsilon)?;
    let alphas = grid_axis(config.alpha_box.lo, config.alpha_box.hi, config.step)?;
    let cap = |alpha: f64, beta: f64| -> Result<f64> {
        Ok(capacity(&ProtocolParams::new(m, alpha, beta, epsilon)?, config.accuracy)?.capacity)
    };

    let mut trace = Vec::new();
    let (alpha_opt, search_capacity, grid_max) = match config.scheme {
        Scheme::Staged => {
            let betas = grid_axis(config.beta_box.lo, config.beta_box.hi, config.step)?;
            let nb = betas.len();
            let values = par::map_range(alphas.len() * nb, |k| cap(alphas[k / nb], betas[k % nb]))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            trace.extend(values.iter().enumerate().map(|(k, &c)| TracePoint {
                alpha: alphas[k / nb],
                beta: betas[k % nb],
                capacity: c,
            }));
            let row_best: Vec<f64> = values.chunks(nb).map(|row| row[argmax(row)]).collect();
            let i = argmax(&row_best);
            let grid_max = row_best[i];
            if grid_max <= 0.0 {
                (alphas[0], 0.0, 0.0)
            } else {
                let mut refine_trace = Vec::new();
                let (a, neg) = refine(&alphas, i, -grid_max, config.tol, |alpha| {
                    let row = par::map(&betas, |&b| cap(alpha, b))
                        .into_iter()
                        .collect::<Result<Vec<_>>>()?;
                    let j = argmax(&row);
                    refine_trace.push(TracePoint {
                        alpha,
                        beta: betas[j],
                        capacity: row[j],
                    });
                    Ok(-row[j])
                })?;
                trace.extend(refine_trace);
                (a, -neg, grid_max)
            }
        }
        Scheme::Nested => {
            let inner = |alpha: f64| -> Result<(f64, f64)> {
                let (b, _) = minimize_beta(
                    m,
                    alpha,
                    config.u_variant,
                    config.beta_box,
                    config.step,
                    config.tol,
                    config.accuracy,
                )?;
                Ok((b, cap(alpha, b)?))
            };
            let points = par::map(&alphas, |&a| inner(a))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            trace.extend(
                alphas
                    .iter()
                    .zip(&points)
                    .map(|(&alpha, &(beta, capacity))| TracePoint { alpha, beta, capacity }),
            );
            let caps: Vec<f64> = points.iter().map(|p| p.1).collect();
            let i = argmax(&caps);
            let grid_max = caps[i];
            if grid_max <= 0.0 {
                (alphas[0], 0.0, 0.0)
            } else {
                let mut refine_trace = Vec::new();
                let (a, neg) = refine(&alphas, i, -grid_max, config.tol, |alpha| {
                    let (beta, c) = inner(alpha)?;
                    refine_trace.push(TracePoint {
                        alpha,
                        beta,
                        capacity: c,
                    });
                    Ok(-c)
                })?;
                trace.extend(refine_trace);
                (a, -neg, grid_max)
            }
        }
    };

    let (beta_opt, u_min) = minimize_beta(
        m,
        alpha_opt,
        config.u_variant,
        config.beta_box,
        config.step,
        config.tol,
        config.accuracy,
    )?;
    let report = capacity(&ProtocolParams::new(m, alpha_opt, beta_opt, epsilon)?, config.accuracy)?;
    Ok(OptimizationResult {
        m,
        epsilon,
        alpha_opt,
        beta_opt,
        c_opt: report.capacity,
        u_min,
        report,
        search_capacity,
        grid_max,
        scheme: config.scheme,
        u_variant: config.u_variant,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub m: usize,
    pub epsilon: f64,
    pub outcome: Result<OptimizationResult>,
}

/// One optimization per `(M, ε)` pair, M outer and ε inner. Failed points
/// are recorded and the sweep continues.
pub fn sweep(ms: &[usize], epsilons: &[f64], config: &OptimizerConfig) -> Result<Vec<SweepEntry>> {
    if ms.is_empty() || epsilons.is_empty() {
        return Err(Error::domain("sweep needs at least one M and one epsilon"));
    }
    config.validate()?;
    let pairs: Vec<(usize, f64)> = ms.iter().flat_map(|&m| epsilons.iter().map(move |&e| (m, e))).collect();
    Ok(pairs
        .iter()
        .map(|&(m, epsilon)| SweepEntry {
            m,
            epsilon,
            outcome: optimize_point(m, epsilon, config),
        })
        .collect())
}
