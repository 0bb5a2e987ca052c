//! Bin geometry and the conditional-probability matrices of the legitimate
//! receiver, the eavesdropper, and the attack mixture.
//!
//! Indices are 0-based throughout: symbol `i` of a basis sits at
//! `c(i) = i - (M-1)/2` and owns the bin `[i - M/2, i + 1 - M/2]`, with the
//! two outer bins extended to ±∞. In 2M×2M matrices rows and columns
//! `0..M` are the time (PPM) basis and `M..2M` the frequency (FSK) basis.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::pulse::{build_spectrum, density_bin_mass};

/// Point of the model: symbol count, normalized pulse widths and the
/// eavesdropped fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProtocolParams {
    pub m: usize,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
}

impl ProtocolParams {
    pub fn new(m: usize, alpha: f64, beta: f64, epsilon: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::domain(format!("M must be at least 2, got {m}")));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::domain(format!("alpha must be positive and finite, got {alpha}")));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::domain(format!("beta must be positive and finite, got {beta}")));
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::domain(format!("epsilon must lie in [0, 1], got {epsilon}")));
        }
        Ok(ProtocolParams {
            m,
            alpha,
            beta,
            epsilon,
        })
    }

    pub fn with_epsilon(self, epsilon: f64) -> Result<Self> {
        Self::new(self.m, self.alpha, self.beta, epsilon)
    }

    /// Width parameter of a symbol pulse in slot units (`α/2`).
    pub fn symbol_width(&self) -> f64 {
        0.5 * self.alpha
    }

    /// Width parameter of a conjugate pulse in slot units (`βM/2`).
    pub fn conjugate_width(&self) -> f64 {
        0.5 * self.beta * self.m as f64
    }

    /// Raw bits carried by one symbol, `log₂ M` (fractional for non powers of two).
    pub fn bits_per_symbol(&self) -> f64 {
        (self.m as f64).log2()
    }
}

/// Bounds of bin `j` (0-based) for `M` symbols, in slot units.
pub fn bin_bounds(j: usize, m: usize) -> (f64, f64) {
    let half = 0.5 * m as f64;
    let lo = if j == 0 { f64::NEG_INFINITY } else { j as f64 - half };
    let hi = if j + 1 == m {
        f64::INFINITY
    } else {
        (j + 1) as f64 - half
    };
    (lo, hi)
}

/// Symbol centers and bin bounds for one basis.
#[derive(Debug, Clone, PartialEq)]
pub struct BinLayout {
    m: usize,
    centers: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

pub fn make_layout(m: usize) -> Result<BinLayout> {
    if m < 2 {
        return Err(Error::domain(format!("M must be at least 2, got {m}")));
    }
    let centers = (0..m).map(|i| i as f64 - 0.5 * (m as f64 - 1.0)).collect();
    let (lower, upper) = (0..m).map(|j| bin_bounds(j, m)).unzip();
    Ok(BinLayout {
        m,
        centers,
        lower,
        upper,
    })
}

impl BinLayout {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn lower_bounds(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper_bounds(&self) -> &[f64] {
        &self.upper
    }

    /// Bin containing the coordinate `t`; points on a bound go to the upper bin.
    pub fn bin_of(&self, t: f64) -> usize {
        let idx = (t + 0.5 * self.m as f64).floor();
        if idx < 0.0 {
            0
        } else {
            (idx as usize).min(self.m - 1)
        }
    }
}

/// Square matrix of probabilities `P(row received | column sent)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalMatrix {
    n: usize,
    data: Vec<f64>,
}

impl ConditionalMatrix {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                data.push(f(r, c));
            }
        }
        ConditionalMatrix { n, data }
    }

    /// Row-major entries.
    pub fn from_rows(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: data.len(),
            });
        }
        Ok(ConditionalMatrix { n, data })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |r, c| if r == c { 1.0 } else { 0.0 })
    }

    pub fn uniform(n: usize) -> Self {
        Self::from_fn(n, |_, _| 1.0 / n as f64)
    }

    pub fn block_diagonal(top: &ConditionalMatrix, bottom: &ConditionalMatrix) -> Result<Self> {
        if top.n != bottom.n {
            return Err(Error::DimensionMismatch {
                expected: top.n,
                got: bottom.n,
            });
        }
        let m = top.n;
        Ok(Self::from_fn(2 * m, |r, c| match (r < m, c < m) {
            (true, true) => top.get(r, c),
            (false, false) => bottom.get(r - m, c - m),
            _ => 0.0,
        }))
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n + col]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n).map(|r| self.get(r, col)).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.n).map(|c| (0..self.n).map(|r| self.get(r, c)).sum()).collect()
    }

    /// Largest deviation of any column sum from one.
    pub fn stochasticity_error(&self) -> f64 {
        self.column_sums().iter().fold(0.0, |m, s| m.max((s - 1.0).abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Top-left (`upper = true`) or bottom-right diagonal block of a 2M×2M matrix.
    pub fn diagonal_block(&self, upper: bool) -> ConditionalMatrix {
        let m = self.n / 2;
        let off = if upper { 0 } else { m };
        Self::from_fn(m, |r, c| self.get(r + off, c + off))
    }

    pub fn matmul(&self, rhs: &ConditionalMatrix) -> Result<Self> {
        if self.n != rhs.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: rhs.n,
            });
        }
        let n = self.n;
        Ok(Self::from_fn(n, |r, c| {
            (0..n).map(|k| self.get(r, k) * rhs.get(k, c)).sum()
        }))
    }

    /// `a·self + b·other`, entrywise.
    pub fn combine(&self, a: f64, other: &ConditionalMatrix, b: f64) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let data = self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect();
        Ok(ConditionalMatrix { n: self.n, data })
    }
}

/// Receiver in the sender's basis: entry `(r, a)` is the mass of the symbol
/// pulse centered at `c(a)` (width `α/2`) inside bin `r`.
pub fn p_correct(params: &ProtocolParams) -> Result<ConditionalMatrix> {
    let layout = make_layout(params.m)?;
    let width = params.symbol_width();
    let mut out = Vec::with_capacity(params.m * params.m);
    for r in 0..params.m {
        for a in 0..params.m {
            out.push(density_bin_mass(
                width,
                layout.centers[a],
                layout.lower[r],
                layout.upper[r],
            )?);
        }
    }
    ConditionalMatrix::from_rows(params.m, out)
}

/// Receiver in the basis conjugate to the sender's: every column is the
/// centered conjugate pulse (width `βM/2`) binned.
pub fn p_wrong(params: &ProtocolParams) -> Result<ConditionalMatrix> {
    let layout = make_layout(params.m)?;
    let width = params.conjugate_width();
    let column = (0..params.m)
        .map(|r| density_bin_mass(width, 0.0, layout.lower[r], layout.upper[r]))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConditionalMatrix::from_fn(params.m, |r, _| column[r]))
}

/// Eve's frequency outcome after her time filter bank when Alice sent in
/// the frequency basis.
///
/// Entry `(e, a) = Σ_f ∫ g_f` over the frequency bin `e` measured from the
/// symbol center `c(a)`, in units `w = 2(b - c(a))/α`. All bin edges relative
/// to a center are half-integers, so each spectrum's cumulative is only
/// needed at the `M - 1` points `(k + ½)·2/α`. Mirror filters `f` and
/// `M-1-f` have identical (even) spectra and share one evaluation.
pub fn p_second_correct(params: &ProtocolParams, accuracy: f64) -> Result<ConditionalMatrix> {
    let m = params.m;
    let scale = 2.0 / params.alpha;
    let nodes: Vec<f64> = (0..m - 1).map(|k| (k as f64 + 0.5) * scale).collect();

    // Cumulative at w = (j + ½)·scale for signed integer j.
    let distinct = m.div_ceil(2);
    let tables = crate::par::map_range(distinct, |f| -> Result<(f64, Vec<f64>)> {
        let spec = build_spectrum(f, m, params.beta, accuracy / m as f64)?;
        Ok((spec.total_mass(), spec.cumulative_many(&nodes)?))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let cumulative = |table: &(f64, Vec<f64>), j: i64| -> f64 {
        let (total, pos) = table;
        if j >= 0 {
            pos[j as usize]
        } else {
            total - pos[(-j - 1) as usize]
        }
    };

    let mut out = vec![0.0; m * m];
    for e in 0..m {
        for a in 0..m {
            let j_hi = e as i64 - a as i64;
            let j_lo = j_hi - 1;
            let mut sum = 0.0;
            for f in 0..m {
                let table = &tables[f.min(m - 1 - f)];
                let upper = if e + 1 == m { table.0 } else { cumulative(table, j_hi) };
                let lower = if e == 0 { 0.0 } else { cumulative(table, j_lo) };
                sum += (upper - lower).max(0.0);
            }
            out[e * m + a] = sum;
        }
    }
    ConditionalMatrix::from_rows(m, out)
}

/// Bob without an attack: `p_correct` in both basis blocks.
pub fn bob_matrix(params: &ProtocolParams) -> Result<ConditionalMatrix> {
    let pc = p_correct(params)?;
    ConditionalMatrix::block_diagonal(&pc, &pc)
}

/// Eve's sifted outcome, first filtering in time: time block `p_correct`,
/// frequency block `p_second_correct`.
pub fn eve_matrix(params: &ProtocolParams, accuracy: f64) -> Result<ConditionalMatrix> {
    let pc = p_correct(params)?;
    let second = p_second_correct(params, accuracy)?;
    ConditionalMatrix::block_diagonal(&pc, &second)
}

/// One block of Bob's matrix under an intercept/resend attack:
/// `½[(p_correct)² + p_wrong]`, Eve guessing her basis uniformly.
pub fn attack_block(params: &ProtocolParams) -> Result<ConditionalMatrix> {
    attack_block_from(&p_correct(params)?, params)
}

fn attack_block_from(pc: &ConditionalMatrix, params: &ProtocolParams) -> Result<ConditionalMatrix> {
    pc.matmul(pc)?.combine(0.5, &p_wrong(params)?, 0.5)
}

pub fn attack_matrix(params: &ProtocolParams) -> Result<ConditionalMatrix> {
    let block = attack_block(params)?;
    ConditionalMatrix::block_diagonal(&block, &block)
}

/// What Bob sees when a fraction ε of photons is attacked.
pub fn mixed_bob_matrix(params: &ProtocolParams) -> Result<ConditionalMatrix> {
    let eps = params.epsilon;
    let pc = p_correct(params)?;
    let bob = ConditionalMatrix::block_diagonal(&pc, &pc)?;
    if eps == 0.0 {
        return Ok(bob);
    }
    let block = attack_block_from(&pc, params)?;
    bob.combine(1.0 - eps, &ConditionalMatrix::block_diagonal(&block, &block)?, eps)
}
