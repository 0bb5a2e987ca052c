//! Statistical agreement between sampled counts and an analytic matrix.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::mc::EmpiricalMatrix;
use crate::channel::ConditionalMatrix;
use crate::error::{Error, Result};

pub const MAX_ABS_Z: f64 = 4.0;
pub const MIN_P_VALUE: f64 = 1e-3;
/// Below this many photons in some column the test has little power.
pub const LOW_POWER_COLUMN_COUNT: u64 = 1000;
const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnChiSquare {
    pub column: usize,
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    /// Row-major z-scores `(p̂ - p)/√(p(1-p)/n)`.
    pub z: Vec<f64>,
    pub max_abs_z: f64,
    pub chi_square: Vec<ColumnChiSquare>,
    pub min_p_value: f64,
    pub zero_count_columns: Vec<usize>,
    pub low_power: bool,
    pub pass: bool,
}

fn z_score(observed: u64, n: u64, p: f64) -> f64 {
    let p_hat = observed as f64 / n as f64;
    let var = p * (1.0 - p);
    if var <= 0.0 {
        if (p_hat - p).abs() < 1e-15 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (p_hat - p) / (var / n as f64).sqrt()
    }
}

/// Pearson chi-square on one column, pooling sparse cells.
fn column_chi_square(observed: &[u64], expected_p: &[f64], n: u64) -> (f64, usize, f64) {
    let n = n as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut pool_o, mut pool_e) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(expected_p) {
        let e = n * p;
        if e < MIN_EXPECTED {
            pool_o += o as f64;
            pool_e += e;
        } else {
            cells.push((o as f64, e));
        }
    }
    if pool_e <= 0.0 {
        if pool_o > 0.0 {
            // Counts where the model allows none.
            return (f64::INFINITY, cells.len().max(1), 0.0);
        }
    } else if pool_e < MIN_EXPECTED && !cells.is_empty() {
        let k = (0..cells.len())
            .min_by(|&a, &b| cells[a].1.total_cmp(&cells[b].1))
            .unwrap_or(0);
        cells[k].0 += pool_o;
        cells[k].1 += pool_e;
    } else {
        cells.push((pool_o, pool_e));
    }
    if cells.len() < 2 {
        return (0.0, 0, 1.0);
    }
    let stat: f64 = cells.iter().map(|&(o, e)| (o - e).powi(2) / e).sum();
    let dof = cells.len() - 1;
    let p = match ChiSquared::new(dof as f64) {
        Ok(dist) => dist.sf(stat),
        Err(_) => 0.0,
    };
    (stat, dof, p)
}

pub fn compare_empirical(emp: &EmpiricalMatrix, analytic: &ConditionalMatrix) -> Result<Comparison> {
    let n = emp.size();
    if analytic.size() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: analytic.size(),
        });
    }
    let totals = emp.column_totals();
    let mut z = vec![0.0; n * n];
    let mut chi_square = Vec::with_capacity(n);
    let mut zero_count_columns = Vec::new();
    for c in 0..n {
        if totals[c] == 0 {
            zero_count_columns.push(c);
            continue;
        }
        let observed: Vec<u64> = (0..n).map(|r| emp.count(r, c)).collect();
        let expected = analytic.column(c);
        for r in 0..n {
            z[r * n + c] = z_score(observed[r], totals[c], expected[r]);
        }
        let (statistic, dof, p_value) = column_chi_square(&observed, &expected, totals[c]);
        chi_square.push(ColumnChiSquare {
            column: c,
            statistic,
            dof,
            p_value,
        });
    }
    let max_abs_z = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min_p_value = chi_square.iter().fold(1.0f64, |m, c| m.min(c.p_value));
    let low_power = totals.iter().any(|&t| t < LOW_POWER_COLUMN_COUNT);
    let pass = zero_count_columns.is_empty() && max_abs_z <= MAX_ABS_Z && min_p_value >= MIN_P_VALUE;
    Ok(Comparison {
        z,
        max_abs_z,
        chi_square,
        min_p_value,
        zero_count_columns,
        low_power,
        pass,
    })
}
