//! Mutual information, secret capacity, symbol error rate and key rate.
//!
//! All logarithms are base 2. Entries below [`ZERO_THRESHOLD`] are exact zeros
//! for entropy purposes (`0·log 0 = 0`).

use serde::Serialize;

use crate::channel::{eve_matrix, mixed_bob_matrix, ConditionalMatrix, ProtocolParams};
use crate::error::{Error, Result};

pub const ZERO_THRESHOLD: f64 = 1e-300;

/// Secret-capacity figures for one model point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityReport {
    pub i_ab: f64,
    pub i_ae: f64,
    /// Secret bits per photon, `max(I_AB - I_AE, 0)`.
    pub capacity: f64,
    pub qser: f64,
}

pub fn uniform_prior(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

fn check_prior(matrix: &ConditionalMatrix, prior: &[f64]) -> Result<()> {
    if prior.len() != matrix.size() {
        return Err(Error::DimensionMismatch {
            expected: matrix.size(),
            got: prior.len(),
        });
    }
    let sum: f64 = prior.iter().sum();
    if prior.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::domain(format!(
            "prior must be a probability vector (sum = {sum})"
        )));
    }
    Ok(())
}

/// Receiver distribution `P_R = P_{R|S} · P_S`.
pub fn marginal(matrix: &ConditionalMatrix, prior: &[f64]) -> Result<Vec<f64>> {
    check_prior(matrix, prior)?;
    Ok(matrix
        .rows()
        .map(|row| row.iter().zip(prior).map(|(p, q)| p * q).sum())
        .collect())
}

/// `Σ_{s,r} P(r|s) P(s) log₂(P(r|s)/P(r))` over the whole alphabet.
fn full_mutual_info(matrix: &ConditionalMatrix, prior: &[f64]) -> Result<f64> {
    let received = marginal(matrix, prior)?;
    let mut total = 0.0;
    for (r, row) in matrix.rows().enumerate() {
        let pr = received[r];
        for (s, &p) in row.iter().enumerate() {
            if p > ZERO_THRESHOLD && prior[s] > 0.0 {
                total += p * prior[s] * (p / pr).log2();
            }
        }
    }
    Ok(total.max(0.0))
}

/// Mutual information of one basis (M×M matrix, length-M prior).
pub fn mutual_info_single(matrix: &ConditionalMatrix, prior: &[f64]) -> Result<f64> {
    full_mutual_info(matrix, prior)
}

/// Mutual information over both bases (2M×2M matrix) less the one bit that
/// only names the basis.
pub fn mutual_info_dual(matrix: &ConditionalMatrix, prior: &[f64]) -> Result<f64> {
    if !matrix.size().is_multiple_of(2) {
        return Err(Error::domain("dual-basis matrix must have even size"));
    }
    Ok((full_mutual_info(matrix, prior)? - 1.0).max(0.0))
}

pub fn i_ab(params: &ProtocolParams) -> Result<f64> {
    let mixed = mixed_bob_matrix(params)?;
    mutual_info_dual(&mixed, &uniform_prior(2 * params.m))
}

/// `ε ·` (dual mutual information of Eve's matrix); Eve only learns from the
/// photons she intercepts.
pub fn i_ae(params: &ProtocolParams, accuracy: f64) -> Result<f64> {
    if params.epsilon == 0.0 {
        return Ok(0.0);
    }
    Ok(params.epsilon * eve_information(params, accuracy)?)
}

/// Eve's information on an attacked photon (independent of ε).
pub fn eve_information(params: &ProtocolParams, accuracy: f64) -> Result<f64> {
    let eve = eve_matrix(params, accuracy)?;
    mutual_info_dual(&eve, &uniform_prior(2 * params.m))
}

pub fn qser(params: &ProtocolParams) -> Result<f64> {
    let mixed = mixed_bob_matrix(params)?;
    Ok(qser_of(&mixed))
}

/// `1 - trace/n` of a sifted matrix.
pub fn qser_of(matrix: &ConditionalMatrix) -> f64 {
    (1.0 - matrix.trace() / matrix.size() as f64).clamp(0.0, 1.0)
}

pub fn capacity(params: &ProtocolParams, accuracy: f64) -> Result<CapacityReport> {
    let mixed = mixed_bob_matrix(params)?;
    let i_ab = mutual_info_dual(&mixed, &uniform_prior(2 * params.m))?;
    let i_ae = i_ae(params, accuracy)?;
    Ok(CapacityReport {
        i_ab,
        i_ae,
        capacity: (i_ab - i_ae).max(0.0),
        qser: qser_of(&mixed),
    })
}

/// Secret key rate `S = K·C` for sifted symbol rate `K`.
pub fn key_rate(sifted_rate: f64, capacity_bits: f64) -> Result<f64> {
    if !(sifted_rate >= 0.0) || !sifted_rate.is_finite() {
        return Err(Error::domain(format!(
            "sifted rate must be non-negative, got {sifted_rate}"
        )));
    }
    if !(capacity_bits >= 0.0) {
        return Err(Error::domain(format!(
            "capacity must be non-negative, got {capacity_bits}"
        )));
    }
    Ok(sifted_rate * capacity_bits)
}
