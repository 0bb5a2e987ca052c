//! Photon-by-photon simulation of Alice, an intercept/resend Eve and Bob.
//!
//! A pulse of width parameter `σ` has density `exp(-z²/σ²)/(σ√π)`, which is a
//! normal density with standard deviation `σ/√2`; measured positions are
//! drawn from exactly that normal and then binned.
//!
//! Photons are split into fixed chunks, each with its own ChaCha stream
//! derived from the seed and chunk index, so counts do not depend on the
//! number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::{make_layout, BinLayout, ConditionalMatrix, ProtocolParams};
use crate::error::{Error, Result};
use crate::par;

const CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub photons: u64,
    pub seed: u64,
    pub params: ProtocolParams,
}

impl McConfig {
    pub fn new(photons: u64, seed: u64, params: ProtocolParams) -> Result<Self> {
        if photons == 0 {
            return Err(Error::domain("at least one photon is required"));
        }
        Ok(McConfig { photons, seed, params })
    }
}

/// Sifted outcome counts. Index `[bob * 2M + alice]`, time basis first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalMatrix {
    m: usize,
    counts: Vec<u64>,
    column_totals: Vec<u64>,
}

impl EmpiricalMatrix {
    pub fn from_counts(m: usize, counts: Vec<u64>) -> Result<Self> {
        let n = 2 * m;
        if counts.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: counts.len(),
            });
        }
        let column_totals = (0..n).map(|c| (0..n).map(|r| counts[r * n + c]).sum()).collect();
        Ok(EmpiricalMatrix {
            m,
            counts,
            column_totals,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn size(&self) -> usize {
        2 * self.m
    }

    pub fn count(&self, row: usize, col: usize) -> u64 {
        self.counts[row * self.size() + col]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn column_totals(&self) -> &[u64] {
        &self.column_totals
    }

    pub fn photons(&self) -> u64 {
        self.column_totals.iter().sum()
    }

    /// Column-normalized frequencies; empty columns stay all-zero.
    pub fn normalized(&self) -> ConditionalMatrix {
        ConditionalMatrix::from_fn(self.size(), |r, c| {
            let n = self.column_totals[c];
            if n == 0 {
                0.0
            } else {
                self.count(r, c) as f64 / n as f64
            }
        })
    }
}

struct Sampler {
    layout: BinLayout,
    symbol_sd: f64,
    conjugate_sd: f64,
    epsilon: f64,
}

impl Sampler {
    fn new(params: &ProtocolParams) -> Result<Self> {
        Ok(Sampler {
            layout: make_layout(params.m)?,
            symbol_sd: params.symbol_width() * std::f64::consts::FRAC_1_SQRT_2,
            conjugate_sd: params.conjugate_width() * std::f64::consts::FRAC_1_SQRT_2,
            epsilon: params.epsilon,
        })
    }

    fn symbol(&self, rng: &mut ChaCha8Rng, symbol: usize) -> usize {
        let z: f64 = rng.sample(StandardNormal);
        self.layout.bin_of(self.layout.centers()[symbol] + self.symbol_sd * z)
    }

    fn conjugate(&self, rng: &mut ChaCha8Rng) -> usize {
        let z: f64 = rng.sample(StandardNormal);
        self.layout.bin_of(self.conjugate_sd * z)
    }

    /// Bob's symbol for one photon sent by Alice as `symbol`. Bases are
    /// relative: Bob always measures in Alice's basis.
    fn photon(&self, rng: &mut ChaCha8Rng, symbol: usize) -> usize {
        if rng.random::<f64>() < self.epsilon {
            if rng.random::<bool>() {
                // Eve guessed Alice's basis: resend the symbol she measured.
                let eve = self.symbol(rng, symbol);
                self.symbol(rng, eve)
            } else {
                // Eve sees the conjugate pulse; her resent symbol pulse is
                // again a conjugate pulse in Alice's basis.
                let _eve = self.conjugate(rng);
                self.conjugate(rng)
            }
        } else {
            self.symbol(rng, symbol)
        }
    }
}

pub fn run_mc(config: &McConfig) -> Result<EmpiricalMatrix> {
    if config.photons == 0 {
        return Err(Error::domain("at least one photon is required"));
    }
    let sampler = Sampler::new(&config.params)?;
    let m = config.params.m;
    let n = 2 * m;
    let chunks = config.photons.div_ceil(CHUNK);

    let partial = par::map_range(chunks as usize, |chunk| {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(chunk as u64);
        let size = CHUNK.min(config.photons - chunk as u64 * CHUNK);
        let mut counts = vec![0u64; n * n];
        for _ in 0..size {
            let basis = rng.random_range(0..2usize);
            let alice = rng.random_range(0..m);
            let bob = sampler.photon(&mut rng, alice);
            counts[(basis * m + bob) * n + basis * m + alice] += 1;
        }
        counts
    });

    let mut counts = vec![0u64; n * n];
    for chunk in partial {
        for (total, c) in counts.iter_mut().zip(chunk) {
            *total += c;
        }
    }
    EmpiricalMatrix::from_counts(m, counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(m: usize, alpha: f64, beta: f64, eps: f64) -> ProtocolParams {
        ProtocolParams::new(m, alpha, beta, eps).unwrap()
    }

    #[test]
    fn sampling_widths_match_density_moments() {
        // ρ_σ has variance σ²/2.
        let p = params(2, 1.0, 0.7, 0.0);
        let sampler = Sampler::new(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 200_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let z: f64 = rng.sample(StandardNormal);
            let t = sampler.conjugate_sd * z;
            s1 += t;
            s2 += t * t;
        }
        let var = s2 / n as f64 - (s1 / n as f64).powi(2);
        let want = p.conjugate_width().powi(2) / 2.0;
        assert!((var / want - 1.0).abs() < 0.01, "{var} vs {want}");
        assert!((sampler.symbol_sd.powi(2) - p.symbol_width().powi(2) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn narrow_pulses_without_eve_give_identity_counts() {
        let cfg = McConfig::new(10_000, 3, params(4, 1e-4, 0.7, 0.0)).unwrap();
        let emp = run_mc(&cfg).unwrap();
        assert_eq!(emp.photons(), 10_000);
        for r in 0..8 {
            for c in 0..8 {
                if r != c {
                    assert_eq!(emp.count(r, c), 0);
                }
            }
        }
    }

    #[test]
    fn same_seed_same_counts() {
        let cfg = McConfig::new(150_000, 42, params(4, 0.5, 0.7, 0.5)).unwrap();
        assert_eq!(run_mc(&cfg).unwrap(), run_mc(&cfg).unwrap());
        let other = McConfig { seed: 43, ..cfg };
        assert_ne!(run_mc(&cfg).unwrap(), run_mc(&other).unwrap());
    }

    #[test]
    fn off_basis_blocks_stay_empty() {
        let emp = run_mc(&McConfig::new(50_000, 1, params(3, 0.8, 0.9, 1.0)).unwrap()).unwrap();
        for r in 0..3 {
            for c in 3..6 {
                assert_eq!(emp.count(r, c), 0);
                assert_eq!(emp.count(c, r), 0);
            }
        }
        let norm = emp.normalized();
        assert!(norm.stochasticity_error() < 1e-12);
    }

    #[test]
    fn rejects_zero_photons() {
        assert!(McConfig::new(0, 1, params(2, 0.5, 0.7, 0.0)).is_err());
        assert!(EmpiricalMatrix::from_counts(2, vec![0; 15]).is_err());
    }
}
