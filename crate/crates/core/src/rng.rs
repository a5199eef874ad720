//! Reproducible random generation.
//!
//! Every random draw in the crate goes through an [`RngState`], a `(seed, stream)`
//! pair feeding a ChaCha8 generator. ChaCha is counter based and its output is
//! specified bit-for-bit, so identical states give identical sequences on every
//! platform. Independent purposes (the two Gaussian factors, the support, the
//! signs, each trial of an experiment) draw from distinct streams obtained with
//! [`RngState::substream`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{PcpError, Result};
use crate::matrix::{DenseMatrix, SupportMask};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngState {
    pub seed: u64,
    pub stream: u64,
}

impl RngState {
    pub const fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub const fn with_stream(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// A child state for an independent purpose. Deterministic in `(self, purpose)`.
    pub fn substream(&self, purpose: u64) -> RngState {
        RngState {
            seed: self.seed,
            stream: mix64(self.stream ^ mix64(purpose.wrapping_add(0x9e37_79b9_7f4a_7c15))),
        }
    }

    pub fn generator(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// SplitMix64 finalizer. Used for stream derivation and trial seeds, where a
/// stable, platform-independent hash is required.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// I.i.d. `N(0, stddev^2)` entries.
pub fn gen_gaussian(rng: RngState, rows: usize, cols: usize, stddev: f64) -> Result<DenseMatrix> {
    if !(stddev > 0.0 && stddev.is_finite()) {
        return Err(PcpError::InvalidArgument(format!(
            "stddev must be positive, got {stddev}"
        )));
    }
    let normal = Normal::new(0.0, stddev).map_err(|e| PcpError::InvalidArgument(e.to_string()))?;
    let mut g = rng.generator();
    let data = (0..rows * cols).map(|_| normal.sample(&mut g)).collect();
    DenseMatrix::from_vec(rows, cols, data)
}

/// Standard normal vector, used for generic start vectors.
pub(crate) fn standard_normal_vec(rng: RngState, len: usize) -> Vec<f64> {
    let mut g = rng.generator();
    (0..len).map(|_| StandardNormal.sample(&mut g)).collect()
}

/// Each position included independently with probability `rho`.
pub fn gen_bernoulli_mask(rng: RngState, rows: usize, cols: usize, rho: f64) -> Result<SupportMask> {
    check_probability("rho", rho)?;
    let mut g = rng.generator();
    let flags: Vec<bool> = (0..rows * cols).map(|_| g.random::<f64>() < rho).collect();
    Ok(SupportMask::from_flags(rows, cols, &flags))
}

/// Exactly `count` positions, uniformly among all subsets of that size.
pub fn gen_fixed_count_mask(
    rng: RngState,
    rows: usize,
    cols: usize,
    count: usize,
) -> Result<SupportMask> {
    let total = rows * cols;
    if count > total {
        return Err(PcpError::InvalidArgument(format!(
            "cannot choose {count} of {total} positions"
        )));
    }
    let mut g = rng.generator();
    let picked = rand::seq::index::sample(&mut g, total, count);
    let mut flags = vec![false; total];
    for idx in picked {
        flags[idx] = true;
    }
    Ok(SupportMask::from_flags(rows, cols, &flags))
}

/// A matrix of independent symmetric `+-1` values on `mask`, zero elsewhere.
pub fn gen_signs_on(rng: RngState, mask: &SupportMask) -> DenseMatrix {
    let mut g = rng.generator();
    let mut s = DenseMatrix::zeros(mask.rows(), mask.cols());
    for &(i, j) in mask.entries() {
        s[(i, j)] = if g.random::<bool>() { 1.0 } else { -1.0 };
    }
    s
}

/// Keeps each position of `mask` independently with probability `p`.
pub fn thin_mask(rng: RngState, mask: &SupportMask, p: f64) -> Result<SupportMask> {
    check_probability("p", p)?;
    let mut g = rng.generator();
    let kept = mask
        .entries()
        .iter()
        .copied()
        .filter(|_| g.random::<f64>() < p)
        .collect();
    SupportMask::new(mask.rows(), mask.cols(), kept)
}

/// Keeps exactly `count` positions of `mask`, chosen uniformly.
pub fn subsample_mask(rng: RngState, mask: &SupportMask, count: usize) -> Result<SupportMask> {
    if count > mask.len() {
        return Err(PcpError::InvalidArgument(format!(
            "cannot keep {count} of {} positions",
            mask.len()
        )));
    }
    let mut g = rng.generator();
    let picked = rand::seq::index::sample(&mut g, mask.len(), count);
    let kept = picked.into_iter().map(|k| mask.entries()[k]).collect();
    SupportMask::new(mask.rows(), mask.cols(), kept)
}

pub(crate) fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(PcpError::InvalidArgument(format!(
            "{name} must lie in [0, 1], got {p}"
        )))
    }
}
