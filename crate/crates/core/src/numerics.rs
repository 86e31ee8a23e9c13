//! Shared numeric primitives: softmax and its Jacobian, KL divergence,
//! entropy, and seeded random streams.

use nalgebra::DMatrix;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Probabilities below this are treated as exact zeros in support checks.
pub const SUPPORT_EPS: f64 = 1e-300;

const SIMPLEX_TOL: f64 = 1e-12;

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyVector(Vec<f64>);

impl PolicyVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Dimension("policy vector must be non-empty".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::Domain(format!("invalid probability {p}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Domain(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(PolicyVector(probs))
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Dimension("policy vector must be non-empty".into()));
        }
        Ok(PolicyVector(vec![1.0 / k as f64; k]))
    }

    pub fn one_hot(k: usize, index: usize) -> Result<Self> {
        if index >= k {
            return Err(Error::Index { index, len: k });
        }
        let mut probs = vec![0.0; k];
        probs[index] = 1.0;
        Ok(PolicyVector(probs))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(p, r)| p * r).sum()
    }
}

impl std::ops::Index<usize> for PolicyVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Real-valued action preferences.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceVector(Vec<f64>);

impl PreferenceVector {
    pub fn new(prefs: Vec<f64>) -> Result<Self> {
        if prefs.is_empty() {
            return Err(Error::Dimension("preference vector must be non-empty".into()));
        }
        if let Some(p) = prefs.iter().find(|p| !p.is_finite()) {
            return Err(Error::Domain(format!("non-finite preference {p}")));
        }
        Ok(PreferenceVector(prefs))
    }

    pub fn zeros(k: usize) -> Self {
        PreferenceVector(vec![0.0; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Numerically stable `log Σ exp(x)`.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Writes `softmax(prefs)` into `out` without allocating. Uses
/// max-subtraction so preferences of magnitude ~700 do not overflow.
pub fn softmax_into(prefs: &[f64], out: &mut [f64]) {
    debug_assert_eq!(prefs.len(), out.len());
    let max = prefs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, p) in out.iter_mut().zip(prefs) {
        *o = (p - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

pub fn softmax(prefs: &[f64]) -> Result<PolicyVector> {
    if prefs.is_empty() {
        return Err(Error::Dimension("softmax of an empty vector".into()));
    }
    if let Some(p) = prefs.iter().find(|p| !p.is_finite()) {
        return Err(Error::Domain(format!("non-finite preference {p}")));
    }
    let mut out = vec![0.0; prefs.len()];
    softmax_into(prefs, &mut out);
    Ok(PolicyVector(out))
}

/// `log softmax(prefs)`; accurate even where the probabilities underflow.
pub fn log_softmax(prefs: &[f64]) -> Vec<f64> {
    let lse = logsumexp(prefs);
    prefs.iter().map(|p| p - lse).collect()
}

/// `(I − π1ᵀ) diag(π)`: entry `(i, j)` is `∂π_j / ∂θ_i`.
pub fn softmax_jacobian(pi: &PolicyVector) -> DMatrix<f64> {
    let k = pi.len();
    DMatrix::from_fn(k, k, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        (delta - pi[i]) * pi[j]
    })
}

/// `Σ p_i log(p_i / q_i)` with the `0 · log(0/q) = 0` convention.
pub fn kl_divergence(p: &PolicyVector, q: &PolicyVector) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Dimension(format!(
            "kl divergence between lengths {} and {}",
            p.len(),
            q.len()
        )));
    }
    let mut total = 0.0;
    for (i, (&pi, &qi)) in p.as_slice().iter().zip(q.as_slice()).enumerate() {
        if pi <= SUPPORT_EPS {
            continue;
        }
        if qi <= SUPPORT_EPS {
            return Err(Error::Domain(format!(
                "p is not absolutely continuous w.r.t. q at index {i}"
            )));
        }
        total += pi * (pi / qi).ln();
    }
    Ok(total.max(0.0))
}

/// KL divergence from `p` to the softmax of `prefs`, evaluated in log space
/// so that saturated policies give finite, monotone values.
pub fn kl_to_softmax(p: &PolicyVector, prefs: &[f64]) -> Result<f64> {
    if p.len() != prefs.len() {
        return Err(Error::Dimension(format!(
            "kl divergence between lengths {} and {}",
            p.len(),
            prefs.len()
        )));
    }
    let log_q = log_softmax(prefs);
    Ok(p.as_slice()
        .iter()
        .zip(&log_q)
        .filter(|(pi, _)| **pi > SUPPORT_EPS)
        .map(|(pi, lq)| pi * (pi.ln() - lq))
        .sum())
}

pub fn entropy(pi: &PolicyVector) -> f64 {
    entropy_of(pi.as_slice())
}

pub(crate) fn entropy_of(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|p| **p > 0.0)
        .map(|p| p * p.ln())
        .sum::<f64>()
}

/// A reproducible random stream identified by `(seed, stream id)`.
///
/// Distinct stream ids under one seed are independent ChaCha streams, so a
/// run can split its randomness by purpose (environment noise, action
/// sampling, gradient noise) without one consumer shifting another's draws.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngStream { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Another stream under the same seed.
    pub fn sibling(&self, stream: u64) -> Self {
        RngStream::new(self.seed, stream)
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Linear-scan inverse-CDF sampling.
pub fn sample_categorical(pi: &PolicyVector, rng: &mut RngStream) -> usize {
    sample_index(pi.as_slice(), rng)
}

pub(crate) fn sample_index(probs: &[f64], rng: &mut RngStream) -> usize {
    let u = rng.uniform();
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            cumulative += p;
            last_positive = i;
            if u < cumulative {
                return i;
            }
        }
    }
    // u landed in the rounding gap above the final cumulative sum
    last_positive
}

pub fn sample_gaussian(mean: f64, std: f64, rng: &mut RngStream) -> Result<f64> {
    if std < 0.0 || std.is_nan() {
        return Err(Error::Domain(format!("negative standard deviation {std}")));
    }
    if std == 0.0 {
        return Ok(mean);
    }
    Ok(mean + std * rng.standard_normal())
}
