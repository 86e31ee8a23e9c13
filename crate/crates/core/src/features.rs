//! Tile coding for continuous states.

use crate::error::{Error, Result};
use crate::numerics::RngStream;

/// A sparse feature vector `x` of length `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseFeatures {
    pub dim: usize,
    pub entries: Vec<(usize, f64)>,
}

impl SparseFeatures {
    pub fn one_hot(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::Index { index, len: dim });
        }
        Ok(SparseFeatures {
            dim,
            entries: vec![(index, 1.0)],
        })
    }

    pub fn dense(values: &[f64]) -> Self {
        SparseFeatures {
            dim: values.len(),
            entries: values.iter().copied().enumerate().collect(),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, v) in &self.entries {
            out[i] += v;
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.to_dense().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, w: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * w[i]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TileCoder {
    bounds: Vec<(f64, f64)>,
    tiles_per_dim: usize,
    tilings: usize,
    /// `offsets[tiling][dim]`, each in `[0, tile width)`.
    offsets: Vec<Vec<f64>>,
    include_bias: bool,
    normalizer: f64,
}

impl TileCoder {
    /// Random offsets per tiling and dimension, uniform in `[0, tile width)`.
    /// Uses a bias feature and normalizes by `tilings + 1`.
    pub fn new(
        bounds: Vec<(f64, f64)>,
        tiles_per_dim: usize,
        tilings: usize,
        rng: &mut RngStream,
    ) -> Result<Self> {
        let widths = Self::check(&bounds, tiles_per_dim, tilings)?;
        let offsets = (0..tilings)
            .map(|_| widths.iter().map(|w| rng.uniform() * w).collect())
            .collect();
        Self::with_offsets(bounds, tiles_per_dim, offsets, true, (tilings + 1) as f64)
    }

    pub fn with_offsets(
        bounds: Vec<(f64, f64)>,
        tiles_per_dim: usize,
        offsets: Vec<Vec<f64>>,
        include_bias: bool,
        normalizer: f64,
    ) -> Result<Self> {
        let tilings = offsets.len();
        let widths = Self::check(&bounds, tiles_per_dim, tilings)?;
        for row in &offsets {
            if row.len() != bounds.len() {
                return Err(Error::Dimension("offset row does not match state dimension".into()));
            }
            if row.iter().zip(&widths).any(|(o, w)| !(*o >= 0.0 && o < w)) {
                return Err(Error::Domain("offsets must lie in [0, tile width)".into()));
            }
        }
        if !(normalizer > 0.0) {
            return Err(Error::Domain(format!("normalizer {normalizer} must be positive")));
        }
        Ok(TileCoder {
            bounds,
            tiles_per_dim,
            tilings,
            offsets,
            include_bias,
            normalizer,
        })
    }

    fn check(bounds: &[(f64, f64)], tiles_per_dim: usize, tilings: usize) -> Result<Vec<f64>> {
        if bounds.is_empty() {
            return Err(Error::Dimension("tile coder needs at least one dimension".into()));
        }
        if tilings == 0 || tiles_per_dim == 0 {
            return Err(Error::Domain("need at least one tiling and one tile".into()));
        }
        bounds
            .iter()
            .map(|&(lo, hi)| {
                if lo.is_finite() && hi.is_finite() && hi > lo {
                    Ok((hi - lo) / tiles_per_dim as f64)
                } else {
                    Err(Error::Domain(format!("invalid bounds [{lo}, {hi}]")))
                }
            })
            .collect()
    }

    pub fn offsets(&self) -> &[Vec<f64>] {
        &self.offsets
    }

    /// Every active entry equals `1 / normalizer`.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn tile_width(&self, dim: usize) -> f64 {
        let (lo, hi) = self.bounds[dim];
        (hi - lo) / self.tiles_per_dim as f64
    }

    fn tiles_per_tiling(&self) -> usize {
        self.tiles_per_dim.pow(self.bounds.len() as u32)
    }

    /// Feature-vector length: `tilings · tiles^dims` plus the bias.
    pub fn len(&self) -> usize {
        self.tilings * self.tiles_per_tiling() + usize::from(self.include_bias)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Active entries in ascending index order: one per tiling, then the
    /// bias. States outside the bounds are clipped first.
    pub fn encode(&self, state: &[f64]) -> Result<SparseFeatures> {
        if state.len() != self.bounds.len() {
            return Err(Error::Dimension(format!(
                "state has {} dimensions, coder expects {}",
                state.len(),
                self.bounds.len()
            )));
        }
        let value = 1.0 / self.normalizer;
        let per_tiling = self.tiles_per_tiling();
        let last = self.tiles_per_dim - 1;
        let mut entries = Vec::with_capacity(self.tilings + 1);
        for (tiling, offsets) in self.offsets.iter().enumerate() {
            let mut index = 0;
            for (d, (&x, &(lo, hi))) in state.iter().zip(&self.bounds).enumerate() {
                let width = (hi - lo) / self.tiles_per_dim as f64;
                let shifted = x.clamp(lo, hi) - lo + offsets[d];
                let tile = ((shifted / width).floor() as usize).min(last);
                index = index * self.tiles_per_dim + tile;
            }
            entries.push((tiling * per_tiling + index, value));
        }
        if self.include_bias {
            entries.push((self.tilings * per_tiling, value));
        }
        Ok(SparseFeatures {
            dim: self.len(),
            entries,
        })
    }
}
