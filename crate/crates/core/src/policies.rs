//! Policy parameterizations over linear preferences `θ(s) = Wᵀx(s)`.
//!
//! Every gradient with respect to `W` here has the rank-one form `x cᵀ`, so
//! it is returned as a [`WeightGrad`] and only expanded to a dense matrix on
//! request.

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::features::SparseFeatures;
use crate::numerics::{entropy_of, softmax_into, PolicyVector};

/// Weight matrix `W` (features × actions), row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    d: usize,
    k: usize,
    data: Vec<f64>,
}

impl Weights {
    pub fn zeros(d: usize, k: usize) -> Self {
        Weights {
            d,
            k,
            data: vec![0.0; d * k],
        }
    }

    pub fn n_features(&self) -> usize {
        self.d
    }

    pub fn n_actions(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, a: usize) -> f64 {
        self.data[i * self.k + a]
    }

    pub fn set(&mut self, i: usize, a: usize, v: f64) {
        self.data[i * self.k + a] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.k..(i + 1) * self.k]
    }

    pub fn set_row(&mut self, i: usize, values: &[f64]) -> Result<()> {
        if i >= self.d {
            return Err(Error::Index { index: i, len: self.d });
        }
        if values.len() != self.k {
            return Err(Error::Dimension(format!(
                "row of length {} for {} actions",
                values.len(),
                self.k
            )));
        }
        self.data[i * self.k..(i + 1) * self.k].copy_from_slice(values);
        Ok(())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `θ = Wᵀx`.
    pub fn preferences(&self, x: &SparseFeatures) -> Vec<f64> {
        let mut theta = vec![0.0; self.k];
        self.preferences_into(x, &mut theta);
        theta
    }

    pub fn preferences_into(&self, x: &SparseFeatures, theta: &mut [f64]) {
        theta.iter_mut().for_each(|t| *t = 0.0);
        for &(i, v) in &x.entries {
            for (t, w) in theta.iter_mut().zip(self.row(i)) {
                *t += v * w;
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.d, self.k, &self.data)
    }

    /// Writes `feature,action,weight` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["feature", "action", "weight"])?;
        for i in 0..self.d {
            for a in 0..self.k {
                w.write_record([i.to_string(), a.to_string(), self.get(i, a).to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io("<weights>", e))?;
        Ok(())
    }
}

/// The rank-one gradient `x cᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightGrad {
    pub x: SparseFeatures,
    pub coef: Vec<f64>,
}

impl WeightGrad {
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.x.dim, self.coef.len());
        for &(i, v) in &self.x.entries {
            for (a, c) in self.coef.iter().enumerate() {
                m[(i, a)] += v * c;
            }
        }
        m
    }

    /// `W += scale · x cᵀ`.
    pub fn add_scaled_to(&self, w: &mut Weights, scale: f64) {
        for &(i, v) in &self.x.entries {
            let row = &mut w.data[i * w.k..(i + 1) * w.k];
            for (wa, c) in row.iter_mut().zip(&self.coef) {
                *wa += scale * v * c;
            }
        }
    }
}

pub trait Policy: Send {
    fn weights(&self) -> &Weights;
    fn weights_mut(&mut self) -> &mut Weights;

    fn n_actions(&self) -> usize {
        self.weights().n_actions()
    }

    fn preferences(&self, x: &SparseFeatures) -> Vec<f64> {
        self.weights().preferences(x)
    }

    fn action_distribution(&self, x: &SparseFeatures) -> Result<PolicyVector>;

    /// `∇_W log π(a|s)`.
    fn logpi_grad(&self, x: &SparseFeatures, a: usize) -> Result<WeightGrad>;

    /// `∇_W θ_a(s) = x e_aᵀ`: the alternate estimator's direction.
    fn pref_grad(&self, x: &SparseFeatures, a: usize) -> Result<WeightGrad> {
        let k = self.n_actions();
        if a >= k {
            return Err(Error::Index { index: a, len: k });
        }
        let mut coef = vec![0.0; k];
        coef[a] = 1.0;
        Ok(WeightGrad { x: x.clone(), coef })
    }

    /// `∇_W H(π(·|s))`.
    fn entropy_grad(&self, x: &SparseFeatures) -> Result<WeightGrad>;
}

fn check_action(a: usize, k: usize) -> Result<()> {
    if a >= k {
        return Err(Error::Index { index: a, len: k });
    }
    Ok(())
}

fn check_features(x: &SparseFeatures, w: &Weights) -> Result<()> {
    if x.dim != w.n_features() {
        return Err(Error::Dimension(format!(
            "{} features for a policy over {}",
            x.dim,
            w.n_features()
        )));
    }
    Ok(())
}

/// Softmax over linear preferences.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSoftmaxPolicy {
    w: Weights,
}

impl LinearSoftmaxPolicy {
    pub fn new(n_features: usize, n_actions: usize) -> Self {
        LinearSoftmaxPolicy {
            w: Weights::zeros(n_features, n_actions),
        }
    }

    pub fn from_weights(w: Weights) -> Self {
        LinearSoftmaxPolicy { w }
    }

    fn probs(&self, x: &SparseFeatures) -> Result<Vec<f64>> {
        check_features(x, &self.w)?;
        let theta = self.w.preferences(x);
        let mut pi = vec![0.0; theta.len()];
        softmax_into(&theta, &mut pi);
        Ok(pi)
    }
}

impl Policy for LinearSoftmaxPolicy {
    fn weights(&self) -> &Weights {
        &self.w
    }

    fn weights_mut(&mut self) -> &mut Weights {
        &mut self.w
    }

    fn action_distribution(&self, x: &SparseFeatures) -> Result<PolicyVector> {
        PolicyVector::new(self.probs(x)?)
    }

    /// `x (e_a − π)ᵀ`.
    fn logpi_grad(&self, x: &SparseFeatures, a: usize) -> Result<WeightGrad> {
        check_action(a, self.n_actions())?;
        let mut coef = self.probs(x)?;
        coef.iter_mut().for_each(|c| *c = -*c);
        coef[a] += 1.0;
        Ok(WeightGrad { x: x.clone(), coef })
    }

    /// `−x (π ⊙ log π + H π)ᵀ`.
    fn entropy_grad(&self, x: &SparseFeatures) -> Result<WeightGrad> {
        let pi = self.probs(x)?;
        let h = entropy_of(&pi);
        let coef = pi
            .iter()
            .map(|&p| if p > 0.0 { -(p * p.ln() + h * p) } else { 0.0 })
            .collect();
        Ok(WeightGrad { x: x.clone(), coef })
    }
}

/// Tabular softmax: a linear policy over one-hot state features.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularSoftmaxPolicy {
    inner: LinearSoftmaxPolicy,
}

impl TabularSoftmaxPolicy {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        TabularSoftmaxPolicy {
            inner: LinearSoftmaxPolicy::new(n_states, n_actions),
        }
    }

    /// Every state starts with preferences `init`.
    pub fn with_preferences(n_states: usize, init: &[f64]) -> Self {
        let mut p = Self::new(n_states, init.len());
        for s in 0..n_states {
            p.inner.w.set_row(s, init).expect("row length matches");
        }
        p
    }

    pub fn n_states(&self) -> usize {
        self.inner.w.n_features()
    }

    pub fn features(&self, s: usize) -> Result<SparseFeatures> {
        SparseFeatures::one_hot(self.n_states(), s)
    }

    pub fn theta(&self, s: usize) -> &[f64] {
        self.inner.w.row(s)
    }

    /// `θ[s][a]` as nested rows.
    pub fn table(&self) -> Vec<Vec<f64>> {
        (0..self.n_states()).map(|s| self.theta(s).to_vec()).collect()
    }

    pub fn distributions(&self) -> Result<Vec<PolicyVector>> {
        (0..self.n_states())
            .map(|s| crate::numerics::softmax(self.theta(s)))
            .collect()
    }
}

impl Policy for TabularSoftmaxPolicy {
    fn weights(&self) -> &Weights {
        &self.inner.w
    }

    fn weights_mut(&mut self) -> &mut Weights {
        &mut self.inner.w
    }

    fn action_distribution(&self, x: &SparseFeatures) -> Result<PolicyVector> {
        self.inner.action_distribution(x)
    }

    fn logpi_grad(&self, x: &SparseFeatures, a: usize) -> Result<WeightGrad> {
        self.inner.logpi_grad(x, a)
    }

    fn entropy_grad(&self, x: &SparseFeatures) -> Result<WeightGrad> {
        self.inner.entropy_grad(x)
    }
}

/// Escort transform `π(a|s) ∝ |θ_a(s)|^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct EscortPolicy {
    w: Weights,
    p: f64,
}

impl EscortPolicy {
    pub fn new(n_features: usize, n_actions: usize, p: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::Domain(format!("escort power {p} must be ≥ 1")));
        }
        Ok(EscortPolicy {
            w: Weights::zeros(n_features, n_actions),
            p,
        })
    }

    /// Sets the bias row so every state starts at `θ(s) = 1`, given that the
    /// bias feature has value `1/normalizer`.
    pub fn with_unit_preferences(mut self, bias_index: usize, normalizer: f64) -> Result<Self> {
        let row = vec![normalizer; self.w.n_actions()];
        self.w.set_row(bias_index, &row)?;
        Ok(self)
    }

    pub fn power(&self) -> f64 {
        self.p
    }

    fn probs_from(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let scale = theta.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        if scale == 0.0 {
            return Err(Error::DegeneratePreference);
        }
        let mut pi: Vec<f64> = theta.iter().map(|t| (t.abs() / scale).powf(self.p)).collect();
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|v| *v /= total);
        Ok(pi)
    }
}

impl Policy for EscortPolicy {
    fn weights(&self) -> &Weights {
        &self.w
    }

    fn weights_mut(&mut self) -> &mut Weights {
        &mut self.w
    }

    fn action_distribution(&self, x: &SparseFeatures) -> Result<PolicyVector> {
        check_features(x, &self.w)?;
        PolicyVector::new(self.probs_from(&self.w.preferences(x))?)
    }

    /// `p x [e_a/θ_a − sgn(θ) ⊙ |θ|^{p−1} / Σ|θ|^p]ᵀ`.
    fn logpi_grad(&self, x: &SparseFeatures, a: usize) -> Result<WeightGrad> {
        check_action(a, self.n_actions())?;
        check_features(x, &self.w)?;
        let theta = self.w.preferences(x);
        let pi = self.probs_from(&theta)?;
        if theta[a] == 0.0 {
            return Err(Error::SingularGradient(a));
        }
        // sgn(θ_j)|θ_j|^{p−1}/Σ|θ|^p = π_j/θ_j, and 0 where θ_j = 0.
        let mut coef: Vec<f64> = theta
            .iter()
            .zip(&pi)
            .map(|(&t, &q)| if t == 0.0 { 0.0 } else { -self.p * q / t })
            .collect();
        coef[a] += self.p / theta[a];
        Ok(WeightGrad { x: x.clone(), coef })
    }

    fn entropy_grad(&self, _x: &SparseFeatures) -> Result<WeightGrad> {
        Err(Error::Unsupported("entropy gradient is defined for softmax policies only".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn tabular_uniform() {
        let p = TabularSoftmaxPolicy::new(3, 2);
        let pi = p.action_distribution(&p.features(1).unwrap()).unwrap();
        assert_eq!(pi.as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn escort_distributions() {
        let mut e = EscortPolicy::new(1, 3, 1.0).unwrap();
        e.weights_mut().set_row(0, &[1.0, 1.0, 1.0]).unwrap();
        let x = SparseFeatures::one_hot(1, 0).unwrap();
        for &p in e.action_distribution(&x).unwrap().as_slice() {
            assert_abs_diff_eq!(p, 1.0 / 3.0, epsilon = 1e-15);
        }
        let mut e = EscortPolicy::new(1, 2, 2.0).unwrap();
        e.weights_mut().set_row(0, &[1.0, 2.0]).unwrap();
        let pi = e.action_distribution(&x).unwrap();
        assert_abs_diff_eq!(pi[0], 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(pi[1], 0.8, epsilon = 1e-15);
    }

    #[test]
    fn escort_errors() {
        let e = EscortPolicy::new(1, 2, 2.0).unwrap();
        let x = SparseFeatures::one_hot(1, 0).unwrap();
        assert!(matches!(e.action_distribution(&x), Err(Error::DegeneratePreference)));
        let mut e = e;
        e.weights_mut().set_row(0, &[0.0, 1.0]).unwrap();
        assert!(matches!(e.logpi_grad(&x, 0), Err(Error::SingularGradient(0))));
        assert!(e.logpi_grad(&x, 1).is_ok());
        assert!(EscortPolicy::new(1, 2, 0.5).is_err());
    }

    #[test]
    fn escort_unit_init() {
        let e = EscortPolicy::new(129, 3, 2.0)
            .unwrap()
            .with_unit_preferences(128, 9.0)
            .unwrap();
        let x = SparseFeatures {
            dim: 129,
            entries: vec![(5, 1.0 / 9.0), (128, 1.0 / 9.0)],
        };
        for t in e.preferences(&x) {
            assert_abs_diff_eq!(t, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn escort_p1_closed_form() {
        let mut e = EscortPolicy::new(1, 3, 1.0).unwrap();
        e.weights_mut().set_row(0, &[0.5, 1.5, 2.0]).unwrap();
        let x = SparseFeatures::one_hot(1, 0).unwrap();
        let g = e.logpi_grad(&x, 1).unwrap().coef;
        let total = 4.0;
        assert_abs_diff_eq!(g[0], -1.0 / total, epsilon = 1e-15);
        assert_abs_diff_eq!(g[1], 1.0 / 1.5 - 1.0 / total, epsilon = 1e-15);
        assert_abs_diff_eq!(g[2], -1.0 / total, epsilon = 1e-15);
    }

    #[test]
    fn saturated_regular_grad_vanishes() {
        let mut p = LinearSoftmaxPolicy::new(1, 2);
        p.weights_mut().set_row(0, &[800.0, 0.0]).unwrap();
        let x = SparseFeatures::one_hot(1, 0).unwrap();
        let g = p.logpi_grad(&x, 0).unwrap();
        assert!(g.coef.iter().all(|c| c.abs() < 1e-300));
    }

    #[test]
    fn alternate_grad_ignores_policy() {
        let mut p = LinearSoftmaxPolicy::new(2, 3);
        p.weights_mut().set_row(0, &[50.0, 0.0, -3.0]).unwrap();
        let x = SparseFeatures::dense(&[0.6, 0.8]);
        let g = p.pref_grad(&x, 2).unwrap().to_dense();
        assert_eq!(g.column(0).norm(), 0.0);
        assert_abs_diff_eq!(g.column(2).norm(), x.norm(), epsilon = 1e-15);
        let t = TabularSoftmaxPolicy::new(4, 2);
        let g = t.pref_grad(&t.features(3).unwrap(), 1).unwrap().to_dense();
        assert_eq!(g.iter().filter(|v| **v != 0.0).count(), 1);
        assert_eq!(g[(3, 1)], 1.0);
    }

    #[test]
    fn uniform_entropy_grad_is_zero() {
        let p = LinearSoftmaxPolicy::new(2, 4);
        let g = p.entropy_grad(&SparseFeatures::dense(&[0.3, 1.0])).unwrap();
        assert!(g.coef.iter().all(|c| c.abs() < 1e-15));
    }

    #[test]
    fn weights_csv() {
        let mut w = Weights::zeros(2, 2);
        w.set(1, 0, 2.5);
        let mut buf = Vec::new();
        w.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "feature,action,weight\n0,0,0\n0,1,0\n1,0,2.5\n1,1,0\n");
    }

    #[test]
    fn add_scaled_matches_dense() {
        let x = SparseFeatures {
            dim: 3,
            entries: vec![(0, 0.5), (2, -1.0)],
        };
        let g = WeightGrad {
            x,
            coef: vec![1.0, -2.0],
        };
        let mut w = Weights::zeros(3, 2);
        g.add_scaled_to(&mut w, 0.5);
        let expected = g.to_dense() * 0.5;
        assert_eq!(w.to_dense(), expected);
    }
}
