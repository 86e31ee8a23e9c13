//! Gaussian k-armed bandits, the regular/alternate estimators, and the
//! closed-form theory around them: expectations, variances, biased fixed
//! points, and the KL attractor/repellor step analysis.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{sample_gaussian, softmax, PolicyVector, PreferenceVector, RngStream};

/// Tolerance band for deciding whether a baseline coincides with a reward.
pub const FIXED_POINT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct BanditTask {
    rewards: Vec<f64>,
    noise_std: Vec<f64>,
}

impl BanditTask {
    /// A task whose actions share one noise scale.
    pub fn new(rewards: Vec<f64>, noise_std: f64) -> Result<Self> {
        let k = rewards.len();
        Self::with_action_noise(rewards, vec![noise_std; k])
    }

    pub fn with_action_noise(rewards: Vec<f64>, noise_std: Vec<f64>) -> Result<Self> {
        if rewards.is_empty() {
            return Err(Error::Dimension("bandit needs at least one action".into()));
        }
        if rewards.len() != noise_std.len() {
            return Err(Error::Dimension(format!(
                "{} rewards but {} noise scales",
                rewards.len(),
                noise_std.len()
            )));
        }
        if rewards.iter().any(|r| !r.is_finite()) {
            return Err(Error::Domain("rewards must be finite".into()));
        }
        if noise_std.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::Domain("noise scales must be finite and ≥ 0".into()));
        }
        Ok(BanditTask { rewards, noise_std })
    }

    pub fn k(&self) -> usize {
        self.rewards.len()
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn noise_std(&self) -> &[f64] {
        &self.noise_std
    }

    pub fn pull(&self, a: usize, rng: &mut RngStream) -> Result<f64> {
        let r = *self.rewards.get(a).ok_or(Error::Index {
            index: a,
            len: self.k(),
        })?;
        sample_gaussian(r, self.noise_std[a], rng)
    }

    fn check(&self, pi: &PolicyVector) -> Result<()> {
        if pi.len() != self.k() {
            return Err(Error::Dimension(format!(
                "policy over {} actions for a {}-armed task",
                pi.len(),
                self.k()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
pub enum EstimatorKind {
    #[serde(rename = "REG")]
    Regular,
    #[serde(rename = "ALT")]
    Alternate,
    #[serde(rename = "EXPECTED")]
    Expected,
}

impl EstimatorKind {
    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::Regular => "REG",
            EstimatorKind::Alternate => "ALT",
            EstimatorKind::Expected => "EXPECTED",
        }
    }
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradEstimate {
    pub g: Vec<f64>,
    pub kind: EstimatorKind,
}

/// `J = πᵀr`.
pub fn bandit_objective(pi: &PolicyVector, task: &BanditTask) -> Result<f64> {
    task.check(pi)?;
    Ok(pi.dot(task.rewards()))
}

/// `∇J = π ⊙ (r − r_π)`.
pub fn expected_gradient(pi: &PolicyVector, task: &BanditTask) -> Result<GradEstimate> {
    let r_pi = bandit_objective(pi, task)?;
    let g = pi
        .as_slice()
        .iter()
        .zip(task.rewards())
        .map(|(p, r)| p * (r - r_pi))
        .collect();
    Ok(GradEstimate {
        g,
        kind: EstimatorKind::Expected,
    })
}

/// `(R − b)(e_A − π)`.
pub fn regular_estimate(a: usize, reward: f64, pi: &PolicyVector, b: f64) -> Result<GradEstimate> {
    if a >= pi.len() {
        return Err(Error::Index {
            index: a,
            len: pi.len(),
        });
    }
    let adv = reward - b;
    let g = pi
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, p)| adv * (if i == a { 1.0 } else { 0.0 } - p))
        .collect();
    Ok(GradEstimate {
        g,
        kind: EstimatorKind::Regular,
    })
}

/// `(R − b) e_A` over `k` actions.
pub fn alternate_estimate(a: usize, reward: f64, b: f64, k: usize) -> Result<GradEstimate> {
    if a >= k {
        return Err(Error::Index { index: a, len: k });
    }
    let mut g = vec![0.0; k];
    g[a] = reward - b;
    Ok(GradEstimate {
        g,
        kind: EstimatorKind::Alternate,
    })
}

/// Expected alternate update under a baseline `b`: `π ⊙ (r − b)`.
pub fn biased_expected_update(pi: &PolicyVector, task: &BanditTask, b: f64) -> Result<Vec<f64>> {
    task.check(pi)?;
    Ok(pi
        .as_slice()
        .iter()
        .zip(task.rewards())
        .map(|(p, r)| p * (r - b))
        .collect())
}

/// Element-wise variance of `(e_A − η)(R − b)` for `A ∼ π`,
/// `R | A ∼ N(r(A), σ(A)²)`. `η = π` gives the regular estimator and `η = 0`
/// the alternate one.
pub fn estimator_variance(
    pi: &PolicyVector,
    task: &BanditTask,
    b: f64,
    eta: &[f64],
) -> Result<Vec<f64>> {
    task.check(pi)?;
    if eta.len() != task.k() {
        return Err(Error::Dimension(format!(
            "eta has length {}, expected {}",
            eta.len(),
            task.k()
        )));
    }
    let p = pi.as_slice();
    let r = task.rewards();
    let second: Vec<f64> = r
        .iter()
        .zip(task.noise_std())
        .map(|(r, s)| s * s + r * r)
        .collect();
    let r_pi = pi.dot(r);
    let var_r = pi.dot(&second) - r_pi * r_pi;
    Ok((0..task.k())
        .map(|i| {
            let var_er = p[i] * second[i] - (p[i] * r[i]).powi(2);
            let var_e = p[i] * (1.0 - p[i]);
            let cov_er_e = p[i] * r[i] * (1.0 - p[i]);
            let cov_er_r = p[i] * second[i] - p[i] * r[i] * r_pi;
            let cov_e_r = p[i] * r[i] - p[i] * r_pi;
            let v = var_er + var_e * b * b + var_r * eta[i] * eta[i]
                - 2.0 * b * cov_er_e
                - 2.0 * eta[i] * cov_er_r
                + 2.0 * b * eta[i] * cov_e_r;
            v.max(0.0)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum FixedPoint {
    /// `b` lies strictly between two rewards.
    None,
    /// `b` equals the reward of every action in the set; any policy supported
    /// on this face is stationary.
    SimplexFace(Vec<usize>),
    /// `b` lies outside the reward range; `π*(a) ∝ 1/(r(a) − b)`.
    Interior(PolicyVector),
}

pub fn biased_fixed_point(task: &BanditTask, b: f64) -> Result<FixedPoint> {
    if !b.is_finite() {
        return Err(Error::Domain(format!("baseline {b} is not finite")));
    }
    let r = task.rewards();
    let face: Vec<usize> = (0..r.len())
        .filter(|&a| (r[a] - b).abs() <= FIXED_POINT_TOL)
        .collect();
    if !face.is_empty() {
        return Ok(FixedPoint::SimplexFace(face));
    }
    let min = r.iter().copied().fold(f64::INFINITY, f64::min);
    let max = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if b > min && b < max {
        return Ok(FixedPoint::None);
    }
    let inv: Vec<f64> = r.iter().map(|r| 1.0 / (r - b)).collect();
    let total: f64 = inv.iter().sum();
    let pi = inv.iter().map(|v| v / total).collect();
    Ok(FixedPoint::Interior(PolicyVector::new(pi)?))
}

/// `θ ← θ + α π ⊙ (r − b)`.
pub fn biased_update_step(
    prefs: &PreferenceVector,
    task: &BanditTask,
    b: f64,
    alpha: f64,
) -> Result<PreferenceVector> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("stepsize {alpha} must be positive")));
    }
    let pi = softmax(prefs.as_slice())?;
    let step = biased_expected_update(&pi, task, b)?;
    PreferenceVector::new(
        prefs
            .as_slice()
            .iter()
            .zip(step)
            .map(|(t, s)| t + alpha * s)
            .collect(),
    )
}

/// Largest stepsize for which one expected alternate step with an
/// optimistic baseline provably moves `π` closer (in `KL(π*‖·)`) to the
/// interior fixed point.
///
/// Infinite at `π = π*`, where every step leaves the policy unchanged.
pub fn max_attractor_stepsize(pi: &PolicyVector, task: &BanditTask, b: f64) -> Result<f64> {
    task.check(pi)?;
    let r = task.rewards();
    let max_r = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(b > max_r + FIXED_POINT_TOL) {
        return Err(Error::Domain(format!(
            "baseline {b} is not optimistic (max reward {max_r})"
        )));
    }
    let d: Vec<f64> = r.iter().map(|r| r - b).collect();
    let scaled: Vec<f64> = pi.as_slice().iter().zip(&d).map(|(p, d)| p * d).collect();
    let hi = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = scaled.iter().copied().fold(f64::INFINITY, f64::min);
    let harmonic = 1.0 / d.iter().map(|d| 1.0 / d).sum::<f64>();
    let weighted: f64 = pi.as_slice().iter().zip(&d).map(|(p, d)| p * p * d).sum();
    let spread = hi - lo;
    if spread == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(8.0 / (spread * spread) * (harmonic - weighted))
}

/// The four quantities compared in the attractor/repellor argument, with
/// `ζ = α(r − b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityTerms {
    /// `log Σ π e^{π ζ}`, the log-partition change of one step.
    pub lhs_log_term: f64,
    /// `Σ π² ζ` (Jensen lower bound).
    pub lower_bound: f64,
    /// `(u − l)²/8 + Σ π² ζ` (Hoeffding-lemma upper bound).
    pub upper_bound: f64,
    /// `(Σ 1/ζ)⁻¹`, the fixed-point cross term.
    pub rhs_inverse_sum: f64,
}

pub fn figure_b3_quantities(
    pi: &PolicyVector,
    task: &BanditTask,
    b: f64,
    alpha: f64,
) -> Result<InequalityTerms> {
    task.check(pi)?;
    let p = pi.as_slice();
    let zeta: Vec<f64> = task.rewards().iter().map(|r| alpha * (r - b)).collect();
    let pz: Vec<f64> = p.iter().zip(&zeta).map(|(p, z)| p * z).collect();
    let lhs = p.iter().zip(&pz).map(|(p, x)| p * x.exp()).sum::<f64>().ln();
    let lower: f64 = p.iter().zip(&pz).map(|(p, x)| p * x).sum();
    let hi = pz.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = pz.iter().copied().fold(f64::INFINITY, f64::min);
    let inv_sum: f64 = zeta.iter().map(|z| 1.0 / z).sum();
    Ok(InequalityTerms {
        lhs_log_term: lhs,
        lower_bound: lower,
        upper_bound: (hi - lo).powi(2) / 8.0 + lower,
        rhs_inverse_sum: if inv_sum.is_finite() { 1.0 / inv_sum } else { 0.0 },
    })
}

/// Running-average baseline, optionally frozen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineState {
    pub b: f64,
    pub beta: f64,
    pub frozen: bool,
}

impl BaselineState {
    pub fn learned(init: f64, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::Domain(format!("baseline stepsize {beta} not in (0, 1]")));
        }
        Ok(BaselineState {
            b: init,
            beta,
            frozen: false,
        })
    }

    pub fn frozen(b: f64) -> Self {
        BaselineState {
            b,
            beta: 0.0,
            frozen: true,
        }
    }

    pub fn update(&mut self, reward: f64) {
        *self = update_baseline(*self, reward);
    }
}

pub fn update_baseline(state: BaselineState, reward: f64) -> BaselineState {
    if state.frozen {
        return state;
    }
    BaselineState {
        b: (1.0 - state.beta) * state.b + state.beta * reward,
        ..state
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaselineMode {
    /// `b = πᵀr` at each grid point.
    TrueValue,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexFieldRow {
    pub point_id: usize,
    pub pi: [f64; 3],
    pub sampled_action: usize,
    pub noise_sign: i8,
    /// Change of the policy after one stochastic step.
    pub dpi: [f64; 3],
    /// Change of the preferences, `α ĝ`.
    pub dtheta: [f64; 3],
    pub var: [f64; 3],
}

/// Triangular lattice on the 2-simplex with `resolution` points per edge,
/// `resolution(resolution + 1)/2` points in all.
pub fn simplex_grid(resolution: usize) -> Result<Vec<[f64; 3]>> {
    if resolution < 2 {
        return Err(Error::Domain("simplex grid needs at least 2 points per edge".into()));
    }
    let n = resolution - 1;
    let mut points = Vec::with_capacity(resolution * (resolution + 1) / 2);
    for i in (0..=n).rev() {
        for j in (0..=n - i).rev() {
            let k = n - i - j;
            points.push([i as f64 / n as f64, j as f64 / n as f64, k as f64 / n as f64]);
        }
    }
    Ok(points)
}

/// One stochastic step from every lattice point, for each sampled action and
/// each sign of a unit reward perturbation, together with the closed-form
/// estimator variance at that point.
pub fn simplex_field_emit(
    task: &BanditTask,
    kind: EstimatorKind,
    baseline: BaselineMode,
    resolution: usize,
    alpha: f64,
) -> Result<Vec<SimplexFieldRow>> {
    if task.k() != 3 {
        return Err(Error::Unsupported(format!(
            "simplex field needs a 3-action task, got {}",
            task.k()
        )));
    }
    let mut rows = Vec::new();
    for (point_id, point) in simplex_grid(resolution)?.into_iter().enumerate() {
        // Lattice coordinates are exact ratios; renormalize rounding away.
        let total: f64 = point.iter().sum();
        let pi = PolicyVector::new(point.iter().map(|p| p / total).collect())?;
        let b = match baseline {
            BaselineMode::TrueValue => bandit_objective(&pi, task)?,
            BaselineMode::Fixed(b) => b,
        };
        let eta: Vec<f64> = match kind {
            EstimatorKind::Regular => pi.as_slice().to_vec(),
            EstimatorKind::Alternate => vec![0.0; 3],
            EstimatorKind::Expected => vec![0.0; 3],
        };
        let var = match kind {
            EstimatorKind::Expected => vec![0.0; 3],
            _ => estimator_variance(&pi, task, b, &eta)?,
        };
        for a in 0..3 {
            for sign in [1i8, -1] {
                let reward = task.rewards()[a] + f64::from(sign);
                let g = match kind {
                    EstimatorKind::Regular => regular_estimate(a, reward, &pi, b)?.g,
                    EstimatorKind::Alternate => alternate_estimate(a, reward, b, 3)?.g,
                    EstimatorKind::Expected => expected_gradient(&pi, task)?.g,
                };
                let dtheta = [alpha * g[0], alpha * g[1], alpha * g[2]];
                let shifted: Vec<f64> = (0..3).map(|i| pi[i] * dtheta[i].exp()).collect();
                let z: f64 = shifted.iter().sum();
                rows.push(SimplexFieldRow {
                    point_id,
                    pi: point,
                    sampled_action: a,
                    noise_sign: sign,
                    dpi: [
                        shifted[0] / z - pi[0],
                        shifted[1] / z - pi[1],
                        shifted[2] / z - pi[2],
                    ],
                    dtheta,
                    var: [var[0], var[1], var[2]],
                });
            }
        }
    }
    Ok(rows)
}

pub const SIMPLEX_FIELD_HEADER: [&str; 12] = [
    "point_id",
    "pi0",
    "pi1",
    "pi2",
    "sampled_action",
    "noise_sign",
    "dpi0",
    "dpi1",
    "dpi2",
    "var0",
    "var1",
    "var2",
];

pub fn write_simplex_field<W: Write>(rows: &[SimplexFieldRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SIMPLEX_FIELD_HEADER)?;
    for row in rows {
        let mut rec = vec![row.point_id.to_string()];
        rec.extend(row.pi.iter().map(|v| v.to_string()));
        rec.push(row.sampled_action.to_string());
        rec.push(row.noise_sign.to_string());
        rec.extend(row.dpi.iter().map(|v| v.to_string()));
        rec.extend(row.var.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<simplex field>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pv(v: &[f64]) -> PolicyVector {
        PolicyVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn pull_noise_free() {
        let mut rng = RngStream::new(0, 0);
        let task = BanditTask::new(vec![0.0, 0.0, 1.0], 0.0).unwrap();
        assert_eq!(task.pull(2, &mut rng).unwrap(), 1.0);
        let task = BanditTask::new(vec![1.0, 2.0, 3.0], 0.0).unwrap();
        assert_eq!(task.pull(0, &mut rng).unwrap(), 1.0);
        assert!(matches!(task.pull(3, &mut rng), Err(Error::Index { .. })));
    }

    #[test]
    fn pull_mean() {
        let n = 100_000;
        let mut rng = RngStream::new(8, 1);
        let task = BanditTask::new(vec![0.3, -2.0], 1.0).unwrap();
        let mean = (0..n).map(|_| task.pull(1, &mut rng).unwrap()).sum::<f64>() / n as f64;
        assert!((mean + 2.0).abs() < 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn expected_gradient_uniform() {
        let task = BanditTask::new(vec![0.0, 0.0, 1.0], 1.0).unwrap();
        let g = expected_gradient(&PolicyVector::uniform(3).unwrap(), &task).unwrap().g;
        assert_abs_diff_eq!(g[0], -1.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g[1], -1.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g[2], 2.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn expected_gradient_vanishes_on_equal_reward_face() {
        let task = BanditTask::new(vec![0.5, 0.5, 1.0], 1.0).unwrap();
        let g = expected_gradient(&pv(&[0.3, 0.7, 0.0]), &task).unwrap().g;
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn example_one_estimates() {
        let pi = PolicyVector::one_hot(3, 0).unwrap();
        let eps = 0.37;
        let reg = regular_estimate(0, eps, &pi, 0.0).unwrap().g;
        assert!(reg.iter().all(|v| *v == 0.0));
        let alt = alternate_estimate(0, eps, 0.0, 3).unwrap().g;
        assert_eq!(alt, vec![eps, 0.0, 0.0]);
    }

    #[test]
    fn estimates_vanish_when_reward_equals_baseline() {
        let pi = pv(&[0.2, 0.5, 0.3]);
        assert!(regular_estimate(1, 2.0, &pi, 2.0).unwrap().g.iter().all(|v| *v == 0.0));
        assert!(alternate_estimate(1, 2.0, 2.0, 3).unwrap().g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn variance_corner_values() {
        let task = BanditTask::with_action_noise(vec![0.0, 0.5, 1.0], vec![1.0, 0.5, 2.0]).unwrap();
        for c in 0..3 {
            let pi = PolicyVector::one_hot(3, c).unwrap();
            let b = bandit_objective(&pi, &task).unwrap();
            let reg = estimator_variance(&pi, &task, b, pi.as_slice()).unwrap();
            assert!(reg.iter().all(|v| v.abs() < 1e-15), "{reg:?}");
            let alt = estimator_variance(&pi, &task, b, &[0.0; 3]).unwrap();
            for (i, v) in alt.iter().enumerate() {
                let expected = if i == c { task.noise_std()[c].powi(2) } else { 0.0 };
                assert_abs_diff_eq!(*v, expected, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn fixed_point_cases() {
        let task = BanditTask::new(vec![1.0, 2.0, 3.0], 1.0).unwrap();
        match biased_fixed_point(&task, 4.0).unwrap() {
            FixedPoint::Interior(pi) => {
                for (p, e) in pi.as_slice().iter().zip([2.0 / 11.0, 3.0 / 11.0, 6.0 / 11.0]) {
                    assert_abs_diff_eq!(*p, e, epsilon = 1e-15);
                }
            }
            other => panic!("expected interior, got {other:?}"),
        }
        assert_eq!(
            biased_fixed_point(&task, 2.0).unwrap(),
            FixedPoint::SimplexFace(vec![1])
        );
        assert_eq!(biased_fixed_point(&task, 2.5).unwrap(), FixedPoint::None);
        assert!(matches!(
            biased_fixed_point(&task, -4.0).unwrap(),
            FixedPoint::Interior(_)
        ));
    }

    #[test]
    fn update_at_fixed_point_is_stationary() {
        let task = BanditTask::new(vec![1.0, 2.0, 3.0], 1.0).unwrap();
        let FixedPoint::Interior(star) = biased_fixed_point(&task, 4.0).unwrap() else {
            unreachable!()
        };
        let prefs = PreferenceVector::new(star.as_slice().iter().map(|p| p.ln()).collect()).unwrap();
        let next = biased_update_step(&prefs, &task, 4.0, 0.7).unwrap();
        let kl = crate::numerics::kl_to_softmax(&star, next.as_slice()).unwrap();
        assert!(kl.abs() < 1e-10);
    }

    #[test]
    fn unbiased_step_is_gradient_step() {
        let task = BanditTask::new(vec![1.0, 2.0, 3.0], 1.0).unwrap();
        let prefs = PreferenceVector::new(vec![0.2, -0.1, 0.4]).unwrap();
        let pi = softmax(prefs.as_slice()).unwrap();
        let b = bandit_objective(&pi, &task).unwrap();
        let next = biased_update_step(&prefs, &task, b, 0.5).unwrap();
        let g = expected_gradient(&pi, &task).unwrap().g;
        for ((n, p), g) in next.as_slice().iter().zip(prefs.as_slice()).zip(&g) {
            assert_abs_diff_eq!(*n, p + 0.5 * g, epsilon = 1e-15);
        }
    }

    #[test]
    fn stepsize_bound_positive_and_guarded() {
        let task = BanditTask::new(vec![-1.0, 0.0, 1.0], 1.0).unwrap();
        let bound = max_attractor_stepsize(&PolicyVector::uniform(3).unwrap(), &task, 2.0).unwrap();
        assert!(bound > 0.0 && bound.is_finite());
        assert!(matches!(
            max_attractor_stepsize(&PolicyVector::uniform(3).unwrap(), &task, 0.5),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn inequality_terms_vanish_with_alpha() {
        let task = BanditTask::new(vec![1.0, 2.0, 3.0], 1.0).unwrap();
        let t = figure_b3_quantities(&pv(&[0.2, 0.1, 0.7]), &task, 4.0, 1e-12).unwrap();
        for v in [t.lhs_log_term, t.lower_bound, t.upper_bound, t.rhs_inverse_sum] {
            assert!(v.abs() < 1e-10);
        }
    }

    #[test]
    fn baseline_updates() {
        let mut s = BaselineState::learned(0.0, 0.5).unwrap();
        s.update(2.0);
        assert_eq!(s.b, 1.0);
        let s = update_baseline(BaselineState::learned(3.0, 1.0).unwrap(), -7.0);
        assert_eq!(s.b, -7.0);
        let s = update_baseline(BaselineState::frozen(4.0), 100.0);
        assert_eq!(s.b, 4.0);
        assert!(BaselineState::learned(0.0, 0.0).is_err());
        assert!(BaselineState::learned(0.0, 1.5).is_err());
    }

    #[test]
    fn baseline_tracks_mean() {
        let beta = 0.01;
        let mut rng = RngStream::new(4, 4);
        let mut s = BaselineState::learned(0.0, beta).unwrap();
        let band = 3.0 * (beta / (2.0 - beta)).sqrt();
        for _ in 0..5000 {
            s.update(sample_gaussian(1.5, 1.0, &mut rng).unwrap());
        }
        assert!((s.b - 1.5).abs() < band);
    }

    #[test]
    fn simplex_grid_counts() {
        assert_eq!(simplex_grid(20).unwrap().len(), 210);
        assert_eq!(simplex_grid(2).unwrap().len(), 3);
        for p in simplex_grid(7).unwrap() {
            assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn simplex_field_rejects_non_three_action_tasks() {
        let task = BanditTask::new(vec![0.0, 1.0], 1.0).unwrap();
        assert!(matches!(
            simplex_field_emit(&task, EstimatorKind::Regular, BaselineMode::TrueValue, 5, 0.4),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn simplex_field_corner_behaviour() {
        let task = BanditTask::new(vec![0.0, 0.0, 1.0], 1.0).unwrap();
        let reg = simplex_field_emit(&task, EstimatorKind::Regular, BaselineMode::TrueValue, 5, 0.4)
            .unwrap();
        let corner: Vec<_> = reg.iter().filter(|r| r.point_id == 0).collect();
        assert_eq!(corner[0].pi, [1.0, 0.0, 0.0]);
        assert_eq!(corner.len(), 6);
        for row in corner.iter().filter(|r| r.sampled_action == 0) {
            assert!(row.dtheta.iter().all(|v| *v == 0.0));
            assert!(row.dpi.iter().all(|v| *v == 0.0));
        }
        let alt =
            simplex_field_emit(&task, EstimatorKind::Alternate, BaselineMode::TrueValue, 5, 0.4)
                .unwrap();
        for row in alt.iter().filter(|r| r.point_id == 0 && r.sampled_action == 0) {
            assert_abs_diff_eq!(row.dtheta[0].abs(), 0.4, epsilon = 1e-15);
            assert_eq!(row.dtheta[1], 0.0);
            assert_eq!(row.dtheta[2], 0.0);
        }
    }
}
