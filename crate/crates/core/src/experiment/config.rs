//! Experiment configuration files (TOML) and grid expansion.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::agents::BaselineSpec;
use crate::bandit::EstimatorKind;
use crate::environments::ENV_NAMES;
use crate::error::{Error, Result};

/// What a configuration file is run as. Each command reads its own section.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    BanditSweep,
    ChainSweep,
    AcSweep,
    FixedPointVerify,
    SimplexField,
    TreeBench,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::BanditSweep => "bandit-sweep",
            Command::ChainSweep => "chain-sweep",
            Command::AcSweep => "ac-sweep",
            Command::FixedPointVerify => "fixed-point-verify",
            Command::SimplexField => "simplex-field",
            Command::TreeBench => "tree-bench",
        }
    }

    fn section(self) -> &'static str {
        match self {
            Command::BanditSweep => "bandit",
            Command::ChainSweep => "chain",
            Command::AcSweep => "ac",
            Command::FixedPointVerify => "fixed_point",
            Command::SimplexField => "simplex_field",
            Command::TreeBench => "tree_bench",
        }
    }

    fn is_sweep(self) -> bool {
        matches!(self, Command::BanditSweep | Command::ChainSweep | Command::AcSweep)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Record wall-clock time in per-run logs (makes outputs non-reproducible).
    #[serde(default)]
    pub timing: bool,
    pub bandit: Option<BanditSection>,
    pub chain: Option<ChainSection>,
    pub ac: Option<AcSection>,
    pub grid: Option<GridConfig>,
    pub fixed_point: Option<FixedPointSection>,
    pub simplex_field: Option<SimplexFieldSection>,
    pub tree_bench: Option<TreeBenchSection>,
}

fn default_runs() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BanditSection {
    pub rewards: Vec<f64>,
    #[serde(default = "unit")]
    pub noise_std: f64,
    #[serde(default = "default_bandit_steps")]
    pub steps: usize,
    #[serde(default = "default_bandit_window")]
    pub final_window: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainMetric {
    /// Discounted return of each episode.
    Return,
    /// Exact `J` of the policy after each episode's update.
    Objective,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    #[serde(default = "default_chain_env")]
    pub env: String,
    #[serde(default = "unit")]
    pub reward_noise_std: f64,
    #[serde(default = "default_chain_episodes")]
    pub episodes: usize,
    #[serde(default = "default_chain_metric")]
    pub metric: ChainMetric,
    #[serde(default = "default_chain_window")]
    pub final_window: usize,
    pub timeout: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalMoveConfig {
    pub at: usize,
    pub goal: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcSection {
    pub env: String,
    pub steps: usize,
    #[serde(default = "default_tiles")]
    pub tiles: usize,
    #[serde(default = "default_tilings")]
    pub tilings: usize,
    /// Swap the first and last actions at this global step.
    pub swap_at: Option<usize>,
    pub goal_move: Option<GoalMoveConfig>,
    #[serde(default = "default_ac_window")]
    pub final_window: usize,
    pub timeout: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    TrueValue,
    Learned,
    Frozen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Softmax,
    Escort,
}

/// The agent grid. Axes that do not apply to an agent are not crossed with
/// it: the expected gradient only pairs with the true value, and `beta` only
/// applies to learned baselines.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub estimators: Vec<EstimatorKind>,
    #[serde(default = "default_baselines")]
    pub baselines: Vec<BaselineKind>,
    pub alpha: Option<Vec<f64>>,
    /// Powers of two, as an alternative to `alpha`.
    pub alpha_log2: Option<Vec<i32>>,
    pub beta: Option<Vec<f64>>,
    pub beta_log2: Option<Vec<i32>>,
    /// Initial value of learned baselines, or the value of frozen ones.
    #[serde(default = "zero_list")]
    pub baseline_init: Vec<f64>,
    /// Initial action preferences (shared by every state).
    pub init: Option<Vec<Vec<f64>>>,
    #[serde(default = "zero_list")]
    pub tau: Vec<f64>,
    #[serde(default = "zero_list")]
    pub grad_noise: Vec<f64>,
    #[serde(default = "default_policies")]
    pub policy: Vec<PolicyKind>,
    #[serde(default)]
    pub escort_p: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum FieldBaseline {
    Fixed(f64),
    Named(NamedBaseline),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedBaseline {
    TrueValue,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedPointSection {
    pub rewards: Vec<f64>,
    pub baseline: f64,
    pub init: Vec<f64>,
    #[serde(default = "default_fp_steps")]
    pub steps: usize,
    /// Fixed stepsize; when absent, half the attractor bound is recomputed
    /// at every step (optimistic baselines only).
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimplexFieldSection {
    pub rewards: Vec<f64>,
    #[serde(default = "unit")]
    pub noise_std: f64,
    pub estimator: EstimatorKind,
    pub baseline: FieldBaseline,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default = "default_field_alpha")]
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeBenchSection {
    #[serde(default = "default_min_log2")]
    pub min_log2: u32,
    #[serde(default = "default_max_log2")]
    pub max_log2: u32,
    #[serde(default = "default_bench_ops")]
    pub updates: usize,
    #[serde(default = "default_bench_ops")]
    pub samples: usize,
}

fn unit() -> f64 {
    1.0
}
fn zero_list() -> Vec<f64> {
    vec![0.0]
}
fn default_bandit_steps() -> usize {
    1000
}
fn default_bandit_window() -> usize {
    50
}
fn default_chain_env() -> String {
    "chain".into()
}
fn default_chain_episodes() -> usize {
    100
}
fn default_chain_metric() -> ChainMetric {
    ChainMetric::Return
}
fn default_chain_window() -> usize {
    10
}
fn default_tiles() -> usize {
    4
}
fn default_tilings() -> usize {
    8
}
fn default_ac_window() -> usize {
    5000
}
fn default_baselines() -> Vec<BaselineKind> {
    vec![BaselineKind::Learned]
}
fn default_policies() -> Vec<PolicyKind> {
    vec![PolicyKind::Softmax]
}
fn default_fp_steps() -> usize {
    100
}
fn default_resolution() -> usize {
    11
}
fn default_field_alpha() -> f64 {
    0.4
}
fn default_min_log2() -> u32 {
    4
}
fn default_max_log2() -> u32 {
    16
}
fn default_bench_ops() -> usize {
    10_000
}

impl ExperimentConfig {
    /// Parses TOML; type errors report the path of the offending field.
    pub fn parse(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text)
            .map_err(|e| Error::validation("<document>", e.to_string().trim_end()))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::validation(path, e.into_inner().message().trim_end())
        })
    }

    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok((Self::parse(&text)?, text))
    }

    /// Semantic checks for running this file as `command`.
    pub fn validate(&self, command: Command) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) || self.name.starts_with('.') {
            return Err(Error::validation("name", "must be a non-empty plain directory name"));
        }
        if self.runs == 0 {
            return Err(Error::validation("runs", "must be at least 1"));
        }
        let present: Vec<&str> = [
            ("bandit", self.bandit.is_some()),
            ("chain", self.chain.is_some()),
            ("ac", self.ac.is_some()),
            ("fixed_point", self.fixed_point.is_some()),
            ("simplex_field", self.simplex_field.is_some()),
            ("tree_bench", self.tree_bench.is_some()),
        ]
        .into_iter()
        .filter_map(|(n, p)| p.then_some(n))
        .collect();
        let wanted = command.section();
        if !present.contains(&wanted) {
            return Err(Error::validation(
                wanted,
                format!("`{}` needs a [{wanted}] section", command.name()),
            ));
        }
        if let Some(extra) = present.iter().find(|s| **s != wanted) {
            return Err(Error::validation(
                *extra,
                format!("section is not used by `{}`", command.name()),
            ));
        }
        if command.is_sweep() != self.grid.is_some() {
            return Err(Error::validation(
                "grid",
                if command.is_sweep() { "sweeps need a [grid] section" } else { "only sweeps take a grid" },
            ));
        }
        match command {
            Command::BanditSweep => self.validate_bandit(),
            Command::ChainSweep => self.validate_chain(),
            Command::AcSweep => self.validate_ac(),
            Command::FixedPointVerify => self.validate_fixed_point(),
            Command::SimplexField => self.validate_simplex_field(),
            Command::TreeBench => self.validate_tree_bench(),
        }
    }

    fn validate_bandit(&self) -> Result<()> {
        let s = self.bandit.as_ref().expect("checked");
        check_finite_list("bandit.rewards", &s.rewards, 2)?;
        check_nonneg("bandit.noise_std", s.noise_std)?;
        check_window("bandit", s.final_window, s.steps)?;
        self.grid()?.validate(GridTarget::Tabular(s.rewards.len()))
    }

    fn validate_chain(&self) -> Result<()> {
        let s = self.chain.as_ref().expect("checked");
        let k = match s.env.as_str() {
            "chain" => 2,
            "hard_chain" => 4,
            _ => return Err(Error::validation("chain.env", "must be `chain` or `hard_chain`")),
        };
        check_nonneg("chain.reward_noise_std", s.reward_noise_std)?;
        check_window("chain", s.final_window, s.episodes)?;
        if s.timeout == Some(0) {
            return Err(Error::validation("chain.timeout", "must be at least 1"));
        }
        self.grid()?.validate(GridTarget::Tabular(k))
    }

    fn validate_ac(&self) -> Result<()> {
        let s = self.ac.as_ref().expect("checked");
        if !ENV_NAMES.contains(&s.env.as_str()) || s.env.contains("chain") {
            return Err(Error::validation(
                "ac.env",
                "must be `mountaincar`, `acrobot` or `dotreacher`",
            ));
        }
        if s.tiles == 0 || s.tilings == 0 {
            return Err(Error::validation("ac.tiles", "tiles and tilings must be at least 1"));
        }
        check_window("ac", s.final_window, s.steps)?;
        if s.swap_at.is_some() && s.goal_move.is_some() {
            return Err(Error::validation("ac.goal_move", "cannot combine with `swap_at`"));
        }
        if let Some(g) = &s.goal_move {
            if s.env != "dotreacher" {
                return Err(Error::validation("ac.goal_move", "only the dot reacher has a goal"));
            }
            if g.goal.iter().any(|v| !(-1.0..=1.0).contains(v)) {
                return Err(Error::validation("ac.goal_move.goal", "must lie in [-1, 1]²"));
            }
        }
        if s.timeout == Some(0) {
            return Err(Error::validation("ac.timeout", "must be at least 1"));
        }
        self.grid()?.validate(GridTarget::Linear)
    }

    fn validate_fixed_point(&self) -> Result<()> {
        let s = self.fixed_point.as_ref().expect("checked");
        check_finite_list("fixed_point.rewards", &s.rewards, 2)?;
        if s.init.len() != s.rewards.len() || s.init.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation(
                "fixed_point.init",
                "must hold one finite preference per reward",
            ));
        }
        if !s.baseline.is_finite() {
            return Err(Error::validation("fixed_point.baseline", "must be finite"));
        }
        let max_r = s.rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min_r = s.rewards.iter().copied().fold(f64::INFINITY, f64::min);
        if s.baseline >= min_r && s.baseline <= max_r {
            return Err(Error::validation(
                "fixed_point.baseline",
                "must lie outside the reward range for an interior fixed point",
            ));
        }
        match s.alpha {
            Some(a) => check_positive("fixed_point.alpha", a)?,
            None if s.baseline < max_r => {
                return Err(Error::validation(
                    "fixed_point.alpha",
                    "required for a pessimistic baseline (the attractor bound needs b > max r)",
                ))
            }
            None => {}
        }
        if s.steps == 0 {
            return Err(Error::validation("fixed_point.steps", "must be at least 1"));
        }
        Ok(())
    }

    fn validate_simplex_field(&self) -> Result<()> {
        let s = self.simplex_field.as_ref().expect("checked");
        if s.rewards.len() != 3 {
            return Err(Error::validation("simplex_field.rewards", "needs exactly 3 rewards"));
        }
        check_finite_list("simplex_field.rewards", &s.rewards, 3)?;
        check_nonneg("simplex_field.noise_std", s.noise_std)?;
        check_positive("simplex_field.alpha", s.alpha)?;
        if s.resolution < 2 {
            return Err(Error::validation("simplex_field.resolution", "must be at least 2"));
        }
        if let FieldBaseline::Fixed(b) = s.baseline {
            if !b.is_finite() {
                return Err(Error::validation("simplex_field.baseline", "must be finite"));
            }
        }
        Ok(())
    }

    fn validate_tree_bench(&self) -> Result<()> {
        let s = self.tree_bench.as_ref().expect("checked");
        if s.min_log2 > s.max_log2 || s.max_log2 > 24 {
            return Err(Error::validation(
                "tree_bench.max_log2",
                "need min_log2 ≤ max_log2 ≤ 24",
            ));
        }
        if s.samples == 0 {
            return Err(Error::validation("tree_bench.samples", "must be at least 1"));
        }
        Ok(())
    }

    fn grid(&self) -> Result<&GridConfig> {
        self.grid
            .as_ref()
            .ok_or_else(|| Error::validation("grid", "missing [grid] section"))
    }
}

fn check_finite_list(path: &str, values: &[f64], min_len: usize) -> Result<()> {
    if values.len() < min_len {
        return Err(Error::validation(path, format!("needs at least {min_len} entries")));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::validation(format!("{path}[{i}]"), "must be finite"));
    }
    Ok(())
}

fn check_nonneg(path: &str, v: f64) -> Result<()> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::validation(path, format!("{v} must be finite and ≥ 0")));
    }
    Ok(())
}

fn check_positive(path: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::validation(path, format!("{v} must be finite and > 0")));
    }
    Ok(())
}

fn check_window(section: &str, window: usize, length: usize) -> Result<()> {
    if length == 0 {
        return Err(Error::validation(format!("{section}.steps"), "run length must be positive"));
    }
    if window == 0 || window > length {
        return Err(Error::validation(
            format!("{section}.final_window"),
            format!("must be in 1..={length}"),
        ));
    }
    Ok(())
}

enum GridTarget {
    /// Bandits and the chain: `k` actions, preferences given directly.
    Tabular(usize),
    /// Linear function approximation.
    Linear,
}

fn expand_log2(
    path: &str,
    plain: &Option<Vec<f64>>,
    log2: &Option<Vec<i32>>,
) -> Result<Option<Vec<f64>>> {
    let values = match (plain, log2) {
        (Some(_), Some(_)) => {
            return Err(Error::validation(path, format!("give either `{path}` or `{path}_log2`")))
        }
        (Some(v), None) => v.clone(),
        (None, Some(p)) => p.iter().map(|e| 2f64.powi(*e)).collect(),
        (None, None) => return Ok(None),
    };
    if values.is_empty() {
        return Err(Error::validation(path, "must not be empty"));
    }
    if let Some(i) = values.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::validation(format!("{path}[{i}]"), "must be finite and > 0"));
    }
    Ok(Some(values))
}

impl GridConfig {
    pub fn alphas(&self) -> Result<Vec<f64>> {
        expand_log2("grid.alpha", &self.alpha, &self.alpha_log2)?
            .ok_or_else(|| Error::validation("grid.alpha", "a policy stepsize grid is required"))
    }

    pub fn betas(&self) -> Result<Option<Vec<f64>>> {
        expand_log2("grid.beta", &self.beta, &self.beta_log2)
    }

    fn validate(&self, target: GridTarget) -> Result<()> {
        if self.estimators.is_empty() {
            return Err(Error::validation("grid.estimators", "must not be empty"));
        }
        if self.baselines.is_empty() {
            return Err(Error::validation("grid.baselines", "must not be empty"));
        }
        self.alphas()?;
        let betas = self.betas()?;
        if self.baselines.contains(&BaselineKind::Learned) {
            match &betas {
                None => {
                    return Err(Error::validation(
                        "grid.beta",
                        "learned baselines need a critic stepsize grid",
                    ))
                }
                Some(b) => {
                    if matches!(target, GridTarget::Tabular(_))
                        && self.estimators.iter().any(|e| *e != EstimatorKind::Expected)
                    {
                        if let Some(i) = b.iter().position(|v| *v > 2.0) {
                            return Err(Error::validation(format!("grid.beta[{i}]"), "must be ≤ 2"));
                        }
                    }
                }
            }
        }
        for (path, list) in [("grid.baseline_init", &self.baseline_init), ("grid.tau", &self.tau)] {
            if list.is_empty() {
                return Err(Error::validation(path, "must not be empty"));
            }
            if let Some(i) = list.iter().position(|v| !v.is_finite()) {
                return Err(Error::validation(format!("{path}[{i}]"), "must be finite"));
            }
        }
        if let Some(i) = self.tau.iter().position(|v| *v < 0.0) {
            return Err(Error::validation(format!("grid.tau[{i}]"), "must be ≥ 0"));
        }
        if self.grad_noise.is_empty() {
            return Err(Error::validation("grid.grad_noise", "must not be empty"));
        }
        if let Some(i) = self.grad_noise.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::validation(format!("grid.grad_noise[{i}]"), "must be finite and ≥ 0"));
        }
        if self.policy.is_empty() {
            return Err(Error::validation("grid.policy", "must not be empty"));
        }
        match target {
            GridTarget::Tabular(k) => {
                if self.policy != [PolicyKind::Softmax] || !self.escort_p.is_empty() {
                    return Err(Error::validation(
                        "grid.policy",
                        "tabular sweeps use softmax policies only",
                    ));
                }
                if let Some(inits) = &self.init {
                    if inits.is_empty() {
                        return Err(Error::validation("grid.init", "must not be empty"));
                    }
                    for (i, init) in inits.iter().enumerate() {
                        if init.len() != k || init.iter().any(|v| !v.is_finite()) {
                            return Err(Error::validation(
                                format!("grid.init[{i}]"),
                                format!("needs {k} finite preferences"),
                            ));
                        }
                    }
                }
                if self.tau.iter().any(|t| *t != 0.0) {
                    return Err(Error::validation(
                        "grid.tau",
                        "the entropy bonus is only implemented for actor-critic sweeps",
                    ));
                }
            }
            GridTarget::Linear => {
                if self.init.is_some() {
                    return Err(Error::validation(
                        "grid.init",
                        "actor-critic policies start uniform (softmax) or at unit preferences (escort)",
                    ));
                }
                if let Some(i) = self.estimators.iter().position(|e| *e == EstimatorKind::Expected) {
                    return Err(Error::validation(
                        format!("grid.estimators[{i}]"),
                        "EXPECTED needs an exact model, which actor-critic environments lack",
                    ));
                }
                if let Some(i) = self.baselines.iter().position(|b| *b == BaselineKind::TrueValue) {
                    return Err(Error::validation(
                        format!("grid.baselines[{i}]"),
                        "actor-critic environments have no exact value function",
                    ));
                }
                if self.grad_noise.iter().any(|g| *g != 0.0) {
                    return Err(Error::validation(
                        "grid.grad_noise",
                        "gradient noise is only implemented for bandit and chain sweeps",
                    ));
                }
                let escort = self.policy.contains(&PolicyKind::Escort);
                if escort && self.escort_p.is_empty() {
                    return Err(Error::validation("grid.escort_p", "escort policies need powers"));
                }
                if !escort && !self.escort_p.is_empty() {
                    return Err(Error::validation("grid.escort_p", "only used by escort policies"));
                }
                if let Some(i) = self.escort_p.iter().position(|p| !(*p >= 1.0 && p.is_finite())) {
                    return Err(Error::validation(format!("grid.escort_p[{i}]"), "must be ≥ 1"));
                }
            }
        }
        if self.estimators.contains(&EstimatorKind::Expected)
            && !self.baselines.contains(&BaselineKind::TrueValue)
        {
            return Err(Error::validation(
                "grid.estimators",
                "EXPECTED agents need `true_value` in grid.baselines",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyChoice {
    Softmax,
    Escort(f64),
}

/// One point of the agent grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub index: usize,
    /// Unique, filesystem-safe identifier; also feeds the seed derivation.
    pub label: String,
    /// The label without the stepsizes: cells of one group are one agent.
    pub group: String,
    pub estimator: EstimatorKind,
    pub baseline: BaselineSpec,
    pub alpha: f64,
    /// Initial preferences; empty for actor-critic sweeps.
    pub init: Vec<f64>,
    pub tau: f64,
    pub grad_noise: f64,
    pub policy: PolicyChoice,
}

impl Cell {
    pub fn beta(&self) -> Option<f64> {
        match self.baseline {
            BaselineSpec::Learned { beta, .. } => Some(beta),
            _ => None,
        }
    }

    pub fn baseline_label(&self) -> &'static str {
        match self.baseline {
            BaselineSpec::TrueValue => "true_value",
            BaselineSpec::Learned { .. } => "learned",
            BaselineSpec::Frozen { .. } => "frozen",
        }
    }

    pub fn baseline_init(&self) -> Option<f64> {
        match self.baseline {
            BaselineSpec::TrueValue => None,
            BaselineSpec::Learned { init, .. } => Some(init),
            BaselineSpec::Frozen { value } => Some(value),
        }
    }

    pub fn policy_label(&self) -> String {
        match self.policy {
            PolicyChoice::Softmax => "softmax".into(),
            PolicyChoice::Escort(p) => format!("escort{p}"),
        }
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("_")
}

/// Expands the grid in a fixed order: init, estimator, baseline, baseline
/// value, policy, τ, gradient noise, α, β.
pub fn expand_grid(grid: &GridConfig, default_init: &[f64]) -> Result<Vec<Cell>> {
    let alphas = grid.alphas()?;
    let betas = grid.betas()?.unwrap_or_default();
    let inits = grid.init.clone().unwrap_or_else(|| vec![default_init.to_vec()]);
    let mut policies = Vec::new();
    for p in &grid.policy {
        match p {
            PolicyKind::Softmax => policies.push(PolicyChoice::Softmax),
            PolicyKind::Escort => policies.extend(grid.escort_p.iter().map(|&p| PolicyChoice::Escort(p))),
        }
    }

    let mut cells = Vec::new();
    for init in &inits {
        for &estimator in &grid.estimators {
            for &kind in &grid.baselines {
                if estimator == EstimatorKind::Expected && kind != BaselineKind::TrueValue {
                    continue;
                }
                let inits_b: Vec<Option<f64>> = match kind {
                    BaselineKind::TrueValue => vec![None],
                    _ => grid.baseline_init.iter().map(|&b| Some(b)).collect(),
                };
                for b0 in inits_b {
                    for &policy in &policies {
                        for &tau in &grid.tau {
                            if tau > 0.0 && matches!(policy, PolicyChoice::Escort(_)) {
                                continue;
                            }
                            for &noise in &grid.grad_noise {
                                let mut group = format!("{estimator}_{}", baseline_name(kind));
                                if let Some(b0) = b0 {
                                    group.push_str(&format!("_b0={b0}"));
                                }
                                // Only needed to tell several starting points apart.
                                if inits.len() > 1 {
                                    group.push_str(&format!("_init={}", join(init)));
                                }
                                if let PolicyChoice::Escort(p) = policy {
                                    group.push_str(&format!("_escort={p}"));
                                }
                                if tau != 0.0 {
                                    group.push_str(&format!("_tau={tau}"));
                                }
                                if noise != 0.0 {
                                    group.push_str(&format!("_noise={noise}"));
                                }
                                for &alpha in &alphas {
                                    let stepsizes: Vec<Option<f64>> = if kind == BaselineKind::Learned {
                                        betas.iter().map(|&b| Some(b)).collect()
                                    } else {
                                        vec![None]
                                    };
                                    for beta in stepsizes {
                                        let baseline = match (kind, b0, beta) {
                                            (BaselineKind::TrueValue, ..) => BaselineSpec::TrueValue,
                                            (BaselineKind::Learned, Some(init), Some(beta)) => {
                                                BaselineSpec::Learned { init, beta }
                                            }
                                            (_, value, _) => BaselineSpec::Frozen {
                                                value: value.expect("frozen baselines carry a value"),
                                            },
                                        };
                                        let mut label = format!("{group}_a={alpha}");
                                        if let Some(beta) = beta {
                                            label.push_str(&format!("_beta={beta}"));
                                        }
                                        cells.push(Cell {
                                            index: cells.len(),
                                            label,
                                            group: group.clone(),
                                            estimator,
                                            baseline,
                                            alpha,
                                            init: init.clone(),
                                            tau,
                                            grad_noise: noise,
                                            policy,
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    let mut seen = std::collections::HashSet::new();
    for c in &cells {
        if !seen.insert(c.label.as_str()) {
            return Err(Error::validation("grid", format!("duplicate grid point `{}`", c.label)));
        }
    }
    Ok(cells)
}

fn baseline_name(kind: BaselineKind) -> &'static str {
    match kind {
        BaselineKind::TrueValue => "true",
        BaselineKind::Learned => "learned",
        BaselineKind::Frozen => "frozen",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXP1: &str = r#"
name = "exp1"
runs = 3
[bandit]
rewards = [0.0, 0.0, 1.0]
[grid]
estimators = ["EXPECTED", "REG", "ALT"]
baselines = ["true_value", "learned"]
alpha_log2 = [-6, -5, -4, -3, -2, -1, 0, 1]
beta_log2 = [-4, -3, -2, -1, 0]
init = [[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]]
"#;

    #[test]
    fn experiment_one_grid_has_five_agents_per_init() {
        let cfg = ExperimentConfig::parse(EXP1).unwrap();
        cfg.validate(Command::BanditSweep).unwrap();
        let cells = expand_grid(cfg.grid.as_ref().unwrap(), &[0.0; 3]).unwrap();
        let groups: std::collections::BTreeSet<_> = cells.iter().map(|c| c.group.clone()).collect();
        assert_eq!(groups.len(), 2 * 5);
        // expected: 8 α; true-value agents: 8 α each; learned agents: 8 × 5.
        assert_eq!(cells.len(), 2 * (8 + 8 + 8 + 40 + 40));
        assert!(cells.iter().enumerate().all(|(i, c)| c.index == i));
        assert!(cells.iter().any(|c| c.label == "ALT_learned_b0=0_init=10_0_0_a=0.125_beta=0.25"));
    }

    #[test]
    fn type_errors_carry_the_field_path() {
        let text = EXP1.replace("alpha_log2 = [-6,", "alpha_log2 = [\"x\",");
        match ExperimentConfig::parse(&text) {
            Err(Error::Validation { path, .. }) => assert_eq!(path, "grid.alpha_log2[0]"),
            other => panic!("{other:?}"),
        }
        match ExperimentConfig::parse(&EXP1.replace("runs = 3", "runz = 3")) {
            Err(Error::Validation { path, message }) => {
                assert!(path == "." || path.is_empty() || path == "runz", "{path}");
                assert!(message.contains("runz"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn semantic_errors_carry_the_field_path() {
        let bad = EXP1.replace("beta_log2 = [-4, -3, -2, -1, 0]", "beta = [0.5, -1.0]");
        let cfg = ExperimentConfig::parse(&bad).unwrap();
        match cfg.validate(Command::BanditSweep) {
            Err(Error::Validation { path, .. }) => assert_eq!(path, "grid.beta[1]"),
            other => panic!("{other:?}"),
        }
        let cfg = ExperimentConfig::parse(&EXP1.replace("[10.0, 0.0, 0.0]", "[10.0, 0.0]")).unwrap();
        match cfg.validate(Command::BanditSweep) {
            Err(Error::Validation { path, .. }) => assert_eq!(path, "grid.init[1]"),
            other => panic!("{other:?}"),
        }
        let cfg = ExperimentConfig::parse(EXP1).unwrap();
        match cfg.validate(Command::ChainSweep) {
            Err(Error::Validation { path, .. }) => assert_eq!(path, "chain"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn actor_critic_rejects_exact_agents() {
        let text = r#"
name = "mc"
[ac]
env = "mountaincar"
steps = 10000
[grid]
estimators = ["REG", "EXPECTED"]
alpha = [0.1]
beta = [0.5]
"#;
        let cfg = ExperimentConfig::parse(text).unwrap();
        match cfg.validate(Command::AcSweep) {
            Err(Error::Validation { path, .. }) => assert_eq!(path, "grid.estimators[1]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn escort_cells_skip_entropy_bonus() {
        let text = r#"
name = "mc"
[ac]
env = "mountaincar"
steps = 10000
[grid]
estimators = ["REG"]
alpha = [0.1]
beta = [0.5]
tau = [0.0, 0.1]
policy = ["softmax", "escort"]
escort_p = [2.0, 3.0]
"#;
        let cfg = ExperimentConfig::parse(text).unwrap();
        cfg.validate(Command::AcSweep).unwrap();
        let cells = expand_grid(cfg.grid.as_ref().unwrap(), &[]).unwrap();
        assert_eq!(cells.len(), 2 + 2);
        assert!(cells.iter().all(|c| c.tau == 0.0 || c.policy == PolicyChoice::Softmax));
    }
}
