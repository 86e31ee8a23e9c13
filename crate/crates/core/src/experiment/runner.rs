//! Seeded, parallel execution of sweep cells.

use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::config::{
    expand_grid, AcSection, BanditSection, Cell, ChainMetric, ChainSection, Command,
    ExperimentConfig, PolicyChoice,
};
use crate::agents::{
    chain_expected_pg_run, gradient_bandit_run, online_ac_run, reinforce_run, streams,
    AgentConfig, CriticState, Featurizer,
};
use crate::bandit::{BanditTask, EstimatorKind};
use crate::environments::{
    make_env, Chain, EnvOptions, Episodic, Schedule, StateKind, CHAIN_LENGTH,
};
use crate::error::{Error, Result};
use crate::features::TileCoder;
use crate::numerics::RngStream;
use crate::policies::{EscortPolicy, LinearSoftmaxPolicy, Policy, TabularSoftmaxPolicy};

/// One line of a per-run log.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    /// Step (bandits), episode (chain) or global step at episode end (actor-critic).
    pub step: usize,
    /// Exact `J` (bandits), return or `J` (chain), or undiscounted return.
    pub value: f64,
    pub entropy: Option<f64>,
    pub baseline: f64,
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub run: usize,
    pub seed: u64,
    pub rows: Vec<LogRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub cell: Cell,
    pub runs: Vec<RunLog>,
}

/// Which rows of a run count towards a summary window.
#[derive(Debug, Clone, PartialEq)]
pub enum WindowRule {
    LastRows(usize),
    /// Rows with `lo < step ≤ hi`.
    StepRange { lo: usize, hi: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub name: String,
    pub rule: WindowRule,
}

impl Window {
    pub fn describe(&self) -> String {
        match self.rule {
            WindowRule::LastRows(n) => format!("last {n} rows"),
            WindowRule::StepRange { lo, hi } => format!("rows with {lo} < step <= {hi}"),
        }
    }

    /// Mean of `value` over the window, or `None` if no row falls in it.
    pub fn mean(&self, rows: &[LogRow]) -> Option<f64> {
        let vals: Vec<f64> = match self.rule {
            WindowRule::LastRows(n) => rows[rows.len().saturating_sub(n)..].iter().map(|r| r.value).collect(),
            WindowRule::StepRange { lo, hi } => rows
                .iter()
                .filter(|r| r.step > lo && r.step <= hi)
                .map(|r| r.value)
                .collect(),
        };
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub command: Command,
    pub name: String,
    pub base_seed: u64,
    pub windows: Vec<Window>,
    pub cells: Vec<CellResult>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses every core.
    pub jobs: Option<usize>,
    /// Glob over cell labels; only matching cells run.
    pub subset: Option<String>,
}

/// `u64` seed of one run: the first eight bytes (little endian) of
/// `SHA-256(base_seed_le ‖ cell_label ‖ run_index_le)`.
pub fn derive_seed(base_seed: u64, cell_label: &str, run: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(base_seed.to_le_bytes());
    h.update(cell_label.as_bytes());
    h.update((run as u64).to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

pub const SEED_RULE: &str = "first 8 bytes (LE) of sha256(base_seed as u64 LE || cell label || run index as u64 LE)";

/// The cells a sweep config expands to.
pub fn sweep_cells(config: &ExperimentConfig) -> Result<Vec<Cell>> {
    let grid = config
        .grid
        .as_ref()
        .ok_or_else(|| Error::validation("grid", "missing [grid] section"))?;
    let default_init = if let Some(b) = &config.bandit {
        vec![0.0; b.rewards.len()]
    } else if let Some(c) = &config.chain {
        vec![0.0; if c.env == "hard_chain" { 4 } else { 2 }]
    } else {
        Vec::new()
    };
    expand_grid(grid, &default_init)
}

pub fn sweep_windows(config: &ExperimentConfig) -> Vec<Window> {
    let final_last = |n| Window {
        name: "final".into(),
        rule: WindowRule::LastRows(n),
    };
    if let Some(b) = &config.bandit {
        return vec![final_last(b.final_window)];
    }
    if let Some(c) = &config.chain {
        return vec![final_last(c.final_window)];
    }
    let ac = config.ac.as_ref().expect("validated sweep has a section");
    let w = ac.final_window;
    let mut windows = Vec::new();
    let switch = ac.swap_at.or(ac.goal_move.as_ref().map(|g| g.at));
    if let Some(at) = switch {
        if at >= w && at <= ac.steps {
            windows.push(Window {
                name: "pre_switch".into(),
                rule: WindowRule::StepRange { lo: at - w, hi: at },
            });
        }
    }
    windows.push(Window {
        name: "final".into(),
        rule: WindowRule::StepRange {
            lo: ac.steps - w,
            hi: ac.steps,
        },
    });
    windows
}

/// Validates `config` for `command` and runs every (cell, run) pair.
pub fn run_sweep(config: &ExperimentConfig, command: Command, options: &RunOptions) -> Result<SweepResult> {
    config.validate(command)?;
    let mut cells = sweep_cells(config)?;
    if let Some(pattern) = &options.subset {
        let pat = glob::Pattern::new(pattern)
            .map_err(|e| Error::validation("--subset", e.to_string()))?;
        cells.retain(|c| pat.matches(&c.label));
        if cells.is_empty() {
            return Err(Error::validation("--subset", format!("`{pattern}` matches no cell")));
        }
    }
    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..config.runs).map(move |r| (c, r)))
        .collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = options.jobs {
        if j == 0 {
            return Err(Error::validation("--jobs", "must be at least 1"));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Unsupported(format!("cannot start worker pool: {e}")))?;
    let logs: Vec<Result<RunLog>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(c, r)| {
                let cell = &cells[c];
                let seed = derive_seed(config.seed, &cell.label, r);
                run_cell(config, cell, seed, config.timing)
                    .map(|rows| RunLog { run: r, seed, rows })
                    .map_err(|e| Error::Run {
                        cell: cell.label.clone(),
                        run: r,
                        source: Box::new(e),
                    })
            })
            .collect()
    });
    let mut results: Vec<CellResult> = cells
        .into_iter()
        .map(|cell| CellResult {
            cell,
            runs: Vec::with_capacity(config.runs),
        })
        .collect();
    for (&(c, _), log) in tasks.iter().zip(logs) {
        results[c].runs.push(log?);
    }
    Ok(SweepResult {
        command,
        name: config.name.clone(),
        base_seed: config.seed,
        windows: sweep_windows(config),
        cells: results,
    })
}

fn agent_config(cell: &Cell) -> AgentConfig {
    AgentConfig {
        estimator: cell.estimator,
        baseline: cell.baseline,
        alpha: cell.alpha,
        tau: cell.tau,
        grad_noise_std: cell.grad_noise,
    }
}

/// Runs one cell once; the rows of its per-run log.
pub fn run_cell(config: &ExperimentConfig, cell: &Cell, seed: u64, timing: bool) -> Result<Vec<LogRow>> {
    let start = Instant::now();
    let mut rows = if let Some(b) = &config.bandit {
        run_bandit(b, cell, seed)?
    } else if let Some(c) = &config.chain {
        run_chain(c, cell, seed)?
    } else if let Some(a) = &config.ac {
        run_ac(a, cell, seed)?
    } else {
        return Err(Error::validation("<document>", "no sweep section"));
    };
    if timing {
        if let Some(last) = rows.last_mut() {
            last.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
        }
    }
    Ok(rows)
}

fn run_bandit(s: &BanditSection, cell: &Cell, seed: u64) -> Result<Vec<LogRow>> {
    let task = BanditTask::new(s.rewards.clone(), s.noise_std)?;
    let log = gradient_bandit_run(&task, &agent_config(cell), &cell.init, s.steps, seed)?;
    Ok(log
        .into_iter()
        .enumerate()
        .map(|(t, step)| LogRow {
            step: t + 1,
            value: step.j,
            entropy: Some(step.entropy),
            baseline: step.b,
            wall_ms: None,
        })
        .collect())
}

fn run_chain(s: &ChainSection, cell: &Cell, seed: u64) -> Result<Vec<LogRow>> {
    let chain = if s.env == "hard_chain" {
        Chain::hard(s.reward_noise_std)?
    } else {
        Chain::two_action(s.reward_noise_std)?
    };
    let cfg = agent_config(cell);
    let records = if cell.estimator == EstimatorKind::Expected {
        chain_expected_pg_run(&chain, &cfg, &cell.init, s.episodes)?
    } else {
        let model = chain.model();
        let mut env = Episodic::new(chain);
        if let Some(t) = s.timeout {
            env = env.with_timeout(t);
        }
        let featurizer = Featurizer::OneHot(CHAIN_LENGTH);
        let mut policy = TabularSoftmaxPolicy::with_preferences(CHAIN_LENGTH, &cell.init);
        let mut critic = CriticState::from_spec(CHAIN_LENGTH, cfg.baseline);
        reinforce_run(
            &mut env,
            &mut policy,
            &featurizer,
            &mut critic,
            &cfg,
            s.episodes,
            seed,
            Some(&model),
        )?
    };
    records
        .into_iter()
        .enumerate()
        .map(|(e, r)| {
            let value = match s.metric {
                ChainMetric::Return => r.ret,
                ChainMetric::Objective => r
                    .objective
                    .ok_or_else(|| Error::Protocol("chain run did not log its objective".into()))?,
            };
            Ok(LogRow {
                step: e + 1,
                value,
                entropy: None,
                baseline: r.start_value,
                wall_ms: None,
            })
        })
        .collect()
}

fn run_ac(s: &AcSection, cell: &Cell, seed: u64) -> Result<Vec<LogRow>> {
    let probe = make_env(&s.env, &EnvOptions::default())?;
    let spec = probe.spec().clone();
    let bounds = match spec.state_kind {
        StateKind::Continuous { bounds } => bounds,
        StateKind::Discrete { .. } => {
            return Err(Error::validation("ac.env", "actor-critic sweeps need a continuous state"))
        }
    };
    let schedule = match (s.swap_at, &s.goal_move) {
        (Some(at), _) => Some(Schedule::swap_ends(at, spec.n_actions)),
        (None, Some(g)) => Some(Schedule::GoalMove { at: g.at, goal: g.goal }),
        (None, None) => None,
    };
    let options = EnvOptions {
        reward_noise_std: 0.0,
        timeout: s.timeout,
        schedule,
    };
    let mut env = make_env(&s.env, &options)?;
    let coder = TileCoder::new(
        bounds,
        s.tiles,
        s.tilings,
        &mut RngStream::new(seed, streams::SETUP),
    )?;
    let normalizer = coder.normalizer();
    let featurizer = Featurizer::Tiles(coder);
    let d = featurizer.dim();
    let mut policy: Box<dyn Policy> = match cell.policy {
        PolicyChoice::Softmax => Box::new(LinearSoftmaxPolicy::new(d, spec.n_actions)),
        PolicyChoice::Escort(p) => Box::new(
            EscortPolicy::new(d, spec.n_actions, p)?
                .with_unit_preferences(featurizer.bias_index().expect("tiles carry a bias"), normalizer)?,
        ),
    };
    let cfg = agent_config(cell);
    let mut critic = CriticState::from_spec(d, cfg.baseline);
    let episodes = online_ac_run(env.as_mut(), policy.as_mut(), &featurizer, &mut critic, &cfg, s.steps, seed)?;
    Ok(episodes
        .into_iter()
        .map(|e| LogRow {
            step: e.end_step,
            value: e.ret,
            entropy: Some(e.mean_entropy),
            baseline: e.start_value,
            wall_ms: None,
        })
        .collect())
}
