//! End-to-end sweeps through the library entry points.

use altgrad::experiment::{
    run_sweep, summarize, write_sweep, Command, ExperimentConfig, RunOptions, WindowRule,
};

fn sweep(text: &str, command: Command) -> altgrad::experiment::SweepResult {
    let cfg = ExperimentConfig::parse(text).unwrap();
    run_sweep(&cfg, command, &RunOptions { jobs: Some(2), subset: None }).unwrap()
}

#[test]
fn chain_sweep_logs_objective_or_return_per_episode() {
    let text = r#"
name = "c"
runs = 3
[chain]
env = "hard_chain"
episodes = 25
metric = "objective"
final_window = 5
[grid]
estimators = ["EXPECTED", "ALT"]
baselines = ["true_value", "frozen"]
baseline_init = [4.0]
alpha = [0.5]
"#;
    let result = sweep(text, Command::ChainSweep);
    // EXPECTED pairs only with the true value.
    let labels: Vec<_> = result.cells.iter().map(|c| c.cell.label.clone()).collect();
    assert_eq!(labels, ["EXPECTED_true_a=0.5", "ALT_true_a=0.5", "ALT_frozen_b0=4_a=0.5"]);
    for cell in &result.cells {
        for run in &cell.runs {
            assert_eq!(run.rows.len(), 25);
            assert!(run.rows.iter().all(|r| r.entropy.is_none() && (0.0..=0.81 + 1e-12).contains(&r.value)));
        }
    }
    // The expected gradient is deterministic, so every run is identical.
    let exp = &result.cells[0].runs;
    assert!(exp.iter().all(|r| r.rows == exp[0].rows));
    let ret = sweep(&text.replace("\"objective\"", "\"return\""), Command::ChainSweep);
    assert!(ret.cells[1].runs[0].rows.iter().any(|r| r.value < 0.0 || r.value > 0.81));
}

#[test]
fn actor_critic_sweep_has_switch_and_final_windows() {
    let text = r#"
name = "dr"
runs = 2
[ac]
env = "dotreacher"
steps = 3000
goal_move = { at = 1500, goal = [0.5, 0.5] }
final_window = 1000
[grid]
estimators = ["REG", "ALT"]
baselines = ["learned"]
alpha = [0.25]
beta = [0.5]
tau = [0.0, 0.01]
policy = ["softmax", "escort"]
escort_p = [2.0]
"#;
    let result = sweep(text, Command::AcSweep);
    // (softmax × two τ + escort × τ=0) per estimator.
    assert_eq!(result.cells.len(), 6);
    let names: Vec<_> = result.windows.iter().map(|w| (w.name.as_str(), w.rule.clone())).collect();
    assert_eq!(
        names,
        [
            ("pre_switch", WindowRule::StepRange { lo: 500, hi: 1500 }),
            ("final", WindowRule::StepRange { lo: 2000, hi: 3000 }),
        ]
    );
    for cell in &result.cells {
        for run in &cell.runs {
            assert!(run.rows.windows(2).all(|w| w[0].step < w[1].step));
            assert!(run.rows.last().unwrap().step <= 3000);
            assert!(run.rows.iter().all(|r| r.entropy.is_some_and(|h| h >= 0.0)));
        }
    }
    assert_eq!(summarize(&result).len(), 12);
}

#[test]
fn sweep_output_is_reproducible_on_disk() {
    let text = r#"
name = "b"
runs = 3
seed = 5
[bandit]
rewards = [0.0, 1.0]
steps = 60
[grid]
estimators = ["REG", "ALT"]
baselines = ["learned"]
alpha_log2 = [-2, 0]
beta = [0.5]
tau = [0.0]
grad_noise = [0.0, 0.5]
"#;
    let dir = tempfile::tempdir().unwrap();
    let a = write_sweep(&sweep(text, Command::BanditSweep), &dir.path().join("a"), text, &[]).unwrap();
    let b = write_sweep(&sweep(text, Command::BanditSweep), &dir.path().join("b"), text, &[]).unwrap();
    for rel in ["summary.csv", "best.csv", "manifest.txt", "ALT_learned_b0=0_noise=0.5_a=1_beta=0.5/2.csv"] {
        assert_eq!(std::fs::read(a.join(rel)).unwrap(), std::fs::read(b.join(rel)).unwrap(), "{rel}");
    }
}

#[test]
fn wrong_section_for_command_is_rejected() {
    let cfg = ExperimentConfig::parse("name = \"x\"\n[tree_bench]\n").unwrap();
    let err = run_sweep(&cfg, Command::BanditSweep, &RunOptions::default()).unwrap_err();
    assert!(err.to_string().contains("bandit"), "{err}");
}
