//! `altgrad`: runs experiment configs and writes CSV logs.

use std::path::{Path, PathBuf};

use altgrad::experiment::{
    bench_csv, code_version, fixed_point_verify, kl_csv, manifest, run_sweep, sha256_hex,
    simplex_field, tree_bench, write_atomic, write_sweep, Command, ExperimentConfig, RunOptions,
};
use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

/// Overrides `--out` when set.
const OUT_ENV: &str = "ALTGRAD_OUT";

#[derive(Parser)]
#[command(name = "altgrad", version, about = "Regular vs. alternate policy-gradient experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Gradient-bandit agents over an estimator × baseline × stepsize grid.
    BanditSweep(Common),
    /// Tabular REINFORCE / expected gradient on the chain environments.
    ChainSweep(Common),
    /// Online actor-critic with tile coding.
    AcSweep(Common),
    /// KL to the biased fixed point under expected alternate updates.
    FixedPointVerify(Common),
    /// One-step stochastic updates over a grid on the 3-action simplex.
    SimplexField(Common),
    /// Node visits and timings of the sampling tree vs. a linear scan.
    TreeBench(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output root; defaults to the config's `out`, then `results`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Base seed, replacing the config's.
    #[arg(long)]
    seed: Option<u64>,
    /// Only run cells whose label matches this glob.
    #[arg(long)]
    subset: Option<String>,
}

impl Sub {
    fn split(self) -> (Command, Common) {
        match self {
            Sub::BanditSweep(c) => (Command::BanditSweep, c),
            Sub::ChainSweep(c) => (Command::ChainSweep, c),
            Sub::AcSweep(c) => (Command::AcSweep, c),
            Sub::FixedPointVerify(c) => (Command::FixedPointVerify, c),
            Sub::SimplexField(c) => (Command::SimplexField, c),
            Sub::TreeBench(c) => (Command::TreeBench, c),
        }
    }
}

fn main() -> Result<()> {
    let (command, args) = Cli::parse().command.split();
    let root = run(command, args)?;
    println!("{}", root.display());
    Ok(())
}

fn output_root(args: &Common, config: &ExperimentConfig) -> PathBuf {
    std::env::var_os(OUT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .or_else(|| args.out.clone())
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("results"))
}

fn run(command: Command, args: Common) -> Result<PathBuf> {
    let (mut config, text) = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate(command)?;
    let out = output_root(&args, &config);
    let extra = vec![("config_path", args.config.display().to_string())];

    if matches!(command, Command::BanditSweep | Command::ChainSweep | Command::AcSweep) {
        let options = RunOptions {
            jobs: args.jobs,
            subset: args.subset.clone(),
        };
        let result = run_sweep(&config, command, &options)?;
        let mut extra = extra;
        if let Some(s) = &args.subset {
            extra.push(("subset", s.clone()));
        }
        return Ok(write_sweep(&result, &out, &text, &extra)?);
    }

    let root = out.join(&config.name);
    let mut entries = vec![
        ("command", command.name().to_string()),
        ("name", config.name.clone()),
        ("code_version", code_version()),
        ("config_sha256", sha256_hex(text.as_bytes())),
    ];
    entries.extend(extra);
    match command {
        Command::FixedPointVerify => {
            let section = config.fixed_point.as_ref().context("missing [fixed_point]")?;
            let report = fixed_point_verify(section)?;
            write_atomic(&root.join("kl.csv"), &kl_csv(&report)?)?;
            entries.push(("trend", report.trend.label().to_string()));
            entries.push(("converged", report.converged.to_string()));
            entries.push(("pi_star", join(report.pi_star.as_slice())));
            entries.push((
                "alpha_rule",
                match section.alpha {
                    Some(a) => format!("fixed {a}"),
                    None => "half the attractor bound at the current policy".into(),
                },
            ));
        }
        Command::SimplexField => {
            let section = config.simplex_field.as_ref().context("missing [simplex_field]")?;
            let rows = simplex_field(section)?;
            let mut bytes = Vec::new();
            altgrad::bandit::write_simplex_field(&rows, &mut bytes)?;
            write_atomic(&root.join("field.csv"), &bytes)?;
            entries.push(("points", rows.len().to_string()));
        }
        Command::TreeBench => {
            let section = config.tree_bench.as_ref().context("missing [tree_bench]")?;
            let rows = tree_bench(section, config.seed)?;
            write_atomic(&root.join("bench.csv"), &bench_csv(&rows)?)?;
            let ok = rows
                .iter()
                .filter(|r| r.op.starts_with("tree"))
                .all(|r| r.max_visits <= r.visit_bound);
            entries.push(("base_seed", config.seed.to_string()));
            entries.push(("tree_visits_within_bound", ok.to_string()));
        }
        _ => unreachable!("sweeps handled above"),
    }
    write_manifest(&root, &entries)?;
    Ok(root)
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn write_manifest(root: &Path, entries: &[(&str, String)]) -> Result<()> {
    write_atomic(&root.join("manifest.txt"), &manifest(entries))
        .with_context(|| format!("writing manifest under {}", root.display()))
}
