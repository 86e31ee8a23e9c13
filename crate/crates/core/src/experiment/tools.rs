//! Single-shot tools: fixed-point verification, simplex fields, and the
//! sampling-tree benchmark.

use std::time::Instant;

use super::config::{FieldBaseline, FixedPointSection, SimplexFieldSection, TreeBenchSection};
use crate::bandit::{
    biased_fixed_point, biased_update_step, figure_b3_quantities, max_attractor_stepsize,
    simplex_field_emit, BaselineMode, BanditTask, FixedPoint, InequalityTerms, SimplexFieldRow,
};
use crate::error::{Error, Result};
use crate::numerics::{kl_to_softmax, softmax, PolicyVector, PreferenceVector, RngStream};
use crate::sampling_tree::{LinearScanSampler, SamplingTree};

/// Iteration stops once the policy is this close to the fixed point; below
/// it, rounding dominates the per-step change in KL.
pub const KL_CONVERGED: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct KlRow {
    pub t: usize,
    /// `KL(π* ‖ π_t)`.
    pub kl: f64,
    /// Stepsize used to move from `t − 1` to `t`.
    pub alpha: Option<f64>,
    /// Largest provably contracting stepsize at `π_{t−1}` (optimistic only).
    pub bound: Option<f64>,
    pub terms: Option<InequalityTerms>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Increasing,
    Decreasing,
    Neither,
}

impl Trend {
    pub fn of(series: &[f64]) -> Trend {
        if series.windows(2).all(|w| w[1] > w[0]) {
            Trend::Increasing
        } else if series.windows(2).all(|w| w[1] < w[0]) {
            Trend::Decreasing
        } else {
            Trend::Neither
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Trend::Increasing => "strictly_increasing",
            Trend::Decreasing => "strictly_decreasing",
            Trend::Neither => "not_monotone",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointReport {
    pub pi_star: PolicyVector,
    pub rows: Vec<KlRow>,
    pub trend: Trend,
    /// Stopped before `steps` because KL fell below [`KL_CONVERGED`].
    pub converged: bool,
}

/// Iterates the expected alternate update with a fixed baseline and tracks
/// `KL(π* ‖ π_t)`. Without a configured stepsize, each step uses half the
/// attractor bound at the current policy.
pub fn fixed_point_verify(s: &FixedPointSection) -> Result<FixedPointReport> {
    let task = BanditTask::new(s.rewards.clone(), 0.0)?;
    let pi_star = match biased_fixed_point(&task, s.baseline)? {
        FixedPoint::Interior(p) => p,
        _ => {
            return Err(Error::validation(
                "fixed_point.baseline",
                "no interior fixed point for this baseline",
            ))
        }
    };
    let max_r = s.rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let optimistic = s.baseline > max_r;
    let mut theta = PreferenceVector::new(s.init.clone())?;
    let mut rows = vec![KlRow {
        t: 0,
        kl: kl_to_softmax(&pi_star, theta.as_slice())?,
        alpha: None,
        bound: None,
        terms: None,
    }];
    let mut converged = false;
    for t in 1..=s.steps {
        let pi = softmax(theta.as_slice())?;
        let bound = if optimistic {
            Some(max_attractor_stepsize(&pi, &task, s.baseline)?)
        } else {
            None
        };
        let alpha = match (s.alpha, bound) {
            (Some(a), _) => a,
            (None, Some(b)) if b.is_finite() => b / 2.0,
            // At π* itself every stepsize is a fixed point.
            (None, _) => {
                converged = true;
                break;
            }
        };
        let terms = figure_b3_quantities(&pi, &task, s.baseline, alpha)?;
        theta = biased_update_step(&theta, &task, s.baseline, alpha)?;
        let kl = kl_to_softmax(&pi_star, theta.as_slice())?;
        rows.push(KlRow {
            t,
            kl,
            alpha: Some(alpha),
            bound,
            terms: Some(terms),
        });
        if optimistic && kl < KL_CONVERGED {
            converged = true;
            break;
        }
    }
    let series: Vec<f64> = rows.iter().map(|r| r.kl).collect();
    Ok(FixedPointReport {
        pi_star,
        trend: Trend::of(&series),
        rows,
        converged,
    })
}

pub const KL_HEADER: [&str; 8] = [
    "t",
    "kl",
    "alpha",
    "bound",
    "lhs_log_term",
    "lower_bound",
    "upper_bound",
    "rhs_inverse_sum",
];

pub fn kl_csv(report: &FixedPointReport) -> Result<Vec<u8>> {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(KL_HEADER)?;
    for r in &report.rows {
        let t = r.terms;
        w.write_record([
            r.t.to_string(),
            r.kl.to_string(),
            opt(r.alpha),
            opt(r.bound),
            opt(t.map(|t| t.lhs_log_term)),
            opt(t.map(|t| t.lower_bound)),
            opt(t.map(|t| t.upper_bound)),
            opt(t.map(|t| t.rhs_inverse_sum)),
        ])?;
    }
    w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))
}

pub fn simplex_field(s: &SimplexFieldSection) -> Result<Vec<SimplexFieldRow>> {
    let task = BanditTask::new(s.rewards.clone(), s.noise_std)?;
    let mode = match s.baseline {
        FieldBaseline::Fixed(b) => BaselineMode::Fixed(b),
        FieldBaseline::Named(_) => BaselineMode::TrueValue,
    };
    simplex_field_emit(&task, s.estimator, mode, s.resolution, s.alpha)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    /// `tree_sample`, `tree_update`, `scan_sample` or `scan_update`.
    pub op: &'static str,
    pub max_visits: usize,
    /// `⌈log₂ n⌉ + 1`.
    pub visit_bound: usize,
    pub ns_per_op: f64,
}

pub const BENCH_HEADER: [&str; 5] = ["n", "op", "max_visits", "visit_bound", "ns_per_op"];

fn ceil_log2(n: usize) -> usize {
    (usize::BITS - (n - 1).leading_zeros()) as usize
}

/// Times sampling and single-preference updates for the tree and for a
/// linear scan, at `n = 2^min_log2 ..= 2^max_log2` actions.
pub fn tree_bench(s: &TreeBenchSection, seed: u64) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for e in s.min_log2..=s.max_log2 {
        let n = 1usize << e;
        let mut rng = RngStream::new(seed, u64::from(e));
        let prefs: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let actions: Vec<usize> = (0..n).collect();
        let mut tree = SamplingTree::build(&actions, &prefs, &mut rng)?;
        let mut scan = LinearScanSampler::new(&prefs)?;
        let bound = ceil_log2(n) + 1;
        let updates: Vec<(usize, f64)> = (0..s.updates)
            .map(|_| ((rng.uniform() * n as f64) as usize % n, rng.standard_normal()))
            .collect();

        let (mut tu, mut su) = (0, 0);
        let start = Instant::now();
        for &(a, th) in &updates {
            tree.update_preference(a, th)?;
            tu = tu.max(tree.last_visits());
        }
        let tree_update_ns = start.elapsed().as_nanos() as f64;
        let start = Instant::now();
        for &(a, th) in &updates {
            scan.update_preference(a, th)?;
            su = su.max(scan.last_visits());
        }
        let scan_update_ns = start.elapsed().as_nanos() as f64;

        let (mut ts, mut ss) = (0, 0);
        let start = Instant::now();
        for _ in 0..s.samples {
            tree.sample(&mut rng);
            ts = ts.max(tree.last_visits());
        }
        let tree_sample_ns = start.elapsed().as_nanos() as f64;
        // The scan is O(n) per draw; cap its work so large n stay quick.
        let scan_samples = s.samples.min((1 << 24) / n).max(1);
        let start = Instant::now();
        for _ in 0..scan_samples {
            scan.sample(&mut rng);
            ss = ss.max(scan.last_visits());
        }
        let scan_sample_ns = start.elapsed().as_nanos() as f64;

        let per = |ns: f64, k: usize| if k == 0 { 0.0 } else { ns / k as f64 };
        rows.push(BenchRow { n, op: "tree_sample", max_visits: ts, visit_bound: bound, ns_per_op: per(tree_sample_ns, s.samples) });
        rows.push(BenchRow { n, op: "tree_update", max_visits: tu, visit_bound: bound, ns_per_op: per(tree_update_ns, s.updates) });
        rows.push(BenchRow { n, op: "scan_sample", max_visits: ss, visit_bound: bound, ns_per_op: per(scan_sample_ns, scan_samples) });
        rows.push(BenchRow { n, op: "scan_update", max_visits: su, visit_bound: bound, ns_per_op: per(scan_update_ns, s.updates) });
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(BENCH_HEADER)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.op.to_string(),
            r.max_visits.to_string(),
            r.visit_bound.to_string(),
            format!("{:.1}", r.ns_per_op),
        ])?;
    }
    w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))
}
