//! Planner comparison over seeded repeats.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::scenario::{PolicyName, Scenario};
use super::{bounds_from_funnels, Setup};
use crate::error::Result;
use crate::planners::{geometric_rrt_outcome, kdf_rrt_outcome, kinodynamic_rrt_outcome};
use crate::plant::PlantState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchAlgorithm {
    /// KDF-RRT; `ns` overrides the sampled-policy sample count.
    KdfRrt {
        ns: Option<usize>,
    },
    GeometricRrt,
    KinodynamicRrt,
}

impl BenchAlgorithm {
    pub fn name(&self) -> String {
        match self {
            BenchAlgorithm::KdfRrt { ns: Some(n) } => format!("kdf_rrt@ns={n}"),
            BenchAlgorithm::KdfRrt { ns: None } => "kdf_rrt".into(),
            BenchAlgorithm::GeometricRrt => "geometric_rrt".into(),
            BenchAlgorithm::KinodynamicRrt => "kinodynamic_rrt".into(),
        }
    }
}

/// Default suite for a scenario: geometric RRT, KDF-RRT at each `N_s`
/// (or once for non-sampled policies), and the kinodynamic baseline when
/// the scenario declares it.
pub fn default_algorithms(s: &Scenario) -> Vec<BenchAlgorithm> {
    let mut out = Vec::new();
    if s.bench.geometric {
        out.push(BenchAlgorithm::GeometricRrt);
    }
    if s.planner.policy == PolicyName::Sampled {
        out.extend(
            s.bench
                .ns
                .iter()
                .map(|&n| BenchAlgorithm::KdfRrt { ns: Some(n) }),
        );
    } else {
        out.push(BenchAlgorithm::KdfRrt { ns: None });
    }
    if s.kinodynamic.is_some() {
        out.push(BenchAlgorithm::KinodynamicRrt);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub scenario: String,
    pub algorithm: String,
    pub seed: u64,
    pub success: bool,
    pub wall_ms: f64,
    pub nodes: usize,
    pub iterations: usize,
}

fn run_one(s: &Scenario, setup: &Setup, alg: BenchAlgorithm, seed: u64) -> Result<BenchRow> {
    let row = |success, wall_ms, nodes, iterations| BenchRow {
        scenario: s.name.clone(),
        algorithm: alg.name(),
        seed,
        success,
        wall_ms,
        nodes,
        iterations,
    };
    let mut spec = s.planner.clone();
    let stats = match alg {
        BenchAlgorithm::KdfRrt { ns } => {
            if let Some(n) = ns {
                spec.samples = n;
            }
            let inf = bounds_from_funnels(&setup.funnels)?;
            kdf_rrt_outcome(
                &setup.world,
                &inf,
                &setup.start,
                &setup.goal,
                &spec.params(seed),
            )?
            .stats
        }
        BenchAlgorithm::GeometricRrt => {
            geometric_rrt_outcome(&setup.world, &setup.start, &setup.goal, &spec.params(seed))?
                .stats
        }
        BenchAlgorithm::KinodynamicRrt => {
            let k = s.kinodynamic.clone().unwrap_or_default();
            let start = PlantState::at_rest(&setup.plant, setup.start.clone(), 0.0);
            let r = kinodynamic_rrt_outcome(
                &setup.plant,
                &setup.world,
                &start,
                &setup.goal.center,
                &k.params(seed),
            )?;
            r.stats()
        }
    };
    Ok(row(
        stats.success,
        stats.wall_ms,
        stats.nodes,
        stats.iterations,
    ))
}

/// Runs `repeats` seeded instances (`seed, seed + 1, …`) of every
/// algorithm in parallel. Rows come back in (algorithm, seed) order.
pub fn run_bench(
    s: &Scenario,
    algorithms: &[BenchAlgorithm],
    repeats: usize,
) -> Result<Vec<BenchRow>> {
    let setup = s.setup()?;
    let jobs: Vec<(BenchAlgorithm, u64)> = algorithms
        .iter()
        .flat_map(|&a| {
            let n = match a {
                BenchAlgorithm::KinodynamicRrt => s
                    .kinodynamic
                    .as_ref()
                    .map_or(repeats, |k| k.repeats.min(repeats)),
                _ => repeats,
            };
            (0..n as u64).map(move |r| (a, r))
        })
        .collect();
    jobs.par_iter()
        .map(|&(a, r)| run_one(s, &setup, a, s.seed.wrapping_add(r)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    /// Points beyond 1.5 IQR from the box.
    pub outliers: usize,
}

/// Quartiles with linear interpolation between order statistics.
pub fn quartiles(values: &[f64]) -> Quartiles {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        if v.is_empty() {
            return f64::NAN;
        }
        let h = p * (v.len() - 1) as f64;
        let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
        v[lo] + (h - lo as f64) * (v[hi] - v[lo])
    };
    let (q1, median, q3) = (q(0.25), q(0.5), q(0.75));
    let iqr = q3 - q1;
    let outliers = v
        .iter()
        .filter(|&&x| x < q1 - 1.5 * iqr || x > q3 + 1.5 * iqr)
        .count();
    Quartiles {
        q1,
        median,
        q3,
        outliers,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchSummary {
    pub scenario: String,
    pub algorithm: String,
    pub runs: usize,
    pub successes: usize,
    pub time_ms: Quartiles,
    pub nodes: Quartiles,
}

pub fn summarize(rows: &[BenchRow]) -> Vec<BenchSummary> {
    let mut keys: Vec<(String, String)> = Vec::new();
    for r in rows {
        let k = (r.scenario.clone(), r.algorithm.clone());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(scenario, algorithm)| {
            let sel: Vec<&BenchRow> = rows
                .iter()
                .filter(|r| r.scenario == scenario && r.algorithm == algorithm)
                .collect();
            BenchSummary {
                runs: sel.len(),
                successes: sel.iter().filter(|r| r.success).count(),
                time_ms: quartiles(&sel.iter().map(|r| r.wall_ms).collect::<Vec<_>>()),
                nodes: quartiles(&sel.iter().map(|r| r.nodes as f64).collect::<Vec<_>>()),
                scenario,
                algorithm,
            }
        })
        .collect()
}

pub fn write_rows<W: Write>(out: W, rows: &[BenchRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(out: W, summary: &[BenchSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "scenario",
        "algorithm",
        "runs",
        "successes",
        "time_q1_ms",
        "time_median_ms",
        "time_q3_ms",
        "time_outliers",
        "nodes_q1",
        "nodes_median",
        "nodes_q3",
        "nodes_outliers",
    ])?;
    for s in summary {
        w.write_record([
            s.scenario.clone(),
            s.algorithm.clone(),
            s.runs.to_string(),
            s.successes.to_string(),
            s.time_ms.q1.to_string(),
            s.time_ms.median.to_string(),
            s.time_ms.q3.to_string(),
            s.time_ms.outliers.to_string(),
            s.nodes.q1.to_string(),
            s.nodes.median.to_string(),
            s.nodes.q3.to_string(),
            s.nodes.outliers.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn summary_text(summary: &[BenchSummary]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:<18} {:>5} {:>5} {:>12} {:>12} {:>12} {:>10}",
        "scenario", "algorithm", "runs", "ok", "t_med [ms]", "t_q1", "t_q3", "nodes_med"
    );
    for s in summary {
        let _ = writeln!(
            out,
            "{:<12} {:<18} {:>5} {:>5} {:>12.2} {:>12.2} {:>12.2} {:>10.0}",
            s.scenario,
            s.algorithm,
            s.runs,
            s.successes,
            s.time_ms.median,
            s.time_ms.q1,
            s.time_ms.q3,
            s.nodes.median
        );
    }
    out
}
