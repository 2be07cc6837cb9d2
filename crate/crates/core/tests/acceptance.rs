//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! run with `--nocapture` to see them.

use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kdf::funnel::{alpha1, normalize_and_transform, stage_i, ErrorKind, GainSet};
use kdf::pipeline::bench::{default_algorithms, run_bench, summarize};
use kdf::pipeline::scenario::{ObstacleSpec, RobotSpec};
use kdf::pipeline::{
    bounds_from_funnels, breach_windows, check_trace, run_kdf, write_trace, Scenario,
};
use kdf::planners::{kdf_rrt, kinodynamic_rrt_outcome};
use kdf::plant::{Dynamics, PlantModel, PlantState};
use kdf::world::{ExtCheckPolicy, Inflation};
use kdf::Configuration;

const LN3: f64 = 1.098_612_288_668_109_7;
#[allow(clippy::excessive_precision)]
const ALPHA1_ORACLE: f64 = -29.296_327_697_816_258;
#[allow(clippy::excessive_precision)]
const STAGE2_ORACLE: f64 = -205.074_293_884_713_81;

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

fn load(name: &str) -> Scenario {
    Scenario::load(scenario_path(name)).expect("scenario loads")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn criteria_1_2() -> (Outcome, Outcome) {
    let s = load("uav.scn");
    let t0 = Instant::now();
    let out = run_kdf(&s).expect("uav run completes");
    let secs = t0.elapsed().as_secs_f64();
    let c = check_trace(&out.layout, &out.trace);
    let v = &out.verdict;
    let c1 = outcome(
        v.breach_ticks == 0
            && v.max_abs_xi < 1.0
            && c.containment_violations.is_empty()
            && c.max_abs_xi < 1.0
            && c.xi_residual <= 1e-9
            && v.u_finite,
        format!(
            "{} ticks, breach ticks {}, max |xi| {:.6}, logged violations {}, {:.1} s",
            v.ticks,
            v.breach_ticks,
            v.max_abs_xi,
            c.containment_violations.len(),
            secs
        ),
    );
    let c2 = outcome(
        v.goal_reached && v.final_distance < 0.05 && v.collisions == 0 && v.min_clearance > 0.0,
        format!(
            "final d_T {:.3e}, collisions {}, min D {:.4} m",
            v.final_distance, v.collisions, v.min_clearance
        ),
    );
    (c1, c2)
}

fn criterion_3() -> Outcome {
    let s = load("pendulum.scn");
    assert_eq!(s.world.n_r, 1);
    let out = run_kdf(&s).expect("pendulum run completes");
    let c = check_trace(&out.layout, &out.trace);
    let eta_max = out
        .trace
        .iter()
        .map(|r| r.e[0][0] / r.rho[0][0])
        .fold(0.0, f64::max);
    let closest_pi = out
        .trace
        .iter()
        .map(|r| std::f64::consts::PI - r.e_rot[0].abs())
        .fold(f64::INFINITY, f64::min);
    outcome(
        c.containment_violations.is_empty()
            && out.verdict.breach_ticks == 0
            && c.rot_singular == 0
            && closest_pi > 0.0
            && out.verdict.all_pass(),
        format!(
            "max eta/rho {:.4}, min (pi - |e_r|) {:.4}, breach ticks {}, goal {}",
            eta_max, closest_pi, out.verdict.breach_ticks, out.verdict.goal_reached
        ),
    )
}

fn criterion_4() -> Outcome {
    let tr = normalize_and_transform(0.1, 0.2, ErrorKind::Trans);
    let rot = normalize_and_transform(0.5, 1.0, ErrorKind::Rot);
    let gains = GainSet {
        k_t: vec![2.0],
        k_r: vec![],
        k_higher: vec![vec![35.0]],
    };
    let a1 = alpha1(&[tr.eps], &[tr.r], &[], &[], &[0.2], &[], &gains)[0];
    let st = stage_i(
        &DVector::from_element(1, 0.25),
        &DVector::zeros(1),
        &[0.5],
        &[35.0],
    );
    let errs = [
        rel(tr.eps, LN3),
        rel(tr.r, 8.0 / 3.0),
        rel(rot.eps, std::f64::consts::LN_2),
        rel(rot.r, 2.0),
        rel(a1, ALPHA1_ORACLE),
        rel(st.alpha[0], STAGE2_ORACLE),
    ];
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    outcome(
        worst <= 1e-9,
        format!(
            "eps {:.12}, r {:.12}, alpha1 {:.9}, stage {:.8}, worst rel err {worst:.2e}",
            tr.eps, tr.r, a1, st.alpha[0]
        ),
    )
}

fn seg_point_dist(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let ab = b - a;
    let s = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + ab * s)).norm()
}

fn obstacle_dist(o: &ObstacleSpec, p: &Vector3<f64>) -> f64 {
    match o {
        ObstacleSpec::Sphere { center, radius } => {
            (p - Vector3::from_column_slice(center)).norm() - radius
        }
        ObstacleSpec::Aabb { min, max } => {
            let outside = Vector3::from_fn(|i, _| (min[i] - p[i]).max(p[i] - max[i]).max(0.0));
            let n = outside.norm();
            if n > 0.0 {
                n
            } else {
                -(0..3)
                    .map(|i| (p[i] - min[i]).min(max[i] - p[i]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
        ObstacleSpec::Capsule { a, b, radius } => {
            seg_point_dist(
                p,
                &Vector3::from_column_slice(a),
                &Vector3::from_column_slice(b),
            ) - radius
        }
    }
}

fn criterion_5() -> Outcome {
    let s = load("uav.scn");
    let setup = s.setup().unwrap();
    let robot = match s.world.robot {
        RobotSpec::Sphere { radius } => radius,
        _ => unreachable!("uav robot is a sphere"),
    };
    let rho_bar = [0.2, 0.2, 0.2];
    let inf = bounds_from_funnels(&setup.funnels).unwrap();
    assert_eq!(inf.trans(), &rho_bar);
    let grow = rho_bar.iter().map(|r| r * r).sum::<f64>().sqrt();
    let bounds = &s.world.trans_bounds;
    let mut violations = 0usize;
    let mut samples = 0usize;
    let mut failures = 0usize;
    let mut min_margin = f64::INFINITY;
    for seed in 1..=20u64 {
        let path = match kdf_rrt(
            &setup.world,
            &inf,
            &setup.start,
            &setup.goal,
            &s.planner.params(seed),
        ) {
            Ok(p) => p,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        for pair in path.waypoints.windows(2) {
            let a = Vector3::from_column_slice(pair[0].trans());
            let b = Vector3::from_column_slice(pair[1].trans());
            let n = ((b - a).norm() / 0.01).ceil().max(1.0) as usize;
            for i in 0..=n {
                let p = a + (b - a) * (i as f64 / n as f64);
                samples += 1;
                let d = s
                    .world
                    .obstacles
                    .iter()
                    .map(|o| obstacle_dist(o, &p))
                    .fold(f64::INFINITY, f64::min);
                let margin = d - robot - grow;
                min_margin = min_margin.min(margin);
                let in_bounds = (0..3).all(|j| p[j] >= bounds[j][0] && p[j] <= bounds[j][1]);
                if margin <= 0.0 || !in_bounds {
                    violations += 1;
                }
            }
        }
    }
    outcome(
        violations == 0 && failures == 0,
        format!("20 seeds, {failures} planner failures, {samples} samples, {violations} violations, min margin {min_margin:.4} m"),
    )
}

fn criterion_6() -> Outcome {
    let s = load("arm6.scn");
    let rows = run_bench(&s, &default_algorithms(&s), 20).expect("bench runs");
    let sum = summarize(&rows);
    let get = |name: &str| sum.iter().find(|x| x.algorithm == name).expect(name);
    let (g, n10, n50) = (
        get("geometric_rrt"),
        get("kdf_rrt@ns=10"),
        get("kdf_rrt@ns=50"),
    );
    let runs_ok = [g, n10, n50]
        .iter()
        .all(|x| x.runs >= 20 && x.successes == x.runs);
    let times_ordered =
        g.time_ms.median <= n10.time_ms.median && n10.time_ms.median <= n50.time_ms.median;
    let nodes = [g.nodes.median, n10.nodes.median, n50.nodes.median];
    let node_ratio = nodes.iter().cloned().fold(0.0, f64::max)
        / nodes.iter().cloned().fold(f64::INFINITY, f64::min);

    let kino = |name: &str| {
        let s = load(name);
        let setup = s.setup().unwrap();
        let k = s.kinodynamic.clone().expect("kinodynamic section");
        let start = PlantState::at_rest(&setup.plant, setup.start.clone(), 0.0);
        kinodynamic_rrt_outcome(
            &setup.plant,
            &setup.world,
            &start,
            &setup.goal.center,
            &k.params(s.seed),
        )
        .expect("kinodynamic search runs")
    };
    let two = kino("arm2_kino.scn");
    let four = kino("arm4_kino.scn");
    let kino_ok = two.path.is_some() && four.path.is_none() && four.expansions >= 1_000_000;

    outcome(
        runs_ok && times_ordered && node_ratio <= 3.0 && kino_ok,
        format!(
            "median ms geometric {:.2} <= ns10 {:.2} <= ns50 {:.2}; node medians {:?} (ratio {:.2}); kino 2-joint {} in {} expansions, 4-joint {} after {} expansions",
            g.time_ms.median,
            n10.time_ms.median,
            n50.time_ms.median,
            nodes,
            node_ratio,
            if two.path.is_some() { "solved" } else { "unsolved" },
            two.expansions,
            if four.path.is_some() { "solved" } else { "unsolved" },
            four.expansions
        ),
    )
}

fn criterion_7() -> Outcome {
    let s = load("uav.scn");
    let w = s.world().unwrap();
    let sig = w.signature().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (mut counter, mut free_big) = (0usize, 0usize);
    for _ in 0..1000 {
        let q = Configuration::new(
            sig.trans_bounds()
                .iter()
                .map(|&(lo, hi)| rng.random_range(lo..=hi))
                .collect(),
            vec![],
        );
        let small: Vec<f64> = (0..3).map(|_| rng.random_range(0.001..0.5)).collect();
        let big: Vec<f64> = small
            .iter()
            .map(|r| r + rng.random_range(0.0..0.5))
            .collect();
        let r1 = Inflation::new(big, vec![]).unwrap();
        let r2 = Inflation::new(small, vec![]).unwrap();
        let f1 = w
            .is_free_extended(&q, &r1, ExtCheckPolicy::AnalyticInflation)
            .unwrap();
        let f2 = w
            .is_free_extended(&q, &r2, ExtCheckPolicy::AnalyticInflation)
            .unwrap();
        free_big += usize::from(f1);
        if f1 && !f2 {
            counter += 1;
        }
    }
    outcome(
        counter == 0 && free_big > 0,
        format!("1000 configurations, {free_big} free under the larger inflation, {counter} counterexamples"),
    )
}

fn criterion_8() -> Outcome {
    let s = load("uav_disturbed.scn");
    assert_eq!(s.disturbance.len(), 3);
    let out = run_kdf(&s).expect("disturbed run completes");
    let c = check_trace(&out.layout, &out.trace);
    let windows = breach_windows(&s);
    let v = &out.verdict;
    outcome(
        v.breaches_outside_windows == 0
            && c.violations_outside(&windows) == 0
            && v.goal_reached
            && v.u_finite
            && c.u_finite
            && v.collisions == 0,
        format!(
            "breach ticks {} ({} outside windows), max |xi| {:.4}, goal {}, u finite {}",
            v.breach_ticks, v.breaches_outside_windows, v.max_abs_xi, v.goal_reached, v.u_finite
        ),
    )
}

/// `q̈ = -q`.
struct Oscillator;

impl Dynamics for Oscillator {
    fn order(&self) -> usize {
        2
    }
    fn n_tr(&self) -> usize {
        1
    }
    fn n_r(&self) -> usize {
        0
    }
    fn drift(&self, stage: usize, states: &[DVector<f64>], _t: f64) -> DVector<f64> {
        if stage == 0 {
            DVector::zeros(1)
        } else {
            -states[0].clone()
        }
    }
    fn input_gain(&self, _stage: usize, _states: &[DVector<f64>], _t: f64) -> DMatrix<f64> {
        DMatrix::identity(1, 1)
    }
    fn name(&self) -> &str {
        "oscillator"
    }
}

fn criterion_9() -> Outcome {
    let m = PlantModel::new(Arc::new(Oscillator)).unwrap();
    let s = PlantState::at_rest(&m, Configuration::new(vec![1.0], vec![]), 0.0);
    let t_end = 2.0;
    let pts: Vec<(f64, f64)> = [10usize, 20, 40, 80, 160]
        .iter()
        .map(|&n| {
            let end = m.advance(&s, &DVector::zeros(1), t_end, n).unwrap();
            let err = (end.q1.trans()[0] - t_end.cos()).abs();
            ((t_end / n as f64).ln(), err.ln())
        })
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    outcome(slope >= 3.5, format!("log-log slope {slope:.3}"))
}

fn criterion_10() -> Outcome {
    let scn = scenario_path("uav.scn");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut codes = Vec::new();
    for d in &dirs {
        let status = Command::new(env!("CARGO_BIN_EXE_kdf"))
            .args(["run", "--scenario"])
            .arg(&scn)
            .args(["--seed", "7", "--out"])
            .arg(d.path())
            .stdout(Stdio::null())
            .status()
            .expect("kdf binary runs");
        codes.push(status.code());
    }
    let a = std::fs::read(dirs[0].path().join("trace.csv")).unwrap_or_default();
    let b = std::fs::read(dirs[1].path().join("trace.csv")).unwrap_or_default();

    let mut s = load("uav.scn");
    s.seed = 7;
    let out = run_kdf(&s).unwrap();
    let mut c = Vec::new();
    write_trace(&mut c, &out.layout, &out.trace).unwrap();

    outcome(
        codes == [Some(0), Some(0)] && !a.is_empty() && a == b && a == c,
        format!(
            "exit codes {codes:?}, trace sizes {} / {} bytes, identical {}, matches in-process run {}",
            a.len(),
            b.len(),
            a == b,
            a == c
        ),
    )
}

#[test]
fn acceptance_criteria() {
    let mut results: Vec<(u32, Outcome)> = Vec::new();
    let (c1, c2) = criteria_1_2();
    results.push((1, c1));
    results.push((2, c2));
    results.push((3, criterion_3()));
    results.push((4, criterion_4()));
    results.push((5, criterion_5()));
    results.push((6, criterion_6()));
    results.push((7, criterion_7()));
    results.push((8, criterion_8()));
    results.push((9, criterion_9()));
    results.push((10, criterion_10()));
    for (id, o) in &results {
        println!(
            "criterion {id:>2} {}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    let failed: Vec<u32> = results
        .iter()
        .filter(|(_, o)| !o.pass)
        .map(|(i, _)| *i)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
