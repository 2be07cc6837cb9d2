//! End-to-end orchestration: bounds from funnels, planning in the extended
//! free space, time endowment, and the closed-loop funnel simulation.

pub mod bench;
pub mod scenario;
pub mod trace;

use std::sync::Arc;

use crate::config_space::{wrap_pi, Configuration};
use crate::error::{KdfError, Result};
use crate::funnel::{FunnelController, FunnelSet, Reference};
use crate::planners::{kdf_prm, kdf_rrt, prm_query, Path};
use crate::plant::PlantState;
use crate::trajectory::{allocate_times, validate_extended, TimedTrajectory, ValidationReport};
use crate::world::Inflation;

pub use scenario::{Scenario, Setup};
pub use trace::{check_trace, read_trace, write_trace, TraceCheck, TraceLayout, TraceRecord};

/// Exit status for an all-pass run.
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PLANNER: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_SIMULATION: i32 = 4;

/// Maps a pipeline error to its process exit status.
pub fn exit_code(err: &KdfError) -> i32 {
    match err {
        KdfError::NoPathFound { .. }
        | KdfError::QueryFailed(_)
        | KdfError::SampleBudgetExhausted(_)
        | KdfError::EmptyGraph => EXIT_PLANNER,
        KdfError::TrajectoryInvalid { .. } => EXIT_VALIDATION,
        KdfError::NonFinite { .. } => EXIT_SIMULATION,
        _ => EXIT_USAGE,
    }
}

/// `ρ̄`: each stage-1 funnel's initial value.
pub fn bounds_from_funnels(funnels: &FunnelSet) -> Result<Inflation> {
    Inflation::new(
        funnels.trans.iter().map(|f| f.upper()).collect(),
        funnels.rot.iter().map(|f| f.upper()).collect(),
    )
}

/// Plans from `start` into the goal ball through the extended free space.
pub fn plan(s: &Scenario, setup: &Setup) -> Result<Path> {
    let inf = bounds_from_funnels(&setup.funnels)?;
    match s.planner.algorithm {
        scenario::PlannerAlgorithm::Rrt => {
            kdf_rrt(&setup.world, &inf, &setup.start, &setup.goal, &setup.params)
        }
        scenario::PlannerAlgorithm::Prm => {
            let rm = kdf_prm(&setup.world, &inf, &setup.params)?;
            prm_query(&setup.world, &rm, &setup.start, &setup.goal)
        }
    }
}

/// Time-endows `path` and re-validates it in the extended free space.
pub fn endow(
    s: &Scenario,
    setup: &Setup,
    path: &Path,
) -> Result<(TimedTrajectory, ValidationReport)> {
    let inf = bounds_from_funnels(&setup.funnels)?;
    let hold = s.sim.hold();
    let traj = if path.waypoints.len() < 2 {
        TimedTrajectory::smooth(&path.waypoints, &[], s.sim.t_f, setup.plant.order())?
    } else {
        let d = allocate_times(&path.waypoints, s.sim.t_f - hold)?;
        if s.sim.raw_segments {
            log::warn!("raw-segment reference: velocity jumps at every waypoint");
            TimedTrajectory::linear(&path.waypoints, &d, hold)?
        } else {
            TimedTrajectory::smooth(&path.waypoints, &d, hold, setup.plant.order())?
        }
    };
    validate_extended(
        &traj,
        &setup.world,
        &inf,
        setup.params.policy,
        s.sim.dt_check(),
        s.sim.repair_rounds,
    )
}

/// Reference seen by a controller restarted at `t0`.
struct Restarted {
    traj: Arc<TimedTrajectory>,
    t0: f64,
}

impl Reference for Restarted {
    fn t0(&self) -> f64 {
        self.t0
    }
    fn t_end(&self) -> f64 {
        self.traj.duration()
    }
    fn sample(&self, t: f64) -> Configuration {
        self.traj.eval(t)
    }
}

/// Aggregate outcome of one closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub goal_reached: bool,
    /// `d_T(q₁(t_f), goal)`.
    pub final_distance: f64,
    pub collisions: usize,
    pub min_clearance: f64,
    /// Ticks with at least one funnel breach.
    pub breach_ticks: usize,
    pub breaches_outside_windows: usize,
    pub max_abs_xi: f64,
    pub u_finite: bool,
    pub ticks: usize,
}

impl Verdict {
    pub fn all_pass(&self) -> bool {
        self.goal_reached
            && self.collisions == 0
            && self.breaches_outside_windows == 0
            && self.u_finite
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: goal {} (d_T {:.3e}), collisions {}, min clearance {:.4} m, breach ticks {} ({} outside windows), max |xi| {:.6}, {} ticks",
            if self.all_pass() { "PASS" } else { "FAIL" },
            if self.goal_reached { "reached" } else { "missed" },
            self.final_distance,
            self.collisions,
            self.min_clearance,
            self.breach_ticks,
            self.breaches_outside_windows,
            self.max_abs_xi,
            self.ticks
        )
    }
}

/// Disturbance windows `[t_start, t_end + pad]`.
pub fn breach_windows(s: &Scenario) -> Vec<(f64, f64)> {
    s.disturbance
        .iter()
        .map(|p| (p.t_start, p.t_end + s.sim.window_pad))
        .collect()
}

pub fn trace_layout(setup: &Setup) -> TraceLayout {
    TraceLayout {
        n_tr: setup.plant.n_tr(),
        n_r: setup.plant.n_r(),
        order: setup.plant.order(),
    }
}

/// Closed loop: at every tick compute `u`, hold it, integrate to the next
/// tick. One record per kept tick, `t = 0, tick, …, t_f`.
pub fn simulate(
    s: &Scenario,
    setup: &Setup,
    traj: Arc<TimedTrajectory>,
) -> Result<(Vec<TraceRecord>, Verdict)> {
    let sim = &s.sim;
    let (n_ticks, substeps) = (sim.ticks(), sim.substeps());
    let windows = breach_windows(s);
    let order = setup.plant.order();
    let n_tr = setup.plant.n_tr();
    let new_controller = |t0: f64| {
        FunnelController::new(
            Arc::new(Restarted {
                traj: traj.clone(),
                t0,
            }),
            setup.funnels.clone(),
            setup.gains.clone(),
            order,
        )
    };
    let mut ctrl = new_controller(0.0)?;
    let mut segment = traj.segment_at(0.0);
    let mut state = PlantState::at_rest(&setup.plant, setup.start.clone(), 0.0);
    let mut trace = Vec::with_capacity(n_ticks / sim.trace_every + 2);
    let mut v = Verdict {
        goal_reached: false,
        final_distance: f64::INFINITY,
        collisions: 0,
        min_clearance: f64::INFINITY,
        breach_ticks: 0,
        breaches_outside_windows: 0,
        max_abs_xi: 0.0,
        u_finite: true,
        ticks: 0,
    };
    for i in 0..=n_ticks {
        let t = i as f64 * sim.tick;
        state.t = t;
        if sim.raw_segments {
            let seg = traj.segment_at(t);
            if seg.is_some() && seg != segment {
                ctrl = new_controller(t)?;
            }
            segment = seg;
        }
        let (u, diag) = ctrl.control_tick(&state)?;
        let free = setup.world.is_free(&state.q1);
        let dist = setup.world.clearance(&state.q1);
        let e_rot: Vec<f64> = state
            .q1
            .rot()
            .iter()
            .zip(diag.q_d.rot())
            .map(|(a, b)| wrap_pi(a - b))
            .collect();
        if !free {
            v.collisions += 1;
        }
        v.min_clearance = v.min_clearance.min(dist);
        if !diag.breaches.is_empty() {
            v.breach_ticks += 1;
            if !windows.iter().any(|&(a, b)| t >= a && t <= b) {
                v.breaches_outside_windows += 1;
            }
        }
        v.max_abs_xi = v.max_abs_xi.max(diag.max_abs_xi());
        v.u_finite &= u.iter().all(|x| x.is_finite());
        debug_assert_eq!(diag.e[0].len(), n_tr + setup.plant.n_r());
        if i % sim.trace_every == 0 || i == n_ticks {
            trace.push(TraceRecord {
                t,
                q1: state.q1.to_flat(),
                q_d: diag.q_d.to_flat(),
                e_rot,
                e: diag.e,
                rho: diag.rho,
                xi: diag.xi,
                u: diag.u,
                dist,
                breaches: diag.breaches.len(),
                free,
            });
        }
        if i < n_ticks {
            state = setup.plant.advance(&state, &u, sim.tick, substeps)?;
        }
    }
    v.ticks = n_ticks + 1;
    v.final_distance = state.q1.dist(&setup.goal.center)?;
    v.goal_reached = setup.goal.contains(&state.q1);
    Ok((trace, v))
}

/// Everything produced by one full run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub path: Path,
    pub trajectory: TimedTrajectory,
    pub validation: ValidationReport,
    pub layout: TraceLayout,
    pub trace: Vec<TraceRecord>,
    pub verdict: Verdict,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        if self.verdict.all_pass() {
            EXIT_OK
        } else {
            EXIT_SIMULATION
        }
    }
}

/// Plan, endow with time, validate, and simulate.
pub fn run_kdf(s: &Scenario) -> Result<RunOutput> {
    let setup = s.setup()?;
    let path = plan(s, &setup)?;
    log::info!(
        "planned {} waypoints in {:.1} ms ({} nodes)",
        path.waypoints.len(),
        path.stats.wall_ms,
        path.stats.nodes
    );
    let (traj, validation) = endow(s, &setup, &path)?;
    if validation.repair_rounds > 0 {
        log::info!("trajectory repaired in {} rounds", validation.repair_rounds);
    }
    let traj = Arc::new(traj);
    let (trace, verdict) = simulate(s, &setup, traj.clone())?;
    Ok(RunOutput {
        path,
        trajectory: Arc::try_unwrap(traj).unwrap_or_else(|a| (*a).clone()),
        validation,
        layout: trace_layout(&setup),
        trace,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funnel::{FunnelFn, HigherRule};
    use approx::assert_relative_eq;

    #[test]
    fn bounds_are_initial_funnel_values() {
        let uav = FunnelSet::new(
            vec![FunnelFn::exponential(0.2, 0.05, 0.1).unwrap(); 3],
            vec![],
            HigherRule::default(),
        )
        .unwrap();
        let b = bounds_from_funnels(&uav).unwrap();
        for v in b.trans() {
            assert_relative_eq!(*v, 0.15 + 0.05, epsilon = 1e-15);
        }
        let c = FunnelSet::new(
            vec![FunnelFn::constant(0.15).unwrap()],
            vec![],
            HigherRule::default(),
        )
        .unwrap();
        assert_eq!(bounds_from_funnels(&c).unwrap().trans(), &[0.15]);
        let arm = FunnelSet::new(
            vec![FunnelFn::exponential(0.15, 0.1, 1.0).unwrap(); 5],
            vec![FunnelFn::exponential(0.01, 0.005, 0.01).unwrap()],
            HigherRule::default(),
        )
        .unwrap();
        let b = bounds_from_funnels(&arm).unwrap();
        let expect: Vec<f64> = [1.0, 15.0, 15.0, 15.0, 15.0, 15.0]
            .iter()
            .map(|x| 0.01 * x)
            .collect();
        let mut got = b.rot().to_vec();
        got.extend_from_slice(b.trans());
        for (g, e) in got.iter().zip(&expect) {
            assert_relative_eq!(g, e, epsilon = 1e-15);
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(
            exit_code(&KdfError::NoPathFound { iterations: 3 }),
            EXIT_PLANNER
        );
        assert_eq!(exit_code(&KdfError::QueryFailed("x".into())), EXIT_PLANNER);
        assert_eq!(
            exit_code(&KdfError::TrajectoryInvalid {
                count: 1,
                first: 0.0,
                times: vec![0.0]
            }),
            EXIT_VALIDATION
        );
        assert_eq!(
            exit_code(&KdfError::NonFinite { t: 0.0, what: "x" }),
            EXIT_SIMULATION
        );
        assert_eq!(exit_code(&KdfError::Scenario("x".into())), EXIT_USAGE);
    }

    const TRIVIAL: &str = r#"
name = "trivial"
[world]
trans_bounds = [[-1.0, 1.0], [-1.0, 1.0]]
workspace_min = [-1.0, -1.0, -1.0]
workspace_max = [1.0, 1.0, 1.0]
robot = { kind = "sphere", radius = 0.1 }
[plant]
kind = "integrator"
[task]
start = [0.2, -0.3]
goal = [0.2, -0.3]
[funnels]
trans = [{ kind = "exponential", start = 0.2, end = 0.05, rate = 1.0 },
         { kind = "constant", value = 0.1 }]
[gains]
k_t = [2.0, 2.0]
k_r = []
k_higher = [[10.0, 10.0]]
[sim]
t_f = 0.5
"#;

    #[test]
    fn trivial_scenario_succeeds_at_rest() {
        let s = Scenario::from_toml(TRIVIAL).unwrap();
        let out = run_kdf(&s).unwrap();
        assert!(out.verdict.all_pass(), "{}", out.verdict);
        assert_eq!(out.path.waypoints.len(), 1);
        assert_eq!(out.trace.len(), 501);
        assert!(out
            .trace
            .iter()
            .all(|r| r.u.iter().all(|u| u.abs() < 1e-12)));
        assert_eq!(out.exit_code(), EXIT_OK);
    }

    #[test]
    fn scenario_dimension_mismatch_is_reported() {
        let bad = TRIVIAL.replace("goal = [0.2, -0.3]", "goal = [0.2]");
        let s = Scenario::from_toml(&bad).unwrap();
        assert!(matches!(s.setup(), Err(KdfError::Scenario(_))));
        assert!(Scenario::from_toml(&TRIVIAL.replace("[sim]", "[sim]\nbogus = 1")).is_err());
    }
}
