//! Scenario files: TOML with the sections `world`, `plant`, `task`,
//! `funnels`, `gains`, `planner`, `sim`, optional `[[disturbance]]`,
//! `bench` and `kinodynamic`. See `scenarios/README.md` for the grammar.

use std::path::Path as FsPath;

use serde::Deserialize;

use crate::config_space::{Configuration, Signature};
use crate::error::{KdfError, Result};
use crate::funnel::{FunnelFn, FunnelSet, GainSet, HigherRule};
use crate::geometry::Vec3;
use crate::planners::{GoalConnect, GoalRegion, KinoParams, PlannerParams};
use crate::plant::{self, PlantModel, Push};
use crate::world::{ArticulatedChain, ExtCheckPolicy, Link, Obstacle, RobotVolume, World};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub world: WorldSpec,
    pub plant: PlantSpec,
    pub task: TaskSpec,
    pub funnels: FunnelSpec,
    pub gains: GainSet,
    #[serde(default)]
    pub planner: PlannerSpec,
    pub sim: SimSpec,
    #[serde(default)]
    pub disturbance: Vec<PushSpec>,
    #[serde(default)]
    pub bench: BenchSpec,
    #[serde(default)]
    pub kinodynamic: Option<KinoSpec>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldSpec {
    pub trans_bounds: Vec<[f64; 2]>,
    #[serde(default)]
    pub n_r: usize,
    pub workspace_min: [f64; 3],
    pub workspace_max: [f64; 3],
    pub robot: RobotSpec,
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RobotSpec {
    Sphere {
        radius: f64,
    },
    Chain {
        #[serde(default)]
        base: [f64; 3],
        #[serde(default)]
        base_yaw: f64,
        links: Vec<LinkSpec>,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub length: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ObstacleSpec {
    Sphere {
        center: [f64; 3],
        radius: f64,
    },
    Aabb {
        min: [f64; 3],
        max: [f64; 3],
    },
    Capsule {
        a: [f64; 3],
        b: [f64; 3],
        radius: f64,
    },
}

impl ObstacleSpec {
    pub fn build(&self) -> Obstacle {
        let v = |p: &[f64; 3]| Vec3::new(p[0], p[1], p[2]);
        match self {
            ObstacleSpec::Sphere { center, radius } => Obstacle::Sphere {
                center: v(center),
                radius: *radius,
            },
            ObstacleSpec::Aabb { min, max } => Obstacle::Aabb {
                min: v(min),
                max: v(max),
            },
            ObstacleSpec::Capsule { a, b, radius } => Obstacle::Capsule {
                p0: v(a),
                p1: v(b),
                radius: *radius,
            },
        }
    }
}

fn yes() -> bool {
    true
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlantSpec {
    Uav {
        #[serde(default = "yes")]
        wind: bool,
    },
    Arm {
        joints: usize,
        #[serde(default)]
        disturbance: f64,
    },
    Pendulum {
        #[serde(default)]
        disturbance: f64,
    },
    Integrator {
        #[serde(default = "two")]
        order: usize,
    },
}

fn default_goal_radius() -> f64 {
    GoalRegion::DEFAULT_RADIUS
}

/// Start and goal as flat `[trans.., rot..]` vectors.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
    #[serde(default = "default_goal_radius")]
    pub goal_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunnelSpec {
    #[serde(default)]
    pub trans: Vec<FunnelFn>,
    #[serde(default)]
    pub rot: Vec<FunnelFn>,
    #[serde(default)]
    pub higher: HigherRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerAlgorithm {
    #[default]
    Rrt,
    Prm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyName {
    #[default]
    Analytic,
    Sampled,
    Swept,
}

impl std::str::FromStr for PolicyName {
    type Err = KdfError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(PolicyName::Analytic),
            "sampled" => Ok(PolicyName::Sampled),
            "swept" => Ok(PolicyName::Swept),
            other => Err(KdfError::InvalidParameter(format!(
                "unknown policy {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerSpec {
    pub algorithm: PlannerAlgorithm,
    pub eta: f64,
    pub goal_connect: GoalConnect,
    pub k_neighbors: usize,
    pub n_nodes: usize,
    pub max_iterations: usize,
    pub policy: PolicyName,
    /// `N_s` for the sampled policy.
    pub samples: usize,
    pub segment_step: Option<f64>,
    pub sample_budget: usize,
}

impl Default for PlannerSpec {
    fn default() -> Self {
        let p = PlannerParams::default();
        Self {
            algorithm: PlannerAlgorithm::Rrt,
            eta: p.eta,
            goal_connect: p.goal_connect,
            k_neighbors: p.k_neighbors,
            n_nodes: p.n_nodes,
            max_iterations: p.max_iterations,
            policy: PolicyName::Analytic,
            samples: 50,
            segment_step: p.segment_step,
            sample_budget: p.sample_budget,
        }
    }
}

impl PlannerSpec {
    pub fn policy(&self, seed: u64) -> ExtCheckPolicy {
        match self.policy {
            PolicyName::Analytic => ExtCheckPolicy::AnalyticInflation,
            PolicyName::Sampled => ExtCheckPolicy::Sampled {
                samples: self.samples,
                seed,
            },
            PolicyName::Swept => ExtCheckPolicy::SweptHull,
        }
    }

    pub fn params(&self, seed: u64) -> PlannerParams {
        PlannerParams {
            eta: self.eta,
            goal_connect: self.goal_connect,
            k_neighbors: self.k_neighbors,
            n_nodes: self.n_nodes,
            max_iterations: self.max_iterations,
            seed,
            policy: self.policy(seed),
            segment_step: self.segment_step,
            sample_budget: self.sample_budget,
        }
    }
}

fn default_tick() -> f64 {
    1e-3
}

fn default_substep() -> f64 {
    1e-4
}

fn default_rounds() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub t_f: f64,
    /// Terminal hold; defaults to 10% of `t_f`.
    #[serde(default)]
    pub hold: Option<f64>,
    #[serde(default = "default_tick")]
    pub tick: f64,
    #[serde(default = "default_substep")]
    pub substep: f64,
    /// Defaults to ten controller ticks.
    #[serde(default)]
    pub dt_check: Option<f64>,
    #[serde(default = "default_rounds")]
    pub repair_rounds: usize,
    /// Piecewise-linear reference with a controller restart per segment.
    #[serde(default)]
    pub raw_segments: bool,
    /// Extra time after each push during which breaches are still
    /// attributed to it.
    #[serde(default)]
    pub window_pad: f64,
    /// Keep every n-th tick in the trace. The verdict still sees every tick.
    #[serde(default = "one")]
    pub trace_every: usize,
}

fn one() -> usize {
    1
}

impl SimSpec {
    pub fn hold(&self) -> f64 {
        self.hold
            .unwrap_or(crate::trajectory::DEFAULT_HOLD_FRACTION * self.t_f)
    }

    pub fn dt_check(&self) -> f64 {
        self.dt_check.unwrap_or(10.0 * self.tick)
    }

    pub fn substeps(&self) -> usize {
        (self.tick / self.substep).round().max(1.0) as usize
    }

    pub fn ticks(&self) -> usize {
        (self.t_f / self.tick).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PushSpec {
    pub t_start: f64,
    pub t_end: f64,
    pub amplitude: Vec<f64>,
}

fn default_repeats() -> usize {
    20
}

fn default_ns() -> Vec<usize> {
    vec![10, 50]
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_ns")]
    pub ns: Vec<usize>,
    #[serde(default = "yes")]
    pub geometric: bool,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self {
            repeats: default_repeats(),
            ns: default_ns(),
            geometric: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KinoSpec {
    pub u_max: f64,
    pub dt: f64,
    pub horizon: f64,
    pub threshold: f64,
    pub max_expansions: usize,
    pub repeats: usize,
}

impl Default for KinoSpec {
    fn default() -> Self {
        let k = KinoParams::default();
        Self {
            u_max: k.u_max,
            dt: k.dt,
            horizon: k.horizon,
            threshold: k.threshold,
            max_expansions: k.max_expansions,
            repeats: 10,
        }
    }
}

impl KinoSpec {
    pub fn params(&self, seed: u64) -> KinoParams {
        KinoParams {
            u_max: self.u_max,
            dt: self.dt,
            horizon: self.horizon,
            threshold: self.threshold,
            max_expansions: self.max_expansions,
            seed,
        }
    }
}

/// Everything a run needs, built and cross-checked from a [`Scenario`].
#[derive(Debug, Clone)]
pub struct Setup {
    pub world: World,
    pub plant: PlantModel,
    pub funnels: FunnelSet,
    pub gains: GainSet,
    pub start: Configuration,
    pub goal: GoalRegion,
    pub params: PlannerParams,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text)?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<FsPath>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn signature(&self) -> Result<Signature> {
        Signature::new(
            self.world.n_r,
            self.world
                .trans_bounds
                .iter()
                .map(|b| (b[0], b[1]))
                .collect(),
        )
    }

    pub fn world(&self) -> Result<World> {
        let sig = self.signature()?;
        let robot = match &self.world.robot {
            RobotSpec::Sphere { radius } => RobotVolume::PointSphere { radius: *radius },
            RobotSpec::Chain {
                base,
                base_yaw,
                links,
            } => RobotVolume::Chain(ArticulatedChain {
                links: links
                    .iter()
                    .map(|l| Link {
                        length: l.length,
                        radius: l.radius,
                    })
                    .collect(),
                base: Vec3::new(base[0], base[1], base[2]),
                base_yaw: *base_yaw,
            }),
        };
        let (lo, hi) = (self.world.workspace_min, self.world.workspace_max);
        World::new(
            sig,
            self.world
                .obstacles
                .iter()
                .map(ObstacleSpec::build)
                .collect(),
            robot,
            Vec3::new(lo[0], lo[1], lo[2]),
            Vec3::new(hi[0], hi[1], hi[2]),
        )
    }

    pub fn plant(&self) -> Result<PlantModel> {
        let base = match self.plant {
            PlantSpec::Uav { wind } => plant::builtin_uav(self.seed, wind),
            PlantSpec::Arm {
                joints,
                disturbance,
            } => plant::builtin_arm(joints, disturbance, self.seed)?,
            PlantSpec::Pendulum { disturbance } => plant::builtin_pendulum(disturbance, self.seed),
            PlantSpec::Integrator { order } => {
                let sig = self.signature()?;
                PlantModel::new(std::sync::Arc::new(plant::IntegratorChain {
                    order,
                    n_tr: sig.n_tr(),
                    n_r: sig.n_r(),
                }))?
            }
        };
        base.with_pushes(self.pushes())
    }

    pub fn pushes(&self) -> Vec<Push> {
        self.disturbance
            .iter()
            .map(|p| Push {
                t_start: p.t_start,
                t_end: p.t_end,
                amplitude: p.amplitude.clone(),
            })
            .collect()
    }

    fn config(&self, flat: &[f64], what: &str) -> Result<Configuration> {
        let sig = self.signature()?;
        if flat.len() != sig.dim() {
            return Err(KdfError::Scenario(format!(
                "{what} has {} coordinates, signature needs {}",
                flat.len(),
                sig.dim()
            )));
        }
        sig.from_flat(flat)
    }

    /// Builds and cross-checks every component.
    pub fn setup(&self) -> Result<Setup> {
        let world = self.world()?;
        let sig = world.signature().clone();
        let plant = self.plant()?;
        if plant.n_tr() != sig.n_tr() || plant.n_r() != sig.n_r() {
            return Err(KdfError::SignatureMismatch(
                sig.n_tr(),
                sig.n_r(),
                plant.n_tr(),
                plant.n_r(),
            ));
        }
        if self.funnels.trans.len() != sig.n_tr() || self.funnels.rot.len() != sig.n_r() {
            return Err(KdfError::Scenario(format!(
                "funnels declare {} + {} coordinates, signature is {} + {}",
                self.funnels.trans.len(),
                self.funnels.rot.len(),
                sig.n_tr(),
                sig.n_r()
            )));
        }
        let funnels = FunnelSet::new(
            self.funnels.trans.clone(),
            self.funnels.rot.clone(),
            self.funnels.higher,
        )?;
        self.gains.validate(sig.n_tr(), sig.n_r(), plant.order())?;
        let sim = &self.sim;
        if !(sim.t_f > 0.0 && sim.tick > 0.0 && sim.substep > 0.0 && sim.substep <= sim.tick) {
            return Err(KdfError::Scenario(
                "sim needs t_f > 0 and 0 < substep <= tick".into(),
            ));
        }
        if sim.trace_every == 0 {
            return Err(KdfError::Scenario("trace_every must be >= 1".into()));
        }
        if !(sim.hold() >= 0.0 && sim.hold() < sim.t_f) {
            return Err(KdfError::Scenario("hold must lie in [0, t_f)".into()));
        }
        if !(self.task.goal_radius > 0.0) {
            return Err(KdfError::Scenario("goal radius must be > 0".into()));
        }
        let start = self.config(&self.task.start, "start")?;
        let goal = GoalRegion {
            center: self.config(&self.task.goal, "goal")?,
            radius: self.task.goal_radius,
        };
        let params = self.planner.params(self.seed);
        params.validate()?;
        Ok(Setup {
            world,
            plant,
            funnels,
            gains: self.gains.clone(),
            start,
            goal,
            params,
        })
    }
}
