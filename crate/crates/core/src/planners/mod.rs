//! Sampling-based planners over the extended free space, plus the geometric
//! and kinodynamic baselines.

mod kinodynamic;
pub mod nn;
mod prm;
mod rrt;

use std::collections::HashSet;
use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config_space::{covering_length, dist_unchecked, interpolate_unchecked, Configuration};
use crate::error::{KdfError, Result};
use crate::world::{ExtCheckPolicy, Inflation, World};

pub use kinodynamic::{baseline_kinodynamic_rrt, kinodynamic_rrt_outcome, KinoParams, KinoResult};
pub use prm::{kdf_prm, prm_query, prm_query_plain, Roadmap};
pub use rrt::{
    baseline_geometric_rrt, geometric_rrt_outcome, kdf_rrt, kdf_rrt_outcome, RrtOutcome,
};

/// Segment spacing used by the geometric baseline when none is given.
pub const PLAIN_DEFAULT_STEP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Tree,
    Roadmap,
}

#[derive(Debug, Clone)]
pub struct PlanGraph {
    kind: GraphKind,
    nodes: Vec<Configuration>,
    edges: Vec<(usize, usize)>,
    edge_set: HashSet<(usize, usize)>,
    parent: Vec<Option<usize>>,
    adjacency: Vec<Vec<usize>>,
}

impl PlanGraph {
    pub fn tree(root: Configuration) -> Self {
        Self {
            kind: GraphKind::Tree,
            nodes: vec![root],
            edges: Vec::new(),
            edge_set: HashSet::new(),
            parent: vec![None],
            adjacency: vec![Vec::new()],
        }
    }

    pub fn roadmap() -> Self {
        Self {
            kind: GraphKind::Roadmap,
            nodes: Vec::new(),
            edges: Vec::new(),
            edge_set: HashSet::new(),
            parent: Vec::new(),
            adjacency: Vec::new(),
        }
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn nodes(&self) -> &[Configuration] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        self.parent[i]
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    /// Adds a tree child of `parent`.
    pub fn add_child(&mut self, parent: usize, q: Configuration) -> usize {
        debug_assert_eq!(self.kind, GraphKind::Tree);
        let i = self.push_node(q);
        self.parent[i] = Some(parent);
        self.insert_edge(parent, i);
        i
    }

    /// Adds an isolated roadmap node.
    pub fn add_node(&mut self, q: Configuration) -> usize {
        debug_assert_eq!(self.kind, GraphKind::Roadmap);
        self.push_node(q)
    }

    fn push_node(&mut self, q: Configuration) -> usize {
        self.nodes.push(q);
        self.parent.push(None);
        self.adjacency.push(Vec::new());
        self.nodes.len() - 1
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edge_set.contains(&(a.min(b), a.max(b)))
    }

    /// Inserts an undirected edge. Returns `false` if it was already present.
    pub fn insert_edge(&mut self, a: usize, b: usize) -> bool {
        if a == b || !self.edge_set.insert((a.min(b), a.max(b))) {
            return false;
        }
        self.edges.push((a, b));
        self.adjacency[a].push(b);
        self.adjacency[b].push(a);
        true
    }

    /// Node indices from the root to `i`.
    pub fn branch(&self, i: usize) -> Vec<usize> {
        let mut out = vec![i];
        let mut cur = i;
        while let Some(p) = self.parent[cur] {
            out.push(p);
            cur = p;
        }
        out.reverse();
        out
    }

    /// Single root, one parent per non-root node, parents precede children
    /// (hence no cycles), and edges match the parent links.
    pub fn is_valid_tree(&self) -> bool {
        if self.kind != GraphKind::Tree || self.parent.first() != Some(&None) {
            return false;
        }
        let links_ok = self
            .parent
            .iter()
            .enumerate()
            .skip(1)
            .all(|(i, p)| matches!(p, Some(p) if *p < i && self.has_edge(*p, i)));
        links_ok && self.edges.len() + 1 == self.nodes.len()
    }
}

/// Ball of radius `radius` under `d_T` around `center`.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalRegion {
    pub center: Configuration,
    pub radius: f64,
}

impl GoalRegion {
    pub const DEFAULT_RADIUS: f64 = 0.05;

    pub fn new(center: Configuration) -> Self {
        Self {
            center,
            radius: Self::DEFAULT_RADIUS,
        }
    }

    pub fn contains(&self, q: &Configuration) -> bool {
        q.same_shape(&self.center) && dist_unchecked(q, &self.center) < self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalConnect {
    /// Try the goal only from each newly added node.
    NewNodes,
    /// Try the goal from every tree node on every iteration.
    AllNodes,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerParams {
    pub eta: f64,
    pub goal_connect: GoalConnect,
    pub k_neighbors: usize,
    pub n_nodes: usize,
    pub max_iterations: usize,
    pub seed: u64,
    pub policy: ExtCheckPolicy,
    pub segment_step: Option<f64>,
    pub sample_budget: usize,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            eta: 0.5,
            goal_connect: GoalConnect::NewNodes,
            k_neighbors: 10,
            n_nodes: 500,
            max_iterations: 20_000,
            seed: 0,
            policy: ExtCheckPolicy::AnalyticInflation,
            segment_step: None,
            sample_budget: 100_000,
        }
    }
}

impl PlannerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || self.k_neighbors == 0 || self.n_nodes == 0 {
            return Err(KdfError::InvalidParameter(
                "planner needs eta > 0, K >= 1 and N >= 1".into(),
            ));
        }
        if let Some(s) = self.segment_step {
            if !(s > 0.0) {
                return Err(KdfError::InvalidParameter(
                    "segment step must be > 0".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlannerStats {
    pub algorithm: String,
    pub seed: u64,
    pub iterations: usize,
    pub nodes: usize,
    pub wall_ms: f64,
    pub success: bool,
}

#[derive(Debug, Clone)]
pub struct Path {
    pub waypoints: Vec<Configuration>,
    /// Sum of `d_T` over consecutive waypoints.
    pub length: f64,
    pub stats: PlannerStats,
}

impl Path {
    pub fn new(waypoints: Vec<Configuration>, stats: PlannerStats) -> Self {
        let length = waypoints
            .windows(2)
            .map(|w| dist_unchecked(&w[0], &w[1]))
            .sum();
        Self {
            waypoints,
            length,
            stats,
        }
    }

    pub fn start(&self) -> &Configuration {
        &self.waypoints[0]
    }

    pub fn end(&self) -> &Configuration {
        self.waypoints.last().expect("paths are nonempty")
    }
}

/// Rejection sampling of a uniform configuration inside `Ā_free(ρ̄)`.
pub fn sample_ext<R: Rng>(
    w: &World,
    inf: &Inflation,
    policy: ExtCheckPolicy,
    rng: &mut R,
    budget: usize,
) -> Result<Configuration> {
    w.check_policy(policy)?;
    sample_where(w, rng, budget, |q| {
        w.free_extended_unchecked(q, inf, policy, 0.0)
    })
}

/// Uniform configuration within the signature bounds.
pub fn sample_uniform<R: Rng>(w: &World, rng: &mut R) -> Configuration {
    let sig = w.signature();
    let trans = sig
        .trans_bounds()
        .iter()
        .map(|&(lo, hi)| {
            if hi > lo {
                rng.random_range(lo..hi)
            } else {
                lo
            }
        })
        .collect();
    let rot = (0..sig.n_r()).map(|_| rng.random_range(0.0..TAU)).collect();
    Configuration::new(trans, rot)
}

pub(crate) fn sample_where<R: Rng, F: Fn(&Configuration) -> bool>(
    w: &World,
    rng: &mut R,
    budget: usize,
    accept: F,
) -> Result<Configuration> {
    for _ in 0..budget {
        let q = sample_uniform(w, rng);
        if accept(&q) {
            return Ok(q);
        }
    }
    Err(KdfError::SampleBudgetExhausted(budget))
}

/// Linear-scan nearest node under `d_T`; ties go to the lowest index.
pub fn nearest(g: &PlanGraph, q: &Configuration) -> Result<usize> {
    let mut best: Option<(f64, usize)> = None;
    for (i, c) in g.nodes().iter().enumerate() {
        if !c.same_shape(q) {
            return Err(KdfError::SignatureMismatch(
                c.trans().len(),
                c.rot().len(),
                q.trans().len(),
                q.rot().len(),
            ));
        }
        let d = dist_unchecked(c, q);
        if best.is_none_or(|(b, _)| d < b) {
            best = Some((d, i));
        }
    }
    best.map(|b| b.1).ok_or(KdfError::EmptyGraph)
}

/// Moves from `from` toward `toward` by at most `eta`, measured as the
/// covering-space length `√(‖Δtrans‖² + ‖arc Δrot‖²)`.
pub fn steer(from: &Configuration, toward: &Configuration, eta: f64) -> Configuration {
    let len = covering_length(from, toward);
    if len <= eta {
        toward.clone()
    } else {
        interpolate_unchecked(from, toward, eta / len)
    }
}

/// Replaces a goal center outside `Ā_free(ρ̄)` by the closest admissible
/// configuration found on growing boxes around it.
pub fn retarget_goal<R: Rng>(
    w: &World,
    inf: &Inflation,
    policy: ExtCheckPolicy,
    goal: &GoalRegion,
    rng: &mut R,
) -> Result<Configuration> {
    if w.free_extended_unchecked(&goal.center, inf, policy, 0.0) {
        return Ok(goal.center.clone());
    }
    let per_ring = 256;
    let mut half = goal.radius.sqrt().max(1e-3);
    for _ in 0..16 {
        let mut best: Option<(f64, Configuration)> = None;
        for _ in 0..per_ring {
            let delta: Vec<f64> = (0..goal.center.dim())
                .map(|_| rng.random_range(-half..half))
                .collect();
            let q = goal.center.offset(&delta);
            if w.signature().contains(&q) && w.free_extended_unchecked(&q, inf, policy, 0.0) {
                let d = dist_unchecked(&q, &goal.center);
                if best.as_ref().is_none_or(|(b, _)| d < *b) {
                    best = Some((d, q));
                }
            }
        }
        if let Some((_, q)) = best {
            log::info!("goal retargeted to {q}");
            return Ok(q);
        }
        half *= 2.0;
    }
    Err(KdfError::SampleBudgetExhausted(per_ring * 16))
}

/// Step used for edge checks: explicit, else the inflation default.
pub fn edge_step(p: &PlannerParams, inf: &Inflation) -> f64 {
    p.segment_step.unwrap_or_else(|| inf.default_step())
}

/// Independent re-check of every waypoint and edge of a path.
pub fn verify_path(
    w: &World,
    inf: &Inflation,
    policy: ExtCheckPolicy,
    step: f64,
    path: &[Configuration],
) -> Result<bool> {
    for q in path {
        if !w.is_free_extended(q, inf, policy)? {
            return Ok(false);
        }
    }
    for pair in path.windows(2) {
        if !w.segment_free_extended(&pair[0], &pair[1], inf, policy, step)? {
            return Ok(false);
        }
    }
    Ok(true)
}
