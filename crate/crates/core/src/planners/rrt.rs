use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::nn::KdIndex;
use super::{
    edge_step, retarget_goal, sample_where, steer, GoalConnect, GoalRegion, Path, PlanGraph,
    PlannerParams, PlannerStats, PLAIN_DEFAULT_STEP,
};
use crate::config_space::Configuration;
use crate::error::{KdfError, Result};
use crate::world::{Inflation, World};

/// Tree and statistics from one RRT run, successful or not.
#[derive(Debug, Clone)]
pub struct RrtOutcome {
    pub path: Option<Path>,
    pub tree: PlanGraph,
    pub stats: PlannerStats,
}

impl RrtOutcome {
    pub fn into_path(self) -> Result<Path> {
        let iterations = self.stats.iterations;
        self.path.ok_or(KdfError::NoPathFound { iterations })
    }
}

#[allow(clippy::too_many_arguments)]
fn grow<P, S>(
    name: &str,
    w: &World,
    start: &Configuration,
    goal: &GoalRegion,
    goal_rep: Configuration,
    p: &PlannerParams,
    point_free: P,
    seg_free: S,
) -> Result<RrtOutcome>
where
    P: Fn(&Configuration) -> bool,
    S: Fn(&Configuration, &Configuration) -> bool,
{
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut tree = PlanGraph::tree(start.clone());
    let sig = w.signature();
    let mut index = KdIndex::new(sig.n_tr(), sig.n_r());
    index.insert(start);

    let finish = |tree: &PlanGraph, end: Option<usize>, iterations: usize| {
        let stats = PlannerStats {
            algorithm: name.to_string(),
            seed: p.seed,
            iterations,
            nodes: tree.len(),
            wall_ms: clock.elapsed().as_secs_f64() * 1e3,
            success: end.is_some(),
        };
        let path = end.map(|i| {
            let wps = tree
                .branch(i)
                .into_iter()
                .map(|j| tree.nodes()[j].clone())
                .collect();
            Path::new(wps, stats.clone())
        });
        RrtOutcome {
            path,
            tree: tree.clone(),
            stats,
        }
    };

    if goal.contains(start) {
        return Ok(finish(&tree, Some(0), 0));
    }
    if seg_free(start, &goal_rep) {
        let g = tree.add_child(0, goal_rep);
        return Ok(finish(&tree, Some(g), 0));
    }

    for it in 1..=p.max_iterations {
        let y = sample_where(w, &mut rng, p.sample_budget, &point_free)?;
        let near = index.nearest(tree.nodes(), &y).expect("tree is nonempty");
        let z = steer(&tree.nodes()[near], &y, p.eta);
        if !seg_free(&tree.nodes()[near], &z) {
            continue;
        }
        let zi = tree.add_child(near, z);
        index.insert(&tree.nodes()[zi]);
        if goal.contains(&tree.nodes()[zi]) {
            return Ok(finish(&tree, Some(zi), it));
        }
        let candidates: Vec<usize> = match p.goal_connect {
            GoalConnect::NewNodes => vec![zi],
            GoalConnect::AllNodes => (0..tree.len()).collect(),
        };
        for c in candidates {
            if seg_free(&tree.nodes()[c], &goal_rep) {
                let g = tree.add_child(c, goal_rep);
                return Ok(finish(&tree, Some(g), it));
            }
        }
    }
    Ok(finish(&tree, None, p.max_iterations))
}

/// RRT over the extended free space; returns the full outcome.
pub fn kdf_rrt_outcome(
    w: &World,
    inf: &Inflation,
    start: &Configuration,
    goal: &GoalRegion,
    p: &PlannerParams,
) -> Result<RrtOutcome> {
    p.validate()?;
    w.check_policy(p.policy)?;
    w.signature().check(start)?;
    w.signature().check(&goal.center)?;
    if !inf.matches(w.signature()) {
        return Err(KdfError::InvalidParameter(
            "inflation does not match signature".into(),
        ));
    }
    if !w.free_extended_unchecked(start, inf, p.policy, 0.0) {
        return Err(KdfError::InvalidParameter(format!(
            "start {start} is not in the extended free space"
        )));
    }
    let mut goal_rng = ChaCha8Rng::seed_from_u64(p.seed ^ 0x6F61_6C5F_7265_7467);
    let goal_rep = retarget_goal(w, inf, p.policy, goal, &mut goal_rng)?;
    let step = edge_step(p, inf);
    let policy = p.policy;
    grow(
        "kdf_rrt",
        w,
        start,
        goal,
        goal_rep,
        p,
        |q| w.free_extended_unchecked(q, inf, policy, 0.0),
        |a, b| {
            w.segment_check(a, b, step, |q, m| {
                w.free_extended_unchecked(q, inf, policy, m)
            })
        },
    )
}

/// RRT over the extended free space.
pub fn kdf_rrt(
    w: &World,
    inf: &Inflation,
    start: &Configuration,
    goal: &GoalRegion,
    p: &PlannerParams,
) -> Result<Path> {
    kdf_rrt_outcome(w, inf, start, goal, p)?.into_path()
}

/// The same RRT with plain free-space predicates.
pub fn geometric_rrt_outcome(
    w: &World,
    start: &Configuration,
    goal: &GoalRegion,
    p: &PlannerParams,
) -> Result<RrtOutcome> {
    p.validate()?;
    w.signature().check(start)?;
    w.signature().check(&goal.center)?;
    if !w.is_free(start) || !w.is_free(&goal.center) {
        return Err(KdfError::InvalidParameter(
            "start or goal is in collision".into(),
        ));
    }
    let step = p.segment_step.unwrap_or(PLAIN_DEFAULT_STEP);
    grow(
        "geometric_rrt",
        w,
        start,
        goal,
        goal.center.clone(),
        p,
        |q| w.is_free(q),
        |a, b| w.segment_free(a, b, step),
    )
}

pub fn baseline_geometric_rrt(
    w: &World,
    start: &Configuration,
    goal: &GoalRegion,
    p: &PlannerParams,
) -> Result<Path> {
    geometric_rrt_outcome(w, start, goal, p)?.into_path()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config_space::Signature;
    use crate::geometry::Vec3;
    use crate::planners::verify_path;
    use crate::world::{ExtCheckPolicy, Obstacle, RobotVolume};

    fn box_world(obstacles: Vec<Obstacle>) -> World {
        let sig = Signature::new(0, vec![(-2.0, 2.0), (-2.0, 2.0), (0.0, 1.0)]).unwrap();
        World::new(
            sig,
            obstacles,
            RobotVolume::PointSphere { radius: 0.1 },
            Vec3::new(-2.0, -2.0, 0.0),
            Vec3::new(2.0, 2.0, 1.0),
        )
        .unwrap()
    }

    /// Wall at x ∈ [-0.1, 0.1] with a gap |y| < 0.2 (full height).
    fn gap_world() -> World {
        box_world(vec![
            Obstacle::Aabb {
                min: Vec3::new(-0.1, -2.5, -1.0),
                max: Vec3::new(0.1, -0.2, 2.0),
            },
            Obstacle::Aabb {
                min: Vec3::new(-0.1, 0.2, -1.0),
                max: Vec3::new(0.1, 2.5, 2.0),
            },
        ])
    }

    fn c(x: f64, y: f64, z: f64) -> Configuration {
        Configuration::new(vec![x, y, z], vec![])
    }

    #[test]
    fn two_node_path_in_empty_world() {
        let w = box_world(vec![]);
        let inf = Inflation::new(vec![0.1; 3], vec![]).unwrap();
        let goal = GoalRegion::new(c(0.3, 0.0, 0.5));
        let path = kdf_rrt(
            &w,
            &inf,
            &c(0.0, 0.0, 0.5),
            &goal,
            &PlannerParams::default(),
        )
        .unwrap();
        assert_eq!(path.waypoints.len(), 2);
        assert_eq!(path.end(), &goal.center);
    }

    #[test]
    fn narrow_gap_blocks_inflated_planner_only() {
        let w = gap_world();
        let (start, goal) = (c(-1.5, 0.0, 0.5), GoalRegion::new(c(1.5, 0.0, 0.5)));
        let p = PlannerParams {
            max_iterations: 3000,
            seed: 5,
            ..Default::default()
        };
        let plain = baseline_geometric_rrt(&w, &start, &goal, &p).unwrap();
        assert!(plain.stats.success);
        let inf = Inflation::new(vec![0.2; 3], vec![]).unwrap();
        assert!(matches!(
            kdf_rrt(&w, &inf, &start, &goal, &p),
            Err(KdfError::NoPathFound { iterations: 3000 })
        ));
    }

    #[test]
    fn paths_reverify_and_are_deterministic() {
        let w = gap_world();
        let inf = Inflation::new(vec![0.03; 3], vec![]).unwrap();
        let (start, goal) = (c(-1.5, 0.0, 0.5), GoalRegion::new(c(1.5, 0.0, 0.5)));
        let p = PlannerParams {
            seed: 9,
            ..Default::default()
        };
        let a = kdf_rrt_outcome(&w, &inf, &start, &goal, &p).unwrap();
        let b = kdf_rrt_outcome(&w, &inf, &start, &goal, &p).unwrap();
        assert!(a.tree.is_valid_tree());
        assert_eq!(a.tree.nodes(), b.tree.nodes());
        assert_eq!(a.tree.edges(), b.tree.edges());
        let path = a.into_path().unwrap();
        let step = inf.default_step();
        assert!(verify_path(&w, &inf, p.policy, step, &path.waypoints).unwrap());
        // monotone safety
        let smaller = Inflation::new(vec![0.01, 0.02, 0.03], vec![]).unwrap();
        assert!(verify_path(&w, &smaller, p.policy, step, &path.waypoints).unwrap());
    }

    #[test]
    fn vanishing_inflation_matches_geometric_tree() {
        let w = gap_world();
        let inf = Inflation::new(vec![1e-9; 3], vec![]).unwrap();
        let (start, goal) = (c(-1.5, 0.0, 0.5), GoalRegion::new(c(1.5, 0.0, 0.5)));
        let p = PlannerParams {
            seed: 21,
            segment_step: Some(0.02),
            ..Default::default()
        };
        let k = kdf_rrt_outcome(&w, &inf, &start, &goal, &p).unwrap();
        let g = geometric_rrt_outcome(&w, &start, &goal, &p).unwrap();
        assert_eq!(k.tree.nodes(), g.tree.nodes());
        assert_eq!(k.tree.edges(), g.tree.edges());
        assert_eq!(k.stats.iterations, g.stats.iterations);
    }

    #[test]
    fn all_nodes_goal_connection_also_succeeds() {
        let w = gap_world();
        let inf = Inflation::new(vec![0.03; 3], vec![]).unwrap();
        let (start, goal) = (c(-1.5, 0.0, 0.5), GoalRegion::new(c(1.5, 0.0, 0.5)));
        let p = PlannerParams {
            goal_connect: GoalConnect::AllNodes,
            ..Default::default()
        };
        assert!(kdf_rrt(&w, &inf, &start, &goal, &p).is_ok());
    }

    #[test]
    fn start_outside_extended_space_rejected() {
        let w = box_world(vec![Obstacle::Sphere {
            center: Vec3::new(0.0, 0.0, 0.5),
            radius: 0.3,
        }]);
        let inf = Inflation::new(vec![0.2; 3], vec![]).unwrap();
        let goal = GoalRegion::new(c(1.5, 0.0, 0.5));
        let p = PlannerParams {
            policy: ExtCheckPolicy::SweptHull,
            ..Default::default()
        };
        assert!(kdf_rrt(&w, &inf, &c(0.0, 0.45, 0.5), &goal, &p).is_err());
    }
}
