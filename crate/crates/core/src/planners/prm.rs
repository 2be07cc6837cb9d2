use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{edge_step, sample_ext, GoalRegion, Path, PlanGraph, PlannerParams, PlannerStats};
use crate::config_space::{dist_unchecked, Configuration};
use crate::error::{KdfError, Result};
use crate::world::{ExtCheckPolicy, Inflation, World};

/// Roadmap plus the predicate parameters it was certified under.
#[derive(Debug, Clone)]
pub struct Roadmap {
    pub graph: PlanGraph,
    pub inflation: Inflation,
    pub policy: ExtCheckPolicy,
    pub step: f64,
    pub build_ms: f64,
    pub seed: u64,
}

/// Indices of the `k` nodes closest to `q` (ties to lower index).
fn k_closest(nodes: &[Configuration], q: &Configuration, k: usize, skip: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = nodes
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != skip)
        .map(|(i, c)| (dist_unchecked(c, q), i))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.into_iter().take(k).map(|x| x.1).collect()
}

/// Roadmap of `N` nodes sampled in `Ā_free(ρ̄)`, each tried against its `K`
/// closest predecessors.
pub fn kdf_prm(w: &World, inf: &Inflation, p: &PlannerParams) -> Result<Roadmap> {
    p.validate()?;
    w.check_policy(p.policy)?;
    let clock = Instant::now();
    let step = edge_step(p, inf);
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut g = PlanGraph::roadmap();
    for _ in 0..p.n_nodes {
        let y = sample_ext(w, inf, p.policy, &mut rng, p.sample_budget)?;
        let yi = g.add_node(y);
        for c in k_closest(g.nodes(), &g.nodes()[yi], p.k_neighbors, yi) {
            if g.has_edge(c, yi) {
                continue;
            }
            let ok = w.segment_check(&g.nodes()[c], &g.nodes()[yi], step, |q, m| {
                w.free_extended_unchecked(q, inf, p.policy, m)
            });
            if ok {
                g.insert_edge(c, yi);
            }
        }
    }
    Ok(Roadmap {
        graph: g,
        inflation: inf.clone(),
        policy: p.policy,
        step,
        build_ms: clock.elapsed().as_secs_f64() * 1e3,
        seed: p.seed,
    })
}

#[derive(PartialEq)]
struct Frontier(f64, usize);

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest path (edge weight `d_T`) between two nodes.
fn dijkstra(g: &PlanGraph, from: usize, to: usize) -> Option<Vec<usize>> {
    let n = g.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[from] = 0.0;
    heap.push(Frontier(0.0, from));
    while let Some(Frontier(d, u)) = heap.pop() {
        if u == to {
            break;
        }
        if d > dist[u] {
            continue;
        }
        for &v in g.neighbors(u) {
            let nd = d + dist_unchecked(&g.nodes()[u], &g.nodes()[v]);
            if nd < dist[v] {
                dist[v] = nd;
                prev[v] = u;
                heap.push(Frontier(nd, v));
            }
        }
    }
    if !dist[to].is_finite() {
        return None;
    }
    let mut out = vec![to];
    while *out.last().unwrap() != from {
        out.push(prev[*out.last().unwrap()]);
    }
    out.reverse();
    Some(out)
}

fn query_with<F>(
    rm: &Roadmap,
    start: &Configuration,
    goal: &Configuration,
    name: &str,
    seg: F,
) -> Result<Path>
where
    F: Fn(&Configuration, &Configuration) -> bool,
{
    let clock = Instant::now();
    let mut g = rm.graph.clone();
    let s = g.add_node(start.clone());
    let t = g.add_node(goal.clone());
    for i in 0..s {
        if seg(start, &g.nodes()[i]) {
            g.insert_edge(s, i);
        }
        if seg(&g.nodes()[i], goal) {
            g.insert_edge(i, t);
        }
    }
    if seg(start, goal) {
        g.insert_edge(s, t);
    }
    let route = dijkstra(&g, s, t)
        .ok_or_else(|| KdfError::QueryFailed("start and goal are not connected".into()))?;
    let stats = PlannerStats {
        algorithm: name.to_string(),
        seed: rm.seed,
        iterations: rm.graph.len(),
        nodes: rm.graph.len(),
        wall_ms: rm.build_ms + clock.elapsed().as_secs_f64() * 1e3,
        success: true,
    };
    Ok(Path::new(
        route.into_iter().map(|i| g.nodes()[i].clone()).collect(),
        stats,
    ))
}

/// Connects `start` and the goal center to every visible roadmap node
/// through the extended space and runs a shortest-path search.
pub fn prm_query(
    w: &World,
    rm: &Roadmap,
    start: &Configuration,
    goal: &GoalRegion,
) -> Result<Path> {
    w.signature().check(start)?;
    w.signature().check(&goal.center)?;
    let (inf, policy) = (&rm.inflation, rm.policy);
    for q in [start, &goal.center] {
        if !w.free_extended_unchecked(q, inf, policy, 0.0) {
            return Err(KdfError::QueryFailed(format!(
                "{q} is not in the extended free space"
            )));
        }
    }
    query_with(rm, start, &goal.center, "kdf_prm", |a, b| {
        w.segment_check(a, b, rm.step, |q, m| {
            w.free_extended_unchecked(q, inf, policy, m)
        })
    })
}

/// Query with plain predicates (roadmap built with vanishing inflation).
pub fn prm_query_plain(
    w: &World,
    rm: &Roadmap,
    start: &Configuration,
    goal: &GoalRegion,
) -> Result<Path> {
    query_with(rm, start, &goal.center, "prm", |a, b| {
        w.segment_free(a, b, rm.step)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config_space::Signature;
    use crate::geometry::Vec3;
    use crate::planners::verify_path;
    use crate::world::{Obstacle, RobotVolume};

    fn world(obstacles: Vec<Obstacle>) -> World {
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

    fn c(x: f64, y: f64, z: f64) -> Configuration {
        Configuration::new(vec![x, y, z], vec![])
    }

    #[test]
    fn empty_world_roadmap_answers_queries() {
        let w = world(vec![]);
        let inf = Inflation::new(vec![0.1; 3], vec![]).unwrap();
        let p = PlannerParams {
            n_nodes: 20,
            k_neighbors: 5,
            seed: 4,
            ..Default::default()
        };
        let rm = kdf_prm(&w, &inf, &p).unwrap();
        assert_eq!(rm.graph.len(), 20);
        // every node reaches node 0
        for i in 1..20 {
            assert!(dijkstra(&rm.graph, 0, i).is_some());
        }
        let path = prm_query(
            &w,
            &rm,
            &c(-1.8, -1.8, 0.2),
            &GoalRegion::new(c(1.8, 1.7, 0.8)),
        )
        .unwrap();
        assert!(verify_path(&w, &inf, p.policy, rm.step, &path.waypoints).unwrap());
        for e in rm.graph.edges() {
            let (a, b) = (&rm.graph.nodes()[e.0], &rm.graph.nodes()[e.1]);
            assert!(w
                .segment_free_extended(a, b, &inf, p.policy, rm.step)
                .unwrap());
        }
    }

    #[test]
    fn sealed_chambers_fail() {
        let w = world(vec![Obstacle::Aabb {
            min: Vec3::new(-0.2, -3.0, -1.0),
            max: Vec3::new(0.2, 3.0, 2.0),
        }]);
        let inf = Inflation::new(vec![0.05; 3], vec![]).unwrap();
        let p = PlannerParams {
            n_nodes: 60,
            k_neighbors: 6,
            ..Default::default()
        };
        let rm = kdf_prm(&w, &inf, &p).unwrap();
        let r = prm_query(
            &w,
            &rm,
            &c(-1.5, 0.0, 0.5),
            &GoalRegion::new(c(1.5, 0.0, 0.5)),
        );
        assert!(matches!(r, Err(KdfError::QueryFailed(_))));
    }
}
