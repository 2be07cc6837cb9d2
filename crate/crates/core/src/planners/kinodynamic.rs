use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::nn::KdIndex;
use super::{sample_uniform, Path, PlannerStats};
use crate::config_space::{chordal, dist_unchecked, wrap_angle, Configuration};
use crate::error::{KdfError, Result};
use crate::plant::{PlantModel, PlantState, Rk4Workspace};
use crate::world::World;

#[derive(Debug, Clone, PartialEq)]
pub struct KinoParams {
    /// Half-width of the per-coordinate input box.
    pub u_max: f64,
    pub dt: f64,
    /// Longest propagation of one constant control.
    pub horizon: f64,
    /// Success when `d_T(q₁, goal)` drops below this.
    pub threshold: f64,
    pub max_expansions: usize,
    pub seed: u64,
}

impl Default for KinoParams {
    fn default() -> Self {
        Self {
            u_max: 20.0,
            dt: 1e-3,
            horizon: 30.0,
            threshold: 0.25,
            max_expansions: 1_000_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KinoResult {
    /// `q₁` of each tree node from the root, then the state that met the
    /// threshold.
    pub path: Option<Vec<Configuration>>,
    pub expansions: usize,
    pub nodes: usize,
    pub integration_steps: u64,
    pub wall_ms: f64,
    pub seed: u64,
}

impl KinoResult {
    pub fn stats(&self) -> PlannerStats {
        PlannerStats {
            algorithm: "kinodynamic_rrt".into(),
            seed: self.seed,
            iterations: self.expansions,
            nodes: self.nodes,
            wall_ms: self.wall_ms,
            success: self.path.is_some(),
        }
    }
}

struct Tree {
    n: usize,
    len: usize,
    q1: Vec<f64>,
    states: Vec<f64>,
    times: Vec<f64>,
    parent: Vec<u32>,
}

impl Tree {
    fn q1(&self, i: usize) -> &[f64] {
        &self.q1[i * self.n..(i + 1) * self.n]
    }

    fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.len..(i + 1) * self.len]
    }

    fn push(&mut self, q1: &Configuration, x: &[f64], t: f64, parent: u32) {
        self.q1.extend(q1.trans().iter().chain(q1.rot()));
        self.states.extend_from_slice(x);
        self.times.push(t);
        self.parent.push(parent);
    }

    fn count(&self) -> usize {
        self.times.len()
    }

    fn config(&self, i: usize, n_tr: usize) -> Configuration {
        let q = self.q1(i);
        Configuration::new(q[..n_tr].to_vec(), q[n_tr..].to_vec())
    }
}

fn dist_flat(a: &[f64], b: &Configuration, n_tr: usize) -> f64 {
    let t: f64 = a[..n_tr]
        .iter()
        .zip(b.trans())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    let r: f64 = a[n_tr..]
        .iter()
        .zip(b.rot())
        .map(|(x, y)| chordal(x - y))
        .sum();
    t + r
}

fn q1_of(x: &[f64], n_tr: usize, n: usize) -> Configuration {
    Configuration::new(
        x[..n_tr].to_vec(),
        x[n_tr..n].iter().map(|&a| wrap_angle(a)).collect(),
    )
}

/// Tree search over full plant states: each expansion picks the node whose
/// `q₁` is nearest a uniform sample, applies a random constant control from
/// the input box for a random duration up to the horizon, and keeps the last
/// collision-free state. Every integration step is tested against the goal.
pub fn kinodynamic_rrt_outcome(
    m: &PlantModel,
    w: &World,
    start: &PlantState,
    goal: &Configuration,
    p: &KinoParams,
) -> Result<KinoResult> {
    if !(p.dt > 0.0 && p.horizon >= p.dt && p.u_max >= 0.0 && p.threshold > 0.0) {
        return Err(KdfError::InvalidParameter(
            "malformed kinodynamic parameters".into(),
        ));
    }
    let sig = w.signature();
    sig.check(&start.q1)?;
    sig.check(goal)?;
    if m.n_tr() != sig.n_tr() || m.n_r() != sig.n_r() {
        return Err(KdfError::SignatureMismatch(
            sig.n_tr(),
            sig.n_r(),
            m.n_tr(),
            m.n_r(),
        ));
    }
    if !w.is_free(&start.q1) {
        return Err(KdfError::InvalidParameter(
            "start state is in collision".into(),
        ));
    }
    let clock = Instant::now();
    let (n, n_tr) = (m.dim(), m.n_tr());
    let len = n * m.order();
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut tree = Tree {
        n,
        len,
        q1: Vec::new(),
        states: Vec::new(),
        times: Vec::new(),
        parent: Vec::new(),
    };
    let x0 = m.pack(start);
    tree.push(&start.q1, &x0, start.t, u32::MAX);
    let mut index = KdIndex::new(n_tr, n - n_tr);
    index.insert(&start.q1);

    let mut ws = Rk4Workspace::new(len);
    let mut x = vec![0.0; len];
    let mut last_free = vec![0.0; len];
    let mut u = vec![0.0; n];
    let mut steps_total = 0u64;
    let max_steps = (p.horizon / p.dt).round().max(1.0) as usize;

    let done = |tree: &Tree, end: Option<(usize, Configuration)>, expansions: usize, steps: u64| {
        let path = end.map(|(leaf, last)| {
            let mut ids = vec![leaf];
            while tree.parent[*ids.last().unwrap()] != u32::MAX {
                ids.push(tree.parent[*ids.last().unwrap()] as usize);
            }
            ids.reverse();
            let mut wps: Vec<Configuration> =
                ids.into_iter().map(|i| tree.config(i, n_tr)).collect();
            wps.push(last);
            wps
        });
        KinoResult {
            path,
            expansions,
            nodes: tree.count(),
            integration_steps: steps,
            wall_ms: clock.elapsed().as_secs_f64() * 1e3,
            seed: p.seed,
        }
    };

    if dist_flat(tree.q1(0), goal, n_tr) < p.threshold {
        return Ok(done(&tree, Some((0, start.q1.clone())), 0, 0));
    }

    for expansion in 1..=p.max_expansions {
        let target = sample_uniform(w, &mut rng);
        let near = index
            .nearest_by(&target, |i| dist_flat(tree.q1(i), &target, n_tr))
            .expect("tree is nonempty");
        for v in u.iter_mut() {
            *v = if p.u_max > 0.0 {
                rng.random_range(-p.u_max..=p.u_max)
            } else {
                0.0
            };
        }
        let steps = rng.random_range(1..=max_steps);
        x.copy_from_slice(tree.state(near));
        let mut t = tree.times[near];
        #[cfg(debug_assertions)]
        m.monitor(&x, t);
        let mut advanced = 0usize;
        for _ in 0..steps {
            ws.step(m, t, &mut x, &u, p.dt);
            t += p.dt;
            steps_total += 1;
            if x.iter().any(|v| !v.is_finite()) {
                break;
            }
            let q = q1_of(&x, n_tr, n);
            if !w.is_free(&q) {
                break;
            }
            if dist_unchecked(&q, goal) < p.threshold {
                return Ok(done(&tree, Some((near, q)), expansion, steps_total));
            }
            last_free.copy_from_slice(&x);
            advanced += 1;
        }
        if advanced > 0 {
            let t_end = tree.times[near] + advanced as f64 * p.dt;
            let q = q1_of(&last_free, n_tr, n);
            tree.push(&q, &last_free, t_end, near as u32);
            index.insert(&q);
        }
    }
    Ok(done(&tree, None, p.max_expansions, steps_total))
}

pub fn baseline_kinodynamic_rrt(
    m: &PlantModel,
    w: &World,
    start: &PlantState,
    goal: &Configuration,
    p: &KinoParams,
) -> Result<Path> {
    let r = kinodynamic_rrt_outcome(m, w, start, goal, p)?;
    let stats = r.stats();
    match r.path {
        Some(wps) => Ok(Path::new(wps, stats)),
        None => Err(KdfError::NoPathFound {
            iterations: r.expansions,
        }),
    }
}
