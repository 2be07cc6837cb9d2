//! Workspace, obstacles, robot volume, and the two collision predicates:
//! plain free space and the funnel-inflated ("extended") free space.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config_space::{interpolate_unchecked, max_coord_deviation, Configuration, Signature};
use crate::error::{KdfError, Result};
use crate::geometry::{
    aabb_aabb_dist, point_aabb_dist, point_segment_dist, segment_aabb_dist, segment_segment_dist,
    Vec3,
};

#[derive(Debug, Clone, PartialEq)]
pub enum Obstacle {
    Sphere { center: Vec3, radius: f64 },
    Aabb { min: Vec3, max: Vec3 },
    Capsule { p0: Vec3, p1: Vec3, radius: f64 },
}

impl Obstacle {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Obstacle::Sphere { radius, .. } | Obstacle::Capsule { radius, .. } => *radius > 0.0,
            Obstacle::Aabb { min, max } => (0..3).all(|i| min[i] <= max[i]),
        };
        if ok {
            Ok(())
        } else {
            Err(KdfError::InvalidParameter(format!(
                "malformed obstacle {self:?}"
            )))
        }
    }

    pub fn dist_point(&self, p: &Vec3) -> f64 {
        match self {
            Obstacle::Sphere { center, radius } => ((p - center).norm() - radius).max(0.0),
            Obstacle::Aabb { min, max } => point_aabb_dist(p, min, max),
            Obstacle::Capsule { p0, p1, radius } => {
                (point_segment_dist(p, p0, p1) - radius).max(0.0)
            }
        }
    }

    pub fn dist_segment(&self, a: &Vec3, b: &Vec3) -> f64 {
        match self {
            Obstacle::Sphere { center, radius } => {
                (point_segment_dist(center, a, b) - radius).max(0.0)
            }
            Obstacle::Aabb { min, max } => segment_aabb_dist(a, b, min, max),
            Obstacle::Capsule { p0, p1, radius } => {
                (segment_segment_dist(a, b, p0, p1) - radius).max(0.0)
            }
        }
    }

    pub fn dist_aabb(&self, lo: &Vec3, hi: &Vec3) -> f64 {
        match self {
            Obstacle::Sphere { center, radius } => {
                (point_aabb_dist(center, lo, hi) - radius).max(0.0)
            }
            Obstacle::Aabb { min, max } => aabb_aabb_dist(lo, hi, min, max),
            Obstacle::Capsule { p0, p1, radius } => {
                (segment_aabb_dist(p0, p1, lo, hi) - radius).max(0.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub length: f64,
    pub radius: f64,
}

/// Planar serial chain of capsule links. Joint `i` is driven by coordinate
/// `i` of the flat `[trans.., rot..]` layout and all joints rotate about the
/// vertical axis through the base, so link `i` points along
/// `base_yaw + q_0 + .. + q_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArticulatedChain {
    pub links: Vec<Link>,
    pub base: Vec3,
    pub base_yaw: f64,
}

impl ArticulatedChain {
    /// Positions of the base, every joint, and the tip (`links.len() + 1`
    /// points).
    pub fn joint_positions(&self, angles: &[f64]) -> Vec<Vec3> {
        debug_assert_eq!(angles.len(), self.links.len());
        let mut out = Vec::with_capacity(self.links.len() + 1);
        let mut p = self.base;
        let mut phi = self.base_yaw;
        out.push(p);
        for (link, q) in self.links.iter().zip(angles) {
            phi += q;
            p += Vec3::new(phi.cos(), phi.sin(), 0.0) * link.length;
            out.push(p);
        }
        out
    }

    /// Interval forward kinematics: for joint angles confined to
    /// `[lo_i, hi_i]`, returns an axis-aligned box containing every reachable
    /// position of each joint (base first, tip last).
    pub fn joint_boxes(&self, lo: &[f64], hi: &[f64]) -> Vec<(Vec3, Vec3)> {
        let mut out = Vec::with_capacity(self.links.len() + 1);
        let (mut bmin, mut bmax) = (self.base, self.base);
        let (mut phi_lo, mut phi_hi) = (self.base_yaw, self.base_yaw);
        out.push((bmin, bmax));
        for (i, link) in self.links.iter().enumerate() {
            phi_lo += lo[i];
            phi_hi += hi[i];
            let (cmin, cmax) = cos_range(phi_lo, phi_hi);
            let (smin, smax) = cos_range(phi_lo - PI / 2.0, phi_hi - PI / 2.0);
            bmin += Vec3::new(cmin, smin, 0.0) * link.length;
            bmax += Vec3::new(cmax, smax, 0.0) * link.length;
            out.push((bmin, bmax));
        }
        out
    }
}

/// Range of `cos` over `[a, b]`.
fn cos_range(a: f64, b: f64) -> (f64, f64) {
    if b - a >= 2.0 * PI {
        return (-1.0, 1.0);
    }
    let (ca, cb) = (a.cos(), b.cos());
    let mut lo = ca.min(cb);
    let mut hi = ca.max(cb);
    // interior extrema at multiples of π
    let mut k = (a / PI).ceil();
    while k * PI <= b {
        if (k as i64).rem_euclid(2) == 0 {
            hi = 1.0;
        } else {
            lo = -1.0;
        }
        k += 1.0;
    }
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq)]
pub enum RobotVolume {
    /// Sphere centred on the first (up to three) translational coordinates.
    PointSphere {
        radius: f64,
    },
    Chain(ArticulatedChain),
}

impl RobotVolume {
    fn validate(&self, sig: &Signature) -> Result<()> {
        match self {
            RobotVolume::PointSphere { radius } => {
                if *radius <= 0.0 {
                    return Err(KdfError::InvalidParameter(
                        "robot radius must be > 0".into(),
                    ));
                }
                if sig.n_tr() == 0 || sig.n_tr() > 3 {
                    return Err(KdfError::InvalidParameter(
                        "point-sphere robot needs 1..=3 translational coordinates".into(),
                    ));
                }
            }
            RobotVolume::Chain(chain) => {
                if chain.links.len() != sig.dim() {
                    return Err(KdfError::InvalidParameter(format!(
                        "chain has {} joints but configuration dimension is {}",
                        chain.links.len(),
                        sig.dim()
                    )));
                }
                if chain
                    .links
                    .iter()
                    .any(|l| l.radius <= 0.0 || l.length < 0.0)
                {
                    return Err(KdfError::InvalidParameter("bad link dimensions".into()));
                }
            }
        }
        Ok(())
    }
}

fn sphere_center(q: &Configuration) -> Vec3 {
    let t = q.trans();
    let mut c = Vec3::zeros();
    for (i, v) in t.iter().take(3).enumerate() {
        c[i] = *v;
    }
    c
}

/// Per-coordinate maximum funnel values, flat `[trans.., rot..]`. Rotational
/// entries are chordal bounds and must stay below 2.
#[derive(Debug, Clone, PartialEq)]
pub struct Inflation {
    rho: Vec<f64>,
    n_tr: usize,
}

impl Inflation {
    pub fn new(trans: Vec<f64>, rot: Vec<f64>) -> Result<Self> {
        if trans
            .iter()
            .chain(&rot)
            .any(|&r| !(r > 0.0) || !r.is_finite())
        {
            return Err(KdfError::InvalidParameter(
                "inflation entries must be positive".into(),
            ));
        }
        if rot.iter().any(|&r| r >= 2.0) {
            return Err(KdfError::InvalidParameter(
                "rotational inflation must be < 2 (chordal ceiling)".into(),
            ));
        }
        let n_tr = trans.len();
        let mut rho = trans;
        rho.extend(rot);
        Ok(Self { rho, n_tr })
    }

    pub fn uniform(sig: &Signature, trans: f64, rot: f64) -> Result<Self> {
        Self::new(vec![trans; sig.n_tr()], vec![rot; sig.n_r()])
    }

    pub fn trans(&self) -> &[f64] {
        &self.rho[..self.n_tr]
    }

    pub fn rot(&self) -> &[f64] {
        &self.rho[self.n_tr..]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.rho
    }

    pub fn matches(&self, sig: &Signature) -> bool {
        self.n_tr == sig.n_tr() && self.rho.len() == sig.dim()
    }

    /// Angular half-width of the polyhedron along each rotational axis:
    /// `1 - cos Δ < ρ` iff `|Δ| < acos(1 - ρ)`.
    pub fn rot_half_widths(&self) -> impl Iterator<Item = f64> + '_ {
        self.rot().iter().map(|&r| (1.0 - r).acos())
    }

    /// Half-widths of the polyhedron in covering-space coordinates.
    pub fn half_widths(&self) -> Vec<f64> {
        self.trans()
            .iter()
            .copied()
            .chain(self.rot_half_widths())
            .collect()
    }

    /// Default segment discretization: half the smallest covering-space
    /// half-width, so consecutive polyhedra overlap.
    pub fn default_step(&self) -> f64 {
        self.half_widths().into_iter().fold(f64::INFINITY, f64::min) / 2.0
    }

    /// Componentwise `self ⪰ other`.
    pub fn dominates(&self, other: &Inflation) -> bool {
        self.rho.len() == other.rho.len()
            && self.n_tr == other.n_tr
            && self.rho.iter().zip(&other.rho).all(|(a, b)| a >= b)
    }
}

/// How membership in the extended free space is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtCheckPolicy {
    /// Grow the robot sphere by `‖ρ̄_trans‖`. Point-sphere robots only.
    AnalyticInflation,
    /// Check the configuration itself plus `samples` uniform draws from its
    /// polyhedron. Draws are a deterministic function of the configuration and
    /// `seed`.
    Sampled { samples: usize, seed: u64 },
    /// Per-link bounding boxes over the joint-interval box, inflated by the
    /// link radius.
    SweptHull,
}

impl ExtCheckPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            ExtCheckPolicy::AnalyticInflation => "analytic",
            ExtCheckPolicy::Sampled { .. } => "sampled",
            ExtCheckPolicy::SweptHull => "swept",
        }
    }
}

#[derive(Debug, Clone)]
pub struct World {
    signature: Signature,
    obstacles: Vec<Obstacle>,
    robot: RobotVolume,
    bounds_min: Vec3,
    bounds_max: Vec3,
}

impl World {
    pub fn new(
        signature: Signature,
        obstacles: Vec<Obstacle>,
        robot: RobotVolume,
        bounds_min: Vec3,
        bounds_max: Vec3,
    ) -> Result<Self> {
        if (0..3).any(|i| bounds_min[i] > bounds_max[i]) {
            return Err(KdfError::InvalidParameter(
                "workspace bounds are empty".into(),
            ));
        }
        for o in &obstacles {
            o.validate()?;
        }
        robot.validate(&signature)?;
        Ok(Self {
            signature,
            obstacles,
            robot,
            bounds_min,
            bounds_max,
        })
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn obstacles(&self) -> &[Obstacle] {
        &self.obstacles
    }

    pub fn robot(&self) -> &RobotVolume {
        &self.robot
    }

    pub fn bounds(&self) -> (Vec3, Vec3) {
        (self.bounds_min, self.bounds_max)
    }

    /// Same world with a different obstacle set.
    pub fn with_obstacles(&self, obstacles: Vec<Obstacle>) -> Result<Self> {
        World::new(
            self.signature.clone(),
            obstacles,
            self.robot.clone(),
            self.bounds_min,
            self.bounds_max,
        )
    }

    fn in_workspace(&self, p: &Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.bounds_min[i] && p[i] <= self.bounds_max[i])
    }

    /// Smallest distance between the robot volume at `q` and any obstacle,
    /// in metres. `+inf` without obstacles; `0` on contact or penetration.
    pub fn clearance(&self, q: &Configuration) -> f64 {
        self.clearance_with_margin(q, 0.0)
    }

    fn clearance_with_margin(&self, q: &Configuration, extra_radius: f64) -> f64 {
        match &self.robot {
            RobotVolume::PointSphere { radius } => {
                let c = sphere_center(q);
                let r = radius + extra_radius;
                self.obstacles
                    .iter()
                    .map(|o| o.dist_point(&c) - r)
                    .fold(f64::INFINITY, f64::min)
            }
            RobotVolume::Chain(chain) => {
                let pts = chain.joint_positions(&q.to_flat());
                let mut best = f64::INFINITY;
                for (i, link) in chain.links.iter().enumerate() {
                    for o in &self.obstacles {
                        best = best.min(o.dist_segment(&pts[i], &pts[i + 1]) - link.radius);
                    }
                }
                best
            }
        }
    }

    fn reference_points_inside(&self, q: &Configuration) -> bool {
        match &self.robot {
            RobotVolume::PointSphere { .. } => self.in_workspace(&sphere_center(q)),
            RobotVolume::Chain(chain) => chain
                .joint_positions(&q.to_flat())
                .iter()
                .all(|p| self.in_workspace(p)),
        }
    }

    /// Plain free-space membership: translational coordinates inside their
    /// bounds, robot reference points (sphere centre, chain joints) inside the
    /// workspace box, and strictly positive obstacle clearance.
    pub fn is_free(&self, q: &Configuration) -> bool {
        debug_assert!(self.signature.matches(q));
        self.signature.contains(q) && self.reference_points_inside(q) && self.clearance(q) > 0.0
    }

    pub fn check_policy(&self, policy: ExtCheckPolicy) -> Result<()> {
        match (policy, &self.robot) {
            (ExtCheckPolicy::AnalyticInflation, RobotVolume::Chain(_)) => {
                Err(KdfError::UnsupportedPolicy("analytic"))
            }
            (ExtCheckPolicy::Sampled { samples: 0, .. }, _) => Err(KdfError::InvalidParameter(
                "sampled policy needs at least one sample".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Extended free-space membership: every configuration in the open
    /// polyhedron around `q` keeps the robot collision-free (decided per
    /// `policy`).
    pub fn is_free_extended(
        &self,
        q: &Configuration,
        inf: &Inflation,
        policy: ExtCheckPolicy,
    ) -> Result<bool> {
        self.check_policy(policy)?;
        self.signature.check(q)?;
        if !inf.matches(&self.signature) {
            return Err(KdfError::InvalidParameter(
                "inflation does not match the configuration signature".into(),
            ));
        }
        Ok(self.free_extended_unchecked(q, inf, policy, 0.0))
    }

    /// `is_free_extended` after validation. `margin` grows the analytic
    /// inflation radius (used for Lipschitz-safe segment sampling).
    pub(crate) fn free_extended_unchecked(
        &self,
        q: &Configuration,
        inf: &Inflation,
        policy: ExtCheckPolicy,
        margin: f64,
    ) -> bool {
        match policy {
            ExtCheckPolicy::AnalyticInflation => {
                let grow = inf.trans().iter().map(|r| r * r).sum::<f64>().sqrt();
                self.signature.contains(q)
                    && self.reference_points_inside(q)
                    && self.clearance_with_margin(q, grow + margin) > 0.0
            }
            ExtCheckPolicy::Sampled { samples, seed } => {
                if !self.is_free(q) {
                    return false;
                }
                let widths = inf.half_widths();
                let mut rng = ChaCha8Rng::seed_from_u64(config_seed(q, seed));
                let mut delta = vec![0.0; widths.len()];
                for _ in 0..samples {
                    for (d, w) in delta.iter_mut().zip(&widths) {
                        *d = rng.random_range(-w..*w);
                    }
                    if !self.is_free(&q.offset(&delta)) {
                        return false;
                    }
                }
                true
            }
            ExtCheckPolicy::SweptHull => self.swept_free(q, inf),
        }
    }

    fn swept_free(&self, q: &Configuration, inf: &Inflation) -> bool {
        let widths = inf.half_widths();
        let flat = q.to_flat();
        let lo: Vec<f64> = flat.iter().zip(&widths).map(|(x, w)| x - w).collect();
        let hi: Vec<f64> = flat.iter().zip(&widths).map(|(x, w)| x + w).collect();
        let n_tr = self.signature.n_tr();
        let within_bounds = self
            .signature
            .trans_bounds()
            .iter()
            .enumerate()
            .all(|(j, &(b_lo, b_hi))| lo[j] >= b_lo && hi[j] <= b_hi);
        if !within_bounds {
            return false;
        }
        let boxes: Vec<(Vec3, Vec3, f64)> = match &self.robot {
            RobotVolume::PointSphere { radius } => {
                let mut bmin = Vec3::zeros();
                let mut bmax = Vec3::zeros();
                for j in 0..n_tr.min(3) {
                    bmin[j] = lo[j];
                    bmax[j] = hi[j];
                }
                vec![(bmin, bmax, *radius)]
            }
            RobotVolume::Chain(chain) => {
                let joints = chain.joint_boxes(&lo, &hi);
                chain
                    .links
                    .iter()
                    .enumerate()
                    .map(|(i, link)| {
                        let (a_lo, a_hi) = joints[i];
                        let (b_lo, b_hi) = joints[i + 1];
                        (a_lo.inf(&b_lo), a_hi.sup(&b_hi), link.radius)
                    })
                    .collect()
            }
        };
        for (bmin, bmax, r) in &boxes {
            if !(self.in_workspace(bmin) && self.in_workspace(bmax)) {
                return false;
            }
            if self.obstacles.iter().any(|o| o.dist_aabb(bmin, bmax) <= *r) {
                return false;
            }
        }
        true
    }

    /// Checks the straight segment `a → b` (shortest arc on rotational axes)
    /// for extended free-space membership at parameter spacing such that
    /// consecutive samples differ by at most `step` in every covering-space
    /// coordinate. Both endpoints are checked.
    ///
    /// For point-sphere robots under analytic inflation the sphere is grown by
    /// half the centre spacing between samples: clearance is 1-Lipschitz along
    /// the segment, so this certifies the whole continuous segment.
    pub fn segment_free_extended(
        &self,
        a: &Configuration,
        b: &Configuration,
        inf: &Inflation,
        policy: ExtCheckPolicy,
        step: f64,
    ) -> Result<bool> {
        self.check_policy(policy)?;
        self.signature.check(a)?;
        self.signature.check(b)?;
        if !(step > 0.0) {
            return Err(KdfError::InvalidParameter(
                "segment step must be > 0".into(),
            ));
        }
        Ok(self.segment_check(a, b, step, |q, margin| {
            self.free_extended_unchecked(q, inf, policy, margin)
        }))
    }

    /// Plain counterpart of [`World::segment_free_extended`].
    pub fn segment_free(&self, a: &Configuration, b: &Configuration, step: f64) -> bool {
        self.segment_check(a, b, step, |q, margin| {
            self.signature.contains(q)
                && self.reference_points_inside(q)
                && self.clearance_with_margin(q, margin) > 0.0
        })
    }

    pub(crate) fn segment_check<F>(
        &self,
        a: &Configuration,
        b: &Configuration,
        step: f64,
        point_ok: F,
    ) -> bool
    where
        F: Fn(&Configuration, f64) -> bool,
    {
        let n = segment_pieces(a, b, step);
        let margin = match self.robot {
            RobotVolume::PointSphere { .. } => {
                let c = (sphere_center(b) - sphere_center(a)).norm();
                0.5 * c / n as f64
            }
            RobotVolume::Chain(_) => 0.0,
        };
        // endpoints first: they reject most bad edges cheaply
        if !point_ok(b, margin) || !point_ok(a, margin) {
            return false;
        }
        (1..n).all(|i| point_ok(&interpolate_unchecked(a, b, i as f64 / n as f64), margin))
    }
}

/// Number of equal pieces a segment is cut into for checking.
pub fn segment_pieces(a: &Configuration, b: &Configuration, step: f64) -> usize {
    let dev = max_coord_deviation(a, b);
    ((dev / step).ceil() as usize).max(1)
}

/// Mixes configuration bits and a policy seed into an RNG seed (splitmix64).
fn config_seed(q: &Configuration, seed: u64) -> u64 {
    let mut h = seed ^ 0x9E37_79B9_7F4A_7C15;
    for v in q.trans().iter().chain(q.rot()) {
        h ^= v.to_bits();
        h = h.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = h;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    h
}

/// Open-polyhedron membership: `|Δtrans_j| < ρ_j` and `1 - cos Δrot_l < ρ_l`.
pub fn polyhedron_contains(z: &Configuration, y: &Configuration, inf: &Inflation) -> bool {
    debug_assert!(z.same_shape(y));
    let t_ok = z
        .trans()
        .iter()
        .zip(y.trans())
        .zip(inf.trans())
        .all(|((a, b), r)| (b - a).abs() < *r);
    let r_ok = z
        .rot()
        .iter()
        .zip(y.rot())
        .zip(inf.rot())
        .all(|((a, b), r)| crate::config_space::chordal(b - a) < *r);
    t_ok && r_ok
}
