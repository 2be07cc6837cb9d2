//! Time endowment: turns a waypoint path into a smooth reference `q_d(t)`
//! and re-validates it against the extended free space.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::config_space::{max_coord_deviation, wrap_angle, wrap_pi, Configuration};
use crate::error::{KdfError, Result};
use crate::funnel::Reference;
use crate::world::{ExtCheckPolicy, Inflation, World};

/// Default terminal hold as a fraction of `t_f`.
pub const DEFAULT_HOLD_FRACTION: f64 = 0.1;

/// Segment durations proportional to the largest per-coordinate deviation
/// (shortest arc on rotational axes), summing to `travel`.
pub fn allocate_times(waypoints: &[Configuration], travel: f64) -> Result<Vec<f64>> {
    if !(travel > 0.0) {
        return Err(KdfError::InvalidParameter("travel time must be > 0".into()));
    }
    if waypoints.len() < 2 {
        return Ok(Vec::new());
    }
    let dev: Vec<f64> = waypoints
        .windows(2)
        .map(|w| max_coord_deviation(&w[0], &w[1]))
        .collect();
    let total: f64 = dev.iter().sum();
    let eps = 1e-6 * total.max(1e-12);
    let raw: Vec<f64> = dev.iter().map(|d| d.max(eps)).collect();
    let sum: f64 = raw.iter().sum();
    Ok(raw.iter().map(|d| d / sum * travel).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    /// Piecewise Hermite polynomials of odd degree, `C^order`.
    Hermite,
    /// Straight segments at constant speed.
    Linear,
}

#[derive(Debug, Clone)]
pub struct TimedTrajectory {
    n_tr: usize,
    waypoints: Vec<Configuration>,
    /// Waypoint coordinates on the unwrapped lift, flat per knot.
    lifted: Vec<Vec<f64>>,
    knots: Vec<f64>,
    t_f: f64,
    order: usize,
    mode: Interpolation,
    hard: Vec<bool>,
    /// Per segment, per coordinate polynomial coefficients in `τ ∈ [0, 1]`.
    coeffs: Vec<Vec<Vec<f64>>>,
}

fn lift(waypoints: &[Configuration]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(waypoints.len());
    for (i, q) in waypoints.iter().enumerate() {
        let mut v = q.to_flat();
        if i > 0 {
            let n_tr = q.trans().len();
            let prev = &out[i - 1];
            for j in n_tr..v.len() {
                v[j] = prev[j] + wrap_pi(v[j] - prev[j]);
            }
        }
        out.push(v);
    }
    out
}

fn factorial_ratio(i: usize, j: usize) -> f64 {
    // i! / (i - j)!
    ((i - j + 1)..=i).map(|x| x as f64).product()
}

/// Solves for the degree `2m+1` polynomial on `τ ∈ [0, 1]` with given
/// derivatives (w.r.t. `τ`) at both ends.
fn hermite_matrix(m: usize) -> nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn> {
    let size = 2 * m + 2;
    let mut a = DMatrix::zeros(size, size);
    for j in 0..=m {
        a[(j, j)] = factorial_ratio(j, j);
        for i in j..size {
            a[(m + 1 + j, i)] = factorial_ratio(i, j);
        }
    }
    a.lu()
}

impl TimedTrajectory {
    /// Interpolates `waypoints` at cumulative `durations`, then holds the
    /// last waypoint for `hold` seconds. `order` is the continuity class
    /// (at least 2).
    pub fn smooth(
        waypoints: &[Configuration],
        durations: &[f64],
        hold: f64,
        order: usize,
    ) -> Result<Self> {
        Self::build(
            waypoints,
            durations,
            hold,
            order.max(2),
            Interpolation::Hermite,
        )
    }

    /// Piecewise-linear reference through the waypoints.
    pub fn linear(waypoints: &[Configuration], durations: &[f64], hold: f64) -> Result<Self> {
        Self::build(waypoints, durations, hold, 0, Interpolation::Linear)
    }

    fn build(
        waypoints: &[Configuration],
        durations: &[f64],
        hold: f64,
        order: usize,
        mode: Interpolation,
    ) -> Result<Self> {
        if waypoints.is_empty() || durations.len() + 1 != waypoints.len() {
            return Err(KdfError::InvalidParameter(
                "need one duration per path segment".into(),
            ));
        }
        if durations.iter().any(|d| !(*d > 0.0)) || !(hold >= 0.0) {
            return Err(KdfError::InvalidParameter(
                "durations must be positive".into(),
            ));
        }
        if waypoints.iter().any(|q| !q.same_shape(&waypoints[0])) {
            let (a, b) = (
                &waypoints[0],
                waypoints
                    .iter()
                    .find(|q| !q.same_shape(&waypoints[0]))
                    .unwrap(),
            );
            return Err(KdfError::SignatureMismatch(
                a.trans().len(),
                a.rot().len(),
                b.trans().len(),
                b.rot().len(),
            ));
        }
        let mut knots = vec![0.0];
        for d in durations {
            knots.push(knots.last().unwrap() + d);
        }
        let t_f = knots.last().unwrap() + hold;
        let mut traj = Self {
            n_tr: waypoints[0].trans().len(),
            waypoints: waypoints.to_vec(),
            lifted: lift(waypoints),
            knots,
            t_f,
            order,
            mode,
            hard: vec![false; waypoints.len()],
            coeffs: Vec::new(),
        };
        if let Some(h) = traj.hard.first_mut() {
            *h = true;
        }
        if let Some(h) = traj.hard.last_mut() {
            *h = true;
        }
        traj.fit();
        Ok(traj)
    }

    /// Knot derivatives w.r.t. time, orders `1..=m`, per coordinate.
    fn knot_derivatives(&self, i: usize) -> Vec<Vec<f64>> {
        let dim = self.lifted[0].len();
        let mut out = vec![vec![0.0; dim]; self.order];
        if self.hard[i] || self.order == 0 {
            return out;
        }
        let (h0, h1) = (
            self.knots[i] - self.knots[i - 1],
            self.knots[i + 1] - self.knots[i],
        );
        for c in 0..dim {
            let s0 = (self.lifted[i][c] - self.lifted[i - 1][c]) / h0;
            let s1 = (self.lifted[i + 1][c] - self.lifted[i][c]) / h1;
            out[0][c] = (s0 * h1 + s1 * h0) / (h0 + h1);
            if self.order >= 2 {
                out[1][c] = 2.0 * (s1 - s0) / (h0 + h1);
            }
        }
        out
    }

    fn fit(&mut self) {
        let segs = self.waypoints.len() - 1;
        let dim = self.lifted[0].len();
        self.coeffs.clear();
        if self.mode == Interpolation::Linear {
            for s in 0..segs {
                self.coeffs.push(
                    (0..dim)
                        .map(|c| vec![self.lifted[s][c], self.lifted[s + 1][c] - self.lifted[s][c]])
                        .collect(),
                );
            }
            return;
        }
        let m = self.order;
        let lu = hermite_matrix(m);
        let derivs: Vec<Vec<Vec<f64>>> = (0..self.waypoints.len())
            .map(|i| self.knot_derivatives(i))
            .collect();
        for s in 0..segs {
            let h = self.knots[s + 1] - self.knots[s];
            let mut per_coord = Vec::with_capacity(dim);
            for c in 0..dim {
                let mut rhs = DVector::zeros(2 * m + 2);
                rhs[0] = self.lifted[s][c];
                rhs[m + 1] = self.lifted[s + 1][c];
                for j in 1..=m {
                    let scale = h.powi(j as i32);
                    rhs[j] = derivs[s][j - 1][c] * scale;
                    rhs[m + 1 + j] = derivs[s + 1][j - 1][c] * scale;
                }
                let mut coef: Vec<f64> = lu
                    .solve(&rhs)
                    .expect("hermite system is regular")
                    .iter()
                    .copied()
                    .collect();
                coef[0] = self.lifted[s][c];
                per_coord.push(coef);
            }
            self.coeffs.push(per_coord);
        }
    }

    pub fn duration(&self) -> f64 {
        self.t_f
    }

    /// End of the travel portion (start of the terminal hold).
    pub fn travel_end(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn waypoints(&self) -> &[Configuration] {
        &self.waypoints
    }

    /// Continuity class of the reference.
    pub fn smoothness(&self) -> usize {
        self.order
    }

    pub fn mode(&self) -> Interpolation {
        self.mode
    }

    pub fn hard_knots(&self) -> &[bool] {
        &self.hard
    }

    fn locate(&self, t: f64) -> Option<(usize, f64)> {
        if self.waypoints.len() < 2 || t >= self.travel_end() {
            return None;
        }
        let t = t.max(0.0);
        let s = match self.knots.binary_search_by(|k| k.total_cmp(&t)) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let h = self.knots[s + 1] - self.knots[s];
        Some((s, (t - self.knots[s]) / h))
    }

    /// `r`-th time derivative of the lifted flat coordinates.
    pub fn derivative(&self, t: f64, r: usize) -> Vec<f64> {
        let dim = self.lifted[0].len();
        match self.locate(t) {
            None => {
                if r == 0 {
                    self.lifted.last().unwrap().clone()
                } else {
                    vec![0.0; dim]
                }
            }
            Some((s, tau)) => {
                let h = self.knots[s + 1] - self.knots[s];
                self.coeffs[s]
                    .iter()
                    .map(|coef| {
                        let mut acc = 0.0;
                        for i in (r..coef.len()).rev() {
                            acc = acc * tau + coef[i] * factorial_ratio(i, r);
                        }
                        acc / h.powi(r as i32)
                    })
                    .collect()
            }
        }
    }

    pub fn eval(&self, t: f64) -> Configuration {
        match self.locate(t) {
            None if t >= self.travel_end() || self.waypoints.len() < 2 => {
                self.waypoints.last().unwrap().clone()
            }
            _ if t <= 0.0 => self.waypoints[0].clone(),
            _ => {
                let v = self.derivative(t, 0);
                let rot = v[self.n_tr..].iter().map(|&a| wrap_angle(a)).collect();
                Configuration::new(v[..self.n_tr].to_vec(), rot)
            }
        }
    }

    /// Index of the segment active at `t`, if still travelling.
    pub fn segment_at(&self, t: f64) -> Option<usize> {
        self.locate(t).map(|(s, _)| s)
    }

    fn harden_segment(&mut self, s: usize) -> bool {
        let changed = !self.hard[s] || !self.hard[s + 1];
        self.hard[s] = true;
        self.hard[s + 1] = true;
        changed
    }

    /// Writes `t, q_0, …, q_{n-1}` rows at spacing `dt`.
    pub fn write_csv<W: Write>(&self, out: W, dt: f64) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let dim = self.waypoints[0].dim();
        let mut header = vec!["t".to_string()];
        header.extend((0..dim).map(|i| format!("q{i}")));
        w.write_record(&header)?;
        for t in sample_times(self.t_f, dt) {
            let q = self.eval(t);
            let mut row = vec![format!("{t:.6}")];
            row.extend(q.to_flat().iter().map(|v| format!("{v:.12}")));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

impl Reference for TimedTrajectory {
    fn t0(&self) -> f64 {
        0.0
    }
    fn t_end(&self) -> f64 {
        self.t_f
    }
    fn sample(&self, t: f64) -> Configuration {
        self.eval(t)
    }
}

/// `0, dt, 2dt, …` up to and including `t_f`.
pub fn sample_times(t_f: f64, dt: f64) -> Vec<f64> {
    let n = (t_f / dt).floor() as usize;
    let mut ts: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();
    if t_f - ts.last().copied().unwrap_or(0.0) > 1e-9 * dt {
        ts.push(t_f);
    }
    ts
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub samples: usize,
    pub violations: Vec<f64>,
    pub repair_rounds: usize,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Samples the reference every `dt_check` seconds and re-runs the extended
/// free-space predicate.
pub fn check_extended(
    traj: &TimedTrajectory,
    w: &World,
    inf: &Inflation,
    policy: ExtCheckPolicy,
    dt_check: f64,
) -> Result<ValidationReport> {
    if !(dt_check > 0.0) {
        return Err(KdfError::InvalidParameter("dt_check must be > 0".into()));
    }
    let times = sample_times(traj.duration(), dt_check);
    let mut violations = Vec::new();
    for &t in &times {
        if !w.is_free_extended(&traj.eval(t), inf, policy)? {
            violations.push(t);
        }
    }
    Ok(ValidationReport {
        samples: times.len(),
        violations,
        repair_rounds: 0,
    })
}

/// Validates and, on violation, hardens the knots of each offending span
/// (zero derivatives make the span follow the straight path segment) and
/// refits, for up to `max_rounds` rounds.
pub fn validate_extended(
    traj: &TimedTrajectory,
    w: &World,
    inf: &Inflation,
    policy: ExtCheckPolicy,
    dt_check: f64,
    max_rounds: usize,
) -> Result<(TimedTrajectory, ValidationReport)> {
    let mut cur = traj.clone();
    let mut report = check_extended(&cur, w, inf, policy, dt_check)?;
    let mut rounds = 0;
    while !report.is_clean() && rounds < max_rounds {
        let mut changed = false;
        for &t in &report.violations {
            if let Some(s) = cur.segment_at(t) {
                changed |= cur.harden_segment(s);
            }
        }
        if !changed {
            break;
        }
        cur.fit();
        rounds += 1;
        report = check_extended(&cur, w, inf, policy, dt_check)?;
        report.repair_rounds = rounds;
    }
    if report.is_clean() {
        Ok((cur, report))
    } else {
        Err(KdfError::TrajectoryInvalid {
            count: report.violations.len(),
            first: report.violations[0],
            times: report.violations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config_space::Signature;
    use crate::geometry::Vec3;
    use crate::world::{Obstacle, RobotVolume};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn c1(x: f64) -> Configuration {
        Configuration::new(vec![x], vec![])
    }

    #[test]
    fn time_allocation() {
        let wps = [c1(0.0), c1(1.0), c1(2.0)];
        let d = allocate_times(&wps, 5.0).unwrap();
        assert_relative_eq!(d[0], d[1]);
        let wps = [c1(0.0), c1(1.0), c1(4.0)];
        let d = allocate_times(&wps, 8.0).unwrap();
        assert_relative_eq!(d[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(d[1], 6.0, epsilon = 1e-12);
        assert_eq!(allocate_times(&[c1(0.0), c1(3.0)], 7.0).unwrap(), vec![7.0]);
        let z = allocate_times(&[c1(0.0), c1(0.0), c1(1.0)], 1.0).unwrap();
        assert!(z[0] > 0.0 && (z[0] + z[1] - 1.0).abs() < 1e-12);
        let rot = [
            Configuration::new(vec![], vec![0.1]),
            Configuration::new(vec![], vec![2.0 * PI - 0.1]),
            Configuration::new(vec![], vec![2.0 * PI - 0.5]),
        ];
        let d = allocate_times(&rot, 4.0).unwrap();
        assert_relative_eq!(d[0], d[1] / 2.0, epsilon = 1e-9);
    }

    #[test]
    fn quintic_symmetry_and_endpoints() {
        let tr = TimedTrajectory::smooth(&[c1(0.0), c1(1.0)], &[1.0], 0.0, 2).unwrap();
        assert_relative_eq!(tr.eval(0.5).trans()[0], 0.5, epsilon = 1e-14);
        for r in 1..=2 {
            assert!(tr.derivative(0.0, r)[0].abs() < 1e-12);
            assert!(tr.derivative(1.0 - 1e-12, r)[0].abs() < 1e-9);
        }
        assert_eq!(tr.eval(0.0), c1(0.0));
        assert_eq!(tr.eval(1.0), c1(1.0));
    }

    fn wiggly() -> (Vec<Configuration>, TimedTrajectory) {
        let wps = vec![
            Configuration::new(vec![0.0, 0.0], vec![0.2]),
            Configuration::new(vec![1.0, 0.5], vec![6.0]),
            Configuration::new(vec![1.5, -0.5], vec![5.0]),
            Configuration::new(vec![3.0, 0.0], vec![0.5]),
        ];
        let d = allocate_times(&wps, 9.0).unwrap();
        let tr = TimedTrajectory::smooth(&wps, &d, 1.0, 2).unwrap();
        (wps, tr)
    }

    #[test]
    fn knots_reproduce_waypoints() {
        let (wps, tr) = wiggly();
        for (i, q) in wps.iter().enumerate() {
            let e = tr.eval(tr.knots()[i]);
            for (a, b) in e.to_flat().iter().zip(q.to_flat()) {
                let d = if (a - b).abs() > PI {
                    (a - b).abs() - 2.0 * PI
                } else {
                    a - b
                };
                assert!(d.abs() < 1e-12, "{a} vs {b}");
            }
        }
        assert_eq!(tr.eval(tr.duration()), wps[3]);
        assert_eq!(tr.eval(tr.duration() - 0.5), wps[3]);
    }

    #[test]
    fn second_derivative_is_continuous() {
        let (_, tr) = wiggly();
        for &k in &tr.knots()[1..tr.knots().len() - 1] {
            for r in 0..=2 {
                let left = tr.derivative(k - 1e-9, r);
                let right = tr.derivative(k + 1e-9, r);
                for (a, b) in left.iter().zip(&right) {
                    assert!(
                        (a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1.0),
                        "r={r}: {a} vs {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn finite_difference_second_derivative() {
        let (_, tr) = wiggly();
        let h = 1e-4;
        for &k in &tr.knots()[1..tr.knots().len() - 1] {
            let fd = |t: f64| {
                let (a, b, c) = (
                    tr.derivative(t - h, 0),
                    tr.derivative(t, 0),
                    tr.derivative(t + h, 0),
                );
                a.iter()
                    .zip(&b)
                    .zip(&c)
                    .map(|((a, b), c)| (a - 2.0 * b + c) / (h * h))
                    .collect::<Vec<_>>()
            };
            let (l, r) = (fd(k - 3.0 * h), fd(k + 3.0 * h));
            for (a, b) in l.iter().zip(&r) {
                assert!((a - b).abs() < 1e-2 * a.abs().max(b.abs()).max(1.0));
            }
        }
    }

    #[test]
    fn higher_order_reference_is_smoother() {
        let wps = vec![c1(0.0), c1(1.0), c1(0.5), c1(2.0)];
        let d = allocate_times(&wps, 3.0).unwrap();
        let tr = TimedTrajectory::smooth(&wps, &d, 0.0, 3).unwrap();
        assert_eq!(tr.smoothness(), 3);
        for &k in &tr.knots()[1..3] {
            for r in 0..=3 {
                let (a, b) = (
                    tr.derivative(k - 1e-10, r)[0],
                    tr.derivative(k + 1e-10, r)[0],
                );
                assert!((a - b).abs() < 1e-5 * a.abs().max(1.0), "r={r}");
            }
        }
    }

    #[test]
    fn allocation_sums_to_total() {
        let (wps, _) = wiggly();
        let t_f = 100.0;
        let hold = DEFAULT_HOLD_FRACTION * t_f;
        let d = allocate_times(&wps, t_f - hold).unwrap();
        let tr = TimedTrajectory::smooth(&wps, &d, hold, 2).unwrap();
        assert!((d.iter().sum::<f64>() + hold - t_f).abs() < 1e-12);
        assert!((tr.duration() - t_f).abs() < 1e-12);
    }

    fn corridor_world(obstacles: Vec<Obstacle>) -> World {
        let sig = Signature::new(0, vec![(-1.0, 3.0), (-1.0, 3.0), (0.0, 1.0)]).unwrap();
        World::new(
            sig,
            obstacles,
            RobotVolume::PointSphere { radius: 0.1 },
            Vec3::new(-1.0, -1.0, 0.0),
            Vec3::new(3.0, 3.0, 1.0),
        )
        .unwrap()
    }

    fn c3(x: f64, y: f64) -> Configuration {
        Configuration::new(vec![x, y, 0.5], vec![])
    }

    #[test]
    fn straight_path_in_empty_world_is_clean() {
        let w = corridor_world(vec![]);
        let inf = Inflation::new(vec![0.1; 3], vec![]).unwrap();
        let wps = [c3(0.0, 0.0), c3(2.0, 2.0)];
        let tr = TimedTrajectory::smooth(&wps, &[10.0], 1.0, 2).unwrap();
        let (_, rep) =
            validate_extended(&tr, &w, &inf, ExtCheckPolicy::AnalyticInflation, 0.01, 5).unwrap();
        assert!(rep.is_clean());
        assert_eq!(rep.repair_rounds, 0);
    }

    #[test]
    fn turn_overshoot_is_repaired() {
        // L-shaped corridor: outer walls hugging the path's turn
        let left = Obstacle::Aabb {
            min: Vec3::new(-3.0, -3.0, -1.0),
            max: Vec3::new(-0.25, 3.5, 2.0),
        };
        let top = Obstacle::Aabb {
            min: Vec3::new(-3.0, 2.25, -1.0),
            max: Vec3::new(3.5, 3.5, 2.0),
        };
        let w = corridor_world(vec![left, top]);
        let inf = Inflation::new(vec![0.05; 3], vec![]).unwrap();
        let policy = ExtCheckPolicy::AnalyticInflation;
        let wps = [c3(0.0, -0.8), c3(0.0, 2.0), c3(2.5, 2.0)];
        for q in &wps {
            assert!(w.is_free_extended(q, &inf, policy).unwrap());
        }
        for p in wps.windows(2) {
            assert!(w
                .segment_free_extended(&p[0], &p[1], &inf, policy, 0.01)
                .unwrap());
        }
        let d = allocate_times(&wps, 10.0).unwrap();
        let tr = TimedTrajectory::smooth(&wps, &d, 1.0, 2).unwrap();
        let raw = check_extended(&tr, &w, &inf, policy, 0.01).unwrap();
        assert!(!raw.is_clean(), "smoothing should overshoot the turn");
        let (fixed, rep) = validate_extended(&tr, &w, &inf, policy, 0.01, 5).unwrap();
        assert!(rep.is_clean());
        assert!(rep.repair_rounds >= 1);
        assert!(fixed.hard_knots().iter().all(|&h| h));
    }

    #[test]
    fn obstacle_moved_onto_path_is_unrepairable() {
        let w = corridor_world(vec![Obstacle::Sphere {
            center: Vec3::new(1.0, 1.0, 0.5),
            radius: 0.3,
        }]);
        let inf = Inflation::new(vec![0.05; 3], vec![]).unwrap();
        let tr = TimedTrajectory::smooth(&[c3(0.0, 0.0), c3(2.0, 2.0)], &[5.0], 0.5, 2).unwrap();
        let r = validate_extended(&tr, &w, &inf, ExtCheckPolicy::AnalyticInflation, 0.01, 5);
        assert!(matches!(r, Err(KdfError::TrajectoryInvalid { count, .. }) if count > 0));
    }

    #[test]
    fn linear_mode_passes_through_waypoints() {
        let wps = [c1(0.0), c1(2.0), c1(1.0)];
        let tr = TimedTrajectory::linear(&wps, &[2.0, 1.0], 0.0).unwrap();
        assert_relative_eq!(tr.eval(1.0).trans()[0], 1.0);
        assert_relative_eq!(tr.eval(2.5).trans()[0], 1.5);
    }

    #[test]
    fn csv_export() {
        let tr = TimedTrajectory::smooth(&[c1(0.0), c1(1.0)], &[1.0], 0.0, 2).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf, 0.25).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,q0");
        assert_eq!(lines.len(), 6);
        assert!(lines[5].starts_with("1.000000,1.0"));
    }
}
