//! Ground-truth plant dynamics of the form
//!
//! ```text
//! q̇_i = f_i(q̄_i, t) + g_i(q̄_i, t) q_{i+1},   i = 1..k-1
//! q̇_k = f_k(q̄_k, t) + g_k(q̄_k, t) u
//! ```
//!
//! Only the simulator evaluates `f_i` and `g_i`. Planners and the funnel
//! controller never see them.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config_space::{wrap_angle, Configuration};
use crate::error::{KdfError, Result};

/// Black-box plant terms. Stages are zero-based: stage `0` is the
/// configuration stage `q_1`, stage `k-1` receives the control input.
///
/// `states[m]` is `q_{m+1}` as a flat vector; for stage 0 rotational
/// coordinates are angles (not necessarily wrapped).
pub trait Dynamics: Send + Sync {
    fn order(&self) -> usize;
    fn n_tr(&self) -> usize;
    fn n_r(&self) -> usize;
    fn drift(&self, stage: usize, states: &[DVector<f64>], t: f64) -> DVector<f64>;
    fn input_gain(&self, stage: usize, states: &[DVector<f64>], t: f64) -> DMatrix<f64>;
    fn name(&self) -> &str;

    /// Stacked derivative of `x = [q_1; …; q_k]` under input `u`, written to
    /// `out`. Overrides must agree with [`assemble_rhs`].
    fn stacked_rhs(&self, t: f64, x: &[f64], u: &[f64], out: &mut [f64]) {
        assemble_rhs(self, t, x, u, out)
    }
}

/// Additive push on the last-stage drift over `[t_start, t_end)`, in units
/// of `q̇_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Push {
    pub t_start: f64,
    pub t_end: f64,
    pub amplitude: Vec<f64>,
}

impl Push {
    pub fn active(&self, t: f64) -> bool {
        t >= self.t_start && t < self.t_end
    }
}

#[derive(Clone)]
pub struct PlantModel {
    dynamics: Arc<dyn Dynamics>,
    pushes: Vec<Push>,
    /// Lower bound monitored on `λ_min(g_i + g_iᵀ)` in debug builds.
    lambda_floor: f64,
}

impl fmt::Debug for PlantModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlantModel")
            .field("dynamics", &self.dynamics.name())
            .field("order", &self.order())
            .field("pushes", &self.pushes)
            .finish()
    }
}

/// Full plant state: configuration, higher stages `q_2..q_k`, and time.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    pub q1: Configuration,
    pub higher: Vec<DVector<f64>>,
    pub t: f64,
}

impl PlantState {
    /// At rest at `q1` (all higher stages zero).
    pub fn at_rest(model: &PlantModel, q1: Configuration, t: f64) -> Self {
        let n = model.dim();
        Self {
            q1,
            higher: vec![DVector::zeros(n); model.order() - 1],
            t,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.q1
            .trans()
            .iter()
            .chain(self.q1.rot())
            .all(|v| v.is_finite())
            && self.higher.iter().all(|h| h.iter().all(|v| v.is_finite()))
    }
}

impl PlantModel {
    pub fn new(dynamics: Arc<dyn Dynamics>) -> Result<Self> {
        if dynamics.order() < 2 {
            return Err(KdfError::InvalidParameter(
                "plant order must be >= 2".into(),
            ));
        }
        Ok(Self {
            dynamics,
            pushes: Vec::new(),
            lambda_floor: 1e-6,
        })
    }

    pub fn with_pushes(mut self, pushes: Vec<Push>) -> Result<Self> {
        for p in &pushes {
            if p.amplitude.len() != self.dim() || !(p.t_end > p.t_start) {
                return Err(KdfError::InvalidParameter(format!("malformed push {p:?}")));
            }
        }
        self.pushes = pushes;
        Ok(self)
    }

    pub fn with_lambda_floor(mut self, floor: f64) -> Self {
        self.lambda_floor = floor;
        self
    }

    pub fn pushes(&self) -> &[Push] {
        &self.pushes
    }

    pub fn order(&self) -> usize {
        self.dynamics.order()
    }

    pub fn dim(&self) -> usize {
        self.dynamics.n_tr() + self.dynamics.n_r()
    }

    pub fn n_tr(&self) -> usize {
        self.dynamics.n_tr()
    }

    pub fn n_r(&self) -> usize {
        self.dynamics.n_r()
    }

    pub fn name(&self) -> &str {
        self.dynamics.name()
    }

    pub fn dynamics(&self) -> &Arc<dyn Dynamics> {
        &self.dynamics
    }

    /// Smallest eigenvalue of `g_i + g_iᵀ` over all stages at a state.
    pub fn min_input_eigenvalue(&self, states: &[DVector<f64>], t: f64) -> f64 {
        (0..self.order())
            .map(|i| {
                let g = self.dynamics.input_gain(i, &states[..=i], t);
                (&g + g.transpose()).symmetric_eigenvalues().min()
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[cfg(debug_assertions)]
    fn split(&self, x: &[f64]) -> Vec<DVector<f64>> {
        let n = self.dim();
        (0..self.order())
            .map(|i| DVector::from_column_slice(&x[i * n..(i + 1) * n]))
            .collect()
    }

    /// Stacked right-hand side for a held input `u`, pushes included.
    pub fn rhs_into(&self, t: f64, x: &[f64], u: &[f64], out: &mut [f64]) {
        self.dynamics.stacked_rhs(t, x, u, out);
        let last = (self.order() - 1) * self.dim();
        for p in self.pushes.iter().filter(|p| p.active(t)) {
            for (d, a) in out[last..].iter_mut().zip(&p.amplitude) {
                *d += a;
            }
        }
    }

    /// Flat `[q_1; …; q_k]` layout of a state.
    pub fn pack(&self, s: &PlantState) -> Vec<f64> {
        let mut x = s.q1.to_flat();
        for h in &s.higher {
            x.extend(h.iter());
        }
        x
    }

    /// Inverse of [`PlantModel::pack`]; rotational coordinates are rewrapped.
    pub fn unpack(&self, x: &[f64], t: f64) -> PlantState {
        let n = self.dim();
        let n_tr = self.n_tr();
        let trans = x[..n_tr].to_vec();
        let rot = x[n_tr..n].iter().map(|&a| wrap_angle(a)).collect();
        let higher = (1..self.order())
            .map(|i| DVector::from_column_slice(&x[i * n..(i + 1) * n]))
            .collect();
        PlantState {
            q1: Configuration::new(trans, rot),
            higher,
            t,
        }
    }

    #[cfg(debug_assertions)]
    pub(crate) fn monitor(&self, x: &[f64], t: f64) {
        let lam = self.min_input_eigenvalue(&self.split(x), t);
        assert!(
            lam >= self.lambda_floor,
            "input-gain positivity violated: λ_min(g + gᵀ) = {lam} at t = {t}"
        );
    }

    fn check_input(&self, u: &DVector<f64>, t: f64, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(KdfError::InvalidParameter("dt must be > 0".into()));
        }
        if u.len() != self.dim() || u.iter().any(|v| !v.is_finite()) {
            return Err(KdfError::NonFinite {
                t,
                what: "control input",
            });
        }
        Ok(())
    }

    /// One classical RK4 step of length `dt` with `u` held constant.
    pub fn step(&self, s: &PlantState, u: &DVector<f64>, dt: f64) -> Result<PlantState> {
        self.advance(s, u, dt, 1)
    }

    /// Integrates over `duration` in `substeps` equal RK4 steps (zero-order
    /// hold on `u`).
    pub fn advance(
        &self,
        s: &PlantState,
        u: &DVector<f64>,
        duration: f64,
        substeps: usize,
    ) -> Result<PlantState> {
        let substeps = substeps.max(1);
        let h = duration / substeps as f64;
        self.check_input(u, s.t, h)?;
        let mut x = self.pack(s);
        let mut ws = Rk4Workspace::new(x.len());
        let mut t = s.t;
        for _ in 0..substeps {
            #[cfg(debug_assertions)]
            self.monitor(&x, t);
            ws.step(self, t, &mut x, u.as_slice(), h);
            t += h;
        }
        let out = self.unpack(&x, s.t + duration);
        if !out.is_finite() {
            return Err(KdfError::NonFinite {
                t: out.t,
                what: "plant state",
            });
        }
        Ok(out)
    }
}

/// Scratch buffers for repeated RK4 steps on the flat state.
#[derive(Debug, Clone)]
pub struct Rk4Workspace {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Workspace {
    pub fn new(len: usize) -> Self {
        Self {
            k1: vec![0.0; len],
            k2: vec![0.0; len],
            k3: vec![0.0; len],
            k4: vec![0.0; len],
            tmp: vec![0.0; len],
        }
    }

    /// Advances `x` in place by one RK4 step. No positivity monitor.
    pub fn step(&mut self, m: &PlantModel, t: f64, x: &mut [f64], u: &[f64], h: f64) {
        let len = x.len();
        m.rhs_into(t, x, u, &mut self.k1);
        for i in 0..len {
            self.tmp[i] = x[i] + 0.5 * h * self.k1[i];
        }
        m.rhs_into(t + 0.5 * h, &self.tmp, u, &mut self.k2);
        for i in 0..len {
            self.tmp[i] = x[i] + 0.5 * h * self.k2[i];
        }
        m.rhs_into(t + 0.5 * h, &self.tmp, u, &mut self.k3);
        for i in 0..len {
            self.tmp[i] = x[i] + h * self.k3[i];
        }
        m.rhs_into(t + h, &self.tmp, u, &mut self.k4);
        for i in 0..len {
            x[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// Assembles the stacked derivative from `drift` and `input_gain`.
pub fn assemble_rhs<D: Dynamics + ?Sized>(d: &D, t: f64, x: &[f64], u: &[f64], out: &mut [f64]) {
    let n = d.n_tr() + d.n_r();
    let k = d.order();
    let stages: Vec<DVector<f64>> = (0..k)
        .map(|i| DVector::from_column_slice(&x[i * n..(i + 1) * n]))
        .collect();
    for i in 0..k {
        let f = d.drift(i, &stages[..=i], t);
        let g = d.input_gain(i, &stages[..=i], t);
        let next = if i + 1 < k {
            stages[i + 1].clone()
        } else {
            DVector::from_column_slice(u)
        };
        let v = f + g * next;
        out[i * n..(i + 1) * n].copy_from_slice(v.as_slice());
    }
}

/// Classical fourth-order Runge–Kutta step for `ẋ = f(t, x)`.
pub fn rk4_step<F>(f: F, t: f64, x: &DVector<f64>, h: f64) -> DVector<f64>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    let k1 = f(t, x);
    let k2 = f(t + 0.5 * h, &(x + &k1 * (0.5 * h)));
    let k3 = f(t + 0.5 * h, &(x + &k2 * (0.5 * h)));
    let k4 = f(t + h, &(x + &k3 * h));
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Deterministic sinusoidal disturbance: per-coordinate amplitude, with
/// frequencies and phases derived from a seed once at construction.
#[derive(Debug, Clone)]
pub struct SineDisturbance {
    amplitude: f64,
    omega: Vec<f64>,
    phase: Vec<f64>,
}

impl SineDisturbance {
    pub fn new(dim: usize, amplitude: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let omega = (0..dim).map(|_| rng.random_range(0.2..2.0)).collect();
        let phase = (0..dim).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        Self {
            amplitude,
            omega,
            phase,
        }
    }

    pub fn off(dim: usize) -> Self {
        Self::new(dim, 0.0, 0)
    }

    /// Coordinate `j` at time `t`.
    pub fn value(&self, j: usize, t: f64) -> f64 {
        if self.amplitude == 0.0 {
            0.0
        } else {
            self.amplitude * (self.omega[j] * t + self.phase[j]).sin()
        }
    }

    pub fn eval(&self, t: f64) -> DVector<f64> {
        DVector::from_iterator(
            self.omega.len(),
            self.omega
                .iter()
                .zip(&self.phase)
                .map(|(w, p)| self.amplitude * (w * t + p).sin()),
        )
    }
}

/// Chain of integrators `q̇_i = q_{i+1}`, `q̇_k = u`.
#[derive(Debug, Clone)]
pub struct IntegratorChain {
    pub order: usize,
    pub n_tr: usize,
    pub n_r: usize,
}

impl Dynamics for IntegratorChain {
    fn order(&self) -> usize {
        self.order
    }
    fn n_tr(&self) -> usize {
        self.n_tr
    }
    fn n_r(&self) -> usize {
        self.n_r
    }
    fn drift(&self, _stage: usize, _states: &[DVector<f64>], _t: f64) -> DVector<f64> {
        DVector::zeros(self.n_tr + self.n_r)
    }
    fn input_gain(&self, _stage: usize, _states: &[DVector<f64>], _t: f64) -> DMatrix<f64> {
        DMatrix::identity(self.n_tr + self.n_r, self.n_tr + self.n_r)
    }
    fn name(&self) -> &str {
        "integrator"
    }
    fn stacked_rhs(&self, _t: f64, x: &[f64], u: &[f64], out: &mut [f64]) {
        let n = self.n_tr + self.n_r;
        let last = (self.order - 1) * n;
        out[..last].copy_from_slice(&x[n..]);
        out[last..].copy_from_slice(u);
    }
}

pub fn double_integrator(n_tr: usize, n_r: usize) -> PlantModel {
    PlantModel::new(Arc::new(IntegratorChain {
        order: 2,
        n_tr,
        n_r,
    }))
    .expect("order 2 is valid")
}

/// Fully actuated rigid body in 3D: quadratic drag, gravity, and a bounded
/// sinusoidal wind force, driven by a force input.
#[derive(Debug, Clone)]
pub struct Uav {
    pub mass: f64,
    pub drag: f64,
    pub gravity: f64,
    pub wind: SineDisturbance,
}

impl Uav {
    pub const MASS: f64 = 1.2;
    pub const DRAG: f64 = 0.3;
    pub const GRAVITY: f64 = 9.81;
    pub const WIND: f64 = 0.5;
}

impl Dynamics for Uav {
    fn order(&self) -> usize {
        2
    }
    fn n_tr(&self) -> usize {
        3
    }
    fn n_r(&self) -> usize {
        0
    }
    fn drift(&self, stage: usize, states: &[DVector<f64>], t: f64) -> DVector<f64> {
        if stage == 0 {
            return DVector::zeros(3);
        }
        let v = &states[1];
        let mut force = v * (-self.drag * v.norm()) + self.wind.eval(t);
        force[2] -= self.gravity * self.mass;
        force / self.mass
    }
    fn input_gain(&self, stage: usize, _states: &[DVector<f64>], _t: f64) -> DMatrix<f64> {
        if stage == 0 {
            DMatrix::identity(3, 3)
        } else {
            DMatrix::identity(3, 3) / self.mass
        }
    }
    fn name(&self) -> &str {
        "uav"
    }
    fn stacked_rhs(&self, t: f64, x: &[f64], u: &[f64], out: &mut [f64]) {
        let v = &x[3..6];
        let speed = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        for j in 0..3 {
            out[j] = v[j];
            let mut force = -self.drag * speed * v[j] + self.wind.value(j, t) + u[j];
            if j == 2 {
                force -= self.gravity * self.mass;
            }
            out[3 + j] = force / self.mass;
        }
    }
}

pub fn builtin_uav(seed: u64, wind: bool) -> PlantModel {
    let amp = if wind { Uav::WIND } else { 0.0 };
    PlantModel::new(Arc::new(Uav {
        mass: Uav::MASS,
        drag: Uav::DRAG,
        gravity: Uav::GRAVITY,
        wind: SineDisturbance::new(3, amp, seed),
    }))
    .expect("uav is second order")
}

/// Planar serial arm surrogate: joints `0..n-1` are bounded reals, the last
/// joint is circle-valued. Gravity-like cosine loads, viscous damping,
/// velocity coupling and a state-dependent positive-definite input gain with
/// `λ_min(g₂) ≥ 0.5`. Coefficients are drawn once from a fixed seed.
#[derive(Debug, Clone)]
pub struct Arm {
    n: usize,
    gravity: Vec<f64>,
    damping: Vec<f64>,
    coupling: Vec<f64>,
    mix: DMatrix<f64>,
    disturbance: SineDisturbance,
}

impl Arm {
    const COEFF_SEED: u64 = 0x5EED_A12A;

    pub fn new(n_joints: usize, disturbance_amplitude: f64, seed: u64) -> Result<Self> {
        if !(2..=6).contains(&n_joints) {
            return Err(KdfError::InvalidParameter(format!(
                "arm joint count {n_joints} outside 2..=6"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(Self::COEFF_SEED);
        let n = n_joints;
        let gravity = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
        let damping = (0..n).map(|_| rng.random_range(0.2..0.6)).collect();
        let coupling = (0..n).map(|_| rng.random_range(0.05..0.15)).collect();
        let mix = DMatrix::from_fn(n, n, |_, _| rng.random_range(-0.5..0.5));
        Ok(Self {
            n,
            gravity,
            damping,
            coupling,
            mix,
            disturbance: SineDisturbance::new(n, disturbance_amplitude, seed),
        })
    }
}

impl Dynamics for Arm {
    fn order(&self) -> usize {
        2
    }
    fn n_tr(&self) -> usize {
        self.n - 1
    }
    fn n_r(&self) -> usize {
        1
    }
    fn drift(&self, stage: usize, states: &[DVector<f64>], t: f64) -> DVector<f64> {
        let n = self.n;
        if stage == 0 {
            return DVector::zeros(n);
        }
        let (q, v) = (&states[0], &states[1]);
        let mut phi = 0.0;
        let mut out = self.disturbance.eval(t);
        for j in 0..n {
            phi += q[j];
            let nxt = (j + 1) % n;
            out[j] += -self.gravity[j] * phi.cos() - self.damping[j] * v[j]
                + self.coupling[j] * (q[j] - q[nxt]).sin() * v[nxt] * v[nxt];
        }
        out
    }
    fn input_gain(&self, stage: usize, states: &[DVector<f64>], _t: f64) -> DMatrix<f64> {
        let n = self.n;
        if stage == 0 {
            return DMatrix::identity(n, n);
        }
        let q = &states[0];
        let a = DMatrix::from_fn(n, n, |i, j| {
            self.mix[(i, j)] * (1.0 + 0.5 * (q[i] - q[j]).cos())
        });
        DMatrix::identity(n, n) * 0.5 + &a * a.transpose()
    }
    fn name(&self) -> &str {
        "arm"
    }
    fn stacked_rhs(&self, t: f64, x: &[f64], u: &[f64], out: &mut [f64]) {
        let n = self.n;
        let (q, v) = (&x[..n], &x[n..2 * n]);
        out[..n].copy_from_slice(v);
        let mut a = [[0.0; 6]; 6];
        for i in 0..n {
            for j in 0..n {
                a[i][j] = self.mix[(i, j)] * (1.0 + 0.5 * (q[i] - q[j]).cos());
            }
        }
        let mut w = [0.0; 6];
        for j in 0..n {
            w[j] = (0..n).map(|i| a[i][j] * u[i]).sum();
        }
        let mut phi = 0.0;
        for j in 0..n {
            phi += q[j];
            let nxt = (j + 1) % n;
            let f = -self.gravity[j] * phi.cos() - self.damping[j] * v[j]
                + self.coupling[j] * (q[j] - q[nxt]).sin() * v[nxt] * v[nxt]
                + self.disturbance.value(j, t);
            let gu = 0.5 * u[j] + (0..n).map(|m| a[j][m] * w[m]).sum::<f64>();
            out[n + j] = f + gu;
        }
    }
}

pub fn builtin_arm(n_joints: usize, disturbance_amplitude: f64, seed: u64) -> Result<PlantModel> {
    PlantModel::new(Arc::new(Arm::new(n_joints, disturbance_amplitude, seed)?))
}

/// Single circle-valued joint: damped pendulum under gravity.
#[derive(Debug, Clone)]
pub struct Pendulum {
    pub stiffness: f64,
    pub damping: f64,
    pub gain: f64,
    pub disturbance: SineDisturbance,
}

impl Dynamics for Pendulum {
    fn order(&self) -> usize {
        2
    }
    fn n_tr(&self) -> usize {
        0
    }
    fn n_r(&self) -> usize {
        1
    }
    fn drift(&self, stage: usize, states: &[DVector<f64>], t: f64) -> DVector<f64> {
        if stage == 0 {
            return DVector::zeros(1);
        }
        let (q, v) = (states[0][0], states[1][0]);
        let d = self.disturbance.eval(t)[0];
        DVector::from_element(1, -self.stiffness * q.sin() - self.damping * v + d)
    }
    fn input_gain(&self, stage: usize, _states: &[DVector<f64>], _t: f64) -> DMatrix<f64> {
        if stage == 0 {
            DMatrix::identity(1, 1)
        } else {
            DMatrix::from_element(1, 1, self.gain)
        }
    }
    fn name(&self) -> &str {
        "pendulum"
    }
    fn stacked_rhs(&self, t: f64, x: &[f64], u: &[f64], out: &mut [f64]) {
        let d = self.disturbance.value(0, t);
        out[0] = x[1];
        out[1] = -self.stiffness * x[0].sin() - self.damping * x[1] + d + self.gain * u[0];
    }
}

pub fn builtin_pendulum(disturbance_amplitude: f64, seed: u64) -> PlantModel {
    PlantModel::new(Arc::new(Pendulum {
        stiffness: 19.62,
        damping: 0.2,
        gain: 4.0,
        disturbance: SineDisturbance::new(1, disturbance_amplitude, seed),
    }))
    .expect("pendulum is second order")
}
