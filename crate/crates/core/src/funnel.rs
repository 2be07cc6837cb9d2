//! Prescribed-performance funnels and the model-free back-stepping funnel
//! controller. The controller sees only the measured state and the reference
//! configuration `q_d(t)`; it never queries the plant terms.

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::config_space::{wrap_pi, Configuration};
use crate::error::{KdfError, Result};
use crate::plant::PlantState;

/// Margin kept from `±1` on every normalized error.
const NOMINAL_CLAMP: f64 = 1e-12;
/// Margin applied after a funnel breach.
const BREACH_CLAMP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FunnelFn {
    Exponential { start: f64, end: f64, rate: f64 },
    Constant { value: f64 },
}

impl FunnelFn {
    pub fn exponential(start: f64, end: f64, rate: f64) -> Result<Self> {
        let f = FunnelFn::Exponential { start, end, rate };
        f.validate()?;
        Ok(f)
    }

    pub fn constant(value: f64) -> Result<Self> {
        let f = FunnelFn::Constant { value };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            FunnelFn::Exponential { start, end, rate } => {
                end > 0.0 && end <= start && rate >= 0.0 && start.is_finite() && rate.is_finite()
            }
            FunnelFn::Constant { value } => value > 0.0 && value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(KdfError::InvalidParameter(format!(
                "malformed funnel {self:?}"
            )))
        }
    }

    /// Value at elapsed time `tau = t - t₀`.
    pub fn eval(&self, tau: f64) -> f64 {
        match *self {
            FunnelFn::Exponential { start, end, rate } => {
                (start - end) * (-rate * tau.max(0.0)).exp() + end
            }
            FunnelFn::Constant { value } => value,
        }
    }

    /// Upper bound `ρ̄` (value at `t₀`).
    pub fn upper(&self) -> f64 {
        match *self {
            FunnelFn::Exponential { start, .. } => start,
            FunnelFn::Constant { value } => value,
        }
    }

    /// Lower bound `ρ̲`.
    pub fn lower(&self) -> f64 {
        match *self {
            FunnelFn::Exponential { end, .. } => end,
            FunnelFn::Constant { value } => value,
        }
    }
}

/// Shape of the higher-stage funnels built at `t₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum HigherShape {
    Constant,
    /// Decays from the initial value to `floor` (capped at the initial value).
    Exponential {
        floor: f64,
        rate: f64,
    },
}

/// Rule `ρ̄ = |e(t₀)| + a` with `a = max(|e(t₀)|, a_min)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HigherRule {
    pub a_min: f64,
    pub shape: HigherShape,
}

impl Default for HigherRule {
    fn default() -> Self {
        Self {
            a_min: 0.25,
            shape: HigherShape::Constant,
        }
    }
}

impl HigherRule {
    pub fn build(&self, e0: f64) -> Result<FunnelFn> {
        if !(self.a_min > 0.0) {
            return Err(KdfError::InvalidParameter(
                "higher-funnel margin must be > 0".into(),
            ));
        }
        let start = e0.abs() + e0.abs().max(self.a_min);
        match self.shape {
            HigherShape::Constant => FunnelFn::constant(start),
            HigherShape::Exponential { floor, rate } => {
                FunnelFn::exponential(start, floor.min(start), rate)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunnelSet {
    pub trans: Vec<FunnelFn>,
    pub rot: Vec<FunnelFn>,
    /// Stages `2..=k`, empty until the controller's first tick.
    pub higher: Vec<Vec<FunnelFn>>,
    pub rule: HigherRule,
}

impl FunnelSet {
    pub fn new(trans: Vec<FunnelFn>, rot: Vec<FunnelFn>, rule: HigherRule) -> Result<Self> {
        for f in trans.iter().chain(&rot) {
            f.validate()?;
        }
        if let Some(f) = rot.iter().find(|f| f.upper() >= 2.0) {
            return Err(KdfError::InvalidParameter(format!(
                "rotational funnel upper bound {} must be < 2",
                f.upper()
            )));
        }
        Ok(Self {
            trans,
            rot,
            higher: Vec::new(),
            rule,
        })
    }

    pub fn dim(&self) -> usize {
        self.trans.len() + self.rot.len()
    }

    /// Stage-1 funnel values at elapsed time `tau`, `[trans.., rot..]`.
    pub fn stage1_at(&self, tau: f64) -> Vec<f64> {
        self.trans
            .iter()
            .chain(&self.rot)
            .map(|f| f.eval(tau))
            .collect()
    }
}

/// Diagonal gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainSet {
    pub k_t: Vec<f64>,
    pub k_r: Vec<f64>,
    /// Diagonals of `K_2..K_k`.
    pub k_higher: Vec<Vec<f64>>,
}

impl GainSet {
    pub fn validate(&self, n_tr: usize, n_r: usize, order: usize) -> Result<()> {
        let n = n_tr + n_r;
        let shape_ok = self.k_t.len() == n_tr
            && self.k_r.len() == n_r
            && self.k_higher.len() == order - 1
            && self.k_higher.iter().all(|k| k.len() == n);
        if !shape_ok {
            return Err(KdfError::InvalidParameter(
                "gain dimensions do not match plant".into(),
            ));
        }
        let all = self
            .k_t
            .iter()
            .chain(&self.k_r)
            .chain(self.k_higher.iter().flatten());
        if all.clone().any(|&k| !(k > 0.0 && k.is_finite())) {
            return Err(KdfError::InvalidParameter("gains must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Trans,
    Rot,
    Higher,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transformed {
    /// Raw normalized error, before clamping.
    pub xi: f64,
    pub eps: f64,
    pub r: f64,
    pub breached: bool,
}

/// Normalized error `ξ`, transformed error `ε` and slope `r`. For
/// [`ErrorKind::Rot`], `e` is the chordal error `η`.
pub fn normalize_and_transform(e: f64, rho: f64, kind: ErrorKind) -> Transformed {
    let xi = e / rho;
    let breached = match kind {
        ErrorKind::Rot => !(xi < 1.0),
        _ => !(xi.abs() < 1.0),
    };
    let lim = 1.0
        - if breached {
            BREACH_CLAMP
        } else {
            NOMINAL_CLAMP
        };
    let x = if xi.is_nan() {
        lim
    } else {
        xi.clamp(-lim, lim)
    };
    let (eps, r) = match kind {
        ErrorKind::Rot => {
            let x = x.max(0.0);
            (-(-x).ln_1p(), 1.0 / (1.0 - x))
        }
        _ => ((x.ln_1p() - (-x).ln_1p()), 2.0 / (1.0 - x * x)),
    };
    Transformed {
        xi,
        eps,
        r,
        breached,
    }
}

/// Stage-1 errors: translational difference, wrapped angle difference and
/// chordal error `η = 1 - cos e^r`.
pub fn errors_stage1(
    q1: &Configuration,
    qd: &Configuration,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    if !q1.same_shape(qd) {
        return Err(KdfError::SignatureMismatch(
            q1.trans().len(),
            q1.rot().len(),
            qd.trans().len(),
            qd.rot().len(),
        ));
    }
    let e_t = q1
        .trans()
        .iter()
        .zip(qd.trans())
        .map(|(a, b)| a - b)
        .collect();
    let e_r: Vec<f64> = q1
        .rot()
        .iter()
        .zip(qd.rot())
        .map(|(a, b)| wrap_pi(a - b))
        .collect();
    let eta = e_r.iter().map(|e| 1.0 - e.cos()).collect();
    Ok((e_t, e_r, eta))
}

/// Stage-1 reference `[α^t; α^r]`.
#[allow(clippy::too_many_arguments)]
pub fn alpha1(
    eps_t: &[f64],
    r_t: &[f64],
    r_r: &[f64],
    sin_er: &[f64],
    rho_t: &[f64],
    rho_r: &[f64],
    gains: &GainSet,
) -> DVector<f64> {
    let n_tr = eps_t.len();
    let mut a = DVector::zeros(n_tr + r_r.len());
    for j in 0..n_tr {
        a[j] = -gains.k_t[j] * r_t[j] * eps_t[j] / rho_t[j];
    }
    for l in 0..r_r.len() {
        a[n_tr + l] = -gains.k_r[l] * sin_er[l] * r_r[l] / rho_r[l];
    }
    a
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageOutput {
    pub e: DVector<f64>,
    pub xi: DVector<f64>,
    pub eps: DVector<f64>,
    pub r: DVector<f64>,
    pub alpha: DVector<f64>,
    /// Coordinates that left their funnel.
    pub breached: Vec<usize>,
}

/// One back-stepping stage: `e_i = q_i - α_{i-1}`, `α_i = -K_i r ε / ρ`.
pub fn stage_i(
    q_i: &DVector<f64>,
    alpha_prev: &DVector<f64>,
    rho: &[f64],
    k: &[f64],
) -> StageOutput {
    let n = q_i.len();
    let e = q_i - alpha_prev;
    let mut out = StageOutput {
        xi: DVector::zeros(n),
        eps: DVector::zeros(n),
        r: DVector::zeros(n),
        alpha: DVector::zeros(n),
        breached: Vec::new(),
        e,
    };
    for m in 0..n {
        let tr = normalize_and_transform(out.e[m], rho[m], ErrorKind::Higher);
        out.xi[m] = tr.xi;
        out.eps[m] = tr.eps;
        out.r[m] = tr.r;
        out.alpha[m] = -k[m] * tr.r * tr.eps / rho[m];
        if tr.breached {
            out.breached.push(m);
        }
    }
    out
}

/// Smooth reference `q_d(t)` defined on `[t0, t_end]`.
pub trait Reference: Send + Sync {
    fn t0(&self) -> f64;
    fn t_end(&self) -> f64;
    fn sample(&self, t: f64) -> Configuration;
}

/// A reference that stays at one configuration.
#[derive(Debug, Clone)]
pub struct ConstantReference {
    pub q: Configuration,
    pub t0: f64,
    pub t_end: f64,
}

impl Reference for ConstantReference {
    fn t0(&self) -> f64 {
        self.t0
    }
    fn t_end(&self) -> f64 {
        self.t_end
    }
    fn sample(&self, _t: f64) -> Configuration {
        self.q.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunnelBreach {
    pub t: f64,
    /// One-based stage index.
    pub stage: usize,
    pub coord: usize,
    pub xi: f64,
}

/// Per-tick controller record. Stage vectors are indexed by stage (0 is the
/// configuration stage); stage-0 errors are `[e^t.., η^r..]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub t: f64,
    pub q_d: Configuration,
    pub e: Vec<Vec<f64>>,
    pub rho: Vec<Vec<f64>>,
    pub xi: Vec<Vec<f64>>,
    pub u: Vec<f64>,
    pub breaches: Vec<FunnelBreach>,
}

impl Diagnostics {
    pub fn max_abs_xi(&self) -> f64 {
        self.xi.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }
}

pub struct FunnelController {
    t0: f64,
    reference: Arc<dyn Reference>,
    funnels: FunnelSet,
    gains: GainSet,
    order: usize,
    last: Option<Diagnostics>,
    breach_count: usize,
}

impl std::fmt::Debug for FunnelController {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FunnelController")
            .field("t0", &self.t0)
            .field("funnels", &self.funnels)
            .field("gains", &self.gains)
            .field("order", &self.order)
            .finish()
    }
}

impl FunnelController {
    pub fn new(
        reference: Arc<dyn Reference>,
        funnels: FunnelSet,
        gains: GainSet,
        order: usize,
    ) -> Result<Self> {
        if order < 2 {
            return Err(KdfError::InvalidParameter(
                "controller order must be >= 2".into(),
            ));
        }
        gains.validate(funnels.trans.len(), funnels.rot.len(), order)?;
        let q0 = reference.sample(reference.t0());
        if q0.trans().len() != funnels.trans.len() || q0.rot().len() != funnels.rot.len() {
            return Err(KdfError::SignatureMismatch(
                funnels.trans.len(),
                funnels.rot.len(),
                q0.trans().len(),
                q0.rot().len(),
            ));
        }
        Ok(Self {
            t0: reference.t0(),
            reference,
            funnels,
            gains,
            order,
            last: None,
            breach_count: 0,
        })
    }

    pub fn funnels(&self) -> &FunnelSet {
        &self.funnels
    }

    pub fn gains(&self) -> &GainSet {
        &self.gains
    }

    pub fn last(&self) -> Option<&Diagnostics> {
        self.last.as_ref()
    }

    pub fn breach_count(&self) -> usize {
        self.breach_count
    }

    pub fn reference(&self) -> &Arc<dyn Reference> {
        &self.reference
    }

    /// One controller tick: stage-1 errors, the recursive stages, and `u`.
    /// Higher-stage funnels are built on the first call.
    pub fn control_tick(&mut self, s: &PlantState) -> Result<(DVector<f64>, Diagnostics)> {
        if s.higher.len() + 1 != self.order {
            return Err(KdfError::InvalidParameter(
                "state order does not match controller".into(),
            ));
        }
        let t = s.t.clamp(self.t0, self.reference.t_end());
        let tau = t - self.t0;
        let qd = self.reference.sample(t);
        let (e_t, e_r, eta) = errors_stage1(&s.q1, &qd)?;
        let n_tr = e_t.len();
        let n = n_tr + e_r.len();
        let mut breaches = Vec::new();

        let rho_t: Vec<f64> = self.funnels.trans.iter().map(|f| f.eval(tau)).collect();
        let rho_r: Vec<f64> = self.funnels.rot.iter().map(|f| f.eval(tau)).collect();
        let mut eps_t = Vec::with_capacity(n_tr);
        let mut r_t = Vec::with_capacity(n_tr);
        let mut xi1 = Vec::with_capacity(n);
        for (j, (&e, &rho)) in e_t.iter().zip(&rho_t).enumerate() {
            let tr = normalize_and_transform(e, rho, ErrorKind::Trans);
            if tr.breached {
                breaches.push(FunnelBreach {
                    t: s.t,
                    stage: 1,
                    coord: j,
                    xi: tr.xi,
                });
            }
            eps_t.push(tr.eps);
            r_t.push(tr.r);
            xi1.push(tr.xi);
        }
        let mut r_r = Vec::with_capacity(n - n_tr);
        for (l, (&h, &rho)) in eta.iter().zip(&rho_r).enumerate() {
            let tr = normalize_and_transform(h, rho, ErrorKind::Rot);
            if tr.breached {
                breaches.push(FunnelBreach {
                    t: s.t,
                    stage: 1,
                    coord: n_tr + l,
                    xi: tr.xi,
                });
            }
            r_r.push(tr.r);
            xi1.push(tr.xi);
        }
        let sin_er: Vec<f64> = e_r.iter().map(|e| e.sin()).collect();
        let mut alpha = alpha1(&eps_t, &r_t, &r_r, &sin_er, &rho_t, &rho_r, &self.gains);

        let mut e_all = vec![e_t.iter().chain(&eta).copied().collect::<Vec<_>>()];
        let mut rho_all = vec![rho_t.iter().chain(&rho_r).copied().collect::<Vec<_>>()];
        let mut xi_all = vec![xi1];

        let build = self.funnels.higher.is_empty();
        for (m, q_i) in s.higher.iter().enumerate() {
            if build {
                let e0 = q_i - &alpha;
                let stage = e0
                    .iter()
                    .map(|&e| self.funnels.rule.build(e))
                    .collect::<Result<Vec<_>>>()?;
                self.funnels.higher.push(stage);
            }
            let rho: Vec<f64> = self.funnels.higher[m].iter().map(|f| f.eval(tau)).collect();
            let out = stage_i(q_i, &alpha, &rho, &self.gains.k_higher[m]);
            for &c in &out.breached {
                breaches.push(FunnelBreach {
                    t: s.t,
                    stage: m + 2,
                    coord: c,
                    xi: out.xi[c],
                });
            }
            e_all.push(out.e.iter().copied().collect());
            rho_all.push(rho);
            xi_all.push(out.xi.iter().copied().collect());
            alpha = out.alpha;
        }

        if alpha.iter().any(|v| !v.is_finite()) {
            return Err(KdfError::NonFinite {
                t: s.t,
                what: "control input",
            });
        }
        for b in &breaches {
            log::warn!(
                "funnel breach at t = {:.4}: stage {} coord {} xi = {:.6}",
                b.t,
                b.stage,
                b.coord,
                b.xi
            );
        }
        self.breach_count += breaches.len();
        let diag = Diagnostics {
            t: s.t,
            q_d: qd,
            e: e_all,
            rho: rho_all,
            xi: xi_all,
            u: alpha.iter().copied().collect(),
            breaches,
        };
        self.last = Some(diag.clone());
        Ok((alpha, diag))
    }
}
