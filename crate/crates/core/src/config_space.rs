//! The mixed configuration manifold `R^n_tr x (S^1)^n_r`.
//!
//! Translational coordinates are plain reals (positions, or joint angles that
//! are treated as bounded reals). Rotational coordinates live on the circle and
//! are always stored in `[0, 2π)`.

use std::f64::consts::{PI, TAU};
use std::fmt;

use crate::error::{KdfError, Result};

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Wraps an angle difference into `(-π, π]`.
pub fn wrap_pi(x: f64) -> f64 {
    let r = wrap_angle(x);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Chordal distance on the circle, `1 - cos x`. Always in `[0, 2]`.
pub fn chordal(x: f64) -> f64 {
    1.0 - x.cos()
}

/// Sum of per-component chordal distances.
pub fn chordal_sum(x: &[f64]) -> f64 {
    x.iter().map(|&v| chordal(v)).sum()
}

/// Shape of a configuration space: how many translational and rotational
/// coordinates it has, plus the closed box bounding the translational part.
#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    n_tr: usize,
    n_r: usize,
    trans_bounds: Vec<(f64, f64)>,
}

impl Signature {
    pub fn new(n_r: usize, trans_bounds: Vec<(f64, f64)>) -> Result<Self> {
        let n_tr = trans_bounds.len();
        if n_tr + n_r == 0 {
            return Err(KdfError::InvalidParameter(
                "signature needs at least one coordinate".into(),
            ));
        }
        for (i, &(lo, hi)) in trans_bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(KdfError::InvalidParameter(format!(
                    "translational bound {i} is empty or non-finite: [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self {
            n_tr,
            n_r,
            trans_bounds,
        })
    }

    pub fn n_tr(&self) -> usize {
        self.n_tr
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    /// Total dimension `n = n_tr + n_r`.
    pub fn dim(&self) -> usize {
        self.n_tr + self.n_r
    }

    pub fn trans_bounds(&self) -> &[(f64, f64)] {
        &self.trans_bounds
    }

    pub fn matches(&self, q: &Configuration) -> bool {
        q.trans.len() == self.n_tr && q.rot.len() == self.n_r
    }

    pub fn check(&self, q: &Configuration) -> Result<()> {
        if self.matches(q) {
            Ok(())
        } else {
            Err(KdfError::SignatureMismatch(
                self.n_tr,
                self.n_r,
                q.trans.len(),
                q.rot.len(),
            ))
        }
    }

    /// True iff every translational coordinate lies inside its closed bound.
    pub fn contains(&self, q: &Configuration) -> bool {
        q.trans
            .iter()
            .zip(&self.trans_bounds)
            .all(|(&x, &(lo, hi))| x >= lo && x <= hi)
    }

    /// Builds a configuration from a flat `[trans.., rot..]` slice.
    pub fn from_flat(&self, flat: &[f64]) -> Result<Configuration> {
        if flat.len() != self.dim() {
            return Err(KdfError::InvalidParameter(format!(
                "expected {} coordinates, got {}",
                self.dim(),
                flat.len()
            )));
        }
        Ok(Configuration::new(
            flat[..self.n_tr].to_vec(),
            flat[self.n_tr..].to_vec(),
        ))
    }
}

/// A point on the mixed manifold. Rotational entries are normalized into
/// `[0, 2π)` on construction and never leave that range.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    trans: Vec<f64>,
    rot: Vec<f64>,
}

impl Configuration {
    pub fn new(trans: Vec<f64>, mut rot: Vec<f64>) -> Self {
        for r in &mut rot {
            *r = wrap_angle(*r);
        }
        Self { trans, rot }
    }

    pub fn trans(&self) -> &[f64] {
        &self.trans
    }

    pub fn rot(&self) -> &[f64] {
        &self.rot
    }

    pub fn dim(&self) -> usize {
        self.trans.len() + self.rot.len()
    }

    pub fn same_shape(&self, other: &Configuration) -> bool {
        self.trans.len() == other.trans.len() && self.rot.len() == other.rot.len()
    }

    fn shape_check(&self, other: &Configuration) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(KdfError::SignatureMismatch(
                self.trans.len(),
                self.rot.len(),
                other.trans.len(),
                other.rot.len(),
            ))
        }
    }

    /// Flat `[trans.., rot..]` copy.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.extend_from_slice(&self.trans);
        v.extend_from_slice(&self.rot);
        v
    }

    /// Coordinate `i` of the flat layout.
    pub fn coord(&self, i: usize) -> f64 {
        if i < self.trans.len() {
            self.trans[i]
        } else {
            self.rot[i - self.trans.len()]
        }
    }

    /// Proximity measure `‖Δtrans‖² + Σ (1 - cos Δrot)`.
    ///
    /// This is a squared-norm-plus-chordal measure, not a metric: it is
    /// symmetric and zero only on coincident configurations, but it does not
    /// satisfy the triangle inequality.
    pub fn dist(&self, other: &Configuration) -> Result<f64> {
        self.shape_check(other)?;
        Ok(dist_unchecked(self, other))
    }

    /// Covering-space displacement from `self` to `other`: translational
    /// differences and shortest-arc angle differences in `(-π, π]`.
    pub fn displacement(&self, other: &Configuration) -> Result<Vec<f64>> {
        self.shape_check(other)?;
        Ok(displacement_unchecked(self, other))
    }

    /// Moves along the segment from `self` to `other`; rotational coordinates
    /// take the shorter arc.
    pub fn interpolate(&self, other: &Configuration, s: f64) -> Result<Configuration> {
        self.shape_check(other)?;
        if !(0.0..=1.0).contains(&s) {
            return Err(KdfError::InterpolationOutOfRange(s));
        }
        Ok(interpolate_unchecked(self, other, s))
    }

    /// Applies a covering-space offset (translational plus angular).
    pub fn offset(&self, delta: &[f64]) -> Configuration {
        debug_assert_eq!(delta.len(), self.dim());
        let n_tr = self.trans.len();
        let trans = self
            .trans
            .iter()
            .zip(&delta[..n_tr])
            .map(|(a, d)| a + d)
            .collect();
        let rot = self
            .rot
            .iter()
            .zip(&delta[n_tr..])
            .map(|(a, d)| a + d)
            .collect();
        Configuration::new(trans, rot)
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, v) in self.to_flat().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v:.4}")?;
        }
        write!(f, "]")
    }
}

/// `dist` without the shape check. Callers guarantee matching signatures.
pub fn dist_unchecked(a: &Configuration, b: &Configuration) -> f64 {
    debug_assert!(a.same_shape(b));
    let t: f64 = a
        .trans
        .iter()
        .zip(&b.trans)
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    let r: f64 = a.rot.iter().zip(&b.rot).map(|(x, y)| chordal(x - y)).sum();
    t + r
}

pub fn displacement_unchecked(a: &Configuration, b: &Configuration) -> Vec<f64> {
    debug_assert!(a.same_shape(b));
    let mut d = Vec::with_capacity(a.dim());
    d.extend(a.trans.iter().zip(&b.trans).map(|(x, y)| y - x));
    d.extend(a.rot.iter().zip(&b.rot).map(|(x, y)| wrap_pi(y - x)));
    d
}

pub fn interpolate_unchecked(a: &Configuration, b: &Configuration, s: f64) -> Configuration {
    debug_assert!(a.same_shape(b));
    let trans = a
        .trans
        .iter()
        .zip(&b.trans)
        .map(|(x, y)| x + s * (y - x))
        .collect();
    let rot = a
        .rot
        .iter()
        .zip(&b.rot)
        .map(|(x, y)| x + s * wrap_pi(y - x))
        .collect();
    Configuration::new(trans, rot)
}

/// Largest per-coordinate covering-space deviation between two configurations
/// (translational absolute difference, rotational shortest arc).
pub fn max_coord_deviation(a: &Configuration, b: &Configuration) -> f64 {
    displacement_unchecked(a, b)
        .into_iter()
        .fold(0.0, |m, d| m.max(d.abs()))
}

/// Euclidean length of the covering-space displacement.
pub fn covering_length(a: &Configuration, b: &Configuration) -> f64 {
    displacement_unchecked(a, b)
        .into_iter()
        .map(|d| d * d)
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn chordal_examples() {
        assert_eq!(chordal(0.0), 0.0);
        assert_eq!(chordal(PI), 2.0);
        // 1 - cos(π/3) = 1/2
        assert_relative_eq!(chordal(PI / 3.0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn chordal_sum_examples() {
        assert_eq!(chordal_sum(&[0.0, 0.0]), 0.0);
        assert_eq!(chordal_sum(&[PI, PI]), 4.0);
        assert_relative_eq!(chordal_sum(&[PI / 2.0, PI / 3.0]), 1.5, epsilon = 1e-15);
    }

    #[test]
    fn dist_examples() {
        let x = Configuration::new(vec![0.3, -1.0], vec![1.0]);
        assert_eq!(x.dist(&x).unwrap(), 0.0);

        let a = Configuration::new(vec![0.0, 0.0], vec![0.5]);
        let b = Configuration::new(vec![1.0, 0.0], vec![0.5]);
        assert_relative_eq!(a.dist(&b).unwrap(), 1.0, epsilon = 1e-15);

        let a = Configuration::new(vec![2.0], vec![0.0]);
        let b = Configuration::new(vec![2.0], vec![PI]);
        assert_relative_eq!(a.dist(&b).unwrap(), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn dist_rejects_mismatched_shapes() {
        let a = Configuration::new(vec![0.0], vec![0.0]);
        let b = Configuration::new(vec![0.0, 0.0], vec![]);
        assert!(matches!(a.dist(&b), Err(KdfError::SignatureMismatch(..))));
    }

    #[test]
    fn interpolate_endpoints_and_wrap() {
        let x = Configuration::new(vec![0.0], vec![0.1]);
        let y = Configuration::new(vec![2.0], vec![TAU - 0.1]);
        assert_eq!(x.interpolate(&y, 0.0).unwrap(), x);
        let end = x.interpolate(&y, 1.0).unwrap();
        assert_relative_eq!(end.trans()[0], 2.0);
        assert_relative_eq!(end.rot()[0], TAU - 0.1, epsilon = 1e-12);

        let mid = x.interpolate(&y, 0.5).unwrap();
        assert_relative_eq!(mid.trans()[0], 1.0);
        // shorter arc crosses the wrap point: midpoint is 0 (mod 2π)
        assert!(chordal(mid.rot()[0]) < 1e-24);
    }

    #[test]
    fn interpolate_rejects_out_of_range() {
        let x = Configuration::new(vec![0.0], vec![]);
        assert!(matches!(
            x.interpolate(&x, 1.5),
            Err(KdfError::InterpolationOutOfRange(_))
        ));
        assert!(x.interpolate(&x, -0.1).is_err());
    }

    #[test]
    fn rot_normalized_on_construction() {
        let q = Configuration::new(vec![], vec![-0.5, 7.0, TAU, -1e-18]);
        for &r in q.rot() {
            assert!((0.0..TAU).contains(&r), "{r}");
        }
    }

    #[test]
    fn signature_validation() {
        assert!(Signature::new(0, vec![]).is_err());
        assert!(Signature::new(0, vec![(1.0, 0.0)]).is_err());
        let sig = Signature::new(1, vec![(-1.0, 1.0)]).unwrap();
        assert_eq!(sig.dim(), 2);
        let q = sig.from_flat(&[0.5, 7.0]).unwrap();
        assert!(sig.contains(&q));
        assert!(!sig.contains(&Configuration::new(vec![1.5], vec![0.0])));
    }

    proptest! {
        #[test]
        fn chordal_even_and_periodic(x in -50.0f64..50.0) {
            prop_assert!((chordal(x) - chordal(-x)).abs() < 1e-12);
            prop_assert!((chordal(x) - chordal(x + TAU)).abs() < 1e-12);
            prop_assert!((0.0..=2.0).contains(&chordal(x)));
        }

        #[test]
        fn dist_symmetric_nonnegative(
            t1 in prop::collection::vec(-5.0f64..5.0, 2),
            t2 in prop::collection::vec(-5.0f64..5.0, 2),
            r1 in prop::collection::vec(-10.0f64..10.0, 2),
            r2 in prop::collection::vec(-10.0f64..10.0, 2),
        ) {
            let a = Configuration::new(t1, r1);
            let b = Configuration::new(t2, r2);
            let dab = a.dist(&b).unwrap();
            let dba = b.dist(&a).unwrap();
            prop_assert!(dab >= 0.0);
            prop_assert!((dab - dba).abs() < 1e-12);
            prop_assert_eq!(a.dist(&a).unwrap(), 0.0);
        }

        #[test]
        fn interpolation_rot_monotone_short_arc(
            r1 in 0.0f64..TAU, r2 in 0.0f64..TAU,
        ) {
            let a = Configuration::new(vec![], vec![r1]);
            let b = Configuration::new(vec![], vec![r2]);
            let total = wrap_pi(r2 - r1);
            prop_assert!(total.abs() <= PI);
            let mut prev = 0.0f64;
            for k in 1..=20 {
                let s = k as f64 / 20.0;
                let q = a.interpolate(&b, s).unwrap();
                let moved = wrap_pi(q.rot()[0] - r1);
                // displacement grows monotonically in the direction of the short arc
                prop_assert!(moved * total.signum() >= prev - 1e-9);
                prev = moved * total.signum();
            }
        }
    }
}
