//! Closed-form distance queries between points, segments and axis-aligned
//! boxes in 3D. All distances are Euclidean and non-negative (zero on
//! contact or overlap).

use nalgebra::Vector3;

pub type Vec3 = Vector3<f64>;

pub fn point_aabb_dist(p: &Vec3, min: &Vec3, max: &Vec3) -> f64 {
    let mut acc = 0.0;
    for i in 0..3 {
        let d = if p[i] < min[i] {
            min[i] - p[i]
        } else if p[i] > max[i] {
            p[i] - max[i]
        } else {
            0.0
        };
        acc += d * d;
    }
    acc.sqrt()
}

/// Parameter in `[0, 1]` of the point on segment `ab` closest to `p`.
fn closest_param(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 <= f64::EPSILON {
        return 0.0;
    }
    ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
}

pub fn point_segment_dist(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let s = closest_param(p, a, b);
    (p - (a + (b - a) * s)).norm()
}

/// Distance between segments `p1q1` and `p2q2` (Ericson, Real-Time Collision
/// Detection, 5.1.9).
pub fn segment_segment_dist(p1: &Vec3, q1: &Vec3, p2: &Vec3, q2: &Vec3) -> f64 {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);
    let eps = 1e-14;

    let (s, t) = if a <= eps && e <= eps {
        (0.0, 0.0)
    } else if a <= eps {
        (0.0, (f / e).clamp(0.0, 1.0))
    } else {
        let c = d1.dot(&r);
        if e <= eps {
            ((-c / a).clamp(0.0, 1.0), 0.0)
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s = if denom > eps {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t = (b * s + f) / e;
            if t < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            }
            (s, t)
        }
    };
    let c1 = p1 + d1 * s;
    let c2 = p2 + d2 * t;
    (c1 - c2).norm()
}

/// Slab test: does the closed segment `ab` touch the closed box?
pub fn segment_intersects_aabb(a: &Vec3, b: &Vec3, min: &Vec3, max: &Vec3) -> bool {
    let d = b - a;
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for i in 0..3 {
        if d[i].abs() < 1e-15 {
            if a[i] < min[i] || a[i] > max[i] {
                return false;
            }
        } else {
            let inv = 1.0 / d[i];
            let mut ta = (min[i] - a[i]) * inv;
            let mut tb = (max[i] - a[i]) * inv;
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

/// Segment-to-box distance. When the segment misses the box, the closest pair
/// is either an endpoint against the box or the segment against one of the
/// twelve box edges (a face-interior minimum would need the segment to be
/// parallel to the face, in which case an endpoint attains it as well).
pub fn segment_aabb_dist(a: &Vec3, b: &Vec3, min: &Vec3, max: &Vec3) -> f64 {
    if segment_intersects_aabb(a, b, min, max) {
        return 0.0;
    }
    let mut best = point_aabb_dist(a, min, max).min(point_aabb_dist(b, min, max));
    for (e0, e1) in aabb_edges(min, max) {
        best = best.min(segment_segment_dist(a, b, &e0, &e1));
    }
    best
}

fn aabb_edges(min: &Vec3, max: &Vec3) -> [(Vec3, Vec3); 12] {
    let c = |x: bool, y: bool, z: bool| {
        Vec3::new(
            if x { max.x } else { min.x },
            if y { max.y } else { min.y },
            if z { max.z } else { min.z },
        )
    };
    [
        (c(false, false, false), c(true, false, false)),
        (c(false, true, false), c(true, true, false)),
        (c(false, false, true), c(true, false, true)),
        (c(false, true, true), c(true, true, true)),
        (c(false, false, false), c(false, true, false)),
        (c(true, false, false), c(true, true, false)),
        (c(false, false, true), c(false, true, true)),
        (c(true, false, true), c(true, true, true)),
        (c(false, false, false), c(false, false, true)),
        (c(true, false, false), c(true, false, true)),
        (c(false, true, false), c(false, true, true)),
        (c(true, true, false), c(true, true, true)),
    ]
}

pub fn aabb_aabb_dist(min1: &Vec3, max1: &Vec3, min2: &Vec3, max2: &Vec3) -> f64 {
    let mut acc = 0.0;
    for i in 0..3 {
        let gap = (min2[i] - max1[i]).max(min1[i] - max2[i]).max(0.0);
        acc += gap * gap;
    }
    acc.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    /// Dense sampling of both segments.
    fn brute_seg_seg(p1: &Vec3, q1: &Vec3, p2: &Vec3, q2: &Vec3) -> f64 {
        let n = 400;
        let mut best = f64::INFINITY;
        for i in 0..=n {
            let a = p1 + (q1 - p1) * (i as f64 / n as f64);
            best = best.min(point_segment_dist(&a, p2, q2));
        }
        best
    }

    #[test]
    fn point_box() {
        let (lo, hi) = (v(0.0, 0.0, 0.0), v(1.0, 1.0, 1.0));
        assert_eq!(point_aabb_dist(&v(0.5, 0.5, 0.5), &lo, &hi), 0.0);
        assert_relative_eq!(point_aabb_dist(&v(2.0, 0.5, 0.5), &lo, &hi), 1.0);
        assert_relative_eq!(
            point_aabb_dist(&v(2.0, 2.0, 0.5), &lo, &hi),
            2f64.sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn parallel_segments() {
        let d = segment_segment_dist(
            &v(0.0, 0.0, 0.0),
            &v(1.0, 0.0, 0.0),
            &v(0.0, 1.0, 0.0),
            &v(1.0, 1.0, 0.0),
        );
        assert_relative_eq!(d, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn crossing_segment_hits_box() {
        let (lo, hi) = (v(0.0, 0.0, 0.0), v(1.0, 1.0, 1.0));
        assert!(segment_intersects_aabb(
            &v(-1.0, 0.5, 0.5),
            &v(2.0, 0.5, 0.5),
            &lo,
            &hi
        ));
        assert_eq!(
            segment_aabb_dist(&v(-1.0, 0.5, 0.5), &v(2.0, 0.5, 0.5), &lo, &hi),
            0.0
        );
        // passes diagonally past an edge
        let d = segment_aabb_dist(&v(3.0, 0.0, 0.5), &v(0.0, 3.0, 0.5), &lo, &hi);
        assert_relative_eq!(d, 0.5f64.sqrt(), epsilon = 1e-9);
    }

    proptest! {
        #[test]
        fn seg_seg_matches_sampling(
            a in prop::array::uniform3(-2.0f64..2.0),
            b in prop::array::uniform3(-2.0f64..2.0),
            c in prop::array::uniform3(-2.0f64..2.0),
            d in prop::array::uniform3(-2.0f64..2.0),
        ) {
            let (p1, q1, p2, q2) = (Vec3::from(a), Vec3::from(b), Vec3::from(c), Vec3::from(d));
            let exact = segment_segment_dist(&p1, &q1, &p2, &q2);
            let brute = brute_seg_seg(&p1, &q1, &p2, &q2);
            prop_assert!(exact <= brute + 1e-9);
            prop_assert!(brute - exact < 0.02);
        }

        #[test]
        fn seg_box_matches_sampling(
            a in prop::array::uniform3(-3.0f64..3.0),
            b in prop::array::uniform3(-3.0f64..3.0),
        ) {
            let (lo, hi) = (v(-0.5, -0.2, 0.0), v(0.7, 0.4, 1.0));
            let (p, q) = (Vec3::from(a), Vec3::from(b));
            let exact = segment_aabb_dist(&p, &q, &lo, &hi);
            let n = 2000;
            let brute = (0..=n)
                .map(|i| point_aabb_dist(&(p + (q - p) * (i as f64 / n as f64)), &lo, &hi))
                .fold(f64::INFINITY, f64::min);
            prop_assert!(exact <= brute + 1e-9);
            prop_assert!(brute - exact < 0.01);
        }
    }
}
