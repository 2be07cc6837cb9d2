//! Incremental kd-tree for nearest-neighbour queries under `d_T`.
//!
//! Configurations are embedded as `(t, cos θ/√2, sin θ/√2)`, where the
//! squared Euclidean distance equals `d_T`. The tree prunes on the embedding
//! and ranks candidates with the exact `d_T`, so the argmin (ties to the
//! lowest index) is identical to a linear scan.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::config_space::{dist_unchecked, Configuration};

#[derive(Debug, Clone)]
struct KdNode {
    item: usize,
    left: u32,
    right: u32,
}

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Default)]
pub struct KdIndex {
    m: usize,
    coords: Vec<f64>,
    nodes: Vec<KdNode>,
}

pub fn embed(q: &Configuration, out: &mut Vec<f64>) {
    out.extend_from_slice(q.trans());
    for a in q.rot() {
        out.push(a.cos() * FRAC_1_SQRT_2);
        out.push(a.sin() * FRAC_1_SQRT_2);
    }
}

impl KdIndex {
    pub fn new(n_tr: usize, n_r: usize) -> Self {
        Self {
            m: n_tr + 2 * n_r,
            coords: Vec::new(),
            nodes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn coord(&self, item: usize, axis: usize) -> f64 {
        self.coords[item * self.m + axis]
    }

    /// Inserts `q`; items are numbered in insertion order.
    pub fn insert(&mut self, q: &Configuration) {
        let item = self.nodes.len();
        embed(q, &mut self.coords);
        self.nodes.push(KdNode {
            item,
            left: NONE,
            right: NONE,
        });
        if item == 0 {
            return;
        }
        let mut cur = 0usize;
        let mut depth = 0usize;
        loop {
            let axis = depth % self.m;
            let go_left = self.coord(item, axis) < self.coord(self.nodes[cur].item, axis);
            let slot = if go_left {
                self.nodes[cur].left
            } else {
                self.nodes[cur].right
            };
            if slot == NONE {
                if go_left {
                    self.nodes[cur].left = item as u32;
                } else {
                    self.nodes[cur].right = item as u32;
                }
                return;
            }
            cur = slot as usize;
            depth += 1;
        }
    }

    /// Item minimizing `exact(item)`, ties to the lowest item. `exact` must
    /// agree with the embedded squared distance up to rounding.
    pub fn nearest_by<F: Fn(usize) -> f64>(&self, q: &Configuration, exact: F) -> Option<usize> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut e = Vec::with_capacity(self.m);
        embed(q, &mut e);
        let mut best = (f64::INFINITY, usize::MAX);
        let mut stack: Vec<(u32, usize, f64)> = vec![(0, 0, 0.0)];
        while let Some((node, depth, bound)) = stack.pop() {
            if bound > best.0 + 1e-12 * (1.0 + best.0) {
                continue;
            }
            let nd = &self.nodes[node as usize];
            let d = exact(nd.item);
            if d < best.0 || (d == best.0 && nd.item < best.1) {
                best = (d, nd.item);
            }
            let axis = depth % self.m;
            let diff = e[axis] - self.coord(nd.item, axis);
            let (near, far) = if diff < 0.0 {
                (nd.left, nd.right)
            } else {
                (nd.right, nd.left)
            };
            if far != NONE {
                stack.push((far, depth + 1, bound.max(diff * diff)));
            }
            if near != NONE {
                stack.push((near, depth + 1, bound));
            }
        }
        Some(best.1)
    }

    /// Nearest among `configs` (which must be the inserted items, in order).
    pub fn nearest(&self, configs: &[Configuration], q: &Configuration) -> Option<usize> {
        self.nearest_by(q, |i| dist_unchecked(&configs[i], q))
    }
}
