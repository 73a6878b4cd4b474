//! Static kd-tree over atom locations.
//!
//! Two queries drive the sparse exact solver: mass capture (nearest atoms
//! until enough target mass is gathered, for candidate arcs) and dual
//! pricing (atoms minimizing `|x-y|^p - potential`, pruned by a per-node
//! maximum of the potentials). The tree is built once per solve; the
//! per-node potential maxima are refreshed before each pricing sweep.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;
#[allow(unused_imports)] // f64 float methods come from the trait in no_std builds
use num_traits::Float;

const LEAF_SIZE: usize = 12;

pub struct KdTree {
    dim: usize,
    coords: Vec<f64>,
    /// permutation of atom indices, leaves own contiguous ranges
    order: Vec<u32>,
    nodes: Vec<Node>,
    /// per-node max of the pricing values, refreshed per sweep
    node_max: Vec<f64>,
}

struct Node {
    lo: Vec<f64>,
    hi: Vec<f64>,
    start: u32,
    end: u32,
    left: u32,
    right: u32,
}

const NONE: u32 = u32::MAX;

struct HeapItem {
    key: f64,
    node: u32,
    atom: u32,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on key via reversed comparison; ties on ids keep the
        // traversal deterministic
        other
            .key
            .partial_cmp(&self.key)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
            .then_with(|| other.atom.cmp(&self.atom))
    }
}

impl KdTree {
    pub fn build(dim: usize, coords: &[f64]) -> Self {
        let n = coords.len() / dim;
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut tree = KdTree {
            dim,
            coords: coords.to_vec(),
            order: Vec::new(),
            nodes: Vec::new(),
            node_max: Vec::new(),
        };
        if n > 0 {
            tree.split(&mut order, 0, n);
        }
        tree.order = order;
        tree.node_max = alloc::vec![0.0; tree.nodes.len()];
        tree
    }

    fn bbox(&self, idx: &[u32]) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim;
        let mut lo = alloc::vec![f64::INFINITY; d];
        let mut hi = alloc::vec![f64::NEG_INFINITY; d];
        for &i in idx {
            let p = &self.coords[i as usize * d..(i as usize + 1) * d];
            for k in 0..d {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    fn split(&mut self, order: &mut [u32], start: usize, end: usize) -> u32 {
        let (lo, hi) = self.bbox(&order[start..end]);
        let me = self.nodes.len() as u32;
        self.nodes.push(Node {
            lo,
            hi,
            start: start as u32,
            end: end as u32,
            left: NONE,
            right: NONE,
        });
        if end - start > LEAF_SIZE {
            // split the widest axis at the median
            let mut axis = 0;
            let mut width = -1.0;
            for k in 0..self.dim {
                let w = self.nodes[me as usize].hi[k] - self.nodes[me as usize].lo[k];
                if w > width {
                    width = w;
                    axis = k;
                }
            }
            if width > 0.0 {
                let mid = (start + end) / 2;
                let d = self.dim;
                let coords = &self.coords;
                order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
                    let xa = coords[a as usize * d + axis];
                    let xb = coords[b as usize * d + axis];
                    xa.partial_cmp(&xb).unwrap_or(Ordering::Equal).then(a.cmp(&b))
                });
                let left = self.split(order, start, mid);
                let right = self.split(order, mid, end);
                self.nodes[me as usize].left = left;
                self.nodes[me as usize].right = right;
            }
        }
        me
    }

    #[inline]
    fn point(&self, i: u32) -> &[f64] {
        &self.coords[i as usize * self.dim..(i as usize + 1) * self.dim]
    }

    #[inline]
    fn dist2(&self, i: u32, x: &[f64]) -> f64 {
        let p = self.point(i);
        let mut s = 0.0;
        for k in 0..self.dim {
            let t = p[k] - x[k];
            s += t * t;
        }
        s
    }

    #[inline]
    fn box_dist2(&self, node: u32, x: &[f64]) -> f64 {
        let nd = &self.nodes[node as usize];
        let mut s = 0.0;
        for k in 0..self.dim {
            let t = if x[k] < nd.lo[k] {
                nd.lo[k] - x[k]
            } else if x[k] > nd.hi[k] {
                x[k] - nd.hi[k]
            } else {
                0.0
            };
            s += t * t;
        }
        s
    }

    /// Index of the atom closest to `x`.
    pub fn nearest(&self, x: &[f64]) -> u32 {
        debug_assert!(!self.nodes.is_empty());
        let mut heap = BinaryHeap::new();
        heap.push(HeapItem {
            key: self.box_dist2(0, x),
            node: 0,
            atom: NONE,
        });
        let mut best = NONE;
        let mut best_d = f64::INFINITY;
        while let Some(item) = heap.pop() {
            if item.key >= best_d {
                break;
            }
            let nd = &self.nodes[item.node as usize];
            if nd.left == NONE {
                for &i in &self.order[nd.start as usize..nd.end as usize] {
                    let d2 = self.dist2(i, x);
                    if d2 < best_d || (d2 == best_d && i < best) {
                        best_d = d2;
                        best = i;
                    }
                }
            } else {
                for c in [nd.left, nd.right] {
                    heap.push(HeapItem {
                        key: self.box_dist2(c, x),
                        node: c,
                        atom: NONE,
                    });
                }
            }
        }
        best
    }

    /// Nearest atoms in distance order until the captured `mass` reaches
    /// `need` and at least `min_count` atoms are collected.
    pub fn capture_mass(
        &self,
        x: &[f64],
        masses: &[f64],
        need: f64,
        min_count: usize,
        out: &mut Vec<u32>,
    ) {
        out.clear();
        if self.nodes.is_empty() {
            return;
        }
        let mut heap: BinaryHeap<HeapItem> = BinaryHeap::new();
        heap.push(HeapItem {
            key: self.box_dist2(0, x),
            node: 0,
            atom: NONE,
        });
        let mut captured = 0.0;
        while let Some(item) = heap.pop() {
            if item.atom != NONE {
                out.push(item.atom);
                captured += masses[item.atom as usize];
                if captured >= need && out.len() >= min_count {
                    return;
                }
                continue;
            }
            let nd = &self.nodes[item.node as usize];
            if nd.left == NONE {
                for &i in &self.order[nd.start as usize..nd.end as usize] {
                    heap.push(HeapItem {
                        key: self.dist2(i, x),
                        node: NONE,
                        atom: i,
                    });
                }
            } else {
                for c in [nd.left, nd.right] {
                    heap.push(HeapItem {
                        key: self.box_dist2(c, x),
                        node: c,
                        atom: NONE,
                    });
                }
            }
        }
    }

    /// Refresh the per-node maxima of `pot` before a pricing sweep.
    pub fn refresh_max(&mut self, pot: &[f64]) {
        // children precede parents nowhere in particular, so walk in
        // reverse creation order: children were created after their parent,
        // hence iterate indices descending and pull from children.
        for idx in (0..self.nodes.len()).rev() {
            let nd = &self.nodes[idx];
            let m = if nd.left == NONE {
                let mut m = f64::NEG_INFINITY;
                for &i in &self.order[nd.start as usize..nd.end as usize] {
                    m = m.max(pot[i as usize]);
                }
                m
            } else {
                self.node_max[nd.left as usize].max(self.node_max[nd.right as usize])
            };
            self.node_max[idx] = m;
        }
    }

    /// Atoms whose pricing value `|x-y|^p - pot[y]` falls below `threshold`,
    /// best first, at most `limit`. Requires a preceding `refresh_max(pot)`.
    pub fn price_below(
        &self,
        x: &[f64],
        pot: &[f64],
        p: f64,
        threshold: f64,
        limit: usize,
        out: &mut Vec<(u32, f64)>,
    ) {
        out.clear();
        if self.nodes.is_empty() || limit == 0 {
            return;
        }
        let value_bound = |node: u32| -> f64 {
            pow_p(self.box_dist2(node, x), p) - self.node_max[node as usize]
        };
        let mut heap: BinaryHeap<HeapItem> = BinaryHeap::new();
        heap.push(HeapItem {
            key: value_bound(0),
            node: 0,
            atom: NONE,
        });
        while let Some(item) = heap.pop() {
            if item.key >= threshold {
                break;
            }
            if item.atom != NONE {
                out.push((item.atom, item.key));
                if out.len() >= limit {
                    return;
                }
                continue;
            }
            let nd = &self.nodes[item.node as usize];
            if nd.left == NONE {
                for &i in &self.order[nd.start as usize..nd.end as usize] {
                    let v = pow_p(self.dist2(i, x), p) - pot[i as usize];
                    if v < threshold {
                        heap.push(HeapItem {
                            key: v,
                            node: NONE,
                            atom: i,
                        });
                    }
                }
            } else {
                for c in [nd.left, nd.right] {
                    let b = value_bound(c);
                    if b < threshold {
                        heap.push(HeapItem {
                            key: b,
                            node: c,
                            atom: NONE,
                        });
                    }
                }
            }
        }
    }
}

/// `(d²)^(p/2)` with fast paths for orders 1 and 2.
#[inline]
pub fn pow_p(dist2: f64, p: f64) -> f64 {
    if p == 2.0 {
        dist2
    } else if p == 1.0 {
        dist2.sqrt()
    } else {
        dist2.powf(0.5 * p)
    }
}
