//! Tensor-product quadrature on the unit cube.
//!
//! A [`Quadrature`] is a composite one-dimensional rule on `[0,1]` — `m`
//! equal cells carrying either a midpoint node or a Gauss–Legendre panel —
//! tensored over the `d` axes when a cube or box integral is requested.
//! Smooth integrands (every built-in density family is analytic) converge
//! spectrally in the Gauss order.

use alloc::vec::Vec;
#[allow(unused_imports)] // f64 float methods come from the trait in no_std builds
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geom::AxisBox;

/// One-dimensional rule applied inside each cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadRule {
    Midpoint,
    TensorGauss { order: usize },
}

/// Composite quadrature: `cells_per_axis` cells, one rule per cell.
#[derive(Debug, Clone)]
pub struct Quadrature {
    cells_per_axis: usize,
    rule: QuadRule,
    /// Nodes and weights on `[0,1]`; per-axis weights sum to 1.
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
///
/// Newton iteration on the Legendre recurrence; accurate to machine
/// precision for the orders used here (≤ 128).
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "Gauss order must be at least 1");
    let n = order;
    let mut nodes = alloc::vec![0.0; n];
    let mut weights = alloc::vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess for the i-th root of P_n.
        let mut x = (core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n and P_n' by the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        weights[i] = w;
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

impl Quadrature {
    pub fn new(cells_per_axis: usize, rule: QuadRule) -> Result<Self> {
        if cells_per_axis == 0 {
            return Err(Error::Domain("quadrature needs at least one cell per axis"));
        }
        if let QuadRule::TensorGauss { order } = rule {
            if order == 0 || order > 128 {
                return Err(Error::Domain("Gauss order must be in 1..=128"));
            }
        }
        let m = cells_per_axis;
        let cell = 1.0 / m as f64;
        let (mut nodes, mut weights) = (Vec::new(), Vec::new());
        match rule {
            QuadRule::Midpoint => {
                for i in 0..m {
                    nodes.push((i as f64 + 0.5) * cell);
                    weights.push(cell);
                }
            }
            QuadRule::TensorGauss { order } => {
                let (gx, gw) = gauss_legendre(order);
                for i in 0..m {
                    let a = i as f64 * cell;
                    for (x, w) in gx.iter().zip(&gw) {
                        nodes.push(a + 0.5 * cell * (x + 1.0));
                        weights.push(0.5 * cell * w);
                    }
                }
            }
        }
        Ok(Quadrature {
            cells_per_axis,
            rule,
            nodes,
            weights,
        })
    }

    /// Default rule used for normalization constants and functionals:
    /// a single cell with a Gauss panel of the given order.
    pub fn gauss(order: usize) -> Self {
        Quadrature::new(1, QuadRule::TensorGauss { order }).expect("valid order")
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    pub fn rule(&self) -> QuadRule {
        self.rule
    }

    /// Per-axis nodes on `[0,1]`.
    pub fn axis_nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Per-axis weights; they sum to 1.
    pub fn axis_weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integral of `f` over the unit cube `(0,1)^d`.
    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, dim: usize, f: F) -> f64 {
        self.integrate_box(&AxisBox::unit_cube(dim), f)
    }

    /// Integral of `f` over an axis-aligned box.
    pub fn integrate_box<F: FnMut(&[f64]) -> f64>(&self, bx: &AxisBox, mut f: F) -> f64 {
        let d = bx.dim();
        let n = self.nodes.len();
        // Affine-map the per-axis rule into every axis of the box.
        let mut ax_nodes = alloc::vec![0.0; d * n];
        let mut ax_weights = alloc::vec![0.0; d * n];
        for k in 0..d {
            let (a, b) = (bx.lo()[k], bx.hi()[k]);
            let w = b - a;
            for i in 0..n {
                ax_nodes[k * n + i] = a + w * self.nodes[i];
                ax_weights[k * n + i] = w * self.weights[i];
            }
        }
        let mut idx = alloc::vec![0usize; d];
        let mut x = alloc::vec![0.0; d];
        let mut wts = alloc::vec![0.0; d];
        for k in 0..d {
            x[k] = ax_nodes[k * n];
            wts[k] = ax_weights[k * n];
        }
        let mut total = 0.0;
        loop {
            let mut w = 1.0;
            for &wk in &wts {
                w *= wk;
            }
            total += w * f(&x);
            // odometer over the tensor grid
            let mut k = 0;
            loop {
                if k == d {
                    return total;
                }
                idx[k] += 1;
                if idx[k] < n {
                    x[k] = ax_nodes[k * n + idx[k]];
                    wts[k] = ax_weights[k * n + idx[k]];
                    break;
                }
                idx[k] = 0;
                x[k] = ax_nodes[k * n];
                wts[k] = ax_weights[k * n];
                k += 1;
            }
        }
    }

    /// One-dimensional integral of `f` over `[a, b]`.
    pub fn integrate_1d<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let w = b - a;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &wx)| w * wx * f(a + w * x))
            .sum()
    }
}

/// Composite Gauss integration of a 1-d function over `[a, b]` with panel
/// width at most `max_panel`.
pub fn composite_gauss_1d<F: FnMut(f64) -> f64>(
    a: f64,
    b: f64,
    order: usize,
    max_panel: f64,
    mut f: F,
) -> f64 {
    let width = b - a;
    if width <= 0.0 {
        return 0.0;
    }
    let panels = ((width / max_panel).ceil() as usize).max(1);
    let (gx, gw) = gauss_legendre(order);
    let h = width / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let lo = a + i as f64 * h;
        for (x, w) in gx.iter().zip(&gw) {
            total += 0.5 * h * w * f(lo + 0.5 * h * (x + 1.0));
        }
    }
    total
}
