//! Axis-aligned boxes inside the unit cube.

use alloc::vec::Vec;
#[allow(unused_imports)] // f64 float methods come from the trait in no_std builds
use num_traits::Float;

use crate::error::{Error, Result};

/// An axis-aligned box `[lo_1, hi_1] × … × [lo_d, hi_d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::Domain("box bounds must have equal, nonzero length"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::Domain("box must have positive volume"));
        }
        Ok(AxisBox { lo, hi })
    }

    /// The closed unit cube `[0,1]^d`.
    pub fn unit_cube(dim: usize) -> Self {
        AxisBox {
            lo: alloc::vec![0.0; dim],
            hi: alloc::vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn volume(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| b - a)
            .product()
    }

    pub fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    /// Membership in the closed box.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&xi, (&a, &b))| xi >= a && xi <= b)
    }

    /// Distance from an interior point to the box boundary: the smallest
    /// face-to-point gap `min_k min(x_k - lo_k, hi_k - x_k)`.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        let mut best = f64::INFINITY;
        for k in 0..self.dim() {
            best = best.min(x[k] - self.lo[k]).min(self.hi[k] - x[k]);
        }
        best.max(0.0)
    }

    /// The `2^d` sub-boxes obtained by bisecting every axis. Ordered by the
    /// binary pattern of halves, low half first on every axis.
    pub fn bisect(&self) -> Vec<AxisBox> {
        let d = self.dim();
        let mut out = Vec::with_capacity(1 << d);
        for pattern in 0..(1usize << d) {
            let mut lo = Vec::with_capacity(d);
            let mut hi = Vec::with_capacity(d);
            for k in 0..d {
                let mid = 0.5 * (self.lo[k] + self.hi[k]);
                if pattern >> k & 1 == 0 {
                    lo.push(self.lo[k]);
                    hi.push(mid);
                } else {
                    lo.push(mid);
                    hi.push(self.hi[k]);
                }
            }
            out.push(AxisBox { lo, hi });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_distance_picks_nearest_face() {
        let b = AxisBox::unit_cube(3);
        assert_eq!(b.boundary_distance(&[0.1, 0.5, 0.5]), 0.1 - 0.0);
        assert_eq!(b.boundary_distance(&[0.5, 0.97, 0.5]), 1.0 - 0.97);
    }

    #[test]
    fn bisect_tiles_the_volume() {
        let b = AxisBox::new(alloc::vec![0.0, 0.25], alloc::vec![0.5, 1.0]).unwrap();
        let parts = b.bisect();
        assert_eq!(parts.len(), 4);
        let total: f64 = parts.iter().map(|p| p.volume()).sum();
        assert!((total - b.volume()).abs() < 1e-15);
    }

    #[test]
    fn zero_volume_box_is_rejected() {
        assert!(AxisBox::new(alloc::vec![0.2], alloc::vec![0.2]).is_err());
    }
}
