//! Grid discretization of a density into a discrete measure.

use alloc::vec::Vec;

use crate::density::Density;
use crate::error::{Error, Result};
use crate::geom::AxisBox;
use crate::quad::composite_gauss_1d;

use super::DiscreteMeasure;

/// Where the atom of each cell sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscretizeRule {
    /// Geometric cell center.
    Midpoint,
    /// Mass barycenter of the cell.
    Barycenter,
}

/// Split the unit cube into `m^d` cells, place one atom per cell carrying
/// the cell mass, and renormalize so the atoms sum to one.
pub fn discretize_density(g: &Density, m: usize, rule: DiscretizeRule) -> Result<DiscreteMeasure> {
    discretize_density_on_box(g, &AxisBox::unit_cube(g.dim()), m, rule, 1.0)
}

/// Same on an arbitrary box, rescaled to carry `target_mass`.
pub fn discretize_density_on_box(
    g: &Density,
    bx: &AxisBox,
    m: usize,
    rule: DiscretizeRule,
    target_mass: f64,
) -> Result<DiscreteMeasure> {
    if m == 0 {
        return Err(Error::Domain("cells per axis must be at least 1"));
    }
    if bx.dim() != g.dim() {
        return Err(Error::Domain("box and density dimensions disagree"));
    }
    let d = g.dim();
    if g.is_product() {
        // per-axis masses and barycenters tensor together
        let mut axis_mass: Vec<Vec<f64>> = Vec::with_capacity(d);
        let mut axis_loc: Vec<Vec<f64>> = Vec::with_capacity(d);
        for k in 0..d {
            let (lo, hi) = (bx.lo()[k], bx.hi()[k]);
            let step = (hi - lo) / m as f64;
            let mut masses = Vec::with_capacity(m);
            let mut locs = Vec::with_capacity(m);
            for c in 0..m {
                let a = lo + c as f64 * step;
                let b = a + step;
                let mass = g.axis_mass(k, a, b);
                masses.push(mass);
                let loc = match rule {
                    DiscretizeRule::Midpoint => 0.5 * (a + b),
                    DiscretizeRule::Barycenter => {
                        let first =
                            composite_gauss_1d(a, b, 8, step / 4.0, |x| x * axis_density(g, k, x));
                        let denom =
                            composite_gauss_1d(a, b, 8, step / 4.0, |x| axis_density(g, k, x));
                        if denom > 0.0 {
                            first / denom
                        } else {
                            0.5 * (a + b)
                        }
                    }
                };
                locs.push(loc);
            }
            axis_mass.push(masses);
            axis_loc.push(locs);
        }
        let count = m.pow(d as u32);
        let mut coords = Vec::with_capacity(count * d);
        let mut masses = Vec::with_capacity(count);
        let mut idx = alloc::vec![0usize; d];
        loop {
            let mut mass = 1.0;
            for k in 0..d {
                coords.push(axis_loc[k][idx[k]]);
                mass *= axis_mass[k][idx[k]];
            }
            masses.push(mass);
            let mut k = d;
            loop {
                if k == 0 {
                    let total: f64 = masses.iter().sum();
                    let scale = target_mass / total;
                    for v in &mut masses {
                        *v *= scale;
                    }
                    return DiscreteMeasure::new(d, coords, masses);
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < m {
                    break;
                }
                idx[k] = 0;
            }
        }
    } else {
        // generic path: per-cell box masses (exact for grid densities)
        let count = m.pow(d as u32);
        let mut coords = Vec::with_capacity(count * d);
        let mut masses = Vec::with_capacity(count);
        let mut idx = alloc::vec![0usize; d];
        let mut lo = alloc::vec![0.0; d];
        let mut hi = alloc::vec![0.0; d];
        loop {
            for k in 0..d {
                let step = (bx.hi()[k] - bx.lo()[k]) / m as f64;
                lo[k] = bx.lo()[k] + idx[k] as f64 * step;
                hi[k] = lo[k] + step;
            }
            let cell = AxisBox::new(lo.clone(), hi.clone())?;
            let mass = g.box_mass(&cell);
            for k in 0..d {
                coords.push(0.5 * (lo[k] + hi[k]));
            }
            masses.push(mass.max(1e-300));
            let mut k = d;
            loop {
                if k == 0 {
                    let total: f64 = masses.iter().sum();
                    let scale = target_mass / total;
                    for v in &mut masses {
                        *v *= scale;
                    }
                    return DiscreteMeasure::new(d, coords, masses);
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < m {
                    break;
                }
                idx[k] = 0;
            }
        }
    }
}

/// Normalized 1-d factor density used for barycenters.
fn axis_density(g: &Density, k: usize, x: f64) -> f64 {
    // derivative of the axis CDF; cheap via a centered difference of the
    // analytic axis mass
    let h = 1e-6;
    let (a, b) = ((x - h).max(0.0), (x + h).min(1.0));
    g.axis_mass(k, a, b) / (b - a)
}
