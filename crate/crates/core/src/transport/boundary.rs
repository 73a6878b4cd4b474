//! Boundary-relaxed transport on a box: mass may exit through the nearest
//! face at cost `dist(x, ∂Ω)^p`, and demand may be fed from the boundary
//! the same way, so the two measures need not carry equal mass.

use alloc::vec::Vec;
#[allow(unused_imports)] // f64 float methods come from the trait in no_std builds
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geom::AxisBox;

use super::kdtree::pow_p;
use super::simplex::NetworkSimplex;
use super::DiscreteMeasure;

/// One leg of a boundary-relaxed plan. `src`/`dst` of `None` denote the
/// boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundaryLeg {
    pub src: Option<usize>,
    pub dst: Option<usize>,
    pub mass: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundaryTransportResult {
    pub cost: f64,
    pub legs: Vec<BoundaryLeg>,
    pub pivots: u64,
}

/// Boundary-relaxed p-cost between `mu` and `nu` on `domain`.
///
/// Internally a balanced transportation problem: a virtual boundary source
/// can feed every target at its face distance, a virtual boundary sink can
/// absorb every source likewise, and the two virtual nodes exchange surplus
/// for free.
pub fn boundary_wasserstein(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    domain: &AxisBox,
) -> Result<BoundaryTransportResult> {
    if !(p >= 1.0) {
        return Err(Error::Domain("transport order p must be at least 1"));
    }
    if mu.dim() != domain.dim() || nu.dim() != domain.dim() {
        return Err(Error::Domain("measures and domain must share a dimension"));
    }
    for i in 0..mu.len() {
        if !domain.contains(mu.point(i)) {
            return Err(Error::Domain("source atom outside the domain"));
        }
    }
    for j in 0..nu.len() {
        if !domain.contains(nu.point(j)) {
            return Err(Error::Domain("target atom outside the domain"));
        }
    }

    let ns = mu.len();
    let nt = nu.len();
    let mass_mu = mu.total_mass();
    let mass_nu = nu.total_mass();

    // nodes: sources, boundary-source, targets, boundary-sink
    let b_src = ns;
    let t_base = ns + 1;
    let b_sink = ns + 1 + nt;
    let mut supply = alloc::vec![0.0; ns + nt + 2];
    for i in 0..ns {
        supply[i] = mu.mass(i);
    }
    supply[b_src] = mass_nu;
    for j in 0..nt {
        supply[t_base + j] = -nu.mass(j);
    }
    supply[b_sink] = -mass_mu;

    let mut nx = NetworkSimplex::new(supply);
    let dim = domain.dim();
    for i in 0..ns {
        let x = mu.point(i);
        for j in 0..nt {
            let y = nu.point(j);
            let mut s = 0.0;
            for k in 0..dim {
                let t = x[k] - y[k];
                s += t * t;
            }
            nx.add_arc(i, t_base + j, pow_p(s, p));
        }
        nx.add_arc(i, b_sink, domain.boundary_distance(x).powf(p));
    }
    for j in 0..nt {
        nx.add_arc(b_src, t_base + j, domain.boundary_distance(nu.point(j)).powf(p));
    }
    nx.add_arc(b_src, b_sink, 0.0);

    let stats = nx.optimize()?;
    let mut legs = Vec::new();
    let mut cost = 0.0;
    for (s, t, f) in nx.support() {
        let leg_cost;
        let src;
        let dst;
        if s < ns && t >= t_base && t < b_sink {
            src = Some(s);
            dst = Some(t - t_base);
            let x = mu.point(s);
            let y = nu.point(t - t_base);
            let mut d2 = 0.0;
            for k in 0..dim {
                let d = x[k] - y[k];
                d2 += d * d;
            }
            leg_cost = pow_p(d2, p);
        } else if s < ns && t == b_sink {
            src = Some(s);
            dst = None;
            leg_cost = domain.boundary_distance(mu.point(s)).powf(p);
        } else if s == b_src && t >= t_base && t < b_sink {
            src = None;
            dst = Some(t - t_base);
            leg_cost = domain.boundary_distance(nu.point(t - t_base)).powf(p);
        } else {
            // boundary-to-boundary surplus exchange carries no cost
            continue;
        };
        cost += f * leg_cost;
        legs.push(BoundaryLeg {
            src,
            dst,
            mass: f,
            cost: f * leg_cost,
        });
    }
    legs.sort_unstable_by(|a, b| {
        (a.src.map_or(usize::MAX, |v| v), a.dst.map_or(usize::MAX, |v| v))
            .cmp(&(b.src.map_or(usize::MAX, |v| v), b.dst.map_or(usize::MAX, |v| v)))
    });
    Ok(BoundaryTransportResult {
        cost,
        legs,
        pivots: stats.pivots,
    })
}

/// A boundary problem with no targets: everything exports.
pub fn boundary_export_only(
    mu: &DiscreteMeasure,
    p: f64,
    domain: &AxisBox,
) -> Result<BoundaryTransportResult> {
    let mut cost = 0.0;
    let mut legs = Vec::new();
    for i in 0..mu.len() {
        if !domain.contains(mu.point(i)) {
            return Err(Error::Domain("source atom outside the domain"));
        }
        let c = domain.boundary_distance(mu.point(i)).powf(p) * mu.mass(i);
        cost += c;
        legs.push(BoundaryLeg {
            src: Some(i),
            dst: None,
            mass: mu.mass(i),
            cost: c,
        });
    }
    Ok(BoundaryTransportResult {
        cost,
        legs,
        pivots: 0,
    })
}
