//! Discrete optimal transport: exact and entropic solvers, density
//! discretization, and the boundary-relaxed cost on boxes.

mod boundary;
mod discretize;
mod entropic;
mod kdtree;
mod simplex;

pub use boundary::{
    boundary_export_only, boundary_wasserstein, BoundaryLeg, BoundaryTransportResult,
};
pub use discretize::{discretize_density, discretize_density_on_box, DiscretizeRule};
pub use entropic::wasserstein_entropic;

use alloc::vec::Vec;
#[allow(unused_imports)] // f64 float methods come from the trait in no_std builds
use num_traits::Float;

use crate::density::Density;
use crate::error::{Error, Result};
use crate::measure::WeightedEmpiricalMeasure;
use kdtree::{pow_p, KdTree};
use simplex::NetworkSimplex;

/// Default per-side atom cap for the exact solver.
pub const DEFAULT_EXACT_CAP: usize = 5_000;

/// Relative mass mismatch allowed between the two marginals.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Instances whose dense arc count stays below this use the complete
/// bipartite arc set; larger ones run delayed column generation.
const DENSE_ARC_LIMIT: usize = 2_000_000;

/// A finite list of located masses.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    coords: Vec<f64>,
    masses: Vec<f64>,
}

impl DiscreteMeasure {
    /// Atoms must carry strictly positive mass and live in the closed unit
    /// cube.
    pub fn new(dim: usize, coords: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.len() != masses.len() * dim {
            return Err(Error::Domain("coordinate and mass lengths disagree"));
        }
        if masses.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
            return Err(Error::Domain("atom masses must be strictly positive"));
        }
        if coords.iter().any(|c| !(*c >= 0.0 && *c <= 1.0)) {
            return Err(Error::Domain("atom locations must lie in the closed cube"));
        }
        Ok(DiscreteMeasure { dim, coords, masses })
    }

    pub fn from_weighted(mu: &WeightedEmpiricalMeasure) -> Result<Self> {
        let mut coords = Vec::new();
        let mut masses = Vec::new();
        for i in 0..mu.len() {
            if mu.weight(i) > 0.0 {
                coords.extend_from_slice(mu.point(i));
                masses.push(mu.weight(i));
            }
        }
        if masses.is_empty() {
            return Err(Error::DegenerateMeasure);
        }
        DiscreteMeasure::new(mu.dim(), coords, masses)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn mass(&self, i: usize) -> f64 {
        self.masses[i]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn scale(&self, alpha: f64) -> Self {
        DiscreteMeasure {
            dim: self.dim,
            coords: self.coords.clone(),
            masses: self.masses.iter().map(|m| m * alpha).collect(),
        }
    }
}

/// One shipment of the transport plan.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlanEntry {
    pub from: usize,
    pub to: usize,
    pub mass: f64,
}

/// Which algorithm produced a result.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SolverKind {
    Exact { pivots: u64 },
    Entropic { epsilon: f64, iterations: usize },
}

/// Transport cost with optional plan and a feasibility gap: the residual
/// marginal violation (relative) for the exact path, the pre-rounding
/// marginal violation for the entropic path.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TransportResult {
    pub cost: f64,
    pub plan: Option<Vec<PlanEntry>>,
    pub solver: SolverKind,
    pub gap: f64,
}

/// Options for the exact solver.
#[derive(Debug, Clone, Copy)]
pub struct ExactOptions {
    /// Per-side atom cap; instances above it are refused so callers can fall
    /// back to the entropic solver (raise it deliberately for large sweeps).
    pub size_cap: usize,
    pub keep_plan: bool,
    /// Instances with at most this many source×target pairs materialize the
    /// complete arc set; larger ones run delayed column generation. Both
    /// paths are exact.
    pub dense_arc_limit: usize,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions {
            size_cap: DEFAULT_EXACT_CAP,
            keep_plan: true,
            dense_arc_limit: DENSE_ARC_LIMIT,
        }
    }
}

fn check_balanced(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<(f64, f64)> {
    if mu.dim() != nu.dim() {
        return Err(Error::Domain("measures must share a dimension"));
    }
    let (a, b) = (mu.total_mass(), nu.total_mass());
    if (a - b).abs() > MASS_TOLERANCE * a.abs().max(b.abs()) {
        return Err(Error::Unbalanced { left: a, right: b });
    }
    Ok((a, b))
}

/// Exact p-Wasserstein cost between equal-mass discrete measures via the
/// network simplex; deterministic given its inputs.
pub fn wasserstein_exact(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
) -> Result<TransportResult> {
    wasserstein_exact_with(mu, nu, p, &ExactOptions::default())
}

pub fn wasserstein_exact_with(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    opts: &ExactOptions,
) -> Result<TransportResult> {
    if !(p >= 1.0) {
        return Err(Error::Domain("transport order p must be at least 1"));
    }
    let (mass_a, mass_b) = check_balanced(mu, nu)?;
    if mu.len() > opts.size_cap || nu.len() > opts.size_cap {
        return Err(Error::SizeCap {
            atoms: mu.len().max(nu.len()),
            cap: opts.size_cap,
        });
    }
    // Rescale demands so both sides agree to the last bit; the relative
    // perturbation is below MASS_TOLERANCE and lands inside the plan
    // tolerance.
    let fix = mass_a / mass_b;
    let solved = solve_geometric(
        mu.dim(),
        mu.coords(),
        mu.masses(),
        nu.coords(),
        &nu.masses().iter().map(|m| m * fix).collect::<Vec<f64>>(),
        p,
        opts.keep_plan,
        opts.dense_arc_limit,
    )?;
    Ok(solved)
}

/// Shared geometric driver: dense arcs for small instances; for large
/// ones a multiscale scheme — aggregate targets by Morton prefix, solve the
/// coarse instance exactly, refine its optimal plan into a warm spanning
/// forest, and finish with delayed column generation at the fine level.
/// Exact in all cases: the final level prices the complete bipartite arc
/// set before declaring optimality.
#[allow(clippy::too_many_arguments)]
fn solve_geometric(
    dim: usize,
    src_coords: &[f64],
    src_masses: &[f64],
    dst_coords: &[f64],
    dst_masses: &[f64],
    p: f64,
    keep_plan: bool,
    dense_arc_limit: usize,
) -> Result<TransportResult> {
    let ns = src_masses.len();
    let nt = dst_masses.len();

    let (support, pivots) = if ns.saturating_mul(nt) <= dense_arc_limit {
        solve_dense(dim, src_coords, src_masses, dst_coords, dst_masses, p)?
    } else {
        solve_sparse_multiscale(dim, src_coords, src_masses, dst_coords, dst_masses, p)?
    };

    let cost: f64 = {
        // tally from the support and the distances to keep the reported
        // cost independent of solver-internal accumulation order
        let mut acc = 0.0;
        for &(i, j, f) in &support {
            let a = &src_coords[i as usize * dim..(i as usize + 1) * dim];
            let b = &dst_coords[j as usize * dim..(j as usize + 1) * dim];
            let mut s = 0.0;
            for k in 0..dim {
                let t = a[k] - b[k];
                s += t * t;
            }
            acc += f * pow_p(s, p);
        }
        acc
    };

    // report the residual marginal violation as the gap
    let mut row = alloc::vec![0.0; ns];
    let mut col = alloc::vec![0.0; nt];
    for &(i, j, f) in &support {
        row[i as usize] += f;
        col[j as usize] += f;
    }
    let mut gap = 0.0f64;
    for i in 0..ns {
        gap = gap.max((row[i] - src_masses[i]).abs() / src_masses[i].max(1e-300));
    }
    for j in 0..nt {
        gap = gap.max((col[j] - dst_masses[j]).abs() / dst_masses[j].max(1e-300));
    }

    let plan = keep_plan.then(|| {
        let mut entries: Vec<PlanEntry> = support
            .iter()
            .map(|&(i, j, f)| PlanEntry {
                from: i as usize,
                to: j as usize,
                mass: f,
            })
            .collect();
        entries.sort_unstable_by(|a, b| (a.from, a.to).cmp(&(b.from, b.to)));
        // parallel warm-start columns can split one shipment in two
        entries.dedup_by(|b, a| {
            if a.from == b.from && a.to == b.to {
                a.mass += b.mass;
                true
            } else {
                false
            }
        });
        entries
    });

    Ok(TransportResult {
        cost,
        plan,
        solver: SolverKind::Exact { pivots },
        gap,
    })
}

fn solve_dense(
    dim: usize,
    src_coords: &[f64],
    src_masses: &[f64],
    dst_coords: &[f64],
    dst_masses: &[f64],
    p: f64,
) -> Result<(Vec<(u32, u32, f64)>, u64)> {
    let ns = src_masses.len();
    let nt = dst_masses.len();
    let mut supplies = Vec::with_capacity(ns + nt);
    supplies.extend_from_slice(src_masses);
    supplies.extend(dst_masses.iter().map(|m| -m));
    let mut nx = NetworkSimplex::new(supplies);
    let dist_p = |i: usize, j: usize| -> f64 {
        let a = &src_coords[i * dim..(i + 1) * dim];
        let b = &dst_coords[j * dim..(j + 1) * dim];
        let mut s = 0.0;
        for k in 0..dim {
            let t = a[k] - b[k];
            s += t * t;
        }
        pow_p(s, p)
    };
    for i in 0..ns {
        for j in 0..nt {
            nx.add_arc(i, ns + j, dist_p(i, j));
        }
    }
    // greedy start: every target hangs on its nearest source
    let mut warm = Vec::with_capacity(nt);
    for j in 0..nt {
        let mut best = (0usize, f64::INFINITY);
        for i in 0..ns {
            let c = dist_p(i, j);
            if c < best.1 {
                best = (i, c);
            }
        }
        warm.push(best.0 * nt + j);
    }
    nx.warm_start_forest(&warm);
    let stats = nx.optimize()?;
    let total: f64 = src_masses.iter().sum();
    if stats.artificial_mass > MASS_TOLERANCE * total.max(1.0) {
        return Err(Error::NotConverged { iterations: 0 });
    }
    let support = nx
        .support()
        .into_iter()
        .map(|(s, t, f)| (s as u32, (t - ns) as u32, f))
        .collect();
    Ok((support, stats.pivots))
}

/// Targets per level below which the recursion bottoms out.
const COARSE_BASE_TARGETS: usize = 4096;

fn solve_sparse_multiscale(
    dim: usize,
    src_coords: &[f64],
    src_masses: &[f64],
    dst_coords: &[f64],
    dst_masses: &[f64],
    p: f64,
) -> Result<(Vec<(u32, u32, f64)>, u64)> {
    let nt = dst_masses.len();
    let mut coarse_pivots = 0;
    let warm_pairs: Vec<(u32, u32)> = if nt <= COARSE_BASE_TARGETS {
        Vec::new() // base level starts from the nearest-source forest
    } else {
        match aggregate_targets(dim, dst_coords, dst_masses) {
            Some((agg_coords, agg_masses, bucket_of)) => {
                let (coarse_support, piv) = solve_sparse_multiscale(
                    dim,
                    src_coords,
                    src_masses,
                    &agg_coords,
                    &agg_masses,
                    p,
                )?;
                coarse_pivots = piv;
                refine_plan(
                    dim,
                    src_coords,
                    dst_coords,
                    &coarse_support,
                    &bucket_of,
                    agg_masses.len(),
                    dst_masses,
                )
            }
            None => Vec::new(),
        }
    };
    let (support, pivots) = solve_sparse_level(
        dim,
        src_coords,
        src_masses,
        dst_coords,
        dst_masses,
        p,
        &warm_pairs,
    )?;
    #[cfg(test)]
    std::eprintln!(
        "  [level nt={nt}] pivots={} (coarse so far {coarse_pivots})",
        pivots
    );
    Ok((support, pivots + coarse_pivots))
}

/// Coarsen the targets: drop Morton bit levels until at least half of them
/// merge, then pool each bucket into its mass-weighted centroid. `None`
/// when no resolution merges anything (coincident-point degeneracies).
fn aggregate_targets(
    dim: usize,
    dst_coords: &[f64],
    dst_masses: &[f64],
) -> Option<(Vec<f64>, Vec<f64>, Vec<u32>)> {
    let nt = dst_masses.len();
    let mut keyed: Vec<(u64, u32)> = (0..nt)
        .map(|j| {
            (
                morton_key(&dst_coords[j * dim..(j + 1) * dim], dim),
                j as u32,
            )
        })
        .collect();
    keyed.sort_unstable();
    // smallest level drop that merges at least half the targets
    let bits = (63 / dim).min(21);
    let mut shift = 0usize;
    for level in 1..bits {
        let s = level * dim;
        let mut distinct = 1usize;
        for w in keyed.windows(2) {
            if w[0].0 >> s != w[1].0 >> s {
                distinct += 1;
            }
        }
        if distinct <= nt / 2 {
            shift = s;
            break;
        }
    }
    if shift == 0 {
        return None;
    }
    for e in keyed.iter_mut() {
        e.0 >>= shift;
    }
    keyed.sort_unstable();
    let mut bucket_of = alloc::vec![0u32; nt];
    let mut agg_coords: Vec<f64> = Vec::new();
    let mut agg_masses: Vec<f64> = Vec::new();
    let mut cursor = 0usize;
    while cursor < nt {
        let key = keyed[cursor].0;
        let bucket = agg_masses.len() as u32;
        let mut mass = 0.0;
        let mut centroid = alloc::vec![0.0; dim];
        while cursor < nt && keyed[cursor].0 == key {
            let j = keyed[cursor].1 as usize;
            bucket_of[j] = bucket;
            let w = dst_masses[j];
            mass += w;
            for k in 0..dim {
                centroid[k] += w * dst_coords[j * dim + k];
            }
            cursor += 1;
        }
        for c in &mut centroid {
            *c /= mass;
        }
        // cap coordinates back into the closed cube against fp drift
        for c in &mut centroid {
            *c = c.clamp(0.0, 1.0);
        }
        agg_coords.extend_from_slice(&centroid);
        agg_masses.push(mass);
    }
    if agg_masses.len() >= nt {
        return None;
    }
    Some((agg_coords, agg_masses, bucket_of))
}

/// Refine a coarse optimal plan into fine warm-forest pairs: inside each
/// bucket run a northwest staircase between the bucket's plan sources and
/// its member targets. Targets are always new nodes, so the concatenated
/// pair list builds a forest.
fn refine_plan(
    dim: usize,
    src_coords: &[f64],
    dst_coords: &[f64],
    coarse_support: &[(u32, u32, f64)],
    bucket_of: &[u32],
    n_buckets: usize,
    dst_masses: &[f64],
) -> Vec<(u32, u32)> {
    let mut sources: Vec<Vec<(u32, f64)>> = alloc::vec![Vec::new(); n_buckets];
    for &(i, b, f) in coarse_support {
        sources[b as usize].push((i, f));
    }
    let mut members: Vec<Vec<u32>> = alloc::vec![Vec::new(); n_buckets];
    for (j, &b) in bucket_of.iter().enumerate() {
        members[b as usize].push(j as u32);
    }
    let mut pairs = Vec::with_capacity(dst_masses.len() * 2);
    for b in 0..n_buckets {
        let srcs = &mut sources[b];
        let mems = &mut members[b];
        if mems.is_empty() {
            continue;
        }
        debug_assert!(!srcs.is_empty(), "bucket without supply");
        // spatial order on both sides keeps the staircase locally tight
        srcs.sort_unstable_by_key(|&(i, _)| {
            (
                morton_key(&src_coords[i as usize * dim..(i as usize + 1) * dim], dim),
                i,
            )
        });
        mems.sort_unstable_by_key(|&j| {
            (
                morton_key(&dst_coords[j as usize * dim..(j as usize + 1) * dim], dim),
                j,
            )
        });
        let (mut si, mut mj) = (0usize, 0usize);
        let mut rs = srcs[0].1;
        let mut rd = dst_masses[mems[0] as usize];
        pairs.push((srcs[0].0, mems[0]));
        while !(si == srcs.len() - 1 && mj == mems.len() - 1) {
            let m = rs.min(rd);
            rs -= m;
            rd -= m;
            if (rs <= rd && si < srcs.len() - 1) || mj == mems.len() - 1 {
                si += 1;
                rs = srcs[si].1;
            } else {
                mj += 1;
                rd = dst_masses[mems[mj] as usize];
            }
            pairs.push((srcs[si].0, mems[mj]));
        }
    }
    pairs
}

/// One level of the sparse solve: candidate arcs, warm forest, delayed
/// column generation to exactness.
#[allow(clippy::too_many_arguments)]
fn solve_sparse_level(
    dim: usize,
    src_coords: &[f64],
    src_masses: &[f64],
    dst_coords: &[f64],
    dst_masses: &[f64],
    p: f64,
    warm_pairs: &[(u32, u32)],
) -> Result<(Vec<(u32, u32, f64)>, u64)> {
    let ns = src_masses.len();
    let nt = dst_masses.len();
    let mut supplies = Vec::with_capacity(ns + nt);
    supplies.extend_from_slice(src_masses);
    supplies.extend(dst_masses.iter().map(|m| -m));
    let mut nx = NetworkSimplex::new(supplies);

    let dist_p = |i: usize, j: usize| -> f64 {
        let a = &src_coords[i * dim..(i + 1) * dim];
        let b = &dst_coords[j * dim..(j + 1) * dim];
        let mut s = 0.0;
        for k in 0..dim {
            let t = a[k] - b[k];
            s += t * t;
        }
        pow_p(s, p)
    };

    let mut target_tree = KdTree::build(dim, dst_coords);
    let total: f64 = src_masses.iter().sum();
    // per-source candidates, kept sorted by target with their arc ids
    let mut seen: Vec<Vec<(u32, u32)>> = alloc::vec![Vec::new(); ns];
    let mut buf: Vec<u32> = Vec::new();
    for i in 0..ns {
        let need = 6.0 * src_masses[i].max(1e-3 * total / ns as f64);
        target_tree.capture_mass(
            &src_coords[i * dim..(i + 1) * dim],
            dst_masses,
            need,
            24,
            &mut buf,
        );
        for &j in buf.iter() {
            let arc = nx.add_arc(i, ns + j as usize, dist_p(i, j as usize));
            seen[i].push((j, arc as u32));
        }
        seen[i].sort_unstable();
    }
    fn get_or_add(
        nx: &mut NetworkSimplex,
        seen: &mut [Vec<(u32, u32)>],
        ns: usize,
        i: usize,
        j: usize,
        cost: f64,
    ) -> usize {
        match seen[i].binary_search_by_key(&(j as u32), |e| e.0) {
            Ok(pos) => seen[i][pos].1 as usize,
            Err(pos) => {
                let arc = nx.add_arc(i, ns + j, cost);
                seen[i].insert(pos, (j as u32, arc as u32));
                arc
            }
        }
    }
    let mut warm = Vec::with_capacity(nt + warm_pairs.len());
    if warm_pairs.is_empty() {
        // nearest-source forest
        let source_tree = KdTree::build(dim, src_coords);
        for j in 0..nt {
            let i = source_tree.nearest(&dst_coords[j * dim..(j + 1) * dim]) as usize;
            warm.push(get_or_add(&mut nx, &mut seen, ns, i, j, dist_p(i, j)));
        }
    } else {
        for &(i, j) in warm_pairs {
            let (i, j) = (i as usize, j as usize);
            warm.push(get_or_add(&mut nx, &mut seen, ns, i, j, dist_p(i, j)));
        }
    }
    nx.warm_start_forest(&warm);
    let mut stats = nx.optimize()?;

    // Delayed column generation: price every missing arc against the
    // potentials; optimality is certified when no arc is violated.
    let tol = 1e-12 * (dim as f64).sqrt().powf(p).max(1.0);
    let mut pot_t: Vec<f64> = alloc::vec![0.0; nt];
    let mut found: Vec<(u32, f64)> = Vec::new();
    loop {
        for j in 0..nt {
            pot_t[j] = nx.potential(ns + j);
        }
        target_tree.refresh_max(&pot_t);
        let mut new_arcs: Vec<(u32, u32, f64)> = Vec::new();
        for i in 0..ns {
            let threshold = -nx.potential(i) - tol;
            target_tree.price_below(
                &src_coords[i * dim..(i + 1) * dim],
                &pot_t,
                p,
                threshold,
                8,
                &mut found,
            );
            for &(j, _) in &found {
                if let Err(pos) = seen[i].binary_search_by_key(&j, |e| e.0) {
                    new_arcs.push((i as u32, (ns + j as usize) as u32, dist_p(i, j as usize)));
                    seen[i].insert(pos, (j, u32::MAX));
                }
            }
        }
        if new_arcs.is_empty() {
            break;
        }
        nx.add_arcs(&new_arcs);
        stats = nx.optimize()?;
    }

    if stats.artificial_mass > MASS_TOLERANCE * total.max(1.0) {
        return Err(Error::NotConverged { iterations: 0 });
    }
    let support = nx
        .support()
        .into_iter()
        .map(|(s, t, f)| (s as u32, (t - ns) as u32, f))
        .collect();
    Ok((support, stats.pivots))
}

/// Morton (bit-interleaved) key of a point in the unit cube.
fn morton_key(point: &[f64], dim: usize) -> u64 {
    let bits = (63 / dim).min(21);
    let scale = (1u64 << bits) as f64;
    let mut key = 0u64;
    for b in (0..bits).rev() {
        for &c in point.iter().take(dim) {
            let q = ((c * scale) as u64).min((1 << bits) - 1);
            key = (key << 1) | (q >> b & 1);
        }
    }
    key
}

/// Report of the sampling-error cost between a normalized weighted measure
/// and a density discretized on `m` cells per axis.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IsCostReport {
    pub result: TransportResult,
    pub grid_m: usize,
    /// Diameter of a grid cell, `sqrt(d)/m`.
    pub grid_diam: f64,
    /// Whether `m ≥ 2 n^(1/d)`, keeping the grid bias second order.
    pub bias_rule_ok: bool,
}

/// Solver selection for [`is_cost`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverChoice {
    Exact { size_cap: usize },
    Entropic { epsilon: f64, max_iter: usize },
}

/// Cost between a normalized weighted empirical measure and the grid
/// discretization of `g`.
pub fn is_cost(
    gn_hat: &WeightedEmpiricalMeasure,
    g: &Density,
    p: f64,
    m: usize,
    solver: SolverChoice,
) -> Result<IsCostReport> {
    if (gn_hat.total_mass() - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::Domain("the weighted measure must be normalized first"));
    }
    let mu = DiscreteMeasure::from_weighted(gn_hat)?;
    let nu = discretize_density(g, m, DiscretizeRule::Midpoint)?;
    let result = match solver {
        SolverChoice::Exact { size_cap } => wasserstein_exact_with(
            &mu,
            &nu,
            p,
            &ExactOptions {
                size_cap,
                keep_plan: false,
                ..ExactOptions::default()
            },
        )?,
        SolverChoice::Entropic { epsilon, max_iter } => {
            wasserstein_entropic(&mu, &nu, p, epsilon, max_iter)?
        }
    };
    let d = g.dim() as f64;
    let n = gn_hat.len() as f64;
    Ok(IsCostReport {
        result,
        grid_m: m,
        grid_diam: d.sqrt() / m as f64,
        bias_rule_ok: (m as f64) >= 2.0 * n.powf(1.0 / d),
    })
}

/// Smallest grid resolution keeping the cell diameter below half the
/// expected matching length `n^(-1/d)`.
pub fn default_grid_m(n: usize, d: usize) -> usize {
    let df = d as f64;
    let m = 2.0 * df.sqrt() * (n as f64).powf(1.0 / df);
    (m.ceil() as usize).max(1)
}

/// Flat upper bound on the in-box cost between two densities with equal
/// mass on the box: `diam(Q)^p / inf_Q(h1)^(p-1) · ∫_Q |h2-h1|^p`.
pub fn flat_bound(
    h1: &Density,
    h2: &Density,
    region: &crate::geom::AxisBox,
    p: f64,
    quad: &crate::quad::Quadrature,
) -> Result<f64> {
    if h1.dim() != h2.dim() || h1.dim() != region.dim() {
        return Err(Error::Domain("dimension mismatch"));
    }
    if !(h1.bounds().inf > 0.0) {
        return Err(Error::Domain("h1 must be bounded away from zero"));
    }
    let m1 = quad.integrate_box(region, |x| h1.eval_unchecked(x));
    let m2 = quad.integrate_box(region, |x| h2.eval_unchecked(x));
    if (m1 - m2).abs() > 1e-9 * m1.abs().max(m2.abs()).max(1e-300) {
        return Err(Error::Domain("densities carry different mass on the box"));
    }
    // The global lower certificate understates inf over the box, which only
    // loosens the bound; that keeps the upper-bound semantics sound.
    let inf = h1.bounds().inf;
    let integral = quad.integrate_box(region, |x| {
        (h2.eval_unchecked(x) - h1.eval_unchecked(x)).abs().powf(p)
    });
    Ok(region.diameter().powf(p) / inf.powf(p - 1.0) * integral)
}
