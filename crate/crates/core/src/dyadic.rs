//! Dyadic partitions of the cube, per-cube occupancy statistics and the
//! multiscale transport decomposition diagnostic.
//!
//! Level `k` tiles `(0,1)^d` into `2^(dk)` cubes of side `2^(-k)`. For a
//! weighted sample the three per-cube ratios compare its mass against the
//! target mass, the raw atom count and the proposal mass; the piecewise
//! measure `λ^k` freezes the weighted mass at scale `k` while keeping the
//! target's shape inside each cube.

use alloc::vec::Vec;
#[allow(unused_imports)] // f64 float methods come from the trait in no_std builds
use num_traits::Float;

use crate::density::Density;
use crate::error::{Error, Result};
use crate::geom::AxisBox;
use crate::measure::WeightedEmpiricalMeasure;
use crate::quad::composite_gauss_1d;
use crate::transport::{
    discretize_density_on_box, wasserstein_exact_with, DiscreteMeasure, DiscretizeRule,
    ExactOptions,
};

/// Which logarithm the `(log n)^alpha` factor in the maximal-scale formula
/// uses; the asymptotics are base independent, so this is a reporting
/// convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogConvention {
    #[default]
    Natural,
    Base2,
}

/// A dyadic level: `2^(dk)` cubes of side `2^(-k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicGrid {
    pub level: u32,
}

impl DyadicGrid {
    pub fn new(level: u32) -> Self {
        DyadicGrid { level }
    }

    pub fn side(&self) -> f64 {
        0.5f64.powi(self.level as i32)
    }

    pub fn cubes(&self, dim: usize) -> usize {
        1usize << (dim as u32 * self.level)
    }

    pub fn diameter(&self, dim: usize) -> f64 {
        (dim as f64).sqrt() * self.side()
    }

    /// Cube index of a point, row major over axes. Atoms sitting exactly on
    /// an interior face belong to the lower-index cube.
    pub fn index_of(&self, x: &[f64]) -> usize {
        let m = 1usize << self.level;
        let mut idx = 0usize;
        for &xi in x {
            let scaled = xi * m as f64;
            let mut c = scaled as usize;
            if c > 0 && scaled == c as f64 {
                c -= 1;
            }
            idx = idx * m + c.min(m - 1);
        }
        idx
    }

    /// The box of cube `idx`.
    pub fn cube_box(&self, dim: usize, idx: usize) -> AxisBox {
        let m = 1usize << self.level;
        let side = self.side();
        let mut lo = alloc::vec![0.0; dim];
        let mut hi = alloc::vec![0.0; dim];
        let mut rem = idx;
        for k in (0..dim).rev() {
            let c = rem % m;
            rem /= m;
            lo[k] = c as f64 * side;
            hi[k] = lo[k] + side;
        }
        AxisBox::new(lo, hi).expect("dyadic cube is nonempty")
    }
}

/// Per-cube occupancy statistics.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CubeStats {
    pub cube: usize,
    /// weighted mass over target mass
    pub kappa: f64,
    /// weighted mass over atom count (zero for empty cubes)
    pub gamma: f64,
    /// weighted mass over proposal mass
    pub delta: f64,
    /// atom count
    pub count: usize,
    /// weighted mass in the cube
    pub mass: f64,
    /// target mass in the cube
    pub g_mass: f64,
    /// proposal mass in the cube
    pub f_mass: f64,
}

/// Maximal-scale report: the raw (possibly negative) value and the clamped
/// level actually used at finite sample sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MaxScale {
    pub raw: i64,
    pub level: u32,
    pub side: f64,
    pub clamped: bool,
}

/// `K = ⌊log2(n)/d⌋ - ⌊log2((log n)^alpha)⌋`, clamped at zero for sample
/// sizes where the asymptotic formula goes negative.
pub fn max_scale(n: usize, alpha: f64, d: usize, convention: LogConvention) -> MaxScale {
    assert!(n >= 2 && d >= 1);
    let first = (n as f64).log2() / d as f64;
    let logn = match convention {
        LogConvention::Natural => (n as f64).ln(),
        LogConvention::Base2 => (n as f64).log2(),
    };
    let omega = (logn.powf(alpha)).log2().floor();
    let raw = first.floor() as i64 - omega as i64;
    let level = raw.max(0) as u32;
    MaxScale {
        raw,
        level,
        side: 0.5f64.powi(level as i32),
        clamped: raw < 0,
    }
}

/// Per-cube masses of the weighted sample at a level.
fn cube_masses(
    mu: &WeightedEmpiricalMeasure,
    grid: DyadicGrid,
) -> (Vec<f64>, Vec<usize>) {
    let cubes = grid.cubes(mu.dim());
    let mut mass = alloc::vec![0.0; cubes];
    let mut count = alloc::vec![0usize; cubes];
    for i in 0..mu.len() {
        let idx = grid.index_of(mu.point(i));
        mass[idx] += mu.weight(i);
        count[idx] += 1;
    }
    (mass, count)
}

/// Mass of a density on every cube of a level: product densities factor
/// into per-axis integrals, everything else integrates box by box.
fn density_cube_masses(g: &Density, grid: DyadicGrid) -> Vec<f64> {
    let d = g.dim();
    let m = 1usize << grid.level;
    if g.is_product() {
        let mut axis: Vec<Vec<f64>> = Vec::with_capacity(d);
        for k in 0..d {
            let mut v = Vec::with_capacity(m);
            for c in 0..m {
                let a = c as f64 * grid.side();
                v.push(g.axis_mass(k, a, a + grid.side()));
            }
            axis.push(v);
        }
        let cubes = grid.cubes(d);
        let mut out = alloc::vec![0.0; cubes];
        for (idx, slot) in out.iter_mut().enumerate() {
            let mut rem = idx;
            let mut mass = 1.0;
            for k in (0..d).rev() {
                mass *= axis[k][rem % m];
                rem /= m;
            }
            *slot = mass;
        }
        out
    } else {
        (0..grid.cubes(d))
            .map(|idx| g.box_mass(&grid.cube_box(d, idx)))
            .collect()
    }
}

/// One record per cube of level `k`.
pub fn cube_stats(
    mu: &WeightedEmpiricalMeasure,
    f: &Density,
    g: &Density,
    k: u32,
) -> Result<Vec<CubeStats>> {
    if mu.dim() != f.dim() || f.dim() != g.dim() {
        return Err(Error::Domain("dimension mismatch"));
    }
    let grid = DyadicGrid::new(k);
    let (mass, count) = cube_masses(mu, grid);
    let g_masses = density_cube_masses(g, grid);
    let f_masses = density_cube_masses(f, grid);
    Ok((0..grid.cubes(mu.dim()))
        .map(|idx| {
            let m = mass[idx];
            CubeStats {
                cube: idx,
                kappa: if g_masses[idx] > 0.0 { m / g_masses[idx] } else { 0.0 },
                gamma: if count[idx] > 0 { m / count[idx] as f64 } else { 0.0 },
                delta: if f_masses[idx] > 0.0 { m / f_masses[idx] } else { 0.0 },
                count: count[idx],
                mass: m,
                g_mass: g_masses[idx],
                f_mass: f_masses[idx],
            }
        })
        .collect())
}

/// The multiscale measure `λ^k`: inside each cube of level `k` the target
/// shape `g`, scaled so the cube carries the weighted sample mass.
#[derive(Debug, Clone)]
pub struct MultiscaleMeasure<'a> {
    pub level: u32,
    pub kappas: Vec<f64>,
    g: &'a Density,
}

impl<'a> MultiscaleMeasure<'a> {
    pub fn build(
        mu: &WeightedEmpiricalMeasure,
        g: &'a Density,
        k: u32,
    ) -> Result<MultiscaleMeasure<'a>> {
        if mu.dim() != g.dim() {
            return Err(Error::Domain("dimension mismatch"));
        }
        let grid = DyadicGrid::new(k);
        let (mass, _) = cube_masses(mu, grid);
        let g_masses = density_cube_masses(g, grid);
        let kappas = mass
            .iter()
            .zip(&g_masses)
            .map(|(&m, &gm)| if gm > 0.0 { m / gm } else { 0.0 })
            .collect();
        Ok(MultiscaleMeasure {
            level: k,
            kappas,
            g,
        })
    }

    /// Pointwise value `κ_(Q(x)) g(x)`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let grid = DyadicGrid::new(self.level);
        let v = self.g.eval(x)?;
        Ok(self.kappas[grid.index_of(x)] * v)
    }

    /// Total mass; equals the weighted sample mass by construction.
    pub fn mass(&self) -> f64 {
        let grid = DyadicGrid::new(self.level);
        let g_masses = density_cube_masses(self.g, grid);
        self.kappas.iter().zip(&g_masses).map(|(k, gm)| k * gm).sum()
    }

    /// Discretization on an aligned grid with `cells` cells per axis
    /// (`cells` must be a multiple of `2^level` so cells nest in cubes).
    pub fn discretize(&self, cells: usize) -> Result<DiscreteMeasure> {
        let d = self.g.dim();
        let m = 1usize << self.level;
        if cells % m != 0 {
            return Err(Error::Domain("cell grid must refine the dyadic level"));
        }
        let base = discretize_density_on_box(
            self.g,
            &AxisBox::unit_cube(d),
            cells,
            DiscretizeRule::Midpoint,
            1.0,
        )?;
        let grid = DyadicGrid::new(self.level);
        let mut masses = Vec::with_capacity(base.len());
        let mut coords = Vec::with_capacity(base.len() * d);
        for i in 0..base.len() {
            let kappa = self.kappas[grid.index_of(base.point(i))];
            let w = base.mass(i) * kappa;
            if w > 0.0 {
                masses.push(w);
                coords.extend_from_slice(base.point(i));
            }
        }
        DiscreteMeasure::new(d, coords, masses)
    }
}

/// Options for the multiscale decomposition diagnostic.
#[derive(Debug, Clone, Copy)]
pub struct MsOptions {
    pub alpha: f64,
    /// Force a scale instead of the asymptotic formula (flagged in the
    /// report); lets the diagnostic say something at desk-scale n.
    pub forced_level: Option<u32>,
    pub convention: LogConvention,
    /// Cells per axis for the global transport estimates.
    pub grid_cells: usize,
    /// Cells per axis inside each maximal-scale cube.
    pub local_cells: usize,
    /// Elementary-inequality slack (1 reproduces the reference constants).
    pub epsilon: f64,
    pub size_cap: usize,
}

impl Default for MsOptions {
    fn default() -> Self {
        MsOptions {
            alpha: 3.0,
            forced_level: None,
            convention: LogConvention::Natural,
            grid_cells: 16,
            local_cells: 8,
            epsilon: 1.0,
            size_cap: 200_000,
        }
    }
}

/// Multiscale decomposition report.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MsReport {
    pub n: usize,
    pub p: f64,
    pub level: u32,
    pub level_forced: bool,
    pub asymptotic_regime: bool,
    /// `W_p^p(μ_n, Z_n g)` on the global grid.
    pub global_cost: f64,
    /// Per-cube `W_(p,Q)^p(μ_n, κ_Q g)` at the maximal scale.
    pub main_terms: Vec<f64>,
    /// `W_p^p(λ^k, λ^(k+1))` for `k < K`.
    pub cross_terms: Vec<f64>,
    /// Right-hand side of the decomposition inequality.
    pub bound: f64,
    /// `bound - global_cost`; nonnegative up to solver tolerance.
    pub margin: f64,
    pub mass: f64,
}

/// Decomposition inequality check:
/// `W_p^p(μ, Z g) ≤ (1+ε) Σ_Q W_(p,Q)^p(μ, κ_Q g) + c_p K^p ε^(1-p) Σ_k W_p^p(λ^k, λ^(k+1))`
/// with `c_p = 2^(p-1)`.
pub fn multiscale_decomposition_report(
    mu: &WeightedEmpiricalMeasure,
    f: &Density,
    g: &Density,
    p: f64,
    opts: &MsOptions,
) -> Result<MsReport> {
    if mu.dim() != f.dim() || f.dim() != g.dim() {
        return Err(Error::Domain("dimension mismatch"));
    }
    let n = mu.len();
    let d = mu.dim();
    let auto = max_scale(n, opts.alpha, d, opts.convention);
    let level = opts.forced_level.unwrap_or(auto.level);
    let z_n = mu.total_mass();

    let exact_opts = ExactOptions {
        size_cap: opts.size_cap,
        keep_plan: false,
        ..ExactOptions::default()
    };

    // global cost against Z_n g
    let mut cells = opts.grid_cells.max(1 << level);
    let align = 1usize << level;
    cells = cells.div_ceil(align) * align;
    let mu_atoms = DiscreteMeasure::from_weighted(mu)?;
    let global_target = discretize_density_on_box(
        g,
        &AxisBox::unit_cube(d),
        cells,
        DiscretizeRule::Midpoint,
        z_n,
    )?;
    let global_cost = wasserstein_exact_with(&mu_atoms, &global_target, p, &exact_opts)?.cost;

    // per-cube main terms at the maximal scale
    let grid = DyadicGrid::new(level);
    let stats = cube_stats(mu, f, g, level)?;
    let mut main_terms = alloc::vec![0.0; stats.len()];
    for st in &stats {
        if st.mass <= 0.0 {
            continue;
        }
        let bx = grid.cube_box(d, st.cube);
        let local = mu.restrict(&bx);
        let local_atoms = DiscreteMeasure::from_weighted(&local)?;
        let target =
            discretize_density_on_box(g, &bx, opts.local_cells, DiscretizeRule::Midpoint, st.mass)?;
        main_terms[st.cube] = wasserstein_exact_with(&local_atoms, &target, p, &exact_opts)?.cost;
    }

    // cross-scale terms between λ^k and λ^(k+1); both live on the same
    // aligned grid, so only the mass differences move
    let mut cross_terms = Vec::new();
    for k in 0..level {
        let fine = 1usize << (k + 1);
        let cells_k = cells.max(fine * 2).div_ceil(fine) * fine;
        let lam_k = MultiscaleMeasure::build(mu, g, k)?.discretize(cells_k)?;
        let lam_k1 = MultiscaleMeasure::build(mu, g, k + 1)?.discretize(cells_k)?;
        cross_terms.push(same_support_cost(&lam_k, &lam_k1, p, &exact_opts)?);
    }

    let c_p = 2.0f64.powf(p - 1.0);
    let eps = opts.epsilon;
    let main_sum: f64 = main_terms.iter().sum();
    let cross_sum: f64 = cross_terms.iter().sum();
    let bound = (1.0 + eps) * main_sum
        + c_p * (level as f64).powf(p) / eps.powf(p - 1.0) * cross_sum;
    Ok(MsReport {
        n,
        p,
        level,
        level_forced: opts.forced_level.is_some(),
        asymptotic_regime: !auto.clamped,
        global_cost,
        main_terms,
        cross_terms,
        bound,
        margin: bound - global_cost,
        mass: z_n,
    })
}

/// Exact cost between measures sharing their support: the common part
/// cancels, only excess transports to deficit.
fn same_support_cost(
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
    p: f64,
    opts: &ExactOptions,
) -> Result<f64> {
    debug_assert_eq!(a.len(), b.len());
    let d = a.dim();
    let mut exc_coords = Vec::new();
    let mut exc_mass = Vec::new();
    let mut def_coords = Vec::new();
    let mut def_mass = Vec::new();
    for i in 0..a.len() {
        let diff = a.mass(i) - b.mass(i);
        if diff > 0.0 {
            exc_coords.extend_from_slice(a.point(i));
            exc_mass.push(diff);
        } else if diff < 0.0 {
            def_coords.extend_from_slice(a.point(i));
            def_mass.push(-diff);
        }
    }
    if exc_mass.is_empty() || def_mass.is_empty() {
        return Ok(0.0);
    }
    // tiny imbalance from float cancellation lands on the larger side
    let se: f64 = exc_mass.iter().sum();
    let sd: f64 = def_mass.iter().sum();
    let fix = se / sd;
    for m in &mut def_mass {
        *m *= fix;
    }
    let mu = DiscreteMeasure::new(d, exc_coords, exc_mass)?;
    let nu = DiscreteMeasure::new(d, def_coords, def_mass)?;
    Ok(wasserstein_exact_with(&mu, &nu, p, opts)?.cost)
}

/// Composite Gauss mass of `g` on the 1-d interval; used by tests.
pub fn interval_mass(g: &Density, a: f64, b: f64) -> f64 {
    debug_assert_eq!(g.dim(), 1);
    composite_gauss_1d(a, b, 8, 1.0 / 64.0, |x| {
        g.eval(&[x]).unwrap_or(0.0)
    })
}
