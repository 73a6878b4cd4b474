//! Strictly positive probability densities on the open unit cube.
//!
//! Every density here is bounded away from zero and infinity with a bounded
//! gradient, so importance ratios between any two of them are bounded. The
//! built-in families normalize exactly (each per-axis factor integrates to
//! one), sample by per-coordinate inverse CDF, and stay closed under
//! tempering up to a quadrature normalization constant.

use alloc::boxed::Box;
use alloc::string::ToString;
use alloc::vec::Vec;
#[allow(unused_imports)] // f64 float methods come from the trait in no_std builds
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geom::AxisBox;
use crate::quad::{composite_gauss_1d, Quadrature};
use crate::rng::RngStream;

const TAU: f64 = 2.0 * core::f64::consts::PI;

/// Inverse-CDF tolerance; Newton with a bisection safeguard converges to
/// this on every platform, which keeps sampled streams bit-identical.
const INV_CDF_TOL: f64 = 1e-12;
const INV_CDF_MAX_ITER: usize = 60;

/// Rejection sampling aborts below this acceptance rate: the density is too
/// peaked relative to its uniform envelope to be in the intended regime.
const ACCEPTANCE_FLOOR: f64 = 1e-3;

/// Hard bounds certificate for a density: `inf ≤ g ≤ sup` on the cube and
/// `|∇g| ≤ grad_sup`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub inf: f64,
    pub sup: f64,
    pub grad_sup: f64,
}

/// The density families.
#[derive(Debug, Clone)]
pub enum DensityKind {
    /// Constant 1 on the cube.
    Uniform,
    /// Per-axis factors `1 + a_k cos(2π b_k x_k)` with `|a_k| ≤ 0.9` and
    /// integer `b_k ≥ 1`; each factor integrates to one.
    CosineProduct { amp: Vec<f64>, freq: Vec<u32> },
    /// Per-axis factors `1 + t_k (x_k - 1/2)` with `|t_k| ≤ 1.8`.
    LinearTiltProduct { tilt: Vec<f64> },
    /// `base(x)^theta / Z` with `Z` computed by quadrature.
    Tempered { base: Box<Density>, theta: f64 },
    /// Piecewise-constant positive values on an `m^d` grid (row major,
    /// the last axis varying fastest).
    CustomGrid { cells_per_axis: usize, values: Vec<f64> },
}

/// A probability density on `(0,1)^d` satisfying the bounded-ratio regime.
#[derive(Debug, Clone)]
pub struct Density {
    dim: usize,
    kind: DensityKind,
    bounds: Bounds,
    norm_const: f64,
}

impl Density {
    pub fn uniform(dim: usize) -> Self {
        Density {
            dim,
            kind: DensityKind::Uniform,
            bounds: Bounds {
                inf: 1.0,
                sup: 1.0,
                grad_sup: 0.0,
            },
            norm_const: 1.0,
        }
    }

    pub fn cosine_product(amp: Vec<f64>, freq: Vec<u32>) -> Result<Self> {
        if amp.is_empty() || amp.len() != freq.len() {
            return Err(Error::Config(
                "cosine-product needs matching, nonempty amplitude and frequency lists".to_string(),
            ));
        }
        if amp.iter().any(|a| a.abs() > 0.9) {
            return Err(Error::Config(
                "cosine-product amplitudes must satisfy |a| <= 0.9".to_string(),
            ));
        }
        if freq.iter().any(|&b| b < 1) {
            return Err(Error::Config(
                "cosine-product frequencies must be integers >= 1".to_string(),
            ));
        }
        let inf: f64 = amp.iter().map(|a| 1.0 - a.abs()).product();
        let sup: f64 = amp.iter().map(|a| 1.0 + a.abs()).product();
        let grad_sup = product_grad_bound(&amp, |k| TAU * amp[k].abs() * freq[k] as f64, |a| {
            1.0 + a.abs()
        });
        let dim = amp.len();
        Ok(Density {
            dim,
            kind: DensityKind::CosineProduct { amp, freq },
            bounds: Bounds { inf, sup, grad_sup },
            norm_const: 1.0,
        })
    }

    pub fn linear_tilt_product(tilt: Vec<f64>) -> Result<Self> {
        if tilt.is_empty() {
            return Err(Error::Config("tilt list must be nonempty".to_string()));
        }
        if tilt.iter().any(|t| t.abs() > 1.8) {
            return Err(Error::Config(
                "linear-tilt coefficients must satisfy |t| <= 1.8 to stay positive".to_string(),
            ));
        }
        let inf: f64 = tilt.iter().map(|t| 1.0 - 0.5 * t.abs()).product();
        let sup: f64 = tilt.iter().map(|t| 1.0 + 0.5 * t.abs()).product();
        let grad_sup = product_grad_bound(&tilt, |k| tilt[k].abs(), |t| 1.0 + 0.5 * t.abs());
        let dim = tilt.len();
        Ok(Density {
            dim,
            kind: DensityKind::LinearTiltProduct { tilt },
            bounds: Bounds { inf, sup, grad_sup },
            norm_const: 1.0,
        })
    }

    /// `base^theta / Z` with `Z` from the supplied quadrature.
    pub fn tempered(base: Density, theta: f64, quad: &Quadrature) -> Result<Self> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::Config("tempering exponent must be positive".to_string()));
        }
        let dim = base.dim;
        let norm = if base.is_product() {
            // (Π f_k)^θ factorizes, so Z is a product of axis integrals.
            let mut z = 1.0;
            for k in 0..dim {
                z *= composite_gauss_1d(0.0, 1.0, 16, base.axis_panel(k), |x| {
                    base.axis_factor(k, x).powf(theta)
                });
            }
            z / base.norm_total().powf(theta)
        } else {
            quad.integrate(dim, |x| base.eval_unchecked(x).powf(theta))
        };
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Config("tempered normalization is not finite".to_string()));
        }
        let b = base.bounds;
        let inf = b.inf.powf(theta) / norm;
        let sup = b.sup.powf(theta) / norm;
        // |∇(g^θ/Z)| = (θ/Z) g^(θ-1) |∇g|; t^(θ-1) is monotone on [inf, sup].
        let edge = if theta >= 1.0 {
            b.sup.powf(theta - 1.0)
        } else {
            b.inf.powf(theta - 1.0)
        };
        let grad_sup = theta / norm * edge * b.grad_sup;
        Ok(Density {
            dim,
            kind: DensityKind::Tempered {
                base: Box::new(base),
                theta,
            },
            bounds: Bounds { inf, sup, grad_sup },
            norm_const: norm,
        })
    }

    /// Piecewise-constant density from `m^d` positive cell values; the
    /// values are rescaled so the density integrates to one.
    pub fn custom_grid(dim: usize, cells_per_axis: usize, mut values: Vec<f64>) -> Result<Self> {
        let expect = cells_per_axis
            .checked_pow(dim as u32)
            .ok_or_else(|| Error::Config("grid too large".to_string()))?;
        if dim == 0 || cells_per_axis == 0 || values.len() != expect {
            return Err(Error::Config(alloc::format!(
                "custom grid needs m^d = {expect} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Config(
                "custom grid values must be strictly positive and finite".to_string(),
            ));
        }
        let cell_vol = (1.0 / cells_per_axis as f64).powi(dim as i32);
        let total: f64 = values.iter().sum::<f64>() * cell_vol;
        for v in &mut values {
            *v /= total;
        }
        let inf = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let sup = values.iter().cloned().fold(0.0, f64::max);
        // Discrete Lipschitz surrogate: steepest jump between adjacent cells
        // per cell width. The density is piecewise constant, so this is a
        // certificate for the grid resolution rather than a pointwise bound.
        let m = cells_per_axis;
        let mut steep = 0.0f64;
        for (i, &v) in values.iter().enumerate() {
            let mut rem = i;
            for k in (0..dim).rev() {
                let ik = rem % m;
                rem /= m;
                if ik + 1 < m {
                    let stride = m.pow((dim - 1 - k) as u32);
                    let w = values[i + stride];
                    steep = steep.max((w - v).abs() * m as f64);
                }
            }
        }
        Ok(Density {
            dim,
            kind: DensityKind::CustomGrid {
                cells_per_axis,
                values,
            },
            bounds: Bounds {
                inf,
                sup,
                grad_sup: steep,
            },
            norm_const: 1.0,
        })
    }

    /// The optimal tempered proposal for target `g` and cost order `p`:
    /// `g^(d/(p+d))` renormalized. Tempering a uniform density returns it
    /// unchanged since constants are fixed points.
    pub fn temper(&self, p: f64) -> Result<Density> {
        let theta = self.dim as f64 / (p + self.dim as f64);
        if matches!(self.kind, DensityKind::Uniform) {
            return Ok(self.clone());
        }
        Density::tempered(self.clone(), theta, &Quadrature::gauss(32))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn norm_const(&self) -> f64 {
        self.norm_const
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Domain("point dimension mismatch"));
        }
        if x.iter().any(|&xi| !(xi > 0.0 && xi < 1.0)) {
            return Err(Error::Domain("point must lie strictly inside (0,1)^d"));
        }
        Ok(())
    }

    /// Density value at an interior point.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        match &self.kind {
            DensityKind::Uniform => 1.0,
            DensityKind::CosineProduct { amp, freq } => {
                let mut v = 1.0;
                for k in 0..self.dim {
                    v *= 1.0 + amp[k] * (TAU * freq[k] as f64 * x[k]).cos();
                }
                v
            }
            DensityKind::LinearTiltProduct { tilt } => {
                let mut v = 1.0;
                for k in 0..self.dim {
                    v *= 1.0 + tilt[k] * (x[k] - 0.5);
                }
                v
            }
            DensityKind::Tempered { base, theta } => {
                base.eval_unchecked(x).powf(*theta) / self.norm_const
            }
            DensityKind::CustomGrid {
                cells_per_axis,
                values,
            } => values[grid_cell_index(x, *cells_per_axis)],
        }
    }

    /// Gradient at an interior point: analytic for the smooth families,
    /// central finite differences (step `1e-6`) for grid densities.
    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let mut out = alloc::vec![0.0; self.dim];
        match &self.kind {
            DensityKind::Uniform => {}
            DensityKind::CosineProduct { .. }
            | DensityKind::LinearTiltProduct { .. }
            | DensityKind::Tempered { .. } => {
                let v = self.eval_unchecked(x);
                for k in 0..self.dim {
                    out[k] = v * self.axis_log_deriv(k, x[k]);
                }
            }
            DensityKind::CustomGrid { .. } => {
                let mut xp = x.to_vec();
                for k in 0..self.dim {
                    let h = 1e-6f64.min(0.5 * x[k].min(1.0 - x[k]));
                    xp[k] = x[k] + h;
                    let f_hi = self.eval_unchecked(&xp);
                    xp[k] = x[k] - h;
                    let f_lo = self.eval_unchecked(&xp);
                    xp[k] = x[k];
                    out[k] = (f_hi - f_lo) / (2.0 * h);
                }
            }
        }
        Ok(out)
    }

    /// Whether the density factorizes over the axes.
    pub fn is_product(&self) -> bool {
        match &self.kind {
            DensityKind::Uniform
            | DensityKind::CosineProduct { .. }
            | DensityKind::LinearTiltProduct { .. } => true,
            DensityKind::Tempered { base, .. } => base.is_product(),
            DensityKind::CustomGrid { .. } => false,
        }
    }

    /// Unnormalized per-axis factor of a product density.
    fn axis_factor(&self, k: usize, x: f64) -> f64 {
        match &self.kind {
            DensityKind::Uniform => 1.0,
            DensityKind::CosineProduct { amp, freq } => {
                1.0 + amp[k] * (TAU * freq[k] as f64 * x).cos()
            }
            DensityKind::LinearTiltProduct { tilt } => 1.0 + tilt[k] * (x - 0.5),
            DensityKind::Tempered { base, theta } => base.axis_factor(k, x).powf(*theta),
            DensityKind::CustomGrid { .. } => unreachable!("not a product density"),
        }
    }

    /// d/dx log(axis factor).
    fn axis_log_deriv(&self, k: usize, x: f64) -> f64 {
        match &self.kind {
            DensityKind::Uniform => 0.0,
            DensityKind::CosineProduct { amp, freq } => {
                let b = freq[k] as f64;
                let f = 1.0 + amp[k] * (TAU * b * x).cos();
                -TAU * amp[k] * b * (TAU * b * x).sin() / f
            }
            DensityKind::LinearTiltProduct { tilt } => tilt[k] / (1.0 + tilt[k] * (x - 0.5)),
            DensityKind::Tempered { base, theta } => theta * base.axis_log_deriv(k, x),
            DensityKind::CustomGrid { .. } => unreachable!("not a product density"),
        }
    }

    /// Accumulated normalization of the (possibly nested) product form.
    fn norm_total(&self) -> f64 {
        match &self.kind {
            DensityKind::Tempered { base, theta } => {
                self.norm_const * base.norm_total().powf(*theta)
            }
            _ => 1.0,
        }
    }

    /// Panel width that resolves the fastest oscillation along axis `k`.
    fn axis_panel(&self, k: usize) -> f64 {
        match &self.kind {
            DensityKind::CosineProduct { freq, .. } => 1.0 / (16.0 * freq[k] as f64),
            DensityKind::Tempered { base, .. } => base.axis_panel(k),
            _ => 1.0 / 16.0,
        }
    }

    /// Exact (or spectrally accurate) mass of an axis slice `[a,b]` of the
    /// k-th factor, normalized so that the full axis carries mass
    /// `axis_mass(k, 0, 1) = 1` for the plain product families.
    pub fn axis_mass(&self, k: usize, a: f64, b: f64) -> f64 {
        debug_assert!(self.is_product());
        match &self.kind {
            DensityKind::Uniform => b - a,
            DensityKind::CosineProduct { amp, freq } => {
                let bb = freq[k] as f64;
                let antider = |x: f64| x + amp[k] * (TAU * bb * x).sin() / (TAU * bb);
                antider(b) - antider(a)
            }
            DensityKind::LinearTiltProduct { tilt } => {
                let t = tilt[k];
                let antider = |x: f64| x + 0.5 * t * (x * x - x);
                antider(b) - antider(a)
            }
            DensityKind::Tempered { base, theta } => {
                // Marginal of a tempered product: the k-th factor tempers on
                // its own and renormalizes by its own axis integral.
                let part = composite_gauss_1d(a, b, 16, self.axis_panel(k), |x| {
                    base.axis_factor(k, x).powf(*theta)
                });
                let z_k = composite_gauss_1d(0.0, 1.0, 16, self.axis_panel(k), |x| {
                    base.axis_factor(k, x).powf(*theta)
                });
                part / z_k
            }
            DensityKind::CustomGrid { .. } => unreachable!("not a product density"),
        }
    }

    /// Per-coordinate CDF for the directly invertible families.
    pub fn axis_cdf(&self, k: usize, x: f64) -> f64 {
        self.axis_mass(k, 0.0, x)
    }

    /// Mass of an axis-aligned box.
    pub fn box_mass(&self, bx: &AxisBox) -> f64 {
        debug_assert_eq!(bx.dim(), self.dim);
        match &self.kind {
            DensityKind::CustomGrid {
                cells_per_axis,
                values,
            } => custom_grid_box_mass(self.dim, *cells_per_axis, values, bx),
            _ if self.is_product() => {
                let mut v = 1.0;
                for k in 0..self.dim {
                    v *= self.axis_mass(k, bx.lo()[k], bx.hi()[k]);
                }
                v
            }
            _ => {
                // Non-product fallback (tempering of a grid density):
                // composite Gauss over the box.
                let q = Quadrature::new(8, crate::quad::QuadRule::TensorGauss { order: 4 })
                    .expect("valid quadrature");
                q.integrate_box(bx, |x| self.eval_unchecked(x))
            }
        }
    }

    /// Draw `n` iid points, returned as a flat row-major coordinate buffer.
    pub fn sample(&self, rng: &mut RngStream, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::Domain("sample count must be at least 1"));
        }
        let mut out = alloc::vec![0.0; n * self.dim];
        let mut attempts = 0u64;
        let mut accepted = 0u64;
        for i in 0..n {
            self.sample_point(rng, &mut out[i * self.dim..(i + 1) * self.dim], &mut attempts)?;
            accepted += 1;
            if attempts >= 1000 && (accepted as f64) < ACCEPTANCE_FLOOR * attempts as f64 {
                return Err(Error::Config(
                    "rejection acceptance rate below 1e-3; density too peaked".to_string(),
                ));
            }
        }
        Ok(out)
    }

    /// Draw one point into `buf`.
    fn sample_point(&self, rng: &mut RngStream, buf: &mut [f64], attempts: &mut u64) -> Result<()> {
        match &self.kind {
            DensityKind::Uniform => {
                for b in buf.iter_mut() {
                    *b = rng.uniform_open();
                }
                *attempts += 1;
            }
            DensityKind::CosineProduct { .. } | DensityKind::LinearTiltProduct { .. } => {
                for (k, b) in buf.iter_mut().enumerate() {
                    let u = rng.uniform_open();
                    *b = self.invert_axis_cdf(k, u);
                }
                *attempts += 1;
            }
            DensityKind::Tempered { .. } | DensityKind::CustomGrid { .. } => {
                let sup = self.bounds.sup;
                loop {
                    *attempts += 1;
                    for b in buf.iter_mut() {
                        *b = rng.uniform_open();
                    }
                    let v = rng.uniform_open();
                    if v * sup <= self.eval_unchecked(buf) {
                        break;
                    }
                    if *attempts >= 1_000_000 {
                        return Err(Error::Config(
                            "rejection sampler starved; envelope far above density".to_string(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Solve `F_k(x) = u` by Newton with a bisection safeguard.
    fn invert_axis_cdf(&self, k: usize, u: f64) -> f64 {
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        let mut x = u;
        for _ in 0..INV_CDF_MAX_ITER {
            let err = self.axis_cdf(k, x) - u;
            if err.abs() <= INV_CDF_TOL {
                return x;
            }
            if err > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let slope = self.axis_factor_normalized(k, x);
            let mut next = x - err / slope;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            x = next;
        }
        x
    }

    /// Axis factor rescaled to integrate to one on [0,1] (the slope of the
    /// per-axis CDF). Only the directly invertible families reach this from
    /// the sampler; the plain product factors are already normalized.
    fn axis_factor_normalized(&self, k: usize, x: f64) -> f64 {
        match &self.kind {
            DensityKind::Tempered { base, theta } => {
                let z_k = composite_gauss_1d(0.0, 1.0, 16, self.axis_panel(k), |t| {
                    base.axis_factor(k, t).powf(*theta)
                });
                self.axis_factor(k, x) / z_k
            }
            _ => self.axis_factor(k, x),
        }
    }
}

fn product_grad_bound<T: Copy>(
    params: &[T],
    deriv_sup: impl Fn(usize) -> f64,
    factor_sup: impl Fn(T) -> f64,
) -> f64 {
    let sups: Vec<f64> = params.iter().map(|&p| factor_sup(p)).collect();
    let mut sum_sq = 0.0;
    for k in 0..params.len() {
        let mut partial = deriv_sup(k);
        for (j, s) in sups.iter().enumerate() {
            if j != k {
                partial *= s;
            }
        }
        sum_sq += partial * partial;
    }
    sum_sq.sqrt()
}

fn grid_cell_index(x: &[f64], m: usize) -> usize {
    let mut idx = 0usize;
    for &xi in x {
        let c = ((xi * m as f64) as usize).min(m - 1);
        idx = idx * m + c;
    }
    idx
}

fn custom_grid_box_mass(dim: usize, m: usize, values: &[f64], bx: &AxisBox) -> f64 {
    // Exact overlap of the box with every grid cell, axis by axis.
    let mut overlaps: Vec<Vec<(usize, f64)>> = Vec::with_capacity(dim);
    for k in 0..dim {
        let mut axis = Vec::new();
        let (a, b) = (bx.lo()[k], bx.hi()[k]);
        let c_lo = ((a * m as f64).floor() as usize).min(m - 1);
        let c_hi = ((b * m as f64).ceil() as usize).min(m);
        for c in c_lo..c_hi {
            let cell_a = c as f64 / m as f64;
            let cell_b = (c + 1) as f64 / m as f64;
            let w = (b.min(cell_b) - a.max(cell_a)).max(0.0);
            if w > 0.0 {
                axis.push((c, w));
            }
        }
        overlaps.push(axis);
    }
    // Tensor sum over overlapped cells.
    let mut total = 0.0;
    let mut cursor = alloc::vec![0usize; dim];
    'outer: loop {
        let mut idx = 0usize;
        let mut w = 1.0;
        for k in 0..dim {
            let (c, wk) = overlaps[k][cursor[k]];
            idx = idx * m + c;
            w *= wk;
        }
        total += w * values[idx];
        let mut k = 0;
        loop {
            if k == dim {
                break 'outer;
            }
            cursor[k] += 1;
            if cursor[k] < overlaps[k].len() {
                break;
            }
            cursor[k] = 0;
            k += 1;
        }
    }
    total
}

/// The cost functional `J_g(f) = ∫ g f^(-p/d)` driving the leading constant
/// of the sampling error.
pub fn functional_j(g: &Density, f: &Density, p: f64, quad: &Quadrature) -> Result<f64> {
    if g.dim() != f.dim() {
        return Err(Error::Domain("densities must share a dimension"));
    }
    let expo = -p / g.dim() as f64;
    let mut bad = false;
    let val = quad.integrate(g.dim(), |x| {
        let fv = f.eval_unchecked(x);
        if !(fv > 0.0) {
            bad = true;
            return 0.0;
        }
        g.eval_unchecked(x) * fv.powf(expo)
    });
    if bad {
        return Err(Error::Domain("proposal density vanishes at a quadrature node"));
    }
    Ok(val)
}

/// `∫ g^(1-p/d) - 1`: zero for uniform `g`, negative for nonuniform `g`
/// exactly when `p < d`, positive when `p > d`.
pub fn jensen_gap(g: &Density, p: f64, d: usize, quad: &Quadrature) -> Result<f64> {
    if d != g.dim() {
        return Err(Error::Domain("dimension argument disagrees with the density"));
    }
    if matches!(g.kind(), DensityKind::Uniform) {
        return Ok(0.0);
    }
    let expo = 1.0 - p / d as f64;
    Ok(quad.integrate(d, |x| g.eval_unchecked(x).powf(expo)) - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn cosine3() -> Density {
        Density::cosine_product(vec![0.5, 0.3, 0.7], vec![1, 2, 1]).unwrap()
    }

    #[test]
    fn uniform_evaluates_to_one() {
        let g = Density::uniform(3);
        assert_eq!(g.eval(&[0.3, 0.3, 0.3]).unwrap(), 1.0);
    }

    #[test]
    fn cosine_quarter_period_is_one() {
        let g = Density::cosine_product(vec![0.5], vec![1]).unwrap();
        let v = g.eval(&[0.25]).unwrap();
        assert!((v - 1.0).abs() < 1e-15, "{v}");
    }

    #[test]
    fn out_of_domain_point_is_rejected() {
        let g = Density::uniform(2);
        assert!(matches!(g.eval(&[0.0, 0.5]), Err(Error::Domain(_))));
        assert!(matches!(g.eval(&[0.5, 1.0]), Err(Error::Domain(_))));
        assert!(g.eval(&[0.5]).is_err());
    }

    #[test]
    fn tempered_value_matches_quadrature_oracle() {
        let base = Density::cosine_product(vec![0.5], vec![1]).unwrap();
        let g = Density::tempered(base.clone(), 0.6, &Quadrature::gauss(64)).unwrap();
        // independent normalization oracle at order 64
        let z = Quadrature::gauss(64).integrate(1, |x| base.eval_unchecked(x).powf(0.6));
        let v = g.eval(&[0.25]).unwrap();
        assert!((v - 1.0f64.powf(0.6) / z).abs() < 1e-12, "{v} vs {}", 1.0 / z);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let quad = Quadrature::gauss(32);
        let densities = vec![
            Density::uniform(3),
            cosine3(),
            Density::linear_tilt_product(vec![0.8, -0.4, 1.1]).unwrap(),
            Density::tempered(cosine3(), 0.6, &quad).unwrap(),
        ];
        let x = [0.31, 0.62, 0.47];
        for g in &densities {
            let grad = g.grad(&x).unwrap();
            for k in 0..3 {
                let h = 1e-6;
                let mut xp = x;
                xp[k] += h;
                let hi = g.eval(&xp).unwrap();
                xp[k] -= 2.0 * h;
                let lo = g.eval(&xp).unwrap();
                let fd = (hi - lo) / (2.0 * h);
                let scale = grad[k].abs().max(1.0);
                assert!(
                    (grad[k] - fd).abs() / scale < 1e-5,
                    "kind {:?} axis {k}: {} vs fd {}",
                    g.kind(),
                    grad[k],
                    fd
                );
            }
        }
    }

    #[test]
    fn cosine_gradient_vanishes_at_half() {
        let g = Density::cosine_product(vec![0.5], vec![1]).unwrap();
        let grad = g.grad(&[0.5]).unwrap();
        assert!(grad[0].abs() < 1e-12);
    }

    #[test]
    fn all_families_normalize() {
        let quad = Quadrature::gauss(64);
        let custom = Density::custom_grid(2, 4, (1..=16).map(|i| i as f64).collect()).unwrap();
        let densities = vec![
            Density::uniform(2),
            Density::cosine_product(vec![0.5, 0.3], vec![1, 3]).unwrap(),
            Density::linear_tilt_product(vec![1.2, -0.7]).unwrap(),
            Density::tempered(
                Density::cosine_product(vec![0.5, 0.3], vec![1, 3]).unwrap(),
                0.4,
                &quad,
            )
            .unwrap(),
            custom,
        ];
        for g in &densities {
            let total = quad.integrate(2, |x| g.eval_unchecked(x));
            assert!(
                (total - 1.0).abs() < 1e-8,
                "kind {:?} integrates to {total}",
                g.kind()
            );
        }
    }

    #[test]
    fn bounds_hold_on_refined_grid() {
        let quad = Quadrature::gauss(32);
        let densities = vec![
            cosine3(),
            Density::linear_tilt_product(vec![0.8, -0.4, 1.1]).unwrap(),
            Density::tempered(cosine3(), 0.6, &quad).unwrap(),
        ];
        for g in &densities {
            let b = g.bounds();
            let mut x = [0.0f64; 3];
            let m = 64usize;
            // stride the 64^3 grid to keep the check fast but dense
            for i in 0..m {
                for j in 0..m {
                    for l in 0..m {
                        x[0] = (i as f64 + 0.5) / m as f64;
                        x[1] = (j as f64 + 0.5) / m as f64;
                        x[2] = (l as f64 + 0.5) / m as f64;
                        let v = g.eval_unchecked(&x);
                        assert!(v >= b.inf - 1e-12 && v <= b.sup + 1e-12);
                        let grad = g.grad(&x).unwrap();
                        let norm: f64 = grad.iter().map(|t| t * t).sum::<f64>().sqrt();
                        assert!(norm <= b.grad_sup + 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn temper_exponent_is_d_over_p_plus_d() {
        let g = cosine3();
        let f_star = g.temper(2.0).unwrap();
        match f_star.kind() {
            DensityKind::Tempered { theta, .. } => assert!((theta - 0.6).abs() < 1e-15),
            other => panic!("expected tempered kind, got {other:?}"),
        }
    }

    #[test]
    fn temper_fixes_uniform() {
        let u = Density::uniform(3);
        let f_star = u.temper(2.0).unwrap();
        assert!(matches!(f_star.kind(), DensityKind::Uniform));
    }

    #[test]
    fn tempered_density_normalizes() {
        let g = cosine3();
        let f_star = g.temper(2.0).unwrap();
        let total = Quadrature::gauss(64).integrate(3, |x| f_star.eval_unchecked(x));
        assert!((total - 1.0).abs() < 1e-8, "{total}");
    }

    #[test]
    fn double_tempering_is_single_tempering_with_squared_exponent() {
        let g = Density::cosine_product(vec![0.5, 0.3], vec![1, 2]).unwrap();
        let p = 2.0;
        let theta = 2.0 / (p + 2.0);
        let once = g.temper(p).unwrap();
        let twice = once.temper(p).unwrap();
        // pointwise ratio of twice-tempered to g^(θ²) must be constant
        let mut ratiomin = f64::INFINITY;
        let mut ratiomax = 0.0f64;
        for i in 1..20 {
            for j in 1..20 {
                let x = [i as f64 / 20.0, j as f64 / 20.0];
                let r = twice.eval_unchecked(&x) / g.eval_unchecked(&x).powf(theta * theta);
                ratiomin = ratiomin.min(r);
                ratiomax = ratiomax.max(r);
            }
        }
        assert!((ratiomax / ratiomin - 1.0).abs() < 1e-9);
    }

    #[test]
    fn functional_identities() {
        let quad = Quadrature::gauss(64);
        let u = Density::uniform(3);
        assert!((functional_j(&u, &u, 2.0, &quad).unwrap() - 1.0).abs() < 1e-12);

        let g = cosine3();
        let f_star = g.temper(2.0).unwrap();
        let j_star = functional_j(&g, &f_star, 2.0, &quad).unwrap();
        // closed form of the minimum
        let theta = 3.0 / 5.0;
        let z = quad.integrate(3, |x| g.eval_unchecked(x).powf(theta));
        assert!((j_star - z.powf(5.0 / 3.0)).abs() < 1e-6, "{j_star}");

        let j_g = functional_j(&g, &g, 2.0, &quad).unwrap();
        let j_u = functional_j(&g, &u, 2.0, &quad).unwrap();
        assert!(j_star <= j_g + 1e-9);
        assert!(j_star <= j_u + 1e-9);
    }

    #[test]
    fn functional_is_minimized_at_tempered_proposal() {
        let quad = Quadrature::gauss(48);
        let g = cosine3();
        let p = 2.0;
        let f_star = g.temper(p).unwrap();
        let j_star = functional_j(&g, &f_star, p, &quad).unwrap();
        let candidates = vec![
            g.clone(),
            Density::uniform(3),
            Density::tempered(g.clone(), 0.3, &quad).unwrap(),
            Density::tempered(g.clone(), 0.85, &quad).unwrap(),
        ];
        for f in &candidates {
            let j = functional_j(&g, f, p, &quad).unwrap();
            assert!(j_star <= j + 1e-9, "J* = {j_star} > J = {j}");
        }
    }

    #[test]
    fn jensen_gap_signs() {
        let quad = Quadrature::gauss(64);
        let u = Density::uniform(3);
        assert_eq!(jensen_gap(&u, 1.7, 3, &quad).unwrap(), 0.0);
        let g = cosine3();
        assert!(jensen_gap(&g, 1.0, 3, &quad).unwrap() < 0.0);
        assert!(jensen_gap(&g, 6.0, 3, &quad).unwrap() > 0.0);
    }

    #[test]
    fn custom_grid_eval_and_mass() {
        let vals = vec![1.0, 3.0, 2.0, 2.0];
        let g = Density::custom_grid(1, 4, vals).unwrap();
        // normalized: total = (1+3+2+2)/4 = 2 so values halve
        assert!((g.eval(&[0.1]).unwrap() - 0.5).abs() < 1e-15);
        assert!((g.eval(&[0.3]).unwrap() - 1.5).abs() < 1e-15);
        let bx = AxisBox::new(vec![0.125], vec![0.375]).unwrap();
        // half of cell 0 (mass 0.5*0.125) plus half of cell 1 (1.5*0.125)
        assert!((g.box_mass(&bx) - (0.5 + 1.5) * 0.125).abs() < 1e-15);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(Density::cosine_product(vec![0.95], vec![1]).is_err());
        assert!(Density::cosine_product(vec![0.5], vec![0]).is_err());
        assert!(Density::linear_tilt_product(vec![1.9]).is_err());
        assert!(Density::custom_grid(2, 2, vec![1.0, 1.0, 1.0]).is_err());
        assert!(Density::custom_grid(1, 2, vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn box_mass_matches_quadrature() {
        let quad = Quadrature::gauss(48);
        let g = cosine3();
        let f_star = g.temper(2.0).unwrap();
        let bx = AxisBox::new(vec![0.1, 0.2, 0.0], vec![0.6, 0.9, 0.5]).unwrap();
        for den in [&g, &f_star] {
            let fast = den.box_mass(&bx);
            let slow = quad.integrate_box(&bx, |x| den.eval_unchecked(x));
            assert!((fast - slow).abs() < 1e-9, "{fast} vs {slow}");
        }
    }
}
