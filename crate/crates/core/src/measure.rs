//! Weighted empirical measures built from importance ratios.
//!
//! `build_is_measure` draws points from the proposal and attaches the ratio
//! `target/proposal` as weights; the cached total mass is the normalization
//! sum, and dividing by it yields the self-normalized approximation of the
//! target.

use alloc::vec::Vec;
#[allow(unused_imports)] // f64 float methods come from the trait in no_std builds
use num_traits::Float;

use crate::density::Density;
use crate::error::{Error, Result};
use crate::geom::AxisBox;
use crate::quad::Quadrature;
use crate::rng::RngStream;

/// Atoms `X_i` with nonnegative weights `W_i` and cached total mass.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEmpiricalMeasure {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
    total_mass: f64,
}

impl WeightedEmpiricalMeasure {
    pub fn from_parts(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.len() != weights.len() * dim {
            return Err(Error::Domain("coordinate and weight lengths disagree"));
        }
        if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::Domain("weights must be finite and nonnegative"));
        }
        let total_mass = weights.iter().sum();
        Ok(WeightedEmpiricalMeasure {
            dim,
            coords,
            weights,
            total_mass,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Weights divided by the total mass; the result has mass one.
    pub fn normalize(&self) -> Result<Self> {
        if !(self.total_mass > 0.0) {
            return Err(Error::DegenerateMeasure);
        }
        let weights: Vec<f64> = self.weights.iter().map(|w| w / self.total_mass).collect();
        let total_mass = weights.iter().sum();
        Ok(WeightedEmpiricalMeasure {
            dim: self.dim,
            coords: self.coords.clone(),
            weights,
            total_mass,
        })
    }

    /// All weights multiplied by `alpha`; mass scales exactly with it.
    pub fn scale(&self, alpha: f64) -> Self {
        WeightedEmpiricalMeasure {
            dim: self.dim,
            coords: self.coords.clone(),
            weights: self.weights.iter().map(|w| w * alpha).collect(),
            total_mass: self.total_mass * alpha,
        }
    }

    /// Integral of a test function against the measure.
    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, mut phi: F) -> f64 {
        (0..self.len()).map(|i| self.weights[i] * phi(self.point(i))).sum()
    }

    /// Restriction to a box: atoms inside keep their weight.
    pub fn restrict(&self, bx: &AxisBox) -> Self {
        let mut coords = Vec::new();
        let mut weights = Vec::new();
        for i in 0..self.len() {
            if bx.contains(self.point(i)) {
                coords.extend_from_slice(self.point(i));
                weights.push(self.weights[i]);
            }
        }
        let total_mass = weights.iter().sum();
        WeightedEmpiricalMeasure {
            dim: self.dim,
            coords,
            weights,
            total_mass,
        }
    }
}

/// Draw `n` points from the proposal `f` and weight them by `g/f`.
///
/// The total mass of the result is the normalization sum; with `f = g` every
/// weight equals one, and in general every weight is at most
/// `sup(g)/inf(f)`.
pub fn build_is_measure(
    f: &Density,
    g: &Density,
    n: usize,
    rng: &mut RngStream,
) -> Result<WeightedEmpiricalMeasure> {
    if f.dim() != g.dim() {
        return Err(Error::Domain("proposal and target dimensions disagree"));
    }
    let d = f.dim();
    let coords = f.sample(rng, n)?;
    let same = core::ptr::eq(f as *const _, g as *const _);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let x = &coords[i * d..(i + 1) * d];
        let w = if same {
            1.0
        } else {
            g.eval_unchecked(x) / f.eval_unchecked(x)
        };
        weights.push(w);
    }
    WeightedEmpiricalMeasure::from_parts(d, coords, weights)
}

/// Effective-sample-size report: the number of genuine target samples whose
/// cost matches `n` weighted proposal samples, predicted from the two
/// quadrature integrals.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EssReport {
    pub n: usize,
    pub m_ess: f64,
    /// `∫ g^(1-p/d)`
    pub numerator: f64,
    /// `∫ g f^(-p/d)`
    pub denominator: f64,
    pub exceeds_n: bool,
}

/// `m_ess = n · (∫ g^(1-p/d) / ∫ g f^(-p/d))^(d/p)`.
pub fn ess(f: &Density, g: &Density, p: f64, n: usize, quad: &Quadrature) -> Result<EssReport> {
    if f.dim() != g.dim() {
        return Err(Error::Domain("proposal and target dimensions disagree"));
    }
    let d = g.dim() as f64;
    let numerator = quad.integrate(g.dim(), |x| g.eval_unchecked(x).powf(1.0 - p / d));
    let denominator = crate::density::functional_j(g, f, p, quad)?;
    let m_ess = n as f64 * (numerator / denominator).powf(d / p);
    Ok(EssReport {
        n,
        m_ess,
        numerator,
        denominator,
        exceeds_n: m_ess > n as f64,
    })
}

/// Relative second moment of the weight restricted to a box:
/// `Var(W·1_A) / E[W·1_A]^2` with both moments computed by quadrature.
pub fn relative_second_moment(
    f: &Density,
    g: &Density,
    region: &AxisBox,
    quad: &Quadrature,
) -> Result<f64> {
    if region.dim() != f.dim() || f.dim() != g.dim() {
        return Err(Error::Domain("box and density dimensions disagree"));
    }
    if !(region.volume() > 0.0) {
        return Err(Error::Domain("region must have positive volume"));
    }
    let e1 = quad.integrate_box(region, |x| g.eval_unchecked(x));
    let e2 = quad.integrate_box(region, |x| {
        let gv = g.eval_unchecked(x);
        gv * gv / f.eval_unchecked(x)
    });
    Ok((e2 - e1 * e1).max(0.0) / (e1 * e1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn equal_densities_give_unit_weights() {
        let g = Density::cosine_product(vec![0.5, 0.5, 0.5], vec![1, 1, 1]).unwrap();
        let mut rng = RngStream::seed_from(1);
        let mu = build_is_measure(&g, &g, 50, &mut rng).unwrap();
        assert!(mu.weights().iter().all(|&w| w == 1.0));
        assert_eq!(mu.total_mass(), 50.0);
    }

    #[test]
    fn weights_respect_certificate_bound() {
        let f = Density::uniform(3);
        let g = Density::cosine_product(vec![0.5, 0.5, 0.5], vec![1, 1, 1]).unwrap();
        let cap = g.bounds().sup / f.bounds().inf;
        let mut rng = RngStream::seed_from(2);
        let mu = build_is_measure(&f, &g, 2000, &mut rng).unwrap();
        assert!(mu.weights().iter().all(|&w| w <= cap + 1e-12));
    }

    #[test]
    fn normalize_divides_by_mass() {
        let mu =
            WeightedEmpiricalMeasure::from_parts(1, vec![0.25, 0.75], vec![1.0, 3.0]).unwrap();
        let nu = mu.normalize().unwrap();
        assert_eq!(nu.weights(), &[0.25, 0.75]);
        assert!((nu.total_mass() - 1.0).abs() < 1e-15);
        // idempotence
        let again = nu.normalize().unwrap();
        assert_eq!(again.weights(), nu.weights());
    }

    #[test]
    fn unit_weights_normalize_to_one_over_n() {
        let mu = WeightedEmpiricalMeasure::from_parts(
            1,
            vec![0.1, 0.2, 0.3, 0.4],
            vec![1.0; 4],
        )
        .unwrap();
        let nu = mu.normalize().unwrap();
        assert!(nu.weights().iter().all(|&w| (w - 0.25).abs() < 1e-15));
    }

    #[test]
    fn zero_mass_cannot_normalize() {
        let mu = WeightedEmpiricalMeasure::from_parts(1, vec![0.5], vec![0.0]).unwrap();
        assert!(matches!(mu.normalize(), Err(Error::DegenerateMeasure)));
    }

    #[test]
    fn scaling_is_exactly_linear_in_mass() {
        let mu =
            WeightedEmpiricalMeasure::from_parts(2, vec![0.1, 0.2, 0.6, 0.7], vec![0.5, 1.5])
                .unwrap();
        let s = mu.scale(0.25);
        assert_eq!(s.total_mass(), 0.25 * mu.total_mass());
    }

    #[test]
    fn ess_reduces_to_n_when_proposal_is_target() {
        let g = Density::cosine_product(vec![0.5, 0.5, 0.5], vec![1, 1, 1]).unwrap();
        let quad = Quadrature::gauss(32);
        let rep = ess(&g, &g, 2.0, 1000, &quad).unwrap();
        assert!((rep.m_ess - 1000.0).abs() < 1e-6, "{}", rep.m_ess);
        assert!(!rep.exceeds_n);
    }

    #[test]
    fn ess_exceeds_n_for_uniform_proposal_when_p_geq_d() {
        let f = Density::uniform(3);
        let g = Density::cosine_product(vec![0.5, 0.5, 0.5], vec![1, 1, 1]).unwrap();
        let quad = Quadrature::gauss(32);
        let rep = ess(&f, &g, 4.0, 1000, &quad).unwrap();
        assert!(rep.exceeds_n, "m_ess = {}", rep.m_ess);
    }

    #[test]
    fn relative_second_moment_bernoulli_case() {
        let u = Density::uniform(3);
        let quad = Quadrature::gauss(16);
        let full = AxisBox::unit_cube(3);
        let v_full = relative_second_moment(&u, &u, &full, &quad).unwrap();
        assert!(v_full.abs() < 1e-12);
        let eighth = AxisBox::new(vec![0.0, 0.0, 0.0], vec![0.5, 0.5, 0.5]).unwrap();
        let v = relative_second_moment(&u, &u, &eighth, &quad).unwrap();
        assert!((v - 7.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn relative_second_moment_respects_crude_bound() {
        let f = Density::cosine_product(vec![0.3, 0.3, 0.3], vec![1, 1, 1]).unwrap();
        let g = Density::cosine_product(vec![0.5, 0.5, 0.5], vec![2, 1, 1]).unwrap();
        let quad = Quadrature::gauss(24);
        let bx = AxisBox::new(vec![0.25, 0.0, 0.5], vec![0.75, 0.5, 1.0]).unwrap();
        let v = relative_second_moment(&f, &g, &bx, &quad).unwrap();
        let c = g.bounds().sup / f.bounds().inf;
        let g_mass = quad.integrate_box(&bx, |x| g.eval_unchecked(x));
        assert!(v <= c / g_mass + 1e-9, "v = {v}, bound = {}", c / g_mass);
    }

    #[test]
    fn normalization_sum_concentrates_at_one() {
        // mean of Z_n/n over replications stays within 3 standard errors of 1
        let f = Density::cosine_product(vec![0.4, 0.4, 0.4], vec![1, 1, 1]).unwrap();
        let g = Density::cosine_product(vec![0.5, 0.5, 0.5], vec![1, 1, 1]).unwrap();
        let reps = 200usize;
        let n = 10_000usize;
        let mut vals = Vec::with_capacity(reps);
        for r in 0..reps {
            let mut rng = RngStream::derive(99, &[r as u64]);
            let mu = build_is_measure(&f, &g, n, &mut rng).unwrap();
            vals.push(mu.total_mass() / n as f64);
        }
        let mean: f64 = vals.iter().sum::<f64>() / reps as f64;
        let var: f64 =
            vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (reps - 1) as f64;
        let se = (var / reps as f64).sqrt();
        assert!(
            (mean - 1.0).abs() <= 3.0 * se.max(1e-12),
            "mean {mean} se {se}"
        );
    }

    #[test]
    fn self_normalized_estimator_is_consistent() {
        // first-coordinate mean under the normalized measure approaches the
        // target expectation
        let f = Density::uniform(3);
        let g = Density::cosine_product(vec![0.5, 0.5, 0.5], vec![1, 1, 1]).unwrap();
        let quad = Quadrature::gauss(32);
        let expect = quad.integrate(3, |x| x[0] * g.eval_unchecked(x));
        let n = 100_000usize;
        let mut rng = RngStream::seed_from(5);
        let mu = build_is_measure(&f, &g, n, &mut rng).unwrap();
        let hat = mu.normalize().unwrap();
        let est = hat.integrate(|x| x[0]);
        // per-sample variance of W·x1 bounds the MC standard error
        let var = quad.integrate(3, |x| {
            let w = g.eval_unchecked(x) / f.eval_unchecked(x);
            let t = w * x[0] - expect;
            t * t * f.eval_unchecked(x)
        });
        let se = (var / n as f64).sqrt();
        assert!(
            (est - expect).abs() <= 5.0 * se,
            "est {est}, expect {expect}, se {se}"
        );
    }
}
