//! Bennett-type tail bounds and the empirical checkers that validate
//! observed deviation frequencies against them.
//!
//! Every bound here is an upper bound with unquantified slack, so the
//! checkers test direction only: the observed violation rate must not
//! exceed the bound by more than three binomial standard errors. All
//! moments entering a bound come from quadrature, not from the simulated
//! samples, so the bound itself carries no Monte Carlo noise.

use alloc::vec::Vec;
#[allow(unused_imports)] // f64 float methods come from the trait in no_std builds
use num_traits::Float;

use crate::density::Density;
use crate::dyadic::{max_scale, DyadicGrid, LogConvention, MaxScale};
use crate::error::{Error, Result};
use crate::fit::line_fit;
use crate::geom::AxisBox;
use crate::measure::build_is_measure;
use crate::quad::Quadrature;
use crate::rng::RngStream;

/// `h(x) = (1+x) ln(1+x) - x`, the rate function of Bennett's inequality.
pub fn bennett_h(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain("h is defined for nonnegative arguments"));
    }
    Ok((1.0 + x) * (1.0 + x).ln() - x)
}

/// A fully specified Bennett bound for a sum of `n` iid summands with sup
/// bound `m`, variance `sigma2`, at deviation parameter `x = delta·b`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BennettBound {
    pub n: usize,
    pub sup: f64,
    pub sigma2: f64,
    pub arg: f64,
    /// `exp(-n (sigma/m)^2 h(arg))`
    pub value: f64,
}

impl BennettBound {
    pub fn evaluate(n: usize, sup: f64, sigma2: f64, arg: f64) -> Result<Self> {
        if !(sup > 0.0) || !(sigma2 >= 0.0) {
            return Err(Error::Domain("need positive sup bound and nonnegative variance"));
        }
        let h = bennett_h(arg)?;
        let value = (-(n as f64) * sigma2 / (sup * sup) * h).exp();
        Ok(BennettBound {
            n,
            sup,
            sigma2,
            arg,
            value,
        })
    }
}

/// Quadrature moments of `W·1_Q` for the weight `W = g/f`: the box masses
/// under both densities, the variance, and a sup bound refined on a lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxMoments {
    pub g_mass: f64,
    pub f_mass: f64,
    pub sigma2: f64,
    pub sup: f64,
}

pub fn box_moments(f: &Density, g: &Density, region: &AxisBox, quad: &Quadrature) -> BoxMoments {
    let g_mass = quad.integrate_box(region, |x| g.eval_unchecked(x));
    let f_mass = quad.integrate_box(region, |x| f.eval_unchecked(x));
    let second = quad.integrate_box(region, |x| {
        let gv = g.eval_unchecked(x);
        gv * gv / f.eval_unchecked(x)
    });
    // grid-refined sup of g/f over the box, floored by the certificate ratio
    let probes = 17usize;
    let d = region.dim();
    let mut sup = 0.0f64;
    let mut idx = alloc::vec![0usize; d];
    let mut x = alloc::vec![0.0; d];
    'outer: loop {
        for k in 0..d {
            let t = (idx[k] as f64 + 0.5) / probes as f64;
            x[k] = region.lo()[k] + t * (region.hi()[k] - region.lo()[k]);
        }
        sup = sup.max(g.eval_unchecked(&x) / f.eval_unchecked(&x));
        let mut k = 0;
        loop {
            if k == d {
                break 'outer;
            }
            idx[k] += 1;
            if idx[k] < probes {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
    // the lattice understates the true sup slightly; the certificate ratio
    // caps it from above, and a small headroom keeps the bound valid
    let cert = g.bounds().sup / f.bounds().inf;
    sup = (sup * 1.0001).min(cert);
    BoxMoments {
        g_mass,
        f_mass,
        sigma2: (second - g_mass * g_mass).max(0.0),
        sup,
    }
}

/// Tail bound for the weighted functional sum
/// `P( Σ W_i φ(X_i) > (1+δ) n ∫ gφ ) ≤ exp(-n σ²/m² h(δ m ∫gφ / σ²))`
/// for the indicator `φ = 1_Q`. Degenerate variance gives a zero bound for
/// positive deviations.
pub fn functional_bound(
    f: &Density,
    g: &Density,
    region: &AxisBox,
    n: usize,
    delta: f64,
    quad: &Quadrature,
) -> Result<BennettBound> {
    let mom = box_moments(f, g, region, quad);
    if mom.sigma2 == 0.0 {
        return BennettBound::evaluate(n, mom.sup.max(1e-300), 0.0, 0.0);
    }
    let arg = delta * mom.sup * mom.g_mass / mom.sigma2;
    BennettBound::evaluate(n, mom.sup, mom.sigma2, arg)
}

/// Outcome of an empirical frequency check.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CheckReport {
    pub name: alloc::string::String,
    pub observed: f64,
    pub bound: f64,
    /// three binomial standard errors of the observed rate
    pub slack: f64,
    pub reps: usize,
    pub pass: bool,
    pub note: Option<alloc::string::String>,
}

fn binomial_slack(rate: f64, reps: usize) -> f64 {
    3.0 * (rate * (1.0 - rate) / reps as f64).sqrt()
}

/// Simulate `κ_Q/n` over replications and compare the frequency of
/// `|κ_Q/n - 1| > δ` with the two-sided Bennett bound.
pub fn empirical_violation_rate(
    f: &Density,
    g: &Density,
    region: &AxisBox,
    n: usize,
    delta: f64,
    reps: usize,
    seed: u64,
    quad: &Quadrature,
) -> Result<CheckReport> {
    if reps < 100 {
        return Err(Error::Domain("need at least 100 replications"));
    }
    let mom = box_moments(f, g, region, quad);
    let b = mom.sup * mom.g_mass / mom.sigma2.max(1e-300);
    let one_sided = BennettBound::evaluate(n, mom.sup, mom.sigma2, delta * b)?;
    let bound = 2.0 * one_sided.value;
    let mut violations = 0usize;
    for r in 0..reps {
        let mut rng = RngStream::derive(seed, &[0x6b61, n as u64, r as u64]);
        let mu = build_is_measure(f, g, n, &mut rng)?;
        let kappa = mu.restrict(region).total_mass() / mom.g_mass;
        if (kappa / n as f64 - 1.0).abs() > delta {
            violations += 1;
        }
    }
    let observed = violations as f64 / reps as f64;
    let slack = binomial_slack(observed, reps);
    Ok(CheckReport {
        name: alloc::string::String::from("kappa-violation-rate"),
        observed,
        bound,
        slack,
        reps,
        pass: observed <= bound + slack,
        note: None,
    })
}

/// Monte Carlo `E|κ_Q/n - 1|^p` against the variance proxy
/// `(v_Q/n)^(p/2)`; the two stay within a constant of each other.
pub fn moment_ratio_check(
    f: &Density,
    g: &Density,
    region: &AxisBox,
    n: usize,
    p: f64,
    reps: usize,
    seed: u64,
    quad: &Quadrature,
) -> Result<(f64, f64)> {
    if !(p >= 1.0) {
        return Err(Error::Domain("moment order must be at least 1"));
    }
    let mom = box_moments(f, g, region, quad);
    let v_q = mom.sigma2 / (mom.g_mass * mom.g_mass);
    let rhs = (v_q / n as f64).powf(0.5 * p);
    let mut acc = 0.0;
    for r in 0..reps {
        let mut rng = RngStream::derive(seed, &[0x6d72, n as u64, r as u64]);
        let mu = build_is_measure(f, g, n, &mut rng)?;
        let kappa = mu.restrict(region).total_mass() / mom.g_mass;
        acc += (kappa / n as f64 - 1.0).abs().powf(p);
    }
    Ok((acc / reps as f64, rhs))
}

/// Slope of `log(lhs/rhs)` against `log n` across a sweep; bounded moment
/// ratios give a slope near zero.
#[allow(clippy::too_many_arguments)]
pub fn moment_ratio_trend(
    f: &Density,
    g: &Density,
    region: &AxisBox,
    ns: &[usize],
    p: f64,
    reps: usize,
    seed: u64,
    quad: &Quadrature,
) -> Result<f64> {
    if ns.len() < 2 {
        return Err(Error::Domain("need at least two sample sizes"));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &n in ns {
        let (lhs, rhs) = moment_ratio_check(f, g, region, n, p, reps, seed, quad)?;
        xs.push((n as f64).ln());
        ys.push((lhs / rhs).ln());
    }
    Ok(line_fit(&xs, &ys).slope)
}

/// Empirical exceedance rate of `γ_Q` above `(1+ε)·∫g/∫f`, plus the mean of
/// `γ²` for the crude second-moment cap.
pub struct GammaTailReport {
    pub observed: f64,
    pub mean_gamma_sq: f64,
    /// `n·|Q|`, the scale entering the exponential decay
    pub exponent_scale: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn gamma_tail_check(
    f: &Density,
    g: &Density,
    region: &AxisBox,
    n: usize,
    eps: f64,
    reps: usize,
    seed: u64,
    quad: &Quadrature,
) -> Result<GammaTailReport> {
    let mom = box_moments(f, g, region, quad);
    let threshold = (1.0 + eps) * mom.g_mass / mom.f_mass;
    let mut exceed = 0usize;
    let mut gamma_sq = 0.0;
    for r in 0..reps {
        let mut rng = RngStream::derive(seed, &[0x6774, n as u64, r as u64]);
        let mu = build_is_measure(f, g, n, &mut rng)?;
        let local = mu.restrict(region);
        let gamma = if local.len() > 0 {
            local.total_mass() / local.len() as f64
        } else {
            0.0
        };
        if gamma > threshold {
            exceed += 1;
        }
        gamma_sq += gamma * gamma;
    }
    Ok(GammaTailReport {
        observed: exceed as f64 / reps as f64,
        mean_gamma_sq: gamma_sq / reps as f64,
        exponent_scale: n as f64 * region.volume(),
    })
}

/// Fit `log(rate)` against `n|Q|` across a sweep; the decay slope must be
/// negative. Rates of zero clamp to one observation to stay loggable.
#[allow(clippy::too_many_arguments)]
pub fn gamma_tail_trend(
    f: &Density,
    g: &Density,
    region: &AxisBox,
    ns: &[usize],
    eps: f64,
    reps: usize,
    seed: u64,
    quad: &Quadrature,
) -> Result<f64> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &n in ns {
        let rep = gamma_tail_check(f, g, region, n, eps, reps, seed, quad)?;
        let rate = rep.observed.max(0.5 / reps as f64);
        xs.push(rep.exponent_scale);
        ys.push(rate.ln());
    }
    Ok(line_fit(&xs, &ys).slope)
}

/// Uniform count control at the maximal scale: frequency of any cube whose
/// atom count escapes `(1±ε)·n·∫_Q f`. At reachable sample sizes the pass
/// criterion is effectively zero observed violations.
pub struct CountConcentrationReport {
    pub scale: MaxScale,
    pub observed: f64,
    pub threshold: f64,
    pub pass: bool,
    pub trivial_scale: bool,
}

pub fn count_concentration_check(
    f: &Density,
    n: usize,
    alpha: f64,
    eps: f64,
    reps: usize,
    seed: u64,
    forced_level: Option<u32>,
) -> Result<CountConcentrationReport> {
    let d = f.dim();
    let scale = max_scale(n, alpha, d, LogConvention::Natural);
    let level = forced_level.unwrap_or(scale.level);
    let grid = DyadicGrid::new(level);
    let cubes = grid.cubes(d);
    // expected counts per cube
    let mut expected = alloc::vec![0.0; cubes];
    for idx in 0..cubes {
        expected[idx] = f.box_mass(&grid.cube_box(d, idx)) * n as f64;
    }
    let mut bad = 0usize;
    let mut counts = alloc::vec![0usize; cubes];
    for r in 0..reps {
        let mut rng = RngStream::derive(seed, &[0x6370, n as u64, r as u64]);
        let pts = f.sample(&mut rng, n)?;
        counts.iter_mut().for_each(|c| *c = 0);
        for i in 0..n {
            counts[grid.index_of(&pts[i * d..(i + 1) * d])] += 1;
        }
        let violated = (0..cubes).any(|idx| {
            let c = counts[idx] as f64;
            c < (1.0 - eps) * expected[idx] || c > (1.0 + eps) * expected[idx]
        });
        if violated {
            bad += 1;
        }
    }
    let observed = bad as f64 / reps as f64;
    // the stated rate decays faster than any power; at desk scale the
    // smallest order already reads as zero
    let threshold = (n as f64).powf(-(1.0 / d as f64) - 10.0);
    let slack = binomial_slack(observed, reps);
    Ok(CountConcentrationReport {
        scale,
        observed,
        threshold,
        pass: observed <= threshold + slack,
        trivial_scale: level == 0,
    })
}
