//! Entropically regularized transport in the log domain.
//!
//! Dual ascent on the potentials with log-sum-exp updates, so small
//! temperatures stay stable. The cost matrix is normalized by its largest
//! entry before iterating, which makes one epsilon scale work across
//! instances; the returned cost is evaluated on a feasible plan obtained by
//! marginal-repair rounding, hence it upper-bounds the exact optimum. The
//! reported gap is the worst marginal violation before rounding.

use alloc::vec::Vec;
#[allow(unused_imports)] // f64 float methods come from the trait in no_std builds
use num_traits::Float;

use crate::error::{Error, Result};

use super::kdtree::pow_p;
use super::{check_balanced, DiscreteMeasure, PlanEntry, SolverKind, TransportResult};

const MARGINAL_TOL: f64 = 1e-9;

/// Approximate p-Wasserstein cost with temperature `epsilon` (relative to
/// the normalized cost scale). Non-convergence is not an error: the result
/// comes back flagged through a `gap` above the marginal tolerance.
pub fn wasserstein_entropic(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    epsilon: f64,
    max_iter: usize,
) -> Result<TransportResult> {
    if !(p >= 1.0) {
        return Err(Error::Domain("transport order p must be at least 1"));
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Domain("epsilon must be positive"));
    }
    let (mass_a, _) = check_balanced(mu, nu)?;

    let ns = mu.len();
    let nt = nu.len();
    let dim = mu.dim();

    // work on probability vectors; cost is linear in mass so scale back at
    // the end
    let a: Vec<f64> = mu.masses().iter().map(|m| m / mass_a).collect();
    let bsum: f64 = nu.total_mass();
    let b: Vec<f64> = nu.masses().iter().map(|m| m / bsum).collect();

    let mut cost = alloc::vec![0.0; ns * nt];
    let mut max_c = 0.0f64;
    for i in 0..ns {
        let x = mu.point(i);
        for j in 0..nt {
            let y = nu.point(j);
            let mut s = 0.0;
            for k in 0..dim {
                let t = x[k] - y[k];
                s += t * t;
            }
            let c = pow_p(s, p);
            cost[i * nt + j] = c;
            max_c = max_c.max(c);
        }
    }
    let scale = if max_c > 0.0 { max_c } else { 1.0 };

    let log_a: Vec<f64> = a.iter().map(|v| v.ln()).collect();
    let log_b: Vec<f64> = b.iter().map(|v| v.ln()).collect();
    let mut f = alloc::vec![0.0; ns];
    let mut g = alloc::vec![0.0; nt];
    let mut iterations = max_iter;
    let mut gap = f64::INFINITY;

    let mut row_buf = alloc::vec![0.0; nt.max(ns)];
    for it in 0..max_iter {
        // f_i = eps( log a_i - LSE_j((g_j - C_ij)/eps) )
        for i in 0..ns {
            for j in 0..nt {
                row_buf[j] = (g[j] - cost[i * nt + j] / scale) / epsilon;
            }
            f[i] = epsilon * (log_a[i] - logsumexp(&row_buf[..nt]));
        }
        for j in 0..nt {
            for i in 0..ns {
                row_buf[i] = (f[i] - cost[i * nt + j] / scale) / epsilon;
            }
            g[j] = epsilon * (log_b[j] - logsumexp(&row_buf[..ns]));
        }
        if (it + 1) % 10 == 0 || it + 1 == max_iter {
            gap = marginal_violation(&cost, scale, epsilon, &f, &g, &a, &b, ns, nt);
            if gap <= MARGINAL_TOL {
                iterations = it + 1;
                break;
            }
        }
    }

    // plan from the potentials, then marginal repair so it is feasible
    let mut plan = alloc::vec![0.0; ns * nt];
    for i in 0..ns {
        for j in 0..nt {
            plan[i * nt + j] = ((f[i] + g[j] - cost[i * nt + j] / scale) / epsilon).exp();
        }
    }
    round_to_marginals(&mut plan, &a, &b, ns, nt);

    let mut total_cost = 0.0;
    let mut entries = Vec::new();
    for i in 0..ns {
        for j in 0..nt {
            let m = plan[i * nt + j];
            if m > 0.0 {
                total_cost += m * cost[i * nt + j];
                entries.push(PlanEntry {
                    from: i,
                    to: j,
                    mass: m * mass_a,
                });
            }
        }
    }

    Ok(TransportResult {
        cost: total_cost * mass_a,
        plan: Some(entries),
        solver: SolverKind::Entropic {
            epsilon,
            iterations,
        },
        gap,
    })
}

fn logsumexp(xs: &[f64]) -> f64 {
    let mut m = f64::NEG_INFINITY;
    for &x in xs {
        m = m.max(x);
    }
    if !m.is_finite() {
        return m;
    }
    let s: f64 = xs.iter().map(|x| (x - m).exp()).sum();
    m + s.ln()
}

#[allow(clippy::too_many_arguments)]
fn marginal_violation(
    cost: &[f64],
    scale: f64,
    epsilon: f64,
    f: &[f64],
    g: &[f64],
    a: &[f64],
    b: &[f64],
    ns: usize,
    nt: usize,
) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..ns {
        let mut row = 0.0;
        for j in 0..nt {
            row += ((f[i] + g[j] - cost[i * nt + j] / scale) / epsilon).exp();
        }
        worst = worst.max((row - a[i]).abs());
    }
    for j in 0..nt {
        let mut col = 0.0;
        for i in 0..ns {
            col += ((f[i] + g[j] - cost[i * nt + j] / scale) / epsilon).exp();
        }
        worst = worst.max((col - b[j]).abs());
    }
    worst
}

/// Marginal repair: scale rows down to their targets, then columns, then
/// spread the residual as a rank-one correction. The output meets both
/// marginals exactly (up to float round-off).
fn round_to_marginals(plan: &mut [f64], a: &[f64], b: &[f64], ns: usize, nt: usize) {
    for i in 0..ns {
        let row: f64 = plan[i * nt..(i + 1) * nt].iter().sum();
        if row > a[i] && row > 0.0 {
            let s = a[i] / row;
            for v in &mut plan[i * nt..(i + 1) * nt] {
                *v *= s;
            }
        }
    }
    for j in 0..nt {
        let mut col = 0.0;
        for i in 0..ns {
            col += plan[i * nt + j];
        }
        if col > b[j] && col > 0.0 {
            let s = b[j] / col;
            for i in 0..ns {
                plan[i * nt + j] *= s;
            }
        }
    }
    let mut err_a = alloc::vec![0.0; ns];
    let mut err_b = alloc::vec![0.0; nt];
    let mut missing = 0.0;
    for i in 0..ns {
        let row: f64 = plan[i * nt..(i + 1) * nt].iter().sum();
        err_a[i] = (a[i] - row).max(0.0);
        missing += err_a[i];
    }
    for j in 0..nt {
        let mut col = 0.0;
        for i in 0..ns {
            col += plan[i * nt + j];
        }
        err_b[j] = (b[j] - col).max(0.0);
    }
    if missing > 0.0 {
        for i in 0..ns {
            if err_a[i] == 0.0 {
                continue;
            }
            for j in 0..nt {
                plan[i * nt + j] += err_a[i] * err_b[j] / missing;
            }
        }
    }
}
