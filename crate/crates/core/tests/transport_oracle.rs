//! Independent oracles for the exact solver: exhaustive vertex enumeration
//! on small instances, the sorted quantile coupling in one dimension, and
//! cross-checks between the dense and column-generation paths.

use wis_core::transport::{
    wasserstein_entropic, wasserstein_exact, wasserstein_exact_with, DiscreteMeasure,
    ExactOptions,
};
use wis_core::RngStream;

/// Exhaustive minimum over transport-polytope vertices by leaf peeling:
/// pick any (source, target) pair, ship the smaller remaining mass, drop
/// the exhausted side, recurse over all choices. Every vertex of the
/// polytope arises from some such sequence, so the minimum over sequences
/// is the optimum. Branch-and-bound on a per-source admissible bound plus
/// cheapest-first ordering keeps 6×6 instances fast. Entirely independent
/// of the simplex code.
fn brute_force_cost(supplies: &[f64], demands: &[f64], cost: &[Vec<f64>]) -> f64 {
    /// Each source's remaining mass ships at no less than its cheapest
    /// available rate (and symmetrically for targets).
    fn lower_bound(s: &[f64], d: &[f64], cost: &[Vec<f64>]) -> f64 {
        let mut by_source = 0.0;
        for i in 0..s.len() {
            if s[i] <= 0.0 {
                continue;
            }
            let mut cheapest = f64::INFINITY;
            for j in 0..d.len() {
                if d[j] > 0.0 {
                    cheapest = cheapest.min(cost[i][j]);
                }
            }
            if cheapest.is_finite() {
                by_source += s[i] * cheapest;
            }
        }
        let mut by_target = 0.0;
        for j in 0..d.len() {
            if d[j] <= 0.0 {
                continue;
            }
            let mut cheapest = f64::INFINITY;
            for i in 0..s.len() {
                if s[i] > 0.0 {
                    cheapest = cheapest.min(cost[i][j]);
                }
            }
            if cheapest.is_finite() {
                by_target += d[j] * cheapest;
            }
        }
        by_source.max(by_target)
    }
    fn go(
        s: &mut [f64],
        d: &mut [f64],
        cost: &[Vec<f64>],
        acc: f64,
        done_tol: f64,
        best: &mut f64,
    ) {
        let remaining: f64 = s.iter().filter(|v| **v > 0.0).sum();
        if remaining <= done_tol {
            if acc < *best {
                *best = acc;
            }
            return;
        }
        if acc + lower_bound(s, d, cost) >= *best {
            return;
        }
        // cheapest pairs first so good incumbents appear early
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for i in 0..s.len() {
            if s[i] <= 0.0 {
                continue;
            }
            for j in 0..d.len() {
                if d[j] > 0.0 {
                    pairs.push((i, j));
                }
            }
        }
        pairs.sort_by(|a, b| cost[a.0][a.1].partial_cmp(&cost[b.0][b.1]).unwrap());
        for (i, j) in pairs {
            // save/restore exactly: -= followed by += does not round-trip
            let (si, dj) = (s[i], d[j]);
            let m = si.min(dj);
            s[i] = si - m;
            d[j] = dj - m;
            go(s, d, cost, acc + m * cost[i][j], done_tol, best);
            s[i] = si;
            d[j] = dj;
        }
    }
    let total: f64 = supplies.iter().sum();
    let mut best = f64::INFINITY;
    go(
        &mut supplies.to_vec(),
        &mut demands.to_vec(),
        cost,
        0.0,
        1e-12 * total.max(1e-300),
        &mut best,
    );
    best
}

/// Second independent route: primal-dual min-cost flow by successive
/// shortest augmenting paths (Bellman–Ford on the residual network). A
/// different algorithm family from the tree simplex; exact for real masses.
fn successive_shortest_paths_cost(supplies: &[f64], demands: &[f64], cost: &[Vec<f64>]) -> f64 {
    let ns = supplies.len();
    let nt = demands.len();
    let mut s = supplies.to_vec();
    let mut d = demands.to_vec();
    let mut flow = vec![vec![0.0f64; nt]; ns];
    let mut total_cost = 0.0;
    loop {
        let remaining: f64 = s.iter().sum();
        if remaining <= 1e-12 * supplies.iter().sum::<f64>().max(1e-300) {
            return total_cost;
        }
        // Bellman–Ford over the residual graph: virtual origin feeds every
        // source with remaining supply at zero cost; forward arcs i→j cost
        // c_ij, backward arcs j→i cost -c_ij where flow is positive.
        let inf = f64::INFINITY;
        let mut dist_s = vec![inf; ns];
        let mut dist_t = vec![inf; nt];
        let mut pred_t = vec![usize::MAX; nt];
        let mut pred_s = vec![usize::MAX; ns];
        for i in 0..ns {
            if s[i] > 0.0 {
                dist_s[i] = 0.0;
            }
        }
        for _round in 0..(ns + nt + 1) {
            let mut changed = false;
            for i in 0..ns {
                if dist_s[i] == inf {
                    continue;
                }
                for j in 0..nt {
                    if dist_s[i] + cost[i][j] < dist_t[j] - 1e-15 {
                        dist_t[j] = dist_s[i] + cost[i][j];
                        pred_t[j] = i;
                        changed = true;
                    }
                }
            }
            for j in 0..nt {
                if dist_t[j] == inf {
                    continue;
                }
                for i in 0..ns {
                    if flow[i][j] > 0.0 && dist_t[j] - cost[i][j] < dist_s[i] - 1e-15 {
                        dist_s[i] = dist_t[j] - cost[i][j];
                        pred_s[i] = j;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        // cheapest reachable target with unmet demand
        let mut tgt = usize::MAX;
        for j in 0..nt {
            if d[j] > 1e-15 * demands[j].max(1e-300)
                && dist_t[j] < inf
                && (tgt == usize::MAX || dist_t[j] < dist_t[tgt])
            {
                tgt = j;
            }
        }
        assert!(tgt != usize::MAX, "no augmenting path but supply remains");
        // bottleneck along the path; origins are sources never relaxed
        // through a backward arc
        let mut bottleneck = d[tgt];
        let mut j = tgt;
        loop {
            let i = pred_t[j];
            if pred_s[i] == usize::MAX {
                debug_assert!(s[i] > 0.0);
                bottleneck = bottleneck.min(s[i]);
                break;
            }
            let back_j = pred_s[i];
            bottleneck = bottleneck.min(flow[i][back_j]);
            j = back_j;
        }
        // apply
        let mut j = tgt;
        loop {
            let i = pred_t[j];
            flow[i][j] += bottleneck;
            total_cost += bottleneck * cost[i][j];
            if pred_s[i] == usize::MAX {
                s[i] -= bottleneck;
                break;
            }
            let back_j = pred_s[i];
            flow[i][back_j] -= bottleneck;
            total_cost -= bottleneck * cost[i][back_j];
            j = back_j;
        }
        d[tgt] -= bottleneck;
    }
}

fn dist_p(a: &[f64], b: &[f64], p: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    d2.powf(0.5 * p)
}

fn random_measure(rng: &mut RngStream, dim: usize, atoms: usize, mass: f64) -> DiscreteMeasure {
    let coords: Vec<f64> = (0..atoms * dim).map(|_| rng.uniform_open()).collect();
    let mut masses: Vec<f64> = (0..atoms).map(|_| 0.05 + rng.uniform_open()).collect();
    let total: f64 = masses.iter().sum();
    for m in &mut masses {
        *m *= mass / total;
    }
    DiscreteMeasure::new(dim, coords, masses).unwrap()
}

#[test]
fn exact_solver_matches_exhaustive_enumeration() {
    // vertex enumeration is exponential, so it guards the smallest sizes
    let mut rng = RngStream::seed_from(2024);
    for trial in 0..40 {
        let dim = 1 + trial % 3;
        let ns = 2 + (trial % 3);
        let nt = 2 + ((trial * 7 + 1) % 3);
        let p = [1.0, 2.0, 3.0][trial % 3];
        let mu = random_measure(&mut rng, dim, ns, 1.0);
        let nu = random_measure(&mut rng, dim, nt, 1.0);
        let cost: Vec<Vec<f64>> = (0..ns)
            .map(|i| (0..nt).map(|j| dist_p(mu.point(i), nu.point(j), p)).collect())
            .collect();
        let brute = brute_force_cost(mu.masses(), nu.masses(), &cost);
        let solved = wasserstein_exact(&mu, &nu, p).unwrap();
        assert!(
            (solved.cost - brute).abs() <= 1e-9 * brute.max(1.0),
            "trial {trial}: simplex {} vs brute {brute}",
            solved.cost
        );
    }
}

#[test]
fn exact_solver_matches_shortest_path_lp() {
    // primal-dual augmenting paths: an independent exact LP route that
    // scales to the full six-per-side regime and beyond
    let mut rng = RngStream::seed_from(4096);
    for trial in 0..80 {
        let dim = 1 + trial % 3;
        let ns = 2 + (trial % 5);
        let nt = 2 + ((trial * 7 + 1) % 5);
        let p = [1.0, 2.0, 3.0][trial % 3];
        let mu = random_measure(&mut rng, dim, ns, 1.0);
        let nu = random_measure(&mut rng, dim, nt, 1.0);
        let cost: Vec<Vec<f64>> = (0..ns)
            .map(|i| (0..nt).map(|j| dist_p(mu.point(i), nu.point(j), p)).collect())
            .collect();
        let lp = successive_shortest_paths_cost(mu.masses(), nu.masses(), &cost);
        let solved = wasserstein_exact(&mu, &nu, p).unwrap();
        assert!(
            (solved.cost - lp).abs() <= 1e-9 * lp.max(1.0),
            "trial {trial}: simplex {} vs ssp {lp}",
            solved.cost
        );
    }
}

#[test]
fn forced_coupling_between_single_atoms() {
    let mu = DiscreteMeasure::new(1, vec![0.25], vec![1.0]).unwrap();
    let nu = DiscreteMeasure::new(1, vec![0.75], vec![1.0]).unwrap();
    let r = wasserstein_exact(&mu, &nu, 2.0).unwrap();
    assert!((r.cost - 0.25).abs() < 1e-15);
}

#[test]
fn two_by_two_diagonal_instance() {
    // both matchings cost 1.0 at p = 2; enumeration confirms
    let mu = DiscreteMeasure::new(2, vec![0.0, 0.0, 1.0, 1.0], vec![0.5, 0.5]).unwrap();
    let nu = DiscreteMeasure::new(2, vec![1.0, 0.0, 0.0, 1.0], vec![0.5, 0.5]).unwrap();
    let r = wasserstein_exact(&mu, &nu, 2.0).unwrap();
    assert!((r.cost - 1.0).abs() < 1e-12);
}

#[test]
fn identical_measures_cost_zero_identity_plan() {
    let mut rng = RngStream::seed_from(7);
    let mu = random_measure(&mut rng, 3, 40, 1.0);
    let r = wasserstein_exact(&mu, &mu, 2.0).unwrap();
    assert!(r.cost.abs() < 1e-12);
    let plan = r.plan.unwrap();
    for e in &plan {
        if e.mass > 0.0 {
            assert_eq!(e.from, e.to);
        }
    }
}

/// Quantile coupling: exact 1-d transport cost for convex powers of the
/// distance, by merging the two sorted atom lists.
fn sorted_coupling_cost_1d(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> f64 {
    let mut left: Vec<(f64, f64)> = (0..mu.len()).map(|i| (mu.point(i)[0], mu.mass(i))).collect();
    let mut right: Vec<(f64, f64)> = (0..nu.len()).map(|j| (nu.point(j)[0], nu.mass(j))).collect();
    left.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    right.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let (mut i, mut j) = (0, 0);
    let mut cost = 0.0;
    while i < left.len() && j < right.len() {
        let m = left[i].1.min(right[j].1);
        cost += m * (left[i].0 - right[j].0).abs().powf(p);
        left[i].1 -= m;
        right[j].1 -= m;
        if left[i].1 <= 1e-17 {
            i += 1;
        }
        if j < right.len() && right[j].1 <= 1e-17 {
            j += 1;
        }
    }
    cost
}

#[test]
fn one_dimensional_costs_match_quantile_coupling() {
    let mut rng = RngStream::seed_from(31);
    for trial in 0..30 {
        let p = [1.0, 2.0, 4.0][trial % 3];
        let mu = random_measure(&mut rng, 1, 3 + trial % 30, 1.0);
        let nu = random_measure(&mut rng, 1, 3 + (trial * 3) % 30, 1.0);
        let oracle = sorted_coupling_cost_1d(&mu, &nu, p);
        let solved = wasserstein_exact(&mu, &nu, p).unwrap();
        assert!(
            (solved.cost - oracle).abs() <= 1e-9 * oracle.max(1e-9),
            "trial {trial} p={p}: {} vs {oracle}",
            solved.cost
        );
    }
}

#[test]
fn sparse_path_agrees_with_dense_path() {
    let mut rng = RngStream::seed_from(99);
    for trial in 0..10 {
        let p = [1.0, 2.0][trial % 2];
        let mu = random_measure(&mut rng, 2, 60, 1.0);
        let nu = random_measure(&mut rng, 2, 230, 1.0);
        let dense = wasserstein_exact(&mu, &nu, p).unwrap();
        let sparse = wasserstein_exact_with(
            &mu,
            &nu,
            p,
            &ExactOptions {
                dense_arc_limit: 64,
                ..ExactOptions::default()
            },
        )
        .unwrap();
        assert!(
            (dense.cost - sparse.cost).abs() <= 1e-9 * dense.cost.max(1e-12),
            "trial {trial}: dense {} sparse {}",
            dense.cost,
            sparse.cost
        );
    }
}

#[test]
fn plan_marginals_match_inputs() {
    let mut rng = RngStream::seed_from(55);
    let mu = random_measure(&mut rng, 2, 25, 2.5);
    let nu = random_measure(&mut rng, 2, 35, 2.5);
    let r = wasserstein_exact(&mu, &nu, 2.0).unwrap();
    assert!(r.gap <= 1e-9);
    let plan = r.plan.unwrap();
    let mut row = vec![0.0; mu.len()];
    let mut col = vec![0.0; nu.len()];
    for e in &plan {
        row[e.from] += e.mass;
        col[e.to] += e.mass;
        assert!(e.mass > 0.0);
    }
    for i in 0..mu.len() {
        assert!((row[i] - mu.mass(i)).abs() <= 1e-9 * mu.mass(i));
    }
    for j in 0..nu.len() {
        assert!((col[j] - nu.mass(j)).abs() <= 1e-9 * nu.mass(j));
    }
    // cost equals the plan's own tally
    let tally: f64 = plan
        .iter()
        .map(|e| e.mass * dist_p(mu.point(e.from), nu.point(e.to), 2.0))
        .sum();
    assert!((tally - r.cost).abs() <= 1e-12 * r.cost.max(1.0));
}

#[test]
fn unbalanced_inputs_are_rejected() {
    let mu = DiscreteMeasure::new(1, vec![0.5], vec![1.0]).unwrap();
    let nu = DiscreteMeasure::new(1, vec![0.5], vec![1.5]).unwrap();
    assert!(wasserstein_exact(&mu, &nu, 2.0).is_err());
}

#[test]
fn size_cap_suggests_entropic() {
    let mut rng = RngStream::seed_from(3);
    let mu = random_measure(&mut rng, 1, 30, 1.0);
    let nu = random_measure(&mut rng, 1, 30, 1.0);
    let err = wasserstein_exact_with(
        &mu,
        &nu,
        1.0,
        &ExactOptions {
            size_cap: 10,
            ..ExactOptions::default()
        },
    )
    .unwrap_err();
    let msg = format!("{err}");
    assert!(msg.contains("entropic"), "{msg}");
}

#[test]
fn entropic_tracks_exact_within_five_percent() {
    let mut rng = RngStream::seed_from(123);
    let mu = random_measure(&mut rng, 2, 50, 1.0);
    let nu = random_measure(&mut rng, 2, 50, 1.0);
    for p in [1.0, 2.0] {
        let exact = wasserstein_exact(&mu, &nu, p).unwrap();
        let approx = wasserstein_entropic(&mu, &nu, p, 1e-3, 20_000).unwrap();
        let rel = (approx.cost - exact.cost).abs() / exact.cost;
        assert!(rel <= 0.05, "p={p}: rel error {rel}");
        // feasible-plan cost upper-bounds the optimum
        assert!(approx.cost >= exact.cost - 1e-9 * exact.cost);
    }
}

#[test]
fn entropic_error_shrinks_with_epsilon() {
    let mut rng = RngStream::seed_from(321);
    let mu = random_measure(&mut rng, 2, 40, 1.0);
    let nu = random_measure(&mut rng, 2, 40, 1.0);
    let exact = wasserstein_exact(&mu, &nu, 2.0).unwrap().cost;
    let mut errors = Vec::new();
    for eps in [1e-1, 1e-2, 1e-3] {
        let approx = wasserstein_entropic(&mu, &nu, 2.0, eps, 40_000).unwrap();
        errors.push((approx.cost - exact).abs());
    }
    assert!(errors[0] >= errors[1] - 1e-12);
    assert!(errors[1] >= errors[2] - 1e-12);
}
