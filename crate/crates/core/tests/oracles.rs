use std::f64::consts::FRAC_PI_2;

use slcurv_core::convexops::{min_combine, mollify, weak_curvature_lb, weak_curvature_lb_masked, MollifyConfig};
use slcurv_core::diag::{max_principle_check, subharmonic_probe};
use slcurv_core::hgeom::{umbilic_cap, UmbilicCap};
use slcurv_core::radial::profile_shape;
use slcurv_core::shape::{delta_b, laplace_beltrami, laplacian_b, shape_at_values, shape_field, shape_field_values};
use slcurv_core::slcalc::r_theta;
use slcurv_core::solver::{continuity_solve, jacobian, newton_solve, SolveConfig};
use slcurv_core::{CurvatureQuery, DomainSpec, Error, GraphFn, Grid};

fn disk(ns: usize, na: usize) -> Grid {
    Grid::new(DomainSpec::disk(1.0).unwrap(), ns, na).unwrap()
}

fn query(theta: f64, rhat: f64) -> CurvatureQuery {
    CurvatureQuery::from_rhat(2, theta, rhat).unwrap()
}

fn eig_error(g: &Grid, values: &[f64], exact: f64) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..g.n_interior() {
        for l in shape_at_values(g, values, i).unwrap().eigenvalues().unwrap() {
            worst = worst.max((l - exact).abs());
        }
    }
    worst
}

#[test]
fn constant_slice_converges_at_second_order() {
    let t = 1f64.tanh();
    let coarse = disk(32, 64);
    let fine = disk(64, 128);
    let e0 = eig_error(&coarse, &vec![1.0; coarse.len()], t);
    let e1 = eig_error(&fine, &vec![1.0; fine.len()], t);
    let ratio = e0 / e1;
    assert!((3.2..=5.0).contains(&ratio), "errors {e0:e} {e1:e}");
}

#[test]
fn cap_curvature_converges_at_second_order() {
    let lambda = 1f64.tanh();
    let errs: Vec<f64> = [(32, 64), (64, 128)]
        .iter()
        .map(|&(ns, na)| {
            let g = disk(ns, na);
            let f = umbilic_cap(lambda, &g).unwrap();
            eig_error(&g, f.values(), lambda)
        })
        .collect();
    let order = (errs[0] / errs[1]).log2();
    assert!((1.7..=2.3).contains(&order), "errors {errs:?}");
}

#[test]
fn caps_are_ordered_on_the_grid() {
    let g = disk(32, 64);
    let lo = umbilic_cap(0.3, &g).unwrap();
    let hi = umbilic_cap(0.6, &g).unwrap();
    for (a, b) in lo.values().iter().zip(hi.values()) {
        assert!(b >= a);
    }
    for i in 0..g.len() {
        if g.is_boundary(i) {
            assert_eq!(hi.values()[i], 0.0);
        }
    }
}

#[test]
fn rotated_data_gives_rotated_curvature() {
    let g = disk(24, 48);
    let f = umbilic_cap(0.5, &g).unwrap();
    for j in 0..g.ns() {
        let e0 = shape_at_values(&g, f.values(), g.index(j, 0)).unwrap().eigenvalues().unwrap();
        for k in 1..g.nalpha() {
            let e = shape_at_values(&g, f.values(), g.index(j, k)).unwrap().eigenvalues().unwrap();
            assert!((e[0] - e0[0]).abs() <= 1e-8 && (e[1] - e0[1]).abs() <= 1e-8, "ring {j} column {k}");
        }
    }
}

#[test]
fn radial_n3_matches_gauss_over_mean() {
    let g = disk(32, 64);
    let f = umbilic_cap(0.4, &g).unwrap();
    let profile: Vec<f64> = (0..=g.ns()).map(|j| f.values()[g.index(j, 0)]).collect();
    let tilt = GraphFn::from_fn(g.clone(), |n| 0.3 * (1.0 - n.s * n.s) + 0.1 * (1.0 - n.s.powi(4))).unwrap();
    let tilted: Vec<f64> = (0..=g.ns()).map(|j| tilt.values()[g.index(j, 0)]).collect();
    for p in [&profile, &tilted] {
        for j in 0..g.ns() {
            let a = profile_shape(&g, p, j, 3).unwrap();
            let l = a.eigenvalues().unwrap();
            if l[0] <= 0.0 {
                continue;
            }
            let r = r_theta(&a, std::f64::consts::PI).unwrap().r;
            let det: f64 = l.iter().product();
            assert!((r * r - det / a.trace()).abs() <= 1e-8 * (det / a.trace()), "ring {j}");
        }
    }
}

#[test]
fn slice_curvature_obeys_the_riccati_equation() {
    // Richardson extrapolation over two lattices sharing the evaluation point.
    let lattices = [(50, 200, 25), (151, 600, 76)];
    let t = 0.7;
    let dt = 1e-4;
    let defect: Vec<Vec<f64>> = lattices
        .iter()
        .map(|&(ns, na, j)| {
            let g = disk(ns, na);
            let eig = |t: f64| shape_at_values(&g, &vec![t; g.len()], g.index(j, 0)).unwrap().eigenvalues().unwrap();
            let (lm, l0, lp) = (eig(t - dt), eig(t), eig(t + dt));
            (0..2).map(|i| (lp[i] - lm[i]) / (2.0 * dt) - (1.0 - l0[i] * l0[i])).collect()
        })
        .collect();
    for i in 0..2 {
        let extrapolated = (9.0 * defect[1][i] - defect[0][i]) / 8.0;
        assert!(extrapolated.abs() <= 1e-6, "{defect:?}");
    }
}

#[test]
fn flat_graph_laplacian_is_hyperbolic() {
    let q = query(2.0, 0.5);
    let mut errs = Vec::new();
    for (ns, na) in [(32, 64), (64, 128)] {
        let g = disk(ns, na);
        let f = GraphFn::zeros(g.clone());
        let phi: Vec<f64> = g.nodes().map(|n| 0.5 * n.s * n.s).collect();
        let lap = laplacian_b(&f, &q, &phi).unwrap();
        let mut worst = 0.0f64;
        for node in g.nodes() {
            if let Some(&Some(v)) = lap.get(node.index) {
                let s = node.s;
                worst = worst.max((v - (1.0 + s / s.tanh())).abs());
            }
        }
        errs.push(worst);
    }
    assert!(errs[1] < errs[0] / 3.0 && errs[1] < 1e-3, "{errs:?}");
}

#[test]
fn umbilic_delta_b_is_a_scaled_laplacian() {
    let g = disk(32, 64);
    let lambda = 0.5;
    let q = query(2.0, lambda);
    let f = umbilic_cap(lambda, &g).unwrap();
    let phi: Vec<f64> = g.nodes().map(|n| n.s.cosh() + 0.2 * n.alpha.cos() * n.s).collect();
    let scale = 1.0 / (1.0 + (lambda / q.r()).powi(2));
    let db = delta_b(&f, &q, &phi).unwrap();
    let lb = laplace_beltrami(&f, &phi).unwrap();
    let h2 = g.h() * g.h();
    for (a, b) in db.iter().zip(&lb) {
        if let (Some(a), Some(b)) = (a, b) {
            assert!((a - scale * b).abs() <= 10.0 * h2 * b.abs().max(1.0), "{a} vs {}", scale * b);
        }
    }
    assert!(delta_b(&f, &q, &vec![2.5; g.len()]).unwrap().iter().flatten().all(|v| v.abs() < 1e-9));
}

#[test]
fn jacobian_matches_directional_differences() {
    let g = disk(16, 32);
    let q = query(2.0, 0.6);
    let f = umbilic_cap(0.6, &g).unwrap();
    let jac = jacobian(&f, &q, &SolveConfig::default()).unwrap();
    let n = g.n_interior();
    let jv = jac.matvec(&vec![1.0; n]);
    let eps = 1e-6;
    let shifted = |e: f64| {
        let mut v = f.values().to_vec();
        v[..n].iter_mut().for_each(|x| *x += e);
        shape_field_values(&g, &v, &q).unwrap().residuals()
    };
    let (rp, rm) = (shifted(eps), shifted(-eps));
    for i in 0..n {
        let fd = (rp[i] - rm[i]) / (2.0 * eps);
        assert!((jv[i] - fd).abs() <= 1e-4 * fd.abs().max(1e-2), "row {i}: {} vs {fd}", jv[i]);
    }
    for &(row, col, _) in jac.entries() {
        assert!(g.stencil9(row).contains(&col), "({row}, {col})");
    }
}

#[test]
fn newton_from_exact_cap_stops_early() {
    let g = disk(32, 64);
    let q = query(2.0, 0.6);
    let (_, stats) = newton_solve(&umbilic_cap(0.6, &g).unwrap(), &q, &SolveConfig::default()).unwrap();
    assert!(stats.converged());
    assert!(stats.iters <= 2, "{}", stats.iters);
}

#[test]
fn newton_from_a_higher_cap_converges_quickly() {
    let g = disk(64, 128);
    let q = query(FRAC_PI_2, 0.6);
    let (f, stats) = newton_solve(&umbilic_cap(0.65, &g).unwrap(), &q, &SolveConfig::default()).unwrap();
    assert!(stats.converged());
    assert!(stats.iters <= 10, "{}", stats.iters);
    assert!(*stats.res_inf.last().unwrap() <= 1e-8);
    assert!(shape_field(&f, &q).unwrap().residual_sup() <= 1e-8);
}

#[test]
fn dented_start_fails_loudly_or_recovers() {
    let g = disk(32, 64);
    let q = query(2.0, 0.6);
    let cap = UmbilicCap::new(0.6, 1.0).unwrap();
    let f0 = GraphFn::from_fn(g.clone(), |n| {
        let dent = 0.25 * (-((n.s - 0.4).powi(2)) / 0.01).exp() * (1.0 + n.alpha.cos()) / 2.0;
        (cap.height(n.s).unwrap() - dent).max(0.0)
    })
    .unwrap();
    assert!(shape_field(&f0, &q).unwrap().min_lambda1() < 0.0);
    match newton_solve(&f0, &q, &SolveConfig::default()) {
        Ok((f, stats)) => {
            assert!(f.values().iter().all(|v| v.is_finite()));
            if stats.converged() {
                assert!(shape_field(&f, &q).unwrap().all_admissible());
            }
        }
        Err(e) => assert!(matches!(e, Error::Inadmissible(_)), "{e}"),
    }
}

#[test]
fn trivial_continuation_returns_the_discrete_cap() {
    let g = disk(32, 64);
    let q = query(2.0, 0.05);
    let mut cfg = SolveConfig::default();
    cfg.homotopy.rhat_start = 0.05;
    let out = continuity_solve(&g, &q, &cfg).unwrap();
    assert!(out.report.converged);
    assert_eq!(out.report.levels.len(), 1);
    let (direct, _) = newton_solve(&umbilic_cap(0.05, &g).unwrap(), &q, &cfg).unwrap();
    assert!(out.f.sup_diff(&direct).unwrap() <= 1e-10);
}

#[test]
fn star_solution_is_sandwiched_by_caps() {
    let dom = DomainSpec::star(1.0, vec![(2, 0.1)]).unwrap();
    let g = Grid::new(dom.clone(), 32, 64).unwrap();
    let q = query(2.0, 0.5);
    let out = continuity_solve(&g, &q, &SolveConfig::default()).unwrap();
    assert!(out.report.converged && out.report.ordering_ok());
    let inner = UmbilicCap::new(0.5, dom.rho_min()).unwrap();
    let outer = UmbilicCap::new(0.5, dom.rho_max()).unwrap();
    let band = 2.0 * g.h() * g.h();
    for node in g.nodes() {
        let f = out.f.values()[node.index];
        let lo = inner.height(node.s).unwrap_or(0.0).max(0.0);
        let hi = outer.height(node.s).unwrap();
        assert!(lo <= f + 1e-12 && f <= hi + band, "node {}: {lo} {f} {hi}", node.index);
    }
}

#[test]
fn max_principle_examples() {
    let g = disk(32, 64);
    let q = query(2.0, 0.5);
    let lo = umbilic_cap(0.3, &g).unwrap();
    let hi = umbilic_cap(0.6, &g).unwrap();
    let v = max_principle_check(&lo, &hi, &q, 1e-9).unwrap();
    assert!(v.pass && v.witnesses.is_empty());
    let same = max_principle_check(&hi, &hi, &q, 1e-12).unwrap();
    assert!(same.pass);
    assert_eq!(same.worst_slack(), Some(0.0));
    assert!(matches!(max_principle_check(&hi, &lo, &q, 1e-9), Err(Error::Ordering { .. })));
}

#[test]
fn subharmonic_probe_on_caps_and_flat_graphs() {
    let g = disk(32, 64);
    let q = query(2.0, 0.5);
    let rep = subharmonic_probe(&umbilic_cap(0.5, &g).unwrap(), &q, 1e-6).unwrap();
    assert!(rep.sup_abs_laplacian <= 5.0 * g.h() * g.h(), "{}", rep.sup_abs_laplacian);
    assert!(matches!(subharmonic_probe(&GraphFn::zeros(g), &q, 1e-6), Err(Error::Inadmissible(_))));
}

#[test]
fn weak_bound_examples() {
    let g = disk(32, 64);
    let q = query(FRAC_PI_2, 0.3);
    let h2 = g.h() * g.h();
    let cap = umbilic_cap(0.6, &g).unwrap();
    let lb = weak_curvature_lb(&cap, &q).unwrap();
    assert!(lb <= 0.6 + 1e-3 && lb >= 0.6 - 10.0 * h2, "{lb}");
    assert_eq!(weak_curvature_lb(&GraphFn::zeros(g.clone()), &q).unwrap(), 0.0);
    let low = umbilic_cap(0.3, &g).unwrap();
    let m = min_combine(&low, &cap).unwrap();
    let lb = weak_curvature_lb_masked(&m, &q, None).unwrap();
    assert!((lb - 0.3).abs() <= 10.0 * h2, "{lb}");
}

#[test]
fn mollifying_a_smooth_graph_costs_eps_squared() {
    let g = disk(64, 128);
    let f = umbilic_cap(0.5, &g).unwrap();
    let errs: Vec<f64> = [0.2, 0.1]
        .iter()
        .map(|&eps| {
            let m = mollify(&f, &MollifyConfig::new(eps)).unwrap();
            m.sup_diff(&f).unwrap()
        })
        .collect();
    let ratio = errs[0] / errs[1];
    assert!((3.0..=5.0).contains(&ratio), "{errs:?}");
}
