use std::fmt::Write;

use slcurv_core::hgeom::{fermi_embed, poincare_project};
use slcurv_core::shape::ShapeField;
use slcurv_core::GraphFn;

pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Per-node curvature table. Rows follow `field.nodes`; `ring_only` marks a
/// rotational profile whose records are indexed by ring.
pub fn curvature_csv(f: &GraphFn, field: &ShapeField, ring_only: bool) -> String {
    let grid = f.grid();
    let mut out = String::from("j,k,lambda_min,lambda_max,H,rhat_theta,residual,admissible\n");
    for node in &field.nodes {
        let (j, k) = if ring_only { (node.index, 0) } else { (node.index / grid.nalpha(), node.index % grid.nalpha()) };
        let rhat = node.rhat_theta.map(fmt_float).unwrap_or_default();
        let _ = writeln!(
            out,
            "{j},{k},{},{},{},{rhat},{},{}",
            fmt_float(node.lambda_min()),
            fmt_float(node.lambda_max()),
            fmt_float(node.mean),
            fmt_float(node.residual),
            node.admissible
        );
    }
    out
}

/// Wavefront OBJ of the graph surface in Poincaré ball coordinates. The
/// innermost ring is closed with a fan around a center vertex whose height
/// is the ring mean.
pub fn obj_mesh(f: &GraphFn) -> String {
    let grid = f.grid();
    let (ns, na) = (grid.ns(), grid.nalpha());
    let vals = f.values();
    let mut out = String::from("# slcurv graph surface, Poincare ball coordinates\n");
    let center = (0..na).map(|k| vals[grid.index(0, k)]).sum::<f64>() / na as f64;
    let mut vertex = |s: f64, a: f64, t: f64| {
        let p = poincare_project(&fermi_embed(s, a, t));
        let _ = writeln!(out, "v {} {} {}", fmt_float(p[0]), fmt_float(p[1]), fmt_float(p[2]));
    };
    vertex(0.0, 0.0, center);
    for node in grid.nodes() {
        vertex(node.s, node.alpha, vals[node.index]);
    }
    // OBJ indices are 1-based; the center is vertex 1.
    let v = |j: usize, k: usize| grid.index(j, k % na) + 2;
    for k in 0..na {
        let _ = writeln!(out, "f 1 {} {}", v(0, k), v(0, k + 1));
    }
    for j in 0..ns {
        for k in 0..na {
            let _ = writeln!(out, "f {} {} {}", v(j, k), v(j + 1, k), v(j + 1, k + 1));
            let _ = writeln!(out, "f {} {} {}", v(j, k), v(j + 1, k + 1), v(j, k + 1));
        }
    }
    out
}
