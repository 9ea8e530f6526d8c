//! Pointwise minima and mollification of graph functions.
//!
//! The mollifier averages `f` over hyperbolic geodesic balls of the base
//! plane with a smooth radial bump against the area element `sinh u du dφ`
//! of geodesic polar coordinates about each node. Near `∂Ω` the radius shrinks smoothly,
//! `ε_p = ε·χ(d_p / L)` with `χ(x) = 1 − (1 − x)³` on `[0, 1]`, so the ball
//! never leaves the domain and boundary values stay at zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GraphFn, Grid};
use crate::hgeom::{base_point, DomainKind};
use crate::par;
use crate::radial;
use crate::shape::shape_field;
use crate::slcalc::CurvatureQuery;

/// Nodewise minimum of two graph functions on the same grid.
pub fn min_combine(f1: &GraphFn, f2: &GraphFn) -> Result<GraphFn> {
    if f1.grid().desc() != f2.grid().desc() {
        return Err(Error::GridMismatch);
    }
    let values = f1.values().iter().zip(f2.values()).map(|(a, b)| a.min(*b)).collect();
    GraphFn::new(f1.grid().clone(), values)
}

/// Interior nodes within `cells` lattice steps of a node where the smaller
/// of `f1`, `f2` changes between stencil neighbours.
pub fn crease_band(f1: &GraphFn, f2: &GraphFn, cells: usize) -> Result<Vec<bool>> {
    let grid = f1.grid();
    if grid.desc() != f2.grid().desc() {
        return Err(Error::GridMismatch);
    }
    let n = grid.n_interior();
    let side: Vec<bool> = f1.values().iter().zip(f2.values()).map(|(a, b)| a <= b).collect();
    let mut mask: Vec<bool> =
        (0..n).map(|i| grid.stencil9(i).iter().any(|&c| c < n && side[c] != side[i])).collect();
    for _ in 0..cells {
        let prev = mask.clone();
        for (i, m) in mask.iter_mut().enumerate() {
            if !*m {
                *m = grid.stencil9(i).iter().any(|&c| c < n && prev[c]);
            }
        }
    }
    Ok(mask)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollifyConfig {
    /// Kernel radius in base geodesic length.
    pub eps: f64,
    /// Width `L` of the layer along `∂Ω` where the radius tapers to zero;
    /// must be at least `3ε`.
    pub layer: f64,
}

impl MollifyConfig {
    /// Radius `eps` with the narrowest admissible layer `3ε`.
    pub fn new(eps: f64) -> Self {
        Self { eps, layer: 3.0 * eps }
    }

    pub fn with_layer(eps: f64, layer: f64) -> Self {
        Self { eps, layer }
    }

    fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.eps >= 2.0 * grid.h()) {
            return Err(Error::Mollifier(format!("eps {} below 2h = {}", self.eps, 2.0 * grid.h())));
        }
        if !(self.layer >= 3.0 * self.eps) || !self.layer.is_finite() {
            return Err(Error::Mollifier(format!("boundary layer {} below 3·eps", self.layer)));
        }
        Ok(())
    }
}

/// Radial profile: `1` on `[0, ½]`, `0` from `1` on, smooth in between.
pub fn bump(t: f64) -> f64 {
    fn h(x: f64) -> f64 {
        if x > 0.0 {
            (-1.0 / x).exp()
        } else {
            0.0
        }
    }
    if t <= 0.5 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let a = h(1.0 - t);
        a / (a + h(t - 0.5))
    }
}

fn taper(x: f64) -> f64 {
    let y = (1.0 - x.clamp(0.0, 1.0)).powi(3);
    1.0 - y
}

/// Approximate geodesic distance from an interior node to `∂Ω`.
fn boundary_distance(grid: &Grid, index: usize) -> f64 {
    let node = grid.node(index);
    let dom = grid.domain();
    let rho = dom.radius(node.alpha);
    match dom.kind {
        DomainKind::Disk => rho - node.s,
        DomainKind::Star => {
            let da = 1e-5;
            let drho = (dom.radius(node.alpha + da) - dom.radius(node.alpha - da)) / (2.0 * da);
            (rho - node.s) / (1.0 + (drho / rho).powi(2)).sqrt()
        }
    }
}

/// Radial and angular sample counts of the ball quadrature.
const QUAD_RADIAL: usize = 24;
const QUAD_ANGULAR: usize = 64;

/// Bilinear interpolation weights of the lattice point `(σ, α)`. Below the
/// first ring the lower neighbour is the first ring across the center.
fn bilinear(grid: &Grid, sigma: f64, alpha: f64, mut emit: impl FnMut(usize, f64)) {
    let na = grid.nalpha();
    let jf = (sigma / grid.dsigma() - 0.5).clamp(-1.0, grid.ns() as f64);
    let j0 = (jf.floor() as i64).min(grid.ns() as i64 - 1);
    let tj = jf - j0 as f64;
    let kf = alpha.rem_euclid(std::f64::consts::TAU) / grid.dalpha();
    let k0 = kf.floor() as usize;
    let tk = kf - k0 as f64;
    let ring = |j: i64, k: usize| {
        if j < 0 {
            grid.index(0, (k + na / 2) % na)
        } else {
            grid.index(j as usize, k % na)
        }
    };
    for (j, wj) in [(j0, 1.0 - tj), (j0 + 1, tj)] {
        for (k, wk) in [(k0, 1.0 - tk), (k0 + 1, tk)] {
            let w = wj * wk;
            if w > 0.0 {
                emit(ring(j, k), w);
            }
        }
    }
}

/// Normalized kernel weights `(node, w)` at an interior node, sorted by node.
///
/// The ball integral is taken with a fixed midpoint rule in geodesic polar
/// coordinates about the node; `f` is sampled by bilinear interpolation, so
/// every weight is nonnegative.
pub fn kernel_weights(grid: &Grid, cfg: &MollifyConfig, index: usize) -> Vec<(usize, f64)> {
    let eps_p = cfg.eps * taper(boundary_distance(grid, index) / cfg.layer);
    if eps_p <= 0.0 {
        return vec![(index, 1.0)];
    }
    let node = grid.node(index);
    let dom = grid.domain();
    let p = base_point(node.s, node.alpha);
    let (sa, ca) = node.alpha.sin_cos();
    let (sh, ch) = (node.s.sinh(), node.s.cosh());
    let e1 = [sh, ch * ca, ch * sa, 0.0];
    let e2 = [0.0, -sa, ca, 0.0];
    let du = eps_p / QUAD_RADIAL as f64;
    let dphi = std::f64::consts::TAU / QUAD_ANGULAR as f64;
    let mut acc: Vec<(usize, f64)> = Vec::with_capacity(4 * QUAD_RADIAL * QUAD_ANGULAR);
    for iu in 0..QUAD_RADIAL {
        let u = (iu as f64 + 0.5) * du;
        let wu = bump(u / eps_p) * u.sinh() * du * dphi;
        if wu <= 0.0 {
            continue;
        }
        let (cu, su) = (u.cosh(), u.sinh());
        for ip in 0..QUAD_ANGULAR {
            let (sp, cp) = (ip as f64 * dphi).sin_cos();
            let x: [f64; 4] = std::array::from_fn(|m| cu * p[m] + su * (cp * e1[m] + sp * e2[m]));
            let s = x[0].max(1.0).acosh();
            let alpha = x[2].atan2(x[1]);
            bilinear(grid, dom.sigma_of(s, alpha), alpha, |q, w| acc.push((q, wu * w)));
        }
    }
    acc.sort_by_key(|e| e.0);
    let mut out: Vec<(usize, f64)> = Vec::new();
    for (q, w) in acc {
        match out.last_mut() {
            Some(last) if last.0 == q => last.1 += w,
            _ => out.push((q, w)),
        }
    }
    let total: f64 = out.iter().map(|p| p.1).sum();
    out.iter_mut().for_each(|p| p.1 /= total);
    out
}

/// Mollified graph function; boundary nodes keep the value `0`.
pub fn mollify(f: &GraphFn, cfg: &MollifyConfig) -> Result<GraphFn> {
    let grid = f.grid();
    cfg.validate(grid)?;
    let vals = f.values();
    let mut out = par::map_indexed(grid.n_interior(), |i| {
        kernel_weights(grid, cfg, i).iter().map(|&(q, w)| w * vals[q]).sum::<f64>()
    });
    out.resize(grid.len(), 0.0);
    GraphFn::new(grid.clone(), out)
}

/// Smallest `r̂_θ` over strictly convex interior nodes, `0` if there are none.
pub fn weak_curvature_lb(f: &GraphFn, q: &CurvatureQuery) -> Result<f64> {
    weak_curvature_lb_masked(f, q, None)
}

/// [`weak_curvature_lb`] ignoring interior nodes flagged in `exclude`.
pub fn weak_curvature_lb_masked(f: &GraphFn, q: &CurvatureQuery, exclude: Option<&[bool]>) -> Result<f64> {
    let field = if q.n() == 2 {
        shape_field(f, q)?
    } else {
        radial::profile_field(f.grid(), &radial::profile_of(f), q)?
    };
    let lb = field
        .nodes
        .iter()
        .filter(|n| exclude.map_or(true, |m| !m[n.index]))
        .filter_map(|n| n.rhat_theta)
        .fold(f64::INFINITY, f64::min);
    Ok(if lb.is_finite() { lb } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hgeom::{umbilic_cap, DomainSpec};

    fn disk(ns: usize, na: usize) -> Grid {
        Grid::new(DomainSpec::disk(1.0).unwrap(), ns, na).unwrap()
    }

    #[test]
    fn bump_shape() {
        assert_eq!(bump(0.3), 1.0);
        assert_eq!(bump(1.2), 0.0);
        let xs: Vec<f64> = (0..=50).map(|i| bump(0.5 + i as f64 / 100.0)).collect();
        assert!(xs.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn min_combine_examples() {
        let g = disk(16, 32);
        let a = umbilic_cap(0.3, &g).unwrap();
        let b = umbilic_cap(0.6, &g).unwrap();
        assert_eq!(min_combine(&a, &a).unwrap(), a);
        assert_eq!(min_combine(&a, &b).unwrap(), a);
        let z = GraphFn::zeros(g);
        assert_eq!(min_combine(&b, &z).unwrap(), z);
    }

    #[test]
    fn weights_are_normalized_positive_and_local() {
        let g = disk(32, 64);
        let cfg = MollifyConfig::with_layer(0.1, 0.4);
        for i in (0..g.n_interior()).step_by(101) {
            let w = kernel_weights(&g, &cfg, i);
            let total: f64 = w.iter().map(|p| p.1).sum();
            assert!((total - 1.0).abs() < 1e-12);
            let (sp, ap) = (g.s(i), g.node(i).alpha);
            for &(q, wq) in &w {
                assert!(wq > 0.0);
                let (sq, aq) = (g.s(q), g.node(q).alpha);
                let c = sp.cosh() * sq.cosh() - sp.sinh() * sq.sinh() * (aq - ap).cos();
                let cell = g.h() + 1f64.sinh() * g.dalpha();
                assert!(c.max(1.0).acosh() <= cfg.eps + cell, "node {i} reaches {q}");
            }
        }
    }

    #[test]
    fn constants_are_preserved_and_small_eps_rejected() {
        let g = disk(32, 64);
        let f = GraphFn::from_fn(g.clone(), |_| 0.2).unwrap();
        let cfg = MollifyConfig::with_layer(0.1, 0.4);
        let m = mollify(&f, &cfg).unwrap();
        let mut full = 0;
        for i in 0..g.n_interior() {
            if kernel_weights(&g, &cfg, i).iter().all(|&(q, _)| !g.is_boundary(q)) {
                assert!((m.values()[i] - 0.2).abs() < 1e-14, "node {i}");
                full += 1;
            }
        }
        assert!(full > g.n_interior() / 2);
        assert!(mollify(&f, &MollifyConfig::new(g.h())).is_err());
        assert!(mollify(&f, &MollifyConfig::with_layer(0.1, 0.2)).is_err());
    }

    #[test]
    fn flat_graph_has_zero_bound() {
        let g = disk(16, 32);
        let q = CurvatureQuery::from_rhat(2, 2.0, 0.5).unwrap();
        assert_eq!(weak_curvature_lb(&GraphFn::zeros(g), &q).unwrap(), 0.0);
    }
}
