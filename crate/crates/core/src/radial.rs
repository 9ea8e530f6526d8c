//! Rotationally symmetric graphs `f = f(s)` over a disk, any dimension.
//!
//! The profile lives on the rings of a disk [`Grid`]; values are read from
//! the `k = 0` column. Along the profile the surface is differenced in `σ`
//! only, while the rotation direction is differentiated exactly, so the
//! shape operator is `diag(κ_s, κ_rot, …, κ_rot)` with `n − 1` copies of the
//! rotational curvature.

use crate::error::{Error, Result};
use crate::grid::{GraphFn, Grid};
use crate::ad::Real;
use crate::hgeom::DomainKind;
use crate::par;
use crate::shape::{embed_r, node_record, unit_normal_r, ShapeField};
use crate::slcalc::{CurvatureQuery, SymMat};

fn check_disk(grid: &Grid) -> Result<()> {
    if grid.domain().kind != DomainKind::Disk {
        return Err(Error::Domain("rotational profiles need a disk domain".into()));
    }
    Ok(())
}

/// Profile values `u_0, …, u_{Ns}` (boundary last) of a graph function.
pub fn profile_of(f: &GraphFn) -> Vec<f64> {
    let g = f.grid();
    (0..=g.ns()).map(|j| f.values()[g.index(j, 0)]).collect()
}

/// Copies a ring profile onto every angle of the lattice.
pub fn broadcast(grid: &Grid, profile: &[f64]) -> Result<GraphFn> {
    check_disk(grid)?;
    if profile.len() != grid.ns() + 1 {
        return Err(Error::Graph(format!("profile has {} values, grid has {} rings", profile.len(), grid.ns() + 1)));
    }
    let values = grid.nodes().map(|n| profile[n.j]).collect();
    GraphFn::new(grid.clone(), values)
}

/// Principal curvatures `(κ_s, κ_rot)` at a ring with radius `s0`, from
/// the heights `fm, f0, fp` at the ring and its neighbours (`s0 ∓ Δs`).
pub(crate) fn ring_curvatures<T: Real>(s: [f64; 3], f: [T; 3], ds: f64, ring: usize) -> Result<[T; 2]> {
    let xm = embed_r(s[0], 0.0, f[0]);
    let x0 = embed_r(s[1], 0.0, f[1]);
    let xp = embed_r(s[2], 0.0, f[2]);
    let t_s: [T; 4] = std::array::from_fn(|i| (xp[i] - xm[i]) * (0.5 / ds));
    let x_ss: [T; 4] = std::array::from_fn(|i| (xp[i] - x0[i] * 2.0 + xm[i]) * (1.0 / (ds * ds)));
    // Exact rotation derivatives at α = 0.
    let ch = f[1].cosh() * s[1].sinh();
    let zero = T::cst(0.0);
    let x_a = [zero, zero, ch, zero];
    let x_aa = [zero, -ch, zero, zero];
    let g11 = -(t_s[0] * t_s[0]) + t_s[1] * t_s[1] + t_s[2] * t_s[2] + t_s[3] * t_s[3];
    let g22 = ch * ch;
    if !(g11.value() > 0.0 && g22.value() > 0.0) || !(g11.value() * g22.value()).is_finite() {
        return Err(Error::DegenerateMetric(ring));
    }
    let n = unit_normal_r(&x0, &t_s, &x_a).ok_or(Error::DegenerateMetric(ring))?;
    let dot = |a: &[T; 4]| -(a[0] * n[0]) + a[1] * n[1] + a[2] * n[2] + a[3] * n[3];
    Ok([dot(&x_ss) / g11, dot(&x_aa) / g22])
}

/// Stencil radii and heights of ring `j`; the ring below the first one is
/// its reflection through the center.
pub(crate) fn ring_stencil<T: Real>(grid: &Grid, u: impl Fn(usize) -> T, j: usize) -> ([f64; 3], [T; 3]) {
    let s = |jj: usize| grid.s(grid.index(jj, 0));
    let s0 = s(j);
    let (sm, fm) = if j == 0 { (-s0, u(0)) } else { (s(j - 1), u(j - 1)) };
    ([sm, s0, s(j + 1)], [fm, u(j), u(j + 1)])
}

/// Residual `arctan(κ_s/r) + (n−1)·arctan(κ_rot/r) − θ` at ring `j`.
pub(crate) fn ring_residual<T: Real>(grid: &Grid, u: impl Fn(usize) -> T, j: usize, q: &CurvatureQuery) -> Result<T> {
    let (s, f) = ring_stencil(grid, u, j);
    let [ks, kr] = ring_curvatures(s, f, grid.dsigma(), j)?;
    let r = 1.0 / q.r();
    Ok((ks * r).atan() + (kr * r).atan() * (q.n() as f64 - 1.0) + (-q.theta()))
}

/// Principal curvatures `(κ_s, κ_rot)` of the profile at ring `j < Ns`.
pub fn profile_curvatures(grid: &Grid, profile: &[f64], j: usize) -> Result<[f64; 2]> {
    check_disk(grid)?;
    if j >= grid.ns() || profile.len() != grid.ns() + 1 {
        return Err(Error::Graph(format!("ring {j} is not an interior ring")));
    }
    let (s, f) = ring_stencil(grid, |jj| profile[jj], j);
    ring_curvatures(s, f, grid.dsigma(), j)
}

/// `diag(κ_s, κ_rot, …)` of size `n`.
pub fn profile_shape(grid: &Grid, profile: &[f64], j: usize, n: usize) -> Result<SymMat> {
    let [ks, kr] = profile_curvatures(grid, profile, j)?;
    let mut d = vec![kr; n];
    d[0] = ks;
    SymMat::from_diag(&d)
}

/// Curvature records for every interior ring, indexed by ring.
pub fn profile_field(grid: &Grid, profile: &[f64], q: &CurvatureQuery) -> Result<ShapeField> {
    let nodes = par::try_map_indexed(grid.ns(), |j| node_record(j, profile_shape(grid, profile, j, q.n())?, q))?;
    Ok(ShapeField { query: *q, nodes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hgeom::{DomainSpec, UmbilicCap};

    #[test]
    fn slice_and_cap_curvatures() {
        let g = Grid::new(DomainSpec::disk(1.0).unwrap(), 32, 16).unwrap();
        let ones = vec![1.0; g.ns() + 1];
        for j in 0..g.ns() {
            let [a, b] = profile_curvatures(&g, &ones, j).unwrap();
            assert!((a - 1f64.tanh()).abs() < 1e-3 && (b - 1f64.tanh()).abs() < 1e-12);
        }
        let cap = UmbilicCap::new(0.7, 1.0).unwrap();
        let prof: Vec<f64> = (0..=g.ns())
            .map(|j| if j == g.ns() { 0.0 } else { cap.height(g.s(g.index(j, 0))).unwrap() })
            .collect();
        for j in 0..g.ns() {
            let [a, b] = profile_curvatures(&g, &prof, j).unwrap();
            assert!((a - 0.7).abs() < 2e-3 && (b - 0.7).abs() < 2e-3, "{j}: {a} {b}");
        }
    }

    #[test]
    fn broadcast_round_trip() {
        let g = Grid::new(DomainSpec::disk(1.0).unwrap(), 8, 16).unwrap();
        let p: Vec<f64> = (0..=8).map(|j| (8 - j) as f64 * 0.01).collect();
        let f = broadcast(&g, &p).unwrap();
        assert_eq!(profile_of(&f), p);
    }
}
