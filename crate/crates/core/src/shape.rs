//! Discrete second fundamental form of graphs over the polar lattice.
//!
//! Each node's graph point `X = fermi_embed(s, α, f)` is formed in Minkowski
//! space and the lattice parametrization `(σ, α)` is differenced directly:
//! tangents `T_i = ∂_iX` and second derivatives `∂_i∂_jX` come from centered
//! second-order stencils on the embedded points. With the unit normal `N`
//! (orthogonal to `X` and both tangents), `II_ij = ⟨∂_i∂_jX, N⟩`,
//! `g_ij = ⟨T_i, T_j⟩` and the symmetric representative of the shape operator
//! is `A = g^{-1/2} II g^{-1/2}`, which has the spectrum of `g⁻¹II`.

use crate::ad::Real;
use crate::error::{Error, Result};
use crate::grid::{GraphFn, Grid};
use crate::hgeom::{base_point, fermi_embed, mink_dot};
use crate::par;
use crate::slcalc::{r_theta_from_eigs, sl_from_eigs, CurvatureQuery, SymMat};

/// Sign applied to the Lorentz cross product of `(X, T_σ, T_α)` so that the
/// normal points into the convex side: constant slices `f ≡ τ > 0` then have
/// shape operator `tanh(τ)·Id`.
pub const ORIENTATION: f64 = 1.0;

/// A node is admissible when its smallest principal curvature exceeds this.
pub const ADMISSIBLE_EPS: f64 = 1e-10;

/// Relative degeneracy threshold `det g ≤ ε·g₁₁g₂₂` for the induced metric.
const METRIC_DEGENERACY: f64 = 1e-12;

pub(crate) type Vec4 = [f64; 4];

#[inline]
fn det3(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}

/// Vector `N` with `⟨N, y⟩_L = det[y; u; v; w]`, hence Minkowski-orthogonal
/// to `u`, `v` and `w`.
#[inline]
pub(crate) fn lorentz_cross(u: &Vec4, v: &Vec4, w: &Vec4) -> Vec4 {
    let pick = |x: &Vec4, a: usize, b: usize, c: usize| [x[a], x[b], x[c]];
    let c0 = det3(pick(u, 1, 2, 3), pick(v, 1, 2, 3), pick(w, 1, 2, 3));
    let c1 = -det3(pick(u, 0, 2, 3), pick(v, 0, 2, 3), pick(w, 0, 2, 3));
    let c2 = det3(pick(u, 0, 1, 3), pick(v, 0, 1, 3), pick(w, 0, 1, 3));
    let c3 = -det3(pick(u, 0, 1, 2), pick(v, 0, 1, 2), pick(w, 0, 1, 2));
    [-c0, c1, c2, c3]
}

#[inline]
fn dot_r<T: Real>(a: &[T; 4], b: &[T; 4]) -> T {
    -(a[0] * b[0]) + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

#[inline]
fn det3_r<T: Real>(a: [T; 3], b: [T; 3], c: [T; 3]) -> T {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}

#[inline]
pub(crate) fn cross_r<T: Real>(u: &[T; 4], v: &[T; 4], w: &[T; 4]) -> [T; 4] {
    let pick = |x: &[T; 4], a: usize, b: usize, c: usize| [x[a], x[b], x[c]];
    let c0 = det3_r(pick(u, 1, 2, 3), pick(v, 1, 2, 3), pick(w, 1, 2, 3));
    let c1 = -det3_r(pick(u, 0, 2, 3), pick(v, 0, 2, 3), pick(w, 0, 2, 3));
    let c2 = det3_r(pick(u, 0, 1, 3), pick(v, 0, 1, 3), pick(w, 0, 1, 3));
    let c3 = -det3_r(pick(u, 0, 1, 2), pick(v, 0, 1, 2), pick(w, 0, 1, 2));
    [-c0, c1, c2, c3]
}

/// Unit normal along `cross(x, a, b)`, oriented by [`ORIENTATION`].
#[inline]
pub(crate) fn unit_normal_r<T: Real>(x: &[T; 4], a: &[T; 4], b: &[T; 4]) -> Option<[T; 4]> {
    let n = cross_r(x, a, b);
    let nn = dot_r(&n, &n);
    if !(nn.value() > 0.0) || !nn.value().is_finite() {
        return None;
    }
    let scale = T::cst(ORIENTATION) / nn.sqrt();
    Some(n.map(|v| v * scale))
}

/// Graph point over `(s, α)` at a possibly dual height.
#[inline]
pub(crate) fn embed_r<T: Real>(s: f64, alpha: f64, t: T) -> [T; 4] {
    let p = base_point(s, alpha);
    let ch = t.cosh();
    [ch * p[0], ch * p[1], ch * p[2], t.sinh()]
}

/// `Σ arctan(λᵢ/r) − θ` for a 2×2 operator given by its trace and
/// determinant: the argument of `det(Id + iA/r)`.
#[inline]
pub(crate) fn sl2_residual<T: Real>(tr: T, det: T, r: f64, theta: f64) -> T {
    (tr * (1.0 / r)).atan2(-(det * (1.0 / (r * r))) + 1.0) + (-theta)
}

/// Residual at one node from the embedded stencil points (ordered as
/// [`Grid::stencil9`]).
pub(crate) fn polar_residual<T: Real>(
    x: &[[T; 4]; 9],
    ds: f64,
    da: f64,
    q: &CurvatureQuery,
    index: usize,
) -> Result<T> {
    let (xm, x0, xp, ym, yp) = (&x[1], &x[4], &x[7], &x[3], &x[5]);
    let t_s: [T; 4] = std::array::from_fn(|i| (xp[i] - xm[i]) * (0.5 / ds));
    let t_a: [T; 4] = std::array::from_fn(|i| (yp[i] - ym[i]) * (0.5 / da));
    let x_ss: [T; 4] = std::array::from_fn(|i| (xp[i] - x0[i] * 2.0 + xm[i]) * (1.0 / (ds * ds)));
    let x_aa: [T; 4] = std::array::from_fn(|i| (yp[i] - x0[i] * 2.0 + ym[i]) * (1.0 / (da * da)));
    let x_sa: [T; 4] = std::array::from_fn(|i| (x[8][i] - x[6][i] - x[2][i] + x[0][i]) * (0.25 / (ds * da)));
    let g11 = dot_r(&t_s, &t_s);
    let g12 = dot_r(&t_s, &t_a);
    let g22 = dot_r(&t_a, &t_a);
    let det = g11 * g22 - g12 * g12;
    let (a, c, d) = (g11.value(), g22.value(), det.value());
    if !(a > 0.0 && c > 0.0 && d > METRIC_DEGENERACY * a * c) || !d.is_finite() {
        return Err(Error::DegenerateMetric(index));
    }
    let normal = unit_normal_r(x0, &t_s, &t_a).ok_or(Error::DegenerateMetric(index))?;
    let (i11, i12, i22) = (dot_r(&x_ss, &normal), dot_r(&x_sa, &normal), dot_r(&x_aa, &normal));
    let tr = (g22 * i11 - g12 * i12 * 2.0 + g11 * i22) / det;
    let dt = (i11 * i22 - i12 * i12) / det;
    Ok(sl2_residual(tr, dt, q.r(), q.theta()))
}

/// Residual at an interior node from pre-embedded points.
pub(crate) fn residual_from_points(grid: &Grid, pts: &[Vec4], index: usize, q: &CurvatureQuery) -> Result<f64> {
    let st = grid.stencil9(index);
    let x: [[f64; 4]; 9] = std::array::from_fn(|k| pts[st[k]]);
    polar_residual(&x, grid.dsigma(), grid.dalpha(), q, index)
}

#[inline]
fn lin(a: f64, x: &Vec4, b: f64, y: &Vec4) -> Vec4 {
    [a * x[0] + b * y[0], a * x[1] + b * y[1], a * x[2] + b * y[2], a * x[3] + b * y[3]]
}

/// Embedded graph points at every lattice node.
pub fn embed_all(grid: &Grid, values: &[f64]) -> Vec<Vec4> {
    debug_assert_eq!(values.len(), grid.len());
    par::map_indexed(grid.len(), |i| {
        let n = grid.node(i);
        fermi_embed(n.s, n.alpha, values[i]).0
    })
}

/// Inverse square root of a symmetric positive definite 2×2 matrix
/// `[[a, b], [b, c]]`, returned as `(p, q, r)` for `[[p, q], [q, r]]`.
#[inline]
pub(crate) fn inv_sqrt2(a: f64, b: f64, c: f64) -> [f64; 3] {
    let det = a * c - b * b;
    let sd = det.sqrt();
    let t = (a + c + 2.0 * sd).sqrt();
    // sqrt = (M + √det·I)/t
    let (sa, sb, sc) = ((a + sd) / t, b / t, (c + sd) / t);
    let sdet = sa * sc - sb * sb;
    [sc / sdet, -sb / sdet, sa / sdet]
}

/// `S M S` for symmetric 2×2 `S` and `M` in `(p, q, r)` form.
#[inline]
pub(crate) fn sandwich2(s: &[f64; 3], m: &[f64; 3]) -> [f64; 3] {
    // S M
    let sm = [
        [s[0] * m[0] + s[1] * m[1], s[0] * m[1] + s[1] * m[2]],
        [s[1] * m[0] + s[2] * m[1], s[1] * m[1] + s[2] * m[2]],
    ];
    let a = sm[0][0] * s[0] + sm[0][1] * s[1];
    let b = 0.5 * ((sm[0][0] * s[1] + sm[0][1] * s[2]) + (sm[1][0] * s[0] + sm[1][1] * s[1]));
    let c = sm[1][0] * s[1] + sm[1][1] * s[2];
    [a, b, c]
}

/// Differential data of the discrete graph at one interior node.
#[derive(Clone, Debug)]
pub(crate) struct LocalGeometry {
    /// `T_σ, T_α`
    pub tangents: [Vec4; 2],
    /// `X_σσ, X_σα, X_αα`
    pub second: [Vec4; 3],
    /// `g_σσ, g_σα, g_αα`
    pub metric: [f64; 3],
    /// `II_σσ, II_σα, II_αα`
    pub ii: [f64; 3],
    /// `g^{-1/2}`
    pub inv_sqrt_g: [f64; 3],
}

impl LocalGeometry {
    /// Symmetric shape operator in the orthonormal frame `g^{-1/2}∂`.
    pub fn shape(&self) -> SymMat {
        let a = sandwich2(&self.inv_sqrt_g, &self.ii);
        let mut m = SymMat::zeros(2).expect("dimension 2 is valid");
        m.set(0, 0, a[0]);
        m.set(1, 0, a[1]);
        m.set(1, 1, a[2]);
        m
    }
}

pub(crate) fn local_geometry(grid: &Grid, pts: &[Vec4], index: usize) -> Result<LocalGeometry> {
    debug_assert!(!grid.is_boundary(index));
    let st = grid.stencil9(index);
    let p = |slot: usize| &pts[st[slot]];
    let ds = grid.dsigma();
    let da = grid.dalpha();
    let (xm, x0, xp) = (p(1), p(4), p(7));
    let (ym, yp) = (p(3), p(5));

    let t_s = lin(0.5 / ds, xp, -0.5 / ds, xm);
    let t_a = lin(0.5 / da, yp, -0.5 / da, ym);
    let two_x0 = lin(2.0, x0, 0.0, x0);
    let x_ss: Vec4 = std::array::from_fn(|i| (xp[i] - two_x0[i] + xm[i]) / (ds * ds));
    let x_aa: Vec4 = std::array::from_fn(|i| (yp[i] - two_x0[i] + ym[i]) / (da * da));
    let x_sa: Vec4 = std::array::from_fn(|i| (p(8)[i] - p(6)[i] - p(2)[i] + p(0)[i]) / (4.0 * ds * da));

    let g11 = mink_dot(&t_s, &t_s);
    let g12 = mink_dot(&t_s, &t_a);
    let g22 = mink_dot(&t_a, &t_a);
    let det = g11 * g22 - g12 * g12;
    if !(g11 > 0.0 && g22 > 0.0 && det > METRIC_DEGENERACY * g11 * g22) || !det.is_finite() {
        return Err(Error::DegenerateMetric(index));
    }

    let mut normal = lorentz_cross(x0, &t_s, &t_a);
    let nn = mink_dot(&normal, &normal);
    if !(nn > 0.0) || !nn.is_finite() {
        return Err(Error::DegenerateMetric(index));
    }
    let scale = ORIENTATION / nn.sqrt();
    normal.iter_mut().for_each(|v| *v *= scale);

    let ii = [mink_dot(&x_ss, &normal), mink_dot(&x_sa, &normal), mink_dot(&x_aa, &normal)];
    Ok(LocalGeometry {
        tangents: [t_s, t_a],
        second: [x_ss, x_sa, x_aa],
        metric: [g11, g12, g22],
        ii,
        inv_sqrt_g: inv_sqrt2(g11, g12, g22),
    })
}

/// Shape operator at an interior node from pre-embedded points.
pub fn shape_from_points(grid: &Grid, pts: &[Vec4], index: usize) -> Result<SymMat> {
    Ok(local_geometry(grid, pts, index)?.shape())
}

/// Shape operator at an interior node of raw node values (boundary values
/// are used as given; no graph invariants are checked).
pub fn shape_at_values(grid: &Grid, values: &[f64], index: usize) -> Result<SymMat> {
    if values.len() != grid.len() {
        return Err(Error::Graph(format!("expected {} values, got {}", grid.len(), values.len())));
    }
    if grid.is_boundary(index) {
        return Err(Error::Graph(format!("node {index} is on the boundary")));
    }
    let st = grid.stencil9(index);
    // Only the stencil needs embedding; the rest stays untouched.
    let mut pts = vec![[0.0; 4]; grid.len()];
    for &i in &st {
        let n = grid.node(i);
        pts[i] = fermi_embed(n.s, n.alpha, values[i]).0;
    }
    shape_from_points(grid, &pts, index)
}

/// Shape operator of a graph function at an interior node.
pub fn shape_at(f: &GraphFn, index: usize) -> Result<SymMat> {
    shape_at_values(f.grid(), f.values(), index)
}

/// Per-node curvature record.
#[derive(Clone, Debug)]
pub struct NodeShape {
    pub index: usize,
    pub a: SymMat,
    /// Ascending principal curvatures.
    pub eigenvalues: Vec<f64>,
    pub admissible: bool,
    /// `SL_r(A) − θ`
    pub residual: f64,
    /// Mean curvature `Tr A`.
    pub mean: f64,
    /// `R̂_θ(A)` when admissible.
    pub rhat_theta: Option<f64>,
}

impl NodeShape {
    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }
    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues.last().expect("nonempty spectrum")
    }
}

/// Curvature data at every interior node, in node-index order.
#[derive(Clone, Debug)]
pub struct ShapeField {
    pub query: CurvatureQuery,
    pub nodes: Vec<NodeShape>,
}

impl ShapeField {
    pub fn residuals(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.residual).collect()
    }

    pub fn residual_sup(&self) -> f64 {
        self.nodes.iter().fold(0.0, |m, n| m.max(n.residual.abs()))
    }

    pub fn min_lambda1(&self) -> f64 {
        self.nodes.iter().fold(f64::INFINITY, |m, n| m.min(n.lambda_min()))
    }

    pub fn all_admissible(&self) -> bool {
        self.nodes.iter().all(|n| n.admissible)
    }
}

/// Evaluates curvature quantities on a spectrum-bearing shape operator.
pub(crate) fn node_record(index: usize, a: SymMat, q: &CurvatureQuery) -> Result<NodeShape> {
    let eig = a.eigen()?;
    let eigenvalues = eig.values().to_vec();
    let admissible = eigenvalues[0] > ADMISSIBLE_EPS;
    let residual = sl_from_eigs(&eigenvalues, q.r()) - q.theta();
    let rhat_theta = if admissible {
        r_theta_from_eigs(&eigenvalues, q.theta()).ok().map(|r| r * q.rescale())
    } else {
        None
    };
    Ok(NodeShape { index, mean: a.trace(), a, eigenvalues, admissible, residual, rhat_theta })
}

/// Shape field of raw node values (see [`shape_at_values`]).
pub fn shape_field_values(grid: &Grid, values: &[f64], q: &CurvatureQuery) -> Result<ShapeField> {
    if q.n() != 2 {
        return Err(Error::DimensionMismatch(q.n(), 2));
    }
    if values.len() != grid.len() {
        return Err(Error::Graph(format!("expected {} values, got {}", grid.len(), values.len())));
    }
    let pts = embed_all(grid, values);
    let nodes = par::try_map_indexed(grid.n_interior(), |i| {
        node_record(i, shape_from_points(grid, &pts, i)?, q)
    })?;
    Ok(ShapeField { query: *q, nodes })
}

/// Shape operator, spectrum, admissibility and residual at every interior
/// node of a planar (`n = 2`) graph.
pub fn shape_field(f: &GraphFn, q: &CurvatureQuery) -> Result<ShapeField> {
    shape_field_values(f.grid(), f.values(), q)
}

fn hessian_at(grid: &Grid, geo: &LocalGeometry, phi: &[f64], index: usize) -> [f64; 3] {
    let st = grid.stencil9(index);
    let v = |slot: usize| phi[st[slot]];
    let ds = grid.dsigma();
    let da = grid.dalpha();
    let d1 = [(v(7) - v(1)) / (2.0 * ds), (v(5) - v(3)) / (2.0 * da)];
    let d2 = [
        (v(7) - 2.0 * v(4) + v(1)) / (ds * ds),
        (v(8) - v(6) - v(2) + v(0)) / (4.0 * ds * da),
        (v(5) - 2.0 * v(4) + v(3)) / (da * da),
    ];
    // Christoffel contraction Γᵏᵢⱼ ∂ₖφ = g^{kl}⟨X_ij, T_l⟩ ∂ₖφ.
    let [g11, g12, g22] = geo.metric;
    let det = g11 * g22 - g12 * g12;
    let ginv = [g22 / det, -g12 / det, g11 / det];
    let grad_up = [ginv[0] * d1[0] + ginv[1] * d1[1], ginv[1] * d1[0] + ginv[2] * d1[1]];
    let mut hess = [0.0; 3];
    for (slot, xx) in geo.second.iter().enumerate() {
        let proj = [mink_dot(xx, &geo.tangents[0]), mink_dot(xx, &geo.tangents[1])];
        hess[slot] = d2[slot] - (proj[0] * grad_up[0] + proj[1] * grad_up[1]);
    }
    hess
}

/// Whether the operator's stencil at `index` reads only values present in a
/// field of length `len` (interior-only fields skip the outermost ring).
fn evaluable(grid: &Grid, index: usize, len: usize) -> bool {
    len == grid.len() || index / grid.nalpha() + 1 < grid.ns()
}

fn contract_b(
    f: &GraphFn,
    q: &CurvatureQuery,
    phi: &[f64],
    weight: impl Fn(&SymMat) -> Result<SymMat> + Sync,
) -> Result<Vec<Option<f64>>> {
    let grid = f.grid();
    if phi.len() != grid.len() && phi.len() != grid.n_interior() {
        return Err(Error::Graph(format!(
            "field has {} values; expected {} or {}",
            phi.len(),
            grid.n_interior(),
            grid.len()
        )));
    }
    let _ = q;
    let pts = embed_all(grid, f.values());
    let mut full;
    let phi_all: &[f64] = if phi.len() == grid.len() {
        phi
    } else {
        full = phi.to_vec();
        full.resize(grid.len(), f64::NAN);
        &full
    };
    par::try_map_indexed(grid.n_interior(), |i| {
        if !evaluable(grid, i, phi.len()) {
            return Ok(None);
        }
        let geo = local_geometry(grid, &pts, i)?;
        let b = weight(&geo.shape())?;
        let hess = sandwich2(&geo.inv_sqrt_g, &hessian_at(grid, &geo, phi_all, i));
        Ok(Some(b.get(0, 0) * hess[0] + 2.0 * b.get(1, 0) * hess[1] + b.get(1, 1) * hess[2]))
    })
}

/// `Δ^B φ = B^{ij} φ_{;ij}` with `B = (Id + r⁻²A²)⁻¹`, evaluated for any
/// shape operator (no admissibility requirement).
///
/// `phi` holds either every node or only the interior nodes; in the latter
/// case the outermost interior ring returns `None`.
pub fn laplacian_b(f: &GraphFn, q: &CurvatureQuery, phi: &[f64]) -> Result<Vec<Option<f64>>> {
    let r = q.r();
    contract_b(f, q, phi, |a| a.map_spectrum(|l| 1.0 / (1.0 + l * l / (r * r))))
}

/// [`laplacian_b`] restricted to admissible graphs: errors at the first
/// evaluated node whose shape operator is not positive definite.
pub fn delta_b(f: &GraphFn, q: &CurvatureQuery, phi: &[f64]) -> Result<Vec<Option<f64>>> {
    let r = q.r();
    contract_b(f, q, phi, |a| {
        let e = a.eigen()?;
        if e.min() <= ADMISSIBLE_EPS {
            return Err(Error::Inadmissible(usize::MAX));
        }
        a.map_spectrum(|l| 1.0 / (1.0 + l * l / (r * r)))
    })
    .map_err(|e| match e {
        Error::Inadmissible(_) => first_inadmissible(f, q).map(Error::Inadmissible).unwrap_or(e),
        other => other,
    })
}

fn first_inadmissible(f: &GraphFn, q: &CurvatureQuery) -> Option<usize> {
    shape_field(f, q).ok()?.nodes.iter().find(|n| !n.admissible).map(|n| n.index)
}

/// Laplace–Beltrami operator of the graph (`B = Id`).
pub fn laplace_beltrami(f: &GraphFn, phi: &[f64]) -> Result<Vec<Option<f64>>> {
    let q = CurvatureQuery::from_rhat(2, std::f64::consts::FRAC_PI_2, 1.0)?;
    contract_b(f, &q, phi, |a| SymMat::identity(a.dim()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hgeom::{umbilic_cap, DomainSpec};
    use std::f64::consts::FRAC_PI_2;

    fn disk(ns: usize, na: usize) -> Grid {
        Grid::new(DomainSpec::disk(1.0).unwrap(), ns, na).unwrap()
    }

    #[test]
    fn flat_graph_has_zero_shape() {
        let g = disk(16, 32);
        let f = GraphFn::zeros(g);
        let q = CurvatureQuery::from_rhat(2, FRAC_PI_2, 0.5).unwrap();
        let field = shape_field(&f, &q).unwrap();
        for n in &field.nodes {
            assert!(n.a.max_abs() < 1e-9, "{:?}", n.a);
            assert!(!n.admissible);
            assert!((n.residual + FRAC_PI_2).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_slice_is_tanh() {
        let g = disk(32, 64);
        let vals = vec![1.0; g.len()];
        let t = 1f64.tanh();
        for i in (0..g.n_interior()).step_by(97) {
            let e = shape_at_values(&g, &vals, i).unwrap().eigen().unwrap();
            for l in e.values() {
                assert!((l - t).abs() < 5e-3, "node {i}: {l}");
            }
        }
    }

    #[test]
    fn cap_curvature_is_lambda() {
        let g = disk(32, 64);
        let f = umbilic_cap(0.6, &g).unwrap();
        let q = CurvatureQuery::from_rhat(2, 2.0, 0.6).unwrap();
        let field = shape_field(&f, &q).unwrap();
        for n in &field.nodes {
            assert!((n.lambda_min() - 0.6).abs() < 1e-2 && (n.lambda_max() - 0.6).abs() < 1e-2);
            assert!((n.rhat_theta.unwrap() - 0.6).abs() < 1e-2);
        }
    }

    #[test]
    fn inv_sqrt_matches_definition() {
        let (a, b, c) = (2.0, 0.3, 0.5);
        let s = inv_sqrt2(a, b, c);
        // s · M · s = I
        let id = sandwich2(&s, &[a, b, c]);
        assert!((id[0] - 1.0).abs() < 1e-14 && id[1].abs() < 1e-14 && (id[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let g = disk(16, 32);
        let f = umbilic_cap(0.5, &g).unwrap();
        let q = CurvatureQuery::from_rhat(2, 2.0, 0.5).unwrap();
        let phi = vec![3.0; g.len()];
        for v in delta_b(&f, &q, &phi).unwrap().into_iter().flatten() {
            assert!(v.abs() < 1e-9);
        }
    }

    #[test]
    fn delta_b_rejects_flat_graph() {
        let g = disk(16, 32);
        let f = GraphFn::zeros(g.clone());
        let q = CurvatureQuery::from_rhat(2, 2.0, 0.5).unwrap();
        let phi = vec![0.0; g.n_interior()];
        assert!(matches!(delta_b(&f, &q, &phi), Err(Error::Inadmissible(0))));
        assert!(laplacian_b(&f, &q, &phi).is_ok());
    }

    #[test]
    fn interior_only_fields_skip_outer_ring() {
        let g = disk(16, 32);
        let f = umbilic_cap(0.5, &g).unwrap();
        let q = CurvatureQuery::from_rhat(2, 2.0, 0.5).unwrap();
        let out = laplacian_b(&f, &q, &vec![1.0; g.n_interior()]).unwrap();
        assert!(out[g.index(15, 3)].is_none());
        assert!(out[g.index(14, 3)].is_some());
    }
}
