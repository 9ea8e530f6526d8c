//! Hyperboloid-model geometry of H³ around a totally geodesic plane.
//!
//! Points live on `{X : ⟨X,X⟩ = −1, X₀ > 0}` in Minkowski space with the
//! `(−,+,+,+)` form. The base plane `H = {X₃ = 0}` carries geodesic polar
//! coordinates `(s, α)` about `e₀`, and a graph over `H` is the image of
//! `(s, α) ↦ Exp_p(f(p)·N_H(p))`, i.e. the Fermi chart with height `t = f`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GraphFn, Grid};

/// Minkowski form `−a₀b₀ + a₁b₁ + a₂b₂ + a₃b₃`.
#[inline]
pub fn mink_dot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

/// A point of H³ in hyperboloid coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinkPoint(pub [f64; 4]);

impl MinkPoint {
    pub fn coords(&self) -> &[f64; 4] {
        &self.0
    }

    /// `⟨X, X⟩_L`, which is `−1` for points of the model.
    pub fn norm_sq(&self) -> f64 {
        mink_dot(&self.0, &self.0)
    }

    /// Hyperbolic distance to another point.
    pub fn distance(&self, other: &MinkPoint) -> f64 {
        (-mink_dot(&self.0, &other.0)).max(1.0).acosh()
    }
}

/// Base point of `H` at polar coordinates `(s, α)`.
#[inline]
pub fn base_point(s: f64, alpha: f64) -> [f64; 4] {
    let (sa, ca) = alpha.sin_cos();
    let sh = s.sinh();
    [s.cosh(), sh * ca, sh * sa, 0.0]
}

/// `cosh(t)·P(s, α) + sinh(t)·e₃`: the point at signed distance `t` above the
/// base point `P(s, α)` along the unit normal of `H`.
#[inline]
pub fn fermi_embed(s: f64, alpha: f64, t: f64) -> MinkPoint {
    let p = base_point(s, alpha);
    let (ch, sh) = (t.cosh(), t.sinh());
    MinkPoint([ch * p[0], ch * p[1], ch * p[2], sh])
}

/// Poincaré ball coordinates `xᵢ = Xᵢ / (1 + X₀)`.
pub fn poincare_project(x: &MinkPoint) -> [f64; 3] {
    let d = 1.0 + x.0[0];
    [x.0[1] / d, x.0[2] / d, x.0[3] / d]
}

/// Inverse of [`poincare_project`].
pub fn poincare_unproject(y: &[f64; 3]) -> MinkPoint {
    let r2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
    let d = 1.0 - r2;
    MinkPoint([(1.0 + r2) / d, 2.0 * y[0] / d, 2.0 * y[1] / d, 2.0 * y[2] / d])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Disk,
    Star,
}

/// Largest admissible `Σ|a_k|` for star perturbations.
pub const MAX_FOURIER_MASS: f64 = 0.3;

/// A star-shaped domain of `H` in polar coordinates:
/// `ρ(α) = rho·(1 + Σ a_k cos(kα))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub rho: f64,
    #[serde(default)]
    pub fourier: Vec<(u32, f64)>,
}

const EXTREMA_SAMPLES: usize = 1 << 14;

impl DomainSpec {
    pub fn disk(rho: f64) -> Result<Self> {
        let d = Self { kind: DomainKind::Disk, rho, fourier: Vec::new() };
        d.validate()?;
        Ok(d)
    }

    pub fn star(rho: f64, fourier: Vec<(u32, f64)>) -> Result<Self> {
        let d = Self { kind: DomainKind::Star, rho, fourier };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::Domain(format!("radius must be positive, got {}", self.rho)));
        }
        match self.kind {
            DomainKind::Disk if !self.fourier.is_empty() => {
                return Err(Error::Domain("disk domains take no Fourier coefficients".into()));
            }
            _ => {}
        }
        let mut mass = 0.0;
        for &(k, a) in &self.fourier {
            if k == 0 {
                return Err(Error::Domain("Fourier mode k = 0 is not a perturbation".into()));
            }
            if !a.is_finite() {
                return Err(Error::Domain(format!("non-finite coefficient for mode {k}")));
            }
            mass += a.abs();
        }
        if mass > MAX_FOURIER_MASS {
            return Err(Error::Domain(format!(
                "Fourier mass Σ|a_k| = {mass} exceeds {MAX_FOURIER_MASS}"
            )));
        }
        // Strict convexity of the boundary curve in H.
        let samples = 2048;
        for i in 0..samples {
            let alpha = i as f64 * std::f64::consts::TAU / samples as f64;
            let kappa = self.boundary_curvature(alpha);
            if !(kappa > 0.0) {
                return Err(Error::Domain(format!(
                    "boundary is not strictly convex near alpha = {alpha:.4} (geodesic curvature {kappa:.3e})"
                )));
            }
        }
        Ok(())
    }

    /// Boundary radius `ρ(α)`.
    pub fn radius(&self, alpha: f64) -> f64 {
        self.radius_even(alpha) + self.radius_odd(alpha)
    }

    /// Part of `ρ(α)` invariant under `α ↦ α + π`.
    pub fn radius_even(&self, alpha: f64) -> f64 {
        let mut acc = 1.0;
        for &(k, a) in &self.fourier {
            if k % 2 == 0 {
                acc += a * (k as f64 * alpha).cos();
            }
        }
        self.rho * acc
    }

    /// Part of `ρ(α)` odd under `α ↦ α + π`.
    pub fn radius_odd(&self, alpha: f64) -> f64 {
        let mut acc = 0.0;
        for &(k, a) in &self.fourier {
            if k % 2 == 1 {
                acc += a * (k as f64 * alpha).cos();
            }
        }
        self.rho * acc
    }

    /// Geodesic radius of the lattice point at normalized radius `σ`:
    /// `s = σ·ρ_even(α) + σ²·ρ_odd(α)`.
    ///
    /// This reaches `ρ(α)` at `σ = 1` and satisfies
    /// `s(−σ, α) = −s(σ, α + π)`, so stencils may cross the center through
    /// the antipodal ray.
    pub fn radial_map(&self, sigma: f64, alpha: f64) -> f64 {
        sigma * self.radius_even(alpha) + sigma * sigma * self.radius_odd(alpha)
    }

    /// `∂s/∂σ` of [`Self::radial_map`].
    pub fn radial_map_deriv(&self, sigma: f64, alpha: f64) -> f64 {
        self.radius_even(alpha) + 2.0 * sigma * self.radius_odd(alpha)
    }

    /// Inverse of [`Self::radial_map`] for `s ≥ 0`.
    pub fn sigma_of(&self, s: f64, alpha: f64) -> f64 {
        let (e, o) = (self.radius_even(alpha), self.radius_odd(alpha));
        2.0 * s / (e + (e * e + 4.0 * o * s).max(0.0).sqrt())
    }

    fn extremum(&self, pick_max: bool) -> f64 {
        if self.fourier.is_empty() {
            return self.rho;
        }
        let mut best = if pick_max { f64::NEG_INFINITY } else { f64::INFINITY };
        for i in 0..EXTREMA_SAMPLES {
            let r = self.radius(i as f64 * std::f64::consts::TAU / EXTREMA_SAMPLES as f64);
            best = if pick_max { best.max(r) } else { best.min(r) };
        }
        best
    }

    /// Radius of the inscribed disk centered at the origin.
    pub fn rho_min(&self) -> f64 {
        self.extremum(false)
    }

    /// Radius of the circumscribed disk centered at the origin.
    pub fn rho_max(&self) -> f64 {
        self.extremum(true)
    }

    /// Geodesic curvature of `∂Ω` at angle `α`, positive when the domain is
    /// locally convex.
    pub fn boundary_curvature(&self, alpha: f64) -> f64 {
        let h = 1e-4;
        let pt = |a: f64| {
            let p = base_point(self.radius(a), a);
            [p[0], p[1], p[2]]
        };
        let g0 = pt(alpha);
        let gp = pt(alpha + h);
        let gm = pt(alpha - h);
        let d1: [f64; 3] = std::array::from_fn(|i| (gp[i] - gm[i]) / (2.0 * h));
        let d2: [f64; 3] = std::array::from_fn(|i| (gp[i] - 2.0 * g0[i] + gm[i]) / (h * h));
        let dot3 = |a: &[f64; 3], b: &[f64; 3]| -a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        // Lorentz cross product: orthogonal to γ and γ'.
        let c = [
            g0[1] * d1[2] - g0[2] * d1[1],
            g0[2] * d1[0] - g0[0] * d1[2],
            g0[0] * d1[1] - g0[1] * d1[0],
        ];
        let mut nrm = [-c[0], c[1], c[2]];
        let len = dot3(&nrm, &nrm).sqrt();
        nrm.iter_mut().for_each(|x| *x /= len);
        // Orient toward the center.
        let s = self.radius(alpha);
        let radial = {
            let (sa, ca) = alpha.sin_cos();
            [s.sinh(), s.cosh() * ca, s.cosh() * sa]
        };
        if dot3(&nrm, &radial) > 0.0 {
            nrm.iter_mut().for_each(|x| *x = -*x);
        }
        dot3(&d2, &nrm) / dot3(&d1, &d1)
    }
}

/// Solves `a·cosh t + b·sinh t = c` for `t`, returning the root with
/// `e^t = (c + √(c² − a² + b²)) / (a + b)`, polished by Newton steps.
pub fn solve_section_height(a: f64, b: f64, c: f64) -> Option<f64> {
    let disc = c * c - a * a + b * b;
    if !(disc >= 0.0) || a + b <= 0.0 {
        return None;
    }
    let root = disc.sqrt();
    // e^t − 1 written without cancellation near t = 0.
    let um1 = (c - a) * (1.0 + (c + a) / (root + b)) / (a + b);
    if !(um1 > -1.0) {
        return None;
    }
    let mut t = um1.ln_1p();
    for _ in 0..20 {
        let (ch, sh) = (t.cosh(), t.sinh());
        let g = a * ch + b * sh - c;
        let dg = a * sh + b * ch;
        if dg == 0.0 {
            break;
        }
        let step = g / dg;
        t -= step;
        if step.abs() <= 1e-13 * (1.0 + t.abs()) {
            break;
        }
    }
    t.is_finite().then_some(t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CapKind {
    Geodesic,
    Equidistant,
    Horospheric,
}

/// The umbilic cap of curvature `λ ∈ [0, 1]` spanning the circle `s = ρ`.
///
/// For `0 < λ < 1` this is the equidistant surface `⟨X, V⟩ = sinh τ`,
/// `τ = artanh λ`, through the boundary circle; at `λ = 1` it becomes the
/// horosphere through that circle and at `λ = 0` the plane itself. The
/// height solves `a·cosh f + b·sinh f = 1` with `a = cosh s / cosh ρ` and
/// `b = √((1 − λ²)/λ² + 1/cosh² ρ)`, which stays well conditioned up to
/// `λ = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UmbilicCap {
    lambda: f64,
    rho: f64,
}

impl UmbilicCap {
    pub fn new(lambda: f64, rho: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::CapLevel(lambda));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::Domain(format!("cap radius must be positive, got {rho}")));
        }
        Ok(Self { lambda, rho })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn kind(&self) -> CapKind {
        if self.lambda == 0.0 {
            CapKind::Geodesic
        } else if self.lambda == 1.0 {
            CapKind::Horospheric
        } else {
            CapKind::Equidistant
        }
    }

    /// Signed height of the cap above `H` at geodesic radius `s`
    /// (negative for `s > ρ`, `None` past the cap's reach).
    pub fn height(&self, s: f64) -> Option<f64> {
        if self.lambda == 0.0 {
            return Some(0.0);
        }
        let cr = self.rho.cosh();
        let l = self.lambda;
        let b = ((1.0 - l * l) / (l * l) + 1.0 / (cr * cr)).sqrt();
        let a = s.cosh() / cr;
        if s.abs() <= self.rho {
            // 1 − a = 2 sinh((ρ+s)/2) sinh((ρ−s)/2) / cosh ρ, kept exact near the rim.
            let one_minus_a =
                2.0 * (0.5 * (self.rho + s.abs())).sinh() * (0.5 * (self.rho - s.abs())).sinh() / cr;
            let disc = one_minus_a * (1.0 + a) + b * b;
            let um1 = one_minus_a * (1.0 + (1.0 + a) / (disc.sqrt() + b)) / (a + b);
            let mut t = um1.ln_1p();
            for _ in 0..20 {
                let (ch, sh) = (t.cosh(), t.sinh());
                let g = a * (ch - 1.0) + b * sh - one_minus_a;
                let step = g / (a * sh + b * ch);
                t -= step;
                if step.abs() <= 1e-13 * (1.0 + t.abs()) {
                    break;
                }
            }
            Some(t.max(0.0))
        } else {
            solve_section_height(a, b, 1.0)
        }
    }
}

/// Samples an umbilic cap on a disk grid; boundary nodes get exactly `0`.
pub fn umbilic_cap(lambda: f64, grid: &Grid) -> Result<GraphFn> {
    if grid.domain().kind != DomainKind::Disk {
        return Err(Error::Domain("umbilic caps are defined over disk domains".into()));
    }
    let cap = UmbilicCap::new(lambda, grid.domain().rho)?;
    let values = grid
        .nodes()
        .map(|node| {
            if node.boundary {
                0.0
            } else {
                cap.height(node.s).unwrap_or(0.0)
            }
        })
        .collect();
    GraphFn::new(grid.clone(), values)
}

/// An equidistant surface `{⟨X, V⟩ = sinh τ}` whose base plane is tilted
/// relative to `H`: the centered cap of curvature `λ = tanh τ` over radius
/// `rho` pushed along `e₁` by a boost of rapidity `offset`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TiltedSection {
    v: [f64; 4],
    level: f64,
}

impl TiltedSection {
    pub fn new(lambda: f64, rho: f64, offset: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::CapLevel(lambda));
        }
        let tau = lambda.atanh();
        let st = tau.sinh();
        let v0 = -st / rho.cosh();
        let v3 = (1.0 + v0 * v0).sqrt();
        let (ch, sh) = (offset.cosh(), offset.sinh());
        Ok(Self { v: [v0 * ch, v0 * sh, 0.0, v3], level: st })
    }

    pub fn height(&self, s: f64, alpha: f64) -> Option<f64> {
        let p = base_point(s, alpha);
        solve_section_height(mink_dot(&p, &self.v), self.v[3], self.level)
    }

    /// Heights at every grid node (boundary nodes included, not forced to 0).
    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        grid.nodes().map(|n| self.height(n.s, n.alpha).unwrap_or(f64::NAN)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn fermi_base_point_and_slice() {
        let x = fermi_embed(0.0, 1.3, 0.0);
        assert_eq!(x.0, [1.0, 0.0, 0.0, 0.0]);
        let y = fermi_embed(0.7, 2.1, 0.0);
        assert_eq!(y.0[3], 0.0);
    }

    #[test]
    fn fermi_on_hyperboloid() {
        for &(s, a, t) in &[(0.3, 0.1, 0.2), (2.0, 4.0, 1.5), (0.0, 0.0, 3.0), (1e-3, 5.0, 1e-4)] {
            let x = fermi_embed(s, a, t);
            assert!((x.norm_sq() + 1.0).abs() <= 1e-12 * x.0[0].powi(2));
            assert!(x.0[0] >= 1.0);
        }
    }

    #[test]
    fn poincare_examples() {
        assert_eq!(poincare_project(&MinkPoint([1.0, 0.0, 0.0, 0.0])), [0.0; 3]);
        let x = fermi_embed(1.2, 0.4, 0.7);
        let y = poincare_project(&x);
        assert!(y.iter().map(|v| v * v).sum::<f64>() < 1.0);
        let back = poincare_unproject(&y);
        for i in 0..4 {
            assert!((back.0[i] - x.0[i]).abs() <= 1e-12 * x.0[0]);
        }
    }

    #[test]
    fn cap_levels() {
        assert!(UmbilicCap::new(-0.1, 1.0).is_err());
        assert!(UmbilicCap::new(1.1, 1.0).is_err());
        let flat = UmbilicCap::new(0.0, 1.0).unwrap();
        assert_eq!(flat.kind(), CapKind::Geodesic);
        assert_eq!(flat.height(0.3), Some(0.0));
        assert_eq!(UmbilicCap::new(1.0, 1.0).unwrap().kind(), CapKind::Horospheric);
    }

    #[test]
    fn cap_vanishes_on_rim_and_decreases() {
        for &l in &[0.05, 0.3, 0.6, 1.0] {
            let cap = UmbilicCap::new(l, 1.0).unwrap();
            assert_eq!(cap.height(1.0), Some(0.0));
            let mut prev = f64::INFINITY;
            for i in 0..=50 {
                let h = cap.height(i as f64 / 50.0).unwrap();
                assert!(h < prev || (i == 50 && h == 0.0));
                prev = h;
            }
        }
    }

    #[test]
    fn cap_lies_on_its_section() {
        // ⟨X, V⟩ = sinh τ with V = (−sinh τ / cosh ρ, 0, 0, √(1 + sinh²τ/cosh²ρ)).
        let (l, rho) = (0.6_f64, 1.0_f64);
        let tau = l.atanh();
        let v0 = -tau.sinh() / rho.cosh();
        let v = [v0, 0.0, 0.0, (1.0 + v0 * v0).sqrt()];
        let cap = UmbilicCap::new(l, rho).unwrap();
        for i in 0..10 {
            let s = i as f64 * 0.1;
            let x = fermi_embed(s, 0.3, cap.height(s).unwrap());
            assert!((mink_dot(&x.0, &v) - tau.sinh()).abs() < 1e-13);
        }
    }

    #[test]
    fn horosphere_is_null_section() {
        // ⟨X, L⟩ = −cosh ρ for L = (1, 0, 0, −1).
        let cap = UmbilicCap::new(1.0, 1.0).unwrap();
        let l = [1.0, 0.0, 0.0, -1.0];
        for i in 0..10 {
            let s = i as f64 * 0.1;
            let x = fermi_embed(s, 1.0, cap.height(s).unwrap());
            assert!((mink_dot(&x.0, &l) + 1f64.cosh()).abs() < 1e-13);
        }
    }

    #[test]
    fn caps_ordered_in_lambda() {
        let lo = UmbilicCap::new(0.3, 1.0).unwrap();
        let hi = UmbilicCap::new(0.6, 1.0).unwrap();
        for i in 0..100 {
            let s = i as f64 / 100.0;
            assert!(hi.height(s).unwrap() >= lo.height(s).unwrap());
        }
    }

    #[test]
    fn domain_validation() {
        assert!(DomainSpec::disk(0.0).is_err());
        assert!(DomainSpec::disk(f64::NAN).is_err());
        assert!(DomainSpec::star(1.0, vec![(2, 0.1)]).is_ok());
        assert!(DomainSpec::star(1.0, vec![(2, 0.2), (3, 0.15)]).is_err());
        assert!(DomainSpec::star(1.0, vec![(0, 0.1)]).is_err());
        // Strongly oscillating boundary loses convexity.
        assert!(DomainSpec::star(1.0, vec![(6, 0.1)]).is_err());
        let d = DomainSpec::star(1.0, vec![(2, 0.1)]).unwrap();
        assert!((d.radius(0.0) - 1.1).abs() < 1e-15);
        assert!((d.rho_min() - 0.9).abs() < 1e-9);
        assert!((d.rho_max() - 1.1).abs() < 1e-9);
    }

    #[test]
    fn disk_boundary_curvature_is_coth() {
        let d = DomainSpec::disk(0.8).unwrap();
        assert!((d.boundary_curvature(0.3) - 1.0 / 0.8f64.tanh()).abs() < 1e-6);
    }

    #[test]
    fn radial_map_antipodal_symmetry() {
        let d = DomainSpec::star(1.0, vec![(1, 0.05), (2, 0.1), (3, 0.02)]).unwrap();
        for &(sig, a) in &[(0.1, 0.3), (0.5, 2.0), (0.9, 5.5)] {
            assert!((d.radial_map(-sig, a) + d.radial_map(sig, a + PI)).abs() < 1e-14);
        }
        assert!((d.radial_map(1.0, 0.7) - d.radius(0.7)).abs() < 1e-15);
    }

    #[test]
    fn tilted_section_reduces_to_cap() {
        let t = TiltedSection::new(0.6, 1.0, 0.0).unwrap();
        let cap = UmbilicCap::new(0.6, 1.0).unwrap();
        for i in 0..10 {
            let s = i as f64 * 0.1;
            assert!((t.height(s, 1.0).unwrap() - cap.height(s).unwrap()).abs() < 1e-12);
        }
    }
}
