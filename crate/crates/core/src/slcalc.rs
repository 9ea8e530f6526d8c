//! Special Lagrangian curvature calculus on symmetric matrices.
//!
//! For a symmetric matrix `A` with eigenvalues `λ₁ ≤ … ≤ λₙ`,
//! `arctan(A) = Σ arctan(λᵢ)` and `SL_r(A) = arctan(A / r)`. On the positive
//! definite cone `SL_r` decreases strictly from `nπ/2` to `0` as `r` runs over
//! `(0, ∞)`, so for every angle `θ ∈ (0, nπ/2)` there is a unique level
//! `R_θ(A)` with `SL_{R_θ(A)}(A) = θ`. The rescaled value
//! `R̂_θ = tan(θ/n)·R_θ` equals one on horospheres.
//!
//! Everything here is a pure function of its inputs.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Largest supported matrix dimension.
pub const MAX_DIM: usize = 8;
const PACKED_LEN: usize = MAX_DIM * (MAX_DIM + 1) / 2;

type Dense = [[f64; MAX_DIM]; MAX_DIM];

/// Jacobi sweeps stop once the off-diagonal Frobenius mass drops below this
/// fraction of the matrix norm.
const JACOBI_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 64;

/// Eigenvalues at or below this fraction of `‖A‖` count as "not positive".
pub const POSITIVE_CONE_TOL: f64 = 1e-14;

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    let (i, j) = if i >= j { (i, j) } else { (j, i) };
    i * (i + 1) / 2 + j
}

/// Dense symmetric `n×n` matrix, `2 ≤ n ≤ 8`.
///
/// Only the lower triangle is stored (row-major: `a00, a10, a11, a20, …`), so
/// symmetry holds by construction.
#[derive(Clone, Copy, PartialEq)]
pub struct SymMat {
    n: usize,
    packed: [f64; PACKED_LEN],
}

impl std::fmt::Debug for SymMat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let rows: Vec<Vec<f64>> = (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect();
        f.debug_struct("SymMat").field("n", &self.n).field("rows", &rows).finish()
    }
}

fn check_dim(n: usize) -> Result<()> {
    if (2..=MAX_DIM).contains(&n) {
        Ok(())
    } else {
        Err(Error::Dimension(n))
    }
}

impl SymMat {
    pub fn zeros(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(Self { n, packed: [0.0; PACKED_LEN] })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::scalar(n, 1.0)
    }

    pub fn scalar(n: usize, c: f64) -> Result<Self> {
        let mut m = Self::zeros(n)?;
        for i in 0..n {
            m.set(i, i, c);
        }
        Ok(m)
    }

    pub fn from_diag(diag: &[f64]) -> Result<Self> {
        let mut m = Self::zeros(diag.len())?;
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        Ok(m)
    }

    /// Builds a matrix from its row-major lower triangle
    /// (`n(n+1)/2` entries).
    pub fn from_packed(n: usize, entries: &[f64]) -> Result<Self> {
        check_dim(n)?;
        let len = n * (n + 1) / 2;
        if entries.len() != len {
            return Err(Error::DimensionMismatch(entries.len(), len));
        }
        let mut m = Self::zeros(n)?;
        m.packed[..len].copy_from_slice(entries);
        Ok(m)
    }

    /// Builds a matrix from `f(i, j)` evaluated on the lower triangle.
    pub fn from_lower_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut m = Self::zeros(n)?;
        for i in 0..n {
            for j in 0..=i {
                m.set(i, j, f(i, j));
            }
        }
        Ok(m)
    }

    /// `Q diag(values) Qᵀ`, with `Q` given column-wise (`q[i][k]` is entry
    /// `i` of column `k`).
    fn from_frame(n: usize, values: &[f64], q: &Dense) -> Self {
        let mut m = Self { n, packed: [0.0; PACKED_LEN] };
        for i in 0..n {
            for j in 0..=i {
                let mut acc = 0.0;
                for (k, v) in values.iter().enumerate().take(n) {
                    acc += q[i][k] * v * q[j][k];
                }
                m.set(i, j, acc);
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.packed[packed_index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.packed[packed_index(i, j)] = v;
    }

    /// Row-major lower triangle.
    pub fn packed(&self) -> &[f64] {
        &self.packed[..self.n * (self.n + 1) / 2]
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = *self;
        out.packed.iter_mut().for_each(|x| *x *= c);
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        let mut out = *self;
        for (x, y) in out.packed.iter_mut().zip(other.packed.iter()) {
            *x += y;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// `self + t·other`
    pub fn axpy(&self, t: f64, other: &Self) -> Self {
        self.add(&other.scale(t))
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Frobenius inner product `Σᵢⱼ AᵢⱼBᵢⱼ`.
    pub fn frobenius_dot(&self, other: &Self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                acc += self.get(i, j) * other.get(i, j);
            }
        }
        acc
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.packed().iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_dot(self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.packed().iter().all(|x| x.is_finite())
    }

    fn to_dense(self) -> Dense {
        let mut d = [[0.0; MAX_DIM]; MAX_DIM];
        for (i, row) in d.iter_mut().enumerate().take(self.n) {
            for (j, x) in row.iter_mut().enumerate().take(self.n) {
                *x = self.get(i, j);
            }
        }
        d
    }

    /// `Q A Qᵀ` for a square matrix `Q` given row-wise.
    pub fn conjugate(&self, q: &[Vec<f64>]) -> Result<Self> {
        if q.len() != self.n || q.iter().any(|r| r.len() != self.n) {
            return Err(Error::DimensionMismatch(q.len(), self.n));
        }
        let a = self.to_dense();
        let n = self.n;
        let mut qa = [[0.0; MAX_DIM]; MAX_DIM];
        for i in 0..n {
            for j in 0..n {
                qa[i][j] = (0..n).map(|k| q[i][k] * a[k][j]).sum();
            }
        }
        Self::from_lower_fn(n, |i, j| (0..n).map(|k| qa[i][k] * q[j][k]).sum())
    }

    /// Eigen-decomposition by cyclic Jacobi rotations.
    pub fn eigen(&self) -> Result<Eigen> {
        jacobi_eigen(self)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.eigen()?.values().to_vec())
    }

    /// Applies a scalar function through the spectral decomposition.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let e = self.eigen()?;
        let mapped: Vec<f64> = e.values().iter().map(|&x| f(x)).collect();
        Ok(Self::from_frame(self.n, &mapped, &e.vectors))
    }

    /// Smallest eigenvalue of `self − other`; non-negative iff `other ⪯ self`.
    pub fn loewner_gap(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other).eigen()?.values()[0])
    }
}

fn mat_mul(n: usize, a: &Dense, b: &Dense) -> Dense {
    let mut c = [[0.0; MAX_DIM]; MAX_DIM];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

fn dense_trace(n: usize, a: &Dense) -> f64 {
    (0..n).map(|i| a[i][i]).sum()
}

/// Ascending eigenvalues and an orthonormal eigenframe.
#[derive(Clone, Debug)]
pub struct Eigen {
    n: usize,
    values: [f64; MAX_DIM],
    /// Column `k` is the unit eigenvector of `values[k]`.
    vectors: Dense,
}

impl Eigen {
    pub fn values(&self) -> &[f64] {
        &self.values[..self.n]
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.n - 1]
    }

    /// Eigenvector `k` as a slice-backed vector.
    pub fn vector(&self, k: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.vectors[i][k]).collect()
    }

    /// Rebuilds `Q diag(λ) Qᵀ`.
    pub fn reconstruct(&self) -> SymMat {
        SymMat::from_frame(self.n, self.values(), &self.vectors)
    }
}

fn jacobi_eigen(a: &SymMat) -> Result<Eigen> {
    if !a.is_finite() {
        return Err(Error::EigenNonConvergence);
    }
    let n = a.n;
    let mut m = a.to_dense();
    let mut v = [[0.0; MAX_DIM]; MAX_DIM];
    for (i, row) in v.iter_mut().enumerate().take(n) {
        row[i] = 1.0;
    }
    let norm = a.frobenius_norm();
    let target = JACOBI_TOL * norm;

    let off = |m: &Dense| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i][j] * m[i][j];
                }
            }
        }
        s.sqrt()
    };

    let mut converged = norm == 0.0 || off(&m) <= target;
    let mut sweep = 0;
    while !converged {
        if sweep == JACOBI_MAX_SWEEPS {
            return Err(Error::EigenNonConvergence);
        }
        sweep += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m[p][q];
                if apq == 0.0 {
                    continue;
                }
                let tau = (m[q][q] - m[p][p]) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut().take(n) {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
        let o = off(&m);
        if !o.is_finite() {
            return Err(Error::EigenNonConvergence);
        }
        converged = o <= target;
    }

    // Sort ascending, carrying the frame along.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i][i].total_cmp(&m[j][j]));
    let mut values = [0.0; MAX_DIM];
    let mut vectors = [[0.0; MAX_DIM]; MAX_DIM];
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = m[src][src];
        for i in 0..n {
            vectors[i][dst] = v[i][src];
        }
    }
    Ok(Eigen { n, values, vectors })
}

/// Angle parameter range check: `(n−1)π/2 ≤ θ < nπ/2`.
pub fn admissible_angle(n: usize, theta: f64) -> bool {
    let lo = (n as f64 - 1.0) * FRAC_PI_2;
    let hi = n as f64 * FRAC_PI_2;
    theta.is_finite() && theta >= lo && theta < hi
}

/// The `(n, θ, r)` triple fixing which curvature equation is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CurvatureQuery {
    n: usize,
    theta: f64,
    r: f64,
    rhat: f64,
}

impl CurvatureQuery {
    pub fn from_rhat(n: usize, theta: f64, rhat: f64) -> Result<Self> {
        check_dim(n)?;
        if !admissible_angle(n, theta) {
            return Err(Error::AngleOutOfRange { n, theta });
        }
        if !(rhat > 0.0 && rhat.is_finite()) {
            return Err(Error::NonPositiveLevel(rhat));
        }
        let r = rhat / (theta / n as f64).tan();
        Ok(Self { n, theta, r, rhat })
    }

    pub fn from_r(n: usize, theta: f64, r: f64) -> Result<Self> {
        check_dim(n)?;
        if !admissible_angle(n, theta) {
            return Err(Error::AngleOutOfRange { n, theta });
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::NonPositiveLevel(r));
        }
        let rhat = r * (theta / n as f64).tan();
        Ok(Self { n, theta, r, rhat })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn rhat(&self) -> f64 {
        self.rhat
    }

    /// `tan(θ/n)`, the factor turning `R_θ` into `R̂_θ`.
    pub fn rescale(&self) -> f64 {
        (self.theta / self.n as f64).tan()
    }

    /// True on the lower edge `θ = (n−1)π/2` of the angle range.
    pub fn is_borderline(&self) -> bool {
        self.theta == (self.n as f64 - 1.0) * FRAC_PI_2
    }

    pub fn with_rhat(&self, rhat: f64) -> Result<Self> {
        Self::from_rhat(self.n, self.theta, rhat)
    }

    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        Self::from_rhat(self.n, theta, self.rhat)
    }
}

/// `Σ arctan(λᵢ)` over the spectrum.
pub fn arctan_sym(a: &SymMat) -> Result<f64> {
    Ok(a.eigen()?.values().iter().map(|l| l.atan()).sum())
}

/// `SL_r(A) = arctan(A / r)`.
pub fn sl(a: &SymMat, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::NonPositiveLevel(r));
    }
    Ok(sl_from_eigs(a.eigen()?.values(), r))
}

/// `SL_r` evaluated directly on a spectrum.
#[inline]
pub fn sl_from_eigs(lams: &[f64], r: f64) -> f64 {
    lams.iter().map(|l| (l / r).atan()).sum()
}

/// Result of the implicit solve `SL_r(A) = θ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RTheta {
    pub r: f64,
    pub rhat: f64,
}

/// `R_θ(A)`: the unique level with `SL_r(A) = θ`, for positive definite `A`.
pub fn r_theta(a: &SymMat, theta: f64) -> Result<RTheta> {
    let n = a.dim();
    let e = a.eigen()?;
    r_theta_from_eigs(e.values(), theta).map(|r| RTheta { r, rhat: r * (theta / n as f64).tan() })
}

/// `R_θ` on a spectrum (any order).
///
/// The root is bracketed by `[λ₁, λₙ] / tan(θ/n)` (Loewner monotonicity against
/// `λ₁·Id ⪯ A ⪯ λₙ·Id`), narrowed by bisection and finished with Newton steps
/// that are kept inside the bracket.
pub fn r_theta_from_eigs(lams: &[f64], theta: f64) -> Result<f64> {
    let n = lams.len();
    check_dim(n)?;
    if !(theta > 0.0 && theta < n as f64 * FRAC_PI_2) {
        return Err(Error::AngleOutOfRange { n, theta });
    }
    let lo_eig = lams.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi_eig = lams.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scale = lams.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if !lo_eig.is_finite() || !hi_eig.is_finite() {
        return Err(Error::EigenNonConvergence);
    }
    if lo_eig <= POSITIVE_CONE_TOL * scale || lo_eig <= 0.0 {
        return Err(Error::NotPositiveDefinite(lo_eig));
    }
    let t = (theta / n as f64).tan();
    let mut lo = lo_eig / t;
    let mut hi = hi_eig / t;
    if hi - lo <= 1e-15 * hi {
        return Ok(0.5 * (lo + hi));
    }
    // g(r) = SL_r − θ is decreasing: g(lo) ≥ 0 ≥ g(hi).
    let g = |r: f64| sl_from_eigs(lams, r) - theta;
    let dg = |r: f64| -> f64 {
        // d/dr Σ arctan(λ/r) = −(1/r) Σ (λ/r) / (1 + (λ/r)²)
        -lams.iter().map(|l| {
            let x = l / r;
            x / (1.0 + x * x)
        }).sum::<f64>()
            / r
    };
    let mut mid = 0.5 * (lo + hi);
    while hi - lo > 1e-6 * mid {
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        mid = 0.5 * (lo + hi);
    }
    let mut r = mid;
    for _ in 0..100 {
        let val = g(r);
        if val == 0.0 {
            break;
        }
        if val > 0.0 {
            lo = lo.max(r);
        } else {
            hi = hi.min(r);
        }
        let mut next = r - val / dg(r);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - r).abs();
        r = next;
        if step <= 1e-16 * r {
            break;
        }
    }
    Ok(r)
}

/// First derivatives of `SL_r` at `A`.
#[derive(Clone, Copy, Debug)]
pub struct SlDerivatives {
    /// `G` with `DSL_r(A)[M] = ⟨G, M⟩`; equals `(1/r)(Id + r⁻²A²)⁻¹`.
    pub grad: SymMat,
    /// `Id + r⁻²A²`
    pub mu_r: SymMat,
    /// `Tr(μ_r⁻¹ A)`
    pub phi_r: f64,
}

pub fn d_sl(a: &SymMat, r: f64) -> Result<SlDerivatives> {
    if !(r > 0.0) {
        return Err(Error::NonPositiveLevel(r));
    }
    let e = a.eigen()?;
    let n = a.dim();
    let mu: Vec<f64> = e.values().iter().map(|l| 1.0 + (l / r).powi(2)).collect();
    let inv: Vec<f64> = mu.iter().map(|m| 1.0 / (r * m)).collect();
    let phi_r = e.values().iter().zip(&mu).map(|(l, m)| l / m).sum();
    Ok(SlDerivatives {
        grad: SymMat::from_frame(n, &inv, &e.vectors),
        mu_r: SymMat::from_frame(n, &mu, &e.vectors),
        phi_r,
    })
}

/// Second derivative of `σ(A) = arg det(Id + iA)` along `M`:
/// `D²σ_A(M, M) = −2 Tr(μ⁻¹ A M μ⁻¹ M)` with `μ = Id + A²`.
pub fn d2_sigma(a: &SymMat, m: &SymMat) -> Result<f64> {
    if a.dim() != m.dim() {
        return Err(Error::DimensionMismatch(a.dim(), m.dim()));
    }
    let n = a.dim();
    let mu_inv = a.map_spectrum(|l| 1.0 / (1.0 + l * l))?.to_dense();
    let ad = a.to_dense();
    let md = m.to_dense();
    let t = mat_mul(n, &mu_inv, &ad);
    let t = mat_mul(n, &t, &md);
    let t = mat_mul(n, &t, &mu_inv);
    let t = mat_mul(n, &t, &md);
    Ok(-2.0 * dense_trace(n, &t))
}

/// Gradient of `A ↦ R_θ(A)`:
/// `DR_θ(A)[M] = r·Tr(μ_r⁻¹M) / Tr(μ_r⁻¹A)` at `r = R_θ(A)`.
pub fn d_r(a: &SymMat, theta: f64) -> Result<SymMat> {
    let e = a.eigen()?;
    let r = r_theta_from_eigs(e.values(), theta)?;
    let mu: Vec<f64> = e.values().iter().map(|l| 1.0 + (l / r).powi(2)).collect();
    let phi: f64 = e.values().iter().zip(&mu).map(|(l, m)| l / m).sum();
    let g: Vec<f64> = mu.iter().map(|m| r / (m * phi)).collect();
    Ok(SymMat::from_frame(a.dim(), &g, &e.vectors))
}

/// Second derivative of `R_θ` along `M`:
/// `D²R(M, M) = −2/(rφ) Tr(μ_r⁻¹ A M̃ μ_r⁻¹ M̃)`,
/// `M̃ = M − Tr(μ_r⁻¹M)/φ · A`, `φ = Tr(μ_r⁻¹A)`.
pub fn d2_r(a: &SymMat, theta: f64, m: &SymMat) -> Result<f64> {
    if a.dim() != m.dim() {
        return Err(Error::DimensionMismatch(a.dim(), m.dim()));
    }
    let n = a.dim();
    let e = a.eigen()?;
    let r = r_theta_from_eigs(e.values(), theta)?;
    let mu_inv_vals: Vec<f64> = e.values().iter().map(|l| 1.0 / (1.0 + (l / r).powi(2))).collect();
    let mu_inv = SymMat::from_frame(n, &mu_inv_vals, &e.vectors);
    let phi = mu_inv.frobenius_dot(a);
    let m_tilde = m.axpy(-mu_inv.frobenius_dot(m) / phi, a);
    let p = mu_inv.to_dense();
    let t = mat_mul(n, &p, &a.to_dense());
    let mt = m_tilde.to_dense();
    let t = mat_mul(n, &t, &mt);
    let t = mat_mul(n, &t, &p);
    let t = mat_mul(n, &t, &mt);
    Ok(-2.0 / (r * phi) * dense_trace(n, &t))
}

/// Constants of the sandwich `K₁·λ₁(A) ≤ R_θ(A) ≤ K₂·λ₁(A)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KBounds {
    /// `R_θ(Id) = 1/tan(θ/n)`
    pub k1: f64,
    /// `1/(θ − (n−1)π/2)`, or `+∞` when `θ ≤ (n−1)π/2`.
    pub k2: f64,
}

pub fn k_bounds(n: usize, theta: f64) -> Result<KBounds> {
    check_dim(n)?;
    if !(theta > 0.0 && theta < n as f64 * FRAC_PI_2) {
        return Err(Error::AngleOutOfRange { n, theta });
    }
    let k1 = 1.0 / (theta / n as f64).tan();
    let excess = theta - (n as f64 - 1.0) * FRAC_PI_2;
    let k2 = if excess > 0.0 { 1.0 / excess } else { f64::INFINITY };
    Ok(KBounds { k1, k2 })
}
