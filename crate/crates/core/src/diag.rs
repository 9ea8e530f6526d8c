//! Comparison diagnostics: the boundary angle function, the interior
//! threshold polynomial, a discrete geometric maximum principle and a
//! subharmonicity probe for the mean curvature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GraphFn;
use crate::shape::{delta_b, shape_field};
use crate::slcalc::CurvatureQuery;
use std::f64::consts::FRAC_PI_2;

/// Number of witnesses kept in a [`Verdict`].
pub const MAX_WITNESSES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub node: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`; negative values are violations.
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    /// The worst nodes, smallest slack first.
    pub witnesses: Vec<Witness>,
}

impl Verdict {
    /// Builds a verdict from `(node, lhs, rhs)` triples: it passes when every
    /// `rhs − lhs ≥ −tol`.
    pub fn from_checks(checks: impl IntoIterator<Item = (usize, f64, f64)>, tol: f64) -> Self {
        let mut all: Vec<Witness> =
            checks.into_iter().map(|(node, lhs, rhs)| Witness { node, lhs, rhs, slack: rhs - lhs }).collect();
        let pass = all.iter().all(|w| w.slack >= -tol);
        all.sort_by(|a, b| a.slack.total_cmp(&b.slack).then(a.node.cmp(&b.node)));
        all.truncate(MAX_WITNESSES);
        Self { pass, witnesses: all }
    }

    pub fn worst_slack(&self) -> Option<f64> {
        self.witnesses.first().map(|w| w.slack)
    }
}

/// Supremum of `m` with `SL_r(λ₁, …, λ_{n−1}, m) < θ`: `r·tan(θ − Σ arctan(λᵢ/r))`
/// when that angle lies in `(0, π/2)`, `+∞` from `π/2` on, and `0` when the
/// angle is not positive (no admissible `m > 0`).
pub fn mu_boundary(lams: &[f64], r: f64, theta: f64) -> f64 {
    let gap = theta - lams.iter().map(|l| (l / r).atan()).sum::<f64>();
    if gap >= FRAC_PI_2 {
        f64::INFINITY
    } else if gap <= 0.0 {
        0.0
    } else {
        r * gap.tan()
    }
}

/// Bisection reference for [`mu_boundary`]: brackets the crossing of
/// `m ↦ SL_r(λ, m)` through `θ` by doubling, then halves the bracket.
/// Returns `+∞` when no crossing exists below `m_cap`.
pub fn mu_bisection(lams: &[f64], r: f64, theta: f64, m_cap: f64) -> f64 {
    let base: f64 = lams.iter().map(|l| (l / r).atan()).sum();
    let sl = |m: f64| base + (m / r).atan();
    if sl(0.0) >= theta {
        return 0.0;
    }
    let mut hi = r.max(1e-300);
    while sl(hi) < theta {
        hi *= 2.0;
        if hi > m_cap {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sl(mid) < theta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `F(x, y; r) = r²xy(x³ + y³ − x²y − y²x) / (2(1 + x²)(1 + y²))`.
///
/// The cubic is evaluated as `(x + y)(x − y)²`, which keeps the result
/// exactly symmetric and nonnegative for `x, y ≥ 0`.
pub fn f_threshold(x: f64, y: f64, r: f64) -> f64 {
    let d = x - y;
    r * r * (x * y) * ((x + y) * (d * d)) / (2.0 * ((1.0 + x * x) * (1.0 + y * y)))
}

/// Geometric maximum principle on graphs `f_in ≤ f_out`: where the two are
/// within `2h²` of touching, the lower (inner) graph must be at least as
/// curved as the upper one, `r̂_θ(A_out) ≤ r̂_θ(A_in) + tol`. Nodes where a
/// graph is not strictly convex count with `r̂ = 0`.
pub fn max_principle_check(f_in: &GraphFn, f_out: &GraphFn, q: &CurvatureQuery, tol: f64) -> Result<Verdict> {
    let grid = f_in.grid();
    if grid.desc() != f_out.grid().desc() {
        return Err(Error::GridMismatch);
    }
    let n_int = grid.n_interior();
    let (a, b) = (f_in.values(), f_out.values());
    if let Some((node, gap)) =
        (0..grid.len()).map(|i| (i, b[i] - a[i])).filter(|&(_, g)| g < -tol).min_by(|x, y| x.1.total_cmp(&y.1))
    {
        return Err(Error::Ordering { node, gap });
    }
    let band = 2.0 * grid.h() * grid.h();
    let touching: Vec<usize> = (0..n_int).filter(|&i| b[i] - a[i] <= band).collect();
    if touching.is_empty() {
        return Ok(Verdict { pass: true, witnesses: Vec::new() });
    }
    let fin = shape_field(f_in, q)?;
    let fout = shape_field(f_out, q)?;
    let checks = touching.into_iter().map(|i| {
        let r_in = fin.nodes[i].rhat_theta.unwrap_or(0.0);
        let r_out = fout.nodes[i].rhat_theta.unwrap_or(0.0);
        (i, r_out, r_in)
    });
    Ok(Verdict::from_checks(checks, tol))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubharmonicReport {
    /// `Δ^B H ≤ tol` at the evaluated maximum of `H` (vacuous when `H` has
    /// no local maximum among fully interior nodes).
    pub verdict: Verdict,
    /// Node of the largest local maximum of `H`, if any.
    pub argmax: Option<usize>,
    pub h_max: Option<f64>,
    pub laplacian_at_max: Option<f64>,
    /// `Σ_{i<j} F(λᵢ, λⱼ; r)` at that node.
    pub threshold_sum: Option<f64>,
    /// `sup |Δ^B H|` over all evaluated nodes.
    pub sup_abs_laplacian: f64,
}

/// Evaluates `H = Tr A` and `Δ^B H` on every node whose stencil stays in
/// the interior, then checks the maximum-principle sign at the largest
/// local maximum of `H`.
pub fn subharmonic_probe(f: &GraphFn, q: &CurvatureQuery, tol_probe: f64) -> Result<SubharmonicReport> {
    let grid = f.grid();
    let field = shape_field(f, q)?;
    if let Some(n) = field.nodes.iter().find(|n| !n.admissible) {
        return Err(Error::Inadmissible(n.index));
    }
    let h: Vec<f64> = field.nodes.iter().map(|n| n.mean).collect();
    let lap = delta_b(f, q, &h)?;
    let sup_abs_laplacian = lap.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));

    let is_local_max = |i: usize| {
        lap[i].is_some()
            && grid.stencil9(i).iter().all(|&c| c == i || (c < h.len() && h[c] <= h[i]))
    };
    let argmax = (0..h.len()).filter(|&i| is_local_max(i)).max_by(|&x, &y| h[x].total_cmp(&h[y]).then(y.cmp(&x)));
    let (verdict, laplacian_at_max, threshold_sum) = match argmax {
        Some(i) => {
            let l = lap[i].expect("evaluated node");
            let lams = &field.nodes[i].eigenvalues;
            let mut sum = 0.0;
            for a in 0..lams.len() {
                for b in a + 1..lams.len() {
                    sum += f_threshold(lams[a], lams[b], q.r());
                }
            }
            (Verdict::from_checks([(i, l, tol_probe)], 0.0), Some(l), Some(sum))
        }
        None => (Verdict { pass: true, witnesses: Vec::new() }, None, None),
    };
    Ok(SubharmonicReport {
        verdict,
        argmax,
        h_max: argmax.map(|i| h[i]),
        laplacian_at_max,
        threshold_sum,
        sup_abs_laplacian,
    })
}
