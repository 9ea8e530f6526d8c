//! Damped Newton for `SL_r(A(f)) = θ` with `f = 0` on the boundary, inside a
//! continuation loop over the rescaled level `r̂`.

use std::time::Instant;

use faer::sparse::{SparseColMat, Triplet};
use faer::prelude::Solve;
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::ad::{Dual, Real};
use crate::error::{Error, Result};
use crate::grid::{GraphFn, Grid, GridDesc, DEFAULT_F_MAX};
use crate::hgeom::{DomainKind, UmbilicCap};
use crate::par;
use crate::radial::{self, broadcast};
use crate::shape::{self, ShapeField};
use crate::slcalc::CurvatureQuery;

/// Angle offset used when the requested angle sits on the lower edge of the
/// admissible range.
pub const BORDERLINE_SHIFT: f64 = 1e-3;

/// A discrete residual map on a vector of unknowns.
pub trait Discretization: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unknowns read by residual row `i`, ascending.
    fn footprint(&self, i: usize) -> Vec<usize>;

    /// Curvature records at every row.
    fn field(&self, u: &[f64], q: &CurvatureQuery) -> Result<ShapeField>;

    /// Residual rows only.
    fn residual(&self, u: &[f64], q: &CurvatureQuery) -> Result<Vec<f64>>;

    /// Exact derivative of the residual rows `rows` along the direction that
    /// is `1` on the unknowns flagged in `seed` and `0` elsewhere.
    fn directional(&self, u: &[f64], seed: &[bool], rows: &[usize], q: &CurvatureQuery) -> Result<Vec<f64>>;

    /// Full node vector (boundary included) of the graph with unknowns `u`.
    fn graph(&self, u: &[f64]) -> Result<GraphFn>;

    /// Unknowns of a graph function on this discretization's grid.
    fn unknowns(&self, f: &GraphFn) -> Vec<f64>;

    fn grid(&self) -> &Grid;
}

/// Interior nodes of a polar lattice (`n = 2`).
#[derive(Clone, Debug)]
pub struct PolarProblem {
    grid: Grid,
}

impl PolarProblem {
    pub fn new(grid: Grid) -> Self {
        Self { grid }
    }

    fn full(&self, u: &[f64]) -> Vec<f64> {
        let mut v = u.to_vec();
        v.resize(self.grid.len(), 0.0);
        v
    }
}

impl Discretization for PolarProblem {
    fn len(&self) -> usize {
        self.grid.n_interior()
    }

    fn footprint(&self, i: usize) -> Vec<usize> {
        let mut cols: Vec<usize> =
            self.grid.stencil9(i).into_iter().filter(|&c| !self.grid.is_boundary(c)).collect();
        cols.sort_unstable();
        cols.dedup();
        cols
    }

    fn field(&self, u: &[f64], q: &CurvatureQuery) -> Result<ShapeField> {
        shape::shape_field_values(&self.grid, &self.full(u), q)
    }

    fn residual(&self, u: &[f64], q: &CurvatureQuery) -> Result<Vec<f64>> {
        let values = self.full(u);
        let pts = shape::embed_all(&self.grid, &values);
        par::try_map_indexed(self.len(), |i| shape::residual_from_points(&self.grid, &pts, i, q))
    }

    fn directional(&self, u: &[f64], seed: &[bool], rows: &[usize], q: &CurvatureQuery) -> Result<Vec<f64>> {
        let g = &self.grid;
        let interior = g.n_interior();
        par::try_map_slice(rows, |&i| {
            let st = g.stencil9(i);
            let x: [[Dual; 4]; 9] = std::array::from_fn(|k| {
                let c = st[k];
                let node = g.node(c);
                let t = if c < interior { Dual::new(u[c], if seed[c] { 1.0 } else { 0.0 }) } else { Dual::cst(0.0) };
                shape::embed_r(node.s, node.alpha, t)
            });
            Ok(shape::polar_residual(&x, g.dsigma(), g.dalpha(), q, i)?.d)
        })
    }

    fn graph(&self, u: &[f64]) -> Result<GraphFn> {
        GraphFn::new(self.grid.clone(), self.full(u))
    }

    fn unknowns(&self, f: &GraphFn) -> Vec<f64> {
        f.interior().to_vec()
    }

    fn grid(&self) -> &Grid {
        &self.grid
    }
}

/// Ring values of a rotationally symmetric graph over a disk (any `n`).
#[derive(Clone, Debug)]
pub struct RadialProblem {
    grid: Grid,
}

impl RadialProblem {
    pub fn new(grid: Grid) -> Result<Self> {
        if grid.domain().kind != DomainKind::Disk {
            return Err(Error::Domain("rotational solves need a disk domain".into()));
        }
        Ok(Self { grid })
    }

    fn full(&self, u: &[f64]) -> Vec<f64> {
        let mut v = u.to_vec();
        v.push(0.0);
        v
    }
}

impl Discretization for RadialProblem {
    fn len(&self) -> usize {
        self.grid.ns()
    }

    fn footprint(&self, i: usize) -> Vec<usize> {
        (i.saturating_sub(1)..=(i + 1).min(self.len() - 1)).collect()
    }

    fn field(&self, u: &[f64], q: &CurvatureQuery) -> Result<ShapeField> {
        radial::profile_field(&self.grid, &self.full(u), q)
    }

    fn residual(&self, u: &[f64], q: &CurvatureQuery) -> Result<Vec<f64>> {
        let at = |j: usize| if j < u.len() { u[j] } else { 0.0 };
        (0..self.len()).map(|j| radial::ring_residual(&self.grid, at, j, q)).collect()
    }

    fn directional(&self, u: &[f64], seed: &[bool], rows: &[usize], q: &CurvatureQuery) -> Result<Vec<f64>> {
        let at = |j: usize| {
            if j < u.len() {
                Dual::new(u[j], if seed[j] { 1.0 } else { 0.0 })
            } else {
                Dual::cst(0.0)
            }
        };
        rows.iter().map(|&j| Ok(radial::ring_residual(&self.grid, at, j, q)?.d)).collect()
    }

    fn graph(&self, u: &[f64]) -> Result<GraphFn> {
        broadcast(&self.grid, &self.full(u))
    }

    fn unknowns(&self, f: &GraphFn) -> Vec<f64> {
        let mut p = radial::profile_of(f);
        p.pop();
        p
    }

    fn grid(&self) -> &Grid {
        &self.grid
    }
}

/// Discretization matching the query dimension: the polar lattice for
/// `n = 2`, the rotational reduction otherwise.
pub fn problem_for(grid: &Grid, n: usize) -> Result<Box<dyn Discretization>> {
    if n == 2 {
        Ok(Box::new(PolarProblem::new(grid.clone())))
    } else {
        Ok(Box::new(RadialProblem::new(grid.clone())?))
    }
}

impl<D: Discretization + ?Sized> Discretization for Box<D> {
    fn len(&self) -> usize {
        (**self).len()
    }
    fn footprint(&self, i: usize) -> Vec<usize> {
        (**self).footprint(i)
    }
    fn field(&self, u: &[f64], q: &CurvatureQuery) -> Result<ShapeField> {
        (**self).field(u, q)
    }
    fn residual(&self, u: &[f64], q: &CurvatureQuery) -> Result<Vec<f64>> {
        (**self).residual(u, q)
    }
    fn directional(&self, u: &[f64], seed: &[bool], rows: &[usize], q: &CurvatureQuery) -> Result<Vec<f64>> {
        (**self).directional(u, seed, rows, q)
    }
    fn graph(&self, u: &[f64]) -> Result<GraphFn> {
        (**self).graph(u)
    }
    fn unknowns(&self, f: &GraphFn) -> Vec<f64> {
        (**self).unknowns(f)
    }
    fn grid(&self) -> &Grid {
        (**self).grid()
    }
}

/// Greedy distance-2 coloring: columns sharing a color never appear in the
/// same residual row.
pub fn color_columns<D: Discretization + ?Sized>(d: &D) -> Vec<Vec<usize>> {
    let n = d.len();
    let footprints: Vec<Vec<usize>> = (0..n).map(|i| d.footprint(i)).collect();
    let mut rows_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, fp) in footprints.iter().enumerate() {
        for &c in fp {
            rows_of[c].push(i);
        }
    }
    let mut color = vec![usize::MAX; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut banned: Vec<usize> = Vec::new();
    for c in 0..n {
        banned.clear();
        for &i in &rows_of[c] {
            banned.extend(footprints[i].iter().map(|&o| color[o]).filter(|&k| k != usize::MAX));
        }
        let k = (0..).find(|k| !banned.contains(k)).expect("unbounded color range");
        color[c] = k;
        if k == groups.len() {
            groups.push(Vec::new());
        }
        groups[k].push(c);
    }
    groups
}

/// Sparse Jacobian `∂R_i/∂u_j` in triplet form, sorted by `(col, row)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseJacobian {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseJacobian {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// `(row, col, value)` triplets.
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries
            .binary_search_by(|&(r, c, _)| (c, r).cmp(&(col, row)))
            .map(|k| self.entries[k].2)
            .unwrap_or(0.0)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    pub fn max_abs_diff(&self, other: &SparseJacobian) -> f64 {
        let mut m = 0.0f64;
        for &(r, c, v) in self.entries.iter().chain(other.entries.iter()) {
            m = m.max((self.get(r, c) - other.get(r, c)).abs());
            let _ = v;
        }
        m
    }

    /// Solves `J x = b` by sparse LU; `None` when the factorization fails or
    /// the solution is not finite.
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let triplets: Vec<Triplet<usize, usize, f64>> =
            self.entries.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
        // Sequential factorization keeps results independent of the pool size.
        faer::set_global_parallelism(faer::Par::Seq);
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(self.n, self.n, &triplets).ok()?;
        let lu = a.sp_lu().ok()?;
        let rhs = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        let x = lu.solve(&rhs);
        let out: Vec<f64> = (0..self.n).map(|i| x[(i, 0)]).collect();
        out.iter().all(|v| v.is_finite()).then_some(out)
    }
}

fn sort_entries(mut entries: Vec<(usize, usize, f64)>) -> Vec<(usize, usize, f64)> {
    entries.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
    entries
}

/// Forward-difference Jacobian with all columns of one color perturbed at
/// once; each row then sees exactly one perturbed unknown per color.
pub fn assemble_jacobian<D: Discretization + ?Sized>(
    d: &D,
    u: &[f64],
    q: &CurvatureQuery,
    step: f64,
) -> Result<SparseJacobian> {
    let base = d.residual(u, q)?;
    let groups = color_columns(d);
    let footprints: Vec<Vec<usize>> = (0..d.len()).map(|i| d.footprint(i)).collect();
    let mut color_of = vec![0usize; d.len()];
    for (k, g) in groups.iter().enumerate() {
        for &c in g {
            color_of[c] = k;
        }
    }
    let mut entries = Vec::new();
    for (k, group) in groups.iter().enumerate() {
        let mut up = u.to_vec();
        for &c in group {
            up[c] += step;
        }
        let pert = d.residual(&up, q)?;
        for (i, fp) in footprints.iter().enumerate() {
            if let Some(&c) = fp.iter().find(|&&c| color_of[c] == k) {
                entries.push((i, c, (pert[i] - base[i]) / step));
            }
        }
    }
    Ok(SparseJacobian { n: d.len(), entries: sort_entries(entries) })
}

/// Jacobian with the same coloring as [`assemble_jacobian`] but with the
/// difference quotient replaced by a dual-number derivative, so every entry
/// is exact up to rounding.
pub fn assemble_jacobian_exact<D: Discretization + ?Sized>(
    d: &D,
    u: &[f64],
    q: &CurvatureQuery,
) -> Result<SparseJacobian> {
    let groups = color_columns(d);
    let footprints: Vec<Vec<usize>> = (0..d.len()).map(|i| d.footprint(i)).collect();
    let mut color_of = vec![0usize; d.len()];
    for (k, g) in groups.iter().enumerate() {
        for &c in g {
            color_of[c] = k;
        }
    }
    let mut entries = Vec::new();
    let mut seed = vec![false; d.len()];
    for (k, group) in groups.iter().enumerate() {
        let mut rows = Vec::new();
        let mut cols = Vec::new();
        for (i, fp) in footprints.iter().enumerate() {
            if let Some(&c) = fp.iter().find(|&&c| color_of[c] == k) {
                rows.push(i);
                cols.push(c);
            }
        }
        group.iter().for_each(|&c| seed[c] = true);
        let vals = d.directional(u, &seed, &rows, q)?;
        group.iter().for_each(|&c| seed[c] = false);
        entries.extend(rows.iter().zip(&cols).zip(vals).map(|((&i, &c), v)| (i, c, v)));
    }
    Ok(SparseJacobian { n: d.len(), entries: sort_entries(entries) })
}

/// Column-by-column forward differences; reference for [`assemble_jacobian`].
pub fn assemble_jacobian_uncolored<D: Discretization + ?Sized>(
    d: &D,
    u: &[f64],
    q: &CurvatureQuery,
    step: f64,
) -> Result<SparseJacobian> {
    let base = d.residual(u, q)?;
    let footprints: Vec<Vec<usize>> = (0..d.len()).map(|i| d.footprint(i)).collect();
    let mut entries = Vec::new();
    for c in 0..d.len() {
        let mut up = u.to_vec();
        up[c] += step;
        let pert = d.residual(&up, q)?;
        for (i, fp) in footprints.iter().enumerate() {
            if fp.binary_search(&c).is_ok() {
                entries.push((i, c, (pert[i] - base[i]) / step));
            }
        }
    }
    Ok(SparseJacobian { n: d.len(), entries: sort_entries(entries) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Armijo {
    pub c: f64,
    pub backtrack: f64,
    pub min_step: f64,
}

impl Default for Armijo {
    fn default() -> Self {
        Self { c: 1e-4, backtrack: 0.5, min_step: 1e-6 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    Linear,
    Geometric,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Homotopy {
    pub rhat_start: f64,
    pub steps: usize,
    pub schedule: Schedule,
}

impl Default for Homotopy {
    fn default() -> Self {
        Self { rhat_start: 0.05, steps: 12, schedule: Schedule::Linear }
    }
}

/// How Newton builds its Jacobian.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JacobianKind {
    /// Colored dual-number derivatives.
    Exact,
    /// Colored forward differences with step `fd_step`.
    Forward,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    /// Sup-norm residual target.
    pub tol: f64,
    pub max_newton: usize,
    pub armijo: Armijo,
    pub homotopy: Homotopy,
    pub seed: u64,
    pub jacobian: JacobianKind,
    /// Difference step for [`JacobianKind::Forward`]; `None` means
    /// `1e-6·(1 + ‖f‖_∞)`.
    pub fd_step: Option<f64>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_newton: 40,
            armijo: Armijo::default(),
            homotopy: Homotopy::default(),
            seed: 0,
            jacobian: JacobianKind::Exact,
            fd_step: None,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        let a = &self.armijo;
        let h = &self.homotopy;
        let ok = self.tol > 0.0
            && self.max_newton > 0
            && a.c > 0.0
            && a.c < 0.5
            && a.backtrack > 0.0
            && a.backtrack < 1.0
            && a.min_step > 0.0
            && a.min_step <= 1.0
            && h.rhat_start > 0.0
            && h.rhat_start <= 1.0
            && h.steps > 0
            && self.fd_step.map_or(true, |s| s > 0.0 && s.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Config("solver settings out of range".into()))
        }
    }

    fn build_jacobian<D: Discretization + ?Sized>(&self, d: &D, u: &[f64], q: &CurvatureQuery) -> Result<SparseJacobian> {
        match self.jacobian {
            JacobianKind::Exact => assemble_jacobian_exact(d, u, q),
            JacobianKind::Forward => assemble_jacobian(d, u, q, self.step_for(u)),
        }
    }

    pub fn step_for(&self, u: &[f64]) -> f64 {
        self.fd_step.unwrap_or_else(|| 1e-6 * (1.0 + u.iter().fold(0.0f64, |m, v| m.max(v.abs()))))
    }
}

/// Why a Newton sequence stopped short of the tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum NewtonFailure {
    MaxIterations,
    LineSearchStall { step: f64 },
    SingularJacobian,
    Inadmissible { node: usize },
    Evaluation { message: String },
}

impl std::fmt::Display for NewtonFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::MaxIterations => write!(f, "Newton iteration limit reached"),
            Self::LineSearchStall { step } => write!(f, "line search stalled at step {step:e}"),
            Self::SingularJacobian => write!(f, "singular Jacobian"),
            Self::Inadmissible { node } => write!(f, "iterate not strictly convex at node {node}"),
            Self::Evaluation { message } => write!(f, "evaluation failed: {message}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NewtonStats {
    pub iters: usize,
    /// `‖R‖₂` of every accepted iterate, starting with the initial guess.
    pub res: Vec<f64>,
    /// `‖R‖_∞` of the same iterates.
    pub res_inf: Vec<f64>,
    pub min_lambda1: f64,
    pub failure: Option<NewtonFailure>,
}

impl NewtonStats {
    pub fn converged(&self) -> bool {
        self.failure.is_none()
    }
}

struct Eval {
    res: Vec<f64>,
    merit: f64,
    inf: f64,
    min_lambda: f64,
    first_bad: Option<usize>,
}

fn evaluate<D: Discretization + ?Sized>(d: &D, u: &[f64], q: &CurvatureQuery) -> Result<Eval> {
    let field = d.field(u, q)?;
    let res = field.residuals();
    // Fixed-order reductions.
    let merit = res.iter().map(|r| r * r).sum::<f64>();
    let inf = res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let first_bad = field.nodes.iter().find(|n| !n.admissible).map(|n| n.index);
    Ok(Eval { res, merit, inf, min_lambda: field.min_lambda1(), first_bad })
}

fn within_limits(u: &[f64]) -> bool {
    u.iter().all(|v| v.is_finite() && *v >= 0.0 && *v <= DEFAULT_F_MAX)
}

/// Damped Newton on an arbitrary discretization, from unknowns `u0`.
pub fn newton_core<D: Discretization + ?Sized>(
    d: &D,
    u0: &[f64],
    q: &CurvatureQuery,
    cfg: &SolveConfig,
) -> (Vec<f64>, NewtonStats) {
    let mut stats = NewtonStats { min_lambda1: f64::NAN, ..Default::default() };
    let mut u = u0.to_vec();
    let mut cur = match evaluate(d, &u, q) {
        Ok(e) => e,
        Err(e) => {
            stats.failure = Some(NewtonFailure::Evaluation { message: e.to_string() });
            return (u, stats);
        }
    };
    stats.min_lambda1 = cur.min_lambda;
    stats.res.push(cur.merit.sqrt());
    stats.res_inf.push(cur.inf);
    if let Some(node) = cur.first_bad {
        stats.failure = Some(NewtonFailure::Inadmissible { node });
        return (u, stats);
    }
    loop {
        if cur.inf <= cfg.tol {
            return (u, stats);
        }
        if stats.iters >= cfg.max_newton {
            stats.failure = Some(NewtonFailure::MaxIterations);
            return (u, stats);
        }
        let jac = match cfg.build_jacobian(d, &u, q) {
            Ok(j) => j,
            Err(e) => {
                stats.failure = Some(NewtonFailure::Evaluation { message: e.to_string() });
                return (u, stats);
            }
        };
        let rhs: Vec<f64> = cur.res.iter().map(|r| -r).collect();
        let delta = match jac.solve(&rhs) {
            Some(x) => x,
            None => {
                stats.failure = Some(NewtonFailure::SingularJacobian);
                return (u, stats);
            }
        };
        let back = jac.matvec(&delta);
        let lin_err = back.iter().zip(&rhs).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if !(lin_err <= 1e-6 * cur.merit.sqrt().max(f64::MIN_POSITIVE)) {
            stats.failure = Some(NewtonFailure::SingularJacobian);
            return (u, stats);
        }

        let mut t = 1.0;
        let accepted = loop {
            if t < cfg.armijo.min_step {
                break None;
            }
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, b)| a + t * b).collect();
            if within_limits(&trial) {
                if let Ok(e) = evaluate(d, &trial, q) {
                    if e.first_bad.is_none() && e.merit <= (1.0 - 2.0 * cfg.armijo.c * t) * cur.merit {
                        break Some((trial, e));
                    }
                }
            }
            t *= cfg.armijo.backtrack;
        };
        match accepted {
            Some((trial, e)) => {
                u = trial;
                cur = e;
                stats.iters += 1;
                stats.min_lambda1 = cur.min_lambda;
                stats.res.push(cur.merit.sqrt());
                stats.res_inf.push(cur.inf);
                log::debug!("newton {}: |R|inf = {:.3e}, step {t}", stats.iters, cur.inf);
            }
            None => {
                stats.failure = Some(NewtonFailure::LineSearchStall { step: t });
                return (u, stats);
            }
        }
    }
}

/// Damped Newton from `f0`; the discretization follows `q.n()`.
///
/// Failures are reported in the stats (the returned graph is then the last
/// accepted iterate); `Err` is reserved for malformed inputs.
pub fn newton_solve(f0: &GraphFn, q: &CurvatureQuery, cfg: &SolveConfig) -> Result<(GraphFn, NewtonStats)> {
    cfg.validate()?;
    let d = problem_for(f0.grid(), q.n())?;
    let (u, stats) = newton_core(&d, &d.unknowns(f0), q, cfg);
    Ok((d.graph(&u)?, stats))
}

/// Jacobian of the residual at `f` (polar lattice for `n = 2`).
pub fn jacobian(f: &GraphFn, q: &CurvatureQuery, cfg: &SolveConfig) -> Result<SparseJacobian> {
    let d = problem_for(f.grid(), q.n())?;
    let u = d.unknowns(f);
    let field = d.field(&u, q)?;
    if let Some(n) = field.nodes.iter().find(|n| !n.admissible) {
        return Err(Error::Inadmissible(n.index));
    }
    cfg.build_jacobian(&d, &u, q)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub rhat: f64,
    pub theta: f64,
    pub iters: usize,
    pub res: Vec<f64>,
    pub min_lambda1: f64,
    pub max_f: f64,
    pub ordering_ok: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failure: Option<NewtonFailure>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub levels: Vec<LevelReport>,
    pub converged: bool,
    pub grid: GridDesc,
    pub runtime_s: Option<f64>,
}

impl SolveReport {
    pub fn ordering_ok(&self) -> bool {
        self.levels.iter().all(|l| l.ordering_ok)
    }
}

/// Result of a continuation run: the last accepted graph, the graphs at
/// every finished level and the report.
#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub f: GraphFn,
    pub path: Vec<GraphFn>,
    pub report: SolveReport,
}

/// Slack allowed when checking that levels are nested.
pub const ORDERING_SLACK: f64 = 1e-10;

/// Levels `r̂_0 = start, …, r̂_steps = target`.
pub fn schedule(start: f64, target: f64, steps: usize, kind: Schedule) -> Vec<f64> {
    if start >= target {
        return vec![target];
    }
    let mut out: Vec<f64> = (0..=steps)
        .map(|k| {
            let t = k as f64 / steps as f64;
            match kind {
                Schedule::Linear => start + (target - start) * t,
                Schedule::Geometric => start * (target / start).powf(t),
            }
        })
        .collect();
    out[steps] = target;
    out
}

/// Initial guess at level `rhat`: the exact cap on disks; on star domains
/// the cap over the mean-radius disk composed with the lattice map `σ ↦ σρ`.
pub fn initial_guess(grid: &Grid, rhat: f64) -> Result<GraphFn> {
    let dom = grid.domain();
    let cap = UmbilicCap::new(rhat, dom.rho)?;
    GraphFn::from_fn(grid.clone(), |node| {
        let s = match dom.kind {
            DomainKind::Disk => node.s,
            DomainKind::Star => node.sigma * dom.rho,
        };
        cap.height(s).unwrap_or(0.0)
    })
}

fn check_target(q: &CurvatureQuery, cfg: &SolveConfig) -> Result<()> {
    cfg.validate()?;
    if q.rhat() > 1.0 {
        return Err(Error::Config(format!("target rhat {} exceeds 1", q.rhat())));
    }
    Ok(())
}

fn ordered_above(lower: &[f64], upper: &[f64]) -> bool {
    lower.iter().zip(upper).all(|(a, b)| b - a >= -ORDERING_SLACK)
}

/// Continuation in `r̂` from `cfg.homotopy.rhat_start` to `q.rhat()` with
/// warm starts. On the lower edge of the angle range each level is solved
/// at `θ + 1e-3` and the final level is polished at `θ` as an extra entry.
pub fn continuity_solve(grid: &Grid, q: &CurvatureQuery, cfg: &SolveConfig) -> Result<SolveOutcome> {
    check_target(q, cfg)?;
    let clock = Instant::now();
    let d = problem_for(grid, q.n())?;
    let theta_path = if q.is_borderline() {
        log::warn!("theta on the lower edge; solving at theta + {BORDERLINE_SHIFT} and polishing");
        q.theta() + BORDERLINE_SHIFT
    } else {
        q.theta()
    };
    let start = cfg.homotopy.rhat_start.min(q.rhat());
    let levels = schedule(start, q.rhat(), cfg.homotopy.steps, cfg.homotopy.schedule);

    let mut u = d.unknowns(&initial_guess(grid, start)?);
    let mut reports: Vec<LevelReport> = Vec::new();
    let mut path: Vec<GraphFn> = Vec::new();
    let mut accepted: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut plan: Vec<(f64, f64)> = levels.iter().map(|&r| (r, theta_path)).collect();
    if q.is_borderline() {
        plan.push((q.rhat(), q.theta()));
    }

    let mut converged = true;
    for &(rhat, theta) in &plan {
        let ql = CurvatureQuery::from_rhat(q.n(), theta, rhat)?;
        let (next, stats) = newton_core(&d, &u, &ql, cfg);
        let prev = accepted.iter().rev().find(|(r, _)| *r < rhat).map(|(_, v)| v);
        let ordering_ok = stats.converged() && prev.map_or(true, |p| ordered_above(p, &next));
        reports.push(LevelReport {
            rhat,
            theta,
            iters: stats.iters,
            res: stats.res.clone(),
            min_lambda1: stats.min_lambda1,
            max_f: next.iter().fold(0.0f64, |m, v| m.max(*v)),
            ordering_ok,
            failure: stats.failure.clone(),
        });
        if let Some(fail) = &stats.failure {
            log::warn!("level rhat={rhat} failed: {fail}");
            converged = false;
            break;
        }
        log::info!("level rhat={rhat:.4} theta={theta:.6}: {} Newton steps", stats.iters);
        path.push(d.graph(&next)?);
        accepted.push((rhat, next.clone()));
        u = next;
    }
    let f = match path.last() {
        Some(f) => f.clone(),
        None => d.graph(&u)?,
    };
    let report = SolveReport {
        levels: reports,
        converged,
        grid: grid.desc(),
        runtime_s: Some(clock.elapsed().as_secs_f64()),
    };
    Ok(SolveOutcome { f, path, report })
}
