//! Staggered polar lattice over a star-shaped domain and graph functions
//! sampled on it.
//!
//! Interior nodes sit at normalized radii `σ_j = (j + ½)·Δσ`, `j < Ns`, with
//! `Δσ = 1/(Ns + ½)`, so the boundary ring `σ = 1` is the next lattice ring and
//! no node sits on the center. Angles are `α_k = 2πk/Nα`. A stencil that steps
//! below `j = 0` lands on the antipodal node `(0, k + Nα/2)`.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hgeom::{DomainKind, DomainSpec};

/// Default upper guard on graph heights.
pub const DEFAULT_F_MAX: f64 = 10.0;

/// Geometry of one lattice node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub index: usize,
    pub j: usize,
    pub k: usize,
    pub sigma: f64,
    pub s: f64,
    pub alpha: f64,
    pub boundary: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    dom: DomainSpec,
    ns: usize,
    nalpha: usize,
    dsigma: f64,
    dalpha: f64,
    s: Vec<f64>,
    ds_dsigma: Vec<f64>,
    h: f64,
}

/// Serializable grid descriptor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridDesc {
    pub domain: DomainKind,
    pub rho: f64,
    pub fourier: Vec<(u32, f64)>,
    pub ns: usize,
    pub nalpha: usize,
}

impl Grid {
    pub fn new(dom: DomainSpec, ns: usize, nalpha: usize) -> Result<Self> {
        dom.validate()?;
        if ns < 8 {
            return Err(Error::Grid(format!("Ns = {ns} below minimum 8")));
        }
        if nalpha < 16 || nalpha % 2 != 0 {
            return Err(Error::Grid(format!("Nalpha = {nalpha} must be even and at least 16")));
        }
        let dsigma = 1.0 / (ns as f64 + 0.5);
        let dalpha = TAU / nalpha as f64;
        let total = (ns + 1) * nalpha;
        let mut s = Vec::with_capacity(total);
        let mut ds_dsigma = Vec::with_capacity(total);
        for j in 0..=ns {
            let sigma = if j == ns { 1.0 } else { (j as f64 + 0.5) * dsigma };
            for k in 0..nalpha {
                let alpha = k as f64 * dalpha;
                s.push(dom.radial_map(sigma, alpha));
                ds_dsigma.push(dom.radial_map_deriv(sigma, alpha));
            }
        }
        let h = dsigma * ds_dsigma.iter().cloned().fold(0.0, f64::max);
        let rho_min = dom.rho_min();
        if h > rho_min / 8.0 {
            return Err(Error::Grid(format!(
                "radial spacing {h:.4} exceeds rho_min/8 = {:.4}; increase Ns",
                rho_min / 8.0
            )));
        }
        Ok(Self { dom, ns, nalpha, dsigma, dalpha, s, ds_dsigma, h })
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.dom
    }
    pub fn ns(&self) -> usize {
        self.ns
    }
    pub fn nalpha(&self) -> usize {
        self.nalpha
    }
    pub fn dsigma(&self) -> f64 {
        self.dsigma
    }
    pub fn dalpha(&self) -> f64 {
        self.dalpha
    }

    /// Largest radial node spacing in geodesic length.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Interior plus boundary node count.
    pub fn len(&self) -> usize {
        (self.ns + 1) * self.nalpha
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn n_interior(&self) -> usize {
        self.ns * self.nalpha
    }

    #[inline]
    pub fn index(&self, j: usize, k: usize) -> usize {
        j * self.nalpha + k
    }

    #[inline]
    pub fn is_boundary(&self, index: usize) -> bool {
        index >= self.n_interior()
    }

    #[inline]
    pub fn sigma(&self, j: usize) -> f64 {
        if j == self.ns {
            1.0
        } else {
            (j as f64 + 0.5) * self.dsigma
        }
    }

    #[inline]
    pub fn alpha(&self, k: usize) -> f64 {
        k as f64 * self.dalpha
    }

    #[inline]
    pub fn s(&self, index: usize) -> f64 {
        self.s[index]
    }

    /// `∂s/∂σ` at a node.
    #[inline]
    pub fn ds_dsigma(&self, index: usize) -> f64 {
        self.ds_dsigma[index]
    }

    pub fn node(&self, index: usize) -> Node {
        let j = index / self.nalpha;
        let k = index % self.nalpha;
        Node {
            index,
            j,
            k,
            sigma: self.sigma(j),
            s: self.s[index],
            alpha: self.alpha(k),
            boundary: j == self.ns,
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        (0..self.len()).map(move |i| self.node(i))
    }

    /// Resolves lattice offsets around interior node `(j, k)`, continuing
    /// through the center by the antipodal rule and wrapping in `α`.
    #[inline]
    pub fn neighbor(&self, j: usize, k: usize, dj: i64, dk: i64) -> usize {
        let na = self.nalpha as i64;
        let jj = j as i64 + dj;
        let mut kk = k as i64 + dk;
        let jj = if jj < 0 {
            kk += na / 2;
            -jj - 1
        } else {
            jj
        };
        debug_assert!(jj as usize <= self.ns);
        self.index(jj as usize, kk.rem_euclid(na) as usize)
    }

    /// The 3×3 stencil around an interior node, ordered by `(dj, dk)` with
    /// `dj, dk ∈ {−1, 0, 1}` and `dk` fastest.
    #[inline]
    pub fn stencil9(&self, index: usize) -> [usize; 9] {
        let j = index / self.nalpha;
        let k = index % self.nalpha;
        let mut out = [0usize; 9];
        for dj in -1..=1 {
            for dk in -1..=1 {
                out[(3 * (dj + 1) + dk + 1) as usize] = self.neighbor(j, k, dj, dk);
            }
        }
        out
    }

    pub fn desc(&self) -> GridDesc {
        GridDesc {
            domain: self.dom.kind,
            rho: self.dom.rho,
            fourier: self.dom.fourier.clone(),
            ns: self.ns,
            nalpha: self.nalpha,
        }
    }
}

/// A nonnegative height function on the lattice, zero on the boundary ring.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphFn {
    grid: Grid,
    values: Vec<f64>,
}

impl GraphFn {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        Self::with_limit(grid, values, DEFAULT_F_MAX)
    }

    pub fn with_limit(grid: Grid, values: Vec<f64>, f_max: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Graph(format!(
                "expected {} node values, got {}",
                grid.len(),
                values.len()
            )));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Graph(format!("non-finite value at node {i}")));
            }
            if v < 0.0 {
                return Err(Error::Graph(format!("negative height {v:e} at node {i}")));
            }
            if v > f_max {
                return Err(Error::Graph(format!("height {v} at node {i} exceeds guard {f_max}")));
            }
            if grid.is_boundary(i) && v != 0.0 {
                return Err(Error::Graph(format!("boundary node {i} has nonzero height {v}")));
            }
        }
        Ok(Self { grid, values })
    }

    /// Builds the interior from `f(node)`; boundary nodes are set to 0.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(&Node) -> f64) -> Result<Self> {
        let values = grid.nodes().map(|n| if n.boundary { 0.0 } else { f(&n) }).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: Grid) -> Self {
        let len = grid.len();
        Self { grid, values: vec![0.0; len] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interior(&self) -> &[f64] {
        &self.values[..self.grid.n_interior()]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Largest absolute nodewise difference.
    pub fn sup_diff(&self, other: &GraphFn) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

/// Metadata carried in the graph file header.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphMeta {
    pub n: usize,
    pub theta: f64,
    pub rhat: f64,
}

pub const GRAPH_MAGIC: &str = "# slcurv-graph v1";

/// Allowed mismatch between stored node coordinates and the lattice.
const COORD_TOL: f64 = 1e-9;

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Renders a graph in the `slcurv-graph v1` CSV format.
pub fn write_graph_csv(meta: &GraphMeta, f: &GraphFn) -> String {
    let grid = f.grid();
    let dom = grid.domain();
    let mut out = String::new();
    out.push_str(GRAPH_MAGIC);
    out.push('\n');
    let kind = match dom.kind {
        DomainKind::Disk => "disk",
        DomainKind::Star => "star",
    };
    let _ = write!(
        out,
        "n={} theta={} rhat={} domain={} rho={} Ns={} Nalpha={}",
        meta.n,
        meta.theta,
        meta.rhat,
        kind,
        dom.rho,
        grid.ns(),
        grid.nalpha()
    );
    if !dom.fourier.is_empty() {
        let terms: Vec<String> = dom.fourier.iter().map(|(k, a)| format!("{k}:{a}")).collect();
        let _ = write!(out, " fourier={}", terms.join(","));
    }
    out.push('\n');
    out.push_str("j,k,s,alpha,f\n");
    for node in grid.nodes() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            node.j,
            node.k,
            fmt_float(node.s),
            fmt_float(node.alpha),
            fmt_float(f.values()[node.index])
        );
    }
    out
}

/// Parses `k:a,k:a,...` Fourier lists.
pub fn parse_fourier(text: &str) -> std::result::Result<Vec<(u32, f64)>, String> {
    text.split(',')
        .filter(|t| !t.is_empty())
        .map(|term| {
            let (k, a) = term.split_once(':').ok_or_else(|| format!("bad Fourier term '{term}'"))?;
            let k = k.trim().parse::<u32>().map_err(|e| format!("bad mode '{k}': {e}"))?;
            let a = a.trim().parse::<f64>().map_err(|e| format!("bad coefficient '{a}': {e}"))?;
            Ok((k, a))
        })
        .collect()
}

/// Parses the `slcurv-graph v1` CSV format.
pub fn read_graph_csv(text: &str) -> Result<(GraphMeta, GraphFn)> {
    let perr = |line: usize, msg: String| Error::Parse { line, msg };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (ln, magic) = lines.next().ok_or_else(|| perr(1, "empty file".into()))?;
    if magic.trim_end() != GRAPH_MAGIC {
        return Err(perr(ln, format!("expected '{GRAPH_MAGIC}', found '{magic}'")));
    }

    let (ln, header) = lines.next().ok_or_else(|| perr(2, "missing parameter line".into()))?;
    let mut n = None;
    let mut theta = None;
    let mut rhat = None;
    let mut kind = None;
    let mut rho = None;
    let mut ns = None;
    let mut nalpha = None;
    let mut fourier = Vec::new();
    for tok in header.split_whitespace() {
        let (key, val) = tok.split_once('=').ok_or_else(|| perr(ln, format!("bad token '{tok}'")))?;
        let num = |v: &str| v.parse::<f64>().map_err(|e| perr(ln, format!("bad {key}: {e}")));
        let int = |v: &str| v.parse::<usize>().map_err(|e| perr(ln, format!("bad {key}: {e}")));
        match key {
            "n" => n = Some(int(val)?),
            "theta" => theta = Some(num(val)?),
            "rhat" => rhat = Some(num(val)?),
            "rho" => rho = Some(num(val)?),
            "Ns" => ns = Some(int(val)?),
            "Nalpha" => nalpha = Some(int(val)?),
            "domain" => {
                kind = Some(match val {
                    "disk" => DomainKind::Disk,
                    "star" => DomainKind::Star,
                    other => return Err(perr(ln, format!("unknown domain '{other}'"))),
                })
            }
            "fourier" => fourier = parse_fourier(val).map_err(|m| perr(ln, m))?,
            other => return Err(perr(ln, format!("unknown key '{other}'"))),
        }
    }
    let missing = |k: &str| perr(ln, format!("missing key '{k}'"));
    let dom = DomainSpec {
        kind: kind.ok_or_else(|| missing("domain"))?,
        rho: rho.ok_or_else(|| missing("rho"))?,
        fourier,
    };
    let grid = Grid::new(dom, ns.ok_or_else(|| missing("Ns"))?, nalpha.ok_or_else(|| missing("Nalpha"))?)
        .map_err(|e| perr(ln, e.to_string()))?;
    let meta = GraphMeta {
        n: n.ok_or_else(|| missing("n"))?,
        theta: theta.ok_or_else(|| missing("theta"))?,
        rhat: rhat.ok_or_else(|| missing("rhat"))?,
    };

    let (ln, cols) = lines.next().ok_or_else(|| perr(3, "missing column header".into()))?;
    if cols.trim_end() != "j,k,s,alpha,f" {
        return Err(perr(ln, format!("expected column header 'j,k,s,alpha,f', found '{cols}'")));
    }

    let mut values = vec![f64::NAN; grid.len()];
    let mut seen = vec![false; grid.len()];
    let mut last_line = ln;
    for (ln, line) in lines {
        last_line = ln;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(perr(ln, format!("expected 5 fields, found {}", fields.len())));
        }
        let j: usize = fields[0].trim().parse().map_err(|e| perr(ln, format!("bad j: {e}")))?;
        let k: usize = fields[1].trim().parse().map_err(|e| perr(ln, format!("bad k: {e}")))?;
        if j > grid.ns() || k >= grid.nalpha() {
            return Err(perr(ln, format!("node ({j},{k}) outside the lattice")));
        }
        let s: f64 = fields[2].trim().parse().map_err(|e| perr(ln, format!("bad s: {e}")))?;
        let alpha: f64 = fields[3].trim().parse().map_err(|e| perr(ln, format!("bad alpha: {e}")))?;
        let v: f64 = fields[4].trim().parse().map_err(|e| perr(ln, format!("bad f: {e}")))?;
        let idx = grid.index(j, k);
        let node = grid.node(idx);
        if (s - node.s).abs() > COORD_TOL * (1.0 + node.s) || (alpha - node.alpha).abs() > COORD_TOL {
            return Err(perr(ln, format!("coordinates ({s}, {alpha}) do not match node ({j},{k})")));
        }
        if seen[idx] {
            return Err(perr(ln, format!("duplicate node ({j},{k})")));
        }
        seen[idx] = true;
        values[idx] = v;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        let node = grid.node(missing);
        return Err(perr(last_line, format!("missing node ({},{})", node.j, node.k)));
    }
    let f = GraphFn::new(grid, values).map_err(|e| perr(last_line, e.to_string()))?;
    Ok((meta, f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk_grid(ns: usize, na: usize) -> Grid {
        Grid::new(DomainSpec::disk(1.0).unwrap(), ns, na).unwrap()
    }

    #[test]
    fn node_counts() {
        let g = disk_grid(8, 16);
        assert_eq!(g.n_interior(), 8 * 16);
        assert_eq!(g.len() - g.n_interior(), 16);
        assert!(g.nodes().filter(|n| n.boundary).all(|n| (n.s - 1.0).abs() < 1e-15));
        assert!(g.nodes().all(|n| n.s > 0.0));
    }

    #[test]
    fn resolution_guards() {
        let d = DomainSpec::disk(1.0).unwrap();
        assert!(Grid::new(d.clone(), 7, 16).is_err());
        assert!(Grid::new(d.clone(), 8, 14).is_err());
        assert!(Grid::new(d.clone(), 8, 17).is_err());
        let star = DomainSpec::star(1.0, vec![(2, 0.1)]).unwrap();
        assert!(Grid::new(star.clone(), 8, 16).is_err());
        assert!(Grid::new(star, 16, 32).is_ok());
    }

    #[test]
    fn star_boundary_radii() {
        let star = DomainSpec::star(1.0, vec![(2, 0.1)]).unwrap();
        let g = Grid::new(star, 16, 32).unwrap();
        for k in 0..32 {
            let a = g.alpha(k);
            let idx = g.index(16, k);
            assert!((g.s(idx) - (1.0 + 0.1 * (2.0 * a).cos())).abs() < 1e-14);
        }
    }

    #[test]
    fn antipodal_continuation() {
        let g = disk_grid(8, 16);
        let vals: Vec<f64> = (0..g.len()).map(|i| i as f64).collect();
        for k in 0..16 {
            let ghost = g.neighbor(0, k, -1, 0);
            assert_eq!(vals[ghost], vals[g.index(0, (k + 8) % 16)]);
            let ghost_diag = g.neighbor(0, k, -1, 1);
            assert_eq!(ghost_diag, g.index(0, (k + 9) % 16));
        }
        assert_eq!(g.neighbor(7, 0, 1, -1), g.index(8, 15));
    }

    #[test]
    fn graph_invariants() {
        let g = disk_grid(8, 16);
        let mut v = vec![0.5; g.len()];
        assert!(GraphFn::new(g.clone(), v.clone()).is_err());
        for x in v.iter_mut().skip(g.n_interior()) {
            *x = 0.0;
        }
        assert!(GraphFn::new(g.clone(), v.clone()).is_ok());
        v[3] = -0.1;
        assert!(GraphFn::new(g.clone(), v.clone()).is_err());
        v[3] = 11.0;
        assert!(GraphFn::new(g.clone(), v.clone()).is_err());
        v[3] = f64::NAN;
        assert!(GraphFn::new(g, v).is_err());
    }

    #[test]
    fn csv_round_trip_and_gates() {
        let star = DomainSpec::star(1.0, vec![(2, 0.1), (3, 0.01)]).unwrap();
        let g = Grid::new(star, 16, 32).unwrap();
        let f = GraphFn::from_fn(g, |n| 0.1 * (1.0 - n.sigma * n.sigma) + 1e-3 * n.alpha.sin().abs()).unwrap();
        let meta = GraphMeta { n: 2, theta: 2.0, rhat: 0.5 };
        let text = write_graph_csv(&meta, &f);
        assert!(text.starts_with("# slcurv-graph v1\nn=2 theta=2 rhat=0.5 domain=star rho=1 Ns=16 Nalpha=32 fourier=2:0.1,3:0.01\nj,k,s,alpha,f\n"));
        let (m2, f2) = read_graph_csv(&text).unwrap();
        assert_eq!(m2, meta);
        assert_eq!(f2, f);

        let bad = text.replacen("v1", "v2", 1);
        assert!(matches!(read_graph_csv(&bad), Err(Error::Parse { line: 1, .. })));
        let truncated: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(matches!(read_graph_csv(&truncated), Err(Error::Parse { .. })));
        let garbled = text.replacen("0,0,", "0,0,x,", 1);
        assert!(matches!(read_graph_csv(&garbled), Err(Error::Parse { line: 4, .. })));
    }
}
