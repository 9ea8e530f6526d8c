use serde::Deserialize;
use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;

use slcurv_core::grid::parse_fourier;
use slcurv_core::solver::{JacobianKind, Schedule, SolveConfig};
use slcurv_core::suites::PropsConfig;
use slcurv_core::{CurvatureQuery, DomainSpec, Grid};

use crate::Failure;

/// Angles this close to the lower edge `(n−1)π/2` are taken to be on it.
pub const THETA_SNAP: f64 = 1e-6;

/// Settings shared by all subcommands. Values come from an optional JSON
/// file; command-line flags override them field by field.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: Option<usize>,
    pub theta: Option<f64>,
    pub rhat: Option<f64>,
    pub r: Option<f64>,
    /// `disk:<rho>` or `star:<rho>:<k:a,k:a,...>`
    pub domain: Option<String>,
    /// `<Ns>x<Nalpha>`
    pub grid: Option<String>,
    pub solver: Option<SolveConfig>,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub obj: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub workers: Option<usize>,
    pub timing: Option<bool>,
}

impl RunConfig {
    pub fn load(path: Option<&PathBuf>) -> Result<Self, Failure> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::io(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::invalid(format!("config {}: {e}", path.display())))
    }

    /// Overlays every `Some` field of `flags`.
    pub fn overlay(mut self, flags: RunConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if flags.$f.is_some() { self.$f = flags.$f; } )* };
        }
        take!(n, theta, rhat, r, domain, grid, solver, out, report, obj, graph, samples, seed, tol, workers, timing);
        self
    }

    pub fn query(&self) -> Result<CurvatureQuery, Failure> {
        let n = self.n.unwrap_or(2);
        let theta = snap_theta(n, self.theta.ok_or_else(|| Failure::invalid("missing --theta"))?);
        let q = match (self.rhat, self.r) {
            (Some(_), Some(_)) => return Err(Failure::invalid("give either --rhat or --r, not both")),
            (Some(rhat), None) => CurvatureQuery::from_rhat(n, theta, rhat),
            (None, Some(r)) => {
                let q = CurvatureQuery::from_r(n, theta, r);
                if let Ok(q) = &q {
                    log::info!("converted r = {r} to rhat = tan(theta/n)·r = {}", q.rhat());
                }
                q
            }
            (None, None) => return Err(Failure::invalid("missing --rhat")),
        };
        q.map_err(|e| Failure::invalid(e.to_string()))
    }

    pub fn grid(&self) -> Result<Grid, Failure> {
        let dom = parse_domain(self.domain.as_deref().unwrap_or("disk:1.0"))?;
        let (ns, na) = parse_dims(self.grid.as_deref().unwrap_or("64x128"))?;
        Grid::new(dom, ns, na).map_err(|e| Failure::invalid(e.to_string()))
    }

    /// Solver settings with `--seed` and `--tol` folded in.
    pub fn solver(&self) -> Result<SolveConfig, Failure> {
        let mut cfg = self.solver.unwrap_or_default();
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(tol) = self.tol {
            cfg.tol = tol;
        }
        cfg.validate().map_err(|e| Failure::invalid(e.to_string()))?;
        Ok(cfg)
    }

    pub fn props(&self) -> Result<PropsConfig, Failure> {
        let d = PropsConfig::default();
        let cfg = PropsConfig { samples: self.samples.unwrap_or(d.samples), seed: self.seed.unwrap_or(d.seed), tol: self.tol };
        cfg.validate().map_err(|e| Failure::invalid(e.to_string()))?;
        Ok(cfg)
    }
}

/// Solver overrides given as individual flags.
#[derive(Clone, Debug, Default)]
pub struct SolverFlags {
    pub max_newton: Option<usize>,
    pub steps: Option<usize>,
    pub rhat_start: Option<f64>,
    pub schedule: Option<Schedule>,
    pub jacobian: Option<JacobianKind>,
    pub fd_step: Option<f64>,
}

impl SolverFlags {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if self.max_newton.is_none()
            && self.steps.is_none()
            && self.rhat_start.is_none()
            && self.schedule.is_none()
            && self.jacobian.is_none()
            && self.fd_step.is_none()
        {
            return;
        }
        let mut s = cfg.solver.unwrap_or_default();
        if let Some(v) = self.max_newton {
            s.max_newton = v;
        }
        if let Some(v) = self.steps {
            s.homotopy.steps = v;
        }
        if let Some(v) = self.rhat_start {
            s.homotopy.rhat_start = v;
        }
        if let Some(v) = self.schedule {
            s.homotopy.schedule = v;
        }
        if let Some(v) = self.jacobian {
            s.jacobian = v;
        }
        if self.fd_step.is_some() {
            s.fd_step = self.fd_step;
        }
        cfg.solver = Some(s);
    }
}

pub fn snap_theta(n: usize, theta: f64) -> f64 {
    let edge = (n as f64 - 1.0) * FRAC_PI_2;
    if theta != edge && (theta - edge).abs() <= THETA_SNAP {
        log::info!("theta {theta} snapped to the lower edge {edge}");
        edge
    } else {
        theta
    }
}

pub fn parse_domain(text: &str) -> Result<DomainSpec, Failure> {
    let bad = |m: String| Failure::invalid(format!("domain '{text}': {m}"));
    let mut parts = text.splitn(3, ':');
    let kind = parts.next().unwrap_or_default();
    let rho: f64 = parts
        .next()
        .ok_or_else(|| bad("missing radius".into()))?
        .parse()
        .map_err(|e| bad(format!("bad radius: {e}")))?;
    let dom = match (kind, parts.next()) {
        ("disk", None) => DomainSpec::disk(rho),
        ("star", Some(list)) => DomainSpec::star(rho, parse_fourier(list).map_err(bad)?),
        ("star", None) => return Err(bad("star domains need Fourier terms".into())),
        ("disk", Some(_)) => return Err(bad("disk domains take only a radius".into())),
        (other, _) => return Err(bad(format!("unknown kind '{other}'"))),
    };
    dom.map_err(|e| bad(e.to_string()))
}

pub fn parse_dims(text: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure::invalid(format!("grid '{text}' is not of the form <Ns>x<Nalpha>"));
    let (a, b) = text.split_once('x').ok_or_else(bad)?;
    Ok((a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?))
}
