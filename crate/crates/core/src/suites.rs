//! Randomized property suites over the matrix calculus and the diagnostic
//! closed forms.
//!
//! Every sample draws from its own ChaCha stream keyed by `(seed, suite,
//! sample)`, so summaries do not depend on the worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::diag::{f_threshold, mu_bisection, mu_boundary, Verdict, Witness};
use crate::error::{Error, Result};
use crate::par;
use crate::slcalc::{arctan_sym, d2_sigma, d_r, d_sl, k_bounds, r_theta, sl, SymMat};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropsConfig {
    /// Sample count of the large suites; the special-form and μ suites use a
    /// tenth of it and the finite-difference suites a hundredth (at least 10).
    pub samples: usize,
    pub seed: u64,
    /// Replaces every suite tolerance when set.
    pub tol: Option<f64>,
}

impl Default for PropsConfig {
    fn default() -> Self {
        Self { samples: 10_000, seed: 42, tol: None }
    }
}

impl PropsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Config("samples must be positive".into()));
        }
        if let Some(t) = self.tol {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("tolerance must be finite and nonnegative, got {t}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub samples: usize,
    pub tol: f64,
    pub pass: bool,
    /// Smallest `rhs − lhs` over the samples.
    pub worst_slack: Option<f64>,
    /// Worst samples; `node` is the sample index.
    pub witnesses: Vec<Witness>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropsSummary {
    pub seed: u64,
    pub samples: usize,
    pub pass: bool,
    pub suites: Vec<SuiteResult>,
}

impl PropsSummary {
    pub fn suite(&self, name: &str) -> Option<&SuiteResult> {
        self.suites.iter().find(|s| s.name == name)
    }
}

/// A suite maps a sample RNG to `(lhs, rhs)` with the claim `lhs ≤ rhs`.
struct Suite {
    name: &'static str,
    share: usize,
    tol: f64,
    check: fn(&mut ChaCha8Rng) -> (f64, f64),
}

const SUITES: &[Suite] = &[
    Suite { name: "special_form_n2", share: 10, tol: 1e-10, check: special_form_n2 },
    Suite { name: "special_form_n3", share: 10, tol: 1e-9, check: special_form_n3 },
    Suite { name: "concavity", share: 1, tol: 1e-9, check: concavity },
    Suite { name: "homogeneity", share: 1, tol: 1e-10, check: homogeneity },
    Suite { name: "orthogonal_invariance", share: 1, tol: 1e-10, check: orthogonal_invariance },
    Suite { name: "loewner_monotone", share: 1, tol: 1e-12, check: loewner_monotone },
    Suite { name: "strict_decrease", share: 1, tol: 0.0, check: strict_decrease },
    Suite { name: "defining_identity", share: 1, tol: 1e-12, check: defining_identity },
    Suite { name: "d2_sigma_sign", share: 1, tol: 1e-12, check: d2_sigma_sign },
    Suite { name: "fd_d_sl", share: 100, tol: 1e-5, check: fd_d_sl },
    Suite { name: "fd_d2_sigma", share: 100, tol: 1e-5, check: fd_d2_sigma },
    Suite { name: "fd_d_r", share: 100, tol: 1e-5, check: fd_d_r },
    Suite { name: "euler_identity", share: 100, tol: 1e-10, check: euler_identity },
    Suite { name: "k_bounds_lower", share: 1, tol: 1e-12, check: k_bounds_lower },
    Suite { name: "k_bounds_upper", share: 1, tol: 1e-12, check: k_bounds_upper },
    Suite { name: "mu_oracle", share: 10, tol: 1e-9, check: mu_oracle },
    Suite { name: "mu_monotone", share: 10, tol: 0.0, check: mu_monotone },
    Suite { name: "f_symmetry", share: 1, tol: 0.0, check: f_symmetry },
    Suite { name: "f_nonnegative", share: 1, tol: 1e-15, check: f_nonnegative },
    Suite { name: "f_growth", share: 1, tol: 0.0, check: f_growth },
];

/// Names of all suites, in run order.
pub fn suite_names() -> Vec<&'static str> {
    SUITES.iter().map(|s| s.name).collect()
}

/// Per-sample generator.
pub fn sample_rng(seed: u64, suite: usize, sample: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((suite as u64) << 40) | sample as u64);
    rng
}

pub fn run_props(cfg: &PropsConfig) -> Result<PropsSummary> {
    cfg.validate()?;
    let suites: Vec<SuiteResult> = SUITES
        .iter()
        .enumerate()
        .map(|(id, suite)| {
            let count = (cfg.samples / suite.share).max(10);
            let tol = cfg.tol.unwrap_or(suite.tol);
            let checks = par::map_indexed(count, |i| {
                let (lhs, rhs) = (suite.check)(&mut sample_rng(cfg.seed, id, i));
                (i, lhs, rhs)
            });
            let verdict = Verdict::from_checks(checks, tol);
            SuiteResult {
                name: suite.name.to_string(),
                samples: count,
                tol,
                pass: verdict.pass,
                worst_slack: verdict.worst_slack(),
                witnesses: verdict.witnesses,
            }
        })
        .collect();
    Ok(PropsSummary { seed: cfg.seed, samples: cfg.samples, pass: suites.iter().all(|s| s.pass), suites })
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// Haar-ish orthogonal matrix by Gram–Schmidt on a Gaussian matrix.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(n);
    while q.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            for u in &q {
                let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= d * b);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            q.push(v.into_iter().map(|a| a / norm).collect());
        }
    }
    q
}

/// SPD matrix with eigenvalues log-uniform in `[lo, hi]` in a random frame.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> SymMat {
    let lams: Vec<f64> = (0..n).map(|_| log_uniform(rng, lo, hi)).collect();
    let q = random_orthogonal(rng, n);
    SymMat::from_diag(&lams).and_then(|d| d.conjugate(&q)).expect("valid dimension")
}

/// Symmetric matrix with unit Frobenius norm.
pub fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> SymMat {
    let m = SymMat::from_lower_fn(n, |_, _| rng.sample(StandardNormal)).expect("valid dimension");
    m.scale(1.0 / m.frobenius_norm())
}

fn random_dim(rng: &mut ChaCha8Rng) -> usize {
    rng.gen_range(2..=5)
}

/// `θ ∈ [(n−1)π/2, nπ/2)`.
fn random_angle(rng: &mut ChaCha8Rng, n: usize) -> f64 {
    let lo = (n as f64 - 1.0) * FRAC_PI_2;
    lo + rng.gen_range(0.0..0.98) * FRAC_PI_2
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn r_of(a: &SymMat, theta: f64) -> f64 {
    r_theta(a, theta).expect("SPD input").r
}

fn special_form_n2(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let a = random_spd(rng, 2, 1e-2, 1e2);
    let e = a.eigenvalues().expect("finite");
    (rel(r_of(&a, FRAC_PI_2), (e[0] * e[1]).sqrt()), 0.0)
}

fn special_form_n3(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let a = random_spd(rng, 3, 1e-2, 1e2);
    let e = a.eigenvalues().expect("finite");
    let k: f64 = e.iter().product();
    let h: f64 = e.iter().sum();
    (rel(r_of(&a, PI), (k / h).sqrt()), 0.0)
}

/// `t·R(A) + (1−t)·R(B) ≤ R(tA + (1−t)B)`.
fn concavity(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let n = random_dim(rng);
    let theta = random_angle(rng, n);
    let a = random_spd(rng, n, 0.1, 10.0);
    let b = random_spd(rng, n, 0.1, 10.0);
    let t: f64 = rng.gen_range(0.0..=1.0);
    let mix = a.scale(t).add(&b.scale(1.0 - t));
    (t * r_of(&a, theta) + (1.0 - t) * r_of(&b, theta), r_of(&mix, theta))
}

fn homogeneity(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let n = random_dim(rng);
    let theta = random_angle(rng, n);
    let a = random_spd(rng, n, 0.1, 10.0);
    let c = log_uniform(rng, 1e-3, 1e3);
    let r = r_of(&a, theta);
    ((r_of(&a.scale(c), theta) - c * r).abs() / (c * r), 0.0)
}

fn orthogonal_invariance(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let n = rng.gen_range(2..=8);
    let a = SymMat::from_lower_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal) * 3.0).expect("dim");
    let q = random_orthogonal(rng, n);
    let b = a.conjugate(&q).expect("dim");
    ((arctan_sym(&b).expect("finite") - arctan_sym(&a).expect("finite")).abs(), 0.0)
}

/// `A ⪯ B ⟹ SL_r(A) ≤ SL_r(B)`, with `B = A + P` for a random PSD `P`.
fn loewner_monotone(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let n = random_dim(rng);
    let a = SymMat::from_lower_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal)).expect("dim");
    let p = random_spd(rng, n, 1e-3, 3.0);
    let b = a.add(&p);
    let r = log_uniform(rng, 0.1, 10.0);
    debug_assert!(b.loewner_gap(&a).expect("finite") >= -1e-12);
    (sl(&a, r).expect("r > 0"), sl(&b, r).expect("r > 0"))
}

fn strict_decrease(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let n = random_dim(rng);
    let a = random_spd(rng, n, 0.1, 10.0);
    let r1 = log_uniform(rng, 0.1, 10.0);
    let r2 = r1 * (1.0 + rng.gen_range(1e-3..1.0));
    // Strict inequality: the claim is `sl(r2) < sl(r1)`, i.e. slack > 0.
    let (hi, lo) = (sl(&a, r1).expect("r > 0"), sl(&a, r2).expect("r > 0"));
    (lo, if lo < hi { hi } else { f64::NEG_INFINITY })
}

fn defining_identity(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let n = random_dim(rng);
    let theta = random_angle(rng, n);
    let a = random_spd(rng, n, 1e-2, 1e2);
    ((sl(&a, r_of(&a, theta)).expect("r > 0") - theta).abs(), 0.0)
}

fn d2_sigma_sign(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let n = random_dim(rng);
    let a = random_spd(rng, n, 1e-2, 1e2);
    let m = random_direction(rng, n);
    (d2_sigma(&a, &m).expect("same dim"), 0.0)
}

/// Relative error of `⟨G, M⟩` against a central difference of `SL_r`,
/// measured against `‖G‖·‖M‖`.
fn fd_d_sl(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let n = random_dim(rng);
    let a = random_spd(rng, n, 0.2, 5.0);
    let m = random_direction(rng, n);
    let r = log_uniform(rng, 0.2, 5.0);
    let g = d_sl(&a, r).expect("r > 0").grad;
    let h = 1e-5;
    let fd = (sl(&a.axpy(h, &m), r).expect("r") - sl(&a.axpy(-h, &m), r).expect("r")) / (2.0 * h);
    ((g.frobenius_dot(&m) - fd).abs() / g.frobenius_norm(), 0.0)
}

fn fd_d2_sigma(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let n = random_dim(rng);
    let a = random_spd(rng, n, 0.2, 5.0);
    let m = random_direction(rng, n);
    let h = 1e-3;
    let f = |t: f64| arctan_sym(&a.axpy(t, &m)).expect("finite");
    let fd = (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
    (rel(d2_sigma(&a, &m).expect("same dim"), fd), 0.0)
}

fn fd_d_r(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let n = random_dim(rng);
    let theta = random_angle(rng, n);
    let a = random_spd(rng, n, 0.2, 5.0);
    let m = random_direction(rng, n);
    let g = d_r(&a, theta).expect("SPD");
    let h = 1e-5;
    let fd = (r_of(&a.axpy(h, &m), theta) - r_of(&a.axpy(-h, &m), theta)) / (2.0 * h);
    ((g.frobenius_dot(&m) - fd).abs() / g.frobenius_norm(), 0.0)
}

fn euler_identity(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let n = random_dim(rng);
    let theta = random_angle(rng, n);
    let a = random_spd(rng, n, 1e-2, 1e2);
    (rel(d_r(&a, theta).expect("SPD").frobenius_dot(&a), r_of(&a, theta)), 0.0)
}

/// `θ = (n−1)π/2 + kπ/(8n)` for `k = 0, …, 4n − 1`.
fn k_angle(rng: &mut ChaCha8Rng, n: usize) -> f64 {
    let k = rng.gen_range(0..4 * n);
    (n as f64 - 1.0) * FRAC_PI_2 + k as f64 * PI / (8.0 * n as f64)
}

fn k_bounds_lower(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let n = random_dim(rng);
    let theta = k_angle(rng, n);
    let a = random_spd(rng, n, 1e-2, 1e2);
    let l1 = a.eigenvalues().expect("finite")[0];
    let r = r_of(&a, theta);
    (k_bounds(n, theta).expect("range").k1 * l1 / r, 1.0)
}

fn k_bounds_upper(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let n = random_dim(rng);
    let theta = k_angle(rng, n);
    let a = random_spd(rng, n, 1e-2, 1e2);
    let l1 = a.eigenvalues().expect("finite")[0];
    let r = r_of(&a, theta);
    (r / (k_bounds(n, theta).expect("range").k2 * l1), 1.0)
}

fn mu_inputs(rng: &mut ChaCha8Rng) -> (Vec<f64>, f64, f64) {
    let n = random_dim(rng);
    let lams: Vec<f64> = (0..n - 1).map(|_| log_uniform(rng, 1e-2, 1e2)).collect();
    let r = log_uniform(rng, 0.1, 10.0);
    (lams, r, random_angle(rng, n))
}

/// Classification must agree; finite values to relative precision.
fn mu_oracle(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let (lams, r, theta) = mu_inputs(rng);
    let closed = mu_boundary(&lams, r, theta);
    let oracle = mu_bisection(&lams, r, theta, f64::MAX / 4.0);
    match (closed.is_finite(), oracle.is_finite()) {
        (true, true) if oracle == 0.0 => (closed, 0.0),
        (true, true) => (rel(closed, oracle), 0.0),
        (false, false) => (0.0, 0.0),
        _ => (f64::INFINITY, 0.0),
    }
}

/// Raising one `λᵢ` strictly lowers a finite positive `μ`.
fn mu_monotone(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let (lams, r, theta) = mu_inputs(rng);
    let before = mu_boundary(&lams, r, theta);
    let mut raised = lams.clone();
    let i = rng.gen_range(0..raised.len());
    raised[i] *= 1.0 + rng.gen_range(0.01..1.0);
    let after = mu_boundary(&raised, r, theta);
    if before.is_finite() && after > 0.0 {
        (after, if after < before { before } else { f64::NEG_INFINITY })
    } else {
        (0.0, 0.0)
    }
}

fn f_inputs(rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
    (log_uniform(rng, 1e-3, 1e3), log_uniform(rng, 1e-3, 1e3), log_uniform(rng, 0.1, 10.0))
}

fn f_symmetry(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let (x, y, r) = f_inputs(rng);
    ((f_threshold(x, y, r) - f_threshold(y, x, r)).abs(), 0.0)
}

fn f_nonnegative(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let (x, y, r) = f_inputs(rng);
    let y = if rng.gen_bool(0.1) { x } else { y };
    (-f_threshold(x, y, r), 0.0)
}

/// `F(x, 1; 1) ≥ x/8` for `x ≥ 10`.
fn f_growth(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let x = log_uniform(rng, 10.0, 1e6);
    (x / 8.0, f_threshold(x, 1.0, 1.0))
}
