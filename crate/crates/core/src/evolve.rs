//! The nonlinear evolution solver: implicit resolvent stepping
//!   u_{n+1} + tau (-Delta)^s_R Phi_eps(u_{n+1}) = u_n
//! by damped Newton with matrix-free conjugate-gradient inner solves,
//! plus the comparison/monotonicity runs, the minimal-solution
//! construction over nested balls, and the translation trick for
//! sign-changing data.

use crate::basis::{DirichletBasis, Field};
use crate::error::{Error, Result};
use crate::extension::{profile_psi, profile_psi_prime};
use crate::quad::{gauss_jacobi_01, gauss_legendre};
use crate::specfun::{conormal_weight, gamma, FracOrder};
use rayon::prelude::*;
use std::sync::Arc;

/// The nonlinearity Phi of the filtration equation, with its derivative,
/// potential, and interval Lipschitz bounds.
#[derive(Debug, Clone)]
pub enum Nonlinearity {
    /// Phi(u) = u.
    Linear,
    /// Porous medium Phi(u) = u |u|^{m-1}, m >= 1.
    PorousMedium { m: f64 },
    /// Stefan Phi(u) = (u - 1)_+ (flat below the threshold).
    Stefan,
    /// Translated nonlinearity Phi(v + c) - Phi(c); vanishes at 0.
    Shifted { inner: Box<Nonlinearity>, c: f64 },
}

impl Nonlinearity {
    pub fn porous_medium(m: f64) -> Result<Self> {
        if !(m >= 1.0) {
            return Err(Error::Config(format!(
                "porous-medium exponent must satisfy m >= 1 (fast diffusion is out of scope), got {m}"
            )));
        }
        Ok(Nonlinearity::PorousMedium { m })
    }

    pub fn phi(&self, u: f64) -> f64 {
        match self {
            Nonlinearity::Linear => u,
            Nonlinearity::PorousMedium { m } => u.abs().powf(m - 1.0) * u,
            Nonlinearity::Stefan => (u - 1.0).max(0.0),
            Nonlinearity::Shifted { inner, c } => inner.phi(u + c) - inner.phi(*c),
        }
    }

    pub fn dphi(&self, u: f64) -> f64 {
        match self {
            Nonlinearity::Linear => 1.0,
            Nonlinearity::PorousMedium { m } => m * u.abs().powf(m - 1.0),
            Nonlinearity::Stefan => {
                if u > 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Nonlinearity::Shifted { inner, c } => inner.dphi(u + c),
        }
    }

    /// Psi(u) = int_0^u Phi(v) dv.
    pub fn psi_potential(&self, u: f64) -> f64 {
        match self {
            Nonlinearity::Linear => 0.5 * u * u,
            Nonlinearity::PorousMedium { m } => u.abs().powf(m + 1.0) / (m + 1.0),
            Nonlinearity::Stefan => {
                let v = (u - 1.0).max(0.0);
                0.5 * v * v
            }
            Nonlinearity::Shifted { inner, c } => {
                inner.psi_potential(u + c) - inner.psi_potential(*c) - inner.phi(*c) * u
            }
        }
    }

    /// Lipschitz bound of Phi on [lo, hi].
    pub fn lipschitz_on(&self, lo: f64, hi: f64) -> f64 {
        match self {
            Nonlinearity::Linear => 1.0,
            Nonlinearity::PorousMedium { m } => m * lo.abs().max(hi.abs()).powf(m - 1.0),
            Nonlinearity::Stefan => 1.0,
            Nonlinearity::Shifted { inner, c } => inner.lipschitz_on(lo + c, hi + c),
        }
    }

    /// Smallest slope of Phi on [lo, hi]; zero means the implicit solver
    /// needs regularization.
    pub fn min_slope_on(&self, lo: f64, hi: f64) -> f64 {
        match self {
            Nonlinearity::Linear => 1.0,
            Nonlinearity::PorousMedium { m } => {
                if lo <= 0.0 && hi >= 0.0 {
                    0.0
                } else {
                    m * lo.abs().min(hi.abs()).powf(m - 1.0)
                }
            }
            Nonlinearity::Stefan => {
                if lo <= 1.0 {
                    0.0
                } else {
                    1.0
                }
            }
            Nonlinearity::Shifted { inner, c } => inner.min_slope_on(lo + c, hi + c),
        }
    }

    pub fn phi0_zero(&self) -> bool {
        self.phi(0.0) == 0.0
    }
}

/// Implicit-stepper configuration.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub tau: f64,
    /// Regularization strength: Phi_eps(u) = Phi(u) + eps u. Zero means
    /// "pick automatically when Phi is degenerate on the data range".
    pub eps: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Line-search halvings allowed per Newton step.
    pub damping_halvings: usize,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    /// Also run at eps/2 and record the difference (continuation check).
    pub eps_continuation: bool,
}

impl SolverConfig {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::Config(format!("time step must be > 0, got {tau}")));
        }
        Ok(SolverConfig {
            tau,
            eps: 0.0,
            newton_tol: 1e-12,
            newton_max_iter: 40,
            damping_halvings: 8,
            cg_tol: 1e-13,
            cg_max_iter: 800,
            eps_continuation: false,
        })
    }
}

/// Per-step solver diagnostics.
#[derive(Debug, Clone, Default)]
pub struct StepDiagnostics {
    pub newton_iters: usize,
    pub residual: f64,
    pub cg_iters: usize,
}

/// A time-indexed sequence of fields from one solve.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub fields: Vec<Field>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub sup_norms: Vec<f64>,
    pub eps_used: f64,
    pub background: f64,
    /// sup |u_eps - u_{eps/2}| over the run when continuation was requested.
    pub eps_continuation_gap: Option<f64>,
}

impl Trajectory {
    pub fn final_field(&self) -> &Field {
        self.fields.last().expect("trajectory is never empty")
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("trajectory is never empty")
    }

    pub fn global_min(&self) -> f64 {
        self.fields
            .iter()
            .flat_map(|f| f.values().iter().copied())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn global_max(&self) -> f64 {
        self.fields
            .iter()
            .flat_map(|f| f.values().iter().copied())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// The spectral operator applied through the transforms.
struct SpectralOp {
    basis: Arc<DirichletBasis>,
    multipliers: Vec<f64>,
}

impl SpectralOp {
    fn new(basis: Arc<DirichletBasis>, s: FracOrder) -> Self {
        let multipliers = basis
            .eigenvalues()
            .iter()
            .map(|l| l.powf(s.value()))
            .collect();
        SpectralOp { basis, multipliers }
    }

    fn apply(&self, values: &[f64]) -> Vec<f64> {
        let mut coeffs = self.basis.analyze(values).expect("sizes fixed");
        for (c, m) in coeffs.iter_mut().zip(&self.multipliers) {
            *c *= m;
        }
        self.basis.synthesize(&coeffs).expect("sizes fixed")
    }
}

fn linf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Conjugate gradients on a symmetric positive definite operator.
fn conjugate_gradient<F: Fn(&[f64]) -> Vec<f64>>(
    apply: F,
    rhs: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let n = rhs.len();
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
    let mut rs = dot(&r, &r);
    let target = tol * tol * rs.max(1e-300);
    if rs == 0.0 {
        return Ok((x, 0));
    }
    for it in 1..=max_iter {
        let ap = apply(&p);
        let alpha = rs / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new = dot(&r, &r);
        if rs_new <= target {
            return Ok((x, it));
        }
        let beta = rs_new / rs;
        rs = rs_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(Error::Convergence(
        "conjugate gradients exhausted the iteration budget".into(),
    ))
}

struct StepProblem<'a> {
    op: &'a SpectralOp,
    phi: &'a Nonlinearity,
    tau: f64,
    eps: f64,
    /// constant flux offset: Phi_eps evaluated at the background level
    offset: f64,
}

impl StepProblem<'_> {
    fn residual(&self, u: &[f64], b: &[f64]) -> Vec<f64> {
        let inner: Vec<f64> = u
            .iter()
            .map(|&v| self.phi.phi(v) + self.eps * v - self.offset)
            .collect();
        let sv = self.op.apply(&inner);
        u.iter()
            .zip(&sv)
            .zip(b)
            .map(|((&uv, &sv), &bv)| uv + self.tau * sv - bv)
            .collect()
    }
}

/// One implicit resolvent step: solve u + tau S Phi_eps(u) = b by damped
/// Newton; the symmetrized Jacobian system is solved matrix-free with CG.
fn resolvent_step_values(
    problem: &StepProblem,
    b: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, StepDiagnostics)> {
    let n = b.len();
    let mut u = b.to_vec();
    let mut diag = StepDiagnostics::default();
    let mut fvec = problem.residual(&u, b);
    let mut rnorm = linf(&fvec);
    for iter in 0..=cfg.newton_max_iter {
        if rnorm <= cfg.newton_tol {
            diag.newton_iters = iter;
            diag.residual = rnorm;
            return Ok((u, diag));
        }
        if iter == cfg.newton_max_iter {
            break;
        }
        let slope: Vec<f64> = u.iter().map(|&v| problem.phi.dphi(v) + problem.eps).collect();
        let dmin = slope.iter().cloned().fold(f64::INFINITY, f64::min);
        if dmin <= 0.0 {
            return Err(Error::Convergence(format!(
                "Jacobian slope hit {dmin:e}; raise eps or keep the state strictly monotone"
            )));
        }
        let dsqrt: Vec<f64> = slope.iter().map(|v| v.sqrt()).collect();
        let rhs: Vec<f64> = fvec.iter().zip(&dsqrt).map(|(f, d)| -f * d).collect();
        let tau = problem.tau;
        let apply = |v: &[f64]| {
            let scaled: Vec<f64> = v.iter().zip(&dsqrt).map(|(x, d)| x * d).collect();
            let sv = problem.op.apply(&scaled);
            v.iter()
                .zip(sv.iter().zip(&dsqrt))
                .map(|(&x, (&s, &d))| x + tau * d * s)
                .collect()
        };
        let (eta, cg_iters) = conjugate_gradient(apply, &rhs, cfg.cg_tol, cfg.cg_max_iter)?;
        diag.cg_iters += cg_iters;
        let delta: Vec<f64> = eta.iter().zip(&dsqrt).map(|(e, d)| e / d).collect();

        // line search: halve until the sup-norm residual decreases
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..=cfg.damping_halvings {
            let trial: Vec<f64> = (0..n).map(|i| u[i] + alpha * delta[i]).collect();
            let trial_res = problem.residual(&trial, b);
            let trial_norm = linf(&trial_res);
            if trial_norm < rnorm {
                u = trial;
                fvec = trial_res;
                rnorm = trial_norm;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(Error::Convergence(format!(
                "Newton line search stalled at residual {rnorm:e}"
            )));
        }
    }
    Err(Error::Convergence(format!(
        "Newton did not reach tolerance: residual {rnorm:e} after {} iterations (halve tau or raise eps)",
        cfg.newton_max_iter
    )))
}

/// Public single-step interface on fields.
pub fn resolvent_step(
    u_n: &Field,
    cfg: &SolverConfig,
    phi: &Nonlinearity,
    s: FracOrder,
) -> Result<(Field, StepDiagnostics)> {
    let op = SpectralOp::new(u_n.basis().clone(), s);
    let problem = StepProblem {
        op: &op,
        phi,
        tau: cfg.tau,
        eps: cfg.eps,
        offset: phi.phi(0.0) + cfg.eps * 0.0,
    };
    let (vals, diag) = resolvent_step_values(&problem, u_n.values(), cfg)?;
    Ok((Field::from_values(u_n.basis().clone(), vals)?, diag))
}

/// Effective regularization: the configured value, or the degeneracy
/// default 1e-8 ||u0||_inf when Phi is flat somewhere on the data range.
pub fn effective_eps(cfg: &SolverConfig, phi: &Nonlinearity, u0: &Field, background: f64) -> f64 {
    if cfg.eps > 0.0 {
        return cfg.eps;
    }
    // iterates stay between the data range and the background level
    let lo = u0
        .values()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
        .min(background);
    let hi = u0
        .values()
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
        .max(background);
    let span = (hi - lo).max(1e-15);
    if phi.min_slope_on(lo - 0.01 * span, hi + 0.01 * span) <= 0.0 {
        1e-8 * u0.linf_norm().max(1e-7)
    } else {
        0.0
    }
}

/// March the resolvent steps to the horizon T.
pub fn evolve(
    u0: &Field,
    horizon: f64,
    cfg: &SolverConfig,
    phi: &Nonlinearity,
    s: FracOrder,
) -> Result<Trajectory> {
    evolve_with_background(u0, horizon, cfg, phi, s, 0.0)
}

/// Same, for data riding on a constant background level c (the operator
/// sees Phi_eps(u) - Phi_eps(c), which is the translated problem in the
/// original variables).
pub fn evolve_with_background(
    u0: &Field,
    horizon: f64,
    cfg: &SolverConfig,
    phi: &Nonlinearity,
    s: FracOrder,
    background: f64,
) -> Result<Trajectory> {
    if !(horizon > 0.0) {
        return Err(Error::Config(format!("horizon must be > 0, got {horizon}")));
    }
    if background == 0.0 && !phi.phi0_zero() {
        return Err(Error::Config(
            "Phi(0) != 0: route the datum through shift_reduce (or set a background) first"
                .into(),
        ));
    }
    let eps = effective_eps(cfg, phi, u0, background);
    let traj = evolve_inner(u0, horizon, cfg, phi, s, background, eps)?;
    if cfg.eps_continuation && eps > 0.0 {
        let half = evolve_inner(u0, horizon, cfg, phi, s, background, 0.5 * eps)?;
        let mut gap = 0.0f64;
        for (a, b) in traj.fields.iter().zip(&half.fields) {
            for (x, y) in a.values().iter().zip(b.values()) {
                gap = gap.max((x - y).abs());
            }
        }
        let mut out = traj;
        out.eps_continuation_gap = Some(gap);
        return Ok(out);
    }
    Ok(traj)
}

fn evolve_inner(
    u0: &Field,
    horizon: f64,
    cfg: &SolverConfig,
    phi: &Nonlinearity,
    s: FracOrder,
    background: f64,
    eps: f64,
) -> Result<Trajectory> {
    let steps = (horizon / cfg.tau - 1e-12).ceil().max(1.0) as usize;
    let tau = horizon / steps as f64;
    let op = SpectralOp::new(u0.basis().clone(), s);
    let problem = StepProblem {
        op: &op,
        phi,
        tau,
        eps,
        offset: phi.phi(background) + eps * background,
    };
    let mut times = vec![0.0];
    let mut fields = vec![u0.clone()];
    let mut diagnostics = Vec::new();
    let mut sup_norms = vec![u0.linf_norm()];
    let mut current = u0.values().to_vec();
    for n in 1..=steps {
        let (next, diag) = resolvent_step_values(&problem, &current, cfg)?;
        current = next;
        let f = Field::from_values(u0.basis().clone(), current.clone())?;
        times.push(tau * n as f64);
        sup_norms.push(f.linf_norm());
        fields.push(f);
        diagnostics.push(diag);
    }
    Ok(Trajectory {
        times,
        fields,
        diagnostics,
        sup_norms,
        eps_used: eps,
        background,
        eps_continuation_gap: None,
    })
}

/// Exact solution of the linear problem (Phi = identity): coefficients decay
/// like e^{-lambda_k^s t}. This is the independent oracle for the stepper.
pub fn linear_exact_solution(u0: &Field, s: FracOrder, t: f64) -> Field {
    let coeffs: Vec<f64> = u0
        .coeffs()
        .iter()
        .zip(u0.basis().eigenvalues())
        .map(|(&c, &l)| c * (-l.powf(s.value()) * t).exp())
        .collect();
    Field::from_coeffs(u0.basis().clone(), coeffs).expect("sizes preserved")
}

/// Result of a paired comparison run.
#[derive(Debug, Clone)]
pub struct CompareReport {
    pub min_gap: f64,
    pub lower_min: f64,
    pub upper_max_overshoot: f64,
}

/// Evolve ordered data u0 <= w0 and report the worst ordering violation.
pub fn compare(
    u0: &Field,
    w0: &Field,
    horizon: f64,
    cfg: &SolverConfig,
    phi: &Nonlinearity,
    s: FracOrder,
) -> Result<CompareReport> {
    for (a, b) in u0.values().iter().zip(w0.values()) {
        if a > b {
            return Err(Error::Config(format!(
                "compare expects ordered data, found u0 = {a} > w0 = {b}"
            )));
        }
    }
    // a common eps keeps the two solves on the same regularized equation
    let eps = effective_eps(cfg, phi, w0, 0.0).max(effective_eps(cfg, phi, u0, 0.0));
    let mut cfg_common = cfg.clone();
    cfg_common.eps = if eps > 0.0 { eps } else { cfg.eps };
    let tu = evolve(u0, horizon, &cfg_common, phi, s)?;
    let tw = evolve(w0, horizon, &cfg_common, phi, s)?;
    let mut min_gap = f64::INFINITY;
    for (fu, fw) in tu.fields.iter().zip(&tw.fields) {
        for (a, b) in fu.values().iter().zip(fw.values()) {
            min_gap = min_gap.min(b - a);
        }
    }
    let lower_min = tu.global_min().min(tw.global_min());
    let overshoot = (tu.global_max() - u0.linf_norm()).max(tw.global_max() - w0.linf_norm());
    Ok(CompareReport {
        min_gap,
        lower_min,
        upper_max_overshoot: overshoot,
    })
}

/// Run many comparison pairs in parallel.
pub fn compare_sweep(
    pairs: &[(Field, Field)],
    horizon: f64,
    cfg: &SolverConfig,
    phi: &Nonlinearity,
    s: FracOrder,
) -> Result<Vec<CompareReport>> {
    pairs
        .par_iter()
        .map(|(u0, w0)| compare(u0, w0, horizon, cfg, phi, s))
        .collect()
}

/// One solution of the nested family, tagged by its truncation and ball.
#[derive(Debug, Clone)]
pub struct NestedSolution {
    pub k: f64,
    pub r: f64,
    pub trajectory: Trajectory,
}

/// Report of the minimal-solution construction.
#[derive(Debug, Clone)]
pub struct MinimalReport {
    pub family: Vec<NestedSolution>,
    /// worst violation of u_{k,R1} <= u_{k,R2} on B_{R1} (should be ~ -0)
    pub min_r_monotonicity: f64,
    /// worst violation of u_{k1,R} <= u_{k2,R} for k1 <= k2
    pub min_k_monotonicity: f64,
    /// sup differences between consecutive R at the largest k, on the
    /// smallest ball: a Cauchy sequence certificate
    pub cauchy_sups: Vec<f64>,
    pub limit_estimate: f64,
}

/// Build u_{k,R} for truncations u0 chi_{B_k} on growing balls, check both
/// monotonicity directions, and estimate the limit.
///
/// Grids nest when nodes_per_unit * R stays integral, which makes the
/// cross-ball comparisons exact at shared nodes.
#[allow(clippy::too_many_arguments)]
pub fn minimal_solution<F: Fn(f64) -> f64>(
    u0: F,
    r_list: &[f64],
    k_list: &[f64],
    horizon: f64,
    cfg: &SolverConfig,
    phi: &Nonlinearity,
    s: FracOrder,
    nodes_per_unit: usize,
) -> Result<MinimalReport> {
    if !phi.phi0_zero() {
        return Err(Error::Config(
            "minimal solution construction needs Phi(0) = 0".into(),
        ));
    }
    let mut sorted_r = r_list.to_vec();
    sorted_r.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut sorted_k = k_list.to_vec();
    sorted_k.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut family = Vec::new();
    for &k in &sorted_k {
        for &r in &sorted_r {
            let n = (nodes_per_unit as f64 * r).round() as usize - 1;
            let basis = DirichletBasis::new(r, 1, n)?;
            let datum = Field::from_fn(basis, |x| if x.abs() <= k { u0(x) } else { 0.0 })?;
            let traj = evolve(&datum, horizon, cfg, phi, s)?;
            family.push(NestedSolution {
                k,
                r,
                trajectory: traj,
            });
        }
    }

    let sol = |k: f64, r: f64| -> &NestedSolution {
        family
            .iter()
            .find(|n| n.k == k && n.r == r)
            .expect("built above")
    };

    // R-monotonicity at each truncation: compare at the nodes of the
    // smaller ball (shared when grids nest, series-evaluated otherwise)
    let eval_on = |field: &Field, xs: &[f64], map: &[Option<usize>]| -> Vec<f64> {
        xs.iter()
            .enumerate()
            .map(|(i, &x)| match map[i] {
                Some(j) => field.values()[j],
                None => field.eval(x),
            })
            .collect()
    };
    let node_map = |xs: &[f64], target: &[f64]| -> Vec<Option<usize>> {
        xs.iter()
            .map(|&x| target.iter().position(|&y| (y - x).abs() < 1e-9))
            .collect()
    };
    let mut min_r_mono = f64::INFINITY;
    let mut cauchy_sups = Vec::new();
    let k_top = *sorted_k.last().unwrap();
    let base_nodes = sol(sorted_k[0], sorted_r[0])
        .trajectory
        .fields[0]
        .basis()
        .nodes()
        .to_vec();
    for &k in &sorted_k {
        for pair in sorted_r.windows(2) {
            let small = sol(k, pair[0]);
            let big = sol(k, pair[1]);
            let nodes_small = small.trajectory.fields[0].basis().nodes().to_vec();
            let map_sb = node_map(&nodes_small, big.trajectory.fields[0].basis().nodes());
            for (fs, fb) in small.trajectory.fields.iter().zip(&big.trajectory.fields) {
                let vb = eval_on(fb, &nodes_small, &map_sb);
                for (i, &v) in vb.iter().enumerate() {
                    min_r_mono = min_r_mono.min(v - fs.values()[i]);
                }
            }
            // the Cauchy certificate compares every consecutive pair on the
            // innermost ball, so the sups are directly comparable
            if k == k_top {
                let map_s = node_map(&base_nodes, small.trajectory.fields[0].basis().nodes());
                let map_b = node_map(&base_nodes, big.trajectory.fields[0].basis().nodes());
                let mut sup_gap = 0.0f64;
                for (fs, fb) in small.trajectory.fields.iter().zip(&big.trajectory.fields) {
                    let vs = eval_on(fs, &base_nodes, &map_s);
                    let vb = eval_on(fb, &base_nodes, &map_b);
                    for (a, b) in vs.iter().zip(&vb) {
                        sup_gap = sup_gap.max((b - a).abs());
                    }
                }
                cauchy_sups.push(sup_gap);
            }
        }
    }

    // k-monotonicity on the shared ball and grid
    let mut min_k_mono = f64::INFINITY;
    for &r in &sorted_r {
        for pair in sorted_k.windows(2) {
            let lo = sol(pair[0], r);
            let hi = sol(pair[1], r);
            for (fl, fh) in lo.trajectory.fields.iter().zip(&hi.trajectory.fields) {
                for (a, b) in fl.values().iter().zip(fh.values()) {
                    min_k_mono = min_k_mono.min(b - a);
                }
            }
        }
    }

    let limit_estimate = cauchy_sups.last().copied().unwrap_or(0.0);
    Ok(MinimalReport {
        family,
        min_r_monotonicity: min_r_mono,
        min_k_monotonicity: min_k_mono,
        cauchy_sups,
        limit_estimate,
    })
}

/// Outcome of the translation trick.
#[derive(Debug, Clone)]
pub struct ShiftReduced {
    pub c: f64,
    pub shifted_datum: Field,
    pub shifted_phi: Nonlinearity,
}

/// Translate possibly sign-changing data down to a nonnegative datum with a
/// nonlinearity vanishing at zero.
pub fn shift_reduce(u0: &Field, phi: &Nonlinearity) -> Result<ShiftReduced> {
    let c = u0
        .values()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = u0.values().iter().map(|v| v - c).collect();
    let shifted_datum = Field::from_values(u0.basis().clone(), shifted)?;
    let shifted_phi = Nonlinearity::Shifted {
        inner: Box::new(phi.clone()),
        c,
    };
    Ok(ShiftReduced {
        c,
        shifted_datum,
        shifted_phi,
    })
}

/// Steklov (forward running) average of a trajectory over a window h,
/// computed exactly on the piecewise-linear-in-time interpolant.
pub fn steklov_average(traj: &Trajectory, h: f64) -> Result<Trajectory> {
    let t_end = traj.horizon();
    if !(h > 0.0) || h > t_end {
        return Err(Error::Config(format!(
            "Steklov window must lie in (0, {t_end}], got {h}"
        )));
    }
    let n = traj.fields[0].values().len();
    let times = &traj.times;
    // integral of the interpolant over [a, b]
    let integrate = |a: f64, b: f64| -> Vec<f64> {
        let mut acc = vec![0.0; n];
        for (w, pair) in times.windows(2).enumerate() {
            let (t0, t1) = (pair[0], pair[1]);
            let lo = a.max(t0);
            let hi = b.min(t1);
            if hi <= lo {
                continue;
            }
            let f0 = traj.fields[w].values();
            let f1 = traj.fields[w + 1].values();
            // exact trapezoid of the linear interpolant on [lo, hi]
            let mid = 0.5 * (lo + hi);
            let theta = (mid - t0) / (t1 - t0);
            for i in 0..n {
                let val_mid = f0[i] * (1.0 - theta) + f1[i] * theta;
                acc[i] += val_mid * (hi - lo);
            }
        }
        acc
    };
    let mut out_times = Vec::new();
    let mut out_fields = Vec::new();
    for (idx, &t) in times.iter().enumerate() {
        if t + h > t_end * (1.0 + 1e-12) {
            break;
        }
        let avg: Vec<f64> = integrate(t, t + h).into_iter().map(|v| v / h).collect();
        out_times.push(t);
        out_fields.push(Field::from_values(traj.fields[idx].basis().clone(), avg)?);
    }
    Ok(Trajectory {
        times: out_times,
        sup_norms: out_fields.iter().map(|f| f.linf_norm()).collect(),
        fields: out_fields,
        diagnostics: Vec::new(),
        eps_used: traj.eps_used,
        background: traj.background,
        eps_continuation_gap: None,
    })
}

/// Report of the local energy estimate for a ball trajectory.
#[derive(Debug, Clone)]
pub struct LocalEnergyReport {
    pub lhs: f64,
    pub dirichlet_term: f64,
    pub bulk_unit: f64,
    pub measured_c: f64,
}

/// Local energy of the cylinder extension of Phi(u) over the half-ball of
/// radius r, tested against
///   (2/mu_s) int_{B_{2r}} Psi(u0) + C ||Phi(u0)||^2 iint_{Omega_{2r}} y^{1-2s}.
pub fn local_energy_check(
    traj: &Trajectory,
    r: f64,
    phi: &Nonlinearity,
    s: FracOrder,
) -> Result<LocalEnergyReport> {
    let basis = traj.fields[0].basis().clone();
    let big_r = basis.radius();
    if !(r > 0.25 && r < 0.5 * big_r) {
        return Err(Error::Config(format!(
            "window radius must lie in (1/4, R/2) = (0.25, {}), got {r}",
            0.5 * big_r
        )));
    }
    let mu = conormal_weight(s);
    let nmodes = basis.len();

    // y-rule on [0, r] with the degenerate weight; x-rule per chord
    let yrule = gauss_jacobi_01(20, 0.0, 1.0 - 2.0 * s.value())?;
    let xbase = gauss_legendre(24);
    let yscale = r.powf(2.0 - 2.0 * s.value());

    // profile tables per y node
    let ys: Vec<f64> = yrule.nodes.iter().map(|&t| r * t).collect();
    let mut psi = vec![vec![0.0; nmodes]; ys.len()];
    let mut dpsi = vec![vec![0.0; nmodes]; ys.len()];
    for (j, &y) in ys.iter().enumerate() {
        for k in 0..nmodes {
            let lam = basis.eigenvalues()[k];
            psi[j][k] = profile_psi(lam, s, y)?;
            dpsi[j][k] = profile_psi_prime(lam, s, y)?;
        }
    }

    let slice_energy = |field: &Field| -> f64 {
        let g: Vec<f64> = field.values().iter().map(|&v| phi.phi(v)).collect();
        let coeffs = basis.analyze(&g).expect("sizes fixed");
        let mut total = 0.0;
        for (j, (&t, &wy)) in yrule.nodes.iter().zip(&yrule.weights).enumerate() {
            let y = r * t;
            let half_chord = (r * r - y * y).max(0.0).sqrt();
            if half_chord == 0.0 {
                continue;
            }
            let xrule = xbase.mapped(-half_chord, half_chord);
            let mut slice = 0.0;
            for (&x, &wx) in xrule.nodes.iter().zip(&xrule.weights) {
                let mut gx = 0.0;
                let mut gy = 0.0;
                for k in 0..nmodes {
                    let c = coeffs[k];
                    if c == 0.0 {
                        continue;
                    }
                    gx += c * basis.eigenfunction_deriv(k + 1, x) * psi[j][k];
                    gy += c * basis.eigenfunction(k + 1, x) * dpsi[j][k];
                }
                slice += wx * (gx * gx + gy * gy);
            }
            total += wy * slice;
        }
        yscale * total
    };

    // time integral by trapezoid over the stored snapshots
    let mut lhs = 0.0;
    let energies: Vec<f64> = traj.fields.iter().map(&slice_energy).collect();
    for (w, pair) in traj.times.windows(2).enumerate() {
        lhs += 0.5 * (energies[w] + energies[w + 1]) * (pair[1] - pair[0]);
    }

    // RHS pieces
    let u0 = &traj.fields[0];
    let mut psi_mass = 0.0;
    for (i, &x) in basis.nodes().iter().enumerate() {
        if x.abs() <= 2.0 * r {
            psi_mass += basis.weights()[i] * phi.psi_potential(u0.values()[i]);
        }
    }
    let dirichlet_term = 2.0 / mu * psi_mass;
    let phi_sup = u0
        .values()
        .iter()
        .map(|&v| phi.phi(v).abs())
        .fold(0.0f64, f64::max);
    // iint_{Omega_{2r}} y^{1-2s} dx dy = 2 (2r)^{3-2s} int_0^1 t^{1-2s} sqrt(1-t^2) dt
    let i_s = 0.5 * gamma(1.0 - s.value())? * gamma(1.5)? / gamma(2.5 - s.value())?;
    let bulk_unit = phi_sup * phi_sup * 2.0 * (2.0 * r).powf(3.0 - 2.0 * s.value()) * i_s;
    let measured_c = if lhs > dirichlet_term && bulk_unit > 0.0 {
        (lhs - dirichlet_term) / bulk_unit
    } else {
        0.0
    };
    Ok(LocalEnergyReport {
        lhs,
        dirichlet_term,
        bulk_unit,
        measured_c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use approx::assert_abs_diff_eq;

    fn s(v: f64) -> FracOrder {
        FracOrder::new(v).unwrap()
    }

    fn basis(r: f64, n: usize) -> Arc<DirichletBasis> {
        DirichletBasis::new(r, 1, n).unwrap()
    }

    #[test]
    fn linear_step_is_diagonal_resolvent() {
        let b = basis(1.0, 32);
        let f = Field::eigenmode(b.clone(), 1).unwrap();
        let cfg = SolverConfig::new(0.1).unwrap();
        let (next, diag) = resolvent_step(&f, &cfg, &Nonlinearity::Linear, s(0.5)).unwrap();
        let lam_s = b.eigenvalues()[0].sqrt();
        let want = 1.0 / (1.0 + 0.1 * lam_s);
        assert_abs_diff_eq!(next.coeffs()[0], want, epsilon = 1e-11);
        assert!(diag.residual <= 1e-12);
    }

    #[test]
    fn stefan_below_threshold_is_frozen() {
        let b = basis(1.0, 48);
        let f = Field::from_fn(b, shapes::bump(0.0, 0.6, 0.8)).unwrap();
        let cfg = SolverConfig::new(0.05).unwrap(); // eps = 0
        let (next, diag) = resolvent_step(&f, &cfg, &Nonlinearity::Stefan, s(0.5)).unwrap();
        assert_eq!(diag.newton_iters, 0, "operator vanishes on the range");
        for (a, b) in next.values().iter().zip(f.values()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn pme_step_residual_and_bounds() {
        let b = basis(1.0, 96);
        let f = Field::from_fn(b, |x: f64| 0.5 * (1.0 + (std::f64::consts::PI * x).cos()))
            .unwrap();
        let mut cfg = SolverConfig::new(0.02).unwrap();
        cfg.eps = 1e-8;
        let phi = Nonlinearity::porous_medium(2.0).unwrap();
        let (next, diag) = resolvent_step(&f, &cfg, &phi, s(0.5)).unwrap();
        assert!(diag.residual <= 1e-10, "residual {}", diag.residual);
        let max0 = f.linf_norm();
        for &v in next.values() {
            assert!(v >= -1e-12 && v <= max0 + 1e-12);
        }
    }

    #[test]
    fn linear_evolution_matches_exact_solution_with_first_order() {
        let b = basis(1.0, 64);
        let u0 = Field::from_fn(b.clone(), |x| {
            b.eigenfunction(1, x) + 0.4 * b.eigenfunction(3, x)
        })
        .unwrap();
        let sv = s(0.5);
        let horizon = 0.5;
        let exact = linear_exact_solution(&u0, sv, horizon);
        let mut errs = Vec::new();
        for &tau in &[1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0] {
            let cfg = SolverConfig::new(tau).unwrap();
            let traj = evolve(&u0, horizon, &cfg, &Nonlinearity::Linear, sv).unwrap();
            errs.push(traj.final_field().l2_distance(&exact).unwrap());
        }
        for pair in errs.windows(2) {
            let order = (pair[0] / pair[1]).log2();
            assert!(order >= 0.9, "observed order {order}, errors {errs:?}");
        }
    }

    #[test]
    fn sup_bound_holds_for_nonnegative_data() {
        let b = basis(2.0, 96);
        let u0 = Field::from_fn(b, shapes::bump(0.2, 1.0, 0.9)).unwrap();
        let cfg = SolverConfig::new(1.0 / 32.0).unwrap();
        for phi in [
            Nonlinearity::Linear,
            Nonlinearity::porous_medium(2.0).unwrap(),
            Nonlinearity::Stefan,
        ] {
            let traj = evolve(&u0, 0.25, &cfg, &phi, s(0.5)).unwrap();
            assert!(traj.global_min() >= -1e-10, "{phi:?}: {}", traj.global_min());
            assert!(
                traj.global_max() <= u0.linf_norm() + 1e-10,
                "{phi:?}: {}",
                traj.global_max()
            );
        }
        // zero datum stays zero for Phi(0) = 0
        let z = Field::zero(basis(2.0, 96));
        let traj = evolve(&z, 0.25, &cfg, &Nonlinearity::Stefan, s(0.5)).unwrap();
        assert_eq!(traj.global_max(), 0.0);
        assert_eq!(traj.global_min(), 0.0);
    }

    #[test]
    fn ordered_data_stay_ordered() {
        let b = basis(2.0, 96);
        let u0 = Field::from_fn(b.clone(), shapes::bump(0.0, 1.0, 0.3)).unwrap();
        let w0 = Field::from_fn(b, shapes::bump(0.1, 1.2, 0.75)).unwrap();
        // w0 = u0 + bump >= u0 pointwise
        let w0 = {
            let vals: Vec<f64> = u0
                .values()
                .iter()
                .zip(w0.values())
                .map(|(a, b)| a + b)
                .collect();
            Field::from_values(u0.basis().clone(), vals).unwrap()
        };
        let cfg = SolverConfig::new(1.0 / 32.0).unwrap();
        for phi in [
            Nonlinearity::Linear,
            Nonlinearity::porous_medium(2.0).unwrap(),
            Nonlinearity::Stefan,
        ] {
            let rep = compare(&u0, &w0, 0.25, &cfg, &phi, s(0.5)).unwrap();
            assert!(rep.min_gap >= -1e-8, "{phi:?}: min gap {}", rep.min_gap);
        }
        // equal data give identical trajectories
        let rep = compare(&u0, &u0, 0.2, &cfg, &Nonlinearity::Linear, s(0.5)).unwrap();
        assert!(rep.min_gap.abs() <= 1e-12);
    }

    #[test]
    fn domain_monotonicity_on_nested_grids() {
        let phi = Nonlinearity::porous_medium(2.0).unwrap();
        let cfg = SolverConfig::new(1.0 / 32.0).unwrap();
        let rep = minimal_solution(
            shapes::bump(0.0, 1.0, 0.8),
            &[2.0, 4.0],
            &[2.0],
            0.25,
            &cfg,
            &phi,
            s(0.5),
            48,
        )
        .unwrap();
        assert!(
            rep.min_r_monotonicity >= -1e-8,
            "violation {}",
            rep.min_r_monotonicity
        );
    }

    #[test]
    fn truncation_monotonicity_in_k() {
        let phi = Nonlinearity::Linear;
        let cfg = SolverConfig::new(1.0 / 16.0).unwrap();
        // constant-ish datum cut at k = 2 and k = 4
        let rep = minimal_solution(
            |_x| 0.5,
            &[8.0],
            &[2.0, 4.0],
            0.25,
            &cfg,
            &phi,
            s(0.5),
            16,
        )
        .unwrap();
        assert!(
            rep.min_k_monotonicity >= -1e-8,
            "violation {}",
            rep.min_k_monotonicity
        );
        // zero datum: everything zero
        let rep0 = minimal_solution(
            |_x| 0.0,
            &[2.0, 4.0],
            &[2.0],
            0.2,
            &cfg,
            &phi,
            s(0.5),
            16,
        )
        .unwrap();
        assert_eq!(rep0.limit_estimate, 0.0);
    }

    #[test]
    fn shift_reduce_structure() {
        let b = basis(2.0, 64);
        let u0 = Field::from_fn(b, |x: f64| (std::f64::consts::PI * x / 2.0).sin()).unwrap();
        let phi = Nonlinearity::porous_medium(3.0).unwrap();
        let red = shift_reduce(&u0, &phi).unwrap();
        assert!(red.c < 0.0);
        for &v in red.shifted_datum.values() {
            assert!(v >= 0.0);
        }
        assert_eq!(red.shifted_phi.phi(0.0), 0.0);
        // nonnegative datum: c >= 0 and consistency of the construction
        let b2 = basis(2.0, 64);
        let v0 = Field::from_fn(b2, shapes::bump(0.0, 1.0, 0.5)).unwrap();
        let red2 = shift_reduce(&v0, &Nonlinearity::Linear).unwrap();
        assert!(red2.c >= 0.0);
        assert_eq!(red2.shifted_phi.phi(0.0), 0.0);
    }

    #[test]
    fn shift_round_trip_for_linear_phi() {
        let b = basis(4.0, 128);
        let u0 = Field::from_fn(b, |x: f64| (std::f64::consts::PI * x / 4.0).sin() * 0.8)
            .unwrap();
        let cfg = SolverConfig::new(1.0 / 16.0).unwrap();
        let sv = s(0.5);
        let phi = Nonlinearity::Linear;
        let red = shift_reduce(&u0, &phi).unwrap();
        let shifted = evolve(&red.shifted_datum, 0.25, &cfg, &red.shifted_phi, sv).unwrap();
        let direct = evolve_with_background(&u0, 0.25, &cfg, &phi, sv, red.c).unwrap();
        for (fs, fd) in shifted.fields.iter().zip(&direct.fields) {
            for (a, b) in fs.values().iter().zip(fd.values()) {
                assert!((a + red.c - b).abs() <= 1e-8, "{a} + {} vs {b}", red.c);
            }
        }
    }

    #[test]
    fn steklov_average_behaviour() {
        let b = basis(1.0, 16);
        // hand-build a trajectory linear in t: f(t) = (1 + 2t) phi_1
        let mode = Field::eigenmode(b.clone(), 1).unwrap();
        let times: Vec<f64> = (0..=8).map(|i| i as f64 / 8.0).collect();
        let fields: Vec<Field> = times
            .iter()
            .map(|&t| {
                let vals: Vec<f64> =
                    mode.values().iter().map(|v| v * (1.0 + 2.0 * t)).collect();
                Field::from_values(b.clone(), vals).unwrap()
            })
            .collect();
        let traj = Trajectory {
            times: times.clone(),
            sup_norms: fields.iter().map(|f| f.linf_norm()).collect(),
            fields,
            diagnostics: Vec::new(),
            eps_used: 0.0,
            background: 0.0,
            eps_continuation_gap: None,
        };
        // window errors
        assert!(steklov_average(&traj, 0.0).is_err());
        assert!(steklov_average(&traj, 2.0).is_err());
        // affine data: average = value at t + h/2, for h = tau and tau/2
        for &h in &[1.0 / 8.0, 1.0 / 16.0] {
            let avg = steklov_average(&traj, h).unwrap();
            for (i, &t) in avg.times.iter().enumerate() {
                let want = 1.0 + 2.0 * (t + 0.5 * h);
                let got = avg.fields[i].values()[4] / mode.values()[4];
                assert_abs_diff_eq!(got, want, epsilon = 1e-12);
            }
        }
        // constant trajectory is unchanged
        let const_traj = Trajectory {
            fields: vec![mode.clone(); times.len()],
            sup_norms: vec![mode.linf_norm(); times.len()],
            times: times.clone(),
            diagnostics: Vec::new(),
            eps_used: 0.0,
            background: 0.0,
            eps_continuation_gap: None,
        };
        let avg = steklov_average(&const_traj, 0.25).unwrap();
        for f in &avg.fields {
            for (a, b) in f.values().iter().zip(mode.values()) {
                assert_abs_diff_eq!(*a, *b, epsilon = 1e-13);
            }
        }

        // h -> 0: the average converges to the snapshot at interior times
        // (quadratic-in-t data make the O(h) error visible)
        let quad_fields: Vec<Field> = times
            .iter()
            .map(|&t| {
                let vals: Vec<f64> =
                    mode.values().iter().map(|v| v * (1.0 + t * t)).collect();
                Field::from_values(b.clone(), vals).unwrap()
            })
            .collect();
        let quad_traj = Trajectory {
            sup_norms: quad_fields.iter().map(|f| f.linf_norm()).collect(),
            fields: quad_fields,
            times,
            diagnostics: Vec::new(),
            eps_used: 0.0,
            background: 0.0,
            eps_continuation_gap: None,
        };
        let err_at = |h: f64| {
            let avg = steklov_average(&quad_traj, h).unwrap();
            let idx = 2; // interior time t = 0.25
            let t = avg.times[idx];
            let want = 1.0 + t * t;
            (avg.fields[idx].values()[4] / mode.values()[4] - want).abs()
        };
        let (e1, e2) = (err_at(1.0 / 8.0), err_at(1.0 / 16.0));
        assert!(e2 < e1, "average should approach the snapshot: {e1} vs {e2}");
    }

    #[test]
    fn local_energy_estimate_holds() {
        let b = basis(2.0, 96);
        let u0 = Field::from_fn(b, shapes::bump(0.0, 0.8, 0.9)).unwrap();
        let phi = Nonlinearity::porous_medium(2.0).unwrap();
        let cfg = SolverConfig::new(1.0 / 16.0).unwrap();
        let traj = evolve(&u0, 0.5, &cfg, &phi, s(0.5)).unwrap();
        let rep = local_energy_check(&traj, 0.9, &phi, s(0.5)).unwrap();
        assert!(rep.lhs.is_finite() && rep.lhs > 0.0);
        assert!(
            rep.measured_c <= 10.0,
            "estimate needs C = {}",
            rep.measured_c
        );
        // zero datum: both sides vanish
        let z = Field::zero(basis(2.0, 96));
        let tz = evolve(&z, 0.25, &cfg, &phi, s(0.5)).unwrap();
        let rz = local_energy_check(&tz, 0.9, &phi, s(0.5)).unwrap();
        assert_eq!(rz.lhs, 0.0);
        assert_eq!(rz.dirichlet_term, 0.0);
        // window domain monotonicity: smaller window, smaller energy
        let r_small = local_energy_check(&traj, 0.5, &phi, s(0.5)).unwrap();
        assert!(r_small.lhs <= rep.lhs);
        // window outside (1/4, R/2) rejected
        assert!(local_energy_check(&traj, 1.5, &phi, s(0.5)).is_err());
    }

    #[test]
    fn degenerate_step_reports_failure_for_caller() {
        // Stefan with eps = 0 and data crossing the threshold: the flat
        // region makes the Jacobian singular, and the step must hand back a
        // diagnosable failure instead of wrong numbers
        let b = basis(1.0, 48);
        let f = Field::from_fn(b, shapes::bump(0.0, 0.7, 1.6)).unwrap();
        let cfg = SolverConfig::new(0.05).unwrap();
        match resolvent_step(&f, &cfg, &Nonlinearity::Stefan, s(0.5)) {
            Err(Error::Convergence(msg)) => {
                assert!(msg.contains("eps"), "diagnostic should point at eps: {msg}");
            }
            other => panic!("expected a step failure, got {other:?}"),
        }
        // raising eps (the documented remedy) makes the same step succeed
        let mut cfg_eps = SolverConfig::new(0.05).unwrap();
        cfg_eps.eps = 1e-8;
        let f2 = Field::from_fn(basis(1.0, 48), shapes::bump(0.0, 0.7, 1.6)).unwrap();
        assert!(resolvent_step(&f2, &cfg_eps, &Nonlinearity::Stefan, s(0.5)).is_ok());
    }

    #[test]
    fn eps_continuation_reports_small_gap() {
        let b = basis(1.0, 64);
        let u0 = Field::from_fn(b, shapes::bump(0.0, 0.7, 1.5)).unwrap();
        let mut cfg = SolverConfig::new(1.0 / 16.0).unwrap();
        cfg.eps_continuation = true;
        let traj = evolve(&u0, 0.25, &cfg, &Nonlinearity::Stefan, s(0.5)).unwrap();
        assert!(traj.eps_used > 0.0, "degenerate case picks an eps");
        let gap = traj.eps_continuation_gap.expect("continuation requested");
        assert!(gap >= 0.0 && gap < 1e-6, "eps sensitivity {gap:e}");
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::new(0.0).is_err());
        assert!(SolverConfig::new(-0.1).is_err());
        let b = basis(1.0, 16);
        let u0 = Field::from_fn(b, shapes::bump(0.0, 0.5, 0.5)).unwrap();
        let cfg = SolverConfig::new(0.1).unwrap();
        assert!(evolve(&u0, 0.0, &cfg, &Nonlinearity::Linear, s(0.5)).is_err());
        // every shifted nonlinearity vanishes at zero by construction
        let shifted = Nonlinearity::Shifted {
            inner: Box::new(Nonlinearity::Stefan),
            c: 2.0,
        };
        assert!(shifted.phi0_zero());
        assert!(evolve(&u0, 0.2, &cfg, &shifted, s(0.5)).is_ok());
    }

    #[test]
    fn nonlinearity_calculus() {
        let pme = Nonlinearity::porous_medium(2.0).unwrap();
        assert_eq!(pme.phi(-2.0), -4.0);
        assert_eq!(pme.dphi(-2.0), 4.0);
        assert_abs_diff_eq!(pme.psi_potential(2.0), 8.0 / 3.0, epsilon = 1e-14);
        assert_eq!(pme.lipschitz_on(-1.0, 3.0), 6.0);
        assert_eq!(pme.min_slope_on(-1.0, 3.0), 0.0);
        assert_eq!(pme.min_slope_on(1.0, 3.0), 2.0);
        assert!(Nonlinearity::porous_medium(0.5).is_err());

        let stefan = Nonlinearity::Stefan;
        assert_eq!(stefan.phi(0.5), 0.0);
        assert_eq!(stefan.phi(1.5), 0.5);
        assert_eq!(stefan.psi_potential(2.0), 0.5);

        // shifted nonlinearity: phi hat(v) = Phi(v+c) - Phi(c), Psi by parts
        let shifted = Nonlinearity::Shifted {
            inner: Box::new(pme.clone()),
            c: -1.0,
        };
        assert_eq!(shifted.phi(0.0), 0.0);
        assert_abs_diff_eq!(shifted.phi(1.0), 0.0 - (-1.0), epsilon = 1e-14);
        // numeric check of the potential against a quadrature of phi hat
        let quad: f64 = (0..1000)
            .map(|i| {
                let v = 2.0 * (i as f64 + 0.5) / 1000.0;
                shifted.phi(v) * 2.0 / 1000.0
            })
            .sum();
        assert_abs_diff_eq!(shifted.psi_potential(2.0), quad, epsilon = 1e-4);
    }
}
