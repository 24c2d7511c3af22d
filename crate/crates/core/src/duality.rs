//! The backward parabolic machinery of the duality method: the diffusion
//! coefficient a(x,t) built from two trajectories, its smoothed and
//! time-piecewise-constant approximants, backward solves with frozen
//! coefficients, the summed energy identity, and the uniqueness witness.
//!
//! Backward problems are integrated in reversed time sigma = T - t, where
//! they become ordinary dissipative forward problems; each implicit Euler
//! step (I + dsigma beta S) psi_new = psi_old is solved matrix-free by CG on
//! the symmetric form (beta^{-1} + dsigma S).

use crate::basis::{frac_power, Field};
use crate::error::{Error, Result};
use crate::evolve::Trajectory;
use crate::specfun::FracOrder;
use ndarray::Array2;
use std::sync::Arc;

/// The diffusion coefficient a(x,t) of the dual problem, sampled on the
/// space-time grid of the generating trajectories.
#[derive(Debug, Clone)]
pub struct BackwardCoefficient {
    pub times: Vec<f64>,
    /// a[(n, i)] = a(x_i, t_n)
    pub a: Array2<f64>,
    pub lipschitz_bound: f64,
}

/// a = (Phi(u) - Phi(w)) / (u - w) where the trajectories differ, 0 where
/// they coincide; bounded by the Lipschitz constant of Phi on the joint range.
pub fn build_coefficient(
    u: &Trajectory,
    w: &Trajectory,
    phi: &crate::evolve::Nonlinearity,
) -> Result<BackwardCoefficient> {
    if u.times.len() != w.times.len()
        || !u.fields[0].basis().same_as(w.fields[0].basis())
    {
        return Err(Error::SizeMismatch(
            "trajectories must share grid and time partition".into(),
        ));
    }
    let n_t = u.times.len();
    let n_x = u.fields[0].values().len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for f in u.fields.iter().chain(&w.fields) {
        for &v in f.values() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let lip = phi.lipschitz_on(lo, hi);
    let mut a = Array2::<f64>::zeros((n_t, n_x));
    for n in 0..n_t {
        let uv = u.fields[n].values();
        let wv = w.fields[n].values();
        for i in 0..n_x {
            let du = uv[i] - wv[i];
            let val = if du != 0.0 {
                (phi.phi(uv[i]) - phi.phi(wv[i])) / du
            } else {
                0.0
            };
            if val > lip * (1.0 + 1e-9) + 1e-12 {
                return Err(Error::Domain(format!(
                    "difference quotient {val} exceeds the Lipschitz bound {lip}"
                )));
            }
            a[(n, i)] = val.max(0.0);
        }
    }
    Ok(BackwardCoefficient {
        times: u.times.clone(),
        a,
        lipschitz_bound: lip,
    })
}

/// Smoothed/floored coefficient a_k and its time-piecewise-constant version
/// a_{n,k} on a uniform n-piece partition of [0, T].
#[derive(Debug, Clone)]
pub struct SmoothedCoefficient {
    pub k: usize,
    pub pieces: usize,
    /// partition points T_h = h T / n (length pieces + 1)
    pub partition: Vec<f64>,
    /// a_nk[(h, i)]: the frozen coefficient on (T_h, T_{h+1})
    pub a_nk: Array2<f64>,
    /// L^2(B_R x (0,T)) norm of (a_k - a)/sqrt(a_k): the convergence driver
    pub l2_defect: f64,
}

/// Space-mollify with a Gaussian of width 1/k (renormalized on the window),
/// add the floor 1/k, and average in time over each partition piece.
pub fn smooth_coefficient(
    coeff: &BackwardCoefficient,
    basis: &Arc<crate::basis::DirichletBasis>,
    k: usize,
    pieces: usize,
) -> Result<SmoothedCoefficient> {
    if k == 0 || pieces == 0 {
        return Err(Error::Config("k and n must be >= 1".into()));
    }
    let (n_t, n_x) = coeff.a.dim();
    if n_x != basis.len() {
        return Err(Error::SizeMismatch("coefficient grid != basis grid".into()));
    }
    let nodes = basis.nodes();
    let h = nodes[1] - nodes[0];
    let sigma = 1.0 / k as f64;
    let reach = (4.0 * sigma / h).ceil() as isize;
    let kf = 1.0 / k as f64;

    // mollify in space, then add the floor
    let mut a_k = Array2::<f64>::zeros((n_t, n_x));
    for n in 0..n_t {
        for i in 0..n_x {
            let mut acc = 0.0;
            let mut mass = 0.0;
            for j in -reach..=reach {
                let idx = i as isize + j;
                if idx < 0 || idx >= n_x as isize {
                    continue;
                }
                let w = (-((j as f64 * h) / sigma).powi(2) / 2.0).exp();
                acc += w * coeff.a[(n, idx as usize)];
                mass += w;
            }
            a_k[(n, i)] = acc / mass + kf;
        }
    }

    // L^2 defect of (a_k - a)/sqrt(a_k) over space-time (trapezoid in t)
    let mut defect_sq = 0.0;
    for n in 0..n_t {
        let mut slice = 0.0;
        for i in 0..n_x {
            let d = a_k[(n, i)] - coeff.a[(n, i)];
            slice += basis.weights()[i] * d * d / a_k[(n, i)];
        }
        let wt = if n == 0 || n == n_t - 1 { 0.5 } else { 1.0 };
        let dt = if n_t > 1 {
            coeff.times[1] - coeff.times[0]
        } else {
            1.0
        };
        defect_sq += wt * dt * slice;
    }

    // time averages over the partition pieces
    let t_end = *coeff.times.last().unwrap();
    let partition: Vec<f64> = (0..=pieces)
        .map(|hh| t_end * hh as f64 / pieces as f64)
        .collect();
    let mut a_nk = Array2::<f64>::zeros((pieces, n_x));
    for hh in 0..pieces {
        let (lo, hi) = (partition[hh], partition[hh + 1]);
        // average the piecewise-linear interpolant of a_k over [lo, hi]
        let mut acc = vec![0.0; n_x];
        let mut measure = 0.0;
        for w in 0..n_t.saturating_sub(1) {
            let (t0, t1) = (coeff.times[w], coeff.times[w + 1]);
            let a = lo.max(t0);
            let b = hi.min(t1);
            if b <= a {
                continue;
            }
            let mid = 0.5 * (a + b);
            let theta = (mid - t0) / (t1 - t0);
            for i in 0..n_x {
                let v = a_k[(w, i)] * (1.0 - theta) + a_k[(w + 1, i)] * theta;
                acc[i] += v * (b - a);
            }
            measure += b - a;
        }
        for i in 0..n_x {
            a_nk[(hh, i)] = acc[i] / measure;
        }
    }
    Ok(SmoothedCoefficient {
        k,
        pieces,
        partition,
        a_nk,
        l2_defect: defect_sq.sqrt(),
    })
}

impl SmoothedCoefficient {
    pub fn floor(&self) -> f64 {
        self.a_nk.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn ceiling(&self) -> f64 {
        self.a_nk.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Backward trajectory: psi on the reversed-time inner grid, stored forward
/// in t (so `fields[0]` is psi(0) and the last entry is psi(T) = chi).
#[derive(Debug, Clone)]
pub struct BackwardTrajectory {
    pub times: Vec<f64>,
    pub fields: Vec<Field>,
    pub min_value: f64,
    pub max_value: f64,
}

fn cg_spd<F: Fn(&[f64]) -> Vec<f64>>(
    apply: F,
    rhs: &[f64],
    x0: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = rhs.len();
    let mut x = x0;
    let ax = apply(&x);
    let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
    let mut rs = dot(&r, &r);
    let target = tol * tol * dot(rhs, rhs).max(1e-300);
    if rs <= target {
        return Ok(x);
    }
    for _ in 0..max_iter {
        let ap = apply(&p);
        let alpha = rs / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new = dot(&r, &r);
        if rs_new <= target {
            return Ok(x);
        }
        let beta = rs_new / rs;
        rs = rs_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(Error::Convergence(
        "backward-step CG exhausted its budget".into(),
    ))
}

/// Solve the backward problem psi_t = a_{n,k}(x) (-Delta)^s_R psi with final
/// datum chi at t = T, marching implicit Euler in reversed time with
/// `inner_steps` total steps distributed over the partition.
pub fn backward_solve(
    coeff: &SmoothedCoefficient,
    chi: &Field,
    s: FracOrder,
    inner_steps: usize,
) -> Result<BackwardTrajectory> {
    let basis = chi.basis().clone();
    let n_x = basis.len();
    if coeff.a_nk.dim().1 != n_x {
        return Err(Error::SizeMismatch("coefficient grid != chi grid".into()));
    }
    let pieces = coeff.pieces;
    if inner_steps < pieces {
        return Err(Error::Config(
            "need at least one inner step per partition piece".into(),
        ));
    }
    let per_piece = inner_steps / pieces;
    let lam_s: Vec<f64> = basis
        .eigenvalues()
        .iter()
        .map(|l| l.powf(s.value()))
        .collect();
    let apply_s = |v: &[f64]| -> Vec<f64> {
        let mut c = basis.analyze(v).expect("sizes fixed");
        for (ci, m) in c.iter_mut().zip(&lam_s) {
            *ci *= m;
        }
        basis.synthesize(&c).expect("sizes fixed")
    };

    let t_end = *coeff.partition.last().unwrap();
    let mut psi = chi.values().to_vec();
    let mut rev_times = vec![t_end];
    let mut rev_fields = vec![chi.clone()];
    let mut min_v = psi.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut max_v = psi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    // reversed time: sub-intervals from the last piece down to the first
    for piece in (0..pieces).rev() {
        let beta: Vec<f64> = (0..n_x).map(|i| coeff.a_nk[(piece, i)]).collect();
        let inv_beta: Vec<f64> = beta.iter().map(|b| 1.0 / b).collect();
        let dt = (coeff.partition[piece + 1] - coeff.partition[piece]) / per_piece as f64;
        for step in 0..per_piece {
            // (I + dt beta S) psi_new = psi_old, symmetrized by beta^{-1}
            let rhs: Vec<f64> = psi.iter().zip(&inv_beta).map(|(p, ib)| p * ib).collect();
            let apply = |v: &[f64]| -> Vec<f64> {
                let sv = apply_s(v);
                v.iter()
                    .zip(sv.iter())
                    .zip(&inv_beta)
                    .map(|((&x, &sx), &ib)| ib * x + dt * sx)
                    .collect()
            };
            psi = cg_spd(apply, &rhs, psi.clone(), 1e-13, 2000)?;
            for &v in &psi {
                min_v = min_v.min(v);
                max_v = max_v.max(v);
            }
            let t = coeff.partition[piece + 1] - dt * (step + 1) as f64;
            rev_times.push(t);
            rev_fields.push(Field::from_values(basis.clone(), psi.clone())?);
        }
    }
    rev_times.reverse();
    rev_fields.reverse();
    Ok(BackwardTrajectory {
        times: rev_times,
        fields: rev_fields,
        min_value: min_v,
        max_value: max_v,
    })
}

/// Diagonal closed form of the same implicit-Euler recursion for constant
/// unit coefficient: an independent route for testing the matrix-free path.
pub fn backward_diagonal_reference(
    chi: &Field,
    s: FracOrder,
    t_end: f64,
    inner_steps: usize,
) -> Result<Field> {
    let basis = chi.basis().clone();
    let dt = t_end / inner_steps as f64;
    let coeffs: Vec<f64> = chi
        .coeffs()
        .iter()
        .zip(basis.eigenvalues())
        .map(|(&c, &l)| c / (1.0 + dt * l.powf(s.value())).powi(inner_steps as i32))
        .collect();
    Field::from_coeffs(basis, coeffs)
}

/// Residual of the summed energy identity
///   int int a_nk [S psi]^2 + 1/2 ||S^{1/2} psi(0)||^2 = 1/2 ||S^{1/2} chi||^2.
#[derive(Debug, Clone)]
pub struct EnergyIdentityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub relative_residual: f64,
}

pub fn energy_identity_check(
    psi: &BackwardTrajectory,
    coeff: &SmoothedCoefficient,
    chi: &Field,
    s: FracOrder,
) -> Result<EnergyIdentityReport> {
    let basis = chi.basis().clone();
    let lam_s: Vec<f64> = basis
        .eigenvalues()
        .iter()
        .map(|l| l.powf(s.value()))
        .collect();
    let s_apply = |f: &Field| -> Vec<f64> {
        let c: Vec<f64> = f.coeffs().iter().zip(&lam_s).map(|(c, m)| c * m).collect();
        basis.synthesize(&c).expect("sizes fixed")
    };
    let half_norm_sq = |f: &Field| -> f64 {
        f.coeffs()
            .iter()
            .zip(&lam_s)
            .map(|(c, m)| m * c * c)
            .sum::<f64>()
    };
    let piece_of = |t: f64| -> usize {
        let mut hh = 0;
        while hh + 1 < coeff.pieces && t >= coeff.partition[hh + 1] {
            hh += 1;
        }
        hh
    };
    // rectangle rule anchored at the new (earlier-in-t) point of each step:
    // this is the quadrature the discrete identity is exact against, up to
    // the O(dsigma) dissipation defect
    let mut time_term = 0.0;
    for w in 0..psi.times.len() - 1 {
        let dt = psi.times[w + 1] - psi.times[w];
        let hh = piece_of(0.5 * (psi.times[w] + psi.times[w + 1]));
        let sv = s_apply(&psi.fields[w]);
        let mut slice = 0.0;
        for (i, &v) in sv.iter().enumerate() {
            slice += basis.weights()[i] * coeff.a_nk[(hh, i)] * v * v;
        }
        time_term += dt * slice;
    }
    let lhs = time_term + 0.5 * half_norm_sq(&psi.fields[0]);
    let rhs = 0.5 * half_norm_sq(chi);
    Ok(EnergyIdentityReport {
        lhs,
        rhs,
        relative_residual: (lhs - rhs).abs() / rhs.abs().max(1e-300),
    })
}

/// The uniqueness witness int (u(T) - w(T)) chi dx together with the bound
/// (||u|| + ||w||) ||(a - a_nk)/sqrt(a_nk)|| C_R from the duality chain.
#[derive(Debug, Clone)]
pub struct WitnessReport {
    pub witness: f64,
    pub bound: f64,
}

pub fn uniqueness_witness(
    u: &Trajectory,
    w: &Trajectory,
    chi: &Field,
    coeff: &BackwardCoefficient,
    smoothed: &SmoothedCoefficient,
    s: FracOrder,
) -> Result<WitnessReport> {
    let basis = chi.basis().clone();
    if !u.fields[0].basis().same_as(&basis) || !w.fields[0].basis().same_as(&basis) {
        return Err(Error::SizeMismatch("witness inputs on different grids".into()));
    }
    let uf = u.fields.last().unwrap().values();
    let wf = w.fields.last().unwrap().values();
    let witness: f64 = (0..basis.len())
        .map(|i| basis.weights()[i] * (uf[i] - wf[i]) * chi.values()[i])
        .sum();

    // || (a - a_nk)/sqrt(a_nk) ||_{L^2(B_R x (0,T))}, trapezoid in time
    let (n_t, n_x) = coeff.a.dim();
    let t_grid = &coeff.times;
    let piece_of = |t: f64| -> usize {
        let mut hh = 0;
        while hh + 1 < smoothed.pieces && t >= smoothed.partition[hh + 1] {
            hh += 1;
        }
        hh
    };
    let mut defect_sq = 0.0;
    for n in 0..n_t {
        let hh = piece_of(t_grid[n].min(*smoothed.partition.last().unwrap() - 1e-15));
        let mut slice = 0.0;
        for i in 0..n_x {
            let d = coeff.a[(n, i)] - smoothed.a_nk[(hh, i)];
            slice += basis.weights()[i] * d * d / smoothed.a_nk[(hh, i)];
        }
        let wt = if n == 0 || n == n_t - 1 { 0.5 } else { 1.0 };
        let dt = if n_t > 1 { t_grid[1] - t_grid[0] } else { 1.0 };
        defect_sq += wt * dt * slice;
    }
    let sup_u = u.fields.iter().map(|f| f.linf_norm()).fold(0.0f64, f64::max);
    let sup_w = w.fields.iter().map(|f| f.linf_norm()).fold(0.0f64, f64::max);
    let c_r = (0.5 * {
        let half = frac_power(chi, 0.5 * s.value());
        half.coeffs().iter().map(|c| c * c).sum::<f64>()
    })
    .sqrt();
    // C_R^2 = 1/2 || (-D)^{s/2} chi ||^2; note coeffs are already the
    // spectral representation, so the sum above is the squared L^2 norm
    let bound = (sup_u + sup_w) * defect_sq.sqrt() * c_r;
    Ok(WitnessReport { witness, bound })
}
