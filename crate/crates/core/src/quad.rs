//! Quadrature toolkit: Gauss-Legendre and Gauss-Jacobi rules via
//! Golub-Welsch, composite panels, and adaptive Simpson.
//!
//! Gauss-Jacobi rules are set up on the unit interval with weight
//! x^beta (1-x)^alpha,
//! which matches the degenerate/singular weights y^{1-2s} that show up in
//! the extension-problem energies.

use crate::error::{Error, Result};
use crate::specfun::gamma;
use nalgebra::{DMatrix, SymmetricEigen};

/// A quadrature rule: paired nodes and weights.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Affine image of the rule on [a, b] (weights scaled by the Jacobian).
    pub fn mapped(&self, a: f64, b: f64) -> Rule {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        Rule {
            nodes: self.nodes.iter().map(|&x| mid + half * x).collect(),
            weights: self.weights.iter().map(|&w| w * half).collect(),
        }
    }
}

fn eigen_rule(diag: Vec<f64>, offdiag: Vec<f64>, mu0: f64) -> Rule {
    let n = diag.len();
    let mut j = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        j[(i, i)] = diag[i];
        if i + 1 < n {
            j[(i, i + 1)] = offdiag[i];
            j[(i + 1, i)] = offdiag[i];
        }
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let x = eig.eigenvalues[i];
            let v0 = eig.eigenvectors[(0, i)];
            (x, mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// n-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1);
    let diag = vec![0.0; n];
    let offdiag: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    eigen_rule(diag, offdiag, 2.0)
}

/// n-point Gauss-Jacobi rule on the unit interval for the weight (1-x)^alpha x^beta.
///
/// Returns nodes x_i in (0,1) and weights w_i such that
/// sum w_i f(x_i) ~ int_0^1 (1-x)^alpha x^beta f(x) dx.
pub fn gauss_jacobi_01(n: usize, alpha: f64, beta: f64) -> Result<Rule> {
    if !(alpha > -1.0 && beta > -1.0) {
        return Err(Error::Domain(format!(
            "Jacobi exponents must exceed -1, got alpha={alpha}, beta={beta}"
        )));
    }
    assert!(n >= 1);
    let ab = alpha + beta;
    let mut diag = Vec::with_capacity(n);
    let mut offdiag = Vec::with_capacity(n.saturating_sub(1));
    for k in 0..n {
        let k = k as f64;
        let denom = (2.0 * k + ab) * (2.0 * k + ab + 2.0);
        let a = if k == 0.0 && ab + 2.0 == 0.0 {
            // alpha + beta = -2 cannot happen for alpha,beta > -1
            0.0
        } else if denom == 0.0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / denom
        };
        diag.push(a);
    }
    for k in 1..n {
        let k = k as f64;
        let t = 2.0 * k + ab;
        let num = 4.0 * k * (k + alpha) * (k + beta) * (k + ab);
        let den = t * t * (t + 1.0) * (t - 1.0);
        offdiag.push((num / den).sqrt());
    }
    let mu0 = 2f64.powf(ab + 1.0) * gamma(alpha + 1.0)? * gamma(beta + 1.0)?
        / gamma(ab + 2.0)?;
    let rule = eigen_rule(diag, offdiag, mu0);
    // map [-1,1] with weight (1-t)^a (1+t)^b onto [0,1] with (1-x)^a x^b
    let scale = 2f64.powf(ab + 1.0);
    Ok(Rule {
        nodes: rule.nodes.iter().map(|&t| 0.5 * (t + 1.0)).collect(),
        weights: rule.weights.iter().map(|&w| w / scale).collect(),
    })
}

/// Composite Gauss-Legendre integration over consecutive panels.
pub fn gl_panels<F: FnMut(f64) -> f64>(breaks: &[f64], n: usize, mut f: F) -> f64 {
    let base = gauss_legendre(n);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += base.mapped(w[0], w[1]).integrate(&mut f);
    }
    total
}

/// Dyadic panel breakpoints a, 2a, 4a, ... up to at least b.
pub fn dyadic_breaks(a: f64, b: f64) -> Vec<f64> {
    assert!(a > 0.0 && b > a);
    let mut breaks = vec![a];
    let mut hi = a;
    while hi < b {
        hi = (2.0 * hi).min(b);
        breaks.push(hi);
    }
    breaks
}

/// Adaptive Simpson integration with absolute tolerance.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Least-squares slope of ln(y) against ln(x).
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre(8);
        // degree 15 is exact for an 8-point rule
        let got = rule.integrate(|x| x.powi(14) + 3.0 * x.powi(7) + 1.0);
        let exact = 2.0 / 15.0 + 2.0;
        assert_abs_diff_eq!(got, exact, epsilon = 1e-14);
    }

    #[test]
    fn legendre_mapped_interval() {
        let rule = gauss_legendre(16).mapped(0.0, 3.0);
        let got = rule.integrate(|x| x.exp());
        assert_abs_diff_eq!(got, 3f64.exp() - 1.0, epsilon = 1e-12);
    }

    #[test]
    fn jacobi_matches_beta_function_moments() {
        // int_0^1 x^b (1-x)^a x^m dx = B(b+m+1, a+1)
        let a = 0.0;
        let b = -0.4;
        let rule = gauss_jacobi_01(12, a, b).unwrap();
        for m in 0..5 {
            let got = rule.integrate(|x| x.powi(m));
            let exact = gamma(b + m as f64 + 1.0).unwrap() * gamma(a + 1.0).unwrap()
                / gamma(b + m as f64 + a + 2.0).unwrap();
            assert_abs_diff_eq!(got, exact, epsilon = 1e-13);
        }
    }

    #[test]
    fn jacobi_rejects_bad_exponents() {
        assert!(gauss_jacobi_01(8, -1.0, 0.0).is_err());
        assert!(gauss_jacobi_01(8, 0.0, -1.2).is_err());
    }

    #[test]
    fn adaptive_simpson_smooth() {
        let got = adaptive_simpson(&|x: f64| (-x * x).exp(), 0.0, 10.0, 1e-13);
        let exact = 0.5 * std::f64::consts::PI.sqrt();
        assert_abs_diff_eq!(got, exact, epsilon = 1e-11);
    }

    #[test]
    fn slope_of_pure_power() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.5)).collect();
        assert_abs_diff_eq!(loglog_slope(&xs, &ys), -1.5, epsilon = 1e-12);
    }
}
