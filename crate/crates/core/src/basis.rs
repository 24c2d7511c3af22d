//! Dirichlet eigenstructure of the interval (-R, R) and the spectral
//! fractional Laplacian diagonalized by it.
//!
//! Eigenpairs: lambda_k = (k pi / (2R))^2 with phi_k(x) = sin(k pi (x+R)/(2R)) / sqrt(R).
//! On the uniform interior grid x_i = -R + 2R i/(N+1) the analysis/synthesis
//! pair is an exact discrete sine transform, so round trips are exact to
//! rounding and the stored quadrature reproduces discrete orthonormality.

use crate::error::{Error, Result};
use crate::specfun::FracOrder;
use ndarray::Array2;
use std::sync::Arc;

/// Dirichlet eigenbasis of B_R = (-R, R), truncated at N modes, together
/// with its collocation grid and quadrature weights.
#[derive(Debug)]
pub struct DirichletBasis {
    r: f64,
    d: usize,
    n: usize,
    lambdas: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// sin(k pi i / (N+1)) for k, i = 1..N
    sine: Array2<f64>,
}

impl DirichletBasis {
    /// Build the basis. Only d = 1 is realized; radial d >= 2 would take its
    /// eigenvalues from Bessel-J zeros and is reported as unsupported.
    pub fn new(r: f64, d: usize, n: usize) -> Result<Arc<Self>> {
        if d != 1 {
            return Err(Error::Unsupported(format!(
                "only d = 1 is implemented; radial d = {d} is not built"
            )));
        }
        if !(r > 0.0) {
            return Err(Error::Domain(format!("radius must be positive, got {r}")));
        }
        if n < 1 {
            return Err(Error::Domain("mode count must be >= 1".into()));
        }
        let h = 2.0 * r / (n as f64 + 1.0);
        let lambdas: Vec<f64> = (1..=n)
            .map(|k| {
                let w = k as f64 * std::f64::consts::PI / (2.0 * r);
                w * w
            })
            .collect();
        let nodes: Vec<f64> = (1..=n).map(|i| -r + h * i as f64).collect();
        let weights = vec![h; n];
        let mut sine = Array2::<f64>::zeros((n, n));
        let theta = std::f64::consts::PI / (n as f64 + 1.0);
        for k in 1..=n {
            for i in 1..=n {
                sine[(k - 1, i - 1)] = (theta * (k * i) as f64).sin();
            }
        }
        Ok(Arc::new(DirichletBasis {
            r,
            d,
            n,
            lambdas,
            nodes,
            weights,
            sine,
        }))
    }

    /// Basis with the default mode count of 256.
    pub fn with_default_modes(r: f64) -> Result<Arc<Self>> {
        Self::new(r, 1, 256)
    }

    #[inline]
    pub fn radius(&self) -> f64 {
        self.r
    }
    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }
    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
    #[inline]
    pub fn eigenvalues(&self) -> &[f64] {
        &self.lambdas
    }
    #[inline]
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// phi_k evaluated at an arbitrary point of [-R, R] (k is 1-based).
    pub fn eigenfunction(&self, k: usize, x: f64) -> f64 {
        let arg = k as f64 * std::f64::consts::PI * (x + self.r) / (2.0 * self.r);
        arg.sin() / self.r.sqrt()
    }

    /// d/dx phi_k at an arbitrary point (k is 1-based).
    pub fn eigenfunction_deriv(&self, k: usize, x: f64) -> f64 {
        let freq = k as f64 * std::f64::consts::PI / (2.0 * self.r);
        let arg = freq * (x + self.r);
        freq * arg.cos() / self.r.sqrt()
    }

    /// Grid samples -> spectral coefficients (exact inverse of `synthesize`).
    pub fn analyze(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.n {
            return Err(Error::SizeMismatch(format!(
                "expected {} grid values, got {}",
                self.n,
                values.len()
            )));
        }
        // c_k = sum_i w_i phi_k(x_i) f_i, w_i = 2R/(N+1), phi_k(x_i) = sin(k pi i/(N+1))/sqrt(R)
        let scale = 2.0 * self.r / ((self.n as f64 + 1.0) * self.r.sqrt());
        let mut coeffs = vec![0.0; self.n];
        for k in 0..self.n {
            let row = self.sine.row(k);
            let mut acc = 0.0;
            for i in 0..self.n {
                acc += row[i] * values[i];
            }
            coeffs[k] = scale * acc;
        }
        Ok(coeffs)
    }

    /// Spectral coefficients -> grid samples.
    pub fn synthesize(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.n {
            return Err(Error::SizeMismatch(format!(
                "expected {} coefficients, got {}",
                self.n,
                coeffs.len()
            )));
        }
        let scale = 1.0 / self.r.sqrt();
        let mut values = vec![0.0; self.n];
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in 0..self.n {
                acc += self.sine[(k, i)] * coeffs[k];
            }
            values[i] = scale * acc;
        }
        Ok(values)
    }

    /// L^2(B_R) inner product under the stored quadrature.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter()
            .zip(g)
            .zip(&self.weights)
            .map(|((a, b), w)| a * b * w)
            .sum()
    }

    /// Do two bases describe the same discretization?
    pub fn same_as(&self, other: &DirichletBasis) -> bool {
        self.r == other.r && self.n == other.n && self.d == other.d
    }
}

/// A function on B_R kept simultaneously as spectral coefficients and grid
/// samples; the two representations are maintained consistent.
#[derive(Debug, Clone)]
pub struct Field {
    basis: Arc<DirichletBasis>,
    coeffs: Vec<f64>,
    values: Vec<f64>,
}

impl Field {
    pub fn from_values(basis: Arc<DirichletBasis>, values: Vec<f64>) -> Result<Self> {
        let coeffs = basis.analyze(&values)?;
        Ok(Field {
            basis,
            coeffs,
            values,
        })
    }

    pub fn from_coeffs(basis: Arc<DirichletBasis>, coeffs: Vec<f64>) -> Result<Self> {
        let values = basis.synthesize(&coeffs)?;
        Ok(Field {
            basis,
            coeffs,
            values,
        })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(basis: Arc<DirichletBasis>, f: F) -> Result<Self> {
        let values = basis.nodes().iter().map(|&x| f(x)).collect();
        Self::from_values(basis, values)
    }

    pub fn zero(basis: Arc<DirichletBasis>) -> Self {
        let n = basis.len();
        Field {
            basis,
            coeffs: vec![0.0; n],
            values: vec![0.0; n],
        }
    }

    /// The k-th eigenfunction as a Field (k is 1-based).
    pub fn eigenmode(basis: Arc<DirichletBasis>, k: usize) -> Result<Self> {
        if k == 0 || k > basis.len() {
            return Err(Error::Domain(format!(
                "mode index {k} outside 1..={}",
                basis.len()
            )));
        }
        let mut coeffs = vec![0.0; basis.len()];
        coeffs[k - 1] = 1.0;
        Self::from_coeffs(basis, coeffs)
    }

    #[inline]
    pub fn basis(&self) -> &Arc<DirichletBasis> {
        &self.basis
    }
    #[inline]
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Evaluate the truncated eigenexpansion at an arbitrary point.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| c * self.basis.eigenfunction(k + 1, x))
            .sum()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn l2_norm(&self) -> f64 {
        self.basis.inner(&self.values, &self.values).sqrt()
    }

    /// L^2 distance to another field on the same basis.
    pub fn l2_distance(&self, other: &Field) -> Result<f64> {
        if !self.basis.same_as(&other.basis) {
            return Err(Error::SizeMismatch("fields live on different bases".into()));
        }
        let diff: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(self.basis.inner(&diff, &diff).sqrt())
    }
}

/// Spectral fractional Laplacian: multiply the k-th coefficient by lambda_k^s.
pub fn spectral_frac_laplacian(f: &Field, s: FracOrder) -> Field {
    frac_power(f, s.value())
}

/// General fractional power of the Dirichlet Laplacian (p > 0 expected small).
pub fn frac_power(f: &Field, p: f64) -> Field {
    let coeffs: Vec<f64> = f
        .coeffs()
        .iter()
        .zip(f.basis().eigenvalues())
        .map(|(&c, &l)| l.powf(p) * c)
        .collect();
    Field::from_coeffs(f.basis().clone(), coeffs).expect("sizes preserved")
}

/// H^s_0 norm: sqrt(sum lambda_k^s c_k^2).
pub fn hs_norm(f: &Field, s: FracOrder) -> f64 {
    weighted_coeff_norm(f, s.value())
}

/// Dom((-Delta)^s_R) norm: sqrt(sum lambda_k^{2s} c_k^2).
pub fn dom_norm(f: &Field, s: FracOrder) -> f64 {
    weighted_coeff_norm(f, 2.0 * s.value())
}

fn weighted_coeff_norm(f: &Field, p: f64) -> f64 {
    f.coeffs()
        .iter()
        .zip(f.basis().eigenvalues())
        .map(|(&c, &l)| l.powf(p) * c * c)
        .sum::<f64>()
        .sqrt()
}
