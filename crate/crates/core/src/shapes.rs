//! Initial-datum shapes shared by the solver tests and the CLI: analytic
//! bumps, plateaus, smooth steps, and seeded random data.

use crate::basis::{DirichletBasis, Field};
use crate::error::Result;
use crate::singular::xi_profile;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Analytic bump supported on (center-width, center+width): smooth with
/// spectrally small tails, which keeps cross-grid comparisons clean.
pub fn bump(center: f64, width: f64, height: f64) -> impl Fn(f64) -> f64 + Clone {
    move |x: f64| {
        let t = (x - center) / width;
        if t.abs() >= 1.0 {
            0.0
        } else {
            height * (-t * t / (1.0 - t * t)).exp()
        }
    }
}

/// Flat-top plateau: equal to height on |x-center| <= radius, smoothly
/// falling to zero by 2*radius.
pub fn plateau(center: f64, radius: f64, height: f64) -> impl Fn(f64) -> f64 + Clone {
    move |x: f64| height * xi_profile((x - center).abs() / radius)
}

/// Smooth one-sided step from `height` (left) to 0 (right) across
/// [at, at+width].
pub fn smooth_step(at: f64, width: f64, height: f64) -> impl Fn(f64) -> f64 + Clone {
    move |x: f64| height * xi_profile(1.0 + ((x - at) / width).clamp(-1.0, 1.0).max(0.0))
}

/// Seeded nonnegative random datum: a few random analytic bumps inside
/// |x| < spread.
pub fn random_bumps(seed: u64, spread: f64, max_height: f64) -> impl Fn(f64) -> f64 + Clone {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.gen_range(1..=3);
    let mut parts: Vec<(f64, f64, f64)> = Vec::new();
    for _ in 0..count {
        let c = rng.gen_range(-0.45 * spread..0.45 * spread);
        let w = rng.gen_range(0.25 * spread..0.5 * spread);
        let h = rng.gen_range(0.2 * max_height..max_height);
        parts.push((c, w, h));
    }
    let parts = Arc::new(parts);
    move |x: f64| {
        parts
            .iter()
            .map(|&(c, w, h)| {
                let t = (x - c) / w;
                if t.abs() >= 1.0 {
                    0.0
                } else {
                    h * (-t * t / (1.0 - t * t)).exp()
                }
            })
            .sum()
    }
}

/// Seeded random band-limited field: random coefficients on the lowest
/// `modes` eigenfunctions with 1/k^2 damping (may change sign).
pub fn random_band_limited(
    basis: Arc<DirichletBasis>,
    seed: u64,
    modes: usize,
    amplitude: f64,
) -> Result<Field> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = vec![0.0; basis.len()];
    for (k, c) in coeffs.iter_mut().take(modes.min(basis.len())).enumerate() {
        let damp = 1.0 / ((k + 1) * (k + 1)) as f64;
        *c = amplitude * damp * rng.gen_range(-1.0..1.0);
    }
    Field::from_coeffs(basis, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_support_and_peak() {
        let f = bump(0.5, 1.0, 2.0);
        assert_eq!(f(0.5), 2.0);
        assert_eq!(f(1.5), 0.0);
        assert_eq!(f(-0.6), 0.0);
        assert!(f(0.9) > 0.0 && f(0.9) < 2.0);
    }

    #[test]
    fn plateau_is_flat_then_zero() {
        let f = plateau(0.0, 1.0, 0.7);
        assert_eq!(f(0.3), 0.7);
        assert_eq!(f(-0.99), 0.7);
        assert_eq!(f(2.1), 0.0);
    }

    #[test]
    fn random_data_is_deterministic() {
        let f = random_bumps(42, 2.0, 1.0);
        let g = random_bumps(42, 2.0, 1.0);
        for i in 0..20 {
            let x = -2.0 + 4.0 * i as f64 / 19.0;
            assert_eq!(f(x), g(x));
            assert!(f(x) >= 0.0);
        }
    }

    #[test]
    fn band_limited_respects_mode_cap() {
        let b = DirichletBasis::new(1.0, 1, 32).unwrap();
        let f = random_band_limited(b, 7, 6, 1.0).unwrap();
        for (k, &c) in f.coeffs().iter().enumerate() {
            if k >= 6 {
                assert_eq!(c, 0.0);
            }
        }
    }
}
