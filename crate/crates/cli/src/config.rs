//! Run configuration: a single JSON document validated against the module
//! preconditions before any compute, and echoed into every output file.

use fracfilt_core::basis::{DirichletBasis, Field};
use fracfilt_core::evolve::{Nonlinearity, SolverConfig};
use fracfilt_core::shapes;
use fracfilt_core::specfun::FracOrder;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum NonlinSpec {
    #[default]
    Linear,
    Pme {
        m: f64,
    },
    Stefan,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum ShapeSpec {
    Bump { center: f64, width: f64, height: f64 },
    Plateau { center: f64, radius: f64, height: f64 },
    Step { at: f64, width: f64, height: f64 },
    RandomBandLimited { modes: usize, amplitude: f64 },
    RandomBumps { spread: f64, max_height: f64 },
}

impl Default for ShapeSpec {
    fn default() -> Self {
        ShapeSpec::Bump {
            center: 0.0,
            width: 1.0,
            height: 0.8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualityOpts {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_pieces")]
    pub pieces: usize,
    #[serde(default = "default_inner")]
    pub inner_steps: usize,
}

fn default_k() -> usize {
    16
}
fn default_pieces() -> usize {
    4
}
fn default_inner() -> usize {
    1024
}

impl Default for DualityOpts {
    fn default() -> Self {
        DualityOpts {
            k: default_k(),
            pieces: default_pieces(),
            inner_steps: default_inner(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub s: f64,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default = "default_r")]
    pub r: f64,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub nonlinearity: NonlinSpec,
    #[serde(default)]
    pub u0: ShapeSpec,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default)]
    pub eps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub newton_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_list: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_list: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes_per_unit: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duality: Option<DualityOpts>,
}

fn default_d() -> usize {
    1
}
fn default_r() -> f64 {
    1.0
}
fn default_n() -> usize {
    256
}
fn default_tau() -> f64 {
    1.0 / 64.0
}
fn default_t_end() -> f64 {
    0.5
}

impl RunConfig {
    pub fn order(&self) -> Result<FracOrder, String> {
        FracOrder::new(self.s).map_err(|e| format!("field `s`: {e}"))
    }

    pub fn basis(&self) -> Result<Arc<DirichletBasis>, String> {
        DirichletBasis::new(self.r, self.d, self.n)
            .map_err(|e| format!("fields `r`/`d`/`n`: {e}"))
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity, String> {
        match &self.nonlinearity {
            NonlinSpec::Linear => Ok(Nonlinearity::Linear),
            NonlinSpec::Pme { m } => {
                Nonlinearity::porous_medium(*m).map_err(|e| format!("field `nonlinearity.m`: {e}"))
            }
            NonlinSpec::Stefan => Ok(Nonlinearity::Stefan),
        }
    }

    pub fn solver(&self) -> Result<SolverConfig, String> {
        let mut cfg = SolverConfig::new(self.tau).map_err(|e| format!("field `tau`: {e}"))?;
        cfg.eps = self.eps;
        if let Some(tol) = self.newton_tol {
            if !(tol > 0.0) {
                return Err(format!("field `newton_tol` must be > 0, got {tol}"));
            }
            cfg.newton_tol = tol;
        }
        Ok(cfg)
    }

    pub fn datum(&self, basis: Arc<DirichletBasis>, seed: u64) -> Result<Field, String> {
        let field = match &self.u0 {
            ShapeSpec::Bump {
                center,
                width,
                height,
            } => Field::from_fn(basis, shapes::bump(*center, *width, *height)),
            ShapeSpec::Plateau {
                center,
                radius,
                height,
            } => Field::from_fn(basis, shapes::plateau(*center, *radius, *height)),
            ShapeSpec::Step { at, width, height } => {
                Field::from_fn(basis, shapes::smooth_step(*at, *width, *height))
            }
            ShapeSpec::RandomBandLimited { modes, amplitude } => {
                shapes::random_band_limited(basis, seed, *modes, *amplitude)
            }
            ShapeSpec::RandomBumps { spread, max_height } => {
                Field::from_fn(basis, shapes::random_bumps(seed, *spread, *max_height))
            }
        };
        field.map_err(|e| format!("field `u0`: {e}"))
    }

    pub fn validate(&self) -> Result<(), String> {
        self.order()?;
        self.basis()?;
        self.nonlinearity()?;
        self.solver()?;
        if !(self.t_end > 0.0) {
            return Err(format!("field `t_end` must be > 0, got {}", self.t_end));
        }
        if self.eps < 0.0 {
            return Err(format!("field `eps` must be >= 0, got {}", self.eps));
        }
        if let Some(ys) = &self.y_grid {
            if ys.iter().any(|&y| y <= 0.0) {
                return Err("field `y_grid` must contain positive heights".into());
            }
        }
        Ok(())
    }
}
