//! Campaign configuration: a flat JSON object, every key optional.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aero::{model_catalog, AeroModelVariant, GeometrySettings};
use crate::error::{Error, Result};
use crate::estimators::{RobustConfig, N_CONSTRAINTS};
use crate::geometry::DesignBounds;
use crate::optimizers::{Algorithm, Mode, DEFAULT_EPSILON, DEFAULT_ETA};
use crate::uncertainty::{InputDistribution, ReSampling, RE_MAX, RE_MIN};

/// Normalized cost reached when `iterations` is not given.
pub const DEFAULT_COST_BUDGET: usize = 2000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub mode: Mode,
    pub n: usize,
    pub lambda: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub algorithm: Algorithm,
    /// Defaults to `2000 / n`.
    pub iterations: Option<usize>,
    pub seed: u64,
    pub study_samples: usize,
    pub study_seed: u64,
    pub out_dir: PathBuf,

    pub kappa: [f64; N_CONSTRAINTS],
    pub c_l_star: f64,
    pub vol_tol: f64,

    pub dy_max: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,

    pub n_per_surface: usize,
    pub nx: usize,
    pub ny: usize,
    pub margin: f64,
    pub n_quad: usize,

    pub re_min: f64,
    pub re_max: f64,
    pub re_sampling: ReSampling,

    /// Replaces the built-in five-model catalog when present.
    pub models: Option<Vec<AeroModelVariant>>,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        let robust = RobustConfig::default();
        let bounds = DesignBounds::default();
        let geom = GeometrySettings::default();
        Self {
            mode: Mode::Average,
            n: 4,
            lambda: 0.0,
            eta: DEFAULT_ETA,
            epsilon: DEFAULT_EPSILON,
            algorithm: Algorithm::AdaGrad,
            iterations: None,
            seed: 1,
            study_samples: 100,
            study_seed: 2021,
            out_dir: PathBuf::from("out"),
            kappa: robust.kappa,
            c_l_star: robust.c_l_star,
            vol_tol: robust.vol_tol,
            dy_max: bounds.dy_max,
            alpha_min: bounds.alpha_min,
            alpha_max: bounds.alpha_max,
            n_per_surface: geom.n_per_surface,
            nx: geom.nx,
            ny: geom.ny,
            margin: geom.margin,
            n_quad: geom.n_quad,
            re_min: RE_MIN,
            re_max: RE_MAX,
            re_sampling: ReSampling::Uniform,
            models: None,
        }
    }
}

/// CLI flags that override file keys.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub mode: Option<Mode>,
    pub lambda: Option<f64>,
    pub n: Option<usize>,
    pub eta: Option<f64>,
    pub iterations: Option<usize>,
}

impl CampaignConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = &o.out_dir {
            self.out_dir = v.clone();
        }
        if let Some(v) = o.mode {
            self.mode = v;
        }
        if let Some(v) = o.lambda {
            self.lambda = v;
        }
        if let Some(v) = o.n {
            self.n = v;
        }
        if let Some(v) = o.eta {
            self.eta = v;
        }
        if let Some(v) = o.iterations {
            self.iterations = Some(v);
        }
    }

    /// Applies the mode rules (DSP: n = 1 and lambda = 0; average: lambda = 0),
    /// fills in the iteration budget and validates every field.
    pub fn resolve(mut self) -> Result<Self> {
        match self.mode {
            Mode::Dsp => {
                self.n = 1;
                self.lambda = 0.0;
            }
            Mode::Average => self.lambda = 0.0,
            Mode::Robust => {
                if !(self.lambda > 0.0) {
                    return Err(Error::Config(format!(
                        "robust mode needs lambda > 0, got {}",
                        self.lambda
                    )));
                }
            }
        }
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if self.iterations.is_none() {
            self.iterations = Some((DEFAULT_COST_BUDGET / self.n).max(1));
        }
        if self.iterations == Some(0) {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::Config(format!("eta must be > 0, got {}", self.eta)));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::Config(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if self.study_samples < 2 {
            return Err(Error::Config("study_samples must be at least 2".into()));
        }
        if !(self.dy_max > 0.0) || !(self.alpha_min < self.alpha_max) {
            return Err(Error::Config("design bounds are empty".into()));
        }
        self.robust().validate()?;
        self.distribution().validate()?;
        for m in self.catalog() {
            m.validate()?;
        }
        if self.catalog().len() > u8::MAX as usize {
            return Err(Error::Config("too many models".into()));
        }
        Ok(self)
    }

    pub fn iterations(&self) -> usize {
        self.iterations.unwrap_or(DEFAULT_COST_BUDGET / self.n.max(1))
    }

    pub fn robust(&self) -> RobustConfig {
        RobustConfig {
            lambda: self.lambda,
            kappa: self.kappa,
            c_l_star: self.c_l_star,
            vol_tol: self.vol_tol,
        }
    }

    pub fn bounds(&self) -> DesignBounds {
        DesignBounds { dy_max: self.dy_max, alpha_min: self.alpha_min, alpha_max: self.alpha_max }
    }

    pub fn geometry(&self) -> GeometrySettings {
        GeometrySettings {
            n_per_surface: self.n_per_surface,
            nx: self.nx,
            ny: self.ny,
            margin: self.margin,
            n_quad: self.n_quad,
        }
    }

    pub fn catalog(&self) -> Vec<AeroModelVariant> {
        self.models.clone().unwrap_or_else(model_catalog)
    }

    pub fn distribution(&self) -> InputDistribution {
        InputDistribution {
            re_min: self.re_min,
            re_max: self.re_max,
            re_sampling: self.re_sampling,
            n_models: self.catalog().len() as u8,
        }
    }
}
