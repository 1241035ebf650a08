use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed interval for a uniform draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range(pub f64, pub f64);

impl Range {
    pub fn low(&self) -> f64 {
        self.0
    }

    pub fn high(&self) -> f64 {
        self.1
    }

    fn validate(&self, field: &str) -> Result<()> {
        if !self.0.is_finite() || !self.1.is_finite() || self.0 > self.1 {
            return Err(Error::config(field, format!("need finite low <= high, got [{}, {}]", self.0, self.1)));
        }
        Ok(())
    }
}

/// Fractions of the true mediators assigned to each pathway type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Split {
    pub both: f64,
    pub m_only: f64,
    pub f_only: f64,
}

impl Default for Split {
    fn default() -> Self {
        Self {
            both: 0.5,
            m_only: 0.25,
            f_only: 0.25,
        }
    }
}

/// Which exposure coefficient M-only and F-only mediators receive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientMode {
    /// M-only mediators get a count-path effect γ_X, F-only a zero-path effect α_X.
    #[default]
    Semantic,
    /// M-only mediators get α_X, F-only get γ_X (ranges applied as literally stated).
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoefficientRanges {
    pub both_alpha_x: Range,
    pub both_gamma_x: Range,
    /// Exposure effect of M-only mediators.
    pub m_only_exposure: Range,
    /// Exposure effect of F-only mediators.
    pub f_only_exposure: Range,
    pub both_beta_m: Range,
    pub both_beta_f: Range,
    pub m_only_beta_m: Range,
    pub f_only_beta_f: Range,
    /// Per-gene NB dispersion δ_g (variance μ + μ²/δ).
    pub dispersion: Range,
}

impl Default for CoefficientRanges {
    fn default() -> Self {
        Self {
            both_alpha_x: Range(1.0, 2.0),
            both_gamma_x: Range(2.0, 6.0),
            m_only_exposure: Range(1.0, 1.5),
            f_only_exposure: Range(1.8, 3.0),
            both_beta_m: Range(4.0, 5.0),
            both_beta_f: Range(12.0, 14.0),
            m_only_beta_m: Range(5.0, 8.0),
            f_only_beta_f: Range(10.0, 15.0),
            dispersion: Range(0.6, 1.2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FixedEffects {
    /// Covariate effect on logit(π), shared by all genes and covariates.
    pub alpha_z: f64,
    /// Covariate effect on log(μ), shared by all genes and covariates.
    pub gamma_z: f64,
    pub beta_x: f64,
    /// Outcome covariate effects; its length sets the number of covariates.
    pub beta_z: Vec<f64>,
    pub exposure_probability: f64,
}

impl Default for FixedEffects {
    fn default() -> Self {
        Self {
            alpha_z: 0.1,
            gamma_z: 0.3,
            beta_x: 3.0,
            beta_z: vec![0.5, -0.3, 0.2],
            exposure_probability: 0.5,
        }
    }
}

/// Generator parameters for one simulation cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// Subjects.
    pub n: usize,
    /// Cells per subject.
    pub cells: usize,
    /// Genes.
    pub genes: usize,
    /// True mediators; when unset, `min(8, genes)`.
    pub n_true: Option<usize>,
    pub split: Split,
    pub coefficient_mode: CoefficientMode,
    pub ranges: CoefficientRanges,
    pub fixed: FixedEffects,
    pub noise_sd: f64,
    pub seed: u64,
    pub replicates: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n: 100,
            cells: 100,
            genes: 100,
            n_true: None,
            split: Split::default(),
            coefficient_mode: CoefficientMode::Semantic,
            ranges: CoefficientRanges::default(),
            fixed: FixedEffects::default(),
            noise_sd: 0.25,
            seed: 1,
            replicates: 100,
        }
    }
}

const DEFAULT_N_TRUE: usize = 8;

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(
            "config",
            e.to_string().trim().to_string(),
        ))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("n", self.n), ("cells", self.cells), ("genes", self.genes), ("replicates", self.replicates)] {
            if v == 0 {
                return Err(Error::config(field, "must be >= 1"));
            }
        }
        if let Some(t) = self.n_true.filter(|&t| t > self.genes) {
            return Err(Error::config("n_true", format!("{t} exceeds genes = {}", self.genes)));
        }
        let s = self.split;
        for (field, v) in [("split.both", s.both), ("split.m_only", s.m_only), ("split.f_only", s.f_only)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(field, format!("fraction {v} outside [0, 1]")));
            }
        }
        let total = s.both + s.m_only + s.f_only;
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::config("split", format!("fractions sum to {total}, expected 1")));
        }
        let r = &self.ranges;
        for (field, range) in [
            ("ranges.both_alpha_x", r.both_alpha_x),
            ("ranges.both_gamma_x", r.both_gamma_x),
            ("ranges.m_only_exposure", r.m_only_exposure),
            ("ranges.f_only_exposure", r.f_only_exposure),
            ("ranges.both_beta_m", r.both_beta_m),
            ("ranges.both_beta_f", r.both_beta_f),
            ("ranges.m_only_beta_m", r.m_only_beta_m),
            ("ranges.f_only_beta_f", r.f_only_beta_f),
            ("ranges.dispersion", r.dispersion),
        ] {
            range.validate(field)?;
        }
        if r.dispersion.low() <= 0.0 {
            return Err(Error::config("ranges.dispersion", "dispersion must be positive"));
        }
        let f = &self.fixed;
        if ![f.alpha_z, f.gamma_z, f.beta_x].iter().chain(&f.beta_z).all(|v| v.is_finite()) {
            return Err(Error::config("fixed", "effects must be finite"));
        }
        if !(0.0..=1.0).contains(&f.exposure_probability) {
            return Err(Error::config("fixed.exposure_probability", "must lie in [0, 1]"));
        }
        if !(self.noise_sd >= 0.0) || !self.noise_sd.is_finite() {
            return Err(Error::config("noise_sd", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn n_covariates(&self) -> usize {
        self.fixed.beta_z.len()
    }

    pub fn n_true(&self) -> usize {
        self.n_true.unwrap_or(DEFAULT_N_TRUE.min(self.genes))
    }

    /// `(both, m_only, f_only)` counts; rounding remainders go to F-only.
    pub fn mediator_counts(&self) -> (usize, usize, usize) {
        let n_true = self.n_true();
        let both = ((n_true as f64) * self.split.both).round() as usize;
        let both = both.min(n_true);
        let m_only = (((n_true as f64) * self.split.m_only).round() as usize).min(n_true - both);
        (both, m_only, n_true - both - m_only)
    }
}
