//! JSON run configuration: model, experiment parameters and numeric tolerances.
//!
//! Every section and field is optional; missing entries take the defaults below.
//! Unknown fields are rejected so that typos surface as errors.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crit::{default_centers, default_r_grid, CriticalBudget, PrimitiveFamily};
use crate::field::{ConformalMetric, MagneticField};
use crate::flow::{IntegratorOptions, PhaseState};
use crate::hyp::HalfPlanePoint;
use crate::radon::{zero_mean_constant, RadonMethod, MEAN_TOLERANCE};
use crate::surface::{build_genus2_group, validate_bump, Bump, InvariantOneForm, InvariantScalar, SurfaceGroup};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {}: {source}", .path.display())]
    Read { path: PathBuf, source: std::io::Error },

    #[error("config {path}: {message}")]
    Invalid { path: String, message: String },
}

impl ConfigError {
    fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub metric: MetricConfig,
    pub magnetic: MagneticConfig,
    pub flow: FlowConfig,
    pub crit: CritConfig,
    pub radon: RadonConfig,
    pub tolerances: Tolerances,
}

/// Conformal factor `u = constant + Σ bumps`; the metric is `e^{2u}` times the hyperbolic one.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConfig {
    pub constant: f64,
    pub bumps: Vec<Bump>,
}

/// `σ = a μ_g + d β₀`, with `β₀` a sum of rotational bump forms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MagneticConfig {
    pub a: f64,
    pub beta0: Vec<Bump>,
}

impl Default for MagneticConfig {
    fn default() -> Self {
        Self { a: 1.0, beta0: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    /// Field intensity.
    pub s: f64,
    /// Integration time.
    #[serde(rename = "T", alias = "duration")]
    pub duration: f64,
    pub dt: f64,
    pub initial: InitialState,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            s: 1.0,
            duration: 10.0,
            dt: 1e-2,
            initial: InitialState::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Default for InitialState {
    fn default() -> Self {
        Self { x: 0.0, y: 1.0, theta: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CritConfig {
    pub r_grid: Vec<f64>,
    /// Circle centers; null uses the base point and four nearby points.
    pub center_grid: Option<Vec<HalfPlanePoint>>,
    pub circle_density: f64,
    pub amplitudes: Vec<f64>,
    pub samples: usize,
    pub translates: usize,
}

impl Default for CritConfig {
    fn default() -> Self {
        let family = PrimitiveFamily::default();
        Self {
            r_grid: default_r_grid(),
            center_grid: None,
            circle_density: 16.0,
            amplitudes: family.amplitudes,
            samples: family.samples,
            translates: family.translates,
        }
    }
}

/// The zero-mean function fed to the Radon transform. Without an explicit constant
/// the bumps are shifted to mean zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadonFunction {
    pub constant: Option<f64>,
    pub bumps: Vec<Bump>,
}

impl Default for RadonFunction {
    fn default() -> Self {
        Self {
            constant: None,
            bumps: vec![Bump {
                center: HalfPlanePoint::I,
                amplitude: 1.0,
                support_radius: 1.4,
            }],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadonConfig {
    pub r_grid: Vec<f64>,
    /// Real spectral parameters for kernel tables and the mean-value check.
    pub s_list: Vec<f64>,
    /// Imaginary spectral parameters `α ∈ [0, ½]`.
    pub alpha_list: Vec<f64>,
    pub centers: Vec<HalfPlanePoint>,
    pub h: RadonFunction,
    pub method: RadonMethod,
    pub growth_s: Vec<f64>,
    pub growth_n: usize,
}

impl Default for RadonConfig {
    fn default() -> Self {
        Self {
            r_grid: vec![0.5, 1.0, 2.0, 4.0],
            s_list: vec![0.0, 1.0, 2.5],
            alpha_list: vec![0.0, 0.25, 0.5],
            centers: vec![HalfPlanePoint::I, HalfPlanePoint { x: 0.3, y: 0.8 }],
            h: RadonFunction::default(),
            method: RadonMethod::GroupSum,
            growth_s: vec![0.5, 1.0, 3.0],
            growth_n: 5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Target accuracy of the one-dimensional quadratures.
    pub quadrature: f64,
    /// Absolute agreement of independently computed quantities.
    pub cross_check: f64,
    /// Relative agreement of the helicity integral with its closed form.
    pub helicity_relative: f64,
    /// Group and lift identities.
    pub geometry: f64,
    /// Allowed excess of `s_c` over `s_h`.
    pub theorem: f64,
    /// Allowed excess of the lower bound for `c` over the upper bound, relative.
    pub bound: f64,
    /// Local error per integrator step.
    pub integrator: f64,
    /// Phase-space distance accepted as a return.
    pub period: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            quadrature: 1e-9,
            cross_check: 1e-6,
            helicity_relative: 1e-5,
            geometry: 1e-8,
            theorem: 1e-3,
            bound: 1e-6,
            integrator: IntegratorOptions::default().tolerance,
            period: 1e-4,
        }
    }
}

impl Tolerances {
    fn validate(&self) -> Result<(), ConfigError> {
        let fields = [
            ("quadrature", self.quadrature),
            ("cross_check", self.cross_check),
            ("helicity_relative", self.helicity_relative),
            ("geometry", self.geometry),
            ("theorem", self.theorem),
            ("bound", self.bound),
            ("integrator", self.integrator),
            ("period", self.period),
        ];
        for (name, value) in fields {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ConfigError::invalid(
                    format!("tolerances.{name}"),
                    format!("must be positive and finite, got {value}"),
                ));
            }
        }
        Ok(())
    }
}

/// The group, metric and magnetic field described by a configuration.
#[derive(Clone, Debug)]
pub struct Model {
    pub group: Arc<SurfaceGroup>,
    pub metric: ConformalMetric,
    pub field: MagneticField,
}

fn check_point(path: &str, p: HalfPlanePoint) -> Result<(), ConfigError> {
    HalfPlanePoint::new(p.x, p.y)
        .map(|_| ())
        .map_err(|e| ConfigError::invalid(path, e.to_string()))
}

fn check_positive(path: &str, values: &[f64]) -> Result<(), ConfigError> {
    if values.is_empty() {
        return Err(ConfigError::invalid(path, "must not be empty"));
    }
    for (i, &v) in values.iter().enumerate() {
        if !(v > 0.0 && v.is_finite()) {
            return Err(ConfigError::invalid(format!("{path}[{i}]"), format!("must be positive, got {v}")));
        }
    }
    Ok(())
}

fn check_scalar(path: &str, v: f64) -> Result<(), ConfigError> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(ConfigError::invalid(path, format!("must be positive, got {v}")));
    }
    Ok(())
}

fn check_bumps(group: &SurfaceGroup, path: &str, bumps: &[Bump]) -> Result<(), ConfigError> {
    for (i, b) in bumps.iter().enumerate() {
        validate_bump(group, b).map_err(|e| ConfigError::invalid(format!("{path}[{i}]"), e.to_string()))?;
    }
    Ok(())
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Config = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::invalid(if path == "." { "(root)".into() } else { path }, e.into_inner().to_string())
        })?;
        config.validate_parameters()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Checks everything that does not need the surface group.
    pub fn validate_parameters(&self) -> Result<(), ConfigError> {
        self.tolerances.validate()?;
        if !self.metric.constant.is_finite() {
            return Err(ConfigError::invalid("metric.constant", "must be finite"));
        }
        if !self.magnetic.a.is_finite() {
            return Err(ConfigError::invalid("magnetic.a", "must be finite"));
        }

        let flow = &self.flow;
        check_scalar("flow.s", flow.s)?;
        check_scalar("flow.T", flow.duration)?;
        check_scalar("flow.dt", flow.dt)?;
        let init = flow.initial;
        if !init.theta.is_finite() {
            return Err(ConfigError::invalid("flow.initial.theta", "must be finite"));
        }
        check_point("flow.initial", HalfPlanePoint { x: init.x, y: init.y })?;

        let crit = &self.crit;
        check_positive("crit.r_grid", &crit.r_grid)?;
        if let Some(centers) = &crit.center_grid {
            if centers.is_empty() {
                return Err(ConfigError::invalid("crit.center_grid", "must not be empty"));
            }
            for (i, &c) in centers.iter().enumerate() {
                check_point(&format!("crit.center_grid[{i}]"), c)?;
            }
        }
        check_scalar("crit.circle_density", crit.circle_density)?;
        if let Some(i) = crit.amplitudes.iter().position(|a| !a.is_finite()) {
            return Err(ConfigError::invalid(format!("crit.amplitudes[{i}]"), "must be finite"));
        }
        if crit.samples == 0 {
            return Err(ConfigError::invalid("crit.samples", "must be at least 1"));
        }

        let radon = &self.radon;
        check_positive("radon.r_grid", &radon.r_grid)?;
        if let Some(i) = radon.s_list.iter().position(|s| !s.is_finite()) {
            return Err(ConfigError::invalid(format!("radon.s_list[{i}]"), "must be finite"));
        }
        if let Some(i) = radon.alpha_list.iter().position(|a| !(0.0..=0.5).contains(a)) {
            return Err(ConfigError::invalid(format!("radon.alpha_list[{i}]"), "must lie in [0, 0.5]"));
        }
        if radon.centers.is_empty() {
            return Err(ConfigError::invalid("radon.centers", "must not be empty"));
        }
        for (i, &c) in radon.centers.iter().enumerate() {
            check_point(&format!("radon.centers[{i}]"), c)?;
        }
        if radon.h.constant.is_some_and(|c| !c.is_finite()) {
            return Err(ConfigError::invalid("radon.h.constant", "must be finite"));
        }
        check_positive("radon.growth_s", &radon.growth_s)?;
        if radon.growth_n == 0 {
            return Err(ConfigError::invalid("radon.growth_n", "must be at least 1"));
        }
        Ok(())
    }

    /// Builds the surface and the field, checking every bump against the injectivity radius.
    pub fn model(&self) -> Result<Model, ConfigError> {
        let group = Arc::new(
            build_genus2_group().map_err(|e| ConfigError::invalid("(surface)", e.to_string()))?,
        );
        check_bumps(&group, "metric.bumps", &self.metric.bumps)?;
        check_bumps(&group, "magnetic.beta0", &self.magnetic.beta0)?;
        let u = InvariantScalar::new(group.clone(), self.metric.constant, self.metric.bumps.clone())
            .map_err(|e| ConfigError::invalid("metric", e.to_string()))?;
        let metric = ConformalMetric::new(u).map_err(|e| ConfigError::invalid("metric", e.to_string()))?;
        let beta0 = InvariantOneForm::new(group.clone(), self.magnetic.beta0.clone())
            .map_err(|e| ConfigError::invalid("magnetic.beta0", e.to_string()))?;
        let field = MagneticField::new(self.magnetic.a, beta0).map_err(|e| ConfigError::invalid("magnetic", e.to_string()))?;
        Ok(Model { group, metric, field })
    }

    /// The Radon test function; an explicit constant must give mean zero.
    pub fn radon_function(&self, group: &Arc<SurfaceGroup>) -> Result<InvariantScalar, ConfigError> {
        let h = &self.radon.h;
        check_bumps(group, "radon.h.bumps", &h.bumps)?;
        let build = |constant| {
            InvariantScalar::new(group.clone(), constant, h.bumps.clone())
                .map_err(|e| ConfigError::invalid("radon.h", e.to_string()))
        };
        let shifted = build(0.0)?;
        let constant = zero_mean_constant(&shifted);
        match h.constant {
            None => build(constant),
            Some(c) => {
                let f = build(c)?;
                let mean = f.mean();
                if mean.abs() > MEAN_TOLERANCE {
                    return Err(ConfigError::invalid(
                        "radon.h.constant",
                        format!("gives mean {mean:e}; the transform needs a zero-mean function"),
                    ));
                }
                Ok(f)
            }
        }
    }

    pub fn initial_state(&self) -> Result<PhaseState, ConfigError> {
        let init = self.flow.initial;
        PhaseState::new(init.x, init.y, init.theta).map_err(|e| ConfigError::invalid("flow.initial", e.to_string()))
    }

    pub fn integrator_options(&self) -> IntegratorOptions {
        IntegratorOptions {
            tolerance: self.tolerances.integrator,
        }
    }

    pub fn critical_budget(&self) -> CriticalBudget {
        let crit = &self.crit;
        CriticalBudget {
            r_grid: crit.r_grid.clone(),
            centers: crit.center_grid.clone(),
            circle_density: crit.circle_density,
            family: PrimitiveFamily {
                amplitudes: crit.amplitudes.clone(),
                samples: crit.samples,
                translates: crit.translates,
            },
            tolerance: self.tolerances.bound,
        }
    }

    /// Circle centers used by the lower bound.
    pub fn circle_centers(&self) -> Vec<HalfPlanePoint> {
        self.crit.center_grid.clone().unwrap_or_else(default_centers)
    }
}
