//! Experiment configuration: a TOML file with a canonical JSON form.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use gibbslab_core::bounds::GenBoundVariant;
use gibbslab_core::landscape::{
    DataModel, DeterministicModel, DomainBox, DoubleWell, Landscape, Quadratic, RlsModel,
    SplineDoubleWell, SquareLocationModel,
};
use gibbslab_core::oracle::MIN_NODES_PER_SD;
use gibbslab_core::sampler::SamplerKind;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    Generalization,
    Local,
    Global,
    Pseudo,
    MinimaDistribution,
    EllipsoidMass,
    Complement,
}

impl Theorem {
    pub const ALL: [Theorem; 7] = [
        Theorem::Generalization,
        Theorem::Local,
        Theorem::Global,
        Theorem::Pseudo,
        Theorem::MinimaDistribution,
        Theorem::EllipsoidMass,
        Theorem::Complement,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Theorem::Generalization => "generalization",
            Theorem::Local => "local",
            Theorem::Global => "global",
            Theorem::Pseudo => "pseudo",
            Theorem::MinimaDistribution => "minima_distribution",
            Theorem::EllipsoidMass => "ellipsoid_mass",
            Theorem::Complement => "complement",
        }
    }

    pub fn parse(s: &str) -> Option<Theorem> {
        Theorem::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LandscapeConfig {
    Quadratic(QuadraticParams),
    DoubleWell(DoubleWellParams),
    Spline(SplineParams),
    Rls(RlsParams),
    SquareLocation(SquareLocationParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticParams {
    pub dim: usize,
    pub half_width: f64,
    /// Diagonal of the Hessian; the identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hessian_diag: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoubleWellParams {
    pub dim: usize,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplineParams {
    pub h_left: f64,
    pub h_right: f64,
    pub well_half_width: f64,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RlsParams {
    pub w0: Vec<f64>,
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SquareLocationParams {
    pub dim: usize,
}

/// One-line descriptions for `list-landscapes`.
pub const LANDSCAPES: [(&str, &str); 5] = [
    ("quadratic", "½wᵀAw with diagonal A (dim, half_width, hessian_diag?)"),
    ("double_well", "Σ_k (w_k² - 1)² on a cube (dim ≤ 10, half_width > 1)"),
    ("spline", "1-d C² spline double-well with curvatures h_left ≠ h_right (h_left, h_right, well_half_width, half_width)"),
    ("rls", "least squares y = w0·x + noise, x ~ U[-1,1]^d (w0, noise; ‖w0‖₁ + noise ≤ 1)"),
    ("square_location", "ℓ(w, z) = ‖w - z‖², z ~ U[-1,1]^d (dim)"),
];

/// A built landscape and, for data models, the model generating samples.
#[derive(Debug, Clone)]
pub struct Built {
    pub landscape: Arc<dyn Landscape>,
    pub model: Arc<dyn DataModel>,
    pub is_data_model: bool,
}

impl LandscapeConfig {
    pub fn build(&self) -> gibbslab_core::Result<Built> {
        let deterministic = |l: Arc<dyn Landscape>| Built {
            model: Arc::new(DeterministicModel::new(l.clone())),
            landscape: l,
            is_data_model: false,
        };
        Ok(match self {
            LandscapeConfig::Quadratic(p) => {
                let diag = p.hessian_diag.clone().unwrap_or_else(|| vec![1.0; p.dim]);
                if diag.len() != p.dim {
                    return Err(gibbslab_core::Error::Argument(format!(
                        "hessian_diag has {} entries, expected {}",
                        diag.len(),
                        p.dim
                    )));
                }
                let a = DMatrix::from_diagonal(&DVector::from_vec(diag));
                let q = Quadratic::new(
                    a,
                    vec![0.0; p.dim],
                    0.0,
                    DomainBox::cube(p.dim, p.half_width)?,
                )?;
                deterministic(Arc::new(q))
            }
            LandscapeConfig::DoubleWell(p) => {
                deterministic(Arc::new(DoubleWell::new(p.dim, p.half_width)?))
            }
            LandscapeConfig::Spline(p) => deterministic(Arc::new(SplineDoubleWell::new(
                p.h_left,
                p.h_right,
                p.well_half_width,
                p.half_width,
            )?)),
            LandscapeConfig::Rls(p) => {
                let m = Arc::new(RlsModel::new(p.w0.clone(), p.noise)?);
                Built {
                    landscape: m.landscape(),
                    model: m,
                    is_data_model: true,
                }
            }
            LandscapeConfig::SquareLocation(p) => {
                let m = Arc::new(SquareLocationModel::new(p.dim)?);
                Built {
                    landscape: m.landscape(),
                    model: m,
                    is_data_model: true,
                }
            }
        })
    }
}

/// How the ellipsoid radius is chosen at each sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadiusConfig {
    /// Fractions of the disjointness radius `r₀`.
    FractionOfR0 {
        values: Vec<f64>,
    },
    Absolute {
        values: Vec<f64>,
    },
    /// `r = γ^{(p-1)/2}` for each exponent `p`.
    Tuned {
        exponents: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Theorem,
    HoeffdingStated,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Theorem => "theorem",
            Variant::HoeffdingStated => "hoeffding_stated",
        }
    }
}

impl From<Variant> for GenBoundVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Theorem => GenBoundVariant::Theorem,
            Variant::HoeffdingStated => GenBoundVariant::HoeffdingStated,
        }
    }
}

fn default_lambda() -> Vec<f64> {
    vec![0.0]
}

fn default_variants() -> Vec<Variant> {
    vec![Variant::HoeffdingStated]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub gamma: Vec<f64>,
    #[serde(default = "default_lambda")]
    pub lambda: Vec<f64>,
    pub m: Vec<u64>,
    pub radius: RadiusConfig,
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    /// Sub-Gaussian parameter; `M/2` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerChoice {
    Sgld,
    Metropolis,
    ExactGaussian,
}

impl From<SamplerChoice> for SamplerKind {
    fn from(s: SamplerChoice) -> Self {
        match s {
            SamplerChoice::Sgld => SamplerKind::Sgld,
            SamplerChoice::Metropolis => SamplerKind::Metropolis,
            SamplerChoice::ExactGaussian => SamplerKind::ExactGaussian,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    #[serde(default = "SamplerConfig::default_kind")]
    pub kind: SamplerChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_size: Option<f64>,
    #[serde(default = "SamplerConfig::default_steps")]
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    /// Chains per Monte-Carlo oracle evaluation.
    #[serde(default = "SamplerConfig::default_chains")]
    pub chains: usize,
    /// Resampled datasets per data-model estimate.
    #[serde(default = "SamplerConfig::default_trials")]
    pub trials: usize,
}

impl SamplerConfig {
    fn default_kind() -> SamplerChoice {
        SamplerChoice::Metropolis
    }
    fn default_steps() -> usize {
        20_000
    }
    fn default_chains() -> usize {
        8
    }
    fn default_trials() -> usize {
        200
    }
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            kind: Self::default_kind(),
            step_size: None,
            steps: Self::default_steps(),
            burn_in: None,
            chains: Self::default_chains(),
            trials: Self::default_trials(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    /// Quadrature up to three dimensions, Monte Carlo above.
    Auto,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "OracleConfig::default_method")]
    pub method: OracleMethod,
    #[serde(default = "OracleConfig::default_nodes")]
    pub nodes_per_sd: f64,
    #[serde(default = "OracleConfig::default_richardson")]
    pub richardson: bool,
}

impl OracleConfig {
    fn default_method() -> OracleMethod {
        OracleMethod::Auto
    }
    fn default_nodes() -> f64 {
        MIN_NODES_PER_SD
    }
    fn default_richardson() -> bool {
        true
    }
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            method: Self::default_method(),
            nodes_per_sd: Self::default_nodes(),
            richardson: Self::default_richardson(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    pub theorems: Vec<Theorem>,
    pub landscape: LandscapeConfig,
    pub sweep: SweepConfig,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(s).map_err(|e| HarnessError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::io(format!("reading {}", path.display()), e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| HarnessError::config(format!("cannot write TOML: {e}")))
    }

    /// Canonical JSON form (fields in declaration order, defaults filled in).
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration is always representable in JSON")
    }

    /// Checks every field that does not need minima enumeration, reporting all
    /// violations together.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.name.trim().is_empty() {
            errs.push("name: must not be empty".to_string());
        }
        if self.theorems.is_empty() {
            errs.push("theorems: must list at least one theorem".to_string());
        }
        let s = &self.sweep;
        if s.gamma.is_empty() {
            errs.push("sweep.gamma: must not be empty".into());
        }
        for g in &s.gamma {
            if !(*g > 0.0 && g.is_finite()) {
                errs.push(format!("sweep.gamma: {g} is not a positive finite number"));
            }
        }
        if s.lambda.is_empty() {
            errs.push("sweep.lambda: must not be empty".into());
        }
        for l in &s.lambda {
            if !(*l >= 0.0 && l.is_finite()) {
                errs.push(format!("sweep.lambda: {l} is not a finite number >= 0"));
            }
        }
        if s.m.is_empty() {
            errs.push("sweep.m: must not be empty".into());
        }
        if s.m.contains(&0) {
            errs.push("sweep.m: sample sizes must be >= 1".into());
        }
        if s.variants.is_empty() {
            errs.push("sweep.variants: must not be empty".into());
        }
        if let Some(sigma) = s.sigma {
            if !(sigma > 0.0 && sigma.is_finite()) {
                errs.push(format!("sweep.sigma: {sigma} is not positive"));
            }
        }
        match &s.radius {
            RadiusConfig::FractionOfR0 { values } => {
                if values.is_empty() {
                    errs.push("sweep.radius.values: must not be empty".into());
                }
                for v in values {
                    if !(*v > 0.0 && *v <= 1.0) {
                        errs.push(format!(
                            "sweep.radius.values: fraction {v} is outside (0, 1]"
                        ));
                    }
                }
            }
            RadiusConfig::Absolute { values } => {
                if values.is_empty() {
                    errs.push("sweep.radius.values: must not be empty".into());
                }
                for v in values {
                    if !(*v > 0.0 && v.is_finite()) {
                        errs.push(format!("sweep.radius.values: {v} is not positive"));
                    }
                }
            }
            RadiusConfig::Tuned { exponents } => {
                if exponents.is_empty() {
                    errs.push("sweep.radius.exponents: must not be empty".into());
                }
                for p in exponents {
                    if !(*p > 0.0 && *p <= 1.0 / 3.0 + 1e-12) {
                        errs.push(format!("sweep.radius.exponents: {p} is outside (0, 1/3]"));
                    }
                }
            }
        }
        let sm = &self.sampler;
        let burn = sm.burn_in.unwrap_or(sm.steps / 5);
        if sm.steps <= burn {
            errs.push(format!(
                "sampler.steps: {} must exceed the burn-in {burn}",
                sm.steps
            ));
        }
        if let Some(eta) = sm.step_size {
            if !(eta > 0.0 && eta.is_finite()) {
                errs.push(format!("sampler.step_size: {eta} is not positive"));
            }
        }
        if sm.chains < 2 {
            errs.push("sampler.chains: need at least 2 chains for a standard error".into());
        }
        if sm.trials < 50 {
            errs.push(format!(
                "sampler.trials: {} is below the minimum of 50",
                sm.trials
            ));
        }
        if self.oracle.nodes_per_sd < MIN_NODES_PER_SD {
            errs.push(format!(
                "oracle.nodes_per_sd: {} is below the minimum of {MIN_NODES_PER_SD}",
                self.oracle.nodes_per_sd
            ));
        }
        match self.landscape.build() {
            Ok(b) => {
                let d = b.landscape.dim();
                if self.oracle.method == OracleMethod::Quadrature && d > 3 {
                    errs.push(format!(
                        "oracle.method: quadrature supports dimension <= 3, landscape has {d}"
                    ));
                }
                if b.is_data_model {
                    for t in [Theorem::Global, Theorem::Pseudo] {
                        if self.theorems.contains(&t) {
                            errs.push(format!(
                                "theorems: {t} needs a deterministic landscape, not a data model"
                            ));
                        }
                    }
                }
            }
            Err(e) => errs.push(format!("landscape: {e}")),
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Config(errs))
        }
    }
}
