//! Bound and distribution formulas evaluated as explicit arithmetic over minima
//! descriptors and a [`GibbsConfig`].
//!
//! Results that are asymptotic statements up to a universal constant are
//! assembled here with the explicit constants of their derivations, so every
//! total is a concrete number that can be compared against an oracle.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::landscape::{disjoint_radius, MinimumDescriptor};
use crate::linalg;
use crate::specfun;

/// Which sub-Gaussian constant feeds the generalization term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GenBoundVariant {
    /// `4σ²γ/m` for a σ-sub-Gaussian empirical risk.
    Theorem,
    /// `M²γ/(2m)` from Hoeffding's lemma for a loss in `[0, M]`.
    #[default]
    HoeffdingStated,
}

/// Scalar knobs shared by all bound formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GibbsConfig {
    /// Inverse temperature `γ`.
    pub gamma: f64,
    /// Ridge weight `λ`.
    pub lambda: f64,
    /// Sample size `m`.
    pub m: u64,
    /// Loss bound `M`.
    pub loss_bound: f64,
    /// Sub-Gaussian parameter `σ`.
    pub sigma: f64,
    pub variant: GenBoundVariant,
}

impl GibbsConfig {
    /// Config with `σ = M/2` (Hoeffding) and the default variant.
    pub fn new(gamma: f64, lambda: f64, m: u64, loss_bound: f64) -> Result<Self> {
        let c = Self {
            gamma,
            lambda,
            m,
            loss_bound,
            sigma: 0.5 * loss_bound,
            variant: GenBoundVariant::default(),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_sigma(mut self, sigma: f64) -> Result<Self> {
        self.sigma = sigma;
        self.validate()?;
        Ok(self)
    }

    pub fn with_variant(mut self, variant: GenBoundVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            bad.push(format!("gamma={}", self.gamma));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            bad.push(format!("lambda={}", self.lambda));
        }
        if self.m == 0 {
            bad.push("m=0".to_string());
        }
        if !(self.loss_bound > 0.0 && self.loss_bound.is_finite()) {
            bad.push(format!("loss_bound={}", self.loss_bound));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            bad.push(format!("sigma={}", self.sigma));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Argument(format!(
                "invalid Gibbs config: {}",
                bad.join(", ")
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    Local,
    Global,
    Pseudo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundTerm {
    pub name: &'static str,
    pub value: f64,
}

pub const TERM_TRACE: &str = "effective_dimension";
pub const TERM_TAYLOR: &str = "taylor";
pub const TERM_INTERACTION: &str = "interaction";
pub const TERM_GENERALIZATION: &str = "generalization";
pub const TERM_COMPLEMENT: &str = "complement";

/// Every term of one bound at one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub terms: Vec<BoundTerm>,
    pub total: f64,
    pub config: GibbsConfig,
    pub radius: f64,
    pub tuning_exponent: Option<f64>,
    /// Expectation weights are renormalized upper bounds rather than exact masses.
    pub heuristic_weights: bool,
    pub oracle: Option<f64>,
    /// `total - oracle`.
    pub margin: Option<f64>,
}

impl BoundReport {
    fn assemble(kind: BoundKind, terms: Vec<BoundTerm>, config: GibbsConfig, radius: f64) -> Self {
        let total = terms.iter().map(|t| t.value).sum();
        Self {
            kind,
            terms,
            total,
            config,
            radius,
            tuning_exponent: None,
            heuristic_weights: false,
            oracle: None,
            margin: None,
        }
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.name == name).map(|t| t.value)
    }

    pub fn with_oracle(mut self, oracle: f64) -> Self {
        self.oracle = Some(oracle);
        self.margin = Some(self.total - oracle);
        self
    }

    pub fn with_tuning_exponent(mut self, p: f64) -> Self {
        self.tuning_exponent = Some(p);
        self
    }
}

fn check_lambda(minimum: &MinimumDescriptor, config: &GibbsConfig) -> Result<()> {
    if minimum.lambda != config.lambda {
        return Err(Error::Argument(format!(
            "minimum was enumerated at lambda={} but config has lambda={}",
            minimum.lambda, config.lambda
        )));
    }
    Ok(())
}

/// `tr(H(H + 2λI)⁻¹) = Σ_k λ_k/(λ_k + 2λ)`; eigenvalues at or below the zero
/// threshold contribute nothing.
pub fn effective_dimension(h: &DMatrix<f64>, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::Argument(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    let ev = linalg::check_psd(h, "H")?;
    let max = ev.iter().fold(0.0_f64, |m, v| m.max(*v));
    Ok(ev
        .iter()
        .filter(|v| **v > crate::landscape::ZERO_EIGEN_THRESHOLD * max)
        .map(|v| v / (v + 2.0 * lambda))
        .sum())
}

/// `ε(r) = L*(r) (r / √(λ_min + λ))³`.
pub fn epsilon_from_parts(lipschitz: f64, r: f64, lambda_min: f64, lambda: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Argument(format!("radius must be >= 0, got {r}")));
    }
    let curv = lambda_min + lambda;
    if !(curv > 0.0) {
        return Err(Error::DegenerateCurvature);
    }
    if r == 0.0 || lipschitz == 0.0 {
        return Ok(0.0);
    }
    Ok(lipschitz * (r / curv.sqrt()).powi(3))
}

/// Taylor approximation error `ε(r)` around a minimum, at the minimum's `λ`.
pub fn epsilon_r(minimum: &MinimumDescriptor, r: f64) -> Result<f64> {
    let l = minimum.lipschitz(r).value;
    epsilon_from_parts(l, r, minimum.lambda_min, minimum.lambda)
}

/// `4σ²γ/m` or `M²γ/(2m)`.
pub fn generalization_bound(config: &GibbsConfig) -> f64 {
    let m = config.m as f64;
    match config.variant {
        GenBoundVariant::Theorem => 4.0 * config.sigma * config.sigma * config.gamma / m,
        GenBoundVariant::HoeffdingStated => {
            config.loss_bound * config.loss_bound * config.gamma / (2.0 * m)
        }
    }
}

/// Localized bound from its two landscape inputs:
/// `tr/γ + ε/6 + (M/2)√(γε/3 + γG) + G` with `G` the generalization term.
/// With `G = M²γ/(2m)` the square root is `√(γε/3 + M²γ²/(2m))`.
pub fn local_bound_from_parts(
    trace: f64,
    epsilon: f64,
    config: &GibbsConfig,
    r: f64,
) -> Result<BoundReport> {
    config.validate()?;
    let g = config.gamma;
    let gen = generalization_bound(config);
    let terms = vec![
        BoundTerm {
            name: TERM_TRACE,
            value: trace / g,
        },
        BoundTerm {
            name: TERM_TAYLOR,
            value: epsilon / 6.0,
        },
        BoundTerm {
            name: TERM_INTERACTION,
            value: 0.5 * config.loss_bound * (g * epsilon / 3.0 + g * gen).sqrt(),
        },
        BoundTerm {
            name: TERM_GENERALIZATION,
            value: gen,
        },
    ];
    Ok(BoundReport::assemble(BoundKind::Local, terms, *config, r))
}

/// Localized excess risk bound around one minimum.
pub fn local_excess_bound(
    minimum: &MinimumDescriptor,
    config: &GibbsConfig,
    r: f64,
) -> Result<BoundReport> {
    check_lambda(minimum, config)?;
    let trace = effective_dimension(&minimum.hessian, config.lambda)?;
    let eps = epsilon_r(minimum, r)?;
    local_bound_from_parts(trace, eps, config, r)
}

/// Upper bounds on the relative ellipsoid masses `π_γ,r` and the zero-temperature limit `π_∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimaDistribution {
    pub upper_raw: Vec<f64>,
    pub upper_clamped: Vec<f64>,
    pub pi_infinity: Vec<f64>,
    pub epsilons: Vec<f64>,
}

fn log_sum_exp(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `π_∞(i) = 1/Σ_{j global} √(det H*_λ,i / det H*_λ,j)` on global minima, 0 elsewhere.
pub fn pi_infinity(minima: &[MinimumDescriptor]) -> Result<Vec<f64>> {
    let global: Vec<f64> = minima
        .iter()
        .filter(|m| m.is_global)
        .map(|m| m.log_det_reg())
        .collect();
    if global.is_empty() {
        return Err(Error::Invariant(
            "no global minimum among the supplied minima".into(),
        ));
    }
    Ok(minima
        .iter()
        .map(|m| {
            if m.is_global {
                let ld = m.log_det_reg();
                (-log_sum_exp(global.iter().map(|lj| 0.5 * (ld - lj)))).exp()
            } else {
                0.0
            }
        })
        .collect())
}

/// `π_γ,r(i) ≤ e^{(γ/3) max_k ε_k(r)} / Σ_j e^{γ(R_λ,i - R_λ,j)} √(det H*_λ,i / det H*_λ,j)`,
/// evaluated in log space after shifting all values by `min R_λ`.
pub fn minima_distribution(
    minima: &[MinimumDescriptor],
    config: &GibbsConfig,
    r: f64,
) -> Result<MinimaDistribution> {
    if minima.is_empty() {
        return Err(Error::Argument(
            "minima distribution needs at least one minimum".into(),
        ));
    }
    config.validate()?;
    for m in minima {
        check_lambda(m, config)?;
    }
    let pi_inf = pi_infinity(minima)?;
    let epsilons = minima
        .iter()
        .map(|m| epsilon_r(m, r))
        .collect::<Result<Vec<_>>>()?;
    let eps_max = epsilons.iter().copied().fold(0.0, f64::max);
    let base = minima.iter().map(|m| m.value).fold(f64::INFINITY, f64::min);
    let vals: Vec<f64> = minima.iter().map(|m| m.value - base).collect();
    let lds: Vec<f64> = minima.iter().map(|m| m.log_det_reg()).collect();
    let g = config.gamma;
    let upper_raw: Vec<f64> = (0..minima.len())
        .map(|i| {
            let lse = log_sum_exp(
                (0..minima.len()).map(|j| g * (vals[i] - vals[j]) + 0.5 * (lds[i] - lds[j])),
            );
            (g * eps_max / 3.0 - lse).exp()
        })
        .collect();
    let upper_clamped = upper_raw.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    Ok(MinimaDistribution {
        upper_raw,
        upper_clamped,
        pi_infinity: pi_inf,
        epsilons,
    })
}

/// Sandwich on the population-Gibbs mass of `𝓔*(r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipsoidMassBounds {
    pub upper: Option<f64>,
    pub lower_with_z: Option<f64>,
    pub lower_free: f64,
    pub upper_clamped: Option<f64>,
    pub lower_with_z_clamped: Option<f64>,
    pub lower_free_clamped: f64,
}

/// `(1/Z) e^{-γR_λ(w*) ± (γ/6)ε(r)} (2π/γ)^{d/2} P(d/2, r²γ/2) / √det H*_λ` and the
/// normalizer-free `e^{-(γ/3)ε(r)} P(d/2, r²γ/2)`.
///
/// The normalizer is passed as `ln Z` with `Z = ∫ e^{-γR_λ}`, on the same
/// value scale as the minimum's `R_λ`.
pub fn ellipsoid_mass_bounds(
    minimum: &MinimumDescriptor,
    config: &GibbsConfig,
    r: f64,
    log_z: Option<f64>,
) -> Result<EllipsoidMassBounds> {
    check_lambda(minimum, config)?;
    if !(r > 0.0) {
        return Err(Error::Argument(format!("radius must be positive, got {r}")));
    }
    if let Some(lz) = log_z {
        if !lz.is_finite() {
            return Err(Error::Argument(format!("ln Z must be finite, got {lz}")));
        }
    }
    let g = config.gamma;
    let d = minimum.dim() as f64;
    let eps = epsilon_r(minimum, r)?;
    let p = specfun::regularized_gamma_p(0.5 * d, 0.5 * r * r * g)?;
    let lower_free = (-g * eps / 3.0).exp() * p;
    let (upper, lower_with_z) = match log_z {
        Some(lz) => {
            let common = 0.5 * d * (2.0 * PI / g).ln() + p.ln()
                - 0.5 * minimum.log_det_reg()
                - g * minimum.value
                - lz;
            (
                Some((common + g * eps / 6.0).exp()),
                Some((common - g * eps / 6.0).exp()),
            )
        }
        None => (None, None),
    };
    let clamp = |v: f64| v.clamp(0.0, 1.0);
    Ok(EllipsoidMassBounds {
        upper,
        lower_with_z,
        lower_free,
        upper_clamped: upper.map(clamp),
        lower_with_z_clamped: lower_with_z.map(clamp),
        lower_free_clamped: clamp(lower_free),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplementBound {
    pub raw: f64,
    pub clamped: f64,
}

/// `P_γ(C*(r)) ≤ 1 - (1 - d e^{-r²γα_{d/2}}) Σ_i e^{-(γ/3)ε_i(r)}`, as stated.
///
/// The exponent omits the factor ½ that the regularized-gamma lower bound
/// `(1 - e^{-α r²γ/2})^{d/2}` would give, so for a single minimum the value
/// can fall below the true complement mass.
pub fn complement_mass_bound(
    minima: &[MinimumDescriptor],
    config: &GibbsConfig,
    r: f64,
) -> Result<ComplementBound> {
    if minima.is_empty() {
        return Err(Error::Argument(
            "complement bound needs at least one minimum".into(),
        ));
    }
    config.validate()?;
    if !(r > 0.0) {
        return Err(Error::Argument(format!("radius must be positive, got {r}")));
    }
    let r0 = disjoint_radius(minima)?;
    if r > r0 * (1.0 + 1e-12) {
        return Err(Error::Radius { r, r0 });
    }
    let d = minima[0].dim();
    let alpha = specfun::gamma_lower_alpha(0.5 * d as f64);
    let g = config.gamma;
    let mut sum = 0.0;
    for m in minima {
        check_lambda(m, config)?;
        sum += (-g * epsilon_r(m, r)? / 3.0).exp();
    }
    let raw = 1.0 - (1.0 - d as f64 * (-r * r * g * alpha).exp()) * sum;
    Ok(ComplementBound {
        raw,
        clamped: raw.clamp(0.0, 1.0),
    })
}

/// `r = γ^{(p-1)/2}` for `p ∈ (0, 1/3]`.
pub fn tune_radius(gamma: f64, p: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::Argument(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    if !(p > 0.0 && p <= 1.0 / 3.0 + 1e-12) {
        return Err(Error::Argument(format!(
            "tuning exponent must lie in (0, 1/3], got {p}"
        )));
    }
    Ok(gamma.powf(0.5 * (p - 1.0)))
}

/// Weights for the expectations over minima in the global bound.
#[derive(Debug, Clone, PartialEq)]
pub enum ExpectationWeights {
    /// Minima-distribution upper bounds renormalized to sum to one.
    Heuristic,
    /// Exact relative ellipsoid masses (e.g. from quadrature); renormalized.
    Supplied(Vec<f64>),
}

fn normalized(weights: &[f64]) -> Result<Vec<f64>> {
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::Argument(
            "expectation weights must be finite and >= 0".into(),
        ));
    }
    let s: f64 = weights.iter().sum();
    if !(s > 0.0) {
        return Err(Error::Argument("expectation weights sum to zero".into()));
    }
    Ok(weights.iter().map(|w| w / s).collect())
}

/// Global bound with explicit constants:
/// `E[tr]/γ + E[ε]/6 + (M/2)√((γ/3)E[ε] + γG) + G + M·P(C*(r))`, using the
/// clamped complement bound.
pub fn global_excess_bound(
    minima: &[MinimumDescriptor],
    config: &GibbsConfig,
    r: f64,
    weights: &ExpectationWeights,
) -> Result<BoundReport> {
    let complement = complement_mass_bound(minima, config, r)?;
    let (w, heuristic) = match weights {
        ExpectationWeights::Heuristic => (
            normalized(&minima_distribution(minima, config, r)?.upper_raw)?,
            true,
        ),
        ExpectationWeights::Supplied(v) => {
            if v.len() != minima.len() {
                return Err(Error::Argument(format!(
                    "expected {} weights, got {}",
                    minima.len(),
                    v.len()
                )));
            }
            (normalized(v)?, false)
        }
    };
    let mut e_trace = 0.0;
    let mut e_eps = 0.0;
    for (m, wi) in minima.iter().zip(&w) {
        e_trace += wi * effective_dimension(&m.hessian, config.lambda)?;
        e_eps += wi * epsilon_r(m, r)?;
    }
    let local = local_bound_from_parts(e_trace, e_eps, config, r)?;
    let mut terms = local.terms;
    terms.push(BoundTerm {
        name: TERM_COMPLEMENT,
        value: config.loss_bound * complement.clamped,
    });
    let mut report = BoundReport::assemble(BoundKind::Global, terms, *config, r);
    report.heuristic_weights = heuristic;
    Ok(report)
}

/// Asymptotic pseudo excess risk: the per-minimum localized bounds averaged under `π_∞`.
pub fn pseudo_excess_bound(
    minima: &[MinimumDescriptor],
    config: &GibbsConfig,
    r: f64,
) -> Result<BoundReport> {
    let pi = pi_infinity(minima)?;
    let mut acc: Vec<BoundTerm> = Vec::new();
    for (m, p) in minima.iter().zip(&pi) {
        if *p == 0.0 {
            continue;
        }
        let local = local_excess_bound(m, config, r)?;
        if acc.is_empty() {
            acc = local
                .terms
                .iter()
                .map(|t| BoundTerm {
                    name: t.name,
                    value: 0.0,
                })
                .collect();
        }
        for (a, t) in acc.iter_mut().zip(&local.terms) {
            a.value += p * t.value;
        }
    }
    Ok(BoundReport::assemble(BoundKind::Pseudo, acc, *config, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::{enumerate_minima, DoubleWell, Landscape, Quadratic, SplineDoubleWell};
    use approx::assert_relative_eq;
    use nalgebra::DVector;
    use std::sync::Arc;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    #[test]
    fn effective_dimension_examples() {
        assert_relative_eq!(
            effective_dimension(&DMatrix::identity(4, 4), 0.0).unwrap(),
            4.0
        );
        assert_relative_eq!(effective_dimension(&diag(&[1.0, 0.0]), 0.0).unwrap(), 1.0);
        assert_relative_eq!(
            effective_dimension(&diag(&[1.0, 3.0]), 0.5).unwrap(),
            1.25,
            epsilon = 1e-15
        );
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(effective_dimension(&asym, 0.1).is_err());
    }

    #[test]
    fn epsilon_examples() {
        assert_eq!(epsilon_from_parts(6.0, 1.0, 0.0, 1.0).unwrap(), 6.0);
        assert_eq!(
            epsilon_from_parts(6.0, 1.0, 0.0, 0.0),
            Err(Error::DegenerateCurvature)
        );
        let dw: Arc<dyn Landscape> = Arc::new(DoubleWell::new(1, 2.0).unwrap());
        let m = enumerate_minima(dw, 0.0).unwrap();
        let plus = m.iter().find(|x| x.location[0] > 0.0).unwrap();
        let expect = (24.0 + 12.0 / 8f64.sqrt()) * (1.0 / 8f64.sqrt()).powi(3);
        assert_relative_eq!(epsilon_r(plus, 1.0).unwrap(), expect, max_relative = 1e-10);
        assert_relative_eq!(expect, 1.2482, epsilon = 1e-4);
        let q: Arc<dyn Landscape> = Arc::new(Quadratic::isotropic(2, 5.0).unwrap());
        let m = enumerate_minima(q, 0.0).unwrap();
        assert_eq!(epsilon_r(&m[0], 3.0).unwrap(), 0.0);
    }

    #[test]
    fn generalization_examples() {
        let c = GibbsConfig::new(10.0, 0.0, 100, 1.0).unwrap();
        assert_relative_eq!(generalization_bound(&c), 0.05, epsilon = 1e-15);
        let t = c
            .with_sigma(1.0)
            .unwrap()
            .with_variant(GenBoundVariant::Theorem);
        assert_relative_eq!(generalization_bound(&t), 0.4, epsilon = 1e-15);
    }

    #[test]
    fn local_bound_plug_in() {
        let c = GibbsConfig::new(10.0, 0.0, 100, 1.0).unwrap();
        let r = local_bound_from_parts(1.0, 0.0, &c, 0.5).unwrap();
        let expect = 0.1 + 10.0 / (2.0 * 200f64.sqrt()) + 0.05;
        assert_relative_eq!(r.total, expect, max_relative = 1e-14);
        assert_relative_eq!(r.total, 0.50355, epsilon = 1e-5);
        let sum: f64 = r.terms.iter().map(|t| t.value).sum();
        assert!((sum - r.total).abs() <= 1e-12);
    }

    #[test]
    fn local_bound_monotone_in_epsilon() {
        let c = GibbsConfig::new(50.0, 0.0, 1000, 2.0).unwrap();
        let mut prev = 0.0;
        for k in 0..20 {
            let t = local_bound_from_parts(1.0, 0.05 * k as f64, &c, 0.5)
                .unwrap()
                .total;
            assert!(t >= prev);
            prev = t;
        }
    }

    #[test]
    fn pi_infinity_examples() {
        // d = 1 wells with H*_λ = 1 and 4: π_∞ = (2/3, 1/3)
        let s: Arc<dyn Landscape> = Arc::new(SplineDoubleWell::new(1.0, 4.0, 0.5, 3.0).unwrap());
        let m = enumerate_minima(s, 0.0).unwrap();
        let pi = pi_infinity(&m).unwrap();
        let left = m.iter().position(|x| x.location[0] < 0.0).unwrap();
        assert_relative_eq!(pi[left], 2.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(pi[1 - left], 1.0 / 3.0, epsilon = 1e-12);
        let dw: Arc<dyn Landscape> = Arc::new(DoubleWell::new(1, 2.0).unwrap());
        let pi = pi_infinity(&enumerate_minima(dw, 0.0).unwrap()).unwrap();
        assert_relative_eq!(pi[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn suboptimal_minimum_gets_zero_limit_weight() {
        // λ > 0 makes the sharper left well strictly lower
        let s: Arc<dyn Landscape> = Arc::new(SplineDoubleWell::new(8.0, 2.0, 0.5, 3.0).unwrap());
        let m = enumerate_minima(s, 0.05).unwrap();
        assert!(m[0].is_global && !m[1].is_global);
        let pi = pi_infinity(&m).unwrap();
        assert_eq!(pi, vec![1.0, 0.0]);
    }

    #[test]
    fn ellipsoid_bounds_coincide_for_quadratics() {
        let q: Arc<dyn Landscape> = Arc::new(Quadratic::isotropic(2, 5.0).unwrap());
        let m = enumerate_minima(q, 0.0).unwrap();
        let c = GibbsConfig::new(3.0, 0.0, 10, 12.5).unwrap();
        let log_z = (2.0 * PI / 3.0).ln();
        let b = ellipsoid_mass_bounds(&m[0], &c, 1.2, Some(log_z)).unwrap();
        let p = specfun::regularized_gamma_p(1.0, 0.5 * 1.44 * 3.0).unwrap();
        assert_relative_eq!(b.upper.unwrap(), p, max_relative = 1e-13);
        assert_relative_eq!(b.lower_with_z.unwrap(), p, max_relative = 1e-13);
        assert_relative_eq!(b.lower_free, p, max_relative = 1e-13);
        let nz = ellipsoid_mass_bounds(&m[0], &c, 1.2, None).unwrap();
        assert!(nz.upper.is_none() && nz.lower_with_z.is_none());
    }

    #[test]
    fn complement_single_minimum_is_exponential() {
        let q: Arc<dyn Landscape> = Arc::new(Quadratic::isotropic(1, 5.0).unwrap());
        let m = enumerate_minima(q, 0.0).unwrap();
        let c = GibbsConfig::new(4.0, 0.0, 10, 12.5).unwrap();
        let b = complement_mass_bound(&m, &c, 0.8).unwrap();
        assert_relative_eq!(b.raw, (-0.64_f64 * 4.0).exp(), max_relative = 1e-14);
        assert!(matches!(
            complement_mass_bound(&m, &c, 6.0),
            Err(Error::Radius { .. })
        ));
    }

    #[test]
    fn complement_two_minima_goes_negative() {
        let dw: Arc<dyn Landscape> = Arc::new(DoubleWell::new(1, 2.0).unwrap());
        let m = enumerate_minima(dw, 0.0).unwrap();
        // γr² = 100 kills the ellipsoid tail while γε/3 ≈ 0.35, so Σ e^{-γε/3} > 1
        let c = GibbsConfig::new(1e6, 0.0, 10, 9.0).unwrap();
        let b = complement_mass_bound(&m, &c, 0.01).unwrap();
        assert!(b.raw < 0.0);
        assert_eq!(b.clamped, 0.0);
    }

    #[test]
    fn tune_radius_examples() {
        assert_relative_eq!(
            tune_radius(1e6, 1.0 / 3.0).unwrap(),
            1e-2,
            max_relative = 1e-12
        );
        assert_eq!(tune_radius(1.0, 0.2).unwrap(), 1.0);
        for g in [10.0, 1e3, 1e5] {
            let r = tune_radius(g, 1.0 / 3.0).unwrap();
            assert_relative_eq!(r * r * r * g, 1.0, max_relative = 1e-12);
        }
        assert!(tune_radius(10.0, 0.5).is_err());
        assert!(tune_radius(10.0, 0.0).is_err());
    }

    #[test]
    fn global_bound_single_minimum_reduces_to_local() {
        let q: Arc<dyn Landscape> = Arc::new(Quadratic::isotropic(1, 5.0).unwrap());
        let m = enumerate_minima(q, 0.0).unwrap();
        let c = GibbsConfig::new(20.0, 0.0, 100, 12.5).unwrap();
        let r = 0.5;
        let g = global_excess_bound(&m, &c, r, &ExpectationWeights::Heuristic).unwrap();
        let l = local_excess_bound(&m[0], &c, r).unwrap();
        let comp = (-r * r * 20.0_f64).exp();
        assert_relative_eq!(g.total, l.total + 12.5 * comp, max_relative = 1e-13);
        assert!(g.heuristic_weights);
    }

    #[test]
    fn pseudo_bound_uniform_for_symmetric_wells() {
        let dw: Arc<dyn Landscape> = Arc::new(DoubleWell::new(1, 2.0).unwrap());
        let m = enumerate_minima(dw, 0.0).unwrap();
        let c = GibbsConfig::new(100.0, 0.0, 10_000, 9.0).unwrap();
        let p = pseudo_excess_bound(&m, &c, 0.3).unwrap();
        let l = local_excess_bound(&m[0], &c, 0.3).unwrap();
        assert_relative_eq!(
            p.term(TERM_TRACE).unwrap(),
            1.0 / 100.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(p.total, l.total, max_relative = 1e-12);
    }

    #[test]
    fn lambda_mismatch_rejected() {
        let dw: Arc<dyn Landscape> = Arc::new(DoubleWell::new(1, 2.0).unwrap());
        let m = enumerate_minima(dw, 0.0).unwrap();
        let c = GibbsConfig::new(100.0, 0.1, 10, 9.0).unwrap();
        assert!(local_excess_bound(&m[0], &c, 0.3).is_err());
    }
}
