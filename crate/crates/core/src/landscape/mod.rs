//! Analytic population risks, data models and their isolated minima.

mod data;
mod double_well;
mod minima;
mod quadratic;
mod spline;

use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;

pub use data::{
    empirical_risk_jet, sample_dataset, DataModel, DeterministicModel, EmpiricalRisk, RlsModel,
    SquareLocationModel,
};
pub use double_well::DoubleWell;
pub use minima::{
    disjoint_radius, enumerate_minima, lipschitz_estimate, Lipschitz, MinimumDescriptor,
    ZERO_EIGEN_THRESHOLD,
};
pub use quadratic::Quadratic;
pub use spline::SplineDoubleWell;

/// Closed axis-aligned box, the experiment domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl DomainBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::Argument(
                "box bounds must be non-empty and of equal length".into(),
            ));
        }
        if lo
            .iter()
            .zip(&hi)
            .any(|(l, h)| !(l < h) || !l.is_finite() || !h.is_finite())
        {
            return Err(Error::Argument(format!(
                "invalid box bounds lo={lo:?} hi={hi:?}"
            )));
        }
        Ok(Self { lo, hi })
    }

    /// `[-half_width, half_width]^d`.
    pub fn cube(d: usize, half_width: f64) -> Result<Self> {
        Self::new(vec![-half_width; d], vec![half_width; d])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, w: &[f64]) -> bool {
        w.len() == self.dim()
            && w.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (l, h))| *l <= *x && *x <= *h)
    }

    pub fn max_width(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| h - l)
            .fold(0.0, f64::max)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| 0.5 * (l + h))
            .collect()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    /// All `2^d` vertices.
    pub fn corners(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..1usize << d)
            .map(|mask| {
                (0..d)
                    .map(|k| {
                        if mask >> k & 1 == 1 {
                            self.hi[k]
                        } else {
                            self.lo[k]
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Largest `t ≥ 0` with `start + t·dir` still in the box (`start` inside).
    pub fn exit_distance(&self, start: &[f64], dir: &[f64]) -> f64 {
        let mut t = f64::INFINITY;
        for k in 0..self.dim() {
            if dir[k] > 0.0 {
                t = t.min((self.hi[k] - start[k]) / dir[k]);
            } else if dir[k] < 0.0 {
                t = t.min((self.lo[k] - start[k]) / dir[k]);
            }
        }
        t.max(0.0)
    }
}

/// Value, gradient and Hessian of a risk at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskJet {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: DMatrix<f64>,
}

impl RiskJet {
    pub fn zeros(d: usize) -> Self {
        Self {
            value: 0.0,
            gradient: vec![0.0; d],
            hessian: DMatrix::zeros(d, d),
        }
    }

    /// Adds the ridge term `λ‖w‖²`.
    pub fn add_ridge(&mut self, w: &[f64], lambda: f64) {
        self.value += lambda * w.iter().map(|x| x * x).sum::<f64>();
        for (g, x) in self.gradient.iter_mut().zip(w) {
            *g += 2.0 * lambda * x;
        }
        for k in 0..w.len() {
            self.hessian[(k, k)] += 2.0 * lambda;
        }
    }
}

/// A population risk `R` on a box with analytic derivatives.
///
/// The `value`, `value_grad` and `jet` methods do not check the domain;
/// use [`risk_jet`] for the checked entry point.
pub trait Landscape: Send + Sync + Debug {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn domain(&self) -> &DomainBox;
    /// `M`: supremum of the loss over the domain and the example space.
    fn loss_bound(&self) -> f64;
    fn value(&self, w: &[f64]) -> f64;
    fn jet(&self, w: &[f64]) -> RiskJet;
    /// Starting points for Newton polishing, one per well.
    fn initial_points(&self) -> Vec<Vec<f64>>;

    fn value_grad(&self, w: &[f64], grad: &mut [f64]) -> f64 {
        let j = self.jet(w);
        grad.copy_from_slice(&j.gradient);
        j.value
    }

    fn hessian_is_constant(&self) -> bool {
        false
    }

    /// Coordinates where the risk is only piecewise smooth (1-d landscapes).
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Exact (or provably valid) `L*(r)` around `minimum`, when known.
    fn lipschitz_closed_form(&self, _minimum: &MinimumDescriptor, _r: f64) -> Option<f64> {
        None
    }
}

/// Domain-checked jet of a landscape risk.
pub fn risk_jet(landscape: &dyn Landscape, w: &[f64]) -> Result<RiskJet> {
    if !landscape.domain().contains(w) {
        return Err(Error::Domain { point: w.to_vec() });
    }
    Ok(landscape.jet(w))
}

/// A regularized objective `F(w)` whose Gibbs measure `∝ e^{-γF}` on the box is
/// sampled or integrated. Either the population `R_λ` or an empirical `R̂_{S,λ}`.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;
    fn domain(&self) -> &DomainBox;
    fn value(&self, w: &[f64]) -> f64;
    fn value_grad(&self, w: &[f64], grad: &mut [f64]) -> f64;
    fn jet(&self, w: &[f64]) -> RiskJet;
    fn hessian_is_constant(&self) -> bool;

    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Default chain starting point.
    fn start(&self) -> Vec<f64> {
        self.domain().center()
    }
}

/// `R_λ(w) = R(w) + λ‖w‖²` for a landscape.
#[derive(Debug, Clone)]
pub struct RegularizedRisk {
    landscape: Arc<dyn Landscape>,
    lambda: f64,
}

impl RegularizedRisk {
    pub fn new(landscape: Arc<dyn Landscape>, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::Argument(format!(
                "lambda must be finite and >= 0, got {lambda}"
            )));
        }
        Ok(Self { landscape, lambda })
    }

    pub fn landscape(&self) -> &Arc<dyn Landscape> {
        &self.landscape
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl Objective for RegularizedRisk {
    fn dim(&self) -> usize {
        self.landscape.dim()
    }

    fn domain(&self) -> &DomainBox {
        self.landscape.domain()
    }

    fn value(&self, w: &[f64]) -> f64 {
        self.landscape.value(w) + self.lambda * w.iter().map(|x| x * x).sum::<f64>()
    }

    fn value_grad(&self, w: &[f64], grad: &mut [f64]) -> f64 {
        let v = self.landscape.value_grad(w, grad);
        for (g, x) in grad.iter_mut().zip(w) {
            *g += 2.0 * self.lambda * x;
        }
        v + self.lambda * w.iter().map(|x| x * x).sum::<f64>()
    }

    fn jet(&self, w: &[f64]) -> RiskJet {
        let mut j = self.landscape.jet(w);
        j.add_ridge(w, self.lambda);
        j
    }

    fn hessian_is_constant(&self) -> bool {
        self.landscape.hessian_is_constant()
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.landscape.breakpoints()
    }

    fn start(&self) -> Vec<f64> {
        self.landscape
            .initial_points()
            .into_iter()
            .next()
            .unwrap_or_else(|| self.domain().center())
    }
}

/// `{w : ‖w - center‖_metric ≤ radius}` with `‖u‖²_A = uᵀAu`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidSpec {
    pub center: Vec<f64>,
    pub metric: DMatrix<f64>,
    pub radius: f64,
}

impl EllipsoidSpec {
    pub fn new(center: Vec<f64>, metric: DMatrix<f64>, radius: f64) -> Result<Self> {
        if metric.nrows() != center.len() {
            return Err(Error::Argument(
                "ellipsoid metric and center dimensions differ".into(),
            ));
        }
        linalg::check_pd(&metric, "ellipsoid metric")?;
        if !(radius >= 0.0) {
            return Err(Error::Argument(format!(
                "ellipsoid radius must be >= 0, got {radius}"
            )));
        }
        Ok(Self {
            center,
            metric,
            radius,
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// `‖w - center‖_metric`.
    pub fn metric_distance(&self, w: &[f64]) -> f64 {
        let u: Vec<f64> = w.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        linalg::quad_form(&self.metric, &u).max(0.0).sqrt()
    }

    pub fn contains(&self, w: &[f64]) -> bool {
        self.metric_distance(w) <= self.radius
    }

    /// Distance from the center to the boundary along `dir`.
    pub fn ray_length(&self, dir: &[f64]) -> f64 {
        self.radius / linalg::quad_form(&self.metric, dir).sqrt()
    }

    /// Half-extent of the ellipsoid along coordinate `k`: `r·√((A⁻¹)_kk)`.
    pub fn half_extent(&self, k: usize) -> f64 {
        let inv = self
            .metric
            .clone()
            .try_inverse()
            .expect("metric is positive definite");
        self.radius * inv[(k, k)].sqrt()
    }
}
