use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DomainBox, Landscape, Objective, Quadratic, RiskJet};
use crate::error::{Error, Result};
use crate::linalg;

/// A loss `ℓ(w, z)` with an example distribution `D` whose expectation is the
/// landscape risk: `E_z ℓ(w, z) = R(w)`.
pub trait DataModel: Send + Sync + Debug {
    fn name(&self) -> &str;
    fn landscape(&self) -> Arc<dyn Landscape>;
    fn loss(&self, w: &[f64], z: &[f64]) -> f64;
    fn loss_jet(&self, w: &[f64], z: &[f64]) -> RiskJet;
    fn sample_example(&self, rng: &mut dyn RngCore) -> Vec<f64>;
    /// Whether `∇²_w ℓ(w, z)` is independent of `w`.
    fn loss_hessian_is_constant(&self) -> bool;
}

/// `m` i.i.d. examples from a generator seeded with `seed`.
pub fn sample_dataset(model: &dyn DataModel, m: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m).map(|_| model.sample_example(&mut rng)).collect()
}

/// Jet of `R̂_{S,λ}(w) = (1/m) Σ ℓ(w, z_i) + λ‖w‖²` by direct summation.
pub fn empirical_risk_jet(
    model: &dyn DataModel,
    sample: &[Vec<f64>],
    w: &[f64],
    lambda: f64,
) -> Result<RiskJet> {
    if sample.is_empty() {
        return Err(Error::Argument(
            "empirical risk needs a non-empty sample".into(),
        ));
    }
    let landscape = model.landscape();
    if !landscape.domain().contains(w) {
        return Err(Error::Domain { point: w.to_vec() });
    }
    let d = w.len();
    let mut jet = RiskJet::zeros(d);
    for z in sample {
        let j = model.loss_jet(w, z);
        jet.value += j.value;
        for k in 0..d {
            jet.gradient[k] += j.gradient[k];
        }
        jet.hessian += j.hessian;
    }
    let inv_m = 1.0 / sample.len() as f64;
    jet.value *= inv_m;
    jet.gradient.iter_mut().for_each(|g| *g *= inv_m);
    jet.hessian *= inv_m;
    jet.add_ridge(w, lambda);
    Ok(jet)
}

/// Exact quadratic representation `c + bᵀw + ½wᵀAw` of a constant-Hessian risk.
#[derive(Debug, Clone)]
struct QuadraticForm {
    a: DMatrix<f64>,
    b: Vec<f64>,
    c: f64,
}

/// `R̂_{S,λ}` for a fixed sample. Constant-Hessian models are collapsed to
/// their quadratic form once, so evaluation cost does not grow with `m`.
#[derive(Debug, Clone)]
pub struct EmpiricalRisk {
    model: Arc<dyn DataModel>,
    landscape: Arc<dyn Landscape>,
    sample: Vec<Vec<f64>>,
    lambda: f64,
    quadratic: Option<QuadraticForm>,
}

impl EmpiricalRisk {
    pub fn new(model: Arc<dyn DataModel>, sample: Vec<Vec<f64>>, lambda: f64) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::Argument(
                "empirical risk needs a non-empty sample".into(),
            ));
        }
        if !(lambda >= 0.0) {
            return Err(Error::Argument(format!(
                "lambda must be >= 0, got {lambda}"
            )));
        }
        let landscape = model.landscape();
        let quadratic = if model.loss_hessian_is_constant() {
            let origin = vec![0.0; landscape.dim()];
            let mut jet = RiskJet::zeros(landscape.dim());
            for z in &sample {
                let j = model.loss_jet(&origin, z);
                jet.value += j.value;
                for k in 0..origin.len() {
                    jet.gradient[k] += j.gradient[k];
                }
                jet.hessian += j.hessian;
            }
            let inv_m = 1.0 / sample.len() as f64;
            Some(QuadraticForm {
                a: jet.hessian * inv_m,
                b: jet.gradient.iter().map(|g| g * inv_m).collect(),
                c: jet.value * inv_m,
            })
        } else {
            None
        };
        Ok(Self {
            model,
            landscape,
            sample,
            lambda,
            quadratic,
        })
    }

    pub fn sample(&self) -> &[Vec<f64>] {
        &self.sample
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn model(&self) -> &Arc<dyn DataModel> {
        &self.model
    }

    /// Unregularized empirical risk `R̂_S(w)`.
    pub fn empirical_risk(&self, w: &[f64]) -> f64 {
        match &self.quadratic {
            Some(q) => {
                q.c + q.b.iter().zip(w).map(|(b, x)| b * x).sum::<f64>()
                    + 0.5 * linalg::quad_form(&q.a, w)
            }
            None => {
                let s: f64 = self.sample.iter().map(|z| self.model.loss(w, z)).sum();
                s / self.sample.len() as f64
            }
        }
    }

    fn ridge(&self, w: &[f64]) -> f64 {
        self.lambda * w.iter().map(|x| x * x).sum::<f64>()
    }

    fn regularized_hessian(q: &QuadraticForm, lambda: f64) -> DMatrix<f64> {
        let mut a = q.a.clone();
        for k in 0..a.nrows() {
            a[(k, k)] += 2.0 * lambda;
        }
        a
    }

    /// Minimizer and Hessian of a constant-Hessian `R̂_{S,λ}`.
    pub fn gaussian_parameters(&self) -> Option<(Vec<f64>, DMatrix<f64>)> {
        let q = self.quadratic.as_ref()?;
        let a = Self::regularized_hessian(q, self.lambda);
        let chol = a.clone().cholesky()?;
        let b = nalgebra::DVector::from_column_slice(&q.b);
        let mean = -chol.solve(&b);
        Some((linalg::to_vec(&mean), a))
    }
}

impl Objective for EmpiricalRisk {
    fn dim(&self) -> usize {
        self.landscape.dim()
    }

    fn domain(&self) -> &DomainBox {
        self.landscape.domain()
    }

    fn value(&self, w: &[f64]) -> f64 {
        self.empirical_risk(w) + self.ridge(w)
    }

    fn value_grad(&self, w: &[f64], grad: &mut [f64]) -> f64 {
        match &self.quadratic {
            Some(q) => {
                let n = w.len();
                for i in 0..n {
                    grad[i] = q.b[i]
                        + (0..n).map(|j| q.a[(i, j)] * w[j]).sum::<f64>()
                        + 2.0 * self.lambda * w[i];
                }
                self.value(w)
            }
            None => {
                let j = self.jet(w);
                grad.copy_from_slice(&j.gradient);
                j.value
            }
        }
    }

    fn jet(&self, w: &[f64]) -> RiskJet {
        match &self.quadratic {
            Some(q) => {
                let mut gradient = vec![0.0; w.len()];
                let value = self.value_grad(w, &mut gradient);
                RiskJet {
                    value,
                    gradient,
                    hessian: Self::regularized_hessian(q, self.lambda),
                }
            }
            None => {
                let d = w.len();
                let mut jet = RiskJet::zeros(d);
                for z in &self.sample {
                    let j = self.model.loss_jet(w, z);
                    jet.value += j.value;
                    for k in 0..d {
                        jet.gradient[k] += j.gradient[k];
                    }
                    jet.hessian += j.hessian;
                }
                let inv_m = 1.0 / self.sample.len() as f64;
                jet.value *= inv_m;
                jet.gradient.iter_mut().for_each(|g| *g *= inv_m);
                jet.hessian *= inv_m;
                jet.add_ridge(w, self.lambda);
                jet
            }
        }
    }

    fn hessian_is_constant(&self) -> bool {
        self.quadratic.is_some()
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

/// Regularized least squares: `x ~ U[-1,1]^d`, `y = ⟨w₀, x⟩ + ε` with
/// `ε ~ U[-c, c]`, loss `(y - ⟨w, x⟩)²`. Requiring `‖w₀‖₁ + c ≤ 1` keeps
/// `|y| ≤ 1`, so clipping `y` to `[-1, 1]` never changes it and the population
/// risk is exactly `⅓‖w - w₀‖² + c²/3`.
#[derive(Debug, Clone)]
pub struct RlsModel {
    w0: Vec<f64>,
    noise: f64,
    landscape: Arc<Quadratic>,
}

impl RlsModel {
    pub fn new(w0: Vec<f64>, noise: f64) -> Result<Self> {
        let d = w0.len();
        if d == 0 {
            return Err(Error::Argument("rls: w0 must be non-empty".into()));
        }
        if !(noise >= 0.0) || w0.iter().map(|x| x.abs()).sum::<f64>() + noise > 1.0 {
            return Err(Error::Argument(
                "rls: need noise >= 0 and ‖w0‖₁ + noise <= 1".into(),
            ));
        }
        let half_width = 2.0;
        let landscape = Quadratic::new(
            DMatrix::identity(d, d) * (2.0 / 3.0),
            w0.clone(),
            noise * noise / 3.0,
            DomainBox::cube(d, half_width)?,
        )?
        .with_name("rls")
        // |y - ⟨w, x⟩| ≤ 1 + Σ|w_k|
        .with_loss_bound((1.0 + half_width * d as f64).powi(2))?;
        Ok(Self {
            w0,
            noise,
            landscape: Arc::new(landscape),
        })
    }

    pub fn w0(&self) -> &[f64] {
        &self.w0
    }
}

impl DataModel for RlsModel {
    fn name(&self) -> &str {
        "rls"
    }

    fn landscape(&self) -> Arc<dyn Landscape> {
        self.landscape.clone()
    }

    fn loss(&self, w: &[f64], z: &[f64]) -> f64 {
        let d = w.len();
        let r = z[d] - w.iter().zip(&z[..d]).map(|(a, b)| a * b).sum::<f64>();
        r * r
    }

    fn loss_jet(&self, w: &[f64], z: &[f64]) -> RiskJet {
        let d = w.len();
        let x = &z[..d];
        let r = z[d] - w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        RiskJet {
            value: r * r,
            gradient: x.iter().map(|xi| -2.0 * r * xi).collect(),
            hessian: DMatrix::from_fn(d, d, |i, j| 2.0 * x[i] * x[j]),
        }
    }

    fn sample_example(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let d = self.w0.len();
        let mut z: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let eps = if self.noise > 0.0 {
            rng.random_range(-self.noise..=self.noise)
        } else {
            0.0
        };
        let y = self.w0.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() + eps;
        z.push(y.clamp(-1.0, 1.0));
        z
    }

    fn loss_hessian_is_constant(&self) -> bool {
        true
    }
}

/// Location model `ℓ(w, z) = ‖w - z‖²` with `z ~ U[-1,1]^d`, so `R(w) = ‖w‖² + d/3`.
#[derive(Debug, Clone)]
pub struct SquareLocationModel {
    landscape: Arc<Quadratic>,
}

impl SquareLocationModel {
    pub fn new(d: usize) -> Result<Self> {
        let half_width = 2.0;
        let landscape = Quadratic::new(
            DMatrix::identity(d, d) * 2.0,
            vec![0.0; d],
            d as f64 / 3.0,
            DomainBox::cube(d, half_width)?,
        )?
        .with_name("square_location")
        .with_loss_bound(d as f64 * (half_width + 1.0).powi(2))?;
        Ok(Self {
            landscape: Arc::new(landscape),
        })
    }
}

impl DataModel for SquareLocationModel {
    fn name(&self) -> &str {
        "square_location"
    }

    fn landscape(&self) -> Arc<dyn Landscape> {
        self.landscape.clone()
    }

    fn loss(&self, w: &[f64], z: &[f64]) -> f64 {
        linalg::dist(w, z).powi(2)
    }

    fn loss_jet(&self, w: &[f64], z: &[f64]) -> RiskJet {
        let d = w.len();
        RiskJet {
            value: self.loss(w, z),
            gradient: w.iter().zip(z).map(|(a, b)| 2.0 * (a - b)).collect(),
            hessian: DMatrix::identity(d, d) * 2.0,
        }
    }

    fn sample_example(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        (0..self.landscape.dim())
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect()
    }

    fn loss_hessian_is_constant(&self) -> bool {
        true
    }
}

/// `ℓ(w, z) = R(w)`: examples carry no information and `R̂_S ≡ R`.
#[derive(Debug, Clone)]
pub struct DeterministicModel {
    landscape: Arc<dyn Landscape>,
}

impl DeterministicModel {
    pub fn new(landscape: Arc<dyn Landscape>) -> Self {
        Self { landscape }
    }
}

impl DataModel for DeterministicModel {
    fn name(&self) -> &str {
        "deterministic"
    }

    fn landscape(&self) -> Arc<dyn Landscape> {
        self.landscape.clone()
    }

    fn loss(&self, w: &[f64], _z: &[f64]) -> f64 {
        self.landscape.value(w)
    }

    fn loss_jet(&self, w: &[f64], _z: &[f64]) -> RiskJet {
        self.landscape.jet(w)
    }

    fn sample_example(&self, _rng: &mut dyn RngCore) -> Vec<f64> {
        Vec::new()
    }

    fn loss_hessian_is_constant(&self) -> bool {
        self.landscape.hessian_is_constant()
    }
}
