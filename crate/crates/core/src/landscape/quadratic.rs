use nalgebra::DMatrix;

use super::{DomainBox, Landscape, MinimumDescriptor, RiskJet};
use crate::error::{Error, Result};
use crate::linalg;

/// `R(w) = ½(w - c)ᵀA(w - c) + offset` with constant Hessian `A`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    name: String,
    a: DMatrix<f64>,
    center: Vec<f64>,
    offset: f64,
    domain: DomainBox,
    loss_bound: f64,
}

impl Quadratic {
    pub fn new(a: DMatrix<f64>, center: Vec<f64>, offset: f64, domain: DomainBox) -> Result<Self> {
        linalg::check_psd(&a, "quadratic Hessian")?;
        if a.nrows() != center.len() || domain.dim() != center.len() {
            return Err(Error::Argument(
                "quadratic: dimensions of A, center and box differ".into(),
            ));
        }
        if !(offset >= 0.0) {
            return Err(Error::Argument(format!(
                "quadratic offset must be >= 0, got {offset}"
            )));
        }
        let mut q = Self {
            name: "quadratic".into(),
            a,
            center,
            offset,
            domain,
            loss_bound: 0.0,
        };
        // convex, so the supremum over the box sits at a vertex
        q.loss_bound = q
            .domain
            .corners()
            .iter()
            .map(|c| q.value(c))
            .fold(0.0, f64::max);
        Ok(q)
    }

    /// `½‖w‖²` on `[-half_width, half_width]^d`.
    pub fn isotropic(d: usize, half_width: f64) -> Result<Self> {
        Self::new(
            DMatrix::identity(d, d),
            vec![0.0; d],
            0.0,
            DomainBox::cube(d, half_width)?,
        )
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Raises `M` to the loss supremum of an underlying data model.
    pub fn with_loss_bound(mut self, m: f64) -> Result<Self> {
        if m < self.loss_bound {
            return Err(Error::Argument(format!(
                "loss bound {m} is below the risk supremum {}",
                self.loss_bound
            )));
        }
        self.loss_bound = m;
        Ok(self)
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    fn shifted(&self, w: &[f64]) -> Vec<f64> {
        w.iter().zip(&self.center).map(|(x, c)| x - c).collect()
    }
}

impl Landscape for Quadratic {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.center.len()
    }

    fn domain(&self) -> &DomainBox {
        &self.domain
    }

    fn loss_bound(&self) -> f64 {
        self.loss_bound
    }

    fn value(&self, w: &[f64]) -> f64 {
        0.5 * linalg::quad_form(&self.a, &self.shifted(w)) + self.offset
    }

    fn value_grad(&self, w: &[f64], grad: &mut [f64]) -> f64 {
        let u = self.shifted(w);
        let n = u.len();
        let mut v = 0.0;
        for i in 0..n {
            let mut g = 0.0;
            for j in 0..n {
                g += self.a[(i, j)] * u[j];
            }
            grad[i] = g;
            v += 0.5 * u[i] * g;
        }
        v + self.offset
    }

    fn jet(&self, w: &[f64]) -> RiskJet {
        let mut gradient = vec![0.0; w.len()];
        let value = self.value_grad(w, &mut gradient);
        RiskJet {
            value,
            gradient,
            hessian: self.a.clone(),
        }
    }

    fn initial_points(&self) -> Vec<Vec<f64>> {
        vec![self.center.clone()]
    }

    fn hessian_is_constant(&self) -> bool {
        true
    }

    fn lipschitz_closed_form(&self, _minimum: &MinimumDescriptor, _r: f64) -> Option<f64> {
        Some(0.0)
    }
}
