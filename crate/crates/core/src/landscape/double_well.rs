use nalgebra::DMatrix;

use super::{DomainBox, Landscape, MinimumDescriptor, RiskJet};
use crate::error::{Error, Result};

/// Coordinate-wise double-well `R(w) = Σ_k (w_k² - 1)²` with `2^d` minima.
#[derive(Debug, Clone)]
pub struct DoubleWell {
    domain: DomainBox,
    loss_bound: f64,
}

impl DoubleWell {
    /// On `[-half_width, half_width]^d`; `half_width` must exceed 1.
    pub fn new(d: usize, half_width: f64) -> Result<Self> {
        if d == 0 || d > 10 {
            return Err(Error::Argument(format!(
                "double-well dimension must be in 1..=10, got {d}"
            )));
        }
        if !(half_width > 1.0) {
            return Err(Error::Argument(
                "double-well box must contain both wells (half_width > 1)".into(),
            ));
        }
        let edge = (half_width * half_width - 1.0).powi(2);
        Ok(Self {
            domain: DomainBox::cube(d, half_width)?,
            loss_bound: d as f64 * edge.max(1.0),
        })
    }
}

impl Landscape for DoubleWell {
    fn name(&self) -> &str {
        "double_well"
    }

    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn domain(&self) -> &DomainBox {
        &self.domain
    }

    fn loss_bound(&self) -> f64 {
        self.loss_bound
    }

    fn value(&self, w: &[f64]) -> f64 {
        w.iter().map(|x| (x * x - 1.0).powi(2)).sum()
    }

    fn value_grad(&self, w: &[f64], grad: &mut [f64]) -> f64 {
        let mut v = 0.0;
        for (g, x) in grad.iter_mut().zip(w) {
            let s = x * x - 1.0;
            v += s * s;
            *g = 4.0 * x * s;
        }
        v
    }

    fn jet(&self, w: &[f64]) -> RiskJet {
        let d = w.len();
        let mut gradient = vec![0.0; d];
        let value = self.value_grad(w, &mut gradient);
        let hessian = DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                12.0 * w[i] * w[i] - 4.0
            } else {
                0.0
            }
        });
        RiskJet {
            value,
            gradient,
            hessian,
        }
    }

    fn initial_points(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..1usize << d)
            .map(|mask| {
                (0..d)
                    .map(|k| if mask >> k & 1 == 1 { 1.0 } else { -1.0 })
                    .collect()
            })
            .collect()
    }

    /// `‖∇²R(w) - ∇²R(w*)‖₂ = 12 max_k |w_k - w*_k| |w_k + w*_k|`, and on the ellipsoid
    /// `|w_k - w*_k| ≤ r/√(H_λ)_kk`, giving `12(2 max|w*_k| + r/√min_k (H_λ)_kk)`.
    /// Exact in one dimension.
    fn lipschitz_closed_form(&self, minimum: &MinimumDescriptor, r: f64) -> Option<f64> {
        let h = &minimum.hessian_reg;
        let min_diag = (0..h.nrows())
            .map(|k| h[(k, k)])
            .fold(f64::INFINITY, f64::min);
        let max_abs = minimum.location.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        Some(12.0 * (2.0 * max_abs + r / min_diag.sqrt()))
    }
}
