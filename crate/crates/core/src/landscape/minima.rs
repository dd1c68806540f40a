use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{DomainBox, EllipsoidSpec, Landscape, Objective, RegularizedRisk};
use crate::error::{Error, Result};
use crate::linalg;
use crate::lowdisc;

const GRAD_TOL: f64 = 1e-10;
const GLOBAL_TOL: f64 = 1e-9;
const MAX_NEWTON: usize = 200;
/// Eigenvalues of `H*` at or below this fraction of `λ_max(H*)` count as zero.
pub const ZERO_EIGEN_THRESHOLD: f64 = 1e-10;
const FALLBACK_POINTS: usize = 4096;
const FALLBACK_MIN_LEVEL: i32 = -20;

/// One isolated minimizer of `R_λ` with its curvature data.
#[derive(Debug, Clone)]
pub struct MinimumDescriptor {
    pub index: usize,
    pub location: Vec<f64>,
    /// `R_λ(w*_λ)`.
    pub value: f64,
    /// `R(w*_λ)`.
    pub risk: f64,
    /// `H* = ∇²R(w*_λ)`.
    pub hessian: DMatrix<f64>,
    /// `H*_λ = H* + 2λI`.
    pub hessian_reg: DMatrix<f64>,
    pub lambda: f64,
    /// Smallest eigenvalue of `H*` above the zero threshold; 0 when `H* = 0`.
    pub lambda_min: f64,
    pub is_global: bool,
    landscape: Arc<dyn Landscape>,
}

impl MinimumDescriptor {
    pub fn dim(&self) -> usize {
        self.location.len()
    }

    pub fn landscape(&self) -> &Arc<dyn Landscape> {
        &self.landscape
    }

    /// `ln det H*_λ`.
    pub fn log_det_reg(&self) -> f64 {
        linalg::log_det_pd(&self.hessian_reg).expect("H*_λ is positive definite by construction")
    }

    /// `𝓔*(r) = {w : ‖w - w*_λ‖_{H*_λ} ≤ r}`.
    pub fn ellipsoid(&self, r: f64) -> EllipsoidSpec {
        EllipsoidSpec {
            center: self.location.clone(),
            metric: self.hessian_reg.clone(),
            radius: r,
        }
    }

    /// Local Lipschitz profile `L*(r)` of the Hessian.
    pub fn lipschitz(&self, r: f64) -> Lipschitz {
        lipschitz_estimate(self.landscape.as_ref(), self, r)
    }
}

/// `L*(r)`; `exact` is false for the sampled lower estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lipschitz {
    pub value: f64,
    pub exact: bool,
}

fn newton_polish(objective: &RegularizedRisk, start: &[f64]) -> Result<Vec<f64>> {
    let domain = objective.domain();
    let mut w = start.to_vec();
    for _ in 0..MAX_NEWTON {
        let jet = objective.jet(&w);
        let gnorm = linalg::norm(&jet.gradient);
        let g = DVector::from_column_slice(&jet.gradient);
        let chol = jet.hessian.clone().cholesky();
        if gnorm <= GRAD_TOL {
            // one last full Newton step to reach rounding level
            if let Some(ch) = chol {
                let step = -ch.solve(&g);
                let next: Vec<f64> = w.iter().zip(step.iter()).map(|(x, s)| x + s).collect();
                let mut gn = vec![0.0; w.len()];
                if domain.contains(&next) {
                    objective.value_grad(&next, &mut gn);
                    if linalg::norm(&gn) <= gnorm {
                        return Ok(next);
                    }
                }
            }
            return Ok(w);
        }
        let step = match chol {
            Some(ch) => -ch.solve(&g),
            None => -g / linalg::sym_spectral_norm(&jet.hessian).max(1.0),
        };
        // halve until the step stays in the box and does not increase the gradient much
        let mut t = 1.0;
        let mut next;
        loop {
            next = w
                .iter()
                .zip(step.iter())
                .map(|(x, s)| x + t * s)
                .collect::<Vec<_>>();
            if domain.contains(&next) {
                let mut gn = vec![0.0; w.len()];
                objective.value_grad(&next, &mut gn);
                if linalg::norm(&gn) < gnorm || t < 1e-3 {
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(Error::LandscapeDefinition(format!(
                    "Newton polish from {start:?} cannot make progress at {w:?}"
                )));
            }
        }
        w = next;
    }
    Err(Error::LandscapeDefinition(format!(
        "Newton polish from {start:?} did not converge"
    )))
}

/// Smallest eigenvalue above `ZERO_EIGEN_THRESHOLD · λ_max`, or 0 for the zero matrix.
pub(crate) fn smallest_nonzero_eigenvalue(eigenvalues: &[f64]) -> f64 {
    let max = eigenvalues.iter().fold(0.0_f64, |m, v| m.max(*v));
    eigenvalues
        .iter()
        .copied()
        .find(|v| *v > ZERO_EIGEN_THRESHOLD * max)
        .unwrap_or(0.0)
}

/// Newton-polished minima of `R_λ`, one per landscape initial point, sorted by
/// `R_λ` value then by index.
pub fn enumerate_minima(
    landscape: Arc<dyn Landscape>,
    lambda: f64,
) -> Result<Vec<MinimumDescriptor>> {
    let objective = RegularizedRisk::new(landscape.clone(), lambda)?;
    let mut minima = Vec::new();
    for (index, start) in landscape.initial_points().iter().enumerate() {
        let location = newton_polish(&objective, start)?;
        let jet = landscape.jet(&location);
        let hessian = jet.hessian.clone();
        let ev = linalg::check_psd(&hessian, "H*").map_err(|_| {
            Error::LandscapeDefinition(format!(
                "Hessian of R at the minimum near {start:?} is not positive semi-definite"
            ))
        })?;
        let mut hessian_reg = hessian.clone();
        for k in 0..hessian.nrows() {
            hessian_reg[(k, k)] += 2.0 * lambda;
        }
        if linalg::check_pd(&hessian_reg, "H*_λ").is_err() {
            return Err(Error::LandscapeDefinition(format!(
                "minimum near {start:?} is not isolated (H*_λ is singular)"
            )));
        }
        for prev in &minima {
            let prev: &MinimumDescriptor = prev;
            if linalg::dist(&prev.location, &location) <= 1e-6 {
                return Err(Error::LandscapeDefinition(format!(
                    "initial points {} and {index} polish to the same minimum",
                    prev.index
                )));
            }
        }
        minima.push(MinimumDescriptor {
            index,
            value: objective.value(&location),
            risk: jet.value,
            lambda_min: smallest_nonzero_eigenvalue(&ev),
            hessian,
            hessian_reg,
            lambda,
            is_global: false,
            location,
            landscape: landscape.clone(),
        });
    }
    if minima.is_empty() {
        return Err(Error::LandscapeDefinition(
            "landscape has no initial points".into(),
        ));
    }
    let best = minima.iter().map(|m| m.value).fold(f64::INFINITY, f64::min);
    for m in &mut minima {
        m.is_global = m.value <= best + GLOBAL_TOL;
    }
    minima.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.index.cmp(&b.index)));
    Ok(minima)
}

/// `L*(r)`: the landscape's closed form when available, otherwise the largest
/// observed ratio `‖∇²R(w*) - ∇²R(w)‖₂ / ‖w* - w‖` over a fixed low-discrepancy
/// set inside `𝓔*(r)` (an under-estimate).
///
/// The fallback set is `⋃_k 2^k·B` for a fixed set `B` of 4096 points in the
/// unit ball mapped into the ellipsoid's frame, so the estimate is
/// nondecreasing in `r`.
pub fn lipschitz_estimate(
    landscape: &dyn Landscape,
    minimum: &MinimumDescriptor,
    r: f64,
) -> Lipschitz {
    if r <= 0.0 {
        return Lipschitz {
            value: 0.0,
            exact: true,
        };
    }
    if let Some(value) = landscape.lipschitz_closed_form(minimum, r) {
        return Lipschitz { value, exact: true };
    }
    let d = minimum.dim();
    let chol = minimum
        .hessian_reg
        .clone()
        .cholesky()
        .expect("H*_λ is positive definite");
    // w = w* + L⁻ᵀu maps the unit ball onto ‖w - w*‖_{H_λ} ≤ 1
    let l_t_inv = chol
        .l()
        .transpose()
        .try_inverse()
        .expect("triangular factor is invertible");
    let base = lowdisc::ball_points(FALLBACK_POINTS, d);
    let h_star = &minimum.hessian;
    let top = r.log2().ceil() as i32;
    let mut best = 0.0_f64;
    for level in FALLBACK_MIN_LEVEL..=top.max(FALLBACK_MIN_LEVEL) {
        let scale = 2f64.powi(level);
        for u in &base {
            let un = scale * linalg::norm(u);
            if un == 0.0 || un > r {
                continue;
            }
            let uv = DVector::from_iterator(d, u.iter().map(|x| x * scale));
            let dw = &l_t_inv * uv;
            let w: Vec<f64> = minimum
                .location
                .iter()
                .zip(dw.iter())
                .map(|(a, b)| a + b)
                .collect();
            let diff = landscape.jet(&w).hessian - h_star;
            let ratio = linalg::sym_spectral_norm(&diff) / dw.norm();
            best = best.max(ratio);
        }
    }
    Lipschitz {
        value: best,
        exact: false,
    }
}

/// Conservative radius below which the ellipsoids `𝓔*_i(r)` are pairwise disjoint:
/// `½ min_{i≠j} ‖w*_i - w*_j‖ · √(min_k λ_min(H*_λ,k))`. A single minimum gets
/// the radius at which its ellipsoid touches the domain boundary.
pub fn disjoint_radius(minima: &[MinimumDescriptor]) -> Result<f64> {
    let first = minima
        .first()
        .ok_or_else(|| Error::Argument("disjoint radius needs at least one minimum".into()))?;
    if minima.len() == 1 {
        return Ok(box_touching_radius(first, first.landscape.domain()));
    }
    let mut min_dist = f64::INFINITY;
    for (i, a) in minima.iter().enumerate() {
        for b in &minima[i + 1..] {
            let dd = linalg::dist(&a.location, &b.location);
            if dd == 0.0 {
                return Err(Error::Invariant(format!(
                    "minima {} and {} share a location",
                    a.index, b.index
                )));
            }
            min_dist = min_dist.min(dd);
        }
    }
    let min_curv = minima
        .iter()
        .map(|m| linalg::sym_eigenvalues(&m.hessian_reg)[0])
        .fold(f64::INFINITY, f64::min);
    Ok(0.5 * min_dist * min_curv.sqrt())
}

fn box_touching_radius(m: &MinimumDescriptor, domain: &DomainBox) -> f64 {
    let inv = m
        .hessian_reg
        .clone()
        .try_inverse()
        .expect("H*_λ is positive definite");
    (0..m.dim())
        .map(|k| {
            let gap = (m.location[k] - domain.lo()[k]).min(domain.hi()[k] - m.location[k]);
            gap / inv[(k, k)].sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}
