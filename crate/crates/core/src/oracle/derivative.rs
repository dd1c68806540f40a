use crate::landscape::{DataModel, Landscape, RiskJet};

/// Largest relative finite-difference errors, `|fd - analytic|_∞ / max(|analytic|_∞, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeReport {
    pub max_gradient_error: f64,
    pub max_hessian_error: f64,
    pub probes: usize,
}

impl DerivativeReport {
    pub fn max_error(&self) -> f64 {
        self.max_gradient_error.max(self.max_hessian_error)
    }
}

fn rel_err(fd: &[f64], an: &[f64]) -> f64 {
    let num = fd
        .iter()
        .zip(an)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let den = an.iter().map(|x| x.abs()).fold(1.0, f64::max);
    num / den
}

#[derive(Clone, Copy, PartialEq)]
enum Stencil {
    Central,
    Forward,
    Backward,
}

/// Gradient and Hessian columns along coordinate `k` by a second-order stencil.
fn fd_along(
    jet: &dyn Fn(&[f64]) -> RiskJet,
    w: &[f64],
    k: usize,
    h: f64,
    s: Stencil,
) -> (f64, Vec<f64>) {
    let at = |t: f64| {
        let mut x = w.to_vec();
        x[k] += t;
        jet(&x)
    };
    match s {
        Stencil::Central => {
            let (p, m) = (at(h), at(-h));
            let g = (p.value - m.value) / (2.0 * h);
            let col = p
                .gradient
                .iter()
                .zip(&m.gradient)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect();
            (g, col)
        }
        Stencil::Forward | Stencil::Backward => {
            let sg = if s == Stencil::Forward { 1.0 } else { -1.0 };
            let (j0, j1, j2) = (jet(w), at(sg * h), at(sg * 2.0 * h));
            let g = sg * (-3.0 * j0.value + 4.0 * j1.value - j2.value) / (2.0 * h);
            let col = (0..w.len())
                .map(|i| {
                    sg * (-3.0 * j0.gradient[i] + 4.0 * j1.gradient[i] - j2.gradient[i]) / (2.0 * h)
                })
                .collect();
            (g, col)
        }
    }
}

fn check_point(
    jet: &dyn Fn(&[f64]) -> RiskJet,
    w: &[f64],
    stencil: &dyn Fn(usize, f64) -> Stencil,
) -> (f64, f64) {
    let d = w.len();
    let h = 1e-4 * (1.0 + crate::linalg::norm(w));
    let an = jet(w);
    let mut fd_grad = vec![0.0; d];
    let mut fd_hess = vec![0.0; d * d];
    for k in 0..d {
        let (g, col) = fd_along(jet, w, k, h, stencil(k, h));
        fd_grad[k] = g;
        for i in 0..d {
            fd_hess[i * d + k] = col[i];
        }
    }
    let an_hess: Vec<f64> = (0..d * d)
        .map(|idx| an.hessian[(idx / d, idx % d)])
        .collect();
    (rel_err(&fd_grad, &an.gradient), rel_err(&fd_hess, &an_hess))
}

/// Central differences with step `h = 1e-4(1 + ‖w‖)`; along coordinates where a
/// stencil would straddle one of `breakpoints` (1-d kinks of the third
/// derivative) a one-sided second-order stencil on the far side is used.
pub fn derivative_check(
    jet: &dyn Fn(&[f64]) -> RiskJet,
    probes: &[Vec<f64>],
    breakpoints: &[f64],
) -> DerivativeReport {
    let mut report = DerivativeReport {
        max_gradient_error: 0.0,
        max_hessian_error: 0.0,
        probes: probes.len(),
    };
    for w in probes {
        let pick =
            |k: usize, h: f64| match breakpoints.iter().find(|b| (w[k] - **b).abs() < 2.0 * h) {
                Some(b) if w[k] >= *b => Stencil::Forward,
                Some(_) => Stencil::Backward,
                None => Stencil::Central,
            };
        let (g, hs) = check_point(jet, w, &pick);
        report.max_gradient_error = report.max_gradient_error.max(g);
        report.max_hessian_error = report.max_hessian_error.max(hs);
    }
    report
}

/// Forward and backward one-sided reports at a single point.
pub fn one_sided_check(
    jet: &dyn Fn(&[f64]) -> RiskJet,
    w: &[f64],
) -> (DerivativeReport, DerivativeReport) {
    let one = |s: Stencil| {
        let (g, h) = check_point(jet, w, &|_, _| s);
        DerivativeReport {
            max_gradient_error: g,
            max_hessian_error: h,
            probes: 1,
        }
    };
    (one(Stencil::Forward), one(Stencil::Backward))
}

pub fn check_landscape(landscape: &dyn Landscape, probes: &[Vec<f64>]) -> DerivativeReport {
    let bp = if landscape.dim() == 1 {
        landscape.breakpoints()
    } else {
        Vec::new()
    };
    derivative_check(&|w| landscape.jet(w), probes, &bp)
}

/// Checks `w ↦ ℓ(w, z)` at every pair of probe point and example.
pub fn check_data_model(
    model: &dyn DataModel,
    probes: &[Vec<f64>],
    examples: &[Vec<f64>],
) -> DerivativeReport {
    let mut total = DerivativeReport {
        max_gradient_error: 0.0,
        max_hessian_error: 0.0,
        probes: 0,
    };
    for z in examples {
        let r = derivative_check(&|w| model.loss_jet(w, z), probes, &[]);
        total.max_gradient_error = total.max_gradient_error.max(r.max_gradient_error);
        total.max_hessian_error = total.max_hessian_error.max(r.max_hessian_error);
        total.probes += r.probes;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::{DoubleWell, Quadratic, SplineDoubleWell};

    #[test]
    fn quadratic_is_exact() {
        let q = Quadratic::isotropic(3, 5.0).unwrap();
        let r = check_landscape(&q, &[vec![0.3, -1.2, 2.0], vec![4.0, 4.0, -4.0]]);
        assert!(r.max_error() <= 1e-10, "{r:?}");
    }

    #[test]
    fn double_well_central_accuracy() {
        let dw = DoubleWell::new(1, 2.0).unwrap();
        assert!(check_landscape(&dw, &[vec![0.7]]).max_error() <= 1e-5);
    }

    #[test]
    fn spline_junction_one_sided_agree() {
        let s = SplineDoubleWell::new(8.0, 2.0, 0.5, 3.0).unwrap();
        for b in s.breakpoints() {
            let (fwd, bwd) = one_sided_check(&|w| s.jet(w), &[b]);
            assert!(
                fwd.max_error() <= 1e-5 && bwd.max_error() <= 1e-5,
                "{fwd:?} {bwd:?}"
            );
        }
    }
}
