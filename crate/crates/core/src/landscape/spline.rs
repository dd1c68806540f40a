use nalgebra::{DMatrix, DVector};

use super::{DomainBox, Landscape, MinimumDescriptor, RiskJet};
use crate::error::{Error, Result};

const SCAN: usize = 512;

/// One-dimensional asymmetric double-well: quadratic wells `½h₁(w+1)²` and
/// `½h₂(w-1)²` of equal depth, joined on `[-1+a, 1-a]` by the quintic that
/// matches value, slope and curvature at both junctions. The risk is C² with
/// exactly known, unequal Hessians at the two minima.
#[derive(Debug, Clone)]
pub struct SplineDoubleWell {
    h_left: f64,
    h_right: f64,
    half_width: f64,
    coef: [f64; 6],
    domain: DomainBox,
    loss_bound: f64,
}

fn poly(c: &[f64; 6], w: f64, order: usize) -> f64 {
    let mut s = 0.0;
    for k in (order..6).rev() {
        let mut f = 1.0;
        for j in 0..order {
            f *= (k - j) as f64;
        }
        s = s * w + f * c[k];
    }
    s
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 || b - a < 1e-15 * (1.0 + m.abs()) {
            return m;
        }
        if (fa < 0.0) == (fm < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Sign-change roots of `f` on `[a, b]`.
fn scan_roots(f: impl Fn(f64) -> f64, a: f64, b: f64) -> Vec<f64> {
    let mut roots = Vec::new();
    let h = (b - a) / SCAN as f64;
    let mut x0 = a;
    let mut f0 = f(x0);
    for i in 1..=SCAN {
        let x1 = if i == SCAN { b } else { a + h * i as f64 };
        let f1 = f(x1);
        if f0 == 0.0 {
            roots.push(x0);
        } else if (f0 < 0.0) != (f1 < 0.0) && f1 != 0.0 {
            roots.push(bisect(&f, x0, x1));
        }
        x0 = x1;
        f0 = f1;
    }
    if f0 == 0.0 {
        roots.push(x0);
    }
    roots
}

impl SplineDoubleWell {
    /// Wells of curvature `h_left`, `h_right` centred at `∓1`, each quadratic within
    /// `well_half_width` of its centre, on the box `[-box_half_width, box_half_width]`.
    pub fn new(
        h_left: f64,
        h_right: f64,
        well_half_width: f64,
        box_half_width: f64,
    ) -> Result<Self> {
        if !(h_left > 0.0 && h_right > 0.0) {
            return Err(Error::LandscapeDefinition(
                "spline well curvatures must be positive".into(),
            ));
        }
        let a = well_half_width;
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::LandscapeDefinition(format!(
                "well half-width must be in (0, 1), got {a}"
            )));
        }
        if !(box_half_width > 1.0) {
            return Err(Error::LandscapeDefinition(
                "box must contain both wells".into(),
            ));
        }
        let (l, u) = (-1.0 + a, 1.0 - a);
        let rows = |w: f64| {
            let mut r = [[0.0; 6]; 3];
            for k in 0..6 {
                let kf = k as f64;
                r[0][k] = w.powi(k as i32);
                r[1][k] = if k >= 1 {
                    kf * w.powi(k as i32 - 1)
                } else {
                    0.0
                };
                r[2][k] = if k >= 2 {
                    kf * (kf - 1.0) * w.powi(k as i32 - 2)
                } else {
                    0.0
                };
            }
            r
        };
        let (rl, ru) = (rows(l), rows(u));
        let m = DMatrix::from_fn(6, 6, |i, j| if i < 3 { rl[i][j] } else { ru[i - 3][j] });
        let rhs = DVector::from_vec(vec![
            0.5 * h_left * a * a,
            h_left * a,
            h_left,
            0.5 * h_right * a * a,
            -h_right * a,
            h_right,
        ]);
        let sol = m
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::LandscapeDefinition("spline bridge system is singular".into()))?;
        let mut coef = [0.0; 6];
        coef.copy_from_slice(sol.as_slice());

        let mut s = Self {
            h_left,
            h_right,
            half_width: a,
            coef,
            domain: DomainBox::cube(1, box_half_width)?,
            loss_bound: 0.0,
        };
        let mut candidates = vec![l, u];
        candidates.extend(scan_roots(|w| poly(&s.coef, w, 1), l, u));
        let bridge: Vec<f64> = candidates.iter().map(|&w| poly(&s.coef, w, 0)).collect();
        if bridge.iter().any(|v| *v < 0.0) {
            return Err(Error::LandscapeDefinition(
                "spline bridge dips below zero".into(),
            ));
        }
        let edge = 0.5 * (box_half_width - 1.0).powi(2) * h_left.max(h_right);
        s.loss_bound = bridge.iter().copied().fold(edge, f64::max);
        Ok(s)
    }

    pub fn junctions(&self) -> (f64, f64) {
        (-1.0 + self.half_width, 1.0 - self.half_width)
    }

    pub fn coefficients(&self) -> &[f64; 6] {
        &self.coef
    }

    pub fn curvatures(&self) -> (f64, f64) {
        (self.h_left, self.h_right)
    }

    fn eval(&self, w: f64, order: usize) -> f64 {
        let (l, u) = self.junctions();
        if w <= l {
            quad_piece(self.h_left, w + 1.0, order)
        } else if w >= u {
            quad_piece(self.h_right, w - 1.0, order)
        } else {
            poly(&self.coef, w, order)
        }
    }

    /// Exact `sup |R''(w) - R''(w*)| / |w - w*|` over `|w - w*| ≤ delta`.
    fn curvature_lipschitz(&self, wstar: f64, delta: f64) -> f64 {
        let hstar = self.eval(wstar, 2);
        let (lo, hi) = (wstar - delta, wstar + delta);
        let (l, u) = self.junctions();
        let ratio = |w: f64| {
            let dw = (w - wstar).abs();
            if dw == 0.0 {
                0.0
            } else {
                (self.eval(w, 2) - hstar).abs() / dw
            }
        };
        let mut best = 0.0_f64;
        // constant-curvature wells: the ratio peaks at the point nearest w*
        for (a, b) in [(f64::NEG_INFINITY, l), (u, f64::INFINITY)] {
            let (a, b) = (a.max(lo), b.min(hi));
            if a <= b {
                best = best.max(ratio(wstar.clamp(a, b)));
            }
        }
        let (a, b) = (l.max(lo), u.min(hi));
        if a <= b {
            best = best.max(ratio(a)).max(ratio(b));
            if a < wstar && wstar < b {
                best = best.max(poly(&self.coef, wstar, 3).abs());
            }
            // stationary points of g(w)/(w - w*) solve g'(w)(w - w*) - g(w) = 0
            let q =
                |w: f64| poly(&self.coef, w, 3) * (w - wstar) - (poly(&self.coef, w, 2) - hstar);
            if b > a {
                for w in scan_roots(q, a, b) {
                    best = best.max(ratio(w));
                }
            }
        }
        best
    }
}

fn quad_piece(h: f64, x: f64, order: usize) -> f64 {
    match order {
        0 => 0.5 * h * x * x,
        1 => h * x,
        2 => h,
        _ => 0.0,
    }
}

impl Landscape for SplineDoubleWell {
    fn name(&self) -> &str {
        "spline_double_well"
    }

    fn dim(&self) -> usize {
        1
    }

    fn domain(&self) -> &DomainBox {
        &self.domain
    }

    fn loss_bound(&self) -> f64 {
        self.loss_bound
    }

    fn value(&self, w: &[f64]) -> f64 {
        self.eval(w[0], 0)
    }

    fn value_grad(&self, w: &[f64], grad: &mut [f64]) -> f64 {
        grad[0] = self.eval(w[0], 1);
        self.eval(w[0], 0)
    }

    fn jet(&self, w: &[f64]) -> RiskJet {
        RiskJet {
            value: self.eval(w[0], 0),
            gradient: vec![self.eval(w[0], 1)],
            hessian: DMatrix::from_element(1, 1, self.eval(w[0], 2)),
        }
    }

    fn initial_points(&self) -> Vec<Vec<f64>> {
        vec![vec![-1.0], vec![1.0]]
    }

    fn breakpoints(&self) -> Vec<f64> {
        let (l, u) = self.junctions();
        vec![l, u]
    }

    fn lipschitz_closed_form(&self, minimum: &MinimumDescriptor, r: f64) -> Option<f64> {
        let delta = r / minimum.hessian_reg[(0, 0)].sqrt();
        Some(self.curvature_lipschitz(minimum.location[0], delta))
    }
}
