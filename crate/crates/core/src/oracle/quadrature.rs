use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::exec::ExecPolicy;
use crate::landscape::{DomainBox, EllipsoidSpec, MinimumDescriptor, Objective};
use crate::linalg;
use crate::sampler::Region;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_n(z) and P_{n-1}(z)
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                z
            } else {
                p1
            };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// A one-dimensional composite rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    /// Composite Gauss–Legendre on `[lo, hi]`: the interval is cut at every
    /// breakpoint inside it, and each piece is split into equal panels no wider
    /// than `panel_width`, each carrying an `order`-point rule.
    pub fn composite(
        lo: f64,
        hi: f64,
        breakpoints: &[f64],
        panel_width: f64,
        order: usize,
    ) -> Result<Self> {
        if !(lo < hi) || !(panel_width > 0.0) || order == 0 {
            return Err(Error::Argument(
                "composite rule needs lo < hi, panel_width > 0, order >= 1".into(),
            ));
        }
        let mut cuts: Vec<f64> = breakpoints
            .iter()
            .copied()
            .filter(|b| *b > lo && *b < hi)
            .collect();
        cuts.push(lo);
        cuts.push(hi);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let (gx, gw) = gauss_legendre(order);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for piece in cuts.windows(2) {
            let (a, b) = (piece[0], piece[1]);
            let panels = ((b - a) / panel_width).ceil().max(1.0) as usize;
            let h = (b - a) / panels as f64;
            for p in 0..panels {
                let pa = a + h * p as f64;
                let mid = pa + 0.5 * h;
                for (x, w) in gx.iter().zip(&gw) {
                    nodes.push(mid + 0.5 * h * x);
                    weights.push(0.5 * h * w);
                }
            }
        }
        Ok(Self { nodes, weights })
    }
}

/// Nodes and positive weights in `d ≤ 3` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn tensor(rules: &[Rule1d]) -> Self {
        let dim = rules.len();
        let total: usize = rules.iter().map(|r| r.nodes.len()).product();
        let mut nodes = Vec::with_capacity(total * dim);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            let mut w = 1.0;
            for (k, r) in rules.iter().enumerate() {
                nodes.push(r.nodes[idx[k]]);
                w *= r.weights[idx[k]];
            }
            weights.push(w);
            for k in (0..dim).rev() {
                idx[k] += 1;
                if idx[k] < rules[k].nodes.len() {
                    break;
                }
                idx[k] = 0;
            }
        }
        Self {
            dim,
            nodes,
            weights,
        }
    }

    /// Polar (d = 2) or spherical (d = 3) rule over an ellipsoid clipped to the
    /// box, in coordinates `w = center + ρe`. Directions use `angular` nodes per
    /// periodic angle; each ray is integrated with composite Gauss–Legendre up to
    /// where it leaves the ellipsoid or the box. For `d = 1` the rule is the
    /// composite rule on the clipped interval.
    pub fn ellipsoid(
        e: &EllipsoidSpec,
        domain: &DomainBox,
        panel_width: f64,
        order: usize,
        angular: usize,
    ) -> Result<Self> {
        let d = e.dim();
        if !domain.contains(&e.center) {
            return Err(Error::Argument(
                "ellipsoid center lies outside the domain box".into(),
            ));
        }
        if e.radius == 0.0 {
            return Ok(Self {
                dim: d,
                nodes: Vec::new(),
                weights: Vec::new(),
            });
        }
        let mut dirs: Vec<(Vec<f64>, f64)> = Vec::new();
        match d {
            1 => dirs = vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)],
            2 => {
                for j in 0..angular {
                    let t = 2.0 * PI * (j as f64 + 0.5) / angular as f64;
                    dirs.push((vec![t.cos(), t.sin()], 2.0 * PI / angular as f64));
                }
            }
            3 => {
                let (cx, cw) = gauss_legendre(angular.div_ceil(2).max(2));
                for (c, w) in cx.iter().zip(&cw) {
                    let s = (1.0 - c * c).sqrt();
                    for j in 0..angular {
                        let t = 2.0 * PI * (j as f64 + 0.5) / angular as f64;
                        dirs.push((
                            vec![s * t.cos(), s * t.sin(), *c],
                            w * 2.0 * PI / angular as f64,
                        ));
                    }
                }
            }
            _ => {
                return Err(Error::Argument(format!(
                    "ellipsoid quadrature supports d <= 3, got {d}"
                )))
            }
        }
        let (gx, gw) = gauss_legendre(order);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for (dir, dw) in &dirs {
            let rho_max = e.ray_length(dir).min(domain.exit_distance(&e.center, dir));
            if rho_max <= 0.0 {
                continue;
            }
            let panels = (rho_max / panel_width).ceil().max(1.0) as usize;
            let h = rho_max / panels as f64;
            for p in 0..panels {
                let mid = h * (p as f64 + 0.5);
                for (x, w) in gx.iter().zip(&gw) {
                    let rho = mid + 0.5 * h * x;
                    for k in 0..d {
                        nodes.push(e.center[k] + rho * dir[k]);
                    }
                    weights.push(dw * 0.5 * h * w * rho.powi(d as i32 - 1));
                }
            }
        }
        Ok(Self {
            dim: d,
            nodes,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn total_weight(&self) -> f64 {
        crate::exec::pairwise_sum(&self.weights)
    }
}

/// Resolution settings for [`quadrature_measure`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    /// Largest curvature of the objective at its wells; sets the standard deviation `1/√(γ·curvature)`.
    pub curvature: f64,
    pub nodes_per_sd: f64,
    /// Gauss–Legendre points per panel.
    pub order: usize,
    /// Lower bound on panels across the widest box side.
    pub min_panels: usize,
    /// Nodes per periodic angle in polar/spherical ellipsoid rules.
    pub angular_nodes: usize,
    pub rel_tol: f64,
    pub abs_floor: f64,
    /// Compare against a rule with doubled resolution.
    pub richardson: bool,
    pub max_nodes: usize,
}

pub const MIN_NODES_PER_SD: f64 = 20.0;

impl QuadratureSpec {
    pub fn new(curvature: f64) -> Self {
        Self {
            curvature,
            nodes_per_sd: MIN_NODES_PER_SD,
            order: 10,
            min_panels: 8,
            angular_nodes: 96,
            rel_tol: 1e-6,
            abs_floor: 1e-14,
            richardson: true,
            max_nodes: 40_000_000,
        }
    }

    /// Resolves the sharpest well among `minima`.
    pub fn for_minima(minima: &[MinimumDescriptor]) -> Self {
        let c = minima
            .iter()
            .map(|m| {
                *linalg::sym_eigenvalues(&m.hessian_reg)
                    .last()
                    .expect("non-empty")
            })
            .fold(0.0, f64::max);
        Self::new(c)
    }

    fn panel_width(&self, gamma: f64, domain: &DomainBox) -> f64 {
        let sd = 1.0 / (gamma * self.curvature).sqrt();
        (self.order as f64 * sd / self.nodes_per_sd)
            .min(domain.max_width() / self.min_panels as f64)
    }
}

/// Gibbs mass and conditional moments of one region.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMeasure {
    /// `∫_region e^{-γF} / Z`.
    pub mass: f64,
    /// `ln ∫_region e^{-γF}`.
    pub log_integral: f64,
    /// `E[g_k | region]` for each integrand (NaN when the region has no mass).
    pub moments: Vec<f64>,
}

/// Quadrature of the box-restricted Gibbs measure `∝ e^{-γF}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    /// `ln Z`, `Z = ∫_box e^{-γF}`.
    pub log_z: f64,
    pub regions: Vec<RegionMeasure>,
    /// Nodes used by the accepted (finer) rule.
    pub nodes: usize,
}

pub type Integrand<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

/// Normalizer, region masses and conditional expectations of the Gibbs
/// measure of `target` at inverse temperature `gamma`.
///
/// In one dimension a single composite rule is cut at every region boundary,
/// so each region is a union of whole pieces. In two and three dimensions the
/// box uses a tensor rule, ellipsoids use polar/spherical rules in the
/// original coordinates, and a complement is the box minus its (disjoint)
/// ellipsoids. Unless disabled, the result is recomputed at doubled
/// resolution and rejected with a resolution error if any reported quantity
/// moves by more than `rel_tol`.
pub fn quadrature_measure(
    target: &dyn Objective,
    gamma: f64,
    spec: &QuadratureSpec,
    regions: &[Region],
    integrands: &[Integrand],
    policy: ExecPolicy,
) -> Result<Measure> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Argument(format!(
            "gamma must be positive and finite, got {gamma}"
        )));
    }
    if !(spec.curvature > 0.0) {
        return Err(Error::Argument(
            "quadrature curvature must be positive".into(),
        ));
    }
    if spec.nodes_per_sd < MIN_NODES_PER_SD {
        return Err(Error::Resolution {
            message: format!(
                "{} nodes per standard deviation is below the minimum",
                spec.nodes_per_sd
            ),
            suggested_nodes: MIN_NODES_PER_SD as usize,
        });
    }
    let d = target.dim();
    if d > 3 {
        return Err(Error::Argument(format!(
            "quadrature supports d <= 3, got {d}"
        )));
    }
    let coarse = evaluate(target, gamma, spec, regions, integrands, policy, 1)?;
    if !spec.richardson {
        return Ok(coarse);
    }
    let fine = evaluate(target, gamma, spec, regions, integrands, policy, 2)?;
    let close = |a: f64, b: f64| {
        (a.is_nan() && b.is_nan())
            || (a - b).abs() <= spec.rel_tol * b.abs().max(a.abs()) + spec.abs_floor
    };
    let mut bad = Vec::new();
    if (coarse.log_z - fine.log_z).abs() > spec.rel_tol {
        bad.push(format!("ln Z {} vs {}", coarse.log_z, fine.log_z));
    }
    for (i, (c, f)) in coarse.regions.iter().zip(&fine.regions).enumerate() {
        if !close(c.mass, f.mass) {
            bad.push(format!("region {i} mass {} vs {}", c.mass, f.mass));
        }
        for (k, (a, b)) in c.moments.iter().zip(&f.moments).enumerate() {
            if !close(*a, *b) {
                bad.push(format!("region {i} moment {k} {a} vs {b}"));
            }
        }
    }
    if bad.is_empty() {
        Ok(fine)
    } else {
        Err(Error::Resolution {
            message: format!("doubling the resolution changed {}", bad.join("; ")),
            suggested_nodes: (4.0 * spec.nodes_per_sd).ceil() as usize,
        })
    }
}

struct Evaluated {
    /// `-γF` at each node.
    f: Vec<f64>,
    grid: QuadratureGrid,
}

fn eval_grid(
    target: &dyn Objective,
    gamma: f64,
    grid: QuadratureGrid,
    policy: ExecPolicy,
) -> Evaluated {
    let f = policy.map_range(grid.len(), |i| -gamma * target.value(grid.node(i)));
    Evaluated { f, grid }
}

/// `(Σ w e^{f - shift} 1_A, Σ w e^{f - shift} g_k 1_A)` over a grid.
fn sums(
    ev: &Evaluated,
    shift: f64,
    member: &(dyn Fn(&[f64]) -> bool + Sync),
    integrands: &[Integrand],
    policy: ExecPolicy,
) -> (f64, Vec<f64>) {
    let n = ev.grid.len();
    let e = |i: usize| {
        let x = ev.grid.node(i);
        if member(x) {
            ev.grid.weight(i) * (ev.f[i] - shift).exp()
        } else {
            0.0
        }
    };
    let mass = policy.sum_range(n, e);
    let moments = integrands
        .iter()
        .map(|g| {
            policy.sum_range(n, |i| {
                let v = e(i);
                if v == 0.0 {
                    0.0
                } else {
                    v * g(ev.grid.node(i))
                }
            })
        })
        .collect();
    (mass, moments)
}

fn region_measure(mass: f64, moments: Vec<f64>, shift: f64, z: f64) -> RegionMeasure {
    RegionMeasure {
        mass: mass / z,
        log_integral: mass.ln() + shift,
        moments: moments
            .iter()
            .map(|m| if mass > 0.0 { m / mass } else { f64::NAN })
            .collect(),
    }
}

fn evaluate(
    target: &dyn Objective,
    gamma: f64,
    spec: &QuadratureSpec,
    regions: &[Region],
    integrands: &[Integrand],
    policy: ExecPolicy,
    refine: usize,
) -> Result<Measure> {
    let domain = target.domain();
    let d = target.dim();
    let h = spec.panel_width(gamma, domain) / refine as f64;
    let estimate: f64 = (0..d)
        .map(|k| ((domain.hi()[k] - domain.lo()[k]) / h).ceil() * spec.order as f64)
        .product();
    if estimate > spec.max_nodes as f64 {
        return Err(Error::Resolution {
            message: format!(
                "tensor grid would need about {estimate:.3e} nodes (limit {})",
                spec.max_nodes
            ),
            suggested_nodes: spec.nodes_per_sd as usize,
        });
    }
    let mut cuts = target.breakpoints();
    if d == 1 {
        for region in regions {
            let es: Vec<&EllipsoidSpec> = match region {
                Region::Whole => Vec::new(),
                Region::Ellipsoid(e) => vec![e],
                Region::Complement(es) => es.iter().collect(),
            };
            for e in es {
                let half = e.half_extent(0);
                cuts.push(e.center[0] - half);
                cuts.push(e.center[0] + half);
            }
        }
    }
    let rules: Vec<Rule1d> = (0..d)
        .map(|k| {
            let bp: &[f64] = if d == 1 { &cuts } else { &[] };
            Rule1d::composite(domain.lo()[k], domain.hi()[k], bp, h, spec.order)
        })
        .collect::<Result<_>>()?;
    let whole = eval_grid(target, gamma, QuadratureGrid::tensor(&rules), policy);

    if d == 1 {
        let shift = whole.f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (z, _) = sums(&whole, shift, &|_| true, &[], policy);
        let out = regions
            .iter()
            .map(|region| {
                let (m, mo) = sums(&whole, shift, &|x| region.contains(x), integrands, policy);
                region_measure(m, mo, shift, z)
            })
            .collect();
        return Ok(Measure {
            log_z: z.ln() + shift,
            regions: out,
            nodes: whole.grid.len(),
        });
    }

    // polar rules for every distinct ellipsoid, evaluated once
    let mut ellipsoids: Vec<EllipsoidSpec> = Vec::new();
    for region in regions {
        let es: Vec<&EllipsoidSpec> = match region {
            Region::Whole => Vec::new(),
            Region::Ellipsoid(e) => vec![e],
            Region::Complement(es) => es.iter().collect(),
        };
        for e in es {
            if !ellipsoids.contains(e) {
                ellipsoids.push(e.clone());
            }
        }
    }
    let angular = spec.angular_nodes * refine;
    let polar: Vec<Evaluated> = ellipsoids
        .iter()
        .map(|e| {
            QuadratureGrid::ellipsoid(e, domain, h, spec.order, angular)
                .map(|g| eval_grid(target, gamma, g, policy))
        })
        .collect::<Result<_>>()?;
    let shift = std::iter::once(&whole)
        .chain(polar.iter())
        .flat_map(|ev| ev.f.iter().copied())
        .fold(f64::NEG_INFINITY, f64::max);
    let (z, z_mom) = sums(&whole, shift, &|_| true, integrands, policy);
    let pieces: Vec<(f64, Vec<f64>)> = polar
        .iter()
        .map(|ev| sums(ev, shift, &|_| true, integrands, policy))
        .collect();
    let find = |e: &EllipsoidSpec| {
        ellipsoids
            .iter()
            .position(|x| x == e)
            .expect("registered above")
    };
    let out = regions
        .iter()
        .map(|region| match region {
            Region::Whole => region_measure(z, z_mom.clone(), shift, z),
            Region::Ellipsoid(e) => {
                let (m, mo) = &pieces[find(e)];
                region_measure(*m, mo.clone(), shift, z)
            }
            Region::Complement(es) => {
                let mut m = z;
                let mut mo = z_mom.clone();
                for e in es {
                    let (pm, pmo) = &pieces[find(e)];
                    m -= pm;
                    for (a, b) in mo.iter_mut().zip(pmo) {
                        *a -= b;
                    }
                }
                region_measure(m.max(0.0), mo, shift, z)
            }
        })
        .collect();
    let nodes = whole.grid.len() + polar.iter().map(|p| p.grid.len()).sum::<usize>();
    Ok(Measure {
        log_z: z.ln() + shift,
        regions: out,
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::{DoubleWell, Quadratic, RegularizedRisk};
    use crate::specfun;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use std::sync::Arc;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1, 2, 5, 10, 17] {
            let (x, w) = gauss_legendre(n);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
            // exact up to degree 2n - 1
            let deg = 2 * n - 1;
            let approx: f64 = x
                .iter()
                .zip(&w)
                .map(|(x, w)| w * x.powi(deg as i32 - 1))
                .sum();
            let exact = if (deg - 1) % 2 == 0 {
                2.0 / deg as f64
            } else {
                0.0
            };
            assert_relative_eq!(approx, exact, epsilon = 1e-13);
        }
    }

    #[test]
    fn composite_weights_sum_to_length() {
        let r = Rule1d::composite(-2.0, 3.0, &[-0.5, 0.25, 7.0], 0.13, 10).unwrap();
        assert_relative_eq!(r.weights.iter().sum::<f64>(), 5.0, max_relative = 1e-12);
        assert!(r.weights.iter().all(|w| *w > 0.0));
        let g = QuadratureGrid::tensor(&[r.clone(), r]);
        assert_relative_eq!(g.total_weight(), 25.0, max_relative = 1e-12);
    }

    #[test]
    fn gaussian_normalizer_on_wide_box() {
        let q = Quadratic::isotropic(1, 10.0).unwrap();
        let t = RegularizedRisk::new(Arc::new(q), 0.0).unwrap();
        let m = quadrature_measure(
            &t,
            1.0,
            &QuadratureSpec::new(1.0),
            &[],
            &[],
            ExecPolicy::Sequential,
        )
        .unwrap();
        assert_relative_eq!(m.log_z.exp(), (2.0 * PI).sqrt(), max_relative = 1e-8);
    }

    #[test]
    fn ball_mass_matches_regularized_gamma() {
        let q = Quadratic::isotropic(1, 10.0).unwrap();
        let t = RegularizedRisk::new(Arc::new(q), 0.0).unwrap();
        let ball =
            Region::Ellipsoid(EllipsoidSpec::new(vec![0.0], DMatrix::identity(1, 1), 1.3).unwrap());
        let m = quadrature_measure(
            &t,
            1.0,
            &QuadratureSpec::new(1.0),
            &[ball],
            &[],
            ExecPolicy::Sequential,
        )
        .unwrap();
        let p = specfun::regularized_gamma_p(0.5, 0.5 * 1.3 * 1.3).unwrap();
        assert_relative_eq!(m.regions[0].mass, p, max_relative = 1e-9);
    }

    #[test]
    fn double_well_partition_of_unity() {
        let dw = Arc::new(DoubleWell::new(1, 2.0).unwrap());
        let t = RegularizedRisk::new(dw, 0.0).unwrap();
        let metric = DMatrix::from_element(1, 1, 8.0);
        let es = vec![
            EllipsoidSpec::new(vec![-1.0], metric.clone(), 0.5).unwrap(),
            EllipsoidSpec::new(vec![1.0], metric, 0.5).unwrap(),
        ];
        let regions = vec![
            Region::Ellipsoid(es[0].clone()),
            Region::Ellipsoid(es[1].clone()),
            Region::Complement(es),
        ];
        let m = quadrature_measure(
            &t,
            100.0,
            &QuadratureSpec::new(8.0),
            &regions,
            &[],
            ExecPolicy::Parallel,
        )
        .unwrap();
        let total: f64 = m.regions.iter().map(|r| r.mass).sum();
        assert!((total - 1.0).abs() <= 1e-9);
        assert_relative_eq!(m.regions[0].mass, m.regions[1].mass, max_relative = 1e-10);
    }

    #[test]
    fn two_dimensional_polar_rule_matches_closed_form() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.4, 0.4, 1.0]);
        let q = Quadratic::new(
            a.clone(),
            vec![0.0, 0.0],
            0.0,
            DomainBox::cube(2, 6.0).unwrap(),
        )
        .unwrap();
        let t = RegularizedRisk::new(Arc::new(q), 0.0).unwrap();
        let e = EllipsoidSpec::new(vec![0.0, 0.0], a.clone(), 1.0).unwrap();
        let spec = QuadratureSpec::new(2.2);
        let m = quadrature_measure(
            &t,
            2.0,
            &spec,
            &[Region::Ellipsoid(e)],
            &[],
            ExecPolicy::Parallel,
        )
        .unwrap();
        let exact = specfun::gaussian_region_integral(2.0, 1.0, 2, Some(&a)).unwrap();
        assert_relative_eq!(m.regions[0].log_integral.exp(), exact, max_relative = 1e-8);
    }

    #[test]
    fn under_resolution_is_reported() {
        let q = Quadratic::isotropic(1, 10.0).unwrap();
        let t = RegularizedRisk::new(Arc::new(q), 0.0).unwrap();
        let mut spec = QuadratureSpec::new(1.0);
        spec.nodes_per_sd = 5.0;
        assert!(matches!(
            quadrature_measure(&t, 1.0, &spec, &[], &[], ExecPolicy::Sequential),
            Err(Error::Resolution { .. })
        ));
        // claiming a flat curvature at a huge γ leaves the well unresolved
        let mut spec = QuadratureSpec::new(1e-6);
        spec.min_panels = 1;
        spec.order = 2;
        assert!(matches!(
            quadrature_measure(&t, 1e4, &spec, &[], &[], ExecPolicy::Sequential),
            Err(Error::Resolution { .. })
        ));
    }

    #[test]
    fn policies_agree_bitwise() {
        let dw = Arc::new(DoubleWell::new(2, 2.0).unwrap());
        let t = RegularizedRisk::new(dw, 0.0).unwrap();
        let spec = QuadratureSpec::new(8.0);
        let a = quadrature_measure(
            &t,
            5.0,
            &spec,
            &[Region::Whole],
            &[&|w: &[f64]| w[0] * w[0]],
            ExecPolicy::Sequential,
        )
        .unwrap();
        let b = quadrature_measure(
            &t,
            5.0,
            &spec,
            &[Region::Whole],
            &[&|w: &[f64]| w[0] * w[0]],
            ExecPolicy::Parallel,
        )
        .unwrap();
        assert_eq!(a, b);
    }
}
