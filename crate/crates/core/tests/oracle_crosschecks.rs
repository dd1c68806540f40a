#![allow(clippy::needless_range_loop)]

use std::sync::Arc;

use approx::assert_relative_eq;
use gibbslab_core::bounds::{ellipsoid_mass_bounds, minima_distribution, tune_radius, GibbsConfig};
use gibbslab_core::landscape::{
    disjoint_radius, enumerate_minima, DomainBox, DoubleWell, Landscape, Quadratic,
    RegularizedRisk, SplineDoubleWell,
};
use gibbslab_core::oracle::{
    empirical_excess_risk, estimate_mean, gibbs_oracle, quadrature_measure, QuadratureSpec,
};
use gibbslab_core::sampler::{
    condition_on_region, sample_chain, sample_chains, ChainParams, Region, SamplerKind,
};
use gibbslab_core::specfun::{gaussian_region_integral, truncated_quadratic_moment};
use gibbslab_core::ExecPolicy;
use nalgebra::DMatrix;

#[test]
fn region_integral_matches_quadrature_up_to_three_dims() {
    for d in 1..=3 {
        let q = Quadratic::isotropic(d, 2.0).unwrap();
        let target = RegularizedRisk::new(Arc::new(q), 0.0).unwrap();
        let gamma = 2.0;
        let r = 1.1;
        let ball = Region::Ellipsoid(
            gibbslab_core::landscape::EllipsoidSpec::new(vec![0.0; d], DMatrix::identity(d, d), r)
                .unwrap(),
        );
        let spec = QuadratureSpec::new(1.0);
        let m =
            quadrature_measure(&target, gamma, &spec, &[ball], &[], ExecPolicy::Parallel).unwrap();
        let closed = gaussian_region_integral(gamma, r, d, None).unwrap();
        assert_relative_eq!(m.regions[0].log_integral.exp(), closed, max_relative = 1e-6);
    }
}

#[test]
fn quadrature_moments_match_truncated_gaussian_calculus() {
    let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
    let q: Arc<dyn Landscape> = Arc::new(
        Quadratic::new(
            a.clone(),
            vec![0.0, 0.0],
            0.0,
            DomainBox::cube(2, 3.0).unwrap(),
        )
        .unwrap(),
    );
    let minima = enumerate_minima(q.clone(), 0.0).unwrap();
    let gamma = 5.0;
    let r = 0.8;
    let o = gibbs_oracle(
        q,
        &minima,
        gamma,
        r,
        &QuadratureSpec::for_minima(&minima),
        ExecPolicy::Parallel,
    )
    .unwrap();
    // w ~ N(0, (γA)⁻¹) truncated to wᵀAw ≤ r², i.e. Mahalanobis radius r√γ
    let cov = (a.clone() * gamma).try_inverse().unwrap();
    let expected = 0.5 * truncated_quadratic_moment(&a, &cov, r * gamma.sqrt()).unwrap();
    assert_relative_eq!(o.conditional_excess[0], expected, max_relative = 1e-4);
}

#[test]
fn exact_gaussian_excess_matches_closed_form() {
    let q: Arc<dyn Landscape> = Arc::new(Quadratic::isotropic(1, 5.0).unwrap());
    let minima = enumerate_minima(q.clone(), 0.0).unwrap();
    let target = RegularizedRisk::new(q.clone(), 0.0).unwrap();
    let gamma = 10.0;
    let r = 0.4;
    let batch = sample_chain(
        &target,
        gamma,
        &ChainParams::new(SamplerKind::ExactGaussian, 50_000),
        17,
        0,
    )
    .unwrap();
    let cond = condition_on_region(&batch, &Region::Ellipsoid(minima[0].ellipsoid(r))).unwrap();
    let est = empirical_excess_risk(q.as_ref(), &minima[0], &cond, r).unwrap();
    let one = DMatrix::identity(1, 1);
    let closed =
        0.5 * truncated_quadratic_moment(&one, &(one.clone() / gamma), r * gamma.sqrt()).unwrap();
    assert!(
        (est.mean - closed).abs() <= 3.0 * est.std_error,
        "{est:?} vs {closed}"
    );
}

#[test]
fn monte_carlo_error_shrinks_at_root_n() {
    let q: Arc<dyn Landscape> = Arc::new(Quadratic::isotropic(1, 5.0).unwrap());
    let target = RegularizedRisk::new(q.clone(), 0.0).unwrap();
    let se = |n: usize| {
        let b = sample_chain(
            &target,
            4.0,
            &ChainParams::new(SamplerKind::ExactGaussian, n).with_burn_in(0),
            5,
            0,
        )
        .unwrap();
        let v: Vec<f64> = b.iter().map(|w| q.value(w)).collect();
        estimate_mean(&v).std_error
    };
    let ratio = se(10_000) / se(40_000);
    assert!((ratio - 2.0).abs() < 0.15, "ratio {ratio}");
}

#[test]
fn minima_distribution_dominates_quadrature_on_spline() {
    let s: Arc<dyn Landscape> = Arc::new(SplineDoubleWell::new(2.0, 8.0, 0.4, 2.0).unwrap());
    let minima = enumerate_minima(s.clone(), 0.0).unwrap();
    let r = 0.5 * disjoint_radius(&minima).unwrap();
    let spec = QuadratureSpec::for_minima(&minima);
    for gamma in [20.0, 100.0] {
        let o = gibbs_oracle(s.clone(), &minima, gamma, r, &spec, ExecPolicy::Parallel).unwrap();
        let c = GibbsConfig::new(gamma, 0.0, 100, s.loss_bound()).unwrap();
        let up = minima_distribution(&minima, &c, r).unwrap();
        for (p, u) in o.pi_gamma_r.iter().zip(&up.upper_raw) {
            assert!(p <= u, "γ={gamma}: {p} > {u}");
        }
    }
}

#[test]
fn ellipsoid_sandwich_on_double_well_point() {
    let dw: Arc<dyn Landscape> = Arc::new(DoubleWell::new(1, 2.0).unwrap());
    let minima = enumerate_minima(dw.clone(), 0.0).unwrap();
    let r = 0.3 * disjoint_radius(&minima).unwrap();
    let gamma = 50.0;
    let o = gibbs_oracle(
        dw.clone(),
        &minima,
        gamma,
        r,
        &QuadratureSpec::for_minima(&minima),
        ExecPolicy::Parallel,
    )
    .unwrap();
    let c = GibbsConfig::new(gamma, 0.0, 100, dw.loss_bound()).unwrap();
    for (m, mass) in minima.iter().zip(&o.ellipsoid_masses) {
        let b = ellipsoid_mass_bounds(m, &c, r, Some(o.log_z)).unwrap();
        assert!(b.lower_with_z.unwrap() <= *mass && *mass <= b.upper.unwrap());
    }
}

#[test]
fn symmetric_wells_split_samples_evenly() {
    let dw: Arc<dyn Landscape> = Arc::new(DoubleWell::new(1, 2.0).unwrap());
    let minima = enumerate_minima(dw.clone(), 0.0).unwrap();
    let target = RegularizedRisk::new(dw, 0.0).unwrap();
    let r = 0.5 * disjoint_radius(&minima).unwrap();
    let batches = sample_chains(
        &target,
        30.0,
        &ChainParams::new(SamplerKind::Metropolis, 100_000),
        9,
        8,
        ExecPolicy::Parallel,
    )
    .unwrap();
    let (mut left, mut right) = (0usize, 0usize);
    for b in &batches {
        left += condition_on_region(b, &Region::Ellipsoid(minima[0].ellipsoid(r)))
            .unwrap()
            .len();
        right += condition_on_region(b, &Region::Ellipsoid(minima[1].ellipsoid(r)))
            .unwrap()
            .len();
    }
    let frac = left as f64 / (left + right) as f64;
    assert!((frac - 0.5).abs() < 0.03, "left share {frac}");
}

/// Retained complement fraction of thinned Metropolis draws against the
/// quadrature complement mass along the tuned-radius sweep.
#[test]
fn complement_fraction_tracks_quadrature() {
    let dw: Arc<dyn Landscape> = Arc::new(DoubleWell::new(1, 2.0).unwrap());
    let minima = enumerate_minima(dw.clone(), 0.0).unwrap();
    let target = RegularizedRisk::new(dw.clone(), 0.0).unwrap();
    let spec = QuadratureSpec::for_minima(&minima);
    let thin = 50;
    let mut prev = f64::INFINITY;
    for gamma in [10.0, 100.0, 1e3, 1e4] {
        let r = tune_radius(gamma, 1.0 / 3.0).unwrap();
        let region = Region::Complement(minima.iter().map(|m| m.ellipsoid(r)).collect());
        let batches = sample_chains(
            &target,
            gamma,
            &ChainParams::new(SamplerKind::Metropolis, 250_000),
            21,
            8,
            ExecPolicy::Parallel,
        )
        .unwrap();
        let (mut hit, mut n) = (0usize, 0usize);
        for b in &batches {
            for w in b.iter().step_by(thin) {
                n += 1;
                hit += region.contains(w) as usize;
            }
        }
        let frac = hit as f64 / n as f64;
        assert!(
            frac <= prev,
            "γ={gamma}: retained fraction {frac} rose above {prev}"
        );
        prev = frac;
        if gamma <= 1e3 {
            let p = gibbs_oracle(dw.clone(), &minima, gamma, r, &spec, ExecPolicy::Parallel)
                .unwrap()
                .complement_mass;
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!(
                (frac - p).abs() <= 3.0 * sigma,
                "γ={gamma}: {frac} vs {p} ± {sigma}"
            );
        }
    }
}

/// Consecutive-state transitions between three bins of a reversible chain
/// occur equally often in both directions.
#[test]
fn metropolis_transitions_balance() {
    let dw: Arc<dyn Landscape> = Arc::new(DoubleWell::new(1, 2.0).unwrap());
    let target = RegularizedRisk::new(dw, 0.0).unwrap();
    let b = sample_chain(
        &target,
        3.0,
        &ChainParams::new(SamplerKind::Metropolis, 400_000),
        4,
        0,
    )
    .unwrap();
    let bin = |w: &[f64]| {
        if w[0] < -0.5 {
            0
        } else if w[0] <= 0.5 {
            1
        } else {
            2
        }
    };
    let mut counts = [[0f64; 3]; 3];
    let mut prev = bin(b.sample(0));
    for w in b.iter().skip(1) {
        let cur = bin(w);
        counts[prev][cur] += 1.0;
        prev = cur;
    }
    for i in 0..3 {
        for j in (i + 1)..3 {
            let (a, c) = (counts[i][j], counts[j][i]);
            assert!(a + c > 100.0);
            assert!(
                (a - c).abs() <= 3.0 * (a + c).sqrt(),
                "{i}->{j}: {a} vs {c}"
            );
        }
    }
}
