use std::sync::Arc;

use crate::bounds::GibbsConfig;
use crate::error::{Error, Result};
use crate::exec::ExecPolicy;
use crate::landscape::{
    disjoint_radius, sample_dataset, DataModel, EmpiricalRisk, Landscape, MinimumDescriptor,
    RegularizedRisk,
};
use crate::sampler::{chain_seed, sample_chain, ChainBatch, ChainParams, Region};

use super::quadrature::{quadrature_measure, Integrand, QuadratureSpec};

/// Mean with its standard error; the reported interval is `mean ± 2·std_error`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

impl Estimate {
    pub fn half_width(&self) -> f64 {
        2.0 * self.std_error
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.half_width()
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.half_width()
    }
}

/// Sample mean and `sd/√n` (treats values as independent).
pub fn estimate_mean(values: &[f64]) -> Estimate {
    let n = values.len();
    if n == 0 {
        return Estimate {
            mean: f64::NAN,
            std_error: f64::NAN,
            n,
        };
    }
    let mean = crate::exec::pairwise_sum(values) / n as f64;
    let var = if n > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    Estimate {
        mean,
        std_error: (var / n as f64).sqrt(),
        n,
    }
}

/// Mean of `R(w) - R(w*_λ)` over a batch conditioned on `𝓔*(r)` of `minimum`.
/// The interval assumes independent samples, which holds for exact draws.
pub fn empirical_excess_risk(
    landscape: &dyn Landscape,
    minimum: &MinimumDescriptor,
    batch: &ChainBatch,
    r: f64,
) -> Result<Estimate> {
    let cond = batch.conditioning.as_ref().ok_or_else(|| {
        Error::Contract("excess risk needs a batch conditioned on the minimum's ellipsoid".into())
    })?;
    match &cond.region {
        Region::Ellipsoid(e) if e.center == minimum.location && e.radius == r => {}
        _ => {
            return Err(Error::Contract(format!(
                "batch is not conditioned on the ellipsoid of radius {r} around minimum {}",
                minimum.index
            )))
        }
    }
    let values: Vec<f64> = batch
        .iter()
        .map(|w| landscape.value(w) - minimum.risk)
        .collect();
    Ok(estimate_mean(&values))
}

/// Trial count, per-trial chain and execution policy for [`empirical_generalization_gap`].
#[derive(Debug, Clone, PartialEq)]
pub struct GapParams {
    pub trials: usize,
    pub chain: ChainParams,
    pub policy: ExecPolicy,
}

type BoxedIntegrand = Box<dyn Fn(&[f64]) -> f64 + Sync>;

const DATA_STREAM: u64 = 0x5851_F42D_4C95_7F2D;

/// Cross-trial estimate of `E_S E_{p̂}[R(w) - R̂_S(w)]`: each trial draws a fresh
/// sample of size `m`, runs one chain on `R̂_{S,λ}` and averages the gap over
/// its draws.
pub fn empirical_generalization_gap(
    model: Arc<dyn DataModel>,
    config: &GibbsConfig,
    params: &GapParams,
    master_seed: u64,
) -> Result<Estimate> {
    config.validate()?;
    if params.trials < 50 {
        return Err(Error::Argument(format!(
            "need at least 50 trials, got {}",
            params.trials
        )));
    }
    let m = usize::try_from(config.m)
        .map_err(|_| Error::Argument("sample size does not fit in memory".into()))?;
    let landscape = model.landscape();
    let per_trial: Vec<f64> = params
        .policy
        .map_range(params.trials, |t| {
            let sample = sample_dataset(
                model.as_ref(),
                m,
                chain_seed(master_seed ^ DATA_STREAM, t as u64),
            );
            let er = EmpiricalRisk::new(model.clone(), sample, config.lambda)?;
            let batch = sample_chain(&er, config.gamma, &params.chain, master_seed, t as u64)?;
            let gaps: Vec<f64> = batch
                .iter()
                .map(|w| landscape.value(w) - er.empirical_risk(w))
                .collect();
            Ok(crate::exec::pairwise_sum(&gaps) / gaps.len() as f64)
        })
        .into_iter()
        .collect::<Result<_>>()?;
    Ok(estimate_mean(&per_trial))
}

/// Quadrature ground truth for the population Gibbs measure `∝ e^{-γR_λ}`
/// around a set of minima at radius `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsOracle {
    pub log_z: f64,
    /// `P_γ(𝓔*_i(r))` in the order of the minima.
    pub ellipsoid_masses: Vec<f64>,
    pub complement_mass: f64,
    /// `E[R(w) - R(w*_i) | w ∈ 𝓔*_i(r)]`.
    pub conditional_excess: Vec<f64>,
    /// Ellipsoid masses renormalized over the minima: `π_γ,r`.
    pub pi_gamma_r: Vec<f64>,
    /// `E_{p_γ}[R] - Σ_i π_γ,r(i) R(w*_i)`.
    pub global_excess: f64,
    pub nodes: usize,
}

impl GibbsOracle {
    /// `Σ_i weights_i · E[R - R(w*_i) | 𝓔*_i(r)]`.
    pub fn weighted_excess(&self, weights: &[f64]) -> f64 {
        weights
            .iter()
            .zip(&self.conditional_excess)
            .map(|(w, e)| if *w == 0.0 { 0.0 } else { w * e })
            .sum()
    }
}

/// Runs [`quadrature_measure`] on `R_λ` with the ellipsoids of all `minima`,
/// their complement and the whole box.
pub fn gibbs_oracle(
    landscape: Arc<dyn Landscape>,
    minima: &[MinimumDescriptor],
    gamma: f64,
    r: f64,
    spec: &QuadratureSpec,
    policy: ExecPolicy,
) -> Result<GibbsOracle> {
    let first = minima
        .first()
        .ok_or_else(|| Error::Argument("oracle needs at least one minimum".into()))?;
    let r0 = disjoint_radius(minima)?;
    if r > r0 * (1.0 + 1e-12) {
        return Err(Error::Radius { r, r0 });
    }
    let target = RegularizedRisk::new(landscape.clone(), first.lambda)?;
    let ellipsoids: Vec<_> = minima.iter().map(|m| m.ellipsoid(r)).collect();
    let mut regions: Vec<Region> = ellipsoids.iter().cloned().map(Region::Ellipsoid).collect();
    regions.push(Region::Complement(ellipsoids));
    regions.push(Region::Whole);
    let risk = |w: &[f64]| landscape.value(w);
    let excess: Vec<BoxedIntegrand> = minima
        .iter()
        .map(|m| {
            let base = m.risk;
            let l = landscape.clone();
            Box::new(move |w: &[f64]| l.value(w) - base) as BoxedIntegrand
        })
        .collect();
    let mut integrands: Vec<Integrand> = vec![&risk];
    integrands.extend(excess.iter().map(|b| b.as_ref() as Integrand));
    let measure = quadrature_measure(&target, gamma, spec, &regions, &integrands, policy)?;
    let n = minima.len();
    let masses: Vec<f64> = measure.regions[..n].iter().map(|r| r.mass).collect();
    let conditional_excess: Vec<f64> = (0..n).map(|i| measure.regions[i].moments[1 + i]).collect();
    let total: f64 = masses.iter().sum();
    let pi: Vec<f64> = masses.iter().map(|m| m / total).collect();
    let expected_risk = measure.regions[n + 1].moments[0];
    let global_excess = expected_risk - pi.iter().zip(minima).map(|(p, m)| p * m.risk).sum::<f64>();
    Ok(GibbsOracle {
        log_z: measure.log_z,
        complement_mass: measure.regions[n].mass,
        ellipsoid_masses: masses,
        conditional_excess,
        pi_gamma_r: pi,
        global_excess,
        nodes: measure.nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::{enumerate_minima, DeterministicModel, DoubleWell, Quadratic};
    use crate::sampler::{condition_on_region, SamplerKind};

    #[test]
    fn excess_at_the_minimum_is_zero() {
        let q: Arc<dyn Landscape> = Arc::new(Quadratic::isotropic(1, 5.0).unwrap());
        let m = enumerate_minima(q.clone(), 0.0).unwrap();
        let t = RegularizedRisk::new(q.clone(), 0.0).unwrap();
        let p = ChainParams::new(SamplerKind::Sgld, 300)
            .with_step_size(0.5)
            .with_start(vec![0.0])
            .with_burn_in(0);
        let b = sample_chain(&t, f64::INFINITY, &p, 0, 0).unwrap();
        let c = condition_on_region(&b, &Region::Ellipsoid(m[0].ellipsoid(1.0))).unwrap();
        let e = empirical_excess_risk(q.as_ref(), &m[0], &c, 1.0).unwrap();
        assert_eq!(e.mean, 0.0);
        assert!(matches!(
            empirical_excess_risk(q.as_ref(), &m[0], &b, 1.0),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn deterministic_loss_has_no_gap() {
        let dw: Arc<dyn Landscape> = Arc::new(Quadratic::isotropic(1, 3.0).unwrap());
        let model: Arc<dyn DataModel> = Arc::new(DeterministicModel::new(dw));
        let config = GibbsConfig::new(5.0, 0.0, 20, 4.5).unwrap();
        let params = GapParams {
            trials: 50,
            chain: ChainParams::new(SamplerKind::ExactGaussian, 200),
            policy: ExecPolicy::Parallel,
        };
        let g = empirical_generalization_gap(model, &config, &params, 1).unwrap();
        assert!(g.mean.abs() <= 1e-12);
    }

    #[test]
    fn oracle_partitions_the_box() {
        let dw: Arc<dyn Landscape> = Arc::new(DoubleWell::new(1, 2.0).unwrap());
        let m = enumerate_minima(dw.clone(), 0.0).unwrap();
        let o = gibbs_oracle(
            dw,
            &m,
            50.0,
            1.0,
            &QuadratureSpec::for_minima(&m),
            ExecPolicy::Parallel,
        )
        .unwrap();
        let s: f64 = o.ellipsoid_masses.iter().sum::<f64>() + o.complement_mass;
        assert!((s - 1.0).abs() < 1e-9);
        assert!((o.pi_gamma_r[0] - 0.5).abs() < 1e-10);
        assert!(o.conditional_excess.iter().all(|e| *e > 0.0));
    }
}
