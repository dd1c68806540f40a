//! Draws from the Gibbs density `∝ e^{-γF(w)}` restricted to the domain box,
//! where `F` is a regularized empirical or population risk.
//!
//! Three kinds are provided: full-gradient SGLD (approximate, unrestricted),
//! a Metropolis chain (exact for the box-restricted target) and i.i.d. draws
//! for constant-Hessian risks (exact Gaussian, rejected to the box).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::exec::ExecPolicy;
use crate::landscape::{EllipsoidSpec, Objective};
use crate::linalg;

const DIVERGENCE_WIDTHS: f64 = 10.0;
const MIN_RETAINED: usize = 100;
const MAX_REJECTIONS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    Sgld,
    Metropolis,
    ExactGaussian,
}

impl SamplerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SamplerKind::Sgld => "sgld",
            SamplerKind::Metropolis => "metropolis",
            SamplerKind::ExactGaussian => "exact_gaussian",
        }
    }
}

/// Chain settings. Unset step size and burn-in take their defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainParams {
    pub kind: SamplerKind,
    pub steps: usize,
    /// Discarded leading steps; defaults to 20% of `steps`.
    pub burn_in: Option<usize>,
    /// SGLD `η`, or the Metropolis random-walk scale.
    pub step_size: Option<f64>,
    /// Metropolis probability of proposing uniformly over the box instead of a local move.
    pub jump_probability: f64,
    pub start: Option<Vec<f64>>,
}

impl ChainParams {
    pub fn new(kind: SamplerKind, steps: usize) -> Self {
        Self {
            kind,
            steps,
            burn_in: None,
            step_size: None,
            jump_probability: 0.1,
            start: None,
        }
    }

    pub fn with_step_size(mut self, eta: f64) -> Self {
        self.step_size = Some(eta);
        self
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = Some(burn_in);
        self
    }

    pub fn with_start(mut self, start: Vec<f64>) -> Self {
        self.start = Some(start);
        self
    }

    pub fn with_jump_probability(mut self, p: f64) -> Self {
        self.jump_probability = p;
        self
    }

    pub fn resolved_burn_in(&self) -> usize {
        self.burn_in.unwrap_or(self.steps / 5)
    }
}

/// A subset of the domain used for conditioning.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Whole,
    Ellipsoid(EllipsoidSpec),
    /// Outside every listed ellipsoid.
    Complement(Vec<EllipsoidSpec>),
}

impl Region {
    pub fn contains(&self, w: &[f64]) -> bool {
        match self {
            Region::Whole => true,
            Region::Ellipsoid(e) => e.contains(w),
            Region::Complement(es) => es.iter().all(|e| !e.contains(w)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conditioning {
    pub region: Region,
    /// Retained / original sample count: an empirical region-mass estimate.
    pub retained_fraction: f64,
    pub original_len: usize,
}

/// Samples from one chain with the metadata needed to reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainBatch {
    pub kind: SamplerKind,
    pub master_seed: u64,
    pub chain_id: u64,
    pub step_size: f64,
    pub burn_in: usize,
    pub steps: usize,
    pub acceptance_rate: Option<f64>,
    pub conditioning: Option<Conditioning>,
    dim: usize,
    samples: Vec<f64>,
}

impl ChainBatch {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.samples[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.chunks_exact(self.dim)
    }

    pub fn raw(&self) -> &[f64] {
        &self.samples
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-chain seed: `splitmix64(splitmix64(master_seed) ^ chain_id)`.
pub fn chain_seed(master_seed: u64, chain_id: u64) -> u64 {
    splitmix64(splitmix64(master_seed) ^ chain_id)
}

fn check_gamma(kind: SamplerKind, gamma: f64) -> Result<()> {
    let ok = gamma > 0.0 && (gamma.is_finite() || kind == SamplerKind::Sgld);
    if ok {
        Ok(())
    } else {
        Err(Error::Argument(format!(
            "{} needs a positive finite gamma, got {gamma}",
            kind.as_str()
        )))
    }
}

fn start_curvature(target: &dyn Objective, start: &[f64]) -> f64 {
    let c = linalg::sym_spectral_norm(&target.jet(start).hessian);
    if c > 0.0 && c.is_finite() {
        c
    } else {
        1.0
    }
}

/// Runs one chain of `params.steps` steps and keeps the last `steps - burn_in`.
pub fn sample_chain(
    target: &dyn Objective,
    gamma: f64,
    params: &ChainParams,
    master_seed: u64,
    chain_id: u64,
) -> Result<ChainBatch> {
    check_gamma(params.kind, gamma)?;
    let burn_in = params.resolved_burn_in();
    if params.steps <= burn_in {
        return Err(Error::Argument(format!(
            "steps ({}) must exceed burn-in ({burn_in})",
            params.steps
        )));
    }
    if let Some(eta) = params.step_size {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::Argument(format!(
                "step size must be positive, got {eta}"
            )));
        }
    }
    let start = params.start.clone().unwrap_or_else(|| target.start());
    if start.len() != target.dim() {
        return Err(Error::Argument(
            "chain start has the wrong dimension".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(chain_seed(master_seed, chain_id));
    let (samples, step_size, acceptance_rate) = match params.kind {
        SamplerKind::Sgld => {
            let (s, eta) = run_sgld(target, gamma, params, &start, burn_in, &mut rng)?;
            (s, eta, None)
        }
        SamplerKind::Metropolis => {
            let (s, scale, acc) = run_metropolis(target, gamma, params, &start, burn_in, &mut rng)?;
            (s, scale, Some(acc))
        }
        SamplerKind::ExactGaussian => (
            run_exact(target, gamma, params, &start, burn_in, &mut rng)?,
            0.0,
            None,
        ),
    };
    Ok(ChainBatch {
        kind: params.kind,
        master_seed,
        chain_id,
        step_size,
        burn_in,
        steps: params.steps,
        acceptance_rate,
        conditioning: None,
        dim: target.dim(),
        samples,
    })
}

/// Independent chains `0..chains`, run concurrently under `policy`.
pub fn sample_chains(
    target: &dyn Objective,
    gamma: f64,
    params: &ChainParams,
    master_seed: u64,
    chains: usize,
    policy: ExecPolicy,
) -> Result<Vec<ChainBatch>> {
    policy
        .map_range(chains, |c| {
            sample_chain(target, gamma, params, master_seed, c as u64)
        })
        .into_iter()
        .collect()
}

/// `w ← w - η∇F(w) + √(2η/γ) ξ`. The default `η = 0.5/(λ_max · max(γ, 1))`
/// with `λ_max` the Hessian spectral norm at the start.
fn run_sgld(
    target: &dyn Objective,
    gamma: f64,
    params: &ChainParams,
    start: &[f64],
    burn_in: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, f64)> {
    let d = target.dim();
    let eta = params.step_size.unwrap_or_else(|| {
        let g = if gamma.is_finite() {
            gamma.max(1.0)
        } else {
            1.0
        };
        0.5 / (start_curvature(target, start) * g)
    });
    let noise = (2.0 * eta / gamma).sqrt();
    let domain = target.domain();
    let slack: Vec<f64> = (0..d)
        .map(|k| DIVERGENCE_WIDTHS * (domain.hi()[k] - domain.lo()[k]))
        .collect();
    let mut w = start.to_vec();
    let mut grad = vec![0.0; d];
    let mut out = Vec::with_capacity((params.steps - burn_in) * d);
    for step in 0..params.steps {
        target.value_grad(&w, &mut grad);
        for k in 0..d {
            let xi: f64 = rng.sample(StandardNormal);
            w[k] += -eta * grad[k] + noise * xi;
        }
        let escaped = (0..d).any(|k| {
            !w[k].is_finite()
                || w[k] < domain.lo()[k] - slack[k]
                || w[k] > domain.hi()[k] + slack[k]
        });
        if escaped {
            return Err(Error::Divergence {
                step_size: eta,
                step,
            });
        }
        if step >= burn_in {
            out.extend_from_slice(&w);
        }
    }
    Ok((out, eta))
}

/// Random-walk Metropolis mixed with uniform-over-box independence proposals.
/// Both proposals are symmetric, so acceptance `min(1, e^{-γΔF})` targets the
/// box-restricted Gibbs density exactly.
fn run_metropolis(
    target: &dyn Objective,
    gamma: f64,
    params: &ChainParams,
    start: &[f64],
    burn_in: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, f64, f64)> {
    let d = target.dim();
    let domain = target.domain();
    if !domain.contains(start) {
        return Err(Error::Domain {
            point: start.to_vec(),
        });
    }
    let jump = params.jump_probability;
    if !(0.0..=1.0).contains(&jump) {
        return Err(Error::Argument(format!(
            "jump probability must be in [0, 1], got {jump}"
        )));
    }
    let scale = params
        .step_size
        .unwrap_or_else(|| 2.38 / (d as f64 * gamma * start_curvature(target, start)).sqrt());
    let mut w = start.to_vec();
    let mut f = target.value(&w);
    let mut prop = vec![0.0; d];
    let mut accepted = 0usize;
    let mut out = Vec::with_capacity((params.steps - burn_in) * d);
    for step in 0..params.steps {
        if rng.random::<f64>() < jump {
            for k in 0..d {
                prop[k] = rng.random_range(domain.lo()[k]..=domain.hi()[k]);
            }
        } else {
            for k in 0..d {
                let xi: f64 = rng.sample(StandardNormal);
                prop[k] = w[k] + scale * xi;
            }
        }
        let u: f64 = rng.random();
        if domain.contains(&prop) {
            let fp = target.value(&prop);
            if u.ln() < -gamma * (fp - f) {
                w.copy_from_slice(&prop);
                f = fp;
                accepted += 1;
            }
        }
        if step >= burn_in {
            out.extend_from_slice(&w);
        }
    }
    Ok((out, scale, accepted as f64 / params.steps as f64))
}

/// I.i.d. `N(ŵ, (γĤ)⁻¹)` draws rejected to the box, for constant-Hessian `F`.
fn run_exact(
    target: &dyn Objective,
    gamma: f64,
    params: &ChainParams,
    start: &[f64],
    burn_in: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    if !target.hessian_is_constant() {
        return Err(Error::Kind(
            "exact_gaussian needs a constant-Hessian risk".into(),
        ));
    }
    let d = target.dim();
    let jet = target.jet(start);
    let chol =
        jet.hessian.clone().cholesky().ok_or_else(|| {
            Error::Kind("exact_gaussian needs a positive definite Hessian".into())
        })?;
    let g = DVector::from_column_slice(&jet.gradient);
    let mean: Vec<f64> = start
        .iter()
        .zip(chol.solve(&g).iter())
        .map(|(s, st)| s - st)
        .collect();
    // w = ŵ + L⁻ᵀz/√γ has covariance (γLLᵀ)⁻¹
    let lt_inv: DMatrix<f64> = chol
        .l()
        .transpose()
        .try_inverse()
        .expect("triangular factor is invertible");
    let sd = 1.0 / gamma.sqrt();
    let domain = target.domain();
    let mut out = Vec::with_capacity((params.steps - burn_in) * d);
    let mut w = vec![0.0; d];
    for step in 0..params.steps {
        let mut tries = 0usize;
        loop {
            let z = DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
            let dw = &lt_inv * z;
            for k in 0..d {
                w[k] = mean[k] + sd * dw[k];
            }
            if domain.contains(&w) {
                break;
            }
            tries += 1;
            if tries >= MAX_REJECTIONS {
                return Err(Error::Kind(
                    "exact_gaussian: the box holds almost no Gaussian mass".into(),
                ));
            }
        }
        if step >= burn_in {
            out.extend_from_slice(&w);
        }
    }
    Ok(out)
}

/// Keeps the samples inside `region` in order, recording the retained fraction.
pub fn condition_on_region(batch: &ChainBatch, region: &Region) -> Result<ChainBatch> {
    if batch.is_empty() {
        return Err(Error::Argument("cannot condition an empty batch".into()));
    }
    let mut samples = Vec::new();
    for w in batch.iter() {
        if region.contains(w) {
            samples.extend_from_slice(w);
        }
    }
    let retained = samples.len() / batch.dim;
    if retained < MIN_RETAINED {
        return Err(Error::InsufficientConditioning {
            retained,
            required: MIN_RETAINED,
        });
    }
    let original_len = batch.len();
    Ok(ChainBatch {
        samples,
        conditioning: Some(Conditioning {
            region: region.clone(),
            retained_fraction: retained as f64 / original_len as f64,
            original_len,
        }),
        ..batch.clone()
    })
}

/// Count, mean and covariance over the pooled samples of several chains.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStats {
    pub count: usize,
    pub mean: Vec<f64>,
    pub covariance: DMatrix<f64>,
}

/// Pooled statistics; chains are visited in `chain_id` order so the result does
/// not depend on the order batches are supplied in.
pub fn merged_stats(batches: &[ChainBatch]) -> Result<SampleStats> {
    let first = batches
        .first()
        .ok_or_else(|| Error::Argument("no batches to merge".into()))?;
    let d = first.dim;
    if batches.iter().any(|b| b.dim != d) {
        return Err(Error::Argument("batches have different dimensions".into()));
    }
    let mut order: Vec<&ChainBatch> = batches.iter().collect();
    order.sort_by_key(|b| b.chain_id);
    let count: usize = order.iter().map(|b| b.len()).sum();
    if count == 0 {
        return Err(Error::Argument("no samples to merge".into()));
    }
    let mut mean = vec![0.0; d];
    for b in &order {
        for w in b.iter() {
            for k in 0..d {
                mean[k] += w[k];
            }
        }
    }
    mean.iter_mut().for_each(|m| *m /= count as f64);
    let mut cov = DMatrix::zeros(d, d);
    for b in &order {
        for w in b.iter() {
            for i in 0..d {
                for j in 0..d {
                    cov[(i, j)] += (w[i] - mean[i]) * (w[j] - mean[j]);
                }
            }
        }
    }
    cov /= (count.max(2) - 1) as f64;
    Ok(SampleStats {
        count,
        mean,
        covariance: cov,
    })
}
