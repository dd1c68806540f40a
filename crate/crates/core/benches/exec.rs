use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gibbslab_core::bounds::GibbsConfig;
use gibbslab_core::landscape::{
    enumerate_minima, DataModel, DoubleWell, Landscape, RegularizedRisk, RlsModel,
};
use gibbslab_core::oracle::{
    empirical_generalization_gap, gibbs_oracle, GapParams, QuadratureSpec,
};
use gibbslab_core::sampler::{sample_chains, ChainParams, SamplerKind};
use gibbslab_core::ExecPolicy;

const POLICIES: [(&str, ExecPolicy); 2] = [
    ("sequential", ExecPolicy::Sequential),
    ("parallel", ExecPolicy::Parallel),
];

fn quadrature(c: &mut Criterion) {
    let dw: Arc<dyn Landscape> = Arc::new(DoubleWell::new(2, 2.0).unwrap());
    let minima = enumerate_minima(dw.clone(), 0.0).unwrap();
    let spec = QuadratureSpec::for_minima(&minima);
    let mut group = c.benchmark_group("quadrature_2d_double_well");
    group.sample_size(10);
    for (name, policy) in POLICIES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &policy, |b, &p| {
            b.iter(|| gibbs_oracle(dw.clone(), &minima, 100.0, 0.2, &spec, p).unwrap())
        });
    }
    group.finish();
}

fn chains(c: &mut Criterion) {
    let dw: Arc<dyn Landscape> = Arc::new(DoubleWell::new(3, 2.0).unwrap());
    let target = RegularizedRisk::new(dw, 0.05).unwrap();
    let params = ChainParams::new(SamplerKind::Sgld, 20_000);
    let mut group = c.benchmark_group("sgld_16_chains");
    group.sample_size(10);
    for (name, policy) in POLICIES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &policy, |b, &p| {
            b.iter(|| sample_chains(&target, 50.0, &params, 7, 16, p).unwrap())
        });
    }
    group.finish();
}

fn generalization_gap(c: &mut Criterion) {
    let model = Arc::new(RlsModel::new(vec![0.3, -0.2], 0.2).unwrap());
    let m_bound = model.landscape().loss_bound();
    let config = GibbsConfig::new(50.0, 0.1, 100, m_bound).unwrap();
    let mut group = c.benchmark_group("rls_gap_200_trials");
    group.sample_size(10);
    for (name, policy) in POLICIES {
        let params = GapParams {
            trials: 200,
            chain: ChainParams::new(SamplerKind::ExactGaussian, 500),
            policy,
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &params, |b, p| {
            b.iter(|| empirical_generalization_gap(model.clone(), &config, p, 11).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, quadrature, chains, generalization_gap);
criterion_main!(benches);
