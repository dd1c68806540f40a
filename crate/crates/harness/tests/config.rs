use gibbslab::config::{
    DoubleWellParams, ExperimentConfig, LandscapeConfig, OracleConfig, OracleMethod,
    QuadraticParams, RadiusConfig, SamplerChoice, SamplerConfig, SweepConfig, Theorem, Variant,
};
use gibbslab::HarnessError;
use proptest::prelude::*;

fn finite(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    lo..hi
}

fn landscape() -> impl Strategy<Value = LandscapeConfig> {
    prop_oneof![
        (
            1usize..4,
            finite(1.5, 9.0),
            prop::option::of(prop::collection::vec(finite(0.1, 5.0), 3))
        )
            .prop_map(|(dim, half_width, diag)| LandscapeConfig::Quadratic(
                QuadraticParams {
                    dim,
                    half_width,
                    hessian_diag: diag.map(|d| d[..dim].to_vec()),
                }
            )),
        (1usize..4, finite(1.5, 4.0)).prop_map(|(dim, half_width)| LandscapeConfig::DoubleWell(
            DoubleWellParams { dim, half_width }
        )),
    ]
}

fn radius() -> impl Strategy<Value = RadiusConfig> {
    prop_oneof![
        prop::collection::vec(finite(0.01, 1.0), 1..4)
            .prop_map(|values| RadiusConfig::FractionOfR0 { values }),
        prop::collection::vec(finite(0.01, 0.3), 1..4)
            .prop_map(|values| RadiusConfig::Absolute { values }),
        prop::collection::vec(finite(0.01, 1.0 / 3.0), 1..3)
            .prop_map(|exponents| RadiusConfig::Tuned { exponents }),
    ]
}

fn config() -> impl Strategy<Value = ExperimentConfig> {
    (
        "[a-z][a-z0-9_-]{0,12}",
        any::<u64>(),
        prop::sample::subsequence(Theorem::ALL.to_vec(), 1..=7),
        landscape(),
        prop::collection::vec(finite(1e-3, 1e5), 1..4),
        prop::collection::vec(finite(0.0, 2.0), 1..3),
        prop::collection::vec(1u64..1_000_000, 1..3),
        radius(),
        prop::option::of(finite(0.01, 10.0)),
        (
            any::<bool>(),
            1000usize..50_000,
            prop::option::of(finite(1e-5, 1e-1)),
            2usize..16,
            50usize..400,
        ),
    )
        .prop_map(
            |(name, seed, theorems, landscape, gamma, lambda, m, radius, sigma, s)| {
                ExperimentConfig {
                    name,
                    master_seed: seed,
                    output_dir: None,
                    theorems,
                    landscape,
                    sweep: SweepConfig {
                        gamma,
                        lambda,
                        m,
                        radius,
                        variants: vec![Variant::Theorem, Variant::HoeffdingStated],
                        sigma,
                    },
                    sampler: SamplerConfig {
                        kind: if s.0 {
                            SamplerChoice::Metropolis
                        } else {
                            SamplerChoice::Sgld
                        },
                        step_size: s.2,
                        steps: s.1,
                        burn_in: None,
                        chains: s.3,
                        trials: s.4,
                    },
                    oracle: OracleConfig {
                        method: OracleMethod::Auto,
                        nodes_per_sd: 20.0,
                        richardson: true,
                    },
                }
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn toml_round_trip_is_identity(cfg in config()) {
        let text = cfg.to_toml_string().unwrap();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_toml_string().unwrap(), text);
        let json: ExperimentConfig = serde_json::from_str(&cfg.to_canonical_json()).unwrap();
        prop_assert_eq!(json, cfg);
    }
}

const BASE: &str = r#"
name = "t"
master_seed = 3
theorems = ["local"]

[landscape]
kind = "double_well"
dim = 1
half_width = 2.0

[sweep]
gamma = [10.0]
m = [100]
radius = { kind = "fraction_of_r0", values = [0.5] }
"#;

#[test]
fn defaults_are_filled_in() {
    let cfg = ExperimentConfig::from_toml_str(BASE).unwrap();
    assert_eq!(cfg.sweep.lambda, vec![0.0]);
    assert_eq!(cfg.sweep.variants, vec![Variant::HoeffdingStated]);
    assert_eq!(cfg.sampler, SamplerConfig::default());
    assert_eq!(cfg.oracle, OracleConfig::default());
}

#[test]
fn unknown_keys_are_errors() {
    for (from, to) in [
        ("master_seed = 3", "master_seed = 3\ngama = 1.0"),
        ("half_width = 2.0", "half_width = 2.0\nwidth = 3.0"),
        ("m = [100]", "m = [100]\nlamda = [0.1]"),
        ("values = [0.5] }", "values = [0.5], extra = 1 }"),
    ] {
        let text = BASE.replace(from, to);
        assert!(
            matches!(
                ExperimentConfig::from_toml_str(&text),
                Err(HarnessError::Config(_))
            ),
            "{to}"
        );
    }
}

#[test]
fn full_range_seeds_round_trip() {
    let mut cfg = ExperimentConfig::from_toml_str(BASE).unwrap();
    cfg.master_seed = u64::MAX;
    let text = cfg.to_toml_string().unwrap();
    assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
    let json: ExperimentConfig = serde_json::from_str(&cfg.to_canonical_json()).unwrap();
    assert_eq!(json.master_seed, u64::MAX);
}

#[test]
fn missing_seed_is_an_error() {
    let text = BASE.replace("master_seed = 3\n", "");
    assert!(matches!(
        ExperimentConfig::from_toml_str(&text),
        Err(HarnessError::Config(_))
    ));
}

#[test]
fn validation_lists_every_violation() {
    let text = BASE
        .replace("gamma = [10.0]", "gamma = [-1.0]")
        .replace("m = [100]", "m = [0]")
        .replace("values = [0.5]", "values = [1.5]")
        .replace("theorems = [\"local\"]", "theorems = []");
    let Err(HarnessError::Config(errs)) = ExperimentConfig::from_toml_str(&text) else {
        panic!("expected config error")
    };
    let joined = errs.join("\n");
    for field in ["theorems", "sweep.gamma", "sweep.m", "sweep.radius.values"] {
        assert!(joined.contains(field), "{field} missing from {joined}");
    }
}

#[test]
fn data_models_reject_population_only_theorems() {
    let text = r#"
name = "rls"
master_seed = 1
theorems = ["global", "generalization"]
[landscape]
kind = "rls"
w0 = [0.5]
noise = 0.2
[sweep]
gamma = [1.0]
m = [10]
radius = { kind = "fraction_of_r0", values = [0.5] }
"#;
    let Err(HarnessError::Config(errs)) = ExperimentConfig::from_toml_str(text) else {
        panic!()
    };
    assert_eq!(errs.len(), 1);
    assert!(errs[0].contains("global"));
}

#[test]
fn radius_above_r0_is_a_config_error() {
    let text = BASE.replace(
        "radius = { kind = \"fraction_of_r0\", values = [0.5] }",
        "radius = { kind = \"absolute\", values = [5.0] }",
    );
    let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
    assert!(matches!(
        gibbslab::evaluate(&cfg),
        Err(HarnessError::Config(_))
    ));
}
