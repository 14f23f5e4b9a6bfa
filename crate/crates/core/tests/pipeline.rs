use bns_core::classify::{ModelKind, REPORT_ROWS};
use bns_core::features::{CrashGate, IndexRange, VolatilityParams};
use bns_core::hedging::{EuropeanOption, HedgeSetup, OptionKind, StableAssetParams};
use bns_core::levy::SubordinatorSpec;
use bns_core::model::{synth_series, DriftMode, ModelParams, Subordinators};
use bns_core::pipeline::{compare_hedging, run_experiment, Approach, ExperimentSpec};
use bns_core::varswap::VarSwapContract;
use bns_core::Error;
use chrono::NaiveDate;

fn params(theta: f64) -> ModelParams {
    ModelParams {
        rho: -2.0,
        lambda: 1.5,
        theta,
        r: 0.02,
        sigma0_sq: 0.04,
        s0: 100.0,
        horizon_t: 1.0,
        drift_mode: DriftMode::Compensated,
    }
}

fn regime_spec() -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(Approach::Volatility, IndexRange::new(100, 400), IndexRange::new(441, 560));
    spec.volatility = VolatilityParams {
        window: 20,
        gate: CrashGate::Absolute(50.0),
    };
    spec.seed = 5;
    spec
}

fn series(subs: Subordinators, theta: f64, seed: u64) -> bns_core::features::PriceSeries {
    series_with(params(theta), subs, seed)
}

fn series_with(p: ModelParams, subs: Subordinators, seed: u64) -> bns_core::features::PriceSeries {
    synth_series(&p, &subs, 600, seed, NaiveDate::from_ymd_opt(2012, 4, 4).unwrap()).unwrap()
}

fn mean_predicted_theta(p: ModelParams, subs: Subordinators) -> f64 {
    let spec = regime_spec();
    let total: f64 = (1..=5u64)
        .map(|seed| run_experiment(&spec, &series_with(p, subs, seed)).unwrap().predicted_theta)
        .sum();
    total / 5.0
}

#[test]
fn jump_regime_separates_from_calm_regime() {
    let p = ModelParams {
        lambda: 30.0,
        ..params(1.0)
    };
    let jumpy = mean_predicted_theta(p, Subordinators::new(SubordinatorSpec::null(), SubordinatorSpec::new(1.0, 5.0).unwrap()));
    let calm = mean_predicted_theta(p, Subordinators::new(SubordinatorSpec::null(), SubordinatorSpec::null()));
    assert!(calm < 0.1, "calm {calm}");
    assert!(jumpy > calm + 0.3, "jumpy {jumpy} calm {calm}");
}

#[test]
fn empty_model_set_is_an_error() {
    let mut spec = regime_spec();
    spec.models.clear();
    let subs = Subordinators::new(SubordinatorSpec::null(), SubordinatorSpec::null());
    assert!(matches!(run_experiment(&spec, &series(subs, 0.0, 1)), Err(Error::EmptyModelSet)));
}

#[test]
fn reference_split_produces_the_report_shape() {
    let spec = ExperimentSpec {
        seed: 2,
        ..ExperimentSpec::new(Approach::Duration, IndexRange::new(200, 300), IndexRange::new(301, 320))
    };
    let subs = Subordinators::new(SubordinatorSpec::new(3.0, 30.0).unwrap(), SubordinatorSpec::new(1.0, 8.0).unwrap());
    let s = series(subs, 0.5, 3);
    let out = run_experiment(&spec, &s).unwrap();
    assert_eq!(out.test_rows, 20);
    let rows = out.table().rows();
    assert_eq!(rows.len(), REPORT_ROWS.len());
    assert!(rows.iter().all(|(_, cells)| cells.len() == 2));
    assert_eq!(out.outcomes.iter().map(|o| o.kind).collect::<Vec<_>>(), vec![ModelKind::Lr, ModelKind::Mlp]);
    assert_eq!(out, run_experiment(&spec, &s).unwrap());
}

fn world(theta: f64) -> HedgeSetup {
    HedgeSetup {
        params: ModelParams {
            horizon_t: 0.5,
            ..params(theta)
        },
        subs: Subordinators::new(SubordinatorSpec::new(4.0, 50.0).unwrap(), SubordinatorSpec::new(0.5, 5.0).unwrap()),
        stable: StableAssetParams {
            sigma: 0.3,
            rho_prime: 0.9,
            y0: 100.0,
        },
        option: EuropeanOption {
            strike: 100.0,
            kind: OptionKind::Call,
        },
        contract: VarSwapContract::new(0.05, 1.0).unwrap(),
    }
}

#[test]
fn identical_candidates_give_identical_rows() {
    let cmp = compare_hedging(&world(0.5), &[0.3, 0.3, 0.3], 20, 2_000, 4).unwrap();
    assert!(cmp.rows.windows(2).all(|w| w[0].error == w[1].error));
}

#[test]
fn without_leverage_theta_does_not_matter() {
    let mut w = world(0.5);
    w.params.rho = 0.0;
    let cmp = compare_hedging(&w, &[0.0, 0.5, 1.0], 20, 2_000, 4).unwrap();
    assert!(cmp.rows.windows(2).all(|r| r[0].error == r[1].error));
}

#[test]
fn candidates_must_lie_in_the_unit_interval() {
    assert!(compare_hedging(&world(0.5), &[0.0, 1.5], 20, 100, 4).is_err());
    assert!(compare_hedging(&world(0.5), &[], 20, 100, 4).is_err());
}
