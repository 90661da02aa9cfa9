//! The MILP scheduler against exhaustive search on random small instances,
//! and feasibility of every returned schedule.

use proptest::prelude::*;

use nnodh::mds::{self, BessSpec, ExtraConstraints, MicrogridConfig, Profiles, TopThree};

const STEP: f64 = 10.0;

/// Battery-and-grid instance whose data are multiples of `STEP`. Energy caps
/// are multiples of `2 * STEP` because a day that ends at its initial energy
/// splits a cap evenly between charging and discharging; every vertex of the
/// feasible region then lies on the enumerated battery levels.
fn instance(load: Vec<f64>, renewable: Vec<f64>, price: Vec<f64>, e_initial: f64) -> MicrogridConfig {
    let n = load.len();
    MicrogridConfig {
        generators: vec![],
        bess: BessSpec {
            e_max: 100.0,
            e_min: 0.0,
            p_max: 50.0,
            p_min: 0.0,
            eff_char: 1.0,
            eff_disc: 1.0,
            e_initial,
            soh: 1.0,
        },
        tie_max: 400.0,
        reserve_frac: 0.0,
        dt: 1.0,
        profiles: Profiles {
            load,
            wind: vec![0.0; n],
            pv: renewable,
            buy_price: price,
            temp: vec![25.0; n],
            sell_factor: 0.8,
        },
    }
}

fn tens(lo: u32, hi: u32, n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((lo..=hi).prop_map(|k| STEP * k as f64), n)
}

fn extras(n: usize) -> impl Strategy<Value = ExtraConstraints> {
    prop_oneof![
        Just(ExtraConstraints::default()),
        (0u32..=10).prop_map(|k| ExtraConstraints {
            throughput_cap: Some(2.0 * STEP * k as f64),
            ..Default::default()
        }),
        (0u32..=5).prop_map(|k| ExtraConstraints {
            power_cap: Some(STEP * k as f64),
            ..Default::default()
        }),
        (0u32..=2).prop_map(|k| ExtraConstraints {
            cycle_transition_limit: Some(k),
            ..Default::default()
        }),
        (1u32..=10).prop_map(|k| ExtraConstraints {
            linear_bdc_rate: Some(0.01 * k as f64),
            ..Default::default()
        }),
        (0u32..=5).prop_map(move |k| ExtraConstraints {
            top3: (n >= 3).then_some(TopThree {
                intervals: [0, 1, 2],
                cap: 2.0 * STEP * k as f64,
            }),
            ..Default::default()
        }),
    ]
}

fn case() -> impl Strategy<Value = (MicrogridConfig, ExtraConstraints)> {
    (2usize..=3).prop_flat_map(|n| {
        (
            tens(0, 15, n),
            tens(0, 15, n),
            prop::collection::vec((1u32..=10).prop_map(|k| 0.05 * k as f64), n),
            (0u32..=10).prop_map(|k| STEP * k as f64),
            extras(n),
        )
            .prop_map(|(load, ren, price, e0, extra)| (instance(load, ren, price, e0), extra))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn milp_matches_exhaustive_search((config, extra) in case()) {
        let levels: Vec<Vec<f64>> = (0..config.horizon())
            .map(|_| (-5..=5).map(|k| STEP * k as f64).collect())
            .collect();
        let gens = vec![vec![0.0]; config.horizon()];
        let sol = mds::solve_mds(&config, &extra).unwrap();
        let bf = mds::brute_force_schedule(&config, &extra, &levels, &gens).unwrap();
        prop_assert!(
            (sol.objective - bf.objective).abs() <= 1e-6 * (1.0 + sol.objective.abs()),
            "milp {} vs exhaustive {}", sol.objective, bf.objective
        );
    }

    #[test]
    fn solutions_satisfy_every_constraint((config, extra) in case()) {
        let sol = mds::solve_mds(&config, &extra).unwrap();
        let report = mds::validate_solution(&config, &extra, &sol).unwrap();
        prop_assert!(report.is_valid(), "{:?}", report.violations());
        let last = sol.intervals.last().unwrap();
        prop_assert!((last.energy - config.bess.e_initial).abs() <= 1e-6);
    }

    #[test]
    fn restrictions_never_lower_the_optimum((config, extra) in case()) {
        let plain = mds::solve_mds(&config, &ExtraConstraints::default()).unwrap();
        let restricted = mds::solve_mds(&config, &extra).unwrap();
        prop_assert!(restricted.objective >= plain.objective - 1e-6 * (1.0 + plain.objective.abs()));
    }
}

#[test]
fn bundled_scenario_schedule_is_feasible() {
    let config = nnodh::scenario::bundled();
    let sol = mds::solve_mds(&config, &ExtraConstraints::default()).unwrap();
    assert!(mds::validate_solution(&config, &ExtraConstraints::default(), &sol).unwrap().is_valid());
}

#[test]
fn equal_prices_with_a_linear_battery_price_terminate() {
    // every battery plan ties on grid cost, so the relaxations are highly degenerate
    let config = instance(vec![60.0, 100.0, 40.0], vec![80.0, 120.0, 120.0], vec![0.45; 3], 70.0);
    let extra = ExtraConstraints {
        linear_bdc_rate: Some(0.1),
        ..Default::default()
    };
    let sol = mds::solve_mds(&config, &extra).unwrap();
    assert!((sol.objective + 0.36 * 120.0).abs() < 1e-9);
    assert_eq!(sol.throughput(config.dt), 0.0);
}
