use darkdeco::born::{
    born_validity_characteristic, partial_wave_lmax, square_well_born_sigma,
    square_well_exact_sigma, square_well_phase_shifts, SquareWell,
};
use darkdeco::model::{DmScenario, Experiment};
use darkdeco::sensitivity::{log_grid, sweep_curve, SweepOptions};
use darkdeco::statistics::RunPlan;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn exact_cross_section_is_continuous_through_zero(
        kr in 1e-3f64..20.0,
        radius in 1e-3f64..1e2,
        mass in 1e3f64..1e9,
    ) {
        let k = kr / radius;
        // Born parameter 2MV0R²: 1e-7, deep in the perturbative regime.
        let v0 = 1e-7 / (2.0 * mass * radius * radius);
        let hump = square_well_exact_sigma(&SquareWell::new(v0, radius).unwrap(), k, mass).unwrap();
        let well = square_well_exact_sigma(&SquareWell::new(-v0, radius).unwrap(), k, mass).unwrap();
        let born = square_well_born_sigma(&SquareWell::new(v0, radius).unwrap(), k, mass).unwrap();
        prop_assert!((hump - well).abs() <= 1e-5 * born, "{hump:e} vs {well:e}");
        prop_assert!((hump / born - 1.0).abs() < 1e-5);
        let zero = square_well_exact_sigma(&SquareWell::new(0.0, radius).unwrap(), k, mass).unwrap();
        prop_assert_eq!(zero, 0.0);
    }

    #[test]
    fn low_energy_scattering_is_s_wave(
        kr in 1e-4f64..0.05,
        strength in -50.0f64..50.0,
        radius in 1e-2f64..10.0,
    ) {
        let mass = 1e6;
        let well = SquareWell::new(strength / (2.0 * mass * radius * radius), radius).unwrap();
        let k = kr / radius;
        let d = square_well_phase_shifts(&well, k, mass, partial_wave_lmax(k, radius));
        let weights: Vec<f64> = d.iter().enumerate().map(|(l, x)| (2 * l + 1) as f64 * x.sin().powi(2)).collect();
        let total: f64 = weights.iter().sum();
        prop_assume!(total > 0.0);
        prop_assert!(weights[0] / total > 0.99, "s-wave share {}", weights[0] / total);
    }

    #[test]
    fn phase_shifts_respect_unitarity(
        kr in 1e-3f64..30.0,
        strength in -1e3f64..1e3,
        radius in 1e-2f64..10.0,
    ) {
        let mass = 1e6;
        let well = SquareWell::new(strength / (2.0 * mass * radius * radius), radius).unwrap();
        let k = kr / radius;
        let lmax = partial_wave_lmax(k, radius);
        let d = square_well_phase_shifts(&well, k, mass, lmax);
        prop_assert_eq!(d.len(), lmax + 1);
        for x in &d {
            prop_assert!(x.is_finite());
            prop_assert!(x.sin().powi(2) <= 1.0);
        }
        let exact = square_well_exact_sigma(&well, k, mass).unwrap();
        let bound = 4.0 * std::f64::consts::PI / (k * k) * ((lmax + 1) * (lmax + 1)) as f64;
        prop_assert!(exact >= 0.0 && exact <= bound * (1.0 + 1e-12));
    }
}

#[test]
fn curves_end_where_the_born_series_fails() {
    let e = Experiment::lookup("OTIMA").unwrap();
    let s = DmScenario::new(1e7, 1.0).unwrap();
    let plan = RunPlan::new(e.clone()).unwrap();
    let mut opts = SweepOptions::for_experiment(&e);
    opts.rate.rel_tol = 1e-2;
    let grid = log_grid(1e-2, 1e4, 13).unwrap();
    let curve = sweep_curve(&e, &s, &grid, &plan, &opts, None).unwrap();
    assert!(curve.rows.iter().any(|r| r.born_valid));
    assert!(
        curve.rows.iter().any(|r| !r.born_valid),
        "every point is perturbative"
    );
    for r in &curve.rows {
        if let Some(a) = r.alpha_hat {
            let ratio = born_validity_characteristic(
                &s.with_mediator_mass(r.m).unwrap().with_alpha_m(a).unwrap(),
                &e,
            )
            .unwrap()
            .ratio;
            assert_eq!(r.born_valid, ratio < 1.0, "m = {}: ratio {ratio}", r.m);
        }
        if !r.born_valid {
            assert!(!r.detectable);
        }
    }
    let mut buf = Vec::new();
    curve.write_long_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let emitted = text.lines().filter(|l| l.contains(",sensitivity,")).count();
    let valid = curve
        .rows
        .iter()
        .filter(|r| r.born_valid && r.alpha_hat.is_some())
        .count();
    assert_eq!(emitted, valid);
}
