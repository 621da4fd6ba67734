use darkdeco::decoherence::{
    cluster_structure_factor, decoherence_rate, decoherence_rate_oriented, RateOptions, TargetModel,
};
use darkdeco::flux::{FluxMode, FluxModel, Orientation};
use darkdeco::model::{registry, DmScenario, Experiment, Shielding, Site};
use proptest::prelude::*;

fn mode_strategy() -> impl Strategy<Value = FluxMode> {
    prop_oneof![
        Just(FluxMode::Anisotropic),
        Just(FluxMode::Isotropized),
        (10.0f64..1000.0).prop_map(|t| FluxMode::Thermalized { temperature_k: t }),
    ]
}

fn shielding_strategy() -> impl Strategy<Value = Shielding> {
    prop_oneof![
        Just(Shielding::AbsorbingEarth),
        Just(Shielding::ReflectingEarth),
    ]
}

fn pick(index: usize) -> Experiment {
    let all = registry();
    all[index % all.len()].clone()
}

fn rate(s: &DmScenario, e: &Experiment, wind_angle: f64) -> f64 {
    let target = TargetModel::new(e.clone()).unwrap();
    let flux = FluxModel::space(*s, FluxMode::Anisotropic).unwrap();
    decoherence_rate(s, &target, &flux, wind_angle)
        .unwrap()
        .rate
        .re
}

fn check_positive(
    s: &DmScenario,
    e: Experiment,
    site: Site,
    mode: FluxMode,
    phase: f64,
) -> Result<(), TestCaseError> {
    let target = TargetModel::new(e).unwrap();
    let flux = FluxModel::new(*s, site, mode).unwrap();
    let opts = RateOptions {
        rel_tol: 5e-2,
        ..RateOptions::default()
    };
    let r = decoherence_rate_oriented(
        s,
        &target,
        &flux,
        &Orientation::sidereal(&site, phase),
        &opts,
    )
    .unwrap();
    prop_assert!(r.rate.re >= 0.0, "Re F = {:e}", r.rate.re);
    prop_assert!(
        r.rate.re <= r.total_rate * (1.0 + 5e-2),
        "{:e} > {:e}",
        r.rate.re,
        r.total_rate
    );
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn decoherence_rate_is_non_negative(
        log_mass in 2.0f64..9.0,
        log_m in -4.0f64..5.0,
        index in 0usize..64,
        mode in mode_strategy(),
        lat in -90.0f64..90.0,
        phase in 0.0f64..1.0,
    ) {
        let s = DmScenario::new(10f64.powf(log_mass), 10f64.powf(log_m)).unwrap();
        let site = Site { latitude_deg: lat, ..Site::space() };
        check_positive(&s, pick(index), site, mode, phase)?;
    }
}

// Horizon-masked fluxes carry up to 200 Legendre orders and cost seconds
// per rate at large separations, so they get fewer draws.
proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn masked_decoherence_rate_is_non_negative(
        log_mass in 2.0f64..9.0,
        log_m in -4.0f64..5.0,
        index in 0usize..64,
        mode in mode_strategy(),
        shielding in shielding_strategy(),
        lat in -90.0f64..90.0,
        phase in 0.0f64..1.0,
    ) {
        let s = DmScenario::new(10f64.powf(log_mass), 10f64.powf(log_m)).unwrap();
        let site = Site { latitude_deg: lat, shielding, ..Site::default() };
        check_positive(&s, pick(index), site, mode, phase)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reversing_the_separation_conjugates_the_rate(
        log_mass in 3.0f64..6.5,
        log_m in -3.0f64..4.0,
        index in 0usize..64,
        lat in -90.0f64..90.0,
        az in 0.0f64..360.0,
        phase in 0.0f64..1.0,
    ) {
        let s = DmScenario::new(10f64.powf(log_mass), 10f64.powf(log_m)).unwrap();
        let target = TargetModel::new(pick(index)).unwrap();
        let site = Site { latitude_deg: lat, axis_azimuth_deg: az, ..Site::default() };
        let flux = FluxModel::new(s, site, FluxMode::Anisotropic).unwrap();
        let o = Orientation::sidereal(&site, phase);
        let opts = RateOptions::default();
        let a = decoherence_rate_oriented(&s, &target, &flux, &o, &opts).unwrap().rate;
        let b = decoherence_rate_oriented(&s, &target, &flux, &o.flipped(), &opts).unwrap().rate;
        let tol = 1e-6 * a.norm() + 1e-300;
        prop_assert!((a.re - b.re).abs() <= tol, "{a} vs {b}");
        prop_assert!((a.im + b.im).abs() <= tol, "{a} vs {b}");
    }
}

#[test]
fn doubling_nucleons_quadruples_the_coherent_rate() {
    // Wavelength-dominated: every transfer is far below 1/R.
    let s = DmScenario::new(1e3, 1e-3).unwrap();
    let e = Experiment::lookup("OTIMA").unwrap();
    let mut e2 = e.clone();
    e2.nucleons *= 2.0;
    let q = 1e-6;
    let ratio_s = cluster_structure_factor(q, e2.nucleons, e2.atomic_number, e2.radius(), 0.0)
        / cluster_structure_factor(q, e.nucleons, e.atomic_number, e.radius(), 0.0);
    assert!(
        (ratio_s - 4.0).abs() < 1e-3,
        "structure factor ratio {ratio_s}"
    );
    let ratio = rate(&s, &e2, 0.0) / rate(&s, &e, 0.0);
    assert!((ratio - 4.0).abs() < 4e-3, "rate ratio {ratio}");
}

#[test]
fn radius_limited_rate_falls_as_inverse_square_radius() {
    // ξ_R ≫ ξ_m, 1 and ξ_Δ ≫ ξ_R: F ∝ N² / R² at fixed N.
    let s = DmScenario::new(1e6, 1e4).unwrap();
    let mut e = Experiment::lookup("OTIMA").unwrap();
    e.separation_nm = 1e4;
    let mut fs = Vec::new();
    for r in [20.0, 40.0] {
        e.radius_nm = r;
        fs.push(rate(&s, &e, 0.0));
    }
    let slope = (fs[1] / fs[0]).log2();
    assert!((slope + 2.0).abs() < 0.1, "slope {slope}");
}

#[test]
fn mediator_limited_rate_falls_as_inverse_square_mediator_mass() {
    // ξ_m ≫ ξ_R, 1 and ξ_Δ ≫ ξ_m: F ∝ m⁻⁴ / ξ_m² ∝ m⁻².
    let mut e = Experiment::lookup("OTIMA").unwrap();
    e.radius_nm = 1e-3;
    e.separation_nm = 1e5;
    let fs: Vec<f64> = [1.0, 2.0]
        .iter()
        .map(|&m| rate(&DmScenario::new(1e6, m).unwrap(), &e, 0.0))
        .collect();
    let slope = (fs[1] / fs[0]).log2();
    assert!((slope + 2.0).abs() < 0.1, "slope {slope}");
}

#[test]
fn rate_is_linear_in_both_couplings_and_density() {
    let e = Experiment::lookup("KDTL").unwrap();
    let s = DmScenario::new(1e6, 20.0).unwrap();
    let base = rate(&s, &e, 0.3);
    let mut t = s;
    t.alpha_m = 3.0;
    t.alpha_dm = 0.5;
    t.rho *= 2.0;
    let scaled = rate(&t, &e, 0.3);
    assert!((scaled / base - 3.0).abs() < 1e-9);
}
