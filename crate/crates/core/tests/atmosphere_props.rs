use darkdeco::atmosphere::{
    shielding_thresholds, simulate_absorbing_walk, simulate_reflecting_occupancy,
    transport_cross_section, AtmosphereModel, MolecularComposition,
};
use darkdeco::decoherence::{decoherence_rate, TargetModel};
use darkdeco::flux::{FluxMode, FluxModel};
use darkdeco::model::{DmScenario, Experiment};
use darkdeco::units::rate_to_hz;
use proptest::prelude::*;

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn thermalizing_takes_deeper_than_isotropizing(
        log_mass in 2.0f64..10.4,
        log_m in -4.0f64..5.0,
        log_alpha in -30.0f64..-5.0,
    ) {
        let atm = AtmosphereModel::default();
        let s = DmScenario::new(10f64.powf(log_mass), 10f64.powf(log_m))
            .unwrap()
            .with_alpha_m(10f64.powf(log_alpha))
            .unwrap();
        prop_assume!(s.mass <= atm.m_atm());
        let t = shielding_thresholds(&s, &atm, &MolecularComposition::nitrogen()).unwrap();
        prop_assert!(t.zeta_therm >= t.zeta_iso);
        prop_assert!(t.zeta_iso >= t.zeta_scatt);
        prop_assert_eq!(t.isotropizes, t.zeta_iso <= 1.0);
        prop_assert_eq!(t.thermalizes, t.zeta_therm <= 1.0);
    }
}

#[test]
fn absorbing_walk_splits_by_distance() {
    let walkers = 40_000u64;
    for (n, m) in [(1u32, 1u32), (1, 3), (2, 8)] {
        let w = simulate_absorbing_walk(n, m, walkers, 17).unwrap();
        let p = n as f64 / (n + m) as f64;
        let sigma = (p * (1.0 - p) / walkers as f64).sqrt();
        let got = w.ground_fraction();
        assert!((got - p).abs() < 3.0 * sigma, "({n},{m}): {got} vs {p}");
        assert_eq!(w.ground + w.top, walkers);
    }
}

#[test]
fn reflecting_ground_fills_the_column_evenly() {
    let occ = simulate_reflecting_occupancy(12, 40_000, 5).unwrap();
    let mean = occ.iter().sum::<f64>() / occ.len() as f64;
    for (i, o) in occ.iter().enumerate() {
        assert!(
            (o / mean - 1.0).abs() < 0.05,
            "site {}: {o} vs mean {mean}",
            i + 1
        );
    }
}

#[test]
fn shielding_and_decoherence_scale_differently_with_speed() {
    // Forward scattering (ξ_m ≫ 1) at fixed density.
    let kdtl = Experiment::lookup("KDTL").unwrap();
    let target = TargetModel::new(kdtl).unwrap();
    let base = DmScenario::new(1e8, 17.0).unwrap();
    let factors = [0.4, 0.63, 1.0, 1.6, 2.5, 4.0];
    let mut speeds = Vec::new();
    let mut deco = Vec::new();
    let mut transport = Vec::new();
    for f in factors {
        let s = DmScenario {
            v_bar: base.v_bar * f,
            v_sun: base.v_sun * f,
            v_esc: base.v_esc * f,
            ..base
        };
        let flux = FluxModel::space(s, FluxMode::Anisotropic).unwrap();
        deco.push(decoherence_rate(&s, &target, &flux, 0.0).unwrap().rate.re);
        let sigma = transport_cross_section(&s, s.momentum()).unwrap();
        transport.push(rate_to_hz(s.rho / s.mass * s.v_bar * sigma));
        speeds.push(s.v_bar);
    }
    let d = fit_slope(&speeds, &deco);
    let t = fit_slope(&speeds, &transport);
    assert!((d + 1.0).abs() < 0.1, "decoherence exponent {d}");
    assert!(((d - t) - 2.0).abs() < 0.2, "exponents {d} and {t}");
}
