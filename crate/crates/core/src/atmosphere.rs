//! Atmospheric and Earth shielding of the dark-matter flux.
//!
//! Depths are fractions of the overhead atmospheric mass. Scattering,
//! isotropization and thermalization depths all scale as 1/σ_atm, so the
//! coupling at which each reaches the ground is α_M · ζ at the current α_M.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::decoherence::cluster_structure_factor;
use crate::decoherence::mc::yukawa_total_cross_section;
use crate::error::{Error, Result};
use crate::model::DmScenario;
use crate::quad::integrate_adaptive;
use crate::units::{
    kelvin_to_ev, natural_area_to_cm2, natural_area_to_m2, nm_to_natural, KG_PER_EV,
};

/// Mass above which Earth-thermalized dark matter sinks instead of returning (eV).
pub const SINKING_MASS_EV: f64 = 37e6;

/// Bulk properties of the atmosphere and crust.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AtmosphereModel {
    /// Mean molecular mass (GeV).
    pub m_atm_gev: f64,
    /// Surface pressure (Pa).
    pub pressure_pa: f64,
    /// Gravitational acceleration (m/s²).
    pub gravity: f64,
    pub temperature_k: f64,
    pub crust_temperature_k: f64,
}

impl Default for AtmosphereModel {
    fn default() -> Self {
        AtmosphereModel {
            m_atm_gev: 26.0,
            pressure_pa: 101_325.0,
            gravity: 9.81,
            temperature_k: 270.0,
            crust_temperature_k: 300.0,
        }
    }
}

impl AtmosphereModel {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("m_atm_gev", self.m_atm_gev),
            ("pressure_pa", self.pressure_pa),
            ("gravity", self.gravity),
            ("temperature_k", self.temperature_k),
            ("crust_temperature_k", self.crust_temperature_k),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(field, "must be finite and positive"));
            }
        }
        Ok(())
    }

    /// Molecular mass in eV.
    pub fn m_atm(&self) -> f64 {
        self.m_atm_gev * 1e9
    }

    /// Overhead column density p/g in kg/m².
    fn column_kg_m2(&self) -> f64 {
        self.pressure_pa / self.gravity
    }
}

/// Scatterer model of one air molecule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MolecularComposition {
    pub nucleons: f64,
    /// Nucleons per coherent sub-unit.
    pub atomic_number: f64,
    pub radius_nm: f64,
}

impl MolecularComposition {
    /// N₂ with all 28 nucleons spread over a 0.2 nm sphere: the structure
    /// factor runs from N² at soft q down to N at hard q.
    pub fn nitrogen() -> Self {
        MolecularComposition {
            nucleons: 28.0,
            atomic_number: 1.0,
            radius_nm: 0.2,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.atomic_number >= 1.0 && self.nucleons >= self.atomic_number) {
            return Err(Error::invalid(
                "composition",
                "need nucleons ≥ atomic_number ≥ 1",
            ));
        }
        if !(self.radius_nm > 0.0) {
            return Err(Error::invalid("composition.radius_nm", "must be positive"));
        }
        Ok(())
    }
}

/// Depths (fractions of overhead atmospheric mass) for the three stages.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShieldingThresholds {
    pub zeta_scatt: f64,
    pub zeta_iso: f64,
    pub zeta_therm: f64,
    pub scatters_once: bool,
    pub isotropizes: bool,
    pub thermalizes: bool,
}

/// Couplings at which each depth equals the full atmosphere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThresholdCouplings {
    pub alpha_scatt: f64,
    pub alpha_iso: f64,
    pub alpha_therm: f64,
}

/// ⟨sin²θ⟩ by quadrature and by closed form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SinSquaredMean {
    pub quadrature: f64,
    pub closed_form: f64,
}

/// Integrate g(x) over the Yukawa angular law, x = sin²(θ/2) with density
/// ∝ (1 + Bx)⁻², via t = ln(1 + Bx)/ln(1 + B), which flattens the forward peak.
fn yukawa_average(big_b: f64, mut g: impl FnMut(f64) -> f64) -> Result<f64> {
    if big_b < 1e-12 {
        return integrate_adaptive(g, 0.0, 1.0, 1e-10, 0.0).map(|r| r.0);
    }
    let l = big_b.ln_1p();
    let norm = (1.0 + big_b) * l / big_b;
    let f = |t: f64| {
        let x = (t * l).exp_m1() / big_b;
        g(x) * norm / (1.0 + big_b * x)
    };
    integrate_adaptive(f, 0.0, 1.0, 1e-10, 0.0).map(|r| r.0)
}

/// Corrected closed form 4(1+B)/B³ [(2+B) ln(1+B) − 2B], B = β².
pub fn sin_squared_closed_form(beta: f64) -> f64 {
    let b = beta * beta;
    if b < 1e-2 {
        return 2.0 / 3.0 - b * b / 15.0 + b * b * b / 15.0 - 2.0 * b.powi(4) / 35.0;
    }
    4.0 * (1.0 + b) / (b * b * b) * ((2.0 + b) * b.ln_1p() - 2.0 * b)
}

/// ⟨sin²θ⟩ for one Yukawa scattering at momentum k, with β = 2k/m.
pub fn sigma_theta2(scenario: &DmScenario, k: f64) -> Result<SinSquaredMean> {
    if !(k > 0.0) {
        return Err(Error::invalid("k", "must be positive"));
    }
    let beta = 2.0 * k / scenario.mediator_mass;
    let quadrature = yukawa_average(beta * beta, |x| 4.0 * x * (1.0 - x))?;
    Ok(SinSquaredMean {
        quadrature,
        closed_form: sin_squared_closed_form(beta),
    })
}

/// Total cross section (eV⁻²) on one molecule at momentum k.
pub fn molecular_cross_section(
    scenario: &DmScenario,
    comp: &MolecularComposition,
    k: f64,
) -> Result<f64> {
    comp.validate()?;
    if !(k > 0.0) {
        return Err(Error::invalid("k", "must be positive"));
    }
    let beta = 2.0 * k / scenario.mediator_mass;
    let radius = nm_to_natural(comp.radius_nm);
    let mean = yukawa_average(beta * beta, |x| {
        cluster_structure_factor(
            2.0 * k * x.sqrt(),
            comp.nucleons,
            comp.atomic_number,
            radius,
            0.0,
        )
    })?;
    Ok(yukawa_total_cross_section(scenario, k) * mean)
}

/// Depths at incident momentum k.
pub fn shielding_thresholds_at(
    scenario: &DmScenario,
    atm: &AtmosphereModel,
    comp: &MolecularComposition,
    k: f64,
) -> Result<ShieldingThresholds> {
    scenario.validate()?;
    atm.validate()?;
    let sigma = natural_area_to_m2(molecular_cross_section(scenario, comp, k)?);
    let zeta_scatt = if sigma > 0.0 {
        atm.m_atm() * KG_PER_EV / (sigma * atm.column_kg_m2())
    } else {
        f64::INFINITY
    };
    let st2 = sigma_theta2(scenario, k)?.quadrature;
    let n_iso = std::f64::consts::PI * std::f64::consts::PI / st2;
    let zeta_iso = n_iso * zeta_scatt / 3f64.sqrt();
    let zeta_therm = (atm.m_atm() / scenario.mass).sqrt() * zeta_iso;
    Ok(ShieldingThresholds {
        zeta_scatt,
        zeta_iso,
        zeta_therm,
        scatters_once: zeta_scatt <= 1.0,
        isotropizes: zeta_iso <= 1.0,
        thermalizes: zeta_therm <= 1.0,
    })
}

/// Depths for the halo flux, evaluated at k = M v̄.
pub fn shielding_thresholds(
    scenario: &DmScenario,
    atm: &AtmosphereModel,
    comp: &MolecularComposition,
) -> Result<ShieldingThresholds> {
    shielding_thresholds_at(scenario, atm, comp, scenario.momentum())
}

/// The three threshold curves at one mediator mass.
pub fn threshold_couplings(
    scenario: &DmScenario,
    atm: &AtmosphereModel,
    comp: &MolecularComposition,
) -> Result<ThresholdCouplings> {
    let unit = scenario.with_alpha_m(1.0)?;
    let t = shielding_thresholds(&unit, atm, comp)?;
    Ok(ThresholdCouplings {
        alpha_scatt: t.zeta_scatt,
        alpha_iso: t.zeta_iso,
        alpha_therm: t.zeta_therm,
    })
}

/// Probability that an incident particle reaches the ground.
pub fn ground_reach_probability(t: &ShieldingThresholds) -> f64 {
    t.zeta_iso.min(1.0)
}

/// Speed √(3kT/M) of dark matter thermalized at temperature T, as a fraction of c.
pub fn thermal_speed(scenario: &DmScenario, temperature_k: f64) -> f64 {
    (3.0 * kelvin_to_ev(temperature_k) / scenario.mass).sqrt()
}

/// Surface flux of crust-thermalized dark matter relative to the incident flux.
pub fn greenhouse_enhancement(
    scenario: &DmScenario,
    atm: &AtmosphereModel,
    comp: &MolecularComposition,
) -> Result<f64> {
    scenario.validate()?;
    atm.validate()?;
    if scenario.mass >= SINKING_MASS_EV {
        return Ok(0.0);
    }
    let hot = shielding_thresholds(scenario, atm, comp)?;
    let k300 = scenario.mass * thermal_speed(scenario, atm.crust_temperature_k);
    let cold = shielding_thresholds_at(scenario, atm, comp, k300)?;
    Ok(hot.zeta_iso / cold.zeta_iso)
}

/// Momentum-transfer cross section of one nucleon at momentum k, in cm².
pub fn transport_cross_section(scenario: &DmScenario, k: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::invalid("k", "must be positive"));
    }
    let m = scenario.mediator_mass;
    let b = 4.0 * k * k / (m * m);
    // ∫₀¹ x/(1 + Bx)² dx
    let integral = if b < 1e-3 {
        0.5 - 2.0 * b / 3.0 + 0.75 * b * b - 0.8 * b * b * b
    } else {
        (b.ln_1p() - b / (1.0 + b)) / (b * b)
    };
    let pref = 32.0
        * std::f64::consts::PI
        * scenario.alpha_m
        * scenario.alpha_dm
        * scenario.mass
        * scenario.mass
        / m.powi(4);
    Ok(natural_area_to_cm2(pref * integral))
}

/// Same quantity by quadrature over the angular law.
pub fn transport_cross_section_quadrature(scenario: &DmScenario, k: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::invalid("k", "must be positive"));
    }
    let beta = 2.0 * k / scenario.mediator_mass;
    let mean = yukawa_average(beta * beta, |x| 2.0 * x)?;
    Ok(natural_area_to_cm2(
        yukawa_total_cross_section(scenario, k) * mean,
    ))
}

/// Outcome counts of a two-barrier random walk.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WalkOutcome {
    pub walkers: u64,
    /// Absorbed at the ground barrier.
    pub ground: u64,
    /// Absorbed at the top of the atmosphere.
    pub top: u64,
}

impl WalkOutcome {
    pub fn ground_fraction(&self) -> f64 {
        self.ground as f64 / self.walkers as f64
    }
}

fn walker_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Symmetric ±1 walk starting `from_top` steps below the top barrier and
/// `from_ground` steps above the ground barrier, both absorbing.
pub fn simulate_absorbing_walk(
    from_top: u32,
    from_ground: u32,
    walkers: u64,
    seed: u64,
) -> Result<WalkOutcome> {
    if from_top == 0 || from_ground == 0 {
        return Err(Error::invalid(
            "start",
            "must lie strictly between the barriers",
        ));
    }
    if walkers == 0 {
        return Err(Error::invalid("walkers", "must be positive"));
    }
    let span = (from_top + from_ground) as i64;
    let ground: u64 = (0..walkers)
        .into_par_iter()
        .map(|i| {
            let mut rng = walker_rng(seed, i);
            let mut pos = from_top as i64;
            while pos > 0 && pos < span {
                pos += if rng.random::<bool>() { 1 } else { -1 };
            }
            u64::from(pos == span)
        })
        .sum();
    Ok(WalkOutcome {
        walkers,
        ground,
        top: walkers - ground,
    })
}

/// Lattice walk for depth ζ_iso: step ζ_iso, starting one step below the top,
/// with the ground at depth 1. Requires 1/ζ_iso to be close to an integer.
pub fn simulate_ground_reach(zeta_iso: f64, walkers: u64, seed: u64) -> Result<WalkOutcome> {
    if !(zeta_iso > 0.0 && zeta_iso < 1.0) {
        return Err(Error::invalid("zeta_iso", "must lie in (0, 1)"));
    }
    let steps = (1.0 / zeta_iso).round();
    if ((1.0 / zeta_iso) - steps).abs() > 1e-9 * steps {
        return Err(Error::invalid("zeta_iso", "1/zeta_iso must be an integer"));
    }
    simulate_absorbing_walk(1, steps as u32 - 1, walkers, seed)
}

/// Mean visits per walker to each site 1..=sites of a walk injected at site 1,
/// absorbed at site 0 (top) and reflected at site `sites` (ground). A step
/// past the ground leaves the walker in place.
pub fn simulate_reflecting_occupancy(sites: u32, walkers: u64, seed: u64) -> Result<Vec<f64>> {
    if sites == 0 || walkers == 0 {
        return Err(Error::invalid(
            "sites",
            "need at least one site and one walker",
        ));
    }
    let n = sites as usize;
    let visits = (0..walkers)
        .into_par_iter()
        .map(|i| {
            let mut rng = walker_rng(seed, i);
            let mut counts = vec![0u64; n];
            let mut pos = 1usize;
            while pos > 0 {
                counts[pos - 1] += 1;
                if rng.random::<bool>() {
                    pos = (pos + 1).min(n);
                } else {
                    pos -= 1;
                }
            }
            counts
        })
        .reduce(
            || vec![0u64; n],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(visits
        .into_iter()
        .map(|v| v as f64 / walkers as f64)
        .collect())
}

/// One row of the threshold-curve table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThresholdRow {
    pub m_ev: f64,
    pub alpha_m_scatt: f64,
    pub alpha_m_iso: f64,
    pub alpha_m_therm: f64,
}

/// Threshold couplings over a grid of mediator masses.
pub fn threshold_curves(
    scenario: &DmScenario,
    atm: &AtmosphereModel,
    comp: &MolecularComposition,
    m_grid: &[f64],
) -> Result<Vec<ThresholdRow>> {
    m_grid
        .par_iter()
        .map(|&m| {
            let s = scenario.with_mediator_mass(m)?;
            let t = threshold_couplings(&s, atm, comp)?;
            Ok(ThresholdRow {
                m_ev: m,
                alpha_m_scatt: t.alpha_scatt,
                alpha_m_iso: t.alpha_iso,
                alpha_m_therm: t.alpha_therm,
            })
        })
        .collect()
}

/// Write rows as CSV with columns m_eV, alphaM_scatt, alphaM_iso, alphaM_therm.
pub fn write_threshold_csv<W: std::io::Write>(rows: &[ThresholdRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["m_eV", "alphaM_scatt", "alphaM_iso", "alphaM_therm"])
        .map_err(crate::flux::csv_err)?;
    for r in rows {
        wr.write_record([
            format!("{:.8e}", r.m_ev),
            format!("{:.8e}", r.alpha_m_scatt),
            format!("{:.8e}", r.alpha_m_iso),
            format!("{:.8e}", r.alpha_m_therm),
        ])
        .map_err(crate::flux::csv_err)?;
    }
    wr.flush()?;
    Ok(())
}
