//! Critical matter coupling α̂_M and sensitivity curves over mediator mass.
//!
//! The rate is linear in α_M in the Born regime, so one evaluation at
//! α_M = 1 fixes α̂_M = threshold / (η_DM · Re F(α_M = 1) · T).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::atmosphere::{
    greenhouse_enhancement, threshold_couplings, AtmosphereModel, MolecularComposition,
    ThresholdCouplings,
};
use crate::born::born_validity_characteristic;
use crate::decoherence::limits::classify_limit;
use crate::decoherence::{decoherence_rate_oriented, RateOptions, TargetModel};
use crate::error::{Error, Result};
use crate::flux::{
    csv_err, horizon_flux_fraction, FluxMode, FluxModel, Orientation, SiderealSeries,
};
use crate::model::{DimensionlessGroups, DmScenario, Experiment, Shielding, Site};
use crate::statistics::{detection_threshold, Channel, RunPlan};

/// Sidereal phases used for daily-mean shielding factors.
const SHIELDING_PHASES: usize = 96;

/// Settings shared by every point of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepOptions {
    pub mode: FluxMode,
    /// Site geometry; `site.shielding` selects absorbing, reflecting or space.
    pub site: Site,
    /// Angle between the wind and Δx for the rate evaluation (radians).
    pub wind_angle: f64,
    pub greenhouse: bool,
    pub atmosphere: AtmosphereModel,
    pub composition: MolecularComposition,
    pub rate: RateOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            mode: FluxMode::Anisotropic,
            site: Site::default(),
            wind_angle: 0.0,
            greenhouse: false,
            atmosphere: AtmosphereModel::default(),
            composition: MolecularComposition::nitrogen(),
            rate: RateOptions::default(),
        }
    }
}

impl SweepOptions {
    /// Options for an experiment: space missions see the unshielded halo.
    pub fn for_experiment(experiment: &Experiment) -> Self {
        let mut o = SweepOptions::default();
        if experiment.space_based {
            o.site = Site::space();
        }
        o
    }

    fn shielding(&self) -> Shielding {
        self.site.shielding
    }
}

/// Daily-mean fraction of the unshielded flux reaching the target.
pub fn shielding_factor(scenario: &DmScenario, site: &Site) -> Result<f64> {
    if site.shielding == Shielding::Space {
        return Ok(1.0);
    }
    let phases = SiderealSeries::grid(SHIELDING_PHASES);
    let mut total = 0.0;
    for &p in &phases {
        total += horizon_flux_fraction(scenario, site, p)?.total();
    }
    Ok(total / phases.len() as f64)
}

/// Rate at unit coupling for the sweep geometry, including shielding.
pub fn unit_rate(
    scenario: &DmScenario,
    experiment: &Experiment,
    opts: &SweepOptions,
    shielding: f64,
) -> Result<Complex64> {
    let unit = scenario.with_alpha_m(1.0)?;
    let target = TargetModel::new(experiment.clone())?;
    let flux = FluxModel::space(unit, opts.mode)?;
    let r = decoherence_rate_oriented(
        &unit,
        &target,
        &flux,
        &Orientation::wind_angle(opts.wind_angle),
        &opts.rate,
    )?;
    Ok(r.rate * shielding)
}

/// Rate at unit coupling from crust-thermalized dark matter, scaled by the
/// greenhouse enhancement of its flux.
pub fn greenhouse_rate(
    scenario: &DmScenario,
    experiment: &Experiment,
    opts: &SweepOptions,
) -> Result<f64> {
    let unit = scenario.with_alpha_m(1.0)?;
    let e = greenhouse_enhancement(&unit, &opts.atmosphere, &opts.composition)?;
    if e == 0.0 {
        return Ok(0.0);
    }
    let target = TargetModel::new(experiment.clone())?;
    let mode = FluxMode::Thermalized {
        temperature_k: opts.atmosphere.crust_temperature_k,
    };
    let flux = FluxModel::space(unit, mode)?;
    let r = decoherence_rate_oriented(
        &unit,
        &target,
        &flux,
        &Orientation::wind_angle(0.0),
        &opts.rate,
    )?;
    Ok(e * r.rate.re)
}

/// α̂_M together with the quantities that fixed it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriticalCoupling {
    pub alpha_hat: f64,
    /// Re F at α_M = 1 after shielding (Hz).
    pub unit_rate_hz: f64,
    /// s̃ at α_M = 1.
    pub unit_signal: f64,
    pub threshold: f64,
}

/// α̂_M = threshold / s̃(α_M = 1) for a signal linear in α_M.
pub fn coupling_from_signal(unit_signal: f64, threshold: f64) -> Result<f64> {
    if !(unit_signal > 0.0) || !unit_signal.is_finite() {
        return Err(Error::NoSensitivity(format!(
            "signal at unit coupling is {unit_signal:e}"
        )));
    }
    Ok(threshold / unit_signal)
}

/// Critical coupling for the decoherence channel.
pub fn critical_coupling(
    scenario: &DmScenario,
    experiment: &Experiment,
    plan: &RunPlan,
    opts: &SweepOptions,
) -> Result<CriticalCoupling> {
    let shield = shielding_factor(scenario, &opts.site)?;
    let rate = unit_rate(scenario, experiment, opts, shield)?.re;
    critical_from_rate(rate, experiment, plan)
}

fn critical_from_rate(
    rate_hz: f64,
    experiment: &Experiment,
    plan: &RunPlan,
) -> Result<CriticalCoupling> {
    let mut p = plan.clone();
    p.channel = Channel::Decoherence;
    let threshold = detection_threshold(&p)?.threshold;
    let unit_signal = plan.eta_dm * rate_hz * experiment.exposure_s();
    Ok(CriticalCoupling {
        alpha_hat: coupling_from_signal(unit_signal, threshold)?,
        unit_rate_hz: rate_hz,
        unit_signal,
        threshold,
    })
}

/// Bisection on log₁₀ α_M ∈ [−30, 0] for s̃(α_M) = threshold, evaluating the
/// full rate at every step. Used to audit the linear shortcut.
pub fn critical_coupling_bisection(
    scenario: &DmScenario,
    experiment: &Experiment,
    plan: &RunPlan,
    opts: &SweepOptions,
) -> Result<f64> {
    let shield = shielding_factor(scenario, &opts.site)?;
    let threshold = detection_threshold(plan)?.threshold;
    let target = TargetModel::new(experiment.clone())?;
    let signal = |log_alpha: f64| -> Result<f64> {
        let s = scenario.with_alpha_m(10f64.powf(log_alpha))?;
        let flux = FluxModel::space(s, opts.mode)?;
        let r = decoherence_rate_oriented(
            &s,
            &target,
            &flux,
            &Orientation::wind_angle(opts.wind_angle),
            &opts.rate,
        )?;
        Ok(plan.eta_dm * r.rate.re * shield * experiment.exposure_s())
    };
    let (mut lo, mut hi) = (-30.0, 0.0);
    if signal(hi)? < threshold {
        return Err(Error::NoSensitivity(
            "threshold not reached at α_M = 1".into(),
        ));
    }
    if signal(lo)? >= threshold {
        return Err(Error::NoSensitivity(
            "threshold already exceeded at α_M = 1e-30".into(),
        ));
    }
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if signal(mid)? >= threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(10f64.powf(0.5 * (lo + hi)))
}

/// Label of the length that sets the sensitivity, or "mixed".
pub fn sigma_regime(scenario: &DmScenario, experiment: &Experiment) -> String {
    let g = DimensionlessGroups::new(scenario, experiment);
    match classify_limit(&g, 3.0) {
        Ok((r, _)) => r.sigma_name().to_string(),
        Err(_) => "mixed".to_string(),
    }
}

/// One point of a sensitivity curve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveRow {
    pub m: f64,
    pub alpha_hat: Option<f64>,
    pub regime: String,
    pub born_valid: bool,
    pub alpha_scatt: f64,
    pub alpha_iso: f64,
    pub alpha_therm: f64,
    pub alpha_hat_greenhouse: Option<f64>,
    pub detectable: bool,
}

/// Sensitivity of one experiment over a mediator-mass grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SensitivityCurve {
    pub experiment: String,
    pub mass: f64,
    pub rows: Vec<CurveRow>,
}

/// Existing limits α_limit(m), interpolated log-log.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExclusionOverlay {
    points: Vec<(f64, f64)>,
}

impl ExclusionOverlay {
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.iter().any(|&(m, a)| !(m > 0.0) || !(a > 0.0)) {
            return Err(Error::invalid(
                "overlay",
                "masses and couplings must be positive",
            ));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(ExclusionOverlay { points })
    }

    /// Read CSV with columns m_eV, alpha_limit.
    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self> {
        #[derive(serde::Deserialize)]
        struct Row {
            #[serde(rename = "m_eV")]
            m: f64,
            alpha_limit: f64,
        }
        let mut rd = csv::Reader::from_reader(r);
        let pts = rd
            .deserialize::<Row>()
            .map(|r| r.map(|r| (r.m, r.alpha_limit)).map_err(csv_err))
            .collect::<Result<Vec<_>>>()?;
        ExclusionOverlay::new(pts)
    }

    /// Limit at m, or None outside the tabulated range.
    pub fn limit_at(&self, m: f64) -> Option<f64> {
        let p = &self.points;
        let i = p.partition_point(|q| q.0 < m);
        if i == 0 {
            return (p.first()?.0 == m).then(|| p[0].1);
        }
        if i == p.len() {
            return None;
        }
        let (m0, a0) = p[i - 1];
        let (m1, a1) = p[i];
        let t = (m / m0).ln() / (m1 / m0).ln();
        Some((a0.ln() + t * (a1 / a0).ln()).exp())
    }
}

/// Log-spaced grid of `points` values from lo to hi inclusive.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo) || points == 0 {
        return Err(Error::invalid(
            "m_grid",
            "need 0 < lo ≤ hi and at least one point",
        ));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    let step = (hi / lo).ln() / (points - 1) as f64;
    Ok((0..points).map(|i| lo * (step * i as f64).exp()).collect())
}

fn detectable(
    alpha_hat: f64,
    born_valid: bool,
    thresholds: &ThresholdCouplings,
    shielding: Shielding,
    overlay: Option<&ExclusionOverlay>,
    m: f64,
) -> bool {
    if !born_valid {
        return false;
    }
    let shielding_ok = match shielding {
        Shielding::Space | Shielding::ReflectingEarth => true,
        Shielding::AbsorbingEarth => alpha_hat < thresholds.alpha_iso,
    };
    let overlay_ok = overlay
        .and_then(|o| o.limit_at(m))
        .is_none_or(|limit| alpha_hat < limit);
    shielding_ok && overlay_ok
}

fn curve_row(
    scenario: &DmScenario,
    experiment: &Experiment,
    plan: &RunPlan,
    opts: &SweepOptions,
    shield: f64,
    overlay: Option<&ExclusionOverlay>,
    m: f64,
) -> Result<CurveRow> {
    let s = scenario.with_mediator_mass(m)?.with_alpha_m(1.0)?;
    let thresholds = threshold_couplings(&s, &opts.atmosphere, &opts.composition)?;
    let regime = sigma_regime(&s, experiment);
    let rate = unit_rate(&s, experiment, opts, shield)?.re;
    let alpha_hat = match critical_from_rate(rate, experiment, plan) {
        Ok(c) => Some(c.alpha_hat),
        Err(Error::NoSensitivity(_)) => None,
        Err(e) => return Err(e),
    };
    let born_valid = match alpha_hat {
        Some(a) => born_validity_characteristic(&s.with_alpha_m(a)?, experiment)?.valid,
        None => false,
    };
    let alpha_hat_greenhouse = if opts.greenhouse && opts.shielding() != Shielding::Space {
        let gh = greenhouse_rate(&s, experiment, opts)?;
        critical_from_rate(rate + gh, experiment, plan)
            .ok()
            .map(|c| c.alpha_hat)
    } else {
        None
    };
    let det = alpha_hat
        .is_some_and(|a| detectable(a, born_valid, &thresholds, opts.shielding(), overlay, m));
    Ok(CurveRow {
        m,
        alpha_hat,
        regime,
        born_valid,
        alpha_scatt: thresholds.alpha_scatt,
        alpha_iso: thresholds.alpha_iso,
        alpha_therm: thresholds.alpha_therm,
        alpha_hat_greenhouse,
        detectable: det,
    })
}

/// Sensitivity curve over `m_grid`; points are evaluated in parallel and
/// returned sorted by m.
pub fn sweep_curve(
    experiment: &Experiment,
    scenario: &DmScenario,
    m_grid: &[f64],
    plan: &RunPlan,
    opts: &SweepOptions,
    overlay: Option<&ExclusionOverlay>,
) -> Result<SensitivityCurve> {
    if m_grid.is_empty() {
        return Err(Error::invalid("m_grid", "must not be empty"));
    }
    plan.validate()?;
    let mut grid = m_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let shield = shielding_factor(scenario, &opts.site)?;
    let rows = grid
        .par_iter()
        .map(|&m| curve_row(scenario, experiment, plan, opts, shield, overlay, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(SensitivityCurve {
        experiment: experiment.name.clone(),
        mass: scenario.mass,
        rows,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.8e}")).unwrap_or_default()
}

impl SensitivityCurve {
    /// Wide CSV, one row per mediator mass.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record([
            "experiment",
            "M_eV",
            "m_eV",
            "alpha_hat",
            "regime",
            "born_valid",
            "alpha_scatt",
            "alpha_iso",
            "alpha_therm",
            "alpha_hat_greenhouse",
            "detectable",
        ])
        .map_err(csv_err)?;
        for r in &self.rows {
            wr.write_record([
                self.experiment.clone(),
                format!("{:.8e}", self.mass),
                format!("{:.8e}", r.m),
                fmt_opt(r.alpha_hat),
                r.regime.clone(),
                r.born_valid.to_string(),
                format!("{:.8e}", r.alpha_scatt),
                format!("{:.8e}", r.alpha_iso),
                format!("{:.8e}", r.alpha_therm),
                fmt_opt(r.alpha_hat_greenhouse),
                r.detectable.to_string(),
            ])
            .map_err(csv_err)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Long CSV (experiment, M_eV, curve, m_eV, alpha) for plotting tools.
    /// Sensitivity points past the Born cutoff are omitted.
    pub fn write_long_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["experiment", "M_eV", "curve", "m_eV", "alpha"])
            .map_err(csv_err)?;
        for r in &self.rows {
            let mut curves = vec![
                ("scatter", Some(r.alpha_scatt)),
                ("isotropize", Some(r.alpha_iso)),
                ("thermalize", Some(r.alpha_therm)),
            ];
            if r.born_valid {
                curves.push(("sensitivity", r.alpha_hat));
                curves.push(("greenhouse", r.alpha_hat_greenhouse));
            }
            for (name, v) in curves {
                if let Some(v) = v {
                    wr.write_record([
                        self.experiment.clone(),
                        format!("{:.8e}", self.mass),
                        name.to_string(),
                        format!("{:.8e}", r.m),
                        format!("{v:.8e}"),
                    ])
                    .map_err(csv_err)?;
                }
            }
        }
        wr.flush()?;
        Ok(())
    }
}

/// Decoherence and phase-shift critical couplings at one mediator mass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseRow {
    pub m: f64,
    pub alpha_hat_decoherence: Option<f64>,
    pub alpha_hat_phase: Option<f64>,
    /// The phase channel crosses its threshold first.
    pub phase_dominates: bool,
}

/// Grid points where the wind-induced phase shift is detectable at a lower
/// coupling than the decoherence. Empty without a net wind.
pub fn phase_shift_region(
    experiment: &Experiment,
    scenario: &DmScenario,
    m_grid: &[f64],
    plan: &RunPlan,
    opts: &SweepOptions,
) -> Result<Vec<PhaseRow>> {
    if m_grid.is_empty() {
        return Err(Error::invalid("m_grid", "must not be empty"));
    }
    if opts.mode != FluxMode::Anisotropic {
        return Ok(Vec::new());
    }
    let shield = shielding_factor(scenario, &opts.site)?;
    let mut dec_plan = plan.clone();
    dec_plan.channel = Channel::Decoherence;
    let mut ph_plan = plan.clone();
    ph_plan.channel = Channel::PhaseShift;
    let dec_t = detection_threshold(&dec_plan)?.threshold;
    let ph_t = detection_threshold(&ph_plan)?.threshold;
    let exposure = experiment.exposure_s();
    let mut grid = m_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let rows = grid
        .par_iter()
        .map(|&m| {
            let s = scenario.with_mediator_mass(m)?;
            let f = unit_rate(&s, experiment, opts, shield)?;
            let dec = coupling_from_signal(plan.eta_dm * f.re * exposure, dec_t).ok();
            let ph = coupling_from_signal(plan.eta_dm * f.im.abs() * exposure, ph_t).ok();
            let phase_dominates = match (dec, ph) {
                (Some(d), Some(p)) => p < d,
                (None, Some(_)) => true,
                _ => false,
            };
            Ok(PhaseRow {
                m,
                alpha_hat_decoherence: dec,
                alpha_hat_phase: ph,
                phase_dominates,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().filter(|r| r.phase_dominates).collect())
}
