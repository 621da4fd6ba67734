//! Run configuration: TOML file, then command-line overrides, then
//! validation with the offending field path in every error.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::atmosphere::AtmosphereModel;
use crate::error::{Error, Result};
use crate::flux::FluxMode;
use crate::model::{defaults, DmScenario, Experiment, Shielding, Site};
use crate::statistics::{Channel, RunPlan};
use crate::units::{gev_per_cm3_to_natural, km_per_s_to_c};

/// Seed used when neither the file nor the flags give one.
pub const DEFAULT_SEED: u64 = 20_240_917;

/// Experiment used when none is named.
pub const DEFAULT_EXPERIMENT: &str = "OTIMA";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub mass_ev: Option<f64>,
    pub mediator_mass_ev: Option<f64>,
    pub alpha_m: Option<f64>,
    pub alpha_dm: Option<f64>,
    pub rho_gev_cm3: Option<f64>,
    pub v_bar_km_s: Option<f64>,
    pub v_sun_km_s: Option<f64>,
    pub v_esc_km_s: Option<f64>,
}

/// Inline experiment; with `name` set to a registry entry the remaining
/// fields override it, otherwise every field is required.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub name: Option<String>,
    pub composition: Option<String>,
    pub radius_nm: Option<f64>,
    pub nucleons: Option<f64>,
    pub atomic_number: Option<f64>,
    pub separation_nm: Option<f64>,
    pub exposure_ms: Option<f64>,
    pub count_rate_hz: Option<f64>,
    pub visibility: Option<f64>,
    pub rms_displacement_angstrom: Option<f64>,
    pub space_based: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteSection {
    pub latitude_deg: Option<f64>,
    pub axis_azimuth_deg: Option<f64>,
    pub axis_altitude_deg: Option<f64>,
    pub wind_declination_deg: Option<f64>,
    pub shielding: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSection {
    pub run_length_days: Option<f64>,
    pub eta_dm: Option<f64>,
    pub eta_res: Option<f64>,
    pub channel: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtmosphereSection {
    pub m_atm_gev: Option<f64>,
    pub pressure_pa: Option<f64>,
    pub gravity: Option<f64>,
    pub temperature_k: Option<f64>,
    pub crust_temperature_k: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub m_grid: Option<String>,
    pub mode: Option<String>,
    pub temperature_k: Option<f64>,
    pub greenhouse: Option<bool>,
    pub seed: Option<u64>,
    pub points: Option<usize>,
    pub replicas: Option<usize>,
    pub s_tilde: Option<f64>,
    pub delta_b_rel: Option<f64>,
    pub total_counts: Option<f64>,
    pub wind_angle_deg: Option<f64>,
    pub sidereal_phase: Option<f64>,
    pub mc_samples: Option<usize>,
    pub overlay: Option<PathBuf>,
    pub phase_region: Option<bool>,
    pub out: Option<PathBuf>,
}

/// The file as written, every field optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub scenario: ScenarioSection,
    /// Registry name or inline table.
    pub experiment: Option<toml::Value>,
    #[serde(default)]
    pub site: SiteSection,
    #[serde(default)]
    pub plan: PlanSection,
    #[serde(default)]
    pub atmosphere: AtmosphereSection,
    #[serde(default)]
    pub run: RunSection,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn experiment_section(&self) -> Result<Option<ExperimentSection>> {
        match &self.experiment {
            None => Ok(None),
            Some(toml::Value::String(name)) => Ok(Some(ExperimentSection {
                name: Some(name.clone()),
                ..Default::default()
            })),
            Some(v @ toml::Value::Table(_)) => {
                v.clone()
                    .try_into()
                    .map(Some)
                    .map_err(|e: toml::de::Error| {
                        Error::Config(format!("experiment: {}", e.message()))
                    })
            }
            Some(_) => Err(Error::Config(
                "experiment: expected a registry name or a table".into(),
            )),
        }
    }
}

/// Inclusive log-spaced grid written lo:hi:points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::invalid("m_grid", format!("expected lo:hi:points, got '{s}'"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let points: usize = parts[2].trim().parse().map_err(|_| bad())?;
        let g = GridSpec { lo, hi, points };
        g.values()?;
        Ok(g)
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        crate::sensitivity::log_grid(self.lo, self.hi, self.points)
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            lo: 1e-2,
            hi: 1e4,
            points: 60,
        }
    }
}

/// Options that steer individual subcommands.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub m_grid: GridSpec,
    pub mode: FluxMode,
    pub greenhouse: bool,
    pub seed: u64,
    /// Sidereal phases in a daily series.
    pub points: usize,
    pub replicas: usize,
    pub s_tilde: f64,
    /// ΔB/B₀.
    pub delta_b_rel: f64,
    /// B₀; the plan's total counts when absent.
    pub total_counts: Option<f64>,
    pub wind_angle_deg: f64,
    pub sidereal_phase: Option<f64>,
    pub mc_samples: Option<usize>,
    pub overlay: Option<PathBuf>,
    pub phase_region: bool,
    pub out: PathBuf,
}

/// Fully validated configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scenario: DmScenario,
    /// The matter coupling was set explicitly rather than left at 1.
    pub alpha_m_given: bool,
    pub experiment: Experiment,
    pub site: Site,
    pub plan: RunPlan,
    pub atmosphere: AtmosphereModel,
    pub run: RunOptions,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub experiment: Option<String>,
    pub mass_ev: Option<f64>,
    pub mediator_mass_ev: Option<f64>,
    pub alpha_m: Option<f64>,
    pub m_grid: Option<String>,
    pub mode: Option<String>,
    pub temperature_k: Option<f64>,
    pub shielding: Option<String>,
    pub greenhouse: bool,
    pub seed: Option<u64>,
    pub points: Option<usize>,
    pub replicas: Option<usize>,
    pub s_tilde: Option<f64>,
    pub delta_b_rel: Option<f64>,
    pub total_counts: Option<f64>,
    pub channel: Option<String>,
    pub wind_angle_deg: Option<f64>,
    pub sidereal_phase: Option<f64>,
    pub mc_samples: Option<usize>,
    pub overlay: Option<PathBuf>,
    pub phase_region: bool,
    pub out: Option<PathBuf>,
}

/// Prefix the field named in a validation error with its section.
fn in_section<T>(section: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Invalid { field, reason } => Error::Invalid {
            field: format!("{section}.{field}"),
            reason,
        },
        other => other,
    })
}

fn resolve_experiment(file: &ConfigFile, name_override: Option<&str>) -> Result<Experiment> {
    let section = file.experiment_section()?;
    let inline = section.is_some();
    let section = section.unwrap_or_default();
    // Without any experiment information fall back to the registry default.
    let name = name_override
        .map(str::to_string)
        .or(section.name.clone())
        .or_else(|| (!inline).then(|| DEFAULT_EXPERIMENT.to_string()));
    let mut e = match &name {
        Some(n) if name_override.is_some() || Experiment::lookup(n).is_ok() => {
            Experiment::lookup(n)?
        }
        _ => {
            let need = |v: Option<f64>, f: &str| {
                v.ok_or_else(|| {
                    Error::invalid(
                        format!("experiment.{f}"),
                        "required for an inline experiment",
                    )
                })
            };
            Experiment {
                name: name.clone().unwrap_or_else(|| "custom".into()),
                composition: section.composition.clone().unwrap_or_default(),
                radius_nm: need(section.radius_nm, "radius_nm")?,
                nucleons: need(section.nucleons, "nucleons")?,
                atomic_number: need(section.atomic_number, "atomic_number")?,
                separation_nm: need(section.separation_nm, "separation_nm")?,
                exposure_ms: need(section.exposure_ms, "exposure_ms")?,
                count_rate_hz: need(section.count_rate_hz, "count_rate_hz")?,
                visibility: defaults::VISIBILITY,
                rms_displacement_angstrom: defaults::RMS_DISPLACEMENT_ANGSTROM,
                space_based: false,
            }
        }
    };
    if name_override.is_none() {
        let s = &section;
        macro_rules! set {
            ($f:ident) => {
                if let Some(v) = s.$f.clone() {
                    e.$f = v;
                }
            };
        }
        set!(composition);
        set!(radius_nm);
        set!(nucleons);
        set!(atomic_number);
        set!(separation_nm);
        set!(exposure_ms);
        set!(count_rate_hz);
        set!(visibility);
        set!(rms_displacement_angstrom);
        set!(space_based);
    }
    in_section("experiment", e.validate())?;
    Ok(e)
}

impl RunConfig {
    /// Merge defaults, the optional file and the overrides, then validate.
    pub fn resolve(file: Option<&ConfigFile>, o: &Overrides) -> Result<Self> {
        let empty = ConfigFile::default();
        let f = file.unwrap_or(&empty);

        let sc = &f.scenario;
        let mass = o.mass_ev.or(sc.mass_ev).unwrap_or(1e6);
        let m = o.mediator_mass_ev.or(sc.mediator_mass_ev).unwrap_or(20.0);
        let alpha_m = o.alpha_m.or(sc.alpha_m);
        let scenario = DmScenario {
            mass,
            mediator_mass: m,
            alpha_m: alpha_m.unwrap_or(1.0),
            alpha_dm: sc.alpha_dm.unwrap_or(defaults::ALPHA_DM),
            rho: gev_per_cm3_to_natural(sc.rho_gev_cm3.unwrap_or(defaults::RHO_GEV_CM3)),
            v_bar: km_per_s_to_c(sc.v_bar_km_s.unwrap_or(defaults::V_BAR_KM_S)),
            v_sun: km_per_s_to_c(sc.v_sun_km_s.unwrap_or(defaults::V_SUN_KM_S)),
            v_esc: km_per_s_to_c(sc.v_esc_km_s.unwrap_or(defaults::V_ESC_KM_S)),
        };
        in_section("scenario", scenario.validate())?;

        let experiment = resolve_experiment(f, o.experiment.as_deref())?;

        let st = &f.site;
        let base = if experiment.space_based {
            Site::space()
        } else {
            Site::default()
        };
        let shielding = match o.shielding.as_deref().or(st.shielding.as_deref()) {
            Some(s) => in_section("site", Shielding::parse(s))?,
            None => base.shielding,
        };
        let site = Site {
            latitude_deg: st.latitude_deg.unwrap_or(base.latitude_deg),
            axis_azimuth_deg: st.axis_azimuth_deg.unwrap_or(base.axis_azimuth_deg),
            axis_altitude_deg: st.axis_altitude_deg.unwrap_or(base.axis_altitude_deg),
            wind_declination_deg: st.wind_declination_deg.unwrap_or(base.wind_declination_deg),
            shielding,
        };
        in_section("site", site.validate())?;

        let mut plan = RunPlan::new(experiment.clone())?;
        let p = &f.plan;
        if let Some(d) = p.run_length_days {
            plan.run_length_s = d * 86_400.0;
        }
        if let Some(v) = p.eta_dm {
            plan.eta_dm = v;
        }
        if let Some(v) = p.eta_res {
            plan.eta_res = v;
        }
        if let Some(c) = o.channel.as_deref().or(p.channel.as_deref()) {
            plan.channel = in_section("plan", Channel::parse(c))?;
        }
        in_section("plan", plan.validate())?;

        let a = &f.atmosphere;
        let d = AtmosphereModel::default();
        let atmosphere = AtmosphereModel {
            m_atm_gev: a.m_atm_gev.unwrap_or(d.m_atm_gev),
            pressure_pa: a.pressure_pa.unwrap_or(d.pressure_pa),
            gravity: a.gravity.unwrap_or(d.gravity),
            temperature_k: a.temperature_k.unwrap_or(d.temperature_k),
            crust_temperature_k: a.crust_temperature_k.unwrap_or(d.crust_temperature_k),
        };
        in_section("atmosphere", atmosphere.validate())?;

        let r = &f.run;
        let m_grid = match o.m_grid.as_deref().or(r.m_grid.as_deref()) {
            Some(s) => in_section("run", GridSpec::parse(s))?,
            None => GridSpec::default(),
        };
        let temperature = o
            .temperature_k
            .or(r.temperature_k)
            .unwrap_or(atmosphere.crust_temperature_k);
        let mode = in_section(
            "run",
            FluxMode::parse(
                o.mode
                    .as_deref()
                    .or(r.mode.as_deref())
                    .unwrap_or("anisotropic"),
                temperature,
            ),
        )?;
        let run = RunOptions {
            m_grid,
            mode,
            greenhouse: o.greenhouse || r.greenhouse.unwrap_or(false),
            seed: o.seed.or(r.seed).unwrap_or(DEFAULT_SEED),
            points: o.points.or(r.points).unwrap_or(96),
            replicas: o.replicas.or(r.replicas).unwrap_or(1000),
            s_tilde: o.s_tilde.or(r.s_tilde).unwrap_or(0.0),
            delta_b_rel: o.delta_b_rel.or(r.delta_b_rel).unwrap_or(0.0),
            total_counts: o.total_counts.or(r.total_counts),
            wind_angle_deg: o.wind_angle_deg.or(r.wind_angle_deg).unwrap_or(0.0),
            sidereal_phase: o.sidereal_phase.or(r.sidereal_phase),
            mc_samples: o.mc_samples.or(r.mc_samples),
            overlay: o.overlay.clone().or(r.overlay.clone()),
            phase_region: o.phase_region || r.phase_region.unwrap_or(false),
            out: o
                .out
                .clone()
                .or(r.out.clone())
                .unwrap_or_else(|| PathBuf::from(".")),
        };
        if run.points < 2 {
            return Err(Error::invalid(
                "run.points",
                "need at least two sidereal phases",
            ));
        }
        if run.replicas < 2 {
            return Err(Error::invalid("run.replicas", "need at least two"));
        }
        if !(0.0..1.0).contains(&run.delta_b_rel) {
            return Err(Error::invalid("run.delta_b_rel", "must lie in [0, 1)"));
        }
        if run.total_counts.is_some_and(|b| !(b > 0.0)) {
            return Err(Error::invalid("run.total_counts", "must be positive"));
        }
        if let Some(p) = run.sidereal_phase {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid("run.sidereal_phase", "must lie in [0, 1]"));
            }
        }
        Ok(RunConfig {
            scenario,
            alpha_m_given: alpha_m.is_some(),
            experiment,
            site,
            plan,
            atmosphere,
            run,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_uses_common_defaults() {
        let f = ConfigFile::parse("[scenario]\n").unwrap();
        let c = RunConfig::resolve(Some(&f), &Overrides::default()).unwrap();
        assert!((c.scenario.rho_gev_cm3() - 0.04).abs() < 1e-12);
        assert_eq!(c.scenario.alpha_dm, 1.0);
        assert!((crate::units::c_to_km_per_s(c.scenario.v_bar) - 230.0).abs() < 1e-9);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let e = ConfigFile::parse("[scenario]\nmas_ev = 3\n").unwrap_err();
        assert!(e.to_string().contains("mas_ev"), "{e}");
        let f = ConfigFile::parse("[experiment]\nname = \"OTIMA\"\nradius = 3\n").unwrap();
        assert!(RunConfig::resolve(Some(&f), &Overrides::default()).is_err());
    }

    #[test]
    fn negative_mass_names_the_field() {
        let f = ConfigFile::parse("[scenario]\nmass_ev = -1.0\n").unwrap();
        let e = RunConfig::resolve(Some(&f), &Overrides::default()).unwrap_err();
        assert!(e.to_string().contains("scenario.mass"), "{e}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn registry_name_and_overrides() {
        let f = ConfigFile::parse("experiment = \"OTIMA\"\n").unwrap();
        let c = RunConfig::resolve(Some(&f), &Overrides::default()).unwrap();
        assert_eq!(c.experiment.radius_nm, 5.0);
        assert_eq!(c.experiment.separation_nm, 78.5);
        let f =
            ConfigFile::parse("[experiment]\nname = \"OTIMA\"\nseparation_nm = 100.0\n").unwrap();
        let c = RunConfig::resolve(Some(&f), &Overrides::default()).unwrap();
        assert_eq!(c.experiment.separation_nm, 100.0);
        assert_eq!(c.experiment.count_rate_hz, 600.0);
    }

    #[test]
    fn grid_spec() {
        let g = GridSpec::parse("1e-2:1e4:7").unwrap();
        assert_eq!(g.points, 7);
        assert!(GridSpec::parse("1:2").is_err());
        assert!(GridSpec::parse("2:1:3").is_err());
    }
}
