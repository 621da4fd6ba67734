//! Domain value types: the dark-matter scenario, the interferometer, the
//! laboratory site and the dimensionless groups that control every regime.

use crate::error::{Error, Result};
use crate::units::{self, gev_per_cm3_to_natural, km_per_s_to_c, nm_to_natural};

/// Values shared by every experiment unless overridden.
pub mod defaults {
    pub const V_BAR_KM_S: f64 = 230.0;
    pub const V_SUN_KM_S: f64 = 230.0;
    pub const V_ESC_KM_S: f64 = 550.0;
    pub const RHO_GEV_CM3: f64 = 0.04;
    pub const ALPHA_DM: f64 = 1.0;
    pub const ETA_DM: f64 = 0.5;
    pub const ETA_RES: f64 = 1e-3;
    pub const RUN_LENGTH_S: f64 = 30.0 * 86_400.0;
    pub const VISIBILITY: f64 = 0.5;
    /// Room-temperature rms displacement of the nuclei (Å).
    pub const RMS_DISPLACEMENT_ANGSTROM: f64 = 0.1;
}

/// Physics inputs of the dark sector.
///
/// Masses in eV, density in eV⁴, speeds as fractions of c.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DmScenario {
    pub mass: f64,
    pub mediator_mass: f64,
    pub alpha_m: f64,
    pub alpha_dm: f64,
    pub rho: f64,
    pub v_bar: f64,
    pub v_sun: f64,
    pub v_esc: f64,
}

impl DmScenario {
    /// Scenario with the common halo defaults and unit matter coupling.
    pub fn new(mass: f64, mediator_mass: f64) -> Result<Self> {
        let s = DmScenario {
            mass,
            mediator_mass,
            alpha_m: 1.0,
            alpha_dm: defaults::ALPHA_DM,
            rho: gev_per_cm3_to_natural(defaults::RHO_GEV_CM3),
            v_bar: km_per_s_to_c(defaults::V_BAR_KM_S),
            v_sun: km_per_s_to_c(defaults::V_SUN_KM_S),
            v_esc: km_per_s_to_c(defaults::V_ESC_KM_S),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        positive("mass", self.mass)?;
        positive("mediator_mass", self.mediator_mass)?;
        if !(self.alpha_m >= 0.0) || !self.alpha_m.is_finite() {
            return Err(Error::invalid("alpha_m", "must be finite and non-negative"));
        }
        positive("alpha_dm", self.alpha_dm)?;
        positive("rho", self.rho)?;
        positive("v_bar", self.v_bar)?;
        if !(self.v_sun >= 0.0) {
            return Err(Error::invalid("v_sun", "must be non-negative"));
        }
        if !(self.v_bar < self.v_esc) {
            return Err(Error::invalid("v_bar", "must be below v_esc"));
        }
        if !(self.v_sun < self.v_esc) {
            return Err(Error::invalid("v_sun", "must be below v_esc"));
        }
        if !(self.v_esc < 1.0) {
            return Err(Error::invalid("v_esc", "must be below the speed of light"));
        }
        Ok(())
    }

    pub fn with_alpha_m(mut self, alpha_m: f64) -> Result<Self> {
        self.alpha_m = alpha_m;
        self.validate()?;
        Ok(self)
    }

    pub fn with_mediator_mass(mut self, m: f64) -> Result<Self> {
        self.mediator_mass = m;
        self.validate()?;
        Ok(self)
    }

    pub fn with_mass(mut self, mass: f64) -> Result<Self> {
        self.mass = mass;
        self.validate()?;
        Ok(self)
    }

    /// Characteristic momentum M·v̄ (eV).
    pub fn momentum(&self) -> f64 {
        self.mass * self.v_bar
    }

    pub fn rho_gev_cm3(&self) -> f64 {
        units::natural_to_gev_per_cm3(self.rho)
    }

    /// Effective temperature M v̄²/3 in eV.
    pub fn kinetic_temperature(&self) -> f64 {
        self.mass * self.v_bar * self.v_bar / 3.0
    }
}

/// One interferometer: superposed target, separation, exposure and count rate.
#[derive(Clone, Debug, PartialEq)]
pub struct Experiment {
    pub name: String,
    pub composition: String,
    pub radius_nm: f64,
    pub nucleons: f64,
    /// Mean nucleons per nucleus.
    pub atomic_number: f64,
    pub separation_nm: f64,
    pub exposure_ms: f64,
    pub count_rate_hz: f64,
    pub visibility: f64,
    pub rms_displacement_angstrom: f64,
    pub space_based: bool,
}

impl Experiment {
    pub fn validate(&self) -> Result<()> {
        positive("radius_nm", self.radius_nm)?;
        positive("separation_nm", self.separation_nm)?;
        positive("exposure_ms", self.exposure_ms)?;
        positive("count_rate_hz", self.count_rate_hz)?;
        if !(self.visibility > 0.0 && self.visibility <= 1.0) {
            return Err(Error::invalid("visibility", "must lie in (0, 1]"));
        }
        if !(self.atomic_number >= 1.0) {
            return Err(Error::invalid("atomic_number", "must be at least 1"));
        }
        if !(self.nucleons >= self.atomic_number) || !self.nucleons.is_finite() {
            return Err(Error::invalid("nucleons", "must be at least atomic_number"));
        }
        if !(self.rms_displacement_angstrom >= 0.0) {
            return Err(Error::invalid(
                "rms_displacement_angstrom",
                "must be non-negative",
            ));
        }
        Ok(())
    }

    /// Number of nuclei N/A.
    pub fn nuclei(&self) -> f64 {
        self.nucleons / self.atomic_number
    }

    /// Target radius in eV⁻¹.
    pub fn radius(&self) -> f64 {
        nm_to_natural(self.radius_nm)
    }

    /// Superposition separation in eV⁻¹.
    pub fn separation(&self) -> f64 {
        nm_to_natural(self.separation_nm)
    }

    pub fn exposure_s(&self) -> f64 {
        self.exposure_ms * 1e-3
    }

    /// Expected counts over a run of the given length.
    pub fn counts(&self, run_length_s: f64) -> f64 {
        self.count_rate_hz * run_length_s
    }

    /// Look up a registry entry by name, ignoring case and punctuation.
    pub fn lookup(name: &str) -> Result<Experiment> {
        let key = normalize(name);
        registry()
            .into_iter()
            .find(|e| normalize(&e.name) == key)
            .ok_or_else(|| Error::UnknownExperiment(name.to_string()))
    }
}

fn normalize(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn row(
    name: &str,
    composition: &str,
    radius_nm: f64,
    nucleons: f64,
    atomic_number: f64,
    separation_nm: f64,
    exposure_ms: f64,
    count_rate_hz: f64,
    space_based: bool,
) -> Experiment {
    Experiment {
        name: name.to_string(),
        composition: composition.to_string(),
        radius_nm,
        nucleons,
        atomic_number,
        separation_nm,
        exposure_ms,
        count_rate_hz,
        visibility: defaults::VISIBILITY,
        rms_displacement_angstrom: defaults::RMS_DISPLACEMENT_ANGSTROM,
        space_based,
    }
}

/// The seven benchmark interferometers.
///
/// Compound targets use the mean nucleon count per nucleus.
pub fn registry() -> Vec<Experiment> {
    vec![
        row(
            "KDTL",
            "C284H190F320N4S12",
            1.0,
            1.0e4,
            1.0e4 / 810.0,
            266.0,
            1.24,
            10_000.0,
            false,
        ),
        row("OTIMA", "Au", 5.0, 6.0e6, 197.0, 78.5, 94.0, 600.0, false),
        row("Bateman", "Si", 5.5, 1.1e6, 28.0, 150.0, 140.0, 0.5, false),
        row("Geraci", "SiO2", 6.5, 1.6e6, 20.0, 250.0, 250.0, 0.5, false),
        row("Wan", "C", 95.0, 7.5e9, 12.0, 100.0, 0.05, 1.0, false),
        row(
            "MAQRO", "SiO2", 120.0, 1.0e10, 20.0, 100.0, 100_000.0, 0.01, true,
        ),
        row("Pino", "Nb", 1000.0, 2.2e13, 93.0, 290.0, 450.0, 0.1, false),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shielding {
    AbsorbingEarth,
    ReflectingEarth,
    Space,
}

impl Shielding {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "absorbing" | "absorbing-earth" => Ok(Shielding::AbsorbingEarth),
            "reflecting" | "reflecting-earth" => Ok(Shielding::ReflectingEarth),
            "space" => Ok(Shielding::Space),
            other => Err(Error::invalid(
                "shielding",
                format!("unknown mode '{other}'"),
            )),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Shielding::AbsorbingEarth => "absorbing",
            Shielding::ReflectingEarth => "reflecting",
            Shielding::Space => "space",
        }
    }
}

/// Laboratory location and orientation of the superposition axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Site {
    pub latitude_deg: f64,
    /// Degrees east of geographic north.
    pub axis_azimuth_deg: f64,
    pub axis_altitude_deg: f64,
    /// Declination of the direction the wind comes from.
    pub wind_declination_deg: f64,
    pub shielding: Shielding,
}

impl Default for Site {
    fn default() -> Self {
        Site {
            latitude_deg: 48.0,
            axis_azimuth_deg: 70.0,
            axis_altitude_deg: 0.0,
            wind_declination_deg: 38.0,
            shielding: Shielding::AbsorbingEarth,
        }
    }
}

impl Site {
    pub fn space() -> Self {
        Site {
            shielding: Shielding::Space,
            ..Site::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(-90.0..=90.0).contains(&self.latitude_deg) {
            return Err(Error::invalid("latitude_deg", "must lie in [-90, 90]"));
        }
        if !(-90.0..=90.0).contains(&self.wind_declination_deg) {
            return Err(Error::invalid(
                "wind_declination_deg",
                "must lie in [-90, 90]",
            ));
        }
        if !self.axis_azimuth_deg.is_finite() || !(-90.0..=90.0).contains(&self.axis_altitude_deg) {
            return Err(Error::invalid(
                "axis",
                "azimuth must be finite, altitude in [-90, 90]",
            ));
        }
        Ok(())
    }
}

/// The three scale ratios 2Mv̄Δx, 2Mv̄/m and 2Mv̄R.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DimensionlessGroups {
    pub xi_sep: f64,
    pub xi_med: f64,
    pub xi_rad: f64,
}

impl DimensionlessGroups {
    pub fn new(scenario: &DmScenario, experiment: &Experiment) -> Self {
        let p2 = 2.0 * scenario.momentum();
        DimensionlessGroups {
            xi_sep: p2 * experiment.separation(),
            xi_med: p2 / scenario.mediator_mass,
            xi_rad: p2 * experiment.radius(),
        }
    }
}

pub fn dimensionless_groups(scenario: &DmScenario, experiment: &Experiment) -> DimensionlessGroups {
    DimensionlessGroups::new(scenario, experiment)
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, "must be positive and finite"))
    }
}
