//! Physical constants and natural-unit conversions.
//!
//! Everything internal is expressed in natural units (ħ = c = 1) with the
//! electron-volt as the base: masses and momenta in eV, lengths and times in
//! eV⁻¹, densities in eV⁴. Velocities are fractions of c.

use crate::error::{Error, Result};

/// ħc in eV·nm.
pub const HBAR_C_EV_NM: f64 = 197.326_980_4;
/// ħ in eV·s.
pub const HBAR_EV_S: f64 = 6.582_119_569e-16;
/// Speed of light in m/s.
pub const C_M_PER_S: f64 = 299_792_458.0;
/// Boltzmann constant in eV/K.
pub const K_B_EV_PER_K: f64 = 8.617_333_262e-5;
/// Mass of 1 eV/c² in kg.
pub const KG_PER_EV: f64 = 1.782_661_921e-36;
/// Seconds in a sidereal day.
pub const SIDEREAL_DAY_S: f64 = 86_164.090_5;

pub const NM_PER_CM: f64 = 1e7;
pub const NM_PER_M: f64 = 1e9;

/// Length in nm to eV⁻¹.
pub fn nm_to_natural(nm: f64) -> f64 {
    nm / HBAR_C_EV_NM
}

/// Length in eV⁻¹ to nm.
pub fn natural_to_nm(len: f64) -> f64 {
    len * HBAR_C_EV_NM
}

pub fn angstrom_to_natural(a: f64) -> f64 {
    nm_to_natural(0.1 * a)
}

/// Time in seconds to eV⁻¹.
pub fn seconds_to_natural(s: f64) -> f64 {
    s / HBAR_EV_S
}

/// Rate in eV to s⁻¹.
pub fn rate_to_hz(rate_ev: f64) -> f64 {
    rate_ev / HBAR_EV_S
}

pub fn km_per_s_to_c(v: f64) -> f64 {
    v * 1e3 / C_M_PER_S
}

pub fn c_to_km_per_s(v: f64) -> f64 {
    v * C_M_PER_S / 1e3
}

/// Mass density in GeV/cm³ to eV⁴.
pub fn gev_per_cm3_to_natural(rho: f64) -> f64 {
    let cm = nm_to_natural(NM_PER_CM);
    rho * 1e9 / (cm * cm * cm)
}

/// Mass density in eV⁴ to GeV/cm³.
pub fn natural_to_gev_per_cm3(rho: f64) -> f64 {
    let cm = nm_to_natural(NM_PER_CM);
    rho * cm * cm * cm / 1e9
}

/// Area in eV⁻² to cm².
pub fn natural_area_to_cm2(area: f64) -> f64 {
    let cm = HBAR_C_EV_NM / NM_PER_CM;
    area * cm * cm
}

/// Area in eV⁻² to m².
pub fn natural_area_to_m2(area: f64) -> f64 {
    let m = HBAR_C_EV_NM / NM_PER_M;
    area * m * m
}

pub fn kelvin_to_ev(t: f64) -> f64 {
    K_B_EV_PER_K * t
}

/// Reduced wavelength ħc/E in nm for a mass or energy in eV.
pub fn reduced_wavelength(energy_ev: f64) -> Result<f64> {
    if !(energy_ev > 0.0) {
        return Err(Error::invalid("energy", "must be positive"));
    }
    Ok(HBAR_C_EV_NM / energy_ev)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mediator_range_at_ten_mev() {
        let l = reduced_wavelength(0.01).unwrap();
        assert!((l - 19_732.698_04).abs() < 1e-6);
    }

    #[test]
    fn dm_wavelength_at_one_mev() {
        let p = 1e6 * km_per_s_to_c(230.0);
        let l = reduced_wavelength(p).unwrap();
        assert!((l - 0.2572).abs() < 5e-4, "{l}");
    }

    #[test]
    fn rejects_non_positive() {
        assert!(reduced_wavelength(0.0).is_err());
        assert!(reduced_wavelength(-1.0).is_err());
        assert!(reduced_wavelength(f64::NAN).is_err());
    }

    #[test]
    fn density_conversion() {
        // 1 cm = 50677.307 eV⁻¹, so 0.04 GeV/cm³ = 4e7 / 50677.307³ eV⁴
        let rho = gev_per_cm3_to_natural(0.04);
        assert!((rho / 3.0734e-7 - 1.0).abs() < 1e-4, "{rho}");
    }
}
