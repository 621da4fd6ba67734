//! Validity of the Born approximation and exact square-well scattering.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DmScenario, Experiment};
use crate::special::{scaled_spherical_in_array, spherical_jn_array, spherical_yn_array};

/// Which ordering of m, 1/R and k selected the ratio formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BornRegime {
    /// m R < 1, k < m.
    LongRangeSlow,
    /// m R < 1, q < m < k.
    LongRangeForward,
    /// m R < 1, m < q < k.
    LongRangeHard,
    /// m R > 1, k R < 1.
    ShortRangeSlow,
    /// m R > 1, k R > 1.
    ShortRangeFast,
    /// Two scales within a factor of three; the larger formula is reported.
    Mixed,
}

impl BornRegime {
    pub fn name(self) -> &'static str {
        match self {
            BornRegime::LongRangeSlow => "long-range-slow",
            BornRegime::LongRangeForward => "long-range-forward",
            BornRegime::LongRangeHard => "long-range-hard",
            BornRegime::ShortRangeSlow => "short-range-slow",
            BornRegime::ShortRangeFast => "short-range-fast",
            BornRegime::Mixed => "mixed",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BornValidity {
    /// |T⁽²⁾ / T⁽¹⁾|.
    pub ratio: f64,
    pub regime: BornRegime,
    pub valid: bool,
}

/// Scales closer than this factor are treated as comparable.
const SEPARATION: f64 = 3.0;

/// Second-to-first Born ratio at incident momentum k and transfer q (eV).
pub fn born_validity(
    scenario: &DmScenario,
    experiment: &Experiment,
    k: f64,
    q: f64,
) -> Result<BornValidity> {
    if !(k > 0.0) || !(q > 0.0) {
        return Err(Error::invalid("momentum", "k and q must be positive"));
    }
    let m = scenario.mediator_mass;
    let r = experiment.radius();
    let prefactor =
        experiment.nucleons * (scenario.alpha_dm * scenario.alpha_m).sqrt() / scenario.v_bar;

    // Each comparison yields the sides that apply: (below, above).
    let sides = |a: f64, b: f64| -> (bool, bool) {
        let ratio = a / b;
        (ratio < SEPARATION, ratio > 1.0 / SEPARATION)
    };
    let mut hits: Vec<(BornRegime, f64)> = Vec::new();
    let (long, short) = sides(m * r, 1.0);
    if long {
        let (slow, fast) = sides(k, m);
        if slow {
            hits.push((BornRegime::LongRangeSlow, k / m));
        }
        if fast {
            let (forward, hard) = sides(q, m);
            if forward {
                hits.push((BornRegime::LongRangeForward, 0.5));
            }
            if hard {
                hits.push((BornRegime::LongRangeHard, 2.0 * (q / m).ln().max(0.0)));
            }
        }
    }
    if short {
        let (slow, fast) = sides(k * r, 1.0);
        if slow {
            hits.push((BornRegime::ShortRangeSlow, 12.0 * k / (5.0 * m * m * r)));
        }
        if fast {
            hits.push((BornRegime::ShortRangeFast, (1.5 / (m * r)).powi(2)));
        }
    }
    let (regime, shape) = match hits.as_slice() {
        [(reg, v)] => (*reg, *v),
        many => (
            BornRegime::Mixed,
            many.iter().map(|h| h.1).fold(0.0, f64::max),
        ),
    };
    let ratio = prefactor * shape;
    Ok(BornValidity {
        ratio,
        regime,
        valid: ratio < 1.0,
    })
}

/// Ratio at the characteristic momenta k = M v̄ and q = min(m, 1/R, k).
pub fn born_validity_characteristic(
    scenario: &DmScenario,
    experiment: &Experiment,
) -> Result<BornValidity> {
    let k = scenario.momentum();
    let q = scenario.mediator_mass.min(1.0 / experiment.radius()).min(k);
    born_validity(scenario, experiment, k, q)
}

/// Spherical square hump (V0 > 0) or well (V0 < 0), natural units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SquareWell {
    pub v0: f64,
    pub radius: f64,
}

impl SquareWell {
    pub fn new(v0: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::invalid("radius", "must be positive"));
        }
        if !v0.is_finite() {
            return Err(Error::invalid("v0", "must be finite"));
        }
        Ok(SquareWell { v0, radius })
    }

    /// Interior κ² = k² − 2 M V0; negative inside a hump below its top.
    pub fn kappa_squared(&self, k: f64, mass: f64) -> f64 {
        k * k - 2.0 * mass * self.v0
    }
}

/// Partial-wave cutoff for the exact sum.
pub fn partial_wave_lmax(k: f64, radius: f64) -> usize {
    10usize.max(2 * (k * radius).ceil() as usize + 10)
}

/// Phase shifts δ_ℓ for ℓ = 0..=lmax.
pub fn square_well_phase_shifts(well: &SquareWell, k: f64, mass: f64, lmax: usize) -> Vec<f64> {
    let n = lmax + 2;
    let x = k * well.radius;
    let mut j = vec![0.0; n];
    let mut y = vec![0.0; n];
    spherical_jn_array(x, &mut j);
    spherical_yn_array(x, &mut y);
    let k2 = well.kappa_squared(k, mass);
    let kap = k2.abs().sqrt();
    let xi = kap * well.radius;
    let mut inner = vec![0.0; n];
    if k2 >= 0.0 {
        spherical_jn_array(xi, &mut inner);
    } else {
        scaled_spherical_in_array(xi, &mut inner);
    }
    (0..=lmax)
        .map(|l| {
            let lf = l as f64;
            let dj = deriv(&j, l, x);
            let dy = deriv(&y, l, x);
            // Interior value and κ-weighted derivative, both up to a common factor.
            let (u, du) = if k2 >= 0.0 {
                (inner[l], kap * deriv(&inner, l, xi))
            } else if xi == 0.0 {
                (if l == 0 { 1.0 } else { 0.0 }, 0.0)
            } else {
                (inner[l], kap * (inner[l + 1] + lf / xi * inner[l]))
            };
            let num = k * dj * u - du * j[l];
            let den = k * dy * u - du * y[l];
            num.atan2(den)
        })
        .map(|d| {
            // atan2 gives δ modulo π; fold into (−π/2, π/2].
            if d > std::f64::consts::FRAC_PI_2 {
                d - std::f64::consts::PI
            } else if d <= -std::f64::consts::FRAC_PI_2 {
                d + std::f64::consts::PI
            } else {
                d
            }
        })
        .collect()
}

fn deriv(f: &[f64], l: usize, x: f64) -> f64 {
    if l == 0 {
        -f[1]
    } else {
        f[l - 1] - (l as f64 + 1.0) / x * f[l]
    }
}

/// Exact partial-wave total cross section (4π/k²) Σ (2ℓ+1) sin²δ_ℓ.
pub fn square_well_exact_sigma(well: &SquareWell, k: f64, mass: f64) -> Result<f64> {
    if !(k > 0.0) || !(mass > 0.0) {
        return Err(Error::invalid("k", "momentum and mass must be positive"));
    }
    let lmax = partial_wave_lmax(k, well.radius);
    let deltas = square_well_phase_shifts(well, k, mass, lmax);
    let sum: f64 = deltas
        .iter()
        .enumerate()
        .map(|(l, d)| (2 * l + 1) as f64 * d.sin().powi(2))
        .sum();
    Ok(4.0 * std::f64::consts::PI / (k * k) * sum)
}

/// First Born approximation to the square-well total cross section.
pub fn square_well_born_sigma(well: &SquareWell, k: f64, mass: f64) -> Result<f64> {
    if !(k > 0.0) || !(mass > 0.0) {
        return Err(Error::invalid("k", "momentum and mass must be positive"));
    }
    let r = well.radius;
    let y = 2.0 * k * r;
    let shape = if y < 0.1 {
        let y2 = y * y;
        y2 * (2.0 / 9.0 - y2 / 45.0 + 2.0 * y2 * y2 / 1575.0)
    } else {
        1.0 - 1.0 / (y * y) + (2.0 * y).sin() / y.powi(3) - y.sin().powi(2) / y.powi(4)
    };
    Ok(2.0 * std::f64::consts::PI * mass * mass * well.v0 * well.v0 * r.powi(4) / (k * k) * shape)
}

/// Low-energy s-wave result 4πR²(1 − tanh(R√(2MV0))/(R√(2MV0))).
pub fn square_well_s_wave_sigma(well: &SquareWell, mass: f64) -> f64 {
    let r = well.radius;
    let g = (2.0 * mass * well.v0.abs()).sqrt() * r;
    let ratio = if g < 1e-6 {
        if well.v0 >= 0.0 {
            1.0 - g * g / 3.0
        } else {
            1.0 + g * g / 3.0
        }
    } else if well.v0 >= 0.0 {
        g.tanh() / g
    } else {
        g.tan() / g
    };
    4.0 * std::f64::consts::PI * r * r * (1.0 - ratio).powi(2)
}
