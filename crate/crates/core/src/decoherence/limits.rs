//! Closed-form limiting regimes of the decoherence rate.
//!
//! When one length dominates, F ≈ N² 4π α_M α_DM ρ M v̄ m⁻⁴ Y Φ²/Ω⁴ with
//! Ω = max(ξ_m, ξ_R, 1) and Φ = min(ξ_Δ, Ω). The coefficients Y are moments
//! of the halo for v_⊙ = v̄, v_esc → ∞ and the wind along Δx.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DimensionlessGroups, DmScenario, Experiment};
use crate::quad::{gl32, integrate_adaptive};
use crate::special::{erf, sphere_form_factor};
use crate::units::rate_to_hz;

/// The scale that sets Ω.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OmegaScale {
    /// Ω = 1: the DM wavelength dominates.
    Wavelength,
    /// Ω = ξ_m: the mediator range dominates.
    Mediator,
    /// Ω = ξ_R: the target radius dominates.
    Radius,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LimitingRegime {
    pub omega: OmegaScale,
    /// Φ = ξ_Δ (separation smaller than the dominant length) or Φ = Ω.
    pub separation_limited: bool,
}

impl LimitingRegime {
    pub const ALL: [LimitingRegime; 6] = [
        LimitingRegime::new(OmegaScale::Mediator, false),
        LimitingRegime::new(OmegaScale::Radius, false),
        LimitingRegime::new(OmegaScale::Wavelength, false),
        LimitingRegime::new(OmegaScale::Mediator, true),
        LimitingRegime::new(OmegaScale::Radius, true),
        LimitingRegime::new(OmegaScale::Wavelength, true),
    ];

    pub const fn new(omega: OmegaScale, separation_limited: bool) -> Self {
        LimitingRegime {
            omega,
            separation_limited,
        }
    }

    /// Label such as "Y(med,sep)".
    pub fn label(&self) -> String {
        let o = match self.omega {
            OmegaScale::Wavelength => "1",
            OmegaScale::Mediator => "med",
            OmegaScale::Radius => "rad",
        };
        let p = if self.separation_limited { "sep" } else { o };
        format!("Y({o},{p})")
    }

    /// Length that sets the sensitivity, Σ = Φ/Ω in units of λ̄_DM.
    pub fn sigma_name(&self) -> &'static str {
        if self.separation_limited {
            return "separation";
        }
        match self.omega {
            OmegaScale::Wavelength => "dm-wavelength",
            OmegaScale::Mediator => "mediator-range",
            OmegaScale::Radius => "radius",
        }
    }

    /// Tabulated coefficient.
    pub fn y(&self) -> f64 {
        match (self.omega, self.separation_limited) {
            (OmegaScale::Mediator, false) => 3.3708,
            (OmegaScale::Radius, false) => 15.1686,
            (OmegaScale::Wavelength, false) => 5.88642,
            (OmegaScale::Mediator, true) => 1.61279,
            (OmegaScale::Radius, true) => 9.92504,
            (OmegaScale::Wavelength, true) => 2.25982,
        }
    }
}

/// Closed-form estimate in one of the six limits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LimitingRate {
    pub rate_hz: f64,
    pub regime: LimitingRegime,
    pub y: f64,
    /// Smallest ratio between the dominant scale and its competitors.
    pub dominance: f64,
}

/// Identify the limit that applies, requiring `min_ratio` between scales.
pub fn classify_limit(
    groups: &DimensionlessGroups,
    min_ratio: f64,
) -> Result<(LimitingRegime, f64)> {
    let mut scales = [
        (OmegaScale::Wavelength, 1.0),
        (OmegaScale::Mediator, groups.xi_med),
        (OmegaScale::Radius, groups.xi_rad),
    ];
    scales.sort_by(|a, b| b.1.total_cmp(&a.1));
    let omega = scales[0].1;
    let lead = omega / scales[1].1;
    let sep = groups.xi_sep / omega;
    let sep_ratio = if sep >= 1.0 { sep } else { 1.0 / sep };
    let dominance = lead.min(sep_ratio);
    if dominance < min_ratio {
        return Err(Error::MixedRegime);
    }
    Ok((LimitingRegime::new(scales[0].0, sep < 1.0), dominance))
}

/// F from the tabulated coefficient, with the limit demanded to hold by 10×.
pub fn limiting_rate(scenario: &DmScenario, experiment: &Experiment) -> Result<LimitingRate> {
    scenario.validate()?;
    experiment.validate()?;
    let g = DimensionlessGroups::new(scenario, experiment);
    let (regime, dominance) = classify_limit(&g, 10.0)?;
    let omega = g.xi_med.max(g.xi_rad).max(1.0);
    let phi = g.xi_sep.min(omega);
    let y = regime.y();
    let n = experiment.nucleons;
    let m = scenario.mediator_mass;
    let rate = n
        * n
        * 4.0
        * PI
        * scenario.alpha_m
        * scenario.alpha_dm
        * scenario.rho
        * scenario.momentum()
        / m.powi(4)
        * y
        * phi
        * phi
        / omega.powi(4);
    Ok(LimitingRate {
        rate_hz: rate_to_hz(rate),
        regime,
        y,
        dominance,
    })
}

/// Φ(s, C) = 2π Z exp(−s² − u² + 2suC) for u = 1, wind along Δx, no escape cut.
fn phi_aligned(s: f64, c: f64) -> f64 {
    2.0 * PI * PI.powf(-1.5) * (-s * s - 1.0 + 2.0 * s * c).exp()
}

/// Moment ∫ d³s n(s) g(s) of the aligned u = 1 halo, by direct 2D quadrature.
fn halo_moment(g: impl Fn(f64) -> f64) -> f64 {
    let r = gl32();
    let mut total = 0.0;
    for p in 0..12 {
        for (s, ws) in r.mapped(p as f64 * 0.5, (p + 1) as f64 * 0.5) {
            let ang: f64 = r
                .mapped(-1.0, 1.0)
                .map(|(c, wc)| wc * phi_aligned(s, c))
                .sum();
            total += ws * s * s * ang * g(s);
        }
    }
    total
}

/// ∫₀^∞ x f̃²(x) dx (exactly 9/4), by quadrature with an analytic tail.
pub fn form_factor_moment() -> f64 {
    let cut = 400.0;
    let (body, _) = integrate_adaptive(
        |x| x * sphere_form_factor(x).powi(2),
        0.0,
        cut,
        1e-12,
        1e-14,
    )
    .expect("bounded oscillatory integrand");
    // Tail: 9 cos²x / x³ averages to 9/(2x³).
    body + 9.0 / (4.0 * cut * cut)
}

/// Second-order angular factor ∫dC Φ [½c²C² + ¼(1−c²)(1−C²)] for aligned wind.
fn quadratic_angular(s: f64, c: f64, parallel_only: bool) -> f64 {
    gl32()
        .mapped(-1.0, 1.0)
        .map(|(cc, w)| {
            let par = 0.5 * c * c * cc * cc;
            let perp = if parallel_only {
                0.0
            } else {
                0.25 * (1.0 - c * c) * (1.0 - cc * cc)
            };
            w * phi_aligned(s, cc) * (par + perp)
        })
        .sum()
}

/// How a coefficient was evaluated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct YEvaluation {
    pub value: f64,
    /// Same limit keeping only the q ∥ Δx part of the small-separation kernel.
    pub parallel_only: Option<f64>,
}

/// Evaluate Y from its limiting integral.
///
/// The separation-limited coefficients with Ω = ξ_m or ξ_R are evaluated at
/// the finite `omega` given, since their integrals grow like ln Ω.
pub fn evaluate_y(regime: LimitingRegime, omega: f64) -> YEvaluation {
    match (regime.omega, regime.separation_limited) {
        (OmegaScale::Wavelength, false) => YEvaluation {
            value: 4.0 * halo_moment(|s| s),
            parallel_only: None,
        },
        (OmegaScale::Mediator, false) => YEvaluation {
            value: 4.0 * halo_moment(|s| 1.0 / s),
            parallel_only: None,
        },
        (OmegaScale::Radius, false) => YEvaluation {
            value: 8.0 * form_factor_moment() * halo_moment(|s| 1.0 / s),
            parallel_only: None,
        },
        (OmegaScale::Wavelength, true) => {
            let v = small_sep(|_, _| 1.0, false);
            YEvaluation {
                value: v,
                parallel_only: Some(small_sep(|_, _| 1.0, true)),
            }
        }
        (OmegaScale::Mediator, true) => {
            let w = |s: f64, c: f64| {
                let d = omega * omega * s * s * c * c + 1.0;
                omega.powi(4) / (d * d)
            };
            YEvaluation {
                value: small_sep(w, false),
                parallel_only: Some(small_sep(w, true)),
            }
        }
        (OmegaScale::Radius, true) => {
            let w = |s: f64, c: f64| omega.powi(4) * sphere_form_factor(omega * s * c).powi(2);
            YEvaluation {
                value: small_sep(w, false),
                parallel_only: Some(small_sep(w, true)),
            }
        }
    }
}

/// 8 ∫ s⁵ ds ∫₀¹ c³ dc w(s, c) ∫dC Φ [...] with log-spaced c panels.
fn small_sep(w: impl Fn(f64, f64) -> f64, parallel_only: bool) -> f64 {
    let r = gl32();
    let mut total = 0.0;
    for p in 0..12 {
        for (s, ws) in r.mapped(p as f64 * 0.5, (p + 1) as f64 * 0.5) {
            if s == 0.0 {
                continue;
            }
            // c panels from 1e-12 to 1, eight per decade.
            let mut inner = 0.0;
            let mut lo = 1e-12f64;
            let step = 10f64.powf(1.0 / 8.0);
            while lo < 1.0 {
                let hi = (lo * step).min(1.0);
                for (c, wc) in r.mapped(lo, hi) {
                    inner += wc * c * c * c * w(s, c) * quadratic_angular(s, c, parallel_only);
                }
                lo = hi;
            }
            total += ws * s.powi(5) * inner;
        }
    }
    8.0 * total
}

/// Closed forms used as cross-checks for the evaluator.
pub mod exact {
    use super::*;

    pub fn y_wavelength() -> f64 {
        4.0 / (std::f64::consts::E * PI.sqrt()) + 6.0 * erf(1.0)
    }

    pub fn y_mediator() -> f64 {
        4.0 * erf(1.0)
    }

    pub fn y_radius() -> f64 {
        18.0 * erf(1.0)
    }

    pub fn y_wavelength_separation() -> f64 {
        19.0 / (12.0 * std::f64::consts::E * PI.sqrt()) + 55.0 / 24.0 * erf(1.0)
    }
}
