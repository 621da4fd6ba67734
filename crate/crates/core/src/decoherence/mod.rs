//! Decoherence rate F(Δx) of a superposed target in a dark-matter flux.
//!
//! With s = k/(M v̄), c = sin(θ/2) and C the cosine between k and Δx, the
//! rate reduces to
//!
//!   F = N · 4 α_M α_DM ρ M v̄ / m⁴ · 8π ∫ s³ ds ∫₀¹ c dc W(s, c) Σ_ℓ a_ℓ(s) K_ℓ(s, c)
//!
//! where W = [1 + A(N_a − 1) f̃²(ξ_R s c) e^{−2W_DW}] / (ξ_m² s² c² + 1)², a_ℓ are
//! the Legendre coefficients of the azimuth-integrated flux and
//! K_ℓ = 2δ_ℓ0 − 2 i^ℓ j_ℓ(ξ_Δ s c) P_ℓ(c). The last step integrates the
//! Bessel kernel e^{iac²C} J₀(a c S_c S_C) over C in closed form.

pub mod limits;
pub mod mc;

use num_complex::Complex64;
use serde::Serialize;

use crate::born::{born_validity_characteristic, BornValidity};
use crate::error::{Error, Result};
use crate::flux::{AngularFlux, FluxModel, Orientation, LMAX_CAP};
use crate::model::{DimensionlessGroups, DmScenario, Experiment};
use crate::quad::gl8;
use crate::special::{legendre_array, one_minus_sinc, sphere_form_factor, spherical_jn_array};
use crate::units::{angstrom_to_natural, rate_to_hz};

pub use crate::special::sphere_form_factor as form_factor;

/// Thermal displacement model for the nuclei.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DebyeWaller {
    pub temperature_k: f64,
    /// Zero-point rms displacement floor (Å).
    pub floor_angstrom: f64,
}

impl Default for DebyeWaller {
    fn default() -> Self {
        DebyeWaller {
            temperature_k: 300.0,
            floor_angstrom: 0.0,
        }
    }
}

/// Superposed target: a uniform sphere with optional Debye-Waller damping.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetModel {
    pub experiment: Experiment,
    pub debye_waller: Option<DebyeWaller>,
}

impl TargetModel {
    pub fn new(experiment: Experiment) -> Result<Self> {
        experiment.validate()?;
        Ok(TargetModel {
            experiment,
            debye_waller: None,
        })
    }

    pub fn with_debye_waller(mut self, dw: DebyeWaller) -> Result<Self> {
        if !(dw.temperature_k >= 0.0) || !(dw.floor_angstrom >= 0.0) {
            return Err(Error::invalid(
                "debye_waller",
                "temperature and floor must be non-negative",
            ));
        }
        self.debye_waller = Some(dw);
        Ok(self)
    }

    /// ⟨y²⟩ in eV⁻², d300² · T / 300 K floored at the zero-point value.
    pub fn mean_square_displacement(&self) -> f64 {
        match self.debye_waller {
            None => 0.0,
            Some(dw) => {
                let d = angstrom_to_natural(self.experiment.rms_displacement_angstrom);
                let thermal = d * d * dw.temperature_k / 300.0;
                let floor = angstrom_to_natural(dw.floor_angstrom).powi(2);
                thermal.max(floor)
            }
        }
    }

    /// Coherent weight A(N_a − 1) relative to the incoherent floor.
    fn coherent_weight(&self) -> f64 {
        let e = &self.experiment;
        e.atomic_number * (e.nuclei() - 1.0)
    }
}

/// I(q) = N + A² N_a (N_a − 1) f̃²(qR) e^{−q²⟨y²⟩/3}.
pub fn structure_factor(q: f64, target: &TargetModel) -> Result<f64> {
    if !(q >= 0.0) {
        return Err(Error::invalid("q", "must be non-negative"));
    }
    let e = &target.experiment;
    Ok(cluster_structure_factor(
        q,
        e.nucleons,
        e.atomic_number,
        e.radius(),
        target.mean_square_displacement(),
    ))
}

/// Structure factor of `nucleons` grouped into nuclei of `atomic_number`
/// spread uniformly over a sphere of `radius` (eV⁻¹) with displacement ⟨y²⟩.
pub fn cluster_structure_factor(
    q: f64,
    nucleons: f64,
    atomic_number: f64,
    radius: f64,
    msd: f64,
) -> f64 {
    let f = sphere_form_factor(q * radius);
    let dw = (-q * q * msd / 3.0).exp();
    let weight = atomic_number * (nucleons / atomic_number - 1.0);
    nucleons + nucleons * weight * f * f * dw
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    CoherentLargeSep,
    CoherentSmallSep,
    IncoherentFloor,
    Mixed,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::CoherentLargeSep => "coherent-large-sep",
            Regime::CoherentSmallSep => "coherent-small-sep",
            Regime::IncoherentFloor => "incoherent-floor",
            Regime::Mixed => "mixed",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecoherenceResult {
    /// Re: decoherence rate, Im: phase-shift rate (Hz).
    #[serde(serialize_with = "ser_complex")]
    pub rate: Complex64,
    pub abs_err: f64,
    pub regime: Regime,
    /// Flux-weighted total scattering rate Γ_tot (Hz).
    pub total_rate: f64,
    pub born: BornValidity,
}

fn ser_complex<S: serde::Serializer>(c: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeStruct;
    let mut st = s.serialize_struct("Complex", 2)?;
    st.serialize_field("re", &c.re)?;
    st.serialize_field("im", &c.im)?;
    st.end()
}

/// Accuracy controls for the rate quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateOptions {
    pub rel_tol: f64,
    /// Highest refinement level; each level doubles every panel count.
    pub max_level: u32,
}

impl Default for RateOptions {
    fn default() -> Self {
        RateOptions {
            rel_tol: 1e-3,
            max_level: 5,
        }
    }
}

/// Oscillating terms are kept while ξ_Δ s c stays below this many half periods.
const OSC_HALF_PERIODS: f64 = 2000.0;

#[derive(Clone, Copy, Default, Debug)]
struct Parts {
    re_inc: f64,
    re_coh: f64,
    im: f64,
    tot_inc: f64,
    tot_coh: f64,
}

impl Parts {
    fn add_scaled(&mut self, o: &Parts, w: f64) {
        self.re_inc += w * o.re_inc;
        self.re_coh += w * o.re_coh;
        self.im += w * o.im;
        self.tot_inc += w * o.tot_inc;
        self.tot_coh += w * o.tot_coh;
    }

    fn rate(&self) -> Complex64 {
        Complex64::new(self.re_inc + self.re_coh, self.im)
    }
}

struct Kernel<'a> {
    flux: &'a AngularFlux,
    xi_sep: f64,
    xi_med: f64,
    xi_rad: f64,
    coh_weight: f64,
    /// ⟨y²⟩ (M v̄)² · 4/3 so that e^{−2W} = exp(−dw s² c²).
    dw: f64,
}

struct Scratch {
    a: Vec<f64>,
    j: Vec<f64>,
    p: Vec<f64>,
    tmp: Vec<f64>,
}

impl Kernel<'_> {
    /// ∫₀¹ c W Σ a_ℓ K_ℓ dc at speed s, split into parts.
    fn c_integral(&self, s: f64, level: u32, sc: &mut Scratch) -> Parts {
        self.flux.coefficients(s, &mut sc.a, &mut sc.tmp);
        let a0 = sc.a[0];
        let amax = sc.a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if amax == 0.0 {
            return Parts::default();
        }
        // Trim negligible high orders.
        let mut n = sc.a.len();
        while n > 1 && sc.a[n - 1].abs() < 1e-13 * amax {
            n -= 1;
        }
        let big_a = self.xi_sep * s;
        let bm = self.xi_med * s;
        let br = self.xi_rad * s;
        let c_lo = 1e-7
            * 1f64
                .min(1.0 / bm)
                .min(1.0 / br)
                .min(1.0 / big_a.max(1e-300));
        let c_osc = if big_a > 0.0 {
            (OSC_HALF_PERIODS * std::f64::consts::PI / big_a).min(1.0)
        } else {
            0.0
        };
        let ratio = 10f64.powf(1.0 / (3.0 * 2f64.powi(level as i32)));
        let h_osc = if big_a > 0.0 {
            std::f64::consts::PI / big_a / 2f64.powi(level as i32)
        } else {
            f64::INFINITY
        };
        let rule = gl8();
        let mut out = Parts::default();
        let mut lo = c_lo;
        while lo < 1.0 {
            let mut hi = (lo * ratio).min(1.0);
            let osc = lo < c_osc;
            if osc {
                hi = hi.min(lo + h_osc).min(c_osc.max(lo + 1e-300));
                if hi <= lo {
                    hi = (lo * ratio).min(1.0);
                }
            }
            for (c, w) in rule.mapped(lo, hi) {
                let denom = bm * bm * c * c + 1.0;
                let winc = 1.0 / (denom * denom);
                let f = sphere_form_factor(br * c);
                let wcoh = self.coh_weight * f * f * (-self.dw * s * s * c * c).exp() * winc;
                let total = 2.0 * a0;
                let (re, im) = if osc {
                    self.kernel(c, big_a * c, n, a0, sc)
                } else {
                    (total, 0.0)
                };
                let wc = w * c;
                out.re_inc += wc * winc * re;
                out.re_coh += wc * wcoh * re;
                out.im += wc * (winc + wcoh) * im;
                out.tot_inc += wc * winc * total;
                out.tot_coh += wc * wcoh * total;
            }
            lo = hi;
        }
        out
    }

    /// Σ a_ℓ K_ℓ at a given c with x = ξ_Δ s c.
    fn kernel(&self, c: f64, x: f64, n: usize, a0: f64, sc: &mut Scratch) -> (f64, f64) {
        let mut re = 2.0 * a0 * one_minus_sinc(x);
        let mut im = 0.0;
        if n > 1 {
            let j = &mut sc.j[..n];
            let p = &mut sc.p[..n];
            spherical_jn_array(x, j);
            legendre_array(c, p);
            for l in 1..n {
                let t = -2.0 * sc.a[l] * j[l] * p[l];
                match l % 4 {
                    0 => re += t,
                    1 => im += t,
                    2 => re -= t,
                    _ => im -= t,
                }
            }
        }
        (re, im)
    }
}

/// Rate at a general flux orientation.
pub fn decoherence_rate_oriented(
    scenario: &DmScenario,
    target: &TargetModel,
    flux: &FluxModel,
    orient: &Orientation,
    opts: &RateOptions,
) -> Result<DecoherenceResult> {
    scenario.validate()?;
    target.experiment.validate()?;
    let groups = DimensionlessGroups::new(scenario, &target.experiment);
    let born = born_validity_characteristic(scenario, &target.experiment)?;
    let s_max = flux.s_max();
    let lmax_hint = ((groups.xi_sep * s_max).ceil() as usize + 30).min(LMAX_CAP);
    let af = AngularFlux::new(flux, orient, lmax_hint);
    let s_max = af.s_max();
    let p = scenario.momentum();
    let kernel = Kernel {
        flux: &af,
        xi_sep: groups.xi_sep,
        xi_med: groups.xi_med,
        xi_rad: groups.xi_rad,
        coh_weight: target.coherent_weight(),
        dw: 4.0 * p * p * target.mean_square_displacement() / 3.0,
    };
    let n = af.lmax + 1;
    let mut sc = Scratch {
        a: vec![0.0; n],
        j: vec![0.0; n],
        p: vec![0.0; n],
        tmp: Vec::new(),
    };
    let m = scenario.mediator_mass;
    let prefactor =
        target.experiment.nucleons * 4.0 * scenario.alpha_m * scenario.alpha_dm * scenario.rho * p
            / (m * m * m * m)
            * 8.0
            * std::f64::consts::PI;
    let to_hz = |v: f64| rate_to_hz(prefactor * v);

    let integrate = |level: u32, sc: &mut Scratch| -> Parts {
        let panels = 4usize << level;
        let ds = s_max / panels as f64;
        let mut total = Parts::default();
        for k in 0..panels {
            for (s, w) in gl8().mapped(k as f64 * ds, (k + 1) as f64 * ds) {
                let part = kernel.c_integral(s, level, sc);
                total.add_scaled(&part, w * s * s * s);
            }
        }
        total
    };

    let mut prev = integrate(0, &mut sc);
    let mut level = 0;
    loop {
        level += 1;
        let cur = integrate(level, &mut sc);
        let diff = (cur.rate() - prev.rate()).norm();
        let scale = cur.rate().norm();
        let converged = diff <= opts.rel_tol * scale || scale == 0.0;
        if converged || level >= opts.max_level {
            let rate = cur.rate() * to_hz(1.0);
            if !converged {
                return Err(Error::NoConvergence {
                    what: "decoherence rate",
                    estimate: rate.re,
                    abs_err: to_hz(diff),
                });
            }
            return Ok(DecoherenceResult {
                rate,
                abs_err: to_hz(diff),
                regime: classify(&cur),
                total_rate: to_hz(cur.tot_inc + cur.tot_coh),
                born,
            });
        }
        prev = cur;
    }
}

fn classify(p: &Parts) -> Regime {
    let re = p.re_inc + p.re_coh;
    if !(re > 0.0) {
        return Regime::Mixed;
    }
    let coh = p.re_coh / re;
    if coh < 0.1 {
        return Regime::IncoherentFloor;
    }
    if coh < 0.9 {
        return Regime::Mixed;
    }
    if p.re_coh >= 0.5 * p.tot_coh {
        Regime::CoherentLargeSep
    } else {
        Regime::CoherentSmallSep
    }
}

/// Rate for an unmasked flux with the wind at `wind_angle` radians from Δx.
///
/// Horizon masking needs the full site geometry; see [`decoherence_rate_sidereal`].
pub fn decoherence_rate(
    scenario: &DmScenario,
    target: &TargetModel,
    flux: &FluxModel,
    wind_angle: f64,
) -> Result<DecoherenceResult> {
    decoherence_rate_oriented(
        scenario,
        target,
        flux,
        &Orientation::wind_angle(wind_angle),
        &RateOptions::default(),
    )
}

/// Rate at a sidereal phase with the site's shielding applied.
pub fn decoherence_rate_sidereal(
    scenario: &DmScenario,
    target: &TargetModel,
    flux: &FluxModel,
    sidereal_phase: f64,
) -> Result<DecoherenceResult> {
    decoherence_rate_oriented(
        scenario,
        target,
        flux,
        &Orientation::sidereal(&flux.site, sidereal_phase),
        &RateOptions::default(),
    )
}

/// γ = e^{−s + iφ} accumulated over an exposure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecoherenceFactor {
    pub gamma: Complex64,
    pub s: f64,
    pub phi: f64,
}

/// γ = exp(−∫F dt) for a constant rate over `exposure_s` seconds.
pub fn decoherence_factor(rate: Complex64, exposure_s: f64) -> Result<DecoherenceFactor> {
    if !(exposure_s > 0.0) {
        return Err(Error::invalid("exposure", "must be positive"));
    }
    Ok(factor_from_integral(rate * exposure_s))
}

/// γ for a sampled rate history, trapezoidal in time.
pub fn decoherence_factor_series(
    times_s: &[f64],
    rates: &[Complex64],
) -> Result<DecoherenceFactor> {
    if times_s.len() != rates.len() || times_s.len() < 2 {
        return Err(Error::invalid(
            "series",
            "need at least two matching samples",
        ));
    }
    if times_s.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid(
            "series",
            "times must be strictly increasing",
        ));
    }
    let integral = times_s
        .windows(2)
        .zip(rates.windows(2))
        .map(|(t, f)| (f[0] + f[1]) * (0.5 * (t[1] - t[0])))
        .sum::<Complex64>();
    Ok(factor_from_integral(integral))
}

fn factor_from_integral(i: Complex64) -> DecoherenceFactor {
    DecoherenceFactor {
        gamma: (-i).exp(),
        s: i.re,
        phi: -i.im,
    }
}
