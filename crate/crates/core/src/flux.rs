//! Laboratory-frame dark-matter flux: the truncated shifted Maxwellian, its
//! Legendre decomposition about the separation axis, Earth-horizon masking
//! and the sidereal modulation of the total flux.
//!
//! Speeds are measured in units of v̄ throughout (s = k / M v̄). The halo
//! phase-space density is n(s) = Z exp(−|s − u ŵ|²) for |s| < s_esc, where ŵ
//! is the direction the wind travels and u = v_⊙ / v̄.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Normal, UnitSphere};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DmScenario, Shielding, Site};
use crate::quad::{gl16, gl32, integrate_adaptive, GaussRule};
use crate::special::{erf, i0e, legendre_array, scaled_spherical_in_array};
use crate::units::K_B_EV_PER_K;

pub type Vec3 = [f64; 3];

pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn scale(a: Vec3, k: f64) -> Vec3 {
    [a[0] * k, a[1] * k, a[2] * k]
}

fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn unit(a: Vec3) -> Vec3 {
    let n = dot(a, a).sqrt();
    scale(a, 1.0 / n)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum FluxMode {
    /// The halo distribution as it arrives, wind included.
    Anisotropic,
    /// Directions randomized, speed spectrum and masked total kept.
    Isotropized,
    /// Maxwellian at a terrestrial temperature in kelvin.
    Thermalized { temperature_k: f64 },
}

impl FluxMode {
    pub fn parse(s: &str, temperature_k: f64) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "anisotropic" => Ok(FluxMode::Anisotropic),
            "isotropized" => Ok(FluxMode::Isotropized),
            "thermalized" => {
                if !(temperature_k > 0.0) {
                    return Err(Error::invalid("temperature_k", "must be positive"));
                }
                Ok(FluxMode::Thermalized { temperature_k })
            }
            other => Err(Error::invalid(
                "mode",
                format!("unknown flux mode '{other}'"),
            )),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FluxMode::Anisotropic => "anisotropic",
            FluxMode::Isotropized => "isotropized",
            FluxMode::Thermalized { .. } => "thermalized",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FluxModel {
    pub scenario: DmScenario,
    pub site: Site,
    pub mode: FluxMode,
}

impl FluxModel {
    pub fn new(scenario: DmScenario, site: Site, mode: FluxMode) -> Result<Self> {
        scenario.validate()?;
        site.validate()?;
        if let FluxMode::Thermalized { temperature_k } = mode {
            if !(temperature_k > 0.0) || !temperature_k.is_finite() {
                return Err(Error::invalid("temperature_k", "must be positive"));
            }
        }
        Ok(FluxModel {
            scenario,
            site,
            mode,
        })
    }

    /// Unshielded halo flux, as seen in space.
    pub fn space(scenario: DmScenario, mode: FluxMode) -> Result<Self> {
        Self::new(scenario, Site::space(), mode)
    }

    pub(crate) fn halo(&self) -> Halo {
        Halo::new(&self.scenario)
    }

    /// Thermal spread v_T / v̄ with v_T² = 2kT/M.
    pub(crate) fn thermal_width(&self, temperature_k: f64) -> f64 {
        let kt = K_B_EV_PER_K * temperature_k;
        (2.0 * kt / self.scenario.mass).sqrt() / self.scenario.v_bar
    }

    /// Upper end of the speed integral in units of v̄.
    pub fn s_max(&self) -> f64 {
        match self.mode {
            FluxMode::Thermalized { temperature_k } => 8.0 * self.thermal_width(temperature_k),
            _ => self.scenario.v_esc / self.scenario.v_bar,
        }
    }

    /// Mean speed ⟨s⟩ of the distribution, in units of v̄.
    pub fn mean_speed(&self) -> f64 {
        match self.mode {
            FluxMode::Thermalized { temperature_k } => {
                2.0 * self.thermal_width(temperature_k) / PI.sqrt()
            }
            _ => self.halo().mean_speed(),
        }
    }

    /// Speed density in units of v̄, normalized over [0, s_max].
    pub fn speed_pdf(&self, s: f64) -> f64 {
        match self.mode {
            FluxMode::Thermalized { temperature_k } => {
                if s < 0.0 {
                    return 0.0;
                }
                let th = self.thermal_width(temperature_k);
                let x = s / th;
                4.0 / (PI.sqrt() * th) * x * x * (-x * x).exp()
            }
            _ => self.halo().speed_pdf(s),
        }
    }

    /// Draw one momentum (eV) in a frame where `wind` is the wind travel direction.
    pub fn sample_momentum<R: Rng + ?Sized>(&self, wind: Vec3, rng: &mut R) -> Vec3 {
        let p = self.scenario.momentum();
        scale(self.sample_speed_vector(wind, rng), p)
    }

    pub(crate) fn sample_speed_vector<R: Rng + ?Sized>(&self, wind: Vec3, rng: &mut R) -> Vec3 {
        match self.mode {
            FluxMode::Thermalized { temperature_k } => {
                let th = self.thermal_width(temperature_k);
                let g = Normal::new(0.0, th / 2f64.sqrt()).expect("positive width");
                [g.sample(rng), g.sample(rng), g.sample(rng)]
            }
            FluxMode::Anisotropic => self.halo().sample(unit_or_zero(wind), rng),
            FluxMode::Isotropized => {
                let v = self.halo().sample(unit_or_zero(wind), rng);
                let s = dot(v, v).sqrt();
                let d: [f64; 3] = UnitSphere.sample(rng);
                scale(d, s)
            }
        }
    }
}

fn unit_or_zero(a: Vec3) -> Vec3 {
    let n = dot(a, a).sqrt();
    if n > 0.0 {
        scale(a, 1.0 / n)
    } else {
        [0.0, 0.0, 1.0]
    }
}

/// Shape of the truncated shifted Maxwellian in speed units.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Halo {
    pub u: f64,
    pub s_esc: f64,
    pub z: f64,
}

impl Halo {
    pub fn new(s: &DmScenario) -> Self {
        let u = s.v_sun / s.v_bar;
        let s_esc = s.v_esc / s.v_bar;
        Halo {
            u,
            s_esc,
            z: normalization_closed_form(u, s_esc),
        }
    }

    /// Rejection sampler: Gaussian about u·ŵ with variance 1/2 per axis.
    pub fn sample<R: Rng + ?Sized>(&self, wind: Vec3, rng: &mut R) -> Vec3 {
        let g = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("fixed width");
        loop {
            let v = [
                self.u * wind[0] + g.sample(rng),
                self.u * wind[1] + g.sample(rng),
                self.u * wind[2] + g.sample(rng),
            ];
            if dot(v, v) < self.s_esc * self.s_esc {
                return v;
            }
        }
    }

    /// Speed density ρ(s) with ∫ρ ds = 1.
    pub fn speed_pdf(&self, s: f64) -> f64 {
        if !(0.0..self.s_esc).contains(&s) {
            return 0.0;
        }
        let u = self.u;
        if u < 1e-8 {
            return 4.0 * PI * self.z * s * s * (-s * s).exp();
        }
        PI * self.z * s / u * ((-(s - u) * (s - u)).exp() - (-(s + u) * (s + u)).exp())
    }

    pub fn mean_speed(&self) -> f64 {
        let (v, _) = integrate_adaptive(|s| s * self.speed_pdf(s), 0.0, self.s_esc, 1e-12, 0.0)
            .expect("smooth integrand");
        v
    }
}

/// Closed-form Z for the truncated shifted Maxwellian (speed units).
fn normalization_closed_form(u: f64, s_esc: f64) -> f64 {
    if u < 1e-8 {
        let m = PI.powf(1.5) * erf(s_esc) - 2.0 * PI * s_esc * (-s_esc * s_esc).exp();
        return 1.0 / m;
    }
    // ∫₀^S s e^{-(s∓u)²} ds in closed form
    let part = |sign: f64| {
        let a = -sign * u;
        0.5 * ((-a * a).exp() - (-(s_esc + a) * (s_esc + a)).exp())
            - a * PI.sqrt() / 2.0 * (erf(s_esc + a) - erf(a))
    };
    1.0 / (PI / u * (part(1.0) - part(-1.0)))
}

/// Normalization Z of the halo distribution by adaptive quadrature.
pub fn speed_pdf_normalization(scenario: &DmScenario) -> Result<f64> {
    scenario.validate()?;
    let u = scenario.v_sun / scenario.v_bar;
    let s_esc = scenario.v_esc / scenario.v_bar;
    let integrand = |s: f64| {
        if u < 1e-8 {
            4.0 * PI * s * s * (-s * s).exp()
        } else {
            PI * s / u * ((-(s - u) * (s - u)).exp() - (-(s + u) * (s + u)).exp())
        }
    };
    let (m, _) = integrate_adaptive(integrand, 0.0, s_esc, 1e-10, 0.0)?;
    Ok(1.0 / m)
}

/// Wind and zenith directions in the frame whose z axis is the separation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Orientation {
    pub wind: Vec3,
    /// Local vertical; None when no Earth is present.
    pub zenith: Option<Vec3>,
    pub shielding: Shielding,
}

impl Orientation {
    /// Unmasked flux with the wind at `angle` radians from the separation axis.
    pub fn wind_angle(angle: f64) -> Self {
        Orientation {
            wind: [angle.sin(), 0.0, angle.cos()],
            zenith: None,
            shielding: Shielding::Space,
        }
    }

    /// Geometry at a sidereal phase in [0, 1) for the given site.
    pub fn sidereal(site: &Site, phase: f64) -> Self {
        let frame = SiteFrame::new(site, phase);
        let e3 = frame.axis;
        let seed = if e3[2].abs() < 0.9 {
            [0.0, 0.0, 1.0]
        } else {
            [1.0, 0.0, 0.0]
        };
        let e1 = unit(cross(seed, e3));
        let e2 = cross(e3, e1);
        let to_local = |v: Vec3| [dot(v, e1), dot(v, e2), dot(v, e3)];
        Orientation {
            wind: to_local(frame.wind),
            zenith: match site.shielding {
                Shielding::Space => None,
                _ => Some(to_local(frame.zenith)),
            },
            shielding: site.shielding,
        }
    }

    /// Cosine between wind and separation.
    pub fn cos_wind(&self) -> f64 {
        self.wind[2]
    }

    /// Reversed separation: Δx → −Δx.
    pub fn flipped(&self) -> Self {
        let f = |v: Vec3| [v[0], -v[1], -v[2]];
        Orientation {
            wind: f(self.wind),
            zenith: self.zenith.map(f),
            shielding: self.shielding,
        }
    }
}

/// Equatorial-frame unit vectors for a site at a sidereal phase.
#[derive(Clone, Copy, Debug)]
pub struct SiteFrame {
    pub zenith: Vec3,
    pub north: Vec3,
    pub east: Vec3,
    pub axis: Vec3,
    /// Wind travel direction.
    pub wind: Vec3,
}

impl SiteFrame {
    pub fn new(site: &Site, phase: f64) -> Self {
        let lat = site.latitude_deg.to_radians();
        let tau = 2.0 * PI * phase;
        let (sl, cl) = lat.sin_cos();
        let (st, ct) = tau.sin_cos();
        let zenith = [cl * ct, cl * st, sl];
        let north = [-sl * ct, -sl * st, cl];
        let east = [-st, ct, 0.0];
        let az = site.axis_azimuth_deg.to_radians();
        let alt = site.axis_altitude_deg.to_radians();
        let horiz = add(scale(north, az.cos()), scale(east, az.sin()));
        let axis = add(scale(horiz, alt.cos()), scale(zenith, alt.sin()));
        let dec = site.wind_declination_deg.to_radians();
        let wind = [-dec.cos(), 0.0, -dec.sin()];
        SiteFrame {
            zenith,
            north,
            east,
            axis,
            wind,
        }
    }
}

/// Legendre coefficients a_ℓ(s) of the azimuth-integrated phase-space density
/// Φ(s, C) = ∫dφ n(s, C, φ) = Σ a_ℓ(s) P_ℓ(C), C the cosine to the separation.
pub(crate) struct AngularFlux {
    kind: Kind,
    isotropized: bool,
    pub lmax: usize,
    halo: Halo,
    s_max: f64,
}

enum Kind {
    Unmasked { cos_wind: f64 },
    Masked(Box<MaskedTable>),
    Thermal { theta: f64 },
}

struct MaskedTable {
    c_w: Vec<f64>,
    arc_w: Vec<f64>,
    arc_g: Vec<f64>,
    up_len: Vec<f64>,
    legendre: Vec<f64>,
    reflect: Option<ReflectTable>,
}

struct ReflectTable {
    mu_w: f64,
    nodes: Vec<(f64, f64)>,
}

const ARC_NODES: usize = 32;
pub(crate) const LMAX_CAP: usize = 200;

impl AngularFlux {
    /// `lmax_hint` bounds the orders the caller can resolve.
    pub fn new(model: &FluxModel, orient: &Orientation, lmax_hint: usize) -> Self {
        let halo = model.halo();
        let s_max = model.s_max();
        match model.mode {
            FluxMode::Thermalized { temperature_k } => AngularFlux {
                kind: Kind::Thermal {
                    theta: model.thermal_width(temperature_k),
                },
                isotropized: true,
                lmax: 0,
                halo,
                s_max,
            },
            mode => {
                let isotropized = mode == FluxMode::Isotropized;
                let masked = orient.shielding != Shielding::Space && orient.zenith.is_some();
                if !masked {
                    let lmax = if isotropized {
                        0
                    } else {
                        ((2.0 * halo.u * s_max).ceil() as usize + 20).min(lmax_hint.max(2))
                    };
                    return AngularFlux {
                        kind: Kind::Unmasked {
                            cos_wind: orient.cos_wind(),
                        },
                        isotropized,
                        lmax,
                        halo,
                        s_max,
                    };
                }
                let lmax = if isotropized {
                    0
                } else {
                    lmax_hint.clamp(2, LMAX_CAP)
                };
                let table = MaskedTable::new(orient, lmax);
                AngularFlux {
                    kind: Kind::Masked(Box::new(table)),
                    isotropized,
                    lmax,
                    halo,
                    s_max,
                }
            }
        }
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    /// Fill a[0..=lmax] at speed s.
    pub fn coefficients(&self, s: f64, a: &mut [f64], scratch: &mut Vec<f64>) {
        a.fill(0.0);
        let h = &self.halo;
        match &self.kind {
            Kind::Thermal { theta } => {
                a[0] = 2.0 * PI * (-s * s / (theta * theta)).exp()
                    / (PI.powf(1.5) * theta * theta * theta);
            }
            Kind::Unmasked { cos_wind } => {
                if s >= h.s_esc {
                    return;
                }
                let base = 2.0 * PI * h.z * (-(s - h.u) * (s - h.u)).exp();
                let n = if self.isotropized { 1 } else { self.lmax + 1 };
                scratch.resize(2 * n, 0.0);
                let (iv, pv) = scratch.split_at_mut(n);
                scaled_spherical_in_array(2.0 * s * h.u, iv);
                legendre_array(*cos_wind, pv);
                for l in 0..n {
                    a[l] = base * (2 * l + 1) as f64 * iv[l] * pv[l];
                }
            }
            Kind::Masked(t) => {
                if s >= h.s_esc {
                    return;
                }
                let n = self.lmax + 1;
                let lead = -s * s - h.u * h.u;
                let two_su = 2.0 * s * h.u;
                let refl = t.reflect.as_ref().map(|r| r.h(s, h)).unwrap_or(0.0);
                for (i, &wc) in t.c_w.iter().enumerate() {
                    let mut phi = 0.0;
                    let ws = &t.arc_w[i * ARC_NODES..(i + 1) * ARC_NODES];
                    let gs = &t.arc_g[i * ARC_NODES..(i + 1) * ARC_NODES];
                    for (w, g) in ws.iter().zip(gs) {
                        if *w != 0.0 {
                            phi += w * (lead + two_su * g).exp();
                        }
                    }
                    phi = phi * h.z + refl * t.up_len[i];
                    let f = wc * phi;
                    let p = &t.legendre[i * n..(i + 1) * n];
                    for l in 0..n {
                        a[l] += f * p[l];
                    }
                }
                for (l, v) in a.iter_mut().enumerate().take(n) {
                    *v *= (2 * l + 1) as f64 / 2.0;
                }
            }
        }
    }
}

impl MaskedTable {
    fn new(orient: &Orientation, lmax: usize) -> Self {
        let zen = orient.zenith.expect("masked geometry has a zenith");
        let wind = orient.wind;
        let rho_z = (zen[0] * zen[0] + zen[1] * zen[1]).sqrt();
        let rho_w = (wind[0] * wind[0] + wind[1] * wind[1]).sqrt();
        let phi_z = zen[1].atan2(zen[0]);
        let phi_w = wind[1].atan2(wind[0]);
        let delta = phi_z - phi_w;

        // Arc boundaries kink at C = ±ρz; S_C kinks at ±1. The sine map
        // flattens square-root kinks at every panel edge.
        let mut edges = vec![-1.0, 1.0];
        if rho_z > 1e-12 && rho_z < 1.0 - 1e-12 {
            edges = vec![-1.0, -rho_z, rho_z, 1.0];
        }
        let npan = lmax + 24;
        let rule = GaussRule::new(npan);
        let mut cs = Vec::new();
        let mut c_w = Vec::new();
        for win in edges.windows(2) {
            let (lo, hi) = (win[0], win[1]);
            let m = 0.5 * (lo + hi);
            let hw = 0.5 * (hi - lo);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let arg = 0.5 * PI * x;
                cs.push(m + hw * arg.sin());
                c_w.push(w * hw * 0.5 * PI * arg.cos());
            }
        }
        let n = lmax + 1;
        let mut legendre = vec![0.0; cs.len() * n];
        let mut arc_w = vec![0.0; cs.len() * ARC_NODES];
        let mut arc_g = vec![0.0; cs.len() * ARC_NODES];
        let mut up_len = vec![0.0; cs.len()];
        let g16 = gl16();
        for (i, &c) in cs.iter().enumerate() {
            legendre_array(c, &mut legendre[i * n..(i + 1) * n]);
            let sc = (1.0 - c * c).max(0.0).sqrt();
            // Down-going: C z∥ + S_C ρz cos ψ < 0 with ψ = φ − φ_z.
            let (lo, hi) = if sc * rho_z < 1e-14 {
                if c * zen[2] < 0.0 {
                    (0.0, 2.0 * PI)
                } else {
                    (0.0, 0.0)
                }
            } else {
                let t = -c * zen[2] / (sc * rho_z);
                if t >= 1.0 {
                    (0.0, 2.0 * PI)
                } else if t <= -1.0 {
                    (0.0, 0.0)
                } else {
                    let a = t.acos();
                    (a, 2.0 * PI - a)
                }
            };
            up_len[i] = 2.0 * PI - (hi - lo);
            if hi > lo {
                let mid = 0.5 * (lo + hi);
                for (half, (a, b)) in [(lo, mid), (mid, hi)].into_iter().enumerate() {
                    for (k, (psi, w)) in g16.mapped(a, b).enumerate() {
                        let j = i * ARC_NODES + half * 16 + k;
                        arc_w[j] = w;
                        arc_g[j] = c * wind[2] + sc * rho_w * (psi + delta).cos();
                    }
                }
            }
        }
        let reflect = match orient.shielding {
            Shielding::ReflectingEarth => Some(ReflectTable::new(dot(wind, zen))),
            _ => None,
        };
        MaskedTable {
            c_w,
            arc_w,
            arc_g,
            up_len,
            legendre,
            reflect,
        }
    }
}

impl ReflectTable {
    fn new(mu_w: f64) -> Self {
        // μ = −cos ϑ on ϑ ∈ [0, π/2]
        let nodes = gl32()
            .mapped(0.0, 0.5 * PI)
            .map(|(th, w)| (-th.cos(), w * th.sin()))
            .collect();
        ReflectTable { mu_w, nodes }
    }

    /// Isotropic up-going density balancing the down-going number flux.
    fn h(&self, s: f64, halo: &Halo) -> f64 {
        let perp_w = (1.0 - self.mu_w * self.mu_w).max(0.0).sqrt();
        let two_su = 2.0 * s * halo.u;
        let mut sum = 0.0;
        for &(mu, w) in &self.nodes {
            let b = two_su * (1.0 - mu * mu).max(0.0).sqrt() * perp_w;
            let e = -s * s - halo.u * halo.u + two_su * mu * self.mu_w + b;
            sum += w * mu.abs() * e.exp() * i0e(b);
        }
        2.0 * halo.z * sum
    }
}

/// Speed-weighted down-going and reflected flux fractions for a wind making
/// cosine `mu_w` with the local vertical.
fn masked_fractions(halo: &Halo, mu_w: f64) -> (f64, f64) {
    let perp_w = (1.0 - mu_w * mu_w).max(0.0).sqrt();
    let g32 = gl32();
    let refl = ReflectTable::new(mu_w);
    let mean = halo.mean_speed();
    let mut down = 0.0;
    let mut up = 0.0;
    let panels = 8;
    let ds = halo.s_esc / panels as f64;
    for p in 0..panels {
        for (s, ws) in g32.mapped(p as f64 * ds, (p + 1) as f64 * ds) {
            let two_su = 2.0 * s * halo.u;
            let mut dens = 0.0;
            for &(mu, w) in &refl.nodes {
                let b = two_su * (1.0 - mu * mu).max(0.0).sqrt() * perp_w;
                let e = -s * s - halo.u * halo.u + two_su * mu * mu_w + b;
                dens += w * e.exp() * i0e(b);
            }
            down += ws * s * s * s * 2.0 * PI * halo.z * dens;
            up += ws * s * s * s * 2.0 * PI * refl.h(s, halo);
        }
    }
    (down / mean, up / mean)
}

/// Share of the speed-weighted number flux arriving from above the horizon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HorizonFlux {
    /// Fraction in [0, 1] of the unshielded flux that arrives from above.
    pub fraction: f64,
    /// Isotropic up-going flux from ground reflection, same normalization.
    pub reflected: f64,
}

impl HorizonFlux {
    /// Total flux seen by the target relative to the unshielded halo.
    pub fn total(&self) -> f64 {
        self.fraction + self.reflected
    }
}

pub fn horizon_flux_fraction(
    scenario: &DmScenario,
    site: &Site,
    sidereal_phase: f64,
) -> Result<HorizonFlux> {
    scenario.validate()?;
    site.validate()?;
    if site.shielding == Shielding::Space {
        return Ok(HorizonFlux {
            fraction: 1.0,
            reflected: 0.0,
        });
    }
    let frame = SiteFrame::new(site, sidereal_phase);
    let halo = Halo::new(scenario);
    let (down, up) = masked_fractions(&halo, dot(frame.wind, frame.zenith));
    Ok(HorizonFlux {
        fraction: down.clamp(0.0, 1.0),
        reflected: if site.shielding == Shielding::ReflectingEarth {
            up
        } else {
            0.0
        },
    })
}

/// Samples over one sidereal day.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SiderealSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub mean: f64,
    pub half_peak_to_peak: f64,
}

impl SiderealSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() || times.is_empty() {
            return Err(Error::invalid(
                "series",
                "times and values must be non-empty and equal length",
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(
                "series",
                "times must be strictly increasing",
            ));
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let (lo, hi) = min_max(&values);
        Ok(SiderealSeries {
            times,
            values,
            mean,
            half_peak_to_peak: 0.5 * (hi - lo),
        })
    }

    /// Phases i/n for i in 0..n.
    pub fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 / n as f64).collect()
    }

    pub fn argmax(&self) -> usize {
        self.values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    pub fn argmin(&self) -> usize {
        self.values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    /// Number of strict local maxima on the periodic grid.
    pub fn local_maxima(&self) -> usize {
        let n = self.values.len();
        let v = &self.values;
        let tol = 1e-12 * self.mean.abs().max(1e-300);
        (0..n)
            .filter(|&i| {
                let prev = v[(i + n - 1) % n];
                let next = v[(i + 1) % n];
                v[i] > prev + tol && v[i] >= next
            })
            .count()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["sidereal_phase", "value"])
            .map_err(csv_err)?;
        for (t, v) in self.times.iter().zip(&self.values) {
            out.write_record([format!("{t:.8e}"), format!("{v:.8e}")])
                .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

/// Daily-variation amplitude (max − min)/(max + min).
pub fn daily_variation(series: &SiderealSeries) -> Result<f64> {
    if series.values.is_empty() {
        return Err(Error::Degenerate("empty series".into()));
    }
    let (lo, hi) = min_max(&series.values);
    if !(hi + lo > 0.0) {
        return Err(Error::Degenerate("series is identically zero".into()));
    }
    Ok((hi - lo) / (hi + lo))
}

/// Horizon-fraction series over one sidereal day.
pub fn flux_series(scenario: &DmScenario, site: &Site, points: usize) -> Result<SiderealSeries> {
    let times = SiderealSeries::grid(points);
    let values = times
        .iter()
        .map(|&t| horizon_flux_fraction(scenario, site, t).map(|h| h.total()))
        .collect::<Result<Vec<_>>>()?;
    SiderealSeries::new(times, values)
}
