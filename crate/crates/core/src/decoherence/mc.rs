//! Monte Carlo estimate of the decoherence rate built directly on the
//! scattering process: draw an incident momentum from the flux, draw the
//! scattering angle from the single-nucleon Yukawa law and average
//! (ρ/M)(k/M) σ_Y I(q) (1 − e^{iq·Δx}).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};
use rayon::prelude::*;

use super::{structure_factor, DecoherenceResult, Regime, TargetModel};
use crate::born::born_validity_characteristic;
use crate::error::{Error, Result};
use crate::flux::{dot, FluxMode, FluxModel, Orientation, Vec3};
use crate::model::{DmScenario, Shielding};
use crate::units::rate_to_hz;

const CHUNK: usize = 1 << 14;

/// Single-nucleon Yukawa total cross section 16π α_M α_DM M² / (m²(m² + 4k²)).
pub fn yukawa_total_cross_section(scenario: &DmScenario, k: f64) -> f64 {
    let m2 = scenario.mediator_mass * scenario.mediator_mass;
    16.0 * std::f64::consts::PI
        * scenario.alpha_m
        * scenario.alpha_dm
        * scenario.mass
        * scenario.mass
        / (m2 * (m2 + 4.0 * k * k))
}

/// Draw c² = sin²(θ/2) from the Yukawa angular law by inverting its CDF.
pub fn sample_half_angle_sq(b: f64, r: f64) -> f64 {
    let b2 = b * b;
    r / (1.0 + b2 * (1.0 - r))
}

/// Incident particles contributing at the target: (speed vector, weight).
fn incident<R: Rng + ?Sized>(
    flux: &FluxModel,
    orient: &Orientation,
    rng: &mut R,
    out: &mut Vec<(Vec3, f64)>,
) {
    out.clear();
    if let FluxMode::Thermalized { .. } = flux.mode {
        out.push((flux.sample_speed_vector(orient.wind, rng), 1.0));
        return;
    }
    let v = flux.halo().sample(orient.wind, rng);
    let zen = match (orient.shielding, orient.zenith) {
        (Shielding::Space, _) | (_, None) => None,
        (_, Some(z)) => Some(z),
    };
    match zen {
        None => out.push((v, 1.0)),
        Some(z) => {
            let s = dot(v, v).sqrt();
            let mu = dot(v, z) / s;
            if mu < 0.0 {
                out.push((v, 1.0));
                if orient.shielding == Shielding::ReflectingEarth {
                    let mut d: [f64; 3] = UnitSphere.sample(rng);
                    if dot(d, z) < 0.0 {
                        d = [-d[0], -d[1], -d[2]];
                    }
                    out.push(([d[0] * s, d[1] * s, d[2] * s], 2.0 * mu.abs()));
                }
            }
        }
    }
    if flux.mode == FluxMode::Isotropized {
        for (v, _) in out.iter_mut() {
            let s = dot(*v, *v).sqrt();
            let d: [f64; 3] = UnitSphere.sample(rng);
            *v = [d[0] * s, d[1] * s, d[2] * s];
        }
    }
}

/// Unit vector orthogonal to `k`, at azimuth φ.
fn transverse(k: Vec3, phi: f64) -> Vec3 {
    let seed = if k[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let d = dot(seed, k);
    let mut e1 = [seed[0] - d * k[0], seed[1] - d * k[1], seed[2] - d * k[2]];
    let n = dot(e1, e1).sqrt();
    e1 = [e1[0] / n, e1[1] / n, e1[2] / n];
    let e2 = [
        k[1] * e1[2] - k[2] * e1[1],
        k[2] * e1[0] - k[0] * e1[2],
        k[0] * e1[1] - k[1] * e1[0],
    ];
    let (s, c) = phi.sin_cos();
    [
        c * e1[0] + s * e2[0],
        c * e1[1] + s * e2[1],
        c * e1[2] + s * e2[2],
    ]
}

#[derive(Default, Clone, Copy)]
struct Acc {
    n: f64,
    re: f64,
    re2: f64,
    im: f64,
    im2: f64,
    tot: f64,
}

fn run_chunk(
    scenario: &DmScenario,
    target: &TargetModel,
    flux: &FluxModel,
    orient: &Orientation,
    samples: usize,
    seed: u64,
) -> Acc {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = scenario.momentum();
    let dx = target.experiment.separation();
    let mut acc = Acc::default();
    let mut parts = Vec::with_capacity(2);
    for _ in 0..samples {
        incident(flux, orient, &mut rng, &mut parts);
        let mut re = 0.0;
        let mut im = 0.0;
        let mut tot = 0.0;
        for &(v, w) in &parts {
            let s = dot(v, v).sqrt();
            if s == 0.0 {
                continue;
            }
            let k = s * p;
            let khat = [v[0] / s, v[1] / s, v[2] / s];
            let b = 2.0 * k / scenario.mediator_mass;
            let c2 = sample_half_angle_sq(b, rng.random::<f64>());
            let c = c2.sqrt();
            let sc = (1.0 - c2).max(0.0).sqrt();
            let e = transverse(khat, 2.0 * std::f64::consts::PI * rng.random::<f64>());
            let q = 2.0 * k * c;
            // Momentum delivered to the target; Δx lies along z.
            let qz = q * (c * khat[2] + sc * e[2]);
            let weight = w * scenario.rho / scenario.mass
                * (k / scenario.mass)
                * yukawa_total_cross_section(scenario, k)
                * structure_factor(q, target).unwrap_or(0.0);
            let phase = qz * dx;
            // 1 − cos x, accurate for small x.
            let half = (0.5 * phase).sin();
            re += weight * 2.0 * half * half;
            im += -weight * phase.sin();
            tot += weight;
        }
        acc.n += 1.0;
        acc.re += re;
        acc.re2 += re * re;
        acc.im += im;
        acc.im2 += im * im;
        acc.tot += tot;
    }
    acc
}

/// Monte Carlo rate; `abs_err` is the standard error of the complex mean.
pub fn decoherence_rate_mc(
    scenario: &DmScenario,
    target: &TargetModel,
    flux: &FluxModel,
    orient: &Orientation,
    n_samples: usize,
    seed: u64,
) -> Result<DecoherenceResult> {
    if n_samples < 10_000 {
        return Err(Error::invalid("n_samples", "need at least 10^4 samples"));
    }
    scenario.validate()?;
    target.experiment.validate()?;
    let chunks = n_samples.div_ceil(CHUNK);
    let accs: Vec<Acc> = (0..chunks)
        .into_par_iter()
        .map(|i| {
            let n = CHUNK.min(n_samples - i * CHUNK);
            let chunk_seed = seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(i as u64);
            run_chunk(scenario, target, flux, orient, n, chunk_seed)
        })
        .collect();
    let total = accs.iter().fold(Acc::default(), |a, b| Acc {
        n: a.n + b.n,
        re: a.re + b.re,
        re2: a.re2 + b.re2,
        im: a.im + b.im,
        im2: a.im2 + b.im2,
        tot: a.tot + b.tot,
    });
    let n = total.n;
    let mean_re = total.re / n;
    let mean_im = total.im / n;
    let var_re = (total.re2 / n - mean_re * mean_re).max(0.0) / n;
    let var_im = (total.im2 / n - mean_im * mean_im).max(0.0) / n;
    let born = born_validity_characteristic(scenario, &target.experiment)?;
    Ok(DecoherenceResult {
        rate: Complex64::new(rate_to_hz(mean_re), rate_to_hz(mean_im)),
        abs_err: rate_to_hz((var_re + var_im).sqrt()),
        regime: Regime::Mixed,
        total_rate: rate_to_hz(total.tot / n),
        born,
    })
}
