//! Morning/evening bin-counting estimator for the sidereal signal.
//!
//! Four Poisson counts (+/− outcome, morning/evening half of the sidereal
//! day) give a closed-form estimator of the daily-varying decoherence s̃.
//! The phase channel runs the interferometer null-aligned so the outcome
//! asymmetry is linear in the phase.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::csv_err;
use crate::model::{defaults, Experiment};

/// Observed counts in the four bins.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinCounts {
    pub mrn_plus: u64,
    pub mrn_minus: u64,
    pub eve_plus: u64,
    pub eve_minus: u64,
}

/// Expected counts in the four bins.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BinMeans {
    pub mrn_plus: f64,
    pub mrn_minus: f64,
    pub eve_plus: f64,
    pub eve_minus: f64,
}

impl BinMeans {
    pub fn total(&self) -> f64 {
        self.mrn_plus + self.mrn_minus + self.eve_plus + self.eve_minus
    }
}

impl BinCounts {
    pub fn total(&self) -> u64 {
        self.mrn_plus + self.mrn_minus + self.eve_plus + self.eve_minus
    }

    fn as_f64(&self) -> BinMeans {
        BinMeans {
            mrn_plus: self.mrn_plus as f64,
            mrn_minus: self.mrn_minus as f64,
            eve_plus: self.eve_plus as f64,
            eve_minus: self.eve_minus as f64,
        }
    }
}

/// Which part of the decoherence factor the run measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Channel {
    Decoherence,
    PhaseShift,
}

impl Channel {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "decoherence" => Ok(Channel::Decoherence),
            "phase" | "phase-shift" | "phase_shift" => Ok(Channel::PhaseShift),
            _ => Err(Error::invalid(
                "channel",
                "expected decoherence or phase-shift",
            )),
        }
    }
}

/// Data-taking plan for one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct RunPlan {
    pub experiment: Experiment,
    pub run_length_s: f64,
    pub eta_dm: f64,
    pub eta_res: f64,
    pub channel: Channel,
}

impl RunPlan {
    /// One-month run with the common defaults; space missions have no residual background.
    pub fn new(experiment: Experiment) -> Result<Self> {
        let eta_res = if experiment.space_based {
            0.0
        } else {
            defaults::ETA_RES
        };
        let eta_dm = if experiment.space_based {
            1.0
        } else {
            defaults::ETA_DM
        };
        let plan = RunPlan {
            experiment,
            run_length_s: defaults::RUN_LENGTH_S,
            eta_dm,
            eta_res,
            channel: Channel::Decoherence,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        self.experiment.validate()?;
        if !(self.run_length_s > 0.0) || !self.run_length_s.is_finite() {
            return Err(Error::invalid("run_length_s", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.eta_dm) {
            return Err(Error::invalid("eta_dm", "must lie in [0, 1]"));
        }
        if !(self.eta_res >= 0.0) || !self.eta_res.is_finite() {
            return Err(Error::invalid("eta_res", "must be non-negative"));
        }
        Ok(())
    }

    /// Expected total counts B₀ over the run.
    pub fn total_counts(&self) -> f64 {
        self.experiment.counts(self.run_length_s)
    }
}

fn check_bins(gamma_vis: f64, b0: f64, delta_b: f64) -> Result<()> {
    if !(b0 > 0.0) || !b0.is_finite() {
        return Err(Error::invalid("b0", "must be positive"));
    }
    if !(0.0..=1.0).contains(&gamma_vis) {
        return Err(Error::invalid("gamma_vis", "must lie in [0, 1]"));
    }
    if !(delta_b.abs() < 2.0 * b0) {
        return Err(Error::invalid("delta_b", "must satisfy |ΔB| < 2 B0"));
    }
    Ok(())
}

/// Bin means for a daily-varying decoherence s̃.
pub fn expected_bins(s_tilde: f64, gamma_vis: f64, b0: f64, delta_b: f64) -> Result<BinMeans> {
    check_bins(gamma_vis, b0, delta_b)?;
    let m = (b0 + 0.5 * delta_b) / 4.0;
    let e = (b0 - 0.5 * delta_b) / 4.0;
    let vm = gamma_vis * (1.0 + 0.5 * s_tilde);
    let ve = gamma_vis * (1.0 - 0.5 * s_tilde);
    if vm.abs() > 1.0 || ve.abs() > 1.0 {
        return Err(Error::invalid("s_tilde", "drives a bin mean negative"));
    }
    Ok(BinMeans {
        mrn_plus: m * (1.0 + vm),
        mrn_minus: m * (1.0 - vm),
        eve_plus: e * (1.0 + ve),
        eve_minus: e * (1.0 - ve),
    })
}

/// Bin means for the null-aligned phase channel with sidereal phase φ̃:
/// the outcome asymmetry is g·φ̃/2 in the morning and −g·φ̃/2 in the evening,
/// g = Im γ_other.
pub fn expected_bins_phase(
    phi_tilde: f64,
    im_gamma: f64,
    b0: f64,
    delta_b: f64,
) -> Result<BinMeans> {
    check_bins(im_gamma, b0, delta_b)?;
    let a = 0.5 * im_gamma * phi_tilde;
    if a.abs() > 1.0 {
        return Err(Error::invalid("phi_tilde", "drives a bin mean negative"));
    }
    let m = (b0 + 0.5 * delta_b) / 4.0;
    let e = (b0 - 0.5 * delta_b) / 4.0;
    Ok(BinMeans {
        mrn_plus: m * (1.0 + a),
        mrn_minus: m * (1.0 - a),
        eve_plus: e * (1.0 - a),
        eve_minus: e * (1.0 + a),
    })
}

fn estimate(b: &BinMeans) -> Result<f64> {
    let den = b.mrn_plus * b.eve_plus - b.mrn_minus * b.eve_minus;
    if den == 0.0 {
        return Err(Error::Degenerate("estimator denominator vanishes".into()));
    }
    Ok(2.0 * (b.mrn_plus * b.eve_minus - b.mrn_minus * b.eve_plus) / den)
}

/// Maximum-likelihood estimate of s̃ from observed counts.
pub fn estimate_sidereal(counts: &BinCounts) -> Result<f64> {
    estimate(&counts.as_f64())
}

/// The same estimator applied to expected (real-valued) counts.
pub fn estimate_from_means(means: &BinMeans) -> Result<f64> {
    estimate(means)
}

/// Phase-channel estimate φ̃ = (A_mrn − A_eve)/g from the fringe asymmetries.
pub fn estimate_phase(counts: &BinCounts, im_gamma: f64) -> Result<f64> {
    if !(im_gamma > 0.0) {
        return Err(Error::invalid("im_gamma", "must be positive"));
    }
    let b = counts.as_f64();
    let nm = b.mrn_plus + b.mrn_minus;
    let ne = b.eve_plus + b.eve_minus;
    if nm == 0.0 || ne == 0.0 {
        return Err(Error::Degenerate("a half-day bin pair is empty".into()));
    }
    let am = (b.mrn_plus - b.mrn_minus) / nm;
    let ae = (b.eve_plus - b.eve_minus) / ne;
    Ok((am - ae) / im_gamma)
}

/// Full standard deviation of the s̃ estimator under Poisson counting.
pub fn estimator_stddev(b0: f64, gamma_vis: f64, s_tilde: f64, delta_b: f64) -> Result<f64> {
    if !(gamma_vis > 0.0 && gamma_vis <= 1.0) {
        return Err(Error::invalid("gamma_vis", "must lie in (0, 1]"));
    }
    check_bins(gamma_vis, b0, delta_b)?;
    let g2 = gamma_vis * gamma_vis;
    let s2 = s_tilde * s_tilde;
    let num = b0 * (4.0 * (4.0 + s2) - g2 * (4.0 - s2).powi(2)) + 8.0 * delta_b * s_tilde;
    let den = g2 * (4.0 * b0 * b0 - delta_b * delta_b);
    Ok((num / den).max(0.0).sqrt())
}

/// Asymptotic form 2√((γ_vis⁻² − 1)/B₀), valid for s̃ ≪ 1 − γ_vis and ΔB ≪ B₀.
pub fn estimator_stddev_asymptotic(b0: f64, gamma_vis: f64) -> Result<f64> {
    if !(gamma_vis > 0.0 && gamma_vis <= 1.0) {
        return Err(Error::invalid("gamma_vis", "must lie in (0, 1]"));
    }
    if !(b0 > 0.0) {
        return Err(Error::invalid("b0", "must be positive"));
    }
    Ok(2.0 * ((1.0 / (gamma_vis * gamma_vis) - 1.0) / b0).sqrt())
}

/// Phase-channel standard deviation 2/(g√B₀) at small φ̃ and ΔB.
pub fn phase_stddev(b0: f64, im_gamma: f64) -> Result<f64> {
    if !(im_gamma > 0.0 && im_gamma <= 1.0) {
        return Err(Error::invalid("im_gamma", "must lie in (0, 1]"));
    }
    if !(b0 > 0.0) {
        return Err(Error::invalid("b0", "must be positive"));
    }
    Ok(2.0 / (im_gamma * b0.sqrt()))
}

/// Detection threshold on s̃ (or φ̃) and the statistical enhancement χ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Threshold {
    pub sigma: f64,
    pub background: f64,
    pub threshold: f64,
    pub chi: f64,
}

impl Threshold {
    /// True when the residual background outweighs counting statistics.
    pub fn background_dominated(&self) -> bool {
        self.background > self.sigma
    }
}

/// σ + η_res ln(1/γ_vis) for the plan's channel; the phase channel is
/// null-aligned with Im γ_other = γ_vis.
pub fn detection_threshold(plan: &RunPlan) -> Result<Threshold> {
    plan.validate()?;
    let g = plan.experiment.visibility;
    let b0 = plan.total_counts();
    let sigma = match plan.channel {
        Channel::Decoherence => estimator_stddev_asymptotic(b0, g)?,
        Channel::PhaseShift => phase_stddev(b0, g)?,
    };
    let background = plan.eta_res * (1.0 / g).ln();
    let threshold = sigma + background;
    if !(threshold > 0.0) {
        return Err(Error::invalid(
            "visibility",
            "threshold vanishes at unit visibility without noise",
        ));
    }
    Ok(Threshold {
        sigma,
        background,
        threshold,
        chi: 1.0 / threshold,
    })
}

fn poisson<R: rand::Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean)
        .expect("finite positive mean")
        .sample(rng) as u64
}

/// Draw four independent Poisson counts with the given means.
pub fn sample_bins(means: &BinMeans, seed: u64) -> BinCounts {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    BinCounts {
        mrn_plus: poisson(means.mrn_plus, &mut rng),
        mrn_minus: poisson(means.mrn_minus, &mut rng),
        eve_plus: poisson(means.eve_plus, &mut rng),
        eve_minus: poisson(means.eve_minus, &mut rng),
    }
}

/// Simulate one run. In the phase channel `true_signal` is φ̃ and
/// `gamma_vis` plays the role of Im γ_other.
pub fn simulate_run(
    plan: &RunPlan,
    true_signal: f64,
    gamma_vis: f64,
    b0: f64,
    delta_b: f64,
    seed: u64,
) -> Result<BinCounts> {
    plan.validate()?;
    let means = match plan.channel {
        Channel::Decoherence => expected_bins(true_signal, gamma_vis, b0, delta_b)?,
        Channel::PhaseShift => expected_bins_phase(true_signal, gamma_vis, b0, delta_b)?,
    };
    Ok(sample_bins(&means, seed))
}

/// Summary of many simulated runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReplicaSummary {
    pub replicas: usize,
    pub mean: f64,
    pub stddev: f64,
    /// Fraction of replicas within 1.96 σ_ref of the true value.
    pub coverage: f64,
}

/// Counts for `replicas` independent runs; replica i draws from stream i of
/// `seed`, so the result does not depend on the thread count.
pub fn simulate_replicas(
    plan: &RunPlan,
    true_signal: f64,
    gamma_vis: f64,
    b0: f64,
    delta_b: f64,
    replicas: usize,
    seed: u64,
) -> Result<Vec<BinCounts>> {
    plan.validate()?;
    let means = match plan.channel {
        Channel::Decoherence => expected_bins(true_signal, gamma_vis, b0, delta_b)?,
        Channel::PhaseShift => expected_bins_phase(true_signal, gamma_vis, b0, delta_b)?,
    };
    Ok((0..replicas)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            BinCounts {
                mrn_plus: poisson(means.mrn_plus, &mut rng),
                mrn_minus: poisson(means.mrn_minus, &mut rng),
                eve_plus: poisson(means.eve_plus, &mut rng),
                eve_minus: poisson(means.eve_minus, &mut rng),
            }
        })
        .collect())
}

/// Estimate from one replica in the plan's channel.
pub fn estimate_replica(plan: &RunPlan, counts: &BinCounts, gamma_vis: f64) -> Result<f64> {
    match plan.channel {
        Channel::Decoherence => estimate_sidereal(counts),
        Channel::PhaseShift => estimate_phase(counts, gamma_vis),
    }
}

/// Mean, spread and coverage of a set of estimates.
pub fn summarize(estimates: &[f64], true_signal: f64, sigma_ref: f64) -> Result<ReplicaSummary> {
    if estimates.len() < 2 {
        return Err(Error::invalid("replicas", "need at least two"));
    }
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let covered = estimates
        .iter()
        .filter(|e| (*e - true_signal).abs() < 1.96 * sigma_ref)
        .count() as f64;
    Ok(ReplicaSummary {
        replicas: estimates.len(),
        mean,
        stddev: var.sqrt(),
        coverage: covered / n,
    })
}

/// Run `replicas` independent simulations and summarise the estimates.
#[allow(clippy::too_many_arguments)]
pub fn replicate(
    plan: &RunPlan,
    true_signal: f64,
    gamma_vis: f64,
    b0: f64,
    delta_b: f64,
    replicas: usize,
    seed: u64,
    sigma_ref: f64,
) -> Result<ReplicaSummary> {
    if replicas < 2 {
        return Err(Error::invalid("replicas", "need at least two"));
    }
    let counts = simulate_replicas(plan, true_signal, gamma_vis, b0, delta_b, replicas, seed)?;
    let estimates = counts
        .par_iter()
        .map(|c| estimate_replica(plan, c, gamma_vis))
        .collect::<Result<Vec<_>>>()?;
    summarize(&estimates, true_signal, sigma_ref)
}

/// Write counts as CSV rows mrn_plus, mrn_minus, eve_plus, eve_minus.
pub fn write_counts_csv<W: std::io::Write>(rows: &[BinCounts], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// Read counts written by [`write_counts_csv`].
pub fn read_counts_csv<R: std::io::Read>(r: R) -> Result<Vec<BinCounts>> {
    let mut rd = csv::Reader::from_reader(r);
    rd.deserialize().map(|row| row.map_err(csv_err)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bins_without_signal() {
        let b = expected_bins(0.0, 0.5, 1000.0, 0.0).unwrap();
        assert_eq!(b.mrn_plus, b.eve_plus);
        assert!((b.mrn_plus - 375.0).abs() < 1e-12);
        assert!((b.total() - 1000.0).abs() < 1e-9);
        let blind = expected_bins(0.3, 0.0, 1000.0, 100.0).unwrap();
        assert_eq!(blind.mrn_plus, blind.mrn_minus);
        assert!((blind.mrn_plus - 262.5).abs() < 1e-12);
    }

    #[test]
    fn estimator_inverts_means() {
        let b = expected_bins(0.01, 0.5, 1e6, 0.0).unwrap();
        assert!((estimate_from_means(&b).unwrap() - 0.01).abs() < 1e-12);
        let b = expected_bins(0.02, 0.7, 1e6, 3e4).unwrap();
        assert!((estimate_from_means(&b).unwrap() - 0.02).abs() < 1e-12);
    }

    #[test]
    fn symmetric_counts_give_zero() {
        let c = BinCounts {
            mrn_plus: 7,
            mrn_minus: 3,
            eve_plus: 7,
            eve_minus: 3,
        };
        assert_eq!(estimate_sidereal(&c).unwrap(), 0.0);
        let z = BinCounts {
            mrn_plus: 0,
            mrn_minus: 5,
            eve_plus: 0,
            eve_minus: 0,
        };
        assert!(matches!(estimate_sidereal(&z), Err(Error::Degenerate(_))));
    }

    #[test]
    fn stddev_reference_values() {
        let s = estimator_stddev_asymptotic(1e6, 0.5).unwrap();
        assert!((s - 3.4641e-3).abs() < 1e-7);
        let otima = estimator_stddev_asymptotic(600.0 * 2.592e6, 0.5).unwrap();
        assert!((otima - 8.785e-5).abs() < 1e-8);
        let full = estimator_stddev(1e6, 0.5, 0.0, 0.0).unwrap();
        assert!((full - s).abs() < 1e-15);
    }

    #[test]
    fn otima_threshold() {
        let plan = RunPlan::new(Experiment::lookup("OTIMA").unwrap()).unwrap();
        let t = detection_threshold(&plan).unwrap();
        assert!((t.threshold - 7.81e-4).abs() < 1e-6);
        assert!(t.background_dominated());
    }

    #[test]
    fn phase_estimator_inverts_means() {
        let b = expected_bins_phase(0.01, 0.5, 1e6, 0.0).unwrap();
        let c = BinCounts {
            mrn_plus: b.mrn_plus.round() as u64,
            mrn_minus: b.mrn_minus.round() as u64,
            eve_plus: b.eve_plus.round() as u64,
            eve_minus: b.eve_minus.round() as u64,
        };
        assert!((estimate_phase(&c, 0.5).unwrap() - 0.01).abs() < 1e-5);
    }

    #[test]
    fn seeded_runs_repeat() {
        let plan = RunPlan::new(Experiment::lookup("OTIMA").unwrap()).unwrap();
        let a = simulate_run(&plan, 0.01, 0.5, 1e5, 0.0, 9).unwrap();
        let b = simulate_run(&plan, 0.01, 0.5, 1e5, 0.0, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn counts_csv_round_trip() {
        let rows = vec![BinCounts {
            mrn_plus: 1,
            mrn_minus: 2,
            eve_plus: 3,
            eve_minus: 4,
        }];
        let mut buf = Vec::new();
        write_counts_csv(&rows, &mut buf).unwrap();
        assert!(String::from_utf8(buf.clone())
            .unwrap()
            .starts_with("mrn_plus,mrn_minus,eve_plus,eve_minus"));
        assert_eq!(read_counts_csv(&buf[..]).unwrap(), rows);
    }
}
