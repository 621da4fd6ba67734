//! Command-line front end.

pub mod config;
mod plot;
pub mod table;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::json;

use crate::atmosphere::{greenhouse_enhancement, threshold_curves, MolecularComposition};
use crate::born::born_validity_characteristic;
use crate::decoherence::mc::decoherence_rate_mc;
use crate::decoherence::{decoherence_factor, decoherence_rate_oriented, RateOptions, TargetModel};
use crate::error::{Error, Result};
use crate::flux::{daily_variation, flux_series, FluxModel, Orientation};
use crate::model::Shielding;
use crate::sensitivity::{
    critical_coupling, phase_shift_region, sweep_curve, ExclusionOverlay, SweepOptions,
};
use crate::statistics::{
    detection_threshold, estimate_replica, estimator_stddev, phase_stddev, simulate_replicas,
    summarize, Channel,
};
use config::{ConfigFile, Overrides, RunConfig};
use table::{write_json, Cell, Table};

#[derive(Debug, Parser)]
#[command(
    name = "darkdeco",
    version,
    about = "Dark-matter decoherence rates and interferometer sensitivity"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Complex decoherence rate for one scenario and experiment.
    Decohere(DecohereArgs),
    /// Flux and rate over one sidereal day.
    Daily(DailyArgs),
    /// Atmospheric threshold couplings over a mediator-mass grid.
    Atmosphere(CommonArgs),
    /// Born-approximation validity over a mediator-mass grid.
    BornCheck(CommonArgs),
    /// Poisson simulation of the morning/evening estimator.
    StatsSim(StatsArgs),
    /// Critical coupling over a mediator-mass grid.
    Sensitivity(SensitivityArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Experiment name from the registry.
    #[arg(long)]
    pub experiment: Option<String>,
    /// Dark-matter mass in eV.
    #[arg(long = "M", value_name = "EV")]
    pub mass: Option<f64>,
    /// Mediator mass in eV.
    #[arg(long = "m", value_name = "EV")]
    pub mediator_mass: Option<f64>,
    /// Matter coupling α_M.
    #[arg(long)]
    pub alpha_m: Option<f64>,
    /// Mediator-mass grid lo:hi:points (eV, log-spaced).
    #[arg(long, value_name = "LO:HI:POINTS")]
    pub m_grid: Option<String>,
    /// anisotropic, isotropized or thermalized.
    #[arg(long)]
    pub mode: Option<String>,
    /// Temperature for the thermalized mode (K).
    #[arg(long)]
    pub temperature: Option<f64>,
    /// absorbing, reflecting or space.
    #[arg(long)]
    pub shielding: Option<String>,
    /// Add crust-thermalized dark matter to the signal.
    #[arg(long)]
    pub greenhouse: bool,
    /// Random seed; output is identical for any thread count
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a JSON mirror of every CSV.
    #[arg(long)]
    pub json: bool,
    /// Write a matplotlib script that plots the CSV output.
    #[arg(long)]
    pub emit_plot_script: bool,
}

#[derive(Debug, Clone, Args)]
pub struct DecohereArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Angle between the wind and Δx (degrees), unmasked flux.
    #[arg(long)]
    pub wind_angle: Option<f64>,
    /// Evaluate at this sidereal phase in [0, 1] with the site's shielding.
    #[arg(long)]
    pub phase: Option<f64>,
    /// Also run the Monte Carlo estimate with this many samples.
    #[arg(long)]
    pub mc_samples: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct DailyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Sidereal phases sampled over the day.
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Number of simulated runs (default 1000)
    #[arg(long)]
    pub replicas: Option<usize>,
    /// True daily-varying signal s̃ (or φ̃ in the phase channel).
    #[arg(long)]
    pub s_tilde: Option<f64>,
    /// Background asymmetry ΔB/B₀.
    #[arg(long)]
    pub delta_b: Option<f64>,
    /// Total counts B₀ (default: count rate × run length).
    #[arg(long)]
    pub total_counts: Option<f64>,
    /// decoherence or phase-shift.
    #[arg(long)]
    pub channel: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SensitivityArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// CSV of existing limits (m_eV, alpha_limit).
    #[arg(long)]
    pub overlay: Option<PathBuf>,
    /// Also report where the phase channel beats decoherence.
    #[arg(long)]
    pub phase_region: bool,
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Decohere(a) => &a.common,
            Command::Daily(a) => &a.common,
            Command::Atmosphere(a) | Command::BornCheck(a) => a,
            Command::StatsSim(a) => &a.common,
            Command::Sensitivity(a) => &a.common,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Decohere(_) => "decohere",
            Command::Daily(_) => "daily",
            Command::Atmosphere(_) => "atmosphere",
            Command::BornCheck(_) => "born-check",
            Command::StatsSim(_) => "stats-sim",
            Command::Sensitivity(_) => "sensitivity",
        }
    }

    fn overrides(&self) -> Overrides {
        let c = self.common();
        let mut o = Overrides {
            experiment: c.experiment.clone(),
            mass_ev: c.mass,
            mediator_mass_ev: c.mediator_mass,
            alpha_m: c.alpha_m,
            m_grid: c.m_grid.clone(),
            mode: c.mode.clone(),
            temperature_k: c.temperature,
            shielding: c.shielding.clone(),
            greenhouse: c.greenhouse,
            seed: c.seed,
            out: c.out.clone(),
            ..Overrides::default()
        };
        match self {
            Command::Decohere(a) => {
                o.wind_angle_deg = a.wind_angle;
                o.sidereal_phase = a.phase;
                o.mc_samples = a.mc_samples;
            }
            Command::Daily(a) => o.points = a.points,
            Command::StatsSim(a) => {
                o.replicas = a.replicas;
                o.s_tilde = a.s_tilde;
                o.delta_b_rel = a.delta_b;
                o.total_counts = a.total_counts;
                o.channel = a.channel.clone();
            }
            Command::Sensitivity(a) => {
                o.overlay = a.overlay.clone();
                o.phase_region = a.phase_region;
            }
            Command::Atmosphere(_) | Command::BornCheck(_) => {}
        }
        o
    }
}

/// Where a command puts its files.
struct Output {
    dir: PathBuf,
    json: bool,
    written: Vec<PathBuf>,
}

impl Output {
    fn save(&mut self, table: &Table, stem: &str) -> Result<()> {
        let files = table.save(&self.dir, stem, self.json)?;
        self.written.extend(files);
        Ok(())
    }

    fn summary(&mut self, stem: &str, value: &serde_json::Value) -> Result<()> {
        if self.json {
            let p = self.dir.join(format!("{stem}.json"));
            write_json(&p, value)?;
            self.written.push(p);
        }
        Ok(())
    }
}

/// Parse the process arguments, run and return the exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Run a parsed command; returns the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let common = cli.command.common();
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Error::invalid("threads", "must be at least 1"));
        }
        // A pool that already exists (e.g. in tests) is kept.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let file = common.config.as_deref().map(ConfigFile::load).transpose()?;
    let cfg = RunConfig::resolve(file.as_ref(), &cli.command.overrides())?;
    std::fs::create_dir_all(&cfg.run.out)?;
    let mut out = Output {
        dir: cfg.run.out.clone(),
        json: common.json,
        written: Vec::new(),
    };
    match &cli.command {
        Command::Decohere(_) => decohere(&cfg, &mut out)?,
        Command::Daily(_) => daily(&cfg, &mut out)?,
        Command::Atmosphere(_) => atmosphere(&cfg, &mut out)?,
        Command::BornCheck(_) => born_check(&cfg, &mut out)?,
        Command::StatsSim(_) => stats_sim(&cfg, &mut out)?,
        Command::Sensitivity(_) => sensitivity(&cfg, &mut out)?,
    }
    if common.emit_plot_script {
        let p = plot::write_script(cli.command.name(), &out.dir)?;
        out.written.push(p);
    }
    Ok(out.written)
}

fn sweep_options(cfg: &RunConfig) -> SweepOptions {
    SweepOptions {
        mode: cfg.run.mode,
        site: cfg.site,
        wind_angle: 0.0,
        greenhouse: cfg.run.greenhouse,
        atmosphere: cfg.atmosphere,
        composition: MolecularComposition::nitrogen(),
        rate: RateOptions::default(),
    }
}

fn decohere(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let s = cfg.scenario;
    let target = TargetModel::new(cfg.experiment.clone())?;
    let (flux, orient, geometry) = match cfg.run.sidereal_phase {
        Some(p) if cfg.site.shielding != Shielding::Space => (
            FluxModel::new(s, cfg.site, cfg.run.mode)?,
            Orientation::sidereal(&cfg.site, p),
            format!("sidereal-phase={p}"),
        ),
        _ => (
            FluxModel::space(s, cfg.run.mode)?,
            Orientation::wind_angle(cfg.run.wind_angle_deg.to_radians()),
            format!("wind-angle-deg={}", cfg.run.wind_angle_deg),
        ),
    };
    let mut results = vec![(
        "quadrature",
        decoherence_rate_oriented(&s, &target, &flux, &orient, &RateOptions::default())?,
    )];
    if let Some(n) = cfg.run.mc_samples {
        results.push((
            "monte-carlo",
            decoherence_rate_mc(&s, &target, &flux, &orient, n, cfg.run.seed)?,
        ));
    }
    let mut t = Table::new(&[
        "experiment",
        "M_eV",
        "m_eV",
        "alpha_m",
        "mode",
        "geometry",
        "method",
        "rate_re_hz",
        "rate_im_hz",
        "abs_err_hz",
        "total_rate_hz",
        "regime",
        "s",
        "phi",
        "born_ratio",
        "born_valid",
    ]);
    for (method, r) in &results {
        let f = decoherence_factor(r.rate, cfg.experiment.exposure_s())?;
        t.push(vec![
            cfg.experiment.name.as_str().into(),
            s.mass.into(),
            s.mediator_mass.into(),
            s.alpha_m.into(),
            cfg.run.mode.name().into(),
            geometry.as_str().into(),
            (*method).into(),
            r.rate.re.into(),
            r.rate.im.into(),
            r.abs_err.into(),
            r.total_rate.into(),
            r.regime.name().into(),
            f.s.into(),
            f.phi.into(),
            r.born.ratio.into(),
            r.born.valid.into(),
        ]);
    }
    out.save(&t, "decohere")
}

fn daily(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let s = cfg.scenario;
    let target = TargetModel::new(cfg.experiment.clone())?;
    let flux = FluxModel::new(s, cfg.site, cfg.run.mode)?;
    let series = flux_series(&s, &cfg.site, cfg.run.points)?;
    let rates = series
        .times
        .par_iter()
        .map(|&p| {
            decoherence_rate_oriented(
                &s,
                &target,
                &flux,
                &Orientation::sidereal(&cfg.site, p),
                &RateOptions::default(),
            )
            .map(|r| r.rate)
        })
        .collect::<Result<Vec<Complex64>>>()?;
    let mut t = Table::new(&[
        "sidereal_phase",
        "sidereal_hours",
        "flux_fraction",
        "rate_re_hz",
        "rate_im_hz",
    ]);
    for ((p, f), r) in series.times.iter().zip(&series.values).zip(&rates) {
        t.push(vec![
            (*p).into(),
            (24.0 * p).into(),
            (*f).into(),
            r.re.into(),
            r.im.into(),
        ]);
    }
    out.save(&t, "daily")?;
    let eta = daily_variation(&series)?;
    let hours = |i: usize| 24.0 * series.times[i];
    println!(
        "flux: daily variation {eta:.4}, maximum at {:.2} h, minimum at {:.2} h (sidereal)",
        hours(series.argmax()),
        hours(series.argmin())
    );
    out.summary(
        "daily_summary",
        &json!({
            "daily_variation": eta,
            "flux_max_hours": hours(series.argmax()),
            "flux_min_hours": hours(series.argmin()),
            "flux_maxima": series.local_maxima(),
        }),
    )
}

fn atmosphere(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let comp = MolecularComposition::nitrogen();
    let grid = cfg.run.m_grid.values()?;
    let rows = threshold_curves(&cfg.scenario, &cfg.atmosphere, &comp, &grid)?;
    let gh = grid
        .par_iter()
        .map(|&m| {
            let s = cfg.scenario.with_mediator_mass(m)?.with_alpha_m(1.0)?;
            greenhouse_enhancement(&s, &cfg.atmosphere, &comp)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut t = Table::new(&[
        "m_eV",
        "alphaM_scatt",
        "alphaM_iso",
        "alphaM_therm",
        "greenhouse_enhancement",
    ]);
    for (r, e) in rows.iter().zip(gh) {
        t.push(vec![
            r.m_ev.into(),
            r.alpha_m_scatt.into(),
            r.alpha_m_iso.into(),
            r.alpha_m_therm.into(),
            e.into(),
        ]);
    }
    out.save(&t, "atmosphere")
}

fn born_check(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let grid = cfg.run.m_grid.values()?;
    let opts = sweep_options(cfg);
    // Without an explicit coupling, check the coupling the experiment would reach.
    let rows = grid
        .par_iter()
        .map(|&m| {
            let s = cfg.scenario.with_mediator_mass(m)?;
            let alpha = if cfg.alpha_m_given {
                Some(s.alpha_m)
            } else {
                match critical_coupling(&s, &cfg.experiment, &cfg.plan, &opts) {
                    Ok(c) => Some(c.alpha_hat),
                    Err(Error::NoSensitivity(_)) => None,
                    Err(e) => return Err(e),
                }
            };
            let born = alpha
                .map(|a| born_validity_characteristic(&s.with_alpha_m(a)?, &cfg.experiment))
                .transpose()?;
            Ok((m, alpha, born))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(&["m_eV", "alpha_m", "born_ratio", "born_regime", "born_valid"]);
    for (m, a, b) in rows {
        t.push(vec![
            m.into(),
            Cell::opt(a),
            Cell::opt(b.map(|b| b.ratio)),
            b.map_or(Cell::Empty, |b| b.regime.name().into()),
            b.map_or(Cell::Empty, |b| b.valid.into()),
        ]);
    }
    out.save(&t, "born_check")
}

fn stats_sim(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let plan = &cfg.plan;
    let r = &cfg.run;
    let g = cfg.experiment.visibility;
    let b0 = r.total_counts.unwrap_or_else(|| plan.total_counts());
    let db = r.delta_b_rel * b0;
    let counts = simulate_replicas(plan, r.s_tilde, g, b0, db, r.replicas, r.seed)?;
    let estimates = counts
        .iter()
        .map(|c| estimate_replica(plan, c, g))
        .collect::<Result<Vec<f64>>>()?;
    let sigma = match plan.channel {
        Channel::Decoherence => estimator_stddev(b0, g, r.s_tilde, db)?,
        Channel::PhaseShift => phase_stddev(b0, g)?,
    };
    let summary = summarize(&estimates, r.s_tilde, sigma)?;
    let threshold = detection_threshold(plan)?;

    let mut t = Table::new(&[
        "replica",
        "mrn_plus",
        "mrn_minus",
        "eve_plus",
        "eve_minus",
        "estimate",
    ]);
    for (i, (c, e)) in counts.iter().zip(&estimates).enumerate() {
        t.push(vec![
            Cell::Int(i as u64),
            Cell::Int(c.mrn_plus),
            Cell::Int(c.mrn_minus),
            Cell::Int(c.eve_plus),
            Cell::Int(c.eve_minus),
            (*e).into(),
        ]);
    }
    out.save(&t, "stats_sim")?;

    let channel = match plan.channel {
        Channel::Decoherence => "decoherence",
        Channel::PhaseShift => "phase-shift",
    };
    let mut s = Table::new(&[
        "channel",
        "true_signal",
        "gamma_vis",
        "total_counts",
        "delta_b",
        "replicas",
        "mean",
        "stddev",
        "stddev_formula",
        "coverage",
        "threshold",
    ]);
    s.push(vec![
        channel.into(),
        r.s_tilde.into(),
        g.into(),
        b0.into(),
        db.into(),
        Cell::Int(summary.replicas as u64),
        summary.mean.into(),
        summary.stddev.into(),
        sigma.into(),
        summary.coverage.into(),
        threshold.threshold.into(),
    ]);
    out.save(&s, "stats_summary")?;
    println!(
        "estimate mean {:.4e}, stddev {:.4e} (formula {:.4e}), 95% coverage {:.4}",
        summary.mean, summary.stddev, sigma, summary.coverage
    );
    Ok(())
}

fn sensitivity(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let opts = sweep_options(cfg);
    let grid = cfg.run.m_grid.values()?;
    let overlay = cfg.run.overlay.as_deref().map(read_overlay).transpose()?;
    let curve = sweep_curve(
        &cfg.experiment,
        &cfg.scenario,
        &grid,
        &cfg.plan,
        &opts,
        overlay.as_ref(),
    )?;

    let mut wide = Table::new(&[
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
    ]);
    let mut long = Table::new(&["experiment", "M_eV", "curve", "m_eV", "alpha"]);
    for r in &curve.rows {
        wide.push(vec![
            curve.experiment.as_str().into(),
            curve.mass.into(),
            r.m.into(),
            Cell::opt(r.alpha_hat),
            r.regime.as_str().into(),
            r.born_valid.into(),
            r.alpha_scatt.into(),
            r.alpha_iso.into(),
            r.alpha_therm.into(),
            Cell::opt(r.alpha_hat_greenhouse),
            r.detectable.into(),
        ]);
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
                long.push(vec![
                    curve.experiment.as_str().into(),
                    curve.mass.into(),
                    name.into(),
                    r.m.into(),
                    v.into(),
                ]);
            }
        }
    }
    out.save(&wide, "sensitivity")?;
    out.save(&long, "sensitivity_long")?;

    if cfg.run.phase_region {
        let rows = phase_shift_region(&cfg.experiment, &cfg.scenario, &grid, &cfg.plan, &opts)?;
        let mut t = Table::new(&["m_eV", "alpha_hat_decoherence", "alpha_hat_phase"]);
        for r in rows {
            t.push(vec![
                r.m.into(),
                Cell::opt(r.alpha_hat_decoherence),
                Cell::opt(r.alpha_hat_phase),
            ]);
        }
        out.save(&t, "phase_region")?;
    }
    let th = detection_threshold(&cfg.plan)?;
    let detectable = curve.rows.iter().filter(|r| r.detectable).count();
    println!(
        "{} at M = {:e} eV: threshold {:.4e} ({}), {detectable}/{} grid points detectable",
        curve.experiment,
        curve.mass,
        th.threshold,
        if th.background_dominated() {
            "background-dominated"
        } else {
            "statistics-dominated"
        },
        curve.rows.len()
    );
    out.summary(
        "sensitivity_summary",
        &json!({
            "experiment": curve.experiment,
            "M_eV": curve.mass,
            "threshold": th.threshold,
            "sigma": th.sigma,
            "background": th.background,
            "background_dominated": th.background_dominated(),
            "detectable_points": detectable,
        }),
    )
}

fn read_overlay(path: &Path) -> Result<ExclusionOverlay> {
    let f = std::fs::File::open(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    ExclusionOverlay::read_csv(f)
}
