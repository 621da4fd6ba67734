use darkdeco::decoherence::{decoherence_rate_oriented, TargetModel};
use darkdeco::flux::{FluxModel, Orientation};
use darkdeco::model::{DmScenario, Experiment};
use darkdeco::sensitivity::{
    critical_coupling, critical_coupling_bisection, log_grid, shielding_factor, sweep_curve,
    SweepOptions,
};
use darkdeco::statistics::RunPlan;

fn setup(name: &str) -> (Experiment, RunPlan, SweepOptions) {
    let e = Experiment::lookup(name).unwrap();
    let plan = RunPlan::new(e.clone()).unwrap();
    let mut opts = SweepOptions::for_experiment(&e);
    opts.rate.rel_tol = 1e-2;
    (e, plan, opts)
}

/// s̃ at the given scenario coupling, as the sweep evaluates it.
fn signal(s: &DmScenario, e: &Experiment, plan: &RunPlan, opts: &SweepOptions) -> f64 {
    let target = TargetModel::new(e.clone()).unwrap();
    let flux = FluxModel::space(*s, opts.mode).unwrap();
    let r = decoherence_rate_oriented(
        s,
        &target,
        &flux,
        &Orientation::wind_angle(opts.wind_angle),
        &opts.rate,
    )
    .unwrap();
    plan.eta_dm * r.rate.re * shielding_factor(s, &opts.site).unwrap() * e.exposure_s()
}

#[test]
fn signal_is_linear_at_every_emitted_point() {
    let (e, plan, opts) = setup("OTIMA");
    let s = DmScenario::new(1e7, 1.0).unwrap();
    let grid = log_grid(1e-2, 1e4, 7).unwrap();
    let curve = sweep_curve(&e, &s, &grid, &plan, &opts, None).unwrap();
    let mut checked = 0;
    for r in curve.rows.iter().filter(|r| r.born_valid) {
        let a = r.alpha_hat.unwrap();
        let at = |alpha: f64| {
            s.with_mediator_mass(r.m)
                .unwrap()
                .with_alpha_m(alpha)
                .unwrap()
        };
        let one = signal(&at(a), &e, &plan, &opts);
        let two = signal(&at(2.0 * a), &e, &plan, &opts);
        assert!(
            (two / one - 2.0).abs() < 0.02,
            "m = {}: {two:e} vs 2 × {one:e}",
            r.m
        );
        checked += 1;
    }
    assert!(checked >= 3);
}

#[test]
fn bisection_agrees_with_the_linear_shortcut() {
    let (e, plan, opts) = setup("KDTL");
    for m in [1.0, 100.0] {
        let s = DmScenario::new(1e8, m).unwrap();
        let linear = critical_coupling(&s, &e, &plan, &opts).unwrap().alpha_hat;
        let full = critical_coupling_bisection(&s, &e, &plan, &opts).unwrap();
        assert!(
            (full / linear - 1.0).abs() < 0.01,
            "m = {m}: {full:e} vs {linear:e}"
        );
    }
}

#[test]
fn curve_is_continuous_within_a_regime() {
    let (e, plan, opts) = setup("OTIMA");
    let s = DmScenario::new(1e6, 1.0).unwrap();
    // Default resolution; α̂ ∝ m⁴ at short range makes 0.4 dex per step.
    let grid = log_grid(1e-2, 1e4, 60).unwrap();
    let curve = sweep_curve(&e, &s, &grid, &plan, &opts, None).unwrap();
    for w in curve.rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        assert!(a.m < b.m);
        if let (Some(x), Some(y)) = (a.alpha_hat, b.alpha_hat) {
            assert!(x > 0.0 && y > 0.0);
            let jump = (y / x).log10().abs();
            assert!(
                jump < 0.5 || a.regime != b.regime,
                "{} -> {}: {jump} dex",
                a.m,
                b.m
            );
        }
    }
}

#[test]
fn coupling_rescales_with_dark_coupling_and_density() {
    let (e, plan, opts) = setup("OTIMA");
    let s = DmScenario::new(1e6, 20.0).unwrap();
    let base = critical_coupling(&s, &e, &plan, &opts).unwrap().alpha_hat;
    let mut a = s;
    a.alpha_dm *= 2.0;
    let mut r = s;
    r.rho *= 2.0;
    for t in [a, r] {
        let got = critical_coupling(&t, &e, &plan, &opts).unwrap().alpha_hat;
        assert!(
            (got * 2.0 / base - 1.0).abs() < 1e-12,
            "{got:e} vs {base:e}"
        );
    }
}
