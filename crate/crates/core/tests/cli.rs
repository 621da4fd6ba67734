use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn darkdeco(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_darkdeco"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    all.extend(["--out", dir.to_str().unwrap()]);
    darkdeco(&all)
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn config(name: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    root.join(name).to_str().unwrap().to_string()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let headers = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (headers, rows)
}

fn column(headers: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = headers.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn stats_sim_is_byte_identical_across_runs_and_threads() {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let base = ["stats-sim", "--replicas", "1000", "--seed", "7"];
    ok(&run_in(dirs[0].path(), &base));
    ok(&run_in(
        dirs[1].path(),
        &[&base[..], &["--threads", "1"]].concat(),
    ));
    ok(&run_in(
        dirs[2].path(),
        &[&base[..], &["--threads", "3"]].concat(),
    ));
    for file in ["stats_sim.csv", "stats_summary.csv"] {
        let first = std::fs::read(dirs[0].path().join(file)).unwrap();
        assert!(!first.is_empty());
        for d in &dirs[1..] {
            assert_eq!(
                first,
                std::fs::read(d.path().join(file)).unwrap(),
                "{file} differs"
            );
        }
    }
    let other = tempfile::tempdir().unwrap();
    ok(&run_in(
        other.path(),
        &["stats-sim", "--replicas", "1000", "--seed", "8"],
    ));
    assert_ne!(
        std::fs::read(dirs[0].path().join("stats_sim.csv")).unwrap(),
        std::fs::read(other.path().join("stats_sim.csv")).unwrap()
    );
}

#[test]
fn numbers_use_fixed_scientific_format() {
    let dir = tempfile::tempdir().unwrap();
    ok(&run_in(
        dir.path(),
        &["decohere", "--M", "1e6", "--m", "20"],
    ));
    let (headers, rows) = read_csv(&dir.path().join("decohere.csv"));
    let i = headers.iter().position(|h| h == "rate_re_hz").unwrap();
    let v = &rows[0][i];
    let (mantissa, _) = v.split_once('e').expect("scientific notation");
    assert_eq!(mantissa.trim_start_matches('-').len(), 10, "{v}");
}

#[test]
fn exit_codes_separate_input_and_numerical_errors() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| run_in(dir.path(), args).status.code();
    assert_eq!(code(&["decohere", "--M=-1"]), Some(2));
    assert_eq!(code(&["sensitivity", "--experiment", "Nope"]), Some(2));
    assert_eq!(code(&["decohere", "--no-such-flag"]), Some(2));
    assert_eq!(
        code(&["stats-sim", "--replicas", "100", "--total-counts", "2"]),
        Some(3)
    );

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[scenario]\nmass_ev = 1e6\nmas_ev = 2\n").unwrap();
    let out = run_in(dir.path(), &["decohere", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mas_ev"));

    std::fs::write(&bad, "[scenario]\nmass_ev = -5\n").unwrap();
    let out = run_in(dir.path(), &["decohere", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("scenario.mass"));
}

#[test]
fn daily_emits_one_flux_peak_per_day() {
    let dir = tempfile::tempdir().unwrap();
    ok(&run_in(
        dir.path(),
        &["daily", "--config", &config("daily_kev.toml"), "--json"],
    ));
    let (headers, rows) = read_csv(&dir.path().join("daily.csv"));
    assert_eq!(rows.len(), 96);
    let flux = column(&headers, &rows, "flux_fraction");
    let n = flux.len();
    let peaks = (0..n)
        .filter(|&i| flux[i] > flux[(i + n - 1) % n] && flux[i] >= flux[(i + 1) % n])
        .count();
    assert_eq!(peaks, 1);
    let hours = column(&headers, &rows, "sidereal_hours");
    let arg = |better: fn(f64, f64) -> bool| {
        (0..n).fold(0, |b, i| if better(flux[i], flux[b]) { i } else { b })
    };
    let gap = (hours[arg(|a, b| a < b)] - hours[arg(|a, b| a > b)]).rem_euclid(24.0);
    assert!((gap - 12.0).abs() <= 0.5, "minimum {gap} h after maximum");
    assert!(dir.path().join("daily.json").exists());
    assert!(dir.path().join("daily_summary.json").exists());
}

#[test]
fn sensitivity_covers_the_mediator_range() {
    let dir = tempfile::tempdir().unwrap();
    ok(&run_in(
        dir.path(),
        &[
            "sensitivity",
            "--experiment",
            "OTIMA",
            "--M",
            "1e6",
            "--emit-plot-script",
        ],
    ));
    let (headers, rows) = read_csv(&dir.path().join("sensitivity.csv"));
    assert_eq!(rows.len(), 60);
    let m = column(&headers, &rows, "m_eV");
    assert!((m[0] / 1e-2 - 1.0).abs() < 1e-8 && (m[59] / 1e4 - 1.0).abs() < 1e-8);
    assert!(m.windows(2).all(|w| w[0] < w[1]));
    let i = headers.iter().position(|h| h == "alpha_hat").unwrap();
    assert!(rows
        .iter()
        .all(|r| r[i].is_empty() || r[i].parse::<f64>().unwrap() > 0.0));
    assert!(dir.path().join("sensitivity_long.csv").exists());
    assert!(dir.path().join("plot_sensitivity.py").exists());
}

#[test]
fn example_configs_run() {
    let dir = tempfile::tempdir().unwrap();
    ok(&run_in(
        dir.path(),
        &["decohere", "--config", &config("inline_experiment.toml")],
    ));
    let (headers, rows) = read_csv(&dir.path().join("decohere.csv"));
    assert_eq!(rows[0][0], "gold-cluster");
    assert!(column(&headers, &rows, "rate_re_hz")[0] > 0.0);

    ok(&run_in(
        dir.path(),
        &["stats-sim", "--config", &config("stats_sim.toml")],
    ));
    let (_, rows) = read_csv(&dir.path().join("stats_sim.csv"));
    assert_eq!(rows.len(), 1000);

    // Flags override the file.
    ok(&run_in(
        dir.path(),
        &[
            "sensitivity",
            "--config",
            &config("otima_sensitivity.toml"),
            "--m-grid",
            "1:100:3",
        ],
    ));
    let (_, rows) = read_csv(&dir.path().join("sensitivity.csv"));
    assert_eq!(rows.len(), 3);

    ok(&run_in(
        dir.path(),
        &[
            "daily",
            "--config",
            &config("daily_mev.toml"),
            "--points",
            "4",
        ],
    ));
    let (_, rows) = read_csv(&dir.path().join("daily.csv"));
    assert_eq!(rows.len(), 4);
}
