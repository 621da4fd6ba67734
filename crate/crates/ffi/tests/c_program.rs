//! Builds a small C program against the generated header and the static
//! library, then runs it.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "darkdeco.h"

int main(void) {
    DdScenario *s = NULL;
    DdExperiment *e = NULL;
    double re = 0.0, im = 0.0;
    char msg[256];
    if (dd_scenario_new(1e6, 20.0, &s) != DD_STATUS_OK) return 1;
    if (dd_experiment_lookup("OTIMA", &e) != DD_STATUS_OK) return 2;
    if (dd_decoherence_rate(s, e, DD_FLUX_MODE_ISOTROPIZED, 0.0, 0.0, &re, &im) != DD_STATUS_OK) return 3;
    if (!(re > 0.0)) return 4;
    if (dd_scenario_set_alpha_m(s, -1.0) != DD_STATUS_INVALID_ARGUMENT) return 5;
    if (dd_last_error_message(msg, sizeof msg) <= 0) return 6;
    printf("%s %.3e\n", dd_version(), re);
    dd_scenario_free(s);
    dd_experiment_free(e);
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // The test binary sits in target/<profile>/deps; the static library one level up.
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap().to_path_buf();
    let lib = lib_dir.join("libdarkdeco_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());

    let work = tempfile::tempdir().unwrap();
    let src = work.path().join("main.c");
    let bin = work.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&bin)
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .expect("a C compiler on PATH");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with(env!("CARGO_PKG_VERSION")), "{text}");
}
