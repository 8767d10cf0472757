//! Compiles and runs a small C program against the generated header and the static library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <math.h>
#include "qwqkd.h"

int main(void) {
    double q = 0.0;
    if (qw_max_tolerated_qber(0.5, 1, &q) != QW_STATUS_OK) return 1;
    if (fabs(q - 0.110028) > 1e-6) return 2;

    QwWalk *walk = NULL;
    if (qw_walk_new(3, 0.3, 0.1, 0, 1, &walk) != QW_STATUS_OK) return 3;
    double c = 0.0;
    uint64_t t = 0;
    if (qw_compute_c(walk, 100, &c, &t) != QW_STATUS_OK) return 4;
    qw_walk_free(walk);
    if (!(c >= 1.0 / 6.0 && c <= 1.0) || t < 1 || t > 100) return 5;

    if (qw_key_rate(2.0, 0.0, 0.0, &q) != QW_STATUS_INVALID_ARGUMENT) return 6;
    if (qw_last_error() == NULL) return 7;
    printf("ok %.6f\n", c);
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = manifest.join("include");
    assert!(header_dir.join("qwqkd.h").exists(), "header not generated");

    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libqwqkd_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    let bin = dir.path().join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&header_dir)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
