//! Compiles a C program against the generated header and the static library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <stdlib.h>
#include <math.h>
#include "linfty.h"

#define CHECK(call) do { LinftyStatus s_ = (call); if (s_ != LINFTY_STATUS_OK) { \
    fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_, linfty_last_error()); return 1; } } while (0)

int main(void) {
    const char *square = "{\"kind\": \"rectangle\", \"ax\": -1, \"ay\": -1, \"bx\": 1, \"by\": 1}";
    LinftyDomain *d = NULL;
    CHECK(linfty_domain_new(square, 0.125, &d));

    size_t n = 0;
    CHECK(linfty_domain_len(d, &n));
    double r = 0.0;
    CHECK(linfty_inradius(d, &r));

    size_t ridge = 0, len = 0;
    CHECK(linfty_high_ridge(d, 0.0, &ridge, 1, &len));

    double *w = calloc(n, sizeof(double));
    w[ridge] = 1.0;
    LinftyMeasure *mu = NULL;
    CHECK(linfty_measure_new(d, w, n, &mu));
    double j = 0.0;
    CHECK(linfty_j_star_flow(mu, &j));

    LinftyDomain *bad = NULL;
    LinftyStatus s = linfty_domain_new("{\"kind\": \"disk\"}", 0.1, &bad);

    printf("%s %zu %.6f %.6f %d %d\n", linfty_version(), len, r, j, (int)s, bad == NULL);

    free(w);
    linfty_measure_free(mu);
    linfty_domain_free(d);
    return fabs(r - 1.0) < 1e-12 && fabs(j - 1.0) < 1e-9 ? 0 : 3;
}
"#;

fn target_dir() -> PathBuf {
    // <target>/<profile>/deps/c_abi-<hash>
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(|p| p.parent()).unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let lib = target_dir().join("liblinfty_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let work = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("c_abi");
    std::fs::create_dir_all(&work).unwrap();
    let src = work.join("main.c");
    let exe = work.join("main");
    std::fs::write(&src, PROGRAM).unwrap();

    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Wextra", "-Werror", "-I"])
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler");
    assert!(status.success(), "compilation failed");

    let out = Command::new(&exe).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}{}", String::from_utf8_lossy(&out.stderr));
    let bad_shape = 3;
    assert_eq!(stdout.trim(), format!("{} 1 1.000000 1.000000 {bad_shape} 1", env!("CARGO_PKG_VERSION")));
}
