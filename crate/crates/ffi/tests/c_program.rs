//! Compiles and runs a small C program against the generated header and the
//! static library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "sea_undistort.h"

int main(void) {
    SuScene *scene = NULL;
    if (su_scene_sample(7, &scene) != SU_STATUS_OK) return 1;
    double gsd = su_scene_gsd(scene);
    if (!(gsd >= 0.014 && gsd <= 0.063)) return 2;
    size_t need = 0;
    if (su_scene_to_json(scene, NULL, 0, &need) != SU_STATUS_BUFFER_TOO_SMALL || need < 10) return 3;
    su_scene_free(scene);

    float values[6] = {-1.0f, -3.0f, -9999.0f, -2.0f, -19.5f, 4.0f};
    SuDsm *dsm = NULL;
    if (su_dsm_from_values(3, 2, 0.25, values, -9999.0f, &dsm) != SU_STATUS_OK) return 4;
    uint64_t counts[10], oor = 0, nodata = 0;
    if (su_dsm_bin_counts(dsm, NULL, 0, counts, 10, &oor, &nodata) != SU_STATUS_OK) return 5;
    if (counts[0] != 1 || counts[1] != 2 || counts[9] != 1 || oor != 1 || nodata != 1) return 6;
    SuErrorStats stats;
    if (su_depth_errors(dsm, dsm, &stats) != SU_STATUS_OK || stats.rmse_m != 0.0 || stats.n != 5) return 7;
    su_dsm_free(dsm);

    size_t sizes[3];
    if (su_split_sizes(1002, 0.8, 0.1, 0.1, sizes) != SU_STATUS_OK) return 8;
    if (sizes[0] != 802 || sizes[1] != 100 || sizes[2] != 100) return 9;

    char msg[128];
    if (su_split_sizes(5, 0.9, 0.9, 0.9, sizes) != SU_STATUS_INVALID_ARGUMENT) return 10;
    if (su_last_error_message(msg, sizeof msg) == 0) return 11;
    printf("ok %s\n", su_version());
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // <target>/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let lib = target_dir().join("libsea_undistort_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() || !lib.exists() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    let bin = dir.path().join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(
        out.status.success(),
        "C program exited with {:?}",
        out.status.code()
    );
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
