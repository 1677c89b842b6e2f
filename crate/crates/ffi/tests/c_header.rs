use std::path::{Path, PathBuf};
use std::process::Command;

fn header_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

fn compiler() -> Option<&'static str> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok())
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(header_dir().join("sirsh.h")).unwrap();
    for name in [
        "sirsh_last_error",
        "sirsh_params_new",
        "sirsh_params_free",
        "sirsh_r0",
        "sirsh_endemic_equilibrium",
        "sirsh_theta_star",
        "sirsh_worst_theta",
        "sirsh_entry_exit",
        "sirsh_simulate",
        "sirsh_trajectory_len",
        "sirsh_trajectory_point",
        "sirsh_trajectory_wave_end",
        "sirsh_trajectory_state_at",
        "sirsh_trajectory_free",
        "SIRSH_STATUS_OK",
        "typedef struct sirsh_params sirsh_params",
    ] {
        assert!(h.contains(name), "missing {name}");
    }
}

#[test]
fn c_program_links_against_static_library() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libsirsh_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let dir = tempdir();
    let src = dir.join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include <math.h>
#include "sirsh.h"
int main(void) {
    sirsh_params *p = NULL;
    if (sirsh_params_new(1.0, 0.35, 0.6, 0.8, 0.4, 0.01, 0, &p) != SIRSH_STATUS_OK) return 1;
    double r = 0.0;
    if (sirsh_r0(p, &r) != SIRSH_STATUS_OK) return 2;
    sirsh_state ee;
    if (sirsh_endemic_equilibrium(p, 1, &ee) != SIRSH_STATUS_OK) return 3;
    if (fabs(ee.s * r - 1.0) > 1e-12) return 4;
    sirsh_trajectory *t = NULL;
    if (sirsh_simulate(p, 1e-5, 0.0, 0.0, 200.0, &t) != SIRSH_STATUS_OK) return 5;
    double tf = 0.0;
    if (sirsh_trajectory_wave_end(t, &tf) != SIRSH_STATUS_OK) return 6;
    sirsh_trajectory_free(t);
    if (sirsh_theta_star(p, &r) != SIRSH_STATUS_NOT_APPLICABLE) return 7;
    if (sirsh_last_error()[0] == '\0') return 8;
    sirsh_params_free(p);
    printf("ok %.6f\n", tf);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.join("smoke");
    let status = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(header_dir())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
    std::fs::remove_dir_all(dir).ok();
}

fn tempdir() -> PathBuf {
    let d = std::env::temp_dir().join(format!("sirsh-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}
