use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use fermred_ffi::*;

fn last_error() -> String {
    let p = fermred_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn example_state() -> *mut FermredState {
    let re = [0.5; 4];
    let im = [0.0; 4];
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { fermred_state_new(2, re.as_ptr(), im.as_ptr(), 4, &mut s) }, FermredStatus::Ok);
    s
}

#[test]
fn uniform_two_mode_state_marginals() {
    let s = example_state();
    unsafe {
        assert_eq!(fermred_state_modes(s), 2);
        let first = [1usize];
        let mut m = ptr::null_mut();
        assert_eq!(fermred_reduce_modes(s, first.as_ptr(), 1, false, &mut m), FermredStatus::Ok);
        assert_eq!(fermred_matrix_dim(m), 2);
        let mut values = [0.0; 2];
        assert_eq!(fermred_matrix_spectrum(m, values.as_mut_ptr(), 2), FermredStatus::Ok);
        assert!((values[0] - 1.0).abs() <= 1e-12 && values[1].abs() <= 1e-12);
        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(fermred_matrix_get(m, 0, 1, &mut re, &mut im), FermredStatus::Ok);
        assert!((re - 0.5).abs() <= 1e-15 && im == 0.0);
        assert_eq!(fermred_matrix_get(m, 2, 0, &mut re, &mut im), FermredStatus::Argument);
        fermred_matrix_free(m);

        let (mut equal, mut gap) = (true, 0.0);
        assert_eq!(fermred_equispectral(s, first.as_ptr(), 1, 1e-9, &mut equal, &mut gap), FermredStatus::Ok);
        assert!(!equal && (gap - 0.5).abs() <= 1e-12);
        let (mut s1, mut s2) = (0.0, 0.0);
        assert_eq!(fermred_entropies(s, first.as_ptr(), 1, &mut s1, &mut s2), FermredStatus::Ok);
        assert!(s1.abs() <= 1e-10 && (s2 - 1.0).abs() <= 1e-10);
        fermred_state_free(s);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut s = ptr::null_mut();
        let re = [1.0, 1.0];
        let im = [0.0, 0.0];
        assert_eq!(fermred_state_new(1, re.as_ptr(), im.as_ptr(), 2, &mut s), FermredStatus::Validation);
        assert!(last_error().contains("norm"));
        assert_eq!(fermred_state_new(1, ptr::null(), im.as_ptr(), 2, &mut s), FermredStatus::NullPointer);
        assert_eq!(fermred_state_sample(3, 3, 4, 0, &mut s), FermredStatus::Argument);
        assert_eq!(fermred_state_sample(3, 9, 0, 0, &mut s), FermredStatus::Argument);
        assert!(last_error().contains("unknown ensemble"));

        let text = CString::new("n = 2\n00 1 0\n00 0 0\n").unwrap();
        assert_eq!(fermred_state_from_text(text.as_ptr(), &mut s), FermredStatus::Validation);
        assert!(last_error().contains("line 3"));

        let u = example_state();
        let bad = [3usize];
        let mut m = ptr::null_mut();
        assert_eq!(fermred_reduce_modes(u, bad.as_ptr(), 1, false, &mut m), FermredStatus::Argument);
        let mut occ = [0.0; 1];
        assert_eq!(fermred_natural_occupations(u, occ.as_mut_ptr(), 1), FermredStatus::BufferTooSmall);
        assert_eq!(fermred_natural_occupations(ptr::null(), occ.as_mut_ptr(), 1), FermredStatus::NullPointer);
        fermred_state_free(u);
        fermred_state_free(ptr::null_mut());
        fermred_matrix_free(ptr::null_mut());
    }
}

#[test]
fn sampling_and_particle_reductions() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(fermred_state_sample(3, FermredEnsemble::SsrOdd as i32, 0, 5, &mut s), FermredStatus::Ok);
        let mut occ = [0.0; 3];
        assert_eq!(fermred_natural_occupations(s, occ.as_mut_ptr(), 3), FermredStatus::Ok);
        assert!((occ[0] - 1.0).abs() <= 1e-10 && (occ[1] - occ[2]).abs() <= 1e-10);

        let (mut gap, mut scaled) = (0.0, 0.0);
        let mut verdict = FermredVerdict::Inconclusive;
        assert_eq!(fermred_conjecture_trial(s, 1, &mut gap, &mut verdict, &mut scaled), FermredStatus::Ok);
        assert_eq!(verdict, FermredVerdict::Agree);

        let mut m = ptr::null_mut();
        assert_eq!(fermred_rdm(s, 2, &mut m), FermredStatus::Ok);
        assert_eq!(fermred_matrix_dim(m), 3);
        fermred_matrix_free(m);

        let (mut re, mut im) = ([0.0; 8], [0.0; 8]);
        assert_eq!(fermred_state_amplitudes(s, re.as_mut_ptr(), im.as_mut_ptr(), 8), FermredStatus::Ok);
        let expected = fermred::sample_state(3, fermred::Ensemble::Ssr(fermred::Parity::Odd), 5).unwrap();
        for (i, z) in expected.amplitudes().iter().enumerate() {
            assert_eq!((re[i], im[i]), (z.re, z.im));
        }
        fermred_state_free(s);

        let cr = [0.5, 0.5, 0.5, 0.5];
        let ci = [0.0; 4];
        let mut crit = 0.0;
        assert_eq!(fermred_two_mode_criterion(cr.as_ptr(), ci.as_ptr(), &mut crit), FermredStatus::Ok);
        assert!((crit - 1.0 / 16.0).abs() <= 1e-16);
    }
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(fermred_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn header_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include").join("fermred.h")
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(header_path()).unwrap();
    for name in [
        "fermred_state_new",
        "fermred_state_from_text",
        "fermred_state_sample",
        "fermred_state_free",
        "fermred_reduce_modes",
        "fermred_rdm",
        "fermred_matrix_get",
        "fermred_matrix_spectrum",
        "fermred_equispectral",
        "fermred_entropies",
        "fermred_natural_occupations",
        "fermred_conjecture_trial",
        "fermred_two_mode_criterion",
        "fermred_last_error_message",
        "typedef struct FermredState FermredState",
        "FERMRED_STATUS_PANIC",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "fermred.h"

int main(void) {
    double re[4] = {0.5, 0.5, 0.5, 0.5}, im[4] = {0, 0, 0, 0};
    FermredState *s = NULL;
    if (fermred_state_new(2, re, im, 4, &s) != FERMRED_STATUS_OK) return 10;
    size_t first[1] = {2};
    FermredMatrix *m = NULL;
    if (fermred_reduce_modes(s, first, 1, false, &m) != FERMRED_STATUS_OK) return 11;
    double v[2];
    if (fermred_matrix_spectrum(m, v, 2) != FERMRED_STATUS_OK) return 12;
    printf("%.6f %.6f\n", v[0], v[1]);
    if (fermred_reduce_modes(NULL, first, 1, false, &m) != FERMRED_STATUS_NULL_POINTER) return 13;
    printf("%s\n", fermred_last_error_message());
    fermred_matrix_free(m);
    fermred_state_free(s);
    return 0;
}
"#;

fn static_library() -> Option<PathBuf> {
    // integration tests run from target/<profile>/deps
    let exe = std::env::current_exe().ok()?;
    let profile_dir = exe.parent()?.parent()?;
    let lib = profile_dir.join("libfermred_ffi.a");
    lib.exists().then_some(lib)
}

#[test]
fn c_program_links_against_static_library() {
    let Some(lib) = static_library() else {
        panic!("static library not found next to the test binary");
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(header_path().parent().unwrap())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status();
    let Ok(status) = status else {
        eprintln!("no C compiler available; skipping link check");
        return;
    };
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("0.500000 0.500000"));
    assert_eq!(lines.next(), Some("state is null"));
}
