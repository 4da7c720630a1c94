use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use einsel_ffi::*;

fn last_error() -> String {
    let p = einsel_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(einsel_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn system_state_round_trip() {
    unsafe {
        let mut sys = ptr::null_mut();
        assert_eq!(
            einsel_system_random(2, 8, 0.1, 3, &mut sys),
            EinselStatus::Ok
        );
        let (mut d_s, mut d_b) = (0, 0);
        assert_eq!(
            einsel_system_dims(sys, &mut d_s, &mut d_b),
            EinselStatus::Ok
        );
        assert_eq!((d_s, d_b), (2, 8));

        let mut psi = ptr::null_mut();
        assert_eq!(einsel_state_haar(16, 3, &mut psi), EinselStatus::Ok);
        let mut later = ptr::null_mut();
        assert_eq!(
            einsel_state_evolve(sys, psi, 2.5, &mut later),
            EinselStatus::Ok
        );

        let mut dist = -1.0;
        assert_eq!(einsel_trace_distance(psi, psi, &mut dist), EinselStatus::Ok);
        assert!(dist.abs() < 1e-12);
        assert_eq!(
            einsel_trace_distance(psi, later, &mut dist),
            EinselStatus::Ok
        );
        assert!(dist > 0.0 && dist <= 1.0);

        let mut speed = -1.0;
        assert_eq!(
            einsel_subsystem_speed(sys, later, &mut speed),
            EinselStatus::Ok
        );
        assert!(speed >= 0.0);

        let (mut lhs, mut rhs, mut slack, mut ok) = (0.0, 0.0, 0.0, 0);
        assert_eq!(
            einsel_pointwise_check(sys, later, &mut lhs, &mut rhs, &mut slack, &mut ok),
            EinselStatus::Ok
        );
        assert_eq!(ok, 1);
        assert!((lhs - rhs - slack).abs() < 1e-12);
        assert_eq!(
            einsel_pointwise_check(
                sys,
                later,
                ptr::null_mut(),
                ptr::null_mut(),
                ptr::null_mut(),
                ptr::null_mut()
            ),
            EinselStatus::Ok
        );

        einsel_state_free(later);
        einsel_state_free(psi);
        einsel_system_free(sys);
        einsel_system_free(ptr::null_mut());
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut sys = ptr::null_mut();
        assert_eq!(
            einsel_system_random(0, 4, 0.1, 0, &mut sys),
            EinselStatus::InvalidArgument
        );
        assert!(sys.is_null());
        assert!(last_error().contains("positive"));

        assert_eq!(
            einsel_system_random(2, 4, 0.1, 0, ptr::null_mut()),
            EinselStatus::NullPointer
        );

        let mut a = ptr::null_mut();
        let mut b = ptr::null_mut();
        assert_eq!(einsel_state_haar(4, 1, &mut a), EinselStatus::Ok);
        assert!(einsel_last_error().is_null());
        assert_eq!(einsel_state_haar(6, 1, &mut b), EinselStatus::Ok);
        let mut d = 0.0;
        assert_eq!(
            einsel_trace_distance(a, b, &mut d),
            EinselStatus::InvalidArgument
        );
        assert!(last_error().contains("dimension"));
        einsel_state_free(a);
        einsel_state_free(b);
    }
}

#[test]
fn pairing_from_row_major_table() {
    #[rustfmt::skip]
    let w = [
        0.0, 1.0, 5.0, 1.0,
        1.0, 0.0, 1.0, 5.0,
        5.0, 1.0, 0.0, 1.0,
        1.0, 5.0, 1.0, 0.0,
    ];
    let mut v = 0.0;
    assert_eq!(
        unsafe { einsel_max_pairing(w.as_ptr(), 4, &mut v) },
        EinselStatus::Ok
    );
    assert_eq!(v, 10.0);
    let asym = [0.0, 1.0, 2.0, 0.0];
    assert_eq!(
        unsafe { einsel_max_pairing(asym.as_ptr(), 2, &mut v) },
        EinselStatus::InvalidArgument
    );
}

#[test]
fn run_config_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let out = dir.path().join("out");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"experiment": "lemma1", "trials": 20, "output_path": {:?}}}"#,
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let path = CString::new(cfg.to_str().unwrap()).unwrap();
    let mut failures = 99;
    assert_eq!(
        unsafe { einsel_run_config(path.as_ptr(), &mut failures) },
        EinselStatus::Ok
    );
    assert_eq!(failures, 0);
    assert!(out.join("manifest.json").exists());

    std::fs::write(&cfg, r#"{"experiment": "lemma1", "trials": 0}"#).unwrap();
    assert_eq!(
        unsafe { einsel_run_config(path.as_ptr(), ptr::null_mut()) },
        EinselStatus::Config
    );

    let missing = CString::new(dir.path().join("none.json").to_str().unwrap()).unwrap();
    assert_eq!(
        unsafe { einsel_run_config(missing.as_ptr(), ptr::null_mut()) },
        EinselStatus::Io
    );
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("include")
        .join("einsel.h");
    assert!(header.exists(), "cbindgen header missing");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("check.c");
    std::fs::write(
        &src,
        "#include \"einsel.h\"\nint main(void) { EinselSystem *s = 0; return einsel_system_random(2, 2, 0.1, 0, &s) == EINSEL_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let status = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-I"])
        .arg(header.parent().unwrap())
        .arg(&src)
        .status();
    match status {
        Ok(s) => assert!(s.success(), "header does not compile"),
        Err(_) => eprintln!("no C compiler found; header syntax not checked"),
    }
}
