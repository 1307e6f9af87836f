use std::ffi::{c_char, CString};
use std::f64::consts::PI;
use std::process::Command;
use std::ptr;

use remote_tomo_ffi::*;

fn last_error() -> String {
    let n = unsafe { rt_last_error_message(ptr::null_mut(), 0) };
    let mut buf = vec![0 as c_char; n + 1];
    unsafe { rt_last_error_message(buf.as_mut_ptr(), buf.len()) };
    buf.iter().take(n).map(|&c| c as u8 as char).collect()
}

fn vacuum() -> *mut RtState {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { rt_state_fock(0, -10.0, 10.0, 641, &mut s) }, RtStatus::Ok);
    s
}

#[test]
fn exact_vacuum_pipeline() {
    unsafe {
        let state = vacuum();
        let mut norm = 0.0;
        assert_eq!(rt_state_norm(state, &mut norm), RtStatus::Ok);
        assert!((norm - 1.0).abs() < 1e-9);

        let mut sino = ptr::null_mut();
        assert_eq!(rt_sinogram_build(state, RtMode::Exact, 0.0, 0.0, 90, -8.0, 8.0, 257, &mut sino), RtStatus::Ok);
        let (mut na, mut nu) = (0, 0);
        assert_eq!(rt_sinogram_dims(sino, &mut na, &mut nu), RtStatus::Ok);
        assert_eq!((na, nu), (90, 257));
        let mut values = vec![0.0; na * nu];
        assert_eq!(rt_sinogram_values(sino, values.as_mut_ptr(), values.len()), RtStatus::Ok);
        let du = 16.0 / 256.0;
        let row0: f64 = values[..nu].iter().sum::<f64>() * du;
        assert!((row0 - 1.0).abs() < 1e-6);

        let mut w = ptr::null_mut();
        assert_eq!(rt_reconstruct_wigner(sino, -4.0, 4.0, 65, 0.0, RtApodization::None, &mut w), RtStatus::Ok);
        let mut peak = 0.0;
        assert_eq!(rt_wigner_value_at(w, 0.0, 0.0, &mut peak), RtStatus::Ok);
        assert!((peak - 1.0 / PI).abs() < 5e-3, "peak {peak}");
        let (mut nq, mut np) = (0, 0);
        assert_eq!(rt_wigner_dims(w, &mut nq, &mut np), RtStatus::Ok);
        let mut grid = vec![0.0; nq * np];
        assert_eq!(rt_wigner_values(w, grid.as_mut_ptr(), grid.len()), RtStatus::Ok);
        assert_eq!(grid[(nq / 2) * np + np / 2], peak);

        let mut rho = ptr::null_mut();
        assert_eq!(rt_reconstruct_density_matrix(sino, -5.0, 5.0, 41, &mut rho), RtStatus::Ok);
        let mut fidelity = 0.0;
        assert_eq!(rt_density_matrix_fidelity(rho, state, &mut fidelity), RtStatus::Ok);
        assert!(fidelity > 0.99, "fidelity {fidelity}");
        let mut n = 0;
        assert_eq!(rt_density_matrix_dim(rho, &mut n), RtStatus::Ok);
        let (mut re, mut im) = (vec![0.0; n * n], vec![0.0; n * n]);
        assert_eq!(rt_density_matrix_values(rho, re.as_mut_ptr(), im.as_mut_ptr(), n * n), RtStatus::Ok);
        assert!(im.iter().all(|v| v.abs() < 1e-6));

        rt_density_matrix_free(rho);
        rt_wigner_free(w);
        rt_sinogram_free(sino);
        rt_state_free(state);
    }
}

#[test]
fn tracking_expectation_matches_smeared_vacuum() {
    unsafe {
        let state = vacuum();
        let mut v = 0.0;
        assert_eq!(rt_expect_y_theta(state, std::f64::consts::FRAC_1_SQRT_2, 0.4, 0.0, &mut v), RtStatus::Ok);
        // Vacuum density variance 1/2 plus smearing b1^2/2 = 1/4.
        assert!((v - 1.0 / (2.0 * PI * 0.75).sqrt()).abs() < 1e-6, "{v}");
        rt_state_free(state);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(rt_state_fock(0, 1.0, -1.0, 10, &mut s), RtStatus::Grid);
        assert!(last_error().contains("min"));
        assert!(s.is_null());

        assert_eq!(rt_state_fock(0, -10.0, 10.0, 641, ptr::null_mut()), RtStatus::NullPointer);
        let mut norm = 0.0;
        assert_eq!(rt_state_norm(ptr::null(), &mut norm), RtStatus::NullPointer);

        let state = vacuum();
        let mut v = 0.0;
        assert_eq!(rt_expect_y_theta(state, -1.0, 0.0, 0.0, &mut v), RtStatus::InvalidArgument);

        let mut sino = ptr::null_mut();
        assert_eq!(rt_sinogram_build(state, RtMode::Exact, 0.0, 0.0, 8, -8.0, 8.0, 65, &mut sino), RtStatus::Ok);
        let mut small = [0.0; 4];
        assert_eq!(rt_sinogram_values(sino, small.as_mut_ptr(), small.len()), RtStatus::BufferTooSmall);
        assert!(last_error().contains("needed"));

        let missing = CString::new("/nonexistent/psi.csv").unwrap();
        let mut loaded = ptr::null_mut();
        assert_eq!(rt_state_load(missing.as_ptr(), &mut loaded), RtStatus::Io);

        rt_sinogram_free(sino);
        rt_state_free(state);
        rt_state_free(ptr::null_mut());
    }
}

#[test]
fn message_buffer_truncates() {
    unsafe {
        let mut s = ptr::null_mut();
        rt_state_fock(0, 1.0, -1.0, 10, &mut s);
        let full = rt_last_error_message(ptr::null_mut(), 0);
        let mut buf = [1 as c_char; 5];
        assert_eq!(rt_last_error_message(buf.as_mut_ptr(), buf.len()), full);
        assert_eq!(buf[4], 0);
    }
}

#[test]
fn header_declares_the_api() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/include/remote_tomo.h");
    let header = std::fs::read_to_string(path).expect("generated header");
    for name in [
        "RtStatus rt_state_fock(",
        "RtStatus rt_sinogram_build(",
        "RtStatus rt_reconstruct_wigner(",
        "RtStatus rt_reconstruct_density_matrix(",
        "size_t rt_last_error_message(",
        "void rt_state_free(",
        "typedef struct RtState RtState;",
        "RT_STATUS_BUFFER_TOO_SMALL = 6",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
    // The header must stand alone as C.
    match Command::new("cc").args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", path]).status() {
        Ok(status) => assert!(status.success(), "header does not compile"),
        Err(e) => eprintln!("no C compiler, syntax check skipped: {e}"),
    }
}
