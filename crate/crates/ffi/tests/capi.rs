use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

use qvlab_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 256];
    let n = unsafe { qv_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn hyperbolic_hardy_weight_through_the_abi() {
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { qv_model_hyperbolic(3, 2.0, 1.0, &mut model) }, QvStatus::QvOk);
    let mut chi = 0.0;
    assert_eq!(unsafe { qv_hardy_weight(model, 1.0, &mut chi) }, QvStatus::QvOk);
    let exact = (1.0 - (-2.0f64).exp()).powi(-2);
    assert!((chi / exact - 1.0).abs() < 1e-10);
    unsafe { qv_model_free(model) };
}

#[test]
fn annulus_tone_and_node_buffer() {
    let mut model = ptr::null_mut();
    let mut mesh = ptr::null_mut();
    let mut zero = ptr::null_mut();
    unsafe {
        assert_eq!(qv_model_flat(3, 2.0, &mut model), QvStatus::QvOk);
        assert_eq!(qv_mesh_annulus(model, 1.0, 2.0, 400, &mut mesh), QvStatus::QvOk);
        assert_eq!(qv_potential_constant(0.0, &mut zero), QvStatus::QvOk);
        let mut lambda = 0.0;
        assert_eq!(qv_fundamental_tone(mesh, zero, &mut lambda), QvStatus::QvOk);
        assert!((lambda / (std::f64::consts::PI.powi(2)) - 1.0).abs() < 1e-4);

        let n = qv_mesh_node_count(mesh);
        assert_eq!(n, 401);
        let mut small = vec![0.0; 3];
        let mut written = 0;
        assert_eq!(qv_mesh_nodes(mesh, small.as_mut_ptr(), small.len(), &mut written), QvStatus::QvBufferTooSmall);
        assert_eq!(written, n);
        let mut nodes = vec![0.0; n];
        assert_eq!(qv_mesh_nodes(mesh, nodes.as_mut_ptr(), n, &mut written), QvStatus::QvOk);
        assert_eq!((nodes[0], nodes[n - 1]), (1.0, 2.0));

        qv_potential_free(zero);
        qv_mesh_free(mesh);
        qv_model_free(model);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { qv_model_flat(2, 2.0, &mut model) }, QvStatus::QvOk);
    let mut g = 0.0;
    assert_eq!(unsafe { qv_green_value(model, 1.0, &mut g) }, QvStatus::QvNotSubcritical);
    assert!(last_error().starts_with("NotSubcritical"));
    let name = unsafe { CStr::from_ptr(qv_status_name(QvStatus::QvNotSubcritical)) };
    assert_eq!(name.to_str().unwrap(), "NotSubcritical");

    let mut mesh = ptr::null_mut();
    assert_eq!(unsafe { qv_mesh_annulus(model, 2.0, 1.0, 10, &mut mesh) }, QvStatus::QvInvalidInput);
    assert!(mesh.is_null());
    assert_eq!(unsafe { qv_hardy_weight(ptr::null(), 1.0, &mut g) }, QvStatus::QvNullPointer);

    let mut class = QvCriticality::QvInconclusiveClass;
    let mut zero = ptr::null_mut();
    unsafe {
        qv_potential_constant(0.0, &mut zero);
        assert_eq!(qv_classify(model, zero, 1.0, 2.0, 6, 60, &mut class), QvStatus::QvOk);
        qv_potential_free(zero);
        qv_model_free(model);
    }
    assert_eq!(class, QvCriticality::QvCritical);
}

#[test]
fn power_solve_returns_positive_solution() {
    unsafe {
        let mut model = ptr::null_mut();
        let mut mesh = ptr::null_mut();
        let (mut a, mut one, mut dip, mut b) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        qv_model_flat(3, 2.0, &mut model);
        qv_mesh_ball(model, 4.0, 200, &mut mesh);
        qv_potential_hardy(model, 0.4, &mut a);
        qv_potential_constant(1.0, &mut one);
        qv_potential_bump(1.0, 0.5, -1e-3, &mut dip);
        assert_eq!(qv_potential_sum(one, dip, &mut b), QvStatus::QvOk);
        let mut u = vec![0.0; 201];
        let mut written = 0;
        let st = qv_solve_power(mesh, a, b, 3.0, 1.0, 0.0, 2.0, u.as_mut_ptr(), u.len(), &mut written);
        assert_eq!(st, QvStatus::QvOk);
        assert_eq!(written, 201);
        assert!(u.iter().all(|x| *x > 0.0));
        assert!((u[200] - 1.0).abs() < 1e-12);
        for h in [a, one, dip, b] {
            qv_potential_free(h);
        }
        qv_mesh_free(mesh);
        qv_model_free(model);
    }
}

#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/qvlab.h");
    assert!(header.exists());
    let text = std::fs::read_to_string(&header).unwrap();
    assert!(text.contains("qv_fundamental_tone") && text.contains("QV_NOT_SUBCRITICAL"));
    let Ok(out) =
        Command::new("cc").args(["-fsyntax-only", "-xc", "-std=c99", "-Wall", "-Werror"]).arg(&header).output()
    else {
        eprintln!("no C compiler; skipping syntax check");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
