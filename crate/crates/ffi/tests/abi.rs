use std::ffi::{CStr, CString};
use std::ptr;

use spacetimehap_ffi::*;

fn last_error() -> String {
    let p = sthap_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn interval_and_boost() {
    let mut s = 0.0;
    assert_eq!(
        unsafe { sthap_interval(2.0, [1.0, 1.0].as_ptr(), 2, &mut s) },
        StHapStatus::Ok
    );
    assert_eq!(s, 2.0);

    let (mut t, mut x) = (0.0, [0.0]);
    let st = unsafe {
        sthap_boost(
            [0.6].as_ptr(),
            1,
            0.0,
            [1.0].as_ptr(),
            &mut t,
            x.as_mut_ptr(),
        )
    };
    assert_eq!(st, StHapStatus::Ok);
    assert!((t + 0.75).abs() < 1e-15 && (x[0] - 1.25).abs() < 1e-15);

    let st = unsafe {
        sthap_boost(
            [1.0].as_ptr(),
            1,
            0.0,
            [1.0].as_ptr(),
            &mut t,
            x.as_mut_ptr(),
        )
    };
    assert_eq!(st, StHapStatus::InvalidFrame);
    assert!(last_error().contains("|v|"));
}

#[test]
fn null_pointers_are_reported() {
    assert_eq!(
        unsafe { sthap_interval(1.0, ptr::null(), 1, ptr::null_mut()) },
        StHapStatus::NullPointer
    );
    assert!(last_error().contains("x is null"));
    assert_eq!(unsafe { sthap_flow_hap_dim(ptr::null()) }, 0);
    assert_eq!(unsafe { sthap_graph_edge_count(ptr::null()) }, 0);
    unsafe {
        sthap_flow_free(ptr::null_mut());
        sthap_graph_free(ptr::null_mut());
        sthap_string_free(ptr::null_mut());
    }
}

#[test]
fn classify_pairs() {
    let mut class = StHapClass::Spacelike;
    let x = [0.0];
    let st = unsafe {
        sthap_classify(
            0.0,
            x.as_ptr(),
            [0.0, 0.0].as_ptr(),
            1.0,
            x.as_ptr(),
            [0.0, 3.0].as_ptr(),
            1,
            2,
            &mut class,
        )
    };
    assert_eq!(st, StHapStatus::Ok);
    assert_eq!(class, StHapClass::Haplike);
    let st = unsafe {
        sthap_classify(
            0.0,
            x.as_ptr(),
            [0.0, 0.0].as_ptr(),
            -1.0,
            x.as_ptr(),
            [0.0, 0.5].as_ptr(),
            1,
            2,
            &mut class,
        )
    };
    assert_eq!(st, StHapStatus::Ok);
    assert_eq!(class, StHapClass::TimelikePast);
}

#[test]
fn flow_handle_lifecycle() {
    let json = CString::new(
        r#"{"grid": {"points": 64}, "engine": {"dt": 0.004}, "state": {"kind": "product"}}"#,
    )
    .unwrap();
    let mut flow = ptr::null_mut();
    assert_eq!(
        unsafe { sthap_flow_from_json(json.as_ptr(), &mut flow) },
        StHapStatus::Ok
    );
    assert_eq!(unsafe { sthap_flow_hap_dim(flow) }, 2);

    let mut v = [0.0; 2];
    assert_eq!(
        unsafe { sthap_flow_velocity(flow, 0.0, [0.5, -0.5].as_ptr(), 2, v.as_mut_ptr()) },
        StHapStatus::Ok
    );
    let mut end = [0.0; 2];
    assert_eq!(
        unsafe { sthap_flow_integrate(flow, [0.5, -0.5].as_ptr(), 2, 0.0, 0.4, end.as_mut_ptr()) },
        StHapStatus::Ok
    );
    let mut back = [0.0; 2];
    assert_eq!(
        unsafe { sthap_flow_integrate(flow, end.as_ptr(), 2, 0.4, 0.0, back.as_mut_ptr()) },
        StHapStatus::Ok
    );
    assert!((back[0] - 0.5).abs() < 1e-6 && (back[1] + 0.5).abs() < 1e-6);

    let st = unsafe { sthap_flow_integrate(flow, [0.5].as_ptr(), 1, 0.0, 0.4, end.as_mut_ptr()) };
    assert_eq!(st, StHapStatus::DimensionMismatch);

    let (mut u, mut y, mut d) = (0.0, [0.0], [0.0; 2]);
    let st = unsafe {
        sthap_change_coordinates(
            flow,
            [0.5].as_ptr(),
            1,
            0.0,
            [0.0].as_ptr(),
            [0.5, -0.5].as_ptr(),
            &mut u,
            y.as_mut_ptr(),
            d.as_mut_ptr(),
        )
    };
    assert_eq!(st, StHapStatus::Ok, "{}", last_error());
    assert_eq!((u, y[0]), (0.0, 0.0));
    assert!(d.iter().all(|v| v.is_finite()));
    unsafe { sthap_flow_free(flow) };
}

#[test]
fn config_errors_name_the_key() {
    let json = CString::new(r#"{"grid": {"extents": [-1, 1]}}"#).unwrap();
    let mut flow = ptr::null_mut();
    assert_eq!(
        unsafe { sthap_flow_from_json(json.as_ptr(), &mut flow) },
        StHapStatus::Config
    );
    assert!(flow.is_null());
    assert!(last_error().contains("grid.points"));
}

#[test]
fn graph_handle_lifecycle() {
    let json = CString::new(
        r#"[{"t": 0, "x": [0], "c": [[0]]}, {"t": 1, "x": [0], "c": [[0]]}, {"t": 2, "x": [0], "c": [[0]]}]"#,
    )
    .unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(
        unsafe { sthap_graph_from_events_json(json.as_ptr(), &mut g) },
        StHapStatus::Ok
    );
    assert_eq!(unsafe { sthap_graph_edge_count(g) }, 2);
    let mut edges = [0usize; 4];
    assert_eq!(
        unsafe { sthap_graph_edges(g, edges.as_mut_ptr(), 1) },
        StHapStatus::BufferTooSmall
    );
    assert_eq!(
        unsafe { sthap_graph_edges(g, edges.as_mut_ptr(), 2) },
        StHapStatus::Ok
    );
    assert_eq!(edges, [0, 1, 1, 2]);
    let mut dot = ptr::null_mut();
    assert_eq!(unsafe { sthap_graph_to_dot(g, &mut dot) }, StHapStatus::Ok);
    assert!(unsafe { CStr::from_ptr(dot) }
        .to_str()
        .unwrap()
        .contains("n1 -> n2;"));
    unsafe {
        sthap_string_free(dot);
        sthap_graph_free(g);
    }
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(sthap_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
