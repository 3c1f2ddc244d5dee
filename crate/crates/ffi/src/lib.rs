//! C ABI over the spacetimehap library.
//!
//! Every fallible function returns a [`StHapStatus`]; on failure the message
//! is available from [`sthap_last_error_message`] on the same thread. Flows
//! and graphs are opaque handles released with their `_free` function.
//! Arrays are passed as pointer plus length; hap coordinates are flat,
//! particle-major (`c[p * dim + k]`).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;
use std::sync::Arc;

use spacetimehap::bohmengine::{Foliation, GuidingFlow};
use spacetimehap::config::parse_config;
use spacetimehap::framechange::{change_coordinates, ObserverFrame};
use spacetimehap::hapgeometry::{build_causal_graph, classify, CausalGraph, HapEvent};
use spacetimehap::relativity::{interval, Boost, FourVector, SeparationClass};
use spacetimehap::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StHapStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidFrame = 3,
    DimensionMismatch = 4,
    NonFinite = 5,
    OutOfDomain = 6,
    BoundaryContamination = 7,
    TimeOutOfRange = 8,
    NoRoot = 9,
    AmbiguousRoot = 10,
    NoConvergence = 11,
    Inconclusive = 12,
    Config = 13,
    Io = 14,
    BufferTooSmall = 15,
    Panic = 99,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StHapClass {
    TimelikeFuture = 0,
    TimelikePast = 1,
    Spacelike = 2,
    Haplike = 3,
}

/// Guiding flow built from a JSON run configuration.
pub struct StHapFlow {
    flow: Arc<GuidingFlow>,
}

/// Reduced causal graph of a set of events.
pub struct StHapGraph {
    graph: CausalGraph,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> StHapStatus {
    match e {
        Error::InvalidFrame { .. } => StHapStatus::InvalidFrame,
        Error::DimensionMismatch { .. } => StHapStatus::DimensionMismatch,
        Error::NonFinite(_) => StHapStatus::NonFinite,
        Error::InvalidArgument(_)
        | Error::Unsynchronized { .. }
        | Error::InsufficientSamples { .. } => StHapStatus::InvalidArgument,
        Error::OutOfDomain { .. } => StHapStatus::OutOfDomain,
        Error::BoundaryContamination { .. } => StHapStatus::BoundaryContamination,
        Error::TimeOutOfRange { .. } => StHapStatus::TimeOutOfRange,
        Error::NoRoot { .. } => StHapStatus::NoRoot,
        Error::AmbiguousRoot { .. } => StHapStatus::AmbiguousRoot,
        Error::NoConvergence(_) => StHapStatus::NoConvergence,
        Error::InconclusiveFork { .. } => StHapStatus::Inconclusive,
        Error::Config(_) | Error::Json(_) => StHapStatus::Config,
        Error::Io(_) => StHapStatus::Io,
    }
}

enum Fail {
    Status(StHapStatus, String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn null(what: &str) -> Fail {
    Fail::Status(StHapStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, recording any error or panic for [`sthap_last_error_message`].
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> StHapStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => StHapStatus::Ok,
        Ok(Err(Fail::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            StHapStatus::Panic
        }
    }
}

/// # Safety
/// `p` must be null or point to `len` readable values.
unsafe fn input<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

/// # Safety
/// `p` must be null or point to `len` writable values.
unsafe fn output<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

/// # Safety
/// `s` must be null or a NUL-terminated string.
unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Fail::Status(StHapStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn event(
    t: f64,
    x: *const f64,
    c: *const f64,
    dim: usize,
    particles: usize,
) -> Result<HapEvent, Fail> {
    if dim == 0 || particles == 0 {
        return Err(Fail::Status(
            StHapStatus::InvalidArgument,
            "dim and particles must be positive".into(),
        ));
    }
    let x = input(x, dim, "x")?.to_vec();
    let c = input(c, dim * particles, "c")?;
    Ok(HapEvent::new(
        t,
        x,
        c.chunks(dim).map(<[f64]>::to_vec).collect(),
    )?)
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sthap_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sthap_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sthap_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Squared Minkowski norm `t^2 - |x|^2`.
///
/// # Safety
/// `x` must point to `dim` values and `out` to one.
#[no_mangle]
pub unsafe extern "C" fn sthap_interval(
    t: f64,
    x: *const f64,
    dim: usize,
    out: *mut f64,
) -> StHapStatus {
    guard(|| {
        let w = FourVector::new(t, input(x, dim, "x")?.to_vec())?;
        *output(out, 1, "out")?.first_mut().expect("one slot") = interval(&w);
        Ok(())
    })
}

/// Boosts `(t, x)` into the frame moving with velocity `v`.
///
/// # Safety
/// `v`, `x` and `out_x` must point to `dim` values and `out_t` to one.
#[no_mangle]
pub unsafe extern "C" fn sthap_boost(
    v: *const f64,
    dim: usize,
    t: f64,
    x: *const f64,
    out_t: *mut f64,
    out_x: *mut f64,
) -> StHapStatus {
    guard(|| {
        let b = Boost::new(input(v, dim, "v")?.to_vec())?;
        let w = b.apply(&FourVector::new(t, input(x, dim, "x")?.to_vec())?)?;
        output(out_t, 1, "out_t")?[0] = w.t;
        output(out_x, dim, "out_x")?.copy_from_slice(&w.x);
        Ok(())
    })
}

/// Separation class of two spacetimehap events.
///
/// # Safety
/// `x1`, `x2` must point to `dim` values, `c1`, `c2` to `dim * particles`
/// values and `out` to one class.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn sthap_classify(
    t1: f64,
    x1: *const f64,
    c1: *const f64,
    t2: f64,
    x2: *const f64,
    c2: *const f64,
    dim: usize,
    particles: usize,
    out: *mut StHapClass,
) -> StHapStatus {
    guard(|| {
        let a = event(t1, x1, c1, dim, particles)?;
        let b = event(t2, x2, c2, dim, particles)?;
        output(out, 1, "out")?[0] = match classify(&a, &b)? {
            SeparationClass::TimelikeFutureDirected => StHapClass::TimelikeFuture,
            SeparationClass::TimelikePastDirected => StHapClass::TimelikePast,
            SeparationClass::Spacelike => StHapClass::Spacelike,
            SeparationClass::Haplike => StHapClass::Haplike,
        };
        Ok(())
    })
}

/// Builds a flow from a run configuration with `grid`, `state`, and
/// optionally `engine` and `potential`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sthap_flow_from_json(
    json: *const c_char,
    out: *mut *mut StHapFlow,
) -> StHapStatus {
    guard(|| {
        let slot = output(out, 1, "out")?;
        slot[0] = ptr::null_mut();
        let cfg = parse_config(text(json, "json")?)?;
        let flow = Arc::new(cfg.flow()?);
        slot[0] = Box::into_raw(Box::new(StHapFlow { flow }));
        Ok(())
    })
}

/// # Safety
/// `flow` must come from [`sthap_flow_from_json`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sthap_flow_free(flow: *mut StHapFlow) {
    if !flow.is_null() {
        drop(Box::from_raw(flow));
    }
}

/// Number of hap coordinates, or 0 for a null handle.
///
/// # Safety
/// `flow` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sthap_flow_hap_dim(flow: *const StHapFlow) -> usize {
    flow.as_ref().map_or(0, |f| f.flow.hap_dim())
}

/// Guiding velocity at `point` and time `t`.
///
/// # Safety
/// `point` and `out` must point to `len` values.
#[no_mangle]
pub unsafe extern "C" fn sthap_flow_velocity(
    flow: *const StHapFlow,
    t: f64,
    point: *const f64,
    len: usize,
    out: *mut f64,
) -> StHapStatus {
    guard(|| {
        let f = flow.as_ref().ok_or_else(|| null("flow"))?;
        let v = f.flow.field_at(t)?.velocity(input(point, len, "point")?)?;
        output(out, len, "out")?.copy_from_slice(&v);
        Ok(())
    })
}

/// Transports `start` from `t0` to `t1` along the flow.
///
/// # Safety
/// `start` and `out_end` must point to `len` values.
#[no_mangle]
pub unsafe extern "C" fn sthap_flow_integrate(
    flow: *const StHapFlow,
    start: *const f64,
    len: usize,
    t0: f64,
    t1: f64,
    out_end: *mut f64,
) -> StHapStatus {
    guard(|| {
        let f = flow.as_ref().ok_or_else(|| null("flow"))?;
        let start = input(start, len, "start")?;
        if start.len() != f.flow.hap_dim() {
            return Err(Fail::Status(
                StHapStatus::DimensionMismatch,
                format!(
                    "start point has {} coordinates, the flow {}",
                    start.len(),
                    f.flow.hap_dim()
                ),
            ));
        }
        let p = f.flow.integrate_trajectory(start, t0, t1)?;
        output(out_end, len, "out_end")?.copy_from_slice(p.last_point());
        Ok(())
    })
}

/// Coordinates `(u, y, d)` of the event `(t, x, c)` for an observer moving
/// with velocity `v` whose hap coordinate follows the flow.
///
/// # Safety
/// `v`, `x` and `out_y` must point to `dim` values; `c` and `out_d` to the
/// flow's hap dimension; `out_u` to one value.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn sthap_change_coordinates(
    flow: *const StHapFlow,
    v: *const f64,
    dim: usize,
    t: f64,
    x: *const f64,
    c: *const f64,
    out_u: *mut f64,
    out_y: *mut f64,
    out_d: *mut f64,
) -> StHapStatus {
    guard(|| {
        let f = flow.as_ref().ok_or_else(|| null("flow"))?;
        let hap = f.flow.hap_dim();
        if dim == 0 || hap % dim != 0 {
            return Err(Fail::Status(
                StHapStatus::DimensionMismatch,
                format!("hap dimension {hap} is not a multiple of the space dimension {dim}"),
            ));
        }
        let e = event(t, x, c, dim, hap / dim)?;
        let frame = ObserverFrame::new(Boost::new(input(v, dim, "v")?.to_vec())?, f.flow.clone());
        let fc = change_coordinates(&frame, &e)?;
        output(out_u, 1, "out_u")?[0] = fc.u_e;
        output(out_y, dim, "out_y")?.copy_from_slice(&fc.y_e);
        let flat: Vec<f64> = fc.d_e.concat();
        output(out_d, hap, "out_d")?.copy_from_slice(&flat);
        Ok(())
    })
}

/// Builds the reduced causal graph of the events in a JSON array of
/// `{"t": .., "x": [..], "c": [[..], ..]}` objects.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sthap_graph_from_events_json(
    json: *const c_char,
    out: *mut *mut StHapGraph,
) -> StHapStatus {
    guard(|| {
        let slot = output(out, 1, "out")?;
        slot[0] = ptr::null_mut();
        let events: Vec<HapEvent> =
            serde_json::from_str(text(json, "json")?).map_err(Error::from)?;
        let graph = build_causal_graph(&events)?;
        slot[0] = Box::into_raw(Box::new(StHapGraph { graph }));
        Ok(())
    })
}

/// # Safety
/// `graph` must come from [`sthap_graph_from_events_json`] and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn sthap_graph_free(graph: *mut StHapGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Number of edges, or 0 for a null handle.
///
/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sthap_graph_edge_count(graph: *const StHapGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.graph.edges.len())
}

/// Copies the sorted edges as `(src, dst)` pairs into `out`, which holds
/// `capacity` pairs (`2 * capacity` values).
///
/// # Safety
/// `out` must point to `2 * capacity` writable values.
#[no_mangle]
pub unsafe extern "C" fn sthap_graph_edges(
    graph: *const StHapGraph,
    out: *mut usize,
    capacity: usize,
) -> StHapStatus {
    guard(|| {
        let g = graph.as_ref().ok_or_else(|| null("graph"))?;
        let edges = &g.graph.edges;
        if capacity < edges.len() {
            return Err(Fail::Status(
                StHapStatus::BufferTooSmall,
                format!("{} edges do not fit in {capacity}", edges.len()),
            ));
        }
        let out = output(out, 2 * edges.len(), "out")?;
        for (k, (a, b)) in edges.iter().enumerate() {
            out[2 * k] = *a;
            out[2 * k + 1] = *b;
        }
        Ok(())
    })
}

/// Graphviz rendering; free the result with [`sthap_string_free`].
///
/// # Safety
/// `graph` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sthap_graph_to_dot(
    graph: *const StHapGraph,
    out: *mut *mut c_char,
) -> StHapStatus {
    guard(|| {
        let slot = output(out, 1, "out")?;
        slot[0] = ptr::null_mut();
        let g = graph.as_ref().ok_or_else(|| null("graph"))?;
        let s = CString::new(g.graph.to_dot())
            .map_err(|e| Fail::Status(StHapStatus::InvalidArgument, e.to_string()))?;
        slot[0] = s.into_raw();
        Ok(())
    })
}
