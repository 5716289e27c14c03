//! C ABI for `confcap`.
//!
//! Objects cross the boundary as opaque handles created by `cc_*_new` or
//! `cc_*_build` style functions and released with the matching `cc_*_free`.
//! Every fallible call returns a [`CcStatus`]; on failure a description is
//! kept per thread and can be read with [`cc_last_error`]. Panics never
//! unwind into C: they are caught and reported as `CC_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use confcap::experiment::{run, ExperimentConfig};
use confcap::mesh::{read_mesh, write_mesh};
use confcap::oracle::{radial_capacity, RadialCondenserSpec};
use confcap::{
    build_mesh, CapError, CapacityResult, Condenser, ConformalFactor, ConformalStructure, DomainSpec, NodeSet,
    SimplicialMesh, SolverConfig,
};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidMesh = 3,
    Generation = 4,
    Io = 5,
    Parse = 6,
    CheckFailed = 7,
    Utf8 = 8,
    Panic = 9,
}

/// Opaque simplicial mesh.
pub struct CcMesh {
    inner: SimplicialMesh,
}

/// Opaque capacity result.
pub struct CcResult {
    inner: CapacityResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &CapError) -> CcStatus {
    match err {
        CapError::Generation(_) => CcStatus::Generation,
        CapError::InvalidMesh(_) => CcStatus::InvalidMesh,
        CapError::Argument(_) => CcStatus::InvalidArgument,
        CapError::Io(_) => CcStatus::Io,
        CapError::Parse { .. } => CcStatus::Parse,
        CapError::CheckFailed(_) => CcStatus::CheckFailed,
    }
}

struct Failure(CcStatus, String);

impl From<CapError> for Failure {
    fn from(e: CapError) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure(CcStatus::Io, e.to_string())
    }
}

/// Runs `body`, translating errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> CcStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => CcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            CcStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CcStatus::Utf8, format!("{what} is not valid UTF-8")))
}

unsafe fn opt_json<T: serde::de::DeserializeOwned + Default>(p: *const c_char, what: &str) -> Result<T, Failure> {
    if p.is_null() {
        return Ok(T::default());
    }
    let text = str_arg(p, what)?;
    serde_json::from_str(text).map_err(|e| Failure(CcStatus::Parse, format!("{what}: {e}")))
}

unsafe fn index_slice<'a>(p: *const usize, len: usize, what: &str) -> Result<&'a [usize], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next `cc_*` call on the same thread.
#[no_mangle]
pub extern "C" fn cc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Meshes a domain described by a JSON `DomainSpec`.
///
/// # Safety
/// `spec_json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_mesh_build(spec_json: *const c_char, out: *mut *mut CcMesh) -> CcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = str_arg(spec_json, "spec_json")?;
        let spec: DomainSpec =
            serde_json::from_str(text).map_err(|e| Failure(CcStatus::Parse, format!("spec_json: {e}")))?;
        let mesh = build_mesh(&spec)?;
        *out = Box::into_raw(Box::new(CcMesh { inner: mesh }));
        Ok(())
    })
}

/// Reads a mesh in the text format.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_mesh_read(path: *const c_char, out: *mut *mut CcMesh) -> CcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = str_arg(path, "path")?;
        let mesh = read_mesh(BufReader::new(File::open(path)?))?;
        *out = Box::into_raw(Box::new(CcMesh { inner: mesh }));
        Ok(())
    })
}

/// Writes a mesh in the text format.
///
/// # Safety
/// `mesh` must come from this library and `path` be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cc_mesh_write(mesh: *const CcMesh, path: *const c_char) -> CcStatus {
    guard(|| {
        let mesh = mesh.as_ref().ok_or_else(|| null("mesh"))?;
        let path = str_arg(path, "path")?;
        write_mesh(&mesh.inner, BufWriter::new(File::create(path)?))?;
        Ok(())
    })
}

/// # Safety
/// `mesh` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn cc_mesh_dim(mesh: *const CcMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.inner.dim())
}

/// # Safety
/// `mesh` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn cc_mesh_num_vertices(mesh: *const CcMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.inner.num_vertices())
}

/// # Safety
/// `mesh` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn cc_mesh_num_simplices(mesh: *const CcMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.inner.num_simplices())
}

/// Copies the coordinates of vertex `index` into `coords[0..dim]`.
///
/// # Safety
/// `coords` must have room for `cc_mesh_dim(mesh)` doubles.
#[no_mangle]
pub unsafe extern "C" fn cc_mesh_vertex(mesh: *const CcMesh, index: usize, coords: *mut f64) -> CcStatus {
    guard(|| {
        let mesh = mesh.as_ref().ok_or_else(|| null("mesh"))?;
        if coords.is_null() {
            return Err(null("coords"));
        }
        if index >= mesh.inner.num_vertices() {
            return Err(Failure(
                CcStatus::InvalidArgument,
                format!("vertex {index} is out of range"),
            ));
        }
        let v = mesh.inner.vertex(index);
        std::slice::from_raw_parts_mut(coords, v.len()).copy_from_slice(v);
        Ok(())
    })
}

/// Releases a mesh; null is ignored.
///
/// # Safety
/// `mesh` must be null or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cc_mesh_free(mesh: *mut CcMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Solves the condenser (`plate0` = 0, `plate1` = 1) on `mesh`.
///
/// `conformal_json` (a `ConformalFactor`) and `solver_json` (a
/// `SolverConfig`) may be null for the flat structure and default solver.
///
/// # Safety
/// Index arrays must hold `n0` and `n1` entries; strings must be
/// NUL-terminated; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_solve_condenser(
    mesh: *const CcMesh,
    plate0: *const usize,
    n0: usize,
    plate1: *const usize,
    n1: usize,
    conformal_json: *const c_char,
    solver_json: *const c_char,
    out: *mut *mut CcResult,
) -> CcStatus {
    guard(|| {
        let mesh = mesh.as_ref().ok_or_else(|| null("mesh"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let p0: NodeSet = index_slice(plate0, n0, "plate0")?.iter().copied().collect();
        let p1: NodeSet = index_slice(plate1, n1, "plate1")?.iter().copied().collect();
        let factor: ConformalFactor = opt_json(conformal_json, "conformal_json")?;
        let config: SolverConfig = opt_json(solver_json, "solver_json")?;
        let structure = ConformalStructure::from_factor(&factor);
        let result = confcap::solve_condenser(&mesh.inner, &structure, &Condenser::new(p0, p1)?, &config)?;
        *out = Box::into_raw(Box::new(CcResult { inner: result }));
        Ok(())
    })
}

/// # Safety
/// `result` must come from this library; `value` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_result_value(result: *const CcResult, value: *mut f64) -> CcStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        *value.as_mut().ok_or_else(|| null("value"))? = r.inner.value;
        Ok(())
    })
}

/// 1 when every continuation stage converged, 0 otherwise (and for null).
///
/// # Safety
/// `result` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn cc_result_converged(result: *const CcResult) -> c_int {
    result.as_ref().map_or(0, |r| c_int::from(r.inner.converged()))
}

/// 1 when the witness meets the plate and `[0, 1]` constraints exactly.
///
/// # Safety
/// `result` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn cc_result_admissible(result: *const CcResult) -> c_int {
    result.as_ref().map_or(0, |r| c_int::from(r.inner.admissible))
}

/// Number of nodal values in the witness field.
///
/// # Safety
/// `result` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn cc_result_field_len(result: *const CcResult) -> usize {
    result.as_ref().map_or(0, |r| r.inner.field.len())
}

/// Copies the witness field into `buf`, which must hold `len` doubles with
/// `len == cc_result_field_len(result)`.
///
/// # Safety
/// `buf` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn cc_result_field(result: *const CcResult, buf: *mut f64, len: usize) -> CcStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let values = &r.inner.field.values;
        if len != values.len() {
            return Err(Failure(
                CcStatus::InvalidArgument,
                format!("buffer holds {len} values, field has {}", values.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(values);
        Ok(())
    })
}

/// Releases a result; null is ignored.
///
/// # Safety
/// `result` must be null or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cc_result_free(result: *mut CcResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Closed-form capacity of the spherical ring `r_inner < |x| < r_outer` in R^n.
///
/// # Safety
/// `value` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_radial_capacity(n: usize, r_inner: f64, r_outer: f64, value: *mut f64) -> CcStatus {
    guard(|| {
        let spec = RadialCondenserSpec::new(n, r_inner, r_outer)?;
        *value.as_mut().ok_or_else(|| null("value"))? = radial_capacity(&spec);
        Ok(())
    })
}

/// Runs a JSON experiment configuration and writes its report files into
/// `out_dir`. `passed` receives 1 when every check passed.
///
/// # Safety
/// Strings must be NUL-terminated; `passed` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_run_experiment(
    config_json: *const c_char,
    out_dir: *const c_char,
    passed: *mut c_int,
) -> CcStatus {
    guard(|| {
        let passed = passed.as_mut().ok_or_else(|| null("passed"))?;
        let config = ExperimentConfig::from_json(str_arg(config_json, "config_json")?)?;
        let dir = str_arg(out_dir, "out_dir")?;
        let outcome = run(&config)?;
        outcome.write_to(Path::new(dir))?;
        *passed = c_int::from(outcome.passed());
        Ok(())
    })
}
