//! C ABI over `qthermo`.
//!
//! Every fallible call returns a [`QtStatus`]; on failure the message is
//! kept per thread and can be read with [`qt_last_error_message`]. Matrices
//! cross the boundary as row-major arrays of interleaved `(re, im)` doubles,
//! so a `d x d` matrix occupies `2 d^2` doubles. Handles are opaque and must be
//! released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use num_complex::Complex64 as C64;
use qthermo::cli::{parse_scenario, run_scenario, RunOptions, Scenario};
use qthermo::dynamics::{evolve, Stepping, Trajectory};
use qthermo::model::{BathSpec, Interaction, SystemSpec};
use qthermo::qmat::{herm_eig, partial_transpose, trace_distance, vn_entropy, CMat, DensityMatrix};
use qthermo::thermo::PairModel;
use qthermo::witness::concurrence;
use qthermo::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QtStatus {
    Ok = 0,
    InvalidArgument = 1,
    Config = 2,
    Numerical = 3,
    Io = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QtInteraction {
    None = 0,
    Ising = 1,
    Xy = 2,
    Xyz = 3,
}

/// Two qubits in a common bath: Hamiltonian, generator and Gibbs states.
pub struct QtSystem {
    model: PairModel,
}

pub struct QtTrajectory {
    traj: Trajectory,
}

pub struct QtScenario {
    scenario: Scenario,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> QtStatus {
    match e {
        _ if e.is_numerical() => QtStatus::Numerical,
        Error::Config(_) => QtStatus::Config,
        Error::Io(_) => QtStatus::Io,
        _ => QtStatus::InvalidArgument,
    }
}

/// Run `f`, turning errors and panics into a status plus the last-error message.
fn guard(f: impl FnOnce() -> Result<(), Error>) -> QtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QtStatus::Ok,
        Ok(Err(e)) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            QtStatus::Panic
        }
    }
}

fn null_arg(name: &str) -> Error {
    Error::InvalidParameter {
        field: name.to_string(),
        reason: "null pointer".into(),
    }
}

/// # Safety
/// `data` must point to `2 * dim * dim` readable doubles.
unsafe fn read_matrix(data: *const f64, dim: usize, name: &str) -> Result<CMat, Error> {
    if data.is_null() {
        return Err(null_arg(name));
    }
    let raw = std::slice::from_raw_parts(data, 2 * dim * dim);
    CMat::from_vec(raw.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect())
}

/// # Safety
/// `data` must point to `2 * dim * dim` readable doubles.
unsafe fn read_state(data: *const f64, dim: usize, name: &str) -> Result<DensityMatrix, Error> {
    DensityMatrix::new(read_matrix(data, dim, name)?).map_err(|e| Error::InvalidParameter {
        field: name.to_string(),
        reason: e.to_string(),
    })
}

/// # Safety
/// `out` must point to `2 * m.dim()^2` writable doubles.
unsafe fn write_matrix(m: &CMat, out: *mut f64) -> Result<(), Error> {
    if out.is_null() {
        return Err(null_arg("out"));
    }
    let dst = std::slice::from_raw_parts_mut(out, 2 * m.as_slice().len());
    for (pair, z) in dst.chunks_exact_mut(2).zip(m.as_slice()) {
        pair[0] = z.re;
        pair[1] = z.im;
    }
    Ok(())
}

/// # Safety
/// `out` must be null or point to a writable `T`.
unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Error> {
    if out.is_null() {
        return Err(null_arg("out"));
    }
    out.write(value);
    Ok(())
}

/// Copy the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length including the NUL,
/// or 0 when there is no message.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn qt_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes_with_nul();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len);
                ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n - 1) = 0;
            }
            bytes.len()
        }
    })
}

/// Build the pair model. `delta` only enters the XY and XYZ Hamiltonians.
///
/// # Safety
/// `out` must point to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn qt_system_new(
    omega1: f64,
    omega2: f64,
    interaction: QtInteraction,
    coupling: f64,
    delta: f64,
    temperature: f64,
    lambda: f64,
    out: *mut *mut QtSystem,
) -> QtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_arg("out"));
        }
        let interaction = match interaction {
            QtInteraction::None => Interaction::None,
            QtInteraction::Ising => Interaction::Ising,
            QtInteraction::Xy => Interaction::Xy,
            QtInteraction::Xyz => Interaction::Xyz,
        };
        let system = SystemSpec {
            omega1,
            omega2,
            interaction,
            coupling,
            delta,
        };
        let model = PairModel::new(&system, &BathSpec { temperature, lambda })?;
        *out = Box::into_raw(Box::new(QtSystem { model }));
        Ok(())
    })
}

/// # Safety
/// `sys` must be null or a handle from [`qt_system_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qt_system_free(sys: *mut QtSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Write the 4x4 Hamiltonian (32 doubles).
///
/// # Safety
/// `sys` must be a live handle; `out` must hold 32 doubles.
#[no_mangle]
pub unsafe extern "C" fn qt_system_hamiltonian(sys: *const QtSystem, out: *mut f64) -> QtStatus {
    guard(|| {
        let sys = sys.as_ref().ok_or_else(|| null_arg("sys"))?;
        write_matrix(&sys.model.h12, out)
    })
}

/// Write the 4x4 global Gibbs state (32 doubles).
///
/// # Safety
/// `sys` must be a live handle; `out` must hold 32 doubles.
#[no_mangle]
pub unsafe extern "C" fn qt_system_thermal_state(sys: *const QtSystem, out: *mut f64) -> QtStatus {
    guard(|| {
        let sys = sys.as_ref().ok_or_else(|| null_arg("sys"))?;
        write_matrix(&sys.model.thermal12, out)
    })
}

/// Evolve a two-qubit state under the global generator with fixed-step RK4.
///
/// # Safety
/// `sys` must be a live handle, `rho0` must hold 32 doubles and `out` must
/// point to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn qt_system_evolve(
    sys: *const QtSystem,
    rho0: *const f64,
    t_end: f64,
    dt: f64,
    record_every: usize,
    out: *mut *mut QtTrajectory,
) -> QtStatus {
    guard(|| {
        let sys = sys.as_ref().ok_or_else(|| null_arg("sys"))?;
        if out.is_null() {
            return Err(null_arg("out"));
        }
        let rho0 = read_state(rho0, 4, "rho0")?;
        let traj = evolve(&sys.model.gen12, &rho0, t_end, Stepping::new(dt, record_every))?;
        *out = Box::into_raw(Box::new(QtTrajectory { traj }));
        Ok(())
    })
}

/// Number of recorded states; 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qt_trajectory_len(traj: *const QtTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.traj.len())
}

/// Dimension of the recorded states; 0 for a null or empty handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qt_trajectory_dim(traj: *const QtTrajectory) -> usize {
    traj.as_ref().and_then(|t| t.traj.states.first()).map_or(0, |s| s.dim())
}

/// # Safety
/// `traj` must be a live handle and `out` a writable double.
#[no_mangle]
pub unsafe extern "C" fn qt_trajectory_time(traj: *const QtTrajectory, k: usize, out: *mut f64) -> QtStatus {
    guard(|| {
        let t = traj.as_ref().ok_or_else(|| null_arg("traj"))?;
        let time = *t.traj.times.get(k).ok_or_else(|| Error::InvalidParameter {
            field: "k".into(),
            reason: format!("index {k} out of range for {} samples", t.traj.len()),
        })?;
        write_out(out, time)
    })
}

/// Write recorded state `k` (`2 dim^2` doubles).
///
/// # Safety
/// `traj` must be a live handle and `out` must hold `2 dim^2` doubles.
#[no_mangle]
pub unsafe extern "C" fn qt_trajectory_state(traj: *const QtTrajectory, k: usize, out: *mut f64) -> QtStatus {
    guard(|| {
        let t = traj.as_ref().ok_or_else(|| null_arg("traj"))?;
        let state = t.traj.states.get(k).ok_or_else(|| Error::InvalidParameter {
            field: "k".into(),
            reason: format!("index {k} out of range for {} samples", t.traj.len()),
        })?;
        write_matrix(state, out)
    })
}

/// # Safety
/// `traj` must be null or a handle from [`qt_system_evolve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qt_trajectory_free(traj: *mut QtTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Parse and validate a JSON scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn qt_scenario_load(path: *const c_char, out: *mut *mut QtScenario) -> QtStatus {
    guard(|| {
        if path.is_null() {
            return Err(null_arg("path"));
        }
        if out.is_null() {
            return Err(null_arg("out"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Error::Config("path is not valid UTF-8".into()))?;
        let scenario = parse_scenario(Path::new(path))?;
        *out = Box::into_raw(Box::new(QtScenario { scenario }));
        Ok(())
    })
}

/// Run the scenario and write its artifacts under `out_dir`.
///
/// # Safety
/// `sc` must be a live handle and `out_dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qt_scenario_run(sc: *const QtScenario, out_dir: *const c_char) -> QtStatus {
    guard(|| {
        let sc = sc.as_ref().ok_or_else(|| null_arg("scenario"))?;
        if out_dir.is_null() {
            return Err(null_arg("out_dir"));
        }
        let dir = CStr::from_ptr(out_dir)
            .to_str()
            .map_err(|_| Error::Io("output directory is not valid UTF-8".into()))?;
        run_scenario(&sc.scenario, Path::new(dir), &RunOptions::default())?;
        Ok(())
    })
}

/// # Safety
/// `sc` must be null or a handle from [`qt_scenario_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qt_scenario_free(sc: *mut QtScenario) {
    if !sc.is_null() {
        drop(Box::from_raw(sc));
    }
}

/// Wootters concurrence of a two-qubit state (32 doubles).
///
/// # Safety
/// `rho` must hold 32 doubles and `out` must be a writable double.
#[no_mangle]
pub unsafe extern "C" fn qt_concurrence(rho: *const f64, out: *mut f64) -> QtStatus {
    guard(|| write_out(out, concurrence(&read_state(rho, 4, "rho")?)?))
}

/// Von Neumann entropy (natural log) of a `dim x dim` state.
///
/// # Safety
/// `rho` must hold `2 dim^2` doubles and `out` must be a writable double.
#[no_mangle]
pub unsafe extern "C" fn qt_vn_entropy(rho: *const f64, dim: usize, out: *mut f64) -> QtStatus {
    guard(|| write_out(out, vn_entropy(&read_state(rho, dim, "rho")?)))
}

/// Trace distance between two `dim x dim` states.
///
/// # Safety
/// `a` and `b` must each hold `2 dim^2` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qt_trace_distance(a: *const f64, b: *const f64, dim: usize, out: *mut f64) -> QtStatus {
    guard(|| {
        let a = read_state(a, dim, "a")?;
        let b = read_state(b, dim, "b")?;
        write_out(out, trace_distance(&a, &b))
    })
}

/// Smallest eigenvalue of the partial transpose on qubit 2; negative means
/// entangled.
///
/// # Safety
/// `rho` must hold 32 doubles and `out` must be a writable double.
#[no_mangle]
pub unsafe extern "C" fn qt_ppt_min_eigenvalue(rho: *const f64, out: *mut f64) -> QtStatus {
    guard(|| {
        let rho = read_state(rho, 4, "rho")?;
        let pt = partial_transpose(&rho, &[2, 2], 1)?;
        write_out(out, herm_eig(&pt)?.min())
    })
}
