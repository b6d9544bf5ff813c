//! C ABI over `lvswitch`.
//!
//! A system handle is created from the same JSON configuration the command
//! line tool reads and released with [`lvs_system_free`]. Every fallible call
//! returns an [`LvsStatus`]; on failure the message is available from
//! [`lvs_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use lvswitch::cli::{self, Command};
use lvswitch::config::RunConfig;
use lvswitch::invasion::{estimate_invasion_rate, EstimatorConfig};
use lvswitch::model::{FaceId, Prey, Species, SwitchedSystem};
use lvswitch::sim::{simulate, SimConfig};
use lvswitch::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LvsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Param = 3,
    Structural = 4,
    Precondition = 5,
    Singular = 6,
    Numeric = 7,
    Io = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LvsFace {
    Prey1Axis = 0,
    Prey2Axis = 1,
    Prey1Prey2 = 2,
    Prey1Predator = 3,
    Prey2Predator = 4,
    Interior = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LvsSpecies {
    Prey1 = 1,
    Prey2 = 2,
    Predator = 3,
}

impl From<LvsFace> for FaceId {
    fn from(f: LvsFace) -> Self {
        match f {
            LvsFace::Prey1Axis => FaceId::Prey1Axis,
            LvsFace::Prey2Axis => FaceId::Prey2Axis,
            LvsFace::Prey1Prey2 => FaceId::Prey1Prey2,
            LvsFace::Prey1Predator => FaceId::Prey1Predator,
            LvsFace::Prey2Predator => FaceId::Prey2Predator,
            LvsFace::Interior => FaceId::Interior,
        }
    }
}

impl From<LvsSpecies> for Species {
    fn from(s: LvsSpecies) -> Self {
        match s {
            LvsSpecies::Prey1 => Species::Prey1,
            LvsSpecies::Prey2 => Species::Prey2,
            LvsSpecies::Predator => Species::Predator,
        }
    }
}

/// Opaque system handle.
pub struct LvsSystem {
    config: RunConfig,
    sys: SwitchedSystem,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> LvsStatus {
    match e.root() {
        Error::Param(_) | Error::EnvOutOfRange { .. } => LvsStatus::Param,
        Error::Structural(_) => LvsStatus::Structural,
        Error::Precondition(_) => LvsStatus::Precondition,
        Error::Singular(_) => LvsStatus::Singular,
        Error::NonFinite { .. } | Error::ZeroDensity { .. } => LvsStatus::Numeric,
        Error::Io(_) => LvsStatus::Io,
        Error::Replicate { .. } => LvsStatus::Numeric,
    }
}

struct Fail(LvsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> LvsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LvsStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            LvsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(LvsStatus::NullPointer, format!("{what} is NULL")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(LvsStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a>(h: *const LvsSystem) -> Result<&'a LvsSystem, Fail> {
    h.as_ref().ok_or_else(|| Fail(LvsStatus::NullPointer, "system handle is NULL".into()))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| Fail(LvsStatus::NullPointer, format!("{what} is NULL")))
}

fn env_arg(env0: i64, k: usize) -> Result<Option<usize>, Fail> {
    match env0 {
        e if e < 0 => Ok(None),
        e if (e as usize) < k => Ok(Some(e as usize)),
        e => Err(Fail(LvsStatus::Param, format!("environment {e} out of range for {k} environments"))),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lvs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy of the last error message on this thread, or NULL if none. Release
/// with [`lvs_string_free`].
#[no_mangle]
pub extern "C" fn lvs_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |c| c.clone().into_raw()))
}

/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn lvs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a JSON run configuration (at least `model` and `switching`).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lvs_system_from_json(json: *const c_char, out: *mut *mut LvsSystem) -> LvsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let mut config = RunConfig::from_json(str_arg(json, "json")?)?;
        config.resolve();
        let sys = config.system()?;
        *out = Box::into_raw(Box::new(LvsSystem { config, sys }));
        Ok(())
    })
}

/// # Safety
/// `h` must come from [`lvs_system_from_json`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn lvs_system_free(h: *mut LvsSystem) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// # Safety
/// `h` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lvs_system_n_envs(h: *const LvsSystem) -> usize {
    h.as_ref().map_or(0, |s| s.sys.params.n_envs())
}

/// Writes the stationary distribution into `out[0..len]`; `len` must be at
/// least the number of environments.
///
/// # Safety
/// `h` must be a live handle and `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lvs_stationary(h: *const LvsSystem, out: *mut f64, len: usize) -> LvsStatus {
    guard(|| {
        let s = handle(h)?;
        let pi = s.sys.stationary()?;
        if out.is_null() {
            return Err(Fail(LvsStatus::NullPointer, "out is NULL".into()));
        }
        if len < pi.len() {
            return Err(Fail(LvsStatus::BufferTooSmall, format!("need {} entries", pi.len())));
        }
        std::slice::from_raw_parts_mut(out, pi.len()).copy_from_slice(&pi);
        Ok(())
    })
}

/// Drift `x_i f_i(x, env)` with a 0-based environment.
///
/// # Safety
/// `x` and `out` must point to 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn lvs_drift(h: *const LvsSystem, x: *const f64, env: usize, out: *mut f64) -> LvsStatus {
    guard(|| {
        let s = handle(h)?;
        if x.is_null() || out.is_null() {
            return Err(Fail(LvsStatus::NullPointer, "x or out is NULL".into()));
        }
        let xv: [f64; 3] = std::slice::from_raw_parts(x, 3).try_into().expect("length 3");
        let v = s.sys.params.drift(&xv, env)?;
        std::slice::from_raw_parts_mut(out, 3).copy_from_slice(&v);
        Ok(())
    })
}

/// Per-capita rates `f_i(x, env)` with a 0-based environment.
///
/// # Safety
/// `x` and `out` must point to 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn lvs_per_capita(h: *const LvsSystem, x: *const f64, env: usize, out: *mut f64) -> LvsStatus {
    guard(|| {
        let s = handle(h)?;
        if x.is_null() || out.is_null() {
            return Err(Fail(LvsStatus::NullPointer, "x or out is NULL".into()));
        }
        let xv: [f64; 3] = std::slice::from_raw_parts(x, 3).try_into().expect("length 3");
        let v = s.sys.params.per_capita(&xv, env)?;
        std::slice::from_raw_parts_mut(out, 3).copy_from_slice(&v);
        Ok(())
    })
}

fn prey_of(s: LvsSpecies) -> Result<Prey, Fail> {
    match s {
        LvsSpecies::Prey1 => Ok(Prey::One),
        LvsSpecies::Prey2 => Ok(Prey::Two),
        LvsSpecies::Predator => Err(Fail(LvsStatus::Param, "invader must be a prey species".into())),
    }
}

/// Closed-form invasion rate of prey `invader` against the other prey's
/// predator-prey equilibrium in the fixed 0-based environment `env`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lvs_fixed_env_invasion_rate(
    h: *const LvsSystem,
    env: usize,
    invader: LvsSpecies,
    out: *mut f64,
) -> LvsStatus {
    guard(|| {
        let s = handle(h)?;
        *out_ref(out, "out")? = s.sys.params.fixed_env_invasion_rate(env, prey_of(invader)?)?;
        Ok(())
    })
}

/// π-averaged closed forms for `λ2(μ13)` and `λ1(μ23)`.
///
/// # Safety
/// Both outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn lvs_averaged_invasion_rates(
    h: *const LvsSystem,
    lambda2_mu13: *mut f64,
    lambda1_mu23: *mut f64,
) -> LvsStatus {
    guard(|| {
        let s = handle(h)?;
        let a = s.sys.params.averaged_invasion_rates(&s.sys.stationary()?)?;
        *out_ref(lambda2_mu13, "lambda2_mu13")? = a.lambda2_mu13;
        *out_ref(lambda1_mu23, "lambda1_mu23")? = a.lambda1_mu23;
        Ok(())
    })
}

/// Simulation-based invasion rate of `invader` on `face` over `[0, t_end]`
/// with the configured step size, burn-in fraction and batch count.
///
/// # Safety
/// Outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn lvs_estimate_invasion_rate(
    h: *const LvsSystem,
    face: LvsFace,
    invader: LvsSpecies,
    t_end: f64,
    seed: u64,
    value: *mut f64,
    std_error: *mut f64,
) -> LvsStatus {
    guard(|| {
        let s = handle(h)?;
        let mut sim: SimConfig = s.config.sim_config(t_end)?;
        sim.seed = seed;
        sim.face = face.into();
        let mut cfg = EstimatorConfig::new(sim);
        cfg.n_batches = s.config.invasion.n_batches;
        let est = estimate_invasion_rate(&s.sys, invader.into(), &cfg)?;
        *out_ref(value, "value")? = est.value;
        *out_ref(std_error, "std_error")? = est.std_error;
        Ok(())
    })
}

/// Simulates from `x0` (on any face) and writes the state at `t_end`.
/// `env0 < 0` draws the initial environment from π.
///
/// # Safety
/// `x0` and `out` must point to 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn lvs_simulate_final(
    h: *const LvsSystem,
    x0: *const f64,
    env0: i64,
    t_end: f64,
    seed: u64,
    out: *mut f64,
) -> LvsStatus {
    guard(|| {
        let s = handle(h)?;
        if x0.is_null() || out.is_null() {
            return Err(Fail(LvsStatus::NullPointer, "x0 or out is NULL".into()));
        }
        let x: [f64; 3] = std::slice::from_raw_parts(x0, 3).try_into().expect("length 3");
        let face = FaceId::of_state(&x)
            .ok_or_else(|| Fail(LvsStatus::Param, format!("x0 {x:?} is not on a supported face")))?;
        let mut sim = s.config.sim_config(t_end)?.with_face(face).with_sample_every(t_end);
        sim.seed = seed;
        let traj = simulate(&s.sys, x, env_arg(env0, s.sys.params.n_envs())?, &sim, &mut ())?;
        std::slice::from_raw_parts_mut(out, 3).copy_from_slice(&traj.last().x);
        Ok(())
    })
}

/// Runs a command-line subcommand (`simulate`, `invade`, `classify`,
/// `density`, `bracket` or `sweep`) with the handle's configuration, writing
/// into `out_dir`. `threads = 0` uses the default pool.
///
/// # Safety
/// `command` and `out_dir` must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn lvs_run(
    h: *const LvsSystem,
    command: *const c_char,
    out_dir: *const c_char,
    threads: usize,
) -> LvsStatus {
    guard(|| {
        let s = handle(h)?;
        let cmd = match str_arg(command, "command")? {
            "simulate" => Command::Simulate,
            "invade" => Command::Invade,
            "classify" => Command::Classify,
            "density" => Command::Density,
            "bracket" => Command::Bracket,
            "sweep" => Command::Sweep,
            other => return Err(Fail(LvsStatus::Param, format!("unknown command {other:?}"))),
        };
        let out = Path::new(str_arg(out_dir, "out_dir")?);
        cli::run(cmd, &s.config, out, (threads > 0).then_some(threads))?;
        Ok(())
    })
}
