//! C ABI over the teleoperation core.
//!
//! Every fallible call returns a [`TeleopStatus`]; on failure the message is
//! kept per thread and can be copied out with [`teleop_last_error`]. Handles
//! are opaque pointers owned by the caller and released with their `_free`
//! function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use thiserror::Error;

use teleop_core::fuzzy::{adapt_speed, avoid_obstacles, NetworkCondition};
use teleop_core::sensors::{SonarArray, SONAR_COUNT};
use teleop_core::sim::{parse_script, SimConfig, SimError, Simulation};
use teleop_core::wire::{checksum_16, decode_telemetry, DecodeErrorKind, DriveMode, TelemetryFrame};
use teleop_core::world::generate::scattered_room;
use teleop_core::world::{Scenario, WorldError};
use teleop_core::Twist;

/// Sonar transducers per frame.
pub const TELEOP_SONAR_COUNT: usize = 8;
const _: () = assert!(TELEOP_SONAR_COUNT == SONAR_COUNT);

/// Result codes. Zero is success, everything else is negative.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TeleopStatus {
    Ok = 0,
    NullPointer = -1,
    InvalidArgument = -2,
    ChecksumMismatch = -3,
    Framing = -4,
    FieldParse = -5,
    FieldRange = -6,
    Parse = -7,
    Simulation = -8,
    BufferTooSmall = -9,
    Panic = -10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TeleopMode {
    Manual = 0,
    Assisted = 1,
    AutonomySafepoint = 2,
}

impl From<DriveMode> for TeleopMode {
    fn from(m: DriveMode) -> Self {
        match m {
            DriveMode::Manual => TeleopMode::Manual,
            DriveMode::Assisted => TeleopMode::Assisted,
            DriveMode::AutonomySafepoint => TeleopMode::AutonomySafepoint,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TeleopPose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

/// Fixed-size view of a telemetry frame. Missing echoes are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TeleopTelemetry {
    pub seq: u32,
    pub stamp_ms: u64,
    pub battery_v: f64,
    pub pose: TeleopPose,
    pub v: f64,
    pub w: f64,
    pub compass_deg: f64,
    pub latitude: f64,
    pub longitude: f64,
    pub sonar: [f64; TELEOP_SONAR_COUNT],
    pub laser_count: u32,
}

impl From<&TelemetryFrame> for TeleopTelemetry {
    fn from(f: &TelemetryFrame) -> Self {
        Self {
            seq: f.seq,
            stamp_ms: f.stamp_ms,
            battery_v: f.battery_v,
            pose: TeleopPose {
                x: f.pose.x,
                y: f.pose.y,
                theta: f.pose.theta,
            },
            v: f.speed.v,
            w: f.speed.w,
            compass_deg: f.compass_deg,
            latitude: f.gps.latitude,
            longitude: f.gps.longitude,
            sonar: f.sonar.ranges.map(|r| r.unwrap_or(f64::NAN)),
            laser_count: f.laser.len() as u32,
        }
    }
}

/// Opaque simulation handle.
pub struct TeleopSim {
    inner: Simulation,
}

#[derive(Debug, Error)]
enum FfiError {
    #[error("null pointer argument `{0}`")]
    Null(&'static str),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Decode(#[from] teleop_core::wire::DecodeError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("buffer holds {have} values, {need} needed")]
    TooSmall { have: usize, need: usize },
}

impl FfiError {
    fn status(&self) -> TeleopStatus {
        match self {
            FfiError::Null(_) => TeleopStatus::NullPointer,
            FfiError::Invalid(_) => TeleopStatus::InvalidArgument,
            FfiError::Decode(e) => match e.kind() {
                DecodeErrorKind::ChecksumMismatch => TeleopStatus::ChecksumMismatch,
                DecodeErrorKind::Framing => TeleopStatus::Framing,
                DecodeErrorKind::FieldParse => TeleopStatus::FieldParse,
                DecodeErrorKind::FieldRange => TeleopStatus::FieldRange,
            },
            FfiError::World(_) => TeleopStatus::Parse,
            FfiError::Sim(SimError::Script { .. }) => TeleopStatus::Parse,
            FfiError::Sim(_) => TeleopStatus::Simulation,
            FfiError::TooSmall { .. } => TeleopStatus::BufferTooSmall,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

/// Runs `f`, recording any error or panic for [`teleop_last_error`].
fn guard(f: impl FnOnce() -> Result<(), FfiError>) -> TeleopStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            TeleopStatus::Ok
        }
        Ok(Err(e)) => {
            set_error(e.to_string());
            e.status()
        }
        Err(_) => {
            set_error("internal panic".into());
            TeleopStatus::Panic
        }
    }
}

unsafe fn bytes<'a>(data: *const u8, len: usize) -> Result<&'a [u8], FfiError> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(FfiError::Null("data"));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn optional_str<'a>(s: *const c_char, name: &'static str) -> Result<Option<&'a str>, FfiError> {
    if s.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(s)
        .to_str()
        .map(Some)
        .map_err(|_| FfiError::Invalid(format!("`{name}` is not UTF-8")))
}

unsafe fn out<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, FfiError> {
    p.as_mut().ok_or(FfiError::Null(name))
}

unsafe fn sim<'a>(p: *mut TeleopSim) -> Result<&'a mut Simulation, FfiError> {
    Ok(&mut out(p, "sim")?.inner)
}

/// Copies the calling thread's last error message into `buf` as a
/// NUL-terminated string, truncating if needed. Returns the full message
/// length excluding the terminator; pass a null `buf` to query it.
///
/// # Safety
/// `buf` must be null or point to `capacity` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn teleop_last_error(buf: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && capacity > 0 {
            let n = msg.len().min(capacity - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// One's-complement sum of 16-bit big-endian words, complemented.
///
/// # Safety
/// `data` must point to `len` readable bytes (or be null with `len` 0).
#[no_mangle]
pub unsafe extern "C" fn teleop_checksum16(data: *const u8, len: usize) -> u16 {
    match bytes(data, len) {
        Ok(b) => checksum_16(b),
        Err(_) => 0,
    }
}

/// Decodes one telemetry packet into `frame`.
///
/// # Safety
/// `data` must point to `len` readable bytes; `frame` must be writable.
#[no_mangle]
pub unsafe extern "C" fn teleop_telemetry_decode(data: *const u8, len: usize, frame: *mut TeleopTelemetry) -> TeleopStatus {
    guard(|| {
        let frame = out(frame, "frame")?;
        *frame = TeleopTelemetry::from(&decode_telemetry(bytes(data, len)?)?);
        Ok(())
    })
}

/// Copies the laser ranges of a telemetry packet into `ranges` (metres, NaN
/// for no echo) and stores their number in `count`. `count` is set even when
/// the buffer is too small.
///
/// # Safety
/// `data` must point to `len` readable bytes, `ranges` to `capacity` writable
/// doubles, and `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn teleop_telemetry_laser(
    data: *const u8,
    len: usize,
    ranges: *mut f64,
    capacity: usize,
    count: *mut usize,
) -> TeleopStatus {
    guard(|| {
        let count = out(count, "count")?;
        let frame = decode_telemetry(bytes(data, len)?)?;
        *count = frame.laser.len();
        if capacity < frame.laser.len() {
            return Err(FfiError::TooSmall {
                have: capacity,
                need: frame.laser.len(),
            });
        }
        if ranges.is_null() && !frame.laser.is_empty() {
            return Err(FfiError::Null("ranges"));
        }
        for (i, r) in frame.laser.iter().enumerate() {
            *ranges.add(i) = r.unwrap_or(f64::NAN);
        }
        Ok(())
    })
}

/// Forward speed limit in m/s for a smoothed delay and jitter, in ms.
#[no_mangle]
pub extern "C" fn teleop_adapt_speed(delay_ms: f64, jitter_ms: f64) -> f64 {
    catch_unwind(|| adapt_speed(NetworkCondition { delay_ms, jitter_ms })).unwrap_or(0.0)
}

/// Obstacle avoidance on eight sonar ranges (NaN or negative for no echo).
///
/// # Safety
/// `sonar` must point to `TELEOP_SONAR_COUNT` readable doubles; `v_out` and `w_out` writable.
#[no_mangle]
pub unsafe extern "C" fn teleop_avoid(
    sonar: *const f64,
    v: f64,
    w: f64,
    v_out: *mut f64,
    w_out: *mut f64,
) -> TeleopStatus {
    guard(|| {
        if sonar.is_null() {
            return Err(FfiError::Null("sonar"));
        }
        if !(v.is_finite() && w.is_finite()) {
            return Err(FfiError::Invalid("non-finite twist".into()));
        }
        let raw = std::slice::from_raw_parts(sonar, TELEOP_SONAR_COUNT);
        let mut array = SonarArray::default();
        for (slot, &r) in array.ranges.iter_mut().zip(raw) {
            *slot = (r.is_finite() && r >= 0.0).then_some(r);
        }
        let (v_out, w_out) = (out(v_out, "v_out")?, out(w_out, "w_out")?);
        let t = avoid_obstacles(&array, Twist::new(v, w));
        *v_out = t.v;
        *w_out = t.w;
        Ok(())
    })
}

/// Creates a loopback simulation. A null `scenario` uses the generated room
/// for `seed`; a null `script` just connects at t = 0. Delays follow the
/// built-in table seeded with `seed`.
///
/// # Safety
/// `scenario` and `script` must be null or NUL-terminated; `handle` writable.
#[no_mangle]
pub unsafe extern "C" fn teleop_sim_new(
    scenario: *const c_char,
    script: *const c_char,
    seed: u64,
    handle: *mut *mut TeleopSim,
) -> TeleopStatus {
    guard(|| {
        let handle = out(handle, "handle")?;
        *handle = ptr::null_mut();
        let scenario: Scenario = match optional_str(scenario, "scenario")? {
            Some(text) => text.parse()?,
            None => scattered_room(seed),
        };
        let script = parse_script(optional_str(script, "script")?.unwrap_or("0 connect"))?;
        let mut config = SimConfig::default();
        config.profile = config.profile.with_seed(seed);
        config.server.frame_period_ms = None;
        let inner = Simulation::new(config, scenario.world, scenario.start)?.with_script(script);
        *handle = Box::into_raw(Box::new(TeleopSim { inner }));
        Ok(())
    })
}

/// Releases a handle from [`teleop_sim_new`]. Null is ignored.
///
/// # Safety
/// `handle` must come from `teleop_sim_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn teleop_sim_free(handle: *mut TeleopSim) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Advances one 10 ms tick.
///
/// # Safety
/// `handle` must be a live simulation handle.
#[no_mangle]
pub unsafe extern "C" fn teleop_sim_step(handle: *mut TeleopSim) -> TeleopStatus {
    guard(|| Ok(sim(handle)?.step()?))
}

/// Runs until the clock reaches `t_ms`.
///
/// # Safety
/// `handle` must be a live simulation handle.
#[no_mangle]
pub unsafe extern "C" fn teleop_sim_run_until(handle: *mut TeleopSim, t_ms: u64) -> TeleopStatus {
    guard(|| Ok(sim(handle)?.run_until(t_ms)?))
}

/// Simulation clock in ms, or 0 for a null handle.
///
/// # Safety
/// `handle` must be null or a live simulation handle.
#[no_mangle]
pub unsafe extern "C" fn teleop_sim_now_ms(handle: *const TeleopSim) -> u64 {
    handle.as_ref().map_or(0, |s| s.inner.now_ms())
}

/// Ground-truth robot pose.
///
/// # Safety
/// `handle` must be a live simulation handle and `pose` writable.
#[no_mangle]
pub unsafe extern "C" fn teleop_sim_pose(handle: *mut TeleopSim, pose: *mut TeleopPose) -> TeleopStatus {
    guard(|| {
        let p = sim(handle)?.server().pose();
        *out(pose, "pose")? = TeleopPose {
            x: p.x,
            y: p.y,
            theta: p.theta,
        };
        Ok(())
    })
}

/// Current drive mode on the robot.
///
/// # Safety
/// `handle` must be a live simulation handle and `mode` writable.
#[no_mangle]
pub unsafe extern "C" fn teleop_sim_mode(handle: *mut TeleopSim, mode: *mut TeleopMode) -> TeleopStatus {
    guard(|| {
        *out(mode, "mode")? = sim(handle)?.server().mode().into();
        Ok(())
    })
}

/// Number of collisions so far.
///
/// # Safety
/// `handle` must be a live simulation handle and `count` writable.
#[no_mangle]
pub unsafe extern "C" fn teleop_sim_collisions(handle: *mut TeleopSim, count: *mut u64) -> TeleopStatus {
    guard(|| {
        *out(count, "count")? = sim(handle)?.server().collisions();
        Ok(())
    })
}
