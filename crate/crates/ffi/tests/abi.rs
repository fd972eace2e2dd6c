use std::ffi::CString;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use teleop_core::sensors::{GeoPoint, SonarArray};
use teleop_core::wire::{encode_telemetry, TelemetryFrame};
use teleop_core::world::Pose2D;
use teleop_core::Twist;
use teleop_ffi::*;

fn frame() -> TelemetryFrame {
    let sonar = SonarArray {
        ranges: [Some(1.25), None, None, None, None, None, None, None],
    };
    TelemetryFrame {
        seq: 42,
        stamp_ms: 8400,
        battery_v: 12.5,
        pose: Pose2D::new(1.5, -2.25, 0.5),
        speed: Twist::new(0.3, -0.1),
        sonar,
        laser: (0..101).map(|i| (i % 3 != 0).then_some(1.0 + i as f64 / 10.0)).collect(),
        compass_deg: 28.6,
        gps: GeoPoint {
            latitude: 21.038,
            longitude: 105.7827,
        },
    }
    .quantized()
}

fn last_error() -> String {
    let mut buf = vec![0u8; 256];
    let n = unsafe { teleop_last_error(buf.as_mut_ptr().cast(), buf.len()) };
    buf.truncate(n.min(255));
    String::from_utf8(buf).unwrap()
}

#[test]
fn checksum_matches_the_core() {
    let data = b"12:abc:-0.5";
    assert_eq!(
        unsafe { teleop_checksum16(data.as_ptr(), data.len()) },
        teleop_core::wire::checksum_16(data)
    );
    assert_eq!(unsafe { teleop_checksum16(ptr::null(), 0) }, 0xFFFF);
}

#[test]
fn telemetry_decodes_through_the_abi() {
    let f = frame();
    let bytes = encode_telemetry(&f).unwrap();
    let mut out = std::mem::MaybeUninit::<TeleopTelemetry>::uninit();
    let status = unsafe { teleop_telemetry_decode(bytes.as_ptr(), bytes.len(), out.as_mut_ptr()) };
    assert_eq!(status, TeleopStatus::Ok);
    let t = unsafe { out.assume_init() };
    assert_eq!((t.seq, t.stamp_ms, t.laser_count), (42, 8400, 101));
    assert_eq!((t.pose.x, t.pose.y), (1.5, -2.25));
    assert_eq!(t.sonar[0], 1.25);
    assert!(t.sonar[1].is_nan());

    let mut ranges = vec![0.0; 101];
    let mut count = 0;
    let status =
        unsafe { teleop_telemetry_laser(bytes.as_ptr(), bytes.len(), ranges.as_mut_ptr(), ranges.len(), &mut count) };
    assert_eq!(status, TeleopStatus::Ok);
    assert_eq!(count, 101);
    assert!(ranges[0].is_nan());
    assert_eq!(ranges[1], 1.1);

    let status = unsafe { teleop_telemetry_laser(bytes.as_ptr(), bytes.len(), ranges.as_mut_ptr(), 10, &mut count) };
    assert_eq!(status, TeleopStatus::BufferTooSmall);
    assert_eq!(count, 101);
}

#[test]
fn decode_errors_map_to_status_codes() {
    let mut bytes = encode_telemetry(&frame()).unwrap();
    let mut out = std::mem::MaybeUninit::<TeleopTelemetry>::uninit();
    bytes[7] ^= 1;
    let status = unsafe { teleop_telemetry_decode(bytes.as_ptr(), bytes.len(), out.as_mut_ptr()) };
    assert_eq!(status, TeleopStatus::ChecksumMismatch);
    assert!(last_error().contains("checksum"), "{}", last_error());

    let status = unsafe { teleop_telemetry_decode(bytes.as_ptr(), 3, out.as_mut_ptr()) };
    assert_eq!(status, TeleopStatus::Framing);
    let status = unsafe { teleop_telemetry_decode(bytes.as_ptr(), bytes.len(), ptr::null_mut()) };
    assert_eq!(status, TeleopStatus::NullPointer);
    let status = unsafe { teleop_telemetry_decode(ptr::null(), 10, out.as_mut_ptr()) };
    assert_eq!(status, TeleopStatus::NullPointer);
}

#[test]
fn last_error_truncates_and_clears() {
    let status = unsafe { teleop_telemetry_decode(ptr::null(), 10, ptr::null_mut()) };
    assert_eq!(status, TeleopStatus::NullPointer);
    let full = unsafe { teleop_last_error(ptr::null_mut(), 0) };
    let mut small = [0x7fu8; 5];
    assert_eq!(unsafe { teleop_last_error(small.as_mut_ptr().cast(), small.len()) }, full);
    assert_eq!(small[4], 0);
    assert_eq!(teleop_adapt_speed(0.0, 0.0), teleop_core::fuzzy::adapt_speed(Default::default()));
    let mut count = 0;
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { teleop_sim_new(ptr::null(), ptr::null(), 1, &mut h) }, TeleopStatus::Ok);
    assert_eq!(unsafe { teleop_sim_collisions(h, &mut count) }, TeleopStatus::Ok);
    assert_eq!(last_error(), "");
    unsafe { teleop_sim_free(h) };
}

#[test]
fn avoidance_stops_for_a_close_front_echo() {
    let mut sonar = [f64::NAN; TELEOP_SONAR_COUNT];
    sonar[0] = 0.2;
    let (mut v, mut w) = (1.0, 1.0);
    assert_eq!(unsafe { teleop_avoid(sonar.as_ptr(), 1.0, 0.0, &mut v, &mut w) }, TeleopStatus::Ok);
    assert!(v <= 0.0);
    assert_eq!(
        unsafe { teleop_avoid(sonar.as_ptr(), f64::INFINITY, 0.0, &mut v, &mut w) },
        TeleopStatus::InvalidArgument
    );
}

#[test]
fn simulation_handle_lifecycle() {
    let scenario = CString::new("bounds 0 0 20 10\nstart 2 5 0\nsafe_point 2 5 0\nbox 15 4 16 6\n").unwrap();
    let script = CString::new("0 connect\n500 mode ASSISTED\n500 drive 0.5 0\n").unwrap();
    let mut h: *mut TeleopSim = ptr::null_mut();
    assert_eq!(
        unsafe { teleop_sim_new(scenario.as_ptr(), script.as_ptr(), 7, &mut h) },
        TeleopStatus::Ok
    );
    assert!(!h.is_null());
    assert_eq!(unsafe { teleop_sim_step(h) }, TeleopStatus::Ok);
    assert_eq!(unsafe { teleop_sim_now_ms(h) }, 10);
    assert_eq!(unsafe { teleop_sim_run_until(h, 30_000) }, TeleopStatus::Ok);
    assert_eq!(unsafe { teleop_sim_now_ms(h) }, 30_000);

    let mut pose = TeleopPose::default();
    let mut mode = TeleopMode::Manual;
    let mut collisions = 99;
    unsafe {
        assert_eq!(teleop_sim_pose(h, &mut pose), TeleopStatus::Ok);
        assert_eq!(teleop_sim_mode(h, &mut mode), TeleopStatus::Ok);
        assert_eq!(teleop_sim_collisions(h, &mut collisions), TeleopStatus::Ok);
        teleop_sim_free(h);
        teleop_sim_free(ptr::null_mut());
    }
    assert_eq!(mode, TeleopMode::Assisted);
    assert_eq!(collisions, 0);
    // stopped short of the box at x = 15
    assert!(pose.x > 5.0 && pose.x < 15.0 - 0.3, "{pose:?}");
}

#[test]
fn bad_inputs_leave_no_handle() {
    let bad = CString::new("bounds 0 0 10\n").unwrap();
    let mut h: *mut TeleopSim = ptr::NonNull::dangling().as_ptr();
    assert_eq!(unsafe { teleop_sim_new(bad.as_ptr(), ptr::null(), 1, &mut h) }, TeleopStatus::Parse);
    assert!(h.is_null());
    assert!(last_error().contains("line 1"), "{}", last_error());

    let script = CString::new("0 warp 9\n").unwrap();
    assert_eq!(unsafe { teleop_sim_new(ptr::null(), script.as_ptr(), 1, &mut h) }, TeleopStatus::Parse);
    assert_eq!(unsafe { teleop_sim_new(ptr::null(), ptr::null(), 1, ptr::null_mut()) }, TeleopStatus::NullPointer);
    assert_eq!(unsafe { teleop_sim_step(ptr::null_mut()) }, TeleopStatus::NullPointer);
    assert_eq!(unsafe { teleop_sim_now_ms(ptr::null()) }, 0);
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/teleop.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for symbol in [
        "teleop_last_error",
        "teleop_checksum16",
        "teleop_telemetry_decode",
        "teleop_telemetry_laser",
        "teleop_adapt_speed",
        "teleop_avoid",
        "teleop_sim_new",
        "teleop_sim_free",
        "typedef struct TeleopSim TeleopSim;",
    ] {
        assert!(text.contains(symbol), "header lacks {symbol}");
    }
    let Ok(cc) = which("cc") else {
        eprintln!("no C compiler; skipping compile check");
        return;
    };
    let probe = std::env::temp_dir().join(format!("teleop_probe_{}.c", std::process::id()));
    std::fs::write(
        &probe,
        "#include \"teleop.h\"\n\
         int main(void) {\n\
           TeleopSim *sim = 0;\n\
           TeleopStatus s = teleop_sim_new(0, 0, 1, &sim);\n\
           TeleopTelemetry t;\n\
           (void)t; (void)s;\n\
           return TELEOP_SONAR_COUNT == 8 ? 0 : 1;\n\
         }\n",
    )
    .unwrap();
    for (lang, std) in [("c", "-std=c99"), ("c++", "-std=c++11")] {
        let out = Command::new(&cc)
            .args(["-fsyntax-only", "-Wall", "-Werror", std, "-x", lang, "-I"])
            .arg(dir.join("include"))
            .arg(&probe)
            .output()
            .unwrap();
        assert!(out.status.success(), "{lang}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let _ = std::fs::remove_file(probe);
}

fn which(name: &str) -> Result<PathBuf, ()> {
    std::env::var_os("PATH")
        .and_then(|paths| std::env::split_paths(&paths).map(|p| p.join(name)).find(|p| p.is_file()))
        .ok_or(())
}
