use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use bgeohash_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe { bgh_last_error_message(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }
        .to_string_lossy()
        .into_owned()
}

fn fit(points: &[BghWeightedPoint], q: u8) -> *mut BghModel {
    let mut model = ptr::null_mut();
    assert_eq!(
        unsafe { bgh_model_fit(points.as_ptr(), points.len(), q, &mut model) },
        BghStatus::Ok
    );
    model
}

fn sample_points() -> Vec<BghWeightedPoint> {
    (0..200)
        .map(|i| BghWeightedPoint {
            lat: -60.0 + (i as f64 * 0.53) % 120.0,
            lon: -170.0 + (i as f64 * 7.31) % 340.0,
            weight: 1 + i % 3,
        })
        .collect()
}

#[test]
fn encode_matches_reference_string() {
    let mut code = BghHashCode { code: 0, bits: 0 };
    assert_eq!(
        unsafe { bgh_encode(57.64911, 10.40744, 55, &mut code) },
        BghStatus::Ok
    );
    let mut buf = [0 as c_char; 16];
    assert_eq!(
        unsafe { bgh_render_base32(code, buf.as_mut_ptr(), buf.len()) },
        BghStatus::Ok
    );
    assert_eq!(
        unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap(),
        "u4pruydqqvj"
    );
    assert_eq!(
        unsafe { bgh_render_base32(code, buf.as_mut_ptr(), 11) },
        BghStatus::BufferTooSmall
    );
}

#[test]
fn status_codes_and_messages() {
    let mut code = BghHashCode { code: 0, bits: 0 };
    assert_eq!(
        unsafe { bgh_encode(0.0, 180.0, 10, &mut code) },
        BghStatus::Domain
    );
    assert!(last_error().contains("lon"), "{}", last_error());
    assert_eq!(
        unsafe { bgh_encode(0.0, 0.0, 61, &mut code) },
        BghStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { bgh_encode(0.0, 0.0, 10, ptr::null_mut()) },
        BghStatus::NullPointer
    );
    let mut model = ptr::null_mut();
    assert_eq!(
        unsafe { bgh_model_fit(ptr::null(), 0, 4, &mut model) },
        BghStatus::Fit
    );
    let path = CString::new("/nonexistent/model.bgh").unwrap();
    assert_eq!(
        unsafe { bgh_model_load(path.as_ptr(), &mut model) },
        BghStatus::Io
    );
    assert!(last_error().contains("/nonexistent/model.bgh"));
    let junk = [0u8; 40];
    assert_eq!(
        unsafe { bgh_model_load_bytes(junk.as_ptr(), junk.len(), &mut model) },
        BghStatus::Format
    );
    // the full message length is reported even when truncated
    let mut tiny = [0 as c_char; 4];
    let n = unsafe { bgh_last_error_message(tiny.as_mut_ptr(), tiny.len()) };
    assert!(n > 3);
    assert_eq!(unsafe { CStr::from_ptr(tiny.as_ptr()) }.to_bytes().len(), 3);
}

#[test]
fn model_lifecycle_and_round_trip() {
    let model = fit(&sample_points(), 6);
    assert_eq!(unsafe { bgh_model_depth(model) }, 6);

    let mut len = 0usize;
    assert_eq!(
        unsafe { bgh_model_to_bytes(model, ptr::null_mut(), 0, &mut len) },
        BghStatus::BufferTooSmall
    );
    assert_eq!(len, 24 + 65 * 8 + 4);
    let mut bytes = vec![0u8; len];
    assert_eq!(
        unsafe { bgh_model_to_bytes(model, bytes.as_mut_ptr(), len, &mut len) },
        BghStatus::Ok
    );

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("m.bgh").to_str().unwrap()).unwrap();
    assert_eq!(
        unsafe { bgh_model_save(model, path.as_ptr()) },
        BghStatus::Ok
    );
    let mut loaded = ptr::null_mut();
    assert_eq!(
        unsafe { bgh_model_load(path.as_ptr(), &mut loaded) },
        BghStatus::Ok
    );
    let mut from_bytes = ptr::null_mut();
    assert_eq!(
        unsafe { bgh_model_load_bytes(bytes.as_ptr(), bytes.len(), &mut from_bytes) },
        BghStatus::Ok
    );

    for (lat, lon) in [(0.0, 0.0), (-33.9, 151.2), (64.1, -21.9)] {
        let mut a = BghHashCode { code: 0, bits: 0 };
        let mut b = a;
        unsafe {
            bgh_balanced_encode(model, lat, lon, 30, &mut a);
            bgh_balanced_encode(from_bytes, lat, lon, 30, &mut b);
        }
        assert_eq!(a, b);
        let mut iv = BghInterval { start: 0, end: 0 };
        assert_eq!(
            unsafe { bgh_balanced_decode(loaded, a, &mut iv) },
            BghStatus::Ok
        );
        let mut standard = BghHashCode { code: 0, bits: 0 };
        unsafe { bgh_encode(lat, lon, 60, &mut standard) };
        let g = standard.code << 3;
        assert!(iv.start <= g && g < iv.end);
    }
    unsafe {
        bgh_model_free(model);
        bgh_model_free(loaded);
        bgh_model_free(from_bytes);
        bgh_model_free(ptr::null_mut());
    }
    assert_eq!(unsafe { bgh_model_depth(ptr::null()) }, 0);
}

#[test]
fn entropy_and_bound() {
    let counts = [5u64, 5, 5, 5];
    let mut h = 0.0;
    assert_eq!(
        unsafe { bgh_entropy(counts.as_ptr(), counts.len(), &mut h) },
        BghStatus::Ok
    );
    assert_eq!(h, 2.0);
    let (mut t, mut p) = (0.0, 0.0);
    assert_eq!(
        unsafe { bgh_theorem_bound(5, 100_000, 2.0 / 3.0, &mut t, &mut p) },
        BghStatus::Ok
    );
    assert!((t - 3.3333).abs() < 1e-4 && (p - 0.9902).abs() < 1e-4);
    assert_eq!(
        unsafe { bgh_theorem_bound(5, 100_000, 1.5, &mut t, &mut p) },
        BghStatus::InvalidArgument
    );
}

#[test]
fn spatiotemporal_key() {
    let model = fit(&sample_points(), 4);
    let mut buf = [0 as c_char; 64];
    let status = unsafe {
        bgh_stkey(
            model,
            8,
            86_400,
            8,
            10.0,
            10.0,
            1_577_836_800,
            buf.as_mut_ptr(),
            buf.len(),
        )
    };
    assert_eq!(status, BghStatus::Ok);
    let key = unsafe { CStr::from_ptr(buf.as_ptr()) }
        .to_str()
        .unwrap()
        .to_owned();
    assert_eq!(key.len(), 2 + 1 + 12 + 1 + 2);
    assert_eq!(&key[2..16], ":000000018262:");
    let status = unsafe {
        bgh_stkey(
            model,
            6,
            86_400,
            8,
            10.0,
            10.0,
            0,
            buf.as_mut_ptr(),
            buf.len(),
        )
    };
    assert_eq!(status, BghStatus::InvalidArgument);
    unsafe { bgh_model_free(model) };
}

/// Compiles a C program against the generated header and static library.
#[test]
fn c_program_links_against_header() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = crate_dir.join("include");
    assert!(header_dir.join("bgeohash.h").exists());
    let exe = std::env::current_exe().unwrap();
    let lib = exe
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .join("libbgeohash_ffi.a");
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping link test");
        return;
    };
    assert!(lib.exists(), "{} missing", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("smoke");
    let status = Command::new(cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&header_dir)
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let run = Command::new(&out).output().unwrap();
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert_eq!(String::from_utf8_lossy(&run.stdout), "ok\n");
}

fn which_cc() -> Result<String, ()> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    match Command::new(&cc).arg("--version").output() {
        Ok(o) if o.status.success() => Ok(cc),
        _ => Err(()),
    }
}
