use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use hybridqa::config::AppConfig;
use hybridqa::ingest::{ingest_manifest, load_manifest};
use hybridqa::HybridIndex;
use hybridqa_ffi::*;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

/// Builds the shipped corpus into a temp dir and writes a config using it.
fn engine_config(dir: &Path, backend: &str) -> CString {
    let fx = fixtures();
    let index = dir.join("index");
    let mut cfg = AppConfig::load(&fx.join("config.json")).unwrap();
    let entries = load_manifest(cfg.manifest.as_ref().unwrap()).unwrap();
    let outcome = ingest_manifest(&entries, &cfg.chunking).unwrap();
    let provider = cfg.embedder.build().unwrap();
    HybridIndex::build(&outcome, cfg.bm25, provider.as_ref()).unwrap().save(&index).unwrap();
    cfg.index_dir = index;
    let mut value = serde_json::to_value(&cfg).unwrap();
    value["generation"]["backend"] = backend.into();
    let path = dir.join("config.json");
    std::fs::write(&path, value.to_string()).unwrap();
    CString::new(path.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = hq_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn open_ask_free() {
    let dir = tempfile::tempdir().unwrap();
    let config = engine_config(dir.path(), "stub_echo");
    let mut engine = ptr::null_mut();
    assert_eq!(unsafe { hq_engine_open(config.as_ptr(), &mut engine) }, HqStatus::Ok);
    assert!(!engine.is_null());
    assert!(hq_last_error_message().is_null());

    let q = CString::new("What does RAT stand for?").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { hq_engine_ask(engine, q.as_ptr(), ptr::null(), true, &mut out) }, HqStatus::Ok);
    let body: serde_json::Value = serde_json::from_str(unsafe { CStr::from_ptr(out) }.to_str().unwrap()).unwrap();
    unsafe { hq_string_free(out) };
    assert!(body["answer"].as_str().unwrap().contains("Required Arrival Time"));
    assert_eq!(body["sources"].as_array().unwrap().len(), 3);

    let none = CString::new("none").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { hq_engine_ask(engine, q.as_ptr(), none.as_ptr(), false, &mut out) }, HqStatus::Ok);
    let body: serde_json::Value = serde_json::from_str(unsafe { CStr::from_ptr(out) }.to_str().unwrap()).unwrap();
    unsafe { hq_string_free(out) };
    assert_eq!(body["answer"], "");
    assert_eq!(body["sources"], serde_json::json!([]));

    let bad = CString::new("fuzzy").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { hq_engine_ask(engine, q.as_ptr(), bad.as_ptr(), true, &mut out) },
        HqStatus::InvalidArgument
    );
    assert!(out.is_null());
    assert!(last_error().contains("fuzzy"));

    unsafe { hq_engine_free(engine) };
}

#[test]
fn open_reports_errors() {
    let mut engine = ptr::null_mut();
    assert_eq!(unsafe { hq_engine_open(ptr::null(), &mut engine) }, HqStatus::NullArgument);
    assert!(engine.is_null());

    let missing = CString::new("/nonexistent/config.json").unwrap();
    assert_eq!(unsafe { hq_engine_open(missing.as_ptr(), &mut engine) }, HqStatus::Io);
    assert!(last_error().contains("/nonexistent/config.json"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"index_dir": "nowhere"}"#).unwrap();
    let cfg = CString::new(cfg.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { hq_engine_open(cfg.as_ptr(), &mut engine) }, HqStatus::Io);

    let bad_utf8 = [0xffu8, 0];
    assert_eq!(
        unsafe { hq_engine_open(bad_utf8.as_ptr().cast(), &mut engine) },
        HqStatus::InvalidUtf8
    );
}

#[test]
fn rouge_through_c_abi() {
    let r = CString::new("the cat sat").unwrap();
    let c = CString::new("the cat ran").unwrap();
    let mut s = HqRougeScore::default();
    assert_eq!(unsafe { hq_rouge_lsum(r.as_ptr(), c.as_ptr(), &mut s) }, HqStatus::Ok);
    assert!((s.recall - 2.0 / 3.0).abs() < 1e-12);
    assert!((s.f1 - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(unsafe { hq_rouge_lsum(r.as_ptr(), c.as_ptr(), ptr::null_mut()) }, HqStatus::NullArgument);
}

#[test]
fn version_and_null_frees() {
    let v = unsafe { CStr::from_ptr(hq_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    unsafe {
        hq_string_free(ptr::null_mut());
        hq_engine_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_api_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/hybridqa.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in [
        "hq_engine_open",
        "hq_engine_ask",
        "hq_rouge_lsum",
        "hq_last_error_message",
        "hq_string_free",
        "hq_engine_free",
        "hq_version",
        "typedef struct HqEngine HqEngine;",
        "HQ_STATUS_OK = 0",
    ] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler found; syntax check skipped");
        return;
    };
    assert!(cc.status.success());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("t.c");
    std::fs::write(
        &src,
        "#include \"hybridqa.h\"\nint main(void) { HqRougeScore s; return hq_rouge_lsum(\"a\", \"a\", &s) == HQ_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header.parent().unwrap())
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
