//! C ABI over the hybridqa engine.
//!
//! Every function returns an [`HqStatus`]; on failure a description is
//! available from [`hq_last_error_message`] on the same thread. Strings
//! handed out by this library must be released with [`hq_string_free`],
//! engines with [`hq_engine_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use hybridqa::config::AppConfig;
use hybridqa::{rouge_lsum, Engine, Error, RetrievalMode};
use serde_json::json;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HqStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Io = 4,
    Config = 5,
    Index = 6,
    Backend = 7,
    Internal = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HqRougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Opaque engine handle.
pub struct HqEngine {
    engine: Engine,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(HqStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => HqStatus::Io,
            Error::InvalidConfig(_) | Error::Parse { .. } | Error::UnknownVariant { .. } => HqStatus::Config,
            Error::MissingIndex(_) | Error::Snapshot(_) | Error::ProviderMismatch { .. } => HqStatus::Index,
            Error::Backend { .. } | Error::Provider(_) | Error::Budget { .. } => HqStatus::Backend,
            Error::EmptyQuery | Error::InvalidTopK => HqStatus::InvalidArgument,
            _ => HqStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HqStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HqStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            HqStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(HqStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(HqStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(HqStatus::Internal, "output contains a NUL byte".into()))
}

/// Opens the index and backend described by a JSON configuration file.
///
/// # Safety
/// `config_path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hq_engine_open(config_path: *const c_char, out: *mut *mut HqEngine) -> HqStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure(HqStatus::NullArgument, "out is null".into()));
        }
        *out = ptr::null_mut();
        let path = str_arg(config_path, "config_path")?;
        let engine = AppConfig::load(Path::new(path))?.open_engine()?;
        *out = Box::into_raw(Box::new(HqEngine { engine }));
        Ok(())
    })
}

/// Answers one question. `mode` may be null (hybrid) or one of "hybrid",
/// "sparse", "dense", "none". On success `*out_json` receives
/// `{"answer", "sources": [{"chunk_id", "doc_id", "uri"}], "usage"}`.
///
/// # Safety
/// `engine` must come from [`hq_engine_open`]; string arguments must be
/// NUL-terminated; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hq_engine_ask(
    engine: *const HqEngine,
    question: *const c_char,
    mode: *const c_char,
    adh: bool,
    out_json: *mut *mut c_char,
) -> HqStatus {
    guard(|| {
        if out_json.is_null() || engine.is_null() {
            return Err(Failure(HqStatus::NullArgument, "engine or out_json is null".into()));
        }
        *out_json = ptr::null_mut();
        let engine = &(*engine).engine;
        let question = str_arg(question, "question")?;
        let mode = if mode.is_null() {
            RetrievalMode::Hybrid
        } else {
            str_arg(mode, "mode")?
                .parse()
                .map_err(|e: Error| Failure(HqStatus::InvalidArgument, e.to_string()))?
        };
        let outcome = engine.ask(question, &[], &engine.options(mode, adh))?;
        let body = json!({
            "answer": outcome.envelope.answer,
            "sources": engine.source_refs(&outcome.envelope.sources),
            "usage": outcome.envelope.usage,
        });
        *out_json = into_c_string(body.to_string())?;
        Ok(())
    })
}

/// ROUGE-Lsum of `candidate` against `reference`.
///
/// # Safety
/// Both strings must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hq_rouge_lsum(
    reference: *const c_char,
    candidate: *const c_char,
    out: *mut HqRougeScore,
) -> HqStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure(HqStatus::NullArgument, "out is null".into()));
        }
        let s = rouge_lsum(str_arg(reference, "reference")?, str_arg(candidate, "candidate")?);
        *out = HqRougeScore {
            precision: s.precision,
            recall: s.recall,
            f1: s.f1,
        };
        Ok(())
    })
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn hq_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library, freed only once.
#[no_mangle]
pub unsafe extern "C" fn hq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `engine` must be null or a handle from [`hq_engine_open`], freed only once.
#[no_mangle]
pub unsafe extern "C" fn hq_engine_free(engine: *mut HqEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
    Ok(v) => v,
    Err(_) => panic!("version string"),
};

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hq_version() -> *const c_char {
    VERSION.as_ptr()
}
