//! C ABI over the abc parser, validator and tag retrieval.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `_free`. Strings handed out by this library are
//! NUL-terminated UTF-8 and must be released with [`folkrag_string_free`].
//! Every function returns a [`FolkragStatus`]; on failure a description is
//! available from [`folkrag_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use folkrag::abc::{normalize, parse_tune, serialize, validate, Tune};
use folkrag::corpus::{load_index, CorpusIndex, TagSet};
use folkrag::retrieval::{jaccard, rank, RetrievalConfig};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FolkragStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidArgument = 4,
    CorpusError = 5,
    Internal = 6,
    Panic = 7,
}

/// A parsed tune.
pub struct FolkragTune(Tune);

/// A loaded corpus index.
pub struct FolkragIndex(CorpusIndex);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(FolkragStatus, String);

impl Failure {
    fn new(status: FolkragStatus, msg: impl Into<String>) -> Self {
        Self(status, msg.into())
    }
}

/// Runs `f`, turning failures and panics into a status plus error message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FolkragStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FolkragStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            FolkragStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(FolkragStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(FolkragStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(FolkragStatus::NullArgument, format!("{what} is null")))
}

fn out_ptr<T>(p: *mut T) -> Result<*mut T, Failure> {
    if p.is_null() {
        Err(Failure::new(FolkragStatus::NullArgument, "output pointer is null"))
    } else {
        Ok(p)
    }
}

fn c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure::new(FolkragStatus::Internal, "output contains NUL"))
}

fn tag_list(csv: &str) -> TagSet {
    csv.split(',').collect()
}

/// Message for the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn folkrag_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn folkrag_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses abc text into a new tune handle.
///
/// # Safety
/// `abc` must be a valid NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn folkrag_tune_parse(abc: *const c_char, out: *mut *mut FolkragTune) -> FolkragStatus {
    guard(|| {
        let out = out_ptr(out)?;
        *out = ptr::null_mut();
        let src = text(abc, "abc")?;
        let tune = parse_tune(src).map_err(|e| Failure::new(FolkragStatus::ParseError, e.to_string()))?;
        *out = Box::into_raw(Box::new(FolkragTune(tune)));
        Ok(())
    })
}

/// # Safety
/// `tune` must be null or a handle from [`folkrag_tune_parse`].
#[no_mangle]
pub unsafe extern "C" fn folkrag_tune_free(tune: *mut FolkragTune) {
    if !tune.is_null() {
        drop(Box::from_raw(tune));
    }
}

/// Writes the tune back to abc text.
///
/// # Safety
/// `tune` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn folkrag_tune_serialize(tune: *const FolkragTune, out: *mut *mut c_char) -> FolkragStatus {
    guard(|| {
        let out = out_ptr(out)?;
        *out = ptr::null_mut();
        let t = handle(tune, "tune")?;
        *out = c_string(serialize(&t.0))?;
        Ok(())
    })
}

/// Canonical text used for exact-copy detection.
///
/// # Safety
/// `tune` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn folkrag_tune_normalize(tune: *const FolkragTune, out: *mut *mut c_char) -> FolkragStatus {
    guard(|| {
        let out = out_ptr(out)?;
        *out = ptr::null_mut();
        let t = handle(tune, "tune")?;
        *out = c_string(normalize(&t.0))?;
        Ok(())
    })
}

/// Validation issues as a JSON array of objects with `severity`, `code`,
/// `bar_index`, `detail`, `expected` and `actual`.
///
/// # Safety
/// `tune` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn folkrag_tune_validate_json(tune: *const FolkragTune, out: *mut *mut c_char) -> FolkragStatus {
    guard(|| {
        let out = out_ptr(out)?;
        *out = ptr::null_mut();
        let t = handle(tune, "tune")?;
        let json = serde_json::to_string(&validate(&t.0))
            .map_err(|e| Failure::new(FolkragStatus::Internal, e.to_string()))?;
        *out = c_string(json)?;
        Ok(())
    })
}

/// Loads an index file written by the `ingest` command.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn folkrag_index_load(path: *const c_char, out: *mut *mut FolkragIndex) -> FolkragStatus {
    guard(|| {
        let out = out_ptr(out)?;
        *out = ptr::null_mut();
        let path = text(path, "path")?;
        let index = load_index(path).map_err(|e| Failure::new(FolkragStatus::CorpusError, e.to_string()))?;
        *out = Box::into_raw(Box::new(FolkragIndex(index)));
        Ok(())
    })
}

/// # Safety
/// `index` must be null or a handle from [`folkrag_index_load`].
#[no_mangle]
pub unsafe extern "C" fn folkrag_index_free(index: *mut FolkragIndex) {
    if !index.is_null() {
        drop(Box::from_raw(index));
    }
}

/// Number of entries, or 0 for a null handle.
///
/// # Safety
/// `index` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn folkrag_index_len(index: *const FolkragIndex) -> usize {
    index.as_ref().map_or(0, |i| i.0.len())
}

/// Ranks entries against comma-separated `tags`, returning at most `k`
/// candidates as a JSON array of `{entry_id, similarity, matched_tags}`.
/// Similarity is an exact fraction such as `"2/3"`.
///
/// # Safety
/// `index` must be a live handle, `tags` a valid string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn folkrag_index_retrieve_json(
    index: *const FolkragIndex,
    tags: *const c_char,
    k: usize,
    out: *mut *mut c_char,
) -> FolkragStatus {
    guard(|| {
        let out = out_ptr(out)?;
        *out = ptr::null_mut();
        let idx = handle(index, "index")?;
        let query = tag_list(text(tags, "tags")?);
        let cfg = RetrievalConfig::with_k(k);
        cfg.check().map_err(|e| Failure::new(FolkragStatus::InvalidArgument, e))?;
        let json = serde_json::to_string(&rank(&query, &idx.0, &cfg))
            .map_err(|e| Failure::new(FolkragStatus::Internal, e.to_string()))?;
        *out = c_string(json)?;
        Ok(())
    })
}

/// Looks for a corpus entry that is an exact copy of `tune`. On success
/// `*out_id` holds the entry id, or null when there is none.
///
/// # Safety
/// Both handles must be live and `out_id` writable.
#[no_mangle]
pub unsafe extern "C" fn folkrag_index_find_duplicate(
    index: *const FolkragIndex,
    tune: *const FolkragTune,
    out_id: *mut *mut c_char,
) -> FolkragStatus {
    guard(|| {
        let out = out_ptr(out_id)?;
        *out = ptr::null_mut();
        let idx = handle(index, "index")?;
        let t = handle(tune, "tune")?;
        if let Some(id) = idx.0.contains_duplicate(&t.0) {
            *out = c_string(id.to_string())?;
        }
        Ok(())
    })
}

/// Jaccard similarity of two comma-separated tag lists as an exact fraction
/// in lowest terms. Two empty lists give 0/1.
///
/// # Safety
/// `a` and `b` must be valid strings; `numer` and `denom` writable.
#[no_mangle]
pub unsafe extern "C" fn folkrag_jaccard(
    a: *const c_char,
    b: *const c_char,
    numer: *mut i64,
    denom: *mut i64,
) -> FolkragStatus {
    guard(|| {
        let (n, d) = (out_ptr(numer)?, out_ptr(denom)?);
        let a = tag_list(text(a, "a")?);
        let b = tag_list(text(b, "b")?);
        let j = jaccard(&a, &b);
        *n = *j.numer();
        *d = *j.denom();
        Ok(())
    })
}
