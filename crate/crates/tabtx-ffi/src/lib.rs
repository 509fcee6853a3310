//! C interface to the tabular-tx toolkit: corpus loading, preprocessing,
//! TX structure checks, and metric scoring behind a flat error-code API.
//!
//! Conventions: every fallible entry point returns a [`TabtxStatus`] and
//! writes its result through out pointers; strings written that way are
//! owned by the caller and released with [`tabtx_string_free`]; a failing
//! call leaves a message retrievable with [`tabtx_last_error`]. The
//! generated header lives at `include/tabtx.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use tabular_tx::eval::score_pair;
use tabular_tx::ingest::{load_corpus, Corpus};
use tabular_tx::model::Locale;
use tabular_tx::preprocess::{
    expand_merged_cells, filter_related, infer_headers, to_key_value_records,
};
use tabular_tx::tx::{compose_theme_part, parse_tx_summary, validate_tx};

/// Result code returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TabtxStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Input could not be read or parsed (file, locale, record).
    ParseError = 3,
    /// The document could not be preprocessed into records.
    PreprocessError = 4,
    /// An index was outside the corpus.
    OutOfBounds = 5,
    /// An internal invariant failed; see `tabtx_last_error`.
    InternalError = 6,
}

/// A loaded corpus. Opaque: create with `tabtx_corpus_load`, inspect
/// through the accessor functions, release with `tabtx_corpus_free`.
pub struct TabtxCorpus {
    inner: Corpus,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn fail(status: TabtxStatus, message: impl Into<Vec<u8>>) -> TabtxStatus {
    let stored = CString::new(message).unwrap_or_else(|_| {
        CString::new("error message contained a nul byte").expect("static message")
    });
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(stored));
    status
}

fn guarded(body: impl FnOnce() -> TabtxStatus) -> TabtxStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(TabtxStatus::InternalError, "caught an internal panic"),
    }
}

/// # Safety
/// `ptr` must be null or point to a nul-terminated string.
unsafe fn text_arg<'a>(ptr: *const c_char) -> Result<&'a str, TabtxStatus> {
    if ptr.is_null() {
        return Err(fail(TabtxStatus::NullArgument, "null string argument"));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(TabtxStatus::InvalidUtf8, "string argument is not UTF-8"))
}

/// # Safety
/// `out` must be a valid pointer to writable memory.
unsafe fn write_string(out: *mut *mut c_char, value: String) -> TabtxStatus {
    match CString::new(value) {
        Ok(s) => {
            *out = s.into_raw();
            TabtxStatus::Ok
        }
        Err(_) => fail(
            TabtxStatus::InternalError,
            "produced text contained a nul byte",
        ),
    }
}

fn parse_locale(text: &str) -> Result<Locale, TabtxStatus> {
    text.parse::<Locale>()
        .map_err(|e| fail(TabtxStatus::ParseError, e))
}

/// Message of the most recent failure on this thread, or null if none has
/// occurred. The pointer stays valid until the next failing call on the
/// same thread; do not free it.
#[no_mangle]
pub extern "C" fn tabtx_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |s| s.as_ptr())
    })
}

/// Release a string returned through an out parameter.
///
/// # Safety
/// `s` must be null or a pointer previously returned by this library and
/// not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tabtx_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Load a corpus file (one table document JSON per line) and write a handle
/// to `out`.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tabtx_corpus_load(
    path: *const c_char,
    out: *mut *mut TabtxCorpus,
) -> TabtxStatus {
    guarded(|| {
        if out.is_null() {
            return fail(TabtxStatus::NullArgument, "null out pointer");
        }
        *out = std::ptr::null_mut();
        let path = match text_arg(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match load_corpus(path) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(TabtxCorpus { inner }));
                TabtxStatus::Ok
            }
            Err(e) => fail(TabtxStatus::ParseError, e.to_string()),
        }
    })
}

/// Number of documents in the corpus; 0 for a null handle.
///
/// # Safety
/// `corpus` must be null or a live handle from `tabtx_corpus_load`.
#[no_mangle]
pub unsafe extern "C" fn tabtx_corpus_len(corpus: *const TabtxCorpus) -> usize {
    if corpus.is_null() {
        0
    } else {
        (*corpus).inner.documents.len()
    }
}

/// Write the id of the document at `index` to `out`.
///
/// # Safety
/// `corpus` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tabtx_corpus_document_id(
    corpus: *const TabtxCorpus,
    index: usize,
    out: *mut *mut c_char,
) -> TabtxStatus {
    guarded(|| {
        if corpus.is_null() || out.is_null() {
            return fail(TabtxStatus::NullArgument, "null corpus or out pointer");
        }
        let documents = &(*corpus).inner.documents;
        match documents.get(index) {
            Some(doc) => write_string(out, doc.id.clone()),
            None => fail(
                TabtxStatus::OutOfBounds,
                format!("index {index} outside corpus of {}", documents.len()),
            ),
        }
    })
}

/// Preprocess the document at `index` (merged-cell expansion, header
/// inference, flattening, related-cell filtering) and write the retained
/// records as a JSON array to `out`.
///
/// # Safety
/// `corpus` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tabtx_preprocess_json(
    corpus: *const TabtxCorpus,
    index: usize,
    out: *mut *mut c_char,
) -> TabtxStatus {
    guarded(|| {
        if corpus.is_null() || out.is_null() {
            return fail(TabtxStatus::NullArgument, "null corpus or out pointer");
        }
        let documents = &(*corpus).inner.documents;
        let Some(doc) = documents.get(index) else {
            return fail(
                TabtxStatus::OutOfBounds,
                format!("index {index} outside corpus of {}", documents.len()),
            );
        };
        let grid = match expand_merged_cells(&doc.cells) {
            Ok(grid) => infer_headers(grid),
            Err(e) => return fail(TabtxStatus::PreprocessError, e.to_string()),
        };
        let records = to_key_value_records(&grid, &doc.highlighted_cells);
        let related = match filter_related(&records, &grid, &doc.highlighted_cells) {
            Ok(related) => related,
            Err(e) => return fail(TabtxStatus::PreprocessError, e.to_string()),
        };
        match serde_json::to_string(&related) {
            Ok(json) => write_string(out, json),
            Err(e) => fail(TabtxStatus::InternalError, e.to_string()),
        }
    })
}

/// Release a corpus handle.
///
/// # Safety
/// `corpus` must be null or a live handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tabtx_corpus_free(corpus: *mut TabtxCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Score a candidate summary against a reference: ROUGE-1, ROUGE-L, and
/// BLEU, with the tokenizer chosen per the reference script.
///
/// # Safety
/// All pointers must be valid; the strings nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn tabtx_score(
    candidate: *const c_char,
    reference: *const c_char,
    rouge1: *mut f64,
    rouge_l: *mut f64,
    bleu: *mut f64,
) -> TabtxStatus {
    guarded(|| {
        if rouge1.is_null() || rouge_l.is_null() || bleu.is_null() {
            return fail(TabtxStatus::NullArgument, "null score out pointer");
        }
        let candidate = match text_arg(candidate) {
            Ok(t) => t,
            Err(status) => return status,
        };
        let reference = match text_arg(reference) {
            Ok(t) => t,
            Err(status) => return status,
        };
        let scores = score_pair(candidate, reference, None);
        *rouge1 = scores.rouge1;
        *rouge_l = scores.rouge_l;
        *bleu = scores.bleu;
        TabtxStatus::Ok
    })
}

/// Parse `text` as a TX summary for `locale` ("en" or "ko") and write
/// whether it passes every structure check against `table_title`.
///
/// # Safety
/// All pointers must be valid; the strings nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn tabtx_validate_summary(
    text: *const c_char,
    table_title: *const c_char,
    locale: *const c_char,
    out_valid: *mut bool,
) -> TabtxStatus {
    guarded(|| {
        if out_valid.is_null() {
            return fail(TabtxStatus::NullArgument, "null out pointer");
        }
        let text = match text_arg(text) {
            Ok(t) => t,
            Err(status) => return status,
        };
        let title = match text_arg(table_title) {
            Ok(t) => t,
            Err(status) => return status,
        };
        let locale = match text_arg(locale).and_then(parse_locale) {
            Ok(l) => l,
            Err(status) => return status,
        };
        let summary = parse_tx_summary(text, locale);
        *out_valid = validate_tx(&summary, title).valid;
        TabtxStatus::Ok
    })
}

/// Compose the Theme part for a table title in `locale` ("en" or "ko") and
/// write the rendered citation phrase to `out`.
///
/// # Safety
/// All pointers must be valid; the strings nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn tabtx_compose_theme(
    table_title: *const c_char,
    locale: *const c_char,
    out: *mut *mut c_char,
) -> TabtxStatus {
    guarded(|| {
        if out.is_null() {
            return fail(TabtxStatus::NullArgument, "null out pointer");
        }
        let title = match text_arg(table_title) {
            Ok(t) => t,
            Err(status) => return status,
        };
        let locale = match text_arg(locale).and_then(parse_locale) {
            Ok(l) => l,
            Err(status) => return status,
        };
        match compose_theme_part(title, locale) {
            Ok(theme) => write_string(out, theme.rendered),
            Err(e) => fail(TabtxStatus::ParseError, e.to_string()),
        }
    })
}
