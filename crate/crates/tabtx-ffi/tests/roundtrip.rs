//! Round-trip tests through the C ABI: every entry point is exercised the
//! way a foreign caller would use it, including the error paths.

use std::ffi::{c_char, CStr, CString};
use std::ptr;

use tabtx_ffi::{
    tabtx_compose_theme, tabtx_corpus_document_id, tabtx_corpus_free, tabtx_corpus_len,
    tabtx_corpus_load, tabtx_last_error, tabtx_preprocess_json, tabtx_score, tabtx_string_free,
    tabtx_validate_summary, TabtxCorpus, TabtxStatus,
};
use tabular_tx::fixtures;

fn c(text: &str) -> CString {
    CString::new(text).unwrap()
}

unsafe fn take_string(ptr: *mut c_char) -> String {
    assert!(!ptr.is_null());
    let value = CStr::from_ptr(ptr).to_str().unwrap().to_string();
    tabtx_string_free(ptr);
    value
}

fn load_fixture_corpus() -> (*mut TabtxCorpus, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    fixtures::write_fixture_files(dir.path()).unwrap();
    let path = c(dir.path().join(fixtures::CORPUS_FILE).to_str().unwrap());
    let mut corpus: *mut TabtxCorpus = ptr::null_mut();
    let status = unsafe { tabtx_corpus_load(path.as_ptr(), &mut corpus) };
    assert_eq!(status, TabtxStatus::Ok);
    assert!(!corpus.is_null());
    (corpus, dir)
}

#[test]
fn corpus_handle_round_trip() {
    let (corpus, _dir) = load_fixture_corpus();
    unsafe {
        assert_eq!(tabtx_corpus_len(corpus), 12);

        let mut id: *mut c_char = ptr::null_mut();
        assert_eq!(
            tabtx_corpus_document_id(corpus, 0, &mut id),
            TabtxStatus::Ok
        );
        assert_eq!(take_string(id), "refugee-status");

        let mut json: *mut c_char = ptr::null_mut();
        assert_eq!(tabtx_preprocess_json(corpus, 0, &mut json), TabtxStatus::Ok);
        let records: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
        let array = records.as_array().unwrap();
        assert_eq!(array.len(), 2);
        assert!(array.iter().all(|r| r["highlighted"] == true));
        assert!(array[0].get("context").is_some());

        tabtx_corpus_free(corpus);
    }
}

#[test]
fn degenerate_document_reports_preprocess_error() {
    let (corpus, _dir) = load_fixture_corpus();
    unsafe {
        let len = tabtx_corpus_len(corpus);
        // Find the all-headers document; preprocessing it yields no records.
        let mut target = None;
        for index in 0..len {
            let mut id: *mut c_char = ptr::null_mut();
            assert_eq!(
                tabtx_corpus_document_id(corpus, index, &mut id),
                TabtxStatus::Ok
            );
            if take_string(id) == "all-headers" {
                target = Some(index);
            }
        }
        let index = target.expect("fixture corpus carries all-headers");

        let mut json: *mut c_char = ptr::null_mut();
        assert_eq!(
            tabtx_preprocess_json(corpus, index, &mut json),
            TabtxStatus::PreprocessError
        );
        let message = CStr::from_ptr(tabtx_last_error()).to_str().unwrap();
        assert!(
            message.contains("no highlighted data cell"),
            "unexpected message: {message}"
        );
        tabtx_corpus_free(corpus);
    }
}

#[test]
fn out_of_bounds_and_null_arguments_are_flagged() {
    let (corpus, _dir) = load_fixture_corpus();
    unsafe {
        let mut id: *mut c_char = ptr::null_mut();
        assert_eq!(
            tabtx_corpus_document_id(corpus, 99, &mut id),
            TabtxStatus::OutOfBounds
        );
        assert_eq!(
            tabtx_corpus_document_id(ptr::null(), 0, &mut id),
            TabtxStatus::NullArgument
        );
        let mut handle: *mut TabtxCorpus = ptr::null_mut();
        assert_eq!(
            tabtx_corpus_load(ptr::null(), &mut handle),
            TabtxStatus::NullArgument
        );
        assert_eq!(tabtx_corpus_len(ptr::null()), 0);
        tabtx_corpus_free(corpus);
        tabtx_corpus_free(ptr::null_mut());
        tabtx_string_free(ptr::null_mut());
    }
}

#[test]
fn missing_file_surfaces_a_message() {
    let path = c("/nonexistent/corpus.jsonl");
    let mut corpus: *mut TabtxCorpus = ptr::null_mut();
    unsafe {
        assert_eq!(
            tabtx_corpus_load(path.as_ptr(), &mut corpus),
            TabtxStatus::ParseError
        );
        assert!(corpus.is_null());
        let message = CStr::from_ptr(tabtx_last_error()).to_str().unwrap();
        assert!(message.contains("corpus.jsonl"), "message: {message}");
    }
}

#[test]
fn scoring_matches_the_library() {
    let candidate = c(fixtures::REFUGEE_REFERENCE);
    let (mut r1, mut rl, mut bl) = (0.0f64, 0.0f64, 0.0f64);
    unsafe {
        assert_eq!(
            tabtx_score(
                candidate.as_ptr(),
                candidate.as_ptr(),
                &mut r1,
                &mut rl,
                &mut bl
            ),
            TabtxStatus::Ok
        );
    }
    assert_eq!((r1, rl, bl), (1.0, 1.0, 1.0));

    let other = c("a completely unrelated sentence.");
    unsafe {
        assert_eq!(
            tabtx_score(
                candidate.as_ptr(),
                other.as_ptr(),
                &mut r1,
                &mut rl,
                &mut bl
            ),
            TabtxStatus::Ok
        );
        assert_eq!(
            tabtx_score(candidate.as_ptr(), ptr::null(), &mut r1, &mut rl, &mut bl),
            TabtxStatus::NullArgument
        );
    }
    assert!(r1 < 1.0);
}

#[test]
fn validation_and_theme_composition_cross_the_boundary() {
    let text = c(fixtures::REFUGEE_REFERENCE);
    let title = c("the refugee status by nationality");
    let locale = c("en");
    let mut valid = false;
    unsafe {
        assert_eq!(
            tabtx_validate_summary(text.as_ptr(), title.as_ptr(), locale.as_ptr(), &mut valid),
            TabtxStatus::Ok
        );
        assert!(valid);

        let wrong_title = c("a different table entirely");
        assert_eq!(
            tabtx_validate_summary(
                text.as_ptr(),
                wrong_title.as_ptr(),
                locale.as_ptr(),
                &mut valid
            ),
            TabtxStatus::Ok
        );
        assert!(!valid);

        let bad_locale = c("fr");
        assert_eq!(
            tabtx_validate_summary(
                text.as_ptr(),
                title.as_ptr(),
                bad_locale.as_ptr(),
                &mut valid
            ),
            TabtxStatus::ParseError
        );

        let mut theme: *mut c_char = ptr::null_mut();
        assert_eq!(
            tabtx_compose_theme(title.as_ptr(), locale.as_ptr(), &mut theme),
            TabtxStatus::Ok
        );
        assert_eq!(
            take_string(theme),
            "According to the refugee status by nationality,"
        );

        let empty = c("   ");
        assert_eq!(
            tabtx_compose_theme(empty.as_ptr(), locale.as_ptr(), &mut theme),
            TabtxStatus::ParseError
        );
    }
}

#[test]
fn invalid_utf8_is_rejected() {
    let bad = [0xffu8, 0xfe, 0x00];
    let mut corpus: *mut TabtxCorpus = ptr::null_mut();
    unsafe {
        assert_eq!(
            tabtx_corpus_load(bad.as_ptr() as *const c_char, &mut corpus),
            TabtxStatus::InvalidUtf8
        );
    }
}

#[test]
fn generated_header_declares_the_api() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("include")
        .join("tabtx.h");
    let text =
        std::fs::read_to_string(&header).unwrap_or_else(|e| panic!("{}: {e}", header.display()));
    for symbol in [
        "TABTX_H",
        "TabtxStatus",
        "TabtxCorpus",
        "tabtx_corpus_load",
        "tabtx_corpus_len",
        "tabtx_corpus_document_id",
        "tabtx_preprocess_json",
        "tabtx_corpus_free",
        "tabtx_score",
        "tabtx_validate_summary",
        "tabtx_compose_theme",
        "tabtx_last_error",
        "tabtx_string_free",
    ] {
        assert!(text.contains(symbol), "header is missing {symbol}");
    }
}
