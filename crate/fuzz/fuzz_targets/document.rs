#![no_main]

use libfuzzer_sys::fuzz_target;
use qflow_cli::document::{decode_document, parse_schema};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(doc) = decode_document(text) {
        assert!(parse_schema(&doc.schema).is_ok());
    }
});
