#![no_main]

use libfuzzer_sys::fuzz_target;
use qflow_cli::cache::{decode_line, encode_line};

fuzz_target!(|data: &[u8]| {
    let Ok(line) = std::str::from_utf8(data) else { return };
    if let Ok(rec) = decode_line(line) {
        // anything accepted must survive a round trip
        let line = encode_line(&rec);
        let again = decode_line(line.trim_end()).unwrap();
        assert_eq!(encode_line(&again), line);
    }
});
