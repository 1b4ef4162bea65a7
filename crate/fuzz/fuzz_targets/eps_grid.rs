#![no_main]

use libfuzzer_sys::fuzz_target;
use qflow_cli::grid::parse_eps_grid;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(grid) = parse_eps_grid(text) {
        assert!(!grid.is_empty());
        assert!(grid.iter().all(|e| e.is_finite() && *e > 0.0));
    }
});
