#![no_main]

use libfuzzer_sys::fuzz_target;
use metric_scale_cli::parse_vector;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(xs) = parse_vector(s) {
        assert!(!xs.is_empty() && xs.len() <= 64);
        assert!(xs.iter().all(|x| x.is_finite()));
    }
});
