#![no_main]

use libfuzzer_sys::fuzz_target;
use metric_scale_cli::RunConfig;

// Arguments are NUL-separated. Only parsing and validation run; no command executes.
fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let args = std::iter::once("metric-scale").chain(s.split('\0'));
    if let Ok(cfg) = RunConfig::parse_from(args) {
        assert!(cfg.lambda.get() > 0.0 && cfg.lambda.get().is_finite());
        assert!(cfg.eta > 0.0 && cfg.eta.is_finite());
        assert_ne!(cfg.iters, Some(0));
    }
});
