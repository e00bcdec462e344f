#![no_main]

use libfuzzer_sys::fuzz_target;
use metric_scale::Chart;
use nalgebra::DVector;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let Ok(chart) = s.parse::<Chart>() else { return };
    assert_eq!(chart.domain().len(), chart.dimension());
    let mid = DVector::from_iterator(chart.dimension(), chart.domain().iter().map(|&(lo, hi)| 0.5 * (lo + hi)));
    assert!(chart.contains(&mid));
    assert!(chart.metric_at(&mid).is_ok());
});
