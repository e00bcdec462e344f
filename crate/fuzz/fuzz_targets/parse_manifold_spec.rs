#![no_main]

use libfuzzer_sys::fuzz_target;
use metric_scale::{BuiltinManifold, Manifold, ManifoldDescriptor};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let Ok(desc) = s.parse::<ManifoldDescriptor>() else { return };
    // Accepted specs print back to a spec that parses to the same manifold.
    let again: ManifoldDescriptor = desc.to_string().parse().expect("display output parses");
    assert_eq!(again, desc);
    assert!(desc.intrinsic_dimension() >= 1);
    if desc.ambient_len() <= 4096 {
        let m = BuiltinManifold::from_descriptor(desc);
        assert_eq!(m.descriptor(), desc);
    }
});
