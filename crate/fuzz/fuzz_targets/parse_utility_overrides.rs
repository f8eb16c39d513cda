#![no_main]

use libfuzzer_sys::fuzz_target;
use nestlogit::generate::reference_depth3;
use nestlogit::model_file::{apply_overrides, parse_utility_overrides};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(pairs) = parse_utility_overrides(text) else { return };
    for (id, v) in &pairs {
        assert!(!id.is_empty() && v.is_finite());
    }
    let _ = apply_overrides(&reference_depth3(), &pairs);
});
