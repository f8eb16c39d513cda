#![no_main]

use libfuzzer_sys::fuzz_target;
use nestlogit::model_file::{parse_model, to_json};
use nestlogit::nested_logit::choice_probs;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(model) = parse_model(text) else { return };
    let written = to_json(&model);
    let again = parse_model(&written).expect("serialized model parses");
    assert_eq!(to_json(&again), written);
    let p = choice_probs(&model);
    let sum: f64 = p.iter().sum();
    assert!((sum - 1.0).abs() < 1e-9 || p.iter().any(|x| !x.is_finite()), "sum {sum}");
});
