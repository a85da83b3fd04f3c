#![no_main]
use libfuzzer_sys::fuzz_target;

use subcond::{parse_model_json, DistributionModel};

fuzz_target!(|data: &[u8]| {
    if let Ok(model) = parse_model_json(data) {
        // A validated model survives a round trip through its own document.
        let again = parse_model_json(model.to_json().as_bytes()).expect("re-parse of a valid model");
        assert_eq!(again.kind(), model.kind());
        assert_eq!(again.domain(), model.domain());
    }
});
