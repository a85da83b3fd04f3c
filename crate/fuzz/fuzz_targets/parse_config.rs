#![no_main]
use libfuzzer_sys::fuzz_target;

use subcond::cli::parse_scenario_config;

fuzz_target!(|data: &[u8]| {
    if let Ok(config) = parse_scenario_config(data) {
        assert!(config.trials >= 1);
        assert!(config.eps1 < config.eps2);
    }
});
