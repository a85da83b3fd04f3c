#![no_main]
use libfuzzer_sys::fuzz_target;

use subcond::{Alphabet, Domain};

fuzz_target!(|data: &[u8]| {
    let [n, size, rest @ ..] = data else { return };
    let domain = Domain::new(*n as usize % 16 + 1, Alphabet::new(*size as u64 % 14 + 2).unwrap()).unwrap();
    let Ok(text) = std::str::from_utf8(rest) else { return };
    if let Ok(symbols) = domain.parse_symbols(text) {
        assert!(symbols.len() <= domain.n);
        if !symbols.is_empty() {
            let formatted = domain.format_symbols(&symbols);
            assert_eq!(domain.parse_symbols(&formatted).unwrap(), symbols);
        }
    }
});
