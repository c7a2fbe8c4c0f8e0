#![no_main]

use causalfuse::symexpr::{parse_json, render, Style};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(e) = parse_json(text) {
        assert_eq!(
            parse_json(&render(&e, Style::Json)).expect("rendered expressions parse"),
            e
        );
    }
});
