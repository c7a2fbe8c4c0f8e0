#![no_main]

use causalfuse::dsl::{parse_problem, render_problem};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = parse_problem(text) {
        assert_eq!(parse_problem(&render_problem(&p)).expect("rendered problems parse"), p);
    }
});
