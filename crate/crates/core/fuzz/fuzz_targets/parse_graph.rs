#![no_main]

use causalfuse::dsl::{parse_graph, render_graph};
use causalfuse::var::Kinds;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(g) = parse_graph(text, &Kinds::new()) {
        let again = parse_graph(&render_graph(&g), &Kinds::new()).expect("rendered graphs parse");
        assert_eq!(again, g);
    }
});
