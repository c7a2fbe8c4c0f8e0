#![no_main]

use causalfuse::symexpr::{parse_latex, render, Style};
use causalfuse::var::Kinds;
use causalfuse::VertexKind;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let kinds: Kinds = [
        ("T".to_string(), VertexKind::Transportability),
        ("S".to_string(), VertexKind::Selection),
    ]
    .into();
    if let Ok(e) = parse_latex(text, &kinds) {
        let again = parse_latex(&render(&e, Style::Latex), &kinds).expect("rendered expressions parse");
        assert_eq!(again.canonicalize(), e.canonicalize());
    }
});
