#![no_main]

use causalfuse::dsl::parse_dist;
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
    if let Ok(t) = parse_dist(text, &kinds) {
        assert_eq!(parse_dist(&t.text(), &kinds).expect("rendered terms parse"), t);
    }
});
