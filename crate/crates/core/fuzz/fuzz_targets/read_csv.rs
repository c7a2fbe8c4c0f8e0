#![no_main]

use causalfuse::dsl::parse_dist;
use causalfuse::estimate::{fit, read_csv};
use causalfuse::var::Kinds;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let declared = parse_dist("P(X,Y|Z)", &Kinds::new()).expect("valid term");
    if let Ok(d) = read_csv(data, "fuzz", declared) {
        assert_eq!(fit(&d).total(), d.len() as u64);
    }
});
