#![no_main]

use libfuzzer_sys::fuzz_target;
use prodgeo::expr::parse;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(e) = parse(src) {
        let printed = e.to_string();
        let again = parse(&printed).expect("printed expressions parse");
        assert_eq!(parse(&again.to_string()).expect("stable"), again);
    }
});
