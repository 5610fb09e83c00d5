#![no_main]

use libfuzzer_sys::fuzz_target;
use prodgeo::scenario::{LoadOptions, Scenario};

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    let opts = LoadOptions {
        force: true,
        seed: None,
    };
    if let Ok(s) = Scenario::from_toml(src, opts) {
        let again = Scenario::from_toml(&s.to_toml(), opts).expect("exported scenarios reload");
        assert_eq!(again.spec, s.spec);
    }
});
