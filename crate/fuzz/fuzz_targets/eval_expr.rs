#![no_main]

use std::collections::HashMap;

use libfuzzer_sys::fuzz_target;
use prodgeo::expr::{eval, parse, JetEnv};
use prodgeo::jets::{Jet, JetSpace};

fuzz_target!(|data: &[u8]| {
    if data.len() < 16 {
        return;
    }
    let (head, rest) = data.split_at(16);
    let u1 = f64::from_le_bytes(head[..8].try_into().unwrap());
    let u2 = f64::from_le_bytes(head[8..].try_into().unwrap());
    let Ok(src) = std::str::from_utf8(rest) else {
        return;
    };
    let Ok(e) = parse(src) else {
        return;
    };
    let env: HashMap<String, f64> = [("u1".to_string(), u1), ("u2".to_string(), u2)].into();
    let value = eval(&e, &env);
    let space = JetSpace::new(2, 3);
    let (Ok(j1), Ok(j2)) = (space.variable(u1, 0), space.variable(u2, 1)) else {
        return;
    };
    let vars: HashMap<String, Jet> = [("u1".to_string(), j1), ("u2".to_string(), j2)].into();
    if let (Ok(v), Ok(j)) = (value, eval(&e, &JetEnv { space, vars })) {
        if v.is_finite() && j.value().is_finite() {
            assert_eq!(v, j.value());
        }
    }
});
