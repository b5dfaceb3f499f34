#![no_main]

use libfuzzer_sys::fuzz_target;
use texclass::features::{read_features, write_features};

fuzz_target!(|data: &[u8]| {
    if let Ok(set) = read_features(data) {
        let mut out = Vec::new();
        write_features(&set, &mut out).expect("parsed set serializes");
        assert_eq!(read_features(out.as_slice()).expect("round trip"), set);
    }
});
