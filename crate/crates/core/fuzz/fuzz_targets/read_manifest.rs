#![no_main]

use libfuzzer_sys::fuzz_target;
use texclass::dataset::DatasetManifest;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = DatasetManifest::read_csv(data) {
        let mut out = Vec::new();
        m.write_csv(&mut out).expect("parsed manifest serializes");
        assert_eq!(DatasetManifest::read_csv(out.as_slice()).expect("round trip"), m);
    }
});
