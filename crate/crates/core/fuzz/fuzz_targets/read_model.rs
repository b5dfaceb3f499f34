#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(saved) = texclass::classify::read_model(data) {
        // validated models must predict without panicking
        let probe = vec![0.5; saved.model.dim()];
        let _ = saved.model.predict(&probe);
    }
});
