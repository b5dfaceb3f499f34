#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = texclass::imaging::decode_image(data) {
        assert_eq!(img.data().len(), img.width() * img.height());
        let again = texclass::imaging::decode_image(&img.to_pgm_bytes()).expect("re-encoded image decodes");
        assert_eq!(again, img);
    }
});
