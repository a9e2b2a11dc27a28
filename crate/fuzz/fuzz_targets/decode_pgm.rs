#![no_main]

use libfuzzer_sys::fuzz_target;
use proxgroup::ingest::decode_pgm;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = decode_pgm(data) {
        assert_eq!(img.intensities().len(), img.width() * img.height());
        assert!(img.intensities().iter().all(|v| (0.0..=1.0).contains(v)));
    }
});
