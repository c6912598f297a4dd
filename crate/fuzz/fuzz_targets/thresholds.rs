#![no_main]

use libfuzzer_sys::fuzz_target;
use wmgrid_sim::ThresholdsFile;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(file) = ThresholdsFile::parse(text) {
            let back = ThresholdsFile::parse(&file.to_toml()).expect("serialized thresholds parse");
            assert_eq!(back.dgus.len(), file.dgus.len());
        }
    }
});
