#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(file) = wmgrid_model::parse_model(text) {
            let _ = file.to_microgrid();
        }
    }
});
