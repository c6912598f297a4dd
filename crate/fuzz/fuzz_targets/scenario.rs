#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(file) = wmgrid_sim::parse_scenario(text) {
            if file.validate().is_ok() {
                let _ = file.attack_specs();
                let _ = file.window_samples();
            }
        }
    }
});
