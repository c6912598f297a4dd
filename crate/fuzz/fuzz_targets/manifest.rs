#![no_main]

use libfuzzer_sys::fuzz_target;
use wmgrid_cli::artifacts::Manifest;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(m) = Manifest::parse(text) {
            let _ = Manifest::parse(&m.to_toml());
        }
    }
});
