#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = wmgrid_cli::artifacts::read_windows(data);
});
