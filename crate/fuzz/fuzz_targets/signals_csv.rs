#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(table) = wmgrid_cli::artifacts::read_signals(data) {
        assert!(table.rows.iter().all(|r| r.len() == table.columns.len()));
    }
});
