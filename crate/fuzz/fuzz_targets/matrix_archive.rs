#![no_main]

use libfuzzer_sys::fuzz_target;
use wmgrid_detect::{read_matrices, write_matrices};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(ms) = read_matrices(text) {
            let refs: Vec<(&str, &_)> = ms.iter().map(|(n, m)| (n.as_str(), m)).collect();
            let back = read_matrices(&write_matrices("", &refs)).expect("written archive parses");
            assert_eq!(back.len(), ms.len());
        }
    }
});
