#![no_main]

use isinglearn::experiment::{read_records, summarize};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = read_records(data) {
        let _ = summarize(&records);
    }
});
