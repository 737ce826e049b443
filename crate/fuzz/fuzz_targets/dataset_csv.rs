#![no_main]

use isinglearn::Dataset;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(ds) = Dataset::read_csv(data) {
        let mut out = Vec::new();
        ds.write_csv(&mut out).expect("write to memory");
        assert_eq!(Dataset::read_csv(out.as_slice()).expect("written dataset reads back"), ds);
    }
});
