#![no_main]

use isinglearn::IsingModel;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(model) = IsingModel::from_json_str(text) {
            let back = IsingModel::from_json_str(&model.to_json()).expect("written model reads back");
            assert_eq!(back.p(), model.p());
        }
    }
});
