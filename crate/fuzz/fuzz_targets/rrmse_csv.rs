#![no_main]

use benard_cda::io::read_rrmse_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let _ = read_rrmse_csv(text);
});
