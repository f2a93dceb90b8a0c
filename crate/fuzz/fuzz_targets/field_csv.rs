#![no_main]

use benard_cda::grid::{GridSpec, Location};
use benard_cda::io::{field_to_csv, read_field_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let [a, b, c, rest @ ..] = data else { return };
    let Ok(grid) = GridSpec::new(usize::from(a % 13) + 4, usize::from(b % 5) + 4, 2.0, 1.0) else { return };
    let loc = [Location::Center, Location::UFace, Location::VFace][usize::from(c % 3)];
    let Ok(text) = std::str::from_utf8(rest) else { return };
    if let Ok(field) = read_field_csv(text, &grid, loc) {
        let csv = field_to_csv(&field);
        let again = read_field_csv(&csv, &grid, loc).expect("written field parses");
        assert_eq!(field_to_csv(&again), csv);
    }
});
