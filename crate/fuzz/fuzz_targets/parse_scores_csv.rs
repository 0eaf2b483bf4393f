#![no_main]

use corposcope::analysis::{subset_delta, ScoreTable};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(table) = ScoreTable::parse_csv(data) {
        let _ = subset_delta(&table);
    }
});
