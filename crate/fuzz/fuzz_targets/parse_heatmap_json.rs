#![no_main]

use corposcope::analysis::Heatmap;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(h) = Heatmap::from_json(text) {
        let _ = h.to_csv();
        let _ = h.to_svg();
    }
});
