#![no_main]

use corposcope::pca::PcaModel;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = PcaModel::from_json(text) {
        assert_eq!(PcaModel::from_json(&m.to_json()).unwrap(), m);
        let _ = m.normalized_scores();
    }
});
