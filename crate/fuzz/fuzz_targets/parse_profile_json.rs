#![no_main]

use corposcope::profile::DatasetProfile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(p) = DatasetProfile::from_json(text) {
        assert_eq!(DatasetProfile::from_json(&p.to_json()).unwrap(), p);
    }
});
