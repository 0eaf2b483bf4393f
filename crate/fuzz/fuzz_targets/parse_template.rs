#![no_main]

use corposcope::corpus::Template;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(source) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(t) = Template::parse(source) {
        let _ = t.render(|_| Some("value"));
        let _ = t.render(|_| None);
    }
});
