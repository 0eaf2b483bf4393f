#![no_main]

use corposcope::semmetrics::decode_response;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&n, body)) = data.split_first() else {
        return;
    };
    if let Ok((dim, vectors)) = decode_response(body, n as usize % 8) {
        assert!(vectors.iter().all(|v| v.len() == dim));
    }
});
