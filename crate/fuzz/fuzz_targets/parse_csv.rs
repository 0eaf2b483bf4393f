#![no_main]

use corposcope::corpus::{parse_dataset, Format, Language, LoadOptions, TextSpec};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let opts = LoadOptions {
        format: Format::Csv,
        text_spec: TextSpec::Field("text".into()),
        id_field: Some("id".into()),
        language: Language::new("zh"),
        dataset_id: "fuzz".into(),
    };
    if let Ok(handle) = parse_dataset(data, &opts) {
        assert!(handle.samples.iter().all(|s| !s.text.trim().is_empty()));
    }
});
