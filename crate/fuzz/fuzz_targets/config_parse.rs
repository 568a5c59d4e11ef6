#![no_main]

use libfuzzer_sys::fuzz_target;
use ratchet_cli::parse_config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = parse_config(text) {
        let canonical = cfg.to_string();
        let again = parse_config(&canonical).expect("canonical form must parse");
        assert_eq!(again, cfg);
        assert_eq!(again.to_string(), canonical);
    }
});
