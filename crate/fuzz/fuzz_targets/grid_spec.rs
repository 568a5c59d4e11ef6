#![no_main]

use libfuzzer_sys::fuzz_target;
use ratchet_cli::grid::{GridSpec, MAX_GRID_POINTS};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(spec) = text.parse::<GridSpec>() else {
        return;
    };
    let n = spec.len();
    assert!((1..=MAX_GRID_POINTS + 1).contains(&n));
    let values = spec.values();
    assert_eq!(values.len(), n);
    assert!(values.iter().all(|x| x.is_finite()));
    if let GridSpec::Range { start, stop, step } = spec {
        assert!(values.windows(2).all(|w| w[1] >= w[0]));
        assert!(values[n - 1] <= stop + step * 1e-6 + stop.abs() * 1e-12);
        assert_eq!(values[0], start);
    }
    let again: GridSpec = spec.to_string().parse().expect("display must parse");
    assert_eq!(again, spec);
});
