#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(cfg) = floorplan_core::config::parse_config(s) {
            // Accepted configs survive a render and re-parse round trip.
            let rendered = floorplan_core::config::render_config(&cfg);
            let again = floorplan_core::config::parse_config(&rendered)
                .expect("rendered config must parse");
            assert_eq!(cfg, again);
        }
    }
});
