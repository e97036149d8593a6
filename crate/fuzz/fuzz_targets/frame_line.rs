#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(frame) = floorplan_core::io::parse_frame_line(s) {
            // Accepted frames must survive a serialize and re-parse loop.
            let line = floorplan_core::io::frame_to_json_line(&frame);
            floorplan_core::io::parse_frame_line(&line)
                .expect("serialized frame must parse");
        }
    }
});
