#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(plan) = floorplan_core::io::parse_floorplan(s) {
            // A parsed floorplan must be safe to render and re-serialize.
            let _ = floorplan_core::svg::render_svg(&plan);
            let _ = plan.wall_segments();
        }
    }
});
