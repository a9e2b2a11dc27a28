#![no_main]

use libfuzzer_sys::fuzz_target;
use proxgroup::ingest::{tile_windows, Dims, TileSpec};

// Input: "<tile>;<stride>", e.g. "8x8;4x4". Round-trips the parsed dims and
// checks every window lies inside a small fixed image.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let (tile, stride) = text.split_once(';').unwrap_or((text, text));
    let (Ok(tile), Ok(stride)) = (tile.parse::<Dims>(), stride.parse::<Dims>()) else {
        return;
    };
    assert_eq!(tile.to_string().parse::<Dims>().unwrap(), tile);
    let spec = TileSpec::new(tile, stride);
    if let Ok(windows) = tile_windows(64, 48, &spec) {
        for w in windows {
            assert!(w.x + w.width <= 64 && w.y + w.height <= 48);
        }
    }
});
