//! Rectilinear viewports cut from an equirectangular panorama, including
//! one that straddles the longitude seam.
//!
//! ```text
//! cargo run --example viewport_extraction -- /tmp/views
//! ```

use std::path::PathBuf;

use foveaq::io::write_image;
use foveaq::projection::{extract_viewport, EquirectImage, ViewportSpec};
use foveaq::synthetic::equirect_chart;

fn main() -> foveaq::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "viewports".into()));
    let pano = EquirectImage::new(equirect_chart(512, 1)?)?;
    write_image(&out.join("panorama.png"), pano.image())?;
    for (name, yaw, pitch) in [("front", 0.0, 0.0), ("seam", -180.0, 0.0), ("up", 30.0, 60.0)] {
        let spec = ViewportSpec::with_fov(yaw, pitch, 96.0, 101.0, 320, 360)?;
        let view = extract_viewport(&pano, &spec)?.quantized();
        let path = out.join(format!("{name}.png"));
        write_image(&path, &view)?;
        println!("{name:>5}: yaw {yaw:>5} pitch {pitch:>4} -> {}", path.display());
    }
    Ok(())
}
