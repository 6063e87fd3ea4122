//! All ten quality scores for blurred copies of a viewport at increasing
//! blur strength.
//!
//! ```text
//! cargo run --release --example foveal_metrics
//! ```

use foveaq::geometry::{derive_virtual_geometry, DisplayGeometry};
use foveaq::metrics::{FoveationModel, MetricId, MetricSuite, ViewingContext};
use foveaq::stimulus::{gaussian_blur_image, DEFAULT_KERNEL_EXTENT};
use foveaq::synthetic::textured_viewport;

fn main() -> foveaq::Result<()> {
    // Headset optics on a quarter-size raster keeps this quick.
    let full = DisplayGeometry::gear_vr();
    let display = DisplayGeometry { width_px: 320, height_px: 360, ..full };
    let ctx = ViewingContext::centered(derive_virtual_geometry(&display)?);
    let suite = MetricSuite::new(&ctx, &FoveationModel::for_context(&ctx), 255.0)?;
    let reference = textured_viewport(320, 360, 3)?;

    print!("sigma");
    for m in MetricId::ALL {
        print!(" {:>8}", m.name());
    }
    println!();
    for sigma in [0.5, 1.0, 2.0, 4.0, 8.0] {
        let blurred = gaussian_blur_image(&reference, sigma, DEFAULT_KERNEL_EXTENT)?.quantized();
        let scores = suite.score_all(&MetricId::ALL, reference.plane(0), blurred.plane(0))?;
        print!("{sigma:>5}");
        for m in MetricId::ALL {
            print!(" {:>8.4}", scores[&m]);
        }
        println!();
    }
    Ok(())
}
