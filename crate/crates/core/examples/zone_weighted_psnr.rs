//! Zone-weighted PSNR of one distorted viewport under several weightings.
//! Area-proportional weights reproduce plain PSNR.
//!
//! ```text
//! cargo run --example zone_weighted_psnr
//! ```

use foveaq::geometry::{derive_virtual_geometry, eccentricity_map, zone_map, DisplayGeometry, ZoneScheme};
use foveaq::metrics::score_vpsnr;
use foveaq::stimulus::{generate_stimulus, PatternId, QualityPattern, StimulusSpec};
use foveaq::synthetic::textured_viewport;
use foveaq::zwf::{zone_mse, zwf_score, ZoneWeights};

fn main() -> foveaq::Result<()> {
    let full = DisplayGeometry::gear_vr();
    let display = DisplayGeometry { width_px: 640, height_px: 720, ..full };
    let vg = derive_virtual_geometry(&display)?;
    let em = eccentricity_map(&vg, vg.center())?;
    let scheme = ZoneScheme::retina();
    let source = textured_viewport(640, 720, 11)?;
    let spec = StimulusSpec {
        source_id: "tex".into(),
        pattern: QualityPattern::standard(PatternId::P2),
        sigma: 8.0,
        kernel_extent: 50,
        belt_width_deg: 5.0,
    };
    let distorted = generate_stimulus(&source, &spec, &em, &scheme)?;
    let mse = zone_mse(source.plane(0), distorted.plane(0), &zone_map(&em, &scheme))?;
    let per_zone: Vec<String> = mse.mse.iter().map(|m| m.map_or("-".into(), |v| format!("{v:.2}"))).collect();
    println!("zone MSE: {}", per_zone.join(", "));

    let weightings = [
        ("area-proportional", ZoneWeights::proportional(&mse.pixel_counts)?),
        ("uniform", ZoneWeights::uniform(5)),
        ("fovea-heavy", ZoneWeights::new(vec![0.728, 0.088, 0.088, 0.048, 0.048])?),
        ("periphery-heavy", ZoneWeights::new(vec![0.05, 0.05, 0.1, 0.3, 0.5])?),
    ];
    for (name, w) in &weightings {
        println!("{name:>17}: ZWF {:.3} dB", zwf_score(&mse, w, 255.0)?);
    }
    println!("{:>17}: {:.3} dB", "PSNR", score_vpsnr(source.plane(0), distorted.plane(0), 255.0)?);
    Ok(())
}
