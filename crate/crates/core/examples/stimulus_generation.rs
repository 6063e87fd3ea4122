//! Foveated stimuli: every quality pattern applied to one viewport, with
//! per-zone MSE against the source.
//!
//! ```text
//! cargo run --release --example stimulus_generation -- /tmp/stimuli
//! ```

use std::path::PathBuf;

use foveaq::geometry::{derive_virtual_geometry, eccentricity_map, zone_map, DisplayGeometry, ZoneScheme};
use foveaq::io::write_image;
use foveaq::stimulus::{
    generate_stimulus, PatternId, QualityPattern, StimulusSpec, DEFAULT_BELT_WIDTH_DEG, DEFAULT_KERNEL_EXTENT,
};
use foveaq::synthetic::textured_viewport;
use foveaq::zwf::zone_mse;

fn main() -> foveaq::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "stimuli".into()));
    let vg = derive_virtual_geometry(&DisplayGeometry::gear_vr())?;
    let em = eccentricity_map(&vg, vg.center())?;
    let scheme = ZoneScheme::retina();
    let zones = zone_map(&em, &scheme);
    let source = textured_viewport(vg.width_px, vg.height_px, 7)?;

    for id in PatternId::ALL {
        let spec = StimulusSpec {
            source_id: "tex".into(),
            pattern: QualityPattern::standard(id),
            sigma: 6.0,
            kernel_extent: DEFAULT_KERNEL_EXTENT,
            belt_width_deg: DEFAULT_BELT_WIDTH_DEG,
        };
        let stim = generate_stimulus(&source, &spec, &em, &scheme)?;
        let mse = zone_mse(source.plane(0), stim.plane(0), &zones)?;
        write_image(&out.join(format!("{}.png", spec.stimulus_id())), &stim)?;
        let per_zone: Vec<String> = mse.mse.iter().map(|m| m.map_or("      -".into(), |v| format!("{v:7.2}"))).collect();
        println!("{} {:?}  zone MSE {}", spec.stimulus_id(), spec.pattern.scenario(), per_zone.join(" "));
    }
    Ok(())
}
