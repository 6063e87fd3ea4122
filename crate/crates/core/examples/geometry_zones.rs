//! Virtual-viewport geometry of a headset and the retina zones it induces.
//!
//! ```text
//! cargo run --example geometry_zones
//! ```

use foveaq::geometry::{derive_virtual_geometry, eccentricity_map, zone_map, DisplayGeometry, ZoneScheme};

fn main() -> foveaq::Result<()> {
    let vg = derive_virtual_geometry(&DisplayGeometry::gear_vr())?;
    println!("lens to virtual viewport: {:.4} mm", vg.lens_to_virtual_mm);
    println!("eye to virtual viewport:  {:.4} mm", vg.eye_to_virtual_mm);
    let (fh, fv) = vg.field_of_view_deg();
    println!("field of view: {fh:.2} x {fv:.2} deg");

    let em = eccentricity_map(&vg, vg.center())?;
    let scheme = ZoneScheme::retina();
    let zones = zone_map(&em, &scheme);
    let total = (vg.width_px * vg.height_px) as f64;
    for (k, n) in zones.counts().into_iter().enumerate() {
        let (lo, hi) = scheme.interval(k);
        println!("Z{}  [{lo:>4}, {hi:>4}) deg  {n:>8} px  {:6.3}%", k + 1, 100.0 * n as f64 / total);
    }
    println!("corner eccentricity: {:.2} deg", em.get(0, 0));
    Ok(())
}
