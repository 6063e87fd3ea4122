//! Independent reimplementations used as test oracles.

use foveaq::projection::ViewportSpec;
use foveaq::raster::{Image, Plane};
use nalgebra::{Rotation3, Vector3};

/// Eccentricity recomputed from the device constants with no library help.
pub fn gear_vr_eccentricity(x: usize, y: usize) -> f64 {
    let pitch = 5.1 * 25.4 / (2560.0f64 * 2560.0 + 1440.0 * 1440.0).sqrt();
    let m = 62.0 / (62.0 - 25.0);
    let dx = (x as f64 - 639.5) * pitch * m;
    let dy = (y as f64 - 719.5) * pitch * m;
    ((dx * dx + dy * dy).sqrt() / (1550.0 / 37.0 + 10.0)).atan() * 180.0 / std::f64::consts::PI
}

pub fn retina_zone(e: f64) -> usize {
    match e {
        e if e < 2.5 => 0,
        e if e < 4.0 => 1,
        e if e < 9.0 => 2,
        e if e < 30.0 => 3,
        _ => 4,
    }
}

/// Brute-force extraction: rotate each camera ray with a rotation matrix,
/// convert to longitude/latitude and sample with wrapped bilinear weights.
pub fn extract(img: &Image, spec: &ViewportSpec) -> Image {
    let (ew, eh) = (img.width() as f64, img.height() as f64);
    let rot = Rotation3::from_axis_angle(&Vector3::y_axis(), spec.yaw_deg.to_radians())
        * Rotation3::from_axis_angle(&Vector3::x_axis(), -spec.pitch_deg.to_radians());
    let th = (spec.fov_h_deg.to_radians() * 0.5).tan();
    let tv = (spec.fov_v_deg.to_radians() * 0.5).tan();
    let planes = img
        .planes()
        .iter()
        .map(|p| {
            Plane::from_fn(spec.out_width, spec.out_height, |i, j| {
                let sx = ((i as f64 + 0.5) / spec.out_width as f64 * 2.0 - 1.0) * th;
                let sy = (1.0 - (j as f64 + 0.5) / spec.out_height as f64 * 2.0) * tv;
                let d = rot * Vector3::new(sx, sy, 1.0).normalize();
                let lon = d.x.atan2(d.z);
                let lat = d.y.asin();
                let x = (lon / std::f64::consts::TAU + 0.5) * ew - 0.5;
                let y = (0.5 - lat / std::f64::consts::PI) * eh - 0.5;
                let x0 = x.floor();
                let y0 = y.floor();
                let (ax, ay) = (x - x0, y - y0);
                let col = |c: f64| (c.rem_euclid(ew)) as usize;
                let row = |r: f64| r.max(0.0).min(eh - 1.0) as usize;
                let v = |c: f64, r: f64| p.get(col(c), row(r));
                (1.0 - ay) * ((1.0 - ax) * v(x0, y0) + ax * v(x0 + 1.0, y0))
                    + ay * ((1.0 - ax) * v(x0, y0 + 1.0) + ax * v(x0 + 1.0, y0 + 1.0))
            })
        })
        .collect();
    Image::new(planes, img.bit_depth()).unwrap()
}

/// True when `e` lies in an HQ (or LQ, with `want_hq = false`) zone and
/// outside every outward belt.
pub fn outside_belts(e: f64, hq: &[bool], bounds: &[f64], belt: f64, want_hq: bool) -> bool {
    let zone = bounds.iter().filter(|&&b| b <= e).count();
    if hq[zone] != want_hq {
        return false;
    }
    (1..hq.len()).all(|k| hq[k] == hq[k - 1] || !(bounds[k - 1] <= e && e < bounds[k - 1] + belt))
}
