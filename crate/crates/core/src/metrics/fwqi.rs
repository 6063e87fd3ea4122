//! Foveated wavelet quality index on an orthonormal Haar pyramid.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::raster::Plane;

use super::csf::mannos_sakrison;

/// Decomposition depth.
pub const FWQI_LEVELS: usize = 4;

fn haar_1d(buf: &mut [f64], tmp: &mut [f64]) {
    let half = buf.len() / 2;
    for i in 0..half {
        let (a, b) = (buf[2 * i], buf[2 * i + 1]);
        tmp[i] = (a + b) * FRAC_1_SQRT_2;
        tmp[half + i] = (a - b) * FRAC_1_SQRT_2;
    }
    buf.copy_from_slice(&tmp[..buf.len()]);
}

/// Multi-level 2-D Haar transform in Mallat layout: after each level the
/// low-pass quadrant sits top-left and is decomposed again. Both sides
/// must be divisible by `2^levels`.
pub fn haar2d(p: &Plane, levels: usize) -> Result<Plane> {
    let (w, h) = (p.width(), p.height());
    let m = 1usize << levels;
    if w % m != 0 || h % m != 0 || w == 0 || h == 0 {
        return Err(Error::InvalidParameter(format!(
            "{w}x{h} is not divisible by {m} for a {levels}-level transform"
        )));
    }
    let mut out = p.clone();
    let mut tmp = vec![0.0; w.max(h)];
    let mut col = vec![0.0; h];
    let (mut cw, mut ch) = (w, h);
    for _ in 0..levels {
        let data = out.data_mut();
        for y in 0..ch {
            haar_1d(&mut data[y * w..y * w + cw], &mut tmp);
        }
        for x in 0..cw {
            for y in 0..ch {
                col[y] = data[y * w + x];
            }
            haar_1d(&mut col[..ch], &mut tmp);
            for y in 0..ch {
                data[y * w + x] = col[y];
            }
        }
        cw /= 2;
        ch /= 2;
    }
    Ok(out)
}

/// Subband of a Mallat-layout coefficient: (level, is_x_high, is_y_high),
/// level 1 finest; the final low-pass band reports level `levels`.
fn subband_of(x: usize, y: usize, w: usize, h: usize, levels: usize) -> (usize, bool, bool) {
    for level in 1..=levels {
        let (hw, hh) = (w >> level, h >> level);
        if x >= hw || y >= hh {
            return (level, x >= hw, y >= hh);
        }
    }
    (levels, false, false)
}

/// Per-coefficient sensitivity weight: foveal weight at the center of the
/// coefficient's spatial support times the CSF at the subband's center
/// frequency.
fn coefficient_weights(weights: &Plane, levels: usize, dpp: (f64, f64)) -> Plane {
    let (w, h) = (weights.width(), weights.height());
    Plane::from_fn(w, h, |x, y| {
        let (level, xh, yh) = subband_of(x, y, w, h, levels);
        let scale = 1usize << level;
        let (hw, hh) = (w / scale, h / scale);
        let (ix, iy) = (x % hw.max(1), y % hh.max(1));
        // Center of the support block sits between its two middle pixels.
        let cx = ix * scale + scale / 2;
        let cy = iy * scale + scale / 2;
        let fov = (weights.get(cx - 1, cy - 1)
            + weights.get(cx, cy - 1)
            + weights.get(cx - 1, cy)
            + weights.get(cx, cy))
            / 4.0;
        let band = |high: bool| if high { 0.375 } else { 0.125 };
        let octave = 1.0 / (1usize << (level - 1)) as f64;
        let fx = band(xh) * octave / dpp.0;
        let fy = band(yh) * octave / dpp.1;
        fov * mannos_sakrison(fx.hypot(fy))
    })
}

fn padded_dims(w: usize, h: usize, levels: usize) -> (usize, usize) {
    let m = 1usize << levels;
    (w.div_ceil(m) * m, h.div_ceil(m) * m)
}

/// `1 / (1 + NWE)` with `NWE = sqrt(sum w (c_r - c_d)^2 / sum w c_r^2)`.
/// Inputs are reflection-padded to a multiple of `2^4`.
pub fn score_fwqi(
    reference: &Plane,
    distorted: &Plane,
    weights: &Plane,
    degrees_per_pixel: (f64, f64),
) -> Result<f64> {
    reference.check_dims(distorted)?;
    reference.check_dims(weights)?;
    let (pw, ph) = padded_dims(reference.width(), reference.height(), FWQI_LEVELS);
    let cr = haar2d(&reference.padded_reflect(pw, ph), FWQI_LEVELS)?;
    let cd = haar2d(&distorted.padded_reflect(pw, ph), FWQI_LEVELS)?;
    let cw = coefficient_weights(&weights.padded_reflect(pw, ph), FWQI_LEVELS, degrees_per_pixel);
    let mut num = 0.0;
    let mut den = 0.0;
    for ((r, d), w) in cr.data().iter().zip(cd.data()).zip(cw.data()) {
        num += w * (r - d) * (r - d);
        den += w * r * r;
    }
    if den <= 0.0 {
        return Err(Error::UndefinedReference(
            "reference has no weighted wavelet energy".into(),
        ));
    }
    Ok(1.0 / (1.0 + (num / den).sqrt()))
}
