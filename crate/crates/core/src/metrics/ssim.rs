//! SSIM family: SSIM / UQI, MS-SSIM and the block-weighted FSSIM.

use crate::error::{Error, Result};
use crate::raster::Plane;

/// Side of the Gaussian SSIM window.
pub const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

/// Per-scale exponents, finest first.
pub const MSSSIM_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];

/// Macroblock side used by FSSIM.
pub const FSSIM_BLOCK: usize = 8;

fn window() -> Vec<f64> {
    let r = (SSIM_WINDOW / 2) as f64;
    let mut k: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| {
            let d = i as f64 - r;
            (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()
        })
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable filtering keeping only positions where the window fits.
fn filter_valid(p: &Plane, k: &[f64]) -> Plane {
    let n = k.len();
    let (w, h) = (p.width(), p.height());
    let (ow, oh) = (w + 1 - n, h + 1 - n);
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        let row = p.row(y);
        for x in 0..ow {
            tmp[y * ow + x] = k.iter().zip(&row[x..x + n]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for (t, &kv) in k.iter().enumerate() {
            let src = &tmp[(y + t) * ow..(y + t + 1) * ow];
            for (o, &v) in out[y * ow..(y + 1) * ow].iter_mut().zip(src) {
                *o += kv * v;
            }
        }
    }
    Plane::from_vec(ow, oh, out).expect("valid dims")
}

/// `num / den` with the indeterminate `0/0` read as 1.
#[inline]
fn ratio_or_one(num: f64, den: f64, tiny: f64) -> f64 {
    if den.abs() <= tiny {
        1.0
    } else {
        num / den
    }
}

/// Local statistics comparison for one window.
#[derive(Debug, Clone, Copy)]
struct Stability {
    c1: f64,
    c2: f64,
    tiny: f64,
}

impl Stability {
    fn new(max_value: f64, uqi: bool) -> Self {
        if uqi {
            Stability {
                c1: 0.0,
                c2: 0.0,
                tiny: 1e-10 * max_value * max_value,
            }
        } else {
            Stability {
                c1: (K1 * max_value).powi(2),
                c2: (K2 * max_value).powi(2),
                tiny: 0.0,
            }
        }
    }

    /// Returns (luminance term, contrast-structure term).
    #[inline]
    fn terms(&self, mx: f64, my: f64, vx: f64, vy: f64, cxy: f64) -> (f64, f64) {
        let vx = vx.max(0.0);
        let vy = vy.max(0.0);
        let l = ratio_or_one(2.0 * mx * my + self.c1, mx * mx + my * my + self.c1, self.tiny);
        let cs = ratio_or_one(2.0 * cxy + self.c2, vx + vy + self.c2, self.tiny);
        (l, cs)
    }
}

/// Local (luminance, contrast-structure) maps over all valid window positions.
fn local_terms(x: &Plane, y: &Plane, max_value: f64, uqi: bool) -> Result<(Plane, Plane)> {
    x.check_dims(y)?;
    if x.width() < SSIM_WINDOW || x.height() < SSIM_WINDOW {
        return Err(Error::TooSmall(format!(
            "{}x{} image is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window",
            x.width(),
            x.height()
        )));
    }
    let k = window();
    let xx = Plane::from_vec(x.width(), x.height(), x.data().iter().map(|v| v * v).collect())?;
    let yy = Plane::from_vec(y.width(), y.height(), y.data().iter().map(|v| v * v).collect())?;
    let xy = Plane::from_vec(
        x.width(),
        x.height(),
        x.data().iter().zip(y.data()).map(|(a, b)| a * b).collect(),
    )?;
    let mx = filter_valid(x, &k);
    let my = filter_valid(y, &k);
    let sxx = filter_valid(&xx, &k);
    let syy = filter_valid(&yy, &k);
    let sxy = filter_valid(&xy, &k);
    let st = Stability::new(max_value, uqi);
    let n = mx.len();
    let mut l = Vec::with_capacity(n);
    let mut cs = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (mx.data()[i], my.data()[i]);
        let (li, ci) = st.terms(
            a,
            b,
            sxx.data()[i] - a * a,
            syy.data()[i] - b * b,
            sxy.data()[i] - a * b,
        );
        l.push(li);
        cs.push(ci);
    }
    Ok((
        Plane::from_vec(mx.width(), mx.height(), l)?,
        Plane::from_vec(mx.width(), mx.height(), cs)?,
    ))
}

/// Local SSIM (or UQI) map over valid window positions.
pub fn ssim_map(x: &Plane, y: &Plane, max_value: f64, uqi_mode: bool) -> Result<Plane> {
    let (l, cs) = local_terms(x, y, max_value, uqi_mode)?;
    Ok(Plane::from_vec(
        l.width(),
        l.height(),
        l.data().iter().zip(cs.data()).map(|(a, b)| a * b).collect(),
    )?)
}

/// Mean SSIM with an 11x11 Gaussian window (sigma 1.5, K1 = 0.01,
/// K2 = 0.03). `uqi_mode` drops both stabilizing constants.
pub fn score_ssim(x: &Plane, y: &Plane, max_value: f64, uqi_mode: bool) -> Result<f64> {
    Ok(ssim_map(x, y, max_value, uqi_mode)?.mean())
}

/// 2x2 box average followed by decimation.
pub fn downsample2(p: &Plane) -> Plane {
    let (w, h) = (p.width() / 2, p.height() / 2);
    Plane::from_fn(w, h, |x, y| {
        (p.get(2 * x, 2 * y)
            + p.get(2 * x + 1, 2 * y)
            + p.get(2 * x, 2 * y + 1)
            + p.get(2 * x + 1, 2 * y + 1))
            / 4.0
    })
}

/// Per-scale terms, finest first: mean contrast-structure for every scale
/// but the last, mean SSIM for the last.
pub fn msssim_terms(x: &Plane, y: &Plane, max_value: f64, scales: usize) -> Result<Vec<f64>> {
    x.check_dims(y)?;
    let need = SSIM_WINDOW << (scales.saturating_sub(1));
    if x.width() < need || x.height() < need {
        return Err(Error::TooSmall(format!(
            "{}x{} image cannot support {scales} dyadic scales (needs {need} px per side)",
            x.width(),
            x.height()
        )));
    }
    let mut terms = Vec::with_capacity(scales);
    let (mut a, mut b) = (x.clone(), y.clone());
    for s in 0..scales {
        let (l, cs) = local_terms(&a, &b, max_value, false)?;
        if s + 1 == scales {
            let ssim: f64 =
                l.data().iter().zip(cs.data()).map(|(p, q)| p * q).sum::<f64>() / l.len() as f64;
            terms.push(ssim);
        } else {
            terms.push(cs.mean());
            a = downsample2(&a);
            b = downsample2(&b);
        }
    }
    Ok(terms)
}

/// Weighted geometric combination of per-scale terms. Negative terms are
/// clamped to zero so the fractional powers stay real.
pub fn combine_msssim(terms: &[f64]) -> f64 {
    terms
        .iter()
        .zip(MSSSIM_WEIGHTS)
        .map(|(&t, w)| t.max(0.0).powf(w))
        .product()
}

pub fn score_msssim(x: &Plane, y: &Plane, max_value: f64) -> Result<f64> {
    Ok(combine_msssim(&msssim_terms(
        x,
        y,
        max_value,
        MSSSIM_WEIGHTS.len(),
    )?))
}

/// SSIM of every non-overlapping 8x8 macroblock from its own statistics.
/// Remainder rows and columns are dropped.
pub fn block_ssim(x: &Plane, y: &Plane, max_value: f64) -> Result<Plane> {
    x.check_dims(y)?;
    let (bw, bh) = (x.width() / FSSIM_BLOCK, x.height() / FSSIM_BLOCK);
    if bw == 0 || bh == 0 {
        return Err(Error::TooSmall(format!(
            "{}x{} image is smaller than one {FSSIM_BLOCK}x{FSSIM_BLOCK} block",
            x.width(),
            x.height()
        )));
    }
    let st = Stability::new(max_value, false);
    let n = (FSSIM_BLOCK * FSSIM_BLOCK) as f64;
    Ok(Plane::from_fn(bw, bh, |bx, by| {
        let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for j in 0..FSSIM_BLOCK {
            for i in 0..FSSIM_BLOCK {
                let a = x.get(bx * FSSIM_BLOCK + i, by * FSSIM_BLOCK + j);
                let b = y.get(bx * FSSIM_BLOCK + i, by * FSSIM_BLOCK + j);
                sx += a;
                sy += b;
                sxx += a * a;
                syy += b * b;
                sxy += a * b;
            }
        }
        let (mx, my) = (sx / n, sy / n);
        let (l, cs) = st.terms(mx, my, sxx / n - mx * mx, syy / n - my * my, sxy / n - mx * my);
        l * cs
    }))
}

/// `sum(w_b * s_b) / sum(w_b)`.
pub fn weighted_block_mean(scores: &[f64], weights: &[f64]) -> f64 {
    let num: f64 = scores.iter().zip(weights).map(|(s, w)| s * w).sum();
    let den: f64 = weights.iter().sum();
    num / den
}

/// Foveal weight at a block center: mean of the 2x2 central pixels.
fn block_center_weight(weights: &Plane, bx: usize, by: usize) -> f64 {
    let cx = bx * FSSIM_BLOCK + FSSIM_BLOCK / 2;
    let cy = by * FSSIM_BLOCK + FSSIM_BLOCK / 2;
    (weights.get(cx - 1, cy - 1) + weights.get(cx, cy - 1) + weights.get(cx - 1, cy) + weights.get(cx, cy))
        / 4.0
}

pub fn score_fssim(x: &Plane, y: &Plane, weights: &Plane, max_value: f64) -> Result<f64> {
    x.check_dims(weights)?;
    let blocks = block_ssim(x, y, max_value)?;
    let bw: Vec<f64> = (0..blocks.height())
        .flat_map(|by| (0..blocks.width()).map(move |bx| (bx, by)))
        .map(|(bx, by)| block_center_weight(weights, bx, by))
        .collect();
    Ok(weighted_block_mean(blocks.data(), &bw))
}
