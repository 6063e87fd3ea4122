//! CSF-weighted signal-to-noise ratios.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::Result;
use crate::raster::Plane;

/// Mannos–Sakrison contrast sensitivity at `f` cycles per degree.
pub fn mannos_sakrison(f: f64) -> f64 {
    2.6 * (0.0192 + 0.114 * f) * (-(0.114 * f).powf(1.1)).exp()
}

/// Signed frequency index of DFT bin `k` out of `n`.
#[inline]
fn signed_bin(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

/// CSF gain of every DFT bin of a `w x h` raster.
pub fn csf_filter(w: usize, h: usize, degrees_per_pixel: (f64, f64)) -> Plane {
    Plane::from_fn(w, h, |u, v| {
        let fx = signed_bin(u, w) / w as f64 / degrees_per_pixel.0;
        let fy = signed_bin(v, h) / h as f64 / degrees_per_pixel.1;
        mannos_sakrison(fx.hypot(fy))
    })
}

fn fft2(data: &mut [Complex64], w: usize, h: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let (row_fft, col_fft) = if inverse {
        (planner.plan_fft_inverse(w), planner.plan_fft_inverse(h))
    } else {
        (planner.plan_fft_forward(w), planner.plan_fft_forward(h))
    };
    for row in data.chunks_exact_mut(w) {
        row_fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); h];
    for x in 0..w {
        for y in 0..h {
            col[y] = data[y * w + x];
        }
        col_fft.process(&mut col);
        for y in 0..h {
            data[y * w + x] = col[y];
        }
    }
    if inverse {
        let n = (w * h) as f64;
        data.iter_mut().for_each(|c| *c /= n);
    }
}

fn spectrum(p: &Plane) -> Vec<Complex64> {
    let mut d: Vec<Complex64> = p.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&mut d, p.width(), p.height(), false);
    d
}

/// Signal and error spectra, each already multiplied by the CSF.
fn weighted_spectra(
    reference: &Plane,
    distorted: &Plane,
    dpp: (f64, f64),
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    reference.check_dims(distorted)?;
    let (w, h) = (reference.width(), reference.height());
    let err = Plane::from_vec(
        w,
        h,
        reference
            .data()
            .iter()
            .zip(distorted.data())
            .map(|(a, b)| a - b)
            .collect(),
    )?;
    let a = csf_filter(w, h, dpp);
    let mut s = spectrum(reference);
    let mut e = spectrum(&err);
    for ((sv, ev), &g) in s.iter_mut().zip(e.iter_mut()).zip(a.data()) {
        *sv *= g;
        *ev *= g;
    }
    Ok((s, e))
}

fn ratio_db(signal: f64, noise: f64) -> f64 {
    if noise <= 0.0 {
        f64::INFINITY
    } else {
        10.0 * (signal / noise).log10()
    }
}

/// `10 log10(sum |S A|^2 / sum |E A|^2)` over all DFT bins.
pub fn score_wsnr(reference: &Plane, distorted: &Plane, degrees_per_pixel: (f64, f64)) -> Result<f64> {
    let (s, e) = weighted_spectra(reference, distorted, degrees_per_pixel)?;
    let ps: f64 = s.iter().map(|c| c.norm_sqr()).sum();
    let pe: f64 = e.iter().map(|c| c.norm_sqr()).sum();
    Ok(ratio_db(ps, pe))
}

/// CSF-filter signal and error, then compare their foveally weighted
/// spatial energies.
pub fn score_fwsnr(
    reference: &Plane,
    distorted: &Plane,
    weights: &Plane,
    degrees_per_pixel: (f64, f64),
) -> Result<f64> {
    reference.check_dims(weights)?;
    let (w, h) = (reference.width(), reference.height());
    let (mut s, mut e) = weighted_spectra(reference, distorted, degrees_per_pixel)?;
    fft2(&mut s, w, h, true);
    fft2(&mut e, w, h, true);
    let mut ps = 0.0;
    let mut pe = 0.0;
    for ((sv, ev), &wt) in s.iter().zip(&e).zip(weights.data()) {
        ps += wt * sv.re * sv.re;
        pe += wt * ev.re * ev.re;
    }
    Ok(ratio_db(ps, pe))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn csf_shape() {
        assert_relative_eq!(mannos_sakrison(0.0), 2.6 * 0.0192, epsilon = 1e-15);
        // Peak near 8 cycles/degree.
        let peak = (1..400)
            .map(|i| i as f64 * 0.1)
            .max_by(|a, b| mannos_sakrison(*a).total_cmp(&mannos_sakrison(*b)))
            .unwrap();
        assert!((7.0..9.5).contains(&peak), "peak at {peak}");
        assert!(mannos_sakrison(60.0) < 0.05);
    }

    #[test]
    fn fft_round_trip() {
        let p = Plane::from_fn(6, 5, |x, y| (x * 7 + y * 3) as f64 % 11.0);
        let mut d = spectrum(&p);
        fft2(&mut d, 6, 5, true);
        for (c, &v) in d.iter().zip(p.data()) {
            assert!((c.re - v).abs() < 1e-12 && c.im.abs() < 1e-12);
        }
    }

    #[test]
    fn scaled_error_cancels_weights() {
        let r = Plane::from_fn(16, 12, |x, y| ((x * 13 + y * 29) % 97) as f64);
        for c in [0.1, 0.5, 2.0] {
            let d = r.map(|v| v * (1.0 - c));
            let got = score_wsnr(&r, &d, (0.08, 0.08)).unwrap();
            assert_relative_eq!(got, -20.0 * f64::log10(c), epsilon = 1e-9);
        }
        assert_eq!(score_wsnr(&r, &r, (0.08, 0.08)).unwrap(), f64::INFINITY);
    }
}
