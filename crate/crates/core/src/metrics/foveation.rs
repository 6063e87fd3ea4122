//! Eccentricity-dependent cutoff frequency and the foveal weighting built on it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::EccentricityMap;
use crate::raster::Plane;

use super::ViewingContext;

/// Contrast-threshold model of the foveated visual system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoveationModel {
    /// Spatial frequency decay constant.
    pub alpha: f64,
    /// Half-resolution eccentricity in degrees.
    pub e2_halfres: f64,
    /// Minimal contrast threshold.
    pub ct0: f64,
    /// Highest frequency the display can show, cycles per degree.
    pub display_nyquist: f64,
}

impl FoveationModel {
    pub fn new(alpha: f64, e2_halfres: f64, ct0: f64, display_nyquist: f64) -> Result<Self> {
        let m = FoveationModel {
            alpha,
            e2_halfres,
            ct0,
            display_nyquist,
        };
        if !(alpha > 0.0 && e2_halfres > 0.0 && ct0 > 0.0 && ct0 < 1.0 && display_nyquist > 0.0) {
            return Err(Error::InvalidParameter(format!("invalid foveation model {m:?}")));
        }
        Ok(m)
    }

    /// Default constants with the Nyquist limit of the given display.
    pub fn for_context(ctx: &ViewingContext) -> Self {
        let (dx, dy) = ctx.degrees_per_pixel();
        FoveationModel {
            display_nyquist: 0.5 / dx.max(dy),
            ..Self::default()
        }
    }

    pub fn unclamped_cutoff(&self, e: f64) -> f64 {
        self.e2_halfres * (1.0 / self.ct0).ln() / (self.alpha * (e + self.e2_halfres))
    }
}

impl Default for FoveationModel {
    fn default() -> Self {
        FoveationModel {
            alpha: 0.106,
            e2_halfres: 2.3,
            ct0: 1.0 / 64.0,
            display_nyquist: f64::INFINITY,
        }
    }
}

/// Cutoff frequency (cycles/degree) at eccentricity `e`, capped at the
/// display Nyquist frequency.
pub fn cutoff_frequency(e: f64, model: &FoveationModel) -> Result<f64> {
    if e.is_nan() || e < 0.0 {
        return Err(Error::Domain(format!("eccentricity {e} is negative")));
    }
    Ok(model.unclamped_cutoff(e).min(model.display_nyquist))
}

/// Cutoff relative to the fovea, `e2 / (e + e2)`.
#[inline]
pub fn foveal_weight(e: f64, model: &FoveationModel) -> f64 {
    model.e2_halfres / (e + model.e2_halfres)
}

pub fn foveal_weight_map(em: &EccentricityMap, model: &FoveationModel) -> Plane {
    em.degrees().map(|e| foveal_weight(e, model))
}

/// PSNR over the foveally weighted mean squared error.
pub fn score_fpsnr(reference: &Plane, distorted: &Plane, weights: &Plane, max_value: f64) -> Result<f64> {
    reference.check_dims(distorted)?;
    reference.check_dims(weights)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for ((a, b), w) in reference.data().iter().zip(distorted.data()).zip(weights.data()) {
        num += w * (a - b) * (a - b);
        den += w;
    }
    Ok(super::psnr_from_mse(num / den, max_value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cutoff_goldens() {
        let m = FoveationModel::default();
        let f0 = cutoff_frequency(0.0, &m).unwrap();
        assert_relative_eq!(f0, 64f64.ln() / 0.106, epsilon = 1e-12);
        assert!((f0 - 39.24).abs() < 0.01);
        assert_relative_eq!(cutoff_frequency(2.3, &m).unwrap(), f0 / 2.0, epsilon = 1e-12);
        assert!(cutoff_frequency(1e9, &m).unwrap() < 1e-6);
        assert!(cutoff_frequency(-1.0, &m).is_err());
        let clamped = FoveationModel {
            display_nyquist: 10.0,
            ..m
        };
        assert_eq!(cutoff_frequency(0.0, &clamped).unwrap(), 10.0);
    }

    #[test]
    fn weight_goldens() {
        let m = FoveationModel::default();
        assert_eq!(foveal_weight(0.0, &m), 1.0);
        assert_relative_eq!(foveal_weight(2.3, &m), 0.5, epsilon = 1e-15);
        assert_relative_eq!(foveal_weight(6.9, &m), 0.25, epsilon = 1e-15);
        assert!(foveal_weight(10.0, &m) < foveal_weight(9.99, &m));
    }

    #[test]
    fn fpsnr_two_pixel_toy() {
        let r = Plane::from_vec(2, 1, vec![0.0, 0.0]).unwrap();
        let d = Plane::from_vec(2, 1, vec![10.0, 20.0]).unwrap();
        let w = Plane::from_vec(2, 1, vec![1.0, 0.5]).unwrap();
        let got = score_fpsnr(&r, &d, &w, 255.0).unwrap();
        assert_relative_eq!(got, 10.0 * (65025.0f64 / 200.0).log10(), epsilon = 1e-12);
        assert!((got - 25.12).abs() < 0.005);
        assert_eq!(score_fpsnr(&r, &r, &w, 255.0).unwrap(), f64::INFINITY);
    }
}
