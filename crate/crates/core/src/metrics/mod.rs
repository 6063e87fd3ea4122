//! Full-reference quality metrics on viewport pairs.
//!
//! Every metric works on luminance. Scores that diverge for identical
//! inputs (PSNR-like metrics) return `f64::INFINITY`.

mod csf;
mod foveation;
mod fwqi;
mod ssim;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{eccentricity_map, PixelCoord, VirtualGeometry};
use crate::raster::{Image, Plane};

pub use csf::{csf_filter, mannos_sakrison, score_fwsnr, score_wsnr};
pub use foveation::{cutoff_frequency, foveal_weight, foveal_weight_map, score_fpsnr, FoveationModel};
pub use fwqi::{haar2d, score_fwqi, FWQI_LEVELS};
pub use ssim::{
    block_ssim, combine_msssim, downsample2, msssim_terms, score_fssim, score_msssim, score_ssim,
    ssim_map, weighted_block_mean, FSSIM_BLOCK, MSSSIM_WEIGHTS, SSIM_WINDOW,
};

const REC601: [f64; 3] = [0.299, 0.587, 0.114];

/// Rec.601 luma for RGB; single-channel images pass through.
pub fn luminance(img: &Image) -> Result<Plane> {
    match img.channels() {
        1 => Ok(img.plane(0).clone()),
        3 => {
            let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
            let data = r
                .data()
                .iter()
                .zip(g.data())
                .zip(b.data())
                .map(|((&r, &g), &b)| REC601[0] * r + REC601[1] * g + REC601[2] * b)
                .collect();
            Plane::from_vec(r.width(), r.height(), data)
        }
        n => Err(Error::Channels(n)),
    }
}

pub fn score_mse(reference: &Plane, distorted: &Plane) -> Result<f64> {
    reference.check_dims(distorted)?;
    let sum: f64 = reference
        .data()
        .iter()
        .zip(distorted.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / reference.len() as f64)
}

/// `10 log10(MAX^2 / mse)`, `+inf` for a zero error.
pub fn psnr_from_mse(mse: f64, max_value: f64) -> f64 {
    if mse <= 0.0 {
        f64::INFINITY
    } else {
        10.0 * (max_value * max_value / mse).log10()
    }
}

pub fn score_vpsnr(reference: &Plane, distorted: &Plane, max_value: f64) -> Result<f64> {
    Ok(psnr_from_mse(score_mse(reference, distorted)?, max_value))
}

/// Where the viewer looks on the virtual viewport and how large it is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewingContext {
    pub geometry: VirtualGeometry,
    pub foveation: PixelCoord,
}

impl ViewingContext {
    pub fn centered(geometry: VirtualGeometry) -> Self {
        ViewingContext {
            geometry,
            foveation: geometry.center(),
        }
    }

    /// Visual angle per pixel (x, y), uniform over the raster.
    pub fn degrees_per_pixel(&self) -> (f64, f64) {
        self.geometry.degrees_per_pixel()
    }
}

/// A displayed viewport with the viewing context foveal metrics need.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewportImage {
    pub image: Image,
    pub context: Option<ViewingContext>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MetricId {
    Mse,
    Vpsnr,
    Ssim,
    MsSsim,
    Uqi,
    Wsnr,
    Fpsnr,
    Fwsnr,
    Fssim,
    Fwqi,
}

impl MetricId {
    pub const ALL: [MetricId; 10] = [
        MetricId::Mse,
        MetricId::Vpsnr,
        MetricId::Ssim,
        MetricId::MsSsim,
        MetricId::Uqi,
        MetricId::Wsnr,
        MetricId::Fpsnr,
        MetricId::Fwsnr,
        MetricId::Fssim,
        MetricId::Fwqi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricId::Mse => "MSE",
            MetricId::Vpsnr => "VPSNR",
            MetricId::Ssim => "SSIM",
            MetricId::MsSsim => "MS-SSIM",
            MetricId::Uqi => "UQI",
            MetricId::Wsnr => "WSNR",
            MetricId::Fpsnr => "FPSNR",
            MetricId::Fwsnr => "FWSNR",
            MetricId::Fssim => "FSSIM",
            MetricId::Fwqi => "FWQI",
        }
    }

    /// True when larger scores mean worse quality.
    pub fn lower_is_better(self) -> bool {
        self == MetricId::Mse
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricId::ALL
            .iter()
            .copied()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown metric {s:?}")))
    }
}

/// Per-geometry state shared by all metric evaluations on one raster size.
#[derive(Debug, Clone)]
pub struct MetricSuite {
    max_value: f64,
    degrees_per_pixel: (f64, f64),
    foveal_weights: Plane,
}

impl MetricSuite {
    pub fn new(context: &ViewingContext, model: &FoveationModel, max_value: f64) -> Result<Self> {
        let em = eccentricity_map(&context.geometry, context.foveation)?;
        Ok(MetricSuite {
            max_value,
            degrees_per_pixel: context.degrees_per_pixel(),
            foveal_weights: foveal_weight_map(&em, model),
        })
    }

    pub fn foveal_weights(&self) -> &Plane {
        &self.foveal_weights
    }

    pub fn score(&self, metric: MetricId, reference: &Plane, distorted: &Plane) -> Result<f64> {
        let max = self.max_value;
        let w = &self.foveal_weights;
        let dpp = self.degrees_per_pixel;
        reference.check_dims(w)?;
        match metric {
            MetricId::Mse => score_mse(reference, distorted),
            MetricId::Vpsnr => score_vpsnr(reference, distorted, max),
            MetricId::Ssim => score_ssim(reference, distorted, max, false),
            MetricId::MsSsim => score_msssim(reference, distorted, max),
            MetricId::Uqi => score_ssim(reference, distorted, max, true),
            MetricId::Wsnr => score_wsnr(reference, distorted, dpp),
            MetricId::Fpsnr => score_fpsnr(reference, distorted, w, max),
            MetricId::Fwsnr => score_fwsnr(reference, distorted, w, dpp),
            MetricId::Fssim => score_fssim(reference, distorted, w, max),
            MetricId::Fwqi => score_fwqi(reference, distorted, w, dpp),
        }
    }

    pub fn score_all(
        &self,
        metrics: &[MetricId],
        reference: &Plane,
        distorted: &Plane,
    ) -> Result<BTreeMap<MetricId, f64>> {
        metrics
            .iter()
            .map(|&m| Ok((m, self.score(m, reference, distorted)?)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn luminance_weights() {
        let rgb = |r: f64, g: f64, b: f64| {
            Image::new(
                vec![Plane::filled(1, 1, r), Plane::filled(1, 1, g), Plane::filled(1, 1, b)],
                8,
            )
            .unwrap()
        };
        assert_relative_eq!(luminance(&rgb(255.0, 255.0, 255.0)).unwrap().get(0, 0), 255.0, epsilon = 1e-12);
        assert_relative_eq!(luminance(&rgb(255.0, 0.0, 0.0)).unwrap().get(0, 0), 76.245, epsilon = 1e-12);
        let gray = Image::gray(Plane::filled(2, 2, 9.0), 8).unwrap();
        assert_eq!(luminance(&gray).unwrap(), Plane::filled(2, 2, 9.0));
        let two = Image::new(vec![Plane::zeros(1, 1), Plane::zeros(1, 1)], 8).unwrap();
        assert!(matches!(luminance(&two), Err(Error::Channels(2))));
    }

    #[test]
    fn mse_and_vpsnr_goldens() {
        let a = Plane::from_fn(8, 8, |x, y| (x * 20 + y) as f64);
        assert_eq!(score_mse(&a, &a).unwrap(), 0.0);
        assert_eq!(score_vpsnr(&a, &a, 255.0).unwrap(), f64::INFINITY);
        let b = a.map(|v| v + 16.0);
        assert_eq!(score_mse(&a, &b).unwrap(), 256.0);
        assert_relative_eq!(
            score_vpsnr(&a, &b, 255.0).unwrap(),
            10.0 * (65025.0f64 / 256.0).log10(),
            epsilon = 1e-12
        );
        assert!((score_vpsnr(&a, &b, 255.0).unwrap() - 24.05).abs() < 0.005);
        let c = Plane::from_fn(6, 6, |x, y| if (x + y) % 2 == 0 { 0.0 } else { 255.0 });
        let d = c.map(|v| 255.0 - v);
        assert_eq!(score_mse(&c, &d).unwrap(), 65025.0);
        assert!(score_mse(&a, &c).is_err());
    }

    #[test]
    fn metric_names_round_trip() {
        for m in MetricId::ALL {
            assert_eq!(m.name().parse::<MetricId>().unwrap(), m);
        }
        assert!("VIF".parse::<MetricId>().is_err());
    }
}
