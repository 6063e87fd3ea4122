//! Zone-masked MSE and the zone-weighted PSNR-like score (ZWF).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ZoneMap;
use crate::raster::Plane;

/// Tolerance on the unit-sum constraint of zone weights.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// Mean squared error inside each zone; `None` where a zone has no pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneMseVector {
    pub mse: Vec<Option<f64>>,
    pub pixel_counts: Vec<usize>,
}

impl ZoneMseVector {
    pub fn zone_count(&self) -> usize {
        self.mse.len()
    }

    /// Whole-raster MSE recovered from the per-zone values.
    pub fn global_mse(&self) -> f64 {
        let n: usize = self.pixel_counts.iter().sum();
        self.mse
            .iter()
            .zip(&self.pixel_counts)
            .map(|(m, &c)| m.unwrap_or(0.0) * c as f64)
            .sum::<f64>()
            / n as f64
    }
}

pub fn zone_mse(reference: &Plane, distorted: &Plane, zones: &ZoneMap) -> Result<ZoneMseVector> {
    reference.check_dims(distorted)?;
    reference.check_dims(zones.zones())?;
    let k = zones.zone_count();
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for ((a, b), &z) in reference
        .data()
        .iter()
        .zip(distorted.data())
        .zip(zones.zones().data())
    {
        sums[z as usize] += (a - b) * (a - b);
        counts[z as usize] += 1;
    }
    Ok(ZoneMseVector {
        mse: sums
            .iter()
            .zip(&counts)
            .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
            .collect(),
        pixel_counts: counts,
    })
}

/// Non-negative per-zone weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ZoneWeights(Vec<f64>);

impl ZoneWeights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidParameter("zone weights are empty".into()));
        }
        if w.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "zone weights must be finite and non-negative: {w:?}"
            )));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "zone weights sum to {sum}, not 1"
            )));
        }
        Ok(ZoneWeights(w))
    }

    pub fn uniform(k: usize) -> Self {
        ZoneWeights(vec![1.0 / k as f64; k])
    }

    /// Weights proportional to zone pixel counts; reproduces plain PSNR.
    pub fn proportional(counts: &[usize]) -> Result<Self> {
        let n: usize = counts.iter().sum();
        if n == 0 {
            return Err(Error::InvalidParameter("no pixels in any zone".into()));
        }
        Ok(ZoneWeights(
            counts.iter().map(|&c| c as f64 / n as f64).collect(),
        ))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for ZoneWeights {
    type Error = Error;

    fn try_from(w: Vec<f64>) -> Result<Self> {
        ZoneWeights::new(w)
    }
}

impl From<ZoneWeights> for Vec<f64> {
    fn from(w: ZoneWeights) -> Self {
        w.0
    }
}

/// `sum_k w_k * MSE_k`, rejecting positive weight on an empty zone.
pub fn weighted_mse(zm: &ZoneMseVector, w: &ZoneWeights) -> Result<f64> {
    if zm.zone_count() != w.len() {
        return Err(Error::Configuration(format!(
            "{} zone MSEs but {} weights",
            zm.zone_count(),
            w.len()
        )));
    }
    if zm.mse.iter().all(Option::is_none) {
        return Err(Error::Configuration("no zone has any pixels".into()));
    }
    let mut acc = 0.0;
    for (k, (m, &wk)) in zm.mse.iter().zip(w.as_slice()).enumerate() {
        match m {
            Some(m) => acc += wk * m,
            None if wk > 0.0 => {
                return Err(Error::Configuration(format!(
                    "zone Z{} is empty but has weight {wk}",
                    k + 1
                )))
            }
            None => {}
        }
    }
    Ok(acc)
}

/// `10 log10(MAX^2 / sum_k w_k MSE_k)` in dB; `+inf` when the sum is zero.
pub fn zwf_score(zm: &ZoneMseVector, w: &ZoneWeights, max_value: f64) -> Result<f64> {
    Ok(crate::metrics::psnr_from_mse(weighted_mse(zm, w)?, max_value))
}
