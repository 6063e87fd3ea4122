//! Non-uniform-quality stimuli: zoned Gaussian blur blended with the
//! source through linear transition belts.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{EccentricityMap, ZoneScheme};
use crate::raster::{reflect_index as reflect, Image, Plane};

/// Nominal "filter size" of the blur kernels.
pub const DEFAULT_KERNEL_EXTENT: usize = 50;
pub const DEFAULT_BELT_WIDTH_DEG: f64 = 5.0;
pub const SCENARIO1_SIGMAS: [f64; 4] = [2.0, 4.0, 8.0, 12.0];
pub const SCENARIO2_SIGMAS: [f64; 4] = [1.0, 2.0, 4.0, 6.0];

/// Center-higher (`S1`) or center-lower (`S2`) quality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scenario {
    S1,
    S2,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::S1 => "S1",
            Scenario::S2 => "S2",
        })
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "S1" => Ok(Scenario::S1),
            "S2" => Ok(Scenario::S2),
            other => Err(Error::InvalidParameter(format!("unknown scenario {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PatternId {
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
    P7,
    P8,
}

impl PatternId {
    pub const ALL: [PatternId; 8] = [
        PatternId::P1,
        PatternId::P2,
        PatternId::P3,
        PatternId::P4,
        PatternId::P5,
        PatternId::P6,
        PatternId::P7,
        PatternId::P8,
    ];

    fn ordinal(self) -> usize {
        self as usize + 1
    }

    pub fn scenario(self) -> Scenario {
        if self.ordinal() <= 4 {
            Scenario::S1
        } else {
            Scenario::S2
        }
    }
}

impl fmt::Display for PatternId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.ordinal())
    }
}

impl FromStr for PatternId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PatternId::ALL
            .iter()
            .copied()
            .find(|p| p.to_string() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown pattern {s:?}")))
    }
}

/// High/low quality assignment for each zone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QualityPattern {
    id: Option<PatternId>,
    scenario: Scenario,
    hq: Vec<bool>,
}

impl QualityPattern {
    /// Five-zone patterns: P1..P4 keep the first 1..4 zones sharp,
    /// P5..P8 keep the last 4..1 zones sharp.
    pub fn standard(id: PatternId) -> Self {
        let n = id.ordinal();
        let hq = (0..5)
            .map(|k| if n <= 4 { k < n } else { k >= n - 4 })
            .collect();
        QualityPattern {
            id: Some(id),
            scenario: id.scenario(),
            hq,
        }
    }

    pub fn custom(scenario: Scenario, hq: Vec<bool>) -> Result<Self> {
        if hq.is_empty() {
            return Err(Error::InvalidParameter("pattern needs at least one zone".into()));
        }
        Ok(QualityPattern {
            id: None,
            scenario,
            hq,
        })
    }

    pub fn id(&self) -> Option<PatternId> {
        self.id
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn hq_flags(&self) -> &[bool] {
        &self.hq
    }

    pub fn label(&self) -> String {
        match self.id {
            Some(id) => id.to_string(),
            None => self
                .hq
                .iter()
                .map(|&h| if h { 'H' } else { 'L' })
                .collect(),
        }
    }

    fn check_scheme(&self, scheme: &ZoneScheme) -> Result<()> {
        if self.hq.len() != scheme.zone_count() {
            return Err(Error::Configuration(format!(
                "pattern {} has {} zones but the scheme has {}",
                self.label(),
                self.hq.len(),
                scheme.zone_count()
            )));
        }
        Ok(())
    }
}

/// Normalized sampled Gaussian. An even `extent` is widened to the next odd
/// width so the kernel has a center tap.
pub fn gaussian_kernel(sigma: f64, extent: usize) -> Result<Vec<f64>> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Domain(format!("blur sigma must be positive, got {sigma}")));
    }
    let width = (extent.max(1)) | 1;
    let radius = (width / 2) as f64;
    let mut k: Vec<f64> = (0..width)
        .map(|i| {
            let d = i as f64 - radius;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    Ok(k)
}

fn convolve_rows(src: &Plane, kernel: &[f64]) -> Plane {
    let (w, h) = (src.width(), src.height());
    let r = (kernel.len() / 2) as isize;
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row_out)| {
        let row = src.row(y);
        for (x, o) in row_out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (t, &kv) in kernel.iter().enumerate() {
                let xi = x as isize + t as isize - r;
                acc += kv * row[reflect(xi, w)];
            }
            *o = acc;
        }
    });
    Plane::from_vec(w, h, out).expect("dims preserved")
}

fn convolve_cols(src: &Plane, kernel: &[f64]) -> Plane {
    let (w, h) = (src.width(), src.height());
    let r = (kernel.len() / 2) as isize;
    let data = src.data();
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row_out)| {
        for (t, &kv) in kernel.iter().enumerate() {
            let yi = reflect(y as isize + t as isize - r, h);
            let row = &data[yi * w..(yi + 1) * w];
            for (o, &v) in row_out.iter_mut().zip(row) {
                *o += kv * v;
            }
        }
    });
    Plane::from_vec(w, h, out).expect("dims preserved")
}

/// Separable convolution with [`gaussian_kernel`], reflecting at the borders.
pub fn gaussian_blur(plane: &Plane, sigma: f64, kernel_extent: usize) -> Result<Plane> {
    let k = gaussian_kernel(sigma, kernel_extent)?;
    Ok(convolve_cols(&convolve_rows(plane, &k), &k))
}

pub fn gaussian_blur_image(img: &Image, sigma: f64, kernel_extent: usize) -> Result<Image> {
    let k = gaussian_kernel(sigma, kernel_extent)?;
    Ok(img.map_planes(|p| convolve_cols(&convolve_rows(p, &k), &k)))
}

/// Source weight at eccentricity `e`: 1 in sharp zones, 0 in blurred ones,
/// and a linear ramp across the belt `[b, b + belt)` just outside every
/// boundary `b` where the quality switches. A belt is cut short at the next
/// switching boundary so the weight stays continuous.
pub fn blend_weight(e: f64, hq: &[bool], scheme: &ZoneScheme, belt_width: f64) -> f64 {
    let level = |k: usize| if hq[k] { 1.0 } else { 0.0 };
    let bounds = scheme.switch_boundaries();
    // Zone containing e.
    let zone = bounds.partition_point(|&b| b <= e);
    // Nearest switching boundary at or below e.
    let Some(start_zone) = (1..=zone).rev().find(|&k| hq[k] != hq[k - 1]) else {
        return level(zone);
    };
    let b = bounds[start_zone - 1];
    let next_switch = (start_zone + 1..hq.len())
        .find(|&k| hq[k] != hq[k - 1])
        .map(|k| bounds[k - 1])
        .unwrap_or(f64::INFINITY);
    let width = belt_width.min(next_switch - b);
    if width <= 0.0 || e >= b + width {
        return level(zone);
    }
    let (inner, outer) = (level(start_zone - 1), level(start_zone));
    inner + (outer - inner) * (e - b) / width
}

pub fn blend_weight_map(
    pattern: &QualityPattern,
    em: &EccentricityMap,
    scheme: &ZoneScheme,
    belt_width: f64,
) -> Result<Plane> {
    pattern.check_scheme(scheme)?;
    if !(belt_width >= 0.0 && belt_width.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "belt width must be non-negative, got {belt_width}"
        )));
    }
    Ok(em
        .degrees()
        .map(|e| blend_weight(e, pattern.hq_flags(), scheme, belt_width)))
}

/// `weight * source + (1 - weight) * blurred`, rounded onto the integer grid.
pub fn blend(source: &Image, blurred: &Image, weights: &Plane) -> Result<Image> {
    source.plane(0).check_dims(weights)?;
    source.plane(0).check_dims(blurred.plane(0))?;
    if source.channels() != blurred.channels() {
        return Err(Error::InvalidParameter("channel count mismatch".into()));
    }
    let planes = source
        .planes()
        .iter()
        .zip(blurred.planes())
        .map(|(s, b)| {
            let data = s
                .data()
                .iter()
                .zip(b.data())
                .zip(weights.data())
                .map(|((&s, &b), &w)| w * s + (1.0 - w) * b)
                .collect();
            Plane::from_vec(s.width(), s.height(), data)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Image::new(planes, source.bit_depth())?.quantized())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StimulusSpec {
    pub source_id: String,
    pub pattern: QualityPattern,
    pub sigma: f64,
    pub kernel_extent: usize,
    pub belt_width_deg: f64,
}

impl StimulusSpec {
    pub fn stimulus_id(&self) -> String {
        stimulus_id(&self.source_id, &self.pattern.label(), self.sigma)
    }
}

pub fn stimulus_id(source_id: &str, pattern: &str, sigma: f64) -> String {
    format!("{source_id}_{pattern}_s{sigma}")
}

pub fn generate_stimulus(
    source: &Image,
    spec: &StimulusSpec,
    em: &EccentricityMap,
    scheme: &ZoneScheme,
) -> Result<Image> {
    source.plane(0).check_dims(em.degrees())?;
    let weights = blend_weight_map(&spec.pattern, em, scheme, spec.belt_width_deg)?;
    let blurred = gaussian_blur_image(source, spec.sigma, spec.kernel_extent)?;
    blend(source, &blurred, &weights)
}

/// Manifest entry describing one generated stimulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusRecord {
    pub stimulus_id: String,
    pub source_id: String,
    pub pattern_id: String,
    pub scenario: Scenario,
    pub sigma: f64,
    pub belt_width: f64,
    pub kernel_extent: usize,
    pub geometry: String,
}

/// The cross product of sources, patterns and per-scenario blur levels.
#[derive(Debug, Clone, PartialEq)]
pub struct DatabasePlan {
    pub source_ids: Vec<String>,
    pub patterns: Vec<QualityPattern>,
    pub sigmas: BTreeMap<Scenario, Vec<f64>>,
    pub kernel_extent: usize,
    pub belt_width_deg: f64,
}

impl DatabasePlan {
    /// All eight standard patterns with the default blur levels.
    pub fn standard(source_ids: Vec<String>) -> Self {
        DatabasePlan {
            source_ids,
            patterns: PatternId::ALL.iter().map(|&p| QualityPattern::standard(p)).collect(),
            sigmas: default_sigmas(),
            kernel_extent: DEFAULT_KERNEL_EXTENT,
            belt_width_deg: DEFAULT_BELT_WIDTH_DEG,
        }
    }

    /// Planned stimuli grouped by source, in deterministic order.
    pub fn specs(&self) -> Vec<StimulusSpec> {
        let mut out = Vec::new();
        for source in &self.source_ids {
            for pattern in &self.patterns {
                let sigmas = self.sigmas.get(&pattern.scenario()).map(Vec::as_slice).unwrap_or(&[]);
                for &sigma in sigmas {
                    out.push(StimulusSpec {
                        source_id: source.clone(),
                        pattern: pattern.clone(),
                        sigma,
                        kernel_extent: self.kernel_extent,
                        belt_width_deg: self.belt_width_deg,
                    });
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.specs().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn default_sigmas() -> BTreeMap<Scenario, Vec<f64>> {
    BTreeMap::from([
        (Scenario::S1, SCENARIO1_SIGMAS.to_vec()),
        (Scenario::S2, SCENARIO2_SIGMAS.to_vec()),
    ])
}

/// Generates every planned stimulus and hands it to `sink` as soon as it is
/// ready. Blurred versions are computed once per (source, sigma) and the
/// sources are processed one at a time to bound memory.
///
/// `sources` maps source ids to their (already extracted) viewports.
pub fn generate_database<F>(
    sources: &BTreeMap<String, Image>,
    plan: &DatabasePlan,
    em: &EccentricityMap,
    scheme: &ZoneScheme,
    geometry_ref: &str,
    sink: F,
) -> Result<Vec<StimulusRecord>>
where
    F: Fn(&StimulusRecord, &Image) -> Result<()> + Sync,
{
    for p in &plan.patterns {
        p.check_scheme(scheme)?;
    }
    let specs = plan.specs();
    let mut records = Vec::with_capacity(specs.len());
    for source_id in &plan.source_ids {
        let source = sources
            .get(source_id)
            .ok_or_else(|| Error::Configuration(format!("missing source image {source_id:?}")))?;
        source.plane(0).check_dims(em.degrees())?;
        let mine: Vec<&StimulusSpec> = specs.iter().filter(|s| &s.source_id == source_id).collect();

        let mut sigmas: Vec<f64> = mine.iter().map(|s| s.sigma).collect();
        sigmas.sort_by(f64::total_cmp);
        sigmas.dedup();
        let blurred: Vec<Image> = sigmas
            .par_iter()
            .map(|&s| gaussian_blur_image(source, s, plan.kernel_extent))
            .collect::<Result<_>>()?;
        let weights: Vec<Plane> = plan
            .patterns
            .par_iter()
            .map(|p| blend_weight_map(p, em, scheme, plan.belt_width_deg))
            .collect::<Result<_>>()?;

        let batch: Vec<StimulusRecord> = mine
            .par_iter()
            .map(|spec| {
                let bi = sigmas.iter().position(|&s| s == spec.sigma).expect("sigma planned");
                let pi = plan
                    .patterns
                    .iter()
                    .position(|p| *p == spec.pattern)
                    .expect("pattern planned");
                let stimulus = blend(source, &blurred[bi], &weights[pi])?;
                let record = StimulusRecord {
                    stimulus_id: spec.stimulus_id(),
                    source_id: spec.source_id.clone(),
                    pattern_id: spec.pattern.label(),
                    scenario: spec.pattern.scenario(),
                    sigma: spec.sigma,
                    belt_width: spec.belt_width_deg,
                    kernel_extent: spec.kernel_extent,
                    geometry: geometry_ref.to_string(),
                };
                sink(&record, &stimulus)?;
                Ok(record)
            })
            .collect::<Result<_>>()?;
        records.extend(batch);
    }
    Ok(records)
}
