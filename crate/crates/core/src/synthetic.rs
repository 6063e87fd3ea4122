//! Seeded procedural content for demos and tests: textured panoramas and
//! viewports, small on-disk datasets, and MOS planted from a known zone
//! weighting.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::{synthetic_mos, LogisticParams};
use crate::geometry::DisplayGeometry;
use crate::io::{write_image, GeometryConfig, ImageEntry, ManifestFile, ScoresTable};
use crate::raster::{Image, Plane};
use crate::zwf::{zwf_score, ZoneMseVector, ZoneWeights};

struct Wave {
    amplitude: f64,
    kx: f64,
    ky: f64,
    phase: f64,
}

/// Sum of random plane waves with an integer number of horizontal cycles,
/// so the texture wraps seamlessly in x.
fn waves(seed: u64, width: usize, height: usize) -> Vec<Wave> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    // Coarse structure, mid detail, fine detail.
    for (count, cycles, amplitude) in [(4, 1..4, 40.0), (8, 4..24, 18.0), (12, 24..96, 8.0)] {
        for _ in 0..count {
            let kx = rng.random_range(cycles.clone()) as f64 / width as f64;
            let ky = rng.random_range(cycles.start as f64..cycles.end as f64) / height as f64
                * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            out.push(Wave {
                amplitude: amplitude * rng.random_range(0.5..1.0),
                kx,
                ky,
                phase: rng.random_range(0.0..TAU),
            });
        }
    }
    out
}

/// Textured 8-bit plane in `[0, 255]`, deterministic in `seed`.
pub fn textured_plane(width: usize, height: usize, seed: u64) -> Plane {
    let ws = waves(seed, width, height);
    Plane::from_fn(width, height, |x, y| {
        let v: f64 = ws
            .iter()
            .map(|w| w.amplitude * (TAU * (w.kx * x as f64 + w.ky * y as f64) + w.phase).sin())
            .sum();
        (128.0 + v).round().clamp(0.0, 255.0)
    })
}

/// Gray equirectangular panorama (`width = 2 * height`) with a
/// latitude/longitude grid drawn every 30 degrees.
pub fn equirect_chart(height: usize, seed: u64) -> Result<Image> {
    let width = 2 * height;
    let base = textured_plane(width, height, seed);
    let step = (height / 6).max(1);
    let plane = Plane::from_fn(width, height, |x, y| {
        if x % step == 0 || y % step == 0 {
            255.0
        } else {
            base.get(x, y)
        }
    });
    Image::gray(plane, 8)
}

/// Gray 8-bit viewport-sized texture.
pub fn textured_viewport(width: usize, height: usize, seed: u64) -> Result<Image> {
    Image::gray(textured_plane(width, height, seed), 8)
}

/// MOS of each stimulus from its ZWF under `weights`, mapped through
/// `params`, plus seeded Gaussian noise of standard deviation `noise_sd`.
pub fn planted_mos(
    zone_mses: &[ZoneMseVector],
    weights: &ZoneWeights,
    params: &LogisticParams,
    max_value: f64,
    noise_sd: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let zwf = zone_mses
        .iter()
        .map(|z| zwf_score(z, weights, max_value))
        .collect::<Result<Vec<f64>>>()?;
    synthetic_mos(&zwf, params, noise_sd, seed)
}

/// Writes `count` seeded 2:1 charts of the given height to
/// `dir/sources/img<i>.png`, with view directions spread around the sphere
/// (the first straddles the longitude seam).
pub fn write_demo_sources(dir: &Path, count: usize, height: usize, seed: u64) -> Result<Vec<ImageEntry>> {
    (0..count)
        .map(|i| {
            let rel = PathBuf::from("sources").join(format!("img{i}.png"));
            write_image(&dir.join(&rel), &equirect_chart(height, seed + i as u64)?)?;
            Ok(ImageEntry {
                id: format!("img{i}"),
                path: rel,
                yaw_deg: -180.0 + (i as f64 * 47.0) % 360.0,
                pitch_deg: (i as f64 * 13.0) % 40.0 - 20.0,
                projection: Default::default(),
            })
        })
        .collect()
}

/// Full design over `images` with Gear VR optics and physical viewport
/// size, sampled on a `viewport_px` raster. Eccentricities and zones keep
/// their device extent; only the pixel count shrinks.
pub fn demo_manifest(images: Vec<ImageEntry>, viewport_px: (usize, usize)) -> ManifestFile {
    let full = DisplayGeometry::gear_vr();
    let mut m = ManifestFile::standard(images);
    m.geometry = GeometryConfig {
        viewport_px: [viewport_px.0, viewport_px.1],
        viewport_mm: Some([full.width_mm, full.height_mm]),
        screen: None,
        ..GeometryConfig::gear_vr()
    };
    m
}

/// Planted MOS for every stimulus with a zone-MSE vector in `table`.
pub fn planted_mos_table(
    table: &ScoresTable,
    weights: &ZoneWeights,
    params: &LogisticParams,
    max_value: f64,
    noise_sd: f64,
    seed: u64,
) -> Result<BTreeMap<String, f64>> {
    let (ids, vectors): (Vec<String>, Vec<ZoneMseVector>) = table.zone_mses().into_iter().unzip();
    if ids.is_empty() {
        return Err(Error::InsufficientData("scores table has no zone-MSE rows".into()));
    }
    let mos = planted_mos(&vectors, weights, params, max_value, noise_sd, seed)?;
    Ok(ids.into_iter().zip(mos).collect())
}
