#![allow(dead_code)]

pub mod oracles;

use foveaq::geometry::{derive_virtual_geometry, DisplayGeometry, VirtualGeometry};
use foveaq::raster::Plane;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn gear_vr() -> VirtualGeometry {
    derive_virtual_geometry(&DisplayGeometry::gear_vr()).unwrap()
}

/// Gear VR optics and physical viewport size sampled on a coarser raster.
pub fn coarse_gear_vr(width: usize, height: usize) -> VirtualGeometry {
    let full = DisplayGeometry::gear_vr();
    let d = DisplayGeometry::new(62.0, 25.0, 10.0, (width, height), (full.width_mm, full.height_mm)).unwrap();
    derive_virtual_geometry(&d).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Integer-valued samples uniform in `[0, 255]`.
pub fn random_plane(width: usize, height: usize, seed: u64) -> Plane {
    let mut r = rng(seed);
    Plane::from_fn(width, height, |_, _| r.random_range(0..=255) as f64)
}

/// `plane` plus rounded Gaussian noise, clamped to `[0, 255]`.
pub fn noisy(plane: &Plane, sd: f64, seed: u64) -> Plane {
    let mut r = rng(seed);
    let n = Normal::new(0.0, sd).unwrap();
    plane.map(|v| (v + n.sample(&mut r)).round().clamp(0.0, 255.0))
}

/// Writes a demo dataset under `dir` and returns the manifest path.
/// `edit` adjusts the manifest before it is written.
pub fn demo_dataset(
    dir: &std::path::Path,
    images: usize,
    viewport_px: (usize, usize),
    edit: impl FnOnce(&mut foveaq::io::ManifestFile),
) -> std::path::PathBuf {
    let entries = foveaq::synthetic::write_demo_sources(dir, images, 128, 40).unwrap();
    let mut m = foveaq::synthetic::demo_manifest(entries, viewport_px);
    edit(&mut m);
    let path = dir.join("manifest.json");
    std::fs::write(&path, m.to_json()).unwrap();
    path
}
