//! HMD viewing geometry: virtual viewport, eccentricity and retina zones.
//!
//! Lengths are millimetres, angles degrees. Pixel coordinates on the
//! virtual viewport equal those on the displayed viewport; the lens only
//! rescales physical lengths, which is what drives eccentricity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{Plane, Raster};

const MM_PER_INCH: f64 = 25.4;

/// Physical description of one displayed viewport behind an HMD lens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplayGeometry {
    pub focal_length_mm: f64,
    pub lens_to_display_mm: f64,
    pub lens_to_eye_mm: f64,
    pub width_px: usize,
    pub height_px: usize,
    pub width_mm: f64,
    pub height_mm: f64,
}

impl DisplayGeometry {
    pub fn new(
        focal_length_mm: f64,
        lens_to_display_mm: f64,
        lens_to_eye_mm: f64,
        (width_px, height_px): (usize, usize),
        (width_mm, height_mm): (f64, f64),
    ) -> Result<Self> {
        let g = DisplayGeometry {
            focal_length_mm,
            lens_to_display_mm,
            lens_to_eye_mm,
            width_px,
            height_px,
            width_mm,
            height_mm,
        };
        g.validate()?;
        Ok(g)
    }

    /// Builds the viewport size from a panel's diagonal and resolution,
    /// assuming square pixels.
    pub fn from_screen(
        focal_length_mm: f64,
        lens_to_display_mm: f64,
        lens_to_eye_mm: f64,
        viewport_px: (usize, usize),
        diagonal_in: f64,
        screen_px: (usize, usize),
    ) -> Result<Self> {
        let pitch = pixel_pitch_mm(diagonal_in, screen_px)?;
        Self::new(
            focal_length_mm,
            lens_to_display_mm,
            lens_to_eye_mm,
            viewport_px,
            (viewport_px.0 as f64 * pitch, viewport_px.1 as f64 * pitch),
        )
    }

    /// Galaxy S6 in a Gear VR: F = 62 mm, S0 = 25 mm, S2 = 10 mm,
    /// 5.1" 2560x1440 panel, one 1280x1440 half per eye.
    pub fn gear_vr() -> Self {
        Self::from_screen(62.0, 25.0, 10.0, (1280, 1440), 5.1, (2560, 1440))
            .expect("built-in device constants are valid")
    }

    pub fn validate(&self) -> Result<()> {
        let lengths = [
            ("focal_length_mm", self.focal_length_mm),
            ("lens_to_display_mm", self.lens_to_display_mm),
            ("lens_to_eye_mm", self.lens_to_eye_mm),
            ("width_mm", self.width_mm),
            ("height_mm", self.height_mm),
        ];
        for (name, v) in lengths {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        if self.width_px == 0 || self.height_px == 0 {
            return Err(Error::InvalidParameter(
                "viewport pixel dimensions must be positive".into(),
            ));
        }
        if self.lens_to_display_mm >= self.focal_length_mm {
            return Err(Error::InvalidOptics {
                focal: self.focal_length_mm,
                s0: self.lens_to_display_mm,
            });
        }
        Ok(())
    }
}

/// Pixel pitch of a panel: diagonal length over diagonal pixel count.
pub fn pixel_pitch_mm(diagonal_in: f64, (w, h): (usize, usize)) -> Result<f64> {
    if !(diagonal_in.is_finite() && diagonal_in > 0.0) || w == 0 || h == 0 {
        return Err(Error::InvalidParameter(format!(
            "screen diagonal {diagonal_in}\" at {w}x{h} px is not a valid panel"
        )));
    }
    let diag_px = ((w * w + h * h) as f64).sqrt();
    Ok(diagonal_in * MM_PER_INCH / diag_px)
}

/// Quantities of the magnified virtual viewport formed by the lens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirtualGeometry {
    pub lens_to_virtual_mm: f64,
    pub eye_to_virtual_mm: f64,
    pub width_px: usize,
    pub height_px: usize,
    pub width_mm: f64,
    pub height_mm: f64,
    pub magnification: f64,
}

impl VirtualGeometry {
    #[inline]
    pub fn mm_per_px_x(&self) -> f64 {
        self.width_mm / self.width_px as f64
    }

    #[inline]
    pub fn mm_per_px_y(&self) -> f64 {
        self.height_mm / self.height_px as f64
    }

    /// Visual angle subtended by one pixel at the foveation point, per axis.
    pub fn degrees_per_pixel(&self) -> (f64, f64) {
        (
            (self.mm_per_px_x() / self.eye_to_virtual_mm).atan().to_degrees(),
            (self.mm_per_px_y() / self.eye_to_virtual_mm).atan().to_degrees(),
        )
    }

    /// Full angular extent of the virtual viewport seen from the eye, per axis.
    pub fn field_of_view_deg(&self) -> (f64, f64) {
        let half = |mm: f64| (0.5 * mm / self.eye_to_virtual_mm).atan().to_degrees();
        (2.0 * half(self.width_mm), 2.0 * half(self.height_mm))
    }

    /// Center of the raster in pixel coordinates.
    pub fn center(&self) -> PixelCoord {
        PixelCoord::center(self.width_px, self.height_px)
    }
}

/// Applies the thin-lens relations to a displayed viewport.
pub fn derive_virtual_geometry(display: &DisplayGeometry) -> Result<VirtualGeometry> {
    display.validate()?;
    let f = display.focal_length_mm;
    let s0 = display.lens_to_display_mm;
    let magnification = f / (f - s0);
    let s1 = s0 * magnification;
    Ok(VirtualGeometry {
        lens_to_virtual_mm: s1,
        eye_to_virtual_mm: s1 + display.lens_to_eye_mm,
        width_px: display.width_px,
        height_px: display.height_px,
        width_mm: display.width_mm * magnification,
        height_mm: display.height_mm * magnification,
        magnification,
    })
}

/// Continuous pixel coordinates; integer values are pixel centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelCoord {
    pub x: f64,
    pub y: f64,
}

impl PixelCoord {
    pub fn new(x: f64, y: f64) -> Self {
        PixelCoord { x, y }
    }

    /// Geometric center of a `width x height` raster.
    pub fn center(width: usize, height: usize) -> Self {
        PixelCoord {
            x: (width as f64 - 1.0) / 2.0,
            y: (height as f64 - 1.0) / 2.0,
        }
    }
}

/// Eccentricity in degrees of `point` relative to the foveation point.
pub fn eccentricity_at(point: PixelCoord, foveation: PixelCoord, vg: &VirtualGeometry) -> f64 {
    let dx = (point.x - foveation.x) * vg.mm_per_px_x();
    let dy = (point.y - foveation.y) * vg.mm_per_px_y();
    let d = dx.hypot(dy);
    (d / vg.eye_to_virtual_mm).atan().to_degrees()
}

/// Per-pixel eccentricity over the virtual viewport raster.
#[derive(Debug, Clone, PartialEq)]
pub struct EccentricityMap {
    degrees: Plane,
    foveation: PixelCoord,
}

impl EccentricityMap {
    pub fn from_plane(degrees: Plane, foveation: PixelCoord) -> Self {
        EccentricityMap { degrees, foveation }
    }

    pub fn degrees(&self) -> &Plane {
        &self.degrees
    }

    pub fn foveation(&self) -> PixelCoord {
        self.foveation
    }

    pub fn width(&self) -> usize {
        self.degrees.width()
    }

    pub fn height(&self) -> usize {
        self.degrees.height()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.degrees.get(x, y)
    }
}

pub fn eccentricity_map(vg: &VirtualGeometry, foveation: PixelCoord) -> Result<EccentricityMap> {
    let (w, h) = (vg.width_px, vg.height_px);
    let inside = |v: f64, n: usize| v.is_finite() && v >= 0.0 && v <= (n - 1) as f64;
    if !inside(foveation.x, w) || !inside(foveation.y, h) {
        return Err(Error::Domain(format!(
            "foveation point ({}, {}) outside {w}x{h} raster",
            foveation.x, foveation.y
        )));
    }
    let degrees = Plane::from_fn(w, h, |x, y| {
        eccentricity_at(PixelCoord::new(x as f64, y as f64), foveation, vg)
    });
    Ok(EccentricityMap { degrees, foveation })
}

/// Ascending eccentricity boundaries; the last zone is unbounded above.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ZoneScheme {
    lower_bounds: Vec<f64>,
}

impl ZoneScheme {
    /// `lower_bounds` are the inclusive lower edges of each zone; the first must be 0.
    pub fn new(lower_bounds: Vec<f64>) -> Result<Self> {
        if lower_bounds.first() != Some(&0.0) {
            return Err(Error::InvalidParameter(
                "zone boundaries must start at 0 degrees".into(),
            ));
        }
        if lower_bounds.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidParameter(
                "zone boundaries must be finite; the last zone is implicitly unbounded".into(),
            ));
        }
        if lower_bounds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "zone boundaries must be strictly increasing".into(),
            ));
        }
        if lower_bounds.len() > u8::MAX as usize {
            return Err(Error::InvalidParameter("too many zones".into()));
        }
        Ok(ZoneScheme { lower_bounds })
    }

    /// Fovea, parafovea, perifovea, near and far periphery.
    pub fn retina() -> Self {
        ZoneScheme {
            lower_bounds: vec![0.0, 2.5, 4.0, 9.0, 30.0],
        }
    }

    pub fn zone_count(&self) -> usize {
        self.lower_bounds.len()
    }

    /// `[lower, upper)` interval of zone `k` (0-based).
    pub fn interval(&self, k: usize) -> (f64, f64) {
        let upper = self
            .lower_bounds
            .get(k + 1)
            .copied()
            .unwrap_or(f64::INFINITY);
        (self.lower_bounds[k], upper)
    }

    /// Interior boundaries `e_1 .. e_{K-1}` separating consecutive zones.
    pub fn switch_boundaries(&self) -> &[f64] {
        &self.lower_bounds[1..]
    }

    pub fn lower_bounds(&self) -> &[f64] {
        &self.lower_bounds
    }
}

impl Default for ZoneScheme {
    fn default() -> Self {
        Self::retina()
    }
}

impl TryFrom<Vec<f64>> for ZoneScheme {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        ZoneScheme::new(v)
    }
}

impl From<ZoneScheme> for Vec<f64> {
    fn from(z: ZoneScheme) -> Self {
        z.lower_bounds
    }
}

/// Zone index (0-based) containing eccentricity `e`, half-open on the right.
pub fn zone_of(e: f64, scheme: &ZoneScheme) -> Result<usize> {
    if e.is_nan() || e < 0.0 {
        return Err(Error::Domain(format!("eccentricity {e} is negative")));
    }
    Ok(zone_of_unchecked(e, scheme))
}

#[inline]
fn zone_of_unchecked(e: f64, scheme: &ZoneScheme) -> usize {
    // partition_point gives the number of lower bounds <= e.
    scheme.lower_bounds.partition_point(|&b| b <= e) - 1
}

/// Per-pixel zone indices; the zone sets partition the raster.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneMap {
    zones: Raster<u8>,
    zone_count: usize,
}

impl ZoneMap {
    pub fn from_raster(zones: Raster<u8>, zone_count: usize) -> Result<Self> {
        if zones.data().iter().any(|&z| z as usize >= zone_count) {
            return Err(Error::InvalidParameter(format!(
                "zone index out of range for {zone_count} zones"
            )));
        }
        Ok(ZoneMap { zones, zone_count })
    }

    pub fn zones(&self) -> &Raster<u8> {
        &self.zones
    }

    pub fn zone_count(&self) -> usize {
        self.zone_count
    }

    pub fn width(&self) -> usize {
        self.zones.width()
    }

    pub fn height(&self) -> usize {
        self.zones.height()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> usize {
        self.zones.get(x, y) as usize
    }

    /// Pixel count `N_k` of every zone.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.zone_count];
        for &z in self.zones.data() {
            counts[z as usize] += 1;
        }
        counts
    }
}

pub fn zone_map(em: &EccentricityMap, scheme: &ZoneScheme) -> ZoneMap {
    ZoneMap {
        zones: em.degrees.map(|e| zone_of_unchecked(e, scheme) as u8),
        zone_count: scheme.zone_count(),
    }
}
