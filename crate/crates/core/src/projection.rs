//! Rectilinear viewport extraction from equirectangular images.
//!
//! Sphere convention: longitude `theta` in degrees grows to the right
//! (yaw), latitude `phi` grows upward (pitch). Equirect continuous
//! coordinates are `x = (theta/360 + 0.5) * W`, `y = (0.5 - phi/180) * H`,
//! so pixel `i` covers `[i, i+1)` and its center sits at `i + 0.5`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{Image, Plane};

/// Full-sphere equirectangular image (`width == 2 * height`).
#[derive(Debug, Clone, PartialEq)]
pub struct EquirectImage(Image);

impl EquirectImage {
    pub fn new(image: Image) -> Result<Self> {
        if image.width() != 2 * image.height() {
            return Err(Error::InvalidParameter(format!(
                "equirectangular image must be 2:1, got {}x{}",
                image.width(),
                image.height()
            )));
        }
        Ok(EquirectImage(image))
    }

    pub fn image(&self) -> &Image {
        &self.0
    }

    pub fn into_image(self) -> Image {
        self.0
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewportSpec {
    pub yaw_deg: f64,
    pub pitch_deg: f64,
    pub fov_h_deg: f64,
    pub fov_v_deg: f64,
    pub out_width: usize,
    pub out_height: usize,
}

impl ViewportSpec {
    /// Square-pixel pinhole: the vertical FOV follows from the aspect ratio.
    pub fn new(
        yaw_deg: f64,
        pitch_deg: f64,
        fov_h_deg: f64,
        out_width: usize,
        out_height: usize,
    ) -> Result<Self> {
        let half_h = (fov_h_deg.to_radians() / 2.0).tan();
        let fov_v_deg =
            2.0 * (half_h * out_height as f64 / out_width.max(1) as f64).atan().to_degrees();
        Self::with_fov(yaw_deg, pitch_deg, fov_h_deg, fov_v_deg, out_width, out_height)
    }

    pub fn with_fov(
        yaw_deg: f64,
        pitch_deg: f64,
        fov_h_deg: f64,
        fov_v_deg: f64,
        out_width: usize,
        out_height: usize,
    ) -> Result<Self> {
        let spec = ViewportSpec {
            yaw_deg,
            pitch_deg,
            fov_h_deg,
            fov_v_deg,
            out_width,
            out_height,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(-180.0..180.0).contains(&self.yaw_deg) {
            return Err(Error::InvalidParameter(format!(
                "yaw {} outside [-180, 180)",
                self.yaw_deg
            )));
        }
        if !(-90.0..=90.0).contains(&self.pitch_deg) {
            return Err(Error::InvalidParameter(format!(
                "pitch {} outside [-90, 90]",
                self.pitch_deg
            )));
        }
        for fov in [self.fov_h_deg, self.fov_v_deg] {
            if !(fov > 0.0 && fov < 180.0) {
                return Err(Error::InvalidParameter(format!(
                    "field of view {fov} outside (0, 180)"
                )));
            }
        }
        if self.out_width == 0 || self.out_height == 0 {
            return Err(Error::InvalidParameter(
                "viewport output dimensions must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Maps continuous viewport coordinates (pixel `i` centered at `i + 0.5`)
/// to continuous equirect coordinates of an image `width x height`.
pub fn viewport_ray_to_equirect(
    u: (f64, f64),
    spec: &ViewportSpec,
    width: usize,
    height: usize,
) -> (f64, f64) {
    let (theta, phi) = viewport_ray_to_sphere(u, spec);
    (
        (theta / 360.0 + 0.5) * width as f64,
        (0.5 - phi / 180.0) * height as f64,
    )
}

/// Longitude and latitude in degrees of the ray through viewport point `u`.
pub fn viewport_ray_to_sphere(u: (f64, f64), spec: &ViewportSpec) -> (f64, f64) {
    let tan_h = (spec.fov_h_deg.to_radians() / 2.0).tan();
    let tan_v = (spec.fov_v_deg.to_radians() / 2.0).tan();
    // Camera frame: +z forward, +x right, +y up.
    let cx = (2.0 * u.0 / spec.out_width as f64 - 1.0) * tan_h;
    let cy = (1.0 - 2.0 * u.1 / spec.out_height as f64) * tan_v;
    let cz = 1.0;

    // Pitch about the camera x axis, then yaw about the world y axis.
    let (sp, cp) = spec.pitch_deg.to_radians().sin_cos();
    let py = cy * cp + cz * sp;
    let pz = -cy * sp + cz * cp;
    let (sy, cyaw) = spec.yaw_deg.to_radians().sin_cos();
    let wx = cx * cyaw + pz * sy;
    let wz = -cx * sy + pz * cyaw;
    let wy = py;

    let theta = wx.atan2(wz).to_degrees();
    let phi = (wy / (wx * wx + wy * wy + wz * wz).sqrt())
        .clamp(-1.0, 1.0)
        .asin()
        .to_degrees();
    (theta, phi)
}

/// Bilinear sample at index coordinates (pixel `i` sits at `i`), wrapping
/// horizontally across the longitude seam and clamping rows at the poles.
pub fn bilinear_sample(plane: &Plane, x: f64, y: f64) -> f64 {
    let w = plane.width();
    let h = plane.height();
    let x0f = x.floor();
    let y0f = y.floor();
    let fx = x - x0f;
    let fy = y - y0f;
    let wrap = |i: i64| i.rem_euclid(w as i64) as usize;
    let clamp = |i: i64| i.clamp(0, h as i64 - 1) as usize;
    let (x0, x1) = (wrap(x0f as i64), wrap(x0f as i64 + 1));
    let (y0, y1) = (clamp(y0f as i64), clamp(y0f as i64 + 1));
    let top = plane.get(x0, y0) * (1.0 - fx) + plane.get(x1, y0) * fx;
    if fy == 0.0 {
        return top;
    }
    let bottom = plane.get(x0, y1) * (1.0 - fx) + plane.get(x1, y1) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Extracts the viewport described by `spec`. Rows are computed in parallel;
/// the result does not depend on the degree of parallelism.
pub fn extract_viewport(img: &EquirectImage, spec: &ViewportSpec) -> Result<Image> {
    spec.validate()?;
    let (ew, eh) = (img.width(), img.height());
    let (ow, oh) = (spec.out_width, spec.out_height);
    // Sample positions are shared by all channels.
    let coords: Vec<(f64, f64)> = (0..oh)
        .into_par_iter()
        .flat_map_iter(|j| {
            (0..ow).map(move |i| {
                let (x, y) = viewport_ray_to_equirect((i as f64 + 0.5, j as f64 + 0.5), spec, ew, eh);
                (x - 0.5, y - 0.5)
            })
        })
        .collect();
    let planes = img
        .image()
        .planes()
        .iter()
        .map(|p| {
            let data: Vec<f64> = coords
                .par_iter()
                .map(|&(x, y)| bilinear_sample(p, x, y))
                .collect();
            Plane::from_vec(ow, oh, data)
        })
        .collect::<Result<Vec<_>>>()?;
    Image::new(planes, img.image().bit_depth())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(yaw: f64, pitch: f64) -> ViewportSpec {
        ViewportSpec::new(yaw, pitch, 90.0, 64, 48).unwrap()
    }

    #[test]
    fn center_ray_hits_view_direction() {
        let (x, y) = viewport_ray_to_equirect((32.0, 24.0), &spec(0.0, 0.0), 512, 256);
        assert_relative_eq!(x, 256.0, epsilon = 1e-9);
        assert_relative_eq!(y, 128.0, epsilon = 1e-9);
        let (x, y) = viewport_ray_to_equirect((32.0, 24.0), &spec(90.0, 0.0), 512, 256);
        assert_relative_eq!(x, 384.0, epsilon = 1e-9);
        assert_relative_eq!(y, 128.0, epsilon = 1e-9);
        let (_, y) = viewport_ray_to_equirect((32.0, 24.0), &spec(0.0, 45.0), 512, 256);
        assert_relative_eq!(y, 64.0, epsilon = 1e-9);
    }

    #[test]
    fn right_edge_at_half_fov() {
        for yaw in [-120.0, 0.0, 37.5] {
            let s = spec(yaw, 0.0);
            let (theta, phi) = viewport_ray_to_sphere((64.0, 24.0), &s);
            assert_relative_eq!(theta, yaw + 45.0, epsilon = 1e-9);
            assert_relative_eq!(phi, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn square_pixel_vertical_fov() {
        let s = ViewportSpec::new(0.0, 0.0, 90.0, 100, 50).unwrap();
        assert_relative_eq!(
            (s.fov_v_deg.to_radians() / 2.0).tan(),
            0.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn spec_validation() {
        assert!(ViewportSpec::new(180.0, 0.0, 90.0, 10, 10).is_err());
        assert!(ViewportSpec::new(0.0, 91.0, 90.0, 10, 10).is_err());
        assert!(ViewportSpec::new(0.0, 0.0, 180.0, 10, 10).is_err());
        assert!(ViewportSpec::new(0.0, 0.0, 90.0, 0, 10).is_err());
        assert!(EquirectImage::new(Image::gray(Plane::zeros(10, 10), 8).unwrap()).is_err());
    }

    #[test]
    fn bilinear_basics() {
        let p = Plane::from_fn(4, 3, |x, y| (10 * x + 100 * y) as f64);
        assert_eq!(bilinear_sample(&p, 2.0, 1.0), 120.0);
        assert_eq!(bilinear_sample(&p, 0.5, 0.0), 5.0);
        // Horizontal wrap: between the last and first columns.
        assert_eq!(bilinear_sample(&p, 3.5, 0.0), 15.0);
        assert_eq!(bilinear_sample(&p, -0.5, 0.0), 15.0);
        // Vertical clamp.
        assert_eq!(bilinear_sample(&p, 1.0, -3.0), 10.0);
        assert_eq!(bilinear_sample(&p, 1.0, 7.5), 210.0);
        let two = Plane::from_vec(2, 1, vec![10.0, 20.0]).unwrap();
        assert_eq!(bilinear_sample(&two, 0.5, 0.0), 15.0);
    }

    #[test]
    fn constant_equirect_gives_constant_viewport() {
        let img = EquirectImage::new(Image::gray(Plane::filled(64, 32, 77.0), 8).unwrap()).unwrap();
        let vp = extract_viewport(&img, &spec(-170.0, 60.0)).unwrap();
        assert!(vp.plane(0).data().iter().all(|&v| (v - 77.0).abs() < 1e-12));
    }
}
