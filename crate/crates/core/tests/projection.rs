mod common;

use foveaq::projection::*;
use foveaq::raster::{Image, Plane};
use foveaq::synthetic::{equirect_chart, textured_plane};
use proptest::prelude::*;

fn max_deviation(a: &Image, b: &Image) -> f64 {
    a.planes()
        .iter()
        .zip(b.planes())
        .flat_map(|(p, q)| p.data().iter().zip(q.data()).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

fn chart() -> EquirectImage {
    EquirectImage::new(equirect_chart(256, 3).unwrap()).unwrap()
}

#[test]
fn matches_oracle_on_test_chart() {
    let img = chart();
    for (yaw, pitch) in [(0.0, 0.0), (-180.0, 0.0), (179.0, 10.0), (45.0, 60.0), (-120.0, -85.0)] {
        let spec = ViewportSpec::new(yaw, pitch, 90.0, 160, 120).unwrap();
        let got = extract_viewport(&img, &spec).unwrap();
        let want = common::oracles::extract(img.image(), &spec);
        let dev = max_deviation(&got.quantized(), &want);
        assert!(dev <= 1.0, "yaw {yaw} pitch {pitch}: deviation {dev}");
    }
}

#[test]
fn seam_viewport_is_continuous() {
    // Smooth in longitude, so any seam artefact shows up as a jump.
    let plane = Plane::from_fn(512, 256, |x, _| {
        128.0 + 100.0 * ((x as f64 + 0.5) / 512.0 * std::f64::consts::TAU).cos()
    });
    let img = EquirectImage::new(Image::gray(plane, 8).unwrap()).unwrap();
    let spec = ViewportSpec::new(-180.0, 0.0, 90.0, 128, 96).unwrap();
    let vp = extract_viewport(&img, &spec).unwrap();
    let p = vp.plane(0);
    for y in 0..p.height() {
        for x in 1..p.width() {
            assert!((p.get(x, y) - p.get(x - 1, y)).abs() < 2.0);
        }
    }
    assert!(max_deviation(&vp, &common::oracles::extract(img.image(), &spec)) < 1e-6);
}

#[test]
fn channels_are_extracted_independently() {
    let planes: Vec<Plane> = (0..3).map(|s| textured_plane(256, 128, s)).collect();
    let rgb = EquirectImage::new(Image::new(planes.clone(), 8).unwrap()).unwrap();
    let spec = ViewportSpec::new(30.0, -20.0, 75.0, 64, 80).unwrap();
    let joint = extract_viewport(&rgb, &spec).unwrap();
    for (c, p) in planes.into_iter().enumerate() {
        let one = EquirectImage::new(Image::gray(p, 8).unwrap()).unwrap();
        assert_eq!(extract_viewport(&one, &spec).unwrap().plane(0), joint.plane(c));
    }
}

#[test]
fn edge_ray_longitude_is_yaw_plus_half_fov() {
    for yaw in [-170.0, -30.0, 0.0, 30.0, 100.0] {
        let spec = ViewportSpec::new(yaw, 0.0, 90.0, 200, 100).unwrap();
        let (theta, phi) = viewport_ray_to_sphere((200.0, 50.0), &spec);
        let want = (yaw + 45.0 + 180.0f64).rem_euclid(360.0) - 180.0;
        assert!((theta - want).abs() < 1e-6, "yaw {yaw}: {theta}");
        assert!(phi.abs() < 1e-9);
    }
}

#[test]
fn rejects_bad_inputs() {
    assert!(EquirectImage::new(Image::gray(Plane::zeros(10, 10), 8).unwrap()).is_err());
    assert!(ViewportSpec::new(180.0, 0.0, 90.0, 10, 10).is_err());
    assert!(ViewportSpec::new(0.0, 91.0, 90.0, 10, 10).is_err());
    assert!(ViewportSpec::new(0.0, 0.0, 180.0, 10, 10).is_err());
    assert!(ViewportSpec::new(0.0, 0.0, 90.0, 0, 10).is_err());
    let s = ViewportSpec::new(0.0, 0.0, 90.0, 200, 100).unwrap();
    assert!((s.fov_v_deg - 2.0 * 0.5f64.atan().to_degrees()).abs() < 1e-12);
}

fn rotate_columns(img: &EquirectImage, k: usize) -> EquirectImage {
    let w = img.width();
    let p = img.image().plane(0);
    let rotated = Plane::from_fn(w, img.height(), |x, y| p.get((x + w - k) % w, y));
    EquirectImage::new(Image::gray(rotated, 8).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn yaw_equivariance_for_whole_columns(k in 0usize..512, yaw in -180.0f64..180.0, pitch in -60.0f64..60.0) {
        let img = chart();
        let delta = k as f64 * 360.0 / 512.0;
        let shifted_yaw = (yaw + delta + 180.0).rem_euclid(360.0) - 180.0;
        let a = extract_viewport(&rotate_columns(&img, k), &ViewportSpec::new(shifted_yaw, pitch, 80.0, 48, 40).unwrap()).unwrap();
        let b = extract_viewport(&img, &ViewportSpec::new(yaw, pitch, 80.0, 48, 40).unwrap()).unwrap();
        prop_assert!(max_deviation(&a, &b) <= 1.0);
    }

    #[test]
    fn random_views_match_oracle(yaw in -180.0f64..180.0, pitch in -90.0f64..=90.0, fov in 20.0f64..120.0) {
        let img = chart();
        let spec = ViewportSpec::new(yaw, pitch, fov, 40, 30).unwrap();
        let got = extract_viewport(&img, &spec).unwrap();
        prop_assert!(max_deviation(&got.quantized(), &common::oracles::extract(img.image(), &spec)) <= 1.0);
    }
}
