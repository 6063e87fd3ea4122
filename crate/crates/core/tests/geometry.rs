mod common;

use approx::assert_relative_eq;
use foveaq::geometry::*;
use proptest::prelude::*;

// Thin-lens values computed by hand for F = 62, S0 = 25, S2 = 10.
const S1: f64 = 1550.0 / 37.0;
const S3: f64 = 1550.0 / 37.0 + 10.0;

#[test]
fn gear_vr_goldens() {
    let vg = common::gear_vr();
    assert_relative_eq!(vg.lens_to_virtual_mm, S1, max_relative = 1e-9);
    assert_relative_eq!(vg.eye_to_virtual_mm, S3, max_relative = 1e-9);
    assert_relative_eq!(vg.magnification, 62.0 / 37.0, max_relative = 1e-12);
    assert!((vg.lens_to_virtual_mm - 41.8919).abs() < 1e-4);
    assert!((vg.eye_to_virtual_mm - 51.8919).abs() < 1e-4);
    assert_eq!((vg.width_px, vg.height_px), (1280, 1440));
    let d = DisplayGeometry::gear_vr();
    assert_relative_eq!(vg.width_mm, d.width_mm * 62.0 / 37.0, max_relative = 1e-9);
    let fov = vg.field_of_view_deg();
    assert!(fov.0 > 80.0 && fov.0 < 96.0 && fov.1 > fov.0);
}

#[test]
fn foveation_point_has_zero_eccentricity() {
    let vg = common::gear_vr();
    let c = vg.center();
    assert_eq!(eccentricity_at(c, c, &vg), 0.0);
    let em = eccentricity_map(&vg, PixelCoord::new(100.0, 200.0)).unwrap();
    assert_eq!(em.get(100, 200), 0.0);
    assert!(em.degrees().data().iter().all(|&e| (0.0..90.0).contains(&e)));
}

#[test]
fn boundary_probes_are_half_open() {
    let s = ZoneScheme::retina();
    let got: Vec<usize> = [0.0, 2.5, 4.0, 9.0, 30.0].iter().map(|&e| zone_of(e, &s).unwrap()).collect();
    assert_eq!(got, [0, 1, 2, 3, 4]);
    let below: Vec<usize> = [2.5, 4.0, 9.0, 30.0]
        .iter()
        .map(|&e: &f64| zone_of(e.next_down(), &s).unwrap())
        .collect();
    assert_eq!(below, [0, 1, 2, 3]);
    assert!(zone_of(-1e-12, &s).is_err());
    assert_eq!(zone_of(89.9, &s).unwrap(), 4);
}

#[test]
fn invalid_schemes_and_optics_are_rejected() {
    assert!(ZoneScheme::new(vec![1.0, 2.0]).is_err());
    assert!(ZoneScheme::new(vec![0.0, 3.0, 3.0]).is_err());
    assert!(ZoneScheme::new(vec![0.0]).is_ok());
    assert!(DisplayGeometry::new(25.0, 25.0, 10.0, (10, 10), (1.0, 1.0)).is_err());
    assert!(DisplayGeometry::new(62.0, 25.0, -1.0, (10, 10), (1.0, 1.0)).is_err());
}

#[test]
fn full_raster_zone_map_matches_per_pixel_oracle() {
    let vg = common::gear_vr();
    let em = eccentricity_map(&vg, vg.center()).unwrap();
    let zm = zone_map(&em, &ZoneScheme::retina());
    let mut counts = [0usize; 5];
    for y in 0..1440 {
        for x in 0..1280 {
            let e = common::oracles::gear_vr_eccentricity(x, y);
            assert_relative_eq!(em.get(x, y), e, epsilon = 1e-9);
            let z = common::oracles::retina_zone(e);
            assert_eq!(zm.get(x, y), z, "pixel ({x}, {y})");
            counts[z] += 1;
        }
    }
    assert_eq!(zm.counts(), counts);
    assert_eq!(counts.iter().sum::<usize>(), 1280 * 1440);
    assert!(counts.iter().all(|&c| c > 0));
}

#[test]
fn small_eccentricities_put_everything_in_the_first_zone() {
    let d = DisplayGeometry::new(62.0, 25.0, 10.0, (20, 20), (0.5, 0.5)).unwrap();
    let vg = derive_virtual_geometry(&d).unwrap();
    let zm = zone_map(&eccentricity_map(&vg, vg.center()).unwrap(), &ZoneScheme::retina());
    assert_eq!(zm.counts(), [400, 0, 0, 0, 0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zones_never_decrease_along_axis_rays(
        fx in 0usize..128, fy in 0usize..144, dir in 0usize..4,
    ) {
        let vg = common::coarse_gear_vr(128, 144);
        let f = PixelCoord::new(fx as f64, fy as f64);
        let zm = zone_map(&eccentricity_map(&vg, f).unwrap(), &ZoneScheme::retina());
        let (dx, dy): (i64, i64) = [(1, 0), (-1, 0), (0, 1), (0, -1)][dir];
        let (mut x, mut y) = (fx as i64, fy as i64);
        let mut last = 0;
        while (0..128).contains(&x) && (0..144).contains(&y) {
            let z = zm.get(x as usize, y as usize);
            prop_assert!(z >= last);
            last = z;
            x += dx;
            y += dy;
        }
    }

    #[test]
    fn eccentricity_strictly_increases_along_rays(
        fx in 0.0f64..127.0, fy in 0.0f64..143.0, angle in 0.0f64..std::f64::consts::TAU,
    ) {
        let vg = common::coarse_gear_vr(128, 144);
        let f = PixelCoord::new(fx, fy);
        let mut last = -1.0;
        for step in 0..100 {
            let r = step as f64 * 0.7;
            let e = eccentricity_at(PixelCoord::new(fx + r * angle.cos(), fy + r * angle.sin()), f, &vg);
            prop_assert!(e > last);
            last = e;
        }
    }

    #[test]
    fn geometry_is_scale_covariant(c in 0.05f64..20.0, x in 0.0f64..1279.0, y in 0.0f64..1439.0) {
        let base = DisplayGeometry::gear_vr();
        let scaled = DisplayGeometry::new(
            62.0 * c, 25.0 * c, 10.0 * c, (1280, 1440), (base.width_mm * c, base.height_mm * c),
        ).unwrap();
        let a = derive_virtual_geometry(&base).unwrap();
        let b = derive_virtual_geometry(&scaled).unwrap();
        prop_assert!((b.lens_to_virtual_mm / a.lens_to_virtual_mm - c).abs() < 1e-9 * c);
        prop_assert!((b.eye_to_virtual_mm / a.eye_to_virtual_mm - c).abs() < 1e-9 * c);
        prop_assert!((b.width_mm / a.width_mm - c).abs() < 1e-9 * c);
        prop_assert!((b.height_mm / a.height_mm - c).abs() < 1e-9 * c);
        let p = PixelCoord::new(x, y);
        prop_assert!((eccentricity_at(p, a.center(), &a) - eccentricity_at(p, b.center(), &b)).abs() < 1e-9);
    }

    #[test]
    fn zone_sets_partition_the_raster(
        w in 1usize..60, h in 1usize..60, mm in 1.0f64..80.0,
        b1 in 0.5f64..5.0, b2 in 0.1f64..10.0, b3 in 0.1f64..30.0,
    ) {
        let d = DisplayGeometry::new(62.0, 25.0, 10.0, (w, h), (mm, mm * h as f64 / w as f64)).unwrap();
        let vg = derive_virtual_geometry(&d).unwrap();
        let scheme = ZoneScheme::new(vec![0.0, b1, b1 + b2, b1 + b2 + b3]).unwrap();
        let em = eccentricity_map(&vg, vg.center()).unwrap();
        let zm = zone_map(&em, &scheme);
        prop_assert_eq!(zm.counts().iter().sum::<usize>(), w * h);
        for yy in 0..h {
            for xx in 0..w {
                let (lo, hi) = scheme.interval(zm.get(xx, yy));
                let e = em.get(xx, yy);
                prop_assert!(lo <= e && e < hi);
            }
        }
    }
}
