mod common;

use std::collections::BTreeMap;
use std::sync::Mutex;

use foveaq::geometry::{eccentricity_map, EccentricityMap, ZoneScheme};
use foveaq::metrics::score_mse;
use foveaq::raster::{Image, Plane};
use foveaq::stimulus::*;
use foveaq::synthetic::textured_plane;
use proptest::prelude::*;

fn setup() -> (EccentricityMap, ZoneScheme, Image) {
    let vg = common::coarse_gear_vr(128, 144);
    let em = eccentricity_map(&vg, vg.center()).unwrap();
    (em, ZoneScheme::retina(), Image::gray(textured_plane(128, 144, 2), 8).unwrap())
}

#[test]
fn pixels_outside_belts_keep_their_designed_quality() {
    let (em, scheme, src) = setup();
    let bounds = [2.5, 4.0, 9.0, 30.0];
    for id in PatternId::ALL {
        for sigma in [2.0, 6.0] {
            let spec = StimulusSpec {
                source_id: "a".into(),
                pattern: QualityPattern::standard(id),
                sigma,
                kernel_extent: 50,
                belt_width_deg: 5.0,
            };
            let out = generate_stimulus(&src, &spec, &em, &scheme).unwrap();
            let blurred = gaussian_blur_image(&src, sigma, 50).unwrap().quantized();
            let hq = spec.pattern.hq_flags();
            let (mut n_hq, mut n_lq) = (0, 0);
            for y in 0..144 {
                for x in 0..128 {
                    let e = em.get(x, y);
                    let v = out.plane(0).get(x, y);
                    if common::oracles::outside_belts(e, hq, &bounds, 5.0, true) {
                        assert_eq!(v, src.plane(0).get(x, y), "{id} HQ pixel ({x}, {y})");
                        n_hq += 1;
                    } else if common::oracles::outside_belts(e, hq, &bounds, 5.0, false) {
                        assert_eq!(v, blurred.plane(0).get(x, y), "{id} LQ pixel ({x}, {y})");
                        n_lq += 1;
                    }
                }
            }
            assert!(n_hq > 0 && n_lq > 0, "{id}");
        }
    }
}

#[test]
fn larger_sigma_never_lowers_viewport_mse() {
    // Needs a raster where every LQ zone spans many texture periods; on very
    // coarse rasters a handful of blurred pixels can dip as sigma grows.
    let vg = common::coarse_gear_vr(640, 720);
    let em = eccentricity_map(&vg, vg.center()).unwrap();
    let scheme = ZoneScheme::retina();
    let src = Image::gray(textured_plane(640, 720, 2), 8).unwrap();
    for id in PatternId::ALL {
        let mut last = 0.0;
        for sigma in [1.0, 2.0, 4.0, 6.0, 8.0, 12.0] {
            let spec = StimulusSpec {
                source_id: "a".into(),
                pattern: QualityPattern::standard(id),
                sigma,
                kernel_extent: 50,
                belt_width_deg: 5.0,
            };
            let out = generate_stimulus(&src, &spec, &em, &scheme).unwrap();
            let mse = score_mse(src.plane(0), out.plane(0)).unwrap();
            assert!(mse >= last, "{id} sigma {sigma}: {mse} < {last}");
            last = mse;
        }
        assert!(last > 0.0);
    }
}

fn reflect(i: i64, n: usize) -> usize {
    let n = n as i64;
    let m = i.rem_euclid(2 * n);
    (if m < n { m } else { 2 * n - 1 - m }) as usize
}

/// Dense 2-D convolution with the full outer-product kernel.
fn dense_blur(p: &Plane, sigma: f64) -> Plane {
    let g: Vec<f64> = (-25..=25).map(|d: i64| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = g.iter().sum();
    Plane::from_fn(p.width(), p.height(), |x, y| {
        let mut acc = 0.0;
        for (j, gy) in g.iter().enumerate() {
            for (i, gx) in g.iter().enumerate() {
                let xi = reflect(x as i64 + i as i64 - 25, p.width());
                let yi = reflect(y as i64 + j as i64 - 25, p.height());
                acc += gx * gy / (s * s) * p.get(xi, yi);
            }
        }
        acc
    })
}

#[test]
fn blur_matches_dense_convolution() {
    let mut impulse = Plane::zeros(61, 61);
    impulse.set(30, 30, 1.0);
    let got = gaussian_blur(&impulse, 4.0, 50).unwrap();
    let want = dense_blur(&impulse, 4.0);
    for (a, b) in got.data().iter().zip(want.data()) {
        assert!((a - b).abs() < 1e-15);
    }
    // Kernel wider than the image exercises repeated reflection.
    let p = common::random_plane(37, 23, 3);
    for sigma in [1.0, 8.0] {
        let got = gaussian_blur(&p, sigma, 50).unwrap();
        let want = dense_blur(&p, sigma);
        for (a, b) in got.data().iter().zip(want.data()) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn blur_preserves_constants_and_rejects_bad_sigma() {
    let p = Plane::filled(30, 20, 77.0);
    let b = gaussian_blur(&p, 12.0, 50).unwrap();
    assert!(b.data().iter().all(|v| (v - 77.0).abs() < 1e-9));
    assert!(gaussian_blur(&p, 0.0, 50).is_err());
    assert!(gaussian_blur(&p, f64::NAN, 50).is_err());
}

#[test]
fn planned_database_covers_the_design() {
    let plan = DatabasePlan::standard((0..8).map(|i| format!("img{i}")).collect());
    assert_eq!(plan.len(), 256);
    let specs = plan.specs();
    let ids: std::collections::BTreeSet<String> = specs.iter().map(StimulusSpec::stimulus_id).collect();
    assert_eq!(ids.len(), 256);
    assert!(ids.contains("img3_P6_s4"));
    for s in &specs {
        let grid = match s.pattern.scenario() {
            Scenario::S1 => SCENARIO1_SIGMAS,
            Scenario::S2 => SCENARIO2_SIGMAS,
        };
        assert!(grid.contains(&s.sigma));
    }
}

#[test]
fn database_generation_is_deterministic() {
    let (em, scheme, src) = setup();
    let sources = BTreeMap::from([("a".to_string(), src.clone()), ("b".to_string(), src.map_planes(|p| p.map(|v| 255.0 - v)))]);
    let mut plan = DatabasePlan::standard(vec!["a".into(), "b".into()]);
    plan.sigmas.insert(Scenario::S1, vec![2.0]);
    plan.sigmas.insert(Scenario::S2, vec![1.0, 6.0]);
    let collect = || {
        let out = Mutex::new(BTreeMap::new());
        let recs = generate_database(&sources, &plan, &em, &scheme, "geometry.json", |r, img| {
            out.lock().unwrap().insert(r.stimulus_id.clone(), img.clone());
            Ok(())
        })
        .unwrap();
        (recs, out.into_inner().unwrap())
    };
    let (r1, i1) = collect();
    let (r2, i2) = collect();
    assert_eq!(r1.len(), 2 * (4 + 4 * 2));
    assert_eq!(r1, r2);
    assert_eq!(i1, i2);
    assert!(r1.iter().all(|r| r.geometry == "geometry.json" && r.kernel_extent == 50));
    let missing = BTreeMap::from([("a".to_string(), src)]);
    assert!(generate_database(&missing, &plan, &em, &scheme, "g", |_, _| Ok(())).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn blend_weight_is_continuous(pattern in 0usize..8, e in 0.0f64..60.0, alternating in any::<bool>()) {
        let scheme = ZoneScheme::retina();
        let (hq, width): (Vec<bool>, f64) = if alternating {
            // Switches at every boundary; the belt after 2.5 is clipped to 1.5.
            (vec![true, false, true, false, true], 1.5)
        } else {
            (QualityPattern::standard(PatternId::ALL[pattern]).hq_flags().to_vec(), 5.0)
        };
        let d = 1e-6;
        let a = blend_weight(e, &hq, &scheme, 5.0);
        let b = blend_weight(e + d, &hq, &scheme, 5.0);
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!((a - b).abs() <= d / width + 1e-9);
    }

    #[test]
    fn blur_commutes_with_translation_on_interiors(seed in 0u64..500, dx in 1usize..6, dy in 1usize..6) {
        let p = common::random_plane(90, 80, seed);
        let shifted = Plane::from_fn(90, 80, |x, y| p.get((x + 90 - dx) % 90, (y + 80 - dy) % 80));
        let a = gaussian_blur(&p, 2.0, 50).unwrap();
        let b = gaussian_blur(&shifted, 2.0, 50).unwrap();
        for y in 31..49 {
            for x in 31..59 {
                prop_assert!((b.get(x, y) - a.get(x - dx, y - dy)).abs() < 1e-9);
            }
        }
    }
}
