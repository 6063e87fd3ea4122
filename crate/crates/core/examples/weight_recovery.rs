//! Recovers a planted zone weighting from synthetic MOS: stimuli are
//! generated, their zone MSEs measured, and MOS derived from a known
//! weighting plus noise.
//!
//! ```text
//! cargo run --release --example weight_recovery
//! ```

use std::collections::BTreeMap;
use std::sync::Mutex;

use foveaq::eval::{fit_zone_weights, FitOptions, LogisticParams};
use foveaq::geometry::{derive_virtual_geometry, eccentricity_map, zone_map, DisplayGeometry, ZoneScheme};
use foveaq::stimulus::{generate_database, DatabasePlan};
use foveaq::synthetic::{planted_mos, textured_viewport};
use foveaq::zwf::{zone_mse, ZoneWeights};

fn main() -> foveaq::Result<()> {
    let vg = derive_virtual_geometry(&DisplayGeometry::gear_vr())?;
    let em = eccentricity_map(&vg, vg.center())?;
    let scheme = ZoneScheme::retina();
    let zones = zone_map(&em, &scheme);
    let sources: BTreeMap<String, _> = (0..2)
        .map(|i| Ok((format!("tex{i}"), textured_viewport(vg.width_px, vg.height_px, 20 + i)?)))
        .collect::<foveaq::Result<_>>()?;
    let plan = DatabasePlan::standard(sources.keys().cloned().collect());

    let vectors = Mutex::new(BTreeMap::new());
    generate_database(&sources, &plan, &em, &scheme, "", |rec, img| {
        let v = zone_mse(sources[&rec.source_id].plane(0), img.plane(0), &zones)?;
        vectors.lock().unwrap().insert(rec.stimulus_id.clone(), v);
        Ok(())
    })?;
    let vectors: Vec<_> = vectors.into_inner().unwrap().into_values().collect();

    let truth = ZoneWeights::new(vec![0.6, 0.15, 0.1, 0.1, 0.05])?;
    let beta = LogisticParams::new(4.0, 0.2, 32.0, 0.0, 2.6);
    for noise in [0.0, 0.1, 0.3] {
        let mos = planted_mos(&vectors, &truth, &beta, 255.0, noise, 5)?;
        let fit = fit_zone_weights(&vectors, &mos, 255.0, &FitOptions::default())?;
        let w = fit.weights.expect("joint fit returns weights");
        let rounded: Vec<f64> = w.as_slice().iter().map(|v| (v * 1e3).round() / 1e3).collect();
        println!("noise {noise}: w = {rounded:?}  PCC {:.4}  RMSE {:.4}", fit.pcc, fit.rmse);
    }
    println!("planted: w = {:?}", truth.as_slice());
    Ok(())
}
