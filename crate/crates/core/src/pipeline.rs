//! Batch commands over a manifest. Each command is idempotent: it reads
//! its inputs from the manifest and the output directory and rewrites its
//! own artifacts atomically.
//!
//! Output layout:
//!
//! | file | command |
//! |---|---|
//! | `geometry.json`, `eccentricity.pfm`, `zones.pgm` | `geometry` |
//! | `viewports/<image>.png` | `extract`, `make-stimuli` |
//! | `stimuli/<stimulus>.png`, `stimuli.json` | `make-stimuli` |
//! | `scores.csv` | `score` |
//! | `weights.csv` | `fit-weights` |
//! | `evaluation.csv`, `evaluation.txt` | `evaluate` |
//! | `report/report.csv`, `report/scatter_<group>_<metric>.svg` | `report` |

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::{evaluate_metric, fit_zone_weights, FitOptions, FitResult};
use crate::geometry::{eccentricity_map, zone_map, EccentricityMap, VirtualGeometry, ZoneMap};
use crate::io::{
    format_sig9, read_image, read_mos_csv, read_scores_csv, read_stimulus_records, write_atomic, write_fit_csv,
    write_image, write_pfm, write_scores_csv, write_stimulus_records, write_zone_pgm, FitRow, ImageEntry, Manifest,
    Provenance, ScoreEntry, ScoresTable, SourceProjection,
};
use crate::metrics::{luminance, FoveationModel, MetricId, MetricSuite, ViewingContext};
use crate::projection::{extract_viewport, EquirectImage, ViewportSpec};
use crate::raster::Image;
use crate::stimulus::{generate_database, DatabasePlan, Scenario, StimulusRecord};
use crate::zwf::zone_mse;

/// Metric id used for the zone-weighted formulation in fit and evaluation
/// tables.
pub const ZWF_ID: &str = "ZWF";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Geometry,
    Extract,
    MakeStimuli,
    Score,
    FitWeights,
    Evaluate,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Geometry => "geometry",
            Command::Extract => "extract",
            Command::MakeStimuli => "make-stimuli",
            Command::Score => "score",
            Command::FitWeights => "fit-weights",
            Command::Evaluate => "evaluate",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum GroupBy {
    /// One fit per source image.
    #[default]
    Image,
    /// One pooled fit over all stimuli.
    All,
}

impl FromStr for GroupBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "image" => Ok(GroupBy::Image),
            "all" => Ok(GroupBy::All),
            other => Err(Error::InvalidParameter(format!(
                "unknown grouping {other:?} (expected image or all)"
            ))),
        }
    }
}

/// Command-line overrides of manifest settings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub seed: Option<u64>,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    pub out_dir: Option<PathBuf>,
    /// Metrics to compute or report; `None` means all in-scope metrics.
    pub metrics: Option<Vec<MetricId>>,
    pub group_by: GroupBy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// Human-readable summary for standard output.
    pub summary: String,
    pub artifacts: Vec<PathBuf>,
}

/// Runs one command; errors carry the command name.
pub fn run(manifest: &Manifest, command: Command, opts: &RunOptions) -> Result<Outcome> {
    let ctx = Context::new(manifest, opts);
    let work = || match command {
        Command::Geometry => ctx.geometry(),
        Command::Extract => ctx.extract(),
        Command::MakeStimuli => ctx.make_stimuli(),
        Command::Score => ctx.score(),
        Command::FitWeights => ctx.fit_weights(),
        Command::Evaluate => ctx.evaluate(),
        Command::Report => ctx.report(),
    };
    let result = match opts.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Configuration(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    result.map_err(|e| e.in_stage(command.name()))
}

struct Context<'a> {
    manifest: &'a Manifest,
    out: PathBuf,
    seed: u64,
    metrics: Vec<MetricId>,
    group_by: GroupBy,
}

#[derive(Serialize)]
struct GeometryReport<'a> {
    virtual_geometry: &'a VirtualGeometry,
    degrees_per_pixel: (f64, f64),
    field_of_view_deg: (f64, f64),
    max_eccentricity_deg: f64,
    zone_bounds_deg: &'a [f64],
    zone_pixel_counts: Vec<usize>,
}

impl<'a> Context<'a> {
    fn new(manifest: &'a Manifest, opts: &RunOptions) -> Self {
        Context {
            manifest,
            out: opts.out_dir.clone().unwrap_or_else(|| manifest.output_dir.clone()),
            seed: opts.seed.unwrap_or(manifest.seed()),
            metrics: opts.metrics.clone().unwrap_or_else(|| MetricId::ALL.to_vec()),
            group_by: opts.group_by,
        }
    }

    fn fit_options(&self) -> FitOptions {
        FitOptions {
            seed: self.seed,
            ..FitOptions::default()
        }
    }

    fn viewing_context(&self) -> ViewingContext {
        ViewingContext::centered(self.manifest.virtual_geometry)
    }

    fn maps(&self) -> Result<(EccentricityMap, ZoneMap)> {
        let vg = &self.manifest.virtual_geometry;
        let em = eccentricity_map(vg, vg.center())?;
        let zones = zone_map(&em, self.manifest.zones());
        Ok((em, zones))
    }

    fn viewport_path(&self, id: &str) -> PathBuf {
        self.out.join("viewports").join(format!("{id}.png"))
    }

    fn stimulus_path(&self, id: &str) -> PathBuf {
        self.out.join("stimuli").join(format!("{id}.png"))
    }

    fn records_path(&self) -> PathBuf {
        self.out.join("stimuli.json")
    }

    fn scores_path(&self) -> PathBuf {
        self.out.join("scores.csv")
    }

    fn geometry(&self) -> Result<Outcome> {
        let vg = &self.manifest.virtual_geometry;
        let (em, zones) = self.maps()?;
        let report = GeometryReport {
            virtual_geometry: vg,
            degrees_per_pixel: vg.degrees_per_pixel(),
            field_of_view_deg: vg.field_of_view_deg(),
            max_eccentricity_deg: em.degrees().max_value(),
            zone_bounds_deg: self.manifest.zones().lower_bounds(),
            zone_pixel_counts: zones.counts(),
        };
        let json = self.out.join("geometry.json");
        let mut text = serde_json::to_string_pretty(&report).expect("geometry serializes");
        text.push('\n');
        write_atomic(&json, text.as_bytes())?;
        let pfm = self.out.join("eccentricity.pfm");
        write_pfm(&pfm, em.degrees())?;
        let pgm = self.out.join("zones.pgm");
        write_zone_pgm(&pgm, &zones)?;

        let mut s = String::new();
        let _ = writeln!(s, "S1 (lens to virtual viewport) = {:.4} mm", vg.lens_to_virtual_mm);
        let _ = writeln!(s, "S3 (eye to virtual viewport)  = {:.4} mm", vg.eye_to_virtual_mm);
        let _ = writeln!(s, "magnification                 = {:.4}", vg.magnification);
        let _ = writeln!(
            s,
            "virtual viewport              = {:.3} x {:.3} mm ({} x {} px)",
            vg.width_mm, vg.height_mm, vg.width_px, vg.height_px
        );
        let (dx, dy) = vg.degrees_per_pixel();
        let _ = writeln!(s, "degrees per pixel             = {dx:.5} x {dy:.5}");
        let (fh, fv) = vg.field_of_view_deg();
        let _ = writeln!(s, "field of view                 = {fh:.2} x {fv:.2} deg");
        let _ = writeln!(s, "max eccentricity              = {:.2} deg", report.max_eccentricity_deg);
        for (k, c) in report.zone_pixel_counts.iter().enumerate() {
            let _ = writeln!(s, "zone Z{} pixels                = {c}", k + 1);
        }
        Ok(Outcome {
            summary: s,
            artifacts: vec![json, pfm, pgm],
        })
    }

    /// Viewport of one source, quantized to its bit depth.
    fn source_viewport(&self, entry: &ImageEntry) -> Result<Image> {
        let img = read_image(&entry.path)?;
        let vg = &self.manifest.virtual_geometry;
        let view = match entry.projection {
            SourceProjection::Equirect => {
                let (fh, fv) = self.manifest.fov_deg;
                let spec = ViewportSpec::with_fov(entry.yaw_deg, entry.pitch_deg, fh, fv, vg.width_px, vg.height_px)?;
                extract_viewport(&EquirectImage::new(img)?, &spec)?
            }
            SourceProjection::Viewport => {
                if (img.width(), img.height()) != (vg.width_px, vg.height_px) {
                    return Err(Error::Configuration(format!(
                        "image {} is {}x{}, expected a {}x{} viewport",
                        entry.id,
                        img.width(),
                        img.height(),
                        vg.width_px,
                        vg.height_px
                    )));
                }
                img
            }
        };
        Ok(view.quantized())
    }

    fn extract(&self) -> Result<Outcome> {
        let mut artifacts = Vec::new();
        for entry in &self.manifest.images {
            let view = self.source_viewport(entry)?;
            let p = self.viewport_path(&entry.id);
            write_image(&p, &view)?;
            artifacts.push(p);
        }
        Ok(Outcome {
            summary: format!("extracted {} viewports into {}\n", artifacts.len(), self.out.join("viewports").display()),
            artifacts,
        })
    }

    fn make_stimuli(&self) -> Result<Outcome> {
        let (em, _) = self.maps()?;
        // File name only, so records do not depend on where the dataset lives.
        let geometry_ref = self
            .manifest
            .path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut records = Vec::new();
        for entry in &self.manifest.images {
            let view = self.source_viewport(entry)?;
            write_image(&self.viewport_path(&entry.id), &view)?;
            let plan = DatabasePlan {
                source_ids: vec![entry.id.clone()],
                ..self.manifest.plan.clone()
            };
            let sources = BTreeMap::from([(entry.id.clone(), view)]);
            records.extend(generate_database(
                &sources,
                &plan,
                &em,
                self.manifest.zones(),
                &geometry_ref,
                |rec: &StimulusRecord, img: &Image| write_image(&self.stimulus_path(&rec.stimulus_id), img),
            )?);
        }
        let p = self.records_path();
        write_stimulus_records(&p, &records)?;
        Ok(Outcome {
            summary: format!("generated {} stimuli into {}\n", records.len(), self.out.join("stimuli").display()),
            artifacts: vec![p],
        })
    }

    fn records(&self) -> Result<Vec<StimulusRecord>> {
        let p = self.records_path();
        if !p.is_file() {
            return Err(Error::Configuration(format!(
                "no stimulus list at {}; run make-stimuli first",
                p.display()
            )));
        }
        read_stimulus_records(&p)
    }

    fn compute_scores(&self, records: &[StimulusRecord]) -> Result<ScoresTable> {
        let (_, zones) = self.maps()?;
        let mut table = ScoresTable::new(zones.zone_count());
        let ctx = self.viewing_context();
        let model = FoveationModel::for_context(&ctx);
        for entry in &self.manifest.images {
            let reference = read_image(&self.viewport_path(&entry.id))?;
            let max = reference.max_value();
            let ref_y = luminance(&reference)?;
            let suite = MetricSuite::new(&ctx, &model, max)?;
            let mine: Vec<&StimulusRecord> = records.iter().filter(|r| r.source_id == entry.id).collect();
            let rows: Vec<Vec<(String, ScoreEntry)>> = mine
                .par_iter()
                .map(|rec| {
                    let dist = read_image(&self.stimulus_path(&rec.stimulus_id))?;
                    let dist_y = luminance(&dist)?;
                    let zm = zone_mse(&ref_y, &dist_y, &zones)?;
                    let mut metrics = self.metrics.clone();
                    if !metrics.contains(&MetricId::Mse) {
                        metrics.insert(0, MetricId::Mse);
                    }
                    let scores = suite.score_all(&metrics, &ref_y, &dist_y)?;
                    Ok(scores
                        .into_iter()
                        .map(|(m, score)| {
                            let entry = ScoreEntry {
                                score,
                                provenance: Provenance::Computed,
                                zone_mse: (m == MetricId::Mse).then(|| zm.clone()),
                            };
                            (m.name().to_string(), entry)
                        })
                        .collect())
                })
                .collect::<Result<_>>()?;
            for (rec, row) in mine.iter().zip(rows) {
                for (metric, e) in row {
                    table.insert(&rec.stimulus_id, &metric, e);
                }
            }
        }
        Ok(table)
    }

    fn score(&self) -> Result<Outcome> {
        let records = self.records()?;
        let mut table = self.compute_scores(&records)?;
        if let Some(ext) = &self.manifest.external_scores {
            let external = read_scores_csv(ext, Provenance::External)?;
            let mut rows = external.rows;
            for e in rows.values_mut() {
                e.provenance = Provenance::External;
                e.zone_mse = None;
            }
            table.merge_missing(ScoresTable {
                zone_count: table.zone_count,
                rows,
            });
        }
        let p = self.scores_path();
        write_scores_csv(&table, &p)?;
        Ok(Outcome {
            summary: format!("wrote {} score rows for {} stimuli to {}\n", table.len(), records.len(), p.display()),
            artifacts: vec![p],
        })
    }

    fn load_scores(&self) -> Result<ScoresTable> {
        let p = self.scores_path();
        if !p.is_file() {
            return Err(Error::Configuration(format!("no scores at {}; run score first", p.display())));
        }
        read_scores_csv(&p, Provenance::Computed)
    }

    fn load_mos(&self) -> Result<BTreeMap<String, f64>> {
        let p = self
            .manifest
            .mos
            .as_ref()
            .ok_or_else(|| Error::Configuration("the manifest names no mos file".into()))?;
        read_mos_csv(p)
    }

    /// Stimulus ids per group, in id order, restricted to stimuli with MOS.
    fn groups(&self, records: &[StimulusRecord], mos: &BTreeMap<String, f64>) -> BTreeMap<String, Vec<String>> {
        let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for r in records {
            if !mos.contains_key(&r.stimulus_id) {
                continue;
            }
            let key = match self.group_by {
                GroupBy::Image => r.source_id.clone(),
                GroupBy::All => "all".to_string(),
            };
            out.entry(key).or_default().push(r.stimulus_id.clone());
        }
        for ids in out.values_mut() {
            ids.sort();
        }
        out
    }

    fn weight_fits(
        &self,
        table: &ScoresTable,
        groups: &BTreeMap<String, Vec<String>>,
        mos: &BTreeMap<String, f64>,
    ) -> Result<Vec<FitRow>> {
        let zms = table.zone_mses();
        let max = self.max_value()?;
        groups
            .iter()
            .map(|(group, ids)| {
                let (vectors, targets): (Vec<_>, Vec<_>) = ids
                    .iter()
                    .filter_map(|id| zms.get(id).map(|z| (z.clone(), mos[id])))
                    .unzip();
                let fit = fit_zone_weights(&vectors, &targets, max, &self.fit_options())
                    .map_err(|e| Error::Configuration(format!("group {group}: {e}")))?;
                Ok(FitRow {
                    metric: ZWF_ID.to_string(),
                    group: group.clone(),
                    fit,
                })
            })
            .collect()
    }

    fn max_value(&self) -> Result<f64> {
        let entry = self
            .manifest
            .images
            .first()
            .ok_or_else(|| Error::Configuration("no images".into()))?;
        Ok(read_image(&self.viewport_path(&entry.id))?.max_value())
    }

    fn fit_weights(&self) -> Result<Outcome> {
        let records = self.records()?;
        let table = self.load_scores()?;
        let mos = self.load_mos()?;
        let groups = self.groups(&records, &mos);
        let rows = self.weight_fits(&table, &groups, &mos)?;
        let p = self.out.join("weights.csv");
        write_fit_csv(&p, &rows, table.zone_count)?;
        let mut s = String::new();
        for r in &rows {
            let w: Vec<String> = r
                .fit
                .weights
                .as_ref()
                .map(|w| w.as_slice().iter().map(|v| format!("{v:.3}")).collect())
                .unwrap_or_default();
            let _ = writeln!(s, "{:<8} w = ({})  PCC {:.3}  RMSE {:.3}", r.group, w.join(", "), r.fit.pcc, r.fit.rmse);
        }
        Ok(Outcome {
            summary: s,
            artifacts: vec![p],
        })
    }

    /// Metric ids in reporting order: in-scope metrics first, then
    /// external ones alphabetically.
    fn metric_order(&self, table: &ScoresTable) -> Vec<String> {
        let present = table.metric_ids();
        let mut out: Vec<String> = MetricId::ALL
            .iter()
            .filter(|m| self.metrics.contains(m))
            .map(|m| m.name().to_string())
            .filter(|m| present.contains(m))
            .collect();
        let known: BTreeSet<&str> = MetricId::ALL.iter().map(|m| m.name()).collect();
        out.extend(present.iter().filter(|m| !known.contains(m.as_str())).cloned());
        out
    }

    fn evaluation_rows(&self) -> Result<(Vec<FitRow>, Vec<String>, usize)> {
        let records = self.records()?;
        let table = self.load_scores()?;
        let mos = self.load_mos()?;
        let groups = self.groups(&records, &mos);
        let mut rows = Vec::new();
        for metric in self.metric_order(&table) {
            for (group, ids) in &groups {
                let (scores, targets): (Vec<f64>, Vec<f64>) = ids
                    .iter()
                    .filter_map(|id| table.get(id, &metric).map(|e| (e.score, mos[id])))
                    .unzip();
                match evaluate_metric(&scores, &targets, &self.fit_options()) {
                    Ok(fit) => rows.push(FitRow {
                        metric: metric.clone(),
                        group: group.clone(),
                        fit,
                    }),
                    Err(e) => log::warn!("{metric} / {group}: not evaluated: {e}"),
                }
            }
        }
        rows.extend(self.weight_fits(&table, &groups, &mos)?);
        Ok((rows, groups.keys().cloned().collect(), table.zone_count))
    }

    fn evaluate(&self) -> Result<Outcome> {
        let (rows, groups, zone_count) = self.evaluation_rows()?;
        let csv = self.out.join("evaluation.csv");
        write_fit_csv(&csv, &rows, zone_count)?;
        let text = evaluation_table(&rows, &groups);
        let txt = self.out.join("evaluation.txt");
        write_atomic(&txt, text.as_bytes())?;
        Ok(Outcome {
            summary: text,
            artifacts: vec![csv, txt],
        })
    }

    fn report(&self) -> Result<Outcome> {
        let records = self.records()?;
        let table = self.load_scores()?;
        let mos = self.load_mos()?;
        let metrics = self.metric_order(&table);
        let dir = self.out.join("report");

        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["stimulus_id".to_string(), "source_id".into(), "scenario".into(), "mos".into()];
        header.extend(metrics.iter().cloned());
        let table_err = |e: csv::Error| Error::Table {
            path: dir.join("report.csv"),
            message: e.to_string(),
        };
        w.write_record(&header).map_err(table_err)?;
        let mut sorted: Vec<&StimulusRecord> = records.iter().filter(|r| mos.contains_key(&r.stimulus_id)).collect();
        sorted.sort_by(|a, b| a.stimulus_id.cmp(&b.stimulus_id));
        for r in &sorted {
            let mut rec = vec![
                r.stimulus_id.clone(),
                r.source_id.clone(),
                r.scenario.to_string(),
                format_sig9(mos[&r.stimulus_id]),
            ];
            rec.extend(
                metrics
                    .iter()
                    .map(|m| table.get(&r.stimulus_id, m).map(|e| format_sig9(e.score)).unwrap_or_default()),
            );
            w.write_record(&rec).map_err(table_err)?;
        }
        let csv_path = dir.join("report.csv");
        write_atomic(&csv_path, &w.into_inner().map_err(|e| Error::InvalidParameter(e.to_string()))?)?;
        let mut artifacts = vec![csv_path];

        let groups = self.groups(&records, &mos);
        let scenario_of: BTreeMap<&str, Scenario> =
            records.iter().map(|r| (r.stimulus_id.as_str(), r.scenario)).collect();
        for (group, ids) in &groups {
            for metric in &metrics {
                let points: Vec<ScatterPoint> = ids
                    .iter()
                    .filter_map(|id| {
                        let e = table.get(id, metric)?;
                        e.score.is_finite().then(|| ScatterPoint {
                            x: e.score,
                            y: mos[id],
                            scenario: scenario_of[id.as_str()],
                        })
                    })
                    .collect();
                let p = dir.join(format!("scatter_{group}_{metric}.svg"));
                write_atomic(&p, scatter_svg(&format!("{metric} vs MOS ({group})"), metric, &points).as_bytes())?;
                artifacts.push(p);
            }
        }
        Ok(Outcome {
            summary: format!("wrote {} report artifacts into {}\n", artifacts.len(), dir.display()),
            artifacts,
        })
    }
}

/// Metrics as rows; PCC per group, then RMSE per group, as columns.
pub fn evaluation_table(rows: &[FitRow], groups: &[String]) -> String {
    let mut by_metric: Vec<(&str, BTreeMap<&str, &FitResult>)> = Vec::new();
    for r in rows {
        match by_metric.iter_mut().find(|(m, _)| *m == r.metric) {
            Some((_, g)) => {
                g.insert(&r.group, &r.fit);
            }
            None => by_metric.push((&r.metric, BTreeMap::from([(r.group.as_str(), &r.fit)]))),
        }
    }
    let cell = |v: Option<f64>| v.map(|v| format!("{v:>7.2}")).unwrap_or_else(|| format!("{:>7}", "-"));
    let mut s = String::new();
    let _ = write!(s, "{:<10}", "Metric");
    for g in groups {
        let _ = write!(s, " {:>7}", format!("PCC:{g}"));
    }
    for g in groups {
        let _ = write!(s, " {:>7}", format!("RMSE:{g}"));
    }
    s.push('\n');
    for (metric, fits) in &by_metric {
        let _ = write!(s, "{metric:<10}");
        for g in groups {
            let _ = write!(s, " {}", cell(fits.get(g.as_str()).map(|f| f.pcc)));
        }
        for g in groups {
            let _ = write!(s, " {}", cell(fits.get(g.as_str()).map(|f| f.rmse)));
        }
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterPoint {
    pub x: f64,
    pub y: f64,
    pub scenario: Scenario,
}

struct Num(f64);

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = (self.0 * 100.0).round() / 100.0;
        write!(f, "{}", if v == 0.0 { 0.0 } else { v })
    }
}

/// Static scatter plot: S1 stimuli as filled circles, S2 as open squares.
pub fn scatter_svg(title: &str, x_label: &str, points: &[ScatterPoint]) -> String {
    let (w, h) = (480.0, 360.0);
    let (left, right, top, bottom) = (60.0, 20.0, 40.0, 50.0);
    let range = |vals: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            let pad = 0.05 * (hi - lo);
            (lo - pad, hi + pad)
        }
    };
    let (x0, x1) = range(&mut points.iter().map(|p| p.x));
    let (y0, y1) = range(&mut points.iter().map(|p| p.y));
    let px = |x: f64| left + (x - x0) / (x1 - x0) * (w - left - right);
    let py = |y: f64| h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom);
    let esc = |t: &str| t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#, w / 2.0, esc(title));
    let (ax0, ax1, ay0, ay1) = (left, w - right, h - bottom, top);
    let _ = writeln!(s, r#"<line x1="{ax0}" y1="{ay0}" x2="{ax1}" y2="{ay0}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{ax0}" y1="{ay0}" x2="{ax0}" y2="{ay1}" stroke="black"/>"#);
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = x0 + t * (x1 - x0);
        let yv = y0 + t * (y1 - y0);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            Num(px(xv)),
            ay0 + 15.0,
            Num(xv)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            ax0 - 5.0,
            Num(py(yv) + 4.0),
            Num(yv)
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (ax0 + ax1) / 2.0, h - 12.0, esc(x_label));
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">MOS</text>"#,
        (ay0 + ay1) / 2.0,
        (ay0 + ay1) / 2.0
    );
    for p in points {
        let (cx, cy) = (px(p.x), py(p.y));
        match p.scenario {
            Scenario::S1 => {
                let _ = writeln!(s, r##"<circle cx="{}" cy="{}" r="3.5" fill="#1f77b4"/>"##, Num(cx), Num(cy));
            }
            Scenario::S2 => {
                let _ = writeln!(
                    s,
                    r##"<rect x="{}" y="{}" width="7" height="7" fill="none" stroke="#d62728"/>"##,
                    Num(cx - 3.5),
                    Num(cy - 3.5)
                );
            }
        }
    }
    let lx = ax1 - 150.0;
    let _ = writeln!(s, r##"<circle cx="{}" cy="{}" r="3.5" fill="#1f77b4"/>"##, lx, top + 8.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}">S1 (center higher quality)</text>"#, lx + 8.0, top + 12.0);
    let _ = writeln!(
        s,
        r##"<rect x="{}" y="{}" width="7" height="7" fill="none" stroke="#d62728"/>"##,
        lx - 3.5,
        top + 20.5
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}">S2 (center lower quality)</text>"#, lx + 8.0, top + 28.0);
    s.push_str("</svg>\n");
    s
}

/// Locates the manifest for a command-line run: an explicit path, else
/// `manifest.json` in the working directory.
pub fn manifest_path(explicit: Option<&Path>) -> PathBuf {
    explicit.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("manifest.json"))
}
