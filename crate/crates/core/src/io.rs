//! Manifests, tables and raster files.
//!
//! Every writer goes through [`write_atomic`]: bytes land in a sibling
//! temporary file that is renamed over the target.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{Cursor, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma, Rgb};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::FitResult;
use crate::geometry::{derive_virtual_geometry, DisplayGeometry, VirtualGeometry, ZoneMap, ZoneScheme};
use crate::raster::{Image, Plane};
use crate::stimulus::{
    DatabasePlan, PatternId, QualityPattern, Scenario, StimulusRecord, DEFAULT_BELT_WIDTH_DEG, DEFAULT_KERNEL_EXTENT,
    SCENARIO1_SIGMAS, SCENARIO2_SIGMAS,
};
use crate::zwf::ZoneMseVector;

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// `%.9g`-style rendering; infinities as `inf` / `-inf`.
pub fn format_sig9(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-5..9).contains(&exp) {
        trim(format!("{v:.*}", (8 - exp) as usize))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa.to_string()), exp.abs())
    }
}

pub fn parse_number(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        t => t
            .parse::<f64>()
            .map_err(|_| Error::InvalidParameter(format!("not a number: {s:?}"))),
    }
}

// ---------------------------------------------------------------- images

fn image_error(path: &Path, source: image::ImageError) -> Error {
    Error::Image {
        path: path.to_path_buf(),
        source,
    }
}

/// Loads a PNG/PNM file as 1 (gray) or 3 (RGB) planes; alpha is dropped.
pub fn read_image(path: &Path) -> Result<Image> {
    let dynamic = image::open(path).map_err(|e| image_error(path, e))?;
    let (w, h) = (dynamic.width() as usize, dynamic.height() as usize);
    let planes_from = |channels: usize, samples: Vec<f64>| -> Result<Vec<Plane>> {
        (0..channels)
            .map(|c| Plane::from_vec(w, h, samples.iter().skip(c).step_by(channels).copied().collect()))
            .collect()
    };
    let (planes, depth) = match dynamic {
        DynamicImage::ImageLuma8(b) => (planes_from(1, b.into_raw().into_iter().map(f64::from).collect())?, 8),
        DynamicImage::ImageLumaA8(_) => {
            let b = dynamic.to_luma8();
            (planes_from(1, b.into_raw().into_iter().map(f64::from).collect())?, 8)
        }
        DynamicImage::ImageLuma16(b) => (planes_from(1, b.into_raw().into_iter().map(f64::from).collect())?, 16),
        DynamicImage::ImageLumaA16(_) => {
            let b = dynamic.to_luma16();
            (planes_from(1, b.into_raw().into_iter().map(f64::from).collect())?, 16)
        }
        DynamicImage::ImageRgb16(_) | DynamicImage::ImageRgba16(_) => {
            let b = dynamic.to_rgb16();
            (planes_from(3, b.into_raw().into_iter().map(f64::from).collect())?, 16)
        }
        other => {
            let b = other.to_rgb8();
            (planes_from(3, b.into_raw().into_iter().map(f64::from).collect())?, 8)
        }
    };
    Image::new(planes, depth)
}

/// Writes a lossless PNG at the image's bit depth (8 or 16).
pub fn write_image(path: &Path, img: &Image) -> Result<()> {
    let q = img.quantized();
    let (w, h) = (q.width() as u32, q.height() as u32);
    let interleave = || -> Vec<f64> {
        let n = q.width() * q.height();
        let mut out = Vec::with_capacity(n * q.channels());
        for i in 0..n {
            for p in q.planes() {
                out.push(p.data()[i]);
            }
        }
        out
    };
    let dynamic = match (q.channels(), q.bit_depth() > 8) {
        (1, false) => DynamicImage::ImageLuma8(
            ImageBuffer::<Luma<u8>, _>::from_raw(w, h, interleave().into_iter().map(|v| v as u8).collect())
                .expect("buffer size"),
        ),
        (1, true) => DynamicImage::ImageLuma16(
            ImageBuffer::<Luma<u16>, _>::from_raw(w, h, interleave().into_iter().map(|v| v as u16).collect())
                .expect("buffer size"),
        ),
        (3, false) => DynamicImage::ImageRgb8(
            ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, interleave().into_iter().map(|v| v as u8).collect())
                .expect("buffer size"),
        ),
        (3, true) => DynamicImage::ImageRgb16(
            ImageBuffer::<Rgb<u16>, _>::from_raw(w, h, interleave().into_iter().map(|v| v as u16).collect())
                .expect("buffer size"),
        ),
        (c, _) => return Err(Error::Channels(c)),
    };
    let mut bytes = Cursor::new(Vec::new());
    dynamic
        .write_to(&mut bytes, ImageFormat::Png)
        .map_err(|e| image_error(path, e))?;
    write_atomic(path, &bytes.into_inner())
}

/// Little-endian single-channel PFM, rows top to bottom.
pub fn write_pfm(path: &Path, plane: &Plane) -> Result<()> {
    let mut bytes = format!("Pf\n{} {}\n-1.0\n", plane.width(), plane.height()).into_bytes();
    for y in 0..plane.height() {
        for &v in plane.row(y) {
            bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    write_atomic(path, &bytes)
}

/// Binary PGM with zone labels `1..=K` (Z1 = 1).
pub fn write_zone_pgm(path: &Path, zones: &ZoneMap) -> Result<()> {
    let mut bytes = format!("P5\n{} {}\n255\n", zones.width(), zones.height()).into_bytes();
    bytes.extend(zones.zones().data().iter().map(|&z| z + 1));
    write_atomic(path, &bytes)
}

// -------------------------------------------------------------- manifest

/// Viewport dimensions either given directly or derived from a panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScreenConfig {
    pub diagonal_in: f64,
    pub resolution_px: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub focal_length_mm: f64,
    pub lens_to_display_mm: f64,
    pub lens_to_eye_mm: f64,
    pub viewport_px: [usize; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub viewport_mm: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub screen: Option<ScreenConfig>,
}

impl GeometryConfig {
    pub fn gear_vr() -> Self {
        GeometryConfig {
            focal_length_mm: 62.0,
            lens_to_display_mm: 25.0,
            lens_to_eye_mm: 10.0,
            viewport_px: [1280, 1440],
            viewport_mm: None,
            screen: Some(ScreenConfig {
                diagonal_in: 5.1,
                resolution_px: [2560, 1440],
            }),
        }
    }

    pub fn display(&self) -> Result<DisplayGeometry> {
        let px = (self.viewport_px[0], self.viewport_px[1]);
        match (&self.viewport_mm, &self.screen) {
            (Some(mm), None) => DisplayGeometry::new(
                self.focal_length_mm,
                self.lens_to_display_mm,
                self.lens_to_eye_mm,
                px,
                (mm[0], mm[1]),
            ),
            (None, Some(s)) => DisplayGeometry::from_screen(
                self.focal_length_mm,
                self.lens_to_display_mm,
                self.lens_to_eye_mm,
                px,
                s.diagonal_in,
                (s.resolution_px[0], s.resolution_px[1]),
            ),
            _ => Err(Error::InvalidParameter(
                "give exactly one of viewport_mm or screen".into(),
            )),
        }
    }
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self::gear_vr()
    }
}

/// Viewport angles; each defaults to the angle the virtual viewport
/// subtends at the eye.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewportConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fov_h_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fov_v_deg: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceProjection {
    /// 2:1 panorama; the viewport is extracted at yaw/pitch.
    #[default]
    Equirect,
    /// Already a viewport at the geometry's pixel size.
    Viewport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageEntry {
    pub id: String,
    pub path: PathBuf,
    #[serde(default)]
    pub yaw_deg: f64,
    #[serde(default)]
    pub pitch_deg: f64,
    #[serde(default)]
    pub projection: SourceProjection,
}

fn default_patterns() -> Vec<String> {
    PatternId::ALL.iter().map(ToString::to_string).collect()
}

fn default_sigma_grid() -> BTreeMap<String, Vec<f64>> {
    BTreeMap::from([
        ("S1".to_string(), SCENARIO1_SIGMAS.to_vec()),
        ("S2".to_string(), SCENARIO2_SIGMAS.to_vec()),
    ])
}

fn default_belt() -> f64 {
    DEFAULT_BELT_WIDTH_DEG
}

fn default_extent() -> usize {
    DEFAULT_KERNEL_EXTENT
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// On-disk manifest schema (JSON). Relative paths resolve against the
/// manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestFile {
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub zones: ZoneScheme,
    #[serde(default)]
    pub viewport: ViewportConfig,
    pub images: Vec<ImageEntry>,
    #[serde(default = "default_patterns")]
    pub patterns: Vec<String>,
    #[serde(default = "default_sigma_grid")]
    pub sigmas: BTreeMap<String, Vec<f64>>,
    #[serde(default = "default_belt")]
    pub belt_width_deg: f64,
    #[serde(default = "default_extent")]
    pub kernel_extent: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mos: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_scores: Option<PathBuf>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

impl ManifestFile {
    /// Full design (8 patterns, default blur levels, Gear VR geometry) over
    /// the given images.
    pub fn standard(images: Vec<ImageEntry>) -> Self {
        ManifestFile {
            geometry: GeometryConfig::gear_vr(),
            zones: ZoneScheme::retina(),
            viewport: ViewportConfig::default(),
            images,
            patterns: default_patterns(),
            sigmas: default_sigma_grid(),
            belt_width_deg: DEFAULT_BELT_WIDTH_DEG,
            kernel_extent: DEFAULT_KERNEL_EXTENT,
            seed: 0,
            mos: None,
            external_scores: None,
            output_dir: default_output(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

/// A loaded manifest with every path resolved and every invariant checked.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub path: PathBuf,
    pub file: ManifestFile,
    pub display: DisplayGeometry,
    pub virtual_geometry: VirtualGeometry,
    pub fov_deg: (f64, f64),
    /// Image entries with absolute paths.
    pub images: Vec<ImageEntry>,
    pub plan: DatabasePlan,
    pub mos: Option<PathBuf>,
    pub external_scores: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Manifest {
    pub fn seed(&self) -> u64 {
        self.file.seed
    }

    pub fn zones(&self) -> &ZoneScheme {
        &self.file.zones
    }
}

fn manifest_error(path: &Path, message: impl fmt::Display) -> Error {
    Error::Manifest {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

pub fn parse_manifest(text: &str, path: &Path) -> Result<ManifestFile> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        manifest_error(path, format!("at `{field}`: {}", e.inner()))
    })
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file = parse_manifest(&text, path)?;
    let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
    validate_manifest(file, path, &base)
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Checks a parsed manifest; paths resolve against `base`.
pub fn validate_manifest(file: ManifestFile, path: &Path, base: &Path) -> Result<Manifest> {
    let err = |field: &str, message: String| manifest_error(path, format!("at `{field}`: {message}"));
    let display = file.geometry.display().map_err(|e| err("geometry", e.to_string()))?;
    let virtual_geometry = derive_virtual_geometry(&display).map_err(|e| err("geometry", e.to_string()))?;

    if file.images.is_empty() {
        return Err(err("images", "at least one image is required".into()));
    }
    let mut seen = BTreeSet::new();
    let mut images = Vec::with_capacity(file.images.len());
    for (i, entry) in file.images.iter().enumerate() {
        if entry.id.is_empty() || entry.id.contains(['/', '\\', ',']) {
            return Err(err(&format!("images[{i}].id"), format!("invalid image id {:?}", entry.id)));
        }
        if !seen.insert(entry.id.clone()) {
            return Err(err(&format!("images[{i}].id"), format!("duplicate image id {:?}", entry.id)));
        }
        let resolved = resolve(base, &entry.path);
        if !resolved.is_file() {
            return Err(err(
                &format!("images[{i}].path"),
                format!("image file {} does not exist", resolved.display()),
            ));
        }
        if !(-180.0..180.0).contains(&entry.yaw_deg) || !(-90.0..=90.0).contains(&entry.pitch_deg) {
            return Err(err(
                &format!("images[{i}]"),
                format!("yaw {} / pitch {} out of range", entry.yaw_deg, entry.pitch_deg),
            ));
        }
        images.push(ImageEntry {
            path: resolved,
            ..entry.clone()
        });
    }

    let mut patterns = Vec::with_capacity(file.patterns.len());
    for (i, label) in file.patterns.iter().enumerate() {
        let id = PatternId::from_str(label).map_err(|e| err(&format!("patterns[{i}]"), e.to_string()))?;
        let p = QualityPattern::standard(id);
        if p.hq_flags().len() != file.zones.zone_count() {
            return Err(err(
                &format!("patterns[{i}]"),
                format!("standard patterns need {} zones", p.hq_flags().len()),
            ));
        }
        patterns.push(p);
    }
    if patterns.is_empty() {
        return Err(err("patterns", "at least one pattern is required".into()));
    }

    let mut sigmas = BTreeMap::new();
    for (key, list) in &file.sigmas {
        let scenario = Scenario::from_str(key).map_err(|e| err(&format!("sigmas.{key}"), e.to_string()))?;
        if let Some(bad) = list.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(err(&format!("sigmas.{key}"), format!("sigma {bad} must be positive")));
        }
        sigmas.insert(scenario, list.clone());
    }
    for p in &patterns {
        if sigmas.get(&p.scenario()).is_none_or(Vec::is_empty) {
            return Err(err(
                "sigmas",
                format!("pattern {} needs a blur grid for scenario {}", p.label(), p.scenario()),
            ));
        }
    }
    if !(file.belt_width_deg.is_finite() && file.belt_width_deg >= 0.0) {
        return Err(err("belt_width_deg", "must be a non-negative number".into()));
    }

    let derived = virtual_geometry.field_of_view_deg();
    let fov_deg = (
        file.viewport.fov_h_deg.unwrap_or(derived.0),
        file.viewport.fov_v_deg.unwrap_or(derived.1),
    );
    for (name, v) in [("viewport.fov_h_deg", fov_deg.0), ("viewport.fov_v_deg", fov_deg.1)] {
        if !(v > 0.0 && v < 180.0) {
            return Err(err(name, format!("field of view {v} outside (0, 180)")));
        }
    }

    let check_optional = |field: &str, p: &Option<PathBuf>| -> Result<Option<PathBuf>> {
        match p {
            None => Ok(None),
            Some(p) => {
                let r = resolve(base, p);
                if r.is_file() {
                    Ok(Some(r))
                } else {
                    Err(err(field, format!("file {} does not exist", r.display())))
                }
            }
        }
    };
    let mos = check_optional("mos", &file.mos)?;
    let external_scores = check_optional("external_scores", &file.external_scores)?;

    let plan = DatabasePlan {
        source_ids: images.iter().map(|i| i.id.clone()).collect(),
        patterns,
        sigmas,
        kernel_extent: file.kernel_extent,
        belt_width_deg: file.belt_width_deg,
    };
    let output_dir = resolve(base, &file.output_dir);
    Ok(Manifest {
        path: path.to_path_buf(),
        display,
        virtual_geometry,
        fov_deg,
        images,
        plan,
        mos,
        external_scores,
        output_dir,
        file,
    })
}

// ---------------------------------------------------------------- scores

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Computed,
    External,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Computed => "computed",
            Provenance::External => "external",
        })
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "computed" => Ok(Provenance::Computed),
            "external" => Ok(Provenance::External),
            other => Err(Error::InvalidParameter(format!("unknown provenance {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreEntry {
    pub score: f64,
    pub provenance: Provenance,
    /// Present on the MSE row of each stimulus.
    pub zone_mse: Option<ZoneMseVector>,
}

/// Scores keyed by `(stimulus_id, metric_id)`.
///
/// CSV header: `stimulus_id,metric_id,score,provenance,mse_z1..mse_zK`.
/// Zone columns are filled only on rows carrying a zone-MSE vector; an
/// empty cell on such a row marks a zone without pixels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoresTable {
    pub zone_count: usize,
    pub rows: BTreeMap<(String, String), ScoreEntry>,
}

impl ScoresTable {
    pub fn new(zone_count: usize) -> Self {
        ScoresTable {
            zone_count,
            rows: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, stimulus_id: &str, metric_id: &str, entry: ScoreEntry) {
        self.rows.insert((stimulus_id.to_string(), metric_id.to_string()), entry);
    }

    pub fn get(&self, stimulus_id: &str, metric_id: &str) -> Option<&ScoreEntry> {
        self.rows.get(&(stimulus_id.to_string(), metric_id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn metric_ids(&self) -> BTreeSet<String> {
        self.rows.keys().map(|(_, m)| m.clone()).collect()
    }

    pub fn stimulus_ids(&self) -> BTreeSet<String> {
        self.rows.keys().map(|(s, _)| s.clone()).collect()
    }

    /// Zone-MSE vector of every stimulus that has one.
    pub fn zone_mses(&self) -> BTreeMap<String, ZoneMseVector> {
        self.rows
            .iter()
            .filter_map(|((s, _), e)| e.zone_mse.as_ref().map(|z| (s.clone(), z.clone())))
            .collect()
    }

    /// Adds rows whose key is not yet present.
    pub fn merge_missing(&mut self, other: ScoresTable) {
        for (k, v) in other.rows {
            self.rows.entry(k).or_insert(v);
        }
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Table {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn table_error(path: &Path, message: impl fmt::Display) -> Error {
    Error::Table {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

pub fn scores_csv_bytes(table: &ScoresTable) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["stimulus_id".to_string(), "metric_id".into(), "score".into(), "provenance".into()];
    header.extend((1..=table.zone_count).map(|k| format!("mse_z{k}")));
    w.write_record(&header).map_err(|e| csv_error(Path::new("<memory>"), e))?;
    for ((stimulus, metric), entry) in &table.rows {
        let mut rec = vec![stimulus.clone(), metric.clone(), format_sig9(entry.score), entry.provenance.to_string()];
        match &entry.zone_mse {
            Some(z) => rec.extend(z.mse.iter().map(|m| m.map(format_sig9).unwrap_or_default())),
            None => rec.extend(std::iter::repeat_n(String::new(), table.zone_count)),
        }
        w.write_record(&rec).map_err(|e| csv_error(Path::new("<memory>"), e))?;
    }
    w.into_inner()
        .map_err(|e| Error::InvalidParameter(e.to_string()))
}

pub fn write_scores_csv(table: &ScoresTable, path: &Path) -> Result<()> {
    write_atomic(path, &scores_csv_bytes(table)?)
}

/// Reads a scores table. Files without a provenance column (external
/// score dumps) are accepted; their rows are marked `default_provenance`.
pub fn read_scores_csv(path: &Path, default_provenance: Provenance) -> Result<ScoresTable> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = r.headers().map_err(|e| csv_error(path, e))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(ci_stim), Some(ci_metric), Some(ci_score)) = (col("stimulus_id"), col("metric_id"), col("score")) else {
        return Err(table_error(path, "need stimulus_id, metric_id and score columns"));
    };
    let ci_prov = col("provenance");
    let zone_cols: Vec<usize> = (1..)
        .map_while(|k| col(&format!("mse_z{k}")))
        .collect();
    let mut table = ScoresTable::new(zone_cols.len());
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let at = |e: Error| table_error(path, format!("row {}: {e}", line + 2));
        let provenance = match ci_prov {
            Some(c) => Provenance::from_str(&rec[c]).map_err(at)?,
            None => default_provenance,
        };
        let cells: Vec<&str> = zone_cols.iter().map(|&c| rec.get(c).unwrap_or("")).collect();
        let zone_mse = if cells.iter().any(|c| !c.is_empty()) || (rec[ci_metric] == *"MSE" && !cells.is_empty()) {
            let mse = cells
                .iter()
                .map(|c| if c.is_empty() { Ok(None) } else { parse_number(c).map(Some) })
                .collect::<Result<Vec<_>>>()
                .map_err(at)?;
            Some(ZoneMseVector {
                pixel_counts: mse.iter().map(|m| usize::from(m.is_some())).collect(),
                mse,
            })
        } else {
            None
        };
        let key = (rec[ci_stim].to_string(), rec[ci_metric].to_string());
        if table.rows.contains_key(&key) {
            return Err(table_error(path, format!("duplicate row for {key:?}")));
        }
        table.rows.insert(
            key,
            ScoreEntry {
                score: parse_number(&rec[ci_score]).map_err(at)?,
                provenance,
                zone_mse,
            },
        );
    }
    Ok(table)
}

// ------------------------------------------------------------------- MOS

/// Reads `stimulus_id,mos` rows; other columns are ignored.
pub fn read_mos_csv(path: &Path) -> Result<BTreeMap<String, f64>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = r.headers().map_err(|e| csv_error(path, e))?.clone();
    let (Some(cs), Some(cm)) = (
        headers.iter().position(|h| h == "stimulus_id"),
        headers.iter().position(|h| h == "mos"),
    ) else {
        return Err(table_error(path, "need stimulus_id and mos columns"));
    };
    let mut out = BTreeMap::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let mos = parse_number(&rec[cm]).map_err(|e| table_error(path, format!("row {}: {e}", line + 2)))?;
        if out.insert(rec[cs].to_string(), mos).is_some() {
            return Err(table_error(path, format!("duplicate MOS for {}", &rec[cs])));
        }
    }
    Ok(out)
}

pub fn write_mos_csv(path: &Path, mos: &BTreeMap<String, f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["stimulus_id", "mos"]).map_err(|e| csv_error(path, e))?;
    for (id, m) in mos {
        w.write_record([id.as_str(), &format_sig9(*m)]).map_err(|e| csv_error(path, e))?;
    }
    write_atomic(path, &w.into_inner().map_err(|e| Error::InvalidParameter(e.to_string()))?)
}

// --------------------------------------------------------- fit results

#[derive(Debug, Clone, PartialEq)]
pub struct FitRow {
    pub metric: String,
    pub group: String,
    pub fit: FitResult,
}

/// Header: `metric,group,beta1..beta5,w1..wK,pcc,rmse`; weight cells are
/// empty for plain metrics.
pub fn fit_csv_bytes(rows: &[FitRow], zone_count: usize) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["metric".to_string(), "group".into()];
    header.extend((1..=5).map(|k| format!("beta{k}")));
    header.extend((1..=zone_count).map(|k| format!("w{k}")));
    header.extend(["pcc".to_string(), "rmse".into()]);
    let mem = Path::new("<memory>");
    w.write_record(&header).map_err(|e| csv_error(mem, e))?;
    for row in rows {
        let mut rec = vec![row.metric.clone(), row.group.clone()];
        rec.extend(row.fit.params.to_array().iter().map(|&b| format_sig9(b)));
        match &row.fit.weights {
            Some(ws) => rec.extend(ws.as_slice().iter().map(|&v| format_sig9(v))),
            None => rec.extend(std::iter::repeat_n(String::new(), zone_count)),
        }
        rec.push(format_sig9(row.fit.pcc));
        rec.push(format_sig9(row.fit.rmse));
        w.write_record(&rec).map_err(|e| csv_error(mem, e))?;
    }
    w.into_inner().map_err(|e| Error::InvalidParameter(e.to_string()))
}

pub fn write_fit_csv(path: &Path, rows: &[FitRow], zone_count: usize) -> Result<()> {
    write_atomic(path, &fit_csv_bytes(rows, zone_count)?)
}

// ------------------------------------------------------ stimulus records

pub fn write_stimulus_records(path: &Path, records: &[StimulusRecord]) -> Result<()> {
    let mut text = serde_json::to_string_pretty(records).expect("records serialize");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_stimulus_records(path: &Path) -> Result<Vec<StimulusRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| manifest_error(path, format!("at `{}`: {}", e.path(), e.inner())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(28.1308036), "28.1308036");
        assert_eq!(format_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(format_sig9(123456789.4), "123456789");
        assert_eq!(format_sig9(1234567891.0), "1.23456789e+09");
        assert_eq!(format_sig9(1.5e-7), "1.5e-07");
        assert_eq!(format_sig9(-0.00012), "-0.00012");
        assert_eq!(format_sig9(f64::INFINITY), "inf");
        assert_eq!(parse_number("inf").unwrap(), f64::INFINITY);
        assert_eq!(parse_number("1.5e-07").unwrap(), 1.5e-7);
    }

    #[test]
    fn empty_scores_table_is_header_only() {
        let bytes = scores_csv_bytes(&ScoresTable::new(5)).unwrap();
        assert_eq!(
            String::from_utf8(bytes).unwrap(),
            "stimulus_id,metric_id,score,provenance,mse_z1,mse_z2,mse_z3,mse_z4,mse_z5\n"
        );
    }

    #[test]
    fn scores_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.csv");
        let mut t = ScoresTable::new(2);
        t.insert(
            "I1_P1_s2",
            "MSE",
            ScoreEntry {
                score: 12.5,
                provenance: Provenance::Computed,
                zone_mse: Some(ZoneMseVector {
                    mse: vec![Some(0.0), Some(25.0)],
                    pixel_counts: vec![1, 1],
                }),
            },
        );
        t.insert(
            "I1_P1_s2",
            "VPSNR",
            ScoreEntry {
                score: f64::INFINITY,
                provenance: Provenance::Computed,
                zone_mse: None,
            },
        );
        write_scores_csv(&t, &path).unwrap();
        let back = read_scores_csv(&path, Provenance::External).unwrap();
        assert_eq!(back, t);
        assert_eq!(fs::read(&path).unwrap(), scores_csv_bytes(&back).unwrap());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/b.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn image_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.png");
        let img = Image::new(
            (0..3).map(|c| Plane::from_fn(5, 4, |x, y| ((x * 40 + y * 7 + c * 50) % 256) as f64)).collect(),
            8,
        )
        .unwrap();
        write_image(&p, &img).unwrap();
        assert_eq!(read_image(&p).unwrap(), img);
        let g16 = Image::gray(Plane::from_fn(3, 3, |x, y| (x * 9000 + y * 300) as f64), 16).unwrap();
        write_image(&p, &g16).unwrap();
        assert_eq!(read_image(&p).unwrap(), g16);
    }
}
