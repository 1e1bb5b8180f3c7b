//! Threshold data on disk: a fixed CSV schema for individual measurements
//! and a TOML manifest that groups files into named datasets with fitting
//! roles. Parsing is strict; a file either loads completely or reports every
//! malformed row.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::cff::CFF_BRACKET_MAX_HZ;
use crate::error::{DataError, RowError};
use crate::stimulus::{Field, Geometry, Stimulus};
use crate::tcsf::FREQUENCY_SCALE_MIN_LUMINANCE;

pub const CSV_HEADER: [&str; 11] = [
    "temp_freq_hz",
    "spat_freq_cpd",
    "ecc_deg",
    "luminance_cdm2",
    "shape",
    "area_deg2",
    "width_deg",
    "height_deg",
    "contrast",
    "measure",
    "value",
];

/// What a row reports: a contrast sensitivity at a fixed frequency, or a
/// critical flicker frequency at a fixed contrast.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Sensitivity,
    Cff,
}

impl Measure {
    fn csv_label(self) -> &'static str {
        match self {
            Measure::Sensitivity => "S",
            Measure::Cff => "CFF",
        }
    }
}

/// Patch footprint exactly as the file states it: discs by area, rectangles
/// by sides. Kept schema-native so a loaded file writes back unchanged;
/// conversion to model geometry happens in [`DataPoint::geometry`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldShape {
    Disc { area: f64 },
    Rect { width: f64, height: f64 },
}

/// One measured threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataPoint {
    /// Flicker frequency, Hz. Present exactly for sensitivity rows; CFF rows
    /// report their frequency in `value`.
    pub temp_freq: Option<f64>,
    /// Spatial frequency of the probe, cycles/deg. Zero for uniform flicker.
    pub spat_freq: f64,
    /// Eccentricity of the patch center, degrees.
    pub eccentricity: f64,
    /// Mean luminance, cd/m^2.
    pub luminance: f64,
    pub shape: FieldShape,
    /// Modulation contrast of the measurement, in (0, 1].
    pub contrast: f64,
    pub measure: Measure,
    /// Sensitivity (>= 1) or CFF in Hz, per `measure`.
    pub value: f64,
}

impl DataPoint {
    pub fn geometry(&self) -> Geometry {
        match self.shape {
            FieldShape::Disc { area } => Geometry::Disc {
                radius: (area / std::f64::consts::PI).sqrt(),
                eccentricity: self.eccentricity,
            },
            FieldShape::Rect { width, height } => Geometry::Rect {
                width,
                height,
                eccentricity: self.eccentricity,
            },
        }
    }

    pub fn field(&self) -> Field {
        Field::new(self.geometry(), self.luminance)
    }

    /// The flickering stimulus for sensitivity rows; CFF rows have no single
    /// probe frequency.
    pub fn stimulus(&self) -> Option<Stimulus> {
        self.temp_freq.map(|f| Stimulus::new(self.field(), f))
    }
}

/// How a dataset participates in fitting and evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetRole {
    /// Contributes to the loss and to held-out error metrics.
    TrainAndTest,
    /// Contributes to the loss only; reported metrics exclude it.
    TrainOnly,
}

/// A named group of points with its fitting options.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub points: Vec<DataPoint>,
    pub role: DatasetRole,
    /// Pin this dataset's sensitivity scale at 1 instead of fitting it.
    pub fixed_scale: bool,
    /// Dataset-specific threshold energy, for sources whose procedure pools
    /// differently than the default calibration.
    pub e_thr_override: Option<f64>,
}

/// Reads one CSV file of measurements. The header must match
/// [`CSV_HEADER`] exactly; `#` lines are comments; all rows must parse or
/// the whole file is rejected with a per-row report.
pub fn load_points(path: &Path) -> Result<Vec<DataPoint>, DataError> {
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let csv_err = |source: csv::Error| DataError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let headers = rdr.headers().map_err(csv_err)?;
    if headers.len() != CSV_HEADER.len() || headers.iter().zip(CSV_HEADER).any(|(a, b)| a != b) {
        return Err(DataError::SchemaMismatch {
            path: path.to_path_buf(),
            expected: CSV_HEADER.join(","),
            found: headers.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut points = Vec::new();
    let mut errors = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        match parse_row(&record) {
            Ok(point) => points.push(point),
            Err(reason) => errors.push(RowError { line, reason }),
        }
    }
    if !errors.is_empty() {
        return Err(DataError::MalformedRows {
            path: path.to_path_buf(),
            errors,
        });
    }
    if points.is_empty() {
        return Err(DataError::Empty {
            path: path.to_path_buf(),
        });
    }
    Ok(points)
}

fn parse_row(record: &csv::StringRecord) -> Result<DataPoint, String> {
    if record.len() != CSV_HEADER.len() {
        return Err(format!(
            "expected {} fields, found {}",
            CSV_HEADER.len(),
            record.len()
        ));
    }
    let raw = |idx: usize| record.get(idx).unwrap_or("");
    let opt = |idx: usize| -> Result<Option<f64>, String> {
        let s = raw(idx);
        if s.is_empty() {
            return Ok(None);
        }
        s.parse::<f64>()
            .map(Some)
            .map_err(|_| format!("{}: `{s}` is not a number", CSV_HEADER[idx]))
    };
    let req = |idx: usize| -> Result<f64, String> {
        opt(idx)?.ok_or_else(|| format!("{} is required", CSV_HEADER[idx]))
    };

    let temp_freq = opt(0)?;
    let spat_freq = req(1)?;
    let eccentricity = req(2)?;
    let luminance = req(3)?;
    let shape_label = raw(4);
    let area = opt(5)?;
    let width = opt(6)?;
    let height = opt(7)?;
    let contrast = req(8)?;
    let measure_label = raw(9);
    let value = req(10)?;

    let shape = match shape_label {
        "disc" => {
            if width.is_some() || height.is_some() {
                return Err("disc rows must leave width_deg and height_deg empty".into());
            }
            let area = area.ok_or("disc rows require area_deg2")?;
            if !(area > 0.0 && area.is_finite()) {
                return Err(format!("area_deg2 {area} must be finite and > 0"));
            }
            FieldShape::Disc { area }
        }
        "rect" => {
            if area.is_some() {
                return Err("rect rows must leave area_deg2 empty".into());
            }
            let width = width.ok_or("rect rows require width_deg")?;
            let height = height.ok_or("rect rows require height_deg")?;
            if !(width > 0.0 && width.is_finite() && height > 0.0 && height.is_finite()) {
                return Err(format!("rect {width} x {height} must have finite positive sides"));
            }
            FieldShape::Rect { width, height }
        }
        other => return Err(format!("shape `{other}` must be `disc` or `rect`")),
    };

    let measure = match measure_label {
        "S" => Measure::Sensitivity,
        "CFF" => Measure::Cff,
        other => return Err(format!("measure `{other}` must be `S` or `CFF`")),
    };

    match measure {
        Measure::Sensitivity => {
            match temp_freq {
                Some(f) if f.is_finite() && f >= 0.0 => {}
                Some(f) => return Err(format!("temp_freq_hz {f} must be finite and >= 0")),
                None => return Err("sensitivity rows require temp_freq_hz".into()),
            }
            if !(value >= 1.0 && value.is_finite()) {
                return Err(format!(
                    "sensitivity {value} must be finite and >= 1 (threshold contrast cannot exceed 1)"
                ));
            }
        }
        Measure::Cff => {
            if temp_freq.is_some() {
                return Err("CFF rows must leave temp_freq_hz empty; the frequency is the value".into());
            }
            if !(value > 0.0 && value <= CFF_BRACKET_MAX_HZ) {
                return Err(format!(
                    "CFF {value} Hz must lie in (0, {CFF_BRACKET_MAX_HZ}]"
                ));
            }
        }
    }

    if !(spat_freq >= 0.0 && spat_freq.is_finite()) {
        return Err(format!("spat_freq_cpd {spat_freq} must be finite and >= 0"));
    }
    if !(eccentricity >= 0.0 && eccentricity.is_finite()) {
        return Err(format!("ecc_deg {eccentricity} must be finite and >= 0"));
    }
    if !(luminance > 0.0 && luminance.is_finite()) {
        return Err(format!("luminance_cdm2 {luminance} must be finite and > 0"));
    }
    if !(contrast > 0.0 && contrast <= 1.0) {
        return Err(format!("contrast {contrast} must lie in (0, 1]"));
    }

    Ok(DataPoint {
        temp_freq,
        spat_freq,
        eccentricity,
        luminance,
        shape,
        contrast,
        measure,
        value,
    })
}

/// Writes points back in the schema, values printed with the shortest
/// representation that parses back to the same float; a written file reloads
/// to identical points.
pub fn write_points_csv(path: &Path, points: &[DataPoint]) -> Result<(), DataError> {
    let file = std::fs::File::create(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = csv::Writer::from_writer(file);
    let csv_err = |source: csv::Error| DataError::Csv {
        path: path.to_path_buf(),
        source,
    };
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    let num = |v: f64| v.to_string();
    let opt_num = |v: Option<f64>| v.map(num).unwrap_or_default();
    for p in points {
        let (shape, area, width, height) = match p.shape {
            FieldShape::Disc { area } => ("disc", Some(area), None, None),
            FieldShape::Rect { width, height } => ("rect", None, Some(width), Some(height)),
        };
        w.write_record([
            opt_num(p.temp_freq),
            num(p.spat_freq),
            num(p.eccentricity),
            num(p.luminance),
            shape.to_string(),
            opt_num(area),
            opt_num(width),
            opt_num(height),
            num(p.contrast),
            p.measure.csv_label().to_string(),
            num(p.value),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    #[serde(default)]
    dataset: Vec<ManifestEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestEntry {
    name: String,
    path: String,
    #[serde(default)]
    role: Option<String>,
    #[serde(default)]
    fixed_scale: bool,
    #[serde(default)]
    e_thr_override: Option<f64>,
}

/// Loads a manifest and every dataset it names. CSV paths are resolved
/// relative to the manifest's directory.
pub fn load_manifest(path: &Path) -> Result<Vec<Dataset>, DataError> {
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let manifest: ManifestFile = toml::from_str(&text).map_err(|e| DataError::Parse {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    if manifest.dataset.is_empty() {
        return Err(DataError::Manifest {
            path: path.to_path_buf(),
            reason: "no [[dataset]] entries".into(),
        });
    }
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut datasets: Vec<Dataset> = Vec::with_capacity(manifest.dataset.len());
    for entry in manifest.dataset {
        if datasets.iter().any(|d| d.name == entry.name) {
            return Err(DataError::DuplicateName { name: entry.name });
        }
        let role = match entry.role.as_deref() {
            None | Some("train+test") => DatasetRole::TrainAndTest,
            Some("train-only") => DatasetRole::TrainOnly,
            Some(other) => {
                return Err(DataError::Manifest {
                    path: path.to_path_buf(),
                    reason: format!(
                        "dataset `{}`: role `{other}` must be `train+test` or `train-only`",
                        entry.name
                    ),
                })
            }
        };
        if let Some(e_thr) = entry.e_thr_override {
            if !(e_thr > 0.0 && e_thr.is_finite()) {
                return Err(DataError::Manifest {
                    path: path.to_path_buf(),
                    reason: format!(
                        "dataset `{}`: e_thr_override {e_thr} must be finite and > 0",
                        entry.name
                    ),
                });
            }
        }
        let mut csv_path = PathBuf::from(&entry.path);
        if csv_path.is_relative() {
            csv_path = base.join(csv_path);
        }
        datasets.push(Dataset {
            name: entry.name,
            points: load_points(&csv_path)?,
            role,
            fixed_scale: entry.fixed_scale,
            e_thr_override: entry.e_thr_override,
        });
    }
    Ok(datasets)
}

/// What the training filter did to one dataset.
#[derive(Debug, Clone)]
pub struct FilterOutcome {
    pub dataset: Dataset,
    /// Points dropped for luminance below the calibrated floor.
    pub dropped_dim: usize,
    /// Points dropped for spatial frequency above 1 cpd, where the uniform
    /// flicker assumption stops holding.
    pub dropped_spatial: usize,
}

/// Restricts a dataset to the model's domain: luminance at or above the
/// frequency-scale floor and spatial frequency at most 1 cpd. Errs if
/// nothing survives.
pub fn filter_for_training(ds: &Dataset) -> Result<FilterOutcome, DataError> {
    let mut dropped_dim = 0;
    let mut dropped_spatial = 0;
    let points: Vec<DataPoint> = ds
        .points
        .iter()
        .filter(|p| {
            if p.luminance < FREQUENCY_SCALE_MIN_LUMINANCE {
                dropped_dim += 1;
                return false;
            }
            if p.spat_freq > 1.0 {
                dropped_spatial += 1;
                return false;
            }
            true
        })
        .copied()
        .collect();
    if points.is_empty() {
        return Err(DataError::AllPointsFiltered {
            name: ds.name.clone(),
        });
    }
    Ok(FilterOutcome {
        dataset: Dataset {
            name: ds.name.clone(),
            points,
            role: ds.role,
            fixed_scale: ds.fixed_scale,
            e_thr_override: ds.e_thr_override,
        },
        dropped_dim,
        dropped_spatial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo_dir() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/demo")
    }

    fn tmp_dir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("elatcsf-data-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn loads_demo_sensitivity_file() {
        let points = load_points(&demo_dir().join("sensitivity.csv")).unwrap();
        assert_eq!(points.len(), 25);
        let first = points[0];
        assert_eq!(first.temp_freq, Some(2.0));
        assert_eq!(first.luminance, 0.5);
        assert_eq!(first.measure, Measure::Sensitivity);
        // The literal mirrors the fixture file byte for byte; it is the
        // five-digit area written there, not a rounding of pi.
        #[allow(clippy::approx_constant)]
        let expected = FieldShape::Disc { area: 3.14159 };
        assert_eq!(first.shape, expected);
        assert!(points.iter().any(|p| matches!(p.shape, FieldShape::Rect { .. })));
        // Disc radius comes back from the stated area.
        let g = first.geometry();
        let Geometry::Disc { radius, .. } = g else { panic!() };
        assert!((radius - 0.9999997).abs() < 1e-6);
        assert!(first.stimulus().is_some());
    }

    #[test]
    fn loads_demo_cff_file() {
        let points = load_points(&demo_dir().join("cff.csv")).unwrap();
        assert_eq!(points.len(), 6);
        for p in &points {
            assert_eq!(p.measure, Measure::Cff);
            assert_eq!(p.temp_freq, None);
            assert_eq!(p.contrast, 1.0);
            assert!(p.stimulus().is_none());
            assert!(p.value > 0.0 && p.value <= CFF_BRACKET_MAX_HZ);
        }
    }

    #[test]
    fn round_trip_preserves_points_exactly() {
        let dir = tmp_dir("roundtrip");
        for file in ["sensitivity.csv", "cff.csv"] {
            let original = load_points(&demo_dir().join(file)).unwrap();
            let copy = dir.join(file);
            write_points_csv(&copy, &original).unwrap();
            let reloaded = load_points(&copy).unwrap();
            assert_eq!(original, reloaded, "{file}");
        }
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn malformed_rows_are_reported_together() {
        let dir = tmp_dir("malformed");
        let path = dir.join("bad.csv");
        let mut text = String::from(&CSV_HEADER.join(","));
        text.push('\n');
        // Good row, then four distinct defects.
        text.push_str("8,0,0,100,disc,1.0,,,1,S,25\n");
        text.push_str("8,0,0,100,disc,1.0,2.0,,1,S,25\n"); // disc with width
        text.push_str("8,0,0,100,disc,1.0,,,1.5,S,25\n"); // contrast > 1
        text.push_str("8,0,0,100,disc,1.0,,,1,S,0.5\n"); // sensitivity < 1
        text.push_str("8,0,0,100,disc,1.0,,,1,CFF,60\n"); // CFF with temp_freq
        std::fs::write(&path, text).unwrap();
        match load_points(&path) {
            Err(DataError::MalformedRows { errors, .. }) => {
                assert_eq!(errors.len(), 4);
                assert_eq!(errors[0].line, 3);
                assert_eq!(errors[3].line, 6);
            }
            other => panic!("expected MalformedRows, got {other:?}"),
        }
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn header_mismatch_is_rejected() {
        let dir = tmp_dir("header");
        let path = dir.join("bad.csv");
        std::fs::write(&path, "freq,lum\n1,2\n").unwrap();
        assert!(matches!(load_points(&path), Err(DataError::SchemaMismatch { .. })));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let dir = tmp_dir("comments");
        let path = dir.join("ok.csv");
        let text = format!(
            "# leading comment\n{}\n# interior comment\n8,0,0,100,disc,1.0,,,1,S,25\n\n",
            CSV_HEADER.join(",")
        );
        std::fs::write(&path, text).unwrap();
        assert_eq!(load_points(&path).unwrap().len(), 1);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn loads_demo_manifest() {
        let datasets = load_manifest(&demo_dir().join("manifest.toml")).unwrap();
        assert_eq!(datasets.len(), 2);
        assert_eq!(datasets[0].name, "demo-sensitivity");
        assert_eq!(datasets[0].role, DatasetRole::TrainAndTest);
        assert!(!datasets[0].fixed_scale);
        assert_eq!(datasets[1].name, "demo-cff");
        assert!(datasets[1].fixed_scale);
        assert_eq!(datasets[1].points.len(), 6);
    }

    #[test]
    fn manifest_rejects_duplicates_and_bad_roles() {
        let dir = tmp_dir("manifest");
        let csv = dir.join("pts.csv");
        write_points_csv(
            &csv,
            &[DataPoint {
                temp_freq: Some(8.0),
                spat_freq: 0.0,
                eccentricity: 0.0,
                luminance: 100.0,
                shape: FieldShape::Disc { area: 1.0 },
                contrast: 1.0,
                measure: Measure::Sensitivity,
                value: 10.0,
            }],
        )
        .unwrap();
        let manifest = dir.join("m.toml");
        std::fs::write(
            &manifest,
            "[[dataset]]\nname = \"a\"\npath = \"pts.csv\"\n[[dataset]]\nname = \"a\"\npath = \"pts.csv\"\n",
        )
        .unwrap();
        assert!(matches!(load_manifest(&manifest), Err(DataError::DuplicateName { .. })));
        std::fs::write(
            &manifest,
            "[[dataset]]\nname = \"a\"\npath = \"pts.csv\"\nrole = \"validate\"\n",
        )
        .unwrap();
        assert!(matches!(load_manifest(&manifest), Err(DataError::Manifest { .. })));
        std::fs::write(&manifest, "").unwrap();
        assert!(matches!(load_manifest(&manifest), Err(DataError::Manifest { .. })));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn training_filter_drops_out_of_domain_points() {
        let mk = |lum: f64, sf: f64| DataPoint {
            temp_freq: Some(8.0),
            spat_freq: sf,
            eccentricity: 0.0,
            luminance: lum,
            shape: FieldShape::Disc { area: 1.0 },
            contrast: 1.0,
            measure: Measure::Sensitivity,
            value: 10.0,
        };
        let ds = Dataset {
            name: "t".into(),
            points: vec![mk(100.0, 0.0), mk(0.05, 0.0), mk(100.0, 4.0), mk(0.1, 1.0)],
            role: DatasetRole::TrainAndTest,
            fixed_scale: false,
            e_thr_override: None,
        };
        let out = filter_for_training(&ds).unwrap();
        assert_eq!(out.dataset.points.len(), 2);
        assert_eq!(out.dropped_dim, 1);
        assert_eq!(out.dropped_spatial, 1);
        // Boundary values survive: L = 0.1 and 1 cpd are in-domain.
        assert!(out.dataset.points.iter().any(|p| p.luminance == 0.1));

        let empty = Dataset {
            name: "e".into(),
            points: vec![mk(0.01, 0.0)],
            role: DatasetRole::TrainAndTest,
            fixed_scale: false,
            e_thr_override: None,
        };
        assert!(matches!(
            filter_for_training(&empty),
            Err(DataError::AllPointsFiltered { .. })
        ));
    }
}
