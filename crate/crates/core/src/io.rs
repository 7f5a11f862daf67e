//! File formats: the structured-text schemas for problems, curve
//! families, certificates, reports, and metric fields, plus the CSV/PGM
//! exporters.
//!
//! Every floating value is emitted with 17 significant digits so files
//! round-trip doubles losslessly, and map keys are sorted, so identical
//! inputs always produce byte-identical output.

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::certificate::{BeurlingCertificate, FamilyMember, FamilySource};
use crate::error::{Error, Result};
use crate::geometry::{Grid, Polyline};
use crate::measure::{CellSpace, Measure, MeasureSystem, Metric};
use crate::solver::{ModulusValue, SolveReport, SolveStatus};

/// Formats a float with 17 significant digits, the smallest count that
/// distinguishes every double.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

struct SigDigits;

impl serde_json::ser::Formatter for SigDigits {
    fn write_f64<W: ?Sized + std::io::Write>(
        &mut self,
        writer: &mut W,
        value: f64,
    ) -> std::io::Result<()> {
        if value.is_finite() {
            write!(writer, "{}", format_f64(value))
        } else {
            write!(writer, "null")
        }
    }

    fn write_f32<W: ?Sized + std::io::Write>(
        &mut self,
        writer: &mut W,
        value: f32,
    ) -> std::io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Serializes to structured text with 17-digit floats and a trailing
/// newline.
pub fn to_text<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigits);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Invalid(format!("non-utf8 serialization: {e}")))
}

pub fn from_text<T: DeserializeOwned>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))
}

pub fn write_string(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents)
        .map_err(|e| Error::Invalid(format!("cannot write {}: {e}", path.display())))
}

/// Hex SHA-256 of raw file bytes; reports embed the hash of the problem
/// they were solved from so stale pairings are detected.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

// ---------------------------------------------------------------------
// Problem files
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireCells {
    pub weights: Vec<f64>,
    pub atoms: Vec<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireMeasure {
    /// Sparse entries keyed by the cell index rendered in decimal.
    pub entries: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireGrid {
    pub origin: [f64; 2],
    pub width: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
}

impl WireGrid {
    pub fn from_grid(grid: &Grid) -> Self {
        Self {
            origin: [grid.origin().0, grid.origin().1],
            width: grid.width(),
            height: grid.height(),
            nx: grid.nx(),
            ny: grid.ny(),
        }
    }

    pub fn to_grid(&self) -> Result<Grid> {
        Grid::new((self.origin[0], self.origin[1]), self.width, self.height, self.nx, self.ny)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireProblem {
    pub cells: WireCells,
    pub measures: Vec<WireMeasure>,
    /// Present when the cells came from rasterizing a grid; kept for
    /// field export.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<WireGrid>,
    /// Hole cell groups of a transboundary domain, in atom order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holes: Option<Vec<Vec<usize>>>,
}

/// A parsed problem: the domain objects plus any grid provenance carried
/// by the file.
#[derive(Debug, Clone)]
pub struct ProblemFile {
    pub space: CellSpace,
    pub system: MeasureSystem,
    pub grid: Option<Grid>,
    pub holes: Vec<Vec<usize>>,
}

pub fn measure_to_wire(measure: &Measure, tag: Option<&str>) -> WireMeasure {
    let mut entries = BTreeMap::new();
    for &(j, a) in measure.entries() {
        entries.insert(j.to_string(), a);
    }
    WireMeasure { entries, tag: tag.map(str::to_owned) }
}

pub fn measure_from_wire(wire: &WireMeasure) -> Result<Measure> {
    let mut entries = Vec::with_capacity(wire.entries.len());
    for (key, &a) in &wire.entries {
        let j: usize = key.parse().map_err(|_| {
            Error::Invalid(format!("measure entry key {key:?} is not a cell index"))
        })?;
        entries.push((j, a));
    }
    Measure::from_accumulated(entries)
}

pub fn problem_to_wire(problem: &ProblemFile) -> WireProblem {
    let cells = WireCells {
        weights: problem.space.weights().to_vec(),
        atoms: problem.space.atom_flags().to_vec(),
        labels: problem.space.labels().map(<[String]>::to_vec),
    };
    let measures = problem
        .system
        .rows()
        .iter()
        .zip(problem.system.tags())
        .map(|(row, tag)| measure_to_wire(row, tag.as_deref()))
        .collect();
    WireProblem {
        cells,
        measures,
        grid: problem.grid.as_ref().map(WireGrid::from_grid),
        holes: if problem.holes.is_empty() { None } else { Some(problem.holes.clone()) },
    }
}

pub fn problem_from_wire(wire: &WireProblem) -> Result<ProblemFile> {
    if wire.cells.weights.len() != wire.cells.atoms.len() {
        return Err(Error::DimensionMismatch {
            context: "cells.atoms",
            expected: wire.cells.weights.len(),
            got: wire.cells.atoms.len(),
        });
    }
    let mut space = CellSpace::new(wire.cells.weights.clone(), wire.cells.atoms.clone())?;
    if let Some(labels) = &wire.cells.labels {
        space = space.with_labels(labels.clone())?;
    }
    let mut rows = Vec::with_capacity(wire.measures.len());
    let mut tags = Vec::with_capacity(wire.measures.len());
    for wm in &wire.measures {
        let row = measure_from_wire(wm)?;
        if row.max_index().is_some_and(|j| j >= space.len()) {
            return Err(Error::Invalid(format!(
                "measure entry index {} is outside the {}-cell space",
                row.max_index().unwrap(),
                space.len()
            )));
        }
        rows.push(row);
        tags.push(wm.tag.clone());
    }
    let system = MeasureSystem::with_tags(rows, tags)?;
    let grid = wire.grid.as_ref().map(WireGrid::to_grid).transpose()?;
    if let Some(g) = &grid {
        if g.len() > space.len() {
            return Err(Error::Invalid(format!(
                "grid covers {} cells but the space has only {}",
                g.len(),
                space.len()
            )));
        }
    }
    Ok(ProblemFile {
        space,
        system,
        grid,
        holes: wire.holes.clone().unwrap_or_default(),
    })
}

pub fn load_problem(path: &Path) -> Result<(ProblemFile, String)> {
    let text = read_to_string(path)?;
    let wire: WireProblem = from_text(&text)?;
    let problem = problem_from_wire(&wire)?;
    Ok((problem, sha256_hex(text.as_bytes())))
}

// ---------------------------------------------------------------------
// Curve-family files
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireCurve {
    pub vertices: Vec<[f64; 2]>,
    #[serde(default = "default_multiplicity")]
    pub multiplicity: u32,
}

fn default_multiplicity() -> u32 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireCurves {
    pub grid: WireGrid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holes: Option<Vec<Vec<usize>>>,
    pub curves: Vec<WireCurve>,
}

#[derive(Debug, Clone)]
pub struct CurvesFile {
    pub grid: Grid,
    pub holes: Vec<Vec<usize>>,
    pub curves: Vec<Polyline>,
}

pub fn curves_from_wire(wire: &WireCurves) -> Result<CurvesFile> {
    let grid = wire.grid.to_grid()?;
    let mut curves = Vec::with_capacity(wire.curves.len());
    for (i, wc) in wire.curves.iter().enumerate() {
        let vertices: Vec<(f64, f64)> = wc.vertices.iter().map(|v| (v[0], v[1])).collect();
        let poly = Polyline::new(vertices, wc.multiplicity)
            .map_err(|e| Error::Invalid(format!("curve {i}: {e}")))?;
        curves.push(poly);
    }
    Ok(CurvesFile { grid, holes: wire.holes.clone().unwrap_or_default(), curves })
}

pub fn curves_to_wire(file: &CurvesFile) -> WireCurves {
    WireCurves {
        grid: WireGrid::from_grid(&file.grid),
        holes: if file.holes.is_empty() { None } else { Some(file.holes.clone()) },
        curves: file
            .curves
            .iter()
            .map(|c| WireCurve {
                vertices: c.vertices().iter().map(|&(x, y)| [x, y]).collect(),
                multiplicity: c.multiplicity(),
            })
            .collect(),
    }
}

pub fn load_curves(path: &Path) -> Result<CurvesFile> {
    let text = read_to_string(path)?;
    curves_from_wire(&from_text(&text)?)
}

// ---------------------------------------------------------------------
// Certificate files
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireFamilyMember {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<WireMeasure>,
    pub scale: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireCertificate {
    pub p: f64,
    pub family: Vec<WireFamilyMember>,
}

pub fn certificate_to_wire(cert: &BeurlingCertificate) -> WireCertificate {
    let family = cert
        .family
        .iter()
        .map(|m| {
            let (row, measure) = match &m.source {
                FamilySource::Row(i) => (Some(*i), None),
                FamilySource::Explicit(mu) => (None, Some(measure_to_wire(mu, None))),
            };
            WireFamilyMember { row, measure, scale: m.scale, lambda: m.lambda }
        })
        .collect();
    WireCertificate { p: cert.p, family }
}

pub fn certificate_from_wire(wire: &WireCertificate) -> Result<BeurlingCertificate> {
    let mut family = Vec::with_capacity(wire.family.len());
    for (i, wm) in wire.family.iter().enumerate() {
        let source = match (&wm.row, &wm.measure) {
            (Some(r), None) => FamilySource::Row(*r),
            (None, Some(mu)) => FamilySource::Explicit(measure_from_wire(mu)?),
            _ => {
                return Err(Error::Invalid(format!(
                    "family member {i} must carry exactly one of \"row\" or \"measure\""
                )))
            }
        };
        family.push(FamilyMember { source, scale: wm.scale, lambda: wm.lambda });
    }
    Ok(BeurlingCertificate { p: wire.p, family })
}

pub fn load_certificate(path: &Path) -> Result<BeurlingCertificate> {
    let text = read_to_string(path)?;
    certificate_from_wire(&from_text(&text)?)
}

// ---------------------------------------------------------------------
// Report files
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireReport {
    pub p: f64,
    pub value: ModulusValue,
    pub status: SolveStatus,
    pub gap: f64,
    pub iterations: usize,
    pub active_set: Vec<usize>,
    pub dual: Vec<f64>,
    pub metric: Vec<f64>,
    /// SHA-256 of the problem file this report was solved from.
    pub problem_sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<WireGrid>,
}

pub fn report_to_wire(
    report: &SolveReport,
    p: f64,
    problem_sha256: &str,
    grid: Option<&Grid>,
) -> WireReport {
    WireReport {
        p,
        value: report.value,
        status: report.status,
        gap: report.gap,
        iterations: report.iterations,
        active_set: report.active_set.clone(),
        dual: report.dual.clone(),
        metric: report.metric.values().to_vec(),
        problem_sha256: problem_sha256.to_owned(),
        grid: grid.map(WireGrid::from_grid),
    }
}

pub fn load_report(path: &Path) -> Result<WireReport> {
    let text = read_to_string(path)?;
    from_text(&text)
}

// ---------------------------------------------------------------------
// Metric files
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum WireMetric {
    Bare(Vec<f64>),
    Tagged {
        metric: Vec<f64>,
    },
}

/// Reads a candidate metric: either a bare array of values or an object
/// with a `metric` field (so a report file works directly).
pub fn metric_from_text(text: &str) -> Result<Metric> {
    let wire: WireMetric = serde_json::from_str(text).map_err(|_| {
        Error::Invalid(
            "metric file must be an array of values or an object with a \"metric\" field".into(),
        )
    })?;
    let values = match wire {
        WireMetric::Bare(v) | WireMetric::Tagged { metric: v } => v,
    };
    Metric::new(values)
}

pub fn load_metric(path: &Path) -> Result<Metric> {
    metric_from_text(&read_to_string(path)?)
}

// ---------------------------------------------------------------------
// Field export
// ---------------------------------------------------------------------

/// Renders the metric as CSV. With a grid, one line per grid row from the
/// bottom row upward, `nx` comma-separated values each; any cells beyond
/// the grid (transboundary atoms) form one trailing line. Without a grid
/// the whole vector is a single line.
pub fn metric_to_csv(values: &[f64], grid: Option<&Grid>) -> Result<String> {
    let mut out = String::new();
    match grid {
        Some(g) => {
            if values.len() < g.len() {
                return Err(Error::DimensionMismatch {
                    context: "metric for grid export",
                    expected: g.len(),
                    got: values.len(),
                });
            }
            for iy in 0..g.ny() {
                let row: Vec<String> =
                    (0..g.nx()).map(|ix| format_f64(values[iy * g.nx() + ix])).collect();
                out.push_str(&row.join(","));
                out.push('\n');
            }
            if values.len() > g.len() {
                let trailer: Vec<String> =
                    values[g.len()..].iter().map(|&v| format_f64(v)).collect();
                out.push_str(&trailer.join(","));
                out.push('\n');
            }
        }
        None => {
            let row: Vec<String> = values.iter().map(|&v| format_f64(v)).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
    }
    Ok(out)
}

/// Renders the grid part of the metric as a binary 8-bit PGM (P5), top
/// row first, linearly scaled so the maximum value maps to 255. A zero
/// metric produces an all-zero raster. Values of trailing atom cells are
/// recorded in a header comment since they have no pixel.
pub fn metric_to_pgm(values: &[f64], grid: &Grid) -> Result<Vec<u8>> {
    if values.len() < grid.len() {
        return Err(Error::DimensionMismatch {
            context: "metric for grid export",
            expected: grid.len(),
            got: values.len(),
        });
    }
    let max = values[..grid.len()].iter().copied().fold(0.0_f64, f64::max);
    let mut out = Vec::new();
    out.extend_from_slice(format!("P5\n# max {}\n", format_f64(max)).as_bytes());
    if values.len() > grid.len() {
        let atoms: Vec<String> = values[grid.len()..].iter().map(|&v| format_f64(v)).collect();
        out.extend_from_slice(format!("# atoms {}\n", atoms.join(" ")).as_bytes());
    }
    out.extend_from_slice(format!("{} {}\n255\n", grid.nx(), grid.ny()).as_bytes());
    for iy in (0..grid.ny()).rev() {
        for ix in 0..grid.nx() {
            let v = values[iy * grid.nx() + ix];
            let pixel = if max > 0.0 && v > 0.0 {
                ((v / max) * 255.0).round().clamp(0.0, 255.0) as u8
            } else {
                0
            };
            out.push(pixel);
        }
    }
    Ok(out)
}
