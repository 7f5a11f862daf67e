//! Finite measure spaces and the metrics defined on them.
//!
//! A [`CellSpace`] is a finite set of cells with strictly positive weights;
//! cells may be flagged as atoms (point masses used by transboundary
//! domains). A [`Measure`] is a sparse nonnegative vector over cells, a
//! [`MeasureSystem`] is a finite family of measures, and a [`Metric`] is a
//! nonnegative density. The admissibility condition `∫ φ dμ ≥ 1` for every
//! measure `μ` of a system is the constraint set of the p-modulus problem
//! solved elsewhere in this crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Compensated (Kahan-Neumaier) accumulator. Reductions over cells use
/// this so that admissibility and energies are stable at tolerances near
/// 1e-12, even when terms cancel across magnitudes.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        // Whichever operand dominated, the other's low bits were shed; recover them.
        self.carry += if self.sum.abs() >= x.abs() {
            (self.sum - t) + x
        } else {
            (x - t) + self.sum
        };
        self.sum = t;
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.sum + self.carry
    }
}

/// Sum an iterator of f64 with compensation.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = KahanSum::new();
    for x in iter {
        acc.add(x);
    }
    acc.value()
}

fn check_finite(context: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::Invalid(format!("{context}: non-finite value {v}")));
    }
    Ok(())
}

fn check_nonneg(context: &str, v: f64) -> Result<()> {
    check_finite(context, v)?;
    if v < 0.0 {
        return Err(Error::Invalid(format!("{context}: negative value {v}")));
    }
    Ok(())
}

/// The underlying finite measure space: one weight per cell, with an atom
/// flag per cell and optional labels.
///
/// Invariants (enforced at construction): at least one cell, every weight
/// strictly positive and finite, flag and label vectors match the weight
/// vector in length.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSpace {
    weights: Vec<f64>,
    atom_flags: Vec<bool>,
    labels: Option<Vec<String>>,
}

impl CellSpace {
    pub fn new(weights: Vec<f64>, atom_flags: Vec<bool>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Invalid("cell space needs at least one cell".into()));
        }
        if weights.len() != atom_flags.len() {
            return Err(Error::DimensionMismatch {
                context: "cell space atom flags",
                expected: weights.len(),
                got: atom_flags.len(),
            });
        }
        for (j, &w) in weights.iter().enumerate() {
            check_finite(&format!("cell {j} weight"), w)?;
            if w <= 0.0 {
                return Err(Error::Invalid(format!(
                    "cell {j} weight must be strictly positive, got {w}"
                )));
            }
        }
        Ok(Self {
            weights,
            atom_flags,
            labels: None,
        })
    }

    /// A space of `len` non-atom cells sharing one weight.
    pub fn uniform(len: usize, weight: f64) -> Result<Self> {
        Self::new(vec![weight; len], vec![false; len])
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                context: "cell space labels",
                expected: self.weights.len(),
                got: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, j: usize) -> f64 {
        self.weights[j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_atom(&self, j: usize) -> bool {
        self.atom_flags[j]
    }

    pub fn atom_flags(&self) -> &[bool] {
        &self.atom_flags
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn total_mass(&self) -> f64 {
        kahan_sum(self.weights.iter().copied())
    }
}

/// A sparse nonnegative measure: index/value pairs sorted by index.
///
/// Entries with value zero are kept as given; invariants are finiteness,
/// nonnegativity, and absence of duplicate indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Measure {
    entries: Vec<(usize, f64)>,
}

impl Measure {
    pub fn from_entries(mut entries: Vec<(usize, f64)>) -> Result<Self> {
        entries.sort_by_key(|&(j, _)| j);
        for window in entries.windows(2) {
            if window[0].0 == window[1].0 {
                return Err(Error::Invalid(format!(
                    "duplicate measure entry at index {}",
                    window[0].0
                )));
            }
        }
        for &(j, v) in &entries {
            check_nonneg(&format!("measure entry {j}"), v)?;
        }
        Ok(Self { entries })
    }

    /// Merge entries that may repeat an index by summing them.
    pub fn from_accumulated<I: IntoIterator<Item = (usize, f64)>>(iter: I) -> Result<Self> {
        let mut map = std::collections::BTreeMap::new();
        for (j, v) in iter {
            *map.entry(j).or_insert(0.0) += v;
        }
        Self::from_entries(map.into_iter().collect())
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// The unit point mass at cell `j`.
    pub fn unit_atom(j: usize) -> Self {
        Self {
            entries: vec![(j, 1.0)],
        }
    }

    pub fn singleton(j: usize, value: f64) -> Result<Self> {
        Self::from_entries(vec![(j, value)])
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True when the measure carries no mass at all.
    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&(_, v)| v == 0.0)
    }

    pub fn total_mass(&self) -> f64 {
        kahan_sum(self.entries.iter().map(|&(_, v)| v))
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.last().map(|&(j, _)| j)
    }

    pub fn value_at(&self, j: usize) -> f64 {
        match self.entries.binary_search_by_key(&j, |&(i, _)| i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        check_nonneg("measure scale", c)?;
        Self::from_entries(self.entries.iter().map(|&(j, v)| (j, c * v)).collect())
    }

    /// Pointwise sum of two measures.
    pub fn add(&self, other: &Measure) -> Measure {
        Measure::from_accumulated(
            self.entries
                .iter()
                .chain(other.entries.iter())
                .copied()
                .collect::<Vec<_>>(),
        )
        .expect("sum of valid measures is valid")
    }
}

/// A finite family of measures with optional per-row provenance tags.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeasureSystem {
    rows: Vec<Measure>,
    tags: Vec<Option<String>>,
}

impl MeasureSystem {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(rows: Vec<Measure>) -> Self {
        let tags = vec![None; rows.len()];
        Self { rows, tags }
    }

    pub fn with_tags(rows: Vec<Measure>, tags: Vec<Option<String>>) -> Result<Self> {
        if rows.len() != tags.len() {
            return Err(Error::DimensionMismatch {
                context: "system tags",
                expected: rows.len(),
                got: tags.len(),
            });
        }
        Ok(Self { rows, tags })
    }

    pub fn push(&mut self, row: Measure) {
        self.rows.push(row);
        self.tags.push(None);
    }

    pub fn push_tagged(&mut self, row: Measure, tag: impl Into<String>) {
        self.rows.push(row);
        self.tags.push(Some(tag.into()));
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Measure] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &Measure {
        &self.rows[i]
    }

    pub fn tag(&self, i: usize) -> Option<&str> {
        self.tags[i].as_deref()
    }

    pub fn tags(&self) -> &[Option<String>] {
        &self.tags
    }

    /// Concatenation of two systems (rows of `self` first).
    pub fn union(&self, other: &MeasureSystem) -> MeasureSystem {
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        let mut tags = self.tags.clone();
        tags.extend(other.tags.iter().cloned());
        MeasureSystem { rows, tags }
    }

    pub fn max_index(&self) -> Option<usize> {
        self.rows.iter().filter_map(|r| r.max_index()).max()
    }
}

/// A nonnegative density on the cells of a space.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    values: Vec<f64>,
}

impl Metric {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (j, &v) in values.iter().enumerate() {
            check_nonneg(&format!("metric value {j}"), v)?;
        }
        Ok(Self { values })
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![0.0; len],
        }
    }

    pub fn constant(len: usize, value: f64) -> Result<Self> {
        check_nonneg("constant metric", value)?;
        Ok(Self {
            values: vec![value; len],
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn value(&self, j: usize) -> f64 {
        self.values[j]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: f64) -> Result<Metric> {
        check_nonneg("metric scale", c)?;
        Metric::new(self.values.iter().map(|v| v * c).collect())
    }

    /// Sup-norm distance between two metrics of equal length.
    pub fn linf_distance(&self, other: &Metric) -> f64 {
        assert_eq!(self.len(), other.len(), "metric length mismatch");
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `∫ φ dμ` as a compensated sum over the sparse entries of `μ`.
///
/// Errors if the measure references a cell outside the metric's range.
pub fn integrate(metric: &Metric, measure: &Measure) -> Result<f64> {
    if let Some(max) = measure.max_index() {
        if max >= metric.len() {
            return Err(Error::DimensionMismatch {
                context: "integrate",
                expected: metric.len(),
                got: max + 1,
            });
        }
    }
    let mut acc = KahanSum::new();
    for &(j, a) in measure.entries() {
        acc.add(a * metric.value(j));
    }
    Ok(acc.value())
}

/// The p-energy `Σ_j m_j φ_j^p` of a metric, for any exponent `p > 0`.
pub fn p_energy(metric: &Metric, space: &CellSpace, p: f64) -> Result<f64> {
    if metric.len() != space.len() {
        return Err(Error::DimensionMismatch {
            context: "p_energy",
            expected: space.len(),
            got: metric.len(),
        });
    }
    if !p.is_finite() || p <= 0.0 {
        return Err(Error::Contract(format!("p_energy requires p > 0, got {p}")));
    }
    let mut acc = KahanSum::new();
    for (j, &w) in space.weights().iter().enumerate() {
        acc.add(w * metric.value(j).powf(p));
    }
    Ok(acc.value())
}

/// Outcome of an admissibility check: the worst row is the one whose
/// integral against the metric is smallest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub admissible: bool,
    pub worst_row: Option<usize>,
    pub worst_value: f64,
}

/// Checks `∫ φ dμ_i ≥ 1 − tol` for every row. The empty system is
/// vacuously admissible.
pub fn is_admissible(metric: &Metric, system: &MeasureSystem, tol: f64) -> Result<AdmissibilityReport> {
    let mut worst_row = None;
    let mut worst_value = f64::INFINITY;
    for (i, row) in system.rows().iter().enumerate() {
        let v = integrate(metric, row)?;
        if v < worst_value {
            worst_value = v;
            worst_row = Some(i);
        }
    }
    let admissible = worst_row.is_none() || worst_value >= 1.0 - tol;
    Ok(AdmissibilityReport {
        admissible,
        worst_row,
        worst_value,
    })
}

/// Structural findings about a system relative to a cell space.
///
/// Zero rows make the modulus problem infeasible (no metric can reach
/// integral 1); out-of-range entries make the system unusable; duplicate
/// rows are redundant but harmless.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SystemDiagnostics {
    pub zero_rows: Vec<usize>,
    pub duplicate_rows: Vec<(usize, usize)>,
    pub out_of_range_rows: Vec<usize>,
}

impl SystemDiagnostics {
    /// No findings at all.
    pub fn is_clean(&self) -> bool {
        self.zero_rows.is_empty()
            && self.duplicate_rows.is_empty()
            && self.out_of_range_rows.is_empty()
    }

    /// The system can be handed to a solver (duplicates are allowed).
    pub fn is_solvable(&self) -> bool {
        self.zero_rows.is_empty() && self.out_of_range_rows.is_empty()
    }
}

/// Scans a system for zero rows, exact duplicate rows, and entries whose
/// cell index falls outside the space. Callers decide what is fatal.
pub fn validate_system(system: &MeasureSystem, space: &CellSpace) -> SystemDiagnostics {
    let mut diag = SystemDiagnostics::default();
    for (i, row) in system.rows().iter().enumerate() {
        if row.is_zero() {
            diag.zero_rows.push(i);
        }
        if row.max_index().is_some_and(|m| m >= space.len()) {
            diag.out_of_range_rows.push(i);
        }
        for (k, earlier) in system.rows()[..i].iter().enumerate() {
            if earlier == row {
                diag.duplicate_rows.push((k, i));
                break;
            }
        }
    }
    diag
}
