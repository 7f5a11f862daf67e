//! Planar discretization: grids, polyline curves, and the generators that
//! turn curve families into measure systems.
//!
//! A [`Grid`] covers an axis-aligned rectangle with `nx × ny` cells whose
//! areas become the weights of a [`CellSpace`]. A [`Polyline`] is a chain
//! of vertices traversed `multiplicity` times; [`rasterize_polyline`]
//! converts it into a sparse measure whose entry on a cell is the exact
//! arclength of the curve inside that cell, computed by segment clipping
//! rather than sampling, so line integrals of cell-constant metrics are
//! quadrature-free.
//!
//! On top of the rasterizer sit the named rectangle families (mid-line
//! crossings, doubled half crossings, backtracked crossings, and seeded
//! staircase samples), the transboundary construction that collapses
//! designated cell groups into unit-weight atoms, the metric-induced
//! system whose rows integrate a fixed metric to exactly 1, and the
//! prefix-sum construction of symmetric unit-mass intervals along a
//! sampled line.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measure::{integrate, CellSpace, Measure, MeasureSystem, Metric};

/// Two floating-point curve parameters closer than this are treated as the
/// same cell-boundary crossing.
const CROSSING_MERGE: f64 = 1e-15;
/// Target accuracy of [`truncate_to_unit`]'s bisection on the prefix
/// integral.
const TRUNCATE_TOL: f64 = 1e-9;

/// An axis-aligned rectangle split into `nx × ny` congruent cells.
///
/// Cells are indexed row-major from the bottom-left corner: cell
/// `(ix, iy)` has flat index `iy·nx + ix`, with `iy = 0` the bottom row.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    origin: (f64, f64),
    width: f64,
    height: f64,
    nx: usize,
    ny: usize,
}

impl Grid {
    pub fn new(origin: (f64, f64), width: f64, height: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(origin.0.is_finite() && origin.1.is_finite()) {
            return Err(Error::Invalid(format!("grid origin {origin:?} must be finite")));
        }
        if !(width.is_finite() && width > 0.0 && height.is_finite() && height > 0.0) {
            return Err(Error::Invalid(format!(
                "grid sides must be positive and finite, got {width} × {height}"
            )));
        }
        if nx == 0 || ny == 0 {
            return Err(Error::Invalid(format!(
                "grid needs at least one cell per side, got {nx} × {ny}"
            )));
        }
        Ok(Self { origin, width, height, nx, ny })
    }

    /// A grid over `[0, width] × [0, height]`.
    pub fn rectangle(width: f64, height: f64, nx: usize, ny: usize) -> Result<Self> {
        Self::new((0.0, 0.0), width, height, nx, ny)
    }

    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Cell width.
    pub fn hx(&self) -> f64 {
        self.width / self.nx as f64
    }

    /// Cell height.
    pub fn hy(&self) -> f64 {
        self.height / self.ny as f64
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    /// The cell space induced by the grid: one cell per grid cell, weight
    /// equal to the cell area, no atoms.
    pub fn cell_space(&self) -> CellSpace {
        let area = self.hx() * self.hy();
        CellSpace::uniform(self.len(), area).expect("grid invariants give a positive area")
    }

    /// The flat index of the cell containing `(x, y)`, with points on a
    /// shared boundary assigned to the higher-index cell and everything
    /// clamped into the rectangle.
    fn locate(&self, x: f64, y: f64) -> usize {
        let fx = (x - self.origin.0) / self.hx();
        let fy = (y - self.origin.1) / self.hy();
        let ix = (fx.floor() as isize).clamp(0, self.nx as isize - 1) as usize;
        let iy = (fy.floor() as isize).clamp(0, self.ny as isize - 1) as usize;
        self.cell_index(ix, iy)
    }
}

/// A curve: straight segments through an ordered vertex chain, traversed
/// `multiplicity` times. Repeated traversals model doubled pieces; a
/// backtracking chain (a vertex sequence that reverses direction) models
/// out-and-back pieces within a single traversal.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    vertices: Vec<(f64, f64)>,
    multiplicity: u32,
}

impl Polyline {
    pub fn new(vertices: Vec<(f64, f64)>, multiplicity: u32) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::Invalid(format!(
                "a polyline needs at least 2 vertices, got {}",
                vertices.len()
            )));
        }
        for (i, &(x, y)) in vertices.iter().enumerate() {
            if !(x.is_finite() && y.is_finite()) {
                return Err(Error::Invalid(format!("vertex {i} is not finite: ({x}, {y})")));
            }
        }
        if multiplicity == 0 {
            return Err(Error::Invalid("multiplicity must be at least 1".into()));
        }
        Ok(Self { vertices, multiplicity })
    }

    /// A single straight segment traversed once.
    pub fn segment(from: (f64, f64), to: (f64, f64)) -> Result<Self> {
        Self::new(vec![from, to], 1)
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    pub fn multiplicity(&self) -> u32 {
        self.multiplicity
    }

    /// Arclength of one traversal of the chain.
    pub fn chain_length(&self) -> f64 {
        self.vertices
            .windows(2)
            .map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1))
            .sum()
    }

    /// Total arclength including all traversals.
    pub fn length(&self) -> f64 {
        self.chain_length() * self.multiplicity as f64
    }
}

/// A rasterized curve with its bookkeeping: the measure plus how much of
/// the curve actually lay inside the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Rasterized {
    pub measure: Measure,
    /// Arclength inside the grid, counted with multiplicity; equals the
    /// sum of the measure's entries up to roundoff.
    pub clipped_length: f64,
    /// Full arclength of the curve, counted with multiplicity.
    pub total_length: f64,
    /// True when part of the curve fell outside the grid rectangle.
    pub clipped: bool,
    /// True for a zero-length curve, which rasterizes to the zero row.
    pub degenerate: bool,
}

/// Liang–Barsky clip of the segment `p → q` against the grid rectangle.
/// Returns the parameter interval of the inside portion, if any.
fn clip_to_grid(grid: &Grid, p: (f64, f64), q: (f64, f64)) -> Option<(f64, f64)> {
    let (dx, dy) = (q.0 - p.0, q.1 - p.1);
    let (xmin, ymin) = grid.origin;
    let (xmax, ymax) = (xmin + grid.width, ymin + grid.height);
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    let edges = [
        (-dx, p.0 - xmin),
        (dx, xmax - p.0),
        (-dy, p.1 - ymin),
        (dy, ymax - p.1),
    ];
    for (den, num) in edges {
        if den == 0.0 {
            if num < 0.0 {
                return None;
            }
        } else {
            let t = num / den;
            if den < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
        }
    }
    (t0 <= t1).then_some((t0, t1))
}

/// Parameters in `(t0, t1)` where the segment crosses a cell boundary.
fn crossing_params(
    grid: &Grid,
    p: (f64, f64),
    q: (f64, f64),
    t0: f64,
    t1: f64,
) -> Vec<f64> {
    let (dx, dy) = (q.0 - p.0, q.1 - p.1);
    let mut cuts = Vec::new();
    if dx != 0.0 {
        let hx = grid.hx();
        for i in 1..grid.nx {
            let t = (grid.origin.0 + i as f64 * hx - p.0) / dx;
            if t > t0 + CROSSING_MERGE && t < t1 - CROSSING_MERGE {
                cuts.push(t);
            }
        }
    }
    if dy != 0.0 {
        let hy = grid.hy();
        for j in 1..grid.ny {
            let t = (grid.origin.1 + j as f64 * hy - p.1) / dy;
            if t > t0 + CROSSING_MERGE && t < t1 - CROSSING_MERGE {
                cuts.push(t);
            }
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("crossing parameters are finite"));
    cuts
}

/// Rasterizes with full diagnostics; see [`rasterize_polyline`] for the
/// plain measure.
pub fn rasterize_polyline_detailed(grid: &Grid, curve: &Polyline) -> Result<Rasterized> {
    let mult = curve.multiplicity as f64;
    let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
    let mut inside = 0.0f64;
    let mut total = 0.0f64;
    for w in curve.vertices.windows(2) {
        let (p, q) = (w[0], w[1]);
        let seg_len = (q.0 - p.0).hypot(q.1 - p.1);
        total += seg_len;
        if seg_len == 0.0 {
            continue;
        }
        let Some((t0, t1)) = clip_to_grid(grid, p, q) else {
            continue;
        };
        inside += seg_len * (t1 - t0);
        let mut prev = t0;
        let cuts = crossing_params(grid, p, q, t0, t1);
        for t in cuts.into_iter().chain(std::iter::once(t1)) {
            if t - prev > CROSSING_MERGE {
                let tm = 0.5 * (prev + t);
                let cell = grid.locate(p.0 + tm * (q.0 - p.0), p.1 + tm * (q.1 - p.1));
                *acc.entry(cell).or_insert(0.0) += seg_len * (t - prev);
            }
            prev = t;
        }
    }
    let measure = Measure::from_accumulated(
        acc.into_iter().map(|(j, v)| (j, v * mult)),
    )?;
    let total_length = total * mult;
    let clipped_length = inside * mult;
    Ok(Rasterized {
        measure,
        clipped_length,
        total_length,
        clipped: clipped_length < total_length * (1.0 - 1e-12),
        degenerate: total_length == 0.0,
    })
}

/// Converts a curve into a measure row: the entry on a cell is the exact
/// arclength of the curve inside that cell, counted with multiplicity.
/// Portions outside the grid are clipped away, and a zero-length curve
/// yields the zero row; use [`rasterize_polyline_detailed`] to observe
/// either situation.
pub fn rasterize_polyline(grid: &Grid, curve: &Polyline) -> Result<Measure> {
    Ok(rasterize_polyline_detailed(grid, curve)?.measure)
}

/// The named crossing families of a rectangle grid.
#[derive(Debug, Clone, PartialEq)]
pub enum RectangleFamily {
    /// One horizontal mid-line crossing per grid row.
    Gamma0,
    /// Two rows per grid row: the left and the right half of the mid-line,
    /// each traversed twice (out and back to the starting side).
    Gamma1,
    /// The mid-line crossings, each preceded by an out-and-back prefix of
    /// length `1/k` (`k` = row index + 1, clipped to the rectangle width),
    /// so the prefix is covered three times in total.
    GammaStar,
    /// The mid-line crossings plus `count` seeded random monotone
    /// staircase left-right crossings.
    GammaSampled { count: usize, seed: u64 },
}

/// A random monotone staircase from the left edge to the right edge:
/// alternating horizontal and vertical runs, x increasing, y moving
/// monotonically between two sampled heights.
fn staircase(grid: &Grid, rng: &mut ChaCha8Rng) -> Polyline {
    let (x0, y0) = grid.origin;
    let (a, b) = (grid.width, grid.height);
    let steps = rng.gen_range(1..=4usize);
    let ya = y0 + b * rng.gen_range(0.1..0.9);
    let yb = y0 + b * rng.gen_range(0.1..0.9);
    let mut xs: Vec<f64> = (0..steps).map(|_| rng.gen_range(0.05..0.95)).collect();
    xs.sort_by(|u, v| u.partial_cmp(v).expect("finite samples"));
    let mut fracs: Vec<f64> = (0..steps).map(|_| rng.gen::<f64>()).collect();
    fracs.sort_by(|u, v| u.partial_cmp(v).expect("finite samples"));

    let mut vertices = vec![(x0, ya)];
    let mut y = ya;
    for (xf, frac) in xs.into_iter().zip(fracs) {
        let x = x0 + a * xf;
        let y_next = ya + (yb - ya) * frac;
        vertices.push((x, y));
        vertices.push((x, y_next));
        y = y_next;
    }
    vertices.push((x0 + a, y));
    Polyline::new(vertices, 1).expect("staircase vertices are finite")
}

fn family_curves(grid: &Grid, which: &RectangleFamily) -> Vec<(String, Polyline)> {
    let (x0, y0) = grid.origin;
    let a = grid.width;
    let hy = grid.hy();
    let mid = |iy: usize| y0 + (iy as f64 + 0.5) * hy;
    let mut curves = Vec::new();
    match which {
        RectangleFamily::Gamma0 => {
            for iy in 0..grid.ny {
                let y = mid(iy);
                let seg = Polyline::segment((x0, y), (x0 + a, y)).expect("grid is finite");
                curves.push((format!("gamma0:{iy}"), seg));
            }
        }
        RectangleFamily::Gamma1 => {
            for iy in 0..grid.ny {
                let y = mid(iy);
                let half = x0 + 0.5 * a;
                let left = Polyline::new(vec![(x0, y), (half, y)], 2).expect("grid is finite");
                let right =
                    Polyline::new(vec![(half, y), (x0 + a, y)], 2).expect("grid is finite");
                curves.push((format!("gamma1-left:{iy}"), left));
                curves.push((format!("gamma1-right:{iy}"), right));
            }
        }
        RectangleFamily::GammaStar => {
            for iy in 0..grid.ny {
                let y = mid(iy);
                let k = iy + 1;
                let prefix = (1.0 / k as f64).min(a);
                let chain = Polyline::new(
                    vec![(x0, y), (x0 + prefix, y), (x0, y), (x0 + a, y)],
                    1,
                )
                .expect("grid is finite");
                curves.push((format!("gamma-star:{iy}"), chain));
            }
        }
        RectangleFamily::GammaSampled { count, seed } => {
            curves = family_curves(grid, &RectangleFamily::Gamma0);
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            for i in 0..*count {
                curves.push((format!("sampled:{i}"), staircase(grid, &mut rng)));
            }
        }
    }
    curves
}

/// Builds one of the rectangle crossing families as a tagged measure
/// system. Curves are rasterized in parallel and assembled in input
/// order, so the result is deterministic.
pub fn rectangle_family(grid: &Grid, which: &RectangleFamily) -> Result<MeasureSystem> {
    let curves = family_curves(grid, which);
    let rows = curves
        .par_iter()
        .map(|(_, curve)| rasterize_polyline(grid, curve))
        .collect::<Result<Vec<_>>>()?;
    let tags = curves.into_iter().map(|(tag, _)| Some(tag)).collect();
    MeasureSystem::with_tags(rows, tags)
}

/// The chain truncated at arclength `s` (one traversal, multiplicity 1).
fn prefix_polyline(curve: &Polyline, s: f64) -> Polyline {
    let mut vertices = vec![curve.vertices[0]];
    let mut walked = 0.0f64;
    for w in curve.vertices.windows(2) {
        let (p, q) = (w[0], w[1]);
        let seg_len = (q.0 - p.0).hypot(q.1 - p.1);
        if seg_len == 0.0 {
            continue;
        }
        if walked + seg_len >= s {
            let f = ((s - walked) / seg_len).clamp(0.0, 1.0);
            vertices.push((p.0 + f * (q.0 - p.0), p.1 + f * (q.1 - p.1)));
            break;
        }
        vertices.push(q);
        walked += seg_len;
    }
    if vertices.len() < 2 {
        vertices.push(vertices[0]);
    }
    Polyline::new(vertices, 1).expect("prefix vertices are finite")
}

/// The line integral of the metric along one traversal of the first `s`
/// arclength units of the chain.
fn prefix_integral(grid: &Grid, curve: &Polyline, metric: &Metric, s: f64) -> Result<f64> {
    let prefix = prefix_polyline(curve, s);
    let row = rasterize_polyline(grid, &prefix)?;
    integrate(metric, &row)
}

/// Shortens a curve to the prefix whose line integral of the metric is 1,
/// located by arclength bisection of the (continuous, monotone) prefix
/// integral. The curve must integrate to at least 1; a curve already at 1
/// comes back unchanged.
///
/// When the unit point falls beyond the first traversal of a
/// multiple-traversal curve, the result is representable only if it lands
/// on a whole number of traversals; a mid-traversal cut of a repeated
/// chain has no `Polyline` form and is reported as unsupported.
pub fn truncate_to_unit(curve: &Polyline, metric: &Metric, grid: &Grid) -> Result<Polyline> {
    if metric.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            context: "truncation metric",
            expected: grid.len(),
            got: metric.len(),
        });
    }
    let single = Polyline::new(curve.vertices.clone(), 1)?;
    let chain_len = single.chain_length();
    let per_pass = prefix_integral(grid, &single, metric, chain_len)?;
    let total = per_pass * curve.multiplicity as f64;
    if total < 1.0 - TRUNCATE_TOL {
        return Err(Error::Contract(format!(
            "curve integrates the metric to {total:.12e} < 1; no unit prefix exists"
        )));
    }
    if per_pass >= 1.0 - TRUNCATE_TOL {
        if (per_pass - 1.0).abs() <= TRUNCATE_TOL {
            return Ok(Polyline::new(curve.vertices.clone(), 1)?);
        }
        let mut lo = 0.0f64;
        let mut hi = chain_len;
        for _ in 0..200 {
            if hi - lo <= 1e-15 * chain_len.max(1.0) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if prefix_integral(grid, &single, metric, mid)? < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let value = prefix_integral(grid, &single, metric, hi)?;
        if (value - 1.0).abs() > TRUNCATE_TOL {
            return Err(Error::Contract(format!(
                "prefix bisection stalled at integral {value:.12e}"
            )));
        }
        return Ok(prefix_polyline(&single, hi));
    }
    // The unit point lies beyond one traversal; only whole numbers of
    // traversals are representable.
    let repeats = (1.0 / per_pass).round();
    if repeats >= 1.0 && (repeats * per_pass - 1.0).abs() <= TRUNCATE_TOL {
        return Ok(Polyline::new(curve.vertices.clone(), repeats as u32)?);
    }
    Err(Error::Unsupported(
        "the unit prefix ends inside a repeated traversal; split the curve into explicit pieces"
            .into(),
    ))
}

/// A grid with designated groups of cells collapsed to unit-weight atoms:
/// the derived cell space keeps every non-hole cell with its area weight
/// and appends one atom of weight exactly 1 per hole.
#[derive(Debug, Clone, PartialEq)]
pub struct TransboundaryDomain {
    grid: Grid,
    holes: Vec<Vec<usize>>,
    space: CellSpace,
    /// Grid cell index → index in the derived space (None for hole cells).
    cell_map: Vec<Option<usize>>,
    /// Grid cell index → hole id, for hole cells.
    hole_map: Vec<Option<usize>>,
    free_cells: usize,
}

impl TransboundaryDomain {
    pub fn new(grid: Grid, holes: Vec<Vec<usize>>) -> Result<Self> {
        let n = grid.len();
        let mut hole_map: Vec<Option<usize>> = vec![None; n];
        let mut normalized = Vec::with_capacity(holes.len());
        for (h, cells) in holes.into_iter().enumerate() {
            if cells.is_empty() {
                return Err(Error::Invalid(format!("hole {h} contains no cells")));
            }
            let unique: BTreeSet<usize> = cells.into_iter().collect();
            for &j in &unique {
                if j >= n {
                    return Err(Error::Invalid(format!(
                        "hole {h} references cell {j} outside the {n}-cell grid"
                    )));
                }
                if hole_map[j].is_some() {
                    return Err(Error::Invalid(format!(
                        "cell {j} belongs to two holes; holes must be disjoint"
                    )));
                }
                hole_map[j] = Some(h);
            }
            normalized.push(unique.into_iter().collect::<Vec<_>>());
        }

        let mut cell_map = vec![None; n];
        let mut weights = Vec::new();
        let area = grid.hx() * grid.hy();
        for (j, slot) in cell_map.iter_mut().enumerate() {
            if hole_map[j].is_none() {
                *slot = Some(weights.len());
                weights.push(area);
            }
        }
        let free_cells = weights.len();
        let mut atoms = vec![false; free_cells];
        for _ in 0..normalized.len() {
            weights.push(1.0);
            atoms.push(true);
        }
        let space = CellSpace::new(weights, atoms)?;
        Ok(Self { grid, holes: normalized, space, cell_map, hole_map, free_cells })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn space(&self) -> &CellSpace {
        &self.space
    }

    pub fn holes(&self) -> &[Vec<usize>] {
        &self.holes
    }

    pub fn num_holes(&self) -> usize {
        self.holes.len()
    }

    /// Index of hole `h`'s atom within the derived space.
    pub fn atom_index(&self, h: usize) -> usize {
        self.free_cells + h
    }

    /// Index of a non-hole grid cell within the derived space.
    pub fn space_index(&self, grid_cell: usize) -> Option<usize> {
        self.cell_map.get(grid_cell).copied().flatten()
    }
}

/// Rasterizes a curve over a transboundary domain: arclength entries on
/// the non-hole cells it passes through, plus a unit entry on the atom of
/// every hole its trace enters, regardless of how long it stays inside.
pub fn transboundary_measure(domain: &TransboundaryDomain, curve: &Polyline) -> Result<Measure> {
    let raster = rasterize_polyline_detailed(domain.grid(), curve)?;
    let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
    let mut touched: BTreeSet<usize> = BTreeSet::new();
    for &(grid_cell, v) in raster.measure.entries() {
        match domain.hole_map[grid_cell] {
            Some(h) => {
                if v > 0.0 {
                    touched.insert(h);
                }
            }
            None => {
                let j = domain.cell_map[grid_cell].expect("non-hole cells are mapped");
                *acc.entry(j).or_insert(0.0) += v;
            }
        }
    }
    for h in touched {
        acc.insert(domain.atom_index(h), 1.0);
    }
    Measure::from_accumulated(acc)
}

/// The system induced by a strictly positive metric: one row per cell
/// with the single entry `1/φ_j`, so every row integrates the metric to
/// exactly 1. Solving this system returns the metric itself, which makes
/// it a self-checking fixture for the solver.
pub fn gamma_phi_system(space: &CellSpace, metric: &Metric) -> Result<MeasureSystem> {
    if metric.len() != space.len() {
        return Err(Error::DimensionMismatch {
            context: "metric-induced system",
            expected: space.len(),
            got: metric.len(),
        });
    }
    let mut rows = Vec::with_capacity(space.len());
    for (j, &phi) in metric.values().iter().enumerate() {
        if !(phi.is_finite() && phi > 0.0) {
            return Err(Error::Contract(format!(
                "cell {j}: metric value {phi} must be strictly positive and finite"
            )));
        }
        rows.push(Measure::singleton(j, 1.0 / phi)?);
    }
    Ok(MeasureSystem::new(rows))
}

/// A symmetric index interval of quadrature mass `1/n` around a center
/// sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitInterval {
    pub center: usize,
    /// First sample index of the interval.
    pub lo: usize,
    /// Last sample index of the interval.
    pub hi: usize,
    /// Trapezoidal mass of the interval; at least `1/n`, and exceeding it
    /// by at most one sample slice.
    pub mass: f64,
}

/// For every feasible center along a sampled line, the smallest symmetric
/// index interval whose trapezoidal mass reaches `1/n`, found by binary
/// search on the prefix sums. A center is feasible when some symmetric
/// window inside the sample range carries that much mass. Returns an
/// empty list when the whole line carries less than `1/n`.
pub fn unit_mass_intervals(
    line_samples: &[f64],
    h: f64,
    n: usize,
) -> Result<Vec<UnitInterval>> {
    if n == 0 {
        return Err(Error::Contract("the traversal count n must be positive".into()));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Contract(format!("sample spacing must be positive, got {h}")));
    }
    for (i, &v) in line_samples.iter().enumerate() {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::Invalid(format!("sample {i} is {v}; values must be ≥ 0")));
        }
    }
    let len = line_samples.len();
    let target = 1.0 / n as f64;
    let slack = 1e-12 * target.max(1.0);
    if len < 2 {
        return Ok(Vec::new());
    }
    let mut prefix = vec![0.0f64; len];
    for i in 1..len {
        prefix[i] = prefix[i - 1] + 0.5 * h * (line_samples[i - 1] + line_samples[i]);
    }
    if prefix[len - 1] < target - slack {
        return Ok(Vec::new());
    }

    let mut out = Vec::new();
    for c in 0..len {
        let rmax = c.min(len - 1 - c);
        let mass_at = |r: usize| prefix[c + r] - prefix[c - r];
        if mass_at(rmax) < target - slack {
            continue;
        }
        let mut lo = 0usize;
        let mut hi = rmax;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if mass_at(mid) >= target - slack {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        out.push(UnitInterval { center: c, lo: c - hi, hi: c + hi, mass: mass_at(hi) });
    }
    Ok(out)
}
