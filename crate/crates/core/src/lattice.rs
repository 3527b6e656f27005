//! Continuum domains `U`, their discretizations `U_eps = U/eps ∩ Z^d`, and the
//! floor map from continuum points to lattice points.
//!
//! A vertex `z` belongs to `U_eps` exactly when the continuum point `eps * z`
//! lies in the open set `U`; there is no boundary padding. Vertices are kept in
//! lexicographic order (first coordinate slowest) so that matrix layouts and
//! the order in which random numbers are consumed are reproducible.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Geometry of the continuum domain.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    /// The open unit cube `(0,1)^d`.
    UnitSquare,
    /// The open unit ball centred at the origin (`d` = 2 or 3).
    UnitDisk,
    /// `(0,w_1) x ... x (0,w_d)`.
    Rectangle { widths: Vec<f64> },
    /// A rasterized domain, see [`Mask`].
    Mask(Mask),
}

/// Boolean raster of a domain. A continuum point `x` belongs to the domain
/// iff the cell `floor(x / cell)` is set. Cells are addressed by integer
/// coordinates `origin + index`, stored row-major with the first axis slowest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mask {
    pub cell: f64,
    pub origin: Vec<i64>,
    pub dims: Vec<usize>,
    pub cells: Vec<bool>,
}

impl Mask {
    /// Rasterizes `pred` on the cells `floor(lo/cell) ..= floor(hi/cell)`,
    /// testing each cell at its corner `cell * z` (the lattice convention).
    pub fn rasterize(
        cell: f64,
        lo: &[f64],
        hi: &[f64],
        pred: impl Fn(&[f64]) -> bool,
    ) -> Mask {
        let d = lo.len();
        let origin: Vec<i64> = lo.iter().map(|&l| (l / cell).floor() as i64).collect();
        let top: Vec<i64> = hi.iter().map(|&h| (h / cell).ceil() as i64).collect();
        let dims: Vec<usize> = (0..d).map(|a| (top[a] - origin[a] + 1) as usize).collect();
        let total: usize = dims.iter().product();
        let mut cells = Vec::with_capacity(total);
        let mut x = vec![0.0; d];
        for flat in 0..total {
            let mut rem = flat;
            for a in (0..d).rev() {
                x[a] = (origin[a] + (rem % dims[a]) as i64) as f64 * cell;
                rem /= dims[a];
            }
            cells.push(pred(&x));
        }
        Mask {
            cell,
            origin,
            dims,
            cells,
        }
    }

    fn flat_index(&self, z: &[i64]) -> Option<usize> {
        let mut flat = 0usize;
        for (a, &za) in z.iter().enumerate() {
            let off = za - self.origin[a];
            if off < 0 || off as usize >= self.dims[a] {
                return None;
            }
            flat = flat * self.dims[a] + off as usize;
        }
        Some(flat)
    }

    fn cell_of(&self, flat: usize) -> Vec<i64> {
        let d = self.dims.len();
        let mut z = vec![0; d];
        let mut rem = flat;
        for a in (0..d).rev() {
            z[a] = self.origin[a] + (rem % self.dims[a]) as i64;
            rem /= self.dims[a];
        }
        z
    }

    fn is_set(&self, z: &[i64]) -> bool {
        self.flat_index(z).map(|i| self.cells[i]).unwrap_or(false)
    }

    fn validate(&self, d: usize) -> Result<()> {
        if !(self.cell > 0.0) {
            return Err(Error::InvalidDomain("mask cell size must be positive".into()));
        }
        if self.origin.len() != d || self.dims.len() != d {
            return Err(Error::InvalidDomain(format!(
                "mask origin/dims must have length d = {d}"
            )));
        }
        if self.dims.iter().product::<usize>() != self.cells.len() {
            return Err(Error::InvalidDomain(
                "mask cell count does not match its dims".into(),
            ));
        }
        let set: Vec<usize> = (0..self.cells.len()).filter(|&i| self.cells[i]).collect();
        if set.is_empty() {
            return Err(Error::InvalidDomain("mask is empty".into()));
        }
        // breadth-first search over set cells
        let mut seen = vec![false; self.cells.len()];
        let mut queue = VecDeque::from([set[0]]);
        seen[set[0]] = true;
        let mut count = 1;
        while let Some(flat) = queue.pop_front() {
            let z = self.cell_of(flat);
            for a in 0..d {
                for step in [-1i64, 1] {
                    let mut y = z.clone();
                    y[a] += step;
                    if let Some(j) = self.flat_index(&y) {
                        if self.cells[j] && !seen[j] {
                            seen[j] = true;
                            count += 1;
                            queue.push_back(j);
                        }
                    }
                }
            }
        }
        if count != set.len() {
            return Err(Error::InvalidDomain(
                "mask is not connected under nearest-neighbour adjacency".into(),
            ));
        }
        Ok(())
    }
}

/// A continuum domain together with its dimension.
///
/// Serialized as `{"shape": "...", "d": 2, "params": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDomainSpec", into = "RawDomainSpec")]
pub struct DomainSpec {
    shape: Shape,
    d: usize,
}

#[derive(Serialize, Deserialize)]
struct RawDomainSpec {
    shape: String,
    d: usize,
    #[serde(default)]
    params: serde_json::Value,
}

#[derive(Deserialize)]
struct RectangleParams {
    widths: Vec<f64>,
}

impl TryFrom<RawDomainSpec> for DomainSpec {
    type Error = Error;

    fn try_from(raw: RawDomainSpec) -> Result<Self> {
        let shape = match raw.shape.as_str() {
            "unit_square" => Shape::UnitSquare,
            "unit_disk" => Shape::UnitDisk,
            "rectangle" => {
                let p: RectangleParams = serde_json::from_value(raw.params)?;
                Shape::Rectangle { widths: p.widths }
            }
            "mask" => Shape::Mask(serde_json::from_value(raw.params)?),
            other => return Err(Error::InvalidDomain(format!("unknown shape '{other}'"))),
        };
        DomainSpec::new(shape, raw.d)
    }
}

impl From<DomainSpec> for RawDomainSpec {
    fn from(spec: DomainSpec) -> Self {
        let (shape, params) = match spec.shape {
            Shape::UnitSquare => ("unit_square", serde_json::json!({})),
            Shape::UnitDisk => ("unit_disk", serde_json::json!({})),
            Shape::Rectangle { widths } => ("rectangle", serde_json::json!({ "widths": widths })),
            Shape::Mask(mask) => (
                "mask",
                serde_json::to_value(mask).expect("mask serializes"),
            ),
        };
        RawDomainSpec {
            shape: shape.to_string(),
            d: spec.d,
            params,
        }
    }
}

impl DomainSpec {
    pub fn new(shape: Shape, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::DimensionUnsupported {
                d,
                reason: "the field is only defined for d >= 2",
            });
        }
        match &shape {
            Shape::UnitDisk if d > 3 => {
                return Err(Error::DimensionUnsupported {
                    d,
                    reason: "unit_disk is provided for d = 2 and d = 3",
                })
            }
            Shape::Rectangle { widths } => {
                if widths.len() != d || widths.iter().any(|&w| !(w > 0.0)) {
                    return Err(Error::InvalidDomain(format!(
                        "rectangle needs {d} positive widths"
                    )));
                }
            }
            Shape::Mask(mask) => mask.validate(d)?,
            _ => {}
        }
        Ok(DomainSpec { shape, d })
    }

    pub fn unit_square(d: usize) -> Result<Self> {
        Self::new(Shape::UnitSquare, d)
    }

    pub fn unit_disk(d: usize) -> Result<Self> {
        Self::new(Shape::UnitDisk, d)
    }

    pub fn rectangle(widths: Vec<f64>) -> Result<Self> {
        let d = widths.len();
        Self::new(Shape::Rectangle { widths }, d)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn name(&self) -> &'static str {
        match self.shape {
            Shape::UnitSquare => "unit_square",
            Shape::UnitDisk => "unit_disk",
            Shape::Rectangle { .. } => "rectangle",
            Shape::Mask(_) => "mask",
        }
    }

    /// Membership of a continuum point in the open set `U`.
    pub fn contains(&self, x: &[f64]) -> bool {
        debug_assert_eq!(x.len(), self.d);
        match &self.shape {
            Shape::UnitSquare => x.iter().all(|&t| t > 0.0 && t < 1.0),
            Shape::UnitDisk => x.iter().map(|t| t * t).sum::<f64>() < 1.0,
            Shape::Rectangle { widths } => x
                .iter()
                .zip(widths)
                .all(|(&t, &w)| t > 0.0 && t < w),
            Shape::Mask(mask) => {
                let z: Vec<i64> = x.iter().map(|&t| snapped_floor(t / mask.cell)).collect();
                mask.is_set(&z)
            }
        }
    }

    /// Axis-aligned box containing the closure of `U`.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.shape {
            Shape::UnitSquare => (vec![0.0; self.d], vec![1.0; self.d]),
            Shape::UnitDisk => (vec![-1.0; self.d], vec![1.0; self.d]),
            Shape::Rectangle { widths } => (vec![0.0; self.d], widths.clone()),
            Shape::Mask(mask) => {
                let lo = mask.origin.iter().map(|&o| o as f64 * mask.cell).collect();
                let hi = mask
                    .origin
                    .iter()
                    .zip(&mask.dims)
                    .map(|(&o, &n)| (o + n as i64) as f64 * mask.cell)
                    .collect();
                (lo, hi)
            }
        }
    }

    /// Distance from `x` to the complement of `U` (zero outside `U`). For
    /// masks this is measured to the nearest unset cell corner.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        if !self.contains(x) {
            return 0.0;
        }
        match &self.shape {
            Shape::UnitSquare => x
                .iter()
                .map(|&t| t.min(1.0 - t))
                .fold(f64::INFINITY, f64::min),
            Shape::UnitDisk => 1.0 - x.iter().map(|t| t * t).sum::<f64>().sqrt(),
            Shape::Rectangle { widths } => x
                .iter()
                .zip(widths)
                .map(|(&t, &w)| t.min(w - t))
                .fold(f64::INFINITY, f64::min),
            Shape::Mask(mask) => {
                let mut best = f64::INFINITY;
                for flat in 0..mask.cells.len() {
                    if mask.cells[flat] {
                        continue;
                    }
                    let z = mask.cell_of(flat);
                    let dist2: f64 = z
                        .iter()
                        .zip(x)
                        .map(|(&za, &xa)| (za as f64 * mask.cell - xa).powi(2))
                        .sum();
                    best = best.min(dist2.sqrt());
                }
                // the raster exterior also counts as outside
                let (lo, hi) = self.bounding_box();
                for a in 0..self.d {
                    best = best.min(x[a] - lo[a]).min(hi[a] - x[a]);
                }
                best
            }
        }
    }

    /// Lebesgue measure of `U`.
    pub fn volume(&self) -> f64 {
        match &self.shape {
            Shape::UnitSquare => 1.0,
            Shape::UnitDisk => match self.d {
                2 => std::f64::consts::PI,
                _ => 4.0 / 3.0 * std::f64::consts::PI,
            },
            Shape::Rectangle { widths } => widths.iter().product(),
            Shape::Mask(mask) => {
                mask.cells.iter().filter(|&&c| c).count() as f64 * mask.cell.powi(self.d as i32)
            }
        }
    }
}

/// A point of `Z^d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticePoint(pub Vec<i64>);

impl LatticePoint {
    pub fn new(coords: Vec<i64>) -> Self {
        LatticePoint(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    /// `self + step * e_dir` (0-based direction).
    pub fn shifted(&self, dir: usize, step: i64) -> LatticePoint {
        let mut c = self.0.clone();
        c[dir] += step;
        LatticePoint(c)
    }

    pub fn dist(&self, other: &LatticePoint) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| ((a - b) as f64).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

impl From<Vec<i64>> for LatticePoint {
    fn from(v: Vec<i64>) -> Self {
        LatticePoint(v)
    }
}

/// Oriented nearest-neighbour edge `(tail, tail + e_dir)`. Directions are
/// 0-based in code; `dir = 0` is the first coordinate vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub tail: LatticePoint,
    pub dir: usize,
}

impl Edge {
    pub fn new(tail: LatticePoint, dir: usize) -> Result<Self> {
        if dir >= tail.dim() {
            return Err(Error::InvalidDomain(format!(
                "edge direction {dir} out of range for d = {}",
                tail.dim()
            )));
        }
        Ok(Edge { tail, dir })
    }

    pub fn tip(&self) -> LatticePoint {
        self.tail.shifted(self.dir, 1)
    }
}

/// Floor that snaps values within a few ulps of an integer onto it, so that
/// `floor_point(eps * z, eps) == z` survives the rounding in `eps * z / eps`.
fn snapped_floor(t: f64) -> i64 {
    let r = t.round();
    if (t - r).abs() <= 8.0 * f64::EPSILON * t.abs().max(1.0) {
        r as i64
    } else {
        t.floor() as i64
    }
}

/// Componentwise `floor(x / eps)` with the half-open convention
/// `x/eps ∈ z + [0,1)^d`. The result may fall outside `U_eps` near `∂U`.
pub fn floor_point(x: &[f64], eps: f64) -> LatticePoint {
    LatticePoint(x.iter().map(|&t| snapped_floor(t / eps)).collect())
}

/// The vertex set `U_eps` with a bijective index.
#[derive(Clone, Debug)]
pub struct LatticeDomain {
    spec: DomainSpec,
    eps: f64,
    vertices: Vec<LatticePoint>,
    lo: Vec<i64>,
    extent: Vec<usize>,
    lookup: Vec<u32>,
}

const NO_VERTEX: u32 = u32::MAX;

/// Returns all `z ∈ Z^d` with `eps * z ∈ U`, lexicographically ordered.
pub fn discretize(spec: &DomainSpec, eps: f64) -> Result<LatticeDomain> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidDomain(format!("eps must be positive, got {eps}")));
    }
    let d = spec.dim();
    let (blo, bhi) = spec.bounding_box();
    let lo: Vec<i64> = blo.iter().map(|&t| (t / eps).floor() as i64 - 1).collect();
    let hi: Vec<i64> = bhi.iter().map(|&t| (t / eps).ceil() as i64 + 1).collect();
    let extent: Vec<usize> = (0..d).map(|a| (hi[a] - lo[a] + 1) as usize).collect();
    let total: usize = extent.iter().product();
    if total >= NO_VERTEX as usize {
        return Err(Error::InvalidDomain("lattice bounding box is too large".into()));
    }

    let mut vertices = Vec::new();
    let mut lookup = vec![NO_VERTEX; total];
    let mut z = vec![0i64; d];
    let mut x = vec![0.0; d];
    // flat box index is lexicographic with the first axis slowest
    for (flat, slot) in lookup.iter_mut().enumerate() {
        let mut rem = flat;
        for a in (0..d).rev() {
            z[a] = lo[a] + (rem % extent[a]) as i64;
            rem /= extent[a];
        }
        for a in 0..d {
            x[a] = z[a] as f64 * eps;
        }
        if spec.contains(&x) {
            *slot = vertices.len() as u32;
            vertices.push(LatticePoint(z.clone()));
        }
    }
    if vertices.is_empty() {
        return Err(Error::EmptyDomain { eps });
    }
    let domain = LatticeDomain {
        spec: spec.clone(),
        eps,
        vertices,
        lo,
        extent,
        lookup,
    };
    if !domain.is_connected() {
        log::warn!(
            "discretization of {} at eps = {eps} is not connected",
            spec.name()
        );
    }
    Ok(domain)
}

impl LatticeDomain {
    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[LatticePoint] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &LatticePoint {
        &self.vertices[i]
    }

    pub fn index_of(&self, z: &[i64]) -> Option<usize> {
        let mut flat = 0usize;
        for (a, &za) in z.iter().enumerate() {
            let off = za - self.lo[a];
            if off < 0 || off as usize >= self.extent[a] {
                return None;
            }
            flat = flat * self.extent[a] + off as usize;
        }
        match self.lookup[flat] {
            NO_VERTEX => None,
            i => Some(i as usize),
        }
    }

    pub fn contains_point(&self, z: &LatticePoint) -> bool {
        self.index_of(&z.0).is_some()
    }

    /// Index of `vertex(i) + step * e_dir`, if that point is a vertex.
    pub fn neighbor(&self, i: usize, dir: usize, step: i64) -> Option<usize> {
        let mut z = self.vertices[i].0.clone();
        z[dir] += step;
        self.index_of(&z)
    }

    /// Continuum position `eps * z` of vertex `i`.
    pub fn position(&self, i: usize) -> Vec<f64> {
        self.vertices[i].0.iter().map(|&c| c as f64 * self.eps).collect()
    }

    /// All oriented edges whose tail is a vertex (the tip may be exterior).
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        let d = self.dim();
        self.vertices.iter().flat_map(move |z| {
            (0..d).map(move |dir| Edge {
                tail: z.clone(),
                dir,
            })
        })
    }

    /// Whether the nearest-neighbour graph on the vertices is connected.
    pub fn is_connected(&self) -> bool {
        let n = self.len();
        let d = self.dim();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for dir in 0..d {
                for step in [-1, 1] {
                    if let Some(j) = self.neighbor(i, dir, step) {
                        if !seen[j] {
                            seen[j] = true;
                            count += 1;
                            stack.push(j);
                        }
                    }
                }
            }
        }
        count == n
    }
}
