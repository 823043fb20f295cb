//! Cubes, grid-sampled functions, and dyadic families — the substrate every
//! other module consumes.
//!
//! Conventions: all cubes are closed and axis-parallel, described by a center
//! and a side length. Grid functions sample a box at cell centers; every
//! integral in the toolkit is a midpoint rule over those centers.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::ops::Range;

/// Relative slack (in units of one cell) used when deciding whether a cell
/// center lies inside a cube. Guards against round-off from computed cube
/// coordinates without ever flipping membership for dyadic-aligned cubes,
/// whose centers sit half a cell away from any cube boundary.
const CELL_TOL: f64 = 1e-9;

/// Axis-parallel closed cube: center `c_Q`, side `l_Q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    center: Vec<f64>,
    side: f64,
}

impl Cube {
    pub fn new(center: Vec<f64>, side: f64) -> Result<Self> {
        if !(side > 0.0) || !side.is_finite() {
            return Err(Error::Argument(format!("cube side must be positive, got {side}")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Argument("cube center must be finite".into()));
        }
        Ok(Cube { center, side })
    }

    /// 1-d interval `[lo, hi]`.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Cube::new(vec![(lo + hi) / 2.0], hi - lo)
    }

    /// Cube from per-axis bounds; the box must be an actual cube.
    pub fn from_bounds(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::Argument("bounds must be non-empty and of equal length".into()));
        }
        let side = hi[0] - lo[0];
        for d in 0..lo.len() {
            let s = hi[d] - lo[d];
            if (s - side).abs() > 1e-9 * side.abs().max(1.0) {
                return Err(Error::Argument("box is not a cube: unequal side lengths".into()));
            }
        }
        let center = lo.iter().zip(hi).map(|(a, b)| (a + b) / 2.0).collect();
        Cube::new(center, side)
    }

    /// Unit cube `Q_0 = [-1/2, 1/2]^n` centered at the origin.
    pub fn unit_centered(n: usize) -> Self {
        Cube { center: vec![0.0; n], side: 1.0 }
    }

    /// Centered dyadic box `R_i = [-2^i, 2^i]^n`.
    pub fn dyadic_box(n: usize, i: i32) -> Self {
        Cube { center: vec![0.0; n], side: 2.0 * powi2(i) }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim() as i32)
    }

    pub fn lo(&self, axis: usize) -> f64 {
        self.center[axis] - self.side / 2.0
    }

    pub fn hi(&self, axis: usize) -> f64 {
        self.center[axis] + self.side / 2.0
    }

    /// Concentric dilate `aQ`: same center, side `a·l_Q`.
    pub fn scaled(&self, a: f64) -> Result<Self> {
        Cube::new(self.center.clone(), self.side * a)
    }

    pub fn translated(&self, v: &[f64]) -> Result<Self> {
        if v.len() != self.dim() {
            return Err(Error::Argument("translation dimension mismatch".into()));
        }
        let center = self.center.iter().zip(v).map(|(c, t)| c + t).collect();
        Cube::new(center, self.side)
    }

    /// Same side, new center.
    pub fn recentered(&self, center: Vec<f64>) -> Result<Self> {
        Cube::new(center, self.side)
    }

    /// The `2^n` vertices; bit `j` of the index selects the upper face on axis `j`.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let h = self.side / 2.0;
        (0..1usize << n)
            .map(|bits| {
                (0..n)
                    .map(|j| if bits >> j & 1 == 1 { self.center[j] + h } else { self.center[j] - h })
                    .collect()
            })
            .collect()
    }

    /// Vertex coordinates for a given vertex index (see `vertices`).
    pub fn vertex(&self, bits: usize) -> Vec<f64> {
        let h = self.side / 2.0;
        (0..self.dim())
            .map(|j| if bits >> j & 1 == 1 { self.center[j] + h } else { self.center[j] - h })
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let tol = CELL_TOL * self.side;
        x.len() == self.dim()
            && (0..self.dim()).all(|d| x[d] >= self.lo(d) - tol && x[d] <= self.hi(d) + tol)
    }

    pub fn contains_cube(&self, q: &Cube) -> bool {
        let tol = CELL_TOL * self.side.max(q.side);
        q.dim() == self.dim()
            && (0..self.dim()).all(|d| q.lo(d) >= self.lo(d) - tol && q.hi(d) <= self.hi(d) + tol)
    }

    /// Volume of the intersection with another cube (0 if disjoint).
    pub fn overlap_volume(&self, other: &Cube) -> f64 {
        let mut v = 1.0;
        for d in 0..self.dim() {
            let w = self.hi(d).min(other.hi(d)) - self.lo(d).max(other.lo(d));
            if w <= 0.0 {
                return 0.0;
            }
            v *= w;
        }
        v
    }

    pub fn is_disjoint_from(&self, other: &Cube) -> bool {
        (0..self.dim()).any(|d| self.hi(d) < other.lo(d) || self.lo(d) > other.hi(d))
    }
}

fn powi2(i: i32) -> f64 {
    (i as f64).exp2()
}

/// Shape of a grid without values: used as the template for operator outputs
/// and mollified samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub domain: Cube,
    pub resolution: usize,
}

impl GridSpec {
    pub fn new(domain: Cube, resolution: usize) -> Result<Self> {
        check_resolution(resolution)?;
        Ok(GridSpec { domain, resolution })
    }

    pub fn cell_size(&self) -> f64 {
        self.domain.side() / self.resolution as f64
    }
}

fn check_resolution(resolution: usize) -> Result<()> {
    if resolution == 0 || !resolution.is_power_of_two() {
        return Err(Error::Argument(format!(
            "resolution must be a positive power of two, got {resolution}"
        )));
    }
    Ok(())
}

/// Uniformly sampled real-valued function on a box. Values are stored
/// row-major with axis 0 slowest; samples sit at cell centers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    domain: Cube,
    resolution: usize,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(domain: Cube, resolution: usize, values: Vec<f64>) -> Result<Self> {
        check_resolution(resolution)?;
        let expected = resolution.pow(domain.dim() as u32);
        if values.len() != expected {
            return Err(Error::Argument(format!(
                "value count {} does not match resolution^n = {}",
                values.len(),
                expected
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("grid values must be finite".into()));
        }
        Ok(GridFunction { domain, resolution, values })
    }

    pub fn from_fn(domain: Cube, resolution: usize, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        check_resolution(resolution)?;
        let n = domain.dim();
        let len = resolution.pow(n as u32);
        let mut values = Vec::with_capacity(len);
        let mut x = vec![0.0; n];
        let h = domain.side() / resolution as f64;
        for idx in 0..len {
            let mut rem = idx;
            for d in (0..n).rev() {
                let i = rem % resolution;
                rem /= resolution;
                x[d] = domain.lo(d) + (i as f64 + 0.5) * h;
            }
            values.push(f(&x));
        }
        GridFunction::new(domain, resolution, values)
    }

    pub fn from_spec(spec: &GridSpec, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        GridFunction::from_fn(spec.domain.clone(), spec.resolution, f)
    }

    pub fn constant(domain: Cube, resolution: usize, c: f64) -> Result<Self> {
        let len = resolution.pow(domain.dim() as u32);
        GridFunction::new(domain, resolution, vec![c; len])
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec { domain: self.domain.clone(), resolution: self.resolution }
    }

    pub fn domain(&self) -> &Cube {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn cell_size(&self) -> f64 {
        self.domain.side() / self.resolution as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_size().powi(self.dim() as i32)
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

    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn cell_center(&self, idx: usize) -> Vec<f64> {
        let n = self.dim();
        let h = self.cell_size();
        let mut x = vec![0.0; n];
        let mut rem = idx;
        for d in (0..n).rev() {
            let i = rem % self.resolution;
            rem /= self.resolution;
            x[d] = self.domain.lo(d) + (i as f64 + 0.5) * h;
        }
        x
    }

    /// Nearest-cell sample at a point of the domain (within half a cell of slack).
    pub fn value_at(&self, x: &[f64]) -> Result<f64> {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::Argument("point dimension mismatch".into()));
        }
        let h = self.cell_size();
        let mut idx = 0usize;
        for d in 0..n {
            let t = (x[d] - self.domain.lo(d)) / h - 0.5;
            if t < -0.5 - CELL_TOL || t > self.resolution as f64 - 0.5 + CELL_TOL {
                return Err(Error::Domain(format!("point outside grid domain on axis {d}")));
            }
            let i = t.clamp(0.0, self.resolution as f64 - 1.0).round() as usize;
            idx = idx * self.resolution + i.min(self.resolution - 1);
        }
        Ok(self.values[idx])
    }

    /// Per-axis index ranges of cells whose centers lie in the closed cube Q.
    /// Returns None when no cell center is inside.
    pub fn axis_ranges(&self, q: &Cube) -> Option<Vec<Range<usize>>> {
        if q.dim() != self.dim() {
            return None;
        }
        let h = self.cell_size();
        let mut ranges = Vec::with_capacity(self.dim());
        for d in 0..self.dim() {
            let lo = (q.lo(d) - self.domain.lo(d)) / h - 0.5 - CELL_TOL;
            let hi = (q.hi(d) - self.domain.lo(d)) / h - 0.5 + CELL_TOL;
            let i0 = lo.ceil().max(0.0);
            let i1 = hi.floor().min(self.resolution as f64 - 1.0);
            if i1 < i0 {
                return None;
            }
            ranges.push(i0 as usize..i1 as usize + 1);
        }
        Some(ranges)
    }

    /// Flat indices of cells whose centers lie in Q.
    pub fn cell_indices_in(&self, q: &Cube) -> Vec<usize> {
        let Some(ranges) = self.axis_ranges(q) else { return Vec::new() };
        let mut out = Vec::new();
        self.for_each_in_ranges(&ranges, |idx, _| out.push(idx));
        out
    }

    /// Visit `(flat index, value)` over a per-axis index box, axis 0 slowest.
    pub fn for_each_in_ranges(&self, ranges: &[Range<usize>], mut visit: impl FnMut(usize, f64)) {
        let n = self.dim();
        debug_assert_eq!(ranges.len(), n);
        let mut id: Vec<usize> = ranges.iter().map(|r| r.start).collect();
        loop {
            let mut idx = 0usize;
            for d in 0..n {
                idx = idx * self.resolution + id[d];
            }
            visit(idx, self.values[idx]);
            // odometer increment, last axis fastest
            let mut d = n;
            loop {
                if d == 0 {
                    return;
                }
                d -= 1;
                id[d] += 1;
                if id[d] < ranges[d].end {
                    break;
                }
                id[d] = ranges[d].start;
                if d == 0 {
                    return;
                }
            }
        }
    }

    /// Midpoint-rule integral of `map(value)` over the cells covering Q.
    /// The covered cell union stands in for Q itself.
    pub fn integrate_over(&self, q: &Cube, map: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
        let ranges = self
            .axis_ranges(q)
            .ok_or_else(|| Error::Resolution(format!("cube of side {} covers no grid cell", q.side())))?;
        let mut sum = 0.0;
        let mut count = 0usize;
        self.for_each_in_ranges(&ranges, |_, v| {
            sum += map(v);
            count += 1;
        });
        let vol = count as f64 * self.cell_volume();
        Ok((sum * self.cell_volume(), vol))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            domain: self.domain.clone(),
            resolution: self.resolution,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<GridFunction> {
        if self.spec() != other.spec() {
            return Err(Error::Argument("grid shape mismatch".into()));
        }
        Ok(GridFunction {
            domain: self.domain.clone(),
            resolution: self.resolution,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// CSV export: header `# domain=<lo..hi per axis> resolution=<r>`, then
    /// row-major values (one row of the grid per line for n = 2).
    pub fn to_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let domain = (0..self.dim())
            .map(|d| format!("{}..{}", self.domain.lo(d), self.domain.hi(d)))
            .collect::<Vec<_>>()
            .join(",");
        writeln!(w, "# domain={} resolution={}", domain, self.resolution)?;
        if self.dim() == 1 {
            for v in &self.values {
                writeln!(w, "{v}")?;
            }
        } else {
            for row in self.values.chunks(self.resolution) {
                let line = row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
                writeln!(w, "{line}")?;
            }
        }
        Ok(())
    }

    pub fn from_csv<R: BufRead>(r: R) -> Result<GridFunction> {
        let mut lines = r.lines();
        let header = loop {
            match lines.next() {
                Some(line) => {
                    let line = line?;
                    let t = line.trim();
                    if !t.is_empty() {
                        break t.to_string();
                    }
                }
                None => return Err(Error::Parse("empty grid file".into())),
            }
        };
        if !header.starts_with('#') {
            return Err(Error::Parse("missing `# domain=.. resolution=..` header".into()));
        }
        let mut domain: Option<Cube> = None;
        let mut resolution: Option<usize> = None;
        for token in header.trim_start_matches('#').split_whitespace() {
            if let Some(spec) = token.strip_prefix("domain=") {
                let mut lo = Vec::new();
                let mut hi = Vec::new();
                for part in spec.split(',') {
                    let (a, b) = part
                        .split_once("..")
                        .ok_or_else(|| Error::Parse(format!("bad domain interval `{part}`")))?;
                    lo.push(parse_f64(a)?);
                    hi.push(parse_f64(b)?);
                }
                domain = Some(Cube::from_bounds(&lo, &hi)?);
            } else if let Some(spec) = token.strip_prefix("resolution=") {
                resolution =
                    Some(spec.parse().map_err(|_| Error::Parse(format!("bad resolution `{spec}`")))?);
            }
        }
        let domain = domain.ok_or_else(|| Error::Parse("header lacks domain=".into()))?;
        let resolution = resolution.ok_or_else(|| Error::Parse("header lacks resolution=".into()))?;
        let mut values = Vec::new();
        for line in lines {
            let line = line?;
            for tok in line.split(',').flat_map(|s| s.split_whitespace()) {
                let tok = tok.trim();
                if !tok.is_empty() {
                    values.push(parse_f64(tok)?);
                }
            }
        }
        GridFunction::new(domain, resolution, values)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.to_csv(std::io::BufWriter::new(file))
    }

    pub fn load(path: &std::path::Path) -> Result<GridFunction> {
        let file = std::fs::File::open(path)?;
        GridFunction::from_csv(std::io::BufReader::new(file))
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse(format!("bad number `{s}`")))
}

/// Average of f over Q by midpoint rule on the cells whose centers lie in Q.
pub fn cube_average(f: &GridFunction, q: &Cube) -> Result<f64> {
    let overlap = q.overlap_volume(f.domain());
    if overlap / q.volume() < 1.0 - 1e-9 {
        return Err(Error::Domain(format!(
            "cube (center {:?}, side {}) not inside grid domain",
            q.center(),
            q.side()
        )));
    }
    let (integral, vol) = f.integrate_over(q, |v| v)?;
    Ok(integral / vol)
}

/// Sub-grid of cells whose centers lie in Q; domain snapped to the covered cells.
pub fn restrict(f: &GridFunction, q: &Cube) -> Result<GridFunction> {
    let ranges = f
        .axis_ranges(q)
        .ok_or_else(|| Error::Domain("restriction cube misses every grid cell".into()))?;
    let count = ranges.iter().map(|r| r.end - r.start).min().unwrap();
    let ranges: Vec<Range<usize>> =
        ranges.into_iter().map(|r| r.start..r.start + count).collect();
    let h = f.cell_size();
    let lo: Vec<f64> = (0..f.dim()).map(|d| f.domain().lo(d) + ranges[d].start as f64 * h).collect();
    let hi: Vec<f64> = lo.iter().map(|l| l + count as f64 * h).collect();
    let domain = Cube::from_bounds(&lo, &hi)?;
    let mut values = Vec::with_capacity(count.pow(f.dim() as u32));
    f.for_each_in_ranges(&ranges, |_, v| values.push(v));
    // the covered cell union is square by construction but need not be a
    // power-of-two grid; bypass the constructor check
    Ok(GridFunction { domain, resolution: count, values })
}

/// Finite family of dyadic descendants of a root cube, organized by level.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DyadicFamily {
    root: Cube,
    min_level: u32,
    max_level: u32,
    levels: Vec<Vec<Cube>>,
}

pub const DYADIC_CAPACITY: usize = 10_000_000;

/// All dyadic descendants of `root` between the two levels inclusive.
pub fn make_dyadic_family(root: &Cube, min_level: u32, max_level: u32) -> Result<DyadicFamily> {
    if min_level > max_level {
        return Err(Error::Argument("min_level must be ≤ max_level".into()));
    }
    let n = root.dim() as u32;
    let mut total = 0usize;
    for k in min_level..=max_level {
        let per_axis = 1usize
            .checked_shl(k)
            .ok_or_else(|| Error::Capacity("dyadic level too deep".into()))?;
        let count = per_axis
            .checked_pow(n)
            .ok_or_else(|| Error::Capacity("dyadic level too deep".into()))?;
        total = total
            .checked_add(count)
            .ok_or_else(|| Error::Capacity("dyadic family too large".into()))?;
    }
    if total > DYADIC_CAPACITY {
        return Err(Error::Capacity(format!(
            "dyadic family would hold {total} cubes (cap {DYADIC_CAPACITY})"
        )));
    }
    let mut levels = Vec::new();
    for k in min_level..=max_level {
        let per_axis = 1usize << k;
        let side = root.side() / per_axis as f64;
        let mut cubes = Vec::with_capacity(per_axis.pow(n));
        let mut id = vec![0usize; root.dim()];
        'outer: loop {
            let center: Vec<f64> =
                (0..root.dim()).map(|d| root.lo(d) + (id[d] as f64 + 0.5) * side).collect();
            cubes.push(Cube { center, side });
            let mut d = root.dim();
            loop {
                if d == 0 {
                    break 'outer;
                }
                d -= 1;
                id[d] += 1;
                if id[d] < per_axis {
                    break;
                }
                id[d] = 0;
                if d == 0 {
                    break 'outer;
                }
            }
        }
        levels.push(cubes);
    }
    Ok(DyadicFamily { root: root.clone(), min_level, max_level, levels })
}

impl DyadicFamily {
    pub fn root(&self) -> &Cube {
        &self.root
    }

    pub fn min_level(&self) -> u32 {
        self.min_level
    }

    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    pub fn level(&self, k: u32) -> &[Cube] {
        &self.levels[(k - self.min_level) as usize]
    }

    pub fn iter_cubes(&self) -> impl Iterator<Item = &Cube> {
        self.levels.iter().flatten()
    }

    pub fn cube_count(&self) -> usize {
        self.levels.iter().map(|l| l.len()).sum()
    }
}
