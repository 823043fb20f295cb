//! Quadrature for the homogeneous (singular or fractional) integral operator
//!
//!   T_{Ω,β} f(x) = ∫ Ω(x−y)/|x−y|^{n−β} · f(y) dy,
//!
//! its iterated commutators with kernel factor (b(x)−b(y))^m, the multilinear
//! variant Π_j (b_j(x)−b_j(y)), smoothly truncated kernels, the fractional
//! maximal function, and weighted Lebesgue norms.
//!
//! Everything is direct O(targets × sources) midpoint summation; the source
//! cell containing the target is excluded (principal value at β = 0) or
//! replaced by the exact local integral of |z|^{β−n} (β > 0).

use crate::error::{Error, Result};
use crate::grid::{Cube, DyadicFamily, GridFunction, GridSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Degree-zero homogeneous kernel samples on the sphere: two values for
/// n = 1, a periodic angular table (linear interpolation) for n = 2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Omega {
    Line { plus: f64, minus: f64 },
    Circle(Vec<f64>),
}

/// Table length used by the built-in n = 2 kernel presets.
pub const ANGULAR_TABLE_LEN: usize = 4096;

impl Omega {
    pub fn dim(&self) -> usize {
        match self {
            Omega::Line { .. } => 1,
            Omega::Circle(_) => 2,
        }
    }

    /// Sample a Lipschitz function of the angle into a periodic table.
    pub fn circle_from_fn(f: impl Fn(f64) -> f64) -> Omega {
        let table = (0..ANGULAR_TABLE_LEN)
            .map(|k| f(2.0 * std::f64::consts::PI * k as f64 / ANGULAR_TABLE_LEN as f64))
            .collect();
        Omega::Circle(table)
    }

    /// Evaluate at the direction of a nonzero difference vector.
    pub fn eval_dir(&self, diff: &[f64]) -> f64 {
        match self {
            Omega::Line { plus, minus } => {
                if diff[0] >= 0.0 {
                    *plus
                } else {
                    *minus
                }
            }
            Omega::Circle(table) => {
                let angle = diff[1].atan2(diff[0]);
                let len = table.len();
                let t = angle / (2.0 * std::f64::consts::PI) * len as f64;
                let t = t.rem_euclid(len as f64);
                let k = t.floor() as usize % len;
                let frac = t - t.floor();
                table[k] * (1.0 - frac) + table[(k + 1) % len] * frac
            }
        }
    }

    pub fn spherical_mean(&self) -> f64 {
        match self {
            Omega::Line { plus, minus } => (plus + minus) / 2.0,
            Omega::Circle(table) => table.iter().sum::<f64>() / table.len() as f64,
        }
    }

    pub fn sup_abs(&self) -> f64 {
        match self {
            Omega::Line { plus, minus } => plus.abs().max(minus.abs()),
            Omega::Circle(table) => table.iter().fold(0.0, |m, v| v.abs().max(m)),
        }
    }

    /// L^r norm over the sphere (counting measure scaled to the sphere size).
    pub fn lr_norm(&self, r: f64) -> f64 {
        match self {
            Omega::Line { plus, minus } => {
                (plus.abs().powf(r) + minus.abs().powf(r)).powf(1.0 / r)
            }
            Omega::Circle(table) => {
                let mean =
                    table.iter().map(|v| v.abs().powf(r)).sum::<f64>() / table.len() as f64;
                (mean * 2.0 * std::f64::consts::PI).powf(1.0 / r)
            }
        }
    }

    /// Widest single-sign angular window where Ω is bounded away from zero:
    /// the concrete stand-in for "Ω does not change sign and is not
    /// equivalent to zero on an open subset". Returns (unit direction at the
    /// window center, ε₀ = half the window max, window width in radians).
    pub fn sign_window(&self) -> Option<(Vec<f64>, f64, f64)> {
        match self {
            Omega::Line { plus, minus } => {
                if plus.abs() >= minus.abs() && plus.abs() > 0.0 {
                    Some((vec![1.0], plus.abs() / 2.0, std::f64::consts::PI))
                } else if minus.abs() > 0.0 {
                    Some((vec![-1.0], minus.abs() / 2.0, std::f64::consts::PI))
                } else {
                    None
                }
            }
            Omega::Circle(table) => {
                let len = table.len();
                // longest circular run of one strict sign
                let mut best: Option<(usize, usize, f64)> = None; // (start, run, max|v|)
                let mut start = 0usize;
                let mut run = 0usize;
                let mut maxabs = 0.0f64;
                let mut sign = 0i8;
                for k in 0..2 * len {
                    let v = table[k % len];
                    let s = if v > 0.0 {
                        1
                    } else if v < 0.0 {
                        -1
                    } else {
                        0
                    };
                    if s != 0 && s == sign {
                        run += 1;
                        maxabs = maxabs.max(v.abs());
                    } else {
                        if sign != 0 {
                            let capped = run.min(len);
                            if best.is_none() || capped > best.unwrap().1 {
                                best = Some((start, capped, maxabs));
                            }
                        }
                        sign = s;
                        start = k;
                        run = if s != 0 { 1 } else { 0 };
                        maxabs = v.abs();
                    }
                }
                if sign != 0 {
                    let capped = run.min(len);
                    if best.is_none() || capped > best.unwrap().1 {
                        best = Some((start, capped, maxabs));
                    }
                }
                best.map(|(s, r, m)| {
                    let mid = (s + r / 2) % len;
                    let angle = 2.0 * std::f64::consts::PI * mid as f64 / len as f64;
                    let width = 2.0 * std::f64::consts::PI * r as f64 / len as f64;
                    (vec![angle.cos(), angle.sin()], m / 2.0, width)
                })
            }
        }
    }

    /// Validation of the sign hypothesis: a single-sign window of width at
    /// least 2π/64 whose max is at least 1e-6.
    pub fn has_sign_window(&self) -> bool {
        match self.sign_window() {
            Some((_, eps0, width)) => {
                width >= 2.0 * std::f64::consts::PI / 64.0 && 2.0 * eps0 >= 1e-6
            }
            None => false,
        }
    }
}

/// Homogeneous kernel: Ω on the sphere, fractional order β ∈ [0, n), and an
/// optional smooth truncation radius δ (0 = untruncated).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub omega: Omega,
    pub beta: f64,
    pub delta: f64,
    pub mean_zero_required: bool,
}

impl KernelSpec {
    pub fn new(omega: Omega, beta: f64) -> Result<Self> {
        let n = omega.dim() as f64;
        if !(0.0..n).contains(&beta) {
            return Err(Error::Argument(format!("beta must lie in [0, n={n}), got {beta}")));
        }
        let spec = KernelSpec { omega, beta, delta: 0.0, mean_zero_required: beta == 0.0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.omega.dim()
    }

    /// β = 0 demands spherical mean zero (the cancellation that makes the
    /// principal value exist).
    pub fn validate(&self) -> Result<()> {
        if self.mean_zero_required && self.omega.spherical_mean().abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "beta = 0 requires spherical mean zero, got {}",
                self.omega.spherical_mean()
            )));
        }
        Ok(())
    }

    /// Kernel value at a nonzero difference vector, including the smooth
    /// truncation factor 1 − φ(|z|/δ).
    pub fn eval(&self, diff: &[f64]) -> f64 {
        let r2: f64 = diff.iter().map(|d| d * d).sum();
        if r2 == 0.0 {
            return 0.0;
        }
        let r = r2.sqrt();
        let n = self.dim() as f64;
        let mut k = self.omega.eval_dir(diff) * r.powf(self.beta - n);
        if self.delta > 0.0 {
            k *= 1.0 - smooth_plateau(r / self.delta);
        }
        k
    }
}

/// C^∞ cutoff φ: 1 on [0, 1/2], 0 on [1, ∞), smooth exponential bridge.
pub fn smooth_plateau(s: f64) -> f64 {
    if s <= 0.5 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        let decay = |t: f64| (-1.0 / t).exp();
        let a = decay(1.0 - s);
        let b = decay(s - 0.5);
        a / (a + b)
    }
}

/// Replace the truncation radius (the kernel becomes
/// K_β^δ = Ω/|z|^{n−β} · (1 − φ_δ), vanishing on |z| ≤ δ/2).
pub fn truncate_kernel(spec: &KernelSpec, delta: f64) -> Result<KernelSpec> {
    if !(delta > 0.0) {
        return Err(Error::Argument("truncation radius must be positive".into()));
    }
    Ok(KernelSpec { delta, ..spec.clone() })
}

/// Exact local integral of Ω(z)·|z|^{β−n} over a source cell containing the
/// target x (β > 0 only; the quadrature would otherwise see a spurious
/// near-singular value).
fn diagonal_integral(spec: &KernelSpec, x: &[f64], cell_center: &[f64], h: f64) -> f64 {
    match &spec.omega {
        Omega::Line { plus, minus } => {
            let lo = cell_center[0] - h / 2.0;
            let hi = cell_center[0] + h / 2.0;
            let left = (x[0] - lo).max(0.0);
            let right = (hi - x[0]).max(0.0);
            (plus * left.powf(spec.beta) + minus * right.powf(spec.beta)) / spec.beta
        }
        Omega::Circle(table) => {
            // polar closed form in the radial variable, numeric in the angle:
            // ∫_cell Ω r^{β−2} = (1/β) ∫ Ω(θ) R(θ)^β dθ with the square's
            // boundary radius R(θ); evaluated with x at the cell center.
            let len = table.len();
            let dtheta = 2.0 * std::f64::consts::PI / len as f64;
            let mut acc = 0.0;
            for (k, v) in table.iter().enumerate() {
                let theta = k as f64 * dtheta;
                let denom = theta.cos().abs().max(theta.sin().abs());
                let radius = h / 2.0 / denom;
                acc += v * radius.powf(spec.beta) * dtheta;
            }
            acc / spec.beta
        }
    }
}

/// Does the closed source cell centered at `c` with size `h` contain x?
fn cell_contains(c: &[f64], h: f64, x: &[f64]) -> bool {
    c.iter().zip(x).all(|(ci, xi)| (xi - ci).abs() <= h / 2.0 * (1.0 + 1e-12))
}

/// Point evaluation of T_{Ω,β} f at x with the per-pair weight `factor`
/// (1 for the plain operator, the b-difference product for commutators).
/// `factor_vanishes_on_diagonal` switches the diagonal handling: commutator
/// factors vanish at y = x, so their diagonal contribution is 0 for any β.
fn apply_at_with_factor(
    spec: &KernelSpec,
    f: &GridFunction,
    x: &[f64],
    factor: &dyn Fn(usize) -> f64,
    factor_vanishes_on_diagonal: bool,
) -> f64 {
    let h = f.cell_size();
    let vol = f.cell_volume();
    let mut acc = 0.0;
    let mut diff = vec![0.0; f.dim()];
    for idx in 0..f.len() {
        let fv = f.value(idx);
        if fv == 0.0 {
            continue;
        }
        let y = f.cell_center(idx);
        if cell_contains(&y, h, x) {
            if !factor_vanishes_on_diagonal && spec.beta > 0.0 && spec.delta == 0.0 {
                acc += fv * diagonal_integral(spec, x, &y, h);
            }
            // β = 0: principal value, the symmetric cell cancels in the mean
            continue;
        }
        for d in 0..f.dim() {
            diff[d] = x[d] - y[d];
        }
        acc += factor(idx) * spec.eval(&diff) * fv * vol;
    }
    acc
}

/// T_{Ω,β} f at a single point.
pub fn apply_t_at(spec: &KernelSpec, f: &GridFunction, x: &[f64]) -> Result<f64> {
    spec.validate()?;
    if x.len() != f.dim() {
        return Err(Error::Argument("point dimension mismatch".into()));
    }
    Ok(apply_at_with_factor(spec, f, x, &|_| 1.0, false))
}

/// T_{Ω,β} f sampled on a target grid (independent of the source grid).
pub fn apply_t(spec: &KernelSpec, f: &GridFunction, x_grid: &GridSpec) -> Result<GridFunction> {
    spec.validate()?;
    if x_grid.domain.dim() != f.dim() {
        return Err(Error::Argument("target grid dimension mismatch".into()));
    }
    let probe = GridFunction::constant(x_grid.domain.clone(), x_grid.resolution, 0.0)?;
    let values: Vec<f64> = (0..probe.len())
        .into_par_iter()
        .map(|i| apply_at_with_factor(spec, f, &probe.cell_center(i), &|_| 1.0, false))
        .collect();
    GridFunction::new(x_grid.domain.clone(), x_grid.resolution, values)
}

/// Kernel plus symbol(s): iterated order m, optionally a vector of m symbols.
#[derive(Clone, Debug)]
pub struct CommutatorSpec {
    pub kernel: KernelSpec,
    pub b: GridFunction,
    pub m: usize,
    pub b_vector: Option<Vec<GridFunction>>,
}

impl CommutatorSpec {
    pub fn new(kernel: KernelSpec, b: GridFunction, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Argument("iteration order m must be ≥ 1".into()));
        }
        if kernel.dim() != b.dim() {
            return Err(Error::Argument("kernel and symbol dimension mismatch".into()));
        }
        Ok(CommutatorSpec { kernel, b, m, b_vector: None })
    }

    pub fn with_vector(kernel: KernelSpec, b_vector: Vec<GridFunction>) -> Result<Self> {
        if b_vector.is_empty() {
            return Err(Error::Argument("b_vector must be nonempty".into()));
        }
        let b = b_vector[0].clone();
        let m = b_vector.len();
        let mut spec = CommutatorSpec::new(kernel, b, m)?;
        spec.b_vector = Some(b_vector);
        Ok(spec)
    }
}

/// Iterated commutator (T_{Ω,β})_b^m f at one point:
/// ∫ (b(x)−b(y))^m Ω(x−y)/|x−y|^{n−β} f(y) dy.
pub fn apply_commutator_m_at(spec: &CommutatorSpec, f: &GridFunction, x: &[f64]) -> Result<f64> {
    spec.kernel.validate()?;
    if f.spec() != spec.b.spec() {
        return Err(Error::Argument("symbol b must share the source grid".into()));
    }
    let bx = spec.b.value_at(x)?;
    let m = spec.m as i32;
    let b = &spec.b;
    Ok(apply_at_with_factor(&spec.kernel, f, x, &|idx| (bx - b.value(idx)).powi(m), true))
}

/// Iterated commutator sampled on a target grid.
pub fn apply_commutator_m(
    spec: &CommutatorSpec,
    f: &GridFunction,
    x_grid: &GridSpec,
) -> Result<GridFunction> {
    let probe = GridFunction::constant(x_grid.domain.clone(), x_grid.resolution, 0.0)?;
    let values: Result<Vec<f64>> = (0..probe.len())
        .into_par_iter()
        .map(|i| apply_commutator_m_at(spec, f, &probe.cell_center(i)))
        .collect();
    GridFunction::new(x_grid.domain.clone(), x_grid.resolution, values?)
}

/// Iterated commutator on an explicit list of target cells of a grid spec;
/// the workhorse for localized norms (output aligned with `cells`).
pub fn apply_commutator_m_on_cells(
    spec: &CommutatorSpec,
    f: &GridFunction,
    x_grid: &GridSpec,
    cells: &[usize],
) -> Result<Vec<f64>> {
    let probe = GridFunction::constant(x_grid.domain.clone(), x_grid.resolution, 0.0)?;
    cells
        .par_iter()
        .map(|&i| apply_commutator_m_at(spec, f, &probe.cell_center(i)))
        .collect()
}

/// Multilinear commutator with factor Π_j (b_j(x)−b_j(y)).
pub fn apply_commutator_vec(
    spec: &CommutatorSpec,
    f: &GridFunction,
    x_grid: &GridSpec,
) -> Result<GridFunction> {
    spec.kernel.validate()?;
    let bs = spec
        .b_vector
        .as_ref()
        .ok_or_else(|| Error::Argument("b_vector is required".into()))?;
    if bs.len() != spec.m {
        return Err(Error::Argument(format!(
            "b_vector length {} must equal m = {}",
            bs.len(),
            spec.m
        )));
    }
    for b in bs {
        if b.spec() != f.spec() {
            return Err(Error::Argument("each b_j must share the source grid".into()));
        }
    }
    let probe = GridFunction::constant(x_grid.domain.clone(), x_grid.resolution, 0.0)?;
    let values: Result<Vec<f64>> = (0..probe.len())
        .into_par_iter()
        .map(|i| {
            let x = probe.cell_center(i);
            let bx: Vec<f64> = bs.iter().map(|b| b.value_at(&x)).collect::<Result<_>>()?;
            Ok(apply_at_with_factor(
                &spec.kernel,
                f,
                &x,
                &|idx| bx.iter().zip(bs).map(|(v, b)| v - b.value(idx)).product(),
                true,
            ))
        })
        .collect();
    GridFunction::new(x_grid.domain.clone(), x_grid.resolution, values?)
}

/// Fractional maximal function: at each cell x the max over family cubes
/// containing x of |Q|^{γ/n−1} ∫_Q |f|.
pub fn fractional_maximal(
    f: &GridFunction,
    gamma: f64,
    family: &DyadicFamily,
) -> Result<GridFunction> {
    let n = f.dim() as f64;
    if !(gamma > 0.0 && gamma < n) {
        return Err(Error::Argument(format!("gamma must lie in (0, n), got {gamma}")));
    }
    let mut out = vec![0.0f64; f.len()];
    for q in family.iter_cubes() {
        let Some(ranges) = f.axis_ranges(q) else { continue };
        let mut integral = 0.0;
        let mut cells = Vec::new();
        f.for_each_in_ranges(&ranges, |idx, v| {
            integral += v.abs();
            cells.push(idx);
        });
        let integral = integral * f.cell_volume();
        let val = q.volume().powf(gamma / n - 1.0) * integral;
        for idx in cells {
            if val > out[idx] {
                out[idx] = val;
            }
        }
    }
    GridFunction::new(f.domain().clone(), f.resolution(), out)
}

/// (∫_E |g|^p w)^{1/p} by midpoint rule; callers pass w already raised
/// (ω^p or ω^q). E = None integrates over the whole grid.
pub fn weighted_lp_norm(
    g: &GridFunction,
    w: &GridFunction,
    p: f64,
    e: Option<&Cube>,
) -> Result<f64> {
    if g.spec() != w.spec() {
        return Err(Error::Argument("norm weight must share the grid".into()));
    }
    if !(p >= 1.0) {
        return Err(Error::Argument(format!("p must lie in [1,∞), got {p}")));
    }
    let cells: Vec<usize> = match e {
        Some(cube) => g.cell_indices_in(cube),
        None => (0..g.len()).collect(),
    };
    Ok(weighted_lp_norm_cells(g, w, p, &cells))
}

/// Same norm over an explicit cell set.
pub fn weighted_lp_norm_cells(g: &GridFunction, w: &GridFunction, p: f64, cells: &[usize]) -> f64 {
    let sum: f64 = cells
        .iter()
        .map(|&i| g.value(i).abs().powf(p) * w.value(i))
        .sum();
    (sum * g.cell_volume()).powf(1.0 / p)
}

/// Far-field error proxy for truncating the integration domain:
/// ‖f‖₁ · dist^{β−n} (reported, never asserted).
pub fn far_field_tail_bound(f: &GridFunction, dist: f64, beta: f64) -> f64 {
    let l1: f64 = f.values().iter().map(|v| v.abs()).sum::<f64>() * f.cell_volume();
    l1 * dist.powf(beta - f.dim() as f64)
}
