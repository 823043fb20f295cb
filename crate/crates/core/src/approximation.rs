//! Constructive approximation of a vanishing-oscillation function by a
//! globally Lipschitz one: pick dyadic scale indices from the decay of the
//! oscillation sups, tile an origin-centered box with dyadic shells, assign
//! vertex weights (cube averages inside, the previously built layer on shell
//! boundaries, a fixed far-field constant outermost), interpolate piecewise,
//! and finally mollify to a smooth compactly supported correction.

use std::collections::HashMap;

use crate::cube_interp::{interpolate_unchecked, WeightedCube};
use crate::error::{Error, Result};
use crate::grid::{cube_average, Cube, DyadicFamily, GridFunction, GridSpec};
use crate::oscillation::{check_alpha, osc_alpha, osc_alpha_inf, sup_osc_at_volume};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Scale selection result: the three decay indices, the shell range
/// [d1, d2+1], the shell tilings, and the far-field constant.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ApproxPlan {
    pub eps: f64,
    pub alpha: f64,
    pub i_eps: i32,
    pub j_eps: i32,
    pub k_eps: i32,
    pub d1: i32,
    pub d2: i32,
    /// (m, tiling of the core box for m = d1, of the annulus for m > d1)
    pub shells: Vec<(i32, Vec<Cube>)>,
    /// far-field constant: mean of the small-cube averages of f placed at
    /// the outermost shell's vertices
    pub offset_constant: f64,
}

fn exp2i(i: i32) -> f64 {
    (i as f64).exp2()
}

/// Side of shell-m cubes: 2^{i_eps + m − d1}.
fn shell_side(i_eps: i32, d1: i32, m: i32) -> f64 {
    exp2i(i_eps + m - d1)
}

fn shell_tiling(n: usize, i_eps: i32, d1: i32, m: i32) -> Vec<Cube> {
    let side = shell_side(i_eps, d1, m);
    let half = exp2i(m);
    let per_axis = (2.0 * half / side).round() as usize;
    let inner = exp2i(m - 1);
    let mut out = Vec::new();
    let mut id = vec![0usize; n];
    loop {
        let center: Vec<f64> = (0..n).map(|d| -half + (id[d] as f64 + 0.5) * side).collect();
        let keep = if m == d1 {
            true
        } else {
            // annulus: drop cubes fully inside the previous box
            !center.iter().all(|c| c.abs() + side / 2.0 <= inner * (1.0 + 1e-12))
        };
        if keep {
            out.push(Cube::new(center, side).unwrap());
        }
        let mut d = n;
        let mut done = true;
        while d > 0 {
            d -= 1;
            id[d] += 1;
            if id[d] < per_axis {
                done = false;
                break;
            }
            id[d] = 0;
        }
        if done {
            break;
        }
    }
    out
}

fn require_centered(f: &GridFunction) -> Result<()> {
    let tol = f.cell_size() * 1e-6;
    if f.domain().center().iter().any(|c| c.abs() > tol) {
        return Err(Error::Precondition(
            "the shell construction needs an origin-centered domain".into(),
        ));
    }
    Ok(())
}

/// Distinct vertices of a list of equal-sided, grid-aligned cubes.
fn distinct_vertices(cubes: &[Cube], side: f64) -> Vec<Vec<f64>> {
    let mut seen: HashMap<Vec<i64>, Vec<f64>> = HashMap::new();
    for q in cubes {
        for bits in 0..(1usize << q.dim()) {
            let v = q.vertex(bits);
            let key: Vec<i64> = v.iter().map(|c| (c / side * 2.0).round() as i64).collect();
            seen.entry(key).or_insert(v);
        }
    }
    let mut out: Vec<Vec<f64>> = seen.into_values().collect();
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

impl ApproxPlan {
    /// Assemble a plan from explicitly chosen indices (the scanner below
    /// calls this; tests may too). Validates the structural invariants and
    /// computes the far-field constant.
    pub fn with_indices(
        f: &GridFunction,
        alpha: f64,
        eps: f64,
        i_eps: i32,
        j_eps: i32,
        k_eps: i32,
        d2: i32,
    ) -> Result<ApproxPlan> {
        check_alpha(alpha)?;
        if !(eps > 0.0) {
            return Err(Error::Argument("eps must be positive".into()));
        }
        require_centered(f)?;
        let d1 = k_eps + 1;
        if i_eps + 3 > k_eps {
            return Err(Error::Argument(format!(
                "need i_eps + 3 ≤ k_eps, got i_eps = {i_eps}, k_eps = {k_eps}"
            )));
        }
        if d2 < d1 {
            return Err(Error::Argument(format!("need d1 = {d1} ≤ d2, got d2 = {d2}")));
        }
        let outer_reach = exp2i(d2 + 1);
        if outer_reach > f.domain().side() / 2.0 * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "outermost shell (reach {outer_reach}) exits the grid domain"
            )));
        }
        if shell_side(i_eps, d1, d1) < f.cell_size() * (1.0 - 1e-12) {
            return Err(Error::Resolution(format!(
                "innermost shell side {} is below the grid cell size",
                shell_side(i_eps, d1, d1)
            )));
        }
        let n = f.dim();
        let shells: Vec<(i32, Vec<Cube>)> =
            (d1..=d2 + 1).map(|m| (m, shell_tiling(n, i_eps, d1, m))).collect();

        // far-field constant: small-cube averages of f at the vertices of
        // the second-outermost layer
        let outer = &shells[shells.len() - 2].1;
        let p_side = shell_side(i_eps, d1, d2);
        let verts = distinct_vertices(outer, shell_side(i_eps, d1, d2));
        let mut acc = 0.0;
        for b in &verts {
            let p = Cube::new(b.clone(), p_side)?;
            let avg = cube_average(f, &p).map_err(|_| {
                Error::Domain(format!("vertex average unavailable at {:?}", b))
            })?;
            acc += avg;
        }
        let offset_constant = acc / verts.len() as f64;

        Ok(ApproxPlan { eps, alpha, i_eps, j_eps, k_eps, d1, d2, shells, offset_constant })
    }
}

/// Scan the dyadic scale range of the grid for the decay indices: the
/// largest workable small-scale index i_eps, the smallest large-scale index
/// j_eps, the smallest far-away index (floored at i_eps + 3), then the
/// smallest admissible d2.
pub fn plan_scales(f: &GridFunction, alpha: f64, eps: f64) -> Result<ApproxPlan> {
    check_alpha(alpha)?;
    if !(eps > 0.0) {
        return Err(Error::Argument("eps must be positive".into()));
    }
    require_centered(f)?;
    let n = f.dim() as f64;
    let s_lo = (2.0 * f.cell_size()).log2().ceil() as i32;
    let s_hi = f.domain().side().log2().floor() as i32;
    if s_lo >= s_hi {
        return Err(Error::Resolution("grid has no usable dyadic scale range".into()));
    }
    let sup_at: Vec<f64> = (s_lo..=s_hi)
        .map(|s| sup_osc_at_volume(f, alpha, exp2i(s).powf(n), None))
        .collect::<Result<_>>()?;
    let at = |s: i32| sup_at[(s - s_lo) as usize];
    let max_range = |lo: i32, hi: i32| -> f64 {
        (lo.max(s_lo)..=hi.min(s_hi)).map(at).fold(0.0, f64::max)
    };

    // even the finest resolvable scale must oscillate below eps, or no
    // small-scale index can exist
    if at(s_lo) >= eps {
        return Err(Error::ScaleUnresolvable(
            "small-scale condition: oscillation sup never falls below eps".into(),
        ));
    }

    // smallest j with all larger scales under eps
    let j_eps = (s_lo..=s_hi)
        .find(|&j| max_range(j, s_hi) < eps)
        .ok_or_else(|| {
            Error::ScaleUnresolvable(
                "large-scale condition: oscillation sup never falls below eps".into(),
            )
        })?;

    // smallest k with cubes away from [-2^k, 2^k]^n all under eps
    let mut k0 = None;
    for k in s_lo..s_hi {
        let band = Cube::dyadic_box(f.dim(), k);
        let sup = (s_lo..=s_hi)
            .map(|s| sup_osc_at_volume(f, alpha, exp2i(s).powf(n), Some(&band)))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        if sup < eps {
            k0 = Some(k);
            break;
        }
    }
    let k0 = k0.ok_or_else(|| {
        Error::ScaleUnresolvable(
            "far-away condition: oscillation sup never falls below eps".into(),
        )
    })?;

    let mut small_scale_held = false;
    // shells may go one level below the lattice floor: the innermost side
    // 2^i only has to stay ≥ one grid cell
    let i_floor = (f.cell_size().log2().ceil() as i32).min(s_lo);
    for i in (i_floor..=s_hi - 2).rev() {
        if max_range(s_lo, i + 2) >= eps {
            continue;
        }
        small_scale_held = true;
        let k_eps = k0.max(i + 3);
        let d1 = k_eps + 1;
        let threshold = exp2i(i - d1 - 1) * eps;
        for d2 in j_eps.max(d1)..=s_hi {
            let reach = exp2i(d2 + 1);
            if reach > f.domain().side() / 2.0 * (1.0 + 1e-12) {
                break;
            }
            if max_range(i + d2 - d1, s_hi) <= threshold {
                return ApproxPlan::with_indices(f, alpha, eps, i, j_eps, k_eps, d2);
            }
        }
    }
    Err(Error::ScaleUnresolvable(if small_scale_held {
        "no shell range fits the grid domain for any admissible small-scale index".into()
    } else {
        "small-scale condition: oscillation sup never falls below eps".into()
    }))
}

/// One resolution layer of the assembled interpolant.
#[derive(Clone, Debug)]
pub struct Shell {
    pub m: i32,
    pub side: f64,
    pub pieces: Vec<WeightedCube>,
    index: HashMap<Vec<i64>, usize>,
}

impl Shell {
    fn build(m: i32, side: f64, pieces: Vec<WeightedCube>) -> Shell {
        let origin = -exp2i(m);
        let index = pieces
            .iter()
            .enumerate()
            .map(|(i, wq)| {
                let key: Vec<i64> = wq
                    .cube()
                    .center()
                    .iter()
                    .map(|c| ((c - origin) / side - 0.5).round() as i64)
                    .collect();
                (key, i)
            })
            .collect();
        Shell { m, side, pieces, index }
    }

    /// Piece containing x, robust to points exactly on cell planes.
    fn locate(&self, x: &[f64]) -> Option<&WeightedCube> {
        let origin = -exp2i(self.m);
        let per_axis = ((2.0 * exp2i(self.m)) / self.side).round() as i64;
        let mut options: Vec<Vec<i64>> = Vec::with_capacity(x.len());
        for &xd in x {
            let t = (xd - origin) / self.side;
            let base = t.floor() as i64;
            let mut opts = vec![base.clamp(0, per_axis - 1)];
            if (t - t.round()).abs() < 1e-9 {
                let alt = (t.round() as i64 - 1).clamp(0, per_axis - 1);
                if !opts.contains(&alt) {
                    opts.push(alt);
                }
            }
            options.push(opts);
        }
        let mut pick = vec![0usize; x.len()];
        loop {
            let key: Vec<i64> = pick.iter().zip(&options).map(|(&p, o)| o[p]).collect();
            if let Some(&i) = self.index.get(&key) {
                let wq = &self.pieces[i];
                let tol = self.side * 1e-9;
                if wq
                    .cube()
                    .center()
                    .iter()
                    .zip(x)
                    .all(|(c, xd)| (xd - c).abs() <= self.side / 2.0 + tol)
                {
                    return Some(wq);
                }
            }
            let mut d = x.len();
            let mut done = true;
            while d > 0 {
                d -= 1;
                pick[d] += 1;
                if pick[d] < options[d].len() {
                    done = false;
                    break;
                }
                pick[d] = 0;
            }
            if done {
                return None;
            }
        }
    }
}

/// Piecewise multilinear interpolant over the shell family; constant
/// (`outside_value`) beyond the outermost shell, so evaluation is total.
#[derive(Clone, Debug)]
pub struct PiecewiseInterpolant {
    /// ordered by m ascending (finest innermost first)
    pub shells: Vec<Shell>,
    pub outside_value: f64,
    pub d1: i32,
    pub d2: i32,
}

impl PiecewiseInterpolant {
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let norm = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for shell in &self.shells {
            if norm > exp2i(shell.m) * (1.0 + 1e-12) {
                continue;
            }
            if let Some(wq) = shell.locate(x) {
                let clamped: Vec<f64> = wq
                    .cube()
                    .center()
                    .iter()
                    .zip(x)
                    .map(|(c, xd)| xd.clamp(c - shell.side / 2.0, c + shell.side / 2.0))
                    .collect();
                return interpolate_unchecked(wq, &clamped);
            }
        }
        self.outside_value
    }

    pub fn pieces(&self) -> impl Iterator<Item = &WeightedCube> {
        self.shells.iter().flat_map(|s| s.pieces.iter())
    }
}

/// Assign vertex weights shell by shell, outermost first: the outer layer is
/// the constant, boundary vertices of each inner layer inherit the already
/// built interpolant, interior vertices get the small-cube average of f.
pub fn build_vertex_maps(f: &GridFunction, plan: &ApproxPlan) -> Result<PiecewiseInterpolant> {
    require_centered(f)?;
    let n = f.dim();
    let a_far = plan.offset_constant;
    if !a_far.is_finite() {
        return Err(Error::Precondition("plan far-field constant is not finite".into()));
    }
    let mut built: Vec<Shell> = Vec::new(); // m descending while building
    for (m, cubes) in plan.shells.iter().rev() {
        let m = *m;
        let side = shell_side(plan.i_eps, plan.d1, m);
        if m == plan.d2 + 1 {
            let pieces = cubes
                .iter()
                .map(|q| WeightedCube::new(q.clone(), vec![a_far; 1 << n]).unwrap())
                .collect();
            built.push(Shell::build(m, side, pieces));
            continue;
        }
        let boundary = exp2i(m);
        let mut cache: HashMap<Vec<i64>, f64> = HashMap::new();
        // averages are parallel-friendly; the boundary inheritance only reads
        // the shells already built
        let mut pieces = Vec::with_capacity(cubes.len());
        for q in cubes {
            let mut psi = Vec::with_capacity(1 << n);
            for bits in 0..(1usize << n) {
                let a = q.vertex(bits);
                let key: Vec<i64> =
                    a.iter().map(|c| (c / side * 2.0).round() as i64).collect();
                let val = if let Some(&v) = cache.get(&key) {
                    v
                } else {
                    let on_boundary =
                        a.iter().any(|c| c.abs() >= boundary * (1.0 - 1e-12));
                    let v = if on_boundary {
                        evaluate_shells(&built, &a, a_far)
                    } else {
                        cube_average(f, &Cube::new(a.clone(), side)?).map_err(|_| {
                            Error::Domain(format!("vertex average unavailable at {:?}", a))
                        })?
                    };
                    cache.insert(key, v);
                    v
                };
                psi.push(val);
            }
            pieces.push(WeightedCube::new(q.clone(), psi)?);
        }
        built.push(Shell::build(m, side, pieces));
    }
    built.reverse();
    Ok(PiecewiseInterpolant { shells: built, outside_value: a_far, d1: plan.d1, d2: plan.d2 })
}

fn evaluate_shells(built: &[Shell], x: &[f64], outside: f64) -> f64 {
    // `built` is ordered m descending; search innermost-first
    for shell in built.iter().rev() {
        let norm = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if norm > exp2i(shell.m) * (1.0 + 1e-12) {
            continue;
        }
        if let Some(wq) = shell.locate(x) {
            return interpolate_unchecked(wq, x);
        }
    }
    outside
}

/// Sample the interpolant on f's grid and take the sup over the family of
/// the infimum-variant oscillation of the difference.
pub fn approx_error(
    f: &GridFunction,
    g: &PiecewiseInterpolant,
    alpha: f64,
    family: &DyadicFamily,
) -> Result<f64> {
    check_alpha(alpha)?;
    let diff_values: Vec<f64> = (0..f.len())
        .into_par_iter()
        .map(|i| f.value(i) - g.evaluate(&f.cell_center(i)))
        .collect();
    let diff = GridFunction::new(f.domain().clone(), f.resolution(), diff_values)?;
    let cubes: Vec<&Cube> = family.iter_cubes().collect();
    let oscs: Result<Vec<f64>> =
        cubes.par_iter().map(|q| osc_alpha_inf(&diff, q, alpha)).collect();
    Ok(oscs?.into_iter().fold(0.0, f64::max))
}

/// Normalized compactly supported mollifier profile on [0, 1).
fn mollifier_profile(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r * r)).exp()
    }
}

/// g ∗ φ_t − outside_value sampled on the target grid. The discrete kernel
/// is renormalized to unit mass, so constants map to exactly zero.
pub fn mollify(g: &PiecewiseInterpolant, t: f64, grid: &GridSpec) -> Result<GridFunction> {
    let cell = grid.cell_size();
    if !(t >= 2.0 * cell) {
        return Err(Error::Argument(format!(
            "mollification width {t} is below twice the grid cell size {cell}"
        )));
    }
    let n = grid.domain.dim();
    let reach = (t / cell).ceil() as i64;
    let mut offsets: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut id = vec![-reach; n];
    loop {
        let z: Vec<f64> = id.iter().map(|&k| k as f64 * cell).collect();
        let r = z.iter().map(|v| v * v).sum::<f64>().sqrt() / t;
        let w = mollifier_profile(r);
        if w > 0.0 {
            offsets.push((z, w));
        }
        let mut d = n;
        let mut done = true;
        while d > 0 {
            d -= 1;
            id[d] += 1;
            if id[d] <= reach {
                done = false;
                break;
            }
            id[d] = -reach;
        }
        if done {
            break;
        }
    }
    let total: f64 = offsets.iter().map(|(_, w)| w).sum();
    for (_, w) in &mut offsets {
        *w /= total;
    }
    let probe = GridFunction::constant(grid.domain.clone(), grid.resolution, 0.0)?;
    let values: Vec<f64> = (0..probe.len())
        .into_par_iter()
        .map(|i| {
            let x = probe.cell_center(i);
            let mut acc = 0.0;
            let mut y = vec![0.0; n];
            for (z, w) in &offsets {
                for d in 0..n {
                    y[d] = x[d] - z[d];
                }
                acc += w * g.evaluate(&y);
            }
            acc - g.outside_value
        })
        .collect();
    GridFunction::new(grid.domain.clone(), grid.resolution, values)
}

/// Telescoping-average comparison between a cube and a subcube.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
    pub reason: Option<String>,
}

/// Explicit geometric-series constant of the chaining bound.
pub fn chain_constant(alpha: f64) -> f64 {
    2.0 / (1.0 - (-alpha).exp2()) + 2.0
}

/// Check |f_Q − f_subQ| ≤ C(α)·|Q|^{α/n}·eps by walking a halving chain of
/// intermediate cubes from Q down to subQ, each recentered toward subQ.
/// Every chain cube must itself oscillate below eps; a violation is reported
/// rather than silently bounded.
pub fn regularity_chain_bound(
    f: &GridFunction,
    q: &Cube,
    subq: &Cube,
    alpha: f64,
    eps: f64,
) -> Result<ChainReport> {
    check_alpha(alpha)?;
    if !(eps > 0.0) {
        return Err(Error::Argument("eps must be positive".into()));
    }
    if !q.contains_cube(subq) {
        return Err(Error::Argument("subQ must be contained in Q".into()));
    }
    let n = f.dim() as f64;
    let mut chain = vec![q.clone()];
    let mut side = q.side() / 2.0;
    while side > subq.side() * (1.0 + 1e-12) {
        let prev = chain.last().unwrap();
        let center: Vec<f64> = (0..f.dim())
            .map(|d| subq.center()[d].clamp(prev.lo(d) + side / 2.0, prev.hi(d) - side / 2.0))
            .collect();
        chain.push(Cube::new(center, side)?);
        side /= 2.0;
    }
    chain.push(subq.clone());

    let mut reason = None;
    for p in &chain {
        let osc = osc_alpha(f, p, alpha)?;
        if osc > eps * (1.0 + 1e-9) {
            reason = Some(format!(
                "intermediate cube at {:?} (side {}) oscillates at {osc} > eps = {eps}",
                p.center(),
                p.side()
            ));
            break;
        }
    }
    let lhs = (cube_average(f, q)? - cube_average(f, subq)?).abs();
    let rhs = chain_constant(alpha) * q.volume().powf(alpha / n) * eps;
    let ok = reason.is_none() && lhs <= rhs;
    Ok(ChainReport { lhs, rhs, ok, reason })
}
