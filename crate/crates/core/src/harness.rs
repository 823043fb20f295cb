//! Verification engines for the quantitative estimates: median-value
//! constructions, commutator lower bounds, annulus decay of localized
//! commutators, and the Fréchet–Kolmogorov compactness probe.

use crate::error::{Error, Result};
use crate::grid::{cube_average, Cube, GridFunction};
use crate::operators::{
    apply_commutator_m, apply_commutator_m_on_cells, weighted_lp_norm_cells, CommutatorSpec,
    KernelSpec,
};
use crate::oscillation::{lip_alpha_norm, lower_median, osc_alpha_inf};
use crate::weights::{weighted_measure_cells, WeightSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// Median value of b on Q: a constant m with |{b ≥ m}| ≥ |Q|/2 and
/// |{b ≤ m}| ≥ |Q|/2 over the cell samples (lower median, deterministic).
pub fn median_value(b: &GridFunction, q: &Cube) -> Result<f64> {
    let cells = b.cell_indices_in(q);
    if cells.is_empty() {
        return Err(Error::Resolution(format!(
            "cube of side {} covers no grid cell",
            q.side()
        )));
    }
    let mut vals: Vec<f64> = cells.iter().map(|&i| b.value(i)).collect();
    Ok(lower_median(&mut vals))
}

/// Companion-cube construction around a median split: Q together with a
/// distant translate P, the two half-level sets E_i of Q, and greedy
/// measure-|Q|/2 subsets F_i of P on which b(x) − b(y) keeps one sign.
#[derive(Clone, Debug)]
pub struct MedianConstruction {
    pub q: Cube,
    pub p: Cube,
    pub m_b: f64,
    pub e1: Vec<usize>,
    pub e2: Vec<usize>,
    pub f1: Vec<usize>,
    pub f2: Vec<usize>,
    pub eps0: f64,
    pub k0: usize,
    pub gamma: f64,
    pub theta0: Vec<f64>,
    /// sampled re-verification of the four postconditions
    pub properties: [bool; 4],
    /// worst sampled |N_x ∩ P| / |Q| for the kernel-floor sets
    pub worst_small_fraction: f64,
}

fn evenly_sampled(cells: &[usize], want: usize) -> Vec<usize> {
    if cells.len() <= want {
        return cells.to_vec();
    }
    let step = cells.len() as f64 / want as f64;
    (0..want).map(|k| cells[(k as f64 * step) as usize]).collect()
}

/// |N_x ∩ P| where N_x = {y ∈ P : |Ω(x − y)| < eps0}.
fn small_kernel_measure(
    kernel: &KernelSpec,
    b: &GridFunction,
    x: &[f64],
    p_cells: &[usize],
    eps0: f64,
) -> f64 {
    let count = p_cells
        .iter()
        .filter(|&&yi| {
            let y = b.cell_center(yi);
            let diff: Vec<f64> = x.iter().zip(&y).map(|(a, c)| a - c).collect();
            kernel.omega.eval_dir(&diff).abs() < eps0
        })
        .count();
    count as f64 * b.cell_volume()
}

/// Builds the median construction for (b, Ω) on Q: the direction θ₀ and
/// floor ε₀ come from the kernel's widest single-sign window, P sits at
/// k₀·l_Q along −θ₀ for the smallest admissible k₀ > 10√n, E_i split Q by
/// b ≷ m_b(P), and F_i are greedy measure-|Q|/2 selections from P.
pub fn build_median_sets(
    b: &GridFunction,
    kernel: &KernelSpec,
    q: &Cube,
    gamma: f64,
) -> Result<MedianConstruction> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Argument(format!("gamma must lie in (0,1), got {gamma}")));
    }
    if !kernel.omega.has_sign_window() {
        return Err(Error::Validation(
            "kernel has no usable single-sign angular window".into(),
        ));
    }
    let (theta0, eps0, _width) = kernel.omega.sign_window().unwrap();
    let n = b.dim();
    let l_q = q.side();
    let q_cells = b.cell_indices_in(q);
    if q_cells.is_empty() {
        return Err(Error::Resolution("Q covers no grid cell".into()));
    }
    let q_measure = q_cells.len() as f64 * b.cell_volume();
    let k0_min = (10.0 * (n as f64).sqrt()).floor() as usize + 1;
    let x_samples: Vec<Vec<f64>> = evenly_sampled(&q_cells, 64)
        .iter()
        .map(|&i| b.cell_center(i))
        .collect();

    let mut found: Option<(usize, Cube, Vec<usize>, f64)> = None;
    let mut saw_in_domain = false;
    for k0 in k0_min..k0_min + 64 {
        let center: Vec<f64> = q
            .center()
            .iter()
            .zip(&theta0)
            .map(|(c, t)| c - k0 as f64 * l_q * t)
            .collect();
        let p = Cube::new(center, l_q)?;
        if !b.domain().contains_cube(&p) {
            continue;
        }
        saw_in_domain = true;
        let p_cells = b.cell_indices_in(&p);
        if p_cells.is_empty() {
            continue;
        }
        let worst = x_samples
            .par_iter()
            .map(|x| small_kernel_measure(kernel, b, x, &p_cells, eps0))
            .reduce(|| 0.0, f64::max);
        if worst <= gamma * q_measure {
            found = Some((k0, p, p_cells, worst / q_measure));
            break;
        }
    }
    let (k0, p, p_cells, worst_small_fraction) = found.ok_or_else(|| {
        Error::Construction(if saw_in_domain {
            "no admissible companion offset: the small-kernel set |N_x ∩ P| stays above γ|Q|"
                .into()
        } else {
            "no admissible companion offset: every candidate P exits the grid domain".into()
        })
    })?;

    let m_b = median_value(b, &p)?;
    let (e1, e2): (Vec<usize>, Vec<usize>) =
        q_cells.iter().partition(|&&i| b.value(i) >= m_b);

    // greedy F_i: P-cells sorted by symbol value, taken until measure |Q|/2
    let mut by_value = p_cells.clone();
    by_value.sort_by(|&a, &c| b.value(a).partial_cmp(&b.value(c)).unwrap().then(a.cmp(&c)));
    let half_count = q_cells.len().div_ceil(2);
    let f1: Vec<usize> = by_value.iter().take(half_count).copied().collect();
    let f2: Vec<usize> = by_value.iter().rev().take(half_count).copied().collect();

    // re-verify the four postconditions on samples
    let tol = 1e-12;
    let prop1 = e1.len() + e2.len() == q_cells.len();
    let mut prop2 = true;
    let mut prop3 = true;
    for (e, f, sign) in [(&e1, &f1, 1.0), (&e2, &f2, -1.0)] {
        for &xi in evenly_sampled(e, 16).iter() {
            for &yi in evenly_sampled(f, 16).iter() {
                let d = sign * (b.value(xi) - b.value(yi));
                if d < -tol {
                    prop2 = false;
                }
                if (b.value(xi) - m_b).abs() > (b.value(xi) - b.value(yi)).abs() + tol {
                    prop3 = false;
                }
            }
        }
    }
    let prop4 = worst_small_fraction <= gamma + tol;

    Ok(MedianConstruction {
        q: q.clone(),
        p,
        m_b,
        e1,
        e2,
        f1,
        f2,
        eps0,
        k0,
        gamma,
        theta0,
        properties: [prop1, prop2, prop3, prop4],
        worst_small_fraction,
    })
}

/// Outcome of a lower-bound probe: the measured operator mass against the
/// oscillation power it is supposed to dominate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub degenerate: bool,
}

fn indicator_normalized(
    b: &GridFunction,
    w: &WeightSpec,
    cells: &[usize],
) -> Result<GridFunction> {
    let wp = weighted_measure_cells(w, cells, w.p);
    if !(wp > 0.0) {
        return Err(Error::Validation("test-set weighted measure vanishes".into()));
    }
    let scale = wp.powf(-1.0 / w.p);
    let mut vals = vec![0.0; b.len()];
    for &i in cells {
        vals[i] = scale;
    }
    GridFunction::new(b.domain().clone(), b.resolution(), vals)
}

fn weighted_q_norm_on_cells(
    out: &[f64],
    w: &WeightSpec,
    cells: &[usize],
    cell_volume: f64,
) -> Result<f64> {
    let q = w.q.ok_or_else(|| Error::Argument("q exponent is required".into()))?;
    let sum: f64 = cells
        .iter()
        .zip(out)
        .map(|(&i, &v)| v.abs().powf(q) * w.w.value(i).powf(q))
        .sum();
    Ok((sum * cell_volume).powf(1.0 / q))
}

/// Lower-bound probe: with f_i = [ω^p(F_i)]^{−1/p}·χ_{F_i} from the median
/// construction, lhs = Σ_i ‖(T)_b^m f_i‖_{L^q(ω^q, Q)} and rhs = the m-th
/// power of the infimum oscillation of b on Q. The claim under test is that
/// lhs/rhs stays bounded away from zero uniformly in Q.
pub fn lower_bound_ratio(
    b: &GridFunction,
    kernel: &KernelSpec,
    w: &WeightSpec,
    q: &Cube,
    m: usize,
    alpha: f64,
) -> Result<LowerBoundReport> {
    let n = b.dim() as f64;
    w.check_exponent_relation((m as f64 * alpha + kernel.beta) / n)?;
    let osc = osc_alpha_inf(b, q, alpha)?;
    if osc <= 1e-14 {
        return Ok(LowerBoundReport { lhs: 0.0, rhs: 0.0, ratio: 0.0, degenerate: true });
    }
    let construction = build_median_sets(b, kernel, q, 0.25)?;
    let spec = CommutatorSpec::new(kernel.clone(), b.clone(), m)?;
    let q_cells = b.cell_indices_in(q);
    let mut lhs = 0.0;
    for f_cells in [&construction.f1, &construction.f2] {
        let f_i = indicator_normalized(b, w, f_cells)?;
        let out = apply_commutator_m_on_cells(&spec, &f_i, &b.spec(), &q_cells)?;
        lhs += weighted_q_norm_on_cells(&out, w, &q_cells, b.cell_volume())?;
    }
    let rhs = osc.powi(m as i32);
    Ok(LowerBoundReport { lhs, rhs, ratio: lhs / rhs, degenerate: false })
}

/// Compactness lower probe report: the localized small-cube version of the
/// lower bound, with the extremal points and window size echoed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompactnessProbeReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub l_small: f64,
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
}

/// Localized lower probe: around the extremal pair (x₀ ∈ Q, y₀ ∈ P) build
/// windows E, F of side L_Q, send the normalized indicator of F through the
/// commutator, and measure it on E minus an allowed exclusion set B with
/// |B| ≤ |E|/2. rhs = min{õ^{2n/α}, 1}·õ^m.
#[allow(clippy::too_many_arguments)]
pub fn compactness_lower_probe(
    b: &GridFunction,
    kernel: &KernelSpec,
    w: &WeightSpec,
    q: &Cube,
    m: usize,
    alpha: f64,
    eta0: f64,
    exclusion: &[usize],
) -> Result<CompactnessProbeReport> {
    let n = b.dim() as f64;
    w.check_exponent_relation((m as f64 * alpha + kernel.beta) / n)?;
    let osc = osc_alpha_inf(b, q, alpha)?;
    if osc < eta0 {
        return Err(Error::Precondition(format!(
            "oscillation {osc} sits below the required floor {eta0}"
        )));
    }
    let lip = lip_alpha_norm(b, 1.0, b.resolution())?;
    if !(lip > 0.0) {
        return Err(Error::Precondition("symbol has no slope to localize".into()));
    }
    let l_small = ((osc / (4.0 * lip)).powf(1.0 / alpha) * q.side() / n.sqrt())
        .min(q.side() / 2.0)
        .max(2.0 * b.cell_size());

    let construction = build_median_sets(b, kernel, q, 0.25)?;
    let p = &construction.p;
    let b_p = cube_average(b, p)?;

    // extremal cells: ties broken by the lowest cell index
    let argmax = |cells: &[usize], score: &dyn Fn(usize) -> f64| -> usize {
        let mut best = cells[0];
        let mut best_score = score(best);
        for &i in &cells[1..] {
            let s = score(i);
            if s > best_score + 1e-15 {
                best = i;
                best_score = s;
            }
        }
        best
    };
    let q_cells = b.cell_indices_in(q);
    let p_cells = b.cell_indices_in(p);
    let x0_cell = argmax(&q_cells, &|i| (b.value(i) - b_p).abs());
    let x0 = b.cell_center(x0_cell);
    let bx0 = b.value(x0_cell);
    let y0_cell = argmax(&p_cells, &|i| (bx0 - b.value(i)).abs());
    let y0 = b.cell_center(y0_cell);

    let e_cube = Cube::new(x0.clone(), l_small)?;
    let f_cube = Cube::new(y0.clone(), l_small)?;
    let e_cells = b.cell_indices_in(&e_cube);
    let f_cells = b.cell_indices_in(&f_cube);
    if e_cells.is_empty() || f_cells.is_empty() {
        return Err(Error::Resolution("extremal window covers no grid cell".into()));
    }
    if 2 * exclusion.len() > e_cells.len() {
        return Err(Error::Argument(format!(
            "exclusion set of {} cells exceeds half of E ({} cells)",
            exclusion.len(),
            e_cells.len()
        )));
    }
    let excluded: HashSet<usize> = exclusion.iter().copied().collect();
    let kept: Vec<usize> = e_cells.iter().copied().filter(|i| !excluded.contains(i)).collect();

    let f_test = indicator_normalized(b, w, &f_cells)?;
    let spec = CommutatorSpec::new(kernel.clone(), b.clone(), m)?;
    let out = apply_commutator_m_on_cells(&spec, &f_test, &b.spec(), &kept)?;
    let lhs = weighted_q_norm_on_cells(&out, w, &kept, b.cell_volume())?;
    let rhs = osc.powf(2.0 * n / alpha).min(1.0) * osc.powi(m as i32);
    Ok(CompactnessProbeReport { lhs, rhs, ratio: lhs / rhs, l_small, x0, y0 })
}

/// Annulus decay report: per-annulus weighted norms of the commutator of a
/// normalized indicator of Q, plus the fitted log₂-slope per annulus.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnnulusDecayReport {
    pub norms: Vec<(i32, f64)>,
    pub slope: Option<f64>,
    pub truncated: bool,
}

/// Measures ‖(T)_b^m f‖_{L^q(ω^q)} on the annuli 2^{d+1}Q ∖ 2^dQ for d in
/// `d_range` with f the L^p(ω^p)-normalized indicator of Q, and fits
/// log₂(norm) against d by least squares.
pub fn annulus_upper_decay(
    b: &GridFunction,
    kernel: &KernelSpec,
    w: &WeightSpec,
    q: &Cube,
    m: usize,
    alpha: f64,
    d_range: &[i32],
) -> Result<AnnulusDecayReport> {
    let n = b.dim() as f64;
    w.check_exponent_relation((m as f64 * alpha + kernel.beta) / n)?;
    let q_cells = b.cell_indices_in(q);
    if q_cells.is_empty() {
        return Err(Error::Resolution("Q covers no grid cell".into()));
    }
    let f = indicator_normalized(b, w, &q_cells)?;
    let spec = CommutatorSpec::new(kernel.clone(), b.clone(), m)?;

    let mut norms = Vec::new();
    let mut truncated = false;
    for &d in d_range {
        let outer = q.scaled((d as f64 + 1.0).exp2())?;
        let inner = q.scaled((d as f64).exp2())?;
        if !b.domain().contains_cube(&outer) {
            truncated = true;
            break;
        }
        let inner_set: HashSet<usize> = b.cell_indices_in(&inner).into_iter().collect();
        let cells: Vec<usize> = b
            .cell_indices_in(&outer)
            .into_iter()
            .filter(|i| !inner_set.contains(i))
            .collect();
        let out = apply_commutator_m_on_cells(&spec, &f, &b.spec(), &cells)?;
        norms.push((d, weighted_q_norm_on_cells(&out, w, &cells, b.cell_volume())?));
    }

    // least-squares slope of log2(norm) vs d over the positive entries
    let pts: Vec<(f64, f64)> = norms
        .iter()
        .filter(|&&(_, v)| v > 1e-300)
        .map(|&(d, v)| (d as f64, v.log2()))
        .collect();
    let slope = if pts.len() >= 2 {
        let k = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        Some((k * sxy - sx * sy) / (k * sxx - sx * sx))
    } else {
        None
    };
    Ok(AnnulusDecayReport { norms, slope, truncated })
}

/// Fréchet–Kolmogorov probe report: the uniform output bound, the tail mass
/// beyond [−N, N]^n, and the translation modulus at shift radius ρ.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FkReport {
    pub bound: f64,
    pub tail: Vec<(f64, f64)>,
    pub modulus: Vec<(f64, f64)>,
}

fn axis_shift_diff_norm(
    out: &GridFunction,
    wq: &GridFunction,
    q: f64,
    axis: usize,
    cells_shift: i64,
) -> f64 {
    // ‖out(·+y) − out(·)‖ over the overlap, y = cells_shift·h along `axis`
    let n = out.dim();
    let res = out.resolution() as i64;
    let mut stride = 1i64;
    for _ in axis + 1..n {
        stride *= res;
    }
    let sum: f64 = (0..out.len() as i64)
        .into_par_iter()
        .map(|idx| {
            let coord = (idx / stride) % res;
            let moved = coord + cells_shift;
            if moved < 0 || moved >= res {
                return 0.0;
            }
            let jdx = (idx + cells_shift * stride) as usize;
            let d = out.value(jdx) - out.value(idx as usize);
            d.abs().powf(q) * wq.value(idx as usize)
        })
        .sum();
    (sum * out.cell_volume()).powf(1.0 / q)
}

/// Runs the compactness criterion surrogate over a finite ball of inputs:
/// uniform bound, tail decay, and translation modulus of the commutator
/// outputs in L^q(ω^q). Shifts are snapped to whole cells along each axis.
pub fn fk_compactness_probe(
    spec: &CommutatorSpec,
    w: &WeightSpec,
    p: f64,
    q: f64,
    ball: &[GridFunction],
    n_range: &[f64],
    rho_range: &[f64],
) -> Result<FkReport> {
    if ball.is_empty() {
        return Err(Error::Argument("the input ball is empty".into()));
    }
    let wp = w.w.map(|v| v.powf(p));
    let wq = w.w.map(|v| v.powf(q));
    for f in ball {
        let norm = crate::operators::weighted_lp_norm(f, &wp, p, None)?;
        if norm > 1.0 + 1e-9 {
            return Err(Error::Validation(format!(
                "ball member has L^p(ω^p) norm {norm} > 1"
            )));
        }
    }
    let outputs: Result<Vec<GridFunction>> = ball
        .iter()
        .map(|f| apply_commutator_m(spec, f, &f.spec()))
        .collect();
    let outputs = outputs?;

    let bound = outputs
        .iter()
        .map(|out| crate::operators::weighted_lp_norm(out, &wq, q, None))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let tail: Vec<(f64, f64)> = n_range
        .iter()
        .map(|&big_n| {
            let worst = outputs
                .iter()
                .map(|out| {
                    let cells: Vec<usize> = (0..out.len())
                        .filter(|&i| {
                            out.cell_center(i).iter().any(|c| c.abs() > big_n)
                        })
                        .collect();
                    weighted_lp_norm_cells(out, &wq, q, &cells)
                })
                .fold(0.0, f64::max);
            (big_n, worst)
        })
        .collect();

    let h = outputs[0].cell_size();
    let n_axes = outputs[0].dim();
    let modulus: Vec<(f64, f64)> = rho_range
        .iter()
        .map(|&rho| {
            let cells_shift = (rho / h).round().max(1.0) as i64;
            let mut worst = 0.0f64;
            for out in &outputs {
                for axis in 0..n_axes {
                    for s in [cells_shift, -cells_shift] {
                        worst = worst.max(axis_shift_diff_norm(out, &wq, q, axis, s));
                    }
                }
            }
            (cells_shift as f64 * h, worst)
        })
        .collect();

    Ok(FkReport { bound, tail, modulus })
}
