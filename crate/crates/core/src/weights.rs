//! Muckenhoupt A_p and A_{p,q} constants, weighted measures, and the doubling
//! and reverse-Hölder diagnostics.
//!
//! Weights with a singularity at 0 are represented by cell-center sampling,
//! which never evaluates at 0 (documented bias O(cell_size^{1+γ}) for the
//! power presets).

use crate::error::{Error, Result};
use crate::grid::{Cube, DyadicFamily, GridFunction};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A positive weight ω plus its Lebesgue exponents.
#[derive(Clone, Debug)]
pub struct WeightSpec {
    pub w: GridFunction,
    pub p: f64,
    pub q: Option<f64>,
}

impl WeightSpec {
    pub fn new(w: GridFunction, p: f64, q: Option<f64>) -> Result<Self> {
        if w.values().iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Validation("weight must be strictly positive".into()));
        }
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::Argument(format!("p must lie in (1,∞), got {p}")));
        }
        if let Some(q) = q {
            if !(q > 1.0) || !q.is_finite() {
                return Err(Error::Argument(format!("q must lie in (1,∞), got {q}")));
            }
        }
        Ok(WeightSpec { w, p, q })
    }

    /// Hölder conjugate p′ = p/(p−1).
    pub fn p_conj(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    /// Checks the exponent relation 1/q = 1/p − (mα+β)/n used by the
    /// operator norms; callers supply the offset (mα+β)/n.
    pub fn check_exponent_relation(&self, offset: f64) -> Result<()> {
        let q = self
            .q
            .ok_or_else(|| Error::Argument("q is required for this operation".into()))?;
        let want = 1.0 / self.p - offset;
        if (1.0 / q - want).abs() > 1e-9 {
            return Err(Error::Argument(format!(
                "exponent relation violated: 1/q = {} but 1/p − offset = {}",
                1.0 / q,
                want
            )));
        }
        Ok(())
    }
}

/// ∫_E ω^power over a cube by midpoint rule (0 for an empty cell set).
pub fn weighted_measure(spec: &WeightSpec, e: &Cube, power: f64) -> Result<f64> {
    match spec.w.integrate_over(e, |v| v.powf(power)) {
        Ok((integral, _)) => Ok(integral),
        Err(Error::Resolution(_)) => Ok(0.0),
        Err(err) => Err(err),
    }
}

/// Same integral over an explicit cell set.
pub fn weighted_measure_cells(spec: &WeightSpec, cells: &[usize], power: f64) -> f64 {
    cells
        .iter()
        .map(|&i| spec.w.value(i).powf(power))
        .sum::<f64>()
        * spec.w.cell_volume()
}

fn averages_on(w: &GridFunction, q: &Cube, powers: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(powers.len());
    for &pw in powers {
        let (integral, vol) = w.integrate_over(q, |v| v.powf(pw))?;
        out.push(integral / vol);
    }
    Ok(out)
}

/// Measured A_p constant: max over the family of
/// (avg_Q ω)·(avg_Q ω^{1−p′})^{p−1}; each cube's value is ≥ 1 by Jensen.
pub fn ap_constant(spec: &WeightSpec, family: &DyadicFamily) -> Result<f64> {
    // precompute the conjugate-power transform once; the sweep then only sums
    let w_dual = spec.w.map(|v| v.powf(1.0 - spec.p_conj()));
    let vals: Result<Vec<f64>> = family
        .iter_cubes()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|q| {
            let (int_w, vol) = spec.w.integrate_over(q, |v| v)?;
            let (int_d, _) = w_dual.integrate_over(q, |v| v)?;
            let v = (int_w / vol) * (int_d / vol).powf(spec.p - 1.0);
            debug_assert!(v >= 1.0 - 1e-9, "Jensen violated: {v}");
            Ok(v)
        })
        .collect();
    Ok(vals?.into_iter().fold(1.0, f64::max))
}

/// Measured A_{p,q} constant: max over the family of
/// (avg_Q ω^q)^{1/q}·(avg_Q ω^{−p′})^{1/p′}. Reported without the outer
/// 1/q power (the sup itself), matching the report schema.
pub fn apq_constant(spec: &WeightSpec, family: &DyadicFamily) -> Result<f64> {
    let q_exp = spec
        .q
        .ok_or_else(|| Error::Argument("apq_constant requires q".into()))?;
    let pc = spec.p_conj();
    let w_q = spec.w.map(|v| v.powf(q_exp));
    let w_dual = spec.w.map(|v| v.powf(-pc));
    let vals: Result<Vec<f64>> = family
        .iter_cubes()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|cube| {
            let (int_q, vol) = w_q.integrate_over(cube, |v| v)?;
            let (int_d, _) = w_dual.integrate_over(cube, |v| v)?;
            Ok((int_q / vol).powf(1.0 / q_exp) * (int_d / vol).powf(1.0 / pc))
        })
        .collect();
    Ok(vals?.into_iter().fold(0.0, f64::max))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DoublingReport {
    pub ratio: f64,
    pub cap: f64,
    pub ok: bool,
}

/// Doubling diagnostic: ω(λQ) ≤ λ^{np}·[ω]_{A_p}·ω(Q). The A_p constant is
/// measured on λQ, Q, and the dyadic descendants of λQ (a lower bound of the
/// true constant, so `ok` is a conservative check of the inequality).
pub fn doubling_check(spec: &WeightSpec, q: &Cube, lambda: f64) -> Result<DoublingReport> {
    if !(lambda > 1.0) {
        return Err(Error::Argument(format!("lambda must exceed 1, got {lambda}")));
    }
    let big = q.scaled(lambda)?;
    if !spec.w.domain().contains_cube(&big) {
        return Err(Error::Domain("λQ exits the weight's domain".into()));
    }
    let w_big = weighted_measure(spec, &big, 1.0)?;
    let w_q = weighted_measure(spec, q, 1.0)?;
    if w_q == 0.0 {
        return Err(Error::Resolution("Q covers no grid cell".into()));
    }
    let ratio = w_big / w_q;
    // measured [ω]_{A_p} over λQ, Q and a few dyadic levels under λQ
    let exponent = 1.0 - spec.p_conj();
    let mut constant = 1.0f64;
    let mut cubes: Vec<Cube> = vec![big.clone(), q.clone()];
    let levels = crate::grid::make_dyadic_family(&big, 1, 3)?;
    cubes.extend(levels.iter_cubes().cloned());
    for cube in &cubes {
        if let Ok(avgs) = averages_on(&spec.w, cube, &[1.0, exponent]) {
            constant = constant.max(avgs[0] * avgs[1].powf(spec.p - 1.0));
        }
    }
    let n = q.dim() as f64;
    let cap = lambda.powf(n * spec.p) * constant;
    Ok(DoublingReport { ratio, cap, ok: ratio <= cap })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReverseHolderReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// Reverse Hölder diagnostic: (avg_Q ω^{1+ε})^{1/(1+ε)} ≤ 2·avg_Q ω.
pub fn reverse_holder_check(
    spec: &WeightSpec,
    q: &Cube,
    eps_rh: f64,
) -> Result<ReverseHolderReport> {
    if !(eps_rh > 0.0) {
        return Err(Error::Argument("eps_rh must be positive".into()));
    }
    let avgs = averages_on(&spec.w, q, &[1.0 + eps_rh, 1.0])?;
    let lhs = avgs[0].powf(1.0 / (1.0 + eps_rh));
    let rhs = 2.0 * avgs[1];
    Ok(ReverseHolderReport { lhs, rhs, ok: lhs <= rhs })
}

/// Largest eps_rh in the given sweep for which reverse Hölder still holds
/// (None if even the smallest fails).
pub fn reverse_holder_threshold(spec: &WeightSpec, q: &Cube, sweep: &[f64]) -> Result<Option<f64>> {
    let mut best = None;
    let mut sorted = sweep.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for &eps in &sorted {
        if reverse_holder_check(spec, q, eps)?.ok {
            best = Some(eps);
        } else {
            break;
        }
    }
    Ok(best)
}
