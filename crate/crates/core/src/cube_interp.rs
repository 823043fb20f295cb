//! Weighted cubes: vertex values ψ on a cube, their oscillation M_Q, and the
//! exact per-axis multilinear interpolant
//!
//!   F_Q(x) = Σ_{a ∈ V_Q} [(2c_Q − x − a)_Π / (2c_Q − 2a)_Π] · ψ(a),
//!
//! where z_Π is the product of the coordinates of z. The formula is evaluated
//! directly (n linear factors per vertex); it is exact and multilinear.

use crate::error::{Error, Result};
use crate::grid::Cube;
use crate::oscillation::lower_median;
use serde::{Deserialize, Serialize};

/// A cube plus a vertex mapping ψ; vertex indexing matches `Cube::vertices`
/// (bit j of the index = upper face on axis j).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedCube {
    cube: Cube,
    psi: Vec<f64>,
}

impl WeightedCube {
    pub fn new(cube: Cube, psi: Vec<f64>) -> Result<Self> {
        if psi.len() != 1 << cube.dim() {
            return Err(Error::Argument(format!(
                "need {} vertex values for an n={} cube, got {}",
                1 << cube.dim(),
                cube.dim(),
                psi.len()
            )));
        }
        if psi.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("vertex values must be finite".into()));
        }
        Ok(WeightedCube { cube, psi })
    }

    pub fn cube(&self) -> &Cube {
        &self.cube
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }
}

/// Oscillation M_Q = min_c Σ_{a∈V_Q} |ψ(a) − c|; the minimizer is the median
/// of the vertex values.
pub fn vertex_osc(wq: &WeightedCube) -> f64 {
    let mut vals = wq.psi.clone();
    let med = lower_median(&mut vals);
    wq.psi.iter().map(|v| (v - med).abs()).sum()
}

/// Evaluate F_Q at a point of the closed cube.
pub fn interpolate(wq: &WeightedCube, x: &[f64]) -> Result<f64> {
    let n = wq.cube.dim();
    if x.len() != n {
        return Err(Error::Argument("point dimension mismatch".into()));
    }
    if !wq.cube.contains(x) {
        return Err(Error::Domain(format!(
            "point {:?} outside cube (center {:?}, side {})",
            x,
            wq.cube.center(),
            wq.cube.side()
        )));
    }
    Ok(interpolate_unchecked(wq, x))
}

/// Evaluation without the membership check — used internally where the caller
/// has already located the containing piece (boundary points may sit a
/// rounding error outside).
pub(crate) fn interpolate_unchecked(wq: &WeightedCube, x: &[f64]) -> f64 {
    let n = wq.cube.dim();
    let c = wq.cube.center();
    let h = wq.cube.side() / 2.0;
    let mut acc = 0.0;
    for (bits, &psi) in wq.psi.iter().enumerate() {
        let mut weight = 1.0;
        for j in 0..n {
            let a = if bits >> j & 1 == 1 { c[j] + h } else { c[j] - h };
            // (2c − x − a) / (2c − 2a): the hat factor that is 1 at the
            // vertex a and 0 at the opposite face
            weight *= (2.0 * c[j] - x[j] - a) / (2.0 * c[j] - 2.0 * a);
        }
        acc += weight * psi;
    }
    acc
}

/// Which face of a cube: an axis plus lower/upper side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FaceSide {
    Lower,
    Upper,
}

/// Restriction of a weighted cube to one of its faces; the (n−1)-dimensional
/// interpolant of the result equals F_Q restricted to that face.
pub fn restrict_to_face(wq: &WeightedCube, axis: usize, side: FaceSide) -> Result<WeightedCube> {
    let n = wq.cube.dim();
    if axis >= n {
        return Err(Error::Argument(format!("face axis {axis} out of range for n={n}")));
    }
    let center: Vec<f64> = wq
        .cube
        .center()
        .iter()
        .enumerate()
        .filter(|(d, _)| *d != axis)
        .map(|(_, &c)| c)
        .collect();
    let face_cube = Cube::new(center, wq.cube.side())?;
    let fixed = matches!(side, FaceSide::Upper) as usize;
    let mut psi = Vec::with_capacity(1 << (n - 1));
    for sub in 0..1usize << (n - 1) {
        // re-insert the fixed axis bit into the sub-vertex index
        let low = sub & ((1 << axis) - 1);
        let high = sub >> axis;
        let full = low | (fixed << axis) | (high << (axis + 1));
        psi.push(wq.psi[full]);
    }
    WeightedCube::new(face_cube, psi)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GradientReport {
    pub max_partial: f64,
    pub bound: f64,
    pub ok: bool,
}

/// Finite-difference absolute slack granted on top of the exact bound.
pub const FD_ERROR_BUDGET: f64 = 1e-4;

/// Checks the Lipschitz bound |∂F_Q/∂x_i| ≤ |Q|^{-1/n}·M_Q by central
/// differences over an interior sample lattice.
pub fn gradient_bound_check(wq: &WeightedCube, samples: usize) -> Result<GradientReport> {
    if samples < 2 {
        return Err(Error::Argument("need at least 2 samples per axis".into()));
    }
    let n = wq.cube.dim();
    let side = wq.cube.side();
    let step = side / (4.0 * samples as f64);
    let mut max_partial = 0.0f64;
    let mut id = vec![0usize; n];
    let mut x = vec![0.0f64; n];
    'outer: loop {
        for d in 0..n {
            x[d] = wq.cube.lo(d) + (id[d] as f64 + 0.5) * side / samples as f64;
        }
        for d in 0..n {
            let keep = x[d];
            x[d] = keep + step;
            let up = interpolate_unchecked(wq, &x);
            x[d] = keep - step;
            let dn = interpolate_unchecked(wq, &x);
            x[d] = keep;
            max_partial = max_partial.max(((up - dn) / (2.0 * step)).abs());
        }
        let mut d = n;
        loop {
            if d == 0 {
                break 'outer;
            }
            d -= 1;
            id[d] += 1;
            if id[d] < samples {
                break;
            }
            id[d] = 0;
            if d == 0 {
                break 'outer;
            }
        }
    }
    let bound = vertex_osc(wq) / side;
    let ok = max_partial <= bound * (1.0 + 1e-6) + FD_ERROR_BUDGET;
    Ok(GradientReport { max_partial, bound, ok })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square(psi: Vec<f64>) -> WeightedCube {
        let q = Cube::from_bounds(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        WeightedCube::new(q, psi).unwrap()
    }

    #[test]
    fn vertex_osc_cases() {
        let q = Cube::from_bounds(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!(vertex_osc(&WeightedCube::new(q, vec![5.0; 4]).unwrap()), 0.0);

        let i = Cube::interval(0.0, 1.0).unwrap();
        assert_eq!(vertex_osc(&WeightedCube::new(i, vec![0.0, 1.0]).unwrap()), 1.0);

        assert_eq!(vertex_osc(&unit_square(vec![0.0, 1.0, 2.0, 3.0])), 4.0);
    }

    #[test]
    fn interpolate_linear_and_bilinear() {
        let i = Cube::interval(0.0, 1.0).unwrap();
        let w = WeightedCube::new(i, vec![0.0, 1.0]).unwrap();
        assert!((interpolate(&w, &[0.25]).unwrap() - 0.25).abs() < 1e-15);

        let w2 = unit_square(vec![0.0, 1.0, 2.0, 3.0]);
        assert!((interpolate(&w2, &[0.5, 0.5]).unwrap() - 1.5).abs() < 1e-15);
        assert!(interpolate(&w2, &[2.0, 0.5]).is_err());
    }

    #[test]
    fn vertex_agreement_and_partition_of_unity() {
        let q = Cube::new(vec![0.3, -1.7], 2.5).unwrap();
        let psi = vec![0.25, -3.0, 7.5, 0.0];
        let w = WeightedCube::new(q.clone(), psi.clone()).unwrap();
        for (bits, expect) in psi.iter().enumerate() {
            let v = interpolate(&w, &q.vertex(bits)).unwrap();
            assert!((v - expect).abs() < 1e-12);
        }
        let ones = WeightedCube::new(q.clone(), vec![1.0; 4]).unwrap();
        for t in [[0.3, -1.7], [0.0, -2.0], [1.2, -0.5]] {
            assert!((interpolate(&ones, &t).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn multilinearity_three_point_collinearity() {
        let w = unit_square(vec![2.0, -1.0, 0.5, 4.0]);
        // fix x₂, F must be affine in x₁
        for x2 in [0.1, 0.5, 0.9] {
            let f = |x1: f64| interpolate(&w, &[x1, x2]).unwrap();
            let (a, b, c) = (f(0.2), f(0.5), f(0.8));
            assert!((b - (a + c) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn face_restrictions() {
        let w = unit_square(vec![0.0, 1.0, 2.0, 3.0]);
        let bottom = restrict_to_face(&w, 1, FaceSide::Lower).unwrap();
        assert_eq!(bottom.psi(), &[0.0, 1.0]);
        let right = restrict_to_face(&w, 0, FaceSide::Upper).unwrap();
        assert_eq!(right.psi(), &[1.0, 3.0]);
        assert!(restrict_to_face(&w, 5, FaceSide::Lower).is_err());

        // n=1 face is a vertex
        let i = Cube::interval(0.0, 1.0).unwrap();
        let wi = WeightedCube::new(i, vec![4.0, 9.0]).unwrap();
        let v = restrict_to_face(&wi, 0, FaceSide::Upper).unwrap();
        assert_eq!(v.cube().dim(), 0);
        assert_eq!(v.psi(), &[9.0]);
    }

    #[test]
    fn face_interpolant_matches_restriction() {
        let w = unit_square(vec![1.0, -2.0, 0.0, 5.0]);
        let face = restrict_to_face(&w, 0, FaceSide::Upper).unwrap();
        for t in [0.0, 0.31, 0.68, 1.0] {
            let full = interpolate(&w, &[1.0, t]).unwrap();
            let sub = interpolate(&face, &[face.cube().lo(0) + t * face.cube().side()]).unwrap();
            assert!((full - sub).abs() < 1e-12, "t={t}: {full} vs {sub}");
        }
    }

    #[test]
    fn shift_scale_equivariance() {
        let base = Cube::from_bounds(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let psi = vec![0.7, -1.3, 2.2, 0.1];
        let w = WeightedCube::new(base, psi.clone()).unwrap();
        let moved = Cube::new(vec![2.5, -4.0], 3.0).unwrap();
        let wm = WeightedCube::new(moved.clone(), psi).unwrap();
        for t in [[0.2, 0.9], [0.5, 0.5], [1.0, 0.0]] {
            let y = [moved.lo(0) + t[0] * 3.0, moved.lo(1) + t[1] * 3.0];
            let a = interpolate(&w, &t).unwrap();
            let b = interpolate(&wm, &y).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_reports() {
        let i = Cube::interval(0.0, 1.0).unwrap();
        let c = WeightedCube::new(i.clone(), vec![3.0, 3.0]).unwrap();
        let rep = gradient_bound_check(&c, 8).unwrap();
        assert!(rep.max_partial.abs() < 1e-10 && rep.bound == 0.0 && rep.ok);

        let slope = WeightedCube::new(i, vec![0.0, 1.0]).unwrap();
        let rep = gradient_bound_check(&slope, 8).unwrap();
        assert!((rep.max_partial - 1.0).abs() < 1e-9 && (rep.bound - 1.0).abs() < 1e-12 && rep.ok);

        let bi = unit_square(vec![0.0, 1.0, 2.0, 3.0]);
        let rep = gradient_bound_check(&bi, 8).unwrap();
        assert!((rep.max_partial - 2.0).abs() < 1e-9, "{rep:?}");
        assert!((rep.bound - 4.0).abs() < 1e-12 && rep.ok);
    }

    #[test]
    fn gradient_bound_random_draws() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let n = if rng.gen_bool(0.5) { 1 } else { 2 };
            let cube = Cube::new(
                (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect(),
                rng.gen_range(0.1..4.0),
            )
            .unwrap();
            let psi: Vec<f64> = (0..1 << n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let w = WeightedCube::new(cube, psi).unwrap();
            let rep = gradient_bound_check(&w, 9).unwrap();
            assert!(rep.ok, "{rep:?}");
        }
    }
}
