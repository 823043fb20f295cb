//! End-to-end acceptance battery. Each criterion prints a single PASS/FAIL
//! line with its measured quantities before asserting, so a full run leaves
//! a readable scoreboard in the test output.

use fracosc_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(criterion: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion} ({name}): {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

fn bump_fn(amp: f64, width: f64, center: f64) -> impl Fn(&[f64]) -> f64 {
    move |x: &[f64]| {
        let r2: f64 = x.iter().enumerate().map(|(d, &c)| {
            let s = (c - if d == 0 { center } else { 0.0 }) / width;
            s * s
        }).sum();
        if r2 < 1.0 {
            amp * std::f64::consts::E * (-1.0 / (1.0 - r2)).exp()
        } else {
            0.0
        }
    }
}

fn nearest_cell_center(f: &GridFunction, x: f64) -> Vec<f64> {
    let lo = f.domain().lo(0);
    let h = f.cell_size();
    let k = (((x - lo) / h).floor().max(0.0) as usize).min(f.resolution() - 1);
    vec![lo + (k as f64 + 0.5) * h]
}

#[test]
fn criterion_1_oscillation_oracle_and_dilation_invariance() {
    let dom = Cube::interval(-8.0, 8.0).unwrap();
    let mut pass = true;
    let mut worst = String::new();
    for &alpha in &[0.25, 0.5, 0.75] {
        let f = GridFunction::from_fn(dom.clone(), 32768, |x| {
            x[0].signum() * x[0].abs().powf(alpha)
        })
        .unwrap();
        let oracle = 1.0 / (2f64.powf(alpha) * (alpha + 1.0));
        let mut vals = Vec::new();
        for e in -3..=3 {
            let a = (e as f64).exp2();
            let q = Cube::interval(-a, a).unwrap();
            vals.push(osc_alpha(&f, &q, alpha).unwrap());
        }
        let lo = vals.iter().cloned().fold(f64::MAX, f64::min);
        let hi = vals.iter().cloned().fold(f64::MIN, f64::max);
        let oracle_ok = vals.iter().all(|v| (v / oracle - 1.0).abs() < 0.01);
        let const_ok = hi / lo - 1.0 < 0.01;
        if !(oracle_ok && const_ok) {
            pass = false;
        }
        worst = format!("{worst} alpha={alpha}: range [{lo:.5}, {hi:.5}] oracle {oracle:.5};");
    }
    report(1, "oscillation oracle + dilation invariance", pass, &worst);
    assert!(pass);
}

#[test]
fn criterion_2_cmo_profile_dichotomy() {
    let dom = Cube::interval(-256.0, 256.0).unwrap();
    let res = 1 << 16;

    let bump = GridFunction::from_fn(dom.clone(), res, bump_fn(0.35, 1.0, 0.0)).unwrap();
    let scales: Vec<f64> = (-6..=9).map(|k| (k as f64).exp2()).collect();
    let bump_prof = cmo_profile(&bump, 0.25, &scales, &[0.5, 2.0, 8.0]).unwrap();

    let rough = GridFunction::from_fn(dom, res, |x| x[0].signum() * x[0].abs().powf(0.25)).unwrap();
    let small: Vec<f64> = (-5..=1).map(|k| (k as f64).exp2()).collect();
    let rough_prof = cmo_profile(&rough, 0.25, &small, &[1.0]).unwrap();
    // the small-scale curve must not merely miss the 10× bar: it has to stay
    // essentially flat (≥ 0.9× its initial value across six halvings)
    let initial = rough_prof.small_scale.first().unwrap().1;
    let flat = rough_prof.small_scale.iter().all(|&(_, v)| v >= 0.9 * initial);

    let pass = bump_prof.all_pass() && !rough_prof.verdict[0] && flat;
    report(
        2,
        "vanishing-oscillation dichotomy",
        pass,
        &format!(
            "bump verdicts {:?}, rough small-scale flat: {flat} (initial {initial:.4})",
            bump_prof.verdict
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_3_interpolation_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x3a11);
    let mut vertex_worst = 0.0f64;
    let mut unity_worst = 0.0f64;
    let mut face_worst = 0.0f64;
    let mut grad_failures = 0usize;

    for draw in 0..1000 {
        let n = 1 + draw % 3;
        let center: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let side = rng.gen_range(0.1..8.0);
        let cube = Cube::new(center, side).unwrap();
        let psi: Vec<f64> = (0..1usize << n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let wq = WeightedCube::new(cube.clone(), psi.clone()).unwrap();

        // vertex agreement
        for (v, &want) in psi.iter().enumerate() {
            // vertex indexing: bit d of the index selects the upper face on axis d
            let x: Vec<f64> = (0..n)
                .map(|d| if v >> d & 1 == 1 { cube.hi(d) } else { cube.lo(d) })
                .collect();
            vertex_worst = vertex_worst.max((interpolate(&wq, &x).unwrap() - want).abs());
        }

        // gradient bound with finite-difference slack
        if !gradient_bound_check(&wq, 8).unwrap().ok {
            grad_failures += 1;
        }

        if draw < 100 {
            // partition of unity: all-ones vertex data interpolates to 1
            let ones = WeightedCube::new(cube.clone(), vec![1.0; 1 << n]).unwrap();
            let x: Vec<f64> =
                (0..n).map(|d| rng.gen_range(cube.lo(d)..cube.hi(d))).collect();
            unity_worst = unity_worst.max((interpolate(&ones, &x).unwrap() - 1.0).abs());

            // face restriction agrees with the full interpolant on the face
            if n >= 2 {
                let axis = rng.gen_range(0..n);
                let side_sel = if rng.gen_bool(0.5) { FaceSide::Lower } else { FaceSide::Upper };
                let face = restrict_to_face(&wq, axis, side_sel).unwrap();
                let mut x: Vec<f64> =
                    (0..n).map(|d| rng.gen_range(cube.lo(d)..cube.hi(d))).collect();
                x[axis] = match side_sel {
                    FaceSide::Lower => cube.lo(axis),
                    FaceSide::Upper => cube.hi(axis),
                };
                let on_face: Vec<f64> =
                    x.iter().enumerate().filter(|&(d, _)| d != axis).map(|(_, &c)| c).collect();
                face_worst = face_worst
                    .max((interpolate(&face, &on_face).unwrap() - interpolate(&wq, &x).unwrap()).abs());
            }
        }
    }

    let pass = vertex_worst <= 1e-12 && unity_worst <= 1e-12 && face_worst <= 1e-10
        && grad_failures == 0;
    report(
        3,
        "multilinear interpolation suite",
        pass,
        &format!(
            "vertex {vertex_worst:.2e}, unity {unity_worst:.2e}, face {face_worst:.2e}, gradient failures {grad_failures}/1000"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_4_constructive_approximation_band() {
    // the toolkit's constructive pipeline, run at its intended parameters:
    // a smooth compactly supported profile, alpha = 1/4, and a halving
    // threshold sweep. Both clauses are evaluated exactly as stated.
    let alpha = 0.25;
    let dom = Cube::interval(-8192.0, 8192.0).unwrap();
    let f = GridFunction::from_fn(dom.clone(), 1 << 18, bump_fn(0.35, 1.0, 0.0)).unwrap();
    let window = Cube::interval(-16.0, 16.0).unwrap();
    let fine = make_dyadic_family(&window, 0, 10).unwrap();
    let coarse = make_dyadic_family(&dom, 3, 12).unwrap();
    let t = 2.0 * f.cell_size();

    let mut ratios: Vec<(f64, f64)> = Vec::new();
    let mut unplanned: Vec<f64> = Vec::new();
    let mut h_ok = true;
    let mut h_detail = String::new();
    for &eps in &[0.2, 0.1, 0.05, 0.025] {
        match plan_scales(&f, alpha, eps) {
            Ok(plan) => {
                let g = build_vertex_maps(&f, &plan).unwrap();
                let err = approx_error(&f, &g, alpha, &fine)
                    .unwrap()
                    .max(approx_error(&f, &g, alpha, &coarse).unwrap());
                ratios.push((eps, err / eps));
                let h = mollify(&g, t, &f.spec()).unwrap();
                let diff = f.zip(&h, |a, b| a - b).unwrap();
                let lip = lip_alpha_norm(&diff, alpha, f.resolution()).unwrap();
                if lip > 3.0 * err {
                    h_ok = false;
                }
                h_detail = format!("{h_detail} eps={eps}: err={err:.4} lip(f−h)={lip:.4};");
            }
            Err(e) => {
                unplanned.push(eps);
                h_detail = format!("{h_detail} eps={eps}: no plan ({e});");
            }
        }
    }
    let band_ok = unplanned.is_empty() && {
        let rs: Vec<f64> = ratios.iter().map(|&(_, r)| r).collect();
        let lo = rs.iter().cloned().fold(f64::MAX, f64::min);
        let hi = rs.iter().cloned().fold(f64::MIN, f64::max);
        hi <= 2.0 * lo
    };
    let pass = band_ok && h_ok;
    report(
        4,
        "constructive approximation error band",
        pass,
        &format!("ratios {ratios:?}, unplanned {unplanned:?};{h_detail}"),
    );
    assert!(pass);
}

#[test]
fn criterion_5_alpha_one_collapse() {
    let dom = Cube::interval(-8.0, 8.0).unwrap();
    let res = 4096usize;
    let scales: Vec<f64> = (-4..=2).map(|k| (k as f64).exp2()).collect();
    let mut pass = true;
    let mut passing = Vec::new();
    let mut detail = String::new();
    for desc in ["const:2", "linear", "bump:0.35:1", "sgnpow:1", "lacunary:1"] {
        let spec = GridSpec::new(dom.clone(), res).unwrap();
        let f = preset_function(&spec, desc).unwrap();
        let prof = cmo_profile(&f, 1.0, &scales, &[1.0, 4.0]).unwrap();
        if prof.all_pass() {
            let eps = prof.max_value();
            let lip = lip_alpha_norm(&f, 1.0, res).unwrap();
            if lip > 10.0 * eps {
                pass = false;
            }
            passing.push(desc);
            detail = format!("{detail} {desc}: eps={eps:.4} lip={lip:.4};");
        }
    }
    // the collapse statement: at alpha = 1 the passing set degenerates to
    // (essentially) constants, and those have negligible Lipschitz norm
    if !passing.contains(&"const:2") {
        pass = false;
    }
    report(5, "alpha=1 degeneracy", pass, &format!("passing {passing:?};{detail}"));
    assert!(pass);
}

#[test]
fn criterion_6_sandwich_inequality() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5a9d);
    let mut worst_low = 0.0f64;
    let mut worst_high = 0.0f64;
    for draw in 0..10_000 {
        let n = 1 + draw % 2;
        let res = 16usize;
        let dom = Cube::new(vec![0.0; n], 2.0).unwrap();
        let vals: Vec<f64> =
            (0..res.pow(n as u32)).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = GridFunction::new(dom.clone(), res, vals).unwrap();
        let side = rng.gen_range(0.25..1.9);
        let center: Vec<f64> = (0..n)
            .map(|_| rng.gen_range(-(1.0 - side / 2.0)..f64::max(1.0 - side / 2.0, 1e-9)))
            .collect();
        let q = Cube::new(center, side).unwrap();
        let alpha = rng.gen_range(0.01..=1.0);
        let o = osc_alpha(&f, &q, alpha).unwrap();
        let oi = osc_alpha_inf(&f, &q, alpha).unwrap();
        worst_low = worst_low.max(oi - o);
        worst_high = worst_high.max(o - 2.0 * oi);
    }
    let pass = worst_low <= 1e-9 && worst_high <= 1e-9;
    report(
        6,
        "median sandwich inequality",
        pass,
        &format!("10000 draws, max(inf−osc) {worst_low:.2e}, max(osc−2inf) {worst_high:.2e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_7_operator_oracles() {
    let dom = Cube::interval(-4.0, 4.0).unwrap();
    let res = 4096usize;
    let spec = GridSpec::new(dom.clone(), res).unwrap();

    // odd bounded kernel against an indicator: log 3 at the point 2
    let chi = GridFunction::from_fn(dom.clone(), res, |x| if x[0].abs() <= 1.0 { 1.0 } else { 0.0 })
        .unwrap();
    let sgn = preset_kernel("sgn", 1).unwrap();
    let x2 = nearest_cell_center(&chi, 2.0);
    let got_ln3 = apply_t_at(&sgn, &chi, &x2).unwrap();
    let ln3_ok = (got_ln3 / 3f64.ln() - 1.0).abs() < 0.02;

    // fractional integral of order 1/2 against χ_[0,1] at the origin: 2
    let chi01 = GridFunction::from_fn(dom.clone(), res, |x| {
        if (0.0..=1.0).contains(&x[0]) { 1.0 } else { 0.0 }
    })
    .unwrap();
    let riesz = preset_kernel("riesz:0.5", 1).unwrap();
    let x0 = nearest_cell_center(&chi01, 0.0);
    let got_i = apply_t_at(&riesz, &chi01, &x0).unwrap();
    let i_ok = (got_i / 2.0 - 1.0).abs() < 0.05;

    // collapse identities with b(x) = x: the m-th kernel power of the odd
    // unit kernel telescopes to a polynomial moment
    let b = preset_function(&spec, "linear").unwrap();
    let f = GridFunction::from_fn(dom.clone(), res, bump_fn(1.0, 1.0, 0.0)).unwrap();
    let (int_f, _) = f.integrate_over(&dom, |v| v).unwrap();
    let moment: f64 = (0..f.len()).map(|i| f.value(i) * f.cell_center(i)[0]).sum::<f64>()
        * f.cell_volume();
    let x = nearest_cell_center(&f, 2.0);

    let c1 = CommutatorSpec::new(sgn.clone(), b.clone(), 1).unwrap();
    let got1 = apply_commutator_m_at(&c1, &f, &x).unwrap();
    let m1_ok = (got1 / int_f - 1.0).abs() < 1e-6;

    let c2 = CommutatorSpec::new(sgn, b, 2).unwrap();
    let got2 = apply_commutator_m_at(&c2, &f, &x).unwrap();
    let want2 = x[0] * int_f - moment;
    let m2_ok = (got2 / want2 - 1.0).abs() < 0.02;

    let pass = ln3_ok && i_ok && m1_ok && m2_ok;
    report(
        7,
        "operator quadrature oracles",
        pass,
        &format!(
            "ln3: {got_ln3:.5} vs {:.5}; I_1/2: {got_i:.4} vs 2; m=1: {got1:.6} vs {int_f:.6}; m=2: {got2:.5} vs {want2:.5}",
            3f64.ln()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_8_median_set_postconditions() {
    let mut failures = 0usize;
    let mut checked = 0usize;

    // one-dimensional symbols against the odd unit kernel
    let dom1 = Cube::interval(-16.0, 16.0).unwrap();
    let spec1 = GridSpec::new(dom1, 1024).unwrap();
    let sgn1 = preset_kernel("sgn", 1).unwrap();
    let q1 = Cube::interval(0.0, 1.0).unwrap();
    for desc in ["linear", "sgnpow:0.5", "lacunary:0.5"] {
        let b = preset_function(&spec1, desc).unwrap();
        let c = build_median_sets(&b, &sgn1, &q1, 0.25).unwrap();
        checked += 4;
        failures += c.properties.iter().filter(|&&ok| !ok).count();
    }

    // a two-dimensional symbol against the angular sign kernel
    let dom2 = Cube::new(vec![0.0, 0.0], 64.0).unwrap();
    let spec2 = GridSpec::new(dom2, 256).unwrap();
    let sgn2 = preset_kernel("sgn", 2).unwrap();
    let q2 = Cube::new(vec![0.0, 0.0], 1.0).unwrap();
    for desc in ["linear", "bump:1:8"] {
        let b = preset_function(&spec2, desc).unwrap();
        let c = build_median_sets(&b, &sgn2, &q2, 0.25).unwrap();
        checked += 4;
        failures += c.properties.iter().filter(|&&ok| !ok).count();
    }

    let pass = failures == 0;
    report(
        8,
        "median-set postconditions",
        pass,
        &format!("{failures} failures over {checked} sampled postconditions"),
    );
    assert!(pass);
}

#[test]
fn criterion_9_lower_bound_uniformity() {
    let dom = Cube::interval(-256.0, 256.0).unwrap();
    let res = 8192usize;
    let spec = GridSpec::new(dom.clone(), res).unwrap();
    let b = preset_function(&spec, "linear").unwrap();
    let w = preset_weight(&spec, "one", 2.0, Some(4.0)).unwrap();
    let kernel = preset_kernel("sgn", 1).unwrap();

    let mut ratios = Vec::new();
    for &side in &[0.5, 1.0, 2.0, 4.0] {
        for &center in &[-30.0, -15.0, 0.0, 15.0, 30.0] {
            let q = Cube::new(vec![center], side).unwrap();
            let rep = lower_bound_ratio(&b, &kernel, &w, &q, 1, 0.25).unwrap();
            assert!(!rep.degenerate, "linear symbol cannot be degenerate");
            ratios.push(rep.ratio);
        }
    }
    let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
    let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let pass = lo > 0.0 && lo / hi >= 0.1;
    report(
        9,
        "lower-bound uniformity sweep",
        pass,
        &format!("20 cubes, ratio range [{lo:.4}, {hi:.4}], min/max {:.3}", lo / hi),
    );
    assert!(pass);
}

#[test]
fn criterion_10_annulus_decay_slopes() {
    let dom = Cube::interval(-512.0, 512.0).unwrap();
    let res = 4096usize;
    let spec = GridSpec::new(dom.clone(), res).unwrap();
    let q = Cube::interval(-0.5, 0.5).unwrap();
    let d_range = [3, 4, 5, 6, 7];

    let b1 = preset_function(&spec, "sgnpow:0.25").unwrap();
    let w1 = preset_weight(&spec, "one", 2.0, Some(4.0)).unwrap();
    let k1 = preset_kernel("sgn", 1).unwrap();
    let r1 = annulus_upper_decay(&b1, &k1, &w1, &q, 1, 0.25, &d_range).unwrap();

    let b2 = preset_function(&spec, "bump:0.35:1").unwrap();
    let w2 = preset_weight(&spec, "one", 1.5, Some(6.0)).unwrap();
    let k2 = preset_kernel("riesz:0.25", 1).unwrap();
    let r2 = annulus_upper_decay(&b2, &k2, &w2, &q, 1, 0.25, &d_range).unwrap();

    let s1 = r1.slope.unwrap();
    let s2 = r2.slope.unwrap();
    let pass = !r1.truncated && !r2.truncated && s1 < -0.2 && s2 < -0.2;
    report(
        10,
        "annulus decay slopes",
        pass,
        &format!("odd-kernel slope {s1:.3}, fractional-kernel slope {s2:.3} bits/annulus"),
    );
    assert!(pass);
}

#[test]
fn criterion_11_compactness_modulus_signature() {
    let dom = Cube::interval(-16.0, 16.0).unwrap();
    let res = 16384usize;
    let spec = GridSpec::new(dom.clone(), res).unwrap();
    let (p, q) = (4.0, 8.0);
    let w = preset_weight(&spec, "one", p, Some(q)).unwrap();
    let kernel = truncate_kernel(&preset_kernel("sgn", 1).unwrap(), 0.0625).unwrap();

    // a shared ball of normalized smooth inputs at three positions
    let ball: Vec<GridFunction> = [-2.0, 0.0, 2.0]
        .iter()
        .map(|&c| {
            let g = GridFunction::from_fn(dom.clone(), res, bump_fn(1.0, 1.0, c)).unwrap();
            let norm = weighted_lp_norm(&g, &w.w, p, None).unwrap();
            g.map(|v| v / (norm * (1.0 + 1e-12)))
        })
        .collect();
    let n_range = [4.0, 8.0, 12.0];
    // radii sit inside the small-shift regime where the kink symbol's
    // modulus plateaus at ~ρ^{α+1/q} while the smooth symbol keeps decaying
    // linearly; at larger shifts both curves are still saturation-dominated
    let rho_range = [0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625];

    let run = |desc: &str| -> FkReport {
        let b = preset_function(&spec, desc).unwrap();
        let cspec = CommutatorSpec::new(kernel.clone(), b, 1).unwrap();
        fk_compactness_probe(&cspec, &w, p, q, &ball, &n_range, &rho_range).unwrap()
    };
    let smooth = run("bump:1:1");
    let rough = run("sgnpow:0.125");

    let ratio = |rep: &FkReport| rep.modulus.last().unwrap().1 / rep.modulus.first().unwrap().1;
    let smooth_ratio = ratio(&smooth);
    let rough_ratio = ratio(&rough);
    let pass = smooth_ratio <= 0.1 && rough_ratio >= 0.3;
    report(
        11,
        "compactness modulus dichotomy",
        pass,
        &format!(
            "smooth-symbol modulus ratio {smooth_ratio:.4} (need ≤ 0.1), rough-symbol {rough_ratio:.4} (need ≥ 0.3)"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_12_weight_battery() {
    let dom = Cube::interval(-1.0, 1.0).unwrap();
    let family = make_dyadic_family(&dom, 0, 6).unwrap();

    // constant weights have unit characteristic
    let c = WeightSpec::new(GridFunction::constant(dom.clone(), 4096, 3.7).unwrap(), 2.0, None)
        .unwrap();
    let ap_c = ap_constant(&c, &family).unwrap();
    let const_ok = (ap_c - 1.0).abs() <= 1e-9;

    // power-weight dichotomy under six refinement steps (4× resolution each)
    let growth = |gamma: f64| -> f64 {
        let mut first = 0.0;
        let mut last = 0.0;
        for k in 0..=6 {
            let gspec = GridSpec::new(dom.clone(), 64usize << (2 * k)).unwrap();
            let w = preset_weight(&gspec, &format!("pow:{gamma}"), 2.0, None).unwrap();
            let cst = ap_constant(&w, &family).unwrap();
            if k == 0 {
                first = cst;
            }
            last = cst;
        }
        last / first
    };
    let g_half = growth(0.5);
    let g_big = growth(1.25);
    let dichotomy_ok = g_half < 2.0 && g_big >= 10.0;

    // doubling and reverse Hölder sanity on random cubes for each preset
    let gspec = GridSpec::new(dom.clone(), 4096).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x12ab);
    let mut check_failures = 0usize;
    for desc in ["one", "pow:0.5", "pow:-0.3"] {
        let w = preset_weight(&gspec, desc, 2.0, None).unwrap();
        for _ in 0..1000 {
            let side = rng.gen_range(0.01..0.4);
            let center = rng.gen_range(-(1.0 - side)..(1.0 - side));
            let q = Cube::new(vec![center], side).unwrap();
            if !doubling_check(&w, &q, 2.0).unwrap().ok {
                check_failures += 1;
            }
            if !reverse_holder_check(&w, &q, 0.5).unwrap().ok {
                check_failures += 1;
            }
        }
    }

    let pass = const_ok && dichotomy_ok && check_failures == 0;
    report(
        12,
        "weight battery",
        pass,
        &format!(
            "ap(const)={ap_c:.12}, growth γ=0.5: {g_half:.3}×, γ=1.25: {g_big:.2}×, doubling/RH failures {check_failures}/6000"
        ),
    );
    assert!(pass);
}
