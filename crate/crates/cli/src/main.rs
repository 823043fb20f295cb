//! `fracosc` — command-line front end for the oscillation/commutator toolkit.
//!
//! Functions, kernels, and weights are given either as `preset:<desc>` or as
//! a path to a saved grid CSV. Every report is JSON on stdout with the tool
//! version, the full parameter echo, and the seed; curve data goes to CSV
//! files when `--out` is given.

use clap::{Args, Parser, Subcommand};
use fracosc_core as core;
use fracosc_core::{Cube, Error, GridFunction, GridSpec};
use serde_json::{json, Value};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "fracosc", version, about = "fractional oscillation toolkit")]
struct Cli {
    /// Size of the rayon thread pool (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for any randomized sweep; echoed in every report
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GridArgs {
    /// Domain bounds, `LO..HI` per axis, comma-separated for n ≥ 2
    #[arg(long, default_value = "-1..1", allow_hyphen_values = true)]
    domain: String,
    /// Grid resolution per axis (power of two)
    #[arg(long, default_value_t = 4096)]
    res: usize,
}

impl GridArgs {
    fn spec(&self) -> Result<GridSpec, Error> {
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for part in self.domain.split(',') {
            let (a, b) = part
                .split_once("..")
                .ok_or_else(|| Error::Parse(format!("domain axis `{part}` is not LO..HI")))?;
            lo.push(a.trim().parse::<f64>().map_err(|_| {
                Error::Parse(format!("domain bound `{a}` is not a number"))
            })?);
            hi.push(b.trim().parse::<f64>().map_err(|_| {
                Error::Parse(format!("domain bound `{b}` is not a number"))
            })?);
        }
        GridSpec::new(Cube::from_bounds(&lo, &hi)?, self.res)
    }
}

fn parse_cube(desc: &str) -> Result<Cube, Error> {
    // CENTER[,CENTER]:SIDE
    let (center, side) = desc
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("cube `{desc}` is not CENTER[,CENTER]:SIDE")))?;
    let c: Result<Vec<f64>, Error> = center
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("cube center `{v}` is not a number")))
        })
        .collect();
    let s = side
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("cube side `{side}` is not a number")))?;
    Cube::new(c?, s)
}

fn parse_list(desc: &str, what: &str) -> Result<Vec<f64>, Error> {
    desc.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("{what} entry `{v}` is not a number")))
        })
        .collect()
}

/// `preset:<desc>` builds the named preset; anything else loads a grid CSV.
fn load_function(spec: &GridSpec, arg: &str) -> Result<GridFunction, Error> {
    if let Some(desc) = arg.strip_prefix("preset:") {
        core::preset_function(spec, desc)
    } else {
        let g = GridFunction::load(std::path::Path::new(arg))?;
        if g.domain() != &spec.domain || g.resolution() != spec.resolution {
            return Err(Error::Validation(format!(
                "grid in {arg} does not match --domain/--res"
            )));
        }
        Ok(g)
    }
}

fn load_kernel(arg: &str, n: usize) -> Result<core::KernelSpec, Error> {
    let desc = arg.strip_prefix("preset:").unwrap_or(arg);
    core::preset_kernel(desc, n)
}

fn load_weight(
    spec: &GridSpec,
    arg: &str,
    p: f64,
    q: Option<f64>,
) -> Result<core::WeightSpec, Error> {
    let desc = arg.strip_prefix("preset:").unwrap_or(arg);
    core::preset_weight(spec, desc, p, q)
}

#[derive(Subcommand)]
enum Command {
    /// BMO-type and Lipschitz oscillation norms of a function
    OscNorm {
        #[command(flatten)]
        grid: GridArgs,
        /// Function: `preset:<desc>` or a grid CSV path
        #[arg(long)]
        f: String,
        #[arg(long)]
        alpha: f64,
        /// Dyadic family depth for the BMO sweep
        #[arg(long, default_value_t = 6)]
        levels: u32,
    },
    /// Vanishing-oscillation profile with three decay verdicts
    CmoProfile {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        f: String,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Cube volumes to sweep, comma-separated
        #[arg(long, default_value = "0.03125,0.0625,0.125,0.25,0.5,1")]
        scales: String,
        /// Far-away band half-widths, comma-separated
        #[arg(long, default_value = "0.25,0.5")]
        distances: String,
        /// CSV output for the three curves
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Constructive piecewise-multilinear approximation at a threshold
    Approximate {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        f: String,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        eps: f64,
        /// Dyadic family depth for the error measurement
        #[arg(long, default_value_t = 8)]
        levels: u32,
        /// Write the sampled interpolant to a grid CSV
        #[arg(long)]
        emit_g: Option<PathBuf>,
    },
    /// Apply the m-th iterated commutator to a function
    CommutatorApply {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        f: String,
        /// Symbol of the commutator
        #[arg(long)]
        b: String,
        /// Kernel: `sgn`, `riesz:beta`, or `table:FILE`
        #[arg(long, default_value = "sgn")]
        kernel: String,
        #[arg(long, default_value_t = 1)]
        m: usize,
        /// Grid CSV output for the result
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Median-set lower-bound ratio on one cube
    VerifyLower {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        b: String,
        #[arg(long, default_value = "sgn")]
        kernel: String,
        #[arg(long, default_value = "one")]
        weight: String,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long)]
        alpha: f64,
        /// Cube as CENTER[,CENTER]:SIDE
        #[arg(long, allow_hyphen_values = true)]
        cube: String,
    },
    /// Annulus decay of a localized commutator (upper-bound signature)
    VerifyUpper {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        b: String,
        #[arg(long, default_value = "sgn")]
        kernel: String,
        #[arg(long, default_value = "one")]
        weight: String,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true)]
        cube: String,
        /// Annulus exponents, comma-separated
        #[arg(long, default_value = "3,4,5,6,7")]
        d_range: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fréchet–Kolmogorov signature of a commutator over a normalized ball
    CompactnessProbe {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        b: String,
        #[arg(long, default_value = "sgn")]
        kernel: String,
        #[arg(long, default_value = "one")]
        weight: String,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 1)]
        m: usize,
        /// Smooth truncation width applied to the kernel
        #[arg(long, default_value_t = 0.0625)]
        delta: f64,
        /// Tail cutoffs N, comma-separated
        #[arg(long, default_value = "2,4,8")]
        n_range: String,
        /// Translation radii ρ, comma-separated
        #[arg(long, default_value = "0.5,0.25,0.125,0.0625")]
        rho_range: String,
    },
    /// Muckenhoupt-type constants plus doubling / reverse Hölder sweeps
    WeightsCheck {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        weight: String,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long, default_value_t = 6)]
        levels: u32,
        /// Random cube draws for doubling / reverse Hölder
        #[arg(long, default_value_t = 200)]
        draws: usize,
    },
}

fn base_report(cli_seed: u64, subcommand: &str, params: Value) -> Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": subcommand,
        "seed": cli_seed,
        "params": params,
    })
}

fn run(cli: Cli) -> Result<(), Error> {
    if let Some(k) = cli.threads {
        // ignore failure: the global pool may already exist in tests
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    let seed = cli.seed;
    match cli.command {
        Command::OscNorm { grid, f, alpha, levels } => {
            let spec = grid.spec()?;
            let func = load_function(&spec, &f)?;
            let family = core::make_dyadic_family(&spec.domain, 0, levels)?;
            let params = core::OscillationParams::new(alpha, family)?;
            let bmo = core::bmo_alpha_norm(&func, &params)?;
            let lip = core::lip_alpha_norm(&func, alpha, spec.resolution)?;
            let meyers = core::meyers_ratio(&func, &params)?;
            let mut rep = base_report(seed, "osc-norm", json!({
                "f": f, "alpha": alpha, "domain": grid.domain, "res": grid.res,
                "levels": levels,
            }));
            rep["bmo_alpha"] = json!(bmo);
            rep["lip_alpha"] = json!(lip);
            rep["meyers_ratio"] = json!(meyers);
            println!("{rep}");
        }
        Command::CmoProfile { grid, f, alpha, scales, distances, out } => {
            let spec = grid.spec()?;
            let func = load_function(&spec, &f)?;
            let sc = parse_list(&scales, "scales")?;
            let di = parse_list(&distances, "distances")?;
            let prof = core::cmo_profile(&func, alpha, &sc, &di)?;
            if let Some(path) = &out {
                let file = std::fs::File::create(path)?;
                prof.to_csv(std::io::BufWriter::new(file))?;
            }
            let mut rep = base_report(seed, "cmo-profile", json!({
                "f": f, "alpha": alpha, "domain": grid.domain, "res": grid.res,
                "scales": scales, "distances": distances,
            }));
            rep["verdicts"] =
                serde_json::from_str(&prof.verdicts_json()).expect("verdict json");
            rep["all_pass"] = json!(prof.all_pass());
            rep["max_value"] = json!(prof.max_value());
            println!("{rep}");
        }
        Command::Approximate { grid, f, alpha, eps, levels, emit_g } => {
            let spec = grid.spec()?;
            let func = load_function(&spec, &f)?;
            let plan = core::plan_scales(&func, alpha, eps)?;
            let g = core::build_vertex_maps(&func, &plan)?;
            let family = core::make_dyadic_family(&spec.domain, 0, levels)?;
            let err = core::approx_error(&func, &g, alpha, &family)?;
            if let Some(path) = &emit_g {
                let sampled = GridFunction::from_fn(spec.domain.clone(), spec.resolution, |x| {
                    g.evaluate(x)
                })?;
                sampled.save(path)?;
            }
            let mut rep = base_report(seed, "approximate", json!({
                "f": f, "alpha": alpha, "eps": eps, "domain": grid.domain,
                "res": grid.res, "levels": levels,
            }));
            rep["i_eps"] = json!(plan.i_eps);
            rep["j_eps"] = json!(plan.j_eps);
            rep["k_eps"] = json!(plan.k_eps);
            rep["d1"] = json!(plan.d1);
            rep["d2"] = json!(plan.d2);
            rep["A_d2"] = json!(plan.offset_constant);
            rep["approx_error"] = json!(err);
            rep["measured_C"] = json!(err / eps);
            rep["note"] = json!(
                "the large-cube tail of the scale-selection condition is \
                 checked only on cubes contained in the finite domain"
            );
            println!("{rep}");
        }
        Command::CommutatorApply { grid, f, b, kernel, m, out } => {
            let spec = grid.spec()?;
            let func = load_function(&spec, &f)?;
            let symbol = load_function(&spec, &b)?;
            let kern = load_kernel(&kernel, spec.domain.dim())?;
            let cspec = core::CommutatorSpec::new(kern, symbol, m)?;
            let result = core::apply_commutator_m(&cspec, &func, &spec)?;
            if let Some(path) = &out {
                result.save(path)?;
            }
            let ones = GridFunction::constant(spec.domain.clone(), spec.resolution, 1.0)?;
            let l2 = core::weighted_lp_norm(&result, &ones, 2.0, None)?;
            let mut rep = base_report(seed, "commutator-apply", json!({
                "f": f, "b": b, "kernel": kernel, "m": m,
                "domain": grid.domain, "res": grid.res,
            }));
            rep["l2_norm"] = json!(l2);
            rep["sup_abs"] =
                json!(result.values().iter().fold(0.0f64, |a, &v| a.max(v.abs())));
            println!("{rep}");
        }
        Command::VerifyLower { grid, b, kernel, weight, p, q, m, alpha, cube } => {
            let spec = grid.spec()?;
            let symbol = load_function(&spec, &b)?;
            let kern = load_kernel(&kernel, spec.domain.dim())?;
            let w = load_weight(&spec, &weight, p, Some(q))?;
            let cb = parse_cube(&cube)?;
            let lower = core::lower_bound_ratio(&symbol, &kern, &w, &cb, m, alpha)?;
            let mut rep = base_report(seed, "verify-lower", json!({
                "b": b, "kernel": kernel, "weight": weight, "p": p, "q": q,
                "m": m, "alpha": alpha, "cube": cube,
                "domain": grid.domain, "res": grid.res,
            }));
            rep["lhs"] = json!(lower.lhs);
            rep["rhs"] = json!(lower.rhs);
            rep["ratio"] = json!(lower.ratio);
            rep["degenerate"] = json!(lower.degenerate);
            println!("{rep}");
        }
        Command::VerifyUpper { grid, b, kernel, weight, p, q, m, alpha, cube, d_range, out } => {
            let spec = grid.spec()?;
            let symbol = load_function(&spec, &b)?;
            let kern = load_kernel(&kernel, spec.domain.dim())?;
            let w = load_weight(&spec, &weight, p, Some(q))?;
            let cb = parse_cube(&cube)?;
            let ds: Vec<i32> = parse_list(&d_range, "d-range")?
                .into_iter()
                .map(|v| v as i32)
                .collect();
            let decay = core::annulus_upper_decay(&symbol, &kern, &w, &cb, m, alpha, &ds)?;
            if let Some(path) = &out {
                let mut text = String::from("d,norm\n");
                for (d, v) in &decay.norms {
                    text.push_str(&format!("{d},{v}\n"));
                }
                std::fs::write(path, text)?;
            }
            let mut rep = base_report(seed, "verify-upper", json!({
                "b": b, "kernel": kernel, "weight": weight, "p": p, "q": q,
                "m": m, "alpha": alpha, "cube": cube, "d_range": d_range,
                "domain": grid.domain, "res": grid.res,
            }));
            rep["norms"] = json!(decay.norms);
            rep["slope"] = json!(decay.slope);
            rep["truncated"] = json!(decay.truncated);
            println!("{rep}");
        }
        Command::CompactnessProbe { grid, b, kernel, weight, p, q, m, delta, n_range, rho_range } => {
            let spec = grid.spec()?;
            let symbol = load_function(&spec, &b)?;
            let kern = core::truncate_kernel(&load_kernel(&kernel, spec.domain.dim())?, delta)?;
            let w = load_weight(&spec, &weight, p, Some(q))?;
            let ns = parse_list(&n_range, "n-range")?;
            let rhos = parse_list(&rho_range, "rho-range")?;
            // default ball: three normalized bumps across the domain center
            let side = spec.domain.side();
            let ball: Result<Vec<GridFunction>, Error> = [-0.125, 0.0, 0.125]
                .iter()
                .map(|&frac| {
                    let width = side / 16.0;
                    let center: Vec<f64> =
                        spec.domain.center().iter().map(|c| c + frac * side).collect();
                    let g = GridFunction::from_fn(spec.domain.clone(), spec.resolution, |x| {
                        let r2: f64 = x
                            .iter()
                            .zip(&center)
                            .map(|(a, c)| ((a - c) / width).powi(2))
                            .sum();
                        if r2 < 1.0 { (-1.0 / (1.0 - r2)).exp() } else { 0.0 }
                    })?;
                    let wp = w.w.map(|v| v.powf(p));
                    let norm = core::weighted_lp_norm(&g, &wp, p, None)?;
                    Ok(g.map(|v| v / (norm * (1.0 + 1e-12))))
                })
                .collect();
            let cspec = core::CommutatorSpec::new(kern, symbol, m)?;
            let fk = core::fk_compactness_probe(&cspec, &w, p, q, &ball?, &ns, &rhos)?;
            let mut rep = base_report(seed, "compactness-probe", json!({
                "b": b, "kernel": kernel, "weight": weight, "p": p, "q": q,
                "m": m, "delta": delta, "n_range": n_range, "rho_range": rho_range,
                "domain": grid.domain, "res": grid.res,
            }));
            rep["bound"] = json!(fk.bound);
            rep["tail"] = json!(fk.tail);
            rep["modulus"] = json!(fk.modulus);
            println!("{rep}");
        }
        Command::WeightsCheck { grid, weight, p, q, levels, draws } => {
            let spec = grid.spec()?;
            let w = load_weight(&spec, &weight, p, q)?;
            let family = core::make_dyadic_family(&spec.domain, 0, levels)?;
            let ap = core::ap_constant(&w, &family)?;
            let apq = match q {
                Some(_) => Some(core::apq_constant(&w, &family)?),
                None => None,
            };
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let side_cap = spec.domain.side() / 4.0;
            let mut doubling_failures = 0usize;
            let mut rh_failures = 0usize;
            for _ in 0..draws {
                let s = rng.gen_range(side_cap / 32.0..side_cap);
                let center: Vec<f64> = spec
                    .domain
                    .center()
                    .iter()
                    .map(|c| {
                        let slack = spec.domain.side() / 2.0 - s;
                        c + rng.gen_range(-slack..slack)
                    })
                    .collect();
                let cube = Cube::new(center, s)?;
                if !core::doubling_check(&w, &cube, 2.0)?.ok {
                    doubling_failures += 1;
                }
                if !core::reverse_holder_check(&w, &cube, 0.5)?.ok {
                    rh_failures += 1;
                }
            }
            let mut rep = base_report(seed, "weights-check", json!({
                "weight": weight, "p": p, "q": q, "levels": levels,
                "draws": draws, "domain": grid.domain, "res": grid.res,
            }));
            rep["ap_constant"] = json!(ap);
            rep["apq_constant"] = json!(apq);
            rep["doubling_failures"] = json!(doubling_failures);
            rep["reverse_holder_failures"] = json!(rh_failures);
            println!("{rep}");
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(if e.is_usage() { 2 } else { 3 });
        }
    }
}
