//! Named preset functions, kernels, and weights used by the command-line
//! tool and the test batteries. Preset descriptors are colon-separated,
//! e.g. `bump:0.35:1`, `sgnpow:0.5`, `riesz:0.25`, `pow:-0.3`.

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::operators::{KernelSpec, Omega};
use crate::weights::WeightSpec;
use std::path::Path;

fn parse_f64(part: &str, what: &str) -> Result<f64> {
    part.parse::<f64>()
        .map_err(|_| Error::Parse(format!("{what}: cannot parse `{part}` as a number")))
}

/// Builds a preset function on the given grid. Descriptors:
/// `const:C`, `linear`, `bump[:amp[:width]]`, `sgnpow:alpha`,
/// `lacunary[:alpha]`. Multi-dimensional grids use the first coordinate
/// for the one-dimensional profiles and |x| for the bump.
pub fn preset_function(spec: &GridSpec, desc: &str) -> Result<GridFunction> {
    let parts: Vec<&str> = desc.split(':').collect();
    match parts[0] {
        "const" => {
            let c = parse_f64(parts.get(1).copied().unwrap_or("1"), "const preset")?;
            GridFunction::from_spec(spec, |_| c)
        }
        "linear" => GridFunction::from_spec(spec, |x| x[0]),
        "bump" => {
            let amp = parse_f64(parts.get(1).copied().unwrap_or("1"), "bump amplitude")?;
            let width = parse_f64(parts.get(2).copied().unwrap_or("1"), "bump width")?;
            if !(width > 0.0) {
                return Err(Error::Argument(format!("bump width must be positive, got {width}")));
            }
            GridFunction::from_spec(spec, move |x| {
                let r2: f64 = x.iter().map(|c| (c / width) * (c / width)).sum();
                if r2 < 1.0 {
                    amp * std::f64::consts::E * (-1.0 / (1.0 - r2)).exp()
                } else {
                    0.0
                }
            })
        }
        "sgnpow" => {
            let alpha = parse_f64(
                parts
                    .get(1)
                    .copied()
                    .ok_or_else(|| Error::Argument("sgnpow preset needs an exponent".into()))?,
                "sgnpow exponent",
            )?;
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(Error::Argument(format!(
                    "sgnpow exponent must lie in (0, 1], got {alpha}"
                )));
            }
            GridFunction::from_spec(spec, move |x| x[0].signum() * x[0].abs().powf(alpha))
        }
        "lacunary" => {
            let alpha = parse_f64(parts.get(1).copied().unwrap_or("0.5"), "lacunary exponent")?;
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(Error::Argument(format!(
                    "lacunary exponent must lie in (0, 1], got {alpha}"
                )));
            }
            // stop the sum once the wavelength drops below two grid cells
            let k_max = (spec.domain.side() / (2.0 * spec.cell_size())).log2().floor() as i32;
            GridFunction::from_spec(spec, move |x| {
                (0..=k_max.max(0))
                    .map(|k| {
                        let freq = (k as f64).exp2();
                        freq.powf(-alpha) * (freq * std::f64::consts::PI * x[0]).cos()
                    })
                    .sum()
            })
        }
        other => Err(Error::Argument(format!("unknown function preset `{other}`"))),
    }
}

const TABLE_RESOLUTION: usize = 4096;

/// Builds a preset kernel for dimension `n`. Descriptors: `sgn` (the odd
/// unit kernel; in two dimensions sgn(cos θ)), `riesz:beta` (Ω ≡ 1 of order
/// beta), or `table:FILE` (angular table, two dimensions only).
pub fn preset_kernel(desc: &str, n: usize) -> Result<KernelSpec> {
    let parts: Vec<&str> = desc.split(':').collect();
    let omega = match parts[0] {
        "sgn" => match n {
            1 => Omega::Line { plus: 1.0, minus: -1.0 },
            2 => Omega::circle_from_fn(|t| t.cos().signum()),
            _ => return Err(Error::Argument(format!("sgn kernel supports n ≤ 2, got {n}"))),
        },
        "riesz" => match n {
            1 => Omega::Line { plus: 1.0, minus: 1.0 },
            2 => Omega::circle_from_fn(|_| 1.0),
            _ => return Err(Error::Argument(format!("riesz kernel supports n ≤ 2, got {n}"))),
        },
        "table" => {
            if n != 2 {
                return Err(Error::Argument("table kernels are two-dimensional".into()));
            }
            let path = parts
                .get(1)
                .ok_or_else(|| Error::Argument("table kernel needs a file path".into()))?;
            let table = load_angular_table(Path::new(path))?;
            Omega::Circle(table)
        }
        other => return Err(Error::Argument(format!("unknown kernel preset `{other}`"))),
    };
    let beta = if parts[0] == "riesz" {
        parse_f64(
            parts
                .get(1)
                .copied()
                .ok_or_else(|| Error::Argument("riesz kernel needs an order".into()))?,
            "riesz order",
        )?
    } else {
        0.0
    };
    KernelSpec::new(omega, beta)
}

/// Reads an angular table: one value per line (optionally `angle,value`
/// rows), resampled onto the uniform circle grid if row counts differ.
fn load_angular_table(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut vals = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let last = line.split(',').next_back().unwrap().trim();
        vals.push(parse_f64(last, "angular table entry")?);
    }
    if vals.len() < 8 {
        return Err(Error::Validation(format!(
            "angular table needs at least 8 entries, found {}",
            vals.len()
        )));
    }
    if vals.len() == TABLE_RESOLUTION {
        return Ok(vals);
    }
    let m = vals.len();
    Ok((0..TABLE_RESOLUTION)
        .map(|k| {
            // linear interpolation on the circle
            let t = k as f64 * m as f64 / TABLE_RESOLUTION as f64;
            let i = t.floor() as usize % m;
            let frac = t - t.floor();
            vals[i] * (1.0 - frac) + vals[(i + 1) % m] * frac
        })
        .collect())
}

/// Builds a preset weight on the given grid. Descriptors: `one`,
/// `pow:gamma` (ω(x) = |x|^γ, clamped at one cell near the origin), or
/// `csv:FILE` (a saved grid function).
pub fn preset_weight(spec: &GridSpec, desc: &str, p: f64, q: Option<f64>) -> Result<WeightSpec> {
    let parts: Vec<&str> = desc.split(':').collect();
    let w = match parts[0] {
        "one" => GridFunction::from_spec(spec, |_| 1.0)?,
        "pow" => {
            let gamma = parse_f64(
                parts
                    .get(1)
                    .copied()
                    .ok_or_else(|| Error::Argument("pow weight needs an exponent".into()))?,
                "pow weight exponent",
            )?;
            let floor = spec.cell_size() / 2.0;
            GridFunction::from_spec(spec, move |x| {
                let r = x.iter().map(|c| c * c).sum::<f64>().sqrt().max(floor);
                r.powf(gamma)
            })?
        }
        "csv" => {
            let path = parts
                .get(1)
                .ok_or_else(|| Error::Argument("csv weight needs a file path".into()))?;
            let g = GridFunction::load(Path::new(path))?;
            if g.resolution() != spec.resolution || g.domain() != &spec.domain {
                return Err(Error::Validation(
                    "csv weight grid does not match the requested grid".into(),
                ));
            }
            g
        }
        other => return Err(Error::Argument(format!("unknown weight preset `{other}`"))),
    };
    WeightSpec::new(w, p, q)
}
