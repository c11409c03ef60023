use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use quadspec::fock::{gram_matrix, FockTruncation};
use quadspec::report::NormalFormReport;
use quadspec::sweep::{
    evaluate_point, example_case, scaling_fit_rows, spectral_projection, sweep, GramContext, NormMode, PointSettings,
    Problem, ScalingModel, SweepConfig,
};
use quadspec::symplectic::QuadraticForm;
use quadspec::{reduce, Complex, Error, Result};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "quadspec", version, about = "Spectra and resolvent norms of quantized elliptic quadratic forms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Semiclassical parameter; defaults to the first entry of h_values.
    #[arg(long)]
    h: Option<f64>,
    /// Spectral parameter as "re,im".
    #[arg(long, value_parser = parse_z, allow_hyphen_values = true)]
    z: Option<[f64; 2]>,
    /// Number of polynomial degrees kept (overrides N_max).
    #[arg(long = "max-degree")]
    max_degree: Option<usize>,
    /// Relative stabilization tolerance for adaptive truncation.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_parser = ["flat", "gram"])]
    norm: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enumerate the exact spectrum inside a disc.
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Enumeration radius (defaults to spectrum_radius from the config).
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Reduce Q to the normal form and write the JSON report.
    NormalForm {
        #[command(flatten)]
        common: Common,
    },
    /// Truncated resolvent norm at a single (h, z).
    Resolvent {
        #[command(flatten)]
        common: Common,
    },
    /// Resolvent norms over the configured grid, as CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Fit log(resnorm) against 1/h and (1/h)log(1/h) at one z.
    Scaling {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = ["inv_h", "inv_h_log", "both"], default_value = "both")]
        model: String,
    },
    /// The two-dimensional Jordan-block example with h = 1/m and z = 1.
    Example {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Contour-integral spectral projection around z.
    Projection {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        radius: f64,
        #[arg(long = "quad-points", default_value_t = 64)]
        quad_points: usize,
    },
}

fn parse_z(s: &str) -> std::result::Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [re] => re.parse().map(|r| [r, 0.0]).map_err(|e| format!("bad z '{s}': {e}")),
        [re, im] => {
            let re: f64 = re.parse().map_err(|e| format!("bad real part in '{s}': {e}"))?;
            let im: f64 = im.parse().map_err(|e| format!("bad imaginary part in '{s}': {e}"))?;
            Ok([re, im])
        }
        _ => Err(format!("expected \"re,im\", got '{s}'")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 1 } else { 2 })
        }
    }
}

fn load_config(common: &Common) -> Result<SweepConfig> {
    let path = common.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg = SweepConfig::from_path(path)?;
    if let Some(n) = common.max_degree {
        cfg.n_max = n;
    }
    if let Some(t) = common.tol {
        cfg.stabilization_tol = t;
    }
    if let Some(t) = common.threads {
        cfg.threads = t;
    }
    if let Some(n) = &common.norm {
        cfg.norm_mode = n.parse()?;
    }
    if let Some(z) = common.z {
        if cfg.z_grid.is_none() && cfg.z_points.is_empty() {
            cfg.z_points = vec![z];
        }
    }
    if let Some(h) = common.h {
        cfg.h_values = vec![h];
    }
    Ok(cfg)
}

fn pick_h(common: &Common, cfg: &SweepConfig) -> Result<f64> {
    let h = common.h.or_else(|| cfg.h_values.first().copied()).ok_or_else(|| Error::Config("no h given".into()))?;
    cfg.check_h(h)?;
    Ok(h)
}

fn pick_z(common: &Common, cfg: &SweepConfig) -> Result<[f64; 2]> {
    common.z.or_else(|| cfg.z_values().first().copied()).ok_or_else(|| Error::Config("no z given".into()))
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit_json(value: &serde_json::Value, path: Option<&Path>) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "{}", serde_json::to_string_pretty(value)?)?;
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Spectrum { common, radius } => {
            let cfg = load_config(&common)?;
            let problem = Problem::from_config(&cfg)?;
            let h = pick_h(&common, &cfg)?;
            let r = radius.or(cfg.spectrum_radius).ok_or_else(|| Error::Config("no radius given".into()))?;
            let list = problem.spectrum(h, r)?;
            let mut w = writer(common.output.as_deref())?;
            list.write_csv(&mut w)?;
            w.flush()?;
        }
        Command::NormalForm { common } => {
            let cfg = load_config(&common)?;
            let q = cfg.q.as_ref().ok_or_else(|| Error::Config("normal-form needs Q".into()))?;
            let form = QuadraticForm::try_symmetric(quadspec::report::from_nested(q)?, cfg.tolerances.symmetry)?;
            let result = reduce(&form, &cfg.jordan.to_mode()?, &cfg.tolerances)?;
            let report = NormalFormReport::from_result(&result);
            let mut w = writer(common.output.as_deref())?;
            writeln!(w, "{}", report.to_json()?)?;
            w.flush()?;
        }
        Command::Resolvent { common } => {
            let cfg = load_config(&common)?;
            cfg.validate_problem()?;
            let problem = Problem::from_config(&cfg)?;
            let h = pick_h(&common, &cfg)?;
            let z = pick_z(&common, &cfg)?;
            let zc = Complex::new(z[0], z[1]);
            let gram = GramContext::build(&problem, cfg.norm_mode, cfg.n_max, &cfg.gram)?;
            let radius = cfg.spectrum_radius.unwrap_or_else(|| problem.auto_radius(h, &[zc]));
            let spec = problem.spectrum(h, radius)?;
            let row = evaluate_point(&problem, &gram, &spec, h, zc, &PointSettings::from(&cfg));
            if let Some(e) = &row.error {
                if !row.resnorm_flat.is_infinite() {
                    return Err(Error::Numerical(format!("evaluation failed: {e}")));
                }
            }
            emit_json(
                &json!({
                    "h": row.h, "z": row.z, "N_used": row.n_used, "nu_total": row.nu_total,
                    "resnorm_flat": finite_or_string(row.resnorm_flat),
                    "resnorm_gram": row.resnorm_gram.map(finite_or_string),
                    "dist_spec": finite_or_string(row.dist_spec),
                    "converged": row.converged, "out_of_regime": row.out_of_regime,
                    "C0": problem.c0, "C1": problem.c1, "error": row.error,
                }),
                common.output.as_deref(),
            )?;
        }
        Command::Sweep { common } => {
            let cfg = load_config(&common)?;
            let result = sweep::<f64>(&cfg)?;
            let csv_path = common.output.clone().or_else(|| cfg.output.csv.clone());
            let mut w = writer(csv_path.as_deref())?;
            result.write_csv(&mut w)?;
            w.flush()?;
            if let Some(p) = &cfg.output.report {
                std::fs::write(p, serde_json::to_string_pretty(&result.summary)? + "\n")?;
            }
        }
        Command::Scaling { common, model } => {
            let cfg = load_config(&common)?;
            let z = pick_z(&common, &cfg)?;
            let result = sweep::<f64>(&cfg)?;
            let gram = cfg.norm_mode == NormMode::Gram;
            let models: Vec<ScalingModel> = match model.as_str() {
                "both" => vec![ScalingModel::InvH, ScalingModel::InvHLog],
                m => vec![m.parse()?],
            };
            let mut fits = Vec::new();
            for m in models {
                fits.push(scaling_fit_rows(&result.rows, z, m, gram)?);
            }
            emit_json(&json!({ "z": z, "fits": fits }), common.output.as_deref())?;
        }
        Command::Example { m, output } => {
            let r = example_case::<f64>(m)?;
            let mut w = writer(output.as_deref())?;
            writeln!(w, "m = {}, h = {}", r.m, r.h)?;
            writeln!(w, "squared norm     {:.10e}", r.squared_norm)?;
            writeln!(w, "closed form      {:.10e}", r.closed_form)?;
            writeln!(w, "relative error   {:.3e}", r.relative_error)?;
            writeln!(w, "norm >= m!       {}", r.exceeds_factorial)?;
            writeln!(w, "{}", if r.pass { "PASS" } else { "FAIL" })?;
            w.flush()?;
            if !r.pass {
                return Err(Error::Numerical("example check failed".into()));
            }
        }
        Command::Projection { common, radius, quad_points } => {
            let cfg = load_config(&common)?;
            let problem = Problem::from_config(&cfg)?;
            let h = pick_h(&common, &cfg)?;
            let z = pick_z(&common, &cfg)?;
            let blocks = common.max_degree.unwrap_or(cfg.n_max);
            let tr = FockTruncation::new(&problem.m, h, blocks);
            let gram = match cfg.norm_mode {
                NormMode::Gram => Some(gram_matrix(&problem.phi1, 0..=blocks.saturating_sub(1), &cfg.gram)?),
                NormMode::Flat => None,
            };
            let p = spectral_projection(&tr, Complex::new(z[0], z[1]), radius, quad_points, gram.as_ref())?;
            emit_json(&serde_json::to_value(p)?, common.output.as_deref())?;
        }
    }
    Ok(())
}

fn finite_or_string(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}
