//! Experiment orchestration: resolvent-norm grids over `(h, z)`, growth-law
//! fits, the triangular worked example and contour spectral projections.
//!
//! Reported norms are those of the operator truncated to polynomial degrees
//! below `N_used`. The tail beyond the truncation contributes factors of size
//! `e^{O(1/h)}` as long as `|z| ≤ K²/(8·C0)`; rows outside that disc are
//! flagged `out_of_regime`.

use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::{Complex, ComplexField};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    gram_matrix, min_vanishing_order, resolvent_block, resolvent_matrix, weighted_norm, weyl_block, FockTruncation,
    GramMatrix, GramOptions,
};
use crate::linalg::{spectral_norm, CMatrix};
use crate::normal_form::{ellipticity_constants, reduce, JordanMode, WeightForm};
use crate::report::{from_nested, NestedComplex, NormalFormReport};
use crate::scalar::{c_re, from_usize, lit, to_f64, Real, Tolerances};
use crate::spectral::{spectrum, ClusterMode, SpectralData, SpectrumList};
use crate::symplectic::QuadraticForm;

/// Smallest `h` accepted unless `allow_small_h` is set.
pub const MIN_H: f64 = 0.02;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormMode {
    #[default]
    Flat,
    Gram,
}

impl std::str::FromStr for NormMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(NormMode::Flat),
            "gram" => Ok(NormMode::Gram),
            other => Err(Error::Config(format!("unknown norm mode '{other}' (expected flat or gram)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZGrid {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl ZGrid {
    /// Points in row-major order: imaginary part outer, real part inner.
    pub fn points(&self) -> Vec<[f64; 2]> {
        let lin = |lo: f64, hi: f64, k: usize, count: usize| {
            if count == 1 {
                lo
            } else {
                lo + (hi - lo) * k as f64 / (count - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                out.push([lin(self.re_min, self.re_max, ix, self.nx), lin(self.im_min, self.im_max, iy, self.ny)]);
            }
        }
        out
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputPaths {
    pub csv: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

/// Change of basis applied to the reduced matrix.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JordanConfig {
    #[default]
    Raw,
    Diagonalized,
    Exact(NestedComplex),
}

impl JordanConfig {
    pub fn to_mode<T: Real>(&self) -> Result<JordanMode<T>> {
        Ok(match self {
            JordanConfig::Raw => JordanMode::Raw,
            JordanConfig::Diagonalized => JordanMode::Diagonalized,
            JordanConfig::Exact(c) => JordanMode::Exact(from_nested(c)?),
        })
    }
}

fn default_k() -> f64 {
    1.0
}
fn default_n_max() -> usize {
    64
}
fn default_stab() -> f64 {
    1e-6
}
fn default_threads() -> usize {
    1
}

/// The JSON run description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub n: Option<usize>,
    /// Symmetric `2n × 2n` matrix of the form, as `[re, im]` pairs.
    #[serde(rename = "Q", default)]
    pub q: Option<NestedComplex>,
    /// Reduced matrix of `q̃ = Mx·ξ`, used with the weight `|x|²/2`.
    #[serde(rename = "M", default)]
    pub m: Option<NestedComplex>,
    #[serde(default)]
    pub jordan: JordanConfig,
    #[serde(default)]
    pub h_values: Vec<f64>,
    #[serde(default)]
    pub z_grid: Option<ZGrid>,
    /// Extra points appended after the grid.
    #[serde(default)]
    pub z_points: Vec<[f64; 2]>,
    #[serde(rename = "K", default = "default_k")]
    pub k: f64,
    #[serde(rename = "N_max", default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_stab")]
    pub stabilization_tol: f64,
    #[serde(default)]
    pub norm_mode: NormMode,
    #[serde(default = "default_threads")]
    pub threads: usize,
    /// Enumeration radius for the exact spectrum; chosen per `h` when absent.
    #[serde(default)]
    pub spectrum_radius: Option<f64>,
    /// Rows with `dist_spec ≥ h^L / dist_constant` are counted in the report.
    #[serde(rename = "L", default)]
    pub l: Option<f64>,
    #[serde(default)]
    pub dist_constant: Option<f64>,
    #[serde(default)]
    pub allow_small_h: bool,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub gram: GramOptions,
    #[serde(default)]
    pub output: OutputPaths,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks the input-mode and parameter constraints (not the grid, which
    /// only the sweep needs).
    pub fn validate_problem(&self) -> Result<()> {
        match (&self.q, &self.m) {
            (Some(_), Some(_)) => return Err(Error::Config("give exactly one of Q and M".into())),
            (None, None) => return Err(Error::Config("missing Q or M".into())),
            _ => {}
        }
        if self.k <= 0.0 || !self.k.is_finite() {
            return Err(Error::Config(format!("K must be positive, got {}", self.k)));
        }
        if self.n_max == 0 {
            return Err(Error::Config("N_max must be at least 1".into()));
        }
        if !(self.stabilization_tol > 0.0 && self.stabilization_tol < 1.0) {
            return Err(Error::Config(format!("stabilization_tol must lie in (0, 1), got {}", self.stabilization_tol)));
        }
        if self.threads == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        for &h in &self.h_values {
            self.check_h(h)?;
        }
        Ok(())
    }

    pub fn check_h(&self, h: f64) -> Result<()> {
        if h <= 0.0 || !h.is_finite() {
            return Err(Error::Config(format!("h must be positive, got {h}")));
        }
        if h < MIN_H && !self.allow_small_h {
            return Err(Error::Config(format!("h = {h} is below {MIN_H}; set allow_small_h to override")));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_problem()?;
        if self.h_values.is_empty() {
            return Err(Error::Config("h_values is empty".into()));
        }
        if let Some(g) = &self.z_grid {
            if g.nx == 0 || g.ny == 0 {
                return Err(Error::Config("grid counts must be at least 1".into()));
            }
        }
        if self.z_grid.is_none() && self.z_points.is_empty() {
            return Err(Error::Config("no z values: give z_grid or z_points".into()));
        }
        Ok(())
    }

    pub fn z_values(&self) -> Vec<[f64; 2]> {
        let mut out = self.z_grid.as_ref().map(ZGrid::points).unwrap_or_default();
        out.extend(self.z_points.iter().copied());
        out
    }
}

/// Everything the grid evaluation shares across cells.
#[derive(Clone, Debug)]
pub struct Problem<T: Real> {
    pub m: CMatrix<T>,
    pub phi1: WeightForm<T>,
    pub c0: T,
    pub c1: T,
    pub spectral: SpectralData<T>,
    pub report: Option<NormalFormReport>,
    pub tolerances: Tolerances,
}

impl<T: Real> Problem<T> {
    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    /// Runs the reduction for `Q` input, or wraps a directly given `M`.
    pub fn from_config(cfg: &SweepConfig) -> Result<Self> {
        cfg.validate_problem()?;
        let tol = cfg.tolerances;
        if let Some(q) = &cfg.q {
            let q = from_nested::<T>(q)?;
            if let Some(n) = cfg.n {
                if q.nrows() != 2 * n {
                    return Err(Error::DimensionMismatch { expected: 2 * n, got: q.nrows() });
                }
            }
            let form = QuadraticForm::try_symmetric(q, lit(tol.symmetry))?;
            let r = reduce(&form, &cfg.jordan.to_mode()?, &tol)?;
            Ok(Self {
                report: Some(NormalFormReport::from_result(&r)),
                m: r.m,
                phi1: r.phi1,
                c0: r.constants.c0,
                c1: r.constants.c1,
                spectral: r.spectral,
                tolerances: tol,
            })
        } else {
            let m = from_nested::<T>(cfg.m.as_ref().expect("validated"))?;
            if m.nrows() != m.ncols() {
                return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
            }
            if let Some(n) = cfg.n {
                if m.nrows() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: m.nrows() });
                }
            }
            Self::from_reduced(m, &tol)
        }
    }

    pub fn from_reduced(m: CMatrix<T>, tol: &Tolerances) -> Result<Self> {
        let phi1 = WeightForm::flat(m.nrows());
        let constants = ellipticity_constants(&m, &phi1)?;
        let cluster_tol = lit::<T>(tol.cluster) * m.norm().max(T::one());
        let spectral = SpectralData::from_reduced_matrix(&m, &ClusterMode::Tolerance(cluster_tol), tol)?;
        Ok(Self { m, phi1, c0: constants.c0, c1: constants.c1, spectral, report: None, tolerances: *tol })
    }

    pub fn n0(&self, k: T, h: T) -> usize {
        min_vanishing_order(k, self.c1, h)
    }

    /// Radius large enough that the distance from any of `zs` is certified.
    pub fn auto_radius(&self, h: T, zs: &[Complex<T>]) -> T {
        let ground: T = self.spectral.lambdas.iter().fold(T::zero(), |a, l| a + l.modulus()) * h;
        let zmax = zs.iter().fold(T::zero(), |a, z| a.max(z.modulus()));
        (zmax + zmax) + ground + h
    }

    pub fn spectrum(&self, h: T, radius: T) -> Result<SpectrumList<T>> {
        spectrum(&self.spectral, h, radius, lit(self.tolerances.spectrum_merge))
    }
}

/// Norm geometry for the sweep.
#[derive(Clone, Debug)]
pub enum GramContext<T: Real> {
    /// Flat norm only.
    None,
    /// Radial weight: degrees are orthogonal and each Gram block is a multiple
    /// of the identity, so the weighted norm coincides with the flat one.
    Radial,
    Full(GramMatrix<T>),
}

impl<T: Real> GramContext<T> {
    pub fn build(problem: &Problem<T>, mode: NormMode, max_blocks: usize, opts: &GramOptions) -> Result<Self> {
        match mode {
            NormMode::Flat => Ok(GramContext::None),
            NormMode::Gram if problem.phi1.is_radial(lit(1e-12)) => Ok(GramContext::Radial),
            NormMode::Gram => Ok(GramContext::Full(gram_matrix(&problem.phi1, 0..=max_blocks.saturating_sub(1), opts)?)),
        }
    }
}

/// One `(h, z)` cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub h: f64,
    pub z: [f64; 2],
    pub n_used: usize,
    pub nu_total: usize,
    pub resnorm_flat: f64,
    pub resnorm_gram: Option<f64>,
    pub dist_spec: f64,
    pub converged: bool,
    pub out_of_regime: bool,
    pub error: Option<String>,
}

impl SweepRow {
    fn csv_line(&self) -> String {
        let f = |x: f64| format!("{x:.12e}");
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            f(self.h),
            f(self.z[0]),
            f(self.z[1]),
            self.n_used,
            self.nu_total,
            f(self.resnorm_flat),
            f(self.resnorm_flat.ln()),
            self.resnorm_gram.map_or_else(|| "nan".to_string(), f),
            f(self.dist_spec),
            self.converged,
            self.out_of_regime
        )
    }
}

pub const CSV_HEADER: &str =
    "h,z_re,z_im,N_used,nu_total,resnorm_flat,log_resnorm_flat,resnorm_gram,dist_spec,converged,out_of_regime";

/// Grid evaluation settings shared by all cells.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointSettings {
    pub k: f64,
    pub n_max: usize,
    pub stabilization_tol: f64,
}

impl From<&SweepConfig> for PointSettings {
    fn from(c: &SweepConfig) -> Self {
        Self { k: c.k, n_max: c.n_max, stabilization_tol: c.stabilization_tol }
    }
}

fn rel_change<T: Real>(a: T, b: T) -> T {
    let scale = a.abs().max(b.abs());
    if scale == T::zero() {
        T::zero()
    } else {
        (a - b).abs() / scale
    }
}

/// Truncated resolvent norm at one `(h, z)` with adaptive truncation.
pub fn evaluate_point<T: Real>(
    problem: &Problem<T>,
    gram: &GramContext<T>,
    spec: &SpectrumList<T>,
    h: T,
    z: Complex<T>,
    s: &PointSettings,
) -> SweepRow {
    let n_init = problem.n0(lit(s.k), h).min(s.n_max).max(1);
    let out_of_regime = to_f64(z.modulus()) > s.k * s.k / (8.0 * to_f64(problem.c0));
    let dist = spec.dist(z).map(to_f64).unwrap_or(f64::NAN);
    let mut row = SweepRow {
        h: to_f64(h),
        z: [to_f64(z.re), to_f64(z.im)],
        n_used: n_init,
        nu_total: 0,
        resnorm_flat: f64::NAN,
        resnorm_gram: None,
        dist_spec: dist,
        converged: false,
        out_of_regime,
        error: None,
    };
    let mut tr = FockTruncation::new(&problem.m, h, n_init);
    let mut block_norms: Vec<T> = Vec::new();
    let mut flat_at = |tr: &mut FockTruncation<T>, blocks: usize| -> Result<T> {
        tr.extend_to(blocks);
        while block_norms.len() < blocks {
            block_norms.push(resolvent_block(&tr.blocks[block_norms.len()], z, None)?);
        }
        Ok(block_norms[..blocks].iter().fold(T::zero(), |a, &b| a.max(b)))
    };
    let gram_at = |tr: &mut FockTruncation<T>, blocks: usize, flat: T| -> Result<Option<T>> {
        match gram {
            GramContext::None => Ok(None),
            GramContext::Radial => Ok(Some(flat)),
            GramContext::Full(g) => {
                tr.extend_to(blocks);
                let sub = FockTruncation { m_mat: tr.m_mat.clone(), h, blocks: tr.blocks[..blocks].to_vec() };
                sub.resolvent_norm_gram(z, g).map(Some)
            }
        }
    };
    let observed = |flat: T, g: Option<T>| g.unwrap_or(flat);
    let outcome: Result<(usize, T, Option<T>, bool)> = (|| {
        let mut n = n_init;
        let mut flat = flat_at(&mut tr, n)?;
        let mut gn = gram_at(&mut tr, n, flat)?;
        let tol: T = lit(s.stabilization_tol);
        loop {
            if n >= s.n_max {
                let prev = n.saturating_sub(4).max(1);
                let pf = flat_at(&mut tr, prev)?;
                let pg = gram_at(&mut tr, prev, pf)?;
                let converged = prev < n && rel_change(observed(flat, gn), observed(pf, pg)) <= tol;
                return Ok((n, flat, gn, converged));
            }
            let next = (n + 4).min(s.n_max);
            let nf = flat_at(&mut tr, next)?;
            let ng = gram_at(&mut tr, next, nf)?;
            let change = rel_change(observed(nf, ng), observed(flat, gn));
            n = next;
            flat = nf;
            gn = ng;
            if change <= tol {
                return Ok((n, flat, gn, true));
            }
        }
    })();
    match outcome {
        Ok((n, flat, g, converged)) => {
            row.n_used = n;
            row.nu_total = tr.blocks[..n].iter().map(|b| b.dim()).sum();
            row.resnorm_flat = to_f64(flat);
            row.resnorm_gram = g.map(to_f64);
            row.converged = converged;
        }
        Err(Error::SpectralPointHit { .. }) => {
            row.nu_total = tr.nu_total();
            row.resnorm_flat = f64::INFINITY;
            row.resnorm_gram = (!matches!(gram, GramContext::None)).then_some(f64::INFINITY);
            row.dist_spec = 0.0;
            row.error = Some("spectral point hit".into());
        }
        Err(e) => {
            row.nu_total = tr.nu_total();
            row.error = Some(e.to_string());
        }
    }
    row
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    /// `(h, N₀)` pairs.
    #[serde(rename = "N0")]
    pub n0: Vec<(f64, usize)>,
    #[serde(rename = "N_max")]
    pub n_max: usize,
    pub norm_mode: NormMode,
    pub rows: usize,
    pub converged_rows: usize,
    pub out_of_regime_rows: usize,
    pub spectral_hits: usize,
    /// Rows meeting `dist_spec ≥ h^L / dist_constant`, when both are configured.
    pub rows_above_dist_threshold: Option<usize>,
    pub truncation_note: String,
    pub normal_form: Option<NormalFormReport>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
}

impl SweepResult {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(w, "{}", r.csv_line())?;
        }
        Ok(())
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }
}

/// Evaluates every `(h, z)` cell on a pool of `config.threads` workers. Rows
/// come out in `(h, grid)` order whatever the thread count.
pub fn sweep<T: Real>(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let problem = Problem::<T>::from_config(config)?;
    let gram = GramContext::build(&problem, config.norm_mode, config.n_max, &config.gram)?;
    let zs: Vec<Complex<T>> = config.z_values().iter().map(|z| Complex::new(lit(z[0]), lit(z[1]))).collect();
    let settings = PointSettings::from(config);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let mut rows = Vec::with_capacity(zs.len() * config.h_values.len());
    let mut n0 = Vec::with_capacity(config.h_values.len());
    for &hf in &config.h_values {
        let h: T = lit(hf);
        let radius = config.spectrum_radius.map_or_else(|| problem.auto_radius(h, &zs), lit);
        let spec = problem.spectrum(h, radius)?;
        n0.push((hf, problem.n0(lit(config.k), h)));
        let chunk: Vec<SweepRow> =
            pool.install(|| zs.par_iter().map(|&z| evaluate_point(&problem, &gram, &spec, h, z, &settings)).collect());
        rows.extend(chunk);
    }
    let threshold = match (config.l, config.dist_constant) {
        (Some(l), Some(c)) => Some(rows.iter().filter(|r| r.dist_spec >= r.h.powf(l) / c).count()),
        _ => None,
    };
    let summary = SweepSummary {
        k: config.k,
        c0: to_f64(problem.c0),
        c1: to_f64(problem.c1),
        n0,
        n_max: config.n_max,
        norm_mode: config.norm_mode,
        rows: rows.len(),
        converged_rows: rows.iter().filter(|r| r.converged).count(),
        out_of_regime_rows: rows.iter().filter(|r| r.out_of_regime).count(),
        spectral_hits: rows.iter().filter(|r| r.resnorm_flat.is_infinite()).count(),
        rows_above_dist_threshold: threshold,
        truncation_note: "norms are computed on polynomial degrees below N_used, starting from min(N0, N_max) \
                          and extended by 4 degrees until the relative change is below stabilization_tol; \
                          the neglected tail only adds exp(O(1/h)) factors for |z| <= K^2/(8 C0)"
            .into(),
        normal_form: problem.report.clone(),
    };
    Ok(SweepResult { rows, summary })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingModel {
    /// `log r = c + A/h`.
    InvH,
    /// `log r = c + (A/h) log(1/h)`.
    InvHLog,
}

impl std::str::FromStr for ScalingModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inv_h" => Ok(ScalingModel::InvH),
            "inv_h_log" => Ok(ScalingModel::InvHLog),
            other => Err(Error::Config(format!("unknown scaling model '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub model: ScalingModel,
    /// Slope `A`.
    pub a: f64,
    pub intercept: f64,
    /// Root-mean-square residual of `log r`.
    pub residual: f64,
    pub points: usize,
}

/// Least-squares fit of `log(resnorm)` against `1/h` or `(1/h) log(1/h)`.
/// Non-finite or non-positive norms are dropped.
pub fn scaling_fit(points: &[(f64, f64)], model: ScalingModel) -> Result<ScalingFit> {
    let data: Vec<(f64, f64)> = points
        .iter()
        .filter(|(h, r)| *h > 0.0 && r.is_finite() && *r > 0.0)
        .map(|&(h, r)| {
            let x = match model {
                ScalingModel::InvH => 1.0 / h,
                ScalingModel::InvHLog => (1.0 / h) * (1.0 / h).ln(),
            };
            (x, r.ln())
        })
        .collect();
    if data.len() < 3 {
        return Err(Error::InsufficientData { points: data.len() });
    }
    let k = data.len() as f64;
    let mx = data.iter().map(|p| p.0).sum::<f64>() / k;
    let my = data.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = data.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData { points: 1 });
    }
    let sxy: f64 = data.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let a = sxy / sxx;
    let intercept = my - a * mx;
    let residual = (data.iter().map(|p| (p.1 - intercept - a * p.0).powi(2)).sum::<f64>() / k).sqrt();
    Ok(ScalingFit { model, a, intercept, residual, points: data.len() })
}

/// Fit over the converged rows of a sweep at one `z`.
pub fn scaling_fit_rows(rows: &[SweepRow], z: [f64; 2], model: ScalingModel, gram: bool) -> Result<ScalingFit> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.converged && r.z == z)
        .map(|r| (r.h, if gram { r.resnorm_gram.unwrap_or(f64::NAN) } else { r.resnorm_flat }))
        .collect();
    scaling_fit(&pts, model)
}

/// Reduced matrix `[[i, 1], [0, i]]` of `q̃ = i(x₁ξ₁ + x₂ξ₂) + x₂ξ₁`.
pub fn example_matrix<T: Real>() -> CMatrix<T> {
    let i = Complex::new(T::zero(), T::one());
    CMatrix::from_row_slice(2, 2, &[i, c_re(T::one()), c_re(T::zero()), i])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExampleReport {
    pub m: usize,
    pub h: f64,
    /// `‖(q̃^w − 1)⁻¹ φ_(m,0)‖²`.
    pub squared_norm: f64,
    /// `h⁻² Σ_j j!·m!/(m−j)!`.
    pub closed_form: f64,
    pub relative_error: f64,
    /// Operator norm of the resolvent on `E_m`.
    pub block_norm: f64,
    pub factorial: f64,
    pub exceeds_factorial: bool,
    pub pass: bool,
}

/// `h⁻² Σ_{j=0}^m j!·m!/(m−j)!`.
pub fn example_closed_form(m: usize, h: f64) -> f64 {
    let mut sum = 0.0;
    let mut jfact = 1.0;
    let mut falling = 1.0;
    for j in 0..=m {
        if j > 0 {
            jfact *= j as f64;
            falling *= (m - j + 1) as f64;
        }
        sum += jfact * falling;
    }
    sum / (h * h)
}

/// The triangular example with `h = 1/m`, `z = 1`, evaluated on `φ_(m,0)`.
pub fn example_case<T: Real>(m: usize) -> Result<ExampleReport> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    let h: T = T::one() / from_usize::<T>(m);
    let block = weyl_block(&example_matrix::<T>(), h, m);
    let r = resolvent_matrix(&block.a, c_re(T::one()))?;
    let squared = to_f64(r.column(0).norm_squared());
    let closed = example_closed_form(m, to_f64(h));
    let relative_error = (squared - closed).abs() / closed;
    let factorial: f64 = (1..=m).map(|k| k as f64).product();
    let exceeds = squared.sqrt() >= factorial;
    Ok(ExampleReport {
        m,
        h: to_f64(h),
        squared_norm: squared,
        closed_form: closed,
        relative_error,
        block_norm: to_f64(spectral_norm(&r)),
        factorial,
        exceeds_factorial: exceeds,
        pass: relative_error < 1e-8 && exceeds,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    pub norm_flat: f64,
    pub norm_gram: Option<f64>,
    /// `‖Π² − Π‖`.
    pub idempotency: f64,
    /// `‖Π_{2K} − Π_K‖` for doubled quadrature.
    pub doubling_change: f64,
    /// Number of truncated eigenvalues inside the contour (with multiplicity).
    pub enclosed: usize,
    pub trace: [f64; 2],
}

/// Riesz projection `(1/2πi)∮(z − A)⁻¹dz` over the circle `|z − z0| = radius`
/// on the truncated operator, by the trapezoidal rule with `quad_points` nodes.
pub fn spectral_projection<T: Real>(
    tr: &FockTruncation<T>,
    z0: Complex<T>,
    radius: T,
    quad_points: usize,
    gram: Option<&GramMatrix<T>>,
) -> Result<ProjectionReport> {
    if radius.partial_cmp(&T::zero()) != Some(std::cmp::Ordering::Greater) || quad_points < 3 {
        return Err(Error::InvalidArgument("need radius > 0 and at least 3 quadrature points".into()));
    }
    let ev = tr.eigenvalues()?;
    let gap = ev.iter().map(|v| ((*v - z0).modulus() - radius).abs()).fold(T::max_value().unwrap_or_else(T::one), |a, b| a.min(b));
    if gap < lit::<T>(1e-3) * radius {
        return Err(Error::ContourHitsSpectrum { distance: to_f64(gap) });
    }
    let enclosed = ev.iter().filter(|v| (**v - z0).modulus() < radius).count();
    if enclosed == 0 {
        return Err(Error::NotSeparated("no eigenvalue inside the contour".into()));
    }
    let p1 = projection_matrix(tr, z0, radius, quad_points)?;
    let p2 = projection_matrix(tr, z0, radius, 2 * quad_points)?;
    let trace = p1.trace();
    let norm_gram = match gram {
        Some(g) => {
            if g.lo != 0 || g.dim() < p1.nrows() {
                return Err(Error::DimensionMismatch { expected: p1.nrows(), got: g.dim() });
            }
            Some(to_f64(weighted_norm(&p1, &g.leading_chol(p1.nrows()))?))
        }
        None => None,
    };
    Ok(ProjectionReport {
        norm_flat: to_f64(spectral_norm(&p1)),
        norm_gram,
        idempotency: to_f64(spectral_norm(&(&p1 * &p1 - &p1))),
        doubling_change: to_f64(spectral_norm(&(&p2 - &p1))),
        enclosed,
        trace: [to_f64(trace.re), to_f64(trace.im)],
    })
}

fn projection_matrix<T: Real>(tr: &FockTruncation<T>, z0: Complex<T>, radius: T, k: usize) -> Result<CMatrix<T>> {
    let dim = tr.nu_total();
    let mut p = CMatrix::zeros(dim, dim);
    let mut off = 0;
    let weight = T::one() / from_usize::<T>(k);
    for b in &tr.blocks {
        let mut acc = CMatrix::zeros(b.dim(), b.dim());
        for j in 0..k {
            let th = T::two_pi() * from_usize::<T>(j) / from_usize::<T>(k);
            let e = Complex::new(th.cos(), th.sin()) * radius;
            acc += resolvent_matrix(&b.a, z0 + e)? * (e * weight);
        }
        p.view_mut((off, off), (b.dim(), b.dim())).copy_from(&acc);
        off += b.dim();
    }
    Ok(p)
}
