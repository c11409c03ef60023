//! JSON exchange formats: complex matrices as nested `[re, im]` arrays and the
//! normal-form report.

use std::path::Path;

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::normal_form::{JordanKind, NormalFormResiduals, NormalFormResult};
use crate::scalar::{lit, to_f64, Real};

pub type NestedComplex = Vec<Vec<[f64; 2]>>;

pub fn to_nested<T: Real>(m: &CMatrix<T>) -> NestedComplex {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [to_f64(m[(i, j)].re), to_f64(m[(i, j)].im)]).collect()).collect()
}

pub fn from_nested<T: Real>(rows: &NestedComplex) -> Result<CMatrix<T>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Err(Error::Config("empty matrix".into()));
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch { expected: ncols, got: bad.len() });
    }
    if rows.iter().flatten().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Config("matrix has non-finite entries".into()));
    }
    Ok(CMatrix::from_fn(nrows, ncols, |i, j| Complex::new(lit(rows[i][j][0]), lit(rows[i][j][1]))))
}

fn real_nested<T: Real>(m: &DMatrix<T>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| to_f64(m[(i, j)])).collect()).collect()
}

/// Everything needed to reproduce a reduction, in `f64`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalFormReport {
    pub n: usize,
    #[serde(rename = "M")]
    pub m: NestedComplex,
    #[serde(rename = "M_raw")]
    pub m_raw: NestedComplex,
    #[serde(rename = "K_total")]
    pub k_total: NestedComplex,
    #[serde(rename = "C")]
    pub c: NestedComplex,
    #[serde(rename = "B")]
    pub b: NestedComplex,
    pub phi0: Vec<Vec<f64>>,
    pub phi1: Vec<Vec<f64>>,
    #[serde(rename = "C0")]
    pub c0: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    pub jordan_mode: JordanKind,
    /// Eigenvalues of `F` with `Im > 0`.
    pub lambdas: Vec<[f64; 2]>,
    pub residuals: NormalFormResiduals,
}

impl NormalFormReport {
    pub fn from_result<T: Real>(r: &NormalFormResult<T>) -> Self {
        Self {
            n: r.m.nrows(),
            m: to_nested(&r.m),
            m_raw: to_nested(&r.m_raw),
            k_total: to_nested(&r.k_total),
            c: to_nested(&r.c),
            b: to_nested(&r.b),
            phi0: real_nested(&r.phi0.g),
            phi1: real_nested(&r.phi1.g),
            c0: to_f64(r.constants.c0),
            c1: to_f64(r.constants.c1),
            jordan_mode: r.jordan_mode,
            lambdas: r.spectral.raw_upper.iter().map(|z| [to_f64(z.re), to_f64(z.im)]).collect(),
            residuals: r.residuals,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn matrix_m<T: Real>(&self) -> Result<CMatrix<T>> {
        from_nested(&self.m)
    }
}
