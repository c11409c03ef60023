//! Scalar abstraction shared by every numerical module.
//!
//! All algorithms are written against [`Real`], a thin bundle over
//! `nalgebra::RealField` plus the `num-traits` conversion traits. Complex
//! entries are `nalgebra::Complex<T>` (the `num-complex` type).

use std::fmt::{Debug, Display};

use nalgebra::{Complex, RealField};
use num_traits::{FromPrimitive, ToPrimitive};
use serde::{Deserialize, Serialize};

pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug + Send + Sync + 'static
{
    /// Machine epsilon of the type.
    fn epsilon() -> Self {
        Self::default_epsilon()
    }
}

impl Real for f64 {}
impl Real for f32 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in the scalar type")
}

/// Converts a count into `T`.
#[inline]
pub fn from_usize<T: Real>(k: usize) -> T {
    T::from_usize(k).expect("count representable in the scalar type")
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[inline]
pub fn cplx<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(lit(re), lit(im))
}

#[inline]
pub fn c_re<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// Numerical thresholds used across the toolkit.
///
/// Values are stated for `f64`; [`Tolerances::for_scalar`] maps them onto a
/// type with a different machine epsilon by matching the number of lost
/// digits proportionally.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Symmetry of input matrices and algebraic identity checks.
    pub symmetry: f64,
    /// Smallest admissible eigenvalue of a positive definite matrix.
    pub definiteness: f64,
    /// Structural checks of the normal form (symplecticity, vanishing blocks).
    pub structure: f64,
    /// Relative tolerance for matching eigenvalues into `±` pairs.
    pub pairing: f64,
    /// Relative tolerance for grouping eigenvalues into clusters.
    pub cluster: f64,
    /// Minimum |Im λ| (relative to |F|) before an eigenvalue counts as real.
    pub real_axis: f64,
    /// Relative merge radius for coincident spectrum points, in units of h.
    pub spectrum_merge: f64,
    /// Normalized-power threshold for nilpotency detection.
    pub nilpotency: f64,
    /// Largest admissible eigenvector condition number in diagonalized mode.
    pub eigvec_condition_cap: f64,
    /// Largest admissible Gram condition number.
    pub gram_condition_cap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            symmetry: 1e-12,
            definiteness: 1e-10,
            structure: 1e-9,
            pairing: 1e-6,
            cluster: 1e-6,
            real_axis: 1e-10,
            spectrum_merge: 1e-10,
            nilpotency: 1e-12,
            eigvec_condition_cap: 1e8,
            gram_condition_cap: 1e12,
        }
    }
}

impl Tolerances {
    /// Defaults rescaled to the precision of `T`.
    pub fn for_scalar<T: Real>() -> Self {
        let eps = to_f64(T::epsilon());
        let ratio = eps.ln() / f64::EPSILON.ln();
        if (ratio - 1.0).abs() < 1e-12 {
            return Self::default();
        }
        let scale = |v: f64| v.powf(ratio);
        let d = Self::default();
        Self {
            symmetry: scale(d.symmetry),
            definiteness: scale(d.definiteness),
            structure: scale(d.structure),
            pairing: scale(d.pairing),
            cluster: scale(d.cluster),
            real_axis: scale(d.real_axis),
            spectrum_merge: scale(d.spectrum_merge),
            nilpotency: scale(d.nilpotency),
            eigvec_condition_cap: d.eigvec_condition_cap.powf(ratio),
            gram_condition_cap: d.gram_condition_cap.powf(ratio),
        }
    }
}
