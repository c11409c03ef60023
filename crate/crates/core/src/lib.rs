//! Spectra and resolvent growth of semiclassical Weyl quantizations of
//! elliptic complex quadratic forms.
//!
//! The numerical core is generic over the real scalar type (`f64` or `f32`);
//! the aliases below fix it to `f64`.

pub mod error;
pub mod fock;
pub mod linalg;
pub mod normal_form;
pub mod report;
pub mod scalar;
pub mod spectral;
pub mod sweep;
pub mod symplectic;

pub use error::{Error, Result};
pub use fock::{
    enumerate_basis, gram_matrix, min_vanishing_order, neumann_resolvent_block, nilpotent_order, nu,
    projection_norm_tau, resolvent_block, sup_norm_ball, weyl_block, GramOptions, MultiIndexBasis,
};
pub use linalg::{CMatrix, CVector};
pub use nalgebra::Complex;
pub use normal_form::{reduce, JordanKind, JordanMode};
pub use report::NormalFormReport;
pub use scalar::{Real, Tolerances};
pub use spectral::{eigen_pairs, spectrum, ClusterMode};
pub use sweep::{example_case, scaling_fit, spectral_projection, sweep, NormMode, ScalingModel, SweepConfig};

pub type QuadraticForm = symplectic::QuadraticForm<f64>;
pub type HamiltonMap = symplectic::HamiltonMap<f64>;
pub type SpectralData = spectral::SpectralData<f64>;
pub type SpectrumList = spectral::SpectrumList<f64>;
pub type LagrangianFrame = normal_form::LagrangianFrame<f64>;
pub type WeightForm = normal_form::WeightForm<f64>;
pub type NormalFormResult = normal_form::NormalFormResult<f64>;
pub type FockBlock = fock::FockBlock<f64>;
pub type FockTruncation = fock::FockTruncation<f64>;
pub type GramMatrix = fock::GramMatrix<f64>;
pub type Problem = sweep::Problem<f64>;

pub type QuadraticForm32 = symplectic::QuadraticForm<f32>;
pub type NormalFormResult32 = normal_form::NormalFormResult<f32>;
