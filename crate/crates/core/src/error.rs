use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not symmetric (relative residual {residual:e})")]
    NotSymmetric { residual: f64 },
    #[error("no rotation e^(i theta) makes the real part positive definite (best margin {best_margin:e})")]
    NoRotationFound { best_margin: f64 },
    #[error("form is not normalized: Re Q has smallest eigenvalue {min_eig:e}")]
    NotNormalized { min_eig: f64 },
    #[error("Hamilton map has a (numerically) real eigenvalue {re} + {im}i")]
    RealEigenvalue { re: f64, im: f64 },
    #[error("eigenvalues could not be paired as ±λ (residual {residual:e})")]
    PairingFailure { residual: f64 },
    #[error("declared multiplicities {declared} do not match {available} eigenvalues")]
    BadMultiplicities { declared: usize, available: usize },
    #[error("spectrum enumeration is unbounded: Re(λ/i) = {value:e} is not positive")]
    UnboundedEnumeration { value: f64 },
    #[error("spectrum list is empty")]
    EmptySpectrum,
    #[error("nearest spectral point is not certified inside the enumeration radius (|z| = {modulus}, R = {radius})")]
    OutOfRadius { modulus: f64, radius: f64 },
    #[error("Schur decomposition did not converge")]
    SchurFailure,
    #[error("Schur reordering failed: {0}")]
    SchurReorderFailure(String),
    #[error("frame is not a valid Lagrangian plane: {0}")]
    NotLagrangian(String),
    #[error("plane is not a graph over the base coordinates (smallest singular value {sigma_min:e})")]
    VerticalPlane { sigma_min: f64 },
    #[error("Im A is not negative definite (largest eigenvalue {max_eig:e})")]
    NotNegativeDefinite { max_eig: f64 },
    #[error("Im A is not positive definite (smallest eigenvalue {min_eig:e})")]
    NotPositiveDefinite { min_eig: f64 },
    #[error("1 - iA is numerically singular")]
    SingularCayley,
    #[error("weight is not strictly convex (smallest eigenvalue {min_eig:e})")]
    NotConvex { min_eig: f64 },
    #[error("transformed form is not of the shape Mx·ξ (off-structure residual {residual:e})")]
    NotNormalForm { residual: f64 },
    #[error("map is not symplectic (residual {residual:e})")]
    NotSymplectic { residual: f64 },
    #[error("eigenvector matrix too ill-conditioned for diagonalized mode (condition {condition:e}); supply C in exact mode")]
    DefectiveNotSupplied { condition: f64 },
    #[error("ellipticity violated: min of Re q̃ on the unit sphere is {min:e}")]
    EllipticityViolated { min: f64 },
    #[error("matrix is not nilpotent within {max_power} powers")]
    NotNilpotent { max_power: usize },
    #[error("spectral parameter hits the spectrum (distance {distance:e})")]
    SpectralPointHit { distance: f64 },
    #[error("basis of size {size} exceeds the configured cap {cap}")]
    BasisTooLarge { size: usize, cap: usize },
    #[error("Gram matrix condition estimate {condition:e} exceeds cap; lower the cutoff degree")]
    IllConditioned { condition: f64 },
    #[error("Gram matrix is not positive definite even after jitter")]
    NotPositiveDefiniteGram,
    #[error("scaling fit needs at least 3 points, got {points}")]
    InsufficientData { points: usize },
    #[error("integration contour passes within {distance:e} of the spectrum")]
    ContourHitsSpectrum { distance: f64 },
    #[error("contour does not isolate a single eigenvalue cluster: {0}")]
    NotSeparated(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// `true` for errors caused by malformed input or configuration rather
    /// than by a numerical failure.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Io(_)
                | Error::Json(_)
                | Error::InvalidArgument(_)
                | Error::DimensionMismatch { .. }
                | Error::NotSymmetric { .. }
        )
    }
}
