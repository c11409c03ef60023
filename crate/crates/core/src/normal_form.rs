//! Reduction of an elliptic form with `Re q > 0` to the Bargmann-space normal
//! form `q̃(x, ξ) = Mx·ξ`.
//!
//! The pipeline:
//!
//! 1. stable Lagrangian planes `Λ±` (sums of generalized eigenspaces of `F`
//!    with `±Im λ > 0`) from an ordered Schur decomposition;
//! 2. a real symplectic map `K_R` sending `Λ⁻` to `{η = −iy}`;
//! 3. the FBI canonical map `κ_T(y, η) = (y − iη, η + iBη − By)` with
//!    `B = (1 − iA₊)⁻¹A₊`, which sends `Λ⁻` to `{x = 0}` and `Λ⁺` to `{ξ = 0}`;
//! 4. the weight `Φ₀(x) = ½((Im x)² + Im(Bx·x))`;
//! 5. the transported form `q ∘ K⁻¹ = Mx·ξ` and an optional change of basis
//!    `κ_C(x, ξ) = (C⁻¹x, Cᵀξ)` with `Φ₁(x) = Φ₀(Cx)`.
//!
//! Only canonical transformations are computed, never the integral transforms
//! that implement them.

use nalgebra::{Complex, ComplexField, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    complex_schur, complexify, condition_number, eigenvalues, eigenvectors_from_schur, hermitian_eigen, imag_part,
    inverse, max_abs, max_abs_real, orthonormalize, real_part, reorder_schur, singular_values, spd_power_half, sym_eigenvalues,
    CMatrix, CVector,
};
use crate::scalar::{c_re, lit, to_f64, Real, Tolerances};
use crate::spectral::{eigen_pairs, multiset_distance, ClusterMode, SpectralData};
use crate::symplectic::{symplectic_j, symplectic_residual, HamiltonMap, QuadraticForm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlaneLabel {
    Plus,
    Minus,
}

/// A complex Lagrangian plane given by a `2n × n` basis.
#[derive(Clone, Debug, PartialEq)]
pub struct LagrangianFrame<T: Real> {
    pub basis: CMatrix<T>,
    pub label: PlaneLabel,
}

/// Residuals of the Lagrangian-frame invariants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameResiduals<T> {
    /// Smallest singular value of the orthonormalized basis (independence).
    pub sigma_min: T,
    /// `max |σ(u, v)|` over orthonormal basis pairs.
    pub isotropy: T,
    /// `max |q(u, v)|` over orthonormal basis pairs, relative to `max|Q|`.
    pub q_vanishing: T,
}

impl<T: Real> LagrangianFrame<T> {
    pub fn n(&self) -> usize {
        self.basis.ncols()
    }

    pub fn residuals(&self, form: &QuadraticForm<T>) -> FrameResiduals<T> {
        let s = singular_values(&self.basis);
        let sigma_min = s.last().copied().unwrap_or_else(T::zero) / s[0].max(<T as Real>::epsilon());
        let u = orthonormalize(&self.basis);
        let j = symplectic_j::<T>(self.basis.nrows() / 2);
        let isotropy = max_abs(&(u.transpose() * j * &u));
        let q_vanishing = max_abs(&(u.transpose() * form.matrix() * &u)) / max_abs(form.matrix()).max(T::one());
        FrameResiduals { sigma_min, isotropy, q_vanishing }
    }

    /// Checks independence, isotropy and vanishing of `q` at tolerance `tol`.
    pub fn validate(&self, form: &QuadraticForm<T>, tol: T) -> Result<()> {
        let r = self.residuals(form);
        if r.sigma_min <= tol {
            return Err(Error::NotLagrangian(format!("dependent columns (σ_min {})", r.sigma_min)));
        }
        if r.isotropy > tol {
            return Err(Error::NotLagrangian(format!("not isotropic (residual {})", r.isotropy)));
        }
        if r.q_vanishing > tol {
            return Err(Error::NotLagrangian(format!("q does not vanish (residual {})", r.q_vanishing)));
        }
        Ok(())
    }

    pub fn transformed(&self, k: &CMatrix<T>) -> Self {
        Self { basis: k * &self.basis, label: self.label }
    }
}

/// A real quadratic weight `Φ(x) = ½ wᵀ G w` with `w = (Re x, Im x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightForm<T: Real> {
    pub g: DMatrix<T>,
}

impl<T: Real> WeightForm<T> {
    pub fn new(g: DMatrix<T>) -> Self {
        let g = (&g + g.transpose()) * lit::<T>(0.5);
        Self { g }
    }

    /// `Φ(x) = c|x|²`.
    pub fn radial(n: usize, c: T) -> Self {
        Self { g: DMatrix::identity(2 * n, 2 * n) * (c + c) }
    }

    /// The weight in which the normalized monomials are orthonormal, `|x|²/2`.
    pub fn flat(n: usize) -> Self {
        Self::radial(n, lit(0.5))
    }

    pub fn n(&self) -> usize {
        self.g.nrows() / 2
    }

    pub fn eval(&self, x: &CVector<T>) -> T {
        let n = self.n();
        let w = nalgebra::DVector::from_fn(2 * n, |k, _| if k < n { x[k].re } else { x[k - n].im });
        w.dot(&(&self.g * &w)) * lit::<T>(0.5)
    }

    pub fn eigen_range(&self) -> (T, T) {
        let ev = sym_eigenvalues(&self.g);
        (ev[0], ev[ev.len() - 1])
    }

    pub fn is_strictly_convex(&self, tol: T) -> bool {
        self.eigen_range().0 > tol
    }

    /// Whether `Φ(x) = c|x|²` for some `c` (degrees are then orthogonal).
    pub fn is_radial(&self, tol: T) -> bool {
        let c = self.g[(0, 0)];
        let dev = &self.g - DMatrix::identity(self.g.nrows(), self.g.ncols()) * c;
        max_abs_real(&dev) <= tol * c.abs().max(T::one())
    }

    /// The weight `x ↦ Φ(Cx)`.
    pub fn pull_back(&self, c: &CMatrix<T>) -> Self {
        let n = c.nrows();
        let (cr, ci) = (real_part(c), imag_part(c));
        let mut r = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                r[(i, j)] = cr[(i, j)];
                r[(i, n + j)] = -ci[(i, j)];
                r[(n + i, j)] = ci[(i, j)];
                r[(n + i, n + j)] = cr[(i, j)];
            }
        }
        Self::new(r.transpose() * &self.g * r)
    }
}

/// Orthonormal bases of the generalized eigenspaces `V_λ` for the given
/// cluster centers and multiplicities, via reordering of one Schur form.
pub fn generalized_eigenspaces<T: Real>(
    f: &HamiltonMap<T>,
    clusters: &[(Complex<T>, usize)],
    sep_tol: T,
) -> Result<Vec<(Complex<T>, CMatrix<T>)>> {
    let (q0, t0) = complex_schur(f.matrix())?;
    let dim = t0.nrows();
    let mut out = Vec::with_capacity(clusters.len());
    for &(center, mult) in clusters {
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| {
            let da = to_f64((t0[(a, a)] - center).modulus());
            let db = to_f64((t0[(b, b)] - center).modulus());
            da.partial_cmp(&db).expect("finite")
        });
        let chosen: Vec<usize> = order.into_iter().take(mult).collect();
        let (mut q, mut t) = (q0.clone(), t0.clone());
        let k = reorder_schur(&mut q, &mut t, |j, _| chosen.contains(&j), sep_tol)?;
        if k != mult {
            return Err(Error::SchurReorderFailure(format!("selected {k} eigenvalues, expected {mult}")));
        }
        out.push((center, q.columns(0, mult).into_owned()));
    }
    Ok(out)
}

/// The planes `Λ⁺ = ⊕_{Im λ > 0} V_λ` and `Λ⁻ = ⊕_{Im λ < 0} V_λ`, validated
/// as Lagrangian planes on which `q` vanishes.
pub fn stable_manifolds<T: Real>(
    f: &HamiltonMap<T>,
    form: &QuadraticForm<T>,
    tol: &Tolerances,
) -> Result<(LagrangianFrame<T>, LagrangianFrame<T>)> {
    let n = f.n();
    let (q0, t0) = complex_schur(f.matrix())?;
    let mut frames = Vec::with_capacity(2);
    for label in [PlaneLabel::Plus, PlaneLabel::Minus] {
        let (mut q, mut t) = (q0.clone(), t0.clone());
        let upper = label == PlaneLabel::Plus;
        let k = reorder_schur(&mut q, &mut t, |_, z| (z.im > T::zero()) == upper, lit(tol.real_axis))?;
        if k != n {
            return Err(Error::SchurReorderFailure(format!("{k} eigenvalues on one side of the real axis, expected {n}")));
        }
        let frame = LagrangianFrame { basis: q.columns(0, n).into_owned(), label };
        frame.validate(form, lit(tol.definiteness))?;
        frames.push(frame);
    }
    let minus = frames.pop().expect("two frames");
    let plus = frames.pop().expect("two frames");
    Ok((plus, minus))
}

/// Extreme values of `X ↦ (1/i)σ(X, X̄)` on the unit sphere of the plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PositivityBounds<T> {
    pub min: T,
    pub max: T,
}

pub fn positivity<T: Real>(frame: &LagrangianFrame<T>) -> PositivityBounds<T> {
    let u = orthonormalize(&frame.basis);
    let j = symplectic_j::<T>(u.nrows() / 2);
    // value(d) = dᴴ H d with X = U d̄ and H = (1/i) Uᵀ J Ū
    let h = (u.transpose() * j * u.map(|z| z.conj())) * Complex::new(T::zero(), -T::one());
    let (ev, _) = hermitian_eigen(&h);
    PositivityBounds { min: ev[0], max: ev[ev.len() - 1] }
}

/// The symmetric matrix `A` with `frame = {(y, Ay)}`.
pub fn graph_matrix<T: Real>(frame: &LagrangianFrame<T>, tol: T) -> Result<CMatrix<T>> {
    let n = frame.n();
    let u = orthonormalize(&frame.basis);
    let y = u.rows(0, n).into_owned();
    let eta = u.rows(n, n).into_owned();
    let s = singular_values(&y);
    let sigma_min = s.last().copied().unwrap_or_else(T::zero);
    if sigma_min <= tol {
        return Err(Error::VerticalPlane { sigma_min: to_f64(sigma_min) });
    }
    // A Y = H  ⇔  Yᵀ Aᵀ = Hᵀ
    let at = y.transpose().lu().solve(&eta.transpose()).ok_or(Error::VerticalPlane { sigma_min: 0.0 })?;
    let a = at.transpose();
    Ok((&a + a.transpose()) * c_re(lit::<T>(0.5)))
}

/// Real symplectic map sending the graph of `A₋` (with `Im A₋ < 0`) to the
/// graph of `−i·I`: shear by `Re A₋`, then `(y, η) ↦ (Ty, T⁻¹η)` with
/// `T = (−Im A₋)^{1/2}`.
pub fn real_reduction<T: Real>(a_minus: &CMatrix<T>) -> Result<DMatrix<T>> {
    let n = a_minus.nrows();
    let neg_im = -imag_part(a_minus);
    let ev = sym_eigenvalues(&neg_im);
    if ev[0] <= T::zero() {
        return Err(Error::NotNegativeDefinite { max_eig: to_f64(-ev[0]) });
    }
    let t = spd_power_half(&neg_im, false)?;
    let ti = spd_power_half(&neg_im, true)?;
    let re = real_part(a_minus);
    let mut k = DMatrix::zeros(2 * n, 2 * n);
    k.view_mut((0, 0), (n, n)).copy_from(&t);
    k.view_mut((n, 0), (n, n)).copy_from(&(-(&ti * re)));
    k.view_mut((n, n), (n, n)).copy_from(&ti);
    Ok(k)
}

/// The FBI canonical map together with its matrix `B`.
#[derive(Clone, Debug, PartialEq)]
pub struct FbiMap<T: Real> {
    pub b: CMatrix<T>,
    pub k: CMatrix<T>,
}

impl<T: Real> FbiMap<T> {
    /// `max |x|` of the image of `{η = −iy}` (should vanish).
    pub fn lambda_minus_residual(&self) -> T {
        let n = self.b.nrows();
        let mut basis = CMatrix::zeros(2 * n, n);
        for k in 0..n {
            basis[(k, k)] = c_re(T::one());
            basis[(n + k, k)] = Complex::new(T::zero(), -T::one());
        }
        max_abs(&(&self.k * basis).rows(0, n).into_owned())
    }

    /// `max |ξ|` of the image of `{η = A₊y}` (should vanish).
    pub fn lambda_plus_residual(&self, a_plus: &CMatrix<T>) -> T {
        let n = self.b.nrows();
        let mut basis = CMatrix::zeros(2 * n, n);
        basis.view_mut((0, 0), (n, n)).copy_from(&CMatrix::identity(n, n));
        basis.view_mut((n, 0), (n, n)).copy_from(a_plus);
        max_abs(&(&self.k * basis).rows(n, n).into_owned())
    }
}

/// `B = (1 − iA₊)⁻¹A₊` and `κ_T(y, η) = (y − iη, η + iBη − By)`.
pub fn fbi_map<T: Real>(a_plus: &CMatrix<T>, tol: T) -> Result<FbiMap<T>> {
    let n = a_plus.nrows();
    let ev = sym_eigenvalues(&imag_part(a_plus));
    if ev[0] <= T::zero() {
        return Err(Error::NotPositiveDefinite { min_eig: to_f64(ev[0]) });
    }
    let i = Complex::new(T::zero(), T::one());
    let cayley = CMatrix::identity(n, n) - a_plus * i;
    let s = singular_values(&cayley);
    if s[s.len() - 1] <= tol * s[0] {
        return Err(Error::SingularCayley);
    }
    let b = cayley.lu().solve(a_plus).ok_or(Error::SingularCayley)?;
    let b = (&b + b.transpose()) * c_re(lit::<T>(0.5));
    let id = CMatrix::<T>::identity(n, n);
    let mut k = CMatrix::zeros(2 * n, 2 * n);
    k.view_mut((0, 0), (n, n)).copy_from(&id);
    k.view_mut((0, n), (n, n)).copy_from(&(&id * -i));
    k.view_mut((n, 0), (n, n)).copy_from(&(-&b));
    k.view_mut((n, n), (n, n)).copy_from(&(&id + &b * i));
    Ok(FbiMap { b, k })
}

/// `Φ₀(x) = ½((Im x)² + Im(Bx·x))`, i.e. `G = [[Im B, Re B], [Re B, I − Im B]]`.
pub fn phi0<T: Real>(b: &CMatrix<T>, tol: T) -> Result<WeightForm<T>> {
    let n = b.nrows();
    let (br, bi) = (real_part(b), imag_part(b));
    let mut g = DMatrix::zeros(2 * n, 2 * n);
    g.view_mut((0, 0), (n, n)).copy_from(&bi);
    g.view_mut((0, n), (n, n)).copy_from(&br);
    g.view_mut((n, 0), (n, n)).copy_from(&br.transpose());
    g.view_mut((n, n), (n, n)).copy_from(&(DMatrix::identity(n, n) - &bi));
    let w = WeightForm::new(g);
    let (lo, _) = w.eigen_range();
    if lo <= tol {
        return Err(Error::NotConvex { min_eig: to_f64(lo) });
    }
    Ok(w)
}

/// Transports `q` by the symplectic map `K` and extracts `M` from
/// `Q̃ = K⁻ᵀ Q K⁻¹ = ½ [[0, Mᵀ], [M, 0]]`, i.e. `q̃(x, ξ) = Σ M_ij x_j ξ_i`.
pub fn transported_form<T: Real>(q: &CMatrix<T>, k: &CMatrix<T>, tol: T) -> Result<CMatrix<T>> {
    let n = q.nrows() / 2;
    let kinv = inverse(k).ok_or(Error::NotSymplectic { residual: f64::INFINITY })?;
    let qt = kinv.transpose() * q * &kinv;
    let scale = max_abs(&qt).max(T::one());
    let xx = max_abs(&qt.view((0, 0), (n, n)).into_owned());
    let xixi = max_abs(&qt.view((n, n), (n, n)).into_owned());
    let residual = xx.max(xixi) / scale;
    if residual > tol {
        return Err(Error::NotNormalForm { residual: to_f64(residual) });
    }
    let lower = qt.view((n, 0), (n, n)).into_owned();
    let upper_t = qt.view((0, n), (n, n)).transpose();
    Ok(lower + upper_t)
}

/// How the reduced matrix is brought to its final shape.
#[derive(Clone, Debug, PartialEq)]
pub enum JordanMode<T: Real> {
    /// The caller supplies `C` (e.g. a known Jordan basis).
    Exact(CMatrix<T>),
    /// `C` is the eigenvector matrix and `M` becomes diagonal.
    Diagonalized,
    /// `C = I`.
    Raw,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JordanKind {
    Exact,
    Diagonalized,
    Raw,
}

impl<T: Real> JordanMode<T> {
    pub fn kind(&self) -> JordanKind {
        match self {
            JordanMode::Exact(_) => JordanKind::Exact,
            JordanMode::Diagonalized => JordanKind::Diagonalized,
            JordanMode::Raw => JordanKind::Raw,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Jordanized<T: Real> {
    pub c: CMatrix<T>,
    pub m_out: CMatrix<T>,
    pub phi1: WeightForm<T>,
    pub kind: JordanKind,
}

/// Applies `κ_C`: `M ↦ C⁻¹ M C`, `Φ₁(x) = Φ₀(Cx)`.
pub fn jordanize<T: Real>(
    m: &CMatrix<T>,
    mode: &JordanMode<T>,
    phi0: &WeightForm<T>,
    tol: &Tolerances,
) -> Result<Jordanized<T>> {
    let n = m.nrows();
    let (c, m_out) = match mode {
        JordanMode::Raw => (CMatrix::identity(n, n), m.clone()),
        JordanMode::Exact(c) => {
            if c.nrows() != n || c.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, got: c.nrows() });
            }
            let ci = inverse(c).ok_or_else(|| Error::InvalidArgument("C is singular".into()))?;
            (c.clone(), ci * m * c)
        }
        JordanMode::Diagonalized => {
            let (q, t) = complex_schur(m)?;
            let v = eigenvectors_from_schur(&q, &t);
            let cond = condition_number(&v);
            if to_f64(cond) > tol.eigvec_condition_cap {
                return Err(Error::DefectiveNotSupplied { condition: to_f64(cond) });
            }
            let vi = inverse(&v).ok_or(Error::DefectiveNotSupplied { condition: f64::INFINITY })?;
            let full = &vi * m * &v;
            let diag = CMatrix::from_fn(n, n, |i, j| if i == j { full[(i, i)] } else { c_re(T::zero()) });
            (v, diag)
        }
    };
    Ok(Jordanized { phi1: phi0.pull_back(&c), c, m_out, kind: mode.kind() })
}

/// `κ_C(x, ξ) = (C⁻¹x, Cᵀξ)` as a `2n × 2n` matrix.
pub fn kappa_c<T: Real>(c: &CMatrix<T>) -> Result<CMatrix<T>> {
    let n = c.nrows();
    let ci = inverse(c).ok_or_else(|| Error::InvalidArgument("C is singular".into()))?;
    let mut k = CMatrix::zeros(2 * n, 2 * n);
    k.view_mut((0, 0), (n, n)).copy_from(&ci);
    k.view_mut((n, n), (n, n)).copy_from(&c.transpose());
    Ok(k)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticityConstants<T> {
    /// `Re q̃(x, (2/i)∂Φ₁/∂x) ≥ |x|²/C0`.
    pub c0: T,
    /// `|x|²/C1 ≤ Φ₁(x) ≤ C1|x|²`.
    pub c1: T,
    /// Smallest value of `Re q̃(x, (2/i)∂Φ₁/∂x)` on the unit sphere.
    pub min_real_part: T,
}

/// Real symmetric matrix `S` with `Re q̃(x, (2/i)∂Φ/∂x) = wᵀ S w`, where
/// `∂/∂x = ½(∂_{Re x} − i∂_{Im x})`.
pub fn restricted_real_part<T: Real>(m: &CMatrix<T>, phi: &WeightForm<T>) -> DMatrix<T> {
    let n = m.nrows();
    let i = Complex::new(T::zero(), T::one());
    // x = P w with P = [I, iI]; ξ = (2/i)·½(G_u w − i G_v w) = −i G_u w − G_v w
    let mut p = CMatrix::zeros(n, 2 * n);
    for k in 0..n {
        p[(k, k)] = c_re(T::one());
        p[(k, n + k)] = i;
    }
    let gu = complexify(&phi.g.rows(0, n).into_owned());
    let gv = complexify(&phi.g.rows(n, n).into_owned());
    let z = gu * (-i) - gv;
    let s = real_part(&(z.transpose() * m * p));
    (&s + s.transpose()) * lit::<T>(0.5)
}

pub fn ellipticity_constants<T: Real>(m: &CMatrix<T>, phi1: &WeightForm<T>) -> Result<EllipticityConstants<T>> {
    let (lo, hi) = phi1.eigen_range();
    if lo <= T::zero() {
        return Err(Error::NotConvex { min_eig: to_f64(lo) });
    }
    let two: T = lit(2.0);
    let c1 = T::one().max(hi / two).max(two / lo);
    let s = restricted_real_part(m, phi1);
    let min = sym_eigenvalues(&s)[0];
    if min <= T::zero() {
        return Err(Error::EllipticityViolated { min: to_f64(min) });
    }
    Ok(EllipticityConstants { c0: T::one().max(T::one() / min), c1, min_real_part: min })
}

/// Residuals recorded by the pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalFormResiduals {
    pub symplectic: f64,
    pub block_structure: f64,
    pub spectrum: f64,
    pub pairing: f64,
    pub plus_isotropy: f64,
    pub minus_isotropy: f64,
    pub plus_q_vanishing: f64,
    pub minus_q_vanishing: f64,
    pub positivity_plus_min: f64,
    pub positivity_minus_max: f64,
}

/// Output of [`reduce`].
#[derive(Clone, Debug, PartialEq)]
pub struct NormalFormResult<T: Real> {
    /// `κ_C ∘ κ_T ∘ K_R`.
    pub k_total: CMatrix<T>,
    /// Reduced matrix after `κ_C`.
    pub m: CMatrix<T>,
    /// Reduced matrix before `κ_C`.
    pub m_raw: CMatrix<T>,
    pub c: CMatrix<T>,
    pub b: CMatrix<T>,
    pub phi0: WeightForm<T>,
    pub phi1: WeightForm<T>,
    pub constants: EllipticityConstants<T>,
    pub jordan_mode: JordanKind,
    pub spectral: SpectralData<T>,
    pub residuals: NormalFormResiduals,
}

/// Runs the full reduction on a normalized form (`Re q > 0`).
pub fn reduce<T: Real>(form: &QuadraticForm<T>, mode: &JordanMode<T>, tol: &Tolerances) -> Result<NormalFormResult<T>> {
    let check = form.check_elliptic(lit(tol.definiteness));
    if !check.is_normalized {
        return Err(Error::NotNormalized { min_eig: to_f64(check.min_eig_re) });
    }
    let n = form.n();
    let f = form.hamilton_map();
    let cluster_tol = lit::<T>(tol.cluster) * f.norm().max(T::one());
    let spectral = eigen_pairs(&f, &ClusterMode::Tolerance(cluster_tol), tol)?;
    let (plus, minus) = stable_manifolds(&f, form, tol)?;
    let pos_plus = positivity(&plus);
    let pos_minus = positivity(&minus);
    let graph_tol: T = lit(tol.definiteness);

    let a_minus = graph_matrix(&minus, graph_tol)?;
    let k_r = complexify(&real_reduction(&a_minus)?);
    let a_plus = graph_matrix(&plus.transformed(&k_r), graph_tol)?;
    let fbi = fbi_map(&a_plus, lit(tol.definiteness))?;
    let phi0 = phi0(&fbi.b, lit(tol.definiteness))?;
    let k = &fbi.k * &k_r;
    let structure: T = lit(tol.structure);
    let symp = symplectic_residual(&k) / (k.norm() * k.norm()).max(T::one());
    if symp > structure {
        return Err(Error::NotSymplectic { residual: to_f64(symp) });
    }
    let m_raw = transported_form(form.matrix(), &k, structure)?;
    let jord = jordanize(&m_raw, mode, &phi0, tol)?;
    let k_total = kappa_c(&jord.c)? * &k;
    let block = block_residual(form.matrix(), &k_total);

    let spec_m = eigenvalues(&jord.m_out)?;
    let two_f: Vec<Complex<T>> = spectral.raw_upper.iter().map(|z| z.scale(lit(2.0))).collect();
    let spec_res = multiset_distance(&spec_m, &two_f).map(to_f64).unwrap_or(f64::INFINITY);
    let constants = ellipticity_constants(&jord.m_out, &jord.phi1)?;
    let pr = plus.residuals(form);
    let mr = minus.residuals(form);
    debug_assert_eq!(jord.m_out.nrows(), n);
    Ok(NormalFormResult {
        k_total,
        m: jord.m_out,
        m_raw,
        c: jord.c,
        b: fbi.b,
        phi0,
        phi1: jord.phi1,
        constants,
        jordan_mode: jord.kind,
        residuals: NormalFormResiduals {
            symplectic: to_f64(symp),
            block_structure: to_f64(block),
            spectrum: spec_res,
            pairing: to_f64(spectral.pairing_residual),
            plus_isotropy: to_f64(pr.isotropy),
            minus_isotropy: to_f64(mr.isotropy),
            plus_q_vanishing: to_f64(pr.q_vanishing),
            minus_q_vanishing: to_f64(mr.q_vanishing),
            positivity_plus_min: to_f64(pos_plus.min),
            positivity_minus_max: to_f64(pos_minus.max),
        },
        spectral,
    })
}

/// Relative size of the `xx` and `ξξ` blocks of `K⁻ᵀ Q K⁻¹`.
pub fn block_residual<T: Real>(q: &CMatrix<T>, k: &CMatrix<T>) -> T {
    let n = q.nrows() / 2;
    let Some(kinv) = inverse(k) else { return T::max_value().unwrap_or_else(T::one) };
    let qt = kinv.transpose() * q * &kinv;
    let scale = max_abs(&qt).max(T::one());
    let xx = max_abs(&qt.view((0, 0), (n, n)).into_owned());
    let xixi = max_abs(&qt.view((n, n), (n, n)).into_owned());
    xx.max(xixi) / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cplx(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn oscillator() -> QuadraticForm<f64> {
        QuadraticForm::from_real(DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5])).unwrap()
    }

    fn col(entries: &[Complex<f64>]) -> CMatrix<f64> {
        CMatrix::from_column_slice(entries.len(), 1, entries)
    }

    /// `|⟨u, v⟩| / (|u||v|)` for column vectors.
    fn alignment(u: &CMatrix<f64>, v: &CMatrix<f64>) -> f64 {
        (u.adjoint() * v)[(0, 0)].norm() / (u.norm() * v.norm())
    }

    #[test]
    fn oscillator_eigenspaces() {
        let f = oscillator().hamilton_map();
        let spaces = generalized_eigenspaces(&f, &[(cplx(0.0, 0.5), 1), (cplx(0.0, -0.5), 1)], 1e-10).unwrap();
        assert_abs_diff_eq!(alignment(&spaces[0].1, &col(&[cplx(1.0, 0.0), cplx(0.0, 1.0)])), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(alignment(&spaces[1].1, &col(&[cplx(1.0, 0.0), cplx(0.0, -1.0)])), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn jordan_block_eigenspace_is_two_dimensional() {
        // F = J⁻¹Q with Q chosen so that 2F|Λ⁺ is the Jordan block [[i, 1], [0, i]]:
        // take q̃ = Mx·ξ in coordinates where F = ½ [[M, 0], [0, −Mᵀ]].
        let m = CMatrix::from_row_slice(2, 2, &[cplx(0.0, 1.0), cplx(1.0, 0.0), cplx(0.0, 0.0), cplx(0.0, 1.0)]);
        let mut f = CMatrix::zeros(4, 4);
        f.view_mut((0, 0), (2, 2)).copy_from(&(&m * cplx(0.5, 0.0)));
        f.view_mut((2, 2), (2, 2)).copy_from(&(-m.transpose() * cplx(0.5, 0.0)));
        let hm = HamiltonMap::from_matrix(f.clone()).unwrap();
        let spaces = generalized_eigenspaces(&hm, &[(cplx(0.0, 0.5), 2)], 1e-6).unwrap();
        let v = &spaces[0].1;
        assert_eq!(v.ncols(), 2);
        let shifted = &f - CMatrix::identity(4, 4) * cplx(0.0, 0.5);
        assert!((&shifted * &shifted * v).norm() < 1e-7);
        assert!((&shifted * v).norm() > 0.1);
    }

    #[test]
    fn oscillator_manifolds_and_positivity() {
        let q = oscillator();
        let (plus, minus) = stable_manifolds(&q.hamilton_map(), &q, &Tolerances::default()).unwrap();
        assert_abs_diff_eq!(alignment(&plus.basis, &col(&[cplx(1.0, 0.0), cplx(0.0, 1.0)])), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(alignment(&minus.basis, &col(&[cplx(1.0, 0.0), cplx(0.0, -1.0)])), 1.0, epsilon = 1e-14);
        let p = positivity(&plus);
        assert_abs_diff_eq!(p.min, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(positivity(&minus).max, -1.0, epsilon = 1e-14);
        let scaled = LagrangianFrame { basis: &plus.basis * cplx(5.0, 0.0), label: PlaneLabel::Plus };
        assert_abs_diff_eq!(positivity(&scaled).min, 1.0, epsilon = 1e-14);
        let unnormalized = LagrangianFrame { basis: col(&[cplx(1.0, 0.0), cplx(0.0, 1.0)]), label: PlaneLabel::Plus };
        assert_abs_diff_eq!(positivity(&unnormalized).min, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn graph_matrices() {
        let minus = LagrangianFrame { basis: col(&[cplx(1.0, 0.0), cplx(0.0, -1.0)]), label: PlaneLabel::Minus };
        let plus = LagrangianFrame { basis: col(&[cplx(1.0, 0.0), cplx(0.0, 1.0)]), label: PlaneLabel::Plus };
        assert!((graph_matrix(&minus, 1e-10).unwrap()[(0, 0)] - cplx(0.0, -1.0)).norm() < 1e-14);
        assert!((graph_matrix(&plus, 1e-10).unwrap()[(0, 0)] - cplx(0.0, 1.0)).norm() < 1e-14);
        let vertical = LagrangianFrame { basis: col(&[cplx(0.0, 0.0), cplx(1.0, 0.0)]), label: PlaneLabel::Plus };
        assert!(matches!(graph_matrix(&vertical, 1e-10), Err(Error::VerticalPlane { .. })));
    }

    #[test]
    fn real_reduction_examples() {
        let a = CMatrix::from_element(1, 1, cplx(0.0, -1.0));
        assert!((real_reduction(&a).unwrap() - DMatrix::identity(2, 2)).norm() < 1e-15);

        let a = CMatrix::from_element(1, 1, cplx(1.0, -1.0));
        let k = real_reduction(&a).unwrap();
        assert!((k - DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 1.0])).norm() < 1e-15);

        // T = (−Im A₋)^{1/2} = √2: (y, η) ↦ (√2 y, η/√2) maps η = −2iy to η = −iy.
        let a = CMatrix::from_element(1, 1, cplx(0.0, -2.0));
        let k = real_reduction(&a).unwrap();
        let s = 2f64.sqrt();
        assert!((&k - DMatrix::from_row_slice(2, 2, &[s, 0.0, 0.0, 1.0 / s])).norm() < 1e-15);
        let image = complexify(&k) * col(&[cplx(1.0, 0.0), cplx(0.0, -2.0)]);
        assert!((image[(1, 0)] / image[(0, 0)] - cplx(0.0, -1.0)).norm() < 1e-15);

        let bad = CMatrix::from_element(1, 1, cplx(0.0, 1.0));
        assert!(matches!(real_reduction(&bad), Err(Error::NotNegativeDefinite { .. })));
    }

    #[test]
    fn fbi_examples() {
        let a = CMatrix::from_element(1, 1, cplx(0.0, 1.0));
        let fbi = fbi_map(&a, 1e-12).unwrap();
        assert!((fbi.b[(0, 0)] - cplx(0.0, 0.5)).norm() < 1e-15);
        let expect = CMatrix::from_row_slice(2, 2, &[cplx(1.0, 0.0), cplx(0.0, -1.0), cplx(0.0, -0.5), cplx(0.5, 0.0)]);
        assert!((&fbi.k - expect).norm() < 1e-15);
        assert!((fbi.k.determinant() - cplx(1.0, 0.0)).norm() < 1e-15);
        assert!(fbi.lambda_minus_residual() < 1e-15);
        assert!(fbi.lambda_plus_residual(&a) < 1e-15);
        assert!(symplectic_residual(&fbi.k) < 1e-15);

        let a = CMatrix::from_element(1, 1, cplx(0.0, 2.0));
        let fbi = fbi_map(&a, 1e-12).unwrap();
        assert!((fbi.b[(0, 0)] - cplx(0.0, 2.0 / 3.0)).norm() < 1e-15);
        assert!(fbi.lambda_plus_residual(&a) < 1e-15);
    }

    #[test]
    fn phi0_examples() {
        let w = phi0(&CMatrix::from_element(1, 1, cplx(0.0, 0.5)), 1e-10).unwrap();
        let x = CVector::from_vec(vec![cplx(0.3, -0.7)]);
        assert_abs_diff_eq!(w.eval(&x), x[0].norm_sqr() / 4.0, epsilon = 1e-15);
        assert!(matches!(phi0(&CMatrix::<f64>::zeros(1, 1), 1e-10), Err(Error::NotConvex { .. })));
        // A real part of B adds a pluriharmonic term; convexity is decided by the
        // eigenvalues of the assembled G: [[0.5, r], [r, 0.5]] is convex iff |r| < 0.5.
        assert!(phi0(&CMatrix::from_element(1, 1, cplx(0.3, 0.5)), 1e-10).is_ok());
        assert!(phi0(&CMatrix::from_element(1, 1, cplx(0.6, 0.5)), 1e-10).is_err());
    }

    #[test]
    fn oscillator_pipeline() {
        let r = reduce(&oscillator(), &JordanMode::Raw, &Tolerances::default()).unwrap();
        assert!((r.m[(0, 0)] - cplx(0.0, 1.0)).norm() < 1e-14);
        assert!(r.residuals.spectrum < 1e-14);
        assert!(r.residuals.block_structure < 1e-14);
        assert_abs_diff_eq!(r.constants.c0, 2.0, epsilon = 1e-13);
        // Φ₁ = |x|²/4 needs C1 = 4 for |x|²/C1 ≤ Φ₁.
        assert_abs_diff_eq!(r.constants.c1, 4.0, epsilon = 1e-13);
        assert!(r.residuals.positivity_plus_min > 0.0);
        assert!(r.residuals.positivity_minus_max < 0.0);
    }

    #[test]
    fn transported_form_rejects_non_normal_shape() {
        let q = oscillator();
        assert!(matches!(
            transported_form(q.matrix(), &CMatrix::identity(2, 2), 1e-9),
            Err(Error::NotNormalForm { .. })
        ));
    }

    #[test]
    fn jordanize_modes() {
        let w = WeightForm::<f64>::radial(1, 0.25);
        let m = CMatrix::from_element(1, 1, cplx(0.0, 1.0));
        let j = jordanize(&m, &JordanMode::Diagonalized, &w, &Tolerances::default()).unwrap();
        assert!((j.c[(0, 0)].norm() - 1.0).abs() < 1e-15);
        assert!((&j.m_out - &m).norm() < 1e-15);
        assert!((&j.phi1.g - &w.g).norm() < 1e-15);

        let jb = CMatrix::from_row_slice(2, 2, &[cplx(0.0, 1.0), cplx(1.0, 0.0), cplx(0.0, 0.0), cplx(0.0, 1.0)]);
        let w2 = WeightForm::<f64>::flat(2);
        let j = jordanize(&jb, &JordanMode::Exact(CMatrix::identity(2, 2)), &w2, &Tolerances::default()).unwrap();
        assert_eq!(j.m_out, jb);
        assert_eq!(j.kind, JordanKind::Exact);
        assert!(matches!(
            jordanize(&jb, &JordanMode::Diagonalized, &w2, &Tolerances::default()),
            Err(Error::DefectiveNotSupplied { .. })
        ));

        let distinct = CMatrix::from_row_slice(2, 2, &[cplx(0.0, 1.0), cplx(1.0, 0.0), cplx(0.0, 0.0), cplx(0.0, 2.0)]);
        let j = jordanize(&distinct, &JordanMode::Diagonalized, &w2, &Tolerances::default()).unwrap();
        let mut d: Vec<Complex<f64>> = (0..2).map(|k| j.m_out[(k, k)]).collect();
        d.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!((d[0] - cplx(0.0, 1.0)).norm() < 1e-14);
        assert!((d[1] - cplx(0.0, 2.0)).norm() < 1e-14);
        assert_eq!(j.m_out[(0, 1)], cplx(0.0, 0.0));
        // The eigenvector oracle: C M_out C⁻¹ reproduces M.
        let back = &j.c * &j.m_out * inverse(&j.c).unwrap();
        assert!((back - distinct).norm() < 1e-13);
    }

    #[test]
    fn ellipticity_examples() {
        let m = CMatrix::from_element(1, 1, cplx(0.0, 1.0));
        let c = ellipticity_constants(&m, &WeightForm::radial(1, 0.25)).unwrap();
        assert_abs_diff_eq!(c.c0, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c.min_real_part, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(c.c1, 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ellipticity_constants(&m, &WeightForm::radial(1, 1.0)).unwrap().c1, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ellipticity_constants(&m, &WeightForm::radial(1, 0.5)).unwrap().c1, 2.0, epsilon = 1e-14);
        let bad = CMatrix::from_element(1, 1, cplx(0.0, -1.0));
        assert!(matches!(
            ellipticity_constants(&bad, &WeightForm::radial(1, 0.25)),
            Err(Error::EllipticityViolated { .. })
        ));
    }
}
