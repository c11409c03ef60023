//! Homogeneous-polynomial blocks of the quantized normal form `q̃ = Mx·ξ`
//! acting on a Bargmann space.
//!
//! All matrices are expressed in the normalized monomials
//! `φ_α = (π^n α!)^{-1/2} h^{-n/2} (h^{-1/2} x)^α`, which are orthonormal for the
//! weight `|x|²/2`. Inside `E_m`, multi-indices are ordered graded
//! lexicographically with the first exponent descending: `(m,0,..)` comes first,
//! `(..,0,m)` last.

use std::collections::HashMap;
use std::ops::RangeInclusive;

use nalgebra::{Cholesky, Complex, ComplexField};
use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{
    complexify, eigenvalues, hermitian_eigen, inverse, is_lower_triangular, is_upper_triangular, solve_upper,
    spectral_norm, CMatrix, CVector,
};
use crate::normal_form::WeightForm;
use crate::scalar::{c_re, from_usize, lit, to_f64, Real};

/// `ν_m = C(m+n−1, n−1)`, the dimension of `E_m`.
pub fn nu(n: usize, m: usize) -> usize {
    assert!(n >= 1, "n must be positive");
    let k = n - 1;
    let mut acc: u128 = 1;
    for i in 1..=k as u128 {
        acc = acc * (m as u128 + i) / i;
    }
    acc as usize
}

/// All multi-indices of a fixed degree, in block order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiIndexBasis {
    pub n: usize,
    pub m: usize,
    pub indices: Vec<Vec<usize>>,
    position: HashMap<Vec<usize>, usize>,
}

impl MultiIndexBasis {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn position(&self, alpha: &[usize]) -> Option<usize> {
        self.position.get(alpha).copied()
    }
}

pub fn enumerate_basis(n: usize, m: usize) -> MultiIndexBasis {
    assert!(n >= 1, "n must be positive");
    let mut indices = Vec::with_capacity(nu(n, m));
    let mut cur = vec![0; n];
    fill(&mut cur, 0, m, &mut indices);
    let position = indices.iter().enumerate().map(|(k, a)| (a.clone(), k)).collect();
    MultiIndexBasis { n, m, indices, position }
}

fn fill(cur: &mut Vec<usize>, k: usize, rest: usize, out: &mut Vec<Vec<usize>>) {
    if k + 1 == cur.len() {
        cur[k] = rest;
        out.push(cur.clone());
        return;
    }
    for a in (0..=rest).rev() {
        cur[k] = a;
        fill(cur, k + 1, rest - a, out);
    }
}

/// Concatenation of the bases of `E_lo, …, E_hi`.
pub fn basis_range(n: usize, degrees: RangeInclusive<usize>) -> Vec<Vec<usize>> {
    degrees.flat_map(|m| enumerate_basis(n, m).indices).collect()
}

/// The restriction of `q̃^w` to `E_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct FockBlock<T: Real> {
    pub m: usize,
    pub h: T,
    pub basis: MultiIndexBasis,
    pub a: CMatrix<T>,
}

impl<T: Real> FockBlock<T> {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn diagonal_part(&self) -> CMatrix<T> {
        let d = self.dim();
        CMatrix::from_fn(d, d, |i, j| if i == j { self.a[(i, i)] } else { c_re(T::zero()) })
    }

    /// Everything off the diagonal; nilpotent when `M` is triangular.
    pub fn nilpotent_part(&self) -> CMatrix<T> {
        let mut nm = self.a.clone();
        nm.fill_diagonal(c_re(T::zero()));
        nm
    }

    pub fn is_triangular(&self) -> bool {
        is_lower_triangular(&self.a) || is_upper_triangular(&self.a)
    }

    pub fn eigenvalues(&self) -> Result<Vec<Complex<T>>> {
        if self.is_triangular() {
            Ok((0..self.dim()).map(|k| self.a[(k, k)]).collect())
        } else {
            eigenvalues(&self.a)
        }
    }
}

/// Matrix of `q̃^w = Σ M_ij x_j hD_i + (h/2i) tr M` on `E_m`.
pub fn weyl_block<T: Real>(m_mat: &CMatrix<T>, h: T, m: usize) -> FockBlock<T> {
    let n = m_mat.nrows();
    let basis = enumerate_basis(n, m);
    let dim = basis.len();
    let h_over_i = Complex::new(T::zero(), -h);
    let half: T = lit(0.5);
    let mut a = CMatrix::zeros(dim, dim);
    for (col, alpha) in basis.indices.iter().enumerate() {
        let mut diag = c_re(T::zero());
        for i in 0..n {
            diag += m_mat[(i, i)] * (from_usize::<T>(alpha[i]) + half);
        }
        a[(col, col)] = diag * h_over_i;
        for i in 0..n {
            if alpha[i] == 0 {
                continue;
            }
            for j in (0..n).filter(|&j| j != i) {
                let mij = m_mat[(i, j)];
                if mij == c_re(T::zero()) {
                    continue;
                }
                let mut beta = alpha.clone();
                beta[i] -= 1;
                beta[j] += 1;
                let row = basis.position(&beta).expect("degree preserved");
                let coef = (from_usize::<T>(alpha[i]) * from_usize::<T>(alpha[j] + 1)).sqrt();
                a[(row, col)] += mij * h_over_i * coef;
            }
        }
    }
    FockBlock { m, h, basis, a }
}

/// Smallest `p` with `‖(N/‖N‖)^p‖ ≤ tol`.
pub fn nilpotent_order<T: Real>(nm: &CMatrix<T>, tol: T) -> Result<usize> {
    let scale = spectral_norm(nm);
    if scale == T::zero() {
        return Ok(1);
    }
    let step = nm.unscale(scale);
    let mut power = step.clone();
    let limit = nm.nrows().max(1);
    for p in 1..=limit {
        if spectral_norm(&power) <= tol {
            return Ok(p);
        }
        power = &power * &step;
    }
    Err(Error::NotNilpotent { max_power: limit })
}

fn hit_guard<T: Real>(a: &CMatrix<T>, z: Complex<T>) -> Result<()> {
    if is_lower_triangular(a) || is_upper_triangular(a) {
        let d = (0..a.nrows()).map(|k| (z - a[(k, k)]).modulus()).fold(T::max_value().unwrap_or_else(T::one), |x, y| x.min(y));
        if d <= lit::<T>(1e-14) * z.modulus().max(T::one()) {
            return Err(Error::SpectralPointHit { distance: to_f64(d) });
        }
    }
    Ok(())
}

/// `(z − A)⁻¹`, refusing exact spectral hits.
pub fn resolvent_matrix<T: Real>(a: &CMatrix<T>, z: Complex<T>) -> Result<CMatrix<T>> {
    hit_guard(a, z)?;
    let d = a.nrows();
    let shifted = CMatrix::identity(d, d) * z - a;
    let r = inverse(&shifted).ok_or(Error::SpectralPointHit { distance: 0.0 })?;
    if r.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::SpectralPointHit { distance: 0.0 });
    }
    Ok(r)
}

/// `‖Lᴴ R L⁻ᴴ‖` where `G = L Lᴴ` is the Gram matrix of the coordinates.
pub fn weighted_norm<T: Real>(r: &CMatrix<T>, chol: &CMatrix<T>) -> Result<T> {
    let lh = chol.adjoint();
    let id = CMatrix::identity(lh.nrows(), lh.ncols());
    let lh_inv = solve_upper(&lh, &id).ok_or(Error::NotPositiveDefiniteGram)?;
    Ok(spectral_norm(&(&lh * r * lh_inv)))
}

/// Operator norm of `(z − A)⁻¹` on `E_m`, flat or in the geometry of a Gram
/// matrix over the same basis.
pub fn resolvent_block<T: Real>(block: &FockBlock<T>, z: Complex<T>, gram: Option<&GramMatrix<T>>) -> Result<T> {
    let r = resolvent_matrix(&block.a, z)?;
    match gram {
        None => Ok(spectral_norm(&r)),
        Some(g) => {
            if g.dim() != block.dim() {
                return Err(Error::DimensionMismatch { expected: block.dim(), got: g.dim() });
            }
            weighted_norm(&r, &g.chol)
        }
    }
}

/// `(z − D − N)⁻¹ = Σ_j ((z − D)⁻¹N)^j (z − D)⁻¹`, summed until the terms vanish.
pub fn neumann_resolvent_block<T: Real>(d: &CMatrix<T>, nm: &CMatrix<T>, z: Complex<T>) -> Result<CMatrix<T>> {
    neumann_partial(d, nm, z, d.nrows() + 1)
}

/// The Neumann series truncated after `terms` terms.
pub fn neumann_partial<T: Real>(d: &CMatrix<T>, nm: &CMatrix<T>, z: Complex<T>, terms: usize) -> Result<CMatrix<T>> {
    let dim = d.nrows();
    let mut rd = CMatrix::zeros(dim, dim);
    for k in 0..dim {
        let gap = z - d[(k, k)];
        if gap.modulus() <= lit::<T>(1e-14) * z.modulus().max(T::one()) {
            return Err(Error::SpectralPointHit { distance: to_f64(gap.modulus()) });
        }
        rd[(k, k)] = Complex::new(T::one(), T::zero()) / gap;
    }
    let step = &rd * nm;
    let mut term = rd.clone();
    let mut sum = CMatrix::zeros(dim, dim);
    for _ in 0..terms {
        sum += &term;
        term = &step * &term;
        if term.iter().all(|v| *v == c_re(T::zero())) {
            break;
        }
    }
    Ok(sum)
}

/// Gram matrix of the normalized monomials in a quadratic-weight Bargmann space.
///
/// `g[(i, j)] = (φ_j, φ_i)`, so that `‖Σ c_k φ_k‖² = cᴴ g c`. In the normalized
/// basis the entries do not depend on `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix<T: Real> {
    pub n: usize,
    pub lo: usize,
    pub hi: usize,
    pub indices: Vec<Vec<usize>>,
    pub g: CMatrix<T>,
    /// Lower Cholesky factor.
    pub chol: CMatrix<T>,
    pub condition: T,
    pub jitter: T,
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct GramOptions {
    pub cap: usize,
    pub condition_cap: f64,
    pub jitter: f64,
}

impl Default for GramOptions {
    fn default() -> Self {
        Self { cap: 2500, condition_cap: 1e12, jitter: 1e-14 }
    }
}

impl<T: Real> GramMatrix<T> {
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    /// Leading factor restricted to the first `k` basis elements.
    pub fn leading_chol(&self, k: usize) -> CMatrix<T> {
        self.chol.view((0, 0), (k, k)).into_owned()
    }

    /// Inner product `(x^{α_j}, x^{α_i})` of raw monomials with weight `e^{−2Φ/h}`.
    pub fn raw_entry(&self, i: usize, j: usize, h: T) -> Complex<T> {
        let (a, b) = (&self.indices[i], &self.indices[j]);
        let pi_n = T::pi().powi(self.n as i32);
        let deg = (a.iter().sum::<usize>() + b.iter().sum::<usize>()) as f64 / 2.0 + self.n as f64;
        let fac = (ln_factorial_multi(a) + ln_factorial_multi(b)) / 2.0;
        let scale = pi_n * h.powf(lit(deg)) * lit::<T>(fac.exp());
        self.g[(i, j)] * scale
    }
}

fn ln_factorial_multi(a: &[usize]) -> f64 {
    a.iter().map(|&k| (1..=k).map(|v| (v as f64).ln()).sum::<f64>()).sum()
}

/// Normalized Gaussian moments `E[y^γ]/√γ!` for `y = (s, s̄)`, `s` distributed
/// with density `∝ e^{−2Φ(s)}`, indexed by pairs of multi-indices of degree
/// at most `d`.
struct MomentTable<T: Real> {
    list: Vec<Vec<usize>>,
    pos: HashMap<Vec<usize>, usize>,
    values: Vec<Complex<T>>,
}

impl<T: Real> MomentTable<T> {
    fn build(phi: &WeightForm<T>, d: usize) -> Result<Self> {
        let n = phi.n();
        let list = basis_range(n, 0..=d);
        let pos: HashMap<Vec<usize>, usize> = list.iter().enumerate().map(|(k, a)| (a.clone(), k)).collect();
        let s = covariance(phi)?;
        let size = list.len();
        let mut values = vec![c_re(T::zero()); size * size];
        values[0] = c_re(T::one());
        let degree: Vec<usize> = list.iter().map(|a| a.iter().sum()).collect();
        for total in (2..=2 * d).step_by(2) {
            for ia in 0..size {
                let da = degree[ia];
                if da > total || total - da > d {
                    continue;
                }
                for ib in 0..size {
                    if degree[ib] != total - da {
                        continue;
                    }
                    let mut gamma: Vec<usize> = list[ia].iter().chain(list[ib].iter()).copied().collect();
                    let a = gamma.iter().position(|&g| g > 0).expect("positive degree");
                    gamma[a] -= 1;
                    let delta_a = gamma[a];
                    let mut acc = c_re(T::zero());
                    for b in 0..2 * n {
                        if gamma[b] == 0 || s[(a, b)] == c_re(T::zero()) {
                            continue;
                        }
                        let coef = (from_usize::<T>(gamma[b]) / from_usize::<T>(delta_a + 1)).sqrt();
                        let mut lowered = gamma.clone();
                        lowered[b] -= 1;
                        let (x, y) = lowered.split_at(n);
                        let k = pos[x] * size + pos[y];
                        acc += s[(a, b)] * values[k] * coef;
                    }
                    values[ia * size + ib] = acc;
                }
            }
        }
        Ok(Self { list, pos, values })
    }

    fn get(&self, alpha: &[usize], beta: &[usize]) -> Complex<T> {
        self.values[self.pos[alpha] * self.list.len() + self.pos[beta]]
    }
}

/// Covariance `E[y_a y_b]` of `y = (s, s̄)` where `w = (Re s, Im s)` has
/// covariance `G⁻¹/2`.
fn covariance<T: Real>(phi: &WeightForm<T>) -> Result<CMatrix<T>> {
    let n = phi.n();
    let ginv = phi.g.clone().try_inverse().ok_or(Error::NotConvex { min_eig: 0.0 })?;
    let cov = complexify(&(ginv * lit::<T>(0.5)));
    let i = Complex::new(T::zero(), T::one());
    let mut p = CMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        p[(k, k)] = c_re(T::one());
        p[(k, n + k)] = i;
        p[(n + k, k)] = c_re(T::one());
        p[(n + k, n + k)] = -i;
    }
    Ok(&p * cov * p.transpose())
}

/// Gram matrix over `E_lo ⊕ … ⊕ E_hi` for the weight `phi`.
pub fn gram_matrix<T: Real>(phi: &WeightForm<T>, degrees: RangeInclusive<usize>, opts: &GramOptions) -> Result<GramMatrix<T>> {
    let n = phi.n();
    let (lo, hi) = (*degrees.start(), *degrees.end());
    let size: usize = (lo..=hi).map(|m| nu(n, m)).sum();
    if size > opts.cap {
        return Err(Error::BasisTooLarge { size, cap: opts.cap });
    }
    let (gmin, _) = phi.eigen_range();
    if gmin <= T::zero() {
        return Err(Error::NotConvex { min_eig: to_f64(gmin) });
    }
    let table = MomentTable::build(phi, hi)?;
    let det = phi.g.determinant();
    let norm = T::one() / det.sqrt();
    let indices = basis_range(n, degrees);
    let dim = indices.len();
    let mut g = CMatrix::from_fn(dim, dim, |i, j| table.get(&indices[j], &indices[i]) * norm);
    g = (&g + g.adjoint()) * c_re(lit::<T>(0.5));
    let (chol, jitter) = cholesky_with_jitter(&g, lit(opts.jitter))?;
    let (ev, _) = hermitian_eigen(&g);
    let condition = if ev[0] > T::zero() { ev[dim - 1] / ev[0] } else { T::max_value().unwrap_or_else(T::one) };
    if to_f64(condition) > opts.condition_cap {
        return Err(Error::IllConditioned { condition: to_f64(condition) });
    }
    Ok(GramMatrix { n, lo, hi, indices, g, chol, condition, jitter })
}

fn cholesky_with_jitter<T: Real>(g: &CMatrix<T>, rel: T) -> Result<(CMatrix<T>, T)> {
    if let Some(c) = Cholesky::new(g.clone()) {
        return Ok((c.l(), T::zero()));
    }
    let scale = (0..g.nrows()).map(|k| g[(k, k)].re).fold(T::zero(), |a, b| a.max(b));
    let jitter = rel * scale;
    let shifted = g + CMatrix::identity(g.nrows(), g.ncols()) * c_re(jitter);
    Cholesky::new(shifted).map(|c| (c.l(), jitter)).ok_or(Error::NotPositiveDefiniteGram)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TauNorm<T> {
    pub norm: T,
    /// The same norm with the polynomial space enlarged by four degrees.
    pub extended: T,
    pub converged: bool,
}

/// Norm of the truncation `τ_N` (keep degrees `< N`) on polynomials of degree
/// at most `cutoff`, in the geometry of `phi`.
pub fn projection_norm_tau<T: Real>(
    big_n: usize,
    phi: &WeightForm<T>,
    cutoff: usize,
    opts: &GramOptions,
    rel_tol: T,
) -> Result<TauNorm<T>> {
    if cutoff < big_n {
        return Err(Error::InvalidArgument(format!("cutoff degree {cutoff} must be at least N = {big_n}")));
    }
    let gram = gram_matrix(phi, 0..=cutoff + 4, opts)?;
    let at = |deg: usize| -> Result<T> {
        let total: usize = (0..=deg).map(|m| nu(phi.n(), m)).sum();
        let kept: usize = (0..big_n).map(|m| nu(phi.n(), m)).sum();
        let p = CMatrix::from_fn(total, total, |i, j| if i == j && i < kept { c_re(T::one()) } else { c_re(T::zero()) });
        weighted_norm(&p, &gram.leading_chol(total))
    };
    let norm = at(cutoff)?;
    let extended = at(cutoff + 4)?;
    let converged = (extended - norm).abs() <= rel_tol * extended.abs().max(T::one());
    Ok(TauNorm { norm, extended, converged })
}

/// Least `N` with `N ≥ (2C1(K+1)²e² + 1)/h`.
pub fn min_vanishing_order<T: Real>(k: T, c1: T, h: T) -> usize {
    let (k, c1, h) = (to_f64(k), to_f64(c1), to_f64(h));
    let e2 = std::f64::consts::E * std::f64::consts::E;
    ((2.0 * c1 * (k + 1.0).powi(2) * e2 + 1.0) / h).ceil() as usize
}

/// Blocks `E_0, …, E_{N−1}` of the quantized normal form.
#[derive(Clone, Debug, PartialEq)]
pub struct FockTruncation<T: Real> {
    pub m_mat: CMatrix<T>,
    pub h: T,
    pub blocks: Vec<FockBlock<T>>,
}

impl<T: Real> FockTruncation<T> {
    pub fn new(m_mat: &CMatrix<T>, h: T, num_blocks: usize) -> Self {
        let mut t = Self { m_mat: m_mat.clone(), h, blocks: Vec::new() };
        t.extend_to(num_blocks);
        t
    }

    pub fn extend_to(&mut self, num_blocks: usize) {
        for m in self.blocks.len()..num_blocks {
            self.blocks.push(weyl_block(&self.m_mat, self.h, m));
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn nu_total(&self) -> usize {
        self.blocks.iter().map(FockBlock::dim).sum()
    }

    pub fn eigenvalues(&self) -> Result<Vec<Complex<T>>> {
        let mut out = Vec::with_capacity(self.nu_total());
        for b in &self.blocks {
            out.extend(b.eigenvalues()?);
        }
        Ok(out)
    }

    /// Block-diagonal matrix of the truncation.
    pub fn dense(&self) -> CMatrix<T> {
        let dim = self.nu_total();
        let mut a = CMatrix::zeros(dim, dim);
        let mut off = 0;
        for b in &self.blocks {
            a.view_mut((off, off), (b.dim(), b.dim())).copy_from(&b.a);
            off += b.dim();
        }
        a
    }

    /// Flat resolvent norm of each block.
    pub fn block_norms(&self, z: Complex<T>) -> Result<Vec<T>> {
        self.blocks.iter().map(|b| resolvent_block(b, z, None)).collect()
    }

    /// Resolvent norm with a cross-degree Gram matrix covering at least these blocks.
    pub fn resolvent_norm_gram(&self, z: Complex<T>, gram: &GramMatrix<T>) -> Result<T> {
        let dim = self.nu_total();
        if gram.lo != 0 || gram.dim() < dim {
            return Err(Error::DimensionMismatch { expected: dim, got: gram.dim() });
        }
        let mut r = CMatrix::zeros(dim, dim);
        let mut off = 0;
        for b in &self.blocks {
            r.view_mut((off, off), (b.dim(), b.dim())).copy_from(&resolvent_matrix(&b.a, z)?);
            off += b.dim();
        }
        weighted_norm(&r, &gram.leading_chol(dim))
    }
}

/// A polynomial on `C^n` as a list of monomials.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<T: Real> {
    pub n: usize,
    pub terms: Vec<(Vec<usize>, Complex<T>)>,
}

impl<T: Real> Polynomial<T> {
    pub fn eval(&self, x: &CVector<T>) -> Complex<T> {
        let pw = self.power_table(x);
        self.terms.iter().fold(c_re(T::zero()), |acc, (alpha, c)| {
            acc + alpha.iter().enumerate().fold(*c, |p, (k, &e)| p * pw[k][e])
        })
    }

    /// `∂u/∂x_k` at `x`.
    pub fn gradient(&self, x: &CVector<T>) -> CVector<T> {
        let pw = self.power_table(x);
        let mut g = CVector::zeros(self.n);
        for (alpha, c) in &self.terms {
            for k in 0..self.n {
                if alpha[k] == 0 {
                    continue;
                }
                let mut mono = *c * from_usize::<T>(alpha[k]);
                for (j, &e) in alpha.iter().enumerate() {
                    mono *= pw[j][if j == k { e - 1 } else { e }];
                }
                g[k] += mono;
            }
        }
        g
    }

    /// `pw[k][e] = x_k^e` up to the largest exponent present.
    fn power_table(&self, x: &CVector<T>) -> Vec<Vec<Complex<T>>> {
        let top = self.terms.iter().flat_map(|(a, _)| a.iter().copied()).max().unwrap_or(0);
        (0..self.n)
            .map(|k| {
                let mut row = Vec::with_capacity(top + 1);
                row.push(c_re(T::one()));
                for e in 0..top {
                    row.push(row[e] * x[k]);
                }
                row
            })
            .collect()
    }

    /// Smallest total degree among the nonzero terms.
    pub fn vanishing_order(&self) -> Option<usize> {
        self.terms.iter().filter(|(_, c)| c.modulus() > T::zero()).map(|(a, _)| a.iter().sum()).min()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupNorm<T> {
    /// Best sampled value; a lower bound for the true supremum.
    pub value: T,
    /// Whether doubling the resolution changed the value by at most `1e-6` relative.
    pub stable: bool,
}

/// Sampled `sup |u|` over the closed ball `|x| ≤ radius` in `C^n`.
///
/// By the maximum principle only the sphere is sampled: equally spaced angles
/// for `n = 1`, seeded random points otherwise. The best samples are refined by
/// projected gradient ascent.
pub fn sup_norm_ball<T: Real>(u: &Polynomial<T>, radius: T, resolution: usize) -> SupNorm<T> {
    let a = sphere_max(u, radius, resolution.max(8));
    let b = sphere_max(u, radius, 2 * resolution.max(8));
    let value = a.max(b);
    let stable = (b - a).abs() <= lit::<T>(1e-6) * value;
    SupNorm { value, stable }
}

fn sphere_max<T: Real>(u: &Polynomial<T>, radius: T, samples: usize) -> T {
    let n = u.n;
    let mut points: Vec<CVector<T>> = if n == 1 {
        (0..samples)
            .map(|k| {
                let th = T::two_pi() * from_usize::<T>(k) / from_usize::<T>(samples);
                CVector::from_element(1, Complex::new(radius * th.cos(), radius * th.sin()))
            })
            .collect()
    } else {
        let mut rng = StdRng::seed_from_u64(0x5eed ^ samples as u64);
        (0..samples)
            .map(|_| {
                let v = CVector::from_fn(n, |_, _| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex::new(lit::<T>(re), lit::<T>(im))
                });
                let s = v.norm();
                v.map(|z| z * (radius / s))
            })
            .collect()
    };
    let mut scored: Vec<(T, usize)> = points.iter().enumerate().map(|(k, x)| (u.eval(x).modulus(), k)).collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite"));
    let mut best = scored[0].0;
    let keep: Vec<usize> = scored.iter().take(8).map(|s| s.1).collect();
    for k in keep {
        let refined = ascend(u, &mut points[k], radius);
        best = best.max(refined);
    }
    best
}

fn ascend<T: Real>(u: &Polynomial<T>, x: &mut CVector<T>, radius: T) -> T {
    let mut val = u.eval(x).modulus();
    let mut step = radius * lit::<T>(0.1);
    for _ in 0..200 {
        let ux = u.eval(x);
        let g = u.gradient(x).map(|d| d.conj() * ux);
        let gn = g.norm();
        if gn == T::zero() {
            break;
        }
        let trial = &*x + g.map(|z| z * (step / gn));
        let trial = trial.map(|z| z * (radius / trial.norm()));
        let tv = u.eval(&trial).modulus();
        if tv > val {
            *x = trial;
            val = tv;
            step *= lit(1.5);
        } else {
            step *= lit(0.5);
            if step < radius * lit::<T>(1e-13) {
                break;
            }
        }
    }
    val
}

/// Eigenvalue distance helper used by callers that need a scalar in `(0, ∞)`.
pub fn min_gap<T: Real>(values: &[Complex<T>], z: Complex<T>) -> T {
    values.iter().map(|v| (z - *v).modulus()).fold(T::max_value().unwrap_or_else(T::one), |a, b| a.min(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn complex_identity<T: Real>(d: usize) -> CMatrix<T> {
        CMatrix::identity(d, d)
    }

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn example_m() -> CMatrix<f64> {
        CMatrix::from_row_slice(2, 2, &[c(0.0, 1.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)])
    }

    fn shift(n: usize) -> CMatrix<f64> {
        CMatrix::from_fn(n, n, |i, j| if j == i + 1 { c(1.0, 0.0) } else { c(0.0, 0.0) })
    }

    #[test]
    fn basis_enumeration() {
        let b = enumerate_basis(2, 3);
        assert_eq!(b.indices, vec![vec![3, 0], vec![2, 1], vec![1, 2], vec![0, 3]]);
        assert_eq!(enumerate_basis(3, 2).len(), 6);
        assert_eq!(enumerate_basis(1, 7).indices, vec![vec![7]]);
        for n in 1..5 {
            for m in 0..10 {
                let b = enumerate_basis(n, m);
                assert_eq!(b.len(), nu(n, m));
                assert!(b.indices.iter().all(|a| a.iter().sum::<usize>() == m));
                assert!(b.indices.windows(2).all(|w| w[0] > w[1]));
            }
        }
    }

    #[test]
    fn weyl_block_examples() {
        let one = CMatrix::from_element(1, 1, c(0.0, 1.0));
        let b = weyl_block(&one, 0.5, 2);
        assert!((b.a[(0, 0)] - c(1.25, 0.0)).norm() < 1e-15);

        let h = 1.0;
        let b = weyl_block(&example_m(), h, 1);
        let expect = CMatrix::from_row_slice(2, 2, &[c(2.0 * h, 0.0), c(0.0, 0.0), c(0.0, -h), c(2.0 * h, 0.0)]);
        assert!((&b.a - expect).norm() < 1e-15);
        assert!(is_lower_triangular(&b.a));

        let zero = weyl_block(&CMatrix::<f64>::zeros(3, 3), 0.3, 4);
        assert!(zero.a.iter().all(|v| *v == c(0.0, 0.0)));
    }

    #[test]
    fn diagonal_m_gives_diagonal_block() {
        let lam = [c(0.5, 1.0), c(-0.2, 0.7)];
        let m = CMatrix::from_fn(2, 2, |i, j| if i == j { lam[i] * 2.0 } else { c(0.0, 0.0) });
        let h = 0.3;
        let b = weyl_block(&m, h, 3);
        for (k, a) in b.basis.indices.iter().enumerate() {
            let mu: Complex<f64> = (0..2).map(|j| lam[j] * (2.0 * a[j] as f64 + 1.0)).sum::<Complex<f64>>() * c(0.0, -h);
            assert!((b.a[(k, k)] - mu).norm() < 1e-14);
        }
        assert!(b.nilpotent_part().iter().all(|v| *v == c(0.0, 0.0)));
    }

    #[test]
    fn jordan_block_sparsity() {
        for n in 2..=3 {
            let m = CMatrix::identity(n, n) * c(0.0, 1.0) + shift(n);
            for deg in 0..8 {
                let b = weyl_block(&m, 0.1, deg);
                let nm = b.nilpotent_part();
                for k in 0..b.dim() {
                    assert!(nm.row(k).iter().filter(|v| v.norm() > 0.0).count() < n);
                    assert!(nm.column(k).iter().filter(|v| v.norm() > 0.0).count() < n);
                }
            }
        }
    }

    #[test]
    fn nilpotency_orders() {
        let pure = |n: usize, m: usize| weyl_block(&shift(n), 1.0, m).nilpotent_part();
        assert_eq!(nilpotent_order(&pure(2, 2), 1e-12).unwrap(), 3);
        assert_eq!(nilpotent_order(&pure(2, 3), 1e-12).unwrap(), 4);
        assert_eq!(nilpotent_order(&CMatrix::<f64>::zeros(3, 3), 1e-12).unwrap(), 1);
        let full = CMatrix::from_element(2, 2, c(1.0, 0.0));
        assert!(matches!(nilpotent_order(&full, 1e-12), Err(Error::NotNilpotent { .. })));
    }

    #[test]
    fn diagonal_block_resolvent() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 2.0)]);
        let b = weyl_block(&m, 0.2, 4);
        let z = c(0.9, 0.15);
        let expect = 1.0 / (0..b.dim()).map(|k| (z - b.a[(k, k)]).norm()).fold(f64::INFINITY, f64::min);
        assert_relative_eq!(resolvent_block(&b, z, None).unwrap(), expect, max_relative = 1e-12);
        assert!(matches!(resolvent_block(&b, b.a[(2, 2)], None), Err(Error::SpectralPointHit { .. })));
    }

    #[test]
    fn example_block_resolvent_on_first_vector() {
        let (m, h) = (2usize, 0.5);
        let b = weyl_block(&example_m(), h, m);
        let r = resolvent_matrix(&b.a, c(1.0, 0.0)).unwrap();
        let v = r.column(0).norm_squared();
        assert_relative_eq!(v, 28.0, max_relative = 1e-12);
        assert!(resolvent_block(&b, c(1.0, 0.0), None).unwrap() >= 28f64.sqrt());
    }

    #[test]
    fn identity_gram_matches_flat() {
        let b = weyl_block(&example_m(), 0.25, 3);
        let g = gram_matrix(&WeightForm::flat(2), 3..=3, &GramOptions::default()).unwrap();
        let z = c(0.3, -0.4);
        assert_relative_eq!(
            resolvent_block(&b, z, Some(&g)).unwrap(),
            resolvent_block(&b, z, None).unwrap(),
            max_relative = 1e-10
        );
    }

    #[test]
    fn neumann_series() {
        let b = weyl_block(&example_m(), 0.5, 1);
        let z = c(0.3, 0.2);
        let direct = inverse(&(complex_identity::<f64>(2) * z - &b.a)).unwrap();
        let series = neumann_resolvent_block(&b.diagonal_part(), &b.nilpotent_part(), z).unwrap();
        assert!((&series - &direct).norm() / direct.norm() < 1e-12);

        let d = b.diagonal_part();
        let plain = neumann_resolvent_block(&d, &CMatrix::zeros(2, 2), z).unwrap();
        let rd = CMatrix::from_fn(2, 2, |i, j| if i == j { c(1.0, 0.0) / (z - d[(i, i)]) } else { c(0.0, 0.0) });
        assert_eq!(plain, rd);

        let big = weyl_block(&example_m(), 0.5, 6);
        let z = c(1.0, 0.0);
        let direct = inverse(&(complex_identity::<f64>(7) * z - &big.a)).unwrap();
        let order = nilpotent_order(&big.nilpotent_part(), 1e-12).unwrap();
        let short = neumann_partial(&big.diagonal_part(), &big.nilpotent_part(), z, order - 1).unwrap();
        assert!((&short - &direct).norm() / direct.norm() > 1e-6);
    }

    #[test]
    fn gram_identity_and_radial() {
        let g = gram_matrix(&WeightForm::<f64>::flat(2), 0..=6, &GramOptions::default()).unwrap();
        assert!((&g.g - complex_identity::<f64>(g.dim())).norm() < 1e-10);

        // Φ = |x|²/C1 with C1 = 1, h = 1, α = 0 in one variable: π/2.
        let g = gram_matrix(&WeightForm::<f64>::radial(1, 1.0), 0..=4, &GramOptions::default()).unwrap();
        assert_relative_eq!(g.raw_entry(0, 0, 1.0).re, std::f64::consts::PI / 2.0, max_relative = 1e-12);
        for i in 0..g.dim() {
            for j in 0..g.dim() {
                if i != j {
                    assert!(g.g[(i, j)].norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn gram_nonradial_is_hermitian_positive() {
        let w = WeightForm::new(DMatrix::from_row_slice(2, 2, &[0.6, 0.1, 0.1, 0.45]));
        let g = gram_matrix(&w, 0..=8, &GramOptions::default()).unwrap();
        assert!((&g.g - g.g.adjoint()).norm() < 1e-12);
        assert!((&g.chol * g.chol.adjoint() - &g.g).norm() < 1e-10);
        assert!(matches!(
            gram_matrix(&w, 0..=80, &GramOptions { cap: 50, ..GramOptions::default() }),
            Err(Error::BasisTooLarge { .. })
        ));
    }

    #[test]
    fn gram_matches_quadrature() {
        // Independent check of one non-radial entry by a 2D tensor Gauss-Hermite-like Riemann sum.
        let w = WeightForm::new(DMatrix::from_row_slice(2, 2, &[0.7, 0.15, 0.15, 0.5]));
        let g = gram_matrix(&w, 0..=3, &GramOptions::default()).unwrap();
        let (steps, lim) = (801, 9.0);
        let dx = 2.0 * lim / (steps - 1) as f64;
        let mut acc = Complex::new(0.0, 0.0);
        for a in 0..steps {
            for b in 0..steps {
                let x = c(-lim + a as f64 * dx, -lim + b as f64 * dx);
                let phi = w.eval(&CVector::from_element(1, x));
                // (φ_1, φ_3) with normalizations π^{-1/2}(1)^{-1/2}, π^{-1/2}(3!)^{-1/2}
                acc += x * x.conj().powi(3) * (-2.0 * phi).exp();
            }
        }
        let quad = acc * dx * dx / (std::f64::consts::PI * 6f64.sqrt());
        // g[(i, j)] = (φ_j, φ_i): indices 1 ↔ degree 1, 3 ↔ degree 3
        assert!((g.g[(3, 1)] - quad).norm() < 1e-8, "{} vs {}", g.g[(3, 1)], quad);
    }

    #[test]
    fn tau_norms() {
        let t = projection_norm_tau(3, &WeightForm::<f64>::flat(2), 6, &GramOptions::default(), 1e-6).unwrap();
        assert_relative_eq!(t.norm, 1.0, max_relative = 1e-10);
        let t = projection_norm_tau(4, &WeightForm::<f64>::radial(1, 0.3), 8, &GramOptions::default(), 1e-6).unwrap();
        assert_relative_eq!(t.norm, 1.0, max_relative = 1e-10);
        assert!(t.converged);
    }

    #[test]
    fn vanishing_order_values() {
        assert_eq!(min_vanishing_order(1.0, 1.0, 1.0), 61);
        assert_eq!(min_vanishing_order(0.0, 1.0, 1.0), 16);
        let a = min_vanishing_order(1.0, 2.0, 0.1);
        let b = min_vanishing_order(1.0, 2.0, 0.05);
        assert!((b as i64 - 2 * a as i64).abs() <= 1);
    }

    #[test]
    fn sup_norm_examples() {
        let x = Polynomial { n: 1, terms: vec![(vec![1], c(1.0, 0.0))] };
        assert_relative_eq!(sup_norm_ball(&x, 1.0, 64).value, 1.0, max_relative = 1e-12);
        let x2 = Polynomial { n: 1, terms: vec![(vec![2], c(1.0, 0.0))] };
        assert_relative_eq!(sup_norm_ball(&x2, 2.0, 64).value, 4.0, max_relative = 1e-12);
        // x1·x2 on the unit sphere of C² peaks at 1/2.
        let p = Polynomial { n: 2, terms: vec![(vec![1, 1], c(1.0, 0.0))] };
        let s = sup_norm_ball(&p, 1.0, 256);
        assert_relative_eq!(s.value, 0.5, max_relative = 1e-8);
        assert!(s.stable);
    }

    #[test]
    fn truncation_eigenvalues_match_oscillator() {
        let t = FockTruncation::new(&CMatrix::from_element(1, 1, c(0.0, 1.0)), 0.1, 21);
        let ev = t.eigenvalues().unwrap();
        for (k, v) in ev.iter().enumerate() {
            assert_relative_eq!(v.re, 0.1 * (k as f64 + 0.5), max_relative = 1e-12);
        }
        assert_eq!(t.nu_total(), 21);
    }
}
