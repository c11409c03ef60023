//! Dense linear-algebra helpers on top of nalgebra: Hermitian and real
//! symmetric spectra, SVD extremes, triangular solves and an ordered complex
//! Schur decomposition.

use nalgebra::{Complex, ComplexField, DMatrix, DVector, Schur, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::{c_re, from_usize, lit, to_f64, Real};

pub type CMatrix<T> = DMatrix<Complex<T>>;
pub type CVector<T> = DVector<Complex<T>>;

/// Promotes a real matrix to a complex one.
pub fn complexify<T: Real>(m: &DMatrix<T>) -> CMatrix<T> {
    m.map(c_re)
}

pub fn real_part<T: Real>(m: &CMatrix<T>) -> DMatrix<T> {
    m.map(|z| z.re)
}

pub fn imag_part<T: Real>(m: &CMatrix<T>) -> DMatrix<T> {
    m.map(|z| z.im)
}

/// Eigenvalues of a real symmetric matrix in ascending order.
pub fn sym_eigenvalues<T: Real>(m: &DMatrix<T>) -> Vec<T> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let sym = (m + m.transpose()) * lit::<T>(0.5);
    let mut ev: Vec<T> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    ev
}

/// Eigen-decomposition of a Hermitian matrix; eigenvalues ascending, columns
/// of the returned matrix are the matching unit eigenvectors.
pub fn hermitian_eigen<T: Real>(m: &CMatrix<T>) -> (Vec<T>, CMatrix<T>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let herm = (m + m.adjoint()) * c_re(lit::<T>(0.5));
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .expect("finite eigenvalues")
    });
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Singular values in descending order.
pub fn singular_values<T: Real>(m: &CMatrix<T>) -> Vec<T> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<T> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
    s
}

pub fn spectral_norm<T: Real>(m: &CMatrix<T>) -> T {
    singular_values(m).first().copied().unwrap_or_else(T::zero)
}

pub fn condition_number<T: Real>(m: &CMatrix<T>) -> T {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > T::zero() => hi / lo,
        _ => T::max_value().unwrap_or_else(|| lit(f64::MAX)),
    }
}

/// Symmetric positive definite square root `S^(1/2)` (and its inverse when
/// `inverse` is set).
pub fn spd_power_half<T: Real>(m: &DMatrix<T>, inverse: bool) -> Result<DMatrix<T>> {
    let sym = (m + m.transpose()) * lit::<T>(0.5);
    let eig = SymmetricEigen::new(sym);
    let n = m.nrows();
    let mut d = DMatrix::zeros(n, n);
    for k in 0..n {
        let l = eig.eigenvalues[k];
        if l <= T::zero() {
            return Err(Error::NotPositiveDefinite { min_eig: to_f64(l) });
        }
        d[(k, k)] = if inverse { T::one() / l.sqrt() } else { l.sqrt() };
    }
    let v = &eig.eigenvectors;
    Ok(v * d * v.transpose())
}

pub fn is_lower_triangular<T: Real>(m: &CMatrix<T>) -> bool {
    (0..m.nrows()).all(|i| (i + 1..m.ncols()).all(|j| m[(i, j)] == Complex::new(T::zero(), T::zero())))
}

pub fn is_upper_triangular<T: Real>(m: &CMatrix<T>) -> bool {
    (0..m.nrows()).all(|i| (0..i.min(m.ncols())).all(|j| m[(i, j)] == Complex::new(T::zero(), T::zero())))
}

/// Solves `L X = B` for lower triangular `L` by forward substitution.
pub fn solve_lower<T: Real>(l: &CMatrix<T>, b: &CMatrix<T>) -> Option<CMatrix<T>> {
    let n = l.nrows();
    let mut x = b.clone();
    for c in 0..b.ncols() {
        for i in 0..n {
            let mut acc = x[(i, c)];
            for k in 0..i {
                acc -= l[(i, k)] * x[(k, c)];
            }
            let d = l[(i, i)];
            if d.norm_sqr() == T::zero() {
                return None;
            }
            x[(i, c)] = acc / d;
        }
    }
    Some(x)
}

/// Solves `U X = B` for upper triangular `U` by back substitution.
pub fn solve_upper<T: Real>(u: &CMatrix<T>, b: &CMatrix<T>) -> Option<CMatrix<T>> {
    let n = u.nrows();
    let mut x = b.clone();
    for c in 0..b.ncols() {
        for i in (0..n).rev() {
            let mut acc = x[(i, c)];
            for k in i + 1..n {
                acc -= u[(i, k)] * x[(k, c)];
            }
            let d = u[(i, i)];
            if d.norm_sqr() == T::zero() {
                return None;
            }
            x[(i, c)] = acc / d;
        }
    }
    Some(x)
}

/// Inverse with an exact triangular fast path. Triangular systems keep
/// componentwise accuracy even when the condition number is astronomically
/// large, which the resolvent computations rely on.
pub fn inverse<T: Real>(m: &CMatrix<T>) -> Option<CMatrix<T>> {
    let n = m.nrows();
    let id = CMatrix::<T>::identity(n, n);
    if is_lower_triangular(m) {
        solve_lower(m, &id)
    } else if is_upper_triangular(m) {
        solve_upper(m, &id)
    } else {
        m.clone().lu().try_inverse()
    }
}

/// Complex Schur form `M = Q T Q^H` with `T` upper triangular.
pub fn complex_schur<T: Real>(m: &CMatrix<T>) -> Result<(CMatrix<T>, CMatrix<T>)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((CMatrix::zeros(0, 0), CMatrix::zeros(0, 0)));
    }
    let schur = Schur::try_new(m.clone(), T::epsilon(), 10_000 * n).ok_or(Error::SchurFailure)?;
    let (q, mut t) = schur.unpack();
    for i in 0..n {
        for j in 0..i {
            t[(i, j)] = Complex::new(T::zero(), T::zero());
        }
    }
    Ok((q, t))
}

/// Eigenvalues of a general complex matrix (diagonal of its Schur form).
pub fn eigenvalues<T: Real>(m: &CMatrix<T>) -> Result<Vec<Complex<T>>> {
    let (_, t) = complex_schur(m)?;
    Ok((0..t.nrows()).map(|k| t[(k, k)]).collect())
}

/// Swaps the diagonal entries `p`, `p+1` of the triangular factor with a
/// unitary rotation, updating `Q` so that `Q T Q^H` is unchanged.
fn swap_adjacent<T: Real>(q: &mut CMatrix<T>, t: &mut CMatrix<T>, p: usize) {
    let n = t.nrows();
    let a = t[(p, p)];
    let b = t[(p + 1, p + 1)];
    let v0 = t[(p, p + 1)];
    let v1 = b - a;
    let nv = (v0.norm_sqr() + v1.norm_sqr()).sqrt();
    if nv == T::zero() {
        return;
    }
    // G = [[c0, -conj(c1)], [c1, conj(c0)]], first column the eigenvector for b.
    let c0 = v0.unscale(nv);
    let c1 = v1.unscale(nv);
    let (g00, g01, g10, g11) = (c0, -c1.conj(), c1, c0.conj());
    for j in 0..n {
        let x = t[(p, j)];
        let y = t[(p + 1, j)];
        t[(p, j)] = g00.conj() * x + g10.conj() * y;
        t[(p + 1, j)] = g01.conj() * x + g11.conj() * y;
    }
    for i in 0..n {
        let x = t[(i, p)];
        let y = t[(i, p + 1)];
        t[(i, p)] = x * g00 + y * g10;
        t[(i, p + 1)] = x * g01 + y * g11;
        let x = q[(i, p)];
        let y = q[(i, p + 1)];
        q[(i, p)] = x * g00 + y * g10;
        q[(i, p + 1)] = x * g01 + y * g11;
    }
    t[(p + 1, p)] = Complex::new(T::zero(), T::zero());
    t[(p, p)] = b;
    t[(p + 1, p + 1)] = a;
}

/// Ordered Schur decomposition: reorders `(q, t)` so that every diagonal entry
/// accepted by `select` comes first. Returns the number of selected entries;
/// the leading columns of `q` then span the invariant subspace belonging to
/// the selected eigenvalues.
///
/// Fails when a selected eigenvalue is closer than `sep_tol * ‖T‖` to an
/// unselected one, since the invariant subspace is then ill-determined.
pub fn reorder_schur<T: Real>(
    q: &mut CMatrix<T>,
    t: &mut CMatrix<T>,
    select: impl Fn(usize, Complex<T>) -> bool,
    sep_tol: T,
) -> Result<usize> {
    let n = t.nrows();
    let flags: Vec<bool> = (0..n).map(|j| select(j, t[(j, j)])).collect();
    let scale = t.norm().max(T::one());
    for i in 0..n {
        for j in 0..n {
            if flags[i] && !flags[j] && (t[(i, i)] - t[(j, j)]).modulus() <= sep_tol * scale {
                return Err(Error::SchurReorderFailure(format!(
                    "selected eigenvalue {} too close to unselected {}",
                    t[(i, i)],
                    t[(j, j)]
                )));
            }
        }
    }
    let mut placed = 0;
    for (j, &flag) in flags.iter().enumerate() {
        if flag {
            for p in (placed..j).rev() {
                swap_adjacent(q, t, p);
            }
            placed += 1;
        }
    }
    Ok(placed)
}

/// Eigenvectors of `Q T Q^H` (unit columns) from its Schur factors.
pub fn eigenvectors_from_schur<T: Real>(q: &CMatrix<T>, t: &CMatrix<T>) -> CMatrix<T> {
    let n = t.nrows();
    let small = T::epsilon() * t.norm().max(T::one());
    let mut x = CMatrix::<T>::zeros(n, n);
    for k in 0..n {
        let lam = t[(k, k)];
        x[(k, k)] = c_re(T::one());
        for j in (0..k).rev() {
            let mut acc = Complex::new(T::zero(), T::zero());
            for l in j + 1..=k {
                acc += t[(j, l)] * x[(l, k)];
            }
            let mut d = t[(j, j)] - lam;
            if d.modulus() < small {
                d = c_re(small);
            }
            x[(j, k)] = -acc / d;
        }
        let nrm = x.column(k).norm();
        x.column_mut(k).unscale_mut(nrm);
    }
    q * x
}

/// Orthonormal basis of the column space of `m` (thin QR).
pub fn orthonormalize<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    let qr = m.clone().qr();
    qr.q().columns(0, m.ncols()).into_owned()
}

/// Largest entry modulus.
pub fn max_abs<T: Real>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(z.modulus()))
}

pub fn max_abs_real<T: Real>(m: &DMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(z.abs()))
}

/// Trace divided by dimension (for jitter scaling).
pub fn mean_diag<T: Real>(m: &CMatrix<T>) -> T {
    let n = m.nrows();
    if n == 0 {
        return T::zero();
    }
    (0..n).fold(T::zero(), |acc, k| acc + m[(k, k)].re) / from_usize(n)
}
