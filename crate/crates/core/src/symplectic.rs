//! Complex quadratic forms on phase space `R^n_x × R^n_ξ`, their ellipticity
//! and range sector, and the Hamilton map.
//!
//! Coordinates are ordered `(x_1..x_n, ξ_1..ξ_n)`. The symplectic form is
//! fixed once for the whole crate:
//!
//! ```text
//! σ((x, ξ), (y, η)) = ξ·y − x·η = Xᵀ J Y,   J = [[0, −I], [I, 0]]
//! ```

use std::f64::consts::PI;

use nalgebra::{Complex, ComplexField, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{max_abs, real_part, imag_part, sym_eigenvalues, CMatrix, CVector};
use crate::scalar::{c_re, from_usize, lit, to_f64, Real, Tolerances};

/// The matrix `J` of the symplectic form on `C^{2n}`.
pub fn symplectic_j<T: Real>(n: usize) -> CMatrix<T> {
    let mut j = CMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(k, n + k)] = c_re(-T::one());
        j[(n + k, k)] = c_re(T::one());
    }
    j
}

/// `σ(X, Y)` for complex phase-space vectors (bilinear, no conjugation).
pub fn sigma<T: Real>(x: &CVector<T>, y: &CVector<T>) -> Complex<T> {
    let n = x.len() / 2;
    let mut acc = Complex::new(T::zero(), T::zero());
    for k in 0..n {
        acc += x[n + k] * y[k] - x[k] * y[n + k];
    }
    acc
}

/// Residual of `KᵀJK = J` (largest entry modulus).
pub fn symplectic_residual<T: Real>(k: &CMatrix<T>) -> T {
    let j = symplectic_j::<T>(k.nrows() / 2);
    max_abs(&(k.transpose() * &j * k - j))
}

/// A complex quadratic form `q(X) = Xᵀ Q X` on `R^{2n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticForm<T: Real> {
    n: usize,
    q: CMatrix<T>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipticCheck<T> {
    pub is_normalized: bool,
    pub min_eig_re: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rotation<T: Real> {
    pub lambda: Complex<T>,
    pub rotated: QuadraticForm<T>,
}

/// Closed angular sector `Σ(q) = q(R^{2n})`, bounded by two angles in radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sector<T> {
    pub theta_min: T,
    pub theta_max: T,
}

impl<T: Real> Sector<T> {
    /// Whether `arg z` lies within the sector inflated by `eps` radians.
    pub fn contains_arg(&self, z: Complex<T>, eps: T) -> bool {
        let a = z.im.atan2(z.re);
        a >= self.theta_min - eps && a <= self.theta_max + eps
    }
}

impl<T: Real> QuadraticForm<T> {
    /// Builds a form from its coefficient matrix, symmetrizing it.
    pub fn new(q: CMatrix<T>) -> Result<Self> {
        if q.nrows() != q.ncols() || !q.nrows().is_multiple_of(2) || q.nrows() == 0 {
            return Err(Error::InvalidArgument(format!(
                "coefficient matrix must be 2n×2n, got {}×{}",
                q.nrows(),
                q.ncols()
            )));
        }
        let n = q.nrows() / 2;
        let q = (&q + q.transpose()) * c_re(lit::<T>(0.5));
        Ok(Self { n, q })
    }

    /// Like [`QuadraticForm::new`] but rejects input whose antisymmetric part
    /// exceeds `tol` relative to `max(1, max|Q|)`.
    pub fn try_symmetric(q: CMatrix<T>, tol: T) -> Result<Self> {
        if q.nrows() == q.ncols() {
            let resid = max_abs(&(&q - q.transpose())) / max_abs(&q).max(T::one());
            if resid > tol {
                return Err(Error::NotSymmetric { residual: to_f64(resid) });
            }
        }
        Self::new(q)
    }

    /// Convenience constructor from a real matrix.
    pub fn from_real(q: DMatrix<T>) -> Result<Self> {
        Self::new(q.map(c_re))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.q
    }

    fn check_dim(&self, x: &CVector<T>) -> Result<()> {
        if x.len() != 2 * self.n {
            return Err(Error::DimensionMismatch { expected: 2 * self.n, got: x.len() });
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &CVector<T>) -> Result<Complex<T>> {
        self.polarization(x, x)
    }

    /// The symmetric bilinear form `q(X, Y) = Xᵀ Q Y`.
    pub fn polarization(&self, x: &CVector<T>, y: &CVector<T>) -> Result<Complex<T>> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        Ok((x.transpose() * &self.q * y)[(0, 0)])
    }

    pub fn scaled(&self, lambda: Complex<T>) -> Self {
        Self { n: self.n, q: &self.q * lambda }
    }

    /// Reports whether `Re Q` is positive definite beyond `tol`.
    pub fn check_elliptic(&self, tol: T) -> EllipticCheck<T> {
        let min = sym_eigenvalues(&real_part(&self.q))[0];
        EllipticCheck { is_normalized: min > tol, min_eig_re: min }
    }

    fn rotation_margin(&self, theta: T) -> T {
        let rot = Complex::new(theta.cos(), theta.sin());
        sym_eigenvalues(&real_part(&(&self.q * rot)))[0]
    }

    /// Finds `λ = e^{iθ}` such that `Re(λQ)` is positive definite.
    ///
    /// Scans `steps ≥ 720` angles, then refines the best one by golden-section
    /// search on the definiteness margin.
    pub fn normalize_rotation(&self, tol: T, steps: usize) -> Result<Rotation<T>> {
        if self.check_elliptic(tol).is_normalized {
            return Ok(Rotation { lambda: c_re(T::one()), rotated: self.clone() });
        }
        let steps = steps.max(720);
        let two_pi: T = lit(2.0 * PI);
        let dtheta = two_pi / from_usize(steps);
        let (mut best_k, mut best) = (0, self.rotation_margin(T::zero()));
        for k in 1..steps {
            let m = self.rotation_margin(dtheta * from_usize(k));
            if m > best {
                best = m;
                best_k = k;
            }
        }
        let center = dtheta * from_usize(best_k);
        let (mut a, mut b) = (center - dtheta, center + dtheta);
        let g: T = lit(0.618_033_988_749_894_8);
        let mut c = b - (b - a) * g;
        let mut d = a + (b - a) * g;
        let (mut fc, mut fd) = (self.rotation_margin(c), self.rotation_margin(d));
        for _ in 0..200 {
            if (b - a).abs() < lit(1e-14) {
                break;
            }
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - (b - a) * g;
                fc = self.rotation_margin(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + (b - a) * g;
                fd = self.rotation_margin(d);
            }
        }
        let theta = (a + b) * lit(0.5);
        let margin = self.rotation_margin(theta);
        let (theta, margin) = if margin >= best { (theta, margin) } else { (center, best) };
        if margin <= tol {
            return Err(Error::NoRotationFound { best_margin: to_f64(margin) });
        }
        let lambda = Complex::new(theta.cos(), theta.sin());
        Ok(Rotation { lambda, rotated: self.scaled(lambda) })
    }

    /// The Hamilton map `F = J⁻¹ Q`, characterized by `σ(X, FY) = q(X, Y)`.
    pub fn hamilton_map(&self) -> HamiltonMap<T> {
        let n = self.n;
        // J⁻¹ = −J = [[0, I], [−I, 0]]
        let mut f = CMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..2 * n {
                f[(i, j)] = self.q[(n + i, j)];
                f[(n + i, j)] = -self.q[(i, j)];
            }
        }
        HamiltonMap { n, f }
    }

    /// Gradient of `q` at `y` by central differences of [`Self::evaluate`]
    /// (exact for quadratics up to rounding).
    pub fn gradient_fd(&self, y: &CVector<T>) -> Result<CVector<T>> {
        self.check_dim(y)?;
        let step: T = lit(0.5);
        let mut g = CVector::zeros(2 * self.n);
        for k in 0..2 * self.n {
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp[k] += c_re(step);
            ym[k] -= c_re(step);
            g[k] = (self.evaluate(&yp)? - self.evaluate(&ym)?).unscale(step + step);
        }
        Ok(g)
    }

    /// Hamilton field `H_q(Y) = (∂_ξ q, −∂_x q)` assembled from the gradient.
    pub fn hamilton_field(&self, y: &CVector<T>) -> Result<CVector<T>> {
        let g = self.gradient_fd(y)?;
        let n = self.n;
        let mut h = CVector::zeros(2 * n);
        for k in 0..n {
            h[k] = g[n + k];
            h[n + k] = -g[k];
        }
        Ok(h)
    }

    /// Range sector of a normalized form from `samples` points of the real
    /// unit sphere, refined by local Rayleigh–Ritz ascent.
    pub fn sector(&self, samples: usize, tol: T) -> Result<Sector<T>> {
        let check = self.check_elliptic(tol);
        if !check.is_normalized {
            return Err(Error::NotNormalized { min_eig: to_f64(check.min_eig_re) });
        }
        let a = real_part(&self.q);
        let b = imag_part(&self.q);
        let dim = 2 * self.n;
        let points = sphere_samples::<T>(dim, samples.max(1));
        let ratio = |x: &DVector<T>| x.dot(&(&b * x)) / x.dot(&(&a * x));
        let mut best_hi = (T::min_value().unwrap(), points[0].clone());
        let mut best_lo = (T::max_value().unwrap(), points[0].clone());
        for p in &points {
            let r = ratio(p);
            if r > best_hi.0 {
                best_hi = (r, p.clone());
            }
            if r < best_lo.0 {
                best_lo = (r, p.clone());
            }
        }
        let neg_b = -&b;
        let hi = ritz_ascent(&a, &b, best_hi.1).max(best_hi.0);
        let lo = -ritz_ascent(&a, &neg_b, best_lo.1).max(-best_lo.0);
        Ok(Sector { theta_min: lo.atan(), theta_max: hi.atan() })
    }
}

/// Deterministic quasi-uniform points on the unit sphere of `R^dim`.
fn sphere_samples<T: Real>(dim: usize, count: usize) -> Vec<DVector<T>> {
    if dim == 2 {
        return (0..count)
            .map(|k| {
                let t = 2.0 * PI * (k as f64 + 0.5) / count as f64;
                DVector::from_vec(vec![lit(t.cos()), lit(t.sin())])
            })
            .collect();
    }
    // Halton points pushed through Box–Muller give an isotropic sample.
    let primes = [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];
    let halton = |mut i: u64, base: u64| {
        let mut f = 1.0;
        let mut r = 0.0;
        while i > 0 {
            f /= base as f64;
            r += f * (i % base) as f64;
            i /= base;
        }
        r
    };
    let mut out = Vec::with_capacity(count);
    for k in 0..count as u64 {
        let mut v = Vec::with_capacity(dim);
        for d in (0..dim).step_by(2) {
            let u1 = halton(k + 1, primes[d % primes.len()]).max(1e-300);
            let u2 = halton(k + 1, primes[(d + 1) % primes.len()]);
            let rad = (-2.0 * u1.ln()).sqrt();
            v.push(rad * (2.0 * PI * u2).cos());
            if d + 1 < dim {
                v.push(rad * (2.0 * PI * u2).sin());
            }
        }
        let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        out.push(DVector::from_iterator(dim, v.iter().map(|x| lit::<T>(x / nrm))));
    }
    out
}

/// Maximizes `xᵀBx / xᵀAx` (A positive definite) from `x0` by repeated
/// Rayleigh–Ritz steps on `span{x, gradient}`. Returns the attained ratio.
fn ritz_ascent<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>, x0: DVector<T>) -> T {
    let mut x = x0.normalize();
    let mut r = x.dot(&(b * &x)) / x.dot(&(a * &x));
    for _ in 0..500 {
        let g = b * &x - a * &x * r;
        let mut g = &g - &x * x.dot(&g);
        let gn = g.norm();
        if gn <= lit::<T>(1e-15) * (b.norm() + a.norm() * r.abs()).max(T::one()) {
            break;
        }
        g /= gn;
        let ax = a * &x;
        let ag = a * &g;
        let bx = b * &x;
        let bg = b * &g;
        let (a11, a12, a22) = (x.dot(&ax), x.dot(&ag), g.dot(&ag));
        let (b11, b12, b22) = (x.dot(&bx), x.dot(&bg), g.dot(&bg));
        // det(B2 − μ A2) = 0
        let qa = a11 * a22 - a12 * a12;
        let qb = -(a11 * b22 + a22 * b11 - (a12 * b12 + a12 * b12));
        let qc = b11 * b22 - b12 * b12;
        let disc = (qb * qb - lit::<T>(4.0) * qa * qc).max(T::zero()).sqrt();
        let mu = (-qb + disc) / (qa + qa);
        let r1 = (-(b12 - mu * a12), b11 - mu * a11);
        let r2 = (b22 - mu * a22, -(b12 - mu * a12));
        let (c1, c2) = if r1.0 * r1.0 + r1.1 * r1.1 >= r2.0 * r2.0 + r2.1 * r2.1 { r1 } else { r2 };
        let cand = (&x * c1 + &g * c2).normalize();
        let rc = cand.dot(&(b * &cand)) / cand.dot(&(a * &cand));
        if rc <= r {
            break;
        }
        x = cand;
        r = rc;
    }
    r
}

/// The Hamilton map of a quadratic form.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonMap<T: Real> {
    n: usize,
    f: CMatrix<T>,
}

impl<T: Real> HamiltonMap<T> {
    pub fn from_matrix(f: CMatrix<T>) -> Result<Self> {
        if f.nrows() != f.ncols() || !f.nrows().is_multiple_of(2) {
            return Err(Error::InvalidArgument("Hamilton map must be 2n×2n".into()));
        }
        Ok(Self { n: f.nrows() / 2, f })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.f
    }

    pub fn apply(&self, y: &CVector<T>) -> CVector<T> {
        &self.f * y
    }

    /// `max |σ(e_i, F e_j) − q(e_i, e_j)|` over the standard basis.
    pub fn identity_residual(&self, form: &QuadraticForm<T>) -> T {
        let j = symplectic_j::<T>(self.n);
        max_abs(&(j * &self.f - form.matrix()))
    }

    /// `max |σ(F e_i, e_j) + σ(e_i, F e_j)|` over the standard basis.
    pub fn skew_residual(&self) -> T {
        let j = symplectic_j::<T>(self.n);
        max_abs(&(self.f.transpose() * &j + &j * &self.f))
    }

    pub fn norm(&self) -> T {
        self.f.norm()
    }
}

impl<T: Real> Default for Sector<T> {
    fn default() -> Self {
        Self { theta_min: T::zero(), theta_max: T::zero() }
    }
}

/// Default ellipticity threshold for the scalar type.
pub fn definiteness_tol<T: Real>() -> T {
    lit(Tolerances::for_scalar::<T>().definiteness)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cplx;
    use approx::assert_abs_diff_eq;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn diag_form(a: f64, b: f64) -> QuadraticForm<f64> {
        QuadraticForm::from_real(DMatrix::from_row_slice(2, 2, &[a, 0.0, 0.0, b])).unwrap()
    }

    fn vec2(a: f64, b: f64) -> CVector<f64> {
        CVector::from_vec(vec![cplx(a, 0.0), cplx(b, 0.0)])
    }

    fn random_form(rng: &mut StdRng, n: usize) -> QuadraticForm<f64> {
        let d = 2 * n;
        let g = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
        let s1 = &g * g.transpose() + DMatrix::identity(d, d) * 0.5;
        let s2 = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-0.2..0.2));
        let s2 = (&s2 + s2.transpose()) * 0.5;
        let theta: f64 = rng.gen_range(-3.0..3.0);
        let q = CMatrix::from_fn(d, d, |i, j| Complex::new(s1[(i, j)], s2[(i, j)]));
        QuadraticForm::new(q * Complex::from_polar(1.0, theta)).unwrap()
    }

    #[test]
    fn evaluate_oscillator() {
        let q = diag_form(0.5, 0.5);
        assert_abs_diff_eq!(q.evaluate(&vec2(1.0, 0.0)).unwrap().re, 0.5);
        assert_abs_diff_eq!(q.evaluate(&vec2(1.0, 1.0)).unwrap().re, 1.0);
        assert_eq!(q.evaluate(&vec2(0.0, 0.0)).unwrap(), cplx(0.0, 0.0));
        assert!(matches!(
            q.evaluate(&CVector::zeros(3)),
            Err(Error::DimensionMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn asymmetric_input_rejected() {
        let m = CMatrix::from_row_slice(2, 2, &[cplx(1.0, 0.0), cplx(1.0, 0.0), cplx(0.0, 0.0), cplx(1.0, 0.0)]);
        assert!(matches!(QuadraticForm::try_symmetric(m, 1e-12), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn ellipticity_examples() {
        let c = diag_form(0.5, 0.5).check_elliptic(1e-10);
        assert!(c.is_normalized);
        assert_abs_diff_eq!(c.min_eig_re, 0.5, epsilon = 1e-14);
        assert!(!diag_form(0.5, -0.5).check_elliptic(1e-10).is_normalized);
        let rot = diag_form(0.5, 0.5).scaled(cplx(1.0, 1.0));
        let c = rot.check_elliptic(1e-10);
        assert!(c.is_normalized);
        assert_abs_diff_eq!(c.min_eig_re, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn rotation_examples() {
        let id = diag_form(0.5, 0.5).normalize_rotation(1e-10, 720).unwrap();
        assert_eq!(id.lambda, cplx(1.0, 0.0));

        let q = diag_form(0.5, 0.5).scaled(cplx(0.0, 1.0));
        let r = q.normalize_rotation(1e-10, 720).unwrap();
        assert!((r.lambda - cplx(0.0, -1.0)).norm() < 1e-7);
        let re = real_part(r.rotated.matrix());
        assert!((re - DMatrix::identity(2, 2) * 0.5).norm() < 1e-9);

        assert!(matches!(
            diag_form(0.5, -0.5).normalize_rotation(1e-10, 720),
            Err(Error::NoRotationFound { .. })
        ));
    }

    #[test]
    fn rotation_normalizes_random_elliptic_forms() {
        let mut rng = StdRng::seed_from_u64(7);
        for k in 0..100 {
            let q = random_form(&mut rng, 1 + k % 3);
            let r = q.normalize_rotation(1e-10, 720).unwrap();
            assert!(r.rotated.check_elliptic(1e-10).is_normalized);
        }
    }

    #[test]
    fn hamilton_map_examples() {
        let f = diag_form(0.5, 0.5).hamilton_map();
        let expect = CMatrix::from_row_slice(2, 2, &[cplx(0.0, 0.0), cplx(0.5, 0.0), cplx(-0.5, 0.0), cplx(0.0, 0.0)]);
        assert!((f.matrix() - expect).norm() < 1e-15);

        let xxi = QuadraticForm::from_real(DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0])).unwrap();
        let f = xxi.hamilton_map();
        let mut ev = crate::linalg::eigenvalues(f.matrix()).unwrap();
        ev.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((ev[0] - cplx(-0.5, 0.0)).norm() < 1e-14);
        assert!((ev[1] - cplx(0.5, 0.0)).norm() < 1e-14);
        assert_eq!(f.matrix()[(0, 0)], f.matrix()[(1, 1)] * -1.0);

        let zero = QuadraticForm::<f64>::new(CMatrix::zeros(4, 4)).unwrap();
        assert_eq!(zero.hamilton_map().matrix(), &CMatrix::zeros(4, 4));
    }

    #[test]
    fn hamilton_map_invariants_on_random_forms() {
        let mut rng = StdRng::seed_from_u64(11);
        for k in 0..30 {
            let n = 1 + k % 3;
            let q = random_form(&mut rng, n);
            let f = q.hamilton_map();
            let scale = 1.0 + max_abs(q.matrix());
            assert!(f.identity_residual(&q) <= 1e-12 * scale);
            assert!(f.skew_residual() <= 1e-12 * scale);
            // Basis check of σ(X, FY) = q(X, Y) through `sigma` itself.
            for i in 0..2 * n {
                for j in 0..2 * n {
                    let ei = CVector::from_fn(2 * n, |r, _| cplx(if r == i { 1.0 } else { 0.0 }, 0.0));
                    let ej = CVector::from_fn(2 * n, |r, _| cplx(if r == j { 1.0 } else { 0.0 }, 0.0));
                    let lhs = sigma(&ei, &f.apply(&ej));
                    let rhs = q.polarization(&ei, &ej).unwrap();
                    assert!((lhs - rhs).norm() <= 1e-12 * scale);
                }
            }
            let y = CVector::from_fn(2 * n, |_, _| cplx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let half_h = q.hamilton_field(&y).unwrap() * cplx(0.5, 0.0);
            assert!((half_h - f.apply(&y)).norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn sector_examples() {
        let s = diag_form(0.5, 0.5).sector(400, 1e-10).unwrap();
        assert_abs_diff_eq!(s.theta_min, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.theta_max, 0.0, epsilon = 1e-14);

        let s = diag_form(0.5, 0.5).scaled(cplx(1.0, 1.0)).sector(400, 1e-10).unwrap();
        assert_abs_diff_eq!(s.theta_min, PI / 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.theta_max, PI / 4.0, epsilon = 1e-12);

        let q = QuadraticForm::new(CMatrix::from_row_slice(
            2,
            2,
            &[cplx(0.5, 0.0), cplx(0.0, 0.0), cplx(0.0, 0.0), cplx(0.5, 0.5)],
        ))
        .unwrap();
        let s = q.sector(400, 1e-10).unwrap();
        // One-parameter oracle: arg of (cos²t + (1+i) sin²t)/2 over a fine circle grid.
        let (mut lo, mut hi) = (f64::MAX, f64::MIN);
        for k in 0..200_000 {
            let t = 2.0 * PI * k as f64 / 200_000.0;
            let z = Complex::new(t.cos().powi(2) + t.sin().powi(2), t.sin().powi(2));
            lo = lo.min(z.arg());
            hi = hi.max(z.arg());
        }
        assert_abs_diff_eq!(s.theta_min, lo, epsilon = 1e-9);
        assert_abs_diff_eq!(s.theta_max, hi, epsilon = 1e-9);
        assert_abs_diff_eq!(s.theta_max, PI / 4.0, epsilon = 1e-9);

        assert!(matches!(diag_form(0.5, -0.5).sector(10, 1e-10), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn sector_is_stable_under_resampling() {
        let mut rng = StdRng::seed_from_u64(3);
        for k in 0..20 {
            let q = random_form(&mut rng, 1 + k % 3);
            let q = q.normalize_rotation(1e-10, 720).unwrap().rotated;
            let s1 = q.sector(500, 1e-10).unwrap();
            let s2 = q.sector(1000, 1e-10).unwrap();
            assert_abs_diff_eq!(s1.theta_min, s2.theta_min, epsilon = 1e-8);
            assert_abs_diff_eq!(s1.theta_max, s2.theta_max, epsilon = 1e-8);
            // Closed-form oracle: extreme generalized eigenvalues of (Im Q, Re Q).
            let a = real_part(q.matrix());
            let b = imag_part(q.matrix());
            let ai = crate::linalg::spd_power_half(&a, true).unwrap();
            let ev = sym_eigenvalues(&(&ai * b * &ai));
            assert_abs_diff_eq!(s1.theta_min, ev[0].atan(), epsilon = 1e-8);
            assert_abs_diff_eq!(s1.theta_max, ev[ev.len() - 1].atan(), epsilon = 1e-8);
        }
    }
}
