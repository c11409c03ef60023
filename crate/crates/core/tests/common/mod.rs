#![allow(dead_code)]

use nalgebra::{Complex, DMatrix};
use quadspec::linalg::CMatrix;
use quadspec::symplectic::QuadraticForm;
use quadspec::Tolerances;
use rand::rngs::StdRng;
use rand::Rng;

pub fn c(re: f64, im: f64) -> Complex<f64> {
    Complex::new(re, im)
}

/// A random elliptic form, rotated so that `Re Q > 0`.
pub fn random_elliptic(rng: &mut StdRng, n: usize) -> QuadraticForm<f64> {
    let d = 2 * n;
    let g = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    let s1 = &g * g.transpose() + DMatrix::identity(d, d) * 0.3;
    let s2 = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    let s2 = (&s2 + s2.transpose()) * 0.5;
    let theta: f64 = rng.gen_range(-3.0..3.0);
    let q = CMatrix::from_fn(d, d, |i, j| c(s1[(i, j)], s2[(i, j)])) * Complex::from_polar(1.0, theta);
    let form = QuadraticForm::new(q).unwrap();
    let tol = Tolerances::default();
    form.normalize_rotation(tol.definiteness, 720).unwrap().rotated
}

/// Reduced matrix `λI + shift` of a single Jordan block with unit superdiagonal.
pub fn jordan(n: usize, lambda: Complex<f64>) -> CMatrix<f64> {
    CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            lambda
        } else if j == i + 1 {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

pub fn shift(n: usize) -> CMatrix<f64> {
    CMatrix::from_fn(n, n, |i, j| if j == i + 1 { c(1.0, 0.0) } else { c(0.0, 0.0) })
}
