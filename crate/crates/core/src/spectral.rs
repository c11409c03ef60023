//! Eigenvalue pairing of the Hamilton map and exact enumeration of the
//! spectrum of the quantized operator,
//!
//! ```text
//! h Σ_j (λ_j / i) (2ν_j + 1),   ν ∈ (Z≥0)^n,
//! ```
//!
//! where `λ_1..λ_n` are the eigenvalues of `F` in the upper half-plane,
//! repeated by algebraic multiplicity.

use std::io::Write;

use nalgebra::{Complex, ComplexField};

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, CMatrix};
use crate::scalar::{from_usize, lit, to_f64, Real, Tolerances};
use crate::symplectic::HamiltonMap;

/// How eigenvalues of `F` are grouped into clusters (algebraic multiplicities).
#[derive(Clone, Debug, PartialEq)]
pub enum ClusterMode<T> {
    /// Single-linkage grouping with this absolute distance.
    Tolerance(T),
    /// Multiplicities declared by the caller; their sum must be `n`.
    Declared(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cluster<T: Real> {
    /// Mean of the member eigenvalues.
    pub center: Complex<T>,
    /// Indices into [`SpectralData::raw_upper`].
    pub members: Vec<usize>,
}

impl<T: Real> Cluster<T> {
    pub fn multiplicity(&self) -> usize {
        self.members.len()
    }
}

/// Upper half-plane eigenvalues of the Hamilton map.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralData<T: Real> {
    /// Cluster centers repeated by multiplicity (`n` entries, all `Im > 0`).
    pub lambdas: Vec<Complex<T>>,
    pub clusters: Vec<Cluster<T>>,
    /// Largest `|λ_a + λ_b|` among the matched pairs.
    pub pairing_residual: T,
    /// Upper half-plane eigenvalues as computed, before cluster averaging.
    pub raw_upper: Vec<Complex<T>>,
}

fn sort_key<T: Real>(z: &Complex<T>) -> (f64, f64) {
    (to_f64(z.modulus()), to_f64(z.im.atan2(z.re)))
}

fn cmp_complex<T: Real>(a: &Complex<T>, b: &Complex<T>) -> std::cmp::Ordering {
    sort_key(a).partial_cmp(&sort_key(b)).expect("finite eigenvalues")
}

/// Groups `values` into clusters according to `mode`.
fn cluster<T: Real>(values: &[Complex<T>], mode: &ClusterMode<T>) -> Result<Vec<Cluster<T>>> {
    let k = values.len();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    match mode {
        ClusterMode::Tolerance(tol) => {
            let mut label: Vec<Option<usize>> = vec![None; k];
            for start in 0..k {
                if label[start].is_some() {
                    continue;
                }
                let g = groups.len();
                label[start] = Some(g);
                let mut stack = vec![start];
                let mut members = vec![start];
                while let Some(i) = stack.pop() {
                    for j in 0..k {
                        if label[j].is_none() && (values[i] - values[j]).modulus() <= *tol {
                            label[j] = Some(g);
                            stack.push(j);
                            members.push(j);
                        }
                    }
                }
                members.sort_unstable();
                groups.push(members);
            }
        }
        ClusterMode::Declared(sizes) => {
            let total: usize = sizes.iter().sum();
            if total != k || sizes.contains(&0) {
                return Err(Error::BadMultiplicities { declared: total, available: k });
            }
            let mut free: Vec<bool> = vec![true; k];
            for &size in sizes {
                let seed = (0..k).find(|&i| free[i]).expect("sizes sum to k");
                let mut near: Vec<usize> = (0..k).filter(|&i| free[i]).collect();
                near.sort_by(|&a, &b| {
                    let da = to_f64((values[a] - values[seed]).modulus());
                    let db = to_f64((values[b] - values[seed]).modulus());
                    da.partial_cmp(&db).expect("finite")
                });
                let mut members: Vec<usize> = near.into_iter().take(size).collect();
                members.sort_unstable();
                for &m in &members {
                    free[m] = false;
                }
                groups.push(members);
            }
        }
    }
    let mut clusters: Vec<Cluster<T>> = groups
        .into_iter()
        .map(|members| {
            let sum = members.iter().fold(Complex::new(T::zero(), T::zero()), |acc, &i| acc + values[i]);
            Cluster { center: sum.unscale(from_usize(members.len())), members }
        })
        .collect();
    clusters.sort_by(|a, b| cmp_complex(&a.center, &b.center));
    Ok(clusters)
}

impl<T: Real> SpectralData<T> {
    fn from_upper(mut upper: Vec<Complex<T>>, mode: &ClusterMode<T>, pairing_residual: T) -> Result<Self> {
        upper.sort_by(cmp_complex);
        let clusters = cluster(&upper, mode)?;
        let mut lambdas = Vec::with_capacity(upper.len());
        for c in &clusters {
            lambdas.extend(std::iter::repeat_n(c.center, c.multiplicity()));
        }
        Ok(Self { lambdas, clusters, pairing_residual, raw_upper: upper })
    }

    /// Spectral data read off a reduced matrix `M` (the matrix of `q̃ = Mx·ξ`),
    /// using `Spec(M) = Spec(2F) ∩ {Im > 0}`.
    pub fn from_reduced_matrix(m: &CMatrix<T>, mode: &ClusterMode<T>, tol: &Tolerances) -> Result<Self> {
        let scale = m.norm().max(T::one());
        let half: T = lit(0.5);
        let upper: Vec<Complex<T>> = eigenvalues(m)?.into_iter().map(|z| z.scale(half)).collect();
        for z in &upper {
            if z.im <= lit::<T>(tol.real_axis) * scale {
                return Err(Error::RealEigenvalue { re: to_f64(z.re), im: to_f64(z.im) });
            }
        }
        Self::from_upper(upper, mode, T::zero())
    }

    pub fn n(&self) -> usize {
        self.lambdas.len()
    }

    /// Cluster centers together with their `−λ` partners, as
    /// `(center, multiplicity)`; the full generalized eigenspace layout of `F`.
    pub fn all_clusters(&self) -> Vec<(Complex<T>, usize)> {
        let mut out: Vec<(Complex<T>, usize)> =
            self.clusters.iter().map(|c| (c.center, c.multiplicity())).collect();
        out.extend(self.clusters.iter().map(|c| (-c.center, c.multiplicity())));
        out
    }
}

/// Computes the eigenvalues of `F`, matches them into `±λ` pairs and returns
/// the upper half-plane representatives.
pub fn eigen_pairs<T: Real>(f: &HamiltonMap<T>, mode: &ClusterMode<T>, tol: &Tolerances) -> Result<SpectralData<T>> {
    let scale = f.norm().max(T::one());
    let ev = eigenvalues(f.matrix())?;
    for z in &ev {
        if z.im.abs() <= lit::<T>(tol.real_axis) * scale {
            return Err(Error::RealEigenvalue { re: to_f64(z.re), im: to_f64(z.im) });
        }
    }
    let k = ev.len();
    let mut candidates: Vec<(f64, usize, usize)> = Vec::with_capacity(k * k / 2);
    for a in 0..k {
        for b in a + 1..k {
            candidates.push((to_f64((ev[a] + ev[b]).modulus()), a, b));
        }
    }
    candidates.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    let mut used = vec![false; k];
    let mut residual = 0.0f64;
    let mut upper = Vec::with_capacity(k / 2);
    for (cost, a, b) in candidates {
        if used[a] || used[b] {
            continue;
        }
        used[a] = true;
        used[b] = true;
        residual = residual.max(cost);
        let (za, zb) = (ev[a], ev[b]);
        if (za.im > T::zero()) == (zb.im > T::zero()) {
            return Err(Error::PairingFailure { residual: f64::INFINITY });
        }
        upper.push(if za.im > T::zero() { za } else { zb });
    }
    if residual > tol.pairing * to_f64(scale) {
        return Err(Error::PairingFailure { residual });
    }
    SpectralData::from_upper(upper, mode, lit(residual))
}

/// A point of the spectrum with the number of lattice representations `ν`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralPoint<T: Real> {
    pub value: Complex<T>,
    pub multiplicity: usize,
}

/// All eigenvalues of the quantized operator with modulus at most `radius`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumList<T: Real> {
    pub points: Vec<SpectralPoint<T>>,
    pub h: T,
    pub radius: T,
}

/// Enumerates `h Σ (λ_j/i)(2ν_j + 1)` with modulus `≤ radius` by depth-first
/// search over `ν`, pruned by `Σ Re(λ_j/i)(2ν_j+1) ≤ radius/h`. Values within
/// `merge_tol · h` are merged and their multiplicities added.
pub fn spectrum<T: Real>(data: &SpectralData<T>, h: T, radius: T, merge_tol: T) -> Result<SpectrumList<T>> {
    if h <= T::zero() {
        return Err(Error::InvalidArgument("h must be positive".into()));
    }
    // λ/i = Im λ − i Re λ
    let mus: Vec<Complex<T>> = data.lambdas.iter().map(|l| Complex::new(l.im, -l.re)).collect();
    if let Some(bad) = mus.iter().find(|m| m.re <= T::zero()) {
        return Err(Error::UnboundedEnumeration { value: to_f64(bad.re) });
    }
    // Points on the circle |μ| = R survive rounding.
    let radius_eff = radius * (T::one() + lit::<T>(1e-12));
    let bound = radius_eff / h;
    let n = mus.len();
    // Smallest possible real contribution of coordinates j.. (all ν = 0).
    let mut tail = vec![T::zero(); n + 1];
    for j in (0..n).rev() {
        tail[j] = tail[j + 1] + mus[j].re;
    }
    let mut raw: Vec<Complex<T>> = Vec::new();
    let two: T = lit(2.0);
    #[allow(clippy::too_many_arguments)]
    fn dfs<T: Real>(
        j: usize,
        acc: Complex<T>,
        acc_re: T,
        mus: &[Complex<T>],
        tail: &[T],
        bound: T,
        h: T,
        radius: T,
        two: T,
        out: &mut Vec<Complex<T>>,
    ) {
        if j == mus.len() {
            let v = acc.scale(h);
            if v.modulus() <= radius {
                out.push(v);
            }
            return;
        }
        let mut nu = 0usize;
        loop {
            let factor = two * from_usize::<T>(nu) + T::one();
            let re = acc_re + mus[j].re * factor;
            if re + tail[j + 1] > bound {
                break;
            }
            dfs(j + 1, acc + mus[j].scale(factor), re, mus, tail, bound, h, radius, two, out);
            nu += 1;
        }
    }
    dfs(0, Complex::new(T::zero(), T::zero()), T::zero(), &mus, &tail, bound, h, radius_eff, two, &mut raw);
    raw.sort_by(|a, b| a.re.partial_cmp(&b.re).expect("finite").then(a.im.partial_cmp(&b.im).expect("finite")));
    let tol = merge_tol * h;
    let mut merged: Vec<(Complex<T>, usize)> = Vec::new();
    'points: for p in raw {
        for entry in merged.iter_mut().rev() {
            if entry.0.re < p.re - tol {
                break;
            }
            if (entry.0 - p).modulus() <= tol {
                entry.1 += 1;
                continue 'points;
            }
        }
        merged.push((p, 1));
    }
    merged.sort_by(|a, b| a.0.re.partial_cmp(&b.0.re).expect("finite").then(a.0.im.partial_cmp(&b.0.im).expect("finite")));
    Ok(SpectrumList {
        points: merged.into_iter().map(|(value, multiplicity)| SpectralPoint { value, multiplicity }).collect(),
        h,
        radius,
    })
}

impl<T: Real> SpectrumList<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_multiplicity(&self) -> usize {
        self.points.iter().map(|p| p.multiplicity).sum()
    }

    /// Distance from `z` to the enumerated spectrum. Fails with
    /// [`Error::OutOfRadius`] unless the nearest point found is certainly the
    /// nearest point of the whole spectrum, i.e. `d ≤ R − |z|`.
    pub fn dist(&self, z: Complex<T>) -> Result<T> {
        let d = self
            .points
            .iter()
            .map(|p| (p.value - z).modulus())
            .fold(None, |acc: Option<T>, d| Some(acc.map_or(d, |a| a.min(d))))
            .ok_or(Error::EmptySpectrum)?;
        if d > self.radius - z.modulus() {
            return Err(Error::OutOfRadius { modulus: to_f64(z.modulus()), radius: to_f64(self.radius) });
        }
        Ok(d)
    }

    /// CSV with header `re,im,multiplicity`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "re,im,multiplicity")?;
        for p in &self.points {
            writeln!(w, "{:.15e},{:.15e},{}", to_f64(p.value.re), to_f64(p.value.im), p.multiplicity)?;
        }
        Ok(())
    }
}

/// Largest distance in a greedy nearest-neighbour matching of two multisets
/// of complex numbers; `None` when the sizes differ.
pub fn multiset_distance<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Option<T> {
    if a.len() != b.len() {
        return None;
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            pairs.push((to_f64((x - y).modulus()), i, j));
        }
    }
    pairs.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    let (mut ua, mut ub) = (vec![false; a.len()], vec![false; b.len()]);
    let mut worst = T::zero();
    for (_, i, j) in pairs {
        if !ua[i] && !ub[j] {
            ua[i] = true;
            ub[j] = true;
            worst = worst.max((a[i] - b[j]).modulus());
        }
    }
    Some(worst)
}

/// Free-function form of [`SpectrumList::dist`].
pub fn dist_to_spectrum<T: Real>(z: Complex<T>, spec: &SpectrumList<T>) -> Result<T> {
    spec.dist(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cplx;
    use crate::symplectic::QuadraticForm;
    use nalgebra::DMatrix;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn oscillator() -> SpectralData<f64> {
        let q = QuadraticForm::from_real(DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5])).unwrap();
        eigen_pairs(&q.hamilton_map(), &ClusterMode::Tolerance(1e-8), &tol()).unwrap()
    }

    fn worked_example() -> SpectralData<f64> {
        let m = CMatrix::from_row_slice(2, 2, &[cplx(0.0, 1.0), cplx(1.0, 0.0), cplx(0.0, 0.0), cplx(0.0, 1.0)]);
        SpectralData::from_reduced_matrix(&m, &ClusterMode::Tolerance(1e-8), &tol()).unwrap()
    }

    #[test]
    fn oscillator_pair() {
        let d = oscillator();
        assert_eq!(d.lambdas.len(), 1);
        assert!((d.lambdas[0] - cplx(0.0, 0.5)).norm() < 1e-14);
        assert!(d.pairing_residual < 1e-14);
    }

    #[test]
    fn diagonal_case_and_negation() {
        let mut f = CMatrix::<f64>::zeros(4, 4);
        f[(0, 0)] = cplx(0.0, 1.0);
        f[(1, 1)] = cplx(0.0, 2.0);
        f[(2, 2)] = cplx(0.0, -1.0);
        f[(3, 3)] = cplx(0.0, -2.0);
        let hm = HamiltonMap::from_matrix(f.clone()).unwrap();
        let d = eigen_pairs(&hm, &ClusterMode::Tolerance(1e-8), &tol()).unwrap();
        assert!((d.lambdas[0] - cplx(0.0, 1.0)).norm() < 1e-14);
        assert!((d.lambdas[1] - cplx(0.0, 2.0)).norm() < 1e-14);
        let neg = HamiltonMap::from_matrix(-f).unwrap();
        assert_eq!(eigen_pairs(&neg, &ClusterMode::Tolerance(1e-8), &tol()).unwrap().lambdas, d.lambdas);
    }

    #[test]
    fn real_eigenvalue_rejected() {
        let q = QuadraticForm::from_real(DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0])).unwrap();
        assert!(matches!(
            eigen_pairs(&q.hamilton_map(), &ClusterMode::Tolerance(1e-8), &tol()),
            Err(Error::RealEigenvalue { .. })
        ));
    }

    #[test]
    fn worked_example_double_eigenvalue() {
        let d = worked_example();
        assert_eq!(d.lambdas.len(), 2);
        for l in &d.lambdas {
            assert!((l - cplx(0.0, 0.5)).norm() < 1e-14);
        }
        assert_eq!(d.clusters.len(), 1);
        assert_eq!(d.clusters[0].multiplicity(), 2);
    }

    #[test]
    fn declared_multiplicities() {
        let raw = vec![cplx(0.1, 1.0), cplx(0.1 + 1e-5, 1.0), cplx(0.0, 3.0)];
        let d = SpectralData::<f64>::from_upper(raw.clone(), &ClusterMode::Declared(vec![2, 1]), 0.0).unwrap();
        assert_eq!(d.clusters.len(), 2);
        assert_eq!(d.clusters[0].multiplicity(), 2);
        assert!(SpectralData::<f64>::from_upper(raw, &ClusterMode::Declared(vec![2, 2]), 0.0).is_err());
    }

    #[test]
    fn oscillator_spectrum() {
        let s = spectrum(&oscillator(), 0.1, 0.55, 1e-10).unwrap();
        let expect = [0.05, 0.15, 0.25, 0.35, 0.45, 0.55];
        assert_eq!(s.len(), expect.len());
        for (p, e) in s.points.iter().zip(expect) {
            assert!((p.value - cplx(e, 0.0)).norm() < 1e-14);
            assert_eq!(p.multiplicity, 1);
        }
        assert!(spectrum(&oscillator(), 0.1, 0.04, 1e-10).unwrap().is_empty());
    }

    #[test]
    fn worked_example_multiplicities() {
        let h = 0.125;
        let s = spectrum(&worked_example(), h, 2.0, 1e-10).unwrap();
        for (m, p) in s.points.iter().enumerate() {
            assert!((p.value - cplx(h * (m as f64 + 1.0), 0.0)).norm() < 1e-13);
            assert_eq!(p.multiplicity, m + 1);
        }
        assert_eq!(s.len(), 16);
    }

    #[test]
    fn distances() {
        let s = spectrum(&oscillator(), 0.1, 2.0, 1e-10).unwrap();
        assert!((s.dist(cplx(0.2, 0.0)).unwrap() - 0.05).abs() < 1e-14);
        assert!(s.dist(cplx(0.35, 0.0)).unwrap() < 1e-14);
        assert!(matches!(s.dist(cplx(1.99, 0.5)), Err(Error::OutOfRadius { .. })));
        let empty = SpectrumList::<f64> { points: vec![], h: 0.1, radius: 1.0 };
        assert!(matches!(empty.dist(cplx(0.0, 0.0)), Err(Error::EmptySpectrum)));

        let h = 0.25;
        let s = spectrum(&worked_example(), h, 4.0, 1e-10).unwrap();
        // z = 1 = h·m for m = 1/h: the block |α| = m − 1 sits exactly at z.
        assert!(s.dist(cplx(1.0, 0.0)).unwrap() < 1e-14);
        assert!((s.dist(cplx(1.0 + h / 2.0, 0.0)).unwrap() - h / 2.0).abs() < 1e-14);
    }

    #[test]
    fn unbounded_enumeration_rejected() {
        let d = SpectralData::<f64>::from_upper(vec![cplx(1.0, 0.0)], &ClusterMode::Tolerance(1e-8), 0.0).unwrap();
        assert!(matches!(spectrum(&d, 0.1, 1.0, 1e-10), Err(Error::UnboundedEnumeration { .. })));
    }

    #[test]
    fn csv_layout() {
        let s = spectrum(&oscillator(), 0.1, 0.16, 1e-10).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "re,im,multiplicity");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].ends_with(",1"));
    }
}
