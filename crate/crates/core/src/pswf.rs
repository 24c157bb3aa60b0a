//! Prolate spheroidal wave functions `psi_j` for a bandwidth `c` and the
//! eigenvalues `mu_j` of the finite Fourier transform
//! `F_c[f](x) = \int_{-1}^{1} e^{icxy} f(y) dy`.
//!
//! The functions are computed by the Legendre-Galerkin method: the prolate
//! differential operator
//!
//! ```text
//! L = -(d/dx) (1 - x^2) (d/dx) + c^2 x^2
//! ```
//!
//! commutes with `F_c` and is pentadiagonal in the normalized Legendre basis
//! `Pbar_k = sqrt(k + 1/2) P_k`. It splits into two symmetric tridiagonal
//! blocks (even and odd degrees) whose eigenvectors are the expansion
//! coefficients of `psi_j`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::grid::gauss_legendre;

/// Relative size the last retained Legendre coefficient of `psi_{n_max}` must stay below.
const TAIL_TOLERANCE: f64 = 1e-13;

/// The family `{psi_j}` for `j = 0..=n_max` together with `mu_j` and the
/// eigenvalues `chi_j` of the prolate differential operator.
#[derive(Clone, Debug)]
pub struct PswfBasis {
    bandwidth: f64,
    n_max: usize,
    order: usize,
    coeffs: Vec<Vec<f64>>,
    eigenvalues: Vec<Complex64>,
    chi: Vec<f64>,
}

/// Default per-parity matrix order `2 (ceil(c) + n_max) + 60`.
pub fn default_order(c: f64, n_max: usize) -> usize {
    2 * (c.ceil() as usize + n_max) + 60
}

/// Builds the basis with the default matrix order.
pub fn build_basis(c: f64, n_max: usize) -> Result<PswfBasis> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(invalid(format!("bandwidth must be positive, got {c}")));
    }
    build_basis_with_order(c, n_max, default_order(c, n_max))
}

/// Builds the basis with `order` Legendre modes per parity block.
pub fn build_basis_with_order(c: f64, n_max: usize, order: usize) -> Result<PswfBasis> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(invalid(format!("bandwidth must be positive, got {c}")));
    }
    let required = default_order(c, n_max);
    // Each block contributes at most `order` functions; keep a margin so the
    // highest requested one is far from the truncated end of the spectrum.
    if n_max / 2 + 1 + 10 > order {
        return Err(Error::TruncationTooSmall { order, required });
    }
    let total = 2 * order;

    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(total);
    for parity in 0..2 {
        let degrees: Vec<usize> = (0..order).map(|i| 2 * i + parity).collect();
        let mut a = DMatrix::<f64>::zeros(order, order);
        for (i, &k) in degrees.iter().enumerate() {
            a[(i, i)] = diagonal(c, k);
            if i + 1 < order {
                let b = off_diagonal(c, k);
                a[(i, i + 1)] = b;
                a[(i + 1, i)] = b;
            }
        }
        let eig = SymmetricEigen::new(a);
        for (col, &value) in eig.eigenvalues.iter().enumerate() {
            let mut coef = vec![0.0; total];
            for (i, &k) in degrees.iter().enumerate() {
                coef[k] = eig.eigenvectors[(i, col)];
            }
            pairs.push((value, coef));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.truncate(n_max + 1);

    let mut chi = Vec::with_capacity(n_max + 1);
    let mut coeffs = Vec::with_capacity(n_max + 1);
    for (j, (value, mut coef)) in pairs.into_iter().enumerate() {
        let lead = coef
            .iter()
            .position(|&a| a != 0.0)
            .expect("eigenvector is nonzero");
        if lead % 2 != j % 2 {
            return Err(Error::TruncationTooSmall { order, required });
        }
        if coef[lead] < 0.0 {
            coef.iter_mut().for_each(|a| *a = -*a);
        }
        chi.push(value);
        coeffs.push(coef);
    }

    let last = &coeffs[n_max];
    let largest = last.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let tail = last[total - 2..].iter().fold(0.0f64, |m, a| m.max(a.abs()));
    if tail > TAIL_TOLERANCE * largest {
        return Err(Error::TruncationTooSmall {
            order,
            required: required.max(2 * order),
        });
    }

    let mut basis = PswfBasis {
        bandwidth: c,
        n_max,
        order,
        coeffs,
        eigenvalues: Vec::new(),
        chi,
    };
    basis.eigenvalues = basis.rayleigh_eigenvalues();
    Ok(basis)
}

fn diagonal(c: f64, k: usize) -> f64 {
    let k = k as f64;
    k * (k + 1.0) + c * c * (2.0 * k * (k + 1.0) - 1.0) / ((2.0 * k + 3.0) * (2.0 * k - 1.0))
}

fn off_diagonal(c: f64, k: usize) -> f64 {
    let k = k as f64;
    c * c * (k + 1.0) * (k + 2.0) / ((2.0 * k + 3.0) * ((2.0 * k + 1.0) * (2.0 * k + 5.0)).sqrt())
}

/// Fills `out[k] = Pbar_k(x)` for `k < out.len()`.
pub(crate) fn normalized_legendre(x: f64, out: &mut [f64]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    let mut p0 = 1.0;
    out[0] = p0 * 0.5f64.sqrt();
    if n == 1 {
        return;
    }
    let mut p1 = x;
    out[1] = p1 * 1.5f64.sqrt();
    for k in 1..n - 1 {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        out[k + 1] = p2 * (kf + 1.5).sqrt();
        p0 = p1;
        p1 = p2;
    }
}

impl PswfBasis {
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Number of Legendre modes per parity block.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.n_max + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Normalized-Legendre expansion coefficients of `psi_j`.
    pub fn legendre_coeffs(&self, j: usize) -> &[f64] {
        &self.coeffs[j]
    }

    /// `mu_j` for `j = 0..=n_max`.
    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    /// Eigenvalues of the prolate differential operator, ascending.
    pub fn chi(&self) -> &[f64] {
        &self.chi
    }

    /// `i^{-j} mu_j`, real and positive up to rounding.
    pub fn rotated_eigenvalue(&self, j: usize) -> Complex64 {
        self.eigenvalues[j] * i_pow(-(j as i64))
    }

    fn check_index(&self, j: usize) -> Result<()> {
        if j > self.n_max {
            return Err(Error::Index {
                what: "pswf index",
                index: j,
                max: self.n_max,
            });
        }
        Ok(())
    }

    /// Evaluates `psi_j` at points of `[-1, 1]`.
    pub fn eval(&self, j: usize, xs: &[f64]) -> Result<Vec<f64>> {
        self.check_index(j)?;
        check_points(xs)?;
        let coef = &self.coeffs[j];
        let mut p = vec![0.0; coef.len()];
        Ok(xs
            .iter()
            .map(|&x| {
                normalized_legendre(x, &mut p);
                dot_parity(coef, &p, j % 2)
            })
            .collect())
    }

    /// Evaluates `psi_0..=psi_n_max` at `xs`; the result is indexed `[j][point]`.
    pub fn eval_all(&self, xs: &[f64]) -> Result<Vec<Vec<f64>>> {
        check_points(xs)?;
        let k = 2 * self.order;
        let per_point: Vec<Vec<f64>> = xs
            .par_iter()
            .map(|&x| {
                let mut p = vec![0.0; k];
                normalized_legendre(x, &mut p);
                self.coeffs
                    .iter()
                    .enumerate()
                    .map(|(j, coef)| dot_parity(coef, &p, j % 2))
                    .collect()
            })
            .collect();
        Ok((0..=self.n_max)
            .map(|j| per_point.iter().map(|row| row[j]).collect())
            .collect())
    }

    /// Rayleigh quotients `<F_c psi_j, psi_j>` under Gauss-Legendre quadrature.
    fn rayleigh_eigenvalues(&self) -> Vec<Complex64> {
        let m = 64.max(2 * self.order);
        let (x, w) = gauss_legendre(m);
        let psi = self.eval_all(&x).expect("gauss nodes lie in [-1, 1]");
        let c = self.bandwidth;
        let kernel: Vec<Complex64> = (0..m * m)
            .into_par_iter()
            .map(|ab| {
                let (a, b) = (ab / m, ab % m);
                Complex64::cis(c * x[a] * x[b])
            })
            .collect();
        psi.par_iter()
            .map(|p| {
                let wp: Vec<f64> = p.iter().zip(&w).map(|(p, w)| p * w).collect();
                let mut total = Complex64::new(0.0, 0.0);
                for a in 0..m {
                    let row = &kernel[a * m..(a + 1) * m];
                    let inner: Complex64 = row.iter().zip(&wp).map(|(k, v)| k * v).sum();
                    total += inner * wp[a];
                }
                total
            })
            .collect()
    }

    /// CSV with columns `j,re_mu,im_mu,abs_mu,chi`.
    pub fn eigen_table_csv(&self) -> String {
        let mut out = String::from("j,re_mu,im_mu,abs_mu,chi\n");
        for (j, (mu, chi)) in self.eigenvalues.iter().zip(&self.chi).enumerate() {
            let _ = writeln!(out, "{j},{:?},{:?},{:?},{:?}", mu.re, mu.im, mu.norm(), chi);
        }
        out
    }
}

fn dot_parity(coef: &[f64], p: &[f64], parity: usize) -> f64 {
    coef.iter()
        .zip(p)
        .skip(parity)
        .step_by(2)
        .map(|(a, b)| a * b)
        .sum()
}

fn check_points(xs: &[f64]) -> Result<()> {
    if let Some(x) = xs.iter().find(|x| !(x.abs() <= 1.0)) {
        return Err(invalid(format!("evaluation point {x} outside [-1, 1]")));
    }
    Ok(())
}

/// `i^k` for integer `k`.
pub fn i_pow(k: i64) -> Complex64 {
    match k.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inner(basis: &PswfBasis, i: usize, j: usize, nodes: usize) -> f64 {
        let (x, w) = gauss_legendre(nodes);
        let a = basis.eval(i, &x).unwrap();
        let b = basis.eval(j, &x).unwrap();
        a.iter().zip(&b).zip(&w).map(|((a, b), w)| a * b * w).sum()
    }

    #[test]
    fn orthonormal_under_gauss_quadrature() {
        let basis = build_basis(10.0, 18).unwrap();
        for i in 0..=18 {
            assert!((inner(&basis, i, i, 200) - 1.0).abs() <= 1e-10, "norm of psi_{i}");
            for j in 0..i {
                assert!(inner(&basis, i, j, 200).abs() <= 1e-8, "<psi_{i}, psi_{j}>");
            }
        }
    }

    #[test]
    fn parity_is_exact() {
        let basis = build_basis(10.0, 18).unwrap();
        let xs = [0.0, 0.1, 0.37, 0.5, 0.99, 1.0];
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        for j in 0..=18 {
            let a = basis.eval(j, &xs).unwrap();
            let b = basis.eval(j, &neg).unwrap();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            for (a, b) in a.iter().zip(&b) {
                assert_eq!(*b, sign * a);
            }
        }
        assert_eq!(basis.eval(1, &[0.0]).unwrap()[0], 0.0);
    }

    #[test]
    fn sign_convention_leading_coefficient_positive() {
        let basis = build_basis(5.0, 9).unwrap();
        for j in 0..=9 {
            let c = basis.legendre_coeffs(j);
            let lead = c.iter().find(|a| **a != 0.0).unwrap();
            assert!(*lead > 0.0);
        }
    }

    #[test]
    fn eigenvalues_have_the_i_power_phase_and_decrease() {
        let basis = build_basis(10.0, 18).unwrap();
        for j in 0..=18 {
            let z = basis.rotated_eigenvalue(j);
            assert!(z.re > 0.0);
            assert!(z.im.abs() <= 1e-6 * z.norm(), "j={j} z={z}");
        }
        for j in 0..18 {
            assert!(basis.eigenvalues()[j + 1].norm() < basis.eigenvalues()[j].norm());
        }
        assert!((basis.rotated_eigenvalue(0).re - 0.793).abs() < 0.0005);
        assert!((basis.rotated_eigenvalue(6).re - 0.526).abs() < 0.0005);
        let mu18 = basis.rotated_eigenvalue(18).re;
        assert!((mu18 - 6.9e-9).abs() < 0.05 * 6.9e-9);
    }

    #[test]
    fn single_function_basis() {
        let basis = build_basis(10.0, 0).unwrap();
        assert_eq!(basis.len(), 1);
        assert!((basis.rotated_eigenvalue(0).re - 0.793).abs() < 0.0005);
    }

    #[test]
    fn hilbert_schmidt_bound() {
        for c in [1.0, 5.0, 10.0, 20.0] {
            let basis = build_basis(c, 30).unwrap();
            let mut partial = 0.0;
            for mu in basis.eigenvalues() {
                let next = partial + mu.norm_sqr();
                assert!(next >= partial);
                partial = next;
            }
            assert!(partial <= 4.0 + 1e-12, "c={c}: {partial}");
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(build_basis(0.0, 3), Err(Error::InvalidArgument(_))));
        assert!(matches!(build_basis(-1.0, 3), Err(Error::InvalidArgument(_))));
        let err = build_basis_with_order(10.0, 18, 12).unwrap_err();
        match err {
            Error::TruncationTooSmall { order, required } => {
                assert_eq!(order, 12);
                assert_eq!(required, default_order(10.0, 18));
            }
            other => panic!("unexpected {other:?}"),
        }
        let basis = build_basis(10.0, 4).unwrap();
        assert!(matches!(basis.eval(5, &[0.0]), Err(Error::Index { .. })));
        assert!(matches!(basis.eval(0, &[1.5]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn eigen_table_has_one_row_per_function() {
        let basis = build_basis(10.0, 5).unwrap();
        let csv = basis.eigen_table_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "j,re_mu,im_mu,abs_mu,chi");
        assert_eq!(lines.len(), 7);
        assert!(lines[1].starts_with("0,"));
    }
}
