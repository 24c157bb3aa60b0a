//! The finite Fourier transform `F_c`, its rank-`n` truncated inverse and the
//! trust diagnostic that bounds the usable rank on a given grid.
//!
//! All integrals over `[-1, 1]` use composite Simpson weights on the grid the
//! data arrive on, so the trust profile measures the arithmetic of the
//! reconstruction pipeline itself.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::UniformInterval;
use crate::pswf::PswfBasis;

/// `F_c[f](x) = \int e^{icxy} f(y) dy` at every node of `grid`.
pub fn apply_fc(c: f64, grid: &UniformInterval, f: &[Complex64]) -> Result<Vec<Complex64>> {
    check_len(grid, f.len())?;
    let x = grid.nodes();
    let wf: Vec<Complex64> = f.iter().zip(grid.weights()).map(|(f, w)| f * w).collect();
    Ok(x.par_iter()
        .map(|&xi| {
            x.iter()
                .zip(&wf)
                .map(|(&y, v)| Complex64::cis(c * xi * y) * v)
                .sum()
        })
        .collect())
}

/// `<psi_j, g>` for `j = 0..=n_max` by quadrature on `g`'s grid.
pub fn pswf_coefficients(
    basis: &PswfBasis,
    grid: &UniformInterval,
    g: &[Complex64],
) -> Result<Vec<Complex64>> {
    check_len(grid, g.len())?;
    TruncatedInverse::new(basis, *grid)?.coefficients(g)
}

/// `F^{-1}_{n,c}[g](y) = sum_{j<=n} psi_j(y) <psi_j, g> / mu_j` on `g`'s grid.
pub fn apply_fnc_inverse(
    basis: &PswfBasis,
    n: usize,
    grid: &UniformInterval,
    g: &[Complex64],
) -> Result<Vec<Complex64>> {
    check_len(grid, g.len())?;
    TruncatedInverse::new(basis, *grid)?.apply(n, g)
}

fn check_len(grid: &UniformInterval, len: usize) -> Result<()> {
    if grid.len() != len {
        return Err(invalid(format!(
            "{len} samples do not match a grid of {} nodes",
            grid.len()
        )));
    }
    Ok(())
}

/// The PSWFs tabulated on a uniform grid, reused across ranks and rays.
#[derive(Clone, Debug)]
pub struct TruncatedInverse {
    grid: UniformInterval,
    weights: Vec<f64>,
    psi: Vec<Vec<f64>>,
    mu: Vec<Complex64>,
}

impl TruncatedInverse {
    pub fn new(basis: &PswfBasis, grid: UniformInterval) -> Result<Self> {
        Ok(Self {
            grid,
            weights: grid.weights(),
            psi: basis.eval_all(&grid.nodes())?,
            mu: basis.eigenvalues().to_vec(),
        })
    }

    pub fn grid(&self) -> &UniformInterval {
        &self.grid
    }

    pub fn n_max(&self) -> usize {
        self.psi.len() - 1
    }

    /// `psi_j` sampled on the grid.
    pub fn psi(&self, j: usize) -> &[f64] {
        &self.psi[j]
    }

    pub fn mu(&self) -> &[Complex64] {
        &self.mu
    }

    pub fn coefficients(&self, g: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(&self.grid, g.len())?;
        let wg: Vec<Complex64> = g.iter().zip(&self.weights).map(|(g, w)| g * w).collect();
        Ok(self
            .psi
            .iter()
            .map(|p| p.iter().zip(&wg).map(|(p, v)| v * p).sum())
            .collect())
    }

    /// `sum_{j<=n} coeffs[j] / mu_j * psi_j` on the grid.
    pub fn synthesize(&self, n: usize, coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
        if n > self.n_max() {
            return Err(Error::Index {
                what: "truncation rank",
                index: n,
                max: self.n_max(),
            });
        }
        let scaled: Vec<Complex64> = (0..=n).map(|j| coeffs[j] / self.mu[j]).collect();
        if scaled.iter().any(|z| !z.is_finite()) {
            return Err(Error::PoisonedRank { n });
        }
        let out: Vec<Complex64> = (0..self.grid.len())
            .map(|k| {
                scaled
                    .iter()
                    .zip(&self.psi)
                    .map(|(s, p)| s * p[k])
                    .sum()
            })
            .collect();
        if out.iter().any(|z| !z.is_finite()) {
            return Err(Error::PoisonedRank { n });
        }
        Ok(out)
    }

    pub fn apply(&self, n: usize, g: &[Complex64]) -> Result<Vec<Complex64>> {
        if n > self.n_max() {
            return Err(Error::Index {
                what: "truncation rank",
                index: n,
                max: self.n_max(),
            });
        }
        let coeffs = self.coefficients(g)?;
        self.synthesize(n, &coeffs)
    }
}

/// Cumulative eigen-relation defects of the numerically realized basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrustProfile {
    pub epsilons: Vec<f64>,
    pub epsilon_cap: Option<f64>,
    pub n_trust: Option<usize>,
}

impl TrustProfile {
    pub fn with_cap(mut self, cap: f64) -> Result<Self> {
        let n = trust_limit(&self, cap)?;
        self.epsilon_cap = Some(cap);
        self.n_trust = Some(n);
        Ok(self)
    }

    /// CSV with columns `j,epsilon_j,log10_epsilon_j`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,epsilon_j,log10_epsilon_j\n");
        for (j, e) in self.epsilons.iter().enumerate() {
            let _ = writeln!(out, "{j},{e:?},{:?}", e.log10());
        }
        out
    }
}

/// `eps_j = (sum_{l<=j} \int |F_c[psi_l]/mu_l - psi_l|^2)^{1/2}` with every
/// operation realized on `grid`.
pub fn trust_sequence(basis: &PswfBasis, grid: &UniformInterval) -> Result<TrustProfile> {
    let table = TruncatedInverse::new(basis, *grid)?;
    let x = grid.nodes();
    let w = grid.weights();
    let c = basis.bandwidth();
    let n = grid.len();
    let count = basis.len();

    // defects[i][l] = |F_c[psi_l](x_i)/mu_l - psi_l(x_i)|^2
    let defects: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let kernel: Vec<Complex64> = (0..n).map(|k| Complex64::cis(c * x[i] * x[k]) * w[k]).collect();
            (0..count)
                .map(|l| {
                    let psi = table.psi(l);
                    let f: Complex64 = kernel.iter().zip(psi).map(|(k, p)| k * p).sum();
                    (f / table.mu[l] - psi[i]).norm_sqr()
                })
                .collect()
        })
        .collect();

    let mut acc = 0.0;
    let epsilons = (0..count)
        .map(|l| {
            acc += (0..n).map(|i| w[i] * defects[i][l]).sum::<f64>();
            acc.sqrt()
        })
        .collect();
    Ok(TrustProfile {
        epsilons,
        epsilon_cap: None,
        n_trust: None,
    })
}

/// `max{j : eps_j <= cap}`.
pub fn trust_limit(profile: &TrustProfile, cap: f64) -> Result<usize> {
    if !(cap > 0.0) {
        return Err(invalid(format!("trust cap must be positive, got {cap}")));
    }
    let eps0 = *profile
        .epsilons
        .first()
        .ok_or_else(|| invalid("empty trust profile"))?;
    if !(eps0 <= cap) {
        return Err(Error::NoTrustedRank { eps0, cap });
    }
    Ok(profile
        .epsilons
        .iter()
        .rposition(|&e| e <= cap)
        .expect("eps_0 qualifies"))
}
