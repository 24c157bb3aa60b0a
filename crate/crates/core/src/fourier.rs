//! Discrete Fourier transforms between the spatial and Fourier grids.
//!
//! `forward` evaluates `(2 pi)^{-d} \int e^{ipq} v(q) dq` over the whole
//! spatial square. `inverse` evaluates `\int_{B_r} e^{-ipq} w(p) dp`, so nodes
//! outside the closed data ball are zero-filled. Both are separable direct
//! quadratures with Simpson weights, evaluated at the nodes of the target grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::field::{Domain, SampledField};

/// Samples the forward transform of a spatial field on the Fourier grid of half-width `r`.
pub fn forward(v: &SampledField, r: f64) -> Result<SampledField> {
    if v.domain != Domain::Spatial {
        return Err(invalid("forward transform expects a spatial field"));
    }
    let scale = (2.0 * PI).powi(-(v.dim as i32));
    let out = SampledField::zeros(Domain::Fourier, v.dim, v.n, r);
    let weights = full_weights(v);
    let values = separable(&v.values, &weights, v.dim, &kernel(&out.axis(), &v.axis(), 1.0));
    SampledField::from_values(
        Domain::Fourier,
        v.dim,
        v.n,
        r,
        values.into_iter().map(|z| z * scale).collect(),
    )
}

/// Inverts Fourier data given on the closed ball onto the spatial grid of half-width `sigma`.
pub fn inverse(w: &SampledField, sigma: f64) -> Result<SampledField> {
    if w.domain != Domain::Fourier {
        return Err(invalid("inverse transform expects a Fourier field"));
    }
    let out = SampledField::zeros(Domain::Spatial, w.dim, w.n, sigma);
    let values = separable(&w.values, &w.ball_weights(), w.dim, &kernel(&out.axis(), &w.axis(), -1.0));
    SampledField::from_values(Domain::Spatial, w.dim, w.n, sigma, values)
}

fn full_weights(v: &SampledField) -> Vec<f64> {
    let w = v.axis_weights();
    if v.dim == 1 {
        return w;
    }
    w.iter().flat_map(|wy| w.iter().map(move |wx| wx * wy)).collect()
}

/// `k[j][i] = exp(sign * i * a_j * b_i)`
fn kernel(targets: &[f64], sources: &[f64], sign: f64) -> Vec<Vec<Complex64>> {
    targets
        .iter()
        .map(|&a| sources.iter().map(|&b| Complex64::cis(sign * a * b)).collect())
        .collect()
}

fn separable(values: &[Complex64], weights: &[f64], dim: usize, k: &[Vec<Complex64>]) -> Vec<Complex64> {
    let n = k.len();
    let weighted: Vec<Complex64> = values.iter().zip(weights).map(|(v, w)| v * w).collect();
    let along_x = |row: &[Complex64]| -> Vec<Complex64> {
        k.iter()
            .map(|kj| kj.iter().zip(row).map(|(a, b)| a * b).sum())
            .collect()
    };
    if dim == 1 {
        return along_x(&weighted);
    }
    let rows: Vec<Vec<Complex64>> = weighted.par_chunks(n).map(along_x).collect();
    (0..n)
        .into_par_iter()
        .flat_map_iter(|jy| {
            let kj = &k[jy];
            let rows = &rows;
            (0..n).map(move |jx| (0..n).map(|iy| kj[iy] * rows[iy][jx]).sum::<Complex64>())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(dim: usize, n: usize, half_width: f64, a: f64) -> SampledField {
        let f = SampledField::zeros(Domain::Spatial, dim, n, half_width);
        let x = f.axis();
        let values = if dim == 1 {
            x.iter().map(|q| Complex64::new((-a * q * q).exp(), 0.0)).collect()
        } else {
            x.iter()
                .flat_map(|qy| x.iter().map(move |qx| Complex64::new((-a * (qx * qx + qy * qy)).exp(), 0.0)))
                .collect()
        };
        SampledField { values, ..f }
    }

    #[test]
    fn forward_of_gaussian_matches_closed_form() {
        // exp(-a q^2) has transform exp(-p^2 / 4a) / (2 sqrt(pi a)); support effectively inside [-1, 1].
        let a = 40.0;
        let v = gaussian(1, 129, 1.0, a);
        let w = forward(&v, 10.0).unwrap();
        for (p, z) in w.axis().iter().zip(&w.values) {
            let expect = (-p * p / (4.0 * a)).exp() / (2.0 * (PI * a).sqrt());
            assert!((z - expect).norm() < 1e-9, "p={p}");
        }
    }

    #[test]
    fn two_dimensional_transform_is_the_product_of_one_dimensional_ones() {
        let a = 30.0;
        let v2 = gaussian(2, 33, 1.0, a);
        let w2 = forward(&v2, 8.0).unwrap();
        let w1 = forward(&gaussian(1, 33, 1.0, a), 8.0).unwrap();
        for iy in 0..33 {
            for ix in 0..33 {
                assert!((w2.at(ix, iy) - w1.values[ix] * w1.values[iy]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn inverse_drops_the_corners() {
        let mut w = SampledField::zeros(Domain::Fourier, 2, 5, 1.0);
        w.values[0] = Complex64::new(1.0, 0.0);
        let v = inverse(&w, 1.0).unwrap();
        assert!(v.values.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn inverse_recovers_smooth_functions_from_wide_bands() {
        let a = 20.0;
        let v = gaussian(1, 257, 1.0, a);
        let w = forward(&v, 60.0).unwrap();
        let back = inverse(&w, 1.0).unwrap();
        for (z, u) in back.values.iter().zip(&v.values) {
            assert!((z - u).norm() < 1e-6);
        }
    }

    #[test]
    fn domain_tags_are_checked() {
        let f = SampledField::zeros(Domain::Fourier, 1, 5, 1.0);
        assert!(forward(&f, 1.0).is_err());
        assert!(inverse(&SampledField { domain: Domain::Spatial, ..f }, 1.0).is_err());
    }
}
