//! Reconstruction pipelines: naive inversion, the 1-d PSWF inverse and the
//! 2-d ray-by-ray inverse followed by filtered back projection.

use std::f64::consts::PI;

use log::{debug, warn};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandlimited::{TruncatedInverse, TrustProfile};
use crate::error::{invalid, Result};
use crate::field::{Domain, ProblemConfig, SampledField};
use crate::fourier;
use crate::grid::UniformInterval;
use crate::metrics::{l2_distance, relative_error, CurveRun};
use crate::pswf::PswfBasis;
use crate::radon::{bilinear, fbp_inverse, FilterWindow, Sinogram};
use crate::regularize::{
    n_zero, select_midpoint, select_morozov, select_residual_min, theoretical_n, ResidualCurve,
    SelectionWindow, Selections, Strategy,
};

/// Zero-fills outside the closed data ball and inverts onto the spatial grid.
/// Two-dimensional results keep only the real part.
pub fn naive_reconstruct(w: &SampledField, cfg: &ProblemConfig) -> Result<SampledField> {
    check_data(w, cfg)?;
    let v = fourier::inverse(w, cfg.sigma)?;
    Ok(if cfg.d == 2 { v.real_part().0 } else { v })
}

fn check_data(w: &SampledField, cfg: &ProblemConfig) -> Result<()> {
    if w.domain != Domain::Fourier || w.dim != cfg.d || w.n != cfg.n {
        return Err(invalid(format!(
            "data must be a {}-d Fourier field with {} nodes per axis",
            cfg.d, cfg.n
        )));
    }
    if (w.half_width - cfg.r).abs() > 1e-12 * cfg.r {
        return Err(invalid(format!(
            "data grid half-width {} does not match r = {}",
            w.half_width, cfg.r
        )));
    }
    Ok(())
}

/// Samples `w(r x theta)` along each ray by bilinear interpolation.
pub fn sample_rays(w: &SampledField, angles: &[f64], xs: UniformInterval) -> Result<Sinogram> {
    if w.domain != Domain::Fourier || w.dim != 2 {
        return Err(invalid("ray sampling needs 2-d Fourier data"));
    }
    let h = w.grid().step();
    let x = xs.nodes();
    let values = angles
        .iter()
        .flat_map(|t| {
            let (s, c) = t.sin_cos();
            x.iter()
                .map(move |&xi| bilinear(&w.values, w.n, (xi * c + 1.0) / h, (xi * s + 1.0) / h))
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(Sinogram {
        angles: angles.to_vec(),
        offsets: xs,
        values,
    })
}

/// A reconstruction and the `L2(B_sigma)` norm of any imaginary part that was dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub field: SampledField,
    pub imag_mass: f64,
}

/// PSWF reconstruction of fixed data at any rank, with the projections onto
/// the basis computed once.
#[derive(Clone, Debug)]
pub struct Reconstructor {
    cfg: ProblemConfig,
    data: SampledField,
    inv: TruncatedInverse,
    angles: Vec<f64>,
    filter: FilterWindow,
    /// One coefficient vector per ray; a single one in 1-d.
    coeffs: Vec<Vec<Complex64>>,
}

impl Reconstructor {
    /// `angles` is ignored in 1-d.
    pub fn new(
        cfg: &ProblemConfig,
        basis: &PswfBasis,
        w: &SampledField,
        angles: &[f64],
        filter: FilterWindow,
    ) -> Result<Self> {
        check_data(w, cfg)?;
        if (basis.bandwidth() - cfg.c).abs() > 1e-12 * cfg.c {
            return Err(invalid(format!(
                "basis bandwidth {} does not match c = {}",
                basis.bandwidth(),
                cfg.c
            )));
        }
        let grid = cfg.grid();
        let inv = TruncatedInverse::new(basis, grid)?;
        let coeffs = if cfg.d == 1 {
            vec![inv.coefficients(&w.values)?]
        } else {
            if angles.len() < 2 {
                return Err(invalid("2-d reconstruction needs at least 2 angles"));
            }
            let rays = sample_rays(w, angles, grid)?;
            (0..rays.n_angles())
                .into_par_iter()
                .map(|k| inv.coefficients(rays.row(k)))
                .collect::<Result<_>>()?
        };
        Ok(Self {
            cfg: *cfg,
            data: w.clone(),
            inv,
            angles: angles.to_vec(),
            filter,
            coeffs,
        })
    }

    pub fn config(&self) -> &ProblemConfig {
        &self.cfg
    }

    pub fn data(&self) -> &SampledField {
        &self.data
    }

    pub fn n_max(&self) -> usize {
        self.inv.n_max()
    }

    /// The reconstruction `v_n` on the spatial grid of `[-sigma, sigma]^d`.
    pub fn reconstruct(&self, n: usize) -> Result<Reconstruction> {
        let scale = (2.0 * PI / self.cfg.sigma).powi(self.cfg.d as i32);
        let n_pts = self.cfg.n;
        if self.cfg.d == 1 {
            let v: Vec<Complex64> = self.inv.synthesize(n, &self.coeffs[0])?.into_iter().map(|z| z * scale).collect();
            return Ok(Reconstruction {
                field: SampledField::from_values(Domain::Spatial, 1, n_pts, self.cfg.sigma, v)?,
                imag_mass: 0.0,
            });
        }
        let rows = self
            .coeffs
            .par_iter()
            .map(|c| self.inv.synthesize(n, c))
            .collect::<Result<Vec<_>>>()?;
        let sino = Sinogram {
            angles: self.angles.clone(),
            offsets: *self.inv.grid(),
            values: rows.into_iter().flatten().map(|z| z * scale).collect(),
        };
        let image = fbp_inverse(&sino, n_pts, self.filter)?;
        let image = SampledField { half_width: self.cfg.sigma, ..image };
        let (field, imag_mass) = image.real_part();
        debug!("n = {n}: dropped imaginary mass {imag_mass:e}");
        Ok(Reconstruction { field, imag_mass })
    }

    /// `||F[v] - w||_{L2(B_r)}`.
    pub fn residual(&self, v: &SampledField) -> Result<f64> {
        l2_distance(&fourier::forward(v, self.cfg.r)?, &self.data)
    }

    /// Residuals and reconstructions for every rank in the window.
    pub fn residual_curve(&self, window: &SelectionWindow) -> Result<CurveRun> {
        let runs = window
            .ranks()
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|n| {
                let rec = self.reconstruct(n)?;
                let res = self.residual(&rec.field)?;
                Ok((n, res, rec))
            })
            .collect::<Result<Vec<_>>>()?;
        let curve = ResidualCurve::new(runs.iter().map(|(n, r, _)| (*n, *r)).collect());
        let reconstructions = runs.into_iter().map(|(n, _, rec)| (n, rec)).collect();
        Ok(CurveRun { curve, reconstructions })
    }
}

/// PSWF reconstruction of 1-d data at rank `n`.
pub fn reconstruct_1d(w: &SampledField, cfg: &ProblemConfig, basis: &PswfBasis, n: usize) -> Result<SampledField> {
    if cfg.d != 1 {
        return Err(invalid("reconstruct_1d needs a 1-d problem"));
    }
    Ok(Reconstructor::new(cfg, basis, w, &[], FilterWindow::RamLak)?.reconstruct(n)?.field)
}

/// PSWF reconstruction of 2-d data at rank `n` from rays at `angles`.
pub fn reconstruct_2d(
    w: &SampledField,
    cfg: &ProblemConfig,
    basis: &PswfBasis,
    n: usize,
    angles: &[f64],
) -> Result<Reconstruction> {
    if cfg.d != 2 {
        return Err(invalid("reconstruct_2d needs a 2-d problem"));
    }
    Reconstructor::new(cfg, basis, w, angles, FilterWindow::RamLak)?.reconstruct(n)
}

/// Everything needed to choose a rank and reconstruct.
#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub strategy: Strategy,
    pub angles: Vec<f64>,
    pub filter: FilterWindow,
    /// Absolute data-error bound used to annotate the curve with the Morozov and midpoint ranks.
    pub data_error: Option<f64>,
    /// `(alpha, delta)` used to annotate the curve with the theoretical rank.
    pub theory: Option<(f64, f64)>,
}

/// Outcome of one reconstruction run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReconReport {
    pub chosen_n: usize,
    pub strategy: String,
    pub window: SelectionWindow,
    pub residual_curve: ResidualCurve,
    pub selections: Selections,
    pub err_spatial: Option<f64>,
    pub err_fourier: f64,
    pub naive_err_spatial: Option<f64>,
    pub naive_err_fourier: f64,
    pub imag_mass: f64,
    #[serde(skip)]
    pub reconstruction: Option<SampledField>,
    #[serde(skip)]
    pub naive: Option<SampledField>,
}

/// Selects a rank within `[n0, n_trust]` and reports errors against the data
/// and, when known, the true field.
pub fn solve(
    rec: &Reconstructor,
    trust: &TrustProfile,
    truth: Option<&SampledField>,
    opts: &SolveOptions,
) -> Result<(ReconReport, CurveRun)> {
    let cfg = *rec.config();
    let n_trust = trust
        .n_trust
        .ok_or_else(|| invalid("trust profile has no cap applied"))?;
    let window = SelectionWindow::new(n_zero(cfg.c), n_trust.min(rec.n_max()));
    let run = rec.residual_curve(&window)?;

    let mut chosen = opts.strategy.select(cfg.c, &window, &run.curve)?;
    if let Strategy::Theoretical { .. } = opts.strategy {
        if !window.contains(chosen) {
            warn!("theoretical rank {chosen} outside window [{}, {}]; clamping", window.n_lo, window.n_hi);
            chosen = chosen.clamp(window.n_lo, window.n_hi);
        }
    }

    let delta = opts.data_error.or(match opts.strategy {
        Strategy::Morozov { delta } | Strategy::Midpoint { delta } => Some(delta),
        _ => None,
    });
    let theory = opts.theory.or(match opts.strategy {
        Strategy::Theoretical { alpha, delta } => Some((alpha, delta)),
        _ => None,
    });
    let selections = Selections {
        n0: Some(window.n_lo),
        nstar: Some(select_residual_min(&run.curve)?),
        morozov: delta.map(|d| select_morozov(&run.curve, d)).transpose()?,
        midpoint: delta.map(|d| select_midpoint(&run.curve, d)).transpose()?,
        theoretical: theory.map(|(a, d)| theoretical_n(cfg.c, a, d)).transpose()?,
    };

    let chosen_rec = match run.reconstructions.get(&chosen) {
        Some(r) => r.clone(),
        None => rec.reconstruct(chosen)?,
    };
    let w = rec.data();
    let err_fourier = relative_error(&fourier::forward(&chosen_rec.field, cfg.r)?, w)?.value;
    let naive = naive_reconstruct(w, &cfg)?;
    let naive_err_fourier = relative_error(&fourier::forward(&naive, cfg.r)?, w)?.value;
    let (err_spatial, naive_err_spatial) = match truth {
        Some(v) => (
            Some(relative_error(&chosen_rec.field, v)?.value),
            Some(relative_error(&naive, v)?.value),
        ),
        None => (None, None),
    };

    let report = ReconReport {
        chosen_n: chosen,
        strategy: opts.strategy.name().to_string(),
        window,
        residual_curve: run.curve.clone(),
        selections,
        err_spatial,
        err_fourier,
        naive_err_spatial,
        naive_err_fourier,
        imag_mass: chosen_rec.imag_mass,
        reconstruction: Some(chosen_rec.field),
        naive: Some(naive),
    };
    Ok((report, run))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandlimited::apply_fc;
    use crate::phantom::{fourier_data, make_phantom, PhantomSpec};
    use crate::pswf::build_basis;
    use crate::radon::{forward_radon, uniform_angles};

    fn cfg(d: usize, n: usize) -> ProblemConfig {
        ProblemConfig::new(10.0, 1.0, d, n).unwrap()
    }

    fn lift(cfg: &ProblemConfig, g: Vec<Complex64>) -> SampledField {
        SampledField::from_values(Domain::Fourier, 1, cfg.n, cfg.r, g).unwrap()
    }

    #[test]
    fn one_dimensional_round_trip_through_the_presentation() {
        let c = cfg(1, 2049);
        let basis = build_basis(10.0, 18).unwrap();
        let grid = c.grid();
        let psi4: Vec<Complex64> = basis.eval(4, &grid.nodes()).unwrap().into_iter().map(|p| Complex64::new(p, 0.0)).collect();
        let w: Vec<Complex64> = apply_fc(10.0, &grid, &psi4)
            .unwrap()
            .into_iter()
            .map(|z| z * (c.sigma / (2.0 * PI)))
            .collect();
        let v = reconstruct_1d(&lift(&c, w), &c, &basis, 6).unwrap();
        for (a, b) in v.values.iter().zip(&psi4) {
            assert!((a - b).norm() < 1e-6);
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let basis = build_basis(10.0, 12).unwrap();
        let c1 = cfg(1, 129);
        let v = reconstruct_1d(&c1.zeros(Domain::Fourier), &c1, &basis, 8).unwrap();
        assert!(v.values.iter().all(|z| z.norm() == 0.0));
        let c2 = cfg(2, 33);
        let r = reconstruct_2d(&c2.zeros(Domain::Fourier), &c2, &basis, 8, &uniform_angles(10.0).unwrap()).unwrap();
        assert!(r.field.values.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn pipelines_are_linear() {
        let basis = build_basis(10.0, 12).unwrap();
        let c2 = cfg(2, 33);
        let w = fourier_data(&PhantomSpec::three_squares(), &c2).unwrap();
        let angles = uniform_angles(10.0).unwrap();
        let lambda = -2.75;
        let a = reconstruct_2d(&w, &c2, &basis, 9, &angles).unwrap().field;
        let b = reconstruct_2d(&w.scale(lambda), &c2, &basis, 9, &angles).unwrap().field;
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x * lambda - y).norm() <= 1e-12 * (1.0 + x.norm()));
        }
    }

    #[test]
    fn ray_sampling_constant_and_linear_data() {
        let c = cfg(2, 17);
        let ones = c.zeros(Domain::Fourier).map(|_| Complex64::new(1.0, 0.0));
        let angles = uniform_angles(15.0).unwrap();
        let grid = c.grid();
        let s = sample_rays(&ones, &angles, grid).unwrap();
        assert!(s.values.iter().all(|z| (z - 1.0).norm() < 1e-14));

        let mut lin = c.zeros(Domain::Fourier);
        let p = lin.axis();
        for (k, v) in lin.values.iter_mut().enumerate() {
            *v = Complex64::new(p[k % c.n], 0.0);
        }
        let s = sample_rays(&lin, &angles, grid).unwrap();
        for (k, t) in angles.iter().enumerate() {
            for (x, z) in grid.nodes().iter().zip(s.row(k)) {
                assert!((z.re - c.r * x * t.cos()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn radial_data_gives_angle_independent_rays() {
        let c = cfg(2, 129);
        let mut w = c.zeros(Domain::Fourier);
        let p = w.axis();
        for (k, v) in w.values.iter_mut().enumerate() {
            let (a, b) = (p[k % c.n], p[k / c.n]);
            *v = Complex64::new((-(a * a + b * b) / 20.0).exp(), 0.0);
        }
        let s = sample_rays(&w, &uniform_angles(2.5).unwrap(), c.grid()).unwrap();
        for k in 1..s.n_angles() {
            for (a, b) in s.row(k).iter().zip(s.row(0)) {
                assert!((a - b).norm() < 2e-3);
            }
        }
    }

    #[test]
    fn ray_data_agree_with_projected_phantom() {
        // (sigma / 2 pi)^2 F_c[R_theta v_sigma] should reproduce the exact data on each ray.
        let c = cfg(2, 257);
        let spec = PhantomSpec::three_squares();
        let v = make_phantom(&spec, &c).unwrap();
        let angles = [0.3, 1.2, 2.5];
        let grid = c.grid();
        let sino = forward_radon(&v, &angles, grid).unwrap();
        for (k, &t) in angles.iter().enumerate() {
            let model: Vec<Complex64> = apply_fc(c.c, &grid, sino.row(k))
                .unwrap()
                .into_iter()
                .map(|z| z / (2.0 * PI).powi(2))
                .collect();
            let pts: Vec<Vec<f64>> = grid.nodes().iter().map(|x| vec![c.r * x * t.cos(), c.r * x * t.sin()]).collect();
            let exact = crate::phantom::analytic_fourier(&spec, &pts).unwrap();
            let num: f64 = model.iter().zip(&exact).map(|(a, b)| (a - b).norm_sqr()).sum();
            let den: f64 = exact.iter().map(|b| b.norm_sqr()).sum();
            assert!((num / den).sqrt() < 0.02, "angle {t}: {}", (num / den).sqrt());
        }
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let basis = build_basis(5.0, 8).unwrap();
        let c = cfg(1, 129);
        assert!(reconstruct_1d(&c.zeros(Domain::Fourier), &c, &basis, 3).is_err());
        let basis = build_basis(10.0, 8).unwrap();
        assert!(reconstruct_1d(&c.zeros(Domain::Spatial), &c, &basis, 3).is_err());
        let c2 = cfg(2, 17);
        assert!(reconstruct_2d(&c2.zeros(Domain::Fourier), &c2, &basis, 3, &[0.0]).is_err());
    }

    #[test]
    fn naive_inversion_converges_for_wide_bands() {
        let spec = PhantomSpec { d: 1, parts: vec![crate::phantom::Part { shape: crate::phantom::Shape::Interval([-0.5, 0.5]), amp: 1.0 }] };
        let errs: Vec<f64> = [(20.0, 257), (80.0, 1025)]
            .iter()
            .map(|&(r, n)| {
                let c = ProblemConfig::new(r, 1.0, 1, n).unwrap();
                let w = fourier_data(&spec, &c).unwrap();
                let v = make_phantom(&spec, &c).unwrap();
                relative_error(&naive_reconstruct(&w, &c).unwrap(), &v).unwrap().value
            })
            .collect();
        assert!(errs[1] < errs[0], "{errs:?}");
    }
}
