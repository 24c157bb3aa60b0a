//! Piecewise-constant phantoms with closed-form Fourier transforms, relative
//! noise injection and the discretisation noise of the sampled forward model.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::field::{Domain, ProblemConfig, SampledField};
use crate::fourier;
use crate::metrics::relative_error;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    /// `[a, b]`
    Interval([f64; 2]),
    /// `[ax, bx] x [ay, by]`
    Rect([f64; 4]),
}

impl Shape {
    fn dim(&self) -> usize {
        match self {
            Shape::Interval(_) => 1,
            Shape::Rect(_) => 2,
        }
    }

    fn ranges(&self) -> Vec<(f64, f64)> {
        match *self {
            Shape::Interval([a, b]) => vec![(a, b)],
            Shape::Rect([ax, bx, ay, by]) => vec![(ax, bx), (ay, by)],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Part {
    pub shape: Shape,
    pub amp: f64,
}

/// A sum of amplitude-weighted indicators of disjoint closed intervals or rectangles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub d: usize,
    pub parts: Vec<Part>,
}

impl PhantomSpec {
    /// Two unit bumps of width 0.2 around the origin, separated by `pi / (2 r)`.
    pub fn two_bumps(r: f64) -> Self {
        let gap = PI / (2.0 * r);
        let width = 0.2;
        Self {
            d: 1,
            parts: vec![
                Part { shape: Shape::Interval([-gap / 2.0 - width, -gap / 2.0]), amp: 1.0 },
                Part { shape: Shape::Interval([gap / 2.0, gap / 2.0 + width]), amp: 1.0 },
            ],
        }
    }

    /// Three unit squares of side 0.35: two at the bottom 0.1 apart, one on top
    /// 0.05 above both.
    pub fn three_squares() -> Self {
        let (side, gx, gy) = (0.35, 0.1, 0.05);
        let y0 = -(2.0 * side + gy) / 2.0;
        let rect = |ax: f64, ay: f64| Part {
            shape: Shape::Rect([ax, ax + side, ay, ay + side]),
            amp: 1.0,
        };
        Self {
            d: 2,
            parts: vec![
                rect(-gx / 2.0 - side, y0),
                rect(gx / 2.0, y0),
                rect(-side / 2.0, y0 + side + gy),
            ],
        }
    }

    /// Looks up `two-bumps` or `three-squares`.
    pub fn builtin(name: &str, r: f64) -> Result<Self> {
        match name {
            "two-bumps" => Ok(Self::two_bumps(r)),
            "three-squares" => Ok(Self::three_squares()),
            other => Err(invalid(format!(
                "unknown builtin phantom {other}; expected two-bumps or three-squares"
            ))),
        }
    }

    /// Checks dimensions, disjointness and containment in the open ball `B_sigma`.
    pub fn validate(&self, sigma: f64) -> Result<()> {
        if self.d != 1 && self.d != 2 {
            return Err(invalid(format!("phantom dimension must be 1 or 2, got {}", self.d)));
        }
        for (i, p) in self.parts.iter().enumerate() {
            if p.shape.dim() != self.d {
                return Err(invalid(format!("part {i} does not match dimension {}", self.d)));
            }
            if !p.amp.is_finite() {
                return Err(invalid(format!("part {i} has a non-finite amplitude")));
            }
            let ranges = p.shape.ranges();
            if ranges.iter().any(|(a, b)| !(a < b)) {
                return Err(invalid(format!("part {i} is empty or inverted")));
            }
            let far: f64 = ranges
                .iter()
                .map(|(a, b)| a.abs().max(b.abs()).powi(2))
                .sum::<f64>()
                .sqrt();
            if far >= sigma {
                return Err(invalid(format!("part {i} leaves the support ball of radius {sigma}")));
            }
            for (j, q) in self.parts.iter().enumerate().take(i) {
                let touches = ranges
                    .iter()
                    .zip(q.shape.ranges())
                    .all(|(&(a, b), (c, d))| a <= d && c <= b);
                if touches {
                    return Err(invalid(format!("parts {j} and {i} overlap")));
                }
            }
        }
        Ok(())
    }
}

/// Samples the phantom on the spatial grid of `cfg`; boundary nodes count as inside.
pub fn make_phantom(spec: &PhantomSpec, cfg: &ProblemConfig) -> Result<SampledField> {
    check_dims(spec, cfg)?;
    spec.validate(cfg.sigma)?;
    let mut field = cfg.zeros(Domain::Spatial);
    let q = field.axis();
    let n = cfg.n;
    for part in &spec.parts {
        let ranges = part.shape.ranges();
        let inside = |k: usize, axis: usize| {
            let (a, b) = ranges[axis];
            q[k] >= a && q[k] <= b
        };
        for (idx, v) in field.values.iter_mut().enumerate() {
            let hit = if cfg.d == 1 {
                inside(idx, 0)
            } else {
                inside(idx % n, 0) && inside(idx / n, 1)
            };
            if hit {
                *v += part.amp;
            }
        }
    }
    Ok(field)
}

fn check_dims(spec: &PhantomSpec, cfg: &ProblemConfig) -> Result<()> {
    if spec.d != cfg.d {
        return Err(invalid(format!(
            "phantom is {}-d but the problem is {}-d",
            spec.d, cfg.d
        )));
    }
    Ok(())
}

/// `(2 pi)^{-1} \int_a^b e^{ipq} dq`, written via `sinc` so that small `p` is stable.
fn interval_factor(p: f64, a: f64, b: f64) -> Complex64 {
    let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
    let t = p * half;
    let sinc = if t.abs() < 1e-8 { 1.0 - t * t / 6.0 } else { t.sin() / t };
    Complex64::cis(p * mid) * ((b - a) * sinc / (2.0 * PI))
}

/// Closed-form `(2 pi)^{-d} \int e^{ipq} v(q) dq` at each point.
pub fn analytic_fourier(spec: &PhantomSpec, points: &[Vec<f64>]) -> Result<Vec<Complex64>> {
    points
        .iter()
        .map(|p| {
            if p.len() != spec.d {
                return Err(invalid(format!("frequency point of length {} for a {}-d phantom", p.len(), spec.d)));
            }
            Ok(spec
                .parts
                .iter()
                .map(|part| {
                    part.shape
                        .ranges()
                        .iter()
                        .zip(p)
                        .map(|(&(a, b), &pk)| interval_factor(pk, a, b))
                        .product::<Complex64>()
                        * part.amp
                })
                .sum())
        })
        .collect()
}

/// The exact transform sampled on the whole Fourier grid of `cfg`.
pub fn fourier_data(spec: &PhantomSpec, cfg: &ProblemConfig) -> Result<SampledField> {
    check_dims(spec, cfg)?;
    let mut field = cfg.zeros(Domain::Fourier);
    let p = field.axis();
    let n = cfg.n;
    for part in &spec.parts {
        let factors: Vec<Vec<Complex64>> = part
            .shape
            .ranges()
            .iter()
            .map(|&(a, b)| p.iter().map(|&pk| interval_factor(pk, a, b)).collect())
            .collect();
        for (idx, v) in field.values.iter_mut().enumerate() {
            let f = if cfg.d == 1 {
                factors[0][idx]
            } else {
                factors[0][idx % n] * factors[1][idx / n]
            };
            *v += f * part.amp;
        }
    }
    Ok(field)
}

/// Relative noise level and generator seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub delta: f64,
    pub seed: u64,
}

/// Adds complex Gaussian noise on the closed data ball, scaled so that the
/// relative `L2(B_r)` deviation is exactly `delta`.
pub fn add_noise(data: &SampledField, spec: &NoiseSpec) -> Result<SampledField> {
    if !(spec.delta >= 0.0 && spec.delta.is_finite()) {
        return Err(invalid(format!("noise level must be nonnegative, got {}", spec.delta)));
    }
    if spec.delta == 0.0 {
        return Ok(data.clone());
    }
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mask = data.ball_mask();
    let eta: Vec<Complex64> = mask
        .iter()
        .map(|&inside| {
            if inside {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let w = data.ball_weights();
    let norm = |v: &[Complex64]| v.iter().zip(&w).map(|(z, w)| w * z.norm_sqr()).sum::<f64>().sqrt();
    let eta_norm = norm(&eta);
    if eta_norm == 0.0 {
        return Ok(data.clone());
    }
    let scale = spec.delta * norm(&data.values) / eta_norm;
    let mut out = data.clone();
    for (v, e) in out.values.iter_mut().zip(&eta) {
        *v += e * scale;
    }
    Ok(out)
}

/// Relative misfit between the quadrature forward model of the sampled phantom
/// and its exact transform on the Fourier grid.
pub fn discretization_noise(spec: &PhantomSpec, cfg: &ProblemConfig) -> Result<f64> {
    let sampled = fourier::forward(&make_phantom(spec, cfg)?, cfg.r)?;
    Ok(relative_error(&sampled, &fourier_data(spec, cfg)?)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::UniformInterval;
    use proptest::prelude::*;

    fn cfg(d: usize, n: usize) -> ProblemConfig {
        ProblemConfig::new(10.0, 1.0, d, n).unwrap()
    }

    #[test]
    fn closed_interval_sampling() {
        let spec = PhantomSpec { d: 1, parts: vec![Part { shape: Shape::Interval([-0.5, 0.5]), amp: 1.0 }] };
        let v = make_phantom(&spec, &cfg(1, 5)).unwrap();
        let re: Vec<f64> = v.values.iter().map(|z| z.re).collect();
        assert_eq!(re, vec![0.0, 1.0, 1.0, 1.0, 0.0]);
        let empty = PhantomSpec { d: 1, parts: vec![] };
        assert!(make_phantom(&empty, &cfg(1, 5)).unwrap().values.iter().all(|z| z.re == 0.0));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let overlap = PhantomSpec {
            d: 1,
            parts: vec![
                Part { shape: Shape::Interval([-0.5, 0.1]), amp: 1.0 },
                Part { shape: Shape::Interval([0.0, 0.5]), amp: 1.0 },
            ],
        };
        assert!(overlap.validate(1.0).is_err());
        let outside = PhantomSpec { d: 2, parts: vec![Part { shape: Shape::Rect([0.0, 0.8, 0.0, 0.8]), amp: 1.0 }] };
        assert!(outside.validate(1.0).is_err());
        let mixed = PhantomSpec { d: 2, parts: vec![Part { shape: Shape::Interval([0.0, 0.1]), amp: 1.0 }] };
        assert!(mixed.validate(1.0).is_err());
        assert!(PhantomSpec::two_bumps(10.0).validate(1.0).is_ok());
        assert!(PhantomSpec::three_squares().validate(1.0).is_ok());
    }

    #[test]
    fn builtin_geometry() {
        let s = PhantomSpec::three_squares();
        let r: Vec<[f64; 4]> = s
            .parts
            .iter()
            .map(|p| match p.shape {
                Shape::Rect(r) => r,
                Shape::Interval(_) => unreachable!(),
            })
            .collect();
        assert!((r[1][0] - r[0][1] - 0.1).abs() < 1e-15);
        assert!((r[2][2] - r[0][3] - 0.05).abs() < 1e-15);
        let b = PhantomSpec::two_bumps(10.0);
        if let (Shape::Interval([_, b0]), Shape::Interval([a1, _])) = (b.parts[0].shape, b.parts[1].shape) {
            assert!((a1 - b0 - PI / 20.0).abs() < 1e-15);
        }
    }

    #[test]
    fn json_form() {
        let spec: PhantomSpec =
            serde_json::from_str(r#"{"d":2,"parts":[{"shape":{"rect":[-0.1,0.1,-0.2,0.2]},"amp":2.0}]}"#).unwrap();
        assert_eq!(spec.parts[0].shape, Shape::Rect([-0.1, 0.1, -0.2, 0.2]));
        let text = serde_json::to_string(&PhantomSpec::two_bumps(10.0)).unwrap();
        assert!(text.contains("\"interval\""));
    }

    #[test]
    fn analytic_transform_special_values() {
        let unit = PhantomSpec { d: 1, parts: vec![Part { shape: Shape::Interval([-1.0, 1.0]), amp: 1.0 }] };
        let v = analytic_fourier(&unit, &[vec![0.0]]).unwrap();
        assert!((v[0] - 1.0 / PI).norm() < 1e-16);
        let pts: Vec<Vec<f64>> = (0..50).map(|k| vec![k as f64 * 0.37 - 9.0]).collect();
        for z in analytic_fourier(&PhantomSpec::two_bumps(10.0), &pts).unwrap() {
            assert!(z.im.abs() < 1e-15);
        }
    }

    fn trapezoid_fourier(spec: &PhantomSpec, p: &[f64], n: usize) -> Complex64 {
        // Brute-force quadrature of the defining integral, one axis per factor.
        let g = UniformInterval::new(n).unwrap();
        let x = g.nodes();
        let mut total = Complex64::new(0.0, 0.0);
        for part in &spec.parts {
            let mut prod = Complex64::new(part.amp, 0.0);
            for (&(a, b), &pk) in part.shape.ranges().iter().zip(p) {
                // Integrate exactly over the cells the interval covers, subdividing
                // cut cells so the oracle does not share the sampling error.
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..n - 1 {
                    let (lo, hi) = (x[k].max(a), x[k + 1].min(b));
                    if hi <= lo {
                        continue;
                    }
                    let m = 64;
                    let dh = (hi - lo) / m as f64;
                    for i in 0..=m {
                        let w = if i == 0 || i == m { 0.5 } else { 1.0 };
                        s += Complex64::cis(pk * (lo + i as f64 * dh)) * (w * dh);
                    }
                }
                prod *= s / (2.0 * PI);
            }
            total += prod;
        }
        total
    }

    #[test]
    fn analytic_transform_matches_quadrature_oracle() {
        for spec in [PhantomSpec::two_bumps(10.0), PhantomSpec::three_squares()] {
            let pts: Vec<Vec<f64>> = (0..9)
                .map(|k| {
                    let p = -10.0 + 2.5 * k as f64;
                    if spec.d == 1 { vec![p] } else { vec![p * 0.6, -p * 0.7] }
                })
                .collect();
            let exact = analytic_fourier(&spec, &pts).unwrap();
            for (p, e) in pts.iter().zip(exact) {
                let q = trapezoid_fourier(&spec, p, 4097);
                assert!((q - e).norm() < 1e-6, "p={p:?}: {q} vs {e}");
            }
        }
    }

    #[test]
    fn grid_data_matches_pointwise_transform() {
        let c = cfg(2, 9);
        let spec = PhantomSpec::three_squares();
        let grid = fourier_data(&spec, &c).unwrap();
        let p = grid.axis();
        for iy in 0..9 {
            for ix in 0..9 {
                let e = analytic_fourier(&spec, &[vec![p[ix], p[iy]]]).unwrap()[0];
                assert!((grid.at(ix, iy) - e).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_noise_is_identity() {
        let w = fourier_data(&PhantomSpec::two_bumps(10.0), &cfg(1, 129)).unwrap();
        assert_eq!(add_noise(&w, &NoiseSpec { delta: 0.0, seed: 3 }).unwrap(), w);
        assert!(add_noise(&w, &NoiseSpec { delta: -0.1, seed: 3 }).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10))]
        #[test]
        fn noise_level_is_exact(seed in any::<u64>(), delta in 0.001f64..0.5) {
            let w = fourier_data(&PhantomSpec::two_bumps(10.0), &cfg(1, 129)).unwrap();
            let noisy = add_noise(&w, &NoiseSpec { delta, seed }).unwrap();
            let e = relative_error(&noisy, &w).unwrap().value;
            prop_assert!((e - delta).abs() < 1e-12 * delta.max(1.0));
        }
    }

    #[test]
    fn noise_is_deterministic_per_seed() {
        let w = fourier_data(&PhantomSpec::three_squares(), &cfg(2, 33)).unwrap();
        let a = add_noise(&w, &NoiseSpec { delta: 0.2, seed: 7 }).unwrap();
        let b = add_noise(&w, &NoiseSpec { delta: 0.2, seed: 7 }).unwrap();
        let c = add_noise(&w, &NoiseSpec { delta: 0.2, seed: 8 }).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let mask = w.ball_mask();
        for ((x, y), m) in a.values.iter().zip(&w.values).zip(mask) {
            if !m {
                assert_eq!(x, y);
            }
        }
    }

    #[test]
    fn discretization_noise_shrinks_with_resolution() {
        let spec = PhantomSpec::two_bumps(10.0);
        let values: Vec<f64> = [129, 257, 513, 1025, 2049]
            .iter()
            .map(|&n| discretization_noise(&spec, &cfg(1, n)).unwrap())
            .collect();
        assert!(values.windows(2).all(|w| w[1] <= w[0]), "{values:?}");
    }

    #[test]
    fn smooth_profile_has_negligible_discretization_noise() {
        // psi_0 has no jumps, so the quadrature error is spectral; compare against
        // the transform obtained from the eigen relation.
        let basis = crate::pswf::build_basis(10.0, 0).unwrap();
        let c = cfg(1, 2049);
        let x = c.grid().nodes();
        let psi = basis.eval(0, &x).unwrap();
        let v = SampledField::from_values(Domain::Spatial, 1, 2049, 1.0, psi.iter().map(|&p| Complex64::new(p, 0.0)).collect()).unwrap();
        let mu = basis.eigenvalues()[0];
        let exact = SampledField::from_values(
            Domain::Fourier,
            1,
            2049,
            10.0,
            psi.iter().map(|&p| mu * p / (2.0 * PI)).collect(),
        )
        .unwrap();
        let sampled = fourier::forward(&v, 10.0).unwrap();
        assert!(relative_error(&sampled, &exact).unwrap().value < 1e-5);
    }
}
