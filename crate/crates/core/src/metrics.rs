//! Relative `L2` errors over the data or support ball, and residual curves.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{Domain, ProblemConfig, SampledField};
use crate::pswf::PswfBasis;
use crate::recon::{Reconstruction, Reconstructor};
use crate::regularize::{ResidualCurve, SelectionWindow};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReading {
    pub value: f64,
    pub domain: Domain,
}

/// Simpson-weighted `L2` norm over the closed ball of the field's grid.
pub fn l2_norm(u: &SampledField) -> f64 {
    u.values
        .iter()
        .zip(u.ball_weights())
        .map(|(z, w)| w * z.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// `L2` distance over the closed ball.
pub fn l2_distance(u: &SampledField, u0: &SampledField) -> Result<f64> {
    if !u.same_grid(u0) {
        return Err(invalid("fields live on different grids"));
    }
    Ok(u.values
        .iter()
        .zip(&u0.values)
        .zip(u0.ball_weights())
        .map(|((a, b), w)| w * (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// `||u - u0|| / ||u0||` over the closed ball.
pub fn relative_error(u: &SampledField, u0: &SampledField) -> Result<ErrorReading> {
    let norm = l2_norm(u0);
    if norm == 0.0 {
        return Err(Error::UndefinedReference);
    }
    Ok(ErrorReading {
        value: l2_distance(u, u0)? / norm,
        domain: u0.domain,
    })
}

/// Residuals over a window together with the reconstructions that produced them.
#[derive(Clone, Debug)]
pub struct CurveRun {
    pub curve: ResidualCurve,
    pub reconstructions: BTreeMap<usize, Reconstruction>,
}

/// `||F[v_n] - w||_{L2(B_r)}` for every `n` in the window.
pub fn residual_curve(
    w: &SampledField,
    cfg: &ProblemConfig,
    basis: &PswfBasis,
    window: &SelectionWindow,
    angles: Option<&[f64]>,
) -> Result<CurveRun> {
    Reconstructor::new(cfg, basis, w, angles.unwrap_or(&[]), Default::default())?.residual_curve(window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn field(v: &[(f64, f64)]) -> SampledField {
        SampledField::from_values(
            Domain::Spatial,
            1,
            v.len(),
            1.0,
            v.iter().map(|&(a, b)| Complex64::new(a, b)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn basic_readings() {
        let u0 = field(&[(1.0, 0.0), (2.0, 1.0), (0.5, -1.0)]);
        assert_eq!(relative_error(&u0, &u0).unwrap().value, 0.0);
        assert!((relative_error(&u0.scale(0.0), &u0).unwrap().value - 1.0).abs() < 1e-15);
        assert!((relative_error(&u0.scale(2.0), &u0).unwrap().value - 1.0).abs() < 1e-15);
        assert!(matches!(relative_error(&u0, &u0.scale(0.0)), Err(Error::UndefinedReference)));
        let other = SampledField::zeros(Domain::Spatial, 1, 5, 1.0);
        assert!(relative_error(&other, &u0).is_err());
    }

    fn arb_field() -> impl Strategy<Value = SampledField> {
        prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 9).prop_map(|v| field(&v))
    }

    proptest! {
        #[test]
        fn scale_invariance(u in arb_field(), u0 in arb_field(), lambda in 0.1f64..10.0) {
            prop_assume!(l2_norm(&u0) > 1e-3);
            let a = relative_error(&u, &u0).unwrap().value;
            let b = relative_error(&u.scale(lambda), &u0.scale(lambda)).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }

        #[test]
        fn triangle_bound(u in arb_field(), u0 in arb_field(), u1 in arb_field()) {
            prop_assume!(l2_norm(&u0) > 1e-3 && l2_norm(&u1) > 1e-3);
            let lhs = relative_error(&u, &u0).unwrap().value;
            let rhs = relative_error(&u, &u1).unwrap().value * l2_norm(&u1) / l2_norm(&u0)
                + relative_error(&u1, &u0).unwrap().value;
            prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-15);
        }
    }
}
