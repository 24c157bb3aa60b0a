//! Choice of the truncation rank `n`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Costs closer than this, relative to the largest cost on the curve, are
/// treated as equal; the smaller rank wins such ties.
const TIE_RELATIVE: f64 = 1e-9;

/// `floor(2c / pi)`.
pub fn n_zero(c: f64) -> usize {
    (2.0 * c / std::f64::consts::PI).floor() as usize
}

/// `floor(3 + tau e c / 4)` where `tau >= 1` solves
/// `tau log tau = 4 alpha log(1/delta) / (e c)`.
pub fn theoretical_n(c: f64, alpha: f64, delta: f64) -> Result<usize> {
    if !(c > 0.0) {
        return Err(invalid(format!("bandwidth must be positive, got {c}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    let e = std::f64::consts::E;
    let rhs = 4.0 / (e * c) * alpha * (1.0 / delta).ln();
    let tau = solve_tau(rhs);
    Ok((3.0 + tau * e * c / 4.0).floor() as usize)
}

/// Root of `tau ln tau = rhs` on `[1, inf)` by bracket doubling and bisection.
fn solve_tau(rhs: f64) -> f64 {
    let g = |t: f64| t * t.ln() - rhs;
    if rhs <= 0.0 {
        return 1.0;
    }
    let mut lo = 1.0;
    let mut hi = 2.0;
    while g(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Admissible ranks `n_lo..=n_hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionWindow {
    pub n_lo: usize,
    pub n_hi: usize,
}

impl SelectionWindow {
    /// The window `n0..=n_trust`. When the trusted range ends below `n0` the
    /// window collapses to `n_trust` alone.
    pub fn new(n0: usize, n_trust: usize) -> Self {
        if n_trust < n0 {
            log::warn!("trusted rank {n_trust} is below n0 = {n0}; using n = {n_trust}");
            return Self {
                n_lo: n_trust,
                n_hi: n_trust,
            };
        }
        Self {
            n_lo: n0,
            n_hi: n_trust,
        }
    }

    pub fn ranks(&self) -> impl Iterator<Item = usize> {
        self.n_lo..=self.n_hi
    }

    pub fn len(&self) -> usize {
        self.n_hi - self.n_lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, n: usize) -> bool {
        (self.n_lo..=self.n_hi).contains(&n)
    }
}

/// Data misfit `||F[v_n] - w||_{L2(B_r)}` for each rank in a window.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualCurve {
    pub entries: Vec<(usize, f64)>,
}

impl ResidualCurve {
    pub fn new(mut entries: Vec<(usize, f64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        Self { entries }
    }

    pub fn residual(&self, n: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.0 == n).map(|e| e.1)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// CSV with columns `n,residual,selected_by`; `selected_by` joins the
    /// strategy names that picked that rank with `|`.
    pub fn to_csv(&self, selections: &Selections) -> String {
        let mut out = String::from("n,residual,selected_by\n");
        for &(n, r) in &self.entries {
            let _ = writeln!(out, "{n},{r:?},{}", selections.labels(n).join("|"));
        }
        out
    }
}

/// Arg-min of `cost` over the curve, ties going to the smaller rank.
fn argmin_by(curve: &ResidualCurve, cost: impl Fn(f64) -> f64) -> Result<usize> {
    if curve.is_empty() {
        return Err(invalid("residual curve is empty"));
    }
    let best = curve
        .entries
        .iter()
        .map(|e| cost(e.1))
        .fold(f64::INFINITY, f64::min);
    let worst = curve.entries.iter().map(|e| cost(e.1)).fold(0.0, f64::max);
    let tol = TIE_RELATIVE * worst;
    Ok(curve
        .entries
        .iter()
        .find(|e| cost(e.1) - best <= tol)
        .map(|e| e.0)
        .expect("minimum is attained"))
}

/// Residual minimization: the rank with the smallest misfit.
pub fn select_residual_min(curve: &ResidualCurve) -> Result<usize> {
    argmin_by(curve, |r| r)
}

/// Morozov's discrepancy principle: the rank whose misfit is closest to `delta`.
pub fn select_morozov(curve: &ResidualCurve, delta: f64) -> Result<usize> {
    if !(delta > 0.0) {
        return Err(invalid(format!("discrepancy bound must be positive, got {delta}")));
    }
    argmin_by(curve, |r| (r - delta).abs())
}

/// `floor((n_star + n_delta) / 2)`.
pub fn select_midpoint(curve: &ResidualCurve, delta: f64) -> Result<usize> {
    Ok((select_residual_min(curve)? + select_morozov(curve, delta)?) / 2)
}

/// How the rank is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Strategy {
    FixedN { n: usize },
    N0,
    ResidualMin,
    Morozov { delta: f64 },
    Midpoint { delta: f64 },
    Theoretical { alpha: f64, delta: f64 },
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::FixedN { .. } => "fixed-n",
            Strategy::N0 => "n0",
            Strategy::ResidualMin => "residual-min",
            Strategy::Morozov { .. } => "morozov",
            Strategy::Midpoint { .. } => "midpoint",
            Strategy::Theoretical { .. } => "theoretical",
        }
    }

    /// Whether the strategy needs the residual curve.
    pub fn needs_curve(&self) -> bool {
        matches!(
            self,
            Strategy::ResidualMin | Strategy::Morozov { .. } | Strategy::Midpoint { .. }
        )
    }

    /// Picks the rank. `delta` for Morozov and midpoint is an absolute bound
    /// on the data error in `L2(B_r)`.
    pub fn select(&self, c: f64, window: &SelectionWindow, curve: &ResidualCurve) -> Result<usize> {
        match *self {
            Strategy::FixedN { n } => Ok(n),
            Strategy::N0 => Ok(n_zero(c).min(window.n_hi)),
            Strategy::ResidualMin => select_residual_min(curve),
            Strategy::Morozov { delta } => select_morozov(curve, delta),
            Strategy::Midpoint { delta } => select_midpoint(curve, delta),
            Strategy::Theoretical { alpha, delta } => theoretical_n(c, alpha, delta),
        }
    }
}

/// Ranks picked by each rule, used to annotate exported curves.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Selections {
    pub n0: Option<usize>,
    pub nstar: Option<usize>,
    pub morozov: Option<usize>,
    pub midpoint: Option<usize>,
    pub theoretical: Option<usize>,
}

impl Selections {
    fn labels(&self, n: usize) -> Vec<&'static str> {
        [
            ("n0", self.n0),
            ("nstar", self.nstar),
            ("morozov", self.morozov),
            ("midpoint", self.midpoint),
            ("theoretical", self.theoretical),
        ]
        .into_iter()
        .filter(|(_, v)| *v == Some(n))
        .map(|(k, _)| k)
        .collect()
    }
}
