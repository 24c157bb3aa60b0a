//! Reference experiments and the image probes used to judge them.

use pswf_recon::bandlimited::{trust_sequence, TrustProfile};
use pswf_recon::field::{ProblemConfig, SampledField};
use pswf_recon::metrics::CurveRun;
use pswf_recon::phantom::{add_noise, fourier_data, make_phantom, NoiseSpec, PhantomSpec, Shape};
use pswf_recon::pswf::{build_basis, PswfBasis};
use pswf_recon::radon::{uniform_angles, FilterWindow};
use pswf_recon::recon::{solve, ReconReport, Reconstructor, SolveOptions};
use pswf_recon::regularize::Strategy;
use pswf_recon::{Error, Result};

pub const BANDWIDTH: f64 = 10.0;
pub const ANGLE_STEP_DEG: f64 = 2.5;

/// A phantom on a grid with c = 10, sigma = 1, trust cap 1 and 2.5 degree angles.
pub struct Experiment {
    pub cfg: ProblemConfig,
    pub basis: PswfBasis,
    pub truth: SampledField,
    pub exact: SampledField,
    pub trust: TrustProfile,
    pub angles: Vec<f64>,
}

pub struct Outcome {
    pub report: ReconReport,
    pub curve: CurveRun,
}

impl Experiment {
    pub fn new(spec: &PhantomSpec, n: usize, basis: PswfBasis) -> Result<Self> {
        let cfg = ProblemConfig::new(BANDWIDTH, 1.0, spec.d, n)?;
        let angles = if spec.d == 2 { uniform_angles(ANGLE_STEP_DEG)? } else { vec![] };
        Ok(Self {
            truth: make_phantom(spec, &cfg)?,
            exact: fourier_data(spec, &cfg)?,
            trust: trust_sequence(&basis, &cfg.grid())?.with_cap(1.0)?,
            cfg,
            basis,
            angles,
        })
    }

    pub fn run(&self, noise: Option<NoiseSpec>, strategy: Strategy) -> Result<Outcome> {
        let w = match noise {
            Some(n) => add_noise(&self.exact, &n)?,
            None => self.exact.clone(),
        };
        let rec = Reconstructor::new(&self.cfg, &self.basis, &w, &self.angles, FilterWindow::RamLak)?;
        let opts = SolveOptions {
            strategy,
            angles: self.angles.clone(),
            filter: FilterWindow::RamLak,
            data_error: None,
            theory: None,
        };
        let (report, curve) = solve(&rec, &self.trust, Some(&self.truth), &opts)?;
        Ok(Outcome { report, curve })
    }
}

pub fn default_basis() -> Result<PswfBasis> {
    build_basis(BANDWIDTH, 24)
}

/// Deepest interior local minimum of a 1-d profile on an open interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dip {
    pub has_local_min: bool,
    /// Smallest ratio of a local minimum to the lower of the maxima on its two sides.
    pub ratio: f64,
}

pub fn separating_dip(x: &[f64], u: &[f64], lo: f64, hi: f64) -> Dip {
    let seg: Vec<f64> = x.iter().zip(u).filter(|(t, _)| **t > lo && **t < hi).map(|(_, v)| *v).collect();
    let mut dip = Dip {
        has_local_min: false,
        ratio: f64::INFINITY,
    };
    for i in 1..seg.len().saturating_sub(1) {
        if seg[i] < seg[i - 1] && seg[i] <= seg[i + 1] {
            dip.has_local_min = true;
            let left = seg[..i].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let right = seg[i + 1..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            dip.ratio = dip.ratio.min(seg[i] / left.min(right));
        }
    }
    dip
}

/// Midpoints of the first two intervals of a 1-d phantom.
pub fn bump_centers(spec: &PhantomSpec) -> Result<(f64, f64)> {
    let mid = |k: usize| match spec.parts.get(k).map(|p| p.shape) {
        Some(Shape::Interval([a, b])) => Ok((a + b) / 2.0),
        _ => Err(Error::InvalidArgument("expected two intervals".into())),
    };
    Ok((mid(0)?, mid(1)?))
}

/// Gap-to-square ratios along the three cross-sections joining a bottom pair
/// of squares and a square above them: the horizontal cut through the bottom
/// pair, then the vertical cuts through the left and right overlaps. Each is
/// the smallest value strictly inside the gap over the smaller of the two
/// adjacent square means on the cut.
pub fn gap_ratios(img: &SampledField, spec: &PhantomSpec) -> Result<[f64; 3]> {
    let rect = |k: usize| match spec.parts.get(k).map(|p| p.shape) {
        Some(Shape::Rect(r)) => Ok(r),
        _ => Err(Error::InvalidArgument("expected three rectangles".into())),
    };
    let (left, right, top) = (rect(0)?, rect(1)?, rect(2)?);
    let axis = img.axis();
    let x = &axis;
    let h = x[1] - x[0];
    let near = |t: f64| ((t + img.half_width) / h).round() as usize;
    let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    let within = |a: f64, b: f64| (0..img.n).filter(move |&k| x[k] >= a && x[k] <= b);
    let inside = |a: f64, b: f64| (0..img.n).filter(move |&k| x[k] > a && x[k] < b);

    let row = near((left[2] + left[3]) / 2.0);
    let at_row = |k: usize| img.at(k, row).re;
    let gap = inside(left[1], right[0]).map(at_row).fold(f64::INFINITY, f64::min);
    let horizontal = gap / mean(within(left[0], left[1]).map(at_row).collect()).min(mean(within(right[0], right[1]).map(at_row).collect()));

    let vertical = |bottom: [f64; 4]| {
        let col = near((bottom[0].max(top[0]) + bottom[1].min(top[1])) / 2.0);
        let at_col = |k: usize| img.at(col, k).re;
        let gap = inside(bottom[3], top[2]).map(at_col).fold(f64::INFINITY, f64::min);
        gap / mean(within(bottom[2], bottom[3]).map(at_col).collect()).min(mean(within(top[2], top[3]).map(at_col).collect()))
    };
    Ok([horizontal, vertical(left), vertical(right)])
}
