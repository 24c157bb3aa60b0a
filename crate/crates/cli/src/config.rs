//! Run configuration, layered as command-line flags over a JSON file over defaults.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use pswf_recon::field::ProblemConfig;
use pswf_recon::radon::FilterWindow;
use serde::{Deserialize, Serialize};

use crate::error::{config, CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyName {
    FixedN,
    N0,
    ResidualMin,
    Morozov,
    Midpoint,
    Theoretical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Filter {
    RamLak,
    Cosine,
}

impl From<Filter> for FilterWindow {
    fn from(f: Filter) -> Self {
        match f {
            Filter::RamLak => FilterWindow::RamLak,
            Filter::Cosine => FilterWindow::Cosine,
        }
    }
}

/// One configuration layer. Every field is optional so layers can be merged.
#[derive(Clone, Debug, Default, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    /// Bandwidth c = r * sigma.
    #[arg(global = true, long)]
    pub c: Option<f64>,
    /// Radius of the Fourier data ball.
    #[arg(global = true, long)]
    pub r: Option<f64>,
    /// Radius of the support ball.
    #[arg(global = true, long)]
    pub sigma: Option<f64>,
    /// Odd number of grid points per axis.
    #[arg(global = true, long = "N", id = "grid_points")]
    #[serde(rename = "N")]
    pub grid: Option<usize>,
    /// Dimension for sweep-n and noise-study.
    #[arg(global = true, long)]
    pub d: Option<usize>,
    /// Highest PSWF index to compute.
    #[arg(global = true, long)]
    pub n_max: Option<usize>,
    /// Trust tolerance.
    #[arg(global = true, long)]
    pub eps: Option<f64>,
    /// Builtin phantom name or path to a JSON phantom.
    #[arg(global = true, long)]
    pub phantom: Option<String>,
    /// Relative noise level.
    #[arg(global = true, long)]
    pub noise: Option<f64>,
    #[arg(global = true, long)]
    pub seed: Option<u64>,
    /// Number of consecutive seeds in noise-study.
    #[arg(global = true, long)]
    pub seeds: Option<u64>,
    #[arg(global = true, long, value_enum)]
    pub strategy: Option<StrategyName>,
    /// Rank for the fixed-n strategy.
    #[arg(global = true, long)]
    pub n: Option<usize>,
    /// Absolute data-error bound for Morozov and midpoint.
    #[arg(global = true, long)]
    pub discrepancy: Option<f64>,
    /// Data-error bound relative to the norm of the exact data.
    #[arg(global = true, long)]
    pub discrepancy_rel: Option<f64>,
    #[arg(global = true, long)]
    pub alpha: Option<f64>,
    /// Noise level used by the theoretical rank.
    #[arg(global = true, long)]
    pub theory_delta: Option<f64>,
    /// Angle step in degrees.
    #[arg(global = true, long)]
    pub angle_step: Option<f64>,
    #[arg(global = true, long, value_enum)]
    pub filter: Option<Filter>,
    /// First rank of sweep-n.
    #[arg(global = true, long)]
    pub n_from: Option<usize>,
    /// Last rank of sweep-n.
    #[arg(global = true, long)]
    pub n_to: Option<usize>,
    /// Output directory.
    #[arg(global = true, long)]
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl Layer {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| config(format!("{}: {e}", path.display())))
    }

    /// `self` with every field set in `top` replaced.
    pub fn overlay(mut self, top: &Layer) -> Self {
        overlay!(
            self, top, c, r, sigma, grid, d, n_max, eps, phantom, noise, seed, seeds, strategy, n,
            discrepancy, discrepancy_rel, alpha, theory_delta, angle_step, filter, n_from, n_to, out
        );
        self
    }
}

/// Fully resolved and validated configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub r: f64,
    pub sigma: f64,
    pub c: f64,
    pub d: usize,
    #[serde(rename = "N")]
    pub grid: usize,
    pub n_max: usize,
    pub eps: f64,
    pub phantom: String,
    pub noise: f64,
    pub seed: u64,
    pub seeds: u64,
    pub strategy: StrategyName,
    pub n: Option<usize>,
    pub discrepancy: Option<f64>,
    pub discrepancy_rel: Option<f64>,
    pub alpha: Option<f64>,
    pub theory_delta: Option<f64>,
    pub angle_step: f64,
    pub filter: Filter,
    pub n_from: Option<usize>,
    pub n_to: Option<usize>,
    #[serde(skip)]
    pub out: PathBuf,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(config(format!("{name} must be positive, got {v}")))
    }
}

impl RunConfig {
    /// Resolves a merged layer for `command`; `dim` is fixed by the command when given.
    pub fn resolve(command: &str, layer: Layer, dim: Option<usize>) -> Result<Self> {
        let sigma = positive("sigma", layer.sigma.unwrap_or(1.0))?;
        let (r, c) = match (layer.r, layer.c) {
            (Some(r), Some(c)) if (r * sigma - c).abs() > 1e-12 * c.abs() => {
                return Err(config(format!("c = {c} disagrees with r * sigma = {}", r * sigma)))
            }
            (Some(r), _) => (r, r * sigma),
            (None, Some(c)) => (c / sigma, c),
            (None, None) => (10.0 * sigma, 10.0 * sigma),
        };
        let c = positive("c", c)?;
        let r = positive("r", r)?;

        let d = match (dim, layer.d) {
            (Some(fixed), Some(d)) if d != fixed => {
                return Err(config(format!("{command} is {fixed}-dimensional, got d = {d}")))
            }
            (Some(fixed), _) => fixed,
            (None, d) => d.unwrap_or(1),
        };
        if d != 1 && d != 2 {
            return Err(config(format!("d must be 1 or 2, got {d}")));
        }
        let grid = layer.grid.unwrap_or(129);
        if grid < 3 || grid.is_multiple_of(2) {
            return Err(config(format!("N must be odd and at least 3, got {grid}")));
        }
        let n_max = layer.n_max.unwrap_or((2.0 * c / PI).ceil() as usize + 18);

        let noise = layer.noise.unwrap_or(0.0);
        if !(0.0..1.0).contains(&noise) {
            return Err(config(format!("noise must lie in [0, 1), got {noise}")));
        }
        let strategy = layer.strategy.unwrap_or(StrategyName::ResidualMin);
        match strategy {
            StrategyName::FixedN if layer.n.is_none() => return Err(config("fixed-n needs --n")),
            StrategyName::FixedN => {}
            _ if layer.n.is_some() => return Err(config("--n is only used by the fixed-n strategy")),
            StrategyName::Morozov | StrategyName::Midpoint
                if layer.discrepancy.is_none() && layer.discrepancy_rel.is_none() && noise == 0.0 =>
            {
                return Err(config(format!(
                    "{} needs --discrepancy, --discrepancy-rel or a nonzero --noise",
                    serde_json::to_value(strategy).unwrap().as_str().unwrap()
                )))
            }
            StrategyName::Theoretical if layer.alpha.is_none() => return Err(config("theoretical needs --alpha")),
            StrategyName::Theoretical if layer.theory_delta.is_none() && noise == 0.0 => {
                return Err(config("theoretical needs --theory-delta or a nonzero --noise"))
            }
            _ => {}
        }
        if let Some(a) = layer.alpha {
            if !(a > 0.0 && a < 1.0) {
                return Err(config(format!("alpha must lie in (0, 1), got {a}")));
            }
        }
        let theory_delta = layer.theory_delta.or((noise > 0.0 && layer.alpha.is_some()).then_some(noise));
        if let Some(t) = theory_delta {
            if !(t > 0.0 && t < 1.0) {
                return Err(config(format!("theory-delta must lie in (0, 1), got {t}")));
            }
        }
        for (name, v) in [("discrepancy", layer.discrepancy), ("discrepancy-rel", layer.discrepancy_rel)] {
            if let Some(v) = v {
                positive(name, v)?;
            }
        }
        if let (Some(a), Some(b)) = (layer.n_from, layer.n_to) {
            if a > b {
                return Err(config(format!("n-from {a} exceeds n-to {b}")));
            }
        }

        let phantom = layer
            .phantom
            .unwrap_or_else(|| if d == 1 { "two-bumps" } else { "three-squares" }.to_string());
        Ok(Self {
            command: command.to_string(),
            r,
            sigma,
            c,
            d,
            grid,
            n_max,
            eps: positive("eps", layer.eps.unwrap_or(1.0))?,
            phantom,
            noise,
            seed: layer.seed.unwrap_or(0),
            seeds: layer.seeds.unwrap_or(5).max(1),
            strategy,
            n: layer.n,
            discrepancy: layer.discrepancy,
            discrepancy_rel: layer.discrepancy_rel,
            alpha: layer.alpha,
            theory_delta,
            angle_step: positive("angle-step", layer.angle_step.unwrap_or(2.5))?,
            filter: layer.filter.unwrap_or(Filter::RamLak),
            n_from: layer.n_from,
            n_to: layer.n_to,
            out: layer.out.unwrap_or_else(|| PathBuf::from("out")),
        })
    }

    pub fn problem(&self) -> Result<ProblemConfig> {
        ProblemConfig::new(self.r, self.sigma, self.d, self.grid).map_err(|e| config(e.to_string()))
    }

    /// Relative level behind the Morozov bound, if any.
    pub fn discrepancy_level(&self) -> Option<f64> {
        self.discrepancy_rel.or((self.noise > 0.0).then_some(self.noise))
    }
}
