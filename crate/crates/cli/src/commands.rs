use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use log::info;
use pswf_recon::bandlimited::{trust_sequence, TrustProfile};
use pswf_recon::field::{ProblemConfig, SampledField};
use pswf_recon::fourier;
use pswf_recon::metrics::{l2_norm, relative_error};
use pswf_recon::phantom::{add_noise, discretization_noise, fourier_data, make_phantom, NoiseSpec, PhantomSpec};
use pswf_recon::pswf::{build_basis, PswfBasis};
use pswf_recon::radon::uniform_angles;
use pswf_recon::recon::{naive_reconstruct, solve, ReconReport, Reconstructor, SolveOptions};
use pswf_recon::regularize::{n_zero, SelectionWindow, Strategy};
use serde::Serialize;

use crate::config::{RunConfig, StrategyName};
use crate::error::{config, Result};
use crate::output::Outputs;

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

fn report<T: Serialize>(out: &mut Outputs, cfg: &RunConfig, body: T) -> Result<()> {
    out.write_json("report.json", &Report { config: cfg, body })
}

fn load_phantom(cfg: &RunConfig) -> Result<PhantomSpec> {
    let path = Path::new(&cfg.phantom);
    let spec = if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|source| crate::error::CliError::Io {
            path: cfg.phantom.clone(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| config(format!("{}: {e}", cfg.phantom)))?
    } else {
        PhantomSpec::builtin(&cfg.phantom, cfg.r)
            .map_err(|_| config(format!("{} is neither a builtin phantom nor a file", cfg.phantom)))?
    };
    if spec.d != cfg.d {
        return Err(config(format!("phantom is {}-dimensional, run is {}-dimensional", spec.d, cfg.d)));
    }
    spec.validate(cfg.sigma)?;
    Ok(spec)
}

fn basis_and_trust(cfg: &RunConfig, problem: &ProblemConfig) -> Result<(PswfBasis, TrustProfile)> {
    let basis = build_basis(cfg.c, cfg.n_max)?;
    let trust = trust_sequence(&basis, &problem.grid())?.with_cap(cfg.eps)?;
    info!("trusted ranks up to {}", trust.n_trust.unwrap_or_default());
    Ok((basis, trust))
}

/// Synthetic experiment inputs shared by the reconstruction commands.
struct Experiment {
    problem: ProblemConfig,
    spec: PhantomSpec,
    truth: SampledField,
    exact: SampledField,
    basis: PswfBasis,
    trust: TrustProfile,
    angles: Vec<f64>,
}

impl Experiment {
    fn new(cfg: &RunConfig) -> Result<Self> {
        let problem = cfg.problem()?;
        let spec = load_phantom(cfg)?;
        let (basis, trust) = basis_and_trust(cfg, &problem)?;
        let angles = if cfg.d == 2 {
            uniform_angles(cfg.angle_step).map_err(|e| config(e.to_string()))?
        } else {
            vec![]
        };
        Ok(Self {
            truth: make_phantom(&spec, &problem)?,
            exact: fourier_data(&spec, &problem)?,
            problem,
            spec,
            basis,
            trust,
            angles,
        })
    }

    fn data(&self, noise: f64, seed: u64) -> Result<SampledField> {
        if noise > 0.0 {
            Ok(add_noise(&self.exact, &NoiseSpec { delta: noise, seed })?)
        } else {
            Ok(self.exact.clone())
        }
    }

    fn reconstructor(&self, cfg: &RunConfig, w: &SampledField) -> Result<Reconstructor> {
        Ok(Reconstructor::new(&self.problem, &self.basis, w, &self.angles, cfg.filter.into())?)
    }

    /// Absolute data-error bound; a relative level is scaled by the exact data norm.
    fn discrepancy(&self, cfg: &RunConfig) -> Option<f64> {
        cfg.discrepancy.or(cfg.discrepancy_level().map(|l| l * l2_norm(&self.exact)))
    }

    fn options(&self, cfg: &RunConfig) -> Result<SolveOptions> {
        let delta = self.discrepancy(cfg);
        let strategy = match cfg.strategy {
            StrategyName::FixedN => Strategy::FixedN { n: cfg.n.unwrap() },
            StrategyName::N0 => Strategy::N0,
            StrategyName::ResidualMin => Strategy::ResidualMin,
            StrategyName::Morozov => Strategy::Morozov { delta: delta.unwrap() },
            StrategyName::Midpoint => Strategy::Midpoint { delta: delta.unwrap() },
            StrategyName::Theoretical => Strategy::Theoretical {
                alpha: cfg.alpha.unwrap(),
                delta: cfg.theory_delta.unwrap(),
            },
        };
        if let Strategy::FixedN { n } = strategy {
            if n > cfg.n_max {
                return Err(config(format!("n = {n} exceeds n-max = {}", cfg.n_max)));
            }
        }
        Ok(SolveOptions {
            strategy,
            angles: self.angles.clone(),
            filter: cfg.filter.into(),
            data_error: delta,
            theory: cfg.alpha.zip(cfg.theory_delta),
        })
    }

    fn write_field(&self, out: &mut Outputs, stem: &str, field: &SampledField) -> Result<()> {
        if field.dim == 1 {
            out.write(&format!("{stem}.csv"), field.to_csv()?)
        } else {
            out.write(&format!("{stem}.bin"), field.to_binary())?;
            out.write_json(&format!("{stem}.header.json"), &field.header())
        }
    }
}

pub fn eigen_table(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let basis = build_basis(cfg.c, cfg.n_max)?;
    out.write("eigenvalues.csv", basis.eigen_table_csv())?;
    let threshold = (PI / cfg.c).sqrt();
    #[derive(Serialize)]
    struct Body {
        c: f64,
        n_max: usize,
        legendre_order: usize,
        n0: usize,
        threshold: f64,
        count_above_threshold: usize,
    }
    report(
        out,
        cfg,
        Body {
            c: cfg.c,
            n_max: cfg.n_max,
            legendre_order: basis.order(),
            n0: n_zero(cfg.c),
            threshold,
            count_above_threshold: basis.eigenvalues().iter().filter(|m| m.norm() >= threshold).count(),
        },
    )
}

pub fn trust(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let problem = cfg.problem()?;
    let (_, profile) = basis_and_trust(cfg, &problem)?;
    out.write("trust.csv", profile.to_csv())?;
    report(out, cfg, &profile)
}

#[derive(Serialize)]
struct ReconBody<'a> {
    #[serde(flatten)]
    report: &'a ReconReport,
    n_trust: Option<usize>,
    discrepancy: Option<f64>,
    discretization_noise: f64,
}

pub fn reconstruct(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let exp = Experiment::new(cfg)?;
    let w = exp.data(cfg.noise, cfg.seed)?;
    let rec = exp.reconstructor(cfg, &w)?;
    let opts = exp.options(cfg)?;
    let (rep, _) = solve(&rec, &exp.trust, Some(&exp.truth), &opts)?;
    info!("chosen n = {}", rep.chosen_n);

    exp.write_field(out, "recon", rep.reconstruction.as_ref().unwrap())?;
    exp.write_field(out, "naive", rep.naive.as_ref().unwrap())?;
    exp.write_field(out, "phantom", &exp.truth)?;
    out.write("residual_curve.csv", rep.residual_curve.to_csv(&rep.selections))?;
    out.write("trust.csv", exp.trust.to_csv())?;
    let body = ReconBody {
        report: &rep,
        n_trust: exp.trust.n_trust,
        discrepancy: opts.data_error,
        discretization_noise: discretization_noise(&exp.spec, &exp.problem)?,
    };
    report(out, cfg, body)
}

pub fn sweep_n(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let exp = Experiment::new(cfg)?;
    let n_trust = exp.trust.n_trust.unwrap_or_default();
    let lo = cfg.n_from.unwrap_or_else(|| n_zero(cfg.c));
    let hi = cfg.n_to.unwrap_or(n_trust);
    if hi > cfg.n_max || lo > hi {
        return Err(config(format!("rank range [{lo}, {hi}] must lie within [0, n-max = {}]", cfg.n_max)));
    }
    let w = exp.data(cfg.noise, cfg.seed)?;
    let run = exp.reconstructor(cfg, &w)?.residual_curve(&SelectionWindow::new(lo, hi))?;
    let w_norm = l2_norm(&w);

    #[derive(Serialize)]
    struct Row {
        n: usize,
        residual: f64,
        err_spatial: f64,
        err_fourier: f64,
        imag_mass: f64,
        trusted: bool,
    }
    let mut rows = Vec::new();
    let mut csv = String::from("n,residual,relative_residual,err_spatial,err_fourier,imag_mass,trusted\n");
    for (&n, res) in &run.reconstructions {
        let residual = run.curve.residual(n).unwrap_or(f64::NAN);
        let row = Row {
            n,
            residual,
            err_spatial: relative_error(&res.field, &exp.truth)?.value,
            err_fourier: relative_error(&fourier::forward(&res.field, cfg.r)?, &w)?.value,
            imag_mass: res.imag_mass,
            trusted: n <= n_trust,
        };
        let _ = writeln!(
            csv,
            "{},{:?},{:?},{:?},{:?},{:?},{}",
            row.n,
            row.residual,
            row.residual / w_norm,
            row.err_spatial,
            row.err_fourier,
            row.imag_mass,
            row.trusted
        );
        rows.push(row);
    }
    out.write("sweep.csv", csv)?;
    out.write("trust.csv", exp.trust.to_csv())?;
    let naive = naive_reconstruct(&w, &exp.problem)?;

    #[derive(Serialize)]
    struct Body {
        n_trust: usize,
        naive_err_spatial: f64,
        naive_err_fourier: f64,
        rows: Vec<Row>,
    }
    let body = Body {
        n_trust,
        naive_err_spatial: relative_error(&naive, &exp.truth)?.value,
        naive_err_fourier: relative_error(&fourier::forward(&naive, cfg.r)?, &w)?.value,
        rows,
    };
    report(out, cfg, body)
}

pub fn noise_study(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    if cfg.noise <= 0.0 {
        return Err(config("noise-study needs a nonzero --noise"));
    }
    let exp = Experiment::new(cfg)?;
    let delta = exp.discrepancy(cfg).unwrap();
    let opts = SolveOptions {
        strategy: Strategy::Morozov { delta },
        angles: exp.angles.clone(),
        filter: cfg.filter.into(),
        data_error: Some(delta),
        theory: cfg.alpha.zip(cfg.theory_delta),
    };

    let mut csv = String::from("seed,selector,n,err_spatial,err_fourier\n");
    let mut sums: BTreeMap<&str, (f64, f64, usize)> = BTreeMap::new();
    let mut picks: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for seed in cfg.seed..cfg.seed + cfg.seeds {
        let w = exp.data(cfg.noise, seed)?;
        let rec = exp.reconstructor(cfg, &w)?;
        let (rep, run) = solve(&rec, &exp.trust, Some(&exp.truth), &opts)?;
        let s = &rep.selections;
        let mut rows = vec![
            ("naive", None, rep.naive.clone().unwrap()),
        ];
        for (name, n) in [
            ("n0", s.n0),
            ("nstar", s.nstar),
            ("morozov", s.morozov),
            ("midpoint", s.midpoint),
            ("theoretical", s.theoretical),
        ] {
            if let Some(n) = n {
                let field = match run.reconstructions.get(&n) {
                    Some(r) => r.field.clone(),
                    None => rec.reconstruct(n.clamp(rep.window.n_lo, rep.window.n_hi))?.field,
                };
                rows.push((name, Some(n), field));
            }
        }
        for (name, n, field) in rows {
            let es = relative_error(&field, &exp.truth)?.value;
            let ef = relative_error(&fourier::forward(&field, cfg.r)?, &w)?.value;
            let n_txt = n.map(|n| n.to_string()).unwrap_or_default();
            let _ = writeln!(csv, "{seed},{name},{n_txt},{es:?},{ef:?}");
            let e = sums.entry(name).or_default();
            *e = (e.0 + es, e.1 + ef, e.2 + 1);
            if let Some(n) = n {
                picks.entry(name).or_default().push(n);
            }
        }
    }
    out.write("noise_study.csv", csv)?;

    #[derive(Serialize)]
    struct Summary {
        mean_err_spatial: f64,
        mean_err_fourier: f64,
        ranks: Vec<usize>,
    }
    #[derive(Serialize)]
    struct Body {
        discrepancy: f64,
        n_trust: Option<usize>,
        selectors: BTreeMap<String, Summary>,
    }
    let selectors = sums
        .into_iter()
        .map(|(name, (es, ef, k))| {
            let summary = Summary {
                mean_err_spatial: es / k as f64,
                mean_err_fourier: ef / k as f64,
                ranks: picks.remove(name).unwrap_or_default(),
            };
            (name.to_string(), summary)
        })
        .collect();
    report(
        out,
        cfg,
        Body {
            discrepancy: delta,
            n_trust: exp.trust.n_trust,
            selectors,
        },
    )
}
