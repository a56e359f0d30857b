//! Drives `run` and `diagnose` for a [`RunConfig`].

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::config::{Problem, RunConfig};
use crate::error::{Error, Result};
use crate::estimators::{
    rmse_experiment, rqmc_reference, Estimator, ExperimentConfig, MethodFailure, MethodRun,
    PlainEstimator, RatioEstimator, Reference, RmseTable,
};
use crate::linalg;
use crate::measure::{bgc_eigen_diagnostic, BgcDiagnostic, Family, GaussianMeasure, Proposal};
use crate::models::bond::bond_price_quadrature;
use crate::models::{
    logistic_load, logistic_test_fn, BondModel, CubicMinusLinear, ExpLinear, LogisticModel,
};
use crate::positivization::{PositivizationParams, PositivizedEstimator};
use crate::proposals::{find_mode, Integrand, Method, ModeOptions, ModeResult};

/// Proposal construction outcome for one method.
#[derive(Debug, Clone)]
pub struct MethodDiagnostic {
    pub method: Method,
    pub mode: Option<ModeResult>,
    pub proposal: Option<Proposal>,
    /// Eigenvalues of the proposal covariance `L L^T`, ascending.
    pub sigma_spectrum: Vec<f64>,
    pub bgc: Option<BgcDiagnostic>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub table: RmseTable,
    pub diagnostics: Vec<MethodDiagnostic>,
    pub report: String,
}

impl RunOutput {
    /// Methods that could not be built or estimated.
    pub fn failures(&self) -> Vec<MethodFailure> {
        let mut out: Vec<MethodFailure> = self
            .diagnostics
            .iter()
            .filter_map(|d| {
                d.error.as_ref().map(|e| MethodFailure {
                    method: d.method.name().to_string(),
                    message: e.clone(),
                })
            })
            .collect();
        out.extend(self.table.failures.iter().cloned());
        out
    }
}

fn mode_options(cfg: &RunConfig) -> ModeOptions {
    ModeOptions {
        init: cfg.mode_init.clone(),
        ..ModeOptions::default()
    }
}

fn diagnose_method<F: Integrand + ?Sized>(
    f: &F,
    base: &GaussianMeasure,
    method: Method,
    cfg: &RunConfig,
) -> MethodDiagnostic {
    let opts = mode_options(cfg);
    let mut diag = MethodDiagnostic {
        method,
        mode: None,
        proposal: None,
        sigma_spectrum: Vec::new(),
        bgc: None,
        error: None,
    };
    if method != Method::PriorIs {
        match find_mode(f, base, &opts) {
            Ok(m) => diag.mode = Some(m),
            Err(e) => {
                diag.error = Some(e.to_string());
                return diag;
            }
        }
    }
    let prop = match method.build(f, base, &opts, cfg.proposal_family()) {
        Ok(p) => p,
        Err(e) => {
            diag.error = Some(e.to_string());
            return diag;
        }
    };
    diag.sigma_spectrum = linalg::jacobi_eigen(&linalg::symmetrize(&prop.sigma()))
        .map(|e| e.values)
        .unwrap_or_default();
    match bgc_eigen_diagnostic(prop.root_l(), base, BgcDiagnostic::DEFAULT_TOL) {
        Ok(b) => diag.bgc = Some(b),
        Err(e) => diag.error = Some(e.to_string()),
    }
    diag.proposal = Some(prop);
    diag
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Plain-text report of every method's mode, spectrum and verdict.
pub fn render_report(cfg: &RunConfig, diags: &[MethodDiagnostic]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "problem: {}", cfg.problem);
    let _ = writeln!(s, "family: {}", cfg.proposal_family().name());
    if let Family::StudentT { nu } = cfg.proposal_family() {
        let _ = writeln!(s, "nu: {nu}");
    }
    for d in diags {
        let _ = writeln!(s, "\n[{}]", d.method);
        if let Some(m) = &d.mode {
            let _ = writeln!(s, "mode: {}", fmt_vec(&m.mu_star));
            let _ = writeln!(
                s,
                "mode search: converged={} iterations={} grad_norm={:.3e}",
                m.converged, m.iterations, m.grad_norm
            );
        }
        if !d.sigma_spectrum.is_empty() {
            let _ = writeln!(
                s,
                "proposal covariance spectrum: {}",
                fmt_vec(&d.sigma_spectrum)
            );
        }
        if let Some(b) = &d.bgc {
            let _ = writeln!(s, "eig(L^T Sigma0^-1 L): {}", fmt_vec(&b.eigenvalues));
            let _ = writeln!(s, "min eigenvalue: {:.6}", b.min_eig);
            let verdict = if b.passes { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "boundary growth check: {verdict}");
            if matches!(cfg.proposal_family(), Family::StudentT { .. }) {
                let _ = writeln!(
                    s,
                    "note: the student_t likelihood ratio is bounded; the check above applies to the gaussian proposal with the same (mu, Sigma)"
                );
            } else if !b.passes {
                let _ = writeln!(
                    s,
                    "note: the likelihood ratio grows faster than the boundary growth condition allows; expect RQMC RMSE to decay slower than N^-1"
                );
            }
        }
        if let Some(e) = &d.error {
            let _ = writeln!(s, "error: {e}");
        }
    }
    s
}

enum Setup {
    Bond(BondModel),
    Logistic(LogisticModel),
    Exp(ExpLinear),
    Signed,
}

fn setup(cfg: &RunConfig) -> Result<Setup> {
    Ok(match cfg.problem {
        Problem::Bond => Setup::Bond(BondModel::new(cfg.r0, cfg.sigma)?),
        Problem::Logistic => Setup::Logistic(match &cfg.dataset {
            Some(p) => logistic_load(p, cfg.rows, cfg.standardize)?,
            None => LogisticModel::mroz(cfg.rows, cfg.standardize)?,
        }),
        Problem::SyntheticExp => Setup::Exp(ExpLinear::new(vec![cfg.exp_coef; cfg.exp_dim])),
        Problem::PositivizationDemo => Setup::Signed,
    })
}

/// Mode, proposal spectrum and verdict for every configured method.
pub fn diagnose(cfg: &RunConfig) -> Result<(Vec<MethodDiagnostic>, String)> {
    cfg.validate()?;
    let diags = match setup(cfg)? {
        Setup::Bond(m) => diagnose_all(&m.integrand(), cfg),
        Setup::Logistic(m) => diagnose_all(&m.integrand(), cfg),
        Setup::Exp(f) => diagnose_all(&f, cfg),
        Setup::Signed => diagnose_all(&CubicMinusLinear, cfg),
    };
    let report = render_report(cfg, &diags);
    Ok((diags, report))
}

fn diagnose_all<F: Integrand + ?Sized>(f: &F, cfg: &RunConfig) -> Vec<MethodDiagnostic> {
    let base = GaussianMeasure::standard(f.dim());
    cfg.methods
        .iter()
        .map(|&m| diagnose_method(f, &base, m, cfg))
        .collect()
}

/// Runs the RMSE experiment and assembles the diagnostics report.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    match setup(cfg)? {
        Setup::Bond(model) => {
            let f = model.integrand();
            let refs = vec![Reference {
                value: bond_price_quadrature(&model),
                provenance: crate::estimators::Provenance::Quadrature,
            }];
            run_with(&f, &PlainEstimator { f: &f }, cfg, |_| Ok(refs.clone()))
        }
        Setup::Exp(f) => {
            let c = f.exact(&GaussianMeasure::standard(f.dim()));
            run_with(&f, &PlainEstimator { f: &f }, cfg, |_| {
                Ok(vec![Reference::closed_form(c)])
            })
        }
        Setup::Signed => {
            let f = CubicMinusLinear;
            let est = PositivizedEstimator {
                f: &f,
                params: PositivizationParams::new(cfg.eta)?,
            };
            run_with(&f, &est, cfg, |_| Ok(vec![Reference::closed_form(0.0); 2]))
        }
        Setup::Logistic(model) => {
            let f = model.integrand();
            let tf = logistic_test_fn;
            let est = RatioEstimator {
                likelihood: &f,
                f_test: &tf,
            };
            let ref_m = cfg
                .ref_log2_n
                .unwrap_or(cfg.n_grid[cfg.n_grid.len() - 1] + 3);
            run_with(&f, &est, cfg, |diags| {
                let base = GaussianMeasure::standard(f.dim());
                let prop = diags
                    .iter()
                    .find(|d| d.method == Method::Odis)
                    .and_then(|d| d.proposal.clone())
                    .map_or_else(
                        || Method::Odis.build(&f, &base, &mode_options(cfg), cfg.proposal_family()),
                        Ok,
                    )?;
                rqmc_reference(
                    &est,
                    &prop,
                    &base,
                    ref_m,
                    cfg.ref_replicates,
                    cfg.seed ^ 0x5eed,
                    cfg.coord(),
                )
            })
        }
    }
}

fn run_with<F, E>(
    f: &F,
    est: &E,
    cfg: &RunConfig,
    references: impl FnOnce(&[MethodDiagnostic]) -> Result<Vec<Reference>>,
) -> Result<RunOutput>
where
    F: Integrand + ?Sized,
    E: Estimator + ?Sized,
{
    let base = GaussianMeasure::standard(f.dim());
    let diags: Vec<MethodDiagnostic> = cfg
        .methods
        .iter()
        .map(|&m| diagnose_method(f, &base, m, cfg))
        .collect();
    let refs = references(&diags)?;
    let mut runs = Vec::new();
    for &sampler in &cfg.samplers {
        for d in &diags {
            if let Some(p) = &d.proposal {
                runs.push(MethodRun {
                    name: d.method.name().to_string(),
                    proposal: p.clone(),
                    sampler,
                });
            }
        }
    }
    let exp = ExperimentConfig {
        log2_n: cfg.n_grid.clone(),
        replicates: cfg.replicates,
        seed0: cfg.seed,
        coord: cfg.coord(),
    };
    let table = rmse_experiment(est, &base, &runs, &exp, &refs)?;
    let mut report = render_report(cfg, &diags);
    let _ = writeln!(report, "\n[references]");
    for (name, r) in est.estimands().iter().zip(&refs) {
        let label = if name.is_empty() {
            "value"
        } else {
            name.as_str()
        };
        let _ = writeln!(report, "{label}: {:.12} ({})", r.value, r.provenance);
    }
    let _ = writeln!(report, "\n[slopes]");
    for (method, fit) in table.slopes() {
        match fit {
            Ok(s) => {
                let _ = writeln!(report, "{method}: {:+.4} (stderr {:.4})", s.slope, s.stderr);
            }
            Err(e) => {
                let _ = writeln!(report, "{method}: {e}");
            }
        }
    }
    for fail in &table.failures {
        let _ = writeln!(report, "failure: {}: {}", fail.method, fail.message);
    }
    Ok(RunOutput {
        table,
        diagnostics: diags,
        report,
    })
}

/// Writes `<stem>.csv` and `<stem>_diagnostics.txt` under `cfg.out`.
pub fn write_outputs(cfg: &RunConfig, out: &RunOutput) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(&cfg.out).map_err(|source| Error::Io {
        path: cfg.out.clone(),
        source,
    })?;
    let stem = cfg.output_stem();
    let csv_path = cfg.out.join(format!("{stem}.csv"));
    let report_path = cfg.out.join(format!("{stem}_diagnostics.txt"));
    let io = |path: &PathBuf| {
        let path = path.clone();
        move |source| Error::Io { path, source }
    };
    let file = std::fs::File::create(&csv_path).map_err(io(&csv_path))?;
    out.table.write_csv(std::io::BufWriter::new(file))?;
    std::fs::write(&report_path, &out.report).map_err(io(&report_path))?;
    Ok((csv_path, report_path))
}
