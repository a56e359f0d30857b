//! MC and RQMC importance sampling quadratures, the ratio estimator,
//! RMSE-over-replicates experiments and log-log slope fits.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{log_lr_gaussian_raw, log_lr_t_raw, Family, GaussianMeasure, Proposal};
use crate::nets::{derive_seed, iid_points, scrambled_sobol, NetSpec, PointSet};
use crate::proposals::Integrand;
use crate::transforms::{inv_norm_cdf_unchecked, psi_map_into, tau_map_into, ChiSquareCoordinate};

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::new();
        iter.into_iter().for_each(|x| s.add(x));
        s
    }
}

/// Source of the uniform inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sampler {
    Mc,
    Rqmc,
}

impl Sampler {
    pub fn name(&self) -> &'static str {
        match self {
            Sampler::Mc => "mc",
            Sampler::Rqmc => "rqmc",
        }
    }

    /// `2^m` points in `(0,1)^d`: i.i.d. for MC, a scrambled Sobol' net for RQMC.
    pub fn points(&self, m: u32, d: usize, seed: u64) -> Result<PointSet> {
        match self {
            Sampler::Mc => iid_points(m, d, seed),
            Sampler::Rqmc => scrambled_sobol(NetSpec::new(m, d)?, seed),
        }
    }
}

impl fmt::Display for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Sampler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mc" => Ok(Sampler::Mc),
            "rqmc" | "qmc" => Ok(Sampler::Rqmc),
            other => Err(Error::Config(format!(
                "unknown sampler '{other}' (expected mc or rqmc)"
            ))),
        }
    }
}

fn check_points(prop: &Proposal, base: &GaussianMeasure, points: &PointSet) -> Result<()> {
    if prop.dim() != base.dim() {
        return Err(Error::Argument(format!(
            "proposal has dimension {} but the base has {}",
            prop.dim(),
            base.dim()
        )));
    }
    if points.dim() != prop.input_dim() {
        return Err(Error::Argument(format!(
            "{} proposal in dimension {} needs {}-dimensional points, got {}",
            prop.family().name(),
            prop.dim(),
            prop.input_dim(),
            points.dim()
        )));
    }
    Ok(())
}

/// Visits every sample as `(index, location mu + L x, log W)`.
pub(crate) fn for_each_sample(
    prop: &Proposal,
    base: &GaussianMeasure,
    points: &PointSet,
    coord: ChiSquareCoordinate,
    mut visit: impl FnMut(usize, &[f64], f64) -> Result<()>,
) -> Result<()> {
    check_points(prop, base, points)?;
    let d = prop.dim();
    let mut x = vec![0.0; d];
    let mut loc = vec![0.0; d];
    let mut scratch = vec![0.0; d];
    match prop.family() {
        Family::Gaussian => {
            for (i, u) in points.rows().enumerate() {
                for (xi, &ui) in x.iter_mut().zip(u) {
                    *xi = inv_norm_cdf_unchecked(ui);
                }
                let log_w = log_lr_gaussian_raw(&x, prop, base, &mut scratch);
                prop.locate_into(&x, &mut loc);
                visit(i, &loc, log_w)?;
            }
        }
        Family::StudentT { nu } => {
            let log_c = prop.log_t_normalizer(nu);
            let mut z = vec![0.0; d + 1];
            for (i, u) in points.rows().enumerate() {
                tau_map_into(u, nu, coord, &mut z)?;
                psi_map_into(&z, nu, &mut x)?;
                let log_w = log_lr_t_raw(&x, nu, log_c, prop, base, &mut scratch);
                prop.locate_into(&x, &mut loc);
                visit(i, &loc, log_w)?;
            }
        }
    }
    Ok(())
}

/// `G(loc) W` formed in log space unless `G` is signed.
fn weighted<F: Integrand + ?Sized>(f: &F, loc: &[f64], log_w: f64) -> f64 {
    if f.is_signed() {
        let g = f.eval_g(loc);
        if g == 0.0 {
            0.0
        } else {
            g * log_w.exp()
        }
    } else {
        let lg = f.eval_log_g(loc);
        if lg == f64::NEG_INFINITY {
            0.0
        } else {
            (lg + log_w).exp()
        }
    }
}

fn finite(index: usize, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { index, value })
    }
}

/// `(1/N) sum G(mu + L x_i) W(x_i)` for either proposal family.
pub fn is_estimate<F: Integrand + ?Sized>(
    f: &F,
    prop: &Proposal,
    base: &GaussianMeasure,
    points: &PointSet,
    coord: ChiSquareCoordinate,
) -> Result<f64> {
    if f.dim() != prop.dim() {
        return Err(Error::Argument(format!(
            "integrand has dimension {} but the proposal has {}",
            f.dim(),
            prop.dim()
        )));
    }
    let mut acc = KahanSum::new();
    for_each_sample(prop, base, points, coord, |i, loc, log_w| {
        acc.add(finite(i, weighted(f, loc, log_w))?);
        Ok(())
    })?;
    Ok(acc.value() / points.len() as f64)
}

/// Gaussian-proposal IS quadrature with `x_i = Phi^-1(u_i)`.
pub fn is_quadrature<F: Integrand + ?Sized>(
    f: &F,
    prop: &Proposal,
    base: &GaussianMeasure,
    points: &PointSet,
) -> Result<f64> {
    if prop.family() != Family::Gaussian {
        return Err(Error::Argument(
            "is_quadrature needs a gaussian proposal".into(),
        ));
    }
    is_estimate(f, prop, base, points, ChiSquareCoordinate::Last)
}

/// Student-t IS quadrature with `x_i = psi(tau(u_i))`.
pub fn t_is_quadrature<F: Integrand + ?Sized>(
    f: &F,
    prop: &Proposal,
    base: &GaussianMeasure,
    points: &PointSet,
) -> Result<f64> {
    t_is_quadrature_with(f, prop, base, points, ChiSquareCoordinate::Last)
}

pub fn t_is_quadrature_with<F: Integrand + ?Sized>(
    f: &F,
    prop: &Proposal,
    base: &GaussianMeasure,
    points: &PointSet,
    coord: ChiSquareCoordinate,
) -> Result<f64> {
    if !matches!(prop.family(), Family::StudentT { .. }) {
        return Err(Error::Argument(
            "t_is_quadrature needs a student_t proposal".into(),
        ));
    }
    is_estimate(f, prop, base, points, coord)
}

/// Numerator, denominator and their quotient on shared points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioEstimate {
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
}

/// `I(f l W) / I(l W)` for a likelihood `l` and test function `f`.
pub fn ratio_estimate<T, L>(
    f_test: &T,
    likelihood: &L,
    prop: &Proposal,
    base: &GaussianMeasure,
    points: &PointSet,
    coord: ChiSquareCoordinate,
) -> Result<RatioEstimate>
where
    T: Fn(&[f64]) -> f64 + ?Sized,
    L: Integrand + ?Sized,
{
    let mut num = KahanSum::new();
    let mut den = KahanSum::new();
    for_each_sample(prop, base, points, coord, |i, loc, log_w| {
        let g = finite(i, weighted(likelihood, loc, log_w))?;
        den.add(g);
        num.add(finite(i, f_test(loc) * g)?);
        Ok(())
    })?;
    let n = points.len() as f64;
    let (numerator, denominator) = (num.value() / n, den.value() / n);
    if !(denominator > 0.0) {
        return Err(Error::NonPositiveDenominator(denominator));
    }
    Ok(RatioEstimate {
        numerator,
        denominator,
        ratio: numerator / denominator,
    })
}

/// Something an experiment estimates: one or more named quantities per
/// `(proposal, points)` pair.
pub trait Estimator: Sync {
    /// Labels appended to the method name; an empty label adds no suffix.
    fn estimands(&self) -> Vec<String>;

    fn estimate(
        &self,
        prop: &Proposal,
        base: &GaussianMeasure,
        points: &PointSet,
        coord: ChiSquareCoordinate,
    ) -> Result<Vec<f64>>;
}

/// A single integral `I(G)`.
pub struct PlainEstimator<'a, F: Integrand + ?Sized> {
    pub f: &'a F,
}

impl<F: Integrand + ?Sized> Estimator for PlainEstimator<'_, F> {
    fn estimands(&self) -> Vec<String> {
        vec![String::new()]
    }

    fn estimate(
        &self,
        prop: &Proposal,
        base: &GaussianMeasure,
        points: &PointSet,
        coord: ChiSquareCoordinate,
    ) -> Result<Vec<f64>> {
        Ok(vec![is_estimate(self.f, prop, base, points, coord)?])
    }
}

/// Posterior expectation of a test function: numerator, denominator, ratio.
pub struct RatioEstimator<'a, L: Integrand + ?Sized, T: Fn(&[f64]) -> f64 + Sync + ?Sized> {
    pub likelihood: &'a L,
    pub f_test: &'a T,
}

impl<L, T> Estimator for RatioEstimator<'_, L, T>
where
    L: Integrand + ?Sized,
    T: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    fn estimands(&self) -> Vec<String> {
        vec!["num".into(), "den".into(), "ratio".into()]
    }

    fn estimate(
        &self,
        prop: &Proposal,
        base: &GaussianMeasure,
        points: &PointSet,
        coord: ChiSquareCoordinate,
    ) -> Result<Vec<f64>> {
        let r = ratio_estimate(self.f_test, self.likelihood, prop, base, points, coord)?;
        Ok(vec![r.numerator, r.denominator, r.ratio])
    }
}

/// How a reference value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ClosedForm,
    Quadrature,
    /// Mean of replicated RQMC runs at `n` points each.
    Rqmc {
        n: usize,
    },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::ClosedForm => f.write_str("closed_form"),
            Provenance::Quadrature => f.write_str("quadrature"),
            Provenance::Rqmc { n } => write!(f, "rqmc_N={n}"),
        }
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed_form" => Ok(Provenance::ClosedForm),
            "quadrature" => Ok(Provenance::Quadrature),
            _ => s
                .strip_prefix("rqmc_N=")
                .and_then(|n| n.parse().ok())
                .map(|n| Provenance::Rqmc { n })
                .ok_or_else(|| Error::Config(format!("unknown reference provenance '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub value: f64,
    pub provenance: Provenance,
}

impl Reference {
    pub fn closed_form(value: f64) -> Self {
        Self {
            value,
            provenance: Provenance::ClosedForm,
        }
    }
}

/// References for every estimand of `est`: the mean of `r` RQMC replicates
/// at `2^m` points under `prop`.
pub fn rqmc_reference<E: Estimator + ?Sized>(
    est: &E,
    prop: &Proposal,
    base: &GaussianMeasure,
    m: u32,
    r: usize,
    seed: u64,
    coord: ChiSquareCoordinate,
) -> Result<Vec<Reference>> {
    let reps: Vec<Vec<f64>> = (0..r)
        .into_par_iter()
        .map(|k| {
            let ps =
                Sampler::Rqmc.points(m, prop.input_dim(), derive_seed(seed, u64::MAX, k as u64))?;
            est.estimate(prop, base, &ps, coord)
        })
        .collect::<Result<_>>()?;
    let n = 1usize << m;
    Ok((0..est.estimands().len())
        .map(|j| Reference {
            value: reps.iter().map(|v| v[j]).collect::<KahanSum>().value() / r as f64,
            provenance: Provenance::Rqmc { n },
        })
        .collect())
}

/// One proposal under one sampler.
#[derive(Debug, Clone)]
pub struct MethodRun {
    /// Proposal rule name, e.g. `odis`.
    pub name: String,
    pub proposal: Proposal,
    pub sampler: Sampler,
}

impl MethodRun {
    pub fn label(&self, estimand: &str) -> String {
        if estimand.is_empty() {
            format!("{}-{}", self.name, self.sampler)
        } else {
            format!("{}-{}:{}", self.name, self.sampler, estimand)
        }
    }
}

/// Experiment grid and replication settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Exponents `m` with `N = 2^m`, ascending.
    pub log2_n: Vec<u32>,
    pub replicates: usize,
    pub seed0: u64,
    pub coord: ChiSquareCoordinate,
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseRow {
    pub method: String,
    pub family: String,
    pub nu: Option<f64>,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "R")]
    pub r: usize,
    pub rmse: f64,
    pub c_ref: f64,
    pub c_ref_provenance: String,
    pub seed0: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodFailure {
    pub method: String,
    pub message: String,
}

/// Fitted `log2 rmse = intercept + slope log2 N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; NaN with only two points.
    pub stderr: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RmseTable {
    pub rows: Vec<RmseRow>,
    pub failures: Vec<MethodFailure>,
}

pub const CSV_HEADER: &str = "method,family,nu,N,R,rmse,c_ref,c_ref_provenance,seed0";

impl RmseTable {
    /// Method labels in first-appearance order.
    pub fn methods(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for row in &self.rows {
            if !out.contains(&row.method) {
                out.push(row.method.clone());
            }
        }
        out
    }

    pub fn rows_for(&self, method: &str) -> Vec<&RmseRow> {
        self.rows.iter().filter(|r| r.method == method).collect()
    }

    pub fn rmse_at(&self, method: &str, n: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.n == n)
            .map(|r| r.rmse)
    }

    pub fn slope(&self, method: &str) -> Result<SlopeFit> {
        fit_slope(&self.rows_for(method))
    }

    pub fn slopes(&self) -> BTreeMap<String, Result<SlopeFit>> {
        self.methods()
            .into_iter()
            .map(|m| {
                let s = self.slope(&m);
                (m, s)
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for row in &self.rows {
            wr.serialize(row).map_err(csv_error)?;
        }
        if self.rows.is_empty() {
            wr.write_record(CSV_HEADER.split(',')).map_err(csv_error)?;
        }
        wr.flush().map_err(|source| Error::Io {
            path: "<csv>".into(),
            source,
        })
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Parses a table written by [`RmseTable::write_csv`]; the header must match exactly.
    pub fn parse_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let header = rd
            .headers()
            .map_err(csv_error)?
            .iter()
            .collect::<Vec<_>>()
            .join(",");
        if header != CSV_HEADER {
            return Err(Error::Load {
                path: "<csv>".into(),
                row: 1,
                message: format!("expected header '{CSV_HEADER}', found '{header}'"),
            });
        }
        let mut rows = Vec::new();
        for (i, rec) in rd.deserialize().enumerate() {
            rows.push(rec.map_err(|e| Error::Load {
                path: "<csv>".into(),
                row: i + 2,
                message: e.to_string(),
            })?);
        }
        Ok(Self {
            rows,
            failures: Vec::new(),
        })
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Load {
        path: "<csv>".into(),
        row: e.position().map_or(0, |p| p.line() as usize),
        message: e.to_string(),
    }
}

/// `sqrt(mean((est - c)^2))`.
pub fn rmse(estimates: &[f64], c_ref: f64) -> f64 {
    let s: KahanSum = estimates
        .iter()
        .map(|e| (e - c_ref) * (e - c_ref))
        .collect();
    (s.value() / estimates.len() as f64).sqrt()
}

/// RMSE of every (method, estimand, N) over `cfg.replicates` replicates.
///
/// Replicate `k` at `N = 2^m` uses the same seed for every method with the
/// same sampler, so methods are compared on common random inputs. Output
/// row order and values do not depend on the thread count.
pub fn rmse_experiment<E: Estimator + ?Sized>(
    est: &E,
    base: &GaussianMeasure,
    runs: &[MethodRun],
    cfg: &ExperimentConfig,
    references: &[Reference],
) -> Result<RmseTable> {
    let estimands = est.estimands();
    if references.len() != estimands.len() {
        return Err(Error::Argument(format!(
            "{} references for {} estimands",
            references.len(),
            estimands.len()
        )));
    }
    if cfg.log2_n.is_empty() || cfg.log2_n.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(
            "the N grid must be non-empty and strictly increasing".into(),
        ));
    }
    if cfg.replicates == 0 {
        return Err(Error::Config("at least one replicate is required".into()));
    }
    let tasks: Vec<(usize, u32, usize)> = (0..runs.len())
        .flat_map(|j| {
            cfg.log2_n
                .iter()
                .flat_map(move |&m| (0..cfg.replicates).map(move |k| (j, m, k)))
        })
        .collect();
    let results: Vec<Result<Vec<f64>>> = tasks
        .par_iter()
        .map(|&(j, m, k)| {
            let run = &runs[j];
            let stream = u64::from(m) | ((run.sampler as u64) << 32);
            let ps = run.sampler.points(
                m,
                run.proposal.input_dim(),
                derive_seed(cfg.seed0, stream, k as u64),
            )?;
            est.estimate(&run.proposal, base, &ps, cfg.coord)
        })
        .collect();

    let mut table = RmseTable::default();
    let per_run = cfg.log2_n.len() * cfg.replicates;
    for (j, run) in runs.iter().enumerate() {
        let chunk = &results[j * per_run..(j + 1) * per_run];
        if let Some(Err(e)) = chunk.iter().find(|r| r.is_err()) {
            table.failures.push(MethodFailure {
                method: run.label(""),
                message: e.to_string(),
            });
            continue;
        }
        let values: Vec<&Vec<f64>> = chunk.iter().map(|r| r.as_ref().expect("checked")).collect();
        for (e, (estimand, reference)) in estimands.iter().zip(references).enumerate() {
            for (mi, &m) in cfg.log2_n.iter().enumerate() {
                let reps: Vec<f64> = values[mi * cfg.replicates..(mi + 1) * cfg.replicates]
                    .iter()
                    .map(|v| v[e])
                    .collect();
                table.rows.push(RmseRow {
                    method: run.label(estimand),
                    family: run.proposal.family().name().to_string(),
                    nu: run.proposal.family().nu(),
                    n: 1usize << m,
                    r: cfg.replicates,
                    rmse: rmse(&reps, reference.value),
                    c_ref: reference.value,
                    c_ref_provenance: reference.provenance.to_string(),
                    seed0: cfg.seed0,
                });
            }
        }
    }
    Ok(table)
}

/// Ordinary least squares of `log2 rmse` on `log2 N`, skipping zero RMSEs.
pub fn fit_slope(rows: &[&RmseRow]) -> Result<SlopeFit> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.rmse > 0.0 && r.rmse.is_finite())
        .map(|r| ((r.n as f64).log2(), r.rmse.log2()))
        .collect();
    fit_log2(&pts)
}

/// Least-squares line through `(x, y)` pairs.
pub fn fit_log2(pts: &[(f64, f64)]) -> Result<SlopeFit> {
    let n = pts.len();
    if n < 2 {
        return Err(Error::Argument(format!(
            "slope fit needs at least two positive rows, got {n}"
        )));
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Argument(
            "slope fit needs at least two distinct N".into(),
        ));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if n > 2 {
        let sse: f64 = pts
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0).powi(2))
            .sum();
        (sse / (nf - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ok(SlopeFit {
        slope,
        intercept,
        stderr,
        points: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_small_terms() {
        let mut s = KahanSum::new();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn exact_power_law_slopes() {
        for p in [-1.0, -0.5] {
            let rows: Vec<RmseRow> = (7..=13)
                .map(|m| RmseRow {
                    method: "x".into(),
                    family: "gaussian".into(),
                    nu: None,
                    n: 1 << m,
                    r: 1,
                    rmse: 3.0 * ((1u64 << m) as f64).powf(p),
                    c_ref: 0.0,
                    c_ref_provenance: "closed_form".into(),
                    seed0: 0,
                })
                .collect();
            let fit = fit_slope(&rows.iter().collect::<Vec<_>>()).unwrap();
            assert!((fit.slope - p).abs() < 1e-12);
            assert!(fit.stderr < 1e-12);
        }
    }

    #[test]
    fn provenance_round_trip() {
        for p in [
            Provenance::ClosedForm,
            Provenance::Quadrature,
            Provenance::Rqmc { n: 32768 },
        ] {
            assert_eq!(p.to_string().parse::<Provenance>().unwrap(), p);
        }
        assert!("guess".parse::<Provenance>().is_err());
    }

    #[test]
    fn empty_table_still_has_header() {
        let s = RmseTable::default().to_csv_string().unwrap();
        assert_eq!(s.trim_end(), CSV_HEADER);
    }
}
