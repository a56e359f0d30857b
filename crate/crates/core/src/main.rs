use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rqmcis::config::{parse_n_grid, FamilyKind, Problem, RunConfig};
use rqmcis::harness;
use rqmcis::models::RowSlice;
use rqmcis::{Error, Method, Sampler};

/// Thread count for the replicate pool; rayon's default when unset.
const THREADS_ENV: &str = "RQMCIS_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "rqmcis",
    version,
    about = "RQMC importance sampling experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an RMSE experiment and write the CSV table and diagnostics report.
    Run(Flags),
    /// Print mode, proposal spectrum and the eigenvalue verdict per method.
    Diagnose(Flags),
    /// Print the effective configuration as TOML.
    ShowConfig(Flags),
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// TOML config file; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// bond | logistic | synthetic-exp | positivization-demo
    #[arg(long, value_parser = parse::<Problem>)]
    problem: Option<Problem>,
    /// Comma-separated subset of prioris,odis,lapis.
    #[arg(long, value_delimiter = ',', value_parser = parse::<Method>)]
    methods: Option<Vec<Method>>,
    /// gaussian | student_t
    #[arg(long, value_parser = parse::<FamilyKind>)]
    family: Option<FamilyKind>,
    #[arg(long)]
    nu: Option<f64>,
    /// Comma-separated subset of mc,rqmc.
    #[arg(long, value_delimiter = ',', value_parser = parse::<Sampler>)]
    sampler: Option<Vec<Sampler>>,
    /// Sample sizes, e.g. 2^7..2^13 or 128,256,512.
    #[arg(long = "N", value_parser = parse_grid)]
    n_grid: Option<NGrid>,
    /// Replicates per (method, N).
    #[arg(long = "R")]
    replicates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Leading rows of the dataset: a count or `all`.
    #[arg(long, value_parser = parse::<RowSlice>)]
    rows: Option<RowSlice>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Z-score the covariates.
    #[arg(long)]
    standardize: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Positivization smoothing parameter.
    #[arg(long)]
    eta: Option<f64>,
    /// Drive the chi-square variable from the first input coordinate.
    #[arg(long)]
    chi_first: bool,
    #[arg(long)]
    r0: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    exp_dim: Option<usize>,
    #[arg(long)]
    exp_coef: Option<f64>,
    /// Exponent of the RQMC reference sample size.
    #[arg(long)]
    ref_log2_n: Option<u32>,
    #[arg(long)]
    ref_replicates: Option<usize>,
    /// Mode-search starting point, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    mode_init: Option<Vec<f64>>,
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Clone)]
struct NGrid(Vec<u32>);

fn parse_grid(s: &str) -> Result<NGrid, String> {
    parse_n_grid(s).map(NGrid).map_err(|e| e.to_string())
}

impl Flags {
    fn resolve(self) -> rqmcis::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident => $target:ident),* $(,)?) => {
                $(if let Some(v) = self.$field { cfg.$target = v; })*
            };
        }
        set!(
            problem => problem,
            methods => methods,
            family => family,
            nu => nu,
            sampler => samplers,
            replicates => replicates,
            seed => seed,
            rows => rows,
            out => out,
            eta => eta,
            r0 => r0,
            sigma => sigma,
            exp_dim => exp_dim,
            exp_coef => exp_coef,
            ref_replicates => ref_replicates,
        );
        if let Some(NGrid(g)) = self.n_grid {
            cfg.n_grid = g;
        }
        if self.dataset.is_some() {
            cfg.dataset = self.dataset;
        }
        if self.mode_init.is_some() {
            cfg.mode_init = self.mode_init;
        }
        if self.ref_log2_n.is_some() {
            cfg.ref_log2_n = self.ref_log2_n;
        }
        cfg.standardize |= self.standardize;
        cfg.chi_first |= self.chi_first;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn init_threads() -> rqmcis::Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().map_err(|_| {
            Error::Config(format!(
                "{THREADS_ENV} must be a positive integer, got '{v}'"
            ))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let (cmd, flags) = match cli.command {
        Command::Run(f) => ("run", f),
        Command::Diagnose(f) => ("diagnose", f),
        Command::ShowConfig(f) => ("show-config", f),
    };
    let cfg = match flags.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match cmd {
        "show-config" => match cfg.to_toml_string() {
            Ok(s) => {
                print!("{s}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        "diagnose" => match harness::diagnose(&cfg) {
            Ok((diags, report)) => {
                print!("{report}");
                let failed: Vec<_> = diags.iter().filter(|d| d.error.is_some()).collect();
                for d in &failed {
                    eprintln!("failed: {}: {}", d.method, d.error.as_deref().unwrap_or(""));
                }
                if failed.is_empty() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::FAILURE
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
        _ => {
            let out = match harness::run(&cfg) {
                Ok(o) => o,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            };
            match harness::write_outputs(&cfg, &out) {
                Ok((csv, report)) => {
                    println!("wrote {}", csv.display());
                    println!("wrote {}", report.display());
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            }
            let failures = out.failures();
            for f in &failures {
                eprintln!("failed: {}: {}", f.method, f.message);
            }
            if failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
