//! Experiment configuration: a TOML file whose keys mirror the CLI flags.
//!
//! ```toml
//! problem = "logistic"
//! methods = ["prioris", "odis", "lapis"]
//! family = "gaussian"
//! samplers = ["mc", "rqmc"]
//! n_grid = "2^7..2^13"
//! replicates = 100
//! seed = 7
//! rows = "30"
//! out = "results"
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::Sampler;
use crate::measure::Family;
use crate::models::{BondModel, RowSlice};
use crate::proposals::Method;
use crate::transforms::ChiSquareCoordinate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    Bond,
    Logistic,
    SyntheticExp,
    PositivizationDemo,
}

impl Problem {
    pub fn name(&self) -> &'static str {
        match self {
            Problem::Bond => "bond",
            Problem::Logistic => "logistic",
            Problem::SyntheticExp => "synthetic-exp",
            Problem::PositivizationDemo => "positivization-demo",
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "bond" => Ok(Problem::Bond),
            "logistic" => Ok(Problem::Logistic),
            "synthetic-exp" => Ok(Problem::SyntheticExp),
            "positivization-demo" => Ok(Problem::PositivizationDemo),
            other => Err(Error::Config(format!(
                "unknown problem '{other}' (expected bond, logistic, synthetic-exp or positivization-demo)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Gaussian,
    StudentT,
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(FamilyKind::Gaussian),
            "student_t" | "student-t" | "t" => Ok(FamilyKind::StudentT),
            other => Err(Error::Config(format!(
                "unknown family '{other}' (expected gaussian or student_t)"
            ))),
        }
    }
}

/// Parses `2^7..2^13`, `128..8192`, `2^7,2^9` or `128,512` into exponents.
pub fn parse_n_grid(s: &str) -> Result<Vec<u32>> {
    let bad = || Error::Config(format!("cannot parse N grid '{s}'"));
    let one = |t: &str| -> Result<u32> {
        let t = t.trim();
        if let Some(e) = t.strip_prefix("2^") {
            return e.trim().parse().map_err(|_| bad());
        }
        let n: u64 = t.parse().map_err(|_| bad())?;
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::Config(format!("N = {n} is not a power of two")));
        }
        Ok(n.trailing_zeros())
    };
    let grid: Vec<u32> = if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (one(a)?, one(b)?);
        if a > b {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        s.split(',').map(one).collect::<Result<_>>()?
    };
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!(
            "N grid '{s}' must be strictly increasing"
        )));
    }
    if let Some(&m) = grid.iter().find(|&&m| m > 26) {
        return Err(Error::Config(format!("N = 2^{m} exceeds the 2^26 limit")));
    }
    Ok(grid)
}

/// Inverse of [`parse_n_grid`].
pub fn format_n_grid(grid: &[u32]) -> String {
    let contiguous = grid.len() > 1 && grid.windows(2).all(|w| w[1] == w[0] + 1);
    if contiguous {
        format!("2^{}..2^{}", grid[0], grid[grid.len() - 1])
    } else {
        grid.iter()
            .map(|m| format!("2^{m}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

mod n_grid_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(grid: &[u32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_n_grid(grid))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u32>, D::Error> {
        let s = String::deserialize(d)?;
        super::parse_n_grid(&s).map_err(serde::de::Error::custom)
    }
}

mod display_serde {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

mod display_vec_serde {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(v: &[T], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&x.to_string())?;
        }
        seq.end()
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<Vec<T>, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| s.parse().map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Everything a `run` or `diagnose` invocation needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub problem: Problem,
    #[serde(with = "display_vec_serde")]
    pub methods: Vec<Method>,
    pub family: FamilyKind,
    /// Degrees of freedom for `student_t`.
    pub nu: f64,
    #[serde(with = "display_vec_serde")]
    pub samplers: Vec<Sampler>,
    #[serde(with = "n_grid_serde")]
    pub n_grid: Vec<u32>,
    pub replicates: usize,
    pub seed: u64,
    #[serde(with = "display_serde")]
    pub rows: RowSlice,
    /// CSV file for the logistic problem; the bundled Mroz data when absent.
    pub dataset: Option<PathBuf>,
    pub standardize: bool,
    pub out: PathBuf,
    pub eta: f64,
    /// Drive the chi-square variable from the first input coordinate.
    pub chi_first: bool,
    pub r0: f64,
    pub sigma: f64,
    /// Dimension and coefficient of `exp(a^T z)` with `a = coef * 1`.
    pub exp_dim: usize,
    pub exp_coef: f64,
    /// Exponent and replicate count of the RQMC reference run.
    pub ref_log2_n: Option<u32>,
    pub ref_replicates: usize,
    /// Starting point of the mode search; the base mean when absent.
    pub mode_init: Option<Vec<f64>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: Problem::Logistic,
            methods: Method::ALL.to_vec(),
            family: FamilyKind::Gaussian,
            nu: 4.0,
            samplers: vec![Sampler::Mc, Sampler::Rqmc],
            n_grid: (7..=13).collect(),
            replicates: 100,
            seed: 7,
            rows: RowSlice::First(30),
            dataset: None,
            standardize: false,
            out: PathBuf::from("results"),
            eta: 1.0,
            chi_first: false,
            r0: BondModel::DEFAULT_R0,
            sigma: BondModel::DEFAULT_SIGMA,
            exp_dim: 4,
            exp_coef: 0.5,
            ref_log2_n: None,
            ref_replicates: 20,
            mode_init: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("method list is empty".into()));
        }
        if self.samplers.is_empty() {
            return Err(Error::Config("sampler list is empty".into()));
        }
        if self.n_grid.is_empty()
            || self.n_grid.windows(2).any(|w| w[0] >= w[1])
            || self.n_grid.iter().any(|&m| m > 26)
        {
            return Err(Error::Config(
                "N grid must be ascending powers of two up to 2^26".into(),
            ));
        }
        if self.replicates == 0 || self.ref_replicates == 0 {
            return Err(Error::Config("replicate counts must be positive".into()));
        }
        if self.family == FamilyKind::StudentT && !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::Config(format!(
                "nu must be positive, got {}",
                self.nu
            )));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::Config(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        if self.exp_dim == 0 {
            return Err(Error::Config("exp_dim must be positive".into()));
        }
        BondModel::new(self.r0, self.sigma).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn proposal_family(&self) -> Family {
        match self.family {
            FamilyKind::Gaussian => Family::Gaussian,
            FamilyKind::StudentT => Family::StudentT { nu: self.nu },
        }
    }

    pub fn coord(&self) -> ChiSquareCoordinate {
        if self.chi_first {
            ChiSquareCoordinate::First
        } else {
            ChiSquareCoordinate::Last
        }
    }

    /// `<problem>_<family>`, the stem of the output files.
    pub fn output_stem(&self) -> String {
        let fam = match self.family {
            FamilyKind::Gaussian => "gaussian".to_string(),
            FamilyKind::StudentT => format!("student_t_nu{}", self.nu),
        };
        format!("{}_{}", self.problem.name().replace('-', "_"), fam)
    }
}
