//! Base-2 digital nets: Sobol' points from an embedded direction-number
//! table, Owen nested uniform scrambling, and i.i.d. uniform point sets for
//! plain Monte Carlo.
//!
//! Unscrambled points of a `2^m` net are multiples of `2^-m` in every
//! coordinate. They are reported at the centre of their `2^-m` cell, so the
//! first point becomes `(0.5, .., 0.5)` when `m = 0`. Scrambled points carry
//! 32 random digits and are reported as `(y + 0.5) / 2^32`, which keeps every
//! coordinate inside `[2^-33, 1 - 2^-33]`.

use std::sync::OnceLock;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Number of output digits per coordinate.
pub const DIGITS: u32 = 32;

/// Largest supported `m` (points per net is `2^m`).
pub const MAX_M: u32 = 32;

const EMBEDDED_DIRECTIONS: &str = include_str!("../data/sobol_directions.txt");

/// One row of the direction-number table: the primitive polynomial of
/// degree `degree` with interior coefficients `coeffs`, and the initial
/// odd direction integers `m_1..m_degree`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectionRow {
    pub degree: u32,
    pub coeffs: u32,
    pub initial: Vec<u32>,
}

/// Direction numbers for every supported dimension. Dimension 0 is the
/// van der Corput sequence and is not stored in the table.
#[derive(Debug, Clone)]
pub struct DirectionTable {
    rows: Vec<DirectionRow>,
    columns: Vec<[u32; DIGITS as usize]>,
}

impl DirectionTable {
    /// The table shipped with the crate (1024 dimensions).
    pub fn embedded() -> &'static DirectionTable {
        static TABLE: OnceLock<DirectionTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            DirectionTable::parse(EMBEDDED_DIRECTIONS).expect("embedded direction table is valid")
        })
    }

    /// Parses the whitespace-separated text format `d s a m_1 .. m_s`, one
    /// dimension per line starting at `d = 2`, with a single header line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate().skip(1) {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<u32> = line
                .split_whitespace()
                .map(|f| f.parse::<u32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Config(format!("direction table line {}: {e}", lineno + 1)))?;
            if fields.len() < 3 {
                return Err(Error::Config(format!(
                    "direction table line {}: expected at least 3 fields",
                    lineno + 1
                )));
            }
            let expected_dim = rows.len() as u32 + 2;
            let (dim, degree, coeffs) = (fields[0], fields[1], fields[2]);
            if dim != expected_dim {
                return Err(Error::Config(format!(
                    "direction table line {}: dimension {dim}, expected {expected_dim}",
                    lineno + 1
                )));
            }
            let initial = fields[3..].to_vec();
            if degree == 0 || degree >= DIGITS || initial.len() != degree as usize {
                return Err(Error::Config(format!(
                    "direction table line {}: degree {degree} with {} initial values",
                    lineno + 1,
                    initial.len()
                )));
            }
            for (k, &mk) in initial.iter().enumerate() {
                if mk % 2 == 0 || mk >= 1 << (k + 1) {
                    return Err(Error::Config(format!(
                        "direction table line {}: m_{} = {mk} must be odd and below 2^{}",
                        lineno + 1,
                        k + 1,
                        k + 1
                    )));
                }
            }
            rows.push(DirectionRow {
                degree,
                coeffs,
                initial,
            });
        }
        let mut columns = Vec::with_capacity(rows.len() + 1);
        let mut first = [0u32; DIGITS as usize];
        for (k, v) in first.iter_mut().enumerate() {
            *v = 1 << (DIGITS as usize - 1 - k);
        }
        columns.push(first);
        for row in &rows {
            columns.push(expand_directions(row));
        }
        Ok(Self { rows, columns })
    }

    /// Number of dimensions available.
    pub fn max_dim(&self) -> usize {
        self.columns.len()
    }

    /// Degree of the primitive polynomial driving dimension `j` (0-based).
    /// Dimension 0 counts as degree 1.
    pub fn degree(&self, j: usize) -> u32 {
        if j == 0 {
            1
        } else {
            self.rows[j - 1].degree
        }
    }

    /// Direction integers `v_1..v_32` of dimension `j`, left-aligned in 32 bits.
    pub fn directions(&self, j: usize) -> &[u32; DIGITS as usize] {
        &self.columns[j]
    }

    pub fn row(&self, j: usize) -> Option<&DirectionRow> {
        if j == 0 {
            None
        } else {
            self.rows.get(j - 1)
        }
    }
}

// Bratley-Fox recurrence for the direction integers.
fn expand_directions(row: &DirectionRow) -> [u32; DIGITS as usize] {
    let s = row.degree as usize;
    let mut m = [0u64; DIGITS as usize];
    for (mk, &init) in m.iter_mut().zip(&row.initial[..s]) {
        *mk = init as u64;
    }
    for k in s..DIGITS as usize {
        let mut value = m[k - s] ^ (m[k - s] << s);
        for i in 1..s {
            if (row.coeffs >> (s - 1 - i)) & 1 == 1 {
                value ^= m[k - i] << i;
            }
        }
        m[k] = value;
    }
    let mut v = [0u32; DIGITS as usize];
    for k in 0..DIGITS as usize {
        v[k] = (m[k] << (DIGITS as usize - 1 - k)) as u32;
    }
    v
}

/// Shape of a base-2 net: `2^m` points in `d` dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetSpec {
    pub m: u32,
    pub d: usize,
    /// Quality parameter implied by the polynomial degrees,
    /// `sum_j (deg_j - 1)`. Reported, not verified minimal.
    pub t_param: u32,
}

impl NetSpec {
    pub const BASE: u32 = 2;

    pub fn new(m: u32, d: usize) -> Result<Self> {
        let table = DirectionTable::embedded();
        if m > MAX_M {
            return Err(Error::Config(format!("m = {m} exceeds {MAX_M}")));
        }
        if d == 0 {
            return Err(Error::Config("dimension must be positive".into()));
        }
        if d > table.max_dim() {
            return Err(Error::Config(format!(
                "dimension {d} exceeds the {} available direction-number columns",
                table.max_dim()
            )));
        }
        let t_param = (0..d).map(|j| table.degree(j) - 1).sum();
        Ok(Self { m, d, t_param })
    }

    pub fn n(&self) -> usize {
        1usize << self.m
    }

    /// Scrambled-net variance gain bound `b^t ((b+1)/(b-1))^d` for base 2.
    pub fn gain_bound(&self) -> f64 {
        2f64.powi(self.t_param as i32) * 3f64.powi(self.d as i32)
    }
}

/// How a point set was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointSource {
    Sobol,
    Scrambled { seed: u64 },
    Iid { seed: u64 },
}

/// `N x d` points strictly inside the unit cube, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    spec: NetSpec,
    source: PointSource,
    points: Vec<f64>,
    digits: Option<Vec<u32>>,
}

impl PointSet {
    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn source(&self) -> PointSource {
        self.source
    }

    pub fn scramble_seed(&self) -> Option<u64> {
        match self.source {
            PointSource::Scrambled { seed } => Some(seed),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.spec.n()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.spec.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.spec.d;
        &self.points[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.points.chunks_exact(self.spec.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.points
    }

    /// Coordinate `j` of every point.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }
}

/// First `2^m` points of the Sobol' sequence, shifted to cell centres.
pub fn sobol_net(spec: NetSpec) -> Result<PointSet> {
    let table = DirectionTable::embedded();
    if spec.d > table.max_dim() {
        return Err(Error::Config(format!(
            "dimension {} exceeds the {} available direction-number columns",
            spec.d,
            table.max_dim()
        )));
    }
    let n = spec.n();
    let d = spec.d;
    let mut digits = vec![0u32; n * d];
    for j in 0..d {
        let v = table.directions(j);
        for i in 0..n {
            let mut x = 0u32;
            let mut bits = i;
            let mut k = 0;
            while bits != 0 {
                if bits & 1 == 1 {
                    x ^= v[k];
                }
                bits >>= 1;
                k += 1;
            }
            digits[i * d + j] = x;
        }
    }
    let offset = 0.5f64.powi(spec.m as i32 + 1);
    let scale = 0.5f64.powi(DIGITS as i32);
    let points = digits.iter().map(|&x| x as f64 * scale + offset).collect();
    Ok(PointSet {
        spec,
        source: PointSource::Sobol,
        points,
        digits: Some(digits),
    })
}

/// Owen nested uniform scrambling of an unscrambled net.
///
/// Digit `k` of coordinate `j` is flipped by a hash of `(seed, j, k, leading
/// k digits)`, which realises a random permutation tree without storing it.
pub fn owen_scramble(ps: &PointSet, seed: u64) -> Result<PointSet> {
    let digits = match (&ps.digits, ps.source) {
        (Some(d), PointSource::Sobol) => d,
        _ => {
            return Err(Error::Argument(
                "owen_scramble expects an unscrambled net from sobol_net".into(),
            ))
        }
    };
    let d = ps.spec.d;
    let dim_keys: Vec<u64> = (0..d as u64)
        .map(|j| mix64(seed ^ mix64(j.wrapping_add(0x5851_f42d_4c95_7f2d))))
        .collect();
    let scale = 0.5f64.powi(DIGITS as i32);
    let mut out_digits = Vec::with_capacity(digits.len());
    let mut points = Vec::with_capacity(digits.len());
    for (idx, &x) in digits.iter().enumerate() {
        let y = scramble_digits(x, dim_keys[idx % d]);
        out_digits.push(y);
        points.push((y as f64 + 0.5) * scale);
    }
    Ok(PointSet {
        spec: ps.spec,
        source: PointSource::Scrambled { seed },
        points,
        digits: Some(out_digits),
    })
}

/// Convenience: `owen_scramble(sobol_net(spec), seed)`.
pub fn scrambled_sobol(spec: NetSpec, seed: u64) -> Result<PointSet> {
    owen_scramble(&sobol_net(spec)?, seed)
}

fn scramble_digits(x: u32, key: u64) -> u32 {
    let mut flips = 0u32;
    for k in 0..DIGITS {
        let prefix = if k == 0 {
            0
        } else {
            (x >> (DIGITS - k)) as u64
        };
        let node = (1u64 << k) | prefix;
        let h = mix64(key ^ node.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        flips |= ((h >> 63) as u32) << (DIGITS - 1 - k);
    }
    x ^ flips
}

// MurmurHash3 finalizer.
fn mix64(mut h: u64) -> u64 {
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h = h.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    h ^= h >> 33;
    h
}

/// Independent uniforms on `(0,1)^d` for plain Monte Carlo, `2^m` rows.
pub fn iid_points(m: u32, d: usize, seed: u64) -> Result<PointSet> {
    if m > MAX_M || d == 0 {
        return Err(Error::Config(format!(
            "invalid i.i.d. point shape m={m}, d={d}"
        )));
    }
    let spec = NetSpec { m, d, t_param: 0 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 0.5f64.powi(53);
    let points = (0..spec.n() * d)
        .map(|_| ((rng.next_u64() >> 11) as f64 + 0.5) * scale)
        .collect();
    Ok(PointSet {
        spec,
        source: PointSource::Iid { seed },
        points,
        digits: None,
    })
}

/// Counts points per dyadic cell for per-dimension depths `split`.
/// Cells are indexed in mixed radix with dimension 0 most significant.
pub fn elementary_interval_histogram(ps: &PointSet, split: &[u32]) -> Result<Vec<u64>> {
    if split.len() != ps.dim() {
        return Err(Error::Argument(format!(
            "split has {} depths for a {}-dimensional point set",
            split.len(),
            ps.dim()
        )));
    }
    let total: u32 = split.iter().sum();
    if total > ps.spec.m {
        return Err(Error::Argument(format!(
            "split depths sum to {total}, exceeding m = {}",
            ps.spec.m
        )));
    }
    let mut counts = vec![0u64; 1usize << total];
    for row in ps.rows() {
        let mut cell = 0usize;
        for (&u, &k) in row.iter().zip(split) {
            let c = (u * (1u64 << k) as f64).floor() as usize;
            cell = (cell << k) | c.min((1usize << k) - 1);
        }
        counts[cell] += 1;
    }
    Ok(counts)
}

/// Derives a well-mixed seed for replicate `replicate` of stream `stream`.
pub fn derive_seed(seed0: u64, stream: u64, replicate: u64) -> u64 {
    mix64(
        seed0
            ^ mix64(stream.wrapping_mul(0xd1b5_4a32_d192_ed03) ^ mix64(replicate.wrapping_add(1))),
    )
}
