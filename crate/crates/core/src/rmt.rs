//! Random-matrix analysis of a correlation matrix: spectrum, Marchenko-Pastur
//! noise band, and the market / sector / random mode matrices built from
//! groups of eigenmodes.

use std::io::Write;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::correlation::{CorrelationMatrix, MatrixKind};
use crate::eigen::symmetric_eigen;
use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;

/// Spectrum of a full correlation matrix, largest eigenvalue first.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub tickers: Vec<String>,
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[alpha][i]` is component `i` of mode `alpha`.
    pub eigenvectors: Vec<Vec<f64>>,
}

impl EigenSystem {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `sum_alpha w_alpha u^alpha (u^alpha)^T` over the given modes.
    pub fn partial_sum(&self, modes: impl IntoIterator<Item = usize>, weighted: bool) -> SquareMatrix {
        let n = self.n();
        let mut m = SquareMatrix::zeros(n);
        for a in modes {
            let w = if weighted { self.eigenvalues[a] } else { 1.0 };
            let u = &self.eigenvectors[a];
            for i in 0..n {
                let wi = w * u[i];
                for j in i..n {
                    m[(i, j)] += wi * u[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                m[(i, j)] = m[(j, i)];
            }
        }
        m
    }

    pub fn reconstruct(&self) -> SquareMatrix {
        self.partial_sum(0..self.n(), true)
    }

    /// `(index, eigenvalue)` rows.
    pub fn write_spectrum<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("<spectrum>", e);
        writeln!(out, "index,eigenvalue").map_err(io)?;
        for (k, l) in self.eigenvalues.iter().enumerate() {
            writeln!(out, "{k},{l}").map_err(io)?;
        }
        Ok(())
    }

    /// One row per ticker, one column per mode.
    pub fn write_eigenvectors<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("<eigenvectors>", e);
        write!(out, "ticker").map_err(io)?;
        for k in 0..self.n() {
            write!(out, ",u{k}").map_err(io)?;
        }
        writeln!(out).map_err(io)?;
        for (i, t) in self.tickers.iter().enumerate() {
            write!(out, "{t}").map_err(io)?;
            for u in &self.eigenvectors {
                write!(out, ",{}", u[i]).map_err(io)?;
            }
            writeln!(out).map_err(io)?;
        }
        Ok(())
    }
}

pub fn eigendecompose(c: &CorrelationMatrix) -> Result<EigenSystem> {
    if c.kind != MatrixKind::Full {
        return Err(Error::invalid(format!("eigendecomposition expects a full correlation matrix, got {}", c.kind)));
    }
    let e = symmetric_eigen(&c.values)?;
    Ok(EigenSystem { tickers: c.tickers.clone(), eigenvalues: e.values, eigenvectors: e.vectors })
}

/// Eigenvalue support of a Wishart matrix with aspect ratio `Q = T / N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpBounds {
    pub q: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl MpBounds {
    pub fn contains(&self, lambda: f64) -> bool {
        lambda >= self.lambda_min && lambda <= self.lambda_max
    }
}

pub fn mp_bounds(n: usize, t: usize) -> Result<MpBounds> {
    if n == 0 || t == 0 {
        return Err(Error::invalid("N and T must be positive"));
    }
    if t < n {
        warn!("T = {t} < N = {n}: the correlation matrix is rank deficient");
    }
    Ok(bounds_for_q(t as f64 / n as f64))
}

fn bounds_for_q(q: f64) -> MpBounds {
    let r = 1.0 / q.sqrt();
    MpBounds { q, lambda_min: (1.0 - r).powi(2), lambda_max: (1.0 + r).powi(2) }
}

/// Marchenko-Pastur density `P(lambda)` for ratio `q`; zero outside the band.
pub fn mp_density(lambda: f64, q: f64) -> f64 {
    let b = bounds_for_q(q);
    if lambda <= b.lambda_min || lambda >= b.lambda_max || lambda <= 0.0 {
        return 0.0;
    }
    q / (2.0 * std::f64::consts::PI) * ((b.lambda_max - lambda) * (lambda - b.lambda_min)).sqrt() / lambda
}

/// Inclusive index ranges of the three mode groups. The market mode is
/// always index 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeSpec {
    pub sector: (usize, usize),
    pub random: (usize, usize),
}

impl ModeSpec {
    pub fn new(sector: (usize, usize), random: (usize, usize), n: usize) -> Result<Self> {
        let spec = ModeSpec { sector, random };
        spec.validate(n)?;
        Ok(spec)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let (s0, s1) = self.sector;
        let (r0, r1) = self.random;
        if s0 < 1 || s0 > s1 {
            return Err(Error::invalid(format!("sector range [{s0}, {s1}] must be non-empty and start at >= 1")));
        }
        if r0 > r1 {
            return Err(Error::invalid(format!("random range [{r0}, {r1}] is empty")));
        }
        if r1 >= n || s1 >= n {
            return Err(Error::invalid(format!("mode index out of range for N = {n}")));
        }
        if !(s1 < r0 || r1 < s0) {
            return Err(Error::invalid("sector and random ranges overlap"));
        }
        Ok(())
    }

    pub fn indices(&self, mode: Mode) -> std::ops::RangeInclusive<usize> {
        match mode {
            Mode::Market => 0..=0,
            Mode::Sector => self.sector.0..=self.sector.1,
            Mode::Random => self.random.0..=self.random.1,
        }
    }

    /// Indices in none of the three groups.
    pub fn residual(&self, n: usize) -> Vec<usize> {
        (1..n)
            .filter(|a| !self.indices(Mode::Sector).contains(a) && !self.indices(Mode::Random).contains(a))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Market,
    Sector,
    Random,
}

impl Mode {
    pub fn kind(self) -> MatrixKind {
        match self {
            Mode::Market => MatrixKind::MarketMode,
            Mode::Sector => MatrixKind::SectorMode,
            Mode::Random => MatrixKind::RandomMode,
        }
    }
}

/// Explicit mode ranges that replace the data-driven defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeOverrides {
    pub sector: Option<(usize, usize)>,
    pub random: Option<(usize, usize)>,
    /// Lowest index admitted to the random mode when `random` is not given.
    pub random_start: Option<usize>,
}

/// Sector = every mode above the noise band except the market mode; random =
/// every mode below the upper band edge from the start index on.
pub fn default_mode_spec(es: &EigenSystem, bounds: &MpBounds, overrides: &ModeOverrides) -> Result<ModeSpec> {
    let n = es.n();
    let sector = match overrides.sector {
        Some(r) => r,
        None => {
            let above = es.eigenvalues.iter().skip(1).take_while(|&&l| l > bounds.lambda_max).count();
            if above == 0 {
                return Err(Error::EmptySector);
            }
            (1, above)
        }
    };
    let random = match overrides.random {
        Some(r) => r,
        None => {
            let start = overrides.random_start.unwrap_or(sector.1 + 1).max(sector.1 + 1);
            let first_noise = (start..n).find(|&a| es.eigenvalues[a] < bounds.lambda_max);
            match first_noise {
                Some(a) => (a, n - 1),
                None => return Err(Error::invalid("no eigenvalue left for the random mode")),
            }
        }
    };
    ModeSpec::new(sector, random, n)
}

/// Mode matrix `sum_{alpha in mode} w_alpha u_i^alpha u_j^alpha` with
/// `w_alpha = lambda_alpha` when `weighted`, else 1.
pub fn mode_matrix(es: &EigenSystem, spec: &ModeSpec, which: Mode, weighted: bool) -> Result<CorrelationMatrix> {
    spec.validate(es.n())?;
    let values = es.partial_sum(spec.indices(which), weighted);
    CorrelationMatrix::new(es.tickers.clone(), values, which.kind())
}

/// Elementwise absolute value.
pub fn abs_matrix(c: &CorrelationMatrix) -> CorrelationMatrix {
    CorrelationMatrix { tickers: c.tickers.clone(), values: c.values.map(f64::abs), kind: MatrixKind::AbsSectorMode }
}

/// Negative entries replaced by `floor`.
pub fn zero_negative(c: &CorrelationMatrix, floor: f64) -> Result<CorrelationMatrix> {
    if !(floor >= 0.0) {
        return Err(Error::invalid("floor must be non-negative"));
    }
    Ok(CorrelationMatrix {
        tickers: c.tickers.clone(),
        values: c.values.map(|x| if x < 0.0 { floor } else { x }),
        kind: MatrixKind::FlooredSectorMode,
    })
}

/// Positive and negative halves of one eigenmode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsectorSplit {
    pub eigen_index: usize,
    pub positive: Vec<usize>,
    pub negative: Vec<usize>,
    pub threshold: f64,
}

/// Default component cutoff, the scale of a uniform unit vector.
pub fn default_component_cutoff(n: usize) -> f64 {
    1.0 / (n as f64).sqrt()
}

pub fn subsector_split(es: &EigenSystem, alpha: usize, threshold: Option<f64>) -> Result<SubsectorSplit> {
    if alpha >= es.n() {
        return Err(Error::invalid(format!("eigen index {alpha} out of range")));
    }
    let c = threshold.unwrap_or_else(|| default_component_cutoff(es.n()));
    if !(c >= 0.0) {
        return Err(Error::invalid("component cutoff must be non-negative"));
    }
    let u = &es.eigenvectors[alpha];
    let positive = (0..u.len()).filter(|&i| u[i] > 0.0 && u[i] >= c).collect();
    let negative = (0..u.len()).filter(|&i| u[i] < 0.0 && u[i] <= -c).collect();
    Ok(SubsectorSplit { eigen_index: alpha, positive, negative, threshold: c })
}
