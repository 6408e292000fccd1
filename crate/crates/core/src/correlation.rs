//! Equal-time cross-correlation matrices and statistics of their elements.

use std::io::{BufRead, BufReader, Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::timeseries::ReturnPanel;

/// Which matrix a [`CorrelationMatrix`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixKind {
    Full,
    MarketMode,
    SectorMode,
    RandomMode,
    AbsSectorMode,
    /// A mode matrix with its negative entries replaced by a floor.
    FlooredSectorMode,
}

impl MatrixKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MatrixKind::Full => "full",
            MatrixKind::MarketMode => "market-mode",
            MatrixKind::SectorMode => "sector-mode",
            MatrixKind::RandomMode => "random-mode",
            MatrixKind::AbsSectorMode => "abs-sector-mode",
            MatrixKind::FlooredSectorMode => "floored-sector-mode",
        }
    }
}

impl std::fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MatrixKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "full" => MatrixKind::Full,
            "market-mode" | "market" => MatrixKind::MarketMode,
            "sector-mode" | "sector" => MatrixKind::SectorMode,
            "random-mode" | "random" => MatrixKind::RandomMode,
            "abs-sector-mode" | "abs-sector" => MatrixKind::AbsSectorMode,
            "floored-sector-mode" => MatrixKind::FlooredSectorMode,
            other => return Err(Error::invalid(format!("unknown matrix kind `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub tickers: Vec<String>,
    pub values: SquareMatrix,
    pub kind: MatrixKind,
}

impl CorrelationMatrix {
    /// Checks the symmetry invariant (and unit diagonal for full matrices).
    pub fn new(tickers: Vec<String>, values: SquareMatrix, kind: MatrixKind) -> Result<Self> {
        if tickers.len() != values.dim() {
            return Err(Error::invalid("ticker count does not match matrix dimension"));
        }
        if values.as_slice().iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("matrix has non-finite entries"));
        }
        if values.max_asymmetry() > 1e-12 {
            return Err(Error::invalid("matrix is not symmetric"));
        }
        if kind == MatrixKind::Full {
            for i in 0..values.dim() {
                if (values[(i, i)] - 1.0).abs() > 1e-12 {
                    return Err(Error::invalid(format!("diagonal entry {i} is {} (expected 1)", values[(i, i)])));
                }
            }
            if values.as_slice().iter().any(|x| x.abs() > 1.0 + 1e-12) {
                return Err(Error::invalid("correlation outside [-1, 1]"));
            }
        }
        Ok(CorrelationMatrix { tickers, values, kind })
    }

    pub fn n(&self) -> usize {
        self.tickers.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    /// Same matrix with rows/columns reordered: result(a, b) = self(perm[a], perm[b]).
    pub fn permuted(&self, perm: &[usize]) -> CorrelationMatrix {
        CorrelationMatrix {
            tickers: perm.iter().map(|&i| self.tickers[i].clone()).collect(),
            values: self.values.permuted(perm),
            kind: self.kind,
        }
    }

    /// Writes a dense table with a ticker header row and column, preceded by
    /// a `# kind:` comment line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("<matrix>", e);
        writeln!(out, "# kind: {}", self.kind).map_err(io)?;
        write!(out, "ticker").map_err(io)?;
        for t in &self.tickers {
            write!(out, ",{t}").map_err(io)?;
        }
        writeln!(out).map_err(io)?;
        for (i, t) in self.tickers.iter().enumerate() {
            write!(out, "{t}").map_err(io)?;
            for x in self.values.row(i) {
                write!(out, ",{x}").map_err(io)?;
            }
            writeln!(out).map_err(io)?;
        }
        Ok(())
    }

    /// Reads the format produced by [`CorrelationMatrix::write_csv`]. A missing
    /// kind comment means `full`.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut kind = MatrixKind::Full;
        let mut tickers: Option<Vec<String>> = None;
        let mut rows = Vec::new();
        for (k, line) in BufReader::new(input).lines().enumerate() {
            let lineno = k + 1;
            let line = line.map_err(|e| Error::io("<matrix>", e))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("kind:") {
                    kind = v.trim().parse()?;
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            match &tickers {
                None => tickers = Some(fields[1..].iter().map(|s| s.trim().to_string()).collect()),
                Some(t) => {
                    if fields.len() != t.len() + 1 {
                        return Err(Error::Parse { line: lineno, message: "row length mismatch".into() });
                    }
                    let row = fields[1..]
                        .iter()
                        .map(|s| {
                            s.trim()
                                .parse::<f64>()
                                .map_err(|_| Error::Parse { line: lineno, message: format!("bad number `{s}`") })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    rows.push(row);
                }
            }
        }
        let tickers = tickers.ok_or(Error::Parse { line: 1, message: "missing header".into() })?;
        if rows.len() != tickers.len() {
            return Err(Error::Parse { line: rows.len() + 1, message: "matrix is not square".into() });
        }
        CorrelationMatrix::new(tickers, SquareMatrix::from_rows(&rows), kind)
    }
}

/// `C_ij = <r_i r_j>` averaged over the T observations.
pub fn correlation_matrix(panel: &ReturnPanel) -> Result<CorrelationMatrix> {
    let n = panel.n_tickers();
    let t = panel.n_obs();
    if n < 2 || t < 2 {
        return Err(Error::invalid(format!("need N >= 2 and T >= 2, got N = {n}, T = {t}")));
    }
    if panel.returns.iter().any(|r| r.len() != t) {
        return Err(Error::invalid("return rows differ in length"));
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        1.0
                    } else {
                        let (a, b) = if i < j { (i, j) } else { (j, i) };
                        let dot: f64 = panel.returns[a].iter().zip(&panel.returns[b]).map(|(x, y)| x * y).sum();
                        (dot / t as f64).clamp(-1.0, 1.0)
                    }
                })
                .collect()
        })
        .collect();
    CorrelationMatrix::new(panel.tickers.clone(), SquareMatrix::from_rows(&rows), MatrixKind::Full)
}

/// Equal-width histogram with explicit bin edges.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
}

impl Histogram {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Integral of the density, 1 for any non-empty sample.
    pub fn total_mass(&self) -> f64 {
        self.edges.windows(2).zip(&self.density).map(|(w, d)| (w[1] - w[0]) * d).sum()
    }

    /// Two columns: `bin_center,density`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("<histogram>", e);
        writeln!(out, "bin_center,density").map_err(io)?;
        for (c, d) in self.centers().iter().zip(&self.density) {
            writeln!(out, "{c},{d}").map_err(io)?;
        }
        Ok(())
    }
}

/// Normalized density of `values` over `[min, max]` in `bins` equal bins.
/// A sample with a single distinct value yields one narrow bin centred on it.
pub fn histogram(values: &[f64], bins: usize) -> Result<Histogram> {
    if bins < 1 {
        return Err(Error::invalid("histogram needs at least one bin"));
    }
    if values.is_empty() {
        return Ok(Histogram { edges: vec![], density: vec![] });
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        let half = 0.5e-6 * lo.abs().max(1.0);
        return Ok(Histogram { edges: vec![lo - half, lo + half], density: vec![1.0 / (2.0 * half)] });
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let edges = (0..=bins).map(|k| if k == bins { hi } else { lo + k as f64 * width }).collect();
    let total = values.len() as f64;
    let density = counts.iter().map(|&c| c as f64 / (total * width)).collect();
    Ok(Histogram { edges, density })
}

/// Histogram of the off-diagonal entries, each unordered pair once.
pub fn element_histogram(c: &CorrelationMatrix, bins: usize) -> Result<Histogram> {
    if c.n() < 2 {
        return Err(Error::invalid("need at least two tickers"));
    }
    let values: Vec<f64> = c.values.upper_triangle().map(|(_, _, v)| v).collect();
    histogram(&values, bins)
}

/// Mean over unordered pairs `i < j`; `NaN` when there are no pairs.
pub fn mean_offdiag(c: &CorrelationMatrix) -> f64 {
    let n = c.n();
    if n < 2 {
        return f64::NAN;
    }
    let sum: f64 = c.values.upper_triangle().map(|(_, _, v)| v).sum();
    sum / (n * (n - 1) / 2) as f64
}
