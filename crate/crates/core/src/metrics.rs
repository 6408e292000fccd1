//! Sector-interaction statistics: average correlations inside groups,
//! between groups, between linked and unlinked groups, and across the two
//! sides of subsector splits or cluster pairs.
//!
//! Means run over all unordered stock pairs, not only graph edges. Groups
//! may overlap (eigenvector sectors do); a pair then counts once per group
//! containing both stocks. "Between" pairs are pairs of grouped stocks that
//! share no group.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::correlation::{mean_offdiag, CorrelationMatrix, MatrixKind};
use crate::error::{Error, Result};

/// A mean over `count` unordered pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairMean {
    pub mean: f64,
    pub count: usize,
}

impl PairMean {
    fn from_sum(sum: f64, count: usize) -> Option<PairMean> {
        (count > 0).then(|| PairMean { mean: sum / count as f64, count })
    }
}

fn check_groups(c: &CorrelationMatrix, groups: &[Vec<usize>]) -> Result<()> {
    for g in groups {
        if let Some(&v) = g.iter().find(|&&v| v >= c.n()) {
            return Err(Error::invalid(format!("group member {v} out of range for {} tickers", c.n())));
        }
    }
    Ok(())
}

fn memberships(n: usize, groups: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut m = vec![Vec::new(); n];
    for (k, g) in groups.iter().enumerate() {
        for &v in g {
            if m[v].last() != Some(&k) {
                m[v].push(k);
            }
        }
    }
    m
}

fn share_group(a: &[usize], b: &[usize]) -> bool {
    a.iter().any(|x| b.contains(x))
}

/// Mean correlation over pairs inside the same group; `count` is E.
pub fn intra_mean(c: &CorrelationMatrix, groups: &[Vec<usize>]) -> Result<PairMean> {
    check_groups(c, groups)?;
    let (mut sum, mut count) = (0.0, 0usize);
    for g in groups {
        for (a, &i) in g.iter().enumerate() {
            for &j in &g[a + 1..] {
                sum += c.get(i, j);
                count += 1;
            }
        }
    }
    PairMean::from_sum(sum, count).ok_or_else(|| Error::invalid("no group has two or more members"))
}

/// Mean correlation over pairs of grouped stocks sharing no group; `count` is E′.
pub fn inter_mean(c: &CorrelationMatrix, groups: &[Vec<usize>]) -> Result<PairMean> {
    check_groups(c, groups)?;
    if groups.len() < 2 {
        return Err(Error::invalid("between-group mean needs at least two groups"));
    }
    let m = memberships(c.n(), groups);
    let (mut sum, mut count) = (0.0, 0usize);
    for i in 0..c.n() {
        for j in i + 1..c.n() {
            if !m[i].is_empty() && !m[j].is_empty() && !share_group(&m[i], &m[j]) {
                sum += c.get(i, j);
                count += 1;
            }
        }
    }
    PairMean::from_sum(sum, count).ok_or_else(|| Error::invalid("no pair of stocks lies in different groups"))
}

/// Between-group pairs split by whether their groups are linked. A pair
/// counts as linked if any group of one stock is linked to any group of the
/// other. An empty side is `None`.
pub fn linked_unlinked_means(
    c: &CorrelationMatrix,
    groups: &[Vec<usize>],
    links: &[(usize, usize)],
) -> Result<(Option<PairMean>, Option<PairMean>)> {
    check_groups(c, groups)?;
    if let Some(&(a, b)) = links.iter().find(|&&(a, b)| a >= groups.len() || b >= groups.len()) {
        return Err(Error::invalid(format!("link ({a}, {b}) refers to a missing group")));
    }
    let linked: HashSet<(usize, usize)> = links.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    let m = memberships(c.n(), groups);
    let (mut s_li, mut n_li, mut s_de, mut n_de) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..c.n() {
        for j in i + 1..c.n() {
            if m[i].is_empty() || m[j].is_empty() || share_group(&m[i], &m[j]) {
                continue;
            }
            let is_linked = m[i]
                .iter()
                .any(|&a| m[j].iter().any(|&b| linked.contains(&(a.min(b), a.max(b)))));
            if is_linked {
                s_li += c.get(i, j);
                n_li += 1;
            } else {
                s_de += c.get(i, j);
                n_de += 1;
            }
        }
    }
    Ok((PairMean::from_sum(s_li, n_li), PairMean::from_sum(s_de, n_de)))
}

/// Mean over all (side one, side two) pairs, pooled across splits. `None`
/// when no split has two non-empty sides.
pub fn pm_mean(c: &CorrelationMatrix, splits: &[(Vec<usize>, Vec<usize>)]) -> Option<PairMean> {
    let (mut sum, mut count) = (0.0, 0usize);
    for (a, b) in splits {
        if a.is_empty() || b.is_empty() {
            continue;
        }
        for &i in a {
            for &j in b {
                if i != j {
                    sum += c.get(i, j);
                    count += 1;
                }
            }
        }
    }
    PairMean::from_sum(sum, count)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorMetrics {
    pub matrix_kind: MatrixKind,
    pub c_bar: f64,
    pub c_in: Option<PairMean>,
    pub c_be: Option<PairMean>,
    pub c_li: Option<PairMean>,
    pub c_de: Option<PairMean>,
    pub c_pm: Option<PairMean>,
}

/// All statistics for one matrix and grouping. Cells whose preconditions
/// fail (single group, no links given, no split) are left absent.
pub fn sector_metrics(
    c: &CorrelationMatrix,
    groups: &[Vec<usize>],
    links: Option<&[(usize, usize)]>,
    splits: &[(Vec<usize>, Vec<usize>)],
) -> Result<SectorMetrics> {
    check_groups(c, groups)?;
    let c_in = intra_mean(c, groups).ok();
    let c_be = if groups.len() >= 2 { inter_mean(c, groups).ok() } else { None };
    let (c_li, c_de) = match links {
        Some(l) if c_be.is_some() => linked_unlinked_means(c, groups, l)?,
        _ => (None, None),
    };
    Ok(SectorMetrics { matrix_kind: c.kind, c_bar: mean_offdiag(c), c_in, c_be, c_li, c_de, c_pm: pm_mean(c, splits) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Table {
    /// Plain values at two decimals.
    Interaction,
    /// Values ×10² at one decimal.
    SectorMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub table: Table,
    pub method: String,
    pub metrics: SectorMetrics,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub rows: Vec<ReportRow>,
}

const COLUMNS: [&str; 6] = ["c_bar", "c_in", "c_be", "c_li", "c_de", "c_pm"];

impl ReportRow {
    fn cells(&self) -> [Option<f64>; 6] {
        let m = &self.metrics;
        let v = |p: Option<PairMean>| p.map(|x| x.mean);
        [Some(m.c_bar).filter(|x| x.is_finite()), v(m.c_in), v(m.c_be), v(m.c_li), v(m.c_de), v(m.c_pm)]
    }

    fn counts(&self) -> [Option<usize>; 6] {
        let m = &self.metrics;
        let c = |p: Option<PairMean>| p.map(|x| x.count);
        [None, c(m.c_in), c(m.c_be), c(m.c_li), c(m.c_de), c(m.c_pm)]
    }
}

fn format_cell(table: Table, v: Option<f64>) -> String {
    match (table, v) {
        (_, None) => "-".to_string(),
        (Table::Interaction, Some(x)) => format!("{x:.2}"),
        (Table::SectorMode, Some(x)) => format!("{:.1}", x * 100.0),
    }
}

fn key_part(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' }).collect()
}

impl TableReport {
    pub fn push(&mut self, table: Table, method: impl Into<String>, metrics: SectorMetrics) {
        self.rows.push(ReportRow { table, method: method.into(), metrics });
    }

    /// Aligned plain-text tables; the sector-mode table is in units of 10⁻².
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (table, title) in [
            (Table::Interaction, "Average cross-correlations"),
            (Table::SectorMode, "Average cross-correlations in the sector mode (x 10^-2)"),
        ] {
            let rows: Vec<&ReportRow> = self.rows.iter().filter(|r| r.table == table).collect();
            if rows.is_empty() {
                continue;
            }
            if !out.is_empty() {
                out.push('\n');
            }
            let mw = rows.iter().map(|r| r.method.len()).max().unwrap_or(0).max("method".len());
            let kw = rows.iter().map(|r| r.metrics.matrix_kind.as_str().len()).max().unwrap_or(0).max("matrix".len());
            let _ = writeln!(out, "{title}");
            let _ = write!(out, "{:<mw$}  {:<kw$}", "method", "matrix");
            for c in COLUMNS {
                let _ = write!(out, "  {c:>7}");
            }
            out.push('\n');
            for r in rows {
                let _ = write!(out, "{:<mw$}  {:<kw$}", r.method, r.metrics.matrix_kind.as_str());
                for v in r.cells() {
                    let _ = write!(out, "  {:>7}", format_cell(table, v));
                }
                out.push('\n');
            }
        }
        out
    }

    /// `key = value` lines at full precision, with pair counts.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let t = match r.table {
                Table::Interaction => "interaction",
                Table::SectorMode => "sector_mode",
            };
            let prefix = format!("{t}.{}.{}", key_part(&r.method), key_part(r.metrics.matrix_kind.as_str()));
            for ((name, v), n) in COLUMNS.iter().zip(r.cells()).zip(r.counts()) {
                match v {
                    Some(x) => {
                        let _ = writeln!(out, "{prefix}.{name} = {x:e}");
                    }
                    None => {
                        let _ = writeln!(out, "{prefix}.{name} = absent");
                    }
                }
                if let Some(n) = n {
                    let _ = writeln!(out, "{prefix}.{name}.pairs = {n}");
                }
            }
        }
        out
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(self.to_text().as_bytes()).map_err(|e| Error::io("<report>", e))
    }

    pub fn write_key_value<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(self.to_key_value().as_bytes()).map_err(|e| Error::io("<report>", e))
    }
}
