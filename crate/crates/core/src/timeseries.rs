//! Price panels, missing-data repair, normalized log returns, time windows
//! and combination of two market universes.
//!
//! Missing observations are stored as `NaN` inside [`PricePanel::prices`]
//! until [`fill_missing`] carries the preceding price forward.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// File layout of a price table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    /// First column is the date, one column per ticker.
    Wide,
    /// Three columns: date, ticker, price.
    Long,
}

impl std::str::FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wide" => Ok(Layout::Wide),
            "long" => Ok(Layout::Long),
            other => Err(Error::invalid(format!("unknown layout `{other}` (expected wide or long)"))),
        }
    }
}

/// N tickers observed on T+1 dates.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    pub tickers: Vec<String>,
    pub dates: Vec<NaiveDate>,
    /// `prices[i][t]` for ticker `i` at `dates[t]`; `NaN` marks a gap.
    pub prices: Vec<Vec<f64>>,
    pub market_tags: Vec<Option<String>>,
}

impl PricePanel {
    /// Validates shape, ticker uniqueness and date ordering.
    pub fn new(tickers: Vec<String>, dates: Vec<NaiveDate>, prices: Vec<Vec<f64>>) -> Result<Self> {
        let tags = vec![None; tickers.len()];
        Self::with_tags(tickers, dates, prices, tags)
    }

    pub fn with_tags(
        tickers: Vec<String>,
        dates: Vec<NaiveDate>,
        prices: Vec<Vec<f64>>,
        market_tags: Vec<Option<String>>,
    ) -> Result<Self> {
        if prices.len() != tickers.len() || market_tags.len() != tickers.len() {
            return Err(Error::invalid("price rows, tickers and tags must have equal length"));
        }
        let mut seen = HashSet::new();
        for t in &tickers {
            if t.trim().is_empty() {
                return Err(Error::invalid("empty ticker identifier"));
            }
            if !seen.insert(t.as_str()) {
                return Err(Error::Conflict(format!("duplicate ticker {t}")));
            }
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Conflict(format!("dates not strictly increasing at {}", w[1])));
        }
        for (ticker, row) in tickers.iter().zip(&prices) {
            if row.len() != dates.len() {
                return Err(Error::invalid(format!("row for {ticker} has {} prices, expected {}", row.len(), dates.len())));
            }
            if row.iter().any(|p| p.is_infinite()) {
                return Err(Error::Domain(format!("infinite price for {ticker}")));
            }
        }
        Ok(PricePanel { tickers, dates, prices, market_tags })
    }

    pub fn n_tickers(&self) -> usize {
        self.tickers.len()
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn gap_count(&self) -> usize {
        self.prices.iter().flatten().filter(|p| p.is_nan()).count()
    }

    /// Keeps only the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> PricePanel {
        PricePanel {
            tickers: rows.iter().map(|&i| self.tickers[i].clone()).collect(),
            dates: self.dates.clone(),
            prices: rows.iter().map(|&i| self.prices[i].clone()).collect(),
            market_tags: rows.iter().map(|&i| self.market_tags[i].clone()).collect(),
        }
    }

    /// Date columns `range` of every row.
    pub fn slice_dates(&self, range: std::ops::Range<usize>) -> PricePanel {
        PricePanel {
            tickers: self.tickers.clone(),
            dates: self.dates[range.clone()].to_vec(),
            prices: self.prices.iter().map(|r| r[range.clone()].to_vec()).collect(),
            market_tags: self.market_tags.clone(),
        }
    }

    fn sorted_by_ticker(self) -> PricePanel {
        let mut order: Vec<usize> = (0..self.tickers.len()).collect();
        order.sort_by(|&a, &b| self.tickers[a].cmp(&self.tickers[b]));
        self.select_rows(&order)
    }

    /// Writes the panel in wide layout; gaps are written as `NA`.
    pub fn write_wide<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["date".to_string()];
        header.extend(self.tickers.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        for (t, date) in self.dates.iter().enumerate() {
            let mut rec = vec![date.to_string()];
            for row in &self.prices {
                let p = row[t];
                rec.push(if p.is_nan() { "NA".to_string() } else { format!("{p}") });
            }
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<writer>", e))?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::Parse { line, message: e.to_string() }
}

fn parse_date(s: &str, line: usize) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .map_err(|e| Error::Parse { line, message: format!("bad date `{s}`: {e}") })
}

fn parse_price(s: &str, line: usize) -> Result<f64> {
    let s = s.trim();
    if s.is_empty() || s == "NA" {
        return Ok(f64::NAN);
    }
    let p: f64 = s
        .parse()
        .map_err(|_| Error::Parse { line, message: format!("bad price `{s}`") })?;
    if !p.is_finite() || p <= 0.0 {
        return Err(Error::Domain(format!("non-positive or non-finite price {p} at line {line}")));
    }
    Ok(p)
}

/// Reads a price file from disk.
pub fn load_prices(path: impl AsRef<Path>, layout: Layout, delimiter: u8) -> Result<PricePanel> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_prices(file, layout, delimiter)
}

/// Parses a price table. Rows come out sorted by ticker, columns by date.
pub fn read_prices<R: Read>(input: R, layout: Layout, delimiter: u8) -> Result<PricePanel> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        records.push((line, rec));
    }
    let panel = match layout {
        Layout::Wide => parse_wide(&records)?,
        Layout::Long => parse_long(&records)?,
    };
    if panel.n_tickers() < 2 || panel.n_dates() < 3 {
        return Err(Error::invalid(format!(
            "need at least 2 tickers and 3 dates, found {} and {}",
            panel.n_tickers(),
            panel.n_dates()
        )));
    }
    Ok(panel.sorted_by_ticker())
}

fn parse_wide(records: &[(usize, csv::StringRecord)]) -> Result<PricePanel> {
    let (_, header) = records
        .first()
        .ok_or(Error::Parse { line: 1, message: "empty file".into() })?;
    let tickers: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
    let mut seen = HashSet::new();
    for t in &tickers {
        if t.is_empty() {
            return Err(Error::Parse { line: 1, message: "empty ticker in header".into() });
        }
        if !seen.insert(t.clone()) {
            return Err(Error::Conflict(format!("duplicate ticker column {t}")));
        }
    }
    let mut rows: BTreeMap<NaiveDate, Vec<f64>> = BTreeMap::new();
    for (line, rec) in &records[1..] {
        if rec.len() != tickers.len() + 1 {
            return Err(Error::Parse {
                line: *line,
                message: format!("expected {} fields, found {}", tickers.len() + 1, rec.len()),
            });
        }
        let date = parse_date(&rec[0], *line)?;
        let prices = rec.iter().skip(1).map(|s| parse_price(s, *line)).collect::<Result<Vec<_>>>()?;
        if rows.insert(date, prices).is_some() {
            return Err(Error::Conflict(format!("duplicate date {date} at line {line}")));
        }
    }
    let dates: Vec<NaiveDate> = rows.keys().copied().collect();
    let prices = (0..tickers.len())
        .map(|i| rows.values().map(|r| r[i]).collect())
        .collect();
    PricePanel::new(tickers, dates, prices)
}

fn parse_long(records: &[(usize, csv::StringRecord)]) -> Result<PricePanel> {
    let mut cells: BTreeMap<(String, NaiveDate), f64> = BTreeMap::new();
    let mut dates = BTreeSet::new();
    let mut tickers = BTreeSet::new();
    for (k, (line, rec)) in records.iter().enumerate() {
        if rec.len() != 3 {
            return Err(Error::Parse { line: *line, message: format!("expected 3 fields, found {}", rec.len()) });
        }
        // optional header row
        if k == 0 && NaiveDate::parse_from_str(rec[0].trim(), "%Y-%m-%d").is_err() {
            continue;
        }
        let date = parse_date(&rec[0], *line)?;
        let ticker = rec[1].trim().to_string();
        if ticker.is_empty() {
            return Err(Error::Parse { line: *line, message: "empty ticker".into() });
        }
        let price = parse_price(&rec[2], *line)?;
        if cells.insert((ticker.clone(), date), price).is_some() {
            return Err(Error::Conflict(format!("duplicate ({ticker}, {date}) at line {line}")));
        }
        dates.insert(date);
        tickers.insert(ticker);
    }
    let dates: Vec<NaiveDate> = dates.into_iter().collect();
    let tickers: Vec<String> = tickers.into_iter().collect();
    let prices = tickers
        .iter()
        .map(|t| {
            dates
                .iter()
                .map(|d| cells.get(&(t.clone(), *d)).copied().unwrap_or(f64::NAN))
                .collect()
        })
        .collect();
    PricePanel::new(tickers, dates, prices)
}

/// Replaces every gap with the most recent preceding price of the same
/// ticker. Returns the repaired panel and the number of filled cells.
pub fn fill_missing(panel: &PricePanel) -> Result<(PricePanel, usize)> {
    let mut out = panel.clone();
    let mut fills = 0;
    for (i, row) in out.prices.iter_mut().enumerate() {
        let mut last: Option<f64> = None;
        for (t, p) in row.iter_mut().enumerate() {
            if p.is_nan() {
                match last {
                    Some(prev) => {
                        *p = prev;
                        fills += 1;
                    }
                    None => {
                        return Err(Error::LeadingGap {
                            ticker: panel.tickers[i].clone(),
                            date: panel.dates[t].to_string(),
                        })
                    }
                }
            } else {
                last = Some(*p);
            }
        }
    }
    Ok((out, fills))
}

/// Log returns `R_i(t) = ln P_i(t+dt) - ln P_i(t)` before normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct RawReturns {
    pub tickers: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

pub fn log_returns(panel: &PricePanel, dt: usize) -> Result<RawReturns> {
    if dt == 0 {
        return Err(Error::invalid("return horizon dt must be at least 1"));
    }
    if panel.n_dates() <= dt {
        return Err(Error::invalid(format!("{} dates is too short for dt = {dt}", panel.n_dates())));
    }
    let mut values = Vec::with_capacity(panel.n_tickers());
    for (ticker, row) in panel.tickers.iter().zip(&panel.prices) {
        if let Some(p) = row.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
            return Err(Error::Domain(format!("price {p} of {ticker} is not a positive number")));
        }
        let logs: Vec<f64> = row.iter().map(|p| p.ln()).collect();
        values.push((0..logs.len() - dt).map(|t| logs[t + dt] - logs[t]).collect());
    }
    Ok(RawReturns { tickers: panel.tickers.clone(), values })
}

/// Normalized returns with the statistics used to produce them.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    pub tickers: Vec<String>,
    /// `returns[i][t] = (R_i(t) - <R_i>) / sigma_i`
    pub returns: Vec<Vec<f64>>,
    pub raw_returns: Vec<Vec<f64>>,
    pub sigmas: Vec<f64>,
    pub means: Vec<f64>,
}

impl ReturnPanel {
    pub fn n_tickers(&self) -> usize {
        self.tickers.len()
    }

    pub fn n_obs(&self) -> usize {
        self.returns.first().map_or(0, Vec::len)
    }
}

/// Mean and population standard deviation (divide by T).
pub(crate) fn mean_and_sigma(row: &[f64]) -> (f64, f64) {
    let n = row.len() as f64;
    let mean = row.iter().sum::<f64>() / n;
    let var = row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn is_degenerate(row: &[f64], sigma: f64) -> bool {
    let scale = row.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    !(sigma > 1e-12 * scale) || sigma == 0.0
}

pub fn normalize(raw: &RawReturns) -> Result<ReturnPanel> {
    let mut returns = Vec::with_capacity(raw.values.len());
    let mut sigmas = Vec::with_capacity(raw.values.len());
    let mut means = Vec::with_capacity(raw.values.len());
    for (ticker, row) in raw.tickers.iter().zip(&raw.values) {
        if row.is_empty() {
            return Err(Error::invalid(format!("no returns for {ticker}")));
        }
        let (mean, sigma) = mean_and_sigma(row);
        if is_degenerate(row, sigma) {
            return Err(Error::ZeroVariance(ticker.clone()));
        }
        returns.push(row.iter().map(|x| (x - mean) / sigma).collect());
        sigmas.push(sigma);
        means.push(mean);
    }
    Ok(ReturnPanel {
        tickers: raw.tickers.clone(),
        returns,
        raw_returns: raw.values.clone(),
        sigmas,
        means,
    })
}

/// A ticker excluded while turning prices into returns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Dropped {
    pub ticker: String,
    pub reason: String,
}

/// Fill, difference and normalize, dropping tickers that have a leading gap
/// or a constant return series instead of aborting.
pub fn prepare_returns(panel: &PricePanel, dt: usize) -> Result<(ReturnPanel, Vec<Dropped>)> {
    let mut dropped = Vec::new();
    let mut keep = Vec::new();
    for (i, row) in panel.prices.iter().enumerate() {
        if row.first().is_none_or(|p| p.is_nan()) {
            warn!("dropping {}: leading gap at {}", panel.tickers[i], panel.dates[0]);
            dropped.push(Dropped { ticker: panel.tickers[i].clone(), reason: "leading gap".into() });
        } else {
            keep.push(i);
        }
    }
    let (filled, _) = fill_missing(&panel.select_rows(&keep))?;
    let raw = log_returns(&filled, dt)?;
    let mut rows = Vec::new();
    for (i, row) in raw.values.iter().enumerate() {
        let (_, sigma) = mean_and_sigma(row);
        if is_degenerate(row, sigma) {
            warn!("dropping {}: zero variance", raw.tickers[i]);
            dropped.push(Dropped { ticker: raw.tickers[i].clone(), reason: "zero variance".into() });
        } else {
            rows.push(i);
        }
    }
    let raw = RawReturns {
        tickers: rows.iter().map(|&i| raw.tickers[i].clone()).collect(),
        values: rows.iter().map(|&i| raw.values[i].clone()).collect(),
    };
    if raw.tickers.len() < 2 {
        return Err(Error::invalid("fewer than 2 usable tickers remain"));
    }
    Ok((normalize(&raw)?, dropped))
}

/// How to cut a panel into time windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowSpec {
    /// `k` consecutive windows of equal length; the remainder goes to the last.
    Equal(usize),
    /// Half-open `[start, end)` date ranges, non-overlapping and ordered.
    Ranges(Vec<(NaiveDate, NaiveDate)>),
}

/// Minimum dates per window; one return needs two prices.
pub const MIN_WINDOW_DATES: usize = 2;

pub fn split_windows(panel: &PricePanel, spec: &WindowSpec) -> Result<Vec<PricePanel>> {
    let n = panel.n_dates();
    let bounds: Vec<(usize, usize)> = match spec {
        WindowSpec::Equal(k) => {
            let k = *k;
            if k == 0 {
                return Err(Error::invalid("window count must be at least 1"));
            }
            let len = n / k;
            (0..k)
                .map(|w| (w * len, if w + 1 == k { n } else { (w + 1) * len }))
                .collect()
        }
        WindowSpec::Ranges(ranges) => {
            if ranges.is_empty() {
                return Err(Error::invalid("no window ranges given"));
            }
            for (s, e) in ranges {
                if s >= e {
                    return Err(Error::invalid(format!("empty window range {s}..{e}")));
                }
            }
            if let Some(w) = ranges.windows(2).find(|w| w[1].0 < w[0].1) {
                return Err(Error::invalid(format!("window ranges overlap or are unordered at {}", w[1].0)));
            }
            ranges
                .iter()
                .map(|(s, e)| {
                    let lo = panel.dates.partition_point(|d| d < s);
                    let hi = panel.dates.partition_point(|d| d < e);
                    (lo, hi)
                })
                .collect()
        }
    };
    bounds
        .into_iter()
        .enumerate()
        .map(|(w, (lo, hi))| {
            if hi - lo < MIN_WINDOW_DATES {
                return Err(Error::invalid(format!("window {w} has {} dates (< {MIN_WINDOW_DATES})", hi - lo)));
            }
            Ok(panel.slice_dates(lo..hi))
        })
        .collect()
}

/// Joins two markets on their common date range. Every ticker is renamed
/// `<tag>:<ticker>` and carries its market tag. Dates present in only one
/// market become gaps for the other.
pub fn combine_universes(a: &PricePanel, tag_a: &str, b: &PricePanel, tag_b: &str) -> Result<PricePanel> {
    if tag_a == tag_b {
        return Err(Error::invalid("market tags must differ"));
    }
    let set_a: BTreeSet<NaiveDate> = a.dates.iter().copied().collect();
    let set_b: BTreeSet<NaiveDate> = b.dates.iter().copied().collect();
    let common: Vec<NaiveDate> = set_a.intersection(&set_b).copied().collect();
    let (first, last) = match (common.first(), common.last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => return Err(Error::invalid("markets share no dates")),
    };
    let dates: Vec<NaiveDate> = set_a
        .union(&set_b)
        .copied()
        .filter(|d| *d >= first && *d <= last)
        .collect();

    let mut tickers = Vec::new();
    let mut prices = Vec::new();
    let mut tags = Vec::new();
    for (panel, tag) in [(a, tag_a), (b, tag_b)] {
        for (ticker, row) in panel.tickers.iter().zip(&panel.prices) {
            tickers.push(format!("{tag}:{ticker}"));
            tags.push(Some(tag.to_string()));
            prices.push(
                dates
                    .iter()
                    .map(|d| match panel.dates.binary_search(d) {
                        Ok(t) => row[t],
                        Err(_) => f64::NAN,
                    })
                    .collect(),
            );
        }
    }
    Ok(PricePanel::with_tags(tickers, dates, prices, tags)?.sorted_by_ticker())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn panel(rows: Vec<Vec<f64>>) -> PricePanel {
        let n = rows[0].len();
        let dates = (0..n).map(|k| d("2020-01-01") + chrono::Days::new(k as u64)).collect();
        let tickers = (0..rows.len()).map(|i| format!("T{i}")).collect();
        PricePanel::new(tickers, dates, rows).unwrap()
    }

    #[test]
    fn wide_file_is_ingested() {
        let src = "date,B,A\n2020-01-01,1,2\n2020-01-02,1.5,2.5\n2020-01-03,2,3\n";
        let p = read_prices(src.as_bytes(), Layout::Wide, b',').unwrap();
        assert_eq!(p.tickers, vec!["A", "B"]);
        assert_eq!(p.n_dates(), 3);
        assert_eq!(p.prices[0], vec![2.0, 2.5, 3.0]);
    }

    #[test]
    fn long_file_missing_cell_becomes_gap() {
        let src = "date,ticker,price\n2020-01-01,A,1\n2020-01-02,A,2\n2020-01-03,A,3\n\
                   2020-01-01,B,5\n2020-01-03,B,6\n";
        let p = read_prices(src.as_bytes(), Layout::Long, b',').unwrap();
        assert_eq!(p.gap_count(), 1);
        assert!(p.prices[1][1].is_nan());
    }

    #[test]
    fn na_and_empty_cells_are_gaps() {
        let src = "date,A,B\n2020-01-01,1,2\n2020-01-02,NA,\n2020-01-03,2,3\n";
        let p = read_prices(src.as_bytes(), Layout::Wide, b',').unwrap();
        assert_eq!(p.gap_count(), 2);
    }

    #[test]
    fn duplicate_date_is_conflict() {
        let src = "date,A,B\n2020-01-01,1,2\n2020-01-01,1,2\n2020-01-03,2,3\n";
        let err = read_prices(src.as_bytes(), Layout::Wide, b',').unwrap_err();
        assert!(matches!(err, Error::Conflict(_)), "{err}");
    }

    #[test]
    fn duplicate_long_cell_is_conflict() {
        let src = "2020-01-01,A,1\n2020-01-01,A,2\n2020-01-02,A,1\n2020-01-03,B,1\n";
        let err = read_prices(src.as_bytes(), Layout::Long, b',').unwrap_err();
        assert!(matches!(err, Error::Conflict(_)));
    }

    #[test]
    fn malformed_row_reports_line() {
        let src = "date,A,B\n2020-01-01,1,2\n2020-01-02,1\n2020-01-03,2,3\n";
        match read_prices(src.as_bytes(), Layout::Wide, b',').unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
        let src = "date,A,B\n2020-01-01,1,2\n2020-13-02,1,1\n2020-01-03,2,3\n";
        assert!(matches!(read_prices(src.as_bytes(), Layout::Wide, b',').unwrap_err(), Error::Parse { line: 3, .. }));
    }

    #[test]
    fn too_small_panel_rejected() {
        let src = "date,A,B\n2020-01-01,1,2\n2020-01-02,1,1\n";
        assert!(read_prices(src.as_bytes(), Layout::Wide, b',').is_err());
    }

    #[test]
    fn semicolon_delimiter() {
        let src = "date;A;B\n2020-01-01;1;2\n2020-01-02;1;1\n2020-01-03;2;3\n";
        let p = read_prices(src.as_bytes(), Layout::Wide, b';').unwrap();
        assert_eq!(p.n_tickers(), 2);
    }

    #[test]
    fn forward_fill() {
        let p = panel(vec![vec![100.0, f64::NAN, 102.0], vec![1.0, 2.0, 3.0]]);
        let (f, n) = fill_missing(&p).unwrap();
        assert_eq!(f.prices[0], vec![100.0, 100.0, 102.0]);
        assert_eq!(n, 1);
        let (g, m) = fill_missing(&f).unwrap();
        assert_eq!((g, m), (f, 0));
    }

    #[test]
    fn leading_gap_errors() {
        let p = panel(vec![vec![f64::NAN, 1.0, 2.0], vec![1.0, 2.0, 3.0]]);
        match fill_missing(&p).unwrap_err() {
            Error::LeadingGap { ticker, date } => {
                assert_eq!(ticker, "T0");
                assert_eq!(date, "2020-01-01");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn log_return_examples() {
        let e = std::f64::consts::E;
        let p = panel(vec![vec![5.0, 5.0, 5.0], vec![1.0, e, e * e]]);
        let r = log_returns(&p, 1).unwrap();
        assert_eq!(r.values[0], vec![0.0, 0.0]);
        assert!((r.values[1][0] - 1.0).abs() < 1e-15 && (r.values[1][1] - 1.0).abs() < 1e-15);

        // ln(1.01) = 0.01 - 0.01^2/2 + 0.01^3/3 - ... (series, evaluated independently)
        let series: f64 = (1..30).map(|k| (-1f64).powi(k + 1) * 0.01f64.powi(k) / k as f64).sum();
        let p = panel(vec![vec![100.0, 101.0, 101.0], vec![1.0, 2.0, 3.0]]);
        let r = log_returns(&p, 1).unwrap();
        assert!((r.values[0][0] - series).abs() < 1e-15);
        assert!((r.values[0][0] - 9.950330853168e-3).abs() < 1e-14);

        let r2 = log_returns(&p, 2).unwrap();
        assert_eq!(r2.values[1].len(), 1);
        assert!((r2.values[1][0] - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn log_returns_rejects_bad_prices() {
        let mut p = panel(vec![vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]);
        p.prices[0][1] = -1.0;
        assert!(matches!(log_returns(&p, 1), Err(Error::Domain(_))));
        p.prices[0][1] = f64::NAN;
        assert!(matches!(log_returns(&p, 1), Err(Error::Domain(_))));
        assert!(log_returns(&p, 3).is_err());
    }

    #[test]
    fn normalize_examples() {
        let raw = RawReturns {
            tickers: vec!["A".into(), "B".into()],
            values: vec![vec![1.0, -1.0, 1.0, -1.0], vec![0.3, 0.1, -0.2, 0.7]],
        };
        let r = normalize(&raw).unwrap();
        assert_eq!(r.returns[0], vec![1.0, -1.0, 1.0, -1.0]);
        for row in &r.returns {
            let (m, s) = mean_and_sigma(row);
            assert!(m.abs() < 1e-10 && (s - 1.0).abs() < 1e-10);
        }
        let raw = RawReturns { tickers: vec!["C".into()], values: vec![vec![0.01; 5]] };
        assert!(matches!(normalize(&raw), Err(Error::ZeroVariance(t)) if t == "C"));
    }

    #[test]
    fn prepare_drops_bad_tickers() {
        let p = panel(vec![
            vec![f64::NAN, 1.0, 2.0, 3.0],
            vec![5.0, 5.0, 5.0, 5.0],
            vec![1.0, 2.0, 1.5, 3.0],
            vec![2.0, 2.1, f64::NAN, 2.0],
        ]);
        let (r, dropped) = prepare_returns(&p, 1).unwrap();
        assert_eq!(r.tickers, vec!["T2", "T3"]);
        assert_eq!(dropped.len(), 2);
    }

    #[test]
    fn equal_split() {
        let p = panel(vec![(1..=8).map(f64::from).collect(), (1..=8).map(|x| f64::from(x) * 2.0).collect()]);
        let w = split_windows(&p, &WindowSpec::Equal(4)).unwrap();
        assert_eq!(w.len(), 4);
        assert!(w.iter().all(|x| x.n_dates() == 2));
        assert_eq!(split_windows(&p, &WindowSpec::Equal(1)).unwrap(), vec![p.clone()]);
        let w = split_windows(&p, &WindowSpec::Equal(3)).unwrap();
        assert_eq!(w.iter().map(PricePanel::n_dates).collect::<Vec<_>>(), vec![2, 2, 4]);
        assert!(split_windows(&p, &WindowSpec::Equal(5)).is_err());
    }

    #[test]
    fn explicit_ranges() {
        let p = panel(vec![(1..=10).map(f64::from).collect(), (1..=10).map(f64::from).collect()]);
        let spec = WindowSpec::Ranges(vec![(d("2020-01-01"), d("2020-01-04")), (d("2020-01-04"), d("2020-01-11"))]);
        let w = split_windows(&p, &spec).unwrap();
        assert_eq!(w[0].n_dates(), 3);
        assert_eq!(w[1].n_dates(), 7);
        let bad = WindowSpec::Ranges(vec![(d("2020-01-01"), d("2020-01-05")), (d("2020-01-04"), d("2020-01-11"))]);
        assert!(split_windows(&p, &bad).is_err());
    }

    #[test]
    fn combine_two_markets() {
        let a = panel(vec![vec![1.0; 12], vec![2.0; 12]]);
        let mut b = panel(vec![vec![3.0; 10], vec![4.0; 10]]);
        b.dates = a.dates[2..].to_vec();
        let c = combine_universes(&a, "NYSE", &b, "SSE").unwrap();
        assert_eq!(c.n_tickers(), 4);
        assert_eq!(c.n_dates(), 10);
        assert_eq!(c.tickers, vec!["NYSE:T0", "NYSE:T1", "SSE:T0", "SSE:T1"]);
        assert_eq!(c.market_tags[3].as_deref(), Some("SSE"));

        let mut far = b.clone();
        far.dates = (0..10).map(|k| d("2021-01-01") + chrono::Days::new(k)).collect();
        assert!(combine_universes(&a, "NYSE", &far, "SSE").is_err());
    }

    #[test]
    fn combine_with_holiday_mismatch_leaves_gaps() {
        let a = panel(vec![vec![1.0, 1.1, 1.2, 1.3, 1.4], vec![2.0; 5]]);
        let mut b = panel(vec![vec![3.0, 3.1, 3.2, 3.3], vec![4.0; 4]]);
        b.dates = vec![a.dates[0], a.dates[1], a.dates[3], a.dates[4]];
        let c = combine_universes(&a, "X", &b, "Y").unwrap();
        assert_eq!(c.n_dates(), 5);
        assert_eq!(c.gap_count(), 2);
        let (f, n) = fill_missing(&c).unwrap();
        assert_eq!(n, 2);
        assert_eq!(f.prices[2][2], 3.1);
    }
}
