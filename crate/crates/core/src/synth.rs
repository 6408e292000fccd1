//! Synthetic factor-model markets with planted sectors.
//!
//! Returns follow `r_i = β_m f_m + s_i β_s f_g(i) + σ ε_i` with independent
//! standard normal factors and noise. Sectors listed in an anti pair share one
//! factor, the second sector of the pair loading on it with `s_i = -1`.

use std::io::Write;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::PricePanel;

pub const BASE_PRICE: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub n_stocks: usize,
    pub n_obs: usize,
    pub n_sectors: usize,
    pub market_beta: f64,
    pub sector_beta: f64,
    #[serde(default)]
    pub anti_pairs: Vec<(usize, usize)>,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_stocks: 80,
            n_obs: 2000,
            n_sectors: 4,
            market_beta: 0.6,
            sector_beta: 0.5,
            anti_pairs: Vec::new(),
            noise_sigma: 1.0,
            seed: 42,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_stocks < 2 {
            return Err(Error::invalid("synthetic market needs at least 2 stocks"));
        }
        if self.n_obs < 2 {
            return Err(Error::invalid("synthetic market needs at least 2 observations"));
        }
        if self.n_sectors == 0 || self.n_sectors > self.n_stocks {
            return Err(Error::invalid(format!(
                "sector count {} must lie in 1..={}",
                self.n_sectors, self.n_stocks
            )));
        }
        for (name, v) in [("market_beta", self.market_beta), ("sector_beta", self.sector_beta), ("noise_sigma", self.noise_sigma)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if self.total_variance() <= 0.0 {
            return Err(Error::invalid("all loadings and the noise scale are zero"));
        }
        let mut used = vec![false; self.n_sectors];
        for &(a, b) in &self.anti_pairs {
            if a >= self.n_sectors || b >= self.n_sectors || a == b {
                return Err(Error::invalid(format!("anti pair ({a}, {b}) is not a pair of distinct sectors")));
            }
            for s in [a, b] {
                if std::mem::replace(&mut used[s], true) {
                    return Err(Error::invalid(format!("sector {s} appears in more than one anti pair")));
                }
            }
        }
        Ok(())
    }

    fn total_variance(&self) -> f64 {
        self.market_beta.powi(2) + self.sector_beta.powi(2) + self.noise_sigma.powi(2)
    }

    /// Balanced contiguous sector labels; the first `N mod K` sectors get one
    /// extra member.
    pub fn sector_labels(&self) -> Vec<usize> {
        let (n, k) = (self.n_stocks, self.n_sectors);
        let (base, extra) = (n / k, n % k);
        let mut labels = Vec::with_capacity(n);
        for s in 0..k {
            labels.extend(std::iter::repeat_n(s, base + usize::from(s < extra)));
        }
        labels
    }

    /// `(factor index, sign)` for every sector.
    fn sector_loadings(&self) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = (0..self.n_sectors).map(|s| (s, 1.0)).collect();
        for &(a, b) in &self.anti_pairs {
            out[b] = (a, -1.0);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedCorrelation {
    pub within: f64,
    pub cross: f64,
    pub anti: f64,
}

pub fn expected_correlation(spec: &SynthSpec) -> Result<ExpectedCorrelation> {
    spec.validate()?;
    let (m2, s2) = (spec.market_beta.powi(2), spec.sector_beta.powi(2));
    let tot = spec.total_variance();
    Ok(ExpectedCorrelation { within: (m2 + s2) / tot, cross: m2 / tot, anti: (m2 - s2) / tot })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthMarket {
    pub panel: PricePanel,
    /// Planted sector of every stock.
    pub labels: Vec<usize>,
    /// +1 / -1 for members of an anti pair's first / second sector, 0 otherwise.
    pub sides: Vec<i8>,
}

impl SynthMarket {
    /// Writes `ticker,sector,side` with side `+`, `-` or empty.
    pub fn write_labels<W: Write>(&self, mut out: W) -> Result<()> {
        let mut s = String::from("ticker,sector,side\n");
        for (i, t) in self.panel.tickers.iter().enumerate() {
            let side = match self.sides[i] {
                1 => "+",
                -1 => "-",
                _ => "",
            };
            s.push_str(&format!("{t},{},{side}\n", self.labels[i]));
        }
        out.write_all(s.as_bytes()).map_err(|e| Error::io("<labels output>", e))
    }
}

pub fn ticker_name(i: usize) -> String {
    format!("S{i:03}")
}

/// Weekday calendar starting at `start` (moved forward to a weekday).
pub fn weekday_calendar(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(count);
    let mut d = start;
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d += Duration::days(1);
    }
    out
}

fn calendar_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date")
}

/// Log returns `[stock][t]` for one regime.
fn simulate_returns(spec: &SynthSpec) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let labels = spec.sector_labels();
    let loadings = spec.sector_loadings();
    let (n, k, t_len) = (spec.n_stocks, spec.n_sectors, spec.n_obs);
    let mut r = vec![vec![0.0; t_len]; n];
    let mut factors = vec![0.0; k];
    for t in 0..t_len {
        let fm: f64 = rng.sample(StandardNormal);
        for f in factors.iter_mut() {
            *f = rng.sample(StandardNormal);
        }
        for i in 0..n {
            let eps: f64 = rng.sample(StandardNormal);
            let (fi, sign) = loadings[labels[i]];
            r[i][t] = spec.market_beta * fm + sign * spec.sector_beta * factors[fi] + spec.noise_sigma * eps;
        }
    }
    r
}

fn sides_of(spec: &SynthSpec, labels: &[usize]) -> Vec<i8> {
    labels
        .iter()
        .map(|&g| {
            if spec.anti_pairs.iter().any(|&(a, _)| a == g) {
                1
            } else if spec.anti_pairs.iter().any(|&(_, b)| b == g) {
                -1
            } else {
                0
            }
        })
        .collect()
}

/// Generates one synthetic market; `n_obs` returns give `n_obs + 1` prices.
pub fn generate(spec: &SynthSpec) -> Result<SynthMarket> {
    generate_regimes(std::slice::from_ref(spec))
}

/// Concatenates regimes in time: each regime's returns continue from the
/// previous regime's last price. All regimes must share the stock count.
/// Labels and sides describe the last regime.
pub fn generate_regimes(specs: &[SynthSpec]) -> Result<SynthMarket> {
    let first = specs.first().ok_or_else(|| Error::invalid("no synthetic regime given"))?;
    for s in specs {
        s.validate()?;
        if s.n_stocks != first.n_stocks {
            return Err(Error::invalid("all regimes must have the same number of stocks"));
        }
    }
    let n = first.n_stocks;
    let total_obs: usize = specs.iter().map(|s| s.n_obs).sum();
    let mut prices: Vec<Vec<f64>> = vec![vec![BASE_PRICE]; n];
    let mut log_p = vec![BASE_PRICE.ln(); n];
    for s in specs {
        let r = simulate_returns(s);
        for i in 0..n {
            for &x in &r[i] {
                log_p[i] += x;
                prices[i].push(log_p[i].exp());
            }
        }
    }
    let tickers = (0..n).map(ticker_name).collect();
    let dates = weekday_calendar(calendar_start(), total_obs + 1);
    let last = specs.last().unwrap();
    let labels = last.sector_labels();
    let sides = sides_of(last, &labels);
    Ok(SynthMarket { panel: PricePanel::new(tickers, dates, prices)?, labels, sides })
}
