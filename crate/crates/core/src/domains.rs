//! Same-sign correlation domains of a mode matrix.
//!
//! A domain is a set of stocks whose pairwise correlations all carry one
//! sign. Exact zeros belong to neither sign. Stocks without any same-sign
//! partner are left unassigned; everything else lands in exactly one domain,
//! possibly a singleton.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::correlation::CorrelationMatrix;
use crate::error::{Error, Result};

/// Largest size accepted by [`exact_domains`].
pub const EXACT_MAX_N: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn matches(self, x: f64) -> bool {
        match self {
            Sign::Positive => x > 0.0,
            Sign::Negative => x < 0.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sign::Positive => "positive",
            Sign::Negative => "negative",
        }
    }

    fn symbol(self) -> char {
        match self {
            Sign::Positive => '+',
            Sign::Negative => '-',
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "positive" | "pos" | "+" => Ok(Sign::Positive),
            "negative" | "neg" | "-" => Ok(Sign::Negative),
            other => Err(Error::invalid(format!("unknown sign `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignDomainSet {
    pub sign: Sign,
    /// Sorted members; domains ordered by descending size, then first member.
    pub domains: Vec<Vec<usize>>,
    pub unassigned: Vec<usize>,
}

impl SignDomainSet {
    fn canonical(sign: Sign, mut domains: Vec<Vec<usize>>, mut unassigned: Vec<usize>) -> Self {
        for d in &mut domains {
            d.sort_unstable();
        }
        domains.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
        unassigned.sort_unstable();
        SignDomainSet { sign, domains, unassigned }
    }

    pub fn n_nodes(&self) -> usize {
        self.domains.iter().map(Vec::len).sum::<usize>() + self.unassigned.len()
    }

    /// Domain index per stock; unassigned stocks get a fresh label each, so
    /// they never share a domain with anyone.
    pub fn labels(&self) -> Vec<usize> {
        let n = self.n_nodes();
        let mut out = vec![0; n];
        for (k, d) in self.domains.iter().enumerate() {
            d.iter().for_each(|&i| out[i] = k);
        }
        for (k, &i) in self.unassigned.iter().enumerate() {
            out[i] = self.domains.len() + k;
        }
        out
    }

    /// True when every internal pair carries the set's sign.
    pub fn satisfies_sign(&self, c: &CorrelationMatrix) -> bool {
        self.domains
            .iter()
            .all(|d| d.iter().enumerate().all(|(a, &i)| d[a + 1..].iter().all(|&j| self.sign.matches(c.get(i, j)))))
    }
}

/// Sum of same-sign `|C_ij|` per stock.
pub fn same_sign_strength(c: &CorrelationMatrix, sign: Sign) -> Vec<f64> {
    (0..c.n())
        .map(|i| (0..c.n()).filter(|&j| j != i).map(|j| c.get(i, j)).filter(|&x| sign.matches(x)).map(f64::abs).sum())
        .collect()
}

/// Greedy agglomerative domains: stocks in descending same-sign strength
/// each join the compatible domain with the largest mean `|C|` to its
/// members, or seed a new one.
pub fn extract_domains(c: &CorrelationMatrix, sign: Sign) -> SignDomainSet {
    let n = c.n();
    let strength = same_sign_strength(c, sign);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| strength[b].total_cmp(&strength[a]).then(a.cmp(&b)));
    let mut domains: Vec<Vec<usize>> = Vec::new();
    let mut unassigned = Vec::new();
    for i in order {
        if strength[i] <= 0.0 {
            unassigned.push(i);
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (k, d) in domains.iter().enumerate() {
            if !d.iter().all(|&j| sign.matches(c.get(i, j))) {
                continue;
            }
            let mean = d.iter().map(|&j| c.get(i, j).abs()).sum::<f64>() / d.len() as f64;
            if best.is_none_or(|(_, m)| mean > m) {
                best = Some((k, mean));
            }
        }
        match best {
            Some((k, _)) => domains[k].push(i),
            None => domains.push(vec![i]),
        }
    }
    SignDomainSet::canonical(sign, domains, unassigned)
}

/// Exact reference: a partition of the stocks with same-sign partners into
/// the fewest same-sign cliques, ties broken by the largest total internal
/// `|C|`. Exponential; limited to [`EXACT_MAX_N`] stocks.
pub fn exact_domains(c: &CorrelationMatrix, sign: Sign) -> Result<SignDomainSet> {
    let n = c.n();
    if n > EXACT_MAX_N {
        return Err(Error::invalid(format!("exact domain search supports at most {EXACT_MAX_N} stocks, got {n}")));
    }
    let strength = same_sign_strength(c, sign);
    let active: Vec<usize> = (0..n).filter(|&i| strength[i] > 0.0).collect();
    let unassigned: Vec<usize> = (0..n).filter(|&i| strength[i] <= 0.0).collect();
    let m = active.len();
    let full = (1usize << m) - 1;
    // clique flag and internal weight per subset of active stocks
    let mut clique = vec![false; full + 1];
    let mut weight = vec![0.0; full + 1];
    clique[0] = true;
    for mask in 1..=full {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        if !clique[rest] {
            continue;
        }
        let i = active[low];
        let mut ok = true;
        let mut w = weight[rest];
        let mut r = rest;
        while r != 0 {
            let j = active[r.trailing_zeros() as usize];
            let x = c.get(i, j);
            if !sign.matches(x) {
                ok = false;
                break;
            }
            w += x.abs();
            r &= r - 1;
        }
        clique[mask] = ok;
        weight[mask] = w;
    }
    // best[mask] = (domain count, total weight, chosen block)
    let mut best: Vec<(usize, f64, usize)> = vec![(usize::MAX, 0.0, 0); full + 1];
    best[0] = (0, 0.0, 0);
    for mask in 1..=full {
        let low = mask & mask.wrapping_neg();
        let rest = mask ^ low;
        let mut sub = rest;
        loop {
            let block = sub | low;
            if clique[block] {
                let (cnt, w, _) = best[mask ^ block];
                let cand = (cnt + 1, w + weight[block]);
                let cur = best[mask];
                if cand.0 < cur.0 || (cand.0 == cur.0 && cand.1 > cur.1) {
                    best[mask] = (cand.0, cand.1, block);
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
    }
    let mut domains = Vec::new();
    let mut mask = full;
    while mask != 0 {
        let block = best[mask].2;
        domains.push((0..m).filter(|&b| block >> b & 1 == 1).map(|b| active[b]).collect());
        mask ^= block;
    }
    Ok(SignDomainSet::canonical(sign, domains, unassigned))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeHistogram {
    /// `(size, relative frequency)` for every size that occurs, ascending.
    pub frequencies: Vec<(usize, f64)>,
    pub count: usize,
    pub max: usize,
    pub mean: f64,
}

pub fn domain_size_histogram(ds: &SignDomainSet) -> SizeHistogram {
    let count = ds.domains.len();
    if count == 0 {
        return SizeHistogram { frequencies: Vec::new(), count: 0, max: 0, mean: 0.0 };
    }
    let sizes: Vec<usize> = ds.domains.iter().map(Vec::len).collect();
    let max = *sizes.iter().max().unwrap();
    let mut tally = vec![0usize; max + 1];
    sizes.iter().for_each(|&s| tally[s] += 1);
    let frequencies = tally
        .iter()
        .enumerate()
        .filter(|(_, &t)| t > 0)
        .map(|(s, &t)| (s, t as f64 / count as f64))
        .collect();
    SizeHistogram { frequencies, count, max, mean: sizes.iter().sum::<usize>() as f64 / count as f64 }
}

impl SizeHistogram {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut s = format!("# count: {}\n# max: {}\n# mean: {}\nsize,frequency\n", self.count, self.max, self.mean);
        for (size, f) in &self.frequencies {
            s.push_str(&format!("{size},{f}\n"));
        }
        out.write_all(s.as_bytes()).map_err(|e| Error::io("<histogram output>", e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainGraph {
    pub domains: Vec<Vec<usize>>,
    /// Linked domain pairs `(p, q)`, `p < q`.
    pub links: Vec<(usize, usize)>,
    /// Mean inter-domain correlation for every pair `(p, q, mean)`.
    pub pair_means: Vec<(usize, usize, f64)>,
    pub grand_mean: f64,
}

/// Links domain pairs whose mean inter-domain correlation exceeds the mean
/// over all pairs. Differences within `1e-12` of the grand mean (relative)
/// count as equal.
pub fn build_domain_graph(c_sec: &CorrelationMatrix, ds: &SignDomainSet) -> Result<DomainGraph> {
    let k = ds.domains.len();
    if k < 2 {
        return Err(Error::invalid(format!("domain graph needs at least 2 domains, got {k}")));
    }
    if let Some(&v) = ds.domains.iter().flatten().find(|&&v| v >= c_sec.n()) {
        return Err(Error::invalid(format!("domain member {v} out of range")));
    }
    let mut pair_means = Vec::with_capacity(k * (k - 1) / 2);
    for p in 0..k {
        for q in p + 1..k {
            pair_means.push((p, q, crate::community::cross_mean(c_sec, &ds.domains[p], &ds.domains[q])));
        }
    }
    let grand_mean = pair_means.iter().map(|x| x.2).sum::<f64>() / pair_means.len() as f64;
    let tol = 1e-12 * grand_mean.abs().max(1e-300);
    let links = pair_means.iter().filter(|x| x.2 - grand_mean > tol).map(|x| (x.0, x.1)).collect();
    Ok(DomainGraph { domains: ds.domains.clone(), links, pair_means, grand_mean })
}

/// Display order: domains contiguous in their stored order (descending
/// size), members ascending, unassigned stocks last.
pub fn reorder_for_display(ds: &SignDomainSet) -> Vec<usize> {
    ds.domains.iter().flatten().copied().chain(ds.unassigned.iter().copied()).collect()
}

/// Writes `ticker,domain,sign` for every domain member of every set.
pub fn write_domains<W: Write>(tickers: &[String], sets: &[&SignDomainSet], mut out: W) -> Result<()> {
    let mut s = String::from("ticker,domain,sign\n");
    for ds in sets {
        for (k, d) in ds.domains.iter().enumerate() {
            for &i in d {
                s.push_str(&format!("{},{k},{}\n", tickers[i], ds.sign));
            }
        }
    }
    out.write_all(s.as_bytes()).map_err(|e| Error::io("<domain output>", e))
}

/// Sign matrix in display order as `row,col,sign` triples, preceded by the
/// domain boundary indices (start offsets of each domain in the order).
pub fn write_sign_triples<W: Write>(c: &CorrelationMatrix, ds: &SignDomainSet, mut out: W) -> Result<()> {
    let perm = reorder_for_display(ds);
    let mut bounds = Vec::new();
    let mut pos = 0;
    for d in &ds.domains {
        bounds.push(pos.to_string());
        pos += d.len();
    }
    bounds.push(pos.to_string());
    let mut s = format!("# order: {}\n# boundaries: {}\nrow,col,sign\n", perm.iter().map(|&i| c.tickers[i].as_str()).collect::<Vec<_>>().join(" "), bounds.join(" "));
    for (r, &i) in perm.iter().enumerate() {
        for (col, &j) in perm.iter().enumerate() {
            if r == col {
                continue;
            }
            let x = c.get(i, j);
            let sign = if x > 0.0 { 1 } else if x < 0.0 { -1 } else { 0 };
            s.push_str(&format!("{r},{col},{sign}\n"));
        }
    }
    out.write_all(s.as_bytes()).map_err(|e| Error::io("<sign matrix output>", e))
}

impl DomainGraph {
    pub fn write_dot<W: Write>(&self, tickers: &[String], mut out: W) -> Result<()> {
        let mut s = String::from("graph domains {\n");
        for (k, d) in self.domains.iter().enumerate() {
            let members: Vec<&str> = d.iter().map(|&i| tickers[i].as_str()).collect();
            s.push_str(&format!("  d{k} [size={}, members=\"{}\"];\n", d.len(), members.join(" ")));
        }
        for &(p, q, m) in &self.pair_means {
            if self.links.contains(&(p, q)) {
                s.push_str(&format!("  d{p} -- d{q} [mean={m:e}];\n"));
            }
        }
        s.push_str("}\n");
        out.write_all(s.as_bytes()).map_err(|e| Error::io("<domain graph output>", e))
    }

    pub fn write_pair_means<W: Write>(&self, mut out: W) -> Result<()> {
        let mut s = format!("# grand_mean: {:e}\ndomain_p,domain_q,mean,linked\n", self.grand_mean);
        for &(p, q, m) in &self.pair_means {
            s.push_str(&format!("{p},{q},{m:e},{}\n", self.links.contains(&(p, q))));
        }
        out.write_all(s.as_bytes()).map_err(|e| Error::io("<domain graph output>", e))
    }
}

impl fmt::Display for SignDomainSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} domains", self.domains.len(), self.sign.symbol())
    }
}
