//! Filtered graphs (MST and PMFG) built from a correlation matrix.

mod export;
pub mod planarity;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::correlation::CorrelationMatrix;
use crate::error::{Error, Result};

pub use export::{market_tag, write_dot, write_edge_csv, write_graphml};
pub use planarity::{check_planarity, is_planar, Embedding, KuratowskiKind, Obstruction, Planarity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Mst,
    Pmfg,
}

impl GraphKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GraphKind::Mst => "mst",
            GraphKind::Pmfg => "pmfg",
        }
    }
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mst" => Ok(GraphKind::Mst),
            "pmfg" => Ok(GraphKind::Pmfg),
            other => Err(Error::invalid(format!("unknown graph kind `{other}` (expected mst or pmfg)"))),
        }
    }
}

/// An undirected edge with `i < j`. `rank` is the insertion order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteredGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<Edge>,
    pub kind: GraphKind,
    /// Embedding genus; always 0 for a PMFG and absent for an MST.
    pub genus: Option<u32>,
}

impl FilteredGraph {
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_pairs(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.i, e.j)).collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Weighted adjacency lists `(neighbour, weight)`.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n()];
        for e in &self.edges {
            adj[e.i].push((e.j, e.weight));
            adj[e.j].push((e.i, e.weight));
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n();
        if n == 0 {
            return true;
        }
        let mut uf = UnionFind::new(n);
        let mut parts = n;
        for e in &self.edges {
            if uf.union(e.i, e.j) {
                parts -= 1;
            }
        }
        parts == 1
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), rank: vec![0; n] }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns true when `a` and `b` were in different sets.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// All pairs `i < j` sorted by descending `C_ij`, ties by `(i, j)`.
pub fn ranked_pairs(c: &CorrelationMatrix) -> Vec<(usize, usize, f64)> {
    let mut pairs: Vec<(usize, usize, f64)> = c.values.upper_triangle().collect();
    pairs.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    pairs
}

fn check_finite(c: &CorrelationMatrix) -> Result<()> {
    if c.values.upper_triangle().any(|(_, _, v)| !v.is_finite()) {
        return Err(Error::invalid("correlation matrix has non-finite entries"));
    }
    Ok(())
}

/// Maximum spanning tree by Kruskal over the descending ranking.
pub fn build_mst(c: &CorrelationMatrix) -> Result<FilteredGraph> {
    let n = c.n();
    if n < 2 {
        return Err(Error::invalid(format!("MST needs at least 2 nodes, got {n}")));
    }
    check_finite(c)?;
    let mut uf = UnionFind::new(n);
    let mut edges = Vec::with_capacity(n - 1);
    for (i, j, w) in ranked_pairs(c) {
        if uf.union(i, j) {
            edges.push(Edge { i, j, weight: w, rank: edges.len() });
            if edges.len() == n - 1 {
                break;
            }
        }
    }
    Ok(FilteredGraph { nodes: c.tickers.clone(), edges, kind: GraphKind::Mst, genus: None })
}

/// Result of a PMFG build, including the edges turned down for breaking
/// planarity (in ranking order).
#[derive(Debug, Clone)]
pub struct PmfgBuild {
    pub graph: FilteredGraph,
    pub rejected: Vec<(usize, usize, f64)>,
}

/// Planar maximally filtered graph (genus 0).
pub fn build_pmfg(c: &CorrelationMatrix) -> Result<FilteredGraph> {
    Ok(build_pmfg_traced(c)?.graph)
}

/// [`build_pmfg`], also returning the rejected candidates.
pub fn build_pmfg_traced(c: &CorrelationMatrix) -> Result<PmfgBuild> {
    let n = c.n();
    if n < 3 {
        return Err(Error::invalid(format!("PMFG needs at least 3 nodes, got {n}")));
    }
    check_finite(c)?;
    let target = 3 * n - 6;
    let mut uf = UnionFind::new(n);
    let mut kept: Vec<(usize, usize)> = Vec::with_capacity(target);
    let mut edges = Vec::with_capacity(target);
    let mut rejected = Vec::new();
    for (i, j, w) in ranked_pairs(c) {
        // joining two components never breaks planarity
        let accept = if uf.find(i) != uf.find(j) {
            true
        } else {
            kept.push((i, j));
            let ok = is_planar(n, &kept);
            kept.pop();
            ok
        };
        if accept {
            uf.union(i, j);
            kept.push((i, j));
            edges.push(Edge { i, j, weight: w, rank: edges.len() });
            if edges.len() == target {
                break;
            }
        } else {
            rejected.push((i, j, w));
        }
    }
    let graph = FilteredGraph { nodes: c.tickers.clone(), edges, kind: GraphKind::Pmfg, genus: Some(0) };
    Ok(PmfgBuild { graph, rejected })
}

/// Builds the requested graph kind.
pub fn build_graph(c: &CorrelationMatrix, kind: GraphKind) -> Result<FilteredGraph> {
    match kind {
        GraphKind::Mst => build_mst(c),
        GraphKind::Pmfg => build_pmfg(c),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::MatrixKind;
    use crate::matrix::SquareMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn tickers(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("S{i:02}")).collect()
    }

    fn random_matrix(n: usize, seed: u64) -> CorrelationMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = SquareMatrix::identity(n);
        for i in 0..n {
            for j in i + 1..n {
                let x = rng.random::<f64>() * 2.0 - 1.0;
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
        }
        CorrelationMatrix::new(tickers(n), m, MatrixKind::Full).unwrap()
    }

    #[test]
    fn two_nodes_give_single_edge() {
        let c = CorrelationMatrix::new(
            tickers(2),
            SquareMatrix::from_rows(&[vec![1.0, 0.3], vec![0.3, 1.0]]),
            MatrixKind::Full,
        )
        .unwrap();
        let g = build_mst(&c).unwrap();
        assert_eq!(g.edge_pairs(), vec![(0, 1)]);
    }

    #[test]
    fn chain_matrix_gives_chain() {
        let n = 7;
        let m = SquareMatrix::from_fn(n, |i, j| {
            if i == j {
                1.0
            } else if i.abs_diff(j) == 1 {
                0.9
            } else {
                0.1
            }
        });
        let c = CorrelationMatrix::new(tickers(n), m, MatrixKind::Full).unwrap();
        let mut pairs = build_mst(&c).unwrap().edge_pairs();
        pairs.sort_unstable();
        assert_eq!(pairs, (0..n - 1).map(|i| (i, i + 1)).collect::<Vec<_>>());
    }

    #[test]
    fn pmfg_of_four_is_k4() {
        let g = build_pmfg(&random_matrix(4, 1)).unwrap();
        assert_eq!(g.edges.len(), 6);
    }

    #[test]
    fn pmfg_of_five_rejects_lowest_closing_edge() {
        for seed in 0..20 {
            let c = random_matrix(5, seed);
            let g = build_pmfg(&c).unwrap();
            assert_eq!(g.edges.len(), 9);
            // every single removal from K5 is planar, so the omitted pair is
            // the last-ranked one and adding it back gives K5
            let last = ranked_pairs(&c)[9];
            let mut pairs = g.edge_pairs();
            assert!(!pairs.contains(&(last.0, last.1)));
            for k in 0..10 {
                let mut k5: Vec<(usize, usize)> = (0..5).flat_map(|i| (i + 1..5).map(move |j| (i, j))).collect();
                k5.remove(k);
                assert!(is_planar(5, &k5));
            }
            pairs.push((last.0, last.1));
            assert!(!is_planar(5, &pairs));
        }
    }

    #[test]
    fn mst_is_subgraph_of_pmfg_and_connected() {
        for seed in 0..5 {
            let c = random_matrix(20, seed);
            let mst = build_mst(&c).unwrap();
            let pmfg = build_pmfg(&c).unwrap();
            assert!(mst.is_connected() && pmfg.is_connected());
            assert_eq!(pmfg.edges.len(), 54);
            assert!(is_planar(20, &pmfg.edge_pairs()));
            let set: HashSet<_> = pmfg.edge_pairs().into_iter().collect();
            assert!(mst.edge_pairs().iter().all(|e| set.contains(e)));
        }
    }

    #[test]
    fn ties_break_lexicographically() {
        let n = 4;
        let m = SquareMatrix::from_fn(n, |i, j| if i == j { 1.0 } else { 0.5 });
        let c = CorrelationMatrix::new(tickers(n), m, MatrixKind::Full).unwrap();
        assert_eq!(build_mst(&c).unwrap().edge_pairs(), vec![(0, 1), (0, 2), (0, 3)]);
    }

    #[test]
    fn graph_kind_parses() {
        assert_eq!("PMFG".parse::<GraphKind>().unwrap(), GraphKind::Pmfg);
        assert!("tree".parse::<GraphKind>().is_err());
    }
}
