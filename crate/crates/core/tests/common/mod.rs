#![allow(dead_code)]

use corrnet::correlation::{CorrelationMatrix, MatrixKind};
use corrnet::filtergraph::{Edge, FilteredGraph, GraphKind};
use corrnet::matrix::SquareMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn tickers(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("T{i:02}")).collect()
}

/// Sample correlation of `t` iid standard normal draws per series,
/// computed directly from the definition.
pub fn gram_correlation(n: usize, t: usize, rng: &mut ChaCha8Rng) -> CorrelationMatrix {
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..t).map(|_| rng.sample(StandardNormal)).collect()).collect();
    let z: Vec<Vec<f64>> = x
        .iter()
        .map(|row| {
            let m = row.iter().sum::<f64>() / t as f64;
            let s = (row.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / t as f64).sqrt();
            row.iter().map(|v| (v - m) / s).collect()
        })
        .collect();
    let values = SquareMatrix::from_fn(n, |i, j| {
        if i == j {
            1.0
        } else {
            let (a, b) = (i.min(j), i.max(j));
            z[a].iter().zip(&z[b]).map(|(p, q)| p * q).sum::<f64>() / t as f64
        }
    });
    CorrelationMatrix::new(tickers(n), values, MatrixKind::Full).unwrap()
}

/// Symmetric matrix with iid uniform off-diagonal entries in [-1, 1].
pub fn random_symmetric(n: usize, kind: MatrixKind, rng: &mut ChaCha8Rng) -> CorrelationMatrix {
    let mut m = SquareMatrix::identity(n);
    for i in 0..n {
        for j in i + 1..n {
            let v: f64 = rng.random_range(-1.0..1.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    CorrelationMatrix::new(tickers(n), m, kind).unwrap()
}

pub fn graph_from_edges(n: usize, edges: &[(usize, usize, f64)]) -> FilteredGraph {
    FilteredGraph {
        nodes: tickers(n),
        edges: edges
            .iter()
            .enumerate()
            .map(|(rank, &(i, j, weight))| Edge { i: i.min(j), j: i.max(j), weight, rank })
            .collect(),
        kind: GraphKind::Pmfg,
        genus: None,
    }
}

/// All set partitions of `0..n` as label vectors (restricted growth strings).
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(i: usize, n: usize, cur: &mut Vec<usize>, max: usize, out: &mut Vec<Vec<usize>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for l in 0..=max + 1 {
            cur.push(l);
            rec(i + 1, n, cur, max.max(l), out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let mut cur = vec![0];
    rec(1, n, &mut cur, 0, &mut out);
    out
}

/// Labels relabelled by first appearance, so equal partitions compare equal.
pub fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|l| {
            let k = map.len();
            *map.entry(*l).or_insert(k)
        })
        .collect()
}

pub fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!((a - b).abs() <= tol, "{what}: {a} vs {b} (tolerance {tol})");
}
