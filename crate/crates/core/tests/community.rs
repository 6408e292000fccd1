mod common;

use common::{assert_close, canonical_labels, graph_from_edges, rng, set_partitions, tickers};
use corrnet::community::{
    adjusted_rand_index, betweenness, cluster_pair_candidates, community_graph, detect_cluster_pairs,
    detect_communities, entropy_rate, map_equation, rand_index, read_partition, write_partition, Partition,
};
use corrnet::correlation::{correlation_matrix, CorrelationMatrix, MatrixKind};
use corrnet::filtergraph::{build_pmfg, FilteredGraph};
use corrnet::matrix::SquareMatrix;
use corrnet::synth::{generate, SynthSpec};
use corrnet::timeseries::prepare_returns;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn entropy(ps: &[f64]) -> f64 {
    let total: f64 = ps.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    ps.iter().filter(|&&p| p > 0.0).map(|&p| -(p / total) * (p / total).log2()).sum()
}

/// Two-level map equation written as weighted codebook entropies:
/// `q H(Q) + sum_m (q_m + p_m) H(P_m)`.
fn oracle_codelength(n: usize, edges: &[(usize, usize, f64)], labels: &[usize]) -> f64 {
    let mut strength = vec![0.0; n];
    let mut total = 0.0;
    for &(i, j, w) in edges {
        strength[i] += w.abs();
        strength[j] += w.abs();
        total += 2.0 * w.abs();
    }
    let k = labels.iter().max().unwrap() + 1;
    let mut exit = vec![0.0; k];
    for &(i, j, w) in edges {
        if labels[i] != labels[j] {
            exit[labels[i]] += w.abs() / total;
            exit[labels[j]] += w.abs() / total;
        }
    }
    let q: f64 = exit.iter().sum();
    let mut l = q * entropy(&exit);
    for m in 0..k {
        let mut book = vec![exit[m]];
        book.extend((0..n).filter(|&a| labels[a] == m).map(|a| strength[a] / total));
        let weight: f64 = book.iter().sum();
        l += weight * entropy(&book);
    }
    l
}

fn two_cliques(bridge: (usize, usize), perm: &[usize]) -> Vec<(usize, usize, f64)> {
    let mut edges = Vec::new();
    for block in [0usize, 4] {
        for a in 0..4 {
            for b in a + 1..4 {
                edges.push((perm[block + a], perm[block + b], 1.0));
            }
        }
    }
    edges.push((perm[bridge.0], perm[4 + bridge.1], 1.0));
    edges
}

fn exhaustive_minimum(n: usize, edges: &[(usize, usize, f64)]) -> (f64, Vec<usize>) {
    let mut best = (f64::INFINITY, Vec::new());
    for labels in set_partitions(n) {
        let l = oracle_codelength(n, edges, &labels);
        if l < best.0 - 1e-12 {
            best = (l, labels);
        }
    }
    best
}

#[test]
fn library_codelength_matches_oracle_on_every_partition() {
    let mut r = rng(3);
    let edges: Vec<(usize, usize, f64)> = (0..8)
        .flat_map(|i| (i + 1..8).map(move |j| (i, j)))
        .filter(|_| r.random_bool(0.6))
        .chain((0..7).map(|i| (i, i + 1)))
        .map(|(i, j)| (i, j, 0.1 + (i * 7 + j * 3) as f64 % 5.0))
        .collect();
    let g = graph_from_edges(8, &edges);
    for labels in set_partitions(8) {
        let p = Partition::from_assignment(&labels, "test");
        assert_close(map_equation(&g, &p).unwrap(), oracle_codelength(8, &edges, &labels), 1e-12, "codelength");
    }
}

#[test]
fn two_cliques_with_a_bridge_match_exhaustive_search() {
    let mut r = rng(11);
    let identity: Vec<usize> = (0..8).collect();
    let mut perms = vec![identity];
    for _ in 0..3 {
        let mut p: Vec<usize> = (0..8).collect();
        p.shuffle(&mut r);
        perms.push(p);
    }
    for perm in &perms {
        for a in 0..4 {
            for b in 0..4 {
                let edges = two_cliques((a, b), perm);
                let g = graph_from_edges(8, &edges);
                let (best, labels) = exhaustive_minimum(8, &edges);
                let found = detect_communities(&g, 42).unwrap();
                let got = found.codelength.unwrap();
                assert_close(got, best, 1e-9, "optimum codelength");
                assert_eq!(canonical_labels(&found.assignment()), canonical_labels(&labels));
                let mut cliques = vec![0; 8];
                for k in 4..8 {
                    cliques[perm[k]] = 1;
                }
                assert_eq!(canonical_labels(&found.assignment()), canonical_labels(&cliques));
            }
        }
    }
}

#[test]
fn uniform_complete_graph_is_one_community() {
    let edges: Vec<(usize, usize, f64)> = (0..6).flat_map(|i| (i + 1..6).map(move |j| (i, j, 1.0))).collect();
    let g = graph_from_edges(6, &edges);
    let p = detect_communities(&g, 42).unwrap();
    assert_eq!(p.groups.len(), 1);
    assert_close(p.codelength.unwrap(), 6f64.log2(), 1e-12, "all-in-one codelength");
}

#[test]
fn planted_sectors_are_recovered() {
    let m = generate(&SynthSpec::default()).unwrap();
    let (r, _) = prepare_returns(&m.panel, 1).unwrap();
    let c = correlation_matrix(&r).unwrap();
    let g = build_pmfg(&c).unwrap();
    let p = detect_communities(&g, 42).unwrap();
    let ari = adjusted_rand_index(&p.assignment(), &m.labels);
    assert!(ari >= 0.9, "ARI {ari}");
}

#[test]
fn same_seed_same_partition() {
    let mut r = rng(2);
    let c = common::random_symmetric(30, MatrixKind::Full, &mut r);
    let g = build_pmfg(&c).unwrap();
    assert_eq!(detect_communities(&g, 9).unwrap(), detect_communities(&g, 9).unwrap());
}

fn block_sector_matrix(sizes: &[usize], signs: &[Vec<f64>], noise: f64, seed: u64) -> CorrelationMatrix {
    let n: usize = sizes.iter().sum();
    let mut block = Vec::new();
    for (b, &s) in sizes.iter().enumerate() {
        block.extend(std::iter::repeat_n(b, s));
    }
    let mut r = rng(seed);
    let mut m = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let v = if i == j { 0.5 } else { 0.2 * signs[block[i]][block[j]] + noise * r.random_range(-1.0..1.0) };
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    CorrelationMatrix::new(tickers(n), m, MatrixKind::SectorMode).unwrap()
}

#[test]
fn anti_correlated_blocks_form_a_cluster_pair() {
    let signs = vec![vec![1.0, -1.0, 0.0], vec![-1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
    let c = block_sector_matrix(&[6, 5, 7], &signs, 0.02, 1);
    let p = Partition::from_groups(vec![(0..11).collect(), (11..18).collect()], 18, "test").unwrap();
    let pairs = detect_cluster_pairs(&p, &c, 3).unwrap();
    assert_eq!(pairs.len(), 1);
    let mut sides = [pairs[0].side_a.clone(), pairs[0].side_b.clone()];
    sides.sort();
    assert_eq!(sides, [(0..6).collect::<Vec<_>>(), (6..11).collect::<Vec<_>>()]);
    assert!(pairs[0].inter_mean < 0.0);
    // size gate
    assert!(detect_cluster_pairs(&p, &c, 6).unwrap().is_empty());
}

#[test]
fn cluster_pairs_need_the_signed_matrix() {
    let signs = vec![vec![1.0]];
    let c = block_sector_matrix(&[6], &signs, 0.0, 1);
    let abs = corrnet::rmt::abs_matrix(&c);
    let p = Partition::from_assignment(&[0; 6], "test");
    assert!(detect_cluster_pairs(&p, &abs, 3).is_err());
    assert!(detect_cluster_pairs(&p, &c, 3).unwrap().is_empty());
}

#[test]
fn betweenness_on_small_graphs() {
    // path 0-1-2-3: inner nodes lie on 2 shortest paths each
    assert_eq!(betweenness(4, &[(0, 1), (1, 2), (2, 3)]), vec![0.0, 2.0, 2.0, 0.0]);
    // star centred on 0
    assert_eq!(betweenness(4, &[(0, 1), (0, 2), (0, 3)]), vec![3.0, 0.0, 0.0, 0.0]);
    // 4-cycle: each node carries half of one pair
    assert_eq!(betweenness(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]), vec![0.5; 4]);
}

#[test]
fn partition_file_round_trips() {
    let t = tickers(6);
    let p = Partition::from_assignment(&[0, 1, 0, 2, 1, 0], "test");
    let mut buf = Vec::new();
    write_partition(&t, &p, &[], &mut buf).unwrap();
    let back = read_partition(&t, std::str::from_utf8(&buf).unwrap()).unwrap();
    assert_eq!(back.groups, p.groups);
}

#[test]
fn community_graph_counts_crossing_edges() {
    let edges = two_cliques((0, 0), &(0..8).collect::<Vec<_>>());
    let g = graph_from_edges(8, &edges);
    let p = Partition::from_assignment(&[0, 0, 0, 0, 1, 1, 1, 1], "test");
    let cg = community_graph(&g, &p).unwrap();
    assert_eq!(cg.sizes, vec![4, 4]);
    assert_eq!(cg.linked_pairs(1), vec![(0, 1)]);
    assert!(cg.linked_pairs(2).is_empty());
}

fn pair_counts(a: &[usize], b: &[usize]) -> (f64, f64) {
    let n = a.len();
    let mut agree = 0.0;
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            total += 1.0;
            if (a[i] == a[j]) == (b[i] == b[j]) {
                agree += 1.0;
            }
        }
    }
    (agree, total)
}

fn random_graph(n: usize, seed: u64) -> (FilteredGraph, Vec<(usize, usize, f64)>) {
    let mut r = rng(seed);
    let mut edges: Vec<(usize, usize, f64)> = (1..n).map(|i| (r.random_range(0..i), i, r.random_range(0.05..1.0))).collect();
    for i in 0..n {
        for j in i + 1..n {
            if r.random_bool(0.3) && !edges.iter().any(|e| (e.0, e.1) == (i, j)) {
                edges.push((i, j, r.random_range(-1.0..1.0)));
            }
        }
    }
    (graph_from_edges(n, &edges), edges)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn codelength_never_exceeds_trivial_partitions(n in 2usize..30, seed in any::<u64>()) {
        let (g, edges) = random_graph(n, seed);
        let p = detect_communities(&g, seed).unwrap();
        let singleton = oracle_codelength(n, &edges, &(0..n).collect::<Vec<_>>());
        let all = oracle_codelength(n, &edges, &vec![0; n]);
        let got = p.codelength.unwrap();
        prop_assert!(got <= singleton.min(all) + 1e-9);
        prop_assert!((got - oracle_codelength(n, &edges, &p.assignment())).abs() < 1e-9);
        prop_assert!(got >= entropy_rate(&g).unwrap() - 1e-9);
    }

    #[test]
    fn rand_indices_match_pair_counting(labels in proptest::collection::vec((0usize..4, 0usize..3), 2..40)) {
        let (a, b): (Vec<usize>, Vec<usize>) = labels.into_iter().unzip();
        let (agree, total) = pair_counts(&a, &b);
        prop_assert!((rand_index(&a, &b) - agree / total).abs() < 1e-12);
        prop_assert!((adjusted_rand_index(&a, &a) - 1.0).abs() < 1e-12);
        let renamed: Vec<usize> = a.iter().map(|x| 10 - x).collect();
        prop_assert!((adjusted_rand_index(&a, &renamed) - 1.0).abs() < 1e-12);
        prop_assert!(adjusted_rand_index(&a, &b) <= 1.0 + 1e-12);
    }

    #[test]
    fn pair_gate_only_filters(seed in any::<u64>()) {
        let signs = vec![vec![1.0, -0.5], vec![-0.5, 1.0]];
        let c = block_sector_matrix(&[5, 5], &signs, 0.3, seed);
        let p = Partition::from_assignment(&[0; 10], "test");
        let all = cluster_pair_candidates(&p, &c, 3).unwrap();
        let kept = detect_cluster_pairs(&p, &c, 3).unwrap();
        let expected: Vec<_> = all.into_iter().filter(|x| x.inter_mean < 0.0).collect();
        prop_assert_eq!(kept, expected);
    }
}
