mod common;

use common::{assert_close, random_symmetric, rng, set_partitions, tickers};
use corrnet::correlation::{CorrelationMatrix, MatrixKind};
use corrnet::domains::{
    build_domain_graph, domain_size_histogram, exact_domains, extract_domains, reorder_for_display,
    same_sign_strength, write_domains, SignDomainSet, Sign,
};
use corrnet::matrix::SquareMatrix;
use proptest::prelude::*;
use rand::Rng;

fn sector(n: usize, f: impl FnMut(usize, usize) -> f64) -> CorrelationMatrix {
    CorrelationMatrix::new(tickers(n), SquareMatrix::from_fn(n, f), MatrixKind::SectorMode).unwrap()
}

fn covers_once(ds: &SignDomainSet, n: usize) -> bool {
    let mut seen = vec![0; n];
    ds.domains.iter().flatten().chain(&ds.unassigned).for_each(|&i| seen[i] += 1);
    seen.iter().all(|&k| k == 1)
}

/// Fewest same-sign cliques covering the stocks with a same-sign partner,
/// ties broken by the largest internal |C|; by enumerating set partitions.
fn brute_force(c: &CorrelationMatrix, sign: Sign) -> (usize, f64) {
    let strength = same_sign_strength(c, sign);
    let active: Vec<usize> = (0..c.n()).filter(|&i| strength[i] > 0.0).collect();
    let mut best = (usize::MAX, f64::NEG_INFINITY);
    for labels in set_partitions(active.len()) {
        let k = labels.iter().max().map_or(0, |m| m + 1);
        let mut ok = true;
        let mut w = 0.0;
        for a in 0..active.len() {
            for b in a + 1..active.len() {
                if labels[a] == labels[b] {
                    let x = c.get(active[a], active[b]);
                    ok &= sign.matches(x);
                    w += x.abs();
                }
            }
        }
        if ok && (k < best.0 || (k == best.0 && w > best.1)) {
            best = (k, w);
        }
    }
    if active.is_empty() {
        best = (0, 0.0);
    }
    best
}

fn internal_weight(c: &CorrelationMatrix, ds: &SignDomainSet) -> f64 {
    ds.domains
        .iter()
        .map(|d| {
            let mut w = 0.0;
            for (a, &i) in d.iter().enumerate() {
                for &j in &d[a + 1..] {
                    w += c.get(i, j).abs();
                }
            }
            w
        })
        .sum()
}

#[test]
fn exact_search_matches_enumeration() {
    let mut r = rng(77);
    for _ in 0..60 {
        let n = r.random_range(1..=8);
        let c = random_symmetric(n, MatrixKind::SectorMode, &mut r);
        for sign in [Sign::Positive, Sign::Negative] {
            let e = exact_domains(&c, sign).unwrap();
            assert!(e.satisfies_sign(&c));
            assert!(covers_once(&e, n));
            let (k, w) = brute_force(&c, sign);
            assert_eq!(e.domains.len(), k);
            assert_close(internal_weight(&c, &e), w, 1e-12, "internal weight");
        }
    }
}

#[test]
fn all_positive_matrix_is_one_domain() {
    let c = sector(7, |i, j| if i == j { 1.0 } else { 0.1 + 0.01 * (i + j) as f64 });
    let ds = extract_domains(&c, Sign::Positive);
    assert_eq!(ds.domains, vec![(0..7).collect::<Vec<_>>()]);
    let neg = extract_domains(&c, Sign::Negative);
    assert!(neg.domains.is_empty());
    assert_eq!(neg.unassigned.len(), 7);
}

#[test]
fn two_positive_blocks_are_found() {
    let block = |i: usize| usize::from(i >= 4);
    let c = sector(9, |i, j| {
        if i == j {
            1.0
        } else if block(i) == block(j) {
            0.3 + 0.01 * ((i * j) % 5) as f64
        } else {
            -0.2
        }
    });
    let ds = extract_domains(&c, Sign::Positive);
    assert_eq!(ds.domains, vec![(4..9).collect::<Vec<_>>(), (0..4).collect::<Vec<_>>()]);
}

#[test]
fn bipartite_positive_pattern_has_no_positive_triangle() {
    let c = sector(10, |i, j| if i == j { 1.0 } else if (i + j) % 2 == 1 { 0.5 } else { -0.5 });
    let ds = extract_domains(&c, Sign::Positive);
    assert!(ds.satisfies_sign(&c));
    assert!(ds.domains.iter().all(|d| d.len() <= 2));
}

#[test]
fn rank_one_matrix_has_no_negative_triangle() {
    let mut r = rng(4);
    let v: Vec<f64> = (0..12).map(|_| r.random_range(-1.0..1.0)).collect();
    let c = sector(12, |i, j| v[i] * v[j]);
    let neg = extract_domains(&c, Sign::Negative);
    assert!(neg.domains.iter().all(|d| d.len() <= 2));
}

#[test]
fn zero_entries_block_both_signs() {
    let c = sector(3, |i, j| if i == j { 1.0 } else if i + j == 1 { 0.0 } else { 0.4 });
    let ds = extract_domains(&c, Sign::Positive);
    assert!(ds.domains.iter().all(|d| !(d.contains(&0) && d.contains(&1))));
}

#[test]
fn size_histogram_arithmetic() {
    let ds = SignDomainSet {
        sign: Sign::Positive,
        domains: vec![vec![0, 1, 2, 3], vec![4, 5, 6], vec![7, 8, 9]],
        unassigned: vec![],
    };
    let h = domain_size_histogram(&ds);
    assert_eq!((h.count, h.max), (3, 4));
    assert_close(h.mean, 10.0 / 3.0, 1e-15, "mean size");
    assert_eq!(h.frequencies, vec![(3, 2.0 / 3.0), (4, 1.0 / 3.0)]);
    let empty = SignDomainSet { sign: Sign::Negative, domains: vec![], unassigned: vec![0] };
    assert_eq!(domain_size_histogram(&empty).count, 0);
}

#[test]
fn domain_graph_links_the_strongly_coupled_pair() {
    let group = |i: usize| i / 3;
    let c = sector(9, |i, j| {
        let (a, b) = (group(i), group(j));
        if i == j {
            1.0
        } else if a == b {
            0.5
        } else if a + b == 1 {
            0.2
        } else {
            -0.1
        }
    });
    let ds = SignDomainSet { sign: Sign::Positive, domains: (0..3).map(|g| (3 * g..3 * g + 3).collect()).collect(), unassigned: vec![] };
    assert!(ds.satisfies_sign(&c));
    let g = build_domain_graph(&c, &ds).unwrap();
    let linked: Vec<(Vec<usize>, Vec<usize>)> =
        g.links.iter().map(|&(p, q)| (g.domains[p].clone(), g.domains[q].clone())).collect();
    assert_eq!(linked, vec![(vec![0, 1, 2], vec![3, 4, 5])]);

    let two = SignDomainSet { sign: Sign::Positive, domains: vec![vec![0, 1, 2], vec![3, 4, 5]], unassigned: vec![] };
    assert!(build_domain_graph(&c, &two).unwrap().links.is_empty());
    let one = SignDomainSet { sign: Sign::Positive, domains: vec![vec![0, 1, 2]], unassigned: vec![] };
    assert!(build_domain_graph(&c, &one).is_err());
    let flat = sector(9, |i, j| if i == j { 1.0 } else if group(i) == group(j) { 0.5 } else { 0.1 });
    assert!(build_domain_graph(&flat, &ds).unwrap().links.is_empty());
}

#[test]
fn domain_export_lists_every_stock() {
    let c = sector(5, |i, j| if i == j { 1.0 } else if (i < 2) == (j < 2) { 0.3 } else { -0.3 });
    let pos = extract_domains(&c, Sign::Positive);
    let neg = extract_domains(&c, Sign::Negative);
    let mut buf = Vec::new();
    write_domains(&c.tickers, &[&pos, &neg], &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().filter(|l| l.contains(",positive")).count(), 5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn greedy_domains_hold_the_sign_invariant(n in 1usize..30, seed in any::<u64>()) {
        let c = random_symmetric(n, MatrixKind::SectorMode, &mut rng(seed));
        for sign in [Sign::Positive, Sign::Negative] {
            let ds = extract_domains(&c, sign);
            prop_assert!(ds.satisfies_sign(&c));
            prop_assert!(covers_once(&ds, n));
            prop_assert!(ds.domains.windows(2).all(|w| w[0].len() >= w[1].len()));
        }
    }

    #[test]
    fn extraction_is_permutation_equivariant(n in 2usize..20, seed in any::<u64>()) {
        let c = random_symmetric(n, MatrixKind::SectorMode, &mut rng(seed));
        let ds = extract_domains(&c, Sign::Positive);
        let perm = reorder_for_display(&ds);
        let again = extract_domains(&c.permuted(&perm), Sign::Positive);
        let mut mapped: Vec<Vec<usize>> =
            again.domains.iter().map(|d| { let mut v: Vec<usize> = d.iter().map(|&k| perm[k]).collect(); v.sort(); v }).collect();
        let mut orig = ds.domains.clone();
        mapped.sort();
        orig.sort();
        prop_assert_eq!(mapped, orig);
    }

    #[test]
    fn domain_links_are_shift_invariant(shift in -0.3f64..0.3, seed in any::<u64>()) {
        let mut r = rng(seed);
        let group = |i: usize| i / 3;
        let base: Vec<f64> = (0..16).map(|_| r.random_range(0.0..0.3)).collect();
        let make = |s: f64| sector(12, |i, j| {
            if i == j { 1.0 } else if group(i) == group(j) { 0.6 } else { base[group(i) * 4 + group(j)].max(base[group(j) * 4 + group(i)]) + s }
        });
        let ds = SignDomainSet { sign: Sign::Positive, domains: (0..4).map(|g| (3 * g..3 * g + 3).collect()).collect(), unassigned: vec![] };
        let a = build_domain_graph(&make(0.0), &ds).unwrap();
        let b = build_domain_graph(&make(shift), &ds).unwrap();
        prop_assert_eq!(a.links, b.links);
    }
}
