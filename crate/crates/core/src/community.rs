//! Community extraction by two-level map-equation minimization, cluster
//! pairs inside sector-mode communities, and partition agreement scores.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::correlation::{CorrelationMatrix, MatrixKind};
use crate::eigen::symmetric_eigen;
use crate::error::{Error, Result};
use crate::filtergraph::FilteredGraph;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_MIN_SIDE: usize = 3;
const MOVE_TOL: f64 = 1e-12;
const MAX_OUTER_ROUNDS: usize = 20;

/// Disjoint groups of node indices covering `0..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub groups: Vec<Vec<usize>>,
    pub labels: Option<Vec<String>>,
    /// Map-equation value in bits, when computed against a graph.
    pub codelength: Option<f64>,
    pub source: String,
}

impl Partition {
    /// Builds a partition from per-node module labels. Groups are sorted
    /// internally and ordered by descending size, then smallest member.
    pub fn from_assignment(assignment: &[usize], source: impl Into<String>) -> Self {
        let mut by_label: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (node, &m) in assignment.iter().enumerate() {
            by_label.entry(m).or_default().push(node);
        }
        let mut groups: Vec<Vec<usize>> = by_label.into_values().collect();
        groups.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
        Partition { groups, labels: None, codelength: None, source: source.into() }
    }

    /// Builds from explicit groups, checking that they partition `0..n`.
    pub fn from_groups(groups: Vec<Vec<usize>>, n: usize, source: impl Into<String>) -> Result<Self> {
        let p = Partition { groups, labels: None, codelength: None, source: source.into() };
        p.validate(n)?;
        Ok(p)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for g in &self.groups {
            if g.is_empty() {
                return Err(Error::invalid("partition has an empty group"));
            }
            for &v in g {
                if v >= n {
                    return Err(Error::invalid(format!("partition member {v} out of range for {n} nodes")));
                }
                if std::mem::replace(&mut seen[v], true) {
                    return Err(Error::invalid(format!("node {v} appears in more than one group")));
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::invalid(format!("node {missing} is not covered by the partition")));
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.groups.len() {
                return Err(Error::invalid("partition label count differs from group count"));
            }
        }
        Ok(())
    }

    pub fn n_nodes(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    /// Group index of every node.
    pub fn assignment(&self) -> Vec<usize> {
        let mut a = vec![0; self.n_nodes()];
        for (k, g) in self.groups.iter().enumerate() {
            for &v in g {
                a[v] = k;
            }
        }
        a
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }
}

fn plogp(x: f64) -> f64 {
    if x > 0.0 {
        x * x.log2()
    } else {
        0.0
    }
}

/// Per-node visit rates `|strength| / total` and per-edge one-direction
/// flows `|w| / (2 W)`.
struct Flow {
    node: Vec<f64>,
    adj: Vec<Vec<(usize, f64)>>,
}

fn flow_of(graph: &FilteredGraph) -> Result<Flow> {
    if !graph.is_connected() {
        return Err(Error::Disconnected);
    }
    let n = graph.n();
    let total: f64 = graph.edges.iter().map(|e| e.weight.abs()).sum();
    let mut adj = vec![Vec::new(); n];
    let mut node = vec![0.0; n];
    if n <= 1 {
        return Ok(Flow { node: vec![1.0; n], adj });
    }
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::invalid("graph has no positive edge weight to carry flow"));
    }
    for e in &graph.edges {
        let f = e.weight.abs() / (2.0 * total);
        adj[e.i].push((e.j, f));
        adj[e.j].push((e.i, f));
        node[e.i] += f;
        node[e.j] += f;
    }
    Ok(Flow { node, adj })
}

fn codelength_of(flow: &Flow, assignment: &[usize]) -> f64 {
    let m = assignment.iter().copied().max().map_or(0, |x| x + 1);
    let mut exit = vec![0.0; m];
    let mut mass = vec![0.0; m];
    for (i, nb) in flow.adj.iter().enumerate() {
        mass[assignment[i]] += flow.node[i];
        for &(j, f) in nb {
            if assignment[j] != assignment[i] {
                exit[assignment[i]] += f;
            }
        }
    }
    let q: f64 = exit.iter().sum();
    let node_term: f64 = flow.node.iter().map(|&p| plogp(p)).sum();
    let exit_term: f64 = exit.iter().map(|&x| plogp(x)).sum();
    let total_term: f64 = exit.iter().zip(&mass).map(|(&x, &p)| plogp(x + p)).sum();
    plogp(q) - 2.0 * exit_term - node_term + total_term
}

/// Two-level map-equation codelength of `partition` on `graph`, in bits.
/// Flows use absolute edge weights.
pub fn map_equation(graph: &FilteredGraph, partition: &Partition) -> Result<f64> {
    partition.validate(graph.n())?;
    let flow = flow_of(graph)?;
    if graph.n() <= 1 {
        return Ok(0.0);
    }
    Ok(codelength_of(&flow, &partition.assignment()))
}

/// Entropy rate of the random walk, a lower bound on any codelength.
pub fn entropy_rate(graph: &FilteredGraph) -> Result<f64> {
    let flow = flow_of(graph)?;
    if graph.n() <= 1 {
        return Ok(0.0);
    }
    let mut h = 0.0;
    for (i, nb) in flow.adj.iter().enumerate() {
        let p = flow.node[i];
        if p > 0.0 {
            h -= nb.iter().map(|&(_, f)| p * plogp(f / p)).sum::<f64>();
        }
    }
    Ok(h)
}

/// Coarse-grained graph used during optimization.
struct Level {
    flow: Vec<f64>,
    out: Vec<f64>,
    adj: Vec<Vec<(usize, f64)>>,
}

struct ModuleState {
    exit: Vec<f64>,
    mass: Vec<f64>,
    sum_q: f64,
    sum_plogp_exit: f64,
    sum_plogp_total: f64,
}

impl ModuleState {
    fn new(level: &Level, module: &[usize]) -> Self {
        let n = level.flow.len();
        let mut exit = vec![0.0; n];
        let mut mass = vec![0.0; n];
        for a in 0..n {
            mass[module[a]] += level.flow[a];
            for &(b, f) in &level.adj[a] {
                if module[b] != module[a] {
                    exit[module[a]] += f;
                }
            }
        }
        let sum_q = exit.iter().sum();
        let sum_plogp_exit = exit.iter().map(|&x| plogp(x)).sum();
        let sum_plogp_total = exit.iter().zip(&mass).map(|(&x, &p)| plogp(x + p)).sum();
        ModuleState { exit, mass, sum_q, sum_plogp_exit, sum_plogp_total }
    }

    /// Codelength without the constant node-entropy term.
    fn partial(&self) -> f64 {
        plogp(self.sum_q) - 2.0 * self.sum_plogp_exit + self.sum_plogp_total
    }

    /// Change in codelength when a supernode with flow `fa`, outflow `oa`
    /// moves from `old` (linked to it by `w_old`) to `new` (by `w_new`).
    fn delta(&self, fa: f64, oa: f64, old: usize, w_old: f64, new: usize, w_new: f64) -> f64 {
        let (eo, en) = (self.exit[old], self.exit[new]);
        let (mo, mn) = (self.mass[old], self.mass[new]);
        let eo2 = eo - oa + 2.0 * w_old;
        let en2 = en + oa - 2.0 * w_new;
        let q2 = self.sum_q - eo - en + eo2 + en2;
        let exit2 = self.sum_plogp_exit - plogp(eo) - plogp(en) + plogp(eo2) + plogp(en2);
        let total2 = self.sum_plogp_total - plogp(eo + mo) - plogp(en + mn) + plogp(eo2 + mo - fa) + plogp(en2 + mn + fa);
        plogp(q2) - 2.0 * exit2 + total2 - self.partial()
    }

    fn apply(&mut self, fa: f64, oa: f64, old: usize, w_old: f64, new: usize, w_new: f64) {
        let (eo, en) = (self.exit[old], self.exit[new]);
        let (mo, mn) = (self.mass[old], self.mass[new]);
        let eo2 = eo - oa + 2.0 * w_old;
        let en2 = en + oa - 2.0 * w_new;
        self.sum_q += eo2 + en2 - eo - en;
        self.sum_plogp_exit += plogp(eo2) + plogp(en2) - plogp(eo) - plogp(en);
        self.sum_plogp_total +=
            plogp(eo2 + mo - fa) + plogp(en2 + mn + fa) - plogp(eo + mo) - plogp(en + mn);
        self.exit[old] = eo2;
        self.exit[new] = en2;
        self.mass[old] = mo - fa;
        self.mass[new] = mn + fa;
    }
}

/// Greedy local moves at one level. Returns whether anything moved.
fn move_nodes(level: &Level, module: &mut [usize], rng: &mut ChaCha8Rng) -> bool {
    let n = level.flow.len();
    let mut state = ModuleState::new(level, module);
    let mut order: Vec<usize> = (0..n).collect();
    let mut moved_any = false;
    let mut links: HashMap<usize, f64> = HashMap::new();
    for _sweep in 0..10_000 {
        order.shuffle(rng);
        let mut moved = false;
        for &a in &order {
            links.clear();
            for &(b, f) in &level.adj[a] {
                if b != a {
                    *links.entry(module[b]).or_insert(0.0) += f;
                }
            }
            let old = module[a];
            let w_old = links.get(&old).copied().unwrap_or(0.0);
            let mut candidates: Vec<(usize, f64)> = links.iter().map(|(&m, &w)| (m, w)).collect();
            candidates.sort_by_key(|&(m, _)| m);
            let mut best: Option<(usize, f64, f64)> = None;
            for (m, w) in candidates {
                if m == old {
                    continue;
                }
                let d = state.delta(level.flow[a], level.out[a], old, w_old, m, w);
                if d < -MOVE_TOL && best.is_none_or(|(_, _, bd)| d < bd) {
                    best = Some((m, w, d));
                }
            }
            if let Some((m, w, _)) = best {
                state.apply(level.flow[a], level.out[a], old, w_old, m, w);
                module[a] = m;
                moved = true;
                moved_any = true;
            }
        }
        if !moved {
            break;
        }
    }
    moved_any
}

fn relabel(module: &mut [usize]) -> usize {
    let mut map = HashMap::new();
    for m in module.iter_mut() {
        let next = map.len();
        *m = *map.entry(*m).or_insert(next);
    }
    map.len()
}

fn aggregate(level: &Level, module: &[usize], k: usize) -> Level {
    let mut flow = vec![0.0; k];
    let mut acc: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); k];
    for a in 0..level.flow.len() {
        flow[module[a]] += level.flow[a];
        for &(b, f) in &level.adj[a] {
            let (ma, mb) = (module[a], module[b]);
            if ma != mb {
                *acc[ma].entry(mb).or_insert(0.0) += f;
            }
        }
    }
    let adj: Vec<Vec<(usize, f64)>> = acc.into_iter().map(|m| m.into_iter().collect()).collect();
    let out = adj.iter().map(|nb| nb.iter().map(|&(_, f)| f).sum()).collect();
    Level { flow, out, adj }
}

/// Multi-level greedy optimization starting from `start`.
fn optimize(flow: &Flow, start: &[usize], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = flow.node.len();
    let base = Level {
        flow: flow.node.clone(),
        out: flow.adj.iter().map(|nb| nb.iter().map(|&(_, f)| f).sum()).collect(),
        adj: flow.adj.clone(),
    };
    // top-level membership of every original node
    let mut node_module: Vec<usize> = start.to_vec();
    let mut k = relabel(&mut node_module);
    let mut level = aggregate(&base, &node_module, k);
    // with a non-trivial start the original nodes get a chance to move first
    if k < n {
        let mut m = node_module.clone();
        if move_nodes(&base, &mut m, rng) {
            node_module = m;
            k = relabel(&mut node_module);
            level = aggregate(&base, &node_module, k);
        }
    } else {
        level = base;
    }
    loop {
        let mut module: Vec<usize> = (0..k).collect();
        if !move_nodes(&level, &mut module, rng) {
            break;
        }
        let k2 = relabel(&mut module);
        for m in node_module.iter_mut() {
            *m = module[*m];
        }
        level = aggregate(&level, &module, k2);
        if k2 == k {
            break;
        }
        k = k2;
    }
    node_module
}

/// Communities minimizing the two-level map equation. The node sweep order
/// is shuffled with `seed`.
pub fn detect_communities(graph: &FilteredGraph, seed: u64) -> Result<Partition> {
    let n = graph.n();
    let flow = flow_of(graph)?;
    let source = format!("{} communities (seed {seed})", graph.kind);
    if n <= 1 {
        let mut p = Partition::from_assignment(&vec![0; n], source);
        p.codelength = Some(0.0);
        return Ok(p);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Vec<usize> = (0..n).collect();
    let mut best_len = codelength_of(&flow, &best);
    for _ in 0..MAX_OUTER_ROUNDS {
        let cand = optimize(&flow, &best, &mut rng);
        let len = codelength_of(&flow, &cand);
        if len < best_len - MOVE_TOL {
            best = cand;
            best_len = len;
        } else {
            break;
        }
    }
    let one = vec![0; n];
    let one_len = codelength_of(&flow, &one);
    if one_len < best_len {
        best = one;
        best_len = one_len;
    }
    let mut p = Partition::from_assignment(&best, source);
    p.codelength = Some(best_len);
    Ok(p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterPair {
    /// Index into the partition's groups.
    pub community: usize,
    pub side_a: Vec<usize>,
    pub side_b: Vec<usize>,
    pub inter_mean: f64,
}

/// Mean of `C_ij` over `i ∈ a`, `j ∈ b`.
pub fn cross_mean(c: &CorrelationMatrix, a: &[usize], b: &[usize]) -> f64 {
    let mut s = 0.0;
    for &i in a {
        for &j in b {
            s += c.get(i, j);
        }
    }
    s / (a.len() * b.len()) as f64
}

/// Sign split of every community's dominant eigenvector, gated only by side
/// size. Components equal to zero go to `side_a`.
pub fn cluster_pair_candidates(partition: &Partition, c_sec: &CorrelationMatrix, min_size: usize) -> Result<Vec<ClusterPair>> {
    if c_sec.kind == MatrixKind::AbsSectorMode {
        return Err(Error::invalid("cluster pairs need the signed sector-mode matrix"));
    }
    partition.validate(c_sec.n())?;
    let min_size = min_size.max(1);
    let mut out = Vec::new();
    for (k, g) in partition.groups.iter().enumerate() {
        if g.len() < 2 * min_size {
            continue;
        }
        let sub = c_sec.values.submatrix(g);
        let eig = symmetric_eigen(&sub)?;
        let v = &eig.vectors[0];
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for (pos, &node) in g.iter().enumerate() {
            if v[pos] >= 0.0 {
                a.push(node);
            } else {
                b.push(node);
            }
        }
        if a.len() < min_size || b.len() < min_size {
            continue;
        }
        let inter_mean = cross_mean(c_sec, &a, &b);
        out.push(ClusterPair { community: k, side_a: a, side_b: b, inter_mean });
    }
    Ok(out)
}

/// Cluster pairs: candidates whose sides are negatively correlated on average.
pub fn detect_cluster_pairs(partition: &Partition, c_sec: &CorrelationMatrix, min_size: usize) -> Result<Vec<ClusterPair>> {
    Ok(cluster_pair_candidates(partition, c_sec, min_size)?
        .into_iter()
        .filter(|p| p.inter_mean < 0.0)
        .collect())
}

fn contingency(a: &[usize], b: &[usize]) -> (HashMap<(usize, usize), u64>, HashMap<usize, u64>, HashMap<usize, u64>) {
    let mut nij = HashMap::new();
    let mut ai = HashMap::new();
    let mut bj = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *nij.entry((x, y)).or_insert(0) += 1;
        *ai.entry(x).or_insert(0) += 1;
        *bj.entry(y).or_insert(0) += 1;
    }
    (nij, ai, bj)
}

fn choose2(x: u64) -> f64 {
    (x as f64) * (x as f64 - 1.0) / 2.0
}

/// Adjusted Rand index between two labelings of the same nodes. Two
/// identical labelings score 1 even when the chance correction degenerates.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings differ in length");
    let n = a.len() as u64;
    if n < 2 {
        return 1.0;
    }
    let (nij, ai, bj) = contingency(a, b);
    let index: f64 = nij.values().map(|&x| choose2(x)).sum();
    let sa: f64 = ai.values().map(|&x| choose2(x)).sum();
    let sb: f64 = bj.values().map(|&x| choose2(x)).sum();
    let expected = sa * sb / choose2(n);
    let max = 0.5 * (sa + sb);
    if (max - expected).abs() < 1e-15 {
        return if (index - expected).abs() < 1e-15 { 1.0 } else { 0.0 };
    }
    (index - expected) / (max - expected)
}

/// Fraction of node pairs on which two labelings agree about co-membership.
pub fn rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings differ in length");
    let n = a.len();
    if n < 2 {
        return 1.0;
    }
    let mut agree = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            if (a[i] == a[j]) == (b[i] == b[j]) {
                agree += 1;
            }
        }
    }
    agree as f64 / choose2(n as u64)
}

/// Community-level view of a filtered graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityGraph {
    pub sizes: Vec<usize>,
    /// `(a, b, edge count, summed weight)` with `a < b`, only for pairs joined
    /// by at least one edge.
    pub links: Vec<(usize, usize, usize, f64)>,
}

impl CommunityGraph {
    pub fn n(&self) -> usize {
        self.sizes.len()
    }

    /// Linked pairs whose edge count reaches `min_edges`.
    pub fn linked_pairs(&self, min_edges: usize) -> Vec<(usize, usize)> {
        self.links.iter().filter(|l| l.2 >= min_edges).map(|l| (l.0, l.1)).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut s = String::from("# community sizes\ncommunity,size\n");
        for (k, z) in self.sizes.iter().enumerate() {
            s.push_str(&format!("{k},{z}\n"));
        }
        s.push_str("# inter-community edges\ncommunity_a,community_b,edges,weight\n");
        for &(a, b, c, w) in &self.links {
            s.push_str(&format!("{a},{b},{c},{w:e}\n"));
        }
        out.write_all(s.as_bytes()).map_err(|e| Error::io("<community summary>", e))
    }
}

pub fn community_graph(graph: &FilteredGraph, partition: &Partition) -> Result<CommunityGraph> {
    partition.validate(graph.n())?;
    let assign = partition.assignment();
    let mut links: BTreeMap<(usize, usize), (usize, f64)> = BTreeMap::new();
    for e in &graph.edges {
        let (a, b) = (assign[e.i], assign[e.j]);
        if a != b {
            let entry = links.entry((a.min(b), a.max(b))).or_insert((0, 0.0));
            entry.0 += 1;
            entry.1 += e.weight;
        }
    }
    Ok(CommunityGraph {
        sizes: partition.sizes(),
        links: links.into_iter().map(|((a, b), (c, w))| (a, b, c, w)).collect(),
    })
}

/// Unweighted betweenness centrality (Brandes), each unordered pair once.
pub fn betweenness(n: usize, edges: &[(usize, usize)]) -> Vec<f64> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut cb = vec![0.0; n];
    for s in 0..n {
        let mut stack = Vec::new();
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut sigma = vec![0.0f64; n];
        let mut dist = vec![-1i64; n];
        sigma[s] = 1.0;
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in &adj[v] {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        let mut delta = vec![0.0; n];
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                cb[w] += delta[w];
            }
        }
    }
    cb.iter().map(|x| x / 2.0).collect()
}

/// Writes `ticker,community,side`; side is `a`/`b` for cluster-pair members
/// and empty otherwise.
pub fn write_partition<W: Write>(tickers: &[String], partition: &Partition, pairs: &[ClusterPair], mut out: W) -> Result<()> {
    partition.validate(tickers.len())?;
    let mut side = vec![""; tickers.len()];
    for p in pairs {
        p.side_a.iter().for_each(|&i| side[i] = "a");
        p.side_b.iter().for_each(|&i| side[i] = "b");
    }
    let assign = partition.assignment();
    let mut s = String::new();
    if let Some(l) = partition.codelength {
        s.push_str(&format!("# codelength_bits: {l}\n"));
    }
    s.push_str("ticker,community,side\n");
    for (i, t) in tickers.iter().enumerate() {
        s.push_str(&format!("{t},{},{}\n", assign[i], side[i]));
    }
    out.write_all(s.as_bytes()).map_err(|e| Error::io("<partition output>", e))
}

/// Reads a `ticker,community[,side]` file against a known ticker order.
pub fn read_partition(tickers: &[String], text: &str) -> Result<Partition> {
    let index: HashMap<&str, usize> = tickers.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let mut assign = vec![usize::MAX; tickers.len()];
    let mut header_seen = false;
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            header_seen = true;
            if line.starts_with("ticker") {
                continue;
            }
        }
        let mut parts = line.split(',');
        let t = parts.next().unwrap_or("");
        let c = parts.next().ok_or_else(|| Error::Parse { line: ln + 1, message: "missing community column".into() })?;
        let &i = index.get(t).ok_or_else(|| Error::Parse { line: ln + 1, message: format!("unknown ticker `{t}`") })?;
        assign[i] = c
            .trim()
            .parse()
            .map_err(|_| Error::Parse { line: ln + 1, message: format!("bad community id `{c}`") })?;
    }
    if let Some(i) = assign.iter().position(|&a| a == usize::MAX) {
        return Err(Error::invalid(format!("ticker {} missing from partition file", tickers[i])));
    }
    Ok(Partition::from_assignment(&assign, "file"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtergraph::{Edge, GraphKind};
    use crate::matrix::SquareMatrix;

    pub(crate) fn graph(n: usize, edges: &[(usize, usize, f64)]) -> FilteredGraph {
        FilteredGraph {
            nodes: (0..n).map(|i| format!("N{i}")).collect(),
            edges: edges.iter().enumerate().map(|(r, &(i, j, w))| Edge { i, j, weight: w, rank: r }).collect(),
            kind: GraphKind::Pmfg,
            genus: Some(0),
        }
    }

    fn entropy(p: &[f64]) -> f64 {
        -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.log2()).sum::<f64>()
    }

    #[test]
    fn one_module_gives_visit_entropy() {
        let g = graph(4, &[(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0), (0, 2, 0.5)]);
        let p = Partition::from_assignment(&[0, 0, 0, 0], "t");
        let total = 4.5;
        let s = [1.5 / (2.0 * total), 3.0 / 9.0, 3.5 / 9.0, 1.0 / 9.0];
        assert!((map_equation(&g, &p).unwrap() - entropy(&s)).abs() < 1e-14);
    }

    #[test]
    fn single_node_is_zero_bits() {
        let g = graph(1, &[]);
        let p = Partition::from_assignment(&[0], "t");
        assert_eq!(map_equation(&g, &p).unwrap(), 0.0);
    }

    #[test]
    fn two_triangles_closed_form() {
        let g = graph(6, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0), (2, 3, 1.0)]);
        let p = Partition::from_assignment(&[0, 0, 0, 1, 1, 1], "t");
        // 2W = 14; exits 1/14 each; module masses 7/14 each
        let q = 2.0 / 14.0;
        let qm = 1.0 / 14.0;
        let index = q * entropy(&[0.5, 0.5]);
        let pm = qm + 7.0 / 14.0;
        let within = pm * entropy(&[qm / pm, (2.0 / 14.0) / pm, (2.0 / 14.0) / pm, (3.0 / 14.0) / pm]);
        let want = index + 2.0 * within;
        assert!((map_equation(&g, &p).unwrap() - want).abs() < 1e-13);
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let g = graph(4, &[(0, 1, 1.0), (2, 3, 1.0)]);
        let p = Partition::from_assignment(&[0, 0, 1, 1], "t");
        assert!(matches!(map_equation(&g, &p), Err(Error::Disconnected)));
    }

    #[test]
    fn complete_graph_is_one_community() {
        let edges: Vec<_> = (0..6).flat_map(|i| (i + 1..6).map(move |j| (i, j, 1.0))).collect();
        let p = detect_communities(&graph(6, &edges), 42).unwrap();
        assert_eq!(p.groups.len(), 1);
    }

    #[test]
    fn two_cliques_split() {
        let mut edges = Vec::new();
        for base in [0, 4] {
            for i in 0..4 {
                for j in i + 1..4 {
                    edges.push((base + i, base + j, 1.0));
                }
            }
        }
        edges.push((3, 4, 1.0));
        let p = detect_communities(&graph(8, &edges), 7).unwrap();
        assert_eq!(p.groups, vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7]]);
        assert!(p.codelength.unwrap() >= entropy_rate(&graph(8, &edges)).unwrap());
    }

    #[test]
    fn agreement_indices() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[5, 5, 2, 2]), 1.0);
        assert_eq!(adjusted_rand_index(&[0, 0, 0], &[1, 1, 1]), 1.0);
        // hand-computed: contingency [[1,1],[0,2]]
        let ari = adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 1, 1]);
        let (index, sa, sb, total) = (1.0, 2.0, 3.0, 6.0);
        let exp = sa * sb / total;
        assert!((ari - (index - exp) / (0.5 * (sa + sb) - exp)).abs() < 1e-15);
        assert!((rand_index(&[0, 0, 1, 1], &[0, 1, 1, 1]) - 3.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn cluster_pair_of_anti_blocks() {
        let n = 8;
        let m = SquareMatrix::from_fn(n, |i, j| {
            if i == j {
                0.5
            } else if (i < 4) == (j < 4) {
                0.3
            } else {
                -0.2
            }
        });
        let c = CorrelationMatrix::new((0..n).map(|i| format!("T{i}")).collect(), m, MatrixKind::SectorMode).unwrap();
        let p = Partition::from_assignment(&vec![0; n], "t");
        let pairs = detect_cluster_pairs(&p, &c, 3).unwrap();
        assert_eq!(pairs.len(), 1);
        let mut sides = [pairs[0].side_a.clone(), pairs[0].side_b.clone()];
        sides.sort();
        assert_eq!(sides, [vec![0, 1, 2, 3], vec![4, 5, 6, 7]]);
        assert!((pairs[0].inter_mean + 0.2).abs() < 1e-12);
        // small communities never split
        assert!(detect_cluster_pairs(&p, &c, 5).unwrap().is_empty());
    }

    #[test]
    fn partition_round_trip() {
        let tickers: Vec<String> = ["A", "B", "C"].iter().map(|s| s.to_string()).collect();
        let p = Partition::from_assignment(&[1, 0, 1], "t");
        let mut buf = Vec::new();
        write_partition(&tickers, &p, &[], &mut buf).unwrap();
        let back = read_partition(&tickers, std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back.groups, p.groups);
    }

    #[test]
    fn betweenness_of_path() {
        let b = betweenness(3, &[(0, 1), (1, 2)]);
        assert_eq!(b, vec![0.0, 1.0, 0.0]);
    }
}
