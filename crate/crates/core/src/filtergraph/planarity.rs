//! Left-right planarity test (de Fraysseix–Rosenstiehl criterion in the
//! formulation of Brandes) with construction of a combinatorial embedding.
//!
//! [`is_planar`] answers the decision question. [`check_planarity`] also
//! returns a witness: a rotation system when the graph is planar, or a
//! Kuratowski subgraph when it is not.

use std::collections::{HashMap, HashSet};

type EdgeId = usize;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Interval {
    low: Option<EdgeId>,
    high: Option<EdgeId>,
}

impl Interval {
    fn edge(e: EdgeId) -> Self {
        Interval { low: Some(e), high: Some(e) }
    }

    fn is_empty(&self) -> bool {
        self.low.is_none() && self.high.is_none()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct ConflictPair {
    left: Interval,
    right: Interval,
}

impl ConflictPair {
    fn swap(&mut self) {
        std::mem::swap(&mut self.left, &mut self.right);
    }
}

struct LrState {
    n: usize,
    adj: Vec<Vec<usize>>,
    // oriented edges
    tail: Vec<usize>,
    head: Vec<usize>,
    edge_id: HashMap<(usize, usize), EdgeId>,
    out: Vec<Vec<EdgeId>>,

    height: Vec<Option<usize>>,
    parent_edge: Vec<Option<EdgeId>>,
    roots: Vec<usize>,
    lowpt: Vec<usize>,
    lowpt2: Vec<usize>,
    nesting_depth: Vec<i64>,

    ref_: Vec<Option<EdgeId>>,
    side: Vec<i64>,
    stack: Vec<ConflictPair>,
    stack_bottom: Vec<usize>,
    lowpt_edge: Vec<Option<EdgeId>>,
}

impl LrState {
    fn new(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        let m = edges.len();
        LrState {
            n,
            adj,
            tail: Vec::with_capacity(m),
            head: Vec::with_capacity(m),
            edge_id: HashMap::with_capacity(2 * m),
            out: vec![Vec::new(); n],
            height: vec![None; n],
            parent_edge: vec![None; n],
            roots: Vec::new(),
            lowpt: Vec::with_capacity(m),
            lowpt2: Vec::with_capacity(m),
            nesting_depth: Vec::with_capacity(m),
            ref_: vec![None; m],
            side: vec![1; m],
            stack: Vec::new(),
            stack_bottom: vec![0; m],
            lowpt_edge: vec![None; m],
        }
    }

    fn lowpt_of(&self, e: Option<EdgeId>) -> usize {
        self.lowpt[e.expect("interval endpoint")]
    }

    fn conflicting(&self, i: &Interval, b: EdgeId) -> bool {
        !i.is_empty() && self.lowpt_of(i.high) > self.lowpt[b]
    }

    fn lowest(&self, p: &ConflictPair) -> usize {
        if p.left.is_empty() {
            return self.lowpt_of(p.right.low);
        }
        if p.right.is_empty() {
            return self.lowpt_of(p.left.low);
        }
        self.lowpt_of(p.left.low).min(self.lowpt_of(p.right.low))
    }

    fn orient(&mut self) {
        for v in 0..self.n {
            if self.height[v].is_none() {
                self.height[v] = Some(0);
                self.roots.push(v);
                self.dfs_orientation(v);
            }
        }
    }

    fn dfs_orientation(&mut self, v: usize) {
        let e = self.parent_edge[v];
        let hv = self.height[v].unwrap();
        for k in 0..self.adj[v].len() {
            let w = self.adj[v][k];
            if self.edge_id.contains_key(&(v, w)) || self.edge_id.contains_key(&(w, v)) {
                continue;
            }
            let vw = self.tail.len();
            self.tail.push(v);
            self.head.push(w);
            self.edge_id.insert((v, w), vw);
            self.out[v].push(vw);
            self.lowpt.push(hv);
            self.lowpt2.push(hv);
            self.nesting_depth.push(0);
            match self.height[w] {
                None => {
                    self.parent_edge[w] = Some(vw);
                    self.height[w] = Some(hv + 1);
                    self.dfs_orientation(w);
                }
                Some(hw) => self.lowpt[vw] = hw,
            }
            self.nesting_depth[vw] = 2 * self.lowpt[vw] as i64;
            if self.lowpt2[vw] < hv {
                // chordal edge
                self.nesting_depth[vw] += 1;
            }
            if let Some(e) = e {
                if self.lowpt[vw] < self.lowpt[e] {
                    self.lowpt2[e] = self.lowpt[e].min(self.lowpt2[vw]);
                    self.lowpt[e] = self.lowpt[vw];
                } else if self.lowpt[vw] > self.lowpt[e] {
                    self.lowpt2[e] = self.lowpt2[e].min(self.lowpt[vw]);
                } else {
                    self.lowpt2[e] = self.lowpt2[e].min(self.lowpt2[vw]);
                }
            }
        }
    }

    fn sort_by_nesting(&mut self) {
        for v in 0..self.n {
            let mut o = std::mem::take(&mut self.out[v]);
            o.sort_by_key(|&e| (self.nesting_depth[e], e));
            self.out[v] = o;
        }
    }

    fn dfs_testing(&mut self, v: usize) -> bool {
        let e = self.parent_edge[v];
        let hv = self.height[v].unwrap();
        for k in 0..self.out[v].len() {
            let ei = self.out[v][k];
            let w = self.head[ei];
            self.stack_bottom[ei] = self.stack.len();
            if self.parent_edge[w] == Some(ei) {
                if !self.dfs_testing(w) {
                    return false;
                }
            } else {
                self.lowpt_edge[ei] = Some(ei);
                self.stack.push(ConflictPair { left: Interval::default(), right: Interval::edge(ei) });
            }
            if self.lowpt[ei] < hv {
                if k == 0 {
                    let pe = e.expect("first edge with a return edge has a parent");
                    self.lowpt_edge[pe] = self.lowpt_edge[ei];
                } else if !self.add_constraints(ei, e.expect("non-root")) {
                    return false;
                }
            }
        }
        if let Some(e) = e {
            self.remove_back_edges(e);
        }
        true
    }

    fn add_constraints(&mut self, ei: EdgeId, e: EdgeId) -> bool {
        let mut p = ConflictPair::default();
        loop {
            let mut q = self.stack.pop().expect("conflict stack underflow");
            if !q.left.is_empty() {
                q.swap();
            }
            if !q.left.is_empty() {
                return false;
            }
            if self.lowpt_of(q.right.low) > self.lowpt[e] {
                if p.right.is_empty() {
                    p.right = q.right;
                } else {
                    self.ref_[p.right.low.unwrap()] = q.right.high;
                }
                p.right.low = q.right.low;
            } else {
                self.ref_[q.right.low.unwrap()] = self.lowpt_edge[e];
            }
            if self.stack.len() == self.stack_bottom[ei] {
                break;
            }
        }
        while let Some(top) = self.stack.last() {
            if !(self.conflicting(&top.left, ei) || self.conflicting(&top.right, ei)) {
                break;
            }
            let mut q = self.stack.pop().unwrap();
            if self.conflicting(&q.right, ei) {
                q.swap();
            }
            if self.conflicting(&q.right, ei) {
                return false;
            }
            if let Some(l) = p.right.low {
                self.ref_[l] = q.right.high;
            }
            if q.right.low.is_some() {
                p.right.low = q.right.low;
            }
            if p.left.is_empty() {
                p.left = q.left;
            } else {
                self.ref_[p.left.low.unwrap()] = q.left.high;
            }
            p.left.low = q.left.low;
        }
        if !(p.left.is_empty() && p.right.is_empty()) {
            self.stack.push(p);
        }
        true
    }

    fn remove_back_edges(&mut self, e: EdgeId) {
        let u = self.tail[e];
        let hu = self.height[u].unwrap();
        while let Some(top) = self.stack.last() {
            if self.lowest(top) != hu {
                break;
            }
            let p = self.stack.pop().unwrap();
            if let Some(l) = p.left.low {
                self.side[l] = -1;
            }
        }
        if let Some(mut p) = self.stack.pop() {
            while let Some(h) = p.left.high {
                if self.head[h] != u {
                    break;
                }
                p.left.high = self.ref_[h];
            }
            if p.left.high.is_none() {
                if let Some(l) = p.left.low {
                    self.ref_[l] = p.right.low;
                    self.side[l] = -1;
                    p.left.low = None;
                }
            }
            while let Some(h) = p.right.high {
                if self.head[h] != u {
                    break;
                }
                p.right.high = self.ref_[h];
            }
            if p.right.high.is_none() {
                if let Some(l) = p.right.low {
                    self.ref_[l] = p.left.low;
                    self.side[l] = -1;
                    p.right.low = None;
                }
            }
            self.stack.push(p);
        }
        if self.lowpt[e] < hu {
            let top = self.stack.last().expect("return edge implies a pending conflict pair");
            let (hl, hr) = (top.left.high, top.right.high);
            self.ref_[e] = match (hl, hr) {
                (Some(l), None) => Some(l),
                (Some(l), Some(r)) if self.lowpt[l] > self.lowpt[r] => Some(l),
                _ => hr,
            };
        }
    }

    /// Resolves relative sides along `ref` chains to absolute ones.
    fn sign(&mut self, e: EdgeId) -> i64 {
        let mut chain = vec![e];
        let mut cur = e;
        while let Some(r) = self.ref_[cur] {
            chain.push(r);
            cur = r;
        }
        // the last element has no ref: its side is absolute
        for k in (0..chain.len() - 1).rev() {
            let x = chain[k];
            let next = chain[k + 1];
            self.side[x] *= self.side[next];
            self.ref_[x] = None;
        }
        self.side[e]
    }

    fn test(&mut self) -> bool {
        self.orient();
        self.sort_by_nesting();
        let roots = self.roots.clone();
        for r in roots {
            if !self.dfs_testing(r) {
                return false;
            }
        }
        true
    }

    fn embed(mut self) -> Embedding {
        for e in 0..self.tail.len() {
            let s = self.sign(e);
            self.nesting_depth[e] *= s;
        }
        self.sort_by_nesting();
        let mut emb = Embedding::new(self.n);
        for v in 0..self.n {
            let mut prev = None;
            for &e in &self.out[v] {
                let w = self.head[e];
                emb.add_half_edge_cw(v, w, prev);
                prev = Some(w);
            }
        }
        let mut left_ref = vec![usize::MAX; self.n];
        let mut right_ref = vec![usize::MAX; self.n];
        let roots = self.roots.clone();
        for r in roots {
            self.dfs_embedding(r, &mut emb, &mut left_ref, &mut right_ref);
        }
        emb
    }

    fn dfs_embedding(&self, v: usize, emb: &mut Embedding, left_ref: &mut [usize], right_ref: &mut [usize]) {
        for &ei in &self.out[v] {
            let w = self.head[ei];
            if self.parent_edge[w] == Some(ei) {
                emb.add_half_edge_first(w, v);
                left_ref[v] = w;
                right_ref[v] = w;
                self.dfs_embedding(w, emb, left_ref, right_ref);
            } else if self.side[ei] == 1 {
                emb.add_half_edge_cw(w, v, Some(right_ref[w]));
            } else {
                emb.add_half_edge_ccw(w, v, Some(left_ref[w]));
                left_ref[w] = v;
            }
        }
    }
}

/// A rotation system: the clockwise cyclic order of neighbours around each
/// vertex.
#[derive(Debug, Clone, Default)]
pub struct Embedding {
    cw: HashMap<(usize, usize), usize>,
    ccw: HashMap<(usize, usize), usize>,
    first: Vec<Option<usize>>,
}

impl Embedding {
    fn new(n: usize) -> Self {
        Embedding { cw: HashMap::new(), ccw: HashMap::new(), first: vec![None; n] }
    }

    fn add_half_edge_cw(&mut self, s: usize, e: usize, reference: Option<usize>) {
        match reference {
            None => {
                self.cw.insert((s, e), e);
                self.ccw.insert((s, e), e);
                self.first[s] = Some(e);
            }
            Some(r) => {
                let cw_ref = self.cw[&(s, r)];
                self.cw.insert((s, r), e);
                self.cw.insert((s, e), cw_ref);
                self.ccw.insert((s, cw_ref), e);
                self.ccw.insert((s, e), r);
            }
        }
    }

    fn add_half_edge_ccw(&mut self, s: usize, e: usize, reference: Option<usize>) {
        match reference {
            None => self.add_half_edge_cw(s, e, None),
            Some(r) => {
                let ccw_ref = self.ccw[&(s, r)];
                self.add_half_edge_cw(s, e, Some(ccw_ref));
                if self.first[s] == Some(r) {
                    self.first[s] = Some(e);
                }
            }
        }
    }

    fn add_half_edge_first(&mut self, s: usize, e: usize) {
        let r = self.first[s];
        self.add_half_edge_ccw(s, e, r);
        self.first[s] = Some(e);
    }

    pub fn n_vertices(&self) -> usize {
        self.first.len()
    }

    /// Neighbours of `v` in clockwise order.
    pub fn rotation(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        if let Some(start) = self.first[v] {
            let mut cur = start;
            loop {
                out.push(cur);
                cur = self.cw[&(v, cur)];
                if cur == start {
                    break;
                }
            }
        }
        out
    }

    /// Number of faces traced by following, from half-edge `(v, w)`, the
    /// half-edge `(w, ccw_w(v))`. Isolated vertices contribute one face each.
    pub fn count_faces(&self) -> usize {
        let mut seen: HashSet<(usize, usize)> = HashSet::new();
        let mut faces = 0;
        for v in 0..self.first.len() {
            let rot = self.rotation(v);
            if rot.is_empty() {
                faces += 1;
                continue;
            }
            for w in rot {
                if seen.contains(&(v, w)) {
                    continue;
                }
                faces += 1;
                let (mut a, mut b) = (v, w);
                while seen.insert((a, b)) {
                    let next = self.ccw[&(b, a)];
                    a = b;
                    b = next;
                }
            }
        }
        faces
    }
}

/// Outcome of [`check_planarity`].
#[derive(Debug, Clone)]
pub enum Planarity {
    Planar(Embedding),
    NonPlanar(Obstruction),
}

impl Planarity {
    pub fn is_planar(&self) -> bool {
        matches!(self, Planarity::Planar(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KuratowskiKind {
    K5,
    K33,
}

/// A minimal non-planar subgraph: a subdivision of K5 or K3,3.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Obstruction {
    pub edges: Vec<(usize, usize)>,
    pub kind: KuratowskiKind,
}

fn simple_edges(n: usize, edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(edges.len());
    for &(u, v) in edges {
        assert!(u < n && v < n, "edge ({u}, {v}) out of range for {n} vertices");
        if u == v {
            continue;
        }
        let key = (u.min(v), u.max(v));
        if seen.insert(key) {
            out.push(key);
        }
    }
    out
}

/// Exact planarity decision. Self-loops and repeated edges are ignored.
pub fn is_planar(n: usize, edges: &[(usize, usize)]) -> bool {
    let edges = simple_edges(n, edges);
    if n > 2 && edges.len() > 3 * n - 6 {
        return false;
    }
    LrState::new(n, &edges).test()
}

/// Planarity decision with a witness.
pub fn check_planarity(n: usize, edges: &[(usize, usize)]) -> Planarity {
    let edges = simple_edges(n, edges);
    let planar = !(n > 2 && edges.len() > 3 * n - 6) && {
        let mut st = LrState::new(n, &edges);
        if st.test() {
            return Planarity::Planar(st.embed());
        }
        false
    };
    debug_assert!(!planar);
    Planarity::NonPlanar(kuratowski_subgraph(n, &edges))
}

/// Deletes edges one at a time while the remainder stays non-planar; what is
/// left is edge-minimal non-planar, hence a Kuratowski subdivision.
fn kuratowski_subgraph(n: usize, edges: &[(usize, usize)]) -> Obstruction {
    let mut keep: Vec<(usize, usize)> = edges.to_vec();
    let mut k = 0;
    while k < keep.len() {
        let removed = keep.remove(k);
        if is_planar(n, &keep) {
            keep.insert(k, removed);
            k += 1;
        }
    }
    let mut degree = vec![0usize; n];
    for &(u, v) in &keep {
        degree[u] += 1;
        degree[v] += 1;
    }
    let branch4 = degree.iter().filter(|&&d| d == 4).count();
    let kind = if branch4 == 5 { KuratowskiKind::K5 } else { KuratowskiKind::K33 };
    Obstruction { edges: keep, kind }
}
