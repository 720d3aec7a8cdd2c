//! Boykov–Kolmogorov max-flow and binary energy minimization by min-cut.
//!
//! Label 1 ("in the set") is the source side. A symmetric pair weight w
//! becomes two arcs of capacity w; a unary cost u for label 1 becomes an
//! arc to the sink (u > 0) or from the source (u < 0).

use std::collections::VecDeque;

use crate::error::{Error, Result};

const NONE: u32 = u32::MAX;
const TERMINAL: u32 = u32::MAX - 1;
const ORPHAN: u32 = u32::MAX - 2;

/// Largest total capacity accepted before integer overflow becomes possible.
pub const CAPACITY_LIMIT: i64 = 1 << 62;

/// Which of the possibly many minimum cuts to report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Select {
    /// Smallest source set: nodes reachable from the source in the residual graph.
    #[default]
    Minimal,
    /// Largest source set: nodes that cannot reach the sink in the residual graph.
    Maximal,
    /// The search-tree labelling left by the solver.
    Any,
}

impl std::str::FromStr for Select {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minimal" => Ok(Select::Minimal),
            "maximal" => Ok(Select::Maximal),
            "any" => Ok(Select::Any),
            _ => Err(Error::Config(format!("unknown select policy '{s}' (minimal | maximal | any)"))),
        }
    }
}

/// Directed graph with integer capacities, frozen into CSR form for solving.
#[derive(Clone, Debug)]
pub struct FlowGraph {
    n: usize,
    edges: Vec<(u32, u32, i64, i64)>,
    tr: Vec<i64>,
    total: i64,
    cancelled: i64,
}

impl FlowGraph {
    pub fn new(n: usize) -> Self {
        Self { n, edges: Vec::new(), tr: vec![0; n], total: 0, cancelled: 0 }
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    fn account(&mut self, c: i64) -> Result<()> {
        self.total = self
            .total
            .checked_add(c)
            .filter(|t| *t <= CAPACITY_LIMIT)
            .ok_or_else(|| Error::CapacityScale("total capacity exceeds 2^62".into()))?;
        Ok(())
    }

    /// Arc i→j with capacity `cap` and j→i with capacity `rev`.
    pub fn add_edge(&mut self, i: usize, j: usize, cap: i64, rev: i64) -> Result<()> {
        assert!(i < self.n && j < self.n && i != j);
        if cap < 0 || rev < 0 {
            return Err(Error::CapacityScale("negative arc capacity".into()));
        }
        self.account(cap)?;
        self.account(rev)?;
        self.edges.push((i as u32, j as u32, cap, rev));
        Ok(())
    }

    /// Source→i capacity `source` and i→sink capacity `sink`.
    pub fn add_terminal(&mut self, i: usize, source: i64, sink: i64) -> Result<()> {
        if source < 0 || sink < 0 {
            return Err(Error::CapacityScale("negative terminal capacity".into()));
        }
        self.account(source)?;
        self.account(sink)?;
        self.tr[i] += source - sink;
        // Opposing terminal arcs on one node carry min(source, sink) directly.
        self.cancelled += source.min(sink);
        Ok(())
    }

    pub fn solve(&self) -> MaxFlow {
        MaxFlow::run(self)
    }
}

/// Solved flow network with residual capacities.
#[derive(Clone, Debug)]
pub struct MaxFlow {
    first: Vec<u32>,
    head: Vec<u32>,
    sister: Vec<u32>,
    cap: Vec<i64>,
    /// Residual terminal capacity: positive from the source, negative to the sink.
    tr: Vec<i64>,
    parent: Vec<u32>,
    is_sink: Vec<bool>,
    ts: Vec<u64>,
    dist: Vec<u32>,
    time: u64,
    active: VecDeque<u32>,
    in_queue: Vec<bool>,
    orphans: Vec<u32>,
    flow: i64,
}

impl MaxFlow {
    fn run(g: &FlowGraph) -> Self {
        let n = g.n;
        // Every pair (i, j) yields the arc a = 2e at i and its sister at j.
        let mut deg = vec![0u32; n + 1];
        for &(i, j, _, _) in &g.edges {
            deg[i as usize] += 1;
            deg[j as usize] += 1;
        }
        let mut first = vec![0u32; n + 1];
        for i in 0..n {
            first[i + 1] = first[i] + deg[i];
        }
        let m = first[n] as usize;
        let mut fill = first.clone();
        let mut head = vec![0u32; m];
        let mut sister = vec![0u32; m];
        let mut cap = vec![0i64; m];
        for &(i, j, c, r) in &g.edges {
            let a = fill[i as usize];
            fill[i as usize] += 1;
            let b = fill[j as usize];
            fill[j as usize] += 1;
            head[a as usize] = j;
            head[b as usize] = i;
            sister[a as usize] = b;
            sister[b as usize] = a;
            cap[a as usize] = c;
            cap[b as usize] = r;
        }
        let mut mf = Self {
            first,
            head,
            sister,
            cap,
            tr: g.tr.clone(),
            parent: vec![NONE; n],
            is_sink: vec![false; n],
            ts: vec![0; n],
            dist: vec![0; n],
            time: 0,
            active: VecDeque::new(),
            in_queue: vec![false; n],
            orphans: Vec::new(),
            flow: g.cancelled,
        };
        mf.maxflow();
        mf
    }

    fn activate(&mut self, i: u32) {
        if !self.in_queue[i as usize] {
            self.in_queue[i as usize] = true;
            self.active.push_back(i);
        }
    }

    fn next_active(&mut self) -> Option<u32> {
        while let Some(i) = self.active.pop_front() {
            self.in_queue[i as usize] = false;
            if self.parent[i as usize] != NONE {
                return Some(i);
            }
        }
        None
    }

    fn arcs(&self, i: usize) -> std::ops::Range<usize> {
        self.first[i] as usize..self.first[i + 1] as usize
    }

    fn maxflow(&mut self) {
        let n = self.parent.len();
        for i in 0..n {
            if self.tr[i] > 0 {
                self.parent[i] = TERMINAL;
                self.is_sink[i] = false;
                self.dist[i] = 1;
                self.activate(i as u32);
            } else if self.tr[i] < 0 {
                self.parent[i] = TERMINAL;
                self.is_sink[i] = true;
                self.dist[i] = 1;
                self.activate(i as u32);
            }
        }
        let mut current: Option<u32> = None;
        loop {
            let i = match current.take() {
                Some(i) if self.parent[i as usize] != NONE => i,
                _ => match self.next_active() {
                    Some(i) => i,
                    None => break,
                },
            };
            let iu = i as usize;
            let mut middle: Option<usize> = None;
            if !self.is_sink[iu] {
                for a in self.arcs(iu) {
                    if self.cap[a] == 0 {
                        continue;
                    }
                    let j = self.head[a] as usize;
                    if self.parent[j] == NONE {
                        self.is_sink[j] = false;
                        self.parent[j] = self.sister[a];
                        self.ts[j] = self.ts[iu];
                        self.dist[j] = self.dist[iu] + 1;
                        self.activate(j as u32);
                    } else if self.is_sink[j] {
                        middle = Some(a);
                        break;
                    } else if self.ts[j] <= self.ts[iu] && self.dist[j] > self.dist[iu] {
                        self.parent[j] = self.sister[a];
                        self.ts[j] = self.ts[iu];
                        self.dist[j] = self.dist[iu] + 1;
                    }
                }
            } else {
                for a in self.arcs(iu) {
                    let sa = self.sister[a] as usize;
                    if self.cap[sa] == 0 {
                        continue;
                    }
                    let j = self.head[a] as usize;
                    if self.parent[j] == NONE {
                        self.is_sink[j] = true;
                        self.parent[j] = sa as u32;
                        self.ts[j] = self.ts[iu];
                        self.dist[j] = self.dist[iu] + 1;
                        self.activate(j as u32);
                    } else if !self.is_sink[j] {
                        middle = Some(sa);
                        break;
                    } else if self.ts[j] <= self.ts[iu] && self.dist[j] > self.dist[iu] {
                        self.parent[j] = sa as u32;
                        self.ts[j] = self.ts[iu];
                        self.dist[j] = self.dist[iu] + 1;
                    }
                }
            }
            self.time += 1;
            if let Some(a) = middle {
                // Keep processing the same node: it may have more paths.
                current = Some(i);
                self.augment(a);
                while let Some(o) = self.orphans.pop() {
                    if self.is_sink[o as usize] {
                        self.adopt_sink(o as usize);
                    } else {
                        self.adopt_source(o as usize);
                    }
                }
            }
        }
    }

    /// Pushes flow along source → … → tail(a) → head(a) → … → sink.
    fn augment(&mut self, a: usize) {
        let tail = self.head[self.sister[a] as usize] as usize;
        let headn = self.head[a] as usize;
        let mut bottleneck = self.cap[a];
        let mut i = tail;
        loop {
            let p = self.parent[i];
            if p == TERMINAL {
                bottleneck = bottleneck.min(self.tr[i]);
                break;
            }
            bottleneck = bottleneck.min(self.cap[self.sister[p as usize] as usize]);
            i = self.head[p as usize] as usize;
        }
        let mut i = headn;
        loop {
            let p = self.parent[i];
            if p == TERMINAL {
                bottleneck = bottleneck.min(-self.tr[i]);
                break;
            }
            bottleneck = bottleneck.min(self.cap[p as usize]);
            i = self.head[p as usize] as usize;
        }

        self.cap[self.sister[a] as usize] += bottleneck;
        self.cap[a] -= bottleneck;
        let mut i = tail;
        loop {
            let p = self.parent[i];
            if p == TERMINAL {
                self.tr[i] -= bottleneck;
                if self.tr[i] == 0 {
                    self.make_orphan(i);
                }
                break;
            }
            let pu = p as usize;
            let s = self.sister[pu] as usize;
            self.cap[pu] += bottleneck;
            self.cap[s] -= bottleneck;
            let next = self.head[pu] as usize;
            if self.cap[s] == 0 {
                self.make_orphan(i);
            }
            i = next;
        }
        let mut i = headn;
        loop {
            let p = self.parent[i];
            if p == TERMINAL {
                self.tr[i] += bottleneck;
                if self.tr[i] == 0 {
                    self.make_orphan(i);
                }
                break;
            }
            let pu = p as usize;
            let s = self.sister[pu] as usize;
            self.cap[s] += bottleneck;
            self.cap[pu] -= bottleneck;
            let next = self.head[pu] as usize;
            if self.cap[pu] == 0 {
                self.make_orphan(i);
            }
            i = next;
        }
        self.flow += bottleneck;
    }

    fn make_orphan(&mut self, i: usize) {
        self.parent[i] = ORPHAN;
        self.orphans.push(i as u32);
    }

    /// Distance from `j` to its terminal through valid parents, or `None`
    /// if the chain passes through an orphan or a free node.
    fn origin_distance(&mut self, j: usize) -> Option<u32> {
        let mut d = 0u32;
        let mut k = j;
        loop {
            if self.ts[k] == self.time {
                d += self.dist[k];
                break;
            }
            let p = self.parent[k];
            d += 1;
            if p == TERMINAL {
                self.ts[k] = self.time;
                self.dist[k] = 1;
                break;
            }
            if p == ORPHAN || p == NONE {
                return None;
            }
            k = self.head[p as usize] as usize;
        }
        // Stamp the chain so later searches stop early.
        let mut k = j;
        let mut dd = d;
        while self.ts[k] != self.time {
            self.ts[k] = self.time;
            self.dist[k] = dd;
            dd -= 1;
            k = self.head[self.parent[k] as usize] as usize;
        }
        Some(d)
    }

    fn adopt_source(&mut self, i: usize) {
        let mut best: Option<(u32, u32)> = None;
        for a in self.arcs(i) {
            let sa = self.sister[a] as usize;
            if self.cap[sa] == 0 {
                continue;
            }
            let j = self.head[a] as usize;
            if self.is_sink[j] || self.parent[j] == NONE {
                continue;
            }
            if let Some(d) = self.origin_distance(j) {
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((a as u32, d));
                }
            }
        }
        match best {
            Some((a, d)) => {
                self.parent[i] = a;
                self.ts[i] = self.time;
                self.dist[i] = d + 1;
            }
            None => {
                for a in self.arcs(i) {
                    let j = self.head[a] as usize;
                    if self.is_sink[j] || self.parent[j] == NONE {
                        continue;
                    }
                    if self.cap[self.sister[a] as usize] > 0 {
                        self.activate(j as u32);
                    }
                    let p = self.parent[j];
                    if p != TERMINAL && p != ORPHAN && self.head[p as usize] as usize == i {
                        self.make_orphan(j);
                    }
                }
                self.parent[i] = NONE;
            }
        }
    }

    fn adopt_sink(&mut self, i: usize) {
        let mut best: Option<(u32, u32)> = None;
        for a in self.arcs(i) {
            if self.cap[a] == 0 {
                continue;
            }
            let j = self.head[a] as usize;
            if !self.is_sink[j] || self.parent[j] == NONE {
                continue;
            }
            if let Some(d) = self.origin_distance(j) {
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((a as u32, d));
                }
            }
        }
        match best {
            Some((a, d)) => {
                self.parent[i] = a;
                self.ts[i] = self.time;
                self.dist[i] = d + 1;
            }
            None => {
                for a in self.arcs(i) {
                    let j = self.head[a] as usize;
                    if !self.is_sink[j] || self.parent[j] == NONE {
                        continue;
                    }
                    if self.cap[a] > 0 {
                        self.activate(j as u32);
                    }
                    let p = self.parent[j];
                    if p != TERMINAL && p != ORPHAN && self.head[p as usize] as usize == i {
                        self.make_orphan(j);
                    }
                }
                self.parent[i] = NONE;
            }
        }
    }

    /// Value of the maximum flow (= minimum cut capacity).
    pub fn flow(&self) -> i64 {
        self.flow
    }

    /// Source-side membership for the requested cut.
    pub fn source_side(&self, select: Select) -> Vec<bool> {
        let n = self.parent.len();
        match select {
            Select::Any => (0..n).map(|i| self.parent[i] != NONE && !self.is_sink[i]).collect(),
            Select::Minimal => {
                let mut seen = vec![false; n];
                let mut stack: Vec<usize> = (0..n).filter(|&i| self.tr[i] > 0).collect();
                for &i in &stack {
                    seen[i] = true;
                }
                while let Some(i) = stack.pop() {
                    for a in self.arcs(i) {
                        let j = self.head[a] as usize;
                        if self.cap[a] > 0 && !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
                seen
            }
            Select::Maximal => {
                let mut reach = vec![false; n];
                let mut stack: Vec<usize> = (0..n).filter(|&i| self.tr[i] < 0).collect();
                for &i in &stack {
                    reach[i] = true;
                }
                while let Some(i) = stack.pop() {
                    // j reaches the sink through i if the arc j→i has residual capacity.
                    for a in self.arcs(i) {
                        let j = self.head[a] as usize;
                        if self.cap[self.sister[a] as usize] > 0 && !reach[j] {
                            reach[j] = true;
                            stack.push(j);
                        }
                    }
                }
                reach.into_iter().map(|r| !r).collect()
            }
        }
    }
}

/// E(x) = constant + Σ uᵢ xᵢ + Σ w_ij [xᵢ ≠ x_j] with w_ij ≥ 0.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BinaryEnergy {
    pub constant: f64,
    pub unary: Vec<f64>,
    pub pairs: Vec<(usize, usize, f64)>,
}

/// An energy with integer coefficients, minimized exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegerEnergy {
    pub unary: Vec<i64>,
    pub pairs: Vec<(usize, usize, i64)>,
}

impl BinaryEnergy {
    pub fn new(n: usize) -> Self {
        Self { constant: 0.0, unary: vec![0.0; n], pairs: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.unary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unary.is_empty()
    }

    pub fn eval(&self, x: &[bool]) -> f64 {
        let mut e = self.constant;
        for (u, &xi) in self.unary.iter().zip(x) {
            if xi {
                e += u;
            }
        }
        for &(i, j, w) in &self.pairs {
            if x[i] != x[j] {
                e += w;
            }
        }
        e
    }

    /// Scale 2⁴⁰ / max |coefficient| (1 for an all-zero energy).
    pub fn default_scale(&self) -> f64 {
        let m = self
            .unary
            .iter()
            .map(|u| u.abs())
            .chain(self.pairs.iter().map(|p| p.2.abs()))
            .fold(0.0, f64::max);
        if m > 0.0 {
            (1u64 << 40) as f64 / m
        } else {
            1.0
        }
    }

    pub fn quantize(&self, scale: f64) -> Result<IntegerEnergy> {
        let q = |v: f64| -> Result<i64> {
            let r = (v * scale).round();
            if !r.is_finite() || r.abs() > CAPACITY_LIMIT as f64 {
                return Err(Error::CapacityScale(format!("coefficient {v} overflows at scale {scale}")));
            }
            Ok(r as i64)
        };
        let unary = self.unary.iter().map(|&u| q(u)).collect::<Result<Vec<_>>>()?;
        let mut pairs = Vec::with_capacity(self.pairs.len());
        for &(i, j, w) in &self.pairs {
            if w < 0.0 {
                return Err(Error::Precondition(format!("pair weight {w} is negative (not submodular)")));
            }
            pairs.push((i, j, q(w)?));
        }
        Ok(IntegerEnergy { unary, pairs })
    }

    /// Global minimizer at the default scale.
    pub fn minimize(&self, select: Select) -> Result<Vec<bool>> {
        Ok(self.quantize(self.default_scale())?.minimize(select)?.0)
    }
}

impl IntegerEnergy {
    pub fn eval(&self, x: &[bool]) -> i128 {
        let mut e: i128 = 0;
        for (u, &xi) in self.unary.iter().zip(x) {
            if xi {
                e += *u as i128;
            }
        }
        for &(i, j, w) in &self.pairs {
            if x[i] != x[j] {
                e += w as i128;
            }
        }
        e
    }

    /// Minimizer and the min-cut value (energy up to the constant Σ min(uᵢ, 0)).
    pub fn minimize(&self, select: Select) -> Result<(Vec<bool>, i64)> {
        let n = self.unary.len();
        let mut g = FlowGraph::new(n);
        for (i, &u) in self.unary.iter().enumerate() {
            if u > 0 {
                g.add_terminal(i, 0, u)?;
            } else if u < 0 {
                g.add_terminal(i, -u, 0)?;
            }
        }
        for &(i, j, w) in &self.pairs {
            if w > 0 {
                g.add_edge(i, j, w, w)?;
            }
        }
        let mf = g.solve();
        Ok((mf.source_side(select), mf.flow()))
    }
}

/// Exhaustive minimization for tiny problems: all minimizers' energy and the
/// pointwise intersection and union of the minimizer family.
pub fn brute_force(e: &IntegerEnergy) -> (i128, Vec<bool>, Vec<bool>) {
    let n = e.unary.len();
    assert!(n <= 24, "brute force is limited to 24 variables");
    let mut best = i128::MAX;
    let mut meet = vec![true; n];
    let mut join = vec![false; n];
    let mut x = vec![false; n];
    for mask in 0u64..(1u64 << n) {
        for (k, xk) in x.iter_mut().enumerate() {
            *xk = mask >> k & 1 == 1;
        }
        let v = e.eval(&x);
        if v < best {
            best = v;
            meet = x.clone();
            join = x.clone();
        } else if v == best {
            for k in 0..n {
                meet[k] &= x[k];
                join[k] |= x[k];
            }
        }
    }
    (best, meet, join)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn textbook_flow() {
        // s→0 (3), s→1 (2), 0→1 (1), 0→t (2), 1→t (3): max flow 5.
        let mut g = FlowGraph::new(2);
        g.add_terminal(0, 3, 2).unwrap();
        g.add_terminal(1, 2, 3).unwrap();
        g.add_edge(0, 1, 1, 0).unwrap();
        assert_eq!(g.solve().flow(), 5);
    }

    #[test]
    fn chain_cut() {
        let mut g = FlowGraph::new(4);
        g.add_terminal(0, 10, 0).unwrap();
        g.add_terminal(3, 0, 10).unwrap();
        g.add_edge(0, 1, 5, 5).unwrap();
        g.add_edge(1, 2, 2, 2).unwrap();
        g.add_edge(2, 3, 5, 5).unwrap();
        let mf = g.solve();
        assert_eq!(mf.flow(), 2);
        assert_eq!(mf.source_side(Select::Minimal), vec![true, true, false, false]);
        assert_eq!(mf.source_side(Select::Maximal), vec![true, true, false, false]);
    }

    #[test]
    fn ties_separate_minimal_and_maximal() {
        // x0 forced in, x2 forced out, x1 free at zero cost either way.
        let e = IntegerEnergy { unary: vec![-10, 0, 10], pairs: vec![(0, 1, 3), (1, 2, 3)] };
        let (lo, _) = e.minimize(Select::Minimal).unwrap();
        let (hi, _) = e.minimize(Select::Maximal).unwrap();
        assert_eq!(lo, vec![true, false, false]);
        assert_eq!(hi, vec![true, true, false]);
    }

    #[test]
    fn capacity_overflow_is_reported() {
        let mut g = FlowGraph::new(2);
        g.add_terminal(0, 1 << 61, 0).unwrap();
        assert!(matches!(g.add_edge(0, 1, 1 << 61, 1), Err(Error::CapacityScale(_))));
    }

    #[test]
    fn random_instances_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(1..=12);
            let mut e = BinaryEnergy::new(n);
            for u in e.unary.iter_mut() {
                *u = rng.gen_range(-3.0..3.0);
            }
            for i in 0..n {
                for j in i + 1..n {
                    if rng.gen_bool(0.4) {
                        e.pairs.push((i, j, rng.gen_range(0.0..2.0)));
                    }
                }
            }
            let q = e.quantize(e.default_scale()).unwrap();
            let (best, meet, join) = brute_force(&q);
            let (lo, _) = q.minimize(Select::Minimal).unwrap();
            let (hi, _) = q.minimize(Select::Maximal).unwrap();
            let (any, _) = q.minimize(Select::Any).unwrap();
            assert_eq!(q.eval(&lo), best);
            assert_eq!(q.eval(&hi), best);
            assert_eq!(q.eval(&any), best);
            assert_eq!(lo, meet);
            assert_eq!(hi, join);
        }
    }

    #[test]
    fn grid_instance_with_plateaus() {
        // Integer-valued ties on a 4×4 grid exercise orphan adoption.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = 16;
            let mut q = IntegerEnergy { unary: vec![0; n], pairs: Vec::new() };
            for u in q.unary.iter_mut() {
                *u = rng.gen_range(-4..=4);
            }
            for r in 0..4 {
                for c in 0..4 {
                    let i = r * 4 + c;
                    if c + 1 < 4 {
                        q.pairs.push((i, i + 1, rng.gen_range(0..=3)));
                    }
                    if r + 1 < 4 {
                        q.pairs.push((i, i + 4, rng.gen_range(0..=3)));
                    }
                }
            }
            let (best, meet, join) = brute_force(&q);
            let (lo, _) = q.minimize(Select::Minimal).unwrap();
            let (hi, _) = q.minimize(Select::Maximal).unwrap();
            assert_eq!(q.eval(&lo), best);
            assert_eq!((lo, hi), (meet, join));
        }
    }
}
