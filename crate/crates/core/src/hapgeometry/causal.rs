//! Causal dependency graphs over spacetimehap events.
//!
//! An edge `i -> j` means event `j` lies in the causal future of event `i`
//! (future-directed timelike or null, and not haplike). The stored edge set is
//! the transitive reduction of that relation.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::event::{classify, HapEvent};
use crate::error::{Error, Result};
use crate::relativity::SeparationClass;

#[derive(Clone, Debug, Serialize)]
pub struct CausalGraph {
    pub nodes: Vec<HapEvent>,
    /// Sorted `(src, dst)` pairs.
    pub edges: Vec<(usize, usize)>,
}

/// Builds the causal graph of `events` and reduces it transitively.
///
/// Pairs of identical events are left unconnected, since either orientation
/// would close a cycle.
pub fn build_causal_graph(events: &[HapEvent]) -> Result<CausalGraph> {
    for e in events {
        e.validate()?;
    }
    if let Some(first) = events.first() {
        for e in &events[1..] {
            if e.space_dim() != first.space_dim() || e.particles() != first.particles() {
                return Err(Error::dims(
                    "causal graph event shape",
                    first.particles() * first.space_dim(),
                    e.particles() * e.space_dim(),
                ));
            }
        }
    }
    let n = events.len();
    let mut edges: Vec<(usize, usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::new();
            for j in 0..n {
                if i == j || events[i] == events[j] {
                    continue;
                }
                // Shapes were checked above.
                if classify(&events[i], &events[j]).ok()
                    == Some(SeparationClass::TimelikeFutureDirected)
                {
                    out.push((i, j));
                }
            }
            out
        })
        .flatten()
        .collect();
    edges.sort_unstable();
    let edges = transitive_reduction(n, &edges)?;
    Ok(CausalGraph {
        nodes: events.to_vec(),
        edges,
    })
}

struct BitSet(Vec<u64>);

impl BitSet {
    fn new(n: usize) -> Self {
        BitSet(vec![0; n.div_ceil(64)])
    }
    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn contains(&self, i: usize) -> bool {
        self.0[i / 64] & (1 << (i % 64)) != 0
    }
    fn union_with(&mut self, other: &BitSet) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= b;
        }
    }
}

fn topological_order(n: usize, succ: &[Vec<usize>]) -> Result<Vec<usize>> {
    let mut indeg = vec![0usize; n];
    for s in succ {
        for &j in s {
            indeg[j] += 1;
        }
    }
    let mut stack: Vec<usize> = (0..n).rev().filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = stack.pop() {
        order.push(i);
        for &j in succ[i].iter().rev() {
            indeg[j] -= 1;
            if indeg[j] == 0 {
                stack.push(j);
            }
        }
    }
    if order.len() != n {
        return Err(Error::InvalidArgument(
            "causal relation contains a cycle".into(),
        ));
    }
    Ok(order)
}

/// Transitive reduction of a DAG given as an edge list over `n` nodes.
pub fn transitive_reduction(n: usize, edges: &[(usize, usize)]) -> Result<Vec<(usize, usize)>> {
    let mut succ = vec![Vec::new(); n];
    for &(i, j) in edges {
        if i >= n || j >= n {
            return Err(Error::InvalidArgument(format!(
                "edge ({i}, {j}) out of range for {n} nodes"
            )));
        }
        succ[i].push(j);
    }
    for s in &mut succ {
        s.sort_unstable();
        s.dedup();
    }
    let order = topological_order(n, &succ)?;

    // reach[i]: nodes reachable from i through at least one edge.
    let mut reach: Vec<BitSet> = (0..n).map(|_| BitSet::new(n)).collect();
    for &i in order.iter().rev() {
        let mut r = BitSet::new(n);
        for &j in &succ[i] {
            r.insert(j);
            r.union_with(&reach[j]);
        }
        reach[i] = r;
    }

    let mut out = Vec::new();
    for (i, s) in succ.iter().enumerate() {
        for &j in s {
            let redundant = s.iter().any(|&k| k != j && reach[k].contains(j));
            if !redundant {
                out.push((i, j));
            }
        }
    }
    Ok(out)
}

impl CausalGraph {
    pub fn edge_csv(&self) -> String {
        let mut s = String::from("src,dst\n");
        for (a, b) in &self.edges {
            let _ = writeln!(s, "{a},{b}");
        }
        s
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph causal {\n  rankdir=BT;\n");
        for (i, e) in self.nodes.iter().enumerate() {
            let _ = writeln!(s, "  n{i} [label=\"{i}\\nt={}\"];", e.t);
        }
        for (a, b) in &self.edges {
            let _ = writeln!(s, "  n{a} -> n{b};");
        }
        s.push_str("}\n");
        s
    }

    /// Whether `dst` is reachable from `src` along stored edges.
    pub fn reaches(&self, src: usize, dst: usize) -> bool {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![src];
        while let Some(i) = stack.pop() {
            for &(a, b) in &self.edges {
                if a == i && !seen[b] {
                    if b == dst {
                        return true;
                    }
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        false
    }
}
