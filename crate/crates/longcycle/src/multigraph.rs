//! Mutable sparse multigraph with loops and multiplicities.
//!
//! Degree convention: a loop contributes 2 to the degree of its vertex, so
//! the sum of degrees is always twice the number of live edges. Edge ids are
//! stable: deletion tombstones an edge, it never renumbers.

use crate::rng::SeedRng;
use std::fmt::Write as _;

pub type Vertex = u32;
pub type EdgeId = u32;

#[derive(Clone, Copy, Debug)]
pub struct Edge {
    pub u: Vertex,
    pub v: Vertex,
    pub alive: bool,
}

impl Edge {
    pub fn is_loop(&self) -> bool {
        self.u == self.v
    }

    pub fn other(&self, x: Vertex) -> Vertex {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

#[derive(Clone, Debug)]
pub struct Multigraph {
    n: usize,
    edges: Vec<Edge>,
    // Per-vertex incidence entries (edge_id, other endpoint). A loop at v
    // contributes two entries, so sampling an entry uniformly samples a
    // configuration-model point. Entries use swap-remove; order is arbitrary.
    incidence: Vec<Vec<(EdgeId, Vertex)>>,
    live_edges: usize,
}

impl Multigraph {
    pub fn new(n: usize) -> Self {
        Multigraph {
            n,
            edges: Vec::new(),
            incidence: vec![Vec::new(); n],
            live_edges: 0,
        }
    }

    pub fn with_edges(n: usize, pairs: impl IntoIterator<Item = (Vertex, Vertex)>) -> Self {
        let mut g = Multigraph::new(n);
        for (u, v) in pairs {
            g.add_edge(u, v);
        }
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_live_edges(&self) -> usize {
        self.live_edges
    }

    /// Total number of edge slots ever added (live + dead).
    pub fn num_edge_slots(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e as usize]
    }

    pub fn add_edge(&mut self, u: Vertex, v: Vertex) -> EdgeId {
        assert!((u as usize) < self.n && (v as usize) < self.n);
        let id = self.edges.len() as EdgeId;
        self.edges.push(Edge { u, v, alive: true });
        self.incidence[u as usize].push((id, v));
        self.incidence[v as usize].push((id, u));
        self.live_edges += 1;
        id
    }

    /// Live degree of `v`, loops counted twice.
    pub fn degree(&self, v: Vertex) -> usize {
        self.incidence[v as usize].len()
    }

    pub fn live_edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.alive)
            .map(|(i, _)| i as EdgeId)
    }

    pub fn incidence(&self, v: Vertex) -> &[(EdgeId, Vertex)] {
        &self.incidence[v as usize]
    }

    /// Uniform incidence entry at `v` (a loop is twice as likely as a plain
    /// edge, matching the point count of the configuration model).
    pub fn sample_incident(&self, v: Vertex, rng: &mut SeedRng) -> EdgeId {
        let inc = &self.incidence[v as usize];
        assert!(!inc.is_empty(), "sampling incident edge at isolated vertex");
        inc[rng.index(inc.len())].0
    }

    fn detach(&mut self, v: Vertex, e: EdgeId) {
        let inc = &mut self.incidence[v as usize];
        let pos = inc
            .iter()
            .position(|&(id, _)| id == e)
            .expect("incidence entry missing");
        inc.swap_remove(pos);
    }

    pub fn remove_edge(&mut self, e: EdgeId) {
        let edge = self.edges[e as usize];
        assert!(edge.alive, "remove_edge on dead edge {e}");
        self.edges[e as usize].alive = false;
        self.detach(edge.u, e);
        if edge.is_loop() {
            self.detach(edge.u, e);
        } else {
            self.detach(edge.v, e);
        }
        self.live_edges -= 1;
    }

    /// Removes every live edge incident to `v`; returns their ids (a loop
    /// appears once).
    pub fn remove_incident_edges(&mut self, v: Vertex) -> Vec<EdgeId> {
        let mut removed = Vec::with_capacity(self.degree(v));
        while let Some(&(e, _)) = self.incidence[v as usize].last() {
            self.remove_edge(e);
            removed.push(e);
        }
        removed
    }

    /// Component id per vertex plus component sizes. Ids are assigned in
    /// order of smallest contained vertex, so the labelling is deterministic.
    pub fn connected_components(&self) -> (Vec<u32>, Vec<usize>) {
        let mut comp = vec![u32::MAX; self.n];
        let mut sizes = Vec::new();
        let mut stack = Vec::new();
        for start in 0..self.n {
            if comp[start] != u32::MAX {
                continue;
            }
            let id = sizes.len() as u32;
            sizes.push(0);
            comp[start] = id;
            stack.push(start as Vertex);
            while let Some(v) = stack.pop() {
                sizes[id as usize] += 1;
                for &(_, w) in &self.incidence[v as usize] {
                    if comp[w as usize] == u32::MAX {
                        comp[w as usize] = id;
                        stack.push(w);
                    }
                }
            }
        }
        (comp, sizes)
    }

    /// Debug edge-list format: one `u v` pair per live edge, 0-indexed,
    /// loops as `v v`.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        for e in self.edges.iter().filter(|e| e.alive) {
            writeln!(s, "{} {}", e.u, e.v).unwrap();
        }
        s
    }

    pub fn from_edge_list(n: usize, text: &str) -> Result<Self, crate::Error> {
        let mut g = Multigraph::new(n);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<Vertex, crate::Error> {
                tok.and_then(|t| t.parse().ok())
                    .ok_or_else(|| crate::Error::Format(format!("bad edge list line {}", lineno + 1)))
            };
            let u = parse(it.next())?;
            let v = parse(it.next())?;
            if u as usize >= n || v as usize >= n {
                return Err(crate::Error::Format(format!(
                    "vertex out of range on line {}",
                    lineno + 1
                )));
            }
            g.add_edge(u, v);
        }
        Ok(g)
    }

    /// Degree-sum identity; used by periodic self-checks.
    pub fn check_degree_sum(&self) {
        let total: usize = (0..self.n).map(|v| self.degree(v as Vertex)).sum();
        assert_eq!(total, 2 * self.live_edges);
    }
}

/// Membership flags plus a dense index array: O(1) uniform sampling, O(1)
/// insert and delete.
#[derive(Clone, Debug, Default)]
pub struct VertexSet {
    dense: Vec<Vertex>,
    // position + 1 in `dense`, 0 = absent
    pos: Vec<u32>,
}

impl VertexSet {
    pub fn new(n: usize) -> Self {
        VertexSet {
            dense: Vec::new(),
            pos: vec![0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.dense.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dense.is_empty()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.pos[v as usize] != 0
    }

    pub fn insert(&mut self, v: Vertex) -> bool {
        if self.contains(v) {
            return false;
        }
        self.dense.push(v);
        self.pos[v as usize] = self.dense.len() as u32;
        true
    }

    pub fn remove(&mut self, v: Vertex) -> bool {
        let p = self.pos[v as usize];
        if p == 0 {
            return false;
        }
        let idx = (p - 1) as usize;
        let last = *self.dense.last().unwrap();
        self.dense.swap_remove(idx);
        if idx < self.dense.len() {
            self.pos[last as usize] = p;
        }
        self.pos[v as usize] = 0;
        true
    }

    pub fn sample(&self, rng: &mut SeedRng) -> Vertex {
        assert!(!self.dense.is_empty());
        self.dense[rng.index(self.dense.len())]
    }

    pub fn iter(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.dense.iter().copied()
    }
}
