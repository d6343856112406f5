//! The 2-Greedy weighted 2-matching algorithm: dangerous vertices matched
//! first, otherwise a maximum-weight edge; with class-set maintenance,
//! trajectory tracing, and a one-step expectation probe.

use crate::genmodels::{degree_class_census, sample_sequence_graph, DegreeClassPartition};
use crate::multigraph::{EdgeId, Multigraph, Vertex};
use crate::rng::SeedRng;
use crate::weightdist::{exp_trunc_mean, EdgeWeights};
use crate::Error;
use std::fmt::Write as _;

const MAX_BUCKET: usize = 17; // explicit degree buckets 1..16, overflow at 17
const TAG_NONE: u8 = 0;
const CENSUS_CHECK_EVERY: u64 = 10_000;

fn y_tag(d: usize) -> u8 {
    d.min(MAX_BUCKET) as u8
}

fn z_tag(d: usize) -> u8 {
    (MAX_BUCKET + d.min(MAX_BUCKET)) as u8
}

/// Partition of live vertices into the Y_j / Z_j degree classes. One tag
/// byte and one position slot per vertex; each class is a dense list.
struct Buckets {
    tag: Vec<u8>,
    pos: Vec<u32>,
    lists: Vec<Vec<Vertex>>,
}

impl Buckets {
    fn new(n: usize) -> Self {
        Buckets {
            tag: vec![TAG_NONE; n],
            pos: vec![0; n],
            lists: (0..=2 * MAX_BUCKET).map(|_| Vec::new()).collect(),
        }
    }

    fn len(&self, tag: u8) -> usize {
        self.lists[tag as usize].len()
    }

    fn set(&mut self, v: Vertex, new: u8) {
        let old = self.tag[v as usize];
        if old == new {
            return;
        }
        if old != TAG_NONE {
            let list = &mut self.lists[old as usize];
            let i = self.pos[v as usize] as usize;
            list.swap_remove(i);
            if let Some(&moved) = list.get(i) {
                self.pos[moved as usize] = i as u32;
            }
        }
        self.tag[v as usize] = new;
        if new != TAG_NONE {
            let list = &mut self.lists[new as usize];
            self.pos[v as usize] = list.len() as u32;
            list.push(v);
        }
    }
}

/// Max-weight edge selection with lazy deletion. Continuous weights use a
/// binary heap; integer weights use per-weight lists so that large tie
/// groups stay O(1) amortized.
enum Selector {
    Real(std::collections::BinaryHeap<(u64, EdgeId)>),
    Integer { lists: Vec<Vec<EdgeId>>, max_w: usize },
}

impl Selector {
    fn new(g: &Multigraph, w: &EdgeWeights) -> Self {
        match w {
            EdgeWeights::Real(ws) => {
                let heap = g
                    .live_edge_ids()
                    .map(|e| (ws[e as usize].to_bits(), e))
                    .collect();
                Selector::Real(heap)
            }
            EdgeWeights::Integer(ws) => {
                let top = ws.iter().copied().max().unwrap_or(0) as usize;
                let mut lists = vec![Vec::new(); top + 1];
                for e in g.live_edge_ids() {
                    lists[ws[e as usize] as usize].push(e);
                }
                Selector::Integer { lists, max_w: top }
            }
        }
    }

    /// Weight of the heaviest live edge, if any.
    fn current_max(&mut self, g: &Multigraph, w: &EdgeWeights) -> Option<f64> {
        match self {
            Selector::Real(heap) => {
                while let Some(&(_, e)) = heap.peek() {
                    if g.edge(e).alive {
                        return Some(w.get(e as usize));
                    }
                    heap.pop();
                }
                None
            }
            Selector::Integer { lists, max_w } => loop {
                let list = &mut lists[*max_w];
                while let Some(&e) = list.last() {
                    if g.edge(e).alive {
                        return Some(*max_w as f64);
                    }
                    list.pop();
                }
                if *max_w == 0 {
                    return None;
                }
                *max_w -= 1;
            },
        }
    }

    /// Uniformly random live edge of maximum weight. Panics if none remain.
    fn pick_max(&mut self, g: &Multigraph, rng: &mut SeedRng) -> EdgeId {
        match self {
            Selector::Real(heap) => {
                let (bits, first) = loop {
                    let (bits, e) = heap.pop().expect("no live edges");
                    if g.edge(e).alive {
                        break (bits, e);
                    }
                };
                // gather exact-weight ties (probability zero for continuous
                // draws, but keep the choice uniform regardless)
                let mut ties = vec![first];
                while let Some(&(b, e)) = heap.peek() {
                    if b != bits {
                        break;
                    }
                    heap.pop();
                    if g.edge(e).alive {
                        ties.push(e);
                    }
                }
                let pick = ties.swap_remove(rng.index(ties.len()));
                for e in ties {
                    heap.push((bits, e));
                }
                pick
            }
            Selector::Integer { lists, max_w } => loop {
                let list = &mut lists[*max_w];
                if list.is_empty() {
                    assert!(*max_w > 0, "no live edges");
                    *max_w -= 1;
                    continue;
                }
                let i = rng.index(list.len());
                let e = list.swap_remove(i);
                if g.edge(e).alive {
                    return e;
                }
            },
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TraceRow {
    pub t: u64,
    pub zeta: usize,
    pub y: usize,
    pub y3: usize,
    pub m: usize,
    pub wmax: f64,
    pub w: f64,
    pub z2: usize,
}

#[derive(Clone, Debug, Default)]
pub struct GreedyTrace {
    pub rows: Vec<TraceRow>,
    /// first step with zeta = 0
    pub tau1: Option<u64>,
    /// first step with |Y_3| <= eps1 * n
    pub tau2: Option<u64>,
    pub tau: u64,
    pub zeta_max_pre_tau1: usize,
    pub v2_initial: usize,
    /// live count of V2 (initial neighbors of Y2) at each traced step
    pub v2_rows: Vec<(u64, usize)>,
}

impl GreedyTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,zeta,Y,Y3,m,wmax,W,Z2\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.t, r.zeta, r.y, r.y3, r.m, r.wmax, r.w, r.z2
            )
            .unwrap();
        }
        out
    }
}

/// Output of a full run: the spent graph (for endpoint lookups), the raw
/// matched sequence, and the cleaned 2-matching.
#[derive(Clone, Debug)]
pub struct MatchState {
    pub graph: Multigraph,
    pub dm: Vec<u8>,
    /// edges in match order, before cleanup
    pub matched: Vec<EdgeId>,
    /// after removing loops and duplicate parallel edges
    pub matching: Vec<EdgeId>,
    pub w_total: f64,
    pub w_matching: f64,
    pub tau: u64,
}

struct Greedy<'a> {
    g: Multigraph,
    w: &'a EdgeWeights,
    dm: Vec<u8>,
    buckets: Buckets,
    selector: Selector,
    matched: Vec<EdgeId>,
    w_sum: f64,
    t: u64,
    v2: Vec<bool>,
    v2_live: usize,
}

impl<'a> Greedy<'a> {
    fn new(g: Multigraph, w: &'a EdgeWeights, p: &DegreeClassPartition) -> Result<Self, Error> {
        let census = degree_class_census(&g, p);
        if census.violations > 0 {
            return Err(Error::Infeasible(format!(
                "{} vertices disagree with their degree class",
                census.violations
            )));
        }
        let n = g.n();
        let mut dm = vec![0u8; n];
        for &v in p.z1.iter().chain(&p.z) {
            dm[v as usize] = 1;
        }
        let mut buckets = Buckets::new(n);
        let class = p.class_map();
        for v in 0..n {
            let d = g.degree(v as Vertex);
            match class[v] {
                None => {
                    if d != 0 {
                        return Err(Error::Infeasible(format!(
                            "vertex {v} has degree {d} but no class"
                        )));
                    }
                }
                Some(_) => {
                    let tag = if dm[v] == 0 { y_tag(d) } else { z_tag(d) };
                    buckets.set(v as Vertex, tag);
                }
            }
        }
        // V2: neighbors of Y2 in the initial graph
        let mut v2 = vec![false; n];
        for &v in &p.y2 {
            for &(_, u) in g.incidence(v) {
                v2[u as usize] = true;
            }
        }
        let v2_live = v2.iter().filter(|&&f| f).count();
        let selector = Selector::new(&g, w);
        Ok(Greedy {
            g,
            w,
            dm,
            buckets,
            selector,
            matched: Vec::new(),
            w_sum: 0.0,
            t: 0,
            v2,
            v2_live,
        })
    }

    fn zeta(&self) -> usize {
        self.buckets.len(z_tag(1)) + self.buckets.len(y_tag(1)) + 2 * self.buckets.len(y_tag(2))
    }

    fn y_count(&self) -> usize {
        (3..=MAX_BUCKET).map(|d| self.buckets.len(y_tag(d))).sum()
    }

    fn reclassify(&mut self, v: Vertex) {
        let d = self.g.degree(v);
        let tag = if d == 0 || self.dm[v as usize] >= 2 {
            TAG_NONE
        } else if self.dm[v as usize] == 0 {
            y_tag(d)
        } else {
            z_tag(d)
        };
        self.buckets.set(v, tag);
        if d == 0 && self.v2[v as usize] {
            self.v2[v as usize] = false;
            self.v2_live -= 1;
        }
    }

    /// Uniformly random dangerous vertex (Z1, Y1 or Y2 member).
    fn sample_dangerous(&mut self, rng: &mut SeedRng) -> Vertex {
        let a = self.buckets.len(z_tag(1));
        let b = self.buckets.len(y_tag(1));
        let c = self.buckets.len(y_tag(2));
        let r = rng.index(a + b + c);
        if r < a {
            self.buckets.lists[z_tag(1) as usize][r]
        } else if r < a + b {
            self.buckets.lists[y_tag(1) as usize][r - a]
        } else {
            self.buckets.lists[y_tag(2) as usize][r - a - b]
        }
    }

    /// One iteration of the while-loop. Requires a live edge.
    fn step(&mut self, rng: &mut SeedRng) {
        let e_t = if self.zeta() > 0 {
            let v = self.sample_dangerous(rng);
            self.g.sample_incident(v, rng)
        } else {
            self.selector.pick_max(&self.g, rng)
        };
        let edge = *self.g.edge(e_t);
        self.matched.push(e_t);
        self.w_sum += self.w.get(e_t as usize);
        if edge.is_loop() {
            self.dm[edge.u as usize] = self.dm[edge.u as usize].saturating_add(2);
        } else {
            self.dm[edge.u as usize] += 1;
            self.dm[edge.v as usize] += 1;
        }
        self.g.remove_edge(e_t);
        let mut touched = vec![edge.u];
        if !edge.is_loop() {
            touched.push(edge.v);
        }
        let endpoints: &[Vertex] = if edge.is_loop() {
            &[edge.u]
        } else {
            &[edge.u, edge.v]
        };
        for &z in endpoints {
            if self.dm[z as usize] >= 2 {
                for e in self.g.remove_incident_edges(z) {
                    touched.push(self.g.edge(e).other(z));
                }
            }
        }
        for v in touched {
            self.reclassify(v);
        }
        self.t += 1;
    }

    /// Recomputes every class from scratch and checks the incremental state.
    fn census_selfcheck(&self) {
        let mut sizes = vec![0usize; 2 * MAX_BUCKET + 1];
        for v in 0..self.g.n() {
            let d = self.g.degree(v as Vertex);
            let tag = if d == 0 || self.dm[v] >= 2 {
                TAG_NONE
            } else if self.dm[v] == 0 {
                y_tag(d)
            } else {
                z_tag(d)
            };
            assert_eq!(self.buckets.tag[v], tag, "class drift at vertex {v}");
            sizes[tag as usize] += 1;
        }
        for tag in 1..=2 * MAX_BUCKET {
            assert_eq!(sizes[tag], self.buckets.len(tag as u8));
        }
    }

    fn trace_row(&mut self) -> TraceRow {
        let wmax = self.selector.current_max(&self.g, self.w).unwrap_or(0.0);
        TraceRow {
            t: self.t,
            zeta: self.zeta(),
            y: self.y_count(),
            y3: self.buckets.len(y_tag(3)),
            m: self.g.num_live_edges(),
            wmax,
            w: self.w_sum,
            z2: self.buckets.len(z_tag(2)),
        }
    }
}

/// Removes loops and duplicate parallel edges, keeping the earliest copy.
fn cleanup(g: &Multigraph, matched: &[EdgeId]) -> Vec<EdgeId> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(matched.len());
    for &e in matched {
        let edge = g.edge(e);
        if edge.is_loop() {
            continue;
        }
        if seen.insert((edge.u.min(edge.v), edge.u.max(edge.v))) {
            out.push(e);
        }
    }
    out
}

/// Runs 2-Greedy to exhaustion. `p` must describe `g`'s degree classes
/// exactly; `eps1` sets the tau2 mark; a trace row is recorded every
/// `trace_every` steps (plus first and last).
pub fn run(
    g: Multigraph,
    w: &EdgeWeights,
    p: &DegreeClassPartition,
    eps1: f64,
    trace_every: u64,
    rng: &mut SeedRng,
) -> Result<(MatchState, GreedyTrace), Error> {
    let n = g.n();
    let mut st = Greedy::new(g, w, p)?;
    let mut trace = GreedyTrace::default();
    trace.v2_initial = st.v2_live;
    let y3_mark = (eps1 * n as f64).floor() as usize;
    loop {
        let zeta = st.zeta();
        if trace.tau1.is_none() {
            if zeta == 0 {
                trace.tau1 = Some(st.t);
            } else {
                trace.zeta_max_pre_tau1 = trace.zeta_max_pre_tau1.max(zeta);
            }
        }
        if trace.tau2.is_none() && st.buckets.len(y_tag(3)) <= y3_mark {
            trace.tau2 = Some(st.t);
        }
        let done = st.g.num_live_edges() == 0;
        if done || st.t % trace_every.max(1) == 0 {
            let row = st.trace_row();
            trace.rows.push(row);
            trace.v2_rows.push((st.t, st.v2_live));
        }
        if done {
            break;
        }
        if st.t > 0 && st.t % CENSUS_CHECK_EVERY == 0 {
            st.census_selfcheck();
        }
        st.step(rng);
    }
    trace.tau = st.t;
    st.census_selfcheck();

    let matching = cleanup(&st.g, &st.matched);
    let w_matching: f64 = matching.iter().map(|&e| w.get(e as usize)).sum();
    // post-cleanup 2-matching invariant
    let mut deg = vec![0u8; n];
    for &e in &matching {
        let edge = st.g.edge(e);
        deg[edge.u as usize] += 1;
        deg[edge.v as usize] += 1;
        assert!(deg[edge.u as usize] <= 2 && deg[edge.v as usize] <= 2);
    }
    let ms = MatchState {
        graph: st.g,
        dm: st.dm,
        matched: st.matched,
        matching,
        w_total: st.w_sum,
        w_matching,
        tau: st.t,
    };
    Ok((ms, trace))
}

#[derive(Clone, Debug, PartialEq)]
pub enum MatchComponent {
    Path(Vec<Vertex>),
    Cycle(Vec<Vertex>),
}

impl MatchComponent {
    pub fn vertices(&self) -> &[Vertex] {
        match self {
            MatchComponent::Path(v) | MatchComponent::Cycle(v) => v,
        }
    }

    pub fn is_cycle(&self) -> bool {
        matches!(self, MatchComponent::Cycle(_))
    }
}

/// Decomposes the cleaned matching into its paths and cycles.
pub fn matching_components(ms: &MatchState) -> Vec<MatchComponent> {
    let n = ms.graph.n();
    let mut adj: Vec<Vec<Vertex>> = vec![Vec::new(); n];
    for &e in &ms.matching {
        let edge = ms.graph.edge(e);
        adj[edge.u as usize].push(edge.v);
        adj[edge.v as usize].push(edge.u);
    }
    for v in 0..n {
        assert!(adj[v].len() <= 2, "vertex {v} has 3 matching edges");
    }
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    let walk = |start: Vertex, seen: &mut Vec<bool>, adj: &Vec<Vec<Vertex>>| -> Vec<Vertex> {
        let mut path = vec![start];
        seen[start as usize] = true;
        let mut prev = start;
        let mut cur = match adj[start as usize].first() {
            Some(&u) => u,
            None => return path,
        };
        while !seen[cur as usize] {
            seen[cur as usize] = true;
            path.push(cur);
            let next = adj[cur as usize].iter().copied().find(|&x| x != prev);
            // parallel-free matching: the back-edge is unique, so any other
            // neighbor continues the walk
            match next {
                Some(x) => {
                    prev = cur;
                    cur = x;
                }
                None => break,
            }
        }
        path
    };
    // paths start at matching-degree-1 vertices
    for v in 0..n {
        if !seen[v] && adj[v].len() == 1 {
            out.push(MatchComponent::Path(walk(v as Vertex, &mut seen, &adj)));
        }
    }
    // what remains with degree 2 are cycles
    for v in 0..n {
        if !seen[v] && adj[v].len() == 2 {
            out.push(MatchComponent::Cycle(walk(v as Vertex, &mut seen, &adj)));
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct ProbeRow {
    pub name: &'static str,
    pub predicted: f64,
    pub empirical: f64,
    pub sigma: f64,
}

impl ProbeRow {
    pub fn gap(&self) -> f64 {
        (self.predicted - self.empirical).abs()
    }

    pub fn within(&self, k: f64) -> bool {
        self.gap() <= k * self.sigma
    }
}

#[derive(Clone, Debug)]
pub struct ProbeReport {
    pub rows: Vec<ProbeRow>,
    pub trials: usize,
}

/// One-step expectation formulas evaluated on an instance's exact class
/// counts. `zy[d]` / `zz[d]` count degree-d vertices of Y / Z.
fn one_step_formulas(
    yd: &[usize],
    zd: &[usize],
    two_m: f64,
    zeta: usize,
    wmax: f64,
) -> [f64; 4] {
    let ind = if zeta > 0 { 1.0 } else { 0.0 };
    let y3 = *yd.get(3).unwrap_or(&0) as f64;
    let z2 = *zd.get(2).unwrap_or(&0) as f64;
    let mut s_z1 = 0.0; // sum_i i(i-1)|Z_i| / 2m
    for (i, &c) in zd.iter().enumerate().skip(2) {
        s_z1 += (i * (i - 1)) as f64 * c as f64 / two_m;
    }
    let mut s_y = 0.0; // sum_{i>=3} i|Y_i| / 2m
    for (i, &c) in yd.iter().enumerate().skip(3) {
        s_y += i as f64 * c as f64 / two_m;
    }
    let dzeta = -ind + (2.0 - ind) * s_z1 * (2.0 * z2 / two_m + 2.0 * 3.0 * y3 / two_m);
    let dy = -(2.0 - ind) * (s_y + s_z1 * 3.0 * y3 / two_m);
    let d2m = -2.0 - (2.0 - ind) * 2.0 * s_z1;
    let dw = if zeta > 0 { exp_trunc_mean(wmax) } else { wmax };
    [dzeta, dy, d2m, dw]
}

/// Resamples the sequence model `trials` times, performs one 2-Greedy step
/// on each draw, and compares the empirical one-step changes of zeta, |Y|,
/// 2m, W against the closed-form expectations.
pub fn one_step_probe(
    p: &DegreeClassPartition,
    m: usize,
    weight_c: f64,
    trials: usize,
    rng: &mut SeedRng,
) -> Result<ProbeReport, Error> {
    let names = ["dzeta", "dY", "d2m", "dW"];
    let mut pred_sum = [0.0f64; 4];
    let mut emp_sum = [0.0f64; 4];
    let mut emp_sq = [0.0f64; 4];
    for trial in 0..trials {
        let mut trng = rng.child(trial as u64);
        let g = sample_sequence_graph(p, m, &mut trng)?;
        let w = EdgeWeights::sample_real(g.num_edge_slots(), weight_c, &mut trng);
        let mut st = Greedy::new(g, &w, p)?;
        let mut yd = vec![0usize; MAX_BUCKET + 1];
        let mut zd = vec![0usize; MAX_BUCKET + 1];
        for v in 0..st.g.n() {
            let d = st.g.degree(v as Vertex);
            if d == 0 {
                continue;
            }
            if st.dm[v] == 0 {
                yd[d.min(MAX_BUCKET)] += 1;
            } else {
                zd[d.min(MAX_BUCKET)] += 1;
            }
        }
        let zeta = st.zeta();
        let two_m = 2.0 * st.g.num_live_edges() as f64;
        let wmax = st.selector.current_max(&st.g, &w).unwrap();
        let pred = one_step_formulas(&yd, &zd, two_m, zeta, wmax);
        let before = [
            zeta as f64,
            st.y_count() as f64,
            two_m,
            st.w_sum,
        ];
        st.step(&mut trng);
        let after = [
            st.zeta() as f64,
            st.y_count() as f64,
            2.0 * st.g.num_live_edges() as f64,
            st.w_sum,
        ];
        for k in 0..4 {
            pred_sum[k] += pred[k];
            let d = after[k] - before[k];
            emp_sum[k] += d;
            emp_sq[k] += d * d;
        }
    }
    let nf = trials as f64;
    let rows = (0..4)
        .map(|k| {
            let mean = emp_sum[k] / nf;
            let var = (emp_sq[k] / nf - mean * mean).max(0.0);
            ProbeRow {
                name: names[k],
                predicted: pred_sum[k] / nf,
                empirical: mean,
                sigma: (var / nf).sqrt(),
            }
        })
        .collect();
    Ok(ProbeReport { rows, trials })
}
