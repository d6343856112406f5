//! 2-core extraction, kernel contraction with per-edge path weights, kernel
//! statistics, the expected-weight cycle bound, and expansion of kernel
//! cycles back to cycles of the 2-core.

use crate::multigraph::{EdgeId, Multigraph, Vertex};
use crate::Error;
use num_rational::Ratio;
use std::fmt::Write as _;

/// Subgraph view of the parent multigraph after peeling to minimum degree 2.
#[derive(Clone, Debug)]
pub struct Core2 {
    pub vertex_alive: Vec<bool>,
    pub edge_alive: Vec<bool>,
    /// number of degree-2 vertices in the core
    pub n2: usize,
    pub num_vertices: usize,
    pub num_edges: usize,
}

impl Core2 {
    pub fn is_empty(&self) -> bool {
        self.num_vertices == 0
    }

    pub fn degree(&self, g: &Multigraph, v: Vertex) -> usize {
        if !self.vertex_alive[v as usize] {
            return 0;
        }
        g.incidence(v)
            .iter()
            .filter(|&&(e, _)| self.edge_alive[e as usize])
            .count()
    }
}

/// Contracted kernel: every maximal degree-2 path of the 2-core becomes one
/// edge carrying its length as weight and its vertex sequence for expansion.
#[derive(Clone, Debug)]
pub struct WeightedKernel {
    /// kernel on its own vertex ids `0..n_k`; loops and multi-edges allowed
    pub kernel: Multigraph,
    /// per kernel edge: length of the contracted 2-core path
    pub weights: Vec<u32>,
    /// per kernel edge: the contracted path as parent vertex ids; first and
    /// last entries are the branch vertices matching the edge's endpoints
    pub path_map: Vec<Vec<Vertex>>,
    /// kernel vertex id -> parent vertex id
    pub vertex_map: Vec<Vertex>,
    /// n2 of the source core (for the weight identity)
    pub n2: usize,
    /// set when the core is a bare cycle: the kernel is empty and this holds
    /// the cycle's parent vertices
    pub bare_cycle: Option<Vec<Vertex>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct KernelStats {
    pub n_k: usize,
    pub e_k: usize,
    pub n2: usize,
    pub loops: usize,
    /// number of non-loop endpoint pairs with multiplicity at least 2
    pub multi_edges: usize,
    /// maximum multiplicity over non-loop endpoint pairs, if any exist
    pub max_multiplicity: Option<usize>,
    pub weight_sum: u64,
}

/// Vertex set of a largest component; ties broken by smallest minimum
/// vertex id (components are scanned in ascending order of their smallest
/// vertex, so the first maximum wins).
pub fn giant_component(g: &Multigraph) -> Vec<bool> {
    let (comp, sizes) = g.connected_components();
    let mut flags = vec![false; g.n()];
    if sizes.is_empty() {
        return flags;
    }
    let best = sizes
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i as u32)
        .unwrap();
    for (v, &c) in comp.iter().enumerate() {
        flags[v] = c == best;
    }
    flags
}

/// Iteratively peels degree-<=1 vertices of `g` restricted to `within`.
pub fn two_core(g: &Multigraph, within: &[bool]) -> Core2 {
    let n = g.n();
    assert_eq!(within.len(), n);
    let mut edge_alive = vec![false; g.num_edge_slots()];
    let mut deg = vec![0usize; n];
    for e in g.live_edge_ids() {
        let edge = g.edge(e);
        if within[edge.u as usize] && within[edge.v as usize] {
            edge_alive[e as usize] = true;
            deg[edge.u as usize] += 1;
            deg[edge.v as usize] += 1;
        }
    }
    let mut vertex_alive: Vec<bool> = (0..n).map(|v| within[v] && deg[v] > 0).collect();
    let mut queue: Vec<Vertex> = (0..n)
        .filter(|&v| vertex_alive[v] && deg[v] <= 1)
        .map(|v| v as Vertex)
        .collect();
    while let Some(v) = queue.pop() {
        let vi = v as usize;
        if !vertex_alive[vi] {
            continue;
        }
        vertex_alive[vi] = false;
        for &(e, w) in g.incidence(v) {
            if !edge_alive[e as usize] {
                continue;
            }
            edge_alive[e as usize] = false;
            deg[vi] -= 1;
            let wi = w as usize;
            if wi != vi {
                deg[wi] -= 1;
                if deg[wi] <= 1 && vertex_alive[wi] {
                    queue.push(w);
                }
            } else {
                deg[vi] -= 1;
            }
        }
    }
    // vertices left with degree 0 (possible only outside the peel order) die
    let mut n2 = 0;
    let mut num_vertices = 0;
    for v in 0..n {
        if vertex_alive[v] && deg[v] == 0 {
            vertex_alive[v] = false;
        }
        if vertex_alive[v] {
            num_vertices += 1;
            if deg[v] == 2 {
                n2 += 1;
            }
        }
    }
    let num_edges = edge_alive.iter().filter(|&&a| a).count();
    Core2 {
        vertex_alive,
        edge_alive,
        n2,
        num_vertices,
        num_edges,
    }
}

/// Contracts each maximal degree-2 path of a nonempty connected core into a
/// kernel edge. A bare-cycle core yields an empty kernel with the flag set.
pub fn contract(g: &Multigraph, core: &Core2) -> Result<WeightedKernel, Error> {
    if core.is_empty() {
        return Err(Error::EmptyKernel("2-core is empty".into()));
    }
    let n = g.n();
    let mut kernel_id = vec![u32::MAX; n];
    let mut vertex_map = Vec::new();
    for v in 0..n {
        if core.vertex_alive[v] && core.degree(g, v as Vertex) >= 3 {
            kernel_id[v] = vertex_map.len() as u32;
            vertex_map.push(v as Vertex);
        }
    }
    if vertex_map.is_empty() {
        // connected, min degree 2, no branch vertex: a bare cycle
        let start = (0..n)
            .find(|&v| core.vertex_alive[v])
            .expect("nonempty core") as Vertex;
        let mut cycle = vec![start];
        let mut prev_edge = u32::MAX;
        let mut cur = start;
        loop {
            let &(e, next) = g
                .incidence(cur)
                .iter()
                .find(|&&(e, _)| core.edge_alive[e as usize] && e != prev_edge)
                .expect("degree-2 vertex in core");
            if next == start {
                break;
            }
            cycle.push(next);
            prev_edge = e;
            cur = next;
        }
        return Ok(WeightedKernel {
            kernel: Multigraph::new(0),
            weights: Vec::new(),
            path_map: Vec::new(),
            vertex_map: Vec::new(),
            n2: core.n2,
            bare_cycle: Some(cycle),
        });
    }

    let mut kernel = Multigraph::new(vertex_map.len());
    let mut weights = Vec::new();
    let mut path_map: Vec<Vec<Vertex>> = Vec::new();
    let mut visited = vec![false; g.num_edge_slots()];
    for &start in &vertex_map {
        for &(e0, mut cur) in g.incidence(start) {
            if !core.edge_alive[e0 as usize] || visited[e0 as usize] {
                continue;
            }
            // a loop at a branch vertex appears twice in the incidence list;
            // mark it once and emit one kernel loop
            visited[e0 as usize] = true;
            let mut path = vec![start];
            let mut prev_edge = e0;
            if g.edge(e0).is_loop() {
                cur = start;
            }
            while kernel_id[cur as usize] == u32::MAX {
                path.push(cur);
                let &(e, next) = g
                    .incidence(cur)
                    .iter()
                    .find(|&&(e, _)| core.edge_alive[e as usize] && e != prev_edge)
                    .expect("interior vertex must have degree 2");
                visited[e as usize] = true;
                prev_edge = e;
                cur = next;
            }
            path.push(cur);
            let w = (path.len() - 1) as u32;
            kernel.add_edge(kernel_id[start as usize], kernel_id[cur as usize]);
            weights.push(w);
            path_map.push(path);
        }
    }
    let kern = WeightedKernel {
        kernel,
        weights,
        path_map,
        vertex_map,
        n2: core.n2,
        bare_cycle: None,
    };
    kern.check_identities(core);
    Ok(kern)
}

impl WeightedKernel {
    /// Contraction identities: sum (w-1) = n2, minimum kernel degree >= 3,
    /// path endpoints match the kernel edge's endpoints.
    pub fn check_identities(&self, core: &Core2) {
        if let Some(bc) = &self.bare_cycle {
            // degenerate core: nothing was contracted, the core is the cycle
            assert_eq!(self.kernel.n(), 0, "bare cycle with nonempty kernel");
            assert_eq!(bc.len(), core.n2, "bare cycle misses core vertices");
            return;
        }
        let interior: u64 = self.weights.iter().map(|&w| (w - 1) as u64).sum();
        assert_eq!(interior, core.n2 as u64, "sum(w-1) != n2");
        for v in 0..self.kernel.n() {
            assert!(self.kernel.degree(v as Vertex) >= 3, "kernel degree < 3");
        }
        for (e, path) in self.path_map.iter().enumerate() {
            let edge = self.kernel.edge(e as EdgeId);
            let a = self.vertex_map[edge.u as usize];
            let b = self.vertex_map[edge.v as usize];
            let (p0, p1) = (*path.first().unwrap(), *path.last().unwrap());
            assert!(
                (p0 == a && p1 == b) || (p0 == b && p1 == a),
                "path endpoints disagree with kernel edge"
            );
            assert_eq!(path.len() as u32, self.weights[e] + 1);
        }
    }

    pub fn stats(&self) -> KernelStats {
        kernel_stats(self)
    }

    /// Debug dump: `u v w` per kernel edge under a `#` stats header.
    pub fn dump(&self) -> String {
        let s = self.stats();
        let mut out = String::new();
        writeln!(
            out,
            "# n_k={} e_k={} n2={} loops={} multi_edges={} weight_sum={}",
            s.n_k, s.e_k, s.n2, s.loops, s.multi_edges, s.weight_sum
        )
        .unwrap();
        for e in self.kernel.live_edge_ids() {
            let edge = self.kernel.edge(e);
            writeln!(out, "{} {} {}", edge.u, edge.v, self.weights[e as usize]).unwrap();
        }
        out
    }
}

pub fn kernel_stats(k: &WeightedKernel) -> KernelStats {
    let mut loops = 0;
    let mut mult: std::collections::BTreeMap<(Vertex, Vertex), usize> = Default::default();
    for e in k.kernel.live_edge_ids() {
        let edge = k.kernel.edge(e);
        if edge.is_loop() {
            loops += 1;
        } else {
            let key = (edge.u.min(edge.v), edge.u.max(edge.v));
            *mult.entry(key).or_default() += 1;
        }
    }
    let multi_edges = mult.values().filter(|&&c| c >= 2).count();
    let max_multiplicity = mult.values().copied().max();
    KernelStats {
        n_k: k.kernel.n(),
        e_k: k.kernel.num_live_edges(),
        n2: k.n2,
        loops,
        multi_edges,
        max_multiplicity,
        weight_sum: k.weights.iter().map(|&w| w as u64).sum(),
    }
}

/// Expected weight of a uniformly random Hamilton cycle of the kernel:
/// (1 + n2/e_k) * n_k, exact as a rational.
pub fn luczak_bound(s: &KernelStats) -> Result<Ratio<u64>, Error> {
    if s.e_k == 0 {
        return Err(Error::EmptyKernel("bound undefined on empty kernel".into()));
    }
    Ok(Ratio::new((s.e_k + s.n2) as u64 * s.n_k as u64, s.e_k as u64))
}

/// Expands a kernel cycle (edge-id sequence) to the 2-core vertex cycle it
/// contracts; the output length is the cycle's total weight.
pub fn expand_cycle(k: &WeightedKernel, kernel_cycle: &[EdgeId]) -> Result<Vec<Vertex>, Error> {
    if kernel_cycle.is_empty() {
        return Err(Error::InvalidCycle {
            index: 0,
            reason: "empty cycle".into(),
        });
    }
    // pick the starting kernel vertex: for a single loop it is forced, else
    // the endpoint of edge 0 shared with edge 1
    let first = k.kernel.edge(kernel_cycle[0]);
    let start = if kernel_cycle.len() == 1 {
        if !first.is_loop() {
            return Err(Error::InvalidCycle {
                index: 0,
                reason: "single non-loop edge cannot close".into(),
            });
        }
        first.u
    } else {
        let second = k.kernel.edge(kernel_cycle[1]);
        // start so that edge 0 ends on a vertex of edge 1
        if first.v == second.u || first.v == second.v {
            first.u
        } else if first.u == second.u || first.u == second.v {
            first.v
        } else {
            return Err(Error::InvalidCycle {
                index: 1,
                reason: "consecutive edges share no vertex".into(),
            });
        }
    };
    let mut cur = start;
    let mut out: Vec<Vertex> = Vec::new();
    for (idx, &e) in kernel_cycle.iter().enumerate() {
        let edge = k.kernel.edge(e);
        let path = &k.path_map[e as usize];
        let cur_parent = k.vertex_map[cur as usize];
        let forward = path[0] == cur_parent && (edge.u == cur || edge.v == cur);
        let backward = *path.last().unwrap() == cur_parent && (edge.u == cur || edge.v == cur);
        if !(forward || backward) {
            return Err(Error::InvalidCycle {
                index: idx,
                reason: "orientation mismatch".into(),
            });
        }
        if forward {
            out.extend(&path[..path.len() - 1]);
            cur = edge.other(cur);
        } else {
            out.extend(path[1..].iter().rev());
            cur = edge.other(cur);
        }
    }
    if cur != start {
        return Err(Error::InvalidCycle {
            index: kernel_cycle.len() - 1,
            reason: "walk does not close".into(),
        });
    }
    let mut seen = std::collections::HashSet::with_capacity(out.len());
    for (i, &v) in out.iter().enumerate() {
        if !seen.insert(v) {
            return Err(Error::InvalidCycle {
                index: i,
                reason: format!("vertex {v} repeats"),
            });
        }
    }
    let total_w: u64 = kernel_cycle.iter().map(|&e| k.weights[e as usize] as u64).sum();
    assert_eq!(out.len() as u64, total_w, "expansion length != weight sum");
    Ok(out)
}

/// Full extraction pipeline: giant component, 2-core, kernel.
pub fn kernelize(g: &Multigraph) -> Result<(Core2, WeightedKernel), Error> {
    let giant = giant_component(g);
    let core = two_core(g, &giant);
    if core.is_empty() {
        return Err(Error::EmptyKernel("giant component has empty 2-core".into()));
    }
    let kern = contract(g, &core)?;
    Ok((core, kern))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genmodels::sample_gnm;
    use crate::rng::SeedRng;

    fn all(n: usize) -> Vec<bool> {
        vec![true; n]
    }

    /// theta graph: 0 and 1 joined by paths of lengths 2, 2, 3
    fn theta_graph() -> Multigraph {
        Multigraph::with_edges(
            6,
            [(0, 2), (2, 1), (0, 3), (3, 1), (0, 4), (4, 5), (5, 1)],
        )
    }

    /// dumbbell: two triangles sharing vertex 0
    fn dumbbell() -> Multigraph {
        Multigraph::with_edges(5, [(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 0)])
    }

    fn k4() -> Multigraph {
        Multigraph::with_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
    }

    #[test]
    fn giant_tiebreak() {
        let g = Multigraph::with_edges(7, [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]);
        let flags = giant_component(&g);
        assert!(flags[0] && flags[1] && flags[2]);
        assert!(!flags[3]);
        // triangle plus isolated vertex
        let g = Multigraph::with_edges(4, [(0, 1), (1, 2), (2, 0)]);
        let flags = giant_component(&g);
        assert_eq!(flags, vec![true, true, true, false]);
    }

    #[test]
    fn giant_survival_probability_oracle() {
        // G(1e5, 0.75e5): mean degree c = 1.5; giant fraction near 1 - x
        // with x the root of x = exp(c(x-1)) found by fixed-point iteration
        let c = 1.5f64;
        let mut x = 0.5;
        for _ in 0..200 {
            x = (c * (x - 1.0)).exp();
        }
        let survival = 1.0 - x;
        let n = 100_000;
        let mut rng = SeedRng::new(8);
        let g = sample_gnm(n, 3 * n / 4, &mut rng);
        let flags = giant_component(&g);
        let frac = flags.iter().filter(|&&f| f).count() as f64 / n as f64;
        assert!(
            (frac - survival).abs() < 0.02,
            "giant fraction {frac} vs {survival}"
        );
    }

    #[test]
    fn two_core_cases() {
        // any tree -> empty
        let g = Multigraph::with_edges(4, [(0, 1), (1, 2), (1, 3)]);
        assert!(two_core(&g, &all(4)).is_empty());
        // C5 -> itself
        let g = Multigraph::with_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
        let c = two_core(&g, &all(5));
        assert_eq!(c.num_vertices, 5);
        assert_eq!(c.n2, 5);
        // triangle with pendant path of length 3 -> the triangle
        let g = Multigraph::with_edges(6, [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5)]);
        let c = two_core(&g, &all(6));
        assert_eq!(c.num_vertices, 3);
        assert_eq!(c.n2, 3);
        assert!(!c.vertex_alive[3]);
    }

    #[test]
    fn two_core_idempotent() {
        let mut rng = SeedRng::new(21);
        let g = sample_gnm(500, 400, &mut rng);
        let c1 = two_core(&g, &all(500));
        let within: Vec<bool> = c1.vertex_alive.clone();
        let c2 = two_core(&g, &within);
        assert_eq!(c1.num_vertices, c2.num_vertices);
        assert_eq!(c1.num_edges, c2.num_edges);
        assert_eq!(c1.n2, c2.n2);
    }

    #[test]
    fn contract_theta() {
        let g = theta_graph();
        let c = two_core(&g, &all(6));
        let k = contract(&g, &c).unwrap();
        let s = k.stats();
        assert_eq!(s.n_k, 2);
        assert_eq!(s.e_k, 3);
        assert_eq!(s.n2, 4);
        assert_eq!(s.loops, 0);
        assert_eq!(s.multi_edges, 1);
        assert_eq!(s.max_multiplicity, Some(3));
        assert_eq!(s.weight_sum, 7);
        let mut ws: Vec<u32> = k.weights.clone();
        ws.sort();
        assert_eq!(ws, vec![2, 2, 3]);
    }

    #[test]
    fn contract_k4() {
        let g = k4();
        let c = two_core(&g, &all(4));
        let k = contract(&g, &c).unwrap();
        let s = k.stats();
        assert_eq!((s.n_k, s.e_k, s.n2), (4, 6, 0));
        assert_eq!(s.loops, 0);
        assert_eq!(s.multi_edges, 0);
        assert_eq!(s.max_multiplicity, Some(1));
        assert_eq!(s.weight_sum, 6);
        assert!(k.weights.iter().all(|&w| w == 1));
    }

    #[test]
    fn contract_dumbbell() {
        let g = dumbbell();
        let c = two_core(&g, &all(5));
        let k = contract(&g, &c).unwrap();
        let s = k.stats();
        assert_eq!(s.n_k, 1);
        assert_eq!(s.e_k, 2);
        assert_eq!(s.n2, 4);
        assert_eq!(s.loops, 2);
        assert_eq!(s.multi_edges, 0);
        assert_eq!(s.max_multiplicity, None);
        assert_eq!(s.weight_sum, 6);
        let mut ws = k.weights.clone();
        ws.sort();
        assert_eq!(ws, vec![3, 3]);
    }

    #[test]
    fn bare_cycle_flagged() {
        let g = Multigraph::with_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)]);
        let c = two_core(&g, &all(4));
        let k = contract(&g, &c).unwrap();
        assert_eq!(k.kernel.n(), 0);
        assert_eq!(k.bare_cycle.as_ref().unwrap().len(), 4);
    }

    #[test]
    fn luczak_values() {
        let g = theta_graph();
        let k = contract(&g, &two_core(&g, &all(6))).unwrap();
        let b = luczak_bound(&k.stats()).unwrap();
        assert_eq!(b, Ratio::new(14, 3));
        let g = k4();
        let k = contract(&g, &two_core(&g, &all(4))).unwrap();
        assert_eq!(luczak_bound(&k.stats()).unwrap(), Ratio::new(4, 1));
    }

    #[test]
    fn expand_theta_cycles() {
        let g = theta_graph();
        let k = contract(&g, &two_core(&g, &all(6))).unwrap();
        let by_weight = |w: u32| -> Vec<EdgeId> {
            k.weights
                .iter()
                .enumerate()
                .filter(|&(_, &x)| x == w)
                .map(|(i, _)| i as EdgeId)
                .collect()
        };
        // the two weight-2 parallel edges -> a 4-cycle
        let w2 = by_weight(2);
        let cyc = expand_cycle(&k, &w2).unwrap();
        assert_eq!(cyc.len(), 4);
        // weights {2,3} -> 5-cycle
        let w3 = by_weight(3);
        let cyc = expand_cycle(&k, &[w2[0], w3[0]]).unwrap();
        assert_eq!(cyc.len(), 5);
    }

    #[test]
    fn expand_k4_triangle() {
        let g = k4();
        let k = contract(&g, &two_core(&g, &all(4))).unwrap();
        // find a triangle among kernel edges 0-1, 1-2, 2-0
        let find = |a: Vertex, b: Vertex| -> EdgeId {
            k.kernel
                .live_edge_ids()
                .find(|&e| {
                    let ed = k.kernel.edge(e);
                    (ed.u, ed.v) == (a.min(b), a.max(b)) || (ed.v, ed.u) == (a.min(b), a.max(b))
                })
                .unwrap()
        };
        let cyc = expand_cycle(&k, &[find(0, 1), find(1, 2), find(2, 0)]).unwrap();
        assert_eq!(cyc.len(), 3);
    }

    #[test]
    fn expand_rejects_non_cycle() {
        let g = theta_graph();
        let k = contract(&g, &two_core(&g, &all(6))).unwrap();
        // a single non-loop edge cannot close
        assert!(expand_cycle(&k, &[0]).is_err());
        // repeating an edge repeats vertices
        assert!(expand_cycle(&k, &[0, 0]).is_err());
    }

    #[test]
    fn identities_on_random_instances() {
        for t in 0..50 {
            let mut rng = SeedRng::new(900 + t);
            let n = 3000;
            let g = sample_gnm(n, (0.55 * n as f64) as usize, &mut rng);
            match kernelize(&g) {
                Ok((core, k)) => {
                    if k.bare_cycle.is_none() {
                        k.check_identities(&core);
                        let s = k.stats();
                        assert_eq!(s.weight_sum, (s.n2 + s.e_k) as u64);
                    }
                }
                Err(Error::EmptyKernel(_)) => {}
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    #[test]
    fn dump_format() {
        let g = theta_graph();
        let k = contract(&g, &two_core(&g, &all(6))).unwrap();
        let d = k.dump();
        assert!(d.starts_with("# n_k=2 e_k=3 n2=4"));
        assert_eq!(d.lines().count(), 4);
    }
}
