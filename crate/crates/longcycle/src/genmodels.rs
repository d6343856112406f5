//! Random-graph samplers: the uniform multigraph G(n,m), the degree-class
//! conditioned sequence model, and the Poisson-conditioned degree generator
//! with its lambda root-finder.

use crate::multigraph::{Multigraph, Vertex};
use crate::rng::SeedRng;
use crate::Error;
use std::collections::BTreeMap;

/// The five disjoint vertex classes conditioning the sequence model:
/// degree 1 on `y1` and `z1`, exactly 2 on `y2`, at least 2 on `z`,
/// at least 3 on `y`. Vertices in no class have forced degree 0.
#[derive(Clone, Debug, Default)]
pub struct DegreeClassPartition {
    pub n: usize,
    pub y1: Vec<Vertex>,
    pub y2: Vec<Vertex>,
    pub y: Vec<Vertex>,
    pub z1: Vec<Vertex>,
    pub z: Vec<Vertex>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Class {
    Y1,
    Y2,
    Y,
    Z1,
    Z,
}

impl DegreeClassPartition {
    /// The all-Y partition: every vertex must reach degree at least 3.
    pub fn all_y(n: usize) -> Self {
        DegreeClassPartition {
            n,
            y: (0..n as Vertex).collect(),
            ..Default::default()
        }
    }

    pub fn all_z(n: usize) -> Self {
        DegreeClassPartition {
            n,
            z: (0..n as Vertex).collect(),
            ..Default::default()
        }
    }

    /// Minimum degree sum the classes force.
    pub fn min_degree_sum(&self) -> usize {
        self.y1.len() + 2 * self.y2.len() + 3 * self.y.len() + self.z1.len() + 2 * self.z.len()
    }

    pub fn check_disjoint(&self) -> Result<(), Error> {
        let mut seen = vec![false; self.n];
        for v in self.iter_all() {
            let i = v as usize;
            if i >= self.n {
                return Err(Error::Infeasible(format!("vertex {v} out of range")));
            }
            if seen[i] {
                return Err(Error::Infeasible(format!("vertex {v} in two classes")));
            }
            seen[i] = true;
        }
        Ok(())
    }

    pub fn feasible(&self, m: usize) -> bool {
        self.min_degree_sum() <= 2 * m
    }

    fn iter_all(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.y1
            .iter()
            .chain(&self.y2)
            .chain(&self.y)
            .chain(&self.z1)
            .chain(&self.z)
            .copied()
    }

    /// Class per vertex, `None` for forced-degree-0 vertices.
    pub fn class_map(&self) -> Vec<Option<Class>> {
        let mut map = vec![None; self.n];
        for &v in &self.y1 {
            map[v as usize] = Some(Class::Y1);
        }
        for &v in &self.y2 {
            map[v as usize] = Some(Class::Y2);
        }
        for &v in &self.y {
            map[v as usize] = Some(Class::Y);
        }
        for &v in &self.z1 {
            map[v as usize] = Some(Class::Z1);
        }
        for &v in &self.z {
            map[v as usize] = Some(Class::Z);
        }
        map
    }
}

/// Uniform multigraph with `m` edges, each an independent uniform unordered
/// pair from the n(n+1)/2 pairs with loops allowed.
pub fn sample_gnm(n: usize, m: usize, rng: &mut SeedRng) -> Multigraph {
    assert!(n >= 1);
    let mut g = Multigraph::new(n);
    for _ in 0..m {
        // rejection from ordered pairs: keeping only i <= j is uniform over
        // unordered pairs including loops
        loop {
            let i = rng.u64(n as u64) as Vertex;
            let j = rng.u64(n as u64) as Vertex;
            if i <= j {
                g.add_edge(i, j);
                break;
            }
        }
    }
    g
}

// sum_{k>=j} lambda^k / k!  evaluated by direct series (converges fast for
// the lambdas seen here; relative truncation error < 1e-16)
fn poisson_tail_raw(lambda: f64, j: u32) -> f64 {
    let mut term = 1.0f64;
    for k in 1..=j {
        term *= lambda / k as f64;
    }
    let mut sum = 0.0;
    let mut k = j;
    loop {
        sum += term;
        k += 1;
        term *= lambda / k as f64;
        if term < sum * 1e-18 && k > j + 3 {
            break;
        }
        if k > j + 2000 {
            break;
        }
    }
    sum
}

/// E[Po(lambda) | Po >= 2] = lambda (e^l - 1) / (e^l - 1 - lambda).
pub fn mean_po_ge2(lambda: f64) -> f64 {
    lambda * poisson_tail_raw(lambda, 1) / poisson_tail_raw(lambda, 2)
}

/// E[Po(lambda) | Po >= 3] = lambda (e^l - 1 - lambda) / (e^l - 1 - lambda - lambda^2/2).
pub fn mean_po_ge3(lambda: f64) -> f64 {
    lambda * poisson_tail_raw(lambda, 2) / poisson_tail_raw(lambda, 3)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LambdaSolution {
    /// Sum constraint forces minimal degrees exactly; Poisson sampling is
    /// bypassed and the forced vector emitted.
    Degenerate,
    Positive(f64),
}

/// Solves |Y| E[Po>=3(l)] + |Z| E[Po>=2(l)] = 2m - |Y1| - 2|Y2| - |Z1|
/// for l by bisection. Residual below 1e-12 * 2m.
pub fn solve_lambda(p: &DegreeClassPartition, m: usize) -> Result<LambdaSolution, Error> {
    let rhs = 2.0 * m as f64 - (p.y1.len() + 2 * p.y2.len() + p.z1.len()) as f64;
    let floor = (3 * p.y.len() + 2 * p.z.len()) as f64;
    let tol = 1e-12 * 2.0 * m as f64;
    if rhs < floor - tol {
        return Err(Error::Infeasible(format!(
            "degree target {rhs} below minimum-degree floor {floor}"
        )));
    }
    if p.y.is_empty() && p.z.is_empty() {
        return if rhs.abs() <= tol {
            Ok(LambdaSolution::Degenerate)
        } else {
            Err(Error::Infeasible(
                "no Poisson classes but surplus degree demanded".into(),
            ))
        };
    }
    if rhs - floor <= tol {
        return Ok(LambdaSolution::Degenerate);
    }
    let f = |l: f64| p.y.len() as f64 * mean_po_ge3(l) + p.z.len() as f64 * mean_po_ge2(l) - rhs;
    let mut hi = 1.0f64;
    while f(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Infeasible("lambda bracket exceeded 1e6".into()));
        }
    }
    let mut lo = 0.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * hi.max(1.0) && f(hi).abs() < tol {
            break;
        }
    }
    let l = 0.5 * (lo + hi);
    if f(l).abs() > tol.max(1e-9) {
        return Err(Error::Infeasible(format!(
            "lambda bisection residual {} above tolerance",
            f(l).abs()
        )));
    }
    Ok(LambdaSolution::Positive(l))
}

/// Inverse-CDF table for Po(lambda) conditioned on being >= `min_k`,
/// truncated where the remaining tail drops below 1e-15.
pub struct TruncatedPoissonTable {
    min_k: u32,
    cdf: Vec<f64>,
}

impl TruncatedPoissonTable {
    pub fn new(lambda: f64, min_k: u32) -> Self {
        let norm = poisson_tail_raw(lambda, min_k);
        let mut term = 1.0f64;
        for k in 1..=min_k {
            term *= lambda / k as f64;
        }
        let mut cdf = Vec::new();
        let mut acc = 0.0;
        let mut k = min_k;
        loop {
            acc += term / norm;
            cdf.push(acc);
            if 1.0 - acc < 1e-15 {
                break;
            }
            k += 1;
            term *= lambda / k as f64;
            if cdf.len() > 5000 {
                break;
            }
        }
        TruncatedPoissonTable { min_k, cdf }
    }

    pub fn sample(&self, rng: &mut SeedRng) -> u32 {
        let u = rng.f64();
        let idx = self.cdf.partition_point(|&c| c <= u);
        self.min_k + idx.min(self.cdf.len() - 1) as u32
    }
}

/// Degree vector of the sequence model: forced degrees on the unit classes,
/// conditioned Poisson on Y and Z, rejection-resampled until the sum is 2m.
pub fn sample_conditioned_degrees(
    p: &DegreeClassPartition,
    m: usize,
    rng: &mut SeedRng,
) -> Result<Vec<u32>, Error> {
    p.check_disjoint()?;
    if !p.feasible(m) {
        return Err(Error::Infeasible("degree classes exceed 2m".into()));
    }
    let mut degrees = vec![0u32; p.n];
    for &v in p.y1.iter().chain(&p.z1) {
        degrees[v as usize] = 1;
    }
    for &v in &p.y2 {
        degrees[v as usize] = 2;
    }
    match solve_lambda(p, m)? {
        LambdaSolution::Degenerate => {
            for &v in &p.y {
                degrees[v as usize] = 3;
            }
            for &v in &p.z {
                degrees[v as usize] = 2;
            }
            Ok(degrees)
        }
        LambdaSolution::Positive(lambda) => {
            let table_y = TruncatedPoissonTable::new(lambda, 3);
            let table_z = TruncatedPoissonTable::new(lambda, 2);
            let fixed: u64 = (p.y1.len() + 2 * p.y2.len() + p.z1.len()) as u64;
            let target = 2 * m as u64;
            let cap = (1e6 * (m as f64).sqrt()) as u64;
            for _attempt in 0..cap {
                let mut sum = fixed;
                for &v in &p.y {
                    let d = table_y.sample(rng);
                    degrees[v as usize] = d;
                    sum += d as u64;
                }
                for &v in &p.z {
                    let d = table_z.sample(rng);
                    degrees[v as usize] = d;
                    sum += d as u64;
                }
                if sum == target {
                    return Ok(degrees);
                }
            }
            Err(Error::RetryCapExceeded)
        }
    }
}

/// Uniform element of the sequence model: sample a conditioned degree
/// vector, lay out d(i) points per vertex, shuffle, pair consecutive points.
pub fn sample_sequence_graph(
    p: &DegreeClassPartition,
    m: usize,
    rng: &mut SeedRng,
) -> Result<Multigraph, Error> {
    let degrees = sample_conditioned_degrees(p, m, rng)?;
    Ok(pair_points(&degrees, rng))
}

/// Configuration-model pairing of an explicit degree vector.
pub fn pair_points(degrees: &[u32], rng: &mut SeedRng) -> Multigraph {
    let total: usize = degrees.iter().map(|&d| d as usize).sum();
    assert!(total % 2 == 0, "degree sum must be even");
    let mut points: Vec<Vertex> = Vec::with_capacity(total);
    for (v, &d) in degrees.iter().enumerate() {
        for _ in 0..d {
            points.push(v as Vertex);
        }
    }
    rng.shuffle(&mut points);
    let mut g = Multigraph::new(degrees.len());
    for pair in points.chunks_exact(2) {
        g.add_edge(pair[0], pair[1]);
    }
    g
}

/// Exact per-class degree table: `z[i]` counts degree-i vertices of Z,
/// `y[i]` degree-i vertices of Y, plus class-constraint violations.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DegreeCensus {
    pub y1: usize,
    pub y2: usize,
    pub z1: usize,
    pub y: BTreeMap<u32, usize>,
    pub z: BTreeMap<u32, usize>,
    pub violations: usize,
}

pub fn degree_class_census(g: &Multigraph, p: &DegreeClassPartition) -> DegreeCensus {
    let mut census = DegreeCensus::default();
    for &v in &p.y1 {
        if g.degree(v) == 1 {
            census.y1 += 1;
        } else {
            census.violations += 1;
        }
    }
    for &v in &p.z1 {
        if g.degree(v) == 1 {
            census.z1 += 1;
        } else {
            census.violations += 1;
        }
    }
    for &v in &p.y2 {
        if g.degree(v) == 2 {
            census.y2 += 1;
        } else {
            census.violations += 1;
        }
    }
    for &v in &p.y {
        let d = g.degree(v) as u32;
        if d >= 3 {
            *census.y.entry(d).or_default() += 1;
        } else {
            census.violations += 1;
        }
    }
    for &v in &p.z {
        let d = g.degree(v) as u32;
        if d >= 2 {
            *census.z.entry(d).or_default() += 1;
        } else {
            census.violations += 1;
        }
    }
    census
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gnm_edge_cases() {
        let mut rng = SeedRng::new(0);
        let g = sample_gnm(5, 0, &mut rng);
        assert_eq!(g.num_live_edges(), 0);
        assert_eq!(g.n(), 5);
        let g = sample_gnm(1, 1, &mut rng);
        assert_eq!(g.degree(0), 2); // forced loop
    }

    #[test]
    fn gnm_loop_fraction() {
        // unordered-pairs-with-loops: loop probability 2/(n+1)
        let n = 10;
        let m = 100_000;
        let mut rng = SeedRng::new(42);
        let g = sample_gnm(n, m, &mut rng);
        let loops = g.live_edge_ids().filter(|&e| g.edge(e).is_loop()).count();
        let p = 2.0 / (n as f64 + 1.0);
        let sigma = (m as f64 * p * (1.0 - p)).sqrt();
        let dev = (loops as f64 - m as f64 * p).abs();
        assert!(dev < 3.0 * sigma, "loops={loops} dev={dev} sigma={sigma}");
    }

    #[test]
    fn lambda_degenerate_three_regular() {
        let p = DegreeClassPartition::all_y(100);
        // 2m = 3n exactly
        assert_eq!(solve_lambda(&p, 150).unwrap(), LambdaSolution::Degenerate);
    }

    #[test]
    fn lambda_all_z_residual() {
        let n = 1000;
        let p = DegreeClassPartition::all_z(n);
        let m = (2.5 * n as f64 / 2.0) as usize; // 2m = 2.5n
        let l = match solve_lambda(&p, m).unwrap() {
            LambdaSolution::Positive(l) => l,
            _ => panic!("expected positive lambda"),
        };
        let residual = (n as f64 * mean_po_ge2(l) - 2.0 * m as f64).abs();
        assert!(residual < 1e-12 * 2.0 * m as f64, "residual {residual}");
    }

    #[test]
    fn lambda_all_y_series_oracle() {
        let n = 1000;
        let p = DegreeClassPartition::all_y(n);
        let m = (3.2 * n as f64 / 2.0) as usize; // 2m = 3.2n
        let l = match solve_lambda(&p, m).unwrap() {
            LambdaSolution::Positive(l) => l,
            _ => panic!("expected positive lambda"),
        };
        // independent oracle: direct series summation of E[Po>=3]
        let norm: f64 = (3..200).map(|k| pmf(l, k)).sum();
        let mean: f64 = (3..200).map(|k| k as f64 * pmf(l, k)).sum::<f64>() / norm;
        assert!((mean - 3.2).abs() < 1e-12, "series mean {mean}");
        assert!((mean_po_ge3(l) - mean).abs() < 1e-12);

        fn pmf(l: f64, k: u32) -> f64 {
            let mut t = (-l).exp();
            for i in 1..=k {
                t *= l / i as f64;
            }
            t
        }
    }

    #[test]
    fn lambda_infeasible() {
        let p = DegreeClassPartition::all_y(100);
        assert!(solve_lambda(&p, 100).is_err()); // 2m = 200 < 3n
    }

    #[test]
    fn conditioned_degrees_forced() {
        let mut rng = SeedRng::new(3);
        let p = DegreeClassPartition::all_y(50);
        let d = sample_conditioned_degrees(&p, 75, &mut rng).unwrap();
        assert!(d.iter().all(|&x| x == 3));

        let p = DegreeClassPartition {
            n: 50,
            y2: (0..50).collect(),
            ..Default::default()
        };
        let d = sample_conditioned_degrees(&p, 50, &mut rng).unwrap();
        assert!(d.iter().all(|&x| x == 2));
    }

    #[test]
    fn conditioned_degrees_census_closed_form() {
        // all-Y at 2m = 3.2n: degree-k counts near n lambda^k / (k! (e^l-1-l-l^2/2))
        let n = 10_000;
        let p = DegreeClassPartition::all_y(n);
        let m = (3.2 * n as f64 / 2.0) as usize;
        let l = match solve_lambda(&p, m).unwrap() {
            LambdaSolution::Positive(l) => l,
            _ => panic!(),
        };
        let mut rng = SeedRng::new(11);
        let d = sample_conditioned_degrees(&p, m, &mut rng).unwrap();
        assert_eq!(d.iter().map(|&x| x as u64).sum::<u64>(), 2 * m as u64);
        let norm = poisson_tail_raw(l, 3);
        let bound = (m as f64).powf(0.6);
        for k in 3..=8u32 {
            let count = d.iter().filter(|&&x| x == k).count() as f64;
            let mut pk = 1.0;
            for i in 1..=k {
                pk *= l / i as f64;
            }
            let expected = n as f64 * pk / norm;
            assert!(
                (count - expected).abs() <= bound,
                "degree {k}: count {count} expected {expected} bound {bound}"
            );
        }
    }

    #[test]
    fn sequence_graph_forced_cases() {
        let mut rng = SeedRng::new(5);
        // Y1 = {a,b}, 2m = 2: single edge ab
        let p = DegreeClassPartition {
            n: 2,
            y1: vec![0, 1],
            ..Default::default()
        };
        let g = sample_sequence_graph(&p, 1, &mut rng).unwrap();
        assert_eq!(g.num_live_edges(), 1);
        let e = g.edge(0);
        assert!(!e.is_loop());
    }

    #[test]
    fn sequence_graph_pairing_frequencies() {
        // Y2 = {a,b}, 2m = 4: of the 3 perfect matchings on the 4 points, 2
        // give the double edge ab and 1 gives loops at a and b
        let p = DegreeClassPartition {
            n: 2,
            y2: vec![0, 1],
            ..Default::default()
        };
        let mut rng = SeedRng::new(9);
        let trials = 100_000;
        let mut double = 0usize;
        for _ in 0..trials {
            let g = sample_sequence_graph(&p, 2, &mut rng).unwrap();
            let loops = g.live_edge_ids().filter(|&e| g.edge(e).is_loop()).count();
            if loops == 0 {
                double += 1;
            } else {
                assert_eq!(loops, 2);
            }
        }
        let p_double = 2.0 / 3.0;
        let sigma = (trials as f64 * p_double * (1.0 - p_double)).sqrt();
        assert!((double as f64 - trials as f64 * p_double).abs() < 3.0 * sigma);
    }

    #[test]
    fn sequence_graph_three_regular_connected() {
        // all-Y at 2m = 3n: 3-regular; connected in nearly all trials
        let n = 20_000;
        let p = DegreeClassPartition::all_y(n);
        let mut connected = 0;
        for t in 0..20 {
            let mut rng = SeedRng::new(100 + t);
            let g = sample_sequence_graph(&p, 3 * n / 2, &mut rng).unwrap();
            assert!((0..n).all(|v| g.degree(v as Vertex) == 3));
            let (_, sizes) = g.connected_components();
            if sizes.len() == 1 {
                connected += 1;
            }
        }
        assert!(connected >= 19, "connected {connected}/20");
    }

    #[test]
    fn max_degree_log_n() {
        let n = 100_000;
        let p = DegreeClassPartition::all_z(n);
        let m = (2.5 * n as f64 / 2.0) as usize;
        let mut ok = 0;
        for t in 0..10 {
            let mut rng = SeedRng::new(500 + t);
            let g = sample_sequence_graph(&p, m, &mut rng).unwrap();
            let max_deg = (0..n).map(|v| g.degree(v as Vertex)).max().unwrap();
            if (max_deg as f64) <= (n as f64).ln() {
                ok += 1;
            }
        }
        assert!(ok >= 9, "max degree within log n in {ok}/10 trials");
    }

    #[test]
    fn census_counts_and_violations() {
        // all-3-regular sample: y3 = |Y|, everything else 0
        let n = 300;
        let p = DegreeClassPartition::all_y(n);
        let mut rng = SeedRng::new(2);
        let g = sample_sequence_graph(&p, 3 * n / 2, &mut rng).unwrap();
        let c = degree_class_census(&g, &p);
        assert_eq!(c.y.get(&3), Some(&n));
        assert_eq!(c.violations, 0);
        assert!(c.z.is_empty());

        // empty graph, empty partition
        let g = Multigraph::new(0);
        let c = degree_class_census(&g, &DegreeClassPartition::default());
        assert_eq!(c, DegreeCensus::default());
    }

    #[test]
    fn census_all_z_closed_form() {
        let n = 10_000;
        let p = DegreeClassPartition::all_z(n);
        let m = (2.5 * n as f64 / 2.0) as usize;
        let l = match solve_lambda(&p, m).unwrap() {
            LambdaSolution::Positive(l) => l,
            _ => panic!(),
        };
        let mut rng = SeedRng::new(77);
        let g = sample_sequence_graph(&p, m, &mut rng).unwrap();
        let c = degree_class_census(&g, &p);
        let expected = l * l * n as f64 / (2.0 * poisson_tail_raw(l, 2));
        let z2 = *c.z.get(&2).unwrap_or(&0) as f64;
        assert!((z2 - expected).abs() <= (m as f64).powf(0.6));
    }

    #[test]
    fn samplers_bit_reproducible() {
        let p = DegreeClassPartition::all_z(500);
        let g1 = sample_sequence_graph(&p, 700, &mut SeedRng::new(123)).unwrap();
        let g2 = sample_sequence_graph(&p, 700, &mut SeedRng::new(123)).unwrap();
        assert_eq!(g1.to_edge_list(), g2.to_edge_list());
        let h1 = sample_gnm(100, 300, &mut SeedRng::new(4));
        let h2 = sample_gnm(100, 300, &mut SeedRng::new(4));
        assert_eq!(h1.to_edge_list(), h2.to_edge_list());
    }
}
