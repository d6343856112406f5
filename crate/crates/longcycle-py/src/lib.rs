//! Python bindings for the long-cycle pipeline: graph sampling, kernel
//! extraction, the 2-Greedy matching, the fluid-limit ODE, the end-to-end
//! cycle builder, and the experiment harness. Structured results cross the
//! boundary as JSON strings so the Python side can `json.loads` them.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use longcycle::cyclebuilder::{build_long_cycle, verify_cycle, CycleParams};
use longcycle::genmodels::{sample_gnm, sample_sequence_graph, DegreeClassPartition};
use longcycle::harness::{
    run_bounds, run_couple, run_greedy_trace, run_kernel, run_longcycle, run_ode, run_probe,
    run_synthetic, ExperimentConfig,
};
use longcycle::kernelizer::{expand_cycle, kernel_stats, kernelize, luczak_bound, WeightedKernel};
use longcycle::twogreedy;
use longcycle::weightdist::EdgeWeights;
use longcycle::{demode, Error, Multigraph, SeedRng};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Infeasible(_) | Error::Format(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// An undirected multigraph (loops and parallel edges allowed).
#[pyclass]
#[derive(Clone)]
struct Graph {
    inner: Multigraph,
}

#[pymethods]
impl Graph {
    #[new]
    fn new(n: usize) -> Self {
        Graph {
            inner: Multigraph::new(n),
        }
    }

    fn add_edge(&mut self, u: u32, v: u32) -> u32 {
        self.inner.add_edge(u, v)
    }

    fn n(&self) -> usize {
        self.inner.n()
    }

    fn num_edges(&self) -> usize {
        self.inner.num_live_edges()
    }

    fn degree(&self, v: u32) -> usize {
        self.inner.degree(v)
    }

    /// One `u v` pair per line, 0-indexed, loops as `v v`.
    fn edge_list(&self) -> String {
        self.inner.to_edge_list()
    }

    #[staticmethod]
    fn from_edge_list(n: usize, text: &str) -> PyResult<Graph> {
        Ok(Graph {
            inner: Multigraph::from_edge_list(n, text).map_err(to_py)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(n={}, edges={})",
            self.inner.n(),
            self.inner.num_live_edges()
        )
    }
}

/// The weighted kernel of a graph's 2-core: contracted paths become
/// integer edge weights.
#[pyclass]
struct Kernel {
    inner: WeightedKernel,
}

#[pymethods]
impl Kernel {
    /// The kernel multigraph on its own vertex ids.
    fn graph(&self) -> Graph {
        Graph {
            inner: self.inner.kernel.clone(),
        }
    }

    /// Per kernel edge: length of the contracted 2-core path.
    fn weights(&self) -> Vec<u32> {
        self.inner.weights.clone()
    }

    fn n2(&self) -> usize {
        self.inner.n2
    }

    /// Census as JSON: n_k, e_k, n2, loops, multi-edges, weight sum.
    fn stats_json(&self) -> String {
        serde_json::to_string(&kernel_stats(&self.inner)).expect("serialize stats")
    }

    /// The random-Hamilton-cycle weight baseline (1 + n2/e_K) n_K.
    fn luczak(&self) -> PyResult<f64> {
        let l = luczak_bound(&kernel_stats(&self.inner)).map_err(to_py)?;
        Ok(*l.numer() as f64 / *l.denom() as f64)
    }

    /// When the 2-core is a single cycle: its vertices in the parent graph.
    fn bare_cycle(&self) -> Option<Vec<u32>> {
        self.inner.bare_cycle.clone()
    }

    /// Expands a kernel edge cycle to the parent vertex cycle it contracts.
    fn expand_cycle(&self, edges: Vec<u32>) -> PyResult<Vec<u32>> {
        expand_cycle(&self.inner, &edges).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Kernel(n_k={}, e_k={}, n2={})",
            self.inner.kernel.n(),
            self.inner.kernel.num_live_edges(),
            self.inner.n2
        )
    }
}

/// Uniform multigraph with m edges on n vertices.
#[pyfunction]
fn gnm(n: usize, m: usize, seed: u64) -> Graph {
    Graph {
        inner: sample_gnm(n, m, &mut SeedRng::new(seed)),
    }
}

/// The sequence model conditioned on minimum degree 3 everywhere.
#[pyfunction]
fn all_y_graph(n: usize, m: usize, seed: u64) -> PyResult<Graph> {
    let p = DegreeClassPartition::all_y(n);
    Ok(Graph {
        inner: sample_sequence_graph(&p, m, &mut SeedRng::new(seed)).map_err(to_py)?,
    })
}

/// Giant component -> 2-core -> weighted kernel.
#[pyfunction]
fn kernel_of(g: &Graph) -> PyResult<Kernel> {
    let (_core, k) = kernelize(&g.inner).map_err(to_py)?;
    Ok(Kernel { inner: k })
}

/// alpha from the fluid limit, integrated to sigma = 1 - 1e-5.
#[pyfunction]
#[pyo3(signature = (tol=1e-8))]
fn ode_alpha(tol: f64) -> PyResult<f64> {
    let traj = demode::integrate(demode::SIGMA, tol).map_err(to_py)?;
    Ok(demode::alpha(&traj))
}

/// 2-Greedy on a min-degree-3 instance with Exp weights; returns matching
/// statistics as JSON.
#[pyfunction]
#[pyo3(signature = (g, seed, eps1=0.01, weight_c=20.0))]
fn two_greedy(g: &Graph, seed: u64, eps1: f64, weight_c: f64) -> PyResult<String> {
    let p = DegreeClassPartition::all_y(g.inner.n());
    let mut rng = SeedRng::new(seed);
    let w = EdgeWeights::sample_real(g.inner.num_edge_slots(), weight_c, &mut rng);
    let (ms, trace) =
        twogreedy::run(g.inner.clone(), &w, &p, eps1, 0, &mut rng).map_err(to_py)?;
    let comps = twogreedy::matching_components(&ms).len();
    Ok(serde_json::json!({
        "matching_edges": ms.matching.len(),
        "matching_components": comps,
        "w_matching": ms.w_matching,
        "tau": ms.tau,
        "tau1": trace.tau1,
    })
    .to_string())
}

/// Reserve split + 2-Greedy + stitch on a min-degree-3 weighted instance;
/// returns the verified cycle (edge ids), its weight, and the report JSON.
#[pyfunction]
#[pyo3(signature = (g, weights, seed, stop_weight=0.0))]
fn long_cycle(
    g: &Graph,
    weights: Vec<u32>,
    seed: u64,
    stop_weight: f64,
) -> PyResult<(Vec<u32>, f64, String)> {
    if weights.len() != g.inner.num_edge_slots() {
        return Err(PyValueError::new_err(format!(
            "need one weight per edge ({} != {})",
            weights.len(),
            g.inner.num_edge_slots()
        )));
    }
    let w = EdgeWeights::from_lengths(weights);
    let mut params = CycleParams::default();
    params.stop_weight = stop_weight;
    let out =
        build_long_cycle(&g.inner, &w, &params, &mut SeedRng::new(seed)).map_err(to_py)?;
    verify_cycle(&g.inner, &out.cycle).map_err(to_py)?;
    let report = serde_json::to_string(&out.report).expect("serialize report");
    Ok((out.cycle, out.weight, report))
}

/// Runs a harness experiment (`ode`, `greedy`, `kernel`, `longcycle`,
/// `synthetic`, `probe`, `couple`, `bounds`) from a config JSON object and
/// returns the summary JSON.
#[pyfunction]
fn run_experiment(mode: &str, config_json: &str) -> PyResult<String> {
    let cfg: ExperimentConfig = serde_json::from_str(config_json)
        .map_err(|e| PyValueError::new_err(format!("config: {e}")))?;
    let res = match mode {
        "ode" => run_ode(&cfg).map(|(r, _)| r),
        "greedy" => run_greedy_trace(&cfg).map(|(r, _)| r),
        "kernel" => run_kernel(&cfg),
        "longcycle" => run_longcycle(&cfg),
        "synthetic" => run_synthetic(&cfg),
        "probe" => run_probe(&cfg),
        "couple" => run_couple(&cfg),
        "bounds" => run_bounds(&cfg),
        other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    }
    .map_err(to_py)?;
    Ok(res.to_json())
}

#[pymodule]
fn longcycle_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Graph>()?;
    m.add_class::<Kernel>()?;
    m.add_function(wrap_pyfunction!(gnm, m)?)?;
    m.add_function(wrap_pyfunction!(all_y_graph, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_of, m)?)?;
    m.add_function(wrap_pyfunction!(ode_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(two_greedy, m)?)?;
    m.add_function(wrap_pyfunction!(long_cycle, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
