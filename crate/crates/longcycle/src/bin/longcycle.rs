use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use longcycle::harness::{
    run_bounds, run_couple, run_greedy_trace, run_kernel, run_longcycle, run_ode, run_probe,
    run_synthetic, ExperimentConfig, RunResult,
};
use longcycle::Error;

/// Long cycles in sparse random multigraphs: seeded pipeline experiments.
#[derive(Parser)]
#[command(name = "longcycle", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the fluid-limit ODE and report alpha
    Ode(Common),
    /// 2-Greedy on the all-Y model, traced against the fluid limit
    Greedy(Common),
    /// Sample G(n,m) and report kernel statistics
    Kernel(Common),
    /// Full pipeline: sample, kernelize, match, stitch, verify
    Longcycle(Common),
    /// Kernel-level pipeline on the synthetic all-Y model
    Synthetic(Common),
    /// One-step expectation probes on census fixtures
    Probe(Common),
    /// Geometric/exponential coupling dominance trials
    Couple(Common),
    /// Closed-form length bounds at (n, s)
    Bounds(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// JSON config file mirroring these flags; explicit flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// supercriticality via eps (m = n/2 + eps*n/2)
    #[arg(long)]
    eps: Option<f64>,
    /// supercriticality via s (m = n/2 + s)
    #[arg(long)]
    s: Option<usize>,
    /// edge count, given directly
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// ODE integrator tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// fluid-limit comparison horizon
    #[arg(long = "sigma-prime")]
    sigma_prime: Option<f64>,
    /// truncation point of the Exp edge weights
    #[arg(long = "weight-c")]
    weight_c: Option<f64>,
    /// use unit edge weights instead of Exp
    #[arg(long = "unit-weights")]
    unit_weights: bool,
    /// coupling grid parameter
    #[arg(long)]
    gamma: Option<f64>,
    /// coupling truncation point
    #[arg(long)]
    c: Option<f64>,
    /// coupling coordinate count
    #[arg(long = "m-prime")]
    m_prime: Option<usize>,
    /// resamples per one-step probe fixture
    #[arg(long = "probe-trials")]
    probe_trials: Option<usize>,
    /// 2-Greedy stopping fraction
    #[arg(long)]
    eps1: Option<f64>,
    /// Hamilton heuristic step budget
    #[arg(long)]
    budget: Option<u64>,
    /// stop the parameter ladder at this cycle weight (0 = auto)
    #[arg(long = "stop-weight")]
    stop_weight: Option<f64>,
    /// write summary JSON and trial CSV into this directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// print the summary JSON to stdout (default)
    #[arg(long)]
    json: bool,
    /// print the trial table CSV to stdout
    #[arg(long)]
    csv: bool,
}

impl Common {
    fn build_config(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("config {}: {e}", path.display())))?
            }
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = self.$field { cfg.$field = v; } )* }
        }
        set!(n, seed, trials, tol, sigma_prime, weight_c, gamma, c, m_prime, probe_trials);
        if self.eps.is_some() {
            cfg.eps = self.eps;
        }
        if self.s.is_some() {
            cfg.s = self.s;
        }
        if self.m.is_some() {
            cfg.m = self.m;
        }
        if self.unit_weights {
            cfg.unit_weights = true;
        }
        if let Some(v) = self.eps1 {
            cfg.params.eps1 = v;
        }
        if let Some(v) = self.budget {
            cfg.params.budget = v;
        }
        if let Some(v) = self.stop_weight {
            cfg.params.stop_weight = v;
        }
        if cfg.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        Ok(cfg)
    }

    fn emit(&self, res: &RunResult, extra: &[(&str, String)]) -> Result<(), Error> {
        if let Some(dir) = &self.out {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(format!("{}_summary.json", res.mode)), res.to_json())?;
            std::fs::write(dir.join(format!("{}_trials.csv", res.mode)), res.to_csv())?;
            for (name, text) in extra {
                std::fs::write(dir.join(name), text)?;
            }
        }
        if self.csv {
            print!("{}", res.to_csv());
        }
        if self.json || !self.csv {
            println!("{}", res.to_json());
        }
        Ok(())
    }
}

fn run(cmd: &Cmd) -> Result<(), Error> {
    let (common, res, extra) = match cmd {
        Cmd::Ode(c) => {
            let cfg = c.build_config()?;
            let (res, traj) = run_ode(&cfg)?;
            (c, res, vec![("trajectory.csv", traj.to_csv(1000))])
        }
        Cmd::Greedy(c) => {
            let cfg = c.build_config()?;
            let (res, trace) = run_greedy_trace(&cfg)?;
            (c, res, vec![("trace.csv", trace.to_csv())])
        }
        Cmd::Kernel(c) => (c, run_kernel(&c.build_config()?)?, vec![]),
        Cmd::Longcycle(c) => (c, run_longcycle(&c.build_config()?)?, vec![]),
        Cmd::Synthetic(c) => (c, run_synthetic(&c.build_config()?)?, vec![]),
        Cmd::Probe(c) => (c, run_probe(&c.build_config()?)?, vec![]),
        Cmd::Couple(c) => (c, run_couple(&c.build_config()?)?, vec![]),
        Cmd::Bounds(c) => (c, run_bounds(&c.build_config()?)?, vec![]),
    };
    common.emit(&res, &extra)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own usage text; config problems exit 3
            let _ = e.print();
            return ExitCode::from(3);
        }
    };
    match run(&cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ (Error::Config(_) | Error::Infeasible(_) | Error::Format(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
