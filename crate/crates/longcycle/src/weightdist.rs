//! Edge-weight distributions: truncated exponentials, sum-conditioned
//! geometrics via uniform compositions, and the geometric/exponential
//! coupling with its dominance report.

use crate::rng::SeedRng;
use crate::Error;
use std::collections::HashSet;

/// Edge weights for 2-Greedy, keyed by edge id. Real mode carries truncated
/// exponentials in [0, C]; integer mode carries path lengths >= 1.
#[derive(Clone, Debug)]
pub enum EdgeWeights {
    Real(Vec<f64>),
    Integer(Vec<u32>),
}

impl EdgeWeights {
    pub fn len(&self) -> usize {
        match self {
            EdgeWeights::Real(v) => v.len(),
            EdgeWeights::Integer(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, e: usize) -> f64 {
        match self {
            EdgeWeights::Real(v) => v[e],
            EdgeWeights::Integer(v) => v[e] as f64,
        }
    }

    /// Independent Exp_{<=C}(1) weights for `num_edges` edges.
    pub fn sample_real(num_edges: usize, c: f64, rng: &mut SeedRng) -> Self {
        EdgeWeights::Real((0..num_edges).map(|_| sample_exp_trunc(c, rng)).collect())
    }

    pub fn from_lengths(lengths: Vec<u32>) -> Self {
        assert!(lengths.iter().all(|&w| w >= 1), "integer weights must be >= 1");
        EdgeWeights::Integer(lengths)
    }

    pub fn check(&self, c: f64) {
        match self {
            EdgeWeights::Real(v) => {
                assert!(v.iter().all(|&x| (0.0..=c).contains(&x)));
            }
            EdgeWeights::Integer(v) => assert!(v.iter().all(|&w| w >= 1)),
        }
    }
}

/// Inverse CDF of Exp(1) conditioned on being at most `c`.
pub fn exp_trunc_inverse(u: f64, c: f64) -> f64 {
    debug_assert!(c > 0.0 && (0.0..=1.0).contains(&u));
    -(1.0 - u * (-(-c).exp_m1())).ln()
}

/// Draws Exp_{<=C}(1) by inversion.
pub fn sample_exp_trunc(c: f64, rng: &mut SeedRng) -> f64 {
    exp_trunc_inverse(rng.f64(), c)
}

/// Mean of Exp_{<=C}(1): (1 - e^{-C}(C+1)) / (1 - e^{-C}).
pub fn exp_trunc_mean(c: f64) -> f64 {
    let e = (-c).exp();
    (1.0 - e * (c + 1.0)) / (1.0 - e)
}

/// Uniformly random composition of `total` into `parts` positive integers,
/// via `parts - 1` distinct cut points in [total - 1].
pub fn sample_uniform_composition(
    parts: usize,
    total: u64,
    rng: &mut SeedRng,
) -> Result<Vec<u64>, Error> {
    if parts == 0 || total < parts as u64 {
        return Err(Error::Infeasible(format!(
            "no composition of {total} into {parts} positive parts"
        )));
    }
    let k = parts - 1;
    let range = total - 1;
    // Floyd's algorithm: k distinct values from 1..=range
    let mut cuts: HashSet<u64> = HashSet::with_capacity(k);
    for j in (range - k as u64 + 1)..=range {
        let t = rng.u64(j) + 1;
        if !cuts.insert(t) {
            cuts.insert(j);
        }
    }
    let mut cuts: Vec<u64> = cuts.into_iter().collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(parts);
    let mut prev = 0;
    for c in cuts {
        out.push(c - prev);
        prev = c;
    }
    out.push(total - prev);
    debug_assert_eq!(out.iter().sum::<u64>(), total);
    Ok(out)
}

/// Geom(gamma) on {1, 2, ...} by inversion.
pub fn sample_geom(gamma: f64, rng: &mut SeedRng) -> u64 {
    let u = rng.f64();
    ((1.0 - u).ln() / (1.0 - gamma).ln()).ceil().max(1.0) as u64
}

#[derive(Clone, Debug)]
pub struct CouplingReport {
    pub gamma_prime: f64,
    /// integer tail threshold: the q formula applies for i <= this, q = 1 above
    pub tail_threshold: u64,
    pub q_min: f64,
    pub q_max: f64,
    /// indices where q fell outside [0, 1] before clamping (numerical error)
    pub q_violations: usize,
    pub pairs: Vec<(u64, f64)>,
    /// fraction of coordinates with X'_i >= Y_i / gamma'
    pub dominance_fraction: f64,
    pub tail_redraws: usize,
}

/// Couples Geom(gamma') draws X' to Exp_{<=C}(1) draws Y so that
/// X'_i >= Y_i / gamma' coordinatewise. gamma' solves
/// (m'/gamma) - (m'/gamma)^{2/3} = m'/gamma'. On each full cell
/// ((i-1)gamma', i*gamma'] with i <= floor(C/gamma') the draw Y is kept with
/// probability 1 - q_i; otherwise (and on the partial last cell) X' is a
/// fresh geometric conditioned above the threshold, which preserves the
/// Geom(gamma') marginal exactly.
pub fn couple_geom_exp(
    gamma: f64,
    c: f64,
    m_prime: usize,
    rng: &mut SeedRng,
) -> Result<CouplingReport, Error> {
    if !(0.0 < gamma && gamma < 0.01) {
        return Err(Error::Config(format!("gamma {gamma} outside (0, 0.01)")));
    }
    if (-c).exp() < gamma {
        return Err(Error::Config(format!("need e^-C >= gamma (C={c}, gamma={gamma})")));
    }
    let ratio = m_prime as f64 / gamma;
    let denom = ratio - ratio.powf(2.0 / 3.0);
    if denom <= 0.0 {
        return Err(Error::Config("m'/gamma too small to define gamma'".into()));
    }
    let gamma_prime = m_prime as f64 / denom;
    let t = (c / gamma_prime).floor() as u64;

    // q_i for i = 1..=t
    let norm = -(-c).exp_m1(); // 1 - e^{-C}
    let cell = -(-gamma_prime).exp_m1(); // 1 - e^{-gamma'}
    let mut q = Vec::with_capacity(t as usize + 1);
    let mut q_min = f64::INFINITY;
    let mut q_max = f64::NEG_INFINITY;
    let mut q_violations = 0;
    for i in 1..=t {
        let exp_mass = (-(i as f64 - 1.0) * gamma_prime).exp() * cell / norm;
        let geom_mass = gamma_prime * (1.0 - gamma_prime).powi(i as i32 - 1);
        let qi = (exp_mass - geom_mass) / exp_mass;
        q_min = q_min.min(qi);
        q_max = q_max.max(qi);
        if !(0.0..=1.0).contains(&qi) {
            q_violations += 1;
        }
        q.push(qi.clamp(0.0, 1.0));
    }

    let mut pairs = Vec::with_capacity(m_prime);
    let mut dominated = 0usize;
    let mut tail_redraws = 0usize;
    for _ in 0..m_prime {
        let y = sample_exp_trunc(c, rng);
        let i = (y / gamma_prime).ceil().max(1.0) as u64;
        let x = if i <= t && rng.f64() >= q[i as usize - 1] {
            i
        } else {
            tail_redraws += 1;
            t + sample_geom(gamma_prime, rng)
        };
        if x as f64 >= y / gamma_prime {
            dominated += 1;
        }
        pairs.push((x, y));
    }
    Ok(CouplingReport {
        gamma_prime,
        tail_threshold: t,
        q_min,
        q_max,
        q_violations,
        dominance_fraction: dominated as f64 / m_prime as f64,
        pairs,
        tail_redraws,
    })
}
