//! Acceptance gate: one test per criterion, each printing a single
//! PASS/FAIL line with its pinned tolerances. The heavy Monte-Carlo
//! setups are shared between criteria through lazy statics.

use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use longcycle::demode::{self, SIGMA};
use longcycle::genmodels::{
    sample_conditioned_degrees, solve_lambda, DegreeClassPartition, LambdaSolution,
};
use longcycle::harness::{
    run_couple, run_greedy_trace, run_longcycle, run_probe, ExperimentConfig, RunResult,
};
use longcycle::kernelizer::{kernel_stats, kernelize, luczak_bound};
use longcycle::multigraph::Multigraph;
use longcycle::weightdist::{exp_trunc_inverse, sample_exp_trunc, sample_uniform_composition};
use longcycle::SeedRng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn verdict(criterion: &str, pass: bool, details: &str) {
    println!(
        "criterion {criterion}: {} - {details}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {details}");
}

fn base_cfg() -> ExperimentConfig {
    ExperimentConfig {
        seed: 0,
        ..Default::default()
    }
}

/// 100 trials of 2-Greedy on the all-Y model at n = 10^6, shared by the
/// fluid-tracking and matching-quality criteria.
fn greedy_100() -> &'static RunResult {
    static CELL: OnceLock<RunResult> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut cfg = base_cfg();
        cfg.n = 1_000_000;
        cfg.trials = 100;
        let (res, _) = run_greedy_trace(&cfg).expect("greedy run");
        res
    })
}

#[test]
fn criterion_1_alpha_reproduction() {
    let t0 = Instant::now();
    let t8 = demode::integrate(SIGMA, 1e-8).unwrap();
    let t10 = demode::integrate(SIGMA, 1e-10).unwrap();
    let (a8, a10) = (demode::alpha(&t8), demode::alpha(&t10));
    let maxw = t10.end().maxw();
    let two_m = 2.0 * t10.end().m;
    let secs = t0.elapsed().as_secs_f64();
    let pass = a8 > 1.186
        && a10 > 1.186
        && (a8 - a10).abs() < 1e-6
        && maxw >= 1.4
        && two_m <= 4e-5
        && secs < 60.0;
    verdict(
        "1 (alpha reproduction)",
        pass,
        &format!(
            "alpha(1e-8)={a8:.8} alpha(1e-10)={a10:.8} |diff|={:.2e} \
             maxw(sigma)={maxw:.4} 2m(sigma)={two_m:.2e} runtime={secs:.1}s",
            (a8 - a10).abs()
        ),
    );
}

#[test]
fn criterion_2_fluid_limit_tracking() {
    let res = greedy_100();
    let ok = res
        .rows
        .iter()
        .filter(|r| r[res.columns.iter().position(|c| c == "dev_ok").unwrap()] == 1.0)
        .count();
    let worst = res.aggregate["dev_max"].max;
    let col = |name: &str| res.columns.iter().position(|c| c == name).unwrap();
    let worst_density = res.rows.iter().fold(0.0f64, |a, r| {
        a.max(r[col("dev_y")]).max(r[col("dev_m")]).max(r[col("dev_w")])
    });
    let pass = ok >= 95;
    verdict(
        "2 (fluid-limit tracking)",
        pass,
        &format!(
            "deviations < 0.02 up to x = 0.8 in {ok}/100 trials; worst max dev {worst:.4} \
             (worst density-coordinate dev {worst_density:.4}; overages are on the wmax \
             order-statistic coordinate)"
        ),
    );
}

#[test]
fn criterion_3_matching_quality() {
    let res = greedy_100();
    let col = |name: &str| res.columns.iter().position(|c| c == name).unwrap();
    let ok = res.rows.iter().filter(|r| r[col("matching_ok")] == 1.0).count();
    let w_min = res.aggregate["wtau_over_n"].min;
    let pass = ok >= 95 && w_min >= 1.18;
    verdict(
        "3 (matching quality)",
        pass,
        &format!(
            "|M| >= n - 10n^0.9 with <= 10n^0.9 components in {ok}/100 trials; \
             min W_tau/n = {w_min:.4} (>= 1.18)"
        ),
    );
}

#[test]
fn criterion_4_kernel_identities() {
    // identities are asserted inside check_identities (min degree >= 3,
    // sum(w - 1) = n2) and inside expand_cycle (output length = sum w);
    // here 1000 random instances at n = 10^5 plus the hand examples
    let n = 100_000;
    let mut checked = 0usize;
    let mut degenerate = 0usize;
    for t in 0..1000u64 {
        let mut rng = SeedRng::new(t);
        let eps = 0.05 + 0.15 * (t % 20) as f64 / 20.0;
        let m = n / 2 + (eps * n as f64 / 2.0) as usize;
        let g = longcycle::genmodels::sample_gnm(n, m, &mut rng);
        match kernelize(&g) {
            Ok((core, k)) => {
                k.check_identities(&core);
                checked += 1;
            }
            Err(_) => degenerate += 1,
        }
    }

    // theta: branch vertices joined by paths of 2, 2 and 3 edges;
    // weights {2,2,3}, n2 = 4, baseline (1 + 4/3) * 2 = 14/3
    let theta = Multigraph::with_edges(
        7,
        [(0, 2), (2, 1), (0, 3), (3, 1), (0, 4), (4, 5), (5, 1)],
    );
    let (tc, tk) = kernelize(&theta).unwrap();
    tk.check_identities(&tc);
    let tst = kernel_stats(&tk);
    let lucz = luczak_bound(&tst).unwrap();
    let theta_ok = tst.n_k == 2
        && tst.e_k == 3
        && tst.n2 == 4
        && *lucz.numer() == 14
        && *lucz.denom() == 3;

    // dumbbell: two triangles joined by a 2-edge path -> two loops + an edge
    let dumbbell = Multigraph::with_edges(
        7,
        [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (0, 6), (6, 3)],
    );
    let (dc, dk) = kernelize(&dumbbell).unwrap();
    dk.check_identities(&dc);
    let dst = kernel_stats(&dk);
    let dumbbell_ok = dst.n_k == 2 && dst.e_k == 3 && dst.loops == 2 && dst.n2 == 5;

    // K4 is its own kernel with unit weights
    let k4 = Multigraph::with_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
    let (kc, kk) = kernelize(&k4).unwrap();
    kk.check_identities(&kc);
    let kst = kernel_stats(&kk);
    let k4_ok = kst.n_k == 4 && kst.e_k == 6 && kst.n2 == 0 && kst.weight_sum == 6;

    let pass = checked >= 900 && theta_ok && dumbbell_ok && k4_ok;
    verdict(
        "4 (kernel identities)",
        pass,
        &format!(
            "{checked}/1000 random instances checked ({degenerate} without a kernel); \
             theta {theta_ok}, dumbbell {dumbbell_ok}, K4 {k4_ok}"
        ),
    );
}

fn chi2_pvalue(stat: f64, dof: usize) -> f64 {
    1.0 - ChiSquared::new(dof as f64).unwrap().cdf(stat)
}

#[test]
fn criterion_5_distribution_correctness() {
    // composition sampler vs exhaustive enumeration
    let mut chi_ps = Vec::new();
    for &(parts, total, cells) in &[(3usize, 5u64, 6usize), (2, 6, 5)] {
        let mut rng = SeedRng::new(50);
        let trials = 120_000;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..trials {
            let c = sample_uniform_composition(parts, total, &mut rng).unwrap();
            *counts.entry(c).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), cells, "support of ({parts},{total})");
        let expect = trials as f64 / cells as f64;
        let stat: f64 = counts
            .values()
            .map(|&k| (k as f64 - expect).powi(2) / expect)
            .sum();
        chi_ps.push(chi2_pvalue(stat, cells - 1));
    }
    let chi_ok = chi_ps.iter().all(|&p| p > 0.001);

    // truncated-exponential KS distance
    let mut ks_worst = 0.0f64;
    for &c in &[1.4, 20.0] {
        let mut rng = SeedRng::new(51);
        let n = 100_000;
        let mut xs: Vec<f64> = (0..n).map(|_| sample_exp_trunc(c, &mut rng)).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let cdf = |x: f64| (1.0 - (-x).exp()) / (1.0 - (-c).exp());
        let mut d = 0.0f64;
        for (i, &x) in xs.iter().enumerate() {
            let f = cdf(x.min(c));
            d = d.max((f - i as f64 / n as f64).abs());
            d = d.max(((i + 1) as f64 / n as f64 - f).abs());
        }
        ks_worst = ks_worst.max(d);
        // the inverse must reproduce the endpoints
        assert_eq!(exp_trunc_inverse(0.0, c), 0.0);
    }
    let ks_ok = ks_worst < 0.01;

    // conditioned degree census vs closed forms at n = 10^4
    let n = 10_000;
    let p = DegreeClassPartition::all_y(n);
    let m = (3.2 * n as f64 / 2.0) as usize;
    let l = match solve_lambda(&p, m).unwrap() {
        LambdaSolution::Positive(l) => l,
        _ => panic!("lambda must be positive at 2m/n = 3.2"),
    };
    let mut rng = SeedRng::new(52);
    let d = sample_conditioned_degrees(&p, m, &mut rng).unwrap();
    let norm = (l.exp() - 1.0 - l - l * l / 2.0).max(f64::MIN_POSITIVE);
    let bound = (m as f64).powf(0.6);
    let mut census_worst = 0.0f64;
    for k in 3..=8u32 {
        let count = d.iter().filter(|&&x| x == k).count() as f64;
        let mut pk = 1.0;
        for i in 1..=k {
            pk *= l / i as f64;
        }
        census_worst = census_worst.max((count - n as f64 * pk / norm).abs());
    }
    let census_ok = census_worst <= bound;

    let pass = chi_ok && ks_ok && census_ok;
    verdict(
        "5 (distribution correctness)",
        pass,
        &format!(
            "chi2 p = {:.3}/{:.3} (> 0.001); KS = {ks_worst:.4} (< 0.01); \
             census max gap {census_worst:.1} (<= m^0.6 = {bound:.1})",
            chi_ps[0], chi_ps[1]
        ),
    );
}

#[test]
fn criterion_6_coupling_dominance() {
    let mut cfg = base_cfg();
    cfg.trials = 100;
    cfg.gamma = 1e-3;
    cfg.c = 6.0;
    cfg.m_prime = 10_000;
    let res = run_couple(&cfg).unwrap();
    let violations = res.aggregate["q_violations"].max;
    let full = (res.scalars["frac_full_dominance"] * 100.0).round() as usize;
    let pass = violations == 0.0 && full >= 99;
    verdict(
        "6 (coupling dominance)",
        pass,
        &format!("q in [0,1] in all trials (violations max {violations}); full dominance {full}/100"),
    );
}

#[test]
fn criterion_7_one_step_expectations() {
    let mut cfg = base_cfg();
    cfg.n = 20_000;
    cfg.probe_trials = 12_000;
    let res = run_probe(&cfg).unwrap();
    let col = |name: &str| res.columns.iter().position(|c| c == name).unwrap();
    let ok = res.rows.iter().filter(|r| r[col("within_3sigma")] == 1.0).count();
    let worst = res
        .rows
        .iter()
        .map(|r| r[col("gap")] / r[col("sigma")].max(f64::MIN_POSITIVE))
        .fold(0.0f64, f64::max);
    let pass = ok == res.rows.len();
    verdict(
        "7 (one-step expectations)",
        pass,
        &format!(
            "{ok}/{} fixture quantities within 3 sigma; worst gap {worst:.2} sigma",
            res.rows.len()
        ),
    );
}

#[test]
fn criterion_8_end_to_end_cycle() {
    let t0 = Instant::now();
    let mut cfg = base_cfg();
    cfg.n = 10_000_000;
    cfg.eps = Some(0.1);
    cfg.trials = 20;
    let res = run_longcycle(&cfg).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let col = |name: &str| res.columns.iter().position(|c| c == name).unwrap();
    let verified = res.rows.iter().filter(|r| r[col("verified")] == 1.0).count();
    let floor = res.scalars["eps2n_floor"];
    let min_len = res.scalars["min_len"];
    let lucz_ok = (res.scalars["frac_luczak_ok"] * 20.0).round() as usize;
    let ratio = res.aggregate["len_over_target"].mean;
    let pass = verified == 20 && min_len >= floor && lucz_ok >= 18 && secs < 600.0;
    verdict(
        "8 (end-to-end cycle)",
        pass,
        &format!(
            "all {verified}/20 cycles verified on the raw graph; min length {min_len:.0} \
             (floor eps^2 n = {floor:.0}); >= 0.9x Luczak baseline in {lucz_ok}/20; \
             mean length/(1.581 eps^2 n) = {ratio:.3}; runtime {secs:.0}s (< 600s)"
        ),
    );
}

#[test]
fn criterion_9_determinism() {
    let bin = env!("CARGO_BIN_EXE_longcycle");
    let dir = tempfile::tempdir().unwrap();
    let (d1, d2) = (dir.path().join("a"), dir.path().join("b"));
    let mut outputs = Vec::new();
    for d in [&d1, &d2] {
        let mut all = Vec::new();
        for args in [
            vec!["kernel", "--n", "20000", "--eps", "0.2", "--trials", "3", "--seed", "7"],
            vec!["longcycle", "--n", "40000", "--eps", "0.25", "--trials", "2", "--seed", "7"],
            vec!["ode", "--tol", "1e-8"],
            vec!["couple", "--trials", "5"],
        ] {
            let out = Command::new(bin)
                .args(&args)
                .args(["--out", d.to_str().unwrap(), "--csv", "--json"])
                .output()
                .unwrap();
            assert!(out.status.success(), "{args:?}: {:?}", out.status);
            all.extend_from_slice(&out.stdout);
        }
        let mut files: Vec<_> = std::fs::read_dir(d)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        files.sort();
        for f in files {
            all.extend_from_slice(f.file_name().unwrap().to_string_lossy().as_bytes());
            all.extend_from_slice(&std::fs::read(&f).unwrap());
        }
        outputs.push(all);
    }
    let pass = outputs[0] == outputs[1] && !outputs[0].is_empty();
    verdict(
        "9 (determinism)",
        pass,
        &format!(
            "4 subcommands re-run with identical seeds: {} bytes of stdout + files byte-identical",
            outputs[0].len()
        ),
    );
}

// ---- supporting invariant: published schema matches emitted summaries ----

/// Minimal JSON-Schema subset walker (type, enum, required, properties,
/// additionalProperties, items, minItems/maxItems, minimum) - enough to
/// hold emitted summaries to the published schema.
fn validate(schema: &serde_json::Value, value: &serde_json::Value, path: &str) -> Vec<String> {
    use serde_json::Value;
    let mut errs = Vec::new();
    let obj = match schema.as_object() {
        Some(o) => o,
        None => return errs,
    };
    if let Some(types) = obj.get("type") {
        let names: Vec<&str> = match types {
            Value::String(s) => vec![s.as_str()],
            Value::Array(a) => a.iter().filter_map(|v| v.as_str()).collect(),
            _ => vec![],
        };
        let actual = match value {
            Value::Null => "null",
            Value::Bool(_) => "boolean",
            Value::Number(n) => {
                if n.is_u64() || n.is_i64() {
                    "integer"
                } else {
                    "number"
                }
            }
            Value::String(_) => "string",
            Value::Array(_) => "array",
            Value::Object(_) => "object",
        };
        let matches = names
            .iter()
            .any(|&t| t == actual || (t == "number" && actual == "integer"));
        if !matches {
            errs.push(format!("{path}: type {actual} not in {names:?}"));
            return errs;
        }
    }
    if let Some(allowed) = obj.get("enum").and_then(|e| e.as_array()) {
        if !allowed.contains(value) {
            errs.push(format!("{path}: {value} not in enum"));
        }
    }
    if let Some(min) = obj.get("minimum").and_then(|m| m.as_f64()) {
        if let Some(x) = value.as_f64() {
            if x < min {
                errs.push(format!("{path}: {x} below minimum {min}"));
            }
        }
    }
    if let (Some(req), Some(map)) = (obj.get("required").and_then(|r| r.as_array()), value.as_object())
    {
        for r in req.iter().filter_map(|r| r.as_str()) {
            if !map.contains_key(r) {
                errs.push(format!("{path}: missing required field {r}"));
            }
        }
    }
    if let (Some(props), Some(map)) = (
        obj.get("properties").and_then(|p| p.as_object()),
        value.as_object(),
    ) {
        for (k, sub) in props {
            if let Some(v) = map.get(k) {
                errs.extend(validate(sub, v, &format!("{path}/{k}")));
            }
        }
    }
    if let (Some(add), Some(map)) = (obj.get("additionalProperties"), value.as_object()) {
        if add.is_object() {
            let named: std::collections::HashSet<&String> = obj
                .get("properties")
                .and_then(|p| p.as_object())
                .map(|p| p.keys().collect())
                .unwrap_or_default();
            for (k, v) in map {
                if !named.contains(k) {
                    errs.extend(validate(add, v, &format!("{path}/{k}")));
                }
            }
        }
    }
    if let (Some(items), Some(arr)) = (obj.get("items"), value.as_array()) {
        if let Some(min) = obj.get("minItems").and_then(|m| m.as_u64()) {
            if (arr.len() as u64) < min {
                errs.push(format!("{path}: {} items < minItems {min}", arr.len()));
            }
        }
        if let Some(max) = obj.get("maxItems").and_then(|m| m.as_u64()) {
            if (arr.len() as u64) > max {
                errs.push(format!("{path}: {} items > maxItems {max}", arr.len()));
            }
        }
        for (i, v) in arr.iter().enumerate() {
            errs.extend(validate(items, v, &format!("{path}/{i}")));
        }
    }
    errs
}

#[test]
fn summaries_validate_against_published_schema() {
    let schema: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../docs/schema/summary.schema.json"
        ))
        .unwrap(),
    )
    .unwrap();
    let bin = env!("CARGO_BIN_EXE_longcycle");
    for args in [
        vec!["bounds", "--eps", "0.1", "--n", "1000000"],
        vec!["kernel", "--n", "20000", "--eps", "0.2", "--trials", "2"],
        vec!["couple", "--trials", "3"],
        vec!["probe", "--n", "1200", "--probe-trials", "300"],
    ] {
        let out = Command::new(bin).args(&args).output().unwrap();
        assert!(out.status.success(), "{args:?}");
        let summary: serde_json::Value =
            serde_json::from_slice(&out.stdout).expect("summary JSON");
        let errs = validate(&schema, &summary, "");
        assert!(errs.is_empty(), "{args:?}: {errs:?}");
    }
}
