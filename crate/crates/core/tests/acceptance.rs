//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line to
//! the real stdout (not the captured test output), then asserts.

mod common;

use std::io::Write;
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use common::{
    finite_difference_gradient, grid_search, lambda_max, monte_carlo_fisher, random_problem, rel_error,
    state_frequencies, total_variation,
};
use isinglearn::conditions::{fisher_blocks, fisher_matrix, Scope};
use isinglearn::estimators::{estimate, MethodId};
use isinglearn::experiment::{generate_mixed_coupling, run_experiment, ExperimentConfig, ExperimentRecord};
use isinglearn::metrics::{accuracy, err};
use isinglearn::model::{conditional_prob_plus, enumerate_distribution, pair_count, state_of, StateDistribution};
use isinglearn::sampling::{rng_from_seed, sample_exact, sample_gibbs, GibbsConfig};
use isinglearn::solver::{loss_and_gradient, solve};
use isinglearn::{Dataset, EdgeVector, IsingModel};
use rand::Rng;

fn report(id: u32, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("criterion {id}: {verdict} {detail}\n");
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
}

#[test]
fn criterion_01_gradient_matches_finite_differences() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut rng = rng_from_seed(1);
    for k in 0..100u64 {
        let m = rng.gen_range(10..=200);
        let q = rng.gen_range(1..=50);
        let p = random_problem(1000 + k, m, q, 0.0);
        let beta: Vec<f64> = (0..q).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let (_, g) = loss_and_gradient(&p.to_problem(), &beta).unwrap();
        worst = worst.max(rel_error(&g, &finite_difference_gradient(&p, &beta, 1e-5)));
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst < 1e-6 && secs < 10.0;
    report(1, pass, &format!("max rel error {worst:.2e} (< 1e-6), {secs:.2} s (< 10 s)"));
    assert!(pass);
}

#[test]
fn criterion_02_solver_optimality() {
    let start = Instant::now();
    let mut worst_kkt = 0.0f64;
    let mut all_converged = true;
    let mut rng = rng_from_seed(2);
    for k in 0..50u64 {
        let m = rng.gen_range(20..=200);
        let q = rng.gen_range(1..=50);
        let mut p = random_problem(2000 + k, m, q, 0.0);
        p.lambda = rng.gen_range(0.01..0.9) * lambda_max(&p);
        let fit = solve(&p.to_problem(), None).unwrap();
        all_converged &= fit.converged;
        if fit.converged {
            worst_kkt = worst_kkt.max(p.kkt_violation(&fit.beta));
        }
    }
    let mut worst_gap = 0.0f64;
    for k in 0..10u64 {
        let mut p = random_problem(3000 + k, 60, 1 + k as usize % 3, 0.0);
        p.lambda = 0.15 * lambda_max(&p);
        let fit = solve(&p.to_problem(), None).unwrap();
        let (_, grid) = grid_search(&p, 5.0);
        worst_gap = worst_gap.max(p.objective(&fit.beta) - grid);
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = all_converged && worst_kkt <= 1e-6 && worst_gap <= 1e-6 && secs < 30.0;
    report(
        2,
        pass,
        &format!(
            "all converged {all_converged}, max KKT {worst_kkt:.2e} (<= 1e-6), max gap to grid {worst_gap:.2e} (<= 1e-6), {secs:.2} s (< 30 s)"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_03_conditionals_match_enumeration() {
    let mut rng = rng_from_seed(3);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let p = rng.gen_range(2..=8);
        let theta: Vec<f64> = (0..pair_count(p)).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let m = EdgeVector::new(p, theta).unwrap().unpack().unwrap();
        let dist = enumerate_distribution(&m).unwrap();
        for k in 0..dist.len() {
            let x = state_of(p, k);
            for r in 0..p {
                let mut plus = x.clone();
                plus[r] = 1;
                let mut minus = x.clone();
                minus[r] = -1;
                let a = dist.probs()[StateDistribution::index_of(&plus)];
                let b = dist.probs()[StateDistribution::index_of(&minus)];
                let direct = conditional_prob_plus(&m, r, &x).unwrap();
                worst = worst.max((direct - a / (a + b)).abs());
            }
        }
    }
    let pass = worst < 1e-10;
    report(3, pass, &format!("max abs diff {worst:.2e} (< 1e-10) over 20 models"));
    assert!(pass);
}

#[test]
fn criterion_04_gibbs_fidelity() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..5u64 {
        let m = generate_mixed_coupling(4, 0.5, 0.5, 400 + seed).unwrap();
        let exact = enumerate_distribution(&m).unwrap();
        let cfg = GibbsConfig { burn_in: 1000, thinning: 10, seed };
        let data = sample_gibbs(&m, 100_000, &cfg).unwrap();
        worst = worst.max(total_variation(&state_frequencies(&data), exact.probs()));
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst < 0.02 && secs < 60.0;
    report(4, pass, &format!("max TV {worst:.4} (< 0.02) over 5 models, {secs:.2} s (< 60 s)"));
    assert!(pass);
}

#[test]
fn criterion_05_two_node_collapse() {
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let theta = if seed % 2 == 0 { 0.5 } else { -0.5 };
        let truth = IsingModel::from_edges(2, &[(0, 1, theta)]).unwrap();
        let data = sample_exact(&truth, 2000, 500 + seed).unwrap();
        for lambda in [None, Some(0.05)] {
            let gl = estimate(&data, MethodId::GL, lambda).unwrap().model.coupling(0, 1);
            for method in [MethodId::NLm, MethodId::NLM] {
                let nl = estimate(&data, method, lambda).unwrap().model.coupling(0, 1);
                worst = worst.max((gl - nl).abs());
            }
        }
    }
    let pass = worst < 1e-4;
    report(5, pass, &format!("max |GL - NL| {worst:.2e} (< 1e-4) over 10 seeds"));
    assert!(pass);
}

const TREND_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

/// Trend setup; `None` keeps the config's default master seed.
fn trend_config(master_seed: Option<u64>, n_list: Vec<usize>) -> ExperimentConfig {
    let seed = master_seed.map(|s| format!(r#", "master_seed": {s}"#)).unwrap_or_default();
    ExperimentConfig::from_json_str(&format!(
        r#"{{"p": 10, "density": 0.2, "coupling_magnitude": 0.5, "n_list": {n_list:?}, "replicates": 20{seed}}}"#
    ))
    .unwrap()
}

fn mean_of(records: &[ExperimentRecord], method: MethodId, n: usize, f: impl Fn(&ExperimentRecord) -> f64) -> f64 {
    let v: Vec<f64> = records.iter().filter(|r| r.method == method && r.n == n).map(f).collect();
    v.iter().sum::<f64>() / v.len() as f64
}

/// Records of the default-seed trend experiment, shared by criteria 6 and 7.
fn default_seed_records() -> &'static (Vec<ExperimentRecord>, f64) {
    static RUN: OnceLock<(Vec<ExperimentRecord>, f64)> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = Instant::now();
        let records = run_experiment(&trend_config(None, vec![250, 1000, 4000])).unwrap();
        (records, start.elapsed().as_secs_f64())
    })
}

#[test]
fn criterion_06_accuracy_nondecreasing_in_n() {
    let (records, secs) = default_seed_records();
    let ns = [250, 1000, 4000];
    let mut pass = *secs < 600.0;
    let mut parts = Vec::new();
    for method in MethodId::ALL {
        let means: Vec<f64> = ns.iter().map(|&n| mean_of(records, method, n, |r| r.accuracy)).collect();
        let monotone = means.windows(2).all(|w| w[1] >= w[0]);
        pass &= monotone;
        parts.push(format!(
            "{method} {:.4}/{:.4}/{:.4}{}",
            means[0],
            means[1],
            means[2],
            if monotone { "" } else { " (decreasing step)" }
        ));
    }
    report(
        6,
        pass,
        &format!("mean accuracy at n=250/1000/4000, default master_seed: {}; {secs:.1} s (< 600 s)", parts.join(", ")),
    );
    assert!(pass);
}

fn gl_advantage(records: &[ExperimentRecord]) -> (bool, [f64; 3]) {
    let e = MethodId::ALL.map(|m| mean_of(records, m, 1000, |r| r.err));
    let [nlm, nl_max, gl] = e;
    (gl <= nlm && gl <= nl_max, e)
}

#[test]
fn criterion_07_global_err_advantage() {
    let (records, _) = default_seed_records();
    let (default_ok, e) = gl_advantage(records);
    let mut lines = vec![format!("default seed: NLm {:.4} NLM {:.4} GL {:.4}", e[0], e[1], e[2])];
    let mut extra_ok = 0;
    for seed in TREND_SEEDS {
        let (ok, e) = gl_advantage(&run_experiment(&trend_config(Some(seed), vec![1000])).unwrap());
        extra_ok += usize::from(ok);
        lines.push(format!("seed {seed}: NLm {:.4} NLM {:.4} GL {:.4}", e[0], e[1], e[2]));
    }
    let pass = default_ok && extra_ok >= 4;
    report(
        7,
        pass,
        &format!(
            "mean Err at n=1000, GL <= both node-wise: default seed {default_ok}, extra seeds {extra_ok}/5 (need 4); {}",
            lines.join("; ")
        ),
    );

    // information only: GL with its penalty rescaled to the node-wise per-edge weight
    let mut matched = trend_config(None, vec![1000]);
    matched.methods = vec![MethodId::GL];
    matched.lambda_override = Some(MethodId::NLm.default_lambda(10, 1000) * 2.0 / 10.0);
    let gl_matched = mean_of(&run_experiment(&matched).unwrap(), MethodId::GL, 1000, |r| r.err);
    let mut out = std::io::stdout().lock();
    writeln!(out, "criterion 7 (info): default seed, GL with lambda = 2/p * node-wise lambda: mean Err {gl_matched:.4}").unwrap();
    drop(out);
    assert!(pass);
}

#[test]
fn criterion_08_default_lambdas() {
    let mut worst = 0.0f64;
    for p in [10usize, 25, 50] {
        for n in [100usize, 1000] {
            let mut rng = rng_from_seed((p * n) as u64);
            let x: Vec<i8> = (0..n * p).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
            let data = Dataset::new(n, p, x).unwrap();
            let node = ((p as f64 - 1.0).ln() / n as f64).sqrt();
            let global = ((p * (p - 1)) as f64 / 2.0).ln().sqrt() / ((p * n) as f64).sqrt();
            for method in MethodId::ALL {
                let expected = if method == MethodId::GL { global } else { node };
                let emitted = estimate(&data, method, None).unwrap().diagnostics.lambda;
                for l in emitted {
                    worst = worst.max((l - expected).abs());
                }
            }
        }
    }
    let pass = worst <= 1e-12;
    report(8, pass, &format!("max |emitted - formula| {worst:.2e} (<= 1e-12) for p in {{10,25,50}}, n in {{100,1000}}"));
    assert!(pass);
}

#[test]
fn criterion_09_metric_fixtures() {
    let truth = IsingModel::from_edges(3, &[(0, 1, 0.5)]).unwrap();
    let est = IsingModel::from_edges(3, &[(0, 1, 0.3), (0, 2, 0.2)]).unwrap();
    let (counts, acc) = accuracy(&truth, &est, 1e-8).unwrap();
    let e = err(
        &IsingModel::from_edges(2, &[(0, 1, 0.5)]).unwrap(),
        &IsingModel::zeros(2).unwrap(),
    )
    .unwrap();
    let pass = acc == 2.0 / 3.0 && (counts.tp, counts.tn, counts.fp, counts.fn_) == (1, 1, 1, 0) && e == 0.25;
    report(9, pass, &format!("accuracy {acc} (2/3), Err {e} (0.25)"));
    assert!(pass);
}

#[test]
fn criterion_10_conditions_checker() {
    let chain = IsingModel::from_edges(3, &[(0, 1, 0.5), (1, 2, 0.5)]).unwrap();
    let data = sample_exact(&chain, 1_000_000, 10).unwrap();
    let mut worst = 0.0f64;
    for (scope, r) in [(Scope::Node(0), Some(0)), (Scope::Node(1), Some(1)), (Scope::Node(2), Some(2)), (Scope::Global, None)] {
        let (_, exact) = fisher_matrix(&chain, scope).unwrap();
        for (a, b) in exact.iter().zip(monte_carlo_fisher(&chain, &data, r)) {
            worst = worst.max((a - b).abs());
        }
    }
    let zero = IsingModel::zeros(3).unwrap();
    let incoherence: Vec<Option<f64>> = [Scope::Node(0), Scope::Node(1), Scope::Node(2), Scope::Global]
        .iter()
        .map(|&s| fisher_blocks(&zero, s, None).unwrap().incoherence)
        .collect();
    let zero_ok = incoherence.iter().all(|v| *v == Some(0.0));
    let pass = worst < 1e-2 && zero_ok;
    report(
        10,
        pass,
        &format!("max |exact - Monte Carlo| {worst:.2e} (< 1e-2), zero-model incoherence 0 in every scope: {zero_ok}"),
    );
    assert!(pass);
}

#[test]
fn criterion_11_experiment_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"p": 8, "density": 0.25, "n_list": [200, 800], "replicates": 5, "master_seed": 11, "fresh_model": true}"#,
    )
    .unwrap();
    let run_once = |name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_isinglearn"))
            .args(["experiment", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out).unwrap()
    };
    let (a, b) = (run_once("a.csv"), run_once("b.csv"));
    let pass = a == b && !a.is_empty();
    report(11, pass, &format!("two runs byte-identical: {} ({} bytes)", a == b, a.len()));
    assert!(pass);
}
