//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Runs as a plain binary (no libtest harness) so the summary is always shown.

use std::fs;
use std::process::{Command, ExitCode};
use std::time::Instant;

use medzisc::evaluation::{run_benchmark, BenchmarkRow, BenchmarkTable};
use medzisc::glm::special::expit;
use medzisc::glm::{
    beta_log_likelihood, beta_score, fit_beta_regression, fit_lasso, fit_nb_regression, fit_ols, nb_log_likelihood,
    nb_score, soft_threshold, BetaOptions, DesignMatrix, LambdaChoice, LassoOptions, NbOptions,
};
use medzisc::mediation::{bh_adjust, estimate_iie_f, estimate_iie_m, MediationConfig, Method};
use medzisc::simulation::ScenarioConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma, Poisson};

type Check = Result<String, String>;

struct Criterion {
    name: &'static str,
    result: Check,
    seconds: f64,
}

fn timed(name: &'static str, f: impl FnOnce() -> Check) -> Criterion {
    let start = Instant::now();
    let result = f();
    Criterion {
        name,
        result,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fmt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| format!("{x:.3}"))
}

fn row_summary(r: &BenchmarkRow) -> String {
    format!(
        "{} Power(M)={} Power(F)={} FDR(M)={} FDR(F)={} over {} reps",
        r.method.as_str(),
        fmt(r.power_m),
        fmt(r.power_f),
        fmt(r.fdr_m),
        fmt(r.fdr_f),
        r.replicates
    )
}

fn row(table: &BenchmarkTable, method: Method) -> &BenchmarkRow {
    table.rows.iter().find(|r| r.method == method).expect("method was run")
}

// ---------------------------------------------------------------------------
// Simulation studies

fn scenario(n: usize, replicates: usize) -> ScenarioConfig {
    ScenarioConfig {
        n,
        cells: 100,
        genes: 100,
        replicates,
        ..Default::default()
    }
}

fn scenario_one(table: &BenchmarkTable) -> Check {
    let m = row(table, Method::Medzisc);
    let ok = m.failed == 0
        && m.power_m.is_some_and(|v| v >= 0.90)
        && m.power_f.is_some_and(|v| v >= 0.70)
        && m.fdr_m.is_some_and(|v| v <= 0.08)
        && m.fdr_f.is_some_and(|v| v <= 0.08);
    let s = row_summary(m);
    if ok {
        Ok(s)
    } else {
        Err(format!("{s}; need Power(M)>=0.90, Power(F)>=0.70, FDR(M)<=0.08, FDR(F)<=0.08"))
    }
}

fn naive_contrast(table: &BenchmarkTable) -> Check {
    let m = row(table, Method::Medzisc);
    let nv = row(table, Method::Naive);
    let s = format!("naive FDR(M)={}, medzisc FDR(M)={}", fmt(nv.fdr_m), fmt(m.fdr_m));
    if nv.fdr_m.is_some_and(|v| v > 0.25) && m.fdr_m.is_some_and(|v| v <= 0.08) {
        Ok(s)
    } else {
        Err(format!("{s}; need naive > 0.25 and medzisc <= 0.08"))
    }
}

fn scenario_two() -> Check {
    let table = run_benchmark(&[scenario(400, 25)], &[Method::Medzisc, Method::Naive], &MediationConfig::default())
        .map_err(|e| e.to_string())?;
    let m = row(&table, Method::Medzisc);
    let nv = row(&table, Method::Naive);
    let s = format!("{}; {}", row_summary(nv), row_summary(m));
    if nv.fdr_m.is_some_and(|v| v >= 0.15) && m.fdr_m.is_some_and(|v| v <= 0.08) {
        Ok(s)
    } else {
        Err(format!("{s}; need naive FDR(M)>=0.15 and medzisc FDR(M)<=0.08"))
    }
}

fn null_calibration() -> Check {
    let cfg = ScenarioConfig {
        n_true: Some(0),
        ..scenario(100, 20)
    };
    let table = run_benchmark(&[cfg], &[Method::Medzisc], &MediationConfig::default()).map_err(|e| e.to_string())?;
    let scores: Vec<_> = table.replicates.iter().filter_map(|r| r.score.as_ref()).collect();
    ensure(scores.len() == 20, || format!("{} of 20 replicates succeeded", scores.len()))?;
    let any_m = scores.iter().filter(|s| s.m.discoveries > 0).count() as f64 / 20.0;
    let any_f = scores.iter().filter(|s| s.f.discoveries > 0).count() as f64 / 20.0;
    let s = format!("replicates with any discovery: M {any_m:.2}, F {any_f:.2}");
    if any_m <= 0.10 && any_f <= 0.10 {
        Ok(s)
    } else {
        Err(format!("{s}; need <= 0.10 per family"))
    }
}

// ---------------------------------------------------------------------------
// Solver oracles

fn finite_difference(f: impl Fn(&[f64]) -> f64, at: &[f64]) -> Vec<f64> {
    (0..at.len())
        .map(|k| {
            let h = 1e-5 * at[k].abs().max(1.0);
            let (mut up, mut dn) = (at.to_vec(), at.to_vec());
            up[k] += h;
            dn[k] -= h;
            (f(&up) - f(&dn)) / (2.0 * h)
        })
        .collect()
}

fn max_rel_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / x.abs().max(1.0)).fold(0.0, f64::max)
}

fn design(n: usize, rng: &mut ChaCha8Rng) -> DesignMatrix {
    let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let z: Vec<f64> = (0..n).map(|_| f64::from(u8::from(rng.random::<bool>()))).collect();
    DesignMatrix::with_intercept(vec!["x".into(), "z".into()], &[x, z]).unwrap()
}

fn scores_match_finite_differences() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let d = design(30, &mut rng);
        let x = d.matrix().clone();
        let y: Vec<f64> = (0..30).map(|_| 0.02 + 0.96 * rng.random::<f64>()).collect();
        let mut at: Vec<f64> = (0..3).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        at.push(0.5 + 30.0 * rng.random::<f64>());
        let fd = finite_difference(|v| beta_log_likelihood(&y, &x, &v[..3], v[3]), &at);
        worst = worst.max(max_rel_gap(&beta_score(&y, &x, &at[..3], at[3]), &fd));

        let y: Vec<f64> = (0..30).map(|_| 12.0 * rng.random::<f64>() * rng.random::<f64>()).collect();
        at[3] = 0.2 + 20.0 * rng.random::<f64>();
        let fd = finite_difference(|v| nb_log_likelihood(&y, &x, &v[..3], v[3]), &at);
        worst = worst.max(max_rel_gap(&nb_score(&y, &x, &at[..3], at[3]), &fd));
    }
    ensure(worst < 1e-5, || format!("score vs finite difference rel gap {worst:.2e}"))
}

fn lasso_oracles() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let n = 80;
    let cols: Vec<Vec<f64>> = (0..5).map(|_| (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()).collect();
    let y: Vec<f64> = (0..n).map(|i| 0.5 + cols[0][i] - 2.0 * cols[3][i] + 0.5 * rng.random::<f64>()).collect();
    let names: Vec<String> = (0..5).map(|j| format!("c{j}")).collect();
    let d = DesignMatrix::with_intercept(names, &cols).unwrap();
    let fixed = |l: f64| LassoOptions {
        lambda: LambdaChoice::Fixed(l),
        tol: 1e-20,
        ..Default::default()
    };
    let lasso = fit_lasso(&y, &d, &[], &fixed(0.0)).map_err(|e| e.to_string())?;
    let ols = fit_ols(&y, &d).map_err(|e| e.to_string())?;
    let gap = max_rel_gap(&ols.coefficients, &lasso.coefficients);
    ensure(gap <= 1e-6, || format!("lasso(0) vs OLS gap {gap:.2e}"))?;

    // Orthonormal, centered columns with xᵀx/n = 1.
    let n = 50;
    let mut basis: Vec<Vec<f64>> = vec![vec![1.0 / (n as f64).sqrt(); n]];
    let mut ortho = Vec::new();
    for _ in 0..6 {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        for q in &basis {
            let dot: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let unit: Vec<f64> = v.iter().map(|a| a / norm).collect();
        ortho.push(unit.iter().map(|a| a * (n as f64).sqrt()).collect::<Vec<f64>>());
        basis.push(unit);
    }
    let truth = [2.0, -1.0, 0.4, -0.2, 0.05, 0.0];
    let y: Vec<f64> = (0..n)
        .map(|i| 1.0 + (0..6).map(|j| truth[j] * ortho[j][i]).sum::<f64>() + 0.3 * (rng.random::<f64>() - 0.5))
        .collect();
    let names: Vec<String> = (0..6).map(|j| format!("o{j}")).collect();
    let d = DesignMatrix::with_intercept(names, &ortho).unwrap();
    let ols = fit_ols(&y, &d).map_err(|e| e.to_string())?;
    for lambda in [0.1, 0.3, 1.0] {
        let fit = fit_lasso(&y, &d, &[], &fixed(lambda)).map_err(|e| e.to_string())?;
        for j in 1..=6 {
            let expected = soft_threshold(ols.coefficients[j], lambda);
            let gap = (fit.coefficients[j] - expected).abs();
            ensure(gap < 1e-7, || format!("orthonormal λ={lambda} column {j}: gap {gap:.2e}"))?;
        }
    }
    Ok(())
}

fn bh_brute_force(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    p.iter()
        .map(|&pi| {
            p.iter()
                .filter(|&&pk| pk >= pi)
                .map(|&pk| pk * (m as f64 / p.iter().filter(|&&pl| pl <= pk).count() as f64))
                .fold(1.0, f64::min)
        })
        .collect()
}

fn bh_oracle() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..1000 {
        let len = rng.random_range(1..50);
        let p: Vec<f64> = (0..len)
            .map(|_| match rng.random_range(0..10) {
                0 => 0.05,
                1 => 1.0,
                2 => 0.0,
                _ => rng.random::<f64>(),
            })
            .collect();
        ensure(bh_adjust(&p) == bh_brute_force(&p), || format!("mismatch on vector {case}: {p:?}"))?;
    }
    Ok(())
}

fn glm_recovery() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = 2000;
    let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let d = DesignMatrix::with_intercept(vec!["x".into()], &[x.clone()]).unwrap();

    let phi = 20.0;
    let y: Vec<f64> = x
        .iter()
        .map(|&xi| {
            let mu = expit(0.3 + xi);
            Beta::new(mu * phi, (1.0 - mu) * phi).unwrap().sample(&mut rng)
        })
        .collect();
    let fit = fit_beta_regression(&y, &d, &BetaOptions::default()).map_err(|e| e.to_string())?;
    for (j, t) in [0.3, 1.0].into_iter().enumerate() {
        let z = (fit.coefficients[j] - t).abs() / fit.standard_errors[j];
        ensure(z < 3.0, || format!("beta coefficient {j} off by {z:.2} SE"))?;
    }

    let y: Vec<f64> = x
        .iter()
        .map(|&xi| {
            let mu = (1.0 + 0.5 * xi).exp();
            let lambda: f64 = Gamma::new(1.0, mu).unwrap().sample(&mut rng);
            if lambda > 0.0 {
                Poisson::new(lambda).unwrap().sample(&mut rng)
            } else {
                0.0
            }
        })
        .collect();
    let fit = fit_nb_regression(&y, &d, &NbOptions::default()).map_err(|e| e.to_string())?;
    for (j, t) in [1.0, 0.5].into_iter().enumerate() {
        let z = (fit.coefficients[j] - t).abs() / fit.standard_errors[j];
        ensure(z < 3.0, || format!("NB coefficient {j} off by {z:.2} SE"))?;
    }
    Ok(())
}

fn solver_oracles() -> Check {
    scores_match_finite_differences().map_err(|e| format!("(a) {e}"))?;
    lasso_oracles().map_err(|e| format!("(b) {e}"))?;
    bh_oracle().map_err(|e| format!("(c) {e}"))?;
    glm_recovery().map_err(|e| format!("(d) {e}"))?;
    Ok("score FD, lasso/OLS and soft-threshold, BH brute force x1000, n=2000 recovery".into())
}

// ---------------------------------------------------------------------------

fn iie_closed_forms() -> Check {
    let err = |e: medzisc::Error| e.to_string();
    let m = estimate_iie_m(2.0, std::f64::consts::LN_2, &[], &[], 0.0, 1.0).map_err(err)?;
    ensure((m - 2.0).abs() < 1e-10, || format!("IIE_M = {m}, expected 2"))?;
    // β·exp(γ_zᵀz)·(exp(γ_x x2) − exp(γ_x x1)) with γ_z = (0.2, -0.1), z = (1, 3).
    let m = estimate_iie_m(1.5, 0.4, &[0.2, -0.1], &[1.0, 3.0], -1.0, 2.0).map_err(err)?;
    let hand = 1.5 * (-0.1f64).exp() * (0.8f64.exp() - (-0.4f64).exp());
    ensure((m - hand).abs() < 1e-10, || format!("IIE_M = {m}, expected {hand}"))?;
    let f = estimate_iie_f(10.0, (0.7f64 / 0.3).ln(), &[], &[], 0.0, 1.0).map_err(err)?;
    ensure((f - 2.0).abs() < 1e-10, || format!("IIE_F = {f}, expected 2"))?;
    let f = estimate_iie_f(-3.0, 1.2, &[0.5], &[-2.0], 0.5, 1.5).map_err(err)?;
    let hand = -3.0 * (1.0 / (1.0 + (-(1.8f64 - 1.0)).exp()) - 1.0 / (1.0 + (-(0.6f64 - 1.0)).exp()));
    ensure((f - hand).abs() < 1e-10, || format!("IIE_F = {f}, expected {hand}"))?;
    let zm = estimate_iie_m(3.0, 0.9, &[0.1], &[2.0], 0.7, 0.7).map_err(err)?;
    let zf = estimate_iie_f(3.0, 0.9, &[0.1], &[2.0], 0.7, 0.7).map_err(err)?;
    ensure(zm == 0.0 && zf == 0.0, || format!("x1 = x2 gave {zm}, {zf}"))?;
    Ok("four hand-substituted values within 1e-10, exact zero at x1 = x2".into())
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let grid = dir.path().join("grid.toml");
    fs::write(&grid, "n = [50, 70]\ncells = 40\ngenes = 20\nreplicates = 3\nseed = 12\n").map_err(|e| e.to_string())?;
    let mut tables = Vec::new();
    for threads in ["1", "8"] {
        let out = dir.path().join(format!("t{threads}"));
        let o = Command::new(env!("CARGO_BIN_EXE_medzisc"))
            .args(["--quiet", "--threads", threads, "benchmark", "--per-replicate", "--grid"])
            .arg(&grid)
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(o.status.success(), || String::from_utf8_lossy(&o.stderr).into_owned())?;
        let table = fs::read(out.join("table.tsv")).map_err(|e| e.to_string())?;
        let reps = fs::read(out.join("replicates.csv")).map_err(|e| e.to_string())?;
        tables.push((table, reps));
    }
    ensure(tables[0].0 == tables[1].0, || "table.tsv differs between --threads 1 and 8".into())?;
    ensure(tables[0].1 == tables[1].1, || "replicates.csv differs between --threads 1 and 8".into())?;
    Ok(format!("table.tsv ({} bytes) and replicates.csv identical", tables[0].0.len()))
}

fn main() -> ExitCode {
    let mut results = vec![
        timed("Solver oracles", solver_oracles),
        timed("Closed-form IIE checks", iie_closed_forms),
        timed("Determinism (--threads 1 vs 8)", determinism),
        timed("Null calibration", null_calibration),
    ];

    let start = Instant::now();
    let scenario_one_table =
        run_benchmark(&[scenario(100, 50)], &[Method::Medzisc, Method::Naive], &MediationConfig::default());
    let elapsed = start.elapsed().as_secs_f64();
    let (one, contrast) = match &scenario_one_table {
        Ok(t) => (scenario_one(t), naive_contrast(t)),
        Err(e) => (Err(e.to_string()), Err(e.to_string())),
    };
    results.push(Criterion {
        name: "Scenario I reproduction",
        result: one,
        seconds: elapsed,
    });
    results.push(Criterion {
        name: "Naive contrast",
        result: contrast,
        seconds: 0.0,
    });
    results.push(timed("Scenario II trend", scenario_two));

    println!("\nacceptance summary");
    let mut failed = 0;
    for c in &results {
        match &c.result {
            Ok(detail) => println!("PASS  {}: {detail} [{:.1}s]", c.name, c.seconds),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {}: {detail} [{:.1}s]", c.name, c.seconds);
            }
        }
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
