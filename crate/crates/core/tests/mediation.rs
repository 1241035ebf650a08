use medzisc::data::{PseudobulkDataset, Subject, SubjectTable};
use medzisc::mediation::{
    bh_adjust, fit_final_models, run_medzisc, run_naive, screen_mediators, CandidateGene, MediationConfig,
    MediationReport, NaiveOutcome, Pathway, ScreeningResult, ScreeningRule,
};
use medzisc::simulation::{generate_replicate, MediatorType, ScenarioConfig};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Gene 0: X raises M, M raises Y. Gene 1: M raises Y but ignores X.
/// Remaining genes are noise. F is pure noise everywhere.
struct Planted {
    dataset: PseudobulkDataset,
    beta_m0: f64,
}

fn planted(n: usize, genes: usize, seed: u64) -> Planted {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let beta_m0 = 2.0;
    let mut subjects = Vec::new();
    let mut m = DMatrix::zeros(n, genes);
    let mut f = DMatrix::zeros(n, genes);
    let mut y = Vec::new();
    for i in 0..n {
        let x = if rng.random::<bool>() { 1.0 } else { 0.0 };
        let z: f64 = normal.sample(&mut rng);
        for g in 0..genes {
            let log_mu = if g == 0 { 0.5 + 1.2 * x + 0.2 * z } else { 0.5 + 0.2 * z };
            m[(i, g)] = log_mu.exp() * (0.15 * normal.sample(&mut rng)).exp();
            f[(i, g)] = 0.2 + 0.6 * rng.random::<f64>();
        }
        let m1 = if genes > 1 { m[(i, 1)] } else { 0.0 };
        y.push(1.0 + 0.5 * x + 0.3 * z + beta_m0 * m[(i, 0)] + 3.0 * m1 + normal.sample(&mut rng));
        subjects.push(Subject {
            id: format!("s{i}"),
            exposure: x,
            covariates: vec![z],
            outcome: None,
        });
    }
    for (s, yi) in subjects.iter_mut().zip(&y) {
        s.outcome = Some(*yi);
    }
    let table = SubjectTable::new(vec!["Z1".into()], subjects).unwrap();
    let names = (0..genes).map(|g| format!("g{g}")).collect();
    Planted {
        dataset: PseudobulkDataset::from_matrices(table, names, m, f).unwrap(),
        beta_m0,
    }
}

fn without_timing(mut r: MediationReport) -> MediationReport {
    r.elapsed_seconds = 0.0;
    r
}

fn simulated(seed: u64, n_true: usize) -> PseudobulkDataset {
    let cfg = ScenarioConfig {
        n: 80,
        cells: 60,
        genes: 25,
        n_true: Some(n_true),
        seed,
        ..Default::default()
    };
    generate_replicate(&cfg, 0).unwrap().pseudobulk().unwrap().0
}

#[test]
fn empty_screen_gives_empty_report() {
    let p = planted(60, 6, 1);
    let cfg = MediationConfig {
        lasso_lambda: Some(1e9),
        ..Default::default()
    };
    let s = screen_mediators(&p.dataset, &cfg).unwrap();
    assert!(s.lasso_selected.is_empty() && s.candidates.is_empty());
    let finals = fit_final_models(&p.dataset, &s).unwrap();
    assert_eq!(finals.outcome.names, ["(Intercept)", "X", "Z1"]);
    let r = run_medzisc(&p.dataset, &cfg).unwrap();
    assert!(r.m_results.is_empty() && r.f_results.is_empty());
    assert!(r.direct_effect.estimate.is_finite());
}

#[test]
fn planted_signal_is_screened_and_recovered() {
    let p = planted(300, 8, 2);
    let s = screen_mediators(&p.dataset, &MediationConfig::default()).unwrap();
    let c = s.candidates.iter().find(|c| c.gene == "g0").expect("g0 screened in");
    assert!(c.include_m);
    let finals = fit_final_models(&p.dataset, &s).unwrap();
    let o = &finals.outcome;
    let est = o.coefficient("M:g0").unwrap();
    let se = o.standard_error("M:g0").unwrap();
    assert!((est - p.beta_m0).abs() < 3.0 * se, "{est} ± {se}");

    let r = run_medzisc(&p.dataset, &MediationConfig::default()).unwrap();
    assert_eq!(r.discoveries(Pathway::M), ["g0"]);
}

#[test]
fn lasso_only_gene_excluded_under_conjunction() {
    let p = planted(300, 8, 3);
    let cfg = MediationConfig::default();
    let s = screen_mediators(&p.dataset, &cfg).unwrap();
    let g1 = "g1".to_string();
    assert!(s.lasso_selected.contains(&g1));
    assert!(!s.g_m.contains(&g1) && !s.g_f.contains(&g1), "g1 should show no exposure effect");
    assert!(s.candidates.iter().all(|c| c.gene != g1));

    let union = screen_mediators(
        &p.dataset,
        &MediationConfig {
            screening_rule: ScreeningRule::Union,
            ..cfg
        },
    )
    .unwrap();
    let c = union.candidates.iter().find(|c| c.gene == g1).unwrap();
    assert!(!c.include_m && !c.include_f);
}

#[test]
fn noise_free_outcome_recovered_exactly() {
    let cfg = ScenarioConfig {
        n: 60,
        cells: 50,
        genes: 12,
        n_true: Some(4),
        noise_sd: 0.0,
        seed: 11,
        ..Default::default()
    };
    let sim = generate_replicate(&cfg, 0).unwrap();
    let (ds, _) = sim.pseudobulk().unwrap();
    let truth = &sim.truth;
    let candidates: Vec<CandidateGene> = truth
        .gene_names
        .iter()
        .zip(&truth.mediator_type)
        .filter(|(g, t)| **t != MediatorType::None && ds.gene_index(g).is_some())
        .map(|(g, t)| CandidateGene {
            gene: g.clone(),
            include_m: t.in_m_family(),
            include_f: t.in_f_family(),
        })
        .collect();
    let screening = ScreeningResult {
        rule: ScreeningRule::Conjunction,
        lambda: 0.0,
        lasso_selected: vec![],
        g_m: vec![],
        g_f: vec![],
        candidates,
        marginals: vec![],
    };
    let o = fit_final_models(&ds, &screening).unwrap().outcome;
    assert!((o.coefficient("X").unwrap() - truth.beta_x).abs() < 1e-6);
    for (k, b) in truth.beta_z.iter().enumerate() {
        assert!((o.coefficient(&format!("Z{}", k + 1)).unwrap() - b).abs() < 1e-6);
    }
    for (j, g) in truth.gene_names.iter().enumerate() {
        if let Some(v) = o.coefficient(&format!("M:{g}")) {
            assert!((v - truth.beta_m[j]).abs() < 1e-6, "{g}: {v} vs {}", truth.beta_m[j]);
        }
        if let Some(v) = o.coefficient(&format!("F:{g}")) {
            assert!((v - truth.beta_f[j]).abs() < 1e-6, "{g}: {v} vs {}", truth.beta_f[j]);
        }
    }
}

#[test]
fn single_gene_naive_bh_is_identity() {
    let p = planted(120, 1, 4);
    for outcome in [NaiveOutcome::Separate, NaiveOutcome::Joint] {
        let cfg = MediationConfig {
            naive_outcome: outcome,
            ..Default::default()
        };
        let r = run_naive(&p.dataset, &cfg).unwrap();
        assert_eq!(r.m_results.len(), 1);
        for row in r.m_results.iter().chain(&r.f_results) {
            assert_eq!(row.p_adjusted, row.p_max);
            assert_eq!(row.significant, row.p_max <= 0.05);
        }
    }
}

#[test]
fn reports_are_deterministic() {
    let ds = simulated(21, 6);
    let cfg = MediationConfig::default();
    let a = without_timing(run_medzisc(&ds, &cfg).unwrap());
    let b = without_timing(run_medzisc(&ds, &cfg).unwrap());
    assert_eq!(a.to_json(), b.to_json());
    let a = without_timing(run_naive(&ds, &cfg).unwrap());
    let b = without_timing(run_naive(&ds, &cfg).unwrap());
    assert_eq!(a.to_json(), b.to_json());
}

#[test]
fn p_value_ordering_invariant() {
    for seed in [31, 32] {
        let ds = simulated(seed, 6);
        let cfg = MediationConfig::default();
        for r in [run_medzisc(&ds, &cfg).unwrap(), run_naive(&ds, &cfg).unwrap()] {
            for row in r.m_results.iter().chain(&r.f_results) {
                assert!(row.p_adjusted >= row.p_max);
                assert!(row.p_max >= row.outcome_p && row.p_max >= row.exposure_p);
                assert!((0.0..=1.0).contains(&row.p_adjusted));
            }
        }
    }
}

#[test]
fn iie_zero_when_contrast_is_degenerate() {
    let ds = simulated(41, 6);
    let cfg = MediationConfig {
        contrast: (1.0, 1.0),
        ..Default::default()
    };
    let r = run_medzisc(&ds, &cfg).unwrap();
    assert!(!r.m_results.is_empty());
    for row in r.m_results.iter().chain(&r.f_results) {
        assert_eq!(row.iie, 0.0);
        assert_eq!(row.iie_mean, 0.0);
    }
}

#[test]
fn covariate_profile_length_checked() {
    let ds = simulated(42, 2);
    let cfg = MediationConfig {
        covariate_profile: Some(vec![0.0]),
        ..Default::default()
    };
    let err = run_medzisc(&ds, &cfg).unwrap_err();
    assert!(err.to_string().contains("covariate_profile"));
}

#[test]
fn screening_monotone_in_level() {
    let ds = simulated(51, 6);
    let strict = MediationConfig {
        screening_level: 0.01,
        ..Default::default()
    };
    let loose = MediationConfig {
        screening_level: 0.2,
        ..Default::default()
    };
    let a = screen_mediators(&ds, &strict).unwrap();
    let b = screen_mediators(&ds, &loose).unwrap();
    assert!(a.g_m.iter().all(|g| b.g_m.contains(g)));
    assert!(a.g_f.iter().all(|g| b.g_f.contains(g)));
    assert!(b.g_m.len() + b.g_f.len() > a.g_m.len() + a.g_f.len());
}

/// Genes with an outcome effect but no exposure effect are not mediators and
/// must rarely be declared significant.
#[test]
fn one_leg_null_is_rarely_significant() {
    let reps = 40;
    let mut hits = 0;
    for rep in 0..reps {
        let p = planted(100, 6, 1000 + rep);
        let r = run_medzisc(&p.dataset, &MediationConfig::default()).unwrap();
        if r.discoveries(Pathway::M).contains(&"g1") {
            hits += 1;
        }
    }
    assert!(hits as f64 <= 0.05 * reps as f64, "{hits} of {reps}");
}

/// `q_i = min(1, min over k with p_k >= p_i of p_k·(m / rank_k))`, where
/// `rank_k` counts entries not exceeding `p_k`.
fn bh_brute_force(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    p.iter()
        .map(|&pi| {
            let mut q = 1.0f64;
            for &pk in p.iter().filter(|&&pk| pk >= pi) {
                let rank = p.iter().filter(|&&pl| pl <= pk).count();
                q = q.min(pk * (m as f64 / rank as f64));
            }
            q
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn bh_matches_brute_force(
        p in prop::collection::vec(prop_oneof![0.0f64..=1.0, Just(0.05), Just(0.0), Just(1.0)], 0..40)
    ) {
        prop_assert_eq!(bh_adjust(&p), bh_brute_force(&p));
    }

    #[test]
    fn bh_never_below_raw(p in prop::collection::vec(0.0f64..=1.0, 1..60)) {
        for (q, raw) in bh_adjust(&p).iter().zip(&p) {
            prop_assert!(q >= raw && *q <= 1.0);
        }
    }
}
