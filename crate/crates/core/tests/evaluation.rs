use medzisc::evaluation::{run_benchmark, score_replicate};
use medzisc::mediation::{DirectEffect, GeneMediationResult, MediationConfig, MediationReport, Method, Pathway};
use medzisc::simulation::{MediatorType, ScenarioConfig, SimulationTruth};
use proptest::prelude::*;

fn row(gene: &str, pathway: Pathway, significant: bool) -> GeneMediationResult {
    GeneMediationResult {
        gene: gene.into(),
        pathway,
        outcome_coef: 1.0,
        outcome_se: 1.0,
        outcome_p: 0.5,
        exposure_coef: 1.0,
        exposure_se: 1.0,
        exposure_p: 0.5,
        iie: 0.0,
        iie_mean: 0.0,
        iie_note: None,
        p_max: 0.5,
        p_adjusted: 0.5,
        significant,
    }
}

fn truth(types: &[MediatorType]) -> SimulationTruth {
    let g = types.len();
    SimulationTruth {
        gene_names: (0..g).map(|j| format!("g{j}")).collect(),
        mediator_type: types.to_vec(),
        alpha_x: vec![0.0; g],
        gamma_x: vec![0.0; g],
        beta_m: vec![0.0; g],
        beta_f: vec![0.0; g],
        dispersion: vec![1.0; g],
        alpha_z: 0.0,
        gamma_z: 0.0,
        beta_x: 0.0,
        beta_z: vec![],
    }
}

/// Direct count over every gene of the confusion table for one family.
fn oracle(types: &[MediatorType], called: &[bool], in_family: fn(&MediatorType) -> bool) -> (Option<f64>, f64) {
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (t, &c) in types.iter().zip(called) {
        match (in_family(t), c) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => {}
        }
    }
    let power = if tp + fn_ == 0 { None } else { Some(tp as f64 / (tp + fn_) as f64) };
    let fdr = if tp + fp == 0 { 0.0 } else { fp as f64 / (tp + fp) as f64 };
    (power, fdr)
}

fn mediator_type() -> impl Strategy<Value = MediatorType> {
    prop_oneof![
        Just(MediatorType::None),
        Just(MediatorType::Both),
        Just(MediatorType::MOnly),
        Just(MediatorType::FOnly)
    ]
}

proptest! {
    #[test]
    fn score_matches_confusion_oracle(
        cases in prop::collection::vec((mediator_type(), any::<bool>(), any::<bool>(), any::<bool>()), 1..40)
    ) {
        let types: Vec<MediatorType> = cases.iter().map(|c| c.0).collect();
        let called_m: Vec<bool> = cases.iter().map(|c| c.1).collect();
        let called_f: Vec<bool> = cases.iter().map(|c| c.2).collect();
        let t = truth(&types);
        // Untested genes (third flag false) must count exactly like non-significant ones.
        let report = MediationReport {
            method: Method::Medzisc,
            direct_effect: DirectEffect { estimate: 0.0, se: 1.0, p_value: 1.0 },
            m_results: t.gene_names.iter().zip(&cases)
                .filter(|(_, c)| c.1 || c.3)
                .map(|(g, c)| row(g, Pathway::M, c.1)).collect(),
            f_results: t.gene_names.iter().zip(&cases)
                .filter(|(_, c)| c.2 || c.3)
                .map(|(g, c)| row(g, Pathway::F, c.2)).collect(),
            screening: None,
            warnings: vec![],
            elapsed_seconds: 0.0,
        };
        let s = score_replicate(&report, &t);
        let (pm, fm) = oracle(&types, &called_m, MediatorType::in_m_family);
        let (pf, ff) = oracle(&types, &called_f, MediatorType::in_f_family);
        prop_assert_eq!(s.power_m(), pm);
        prop_assert_eq!(s.power_f(), pf);
        prop_assert_eq!(s.fdr_m(), fm);
        prop_assert_eq!(s.fdr_f(), ff);
        prop_assert!(s.m.discoveries >= s.m.true_positives && s.f.discoveries >= s.f.true_positives);
    }
}

#[test]
fn means_do_not_depend_on_grid_position() {
    let a = ScenarioConfig {
        n: 40,
        cells: 20,
        genes: 10,
        n_true: Some(4),
        replicates: 3,
        seed: 17,
        ..Default::default()
    };
    let b = ScenarioConfig { n: 50, ..a.clone() };
    let cfg = MediationConfig::default();
    let methods = [Method::Medzisc, Method::Naive];
    let ab = run_benchmark(&[a.clone(), b.clone()], &methods, &cfg).unwrap();
    let ba = run_benchmark(&[b, a], &methods, &cfg).unwrap();
    for r in &ab.rows {
        let other = ba.row(r.cell, r.method).unwrap();
        assert_eq!((r.power_m, r.power_f, r.fdr_m, r.fdr_f), (other.power_m, other.power_f, other.fdr_m, other.fdr_f));
    }
}
