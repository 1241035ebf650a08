use std::path::{Path, PathBuf};

use clap::ValueEnum;
use medzisc::data::{aggregate_pseudobulk, filter_degenerate_genes, PseudobulkDataset};
use medzisc::io;
use medzisc::mediation::{run_medzisc, run_naive, MediationConfig, NaiveOutcome, ScreeningRule};

use crate::failure::Failure;
use crate::manifest::RunManifest;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Medzisc,
    Naive,
    Both,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RuleArg {
    Conjunction,
    Union,
}

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Subject table: subject_id, X, covariates, Y.
    #[arg(long)]
    metadata: PathBuf,
    /// Cell counts: a directory of per-subject tables or one long-format file.
    #[arg(long, conflicts_with_all = ["m", "f"])]
    counts: Option<PathBuf>,
    /// Precomputed mean-expression matrix (requires --f).
    #[arg(long, requires = "f")]
    m: Option<PathBuf>,
    /// Precomputed zero-proportion matrix (requires --m).
    #[arg(long, requires = "m")]
    f: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Mediation settings TOML; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "medzisc")]
    method: MethodArg,
    #[arg(long, value_enum)]
    screening_rule: Option<RuleArg>,
    /// Significance level for BH-adjusted p-values.
    #[arg(long)]
    level: Option<f64>,
    /// Level of the marginal exposure tests used in screening.
    #[arg(long)]
    screening_level: Option<f64>,
    /// Exposure contrast `x1,x2`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    contrast: Option<Vec<f64>>,
    /// Covariate values at which indirect effects are reported, comma separated.
    #[arg(long, value_delimiter = ',')]
    covariate_profile: Option<Vec<f64>>,
    /// Fixed Lasso penalty instead of cross-validation.
    #[arg(long)]
    lasso_lambda: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

fn resolve_config(args: &Args) -> Result<MediationConfig, Failure> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = io::read_text(p).map_err(Failure::loading)?;
            toml::from_str::<MediationConfig>(&text)
                .map_err(|e| Failure::invalid(anyhow::anyhow!("{}: {}", p.display(), e.to_string().trim())))?
        }
        None => MediationConfig::default(),
    };
    if let Some(r) = args.screening_rule {
        cfg.screening_rule = match r {
            RuleArg::Conjunction => ScreeningRule::Conjunction,
            RuleArg::Union => ScreeningRule::Union,
        };
    }
    cfg.level = args.level.unwrap_or(cfg.level);
    cfg.screening_level = args.screening_level.unwrap_or(cfg.screening_level);
    if let Some(c) = &args.contrast {
        cfg.contrast = (c[0], c[1]);
    }
    if args.covariate_profile.is_some() {
        cfg.covariate_profile = args.covariate_profile.clone();
    }
    if args.lasso_lambda.is_some() {
        cfg.lasso_lambda = args.lasso_lambda;
    }
    cfg.seed = args.seed.unwrap_or(cfg.seed);
    cfg.validate().map_err(Failure::invalid)?;
    Ok(cfg)
}

fn load_dataset(args: &Args) -> Result<PseudobulkDataset, Failure> {
    let subjects = io::read_metadata_with_outcome(&args.metadata).map_err(Failure::loading)?;
    let dataset = match (&args.counts, &args.m, &args.f) {
        (Some(counts), _, _) => {
            let cells = if counts.is_dir() {
                io::read_subject_count_dir(counts, &subjects)
            } else {
                io::read_long_counts(counts).and_then(|cells| {
                    io::check_subject_alignment(
                        subjects.ids(),
                        cells.iter().map(|c| c.subject_id()),
                        &counts.display().to_string(),
                    )?;
                    Ok(cells)
                })
            }
            .map_err(Failure::loading)?;
            aggregate_pseudobulk(&cells, &subjects).map_err(Failure::loading)?
        }
        (None, Some(m), Some(f)) => io::read_pseudobulk(&args.metadata, m, f).map_err(Failure::loading)?,
        _ => return Err(Failure::invalid(anyhow::anyhow!("provide --counts or both --m and --f"))),
    };
    let (dataset, report) = filter_degenerate_genes(&dataset);
    if !report.removed.is_empty() {
        log::warn!("{} never-expressed genes removed: {}", report.removed.len(), report.removed.join(", "));
    }
    if !report.f_dropped.is_empty() {
        log::warn!("zero proportion not modeled for {} genes: {}", report.f_dropped.len(), report.f_dropped.join(", "));
    }
    Ok(dataset)
}

fn write_report(out: &Path, manifest: &mut RunManifest, name: &str, report: &medzisc::mediation::MediationReport) -> Result<(), Failure> {
    for (file, text) in [(format!("{name}.json"), report.to_json()), (format!("{name}.tsv"), report.to_tsv())] {
        io::write_text(&out.join(&file), &text).map_err(Failure::runtime)?;
        manifest.add_output(file);
    }
    Ok(())
}

pub fn run(args: Args, threads: usize) -> Result<(), Failure> {
    let cfg = resolve_config(&args)?;
    let dataset = load_dataset(&args)?;
    let mut manifest = RunManifest::new("analyze", Some(cfg.seed), &cfg, threads);
    for p in [Some(&args.metadata), args.counts.as_ref(), args.m.as_ref(), args.f.as_ref(), args.config.as_ref()]
        .into_iter()
        .flatten()
    {
        manifest.add_input(p)?;
    }
    log::info!("{} subjects, {} genes", dataset.n_subjects(), dataset.n_genes());
    crate::ensure_dir(&args.out)?;

    if matches!(args.method, MethodArg::Medzisc | MethodArg::Both) {
        let report = run_medzisc(&dataset, &cfg).map_err(Failure::classify)?;
        log::info!(
            "medzisc: {} M and {} F mediators significant",
            report.m_results.iter().filter(|r| r.significant).count(),
            report.f_results.iter().filter(|r| r.significant).count()
        );
        write_report(&args.out, &mut manifest, "medzisc", &report)?;
    }
    if matches!(args.method, MethodArg::Naive | MethodArg::Both) {
        let report = run_naive(&dataset, &cfg).map_err(Failure::classify)?;
        log::info!(
            "naive ({} outcome models): {} M and {} F mediators significant",
            match cfg.naive_outcome {
                NaiveOutcome::Separate => "separate",
                NaiveOutcome::Joint => "joint",
            },
            report.m_results.iter().filter(|r| r.significant).count(),
            report.f_results.iter().filter(|r| r.significant).count()
        );
        write_report(&args.out, &mut manifest, "naive", &report)?;
    }
    manifest.write(&args.out)
}
