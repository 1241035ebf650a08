use std::path::PathBuf;

use medzisc::data::aggregate_pseudobulk;
use medzisc::io;
use medzisc::simulation::{generate_replicate, ScenarioConfig};

use crate::failure::Failure;
use crate::manifest::RunManifest;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Scenario TOML; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Replicate index within the scenario.
    #[arg(long, default_value_t = 0)]
    replicate: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    cells: Option<usize>,
    #[arg(long)]
    genes: Option<usize>,
    /// Write one long-format counts.tsv instead of per-subject files.
    #[arg(long)]
    long_format: bool,
}

pub fn load_scenario(path: Option<&PathBuf>) -> Result<ScenarioConfig, Failure> {
    match path {
        Some(p) => {
            let text = io::read_text(p).map_err(Failure::loading)?;
            ScenarioConfig::from_toml(&text).map_err(Failure::loading)
        }
        None => Ok(ScenarioConfig::default()),
    }
}

pub fn run(args: Args, threads: usize) -> Result<(), Failure> {
    let mut config = load_scenario(args.config.as_ref())?;
    config.seed = args.seed.unwrap_or(config.seed);
    config.n = args.n.unwrap_or(config.n);
    config.cells = args.cells.unwrap_or(config.cells);
    config.genes = args.genes.unwrap_or(config.genes);
    config.validate().map_err(Failure::loading)?;
    config.n_true = Some(config.n_true());

    let mut manifest = RunManifest::new("simulate", Some(config.seed), &config, threads);
    if let Some(p) = &args.config {
        manifest.add_input(p)?;
    }
    log::info!(
        "simulating replicate {} (n={}, c={}, g={}, seed={})",
        args.replicate,
        config.n,
        config.cells,
        config.genes,
        config.seed
    );
    let sim = generate_replicate(&config, args.replicate).map_err(Failure::classify)?;
    crate::ensure_dir(&args.out)?;
    let mut write = |name: &str, text: String| -> Result<(), Failure> {
        io::write_text(&args.out.join(name), &text).map_err(Failure::runtime)?;
        manifest.add_output(name);
        Ok(())
    };
    if args.long_format {
        write("counts.tsv", io::long_counts_tsv(&sim.cells))?;
    } else {
        for mat in &sim.cells {
            write(&format!("counts/{}.tsv", mat.subject_id()), io::subject_counts_tsv(mat))?;
        }
    }
    write("metadata.tsv", io::metadata_tsv(&sim.subjects))?;
    write("truth.tsv", io::truth_tsv(&sim.truth))?;
    let agg = aggregate_pseudobulk(&sim.cells, &sim.subjects).map_err(Failure::runtime)?;
    write("m.tsv", io::matrix_tsv(&agg.subjects, &agg.gene_names, &agg.m))?;
    write("f.tsv", io::matrix_tsv(&agg.subjects, &agg.gene_names, &agg.f_raw))?;
    manifest.write(&args.out)?;
    log::info!("wrote {}", args.out.display());
    Ok(())
}
