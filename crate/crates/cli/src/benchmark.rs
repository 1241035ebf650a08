use std::path::PathBuf;

use medzisc::evaluation::run_benchmark;
use medzisc::io;

use crate::failure::Failure;
use crate::grid;
use crate::manifest::RunManifest;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Grid TOML (scenario fields, with lists allowed for n, cells and genes).
    #[arg(long)]
    grid: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Override the replicate count of every cell.
    #[arg(long)]
    replicates: Option<usize>,
    /// Also write per-replicate scores to replicates.csv.
    #[arg(long)]
    per_replicate: bool,
}

pub fn run(args: Args, threads: usize) -> Result<(), Failure> {
    let text = io::read_text(&args.grid).map_err(Failure::loading)?;
    let mut grid = grid::parse(&text).map_err(|e| Failure::invalid(e.context(args.grid.display().to_string())))?;
    if let Some(r) = args.replicates {
        if r == 0 {
            return Err(Failure::invalid(anyhow::anyhow!("--replicates must be at least 1")));
        }
        for c in &mut grid.cells {
            c.replicates = r;
        }
    }
    let mut manifest = RunManifest::new("benchmark", grid.cells.first().map(|c| c.seed), &grid, threads);
    manifest.add_input(&args.grid)?;
    log::info!(
        "benchmark: {} cells, {} replicate(s) each, {} thread(s)",
        grid.cells.len(),
        grid.cells.first().map_or(0, |c| c.replicates),
        threads
    );

    let table = run_benchmark(&grid.cells, &grid.methods, &grid.mediation).map_err(Failure::classify)?;
    crate::ensure_dir(&args.out)?;
    let mut outputs = vec![
        ("table.tsv", table.to_tsv()),
        ("table.json", table.to_json()),
        ("timing.tsv", table.timing_tsv()),
    ];
    if args.per_replicate {
        outputs.push(("replicates.csv", table.replicates_csv()));
    }
    for (name, body) in outputs {
        io::write_text(&args.out.join(name), &body).map_err(Failure::runtime)?;
        manifest.add_output(name);
    }
    manifest.write(&args.out)?;
    eprint!("{}", table.to_tsv());

    let failed: usize = table.rows.iter().map(|r| r.failed).sum();
    if failed > 0 {
        log::warn!("{failed} replicate run(s) failed and were excluded from the means");
    }
    let violations = grid.thresholds.violations(&table);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::runtime(anyhow::anyhow!("threshold check failed:\n  {}", violations.join("\n  "))))
    }
}
