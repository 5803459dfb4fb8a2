use std::path::Path;

use super::config::RunConfig;
use super::run::{persist, GameOutcome, HarnessError, PreparedRun, ReportBundle};
use crate::metrics::{render_table, TableRow};

/// Plays the games one after another.
pub fn run_batch_sequential(prepared: &PreparedRun, seeds: &[u64]) -> Vec<Result<GameOutcome, HarnessError>> {
    seeds.iter().map(|&seed| prepared.play(seed)).collect()
}

/// Plays the games on the rayon pool. Each game is independent and seeded
/// only by its own seed, so results equal the sequential ones.
#[cfg(feature = "parallel")]
pub fn run_batch_parallel(prepared: &PreparedRun, seeds: &[u64]) -> Vec<Result<GameOutcome, HarnessError>> {
    use rayon::prelude::*;
    seeds.par_iter().map(|&seed| prepared.play(seed)).collect()
}

/// Parallel when the `parallel` feature is on, sequential otherwise.
pub fn run_batch(prepared: &PreparedRun, seeds: &[u64]) -> Vec<Result<GameOutcome, HarnessError>> {
    #[cfg(feature = "parallel")]
    {
        run_batch_parallel(prepared, seeds)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_batch_sequential(prepared, seeds)
    }
}

/// Mean table row over finished games.
pub fn aggregate(label: &str, outcomes: &[GameOutcome]) -> TableRow {
    let rows: Vec<TableRow> = outcomes.iter().map(|o| o.report.table_row(label)).collect();
    TableRow::mean_of(label, &rows)
}

#[derive(Debug, Clone)]
pub struct BatchOutcome {
    pub bundles: Vec<ReportBundle>,
    pub row: TableRow,
    pub table_path: std::path::PathBuf,
}

/// Plays every configured seed, persists each game and writes
/// `<out>/<script id>-table.md` with the mean row. The first failed game
/// aborts the batch after the others have finished.
pub fn run_all(config: RunConfig) -> Result<BatchOutcome, HarnessError> {
    let prepared = PreparedRun::new(config)?;
    let seeds = prepared.seeds();
    let outcomes = run_batch(&prepared, &seeds)
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let out: &Path = &prepared.config.output_dir;
    let bundles = outcomes
        .iter()
        .map(|o| persist(o, &prepared.script.id, out))
        .collect::<Result<Vec<_>, _>>()?;
    let row = aggregate(&prepared.label(), &outcomes);
    let table_path = out.join(format!("{}-table.md", prepared.script.id));
    std::fs::write(&table_path, render_table(std::slice::from_ref(&row))).map_err(|source| {
        HarnessError::Io {
            path: table_path.clone(),
            source,
        }
    })?;
    Ok(BatchOutcome {
        bundles,
        row,
        table_path,
    })
}
