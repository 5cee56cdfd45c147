use super::required;
use crate::config;
use crate::exit::{CliResult, WithCode};
use crate::io::{self, MarginFile, Table};
use hetcop::margins::{fit_margin, AnyMargin, KdeConfig, Margin};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(clap::Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Args {
    /// Input CSV, one column per series.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output CSV of PIT values.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output margin file (default: next to --out).
    #[arg(long)]
    pub margins_out: Option<PathBuf>,
    /// KDE grid size.
    #[arg(long)]
    pub grid_points: Option<usize>,
}

pub fn fit_margins(table: &Table, grid_points: Option<usize>) -> anyhow::Result<MarginFile> {
    let mut kde = KdeConfig::default();
    if let Some(g) = grid_points {
        kde.grid_points = g;
    }
    let margins = (0..table.width())
        .map(|j| {
            fit_margin(&table.column(j), &kde)
                .map(AnyMargin::Kde)
                .map_err(|e| anyhow::anyhow!("column '{}': {e}", table.headers[j]))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(MarginFile { columns: table.headers.clone(), margins })
}

pub fn pit_table(table: &Table, mf: &MarginFile) -> Table {
    let rows = table
        .rows
        .iter()
        .map(|r| r.iter().zip(&mf.margins).map(|(&x, m)| m.pit(&[x])[0]).collect())
        .collect();
    Table::new(table.headers.clone(), rows)
}

pub fn run(a: &Args) -> CliResult<()> {
    let mut a = a.clone();
    let data = super::existing(&a.data, "data")?;
    let out = required(&a.out, "out")?.clone();
    let margins_out = a
        .margins_out
        .get_or_insert_with(|| out.with_file_name("margins.json"))
        .clone();
    let table = io::read_table(&data).invalid()?;
    let mf = fit_margins(&table, a.grid_points).invalid()?;
    io::write_table(&out, &pit_table(&table, &mf)).invalid()?;
    io::write_document(&margins_out, "margins", &mf).invalid()?;
    io::write_json(&io::sidecar(&out), &config::echo("pit", &a)).invalid()?;
    Ok(())
}
