use super::{existing, required};
use crate::config;
use crate::exit::{fail, CliResult, WithCode, VALIDATION};
use crate::io::{self, Table};
use hetcop::datagen::{simulate_copula_model, ArchParams, GarchParams, SvParams};
use hetcop::replicate::Dgp;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(clap::Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Args {
    /// arch1 | arch | garch | sv | copula
    #[arg(long)]
    pub dgp: Option<String>,
    #[arg(long)]
    pub alpha0: Option<f64>,
    /// ARCH(1) coefficient.
    #[arg(long)]
    pub alpha1: Option<f64>,
    /// ARCH(q) coefficients, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub h_bar: Option<f64>,
    #[arg(long)]
    pub phi1: Option<f64>,
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Model file (for --dgp copula).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Margin file (for --dgp copula).
    #[arg(long)]
    pub margins: Option<PathBuf>,
    /// Number of time points.
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub t: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn need(v: Option<f64>, flag: &str) -> CliResult<f64> {
    required(&v, flag).copied()
}

pub fn run(a: &Args) -> CliResult<()> {
    let mut a = a.clone();
    a.seed = Some(config::seed(a.seed)?);
    let seed = a.seed.unwrap();
    let t = *required(&a.t, "T")?;
    if t == 0 {
        return fail(VALIDATION, "--T must be positive");
    }
    let out = required(&a.out, "out")?.clone();
    let dgp = required(&a.dgp, "dgp")?.as_str();
    let table = match dgp {
        "arch1" | "arch" | "garch" | "sv" => {
            let process = match dgp {
                "arch1" => Dgp::Arch(ArchParams { alpha0: need(a.alpha0, "alpha0")?, alphas: vec![need(a.alpha1, "alpha1")?] }),
                "arch" => Dgp::Arch(ArchParams { alpha0: need(a.alpha0, "alpha0")?, alphas: required(&a.alphas, "alphas")?.clone() }),
                "garch" => Dgp::Garch(GarchParams {
                    alpha0: need(a.alpha0, "alpha0")?,
                    alpha1: need(a.alpha1, "alpha1")?,
                    beta1: need(a.beta1, "beta1")?,
                }),
                _ => Dgp::Sv(SvParams {
                    h_bar: need(a.h_bar, "h-bar")?,
                    phi1: need(a.phi1, "phi1")?,
                    sigma2: need(a.sigma2, "sigma2")?,
                }),
            };
            let y = process.simulate(t, seed).invalid()?;
            Table::new(Table::series_headers(1), y.into_iter().map(|v| vec![v]).collect())
        }
        "copula" => {
            let spec = io::read_model(&existing(&a.model, "model")?).invalid()?;
            let mf = io::read_margins(&existing(&a.margins, "margins")?).invalid()?;
            if mf.margins.len() != spec.m() {
                return fail(VALIDATION, format!("{} margins for a {}-dimensional model", mf.margins.len(), spec.m()));
            }
            let refs = super::margin_refs(&mf.margins);
            let rows = simulate_copula_model(&spec, &refs, t, seed).invalid()?;
            let headers = if mf.columns.len() == spec.m() { mf.columns.clone() } else { Table::series_headers(spec.m()) };
            Table::new(headers, rows)
        }
        other => return fail(VALIDATION, format!("unknown --dgp '{other}' (arch1, arch, garch, sv, copula)")),
    };
    io::write_table(&out, &table).invalid()?;
    io::write_json(&io::sidecar(&out), &config::echo("simulate", &a)).invalid()?;
    Ok(())
}
