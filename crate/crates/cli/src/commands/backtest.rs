use super::{margin_refs, required};
use crate::config;
use crate::exit::{fail, CliResult, WithCode, ESTIMATION, VALIDATION};
use crate::io;
use hetcop::forecast::{portfolio_backtest, rolling_backtest, BacktestResult, DEFAULT_ALPHAS, MIN_DAYS};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(clap::Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Args {
    /// model.json from `fit`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// margins.json from `fit` or `pit`.
    #[arg(long)]
    pub margins: Option<PathBuf>,
    /// Data CSV the VaR forecasts are checked against.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Comma-separated VaR levels.
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    /// Output CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo draws per day for multivariate forecasts.
    #[arg(long)]
    pub portfolio_draws: Option<usize>,
    /// Number of final days backtested for multivariate data.
    #[arg(long)]
    pub portfolio_days: Option<usize>,
    /// 1-based column reported next to the portfolio for multivariate data.
    #[arg(long)]
    pub target: Option<usize>,
}

#[derive(Serialize)]
struct Row<'a> {
    target: &'a str,
    alpha: f64,
    days: usize,
    exceedances: usize,
    alpha_hat: f64,
    #[serde(rename = "LR_uc")]
    lr_uc: f64,
    #[serde(rename = "LR_ind")]
    lr_ind: Option<f64>,
    #[serde(rename = "LR_cc")]
    lr_cc: Option<f64>,
    p_cc: Option<f64>,
    reject95: bool,
    reject99: bool,
}

fn row<'a>(target: &'a str, r: &BacktestResult) -> Row<'a> {
    Row {
        target,
        alpha: r.alpha,
        days: r.days,
        exceedances: (r.alpha_hat * r.days as f64).round() as usize,
        alpha_hat: r.alpha_hat,
        lr_uc: r.lr_uc,
        lr_ind: r.lr_ind,
        lr_cc: r.lr_cc,
        p_cc: r.p_cc,
        reject95: r.reject95,
        reject99: r.reject99,
    }
}

pub fn run(a: &Args) -> CliResult<()> {
    let mut a = a.clone();
    let spec = io::read_model(&super::existing(&a.model, "model")?).invalid()?;
    let mf = io::read_margins(&super::existing(&a.margins, "margins")?).invalid()?;
    let table = io::read_table(&super::existing(&a.data, "data")?).invalid()?;
    let out = required(&a.out, "out")?.clone();
    let alphas = a.alphas.get_or_insert_with(|| DEFAULT_ALPHAS.to_vec()).clone();
    if alphas.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
        return fail(VALIDATION, "--alphas must lie in (0,1)");
    }
    let m = spec.m();
    if mf.margins.len() != m || table.width() != m {
        return fail(
            VALIDATION,
            format!("model has {m} series, margins {}, data {}", mf.margins.len(), table.width()),
        );
    }
    let t_len = table.rows.len();
    let margins = margin_refs(&mf.margins);
    let mut rows: Vec<(String, BacktestResult)> = Vec::new();
    if m == 1 {
        if t_len < MIN_DAYS + 1 {
            return fail(VALIDATION, format!("backtests need at least {} observations", MIN_DAYS + 1));
        }
        let res = rolling_backtest(&spec, margins[0], &table.column(0), &alphas).code(ESTIMATION)?;
        rows.extend(res.into_iter().map(|r| (table.headers[0].clone(), r)));
    } else {
        a.seed = Some(config::seed(a.seed)?);
        let seed = a.seed.unwrap();
        let draws = *a.portfolio_draws.get_or_insert(100_000);
        let n_days = *a.portfolio_days.get_or_insert(250.min(t_len - 1));
        if draws < 1000 {
            return fail(VALIDATION, "--portfolio-draws must be at least 1000");
        }
        if n_days < MIN_DAYS || n_days >= t_len {
            return fail(VALIDATION, format!("--portfolio-days must lie in {MIN_DAYS}..{t_len}"));
        }
        let days: Vec<usize> = (t_len - n_days..t_len).collect();
        let target = *a.target.get_or_insert(1);
        if target == 0 || target > m {
            return fail(VALIDATION, format!("--target must lie in 1..={m}"));
        }
        let mut unit = vec![0.0; m];
        unit[target - 1] = 1.0;
        let targets = [
            (table.headers[target - 1].clone(), unit),
            ("portfolio".to_string(), vec![1.0 / m as f64; m]),
        ];
        for (name, w) in targets {
            let res = portfolio_backtest(&spec, &margins, &table.rows, &w, &alphas, &days, draws, seed)
                .code(ESTIMATION)?;
            rows.extend(res.into_iter().map(|r| (name.clone(), r)));
        }
    }
    let records: Vec<Row> = rows.iter().map(|(n, r)| row(n, r)).collect();
    io::write_records(&out, &records).invalid()?;
    io::write_json(&io::sidecar(&out), &config::echo("backtest", &a)).invalid()?;
    Ok(())
}
