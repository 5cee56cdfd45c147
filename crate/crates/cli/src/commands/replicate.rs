use super::required;
use crate::config;
use crate::exit::{fail, CliResult, WithCode, REPLICATION, VALIDATION};
use crate::io;
use hetcop::replicate::{
    arch3_case, arch3_cases, simstudy, table2_case, table2_cases, Arch3Config, Arch3Result, SimstudyConfig,
    SimstudyResult, Table2Config, Table2Row,
};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(clap::ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Study {
    Table2,
    Arch3,
    Simstudy,
}

#[derive(clap::Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Args {
    /// Study to run.
    #[arg(value_enum)]
    pub study: Option<Study>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Length of each simulated data series.
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub t: Option<usize>,
    /// 1-based case numbers to run (table2, arch3); default all.
    #[arg(long, value_delimiter = ',')]
    pub cases: Option<Vec<usize>>,
    /// Monte Carlo replicates (simstudy).
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Length of the long simulated paths used for model curves.
    #[arg(long)]
    pub sim_len: Option<usize>,
}

fn pick<T: Clone>(all: &[T], cases: &Option<Vec<usize>>) -> CliResult<Vec<T>> {
    match cases {
        None => Ok(all.to_vec()),
        Some(c) => c
            .iter()
            .map(|&i| match i.checked_sub(1).and_then(|j| all.get(j)) {
                Some(x) => Ok(x.clone()),
                None => fail(VALIDATION, format!("--cases: {i} outside 1..={}", all.len())),
            })
            .collect(),
    }
}

fn status(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn run_table2(a: &Args, seed: u64, dir: &Path) -> CliResult<bool> {
    let mut cfg = Table2Config { seed, ..Table2Config::default() };
    if let Some(t) = a.t {
        cfg.t_len = t;
    }
    let cases = pick(&table2_cases(), &a.cases)?;
    let mut rows: Vec<Table2Row> = Vec::new();
    for (i, case) in cases.iter().enumerate() {
        let row = table2_case(case, &cfg)
            .map_err(|e| anyhow::anyhow!("stage table2 case {} ({}): {e}", i + 1, case.dgp.label()))
            .code(REPLICATION)?;
        rows.push(row);
    }
    #[derive(Serialize)]
    struct Csv<'a> {
        dgp: &'a str,
        rho_v_fit: f64,
        rho_v_emp: f64,
        rho_y_fit: f64,
        rho_y_emp: f64,
        pass: bool,
    }
    let csv: Vec<Csv> = rows
        .iter()
        .map(|r| Csv {
            dgp: &r.label,
            rho_v_fit: r.rho_v_fit,
            rho_v_emp: r.rho_v_emp,
            rho_y_fit: r.rho_y_fit,
            rho_y_emp: r.rho_y_emp,
            pass: r.pass(),
        })
        .collect();
    io::write_records(&dir.join("table2.csv"), &csv).invalid()?;
    let mut txt = String::new();
    for r in &rows {
        for c in &r.checks {
            let _ = writeln!(
                txt,
                "{} {} {}: {:.4} vs {:.4} ± {:.3}",
                status(c.pass),
                r.label,
                c.name,
                c.value,
                c.target,
                c.tol
            );
        }
    }
    let pass = rows.iter().all(Table2Row::pass);
    finish(dir, "table2", &json!(rows), &txt, pass)
}

fn run_arch3(a: &Args, seed: u64, dir: &Path) -> CliResult<bool> {
    let mut cfg = Arch3Config { seed, ..Arch3Config::default() };
    if let Some(t) = a.t {
        cfg.t_len = t;
    }
    if let Some(n) = a.sim_len {
        cfg.sim_len = n;
    }
    let cases = pick(&arch3_cases(), &a.cases)?;
    let mut results: Vec<Arch3Result> = Vec::new();
    for (i, params) in cases.iter().enumerate() {
        let r = arch3_case(params, &cfg)
            .map_err(|e| anyhow::anyhow!("stage arch3 case {}: {e}", i + 1))
            .code(REPLICATION)?;
        results.push(r);
    }
    #[derive(Serialize)]
    struct Csv {
        case: usize,
        lag: usize,
        alpha: f64,
        model_low: f64,
        model_up: f64,
        empirical_low: f64,
        empirical_up: f64,
    }
    let mut txt = String::new();
    for (i, r) in results.iter().enumerate() {
        let n = i + 1;
        for c in &r.curves {
            let rows: Vec<Csv> = c
                .model
                .iter()
                .zip(&c.empirical)
                .map(|(m, e)| Csv {
                    case: n,
                    lag: c.lag,
                    alpha: m.alpha,
                    model_low: m.low,
                    model_up: m.up,
                    empirical_low: e.low,
                    empirical_up: e.up,
                })
                .collect();
            io::write_records(&dir.join(format!("arch3_case{n}_lag{}.csv", c.lag)), &rows).invalid()?;
        }
        let _ = writeln!(
            txt,
            "{} case {n} {:?}: max gap {:.4} (tol {:.3})",
            status(r.pass),
            r.params.alphas,
            r.max_gap,
            cfg.tol
        );
    }
    let pass = results.iter().all(|r| r.pass);
    finish(dir, "arch3", &json!(results), &txt, pass)
}

fn run_simstudy(a: &Args, seed: u64, dir: &Path) -> CliResult<bool> {
    let mut cfg = SimstudyConfig { seed, ..SimstudyConfig::default() };
    if let Some(t) = a.t {
        cfg.t_len = t;
    }
    if let Some(r) = a.replicates {
        cfg.replicates = r;
    }
    if let Some(n) = a.sim_len {
        cfg.sim_len = n;
    }
    let res: SimstudyResult = simstudy(&cfg)
        .map_err(|e| anyhow::anyhow!("stage simstudy: {e}"))
        .code(REPLICATION)?;
    #[derive(Serialize)]
    struct Csv<'a> {
        truth: &'a str,
        lag: usize,
        true_rho_v: f64,
        rmse_correct: f64,
        rmse_misspecified: f64,
        ratio: f64,
        median_ratio: f64,
    }
    let mut rows = Vec::new();
    for arm in [&res.arch_truth, &res.copula_truth] {
        for k in 0..arm.true_rho_v.len() {
            rows.push(Csv {
                truth: &arm.truth,
                lag: k + 1,
                true_rho_v: arm.true_rho_v[k],
                rmse_correct: arm.rmse_correct[k],
                rmse_misspecified: arm.rmse_misspecified[k],
                ratio: arm.ratio[k],
                median_ratio: arm.median_ratio[k],
            });
        }
    }
    io::write_records(&dir.join("simstudy.csv"), &rows).invalid()?;
    let txt = format!(
        "{} lag-1 RMSE ratio: copula fitted to ARCH data {:.3} < ARCH fitted to copula data {:.3}\n",
        status(res.pass),
        res.arch_truth.ratio[0],
        res.copula_truth.ratio[0]
    );
    finish(dir, "simstudy", &json!(res), &txt, res.pass)
}

fn finish(dir: &Path, study: &str, body: &serde_json::Value, txt: &str, pass: bool) -> CliResult<bool> {
    let doc = json!({ "schema": io::SCHEMA, "study": study, "pass": pass, "summary": body });
    io::write_json(&dir.join("summary.json"), &doc).invalid()?;
    std::fs::write(dir.join("summary.txt"), txt).invalid()?;
    print!("{txt}");
    Ok(pass)
}

pub fn run(a: &Args) -> CliResult<()> {
    let mut a = a.clone();
    let study = *required(&a.study, "study")?;
    a.seed = Some(config::seed(a.seed)?);
    let seed = a.seed.unwrap();
    let dir = required(&a.out_dir, "out-dir")?.clone();
    if a.t.is_some_and(|t| t < 500) {
        return fail(VALIDATION, "--T must be at least 500");
    }
    if a.replicates == Some(0) {
        return fail(VALIDATION, "--replicates must be positive");
    }
    io::ensure_dir(&dir).invalid()?;
    io::write_json(&dir.join("config.json"), &config::echo("replicate", &a)).invalid()?;
    let pass = match study {
        Study::Table2 => run_table2(&a, seed, &dir)?,
        Study::Arch3 => run_arch3(&a, seed, &dir)?,
        Study::Simstudy => run_simstudy(&a, seed, &dir)?,
    };
    if !pass {
        return fail(REPLICATION, "study finished outside its tolerances; see summary.txt");
    }
    Ok(())
}
