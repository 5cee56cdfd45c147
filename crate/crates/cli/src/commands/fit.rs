use super::{margin_refs, pit, required};
use crate::config;
use crate::exit::{fail, CliResult, WithCode, ESTIMATION, VALIDATION};
use crate::io::{self, MarginFile};
use hetcop::inference::{default_start, fit_mcmc, fit_mle, FitReport, McmcConfig, MetricFn, MetricSummary, MleOptions};
use hetcop::margins::Margin;
use hetcop::volcop::rho_v_lag1;
use hetcop::{DVineSpec, Family};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::path::{Path, PathBuf};

#[derive(clap::Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Args {
    /// Input CSV, one column per series.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Pair-copula family: A (mixture of t), B (mixture of convex Gumbel),
    /// or any family name.
    #[arg(long)]
    pub family: Option<String>,
    /// Markov order.
    #[arg(long)]
    pub p: Option<usize>,
    /// mle | mcmc
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Use these margins instead of fitting KDE margins.
    #[arg(long)]
    pub margins: Option<PathBuf>,
    #[arg(long)]
    pub starts: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub metric_thin: Option<usize>,
}

/// Lag-one Spearman metrics of a univariate vine.
fn lag_one_metrics(spec: &DVineSpec, margin: &dyn Margin) -> hetcop::Result<Vec<(String, f64)>> {
    Ok(vec![
        ("rho_y1".to_string(), spec.pairs()[0].spearman_rho()),
        ("rho_v1".to_string(), rho_v_lag1(spec, margin)?),
    ])
}

fn write_chain(dir: &Path, spec: &DVineSpec, chain: &[hetcop::inference::ChainRow]) -> anyhow::Result<()> {
    let mut names = Vec::new();
    for ((k, l1, l2), c) in spec.labels().into_iter().zip(spec.pairs()) {
        for n in c.family().param_names() {
            names.push(format!("k{k}_l{l1}_l{l2}_{n}"));
        }
    }
    let path = dir.join("chain.csv");
    let mut w = csv::Writer::from_path(&path)?;
    let mut header = vec!["iteration".to_string(), "loglik".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for r in chain {
        let mut rec = vec![r.iteration.to_string(), format!("{}", r.loglik)];
        rec.extend(r.x.iter().map(|x| format!("{x}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn write_failure(dir: &Path, stage: &str, err: &str) {
    let doc = json!({ "schema": io::SCHEMA, "error": err, "stage": stage });
    let _ = io::write_json(&dir.join("report.json"), &doc);
}

pub fn run(a: &Args) -> CliResult<()> {
    let mut a = a.clone();
    a.seed = Some(config::seed(a.seed)?);
    let seed = a.seed.unwrap();
    let data = super::existing(&a.data, "data")?;
    let out_dir = required(&a.out_dir, "out-dir")?.clone();
    let family: Family = a.family.get_or_insert_with(|| "A".into()).parse().invalid()?;
    let p = *a.p.get_or_insert(1);
    if p == 0 {
        return fail(VALIDATION, "--p must be at least 1");
    }
    let method = a.method.get_or_insert_with(|| "mle".into()).clone();
    if method != "mle" && method != "mcmc" {
        return fail(VALIDATION, format!("unknown --method '{method}' (mle, mcmc)"));
    }

    let table = io::read_table(&data).invalid()?;
    let m = table.width();
    let mf: MarginFile = match &a.margins {
        Some(path) => {
            let mf = io::read_margins(path).invalid()?;
            if mf.margins.len() != m {
                return fail(VALIDATION, format!("{} margins for {m} columns", mf.margins.len()));
            }
            mf
        }
        None => pit::fit_margins(&table, None).invalid()?,
    };
    let u = pit::pit_table(&table, &mf).stacked();
    let start = family.build(&default_start(family)).invalid()?;
    let template = DVineSpec::uniform(m, p, start).invalid()?;
    io::ensure_dir(&out_dir).invalid()?;
    io::write_document(&out_dir.join("margins.json"), "margins", &mf).invalid()?;

    let margins = margin_refs(&mf.margins);
    let metric = |s: &DVineSpec| lag_one_metrics(s, margins[0]);
    let report: FitReport = if method == "mle" {
        let opts = MleOptions { starts: *a.starts.get_or_insert(5), seed, ..MleOptions::default() };
        let fit = match fit_mle(&template, &u, &opts) {
            Ok(f) => f,
            Err(e) => {
                write_failure(&out_dir, "mle", &e.to_string());
                return Err(e).code(ESTIMATION);
            }
        };
        let mut report = fit.report;
        if m == 1 {
            match lag_one_metrics(&fit.spec, margins[0]) {
                Ok(ms) => report.metrics = ms
                    .into_iter()
                    .map(|(name, estimate)| MetricSummary { name, estimate, se: None, lower: None, upper: None })
                    .collect(),
                Err(e) => eprintln!("warning: metrics not computed: {e}"),
            }
        }
        report
    } else {
        let defaults = McmcConfig::default();
        let cfg = McmcConfig {
            iterations: *a.iterations.get_or_insert(defaults.iterations),
            burn_in: *a.burn_in.get_or_insert(defaults.burn_in),
            thin: *a.thin.get_or_insert(defaults.thin),
            metric_thin: *a.metric_thin.get_or_insert(defaults.metric_thin),
            seed,
            ..defaults
        };
        cfg.validate().invalid()?;
        let mfn: Option<&MetricFn> = if m == 1 { Some(&metric) } else { None };
        let res = match fit_mcmc(&template, &u, &cfg, mfn) {
            Ok(r) => r,
            Err(e) => {
                write_failure(&out_dir, "mcmc", &e.to_string());
                return Err(e).code(ESTIMATION);
            }
        };
        write_chain(&out_dir, &res.spec, &res.chain).invalid()?;
        res.report
    };

    io::write_document(&out_dir.join("model.json"), "model", &report.model).invalid()?;
    io::write_document(&out_dir.join("report.json"), "report", &report).invalid()?;
    io::write_json(&out_dir.join("config.json"), &config::echo("fit", &a)).invalid()?;
    if !report.converged {
        return fail(ESTIMATION, "optimizer stopped at its iteration limit before converging; report written");
    }
    Ok(())
}
