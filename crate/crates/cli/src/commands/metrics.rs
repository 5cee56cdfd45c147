use super::{margin_refs, required};
use crate::config;
use crate::exit::{fail, CliResult, WithCode, ESTIMATION, VALIDATION};
use crate::io;
use hetcop::margins::Margin;
use hetcop::volcop::{
    dependence_matrices, empirical_quantile_dependence, empirical_rho, quantile_dependence, rho_v_lag1,
    rho_v_simulated, vol_copula_cdf, DependenceReport, QuantileDependence, VolTransform, VolatilityMargin,
};
use hetcop::DVineSpec;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::path::{Path, PathBuf};

#[derive(clap::Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Args {
    /// model.json from `fit`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// margins.json from `fit` or `pit`.
    #[arg(long)]
    pub margins: Option<PathBuf>,
    /// Optional data CSV for empirical counterparts.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Comma-separated lags; 0 gives contemporaneous matrices when m > 1.
    #[arg(long, value_delimiter = ',')]
    pub lags: Option<Vec<usize>>,
    /// Comma-separated quantile levels.
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    /// Monte Carlo draws for simulated metrics.
    #[arg(long)]
    pub draws: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn default_alphas() -> Vec<f64> {
    (1..=19).map(|i| i as f64 * 0.05).collect()
}

#[derive(Serialize)]
struct RhoRow {
    source: &'static str,
    lag: usize,
    rho_y: f64,
    rho_y_se: Option<f64>,
    rho_v: f64,
    rho_v_se: Option<f64>,
}

#[derive(Serialize)]
struct MatrixRow {
    lag: usize,
    i: usize,
    j: usize,
    rho_y: f64,
    rho_y_se: f64,
    rho_v: f64,
    rho_v_se: f64,
}

fn univariate(
    spec: &DVineSpec,
    margin: &dyn Margin,
    lags: &[usize],
    alphas: &[f64],
    draws: usize,
    seed: u64,
) -> hetcop::Result<DependenceReport> {
    let pair = &spec.pairs()[0];
    let vm = VolatilityMargin::new(margin);
    let mut r = DependenceReport {
        lags: lags.to_vec(),
        rho_y: Vec::new(),
        rho_v: Vec::new(),
        rho_y_se: Vec::new(),
        rho_v_se: Vec::new(),
        quantile_dependence: quantile_dependence(|a, b| pair.cdf(a, b), alphas)?,
        vol_quantile_dependence: quantile_dependence(|a, b| vol_copula_cdf(pair, &vm, &vm, a, b), alphas)?,
        tail_dependence: Some(pair.tail_dependence()),
        matrices: None,
    };
    for &k in lags {
        if k == 1 {
            r.rho_y.push(pair.spearman_rho());
            r.rho_v.push(rho_v_lag1(spec, margin)?);
            r.rho_y_se.push(None);
            r.rho_v_se.push(None);
        } else {
            let s = rho_v_simulated(spec, &[margin], k, 0, 0, draws, seed.wrapping_add(k as u64), VolTransform::Abs)?;
            r.rho_y.push(s.rho_y);
            r.rho_v.push(s.rho_v);
            r.rho_y_se.push(Some(s.rho_y_se));
            r.rho_v_se.push(Some(s.rho_v_se));
        }
    }
    Ok(r)
}

fn write_qd(path: &Path, model: &[QuantileDependence], empirical: Option<&[QuantileDependence]>) -> anyhow::Result<()> {
    #[derive(Serialize)]
    struct Row {
        source: &'static str,
        alpha: f64,
        low: f64,
        up: f64,
        low_up: f64,
        up_low: f64,
    }
    let row = |source, q: &QuantileDependence| Row {
        source,
        alpha: q.alpha,
        low: q.low,
        up: q.up,
        low_up: q.low_up,
        up_low: q.up_low,
    };
    let mut rows: Vec<Row> = model.iter().map(|q| row("model", q)).collect();
    if let Some(e) = empirical {
        rows.extend(e.iter().map(|q| row("empirical", q)));
    }
    io::write_records(path, &rows)
}

pub fn run(a: &Args) -> CliResult<()> {
    let mut a = a.clone();
    a.seed = Some(config::seed(a.seed)?);
    let seed = a.seed.unwrap();
    let spec = io::read_model(&super::existing(&a.model, "model")?).invalid()?;
    let mf = io::read_margins(&super::existing(&a.margins, "margins")?).invalid()?;
    let out_dir = required(&a.out_dir, "out-dir")?.clone();
    let lags = a.lags.get_or_insert_with(|| (1..=5).collect()).clone();
    let alphas = a.alphas.get_or_insert_with(default_alphas).clone();
    let draws = *a.draws.get_or_insert(100_000);

    if alphas.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
        return fail(VALIDATION, "--alphas must lie in (0,1)");
    }
    if draws < 1000 {
        return fail(VALIDATION, "--draws must be at least 1000");
    }
    let m = spec.m();
    if lags.is_empty() || (m == 1 && lags.contains(&0)) {
        return fail(VALIDATION, "--lags must be positive integers (lag 0 only for multivariate models)");
    }
    if mf.margins.len() != m {
        return fail(VALIDATION, format!("model has {m} series but margins file has {}", mf.margins.len()));
    }
    let data = match &a.data {
        Some(p) => {
            let t = io::read_table(p).invalid()?;
            if t.width() != m {
                return fail(VALIDATION, format!("data has {} columns, model has {m}", t.width()));
            }
            Some(t)
        }
        None => None,
    };
    let margins = margin_refs(&mf.margins);
    io::ensure_dir(&out_dir).invalid()?;

    if m == 1 {
        let report = univariate(&spec, margins[0], &lags, &alphas, draws, seed).code(ESTIMATION)?;
        let mut rho_rows: Vec<RhoRow> = lags
            .iter()
            .enumerate()
            .map(|(i, &lag)| RhoRow {
                source: "model",
                lag,
                rho_y: report.rho_y[i],
                rho_y_se: report.rho_y_se[i],
                rho_v: report.rho_v[i],
                rho_v_se: report.rho_v_se[i],
            })
            .collect();
        let mut empirical = serde_json::Value::Null;
        let (mut eqd, mut evqd) = (None, None);
        if let Some(t) = &data {
            let y = t.column(0);
            if y.len() <= *lags.iter().max().unwrap() + 1 {
                return fail(VALIDATION, "data series is shorter than the largest lag");
            }
            let mean = y.iter().sum::<f64>() / y.len() as f64;
            let v: Vec<f64> = y.iter().map(|x| (x - mean).abs()).collect();
            let mut ey = Vec::new();
            let mut ev = Vec::new();
            for &lag in &lags {
                let (ry, rv) = empirical_rho(&y, lag);
                ey.push(ry);
                ev.push(rv);
                rho_rows.push(RhoRow { source: "empirical", lag, rho_y: ry, rho_y_se: None, rho_v: rv, rho_v_se: None });
            }
            let q = empirical_quantile_dependence(&y, 1, &alphas);
            let vq = empirical_quantile_dependence(&v, 1, &alphas);
            empirical = json!({ "rho_y": ey, "rho_v": ev, "quantile_dependence": q, "vol_quantile_dependence": vq });
            eqd = Some(q);
            evqd = Some(vq);
        }
        write_qd(&out_dir.join("quantile_dependence.csv"), &report.quantile_dependence, eqd.as_deref()).invalid()?;
        write_qd(&out_dir.join("vol_quantile_dependence.csv"), &report.vol_quantile_dependence, evqd.as_deref())
            .invalid()?;
        io::write_records(&out_dir.join("rho.csv"), &rho_rows).invalid()?;
        let doc = json!({ "schema": io::SCHEMA, "report": report, "empirical": empirical });
        io::write_json(&out_dir.join("report.json"), &doc).invalid()?;
    } else {
        let mats = dependence_matrices(&spec, &margins, &lags, draws, seed).code(ESTIMATION)?;
        let mut rows = Vec::new();
        for (l, &lag) in lags.iter().enumerate() {
            for i in 0..m {
                for j in 0..m {
                    rows.push(MatrixRow {
                        lag,
                        i: i + 1,
                        j: j + 1,
                        rho_y: mats.rho_y[l][i][j],
                        rho_y_se: mats.rho_y_se[l][i][j],
                        rho_v: mats.rho_v[l][i][j],
                        rho_v_se: mats.rho_v_se[l][i][j],
                    });
                }
            }
        }
        io::write_records(&out_dir.join("rho.csv"), &rows).invalid()?;
        let report = DependenceReport {
            lags: lags.clone(),
            rho_y: Vec::new(),
            rho_v: Vec::new(),
            rho_y_se: Vec::new(),
            rho_v_se: Vec::new(),
            quantile_dependence: Vec::new(),
            vol_quantile_dependence: Vec::new(),
            tail_dependence: None,
            matrices: Some(mats),
        };
        let doc = json!({ "schema": io::SCHEMA, "report": report });
        io::write_json(&out_dir.join("report.json"), &doc).invalid()?;
    }
    io::write_json(&out_dir.join("config.json"), &config::echo("metrics", &a)).invalid()?;
    Ok(())
}
