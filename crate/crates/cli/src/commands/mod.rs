pub mod backtest;
pub mod fit;
pub mod metrics;
pub mod pit;
pub mod replicate;
pub mod simulate;

use crate::exit::{fail, CliResult, VALIDATION};
use hetcop::margins::{AnyMargin, Margin};
use std::path::PathBuf;

pub fn required<'a, T>(v: &'a Option<T>, flag: &str) -> CliResult<&'a T> {
    match v {
        Some(x) => Ok(x),
        None => fail(VALIDATION, format!("--{flag} is required")),
    }
}

pub fn existing(path: &Option<PathBuf>, flag: &str) -> CliResult<PathBuf> {
    let p = required(path, flag)?;
    if !p.exists() {
        return fail(VALIDATION, format!("--{flag}: {} does not exist", p.display()));
    }
    Ok(p.clone())
}

pub fn margin_refs(ms: &[AnyMargin]) -> Vec<&dyn Margin> {
    ms.iter().map(|m| m as &dyn Margin).collect()
}
