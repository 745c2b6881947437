//! Regime classification over a list of parameter values.

use rayon::prelude::*;
use vectorhost::{classify_regime, Problem, RegimeReport};

use crate::commands::Outcome;
use crate::config::{parse_coefficients, substitute_all, Config};
use crate::output::{num, OutputDir, Report};
use crate::CliError;

fn classify_value(config: &Config, value: f64) -> Result<RegimeReport, CliError> {
    let sources = substitute_all(&config.coefficient_sources, config.sweep.as_ref(), value)?;
    let p = &config.problem;
    let problem = Problem::new(p.grid.clone(), parse_coefficients(&sources)?, p.bc1.clone(), p.bc2.clone());
    let v = problem.validate();
    if !v.pass() {
        return Err(CliError::Hypothesis(v.violations[0].to_string()));
    }
    Ok(classify_regime(&problem, &config.solver)?)
}

/// Rows come back in input order regardless of which worker finishes first.
pub fn classify_all(config: &Config, values: &[f64]) -> Vec<Result<RegimeReport, CliError>> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(values.len().max(1));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool");
    pool.install(|| values.par_iter().map(|&v| classify_value(config, v)).collect())
}

pub fn run(config: &Config, out: &OutputDir) -> Result<Outcome, CliError> {
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep needs a [sweep] section".into()))?;
    if sweep.values.is_empty() {
        return Err(CliError::Config("sweep.values is empty".into()));
    }
    let results = classify_all(config, &sweep.values);
    let mut rows = Vec::with_capacity(results.len());
    let mut r = Report::default();
    r.push("parameter", sweep.parameter.clone());
    r.push("rows", results.len().to_string());
    let mut first_error = None;
    let mut succeeded = 0;
    for (value, res) in sweep.values.iter().zip(&results) {
        match res {
            Ok(rep) => {
                succeeded += 1;
                let lambda = rep.lambda_v.map_or(String::new(), num);
                rows.push(vec![num(*value), num(rep.zeta), lambda, rep.regime.label().to_string()]);
            }
            Err(e) => {
                r.push("row_error", format!("{}: {e}", num(*value)));
                first_error.get_or_insert_with(|| e.clone());
                rows.push(vec![num(*value), String::new(), String::new(), "ERROR".to_string()]);
            }
        }
    }
    r.push("succeeded", succeeded.to_string());
    out.write_csv("sweep.csv", &["value", "zeta", "lambda_V", "regime"], &rows)?;
    let error = if succeeded == 0 { first_error } else { None };
    Ok(Outcome { report: r, error })
}
