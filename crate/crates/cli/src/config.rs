//! INI-style run configuration.
//!
//! ```ini
//! [domain]
//! x_left = 0
//! x_right = 1
//! period = 1
//!
//! [grid]
//! nx = 32
//! steps_per_period = 128
//!
//! [bc1]
//! type = neumann        ; neumann | robin | dirichlet
//!
//! [bc2]
//! type = robin
//! b_left = 1
//! b_right = 0.5 + 0.1*sin(2*pi*t)
//!
//! [coefficients]
//! rho = 1
//! ...
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use ini::{Ini, ParseOption};
use vectorhost::{BoundarySpec, CoefficientSet, Expression, Grid, Problem, SolverOptions};

use crate::CliError;

const SECTIONS: [(&str, &[&str]); 8] = [
    ("domain", &["x_left", "x_right", "period"]),
    ("grid", &["nx", "steps_per_period"]),
    ("bc1", &["type", "b_left", "b_right"]),
    ("bc2", &["type", "b_left", "b_right"]),
    ("coefficients", &CoefficientSet::FIELDS),
    (
        "solver",
        &["eigen_tol", "eigen_max_iters", "periodic_tol", "max_periods", "band", "blowup_cap"],
    ),
    (
        "run",
        &["initial", "h_i0", "v_u0", "v_i0", "n_periods", "stride", "target", "eps"],
    ),
    ("sweep", &["parameter", "field", "template", "values"]),
];

/// Initial data for trajectory runs.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// Expressions in `x` for `(H_i, V_u, V_i)`.
    Expressions([Expression; 3]),
    /// Independent uniform values in `[0.1, 1)` per node, drawn from `--seed`.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub initial: InitialData,
    pub n_periods: usize,
    pub stride: usize,
    pub target: f64,
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub parameter: String,
    /// Coefficient replaced by `template`; `None` when the parameter only
    /// appears as `{parameter}` placeholders.
    pub field: Option<String>,
    pub template: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub problem: Problem,
    pub solver: SolverOptions,
    pub run: RunConfig,
    pub sweep: Option<SweepConfig>,
    /// Coefficient sources after overrides, before parsing; sweeps substitute into these.
    pub coefficient_sources: BTreeMap<String, String>,
}

/// Raw `section -> key -> value` table with overrides applied.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, BTreeMap<String, String>>,
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RawConfig {
    pub fn load(path: &Path) -> Result<RawConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        RawConfig::parse(&text)
    }

    pub fn parse(text: &str) -> Result<RawConfig, CliError> {
        let opt = ParseOption {
            enabled_quote: false,
            enabled_escape: false,
            ..ParseOption::default()
        };
        let ini = Ini::load_from_str_opt(text, opt).map_err(|e| config_error(format!("syntax: {e}")))?;
        let mut raw = RawConfig::default();
        for (section, props) in ini.iter() {
            let Some(section) = section else {
                if props.iter().next().is_some() {
                    return Err(config_error("keys outside a [section]"));
                }
                continue;
            };
            for (key, value) in props.iter() {
                raw.set(section, key, strip_comment(value))?;
            }
        }
        Ok(raw)
    }

    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<(), CliError> {
        let known = SECTIONS
            .iter()
            .find(|(s, _)| *s == section)
            .ok_or_else(|| config_error(format!("unknown section [{section}]")))?;
        if !known.1.contains(&key) {
            return Err(config_error(format!("unknown key {section}.{key}")));
        }
        self.entries
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    /// Applies `section.key=value`.
    pub fn apply_override(&mut self, spec: &str) -> Result<(), CliError> {
        let (path, value) = spec
            .split_once('=')
            .ok_or_else(|| config_error(format!("override `{spec}` is not section.key=value")))?;
        let (section, key) = path
            .trim()
            .split_once('.')
            .ok_or_else(|| config_error(format!("override key `{path}` is not section.key")))?;
        self.set(section.trim(), key.trim(), value)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.entries.get(section)?.get(key).map(String::as_str)
    }

    fn require(&self, section: &str, key: &str) -> Result<&str, CliError> {
        self.get(section, key)
            .ok_or_else(|| config_error(format!("missing {section}.{key}")))
    }

    fn number<T: std::str::FromStr>(&self, section: &str, key: &str, default: Option<T>) -> Result<T, CliError> {
        match (self.get(section, key), default) {
            (Some(s), _) => s
                .parse()
                .map_err(|_| config_error(format!("{section}.{key} = `{s}` is not a valid number"))),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(config_error(format!("missing {section}.{key}"))),
        }
    }

    fn positive(&self, section: &str, key: &str, default: Option<f64>) -> Result<f64, CliError> {
        let v: f64 = self.number(section, key, default)?;
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(config_error(format!("{section}.{key} must be positive, got {v}")))
        }
    }

    fn count(&self, section: &str, key: &str, default: Option<usize>) -> Result<usize, CliError> {
        let v: usize = self.number(section, key, default)?;
        if v == 0 {
            return Err(config_error(format!("{section}.{key} must be positive")));
        }
        Ok(v)
    }

    pub fn build(&self) -> Result<Config, CliError> {
        let grid = Grid::new(
            self.number("domain", "x_left", None)?,
            self.number("domain", "x_right", None)?,
            self.count("grid", "nx", None)?,
            self.positive("domain", "period", Some(1.0))?,
            self.count("grid", "steps_per_period", None)?,
        )
        .map_err(|e| config_error(e.to_string()))?;

        let mut coefficient_sources = BTreeMap::new();
        for name in CoefficientSet::FIELDS {
            coefficient_sources.insert(name.to_string(), self.require("coefficients", name)?.to_string());
        }
        let sweep = self.sweep()?;
        // outside a sweep the parameter takes its first value
        let first = sweep.as_ref().and_then(|s| s.values.first().copied()).unwrap_or(1.0);
        let coeffs = parse_coefficients(&substitute_all(&coefficient_sources, sweep.as_ref(), first)?)?;

        let problem = Problem::new(grid, coeffs, self.boundary("bc1")?, self.boundary("bc2")?);
        let defaults = SolverOptions::default();
        let solver = SolverOptions {
            eigen_tol: self.positive("solver", "eigen_tol", Some(defaults.eigen_tol))?,
            eigen_max_iters: self.count("solver", "eigen_max_iters", Some(defaults.eigen_max_iters))?,
            periodic_tol: self.positive("solver", "periodic_tol", Some(defaults.periodic_tol))?,
            max_periods: self.count("solver", "max_periods", Some(defaults.max_periods))?,
            band: self.positive("solver", "band", Some(defaults.band))?,
            blowup_cap: self.positive("solver", "blowup_cap", Some(defaults.blowup_cap))?,
        };
        Ok(Config {
            problem,
            solver,
            run: self.run()?,
            sweep,
            coefficient_sources,
        })
    }

    fn boundary(&self, section: &str) -> Result<BoundarySpec, CliError> {
        let kind = self.get(section, "type").unwrap_or("neumann");
        let has_b = self.get(section, "b_left").is_some() || self.get(section, "b_right").is_some();
        match kind {
            "neumann" | "dirichlet" if has_b => Err(config_error(format!(
                "{section}: b_left/b_right only apply to type = robin"
            ))),
            "neumann" => Ok(BoundarySpec::neumann()),
            "dirichlet" => Ok(BoundarySpec::Dirichlet),
            "robin" => {
                let parse = |key: &str| -> Result<Expression, CliError> {
                    let s = self.require(section, key)?;
                    Expression::parse(s).map_err(|e| config_error(format!("{section}.{key}: {e}")))
                };
                Ok(BoundarySpec::robin(parse("b_left")?, parse("b_right")?))
            }
            other => Err(config_error(format!(
                "{section}.type = `{other}` (expected neumann, robin or dirichlet)"
            ))),
        }
    }

    fn run(&self) -> Result<RunConfig, CliError> {
        let initial = match self.get("run", "initial").unwrap_or("expressions") {
            "random" => InitialData::Random,
            "expressions" => {
                let parse = |key: &str, default: &str| -> Result<Expression, CliError> {
                    let s = self.get("run", key).unwrap_or(default);
                    Expression::parse(s).map_err(|e| config_error(format!("run.{key}: {e}")))
                };
                InitialData::Expressions([parse("h_i0", "1")?, parse("v_u0", "0.5")?, parse("v_i0", "0.1")?])
            }
            other => {
                return Err(config_error(format!(
                    "run.initial = `{other}` (expected expressions or random)"
                )))
            }
        };
        let eps = match self.get("run", "eps") {
            None => None,
            Some(_) => {
                let e: f64 = self.number("run", "eps", None)?;
                if !(e.is_finite() && e >= 0.0) {
                    return Err(config_error(format!("run.eps must be nonnegative, got {e}")));
                }
                Some(e)
            }
        };
        Ok(RunConfig {
            initial,
            n_periods: self.count("run", "n_periods", Some(40))?,
            stride: self.count("run", "stride", Some(1))?,
            target: self.positive("run", "target", Some(1e-3))?,
            eps,
        })
    }

    fn sweep(&self) -> Result<Option<SweepConfig>, CliError> {
        let Some(parameter) = self.get("sweep", "parameter") else {
            return Ok(None);
        };
        if parameter.is_empty() || !parameter.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(config_error(format!("sweep.parameter = `{parameter}` is not a plain name")));
        }
        let values = self
            .get("sweep", "values")
            .unwrap_or("")
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| config_error(format!("sweep.values: `{s}` is not a number")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let field = match self.get("sweep", "field") {
            Some(f) if CoefficientSet::FIELDS.contains(&f) => Some(f.to_string()),
            Some(f) => return Err(config_error(format!("sweep.field = `{f}` is not a coefficient"))),
            None if CoefficientSet::FIELDS.contains(&parameter) => Some(parameter.to_string()),
            None => None,
        };
        let placeholder = format!("{{{parameter}}}");
        let used = CoefficientSet::FIELDS
            .iter()
            .any(|k| self.get("coefficients", k).is_some_and(|s| s.contains(&placeholder)));
        if field.is_none() && !used {
            return Err(config_error(format!(
                "sweep parameter `{parameter}` is neither a coefficient nor a {placeholder} placeholder"
            )));
        }
        Ok(Some(SweepConfig {
            parameter: parameter.to_string(),
            field,
            template: self.get("sweep", "template").unwrap_or(&placeholder).to_string(),
            values,
        }))
    }
}

fn strip_comment(value: &str) -> &str {
    match value.find([';', '#']) {
        Some(i) => value[..i].trim_end(),
        None => value,
    }
}

/// Coefficient sources for one sweep value.
pub fn substitute_all(
    sources: &BTreeMap<String, String>,
    sweep: Option<&SweepConfig>,
    value: f64,
) -> Result<BTreeMap<String, String>, CliError> {
    let Some(sweep) = sweep else {
        return Ok(sources.clone());
    };
    let placeholder = format!("{{{}}}", sweep.parameter);
    let literal = format!("({value:e})");
    let mut out: BTreeMap<String, String> = sources
        .iter()
        .map(|(k, v)| (k.clone(), v.replace(&placeholder, &literal)))
        .collect();
    if let Some(field) = &sweep.field {
        out.insert(field.clone(), sweep.template.replace(&placeholder, &literal));
    }
    Ok(out)
}

pub fn parse_coefficients(sources: &BTreeMap<String, String>) -> Result<CoefficientSet, CliError> {
    let get = |name: &str| sources.get(name).map(String::as_str).unwrap_or("");
    let strs = CoefficientSet::FIELDS.map(get);
    CoefficientSet::from_strs(strs).map_err(|e| {
        let name = CoefficientSet::FIELDS
            .iter()
            .find(|n| Expression::parse(get(n)).is_err())
            .copied()
            .unwrap_or("coefficients");
        config_error(format!("coefficients.{name}: {e}"))
    })
}
