//! Model coefficients and the admissibility checks they must pass.
//!
//! Smoothness (Hölder continuity) cannot be decided from samples and is not
//! checked; supplying smooth expressions is the caller's responsibility.

pub mod expr;

use std::fmt;

use crate::grid::{BoundarySpec, Grid};
use expr::Expression;

/// T-periodic coefficient fields of the vector-host model, each a function of `(x, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    /// Host recovery rate.
    pub rho: Expression,
    pub sigma1: Expression,
    pub sigma2: Expression,
    /// Vector recruitment.
    pub beta: Expression,
    pub mu1: Expression,
    /// Density-dependent vector mortality.
    pub mu2: Expression,
    pub d1: Expression,
    pub d2: Expression,
    /// Susceptible host density.
    pub h_u: Expression,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sign {
    Positive,
    NonNegative,
}

impl CoefficientSet {
    /// Parses one expression per field, in the order of [`CoefficientSet::FIELDS`].
    pub fn from_strs(sources: [&str; 9]) -> Result<CoefficientSet, expr::ParseError> {
        let [rho, sigma1, sigma2, beta, mu1, mu2, d1, d2, h_u] = sources.map(Expression::parse);
        Ok(CoefficientSet {
            rho: rho?,
            sigma1: sigma1?,
            sigma2: sigma2?,
            beta: beta?,
            mu1: mu1?,
            mu2: mu2?,
            d1: d1?,
            d2: d2?,
            h_u: h_u?,
        })
    }

    pub const FIELDS: [&'static str; 9] = [
        "rho", "sigma1", "sigma2", "beta", "mu1", "mu2", "d1", "d2", "h_u",
    ];

    pub fn field(&self, name: &str) -> Option<&Expression> {
        Some(match name {
            "rho" => &self.rho,
            "sigma1" => &self.sigma1,
            "sigma2" => &self.sigma2,
            "beta" => &self.beta,
            "mu1" => &self.mu1,
            "mu2" => &self.mu2,
            "d1" => &self.d1,
            "d2" => &self.d2,
            "h_u" => &self.h_u,
            _ => return None,
        })
    }

    pub fn field_mut(&mut self, name: &str) -> Option<&mut Expression> {
        Some(match name {
            "rho" => &mut self.rho,
            "sigma1" => &mut self.sigma1,
            "sigma2" => &mut self.sigma2,
            "beta" => &mut self.beta,
            "mu1" => &mut self.mu1,
            "mu2" => &mut self.mu2,
            "d1" => &mut self.d1,
            "d2" => &mut self.d2,
            "h_u" => &mut self.h_u,
            _ => return None,
        })
    }

    /// `σ1 H_u`, the host infection coefficient.
    pub fn host_infection(&self) -> Expression {
        self.sigma1.clone() * self.h_u.clone()
    }

    fn sign_requirements(&self) -> [(&'static str, &Expression, Sign); 9] {
        [
            ("rho", &self.rho, Sign::Positive),
            ("sigma1", &self.sigma1, Sign::NonNegative),
            ("sigma2", &self.sigma2, Sign::Positive),
            ("beta", &self.beta, Sign::NonNegative),
            ("mu1", &self.mu1, Sign::Positive),
            ("mu2", &self.mu2, Sign::NonNegative),
            ("d1", &self.d1, Sign::Positive),
            ("d2", &self.d2, Sign::Positive),
            ("h_u", &self.h_u, Sign::NonNegative),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: String,
    pub condition: String,
    pub x: f64,
    pub t: f64,
    pub value: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} (value {} at x = {}, t = {})",
            self.field, self.condition, self.value, self.x, self.t
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

const PERIODICITY_RTOL: f64 = 1e-10;

struct Lattice<'a> {
    grid: &'a Grid,
    offset: f64,
}

impl Lattice<'_> {
    /// Time levels spanning `[offset, offset + 2T]`.
    fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=2 * self.grid.steps_per_period).map(|k| self.offset + self.grid.time(k))
    }

    fn first_period(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.grid.steps_per_period).map(|k| self.offset + self.grid.time(k))
    }
}

#[derive(Default)]
struct Collector {
    violations: Vec<(Violation, f64)>,
}

impl Collector {
    /// Keeps one witness per (field, condition): the one with the largest `badness`.
    fn record(&mut self, v: Violation, badness: f64) {
        let existing = self
            .violations
            .iter_mut()
            .find(|(o, _)| o.field == v.field && o.condition == v.condition);
        match existing {
            Some((slot, worst)) if badness > *worst => {
                *slot = v;
                *worst = badness;
            }
            Some(_) => {}
            None => self.violations.push((v, badness)),
        }
    }

    fn finish(self) -> Vec<Violation> {
        self.violations.into_iter().map(|(v, _)| v).collect()
    }
}

fn check_field(
    out: &mut Collector,
    lattice: &Lattice<'_>,
    xs: &[f64],
    name: &str,
    e: &Expression,
    sign: Option<Sign>,
) {
    let period = lattice.grid.period;
    for &x in xs {
        for t in lattice.times() {
            let value = match e.evaluate(x, t) {
                Ok(v) => v,
                Err(err) => {
                    out.record(
                        Violation {
                            field: name.to_string(),
                            condition: format!("evaluation failed: {err}"),
                            x,
                            t,
                            value: f64::NAN,
                        },
                        f64::INFINITY,
                    );
                    continue;
                }
            };
            let bad = match sign {
                Some(Sign::Positive) if value <= 0.0 => Some(format!("{name} must be positive")),
                Some(Sign::NonNegative) if value < 0.0 => {
                    Some(format!("{name} must be nonnegative"))
                }
                _ => None,
            };
            if let Some(condition) = bad {
                out.record(
                    Violation {
                        field: name.to_string(),
                        condition,
                        x,
                        t,
                        value,
                    },
                    -value,
                );
            }
        }
        for t in lattice.first_period() {
            let (Ok(a), Ok(b)) = (e.evaluate(x, t), e.evaluate(x, t + period)) else {
                continue;
            };
            let scale = 1f64.max(a.abs()).max(b.abs());
            if (a - b).abs() > PERIODICITY_RTOL * scale {
                out.record(
                    Violation {
                        field: name.to_string(),
                        condition: format!("{name} must be T-periodic"),
                        x,
                        t,
                        value: b - a,
                    },
                    (a - b).abs(),
                );
            }
        }
    }
}

/// Checks the coefficient hypothesis on the lattice {mesh nodes} × {time levels over two periods}.
pub fn validate_hypothesis(
    c: &CoefficientSet,
    bc1: &BoundarySpec,
    bc2: &BoundarySpec,
    grid: &Grid,
) -> ValidationReport {
    validate_hypothesis_with_offset(c, bc1, bc2, grid, 0.0)
}

/// Same as [`validate_hypothesis`] with every lattice time shifted by `offset`.
pub fn validate_hypothesis_with_offset(
    c: &CoefficientSet,
    bc1: &BoundarySpec,
    bc2: &BoundarySpec,
    grid: &Grid,
    offset: f64,
) -> ValidationReport {
    let lattice = Lattice { grid, offset };
    let xs = grid.nodes();
    let mut out = Collector::default();
    for (name, e, sign) in c.sign_requirements() {
        check_field(&mut out, &lattice, &xs, name, e, Some(sign));
    }

    let infection = c.host_infection();
    let nontrivial = xs.iter().any(|&x| {
        lattice
            .times()
            .any(|t| infection.evaluate(x, t).is_ok_and(|v| v > 0.0))
    });
    if !nontrivial {
        out.record(
            Violation {
                field: "sigma1*h_u".to_string(),
                condition: "sigma1*h_u must not vanish identically".to_string(),
                x: xs[0],
                t: offset,
                value: 0.0,
            },
            0.0,
        );
    }

    for (group, bc) in [("bc1", bc1), ("bc2", bc2)] {
        if let BoundarySpec::Robin { left, right } = bc {
            let ends = [(format!("{group}.b_left"), left, grid.x_left)];
            let ends = ends
                .into_iter()
                .chain([(format!("{group}.b_right"), right, grid.x_right)]);
            for (name, e, x) in ends {
                check_field(&mut out, &lattice, &[x], &name, e, Some(Sign::NonNegative));
            }
        }
    }
    ValidationReport {
        violations: out.finish(),
    }
}
