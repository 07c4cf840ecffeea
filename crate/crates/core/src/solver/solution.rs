//! Parsers for solver solution files.
//!
//! Format `pairs`: one `name value` per line; optional `=status=`,
//! `=obj=`, and `=gap=` directive lines; `#` comments. Format `highs`
//! reads the solution files written by the HiGHS CLI (`Model status` block,
//! `Objective` line, `# Columns <n>` block).

use crate::milp::{MilpModel, Point};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolutionFormat {
    #[default]
    Pairs,
    HighsStyle,
}

impl SolutionFormat {
    pub fn id(self) -> &'static str {
        match self {
            SolutionFormat::Pairs => "pairs",
            SolutionFormat::HighsStyle => "highs",
        }
    }
}

impl FromStr for SolutionFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pairs" => Ok(SolutionFormat::Pairs),
            "highs" => Ok(SolutionFormat::HighsStyle),
            other => Err(format!("unknown solution format {other}; expected pairs or highs")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParsedStatus {
    Optimal,
    Feasible,
    Infeasible,
    Unbounded,
    Timeout,
    Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSolution {
    /// Every model variable is assigned; absentees default to zero with a
    /// warning.
    pub point: Point,
    pub objective: Option<f64>,
    pub gap: Option<f64>,
    pub status: Option<ParsedStatus>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for SolutionParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "solution parse error at line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for SolutionParseError {}

pub fn parse_solution(
    text: &str,
    format: SolutionFormat,
    model: &MilpModel,
) -> Result<ParsedSolution, SolutionParseError> {
    let mut parsed = match format {
        SolutionFormat::Pairs => parse_pairs(text)?,
        SolutionFormat::HighsStyle => parse_highs(text)?,
    };
    // Align the point with the model: warn on unknown names, default
    // missing variables to zero.
    let mut point = Point::with_capacity(model.variables().len());
    for (name, value) in parsed.point.drain() {
        if model.variable(&name).is_some() {
            point.insert(name, value);
        } else {
            parsed.warnings.push(format!("ignoring unknown variable {name}"));
        }
    }
    for v in model.variables() {
        if !point.contains_key(&v.name) {
            parsed
                .warnings
                .push(format!("variable {} missing from solution, defaulting to 0", v.name));
            point.insert(v.name.clone(), 0.0);
        }
    }
    parsed.point = point;
    Ok(parsed)
}

fn parse_status(token: &str) -> ParsedStatus {
    match token.to_ascii_lowercase().as_str() {
        "optimal" => ParsedStatus::Optimal,
        "feasible" | "feasible-gap" | "suboptimal" => ParsedStatus::Feasible,
        "infeasible" => ParsedStatus::Infeasible,
        "unbounded" => ParsedStatus::Unbounded,
        "timeout" | "time-limit" => ParsedStatus::Timeout,
        _ => ParsedStatus::Error,
    }
}

fn parse_pairs(text: &str) -> Result<ParsedSolution, SolutionParseError> {
    let mut out = ParsedSolution {
        point: Point::new(),
        objective: None,
        gap: None,
        status: None,
        warnings: Vec::new(),
    };
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let numeric = |s: &str| -> Result<f64, SolutionParseError> {
            s.parse().map_err(|_| SolutionParseError {
                line: lineno,
                message: format!("expected a number, found {s:?}"),
            })
        };
        match fields[0] {
            "=status=" if fields.len() == 2 => out.status = Some(parse_status(fields[1])),
            "=obj=" if fields.len() == 2 => out.objective = Some(numeric(fields[1])?),
            "=gap=" if fields.len() == 2 => out.gap = Some(numeric(fields[1])?),
            _ if fields.len() == 2 => {
                let value = numeric(fields[1])?;
                out.point.insert(fields[0].to_string(), value);
            }
            _ => {
                return Err(SolutionParseError {
                    line: lineno,
                    message: format!("expected `name value`, found {line:?}"),
                })
            }
        }
    }
    Ok(out)
}

fn parse_highs(text: &str) -> Result<ParsedSolution, SolutionParseError> {
    let mut out = ParsedSolution {
        point: Point::new(),
        objective: None,
        gap: None,
        status: None,
        warnings: Vec::new(),
    };
    let lines: Vec<&str> = text.lines().collect();
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i].trim();
        if line == "Model status" {
            if let Some(status) = lines.get(i + 1) {
                out.status = Some(match status.trim() {
                    "Optimal" => ParsedStatus::Optimal,
                    "Infeasible" => ParsedStatus::Infeasible,
                    "Unbounded" => ParsedStatus::Unbounded,
                    "Time limit reached" => ParsedStatus::Timeout,
                    _ => ParsedStatus::Feasible,
                });
                i += 2;
                continue;
            }
        }
        if let Some(rest) = line.strip_prefix("Objective") {
            let token = rest.trim();
            if !token.is_empty() {
                out.objective = Some(token.parse().map_err(|_| SolutionParseError {
                    line: i + 1,
                    message: format!("bad objective value {token:?}"),
                })?);
            }
        }
        if let Some(rest) = line.strip_prefix("# Columns") {
            let count: usize = rest.trim().parse().map_err(|_| SolutionParseError {
                line: i + 1,
                message: format!("bad column count {:?}", rest.trim()),
            })?;
            for k in 1..=count {
                let lineno = i + 1 + k;
                let entry = lines.get(i + k).ok_or(SolutionParseError {
                    line: lineno,
                    message: "column block ends early".to_string(),
                })?;
                let fields: Vec<&str> = entry.split_whitespace().collect();
                if fields.len() != 2 {
                    return Err(SolutionParseError {
                        line: lineno,
                        message: format!("expected `name value`, found {entry:?}"),
                    });
                }
                let value: f64 = fields[1].parse().map_err(|_| SolutionParseError {
                    line: lineno,
                    message: format!("expected a number, found {:?}", fields[1]),
                })?;
                out.point.insert(fields[0].to_string(), value);
            }
            i += count + 1;
            continue;
        }
        i += 1;
    }
    Ok(out)
}
