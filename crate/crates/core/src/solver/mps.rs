//! MPS serialization: a fixed-layout writer with long names accepted by
//! modern solvers, and a parser for the emitted subset so models survive a
//! byte round trip.

use crate::milp::{
    assemble_model, LinearConstraint, MilpModel, ModelMetadata, Sense, VarKind, Variable,
};
use std::collections::HashMap;
use std::fmt;

const OBJECTIVE_ROW: &str = "COST";

/// Numbers carry 17 significant digits so values round-trip exactly.
fn num(v: f64) -> String {
    format!("{:.16e}", v)
}

fn bound_int(v: f64) -> String {
    format!("{}", v.round() as i64)
}

/// Serializes the model: NAME, ROWS, COLUMNS with INTORG/INTEND markers,
/// RHS, BOUNDS, ENDATA. Variables and rows appear in creation order, one
/// coefficient per line, so identical models yield identical bytes.
pub fn write_mps(model: &MilpModel) -> String {
    let mut out = String::new();
    let name = format!(
        "{}_{}",
        sanitize(&model.metadata.instance_id),
        sanitize(&model.metadata.variant)
    );
    out.push_str(&format!("NAME          {}\n", name));

    out.push_str("ROWS\n");
    out.push_str(&format!(" N  {}\n", OBJECTIVE_ROW));
    for c in model.constraints() {
        let sense = match c.sense {
            Sense::Le => 'L',
            Sense::Eq => 'E',
            Sense::Ge => 'G',
        };
        out.push_str(&format!(" {}  {}\n", sense, c.name));
    }

    // Column-major view of the constraint matrix, rows in creation order.
    let mut entries: HashMap<&str, Vec<(&str, f64)>> = HashMap::new();
    for c in model.constraints() {
        for (var, coef) in &c.terms {
            entries.entry(var).or_default().push((&c.name, *coef));
        }
    }
    let costs: HashMap<&str, f64> = model
        .objective()
        .iter()
        .map(|(n, c)| (n.as_str(), *c))
        .collect();

    out.push_str("COLUMNS\n");
    let mut in_integer_block = false;
    let mut marker = 0usize;
    for v in model.variables() {
        if v.is_integral() != in_integer_block {
            let kind = if v.is_integral() { "INTORG" } else { "INTEND" };
            out.push_str(&format!(
                "    MARKER{}                 'MARKER'                 '{}'\n",
                marker, kind
            ));
            marker += 1;
            in_integer_block = v.is_integral();
        }
        // The objective entry is always written, so every column exists
        // even when it appears in no constraint.
        let cost = costs.get(v.name.as_str()).copied().unwrap_or(0.0);
        out.push_str(&format!("    {}  {}  {}\n", v.name, OBJECTIVE_ROW, num(cost)));
        if let Some(rows) = entries.get(v.name.as_str()) {
            for (row, coef) in rows {
                out.push_str(&format!("    {}  {}  {}\n", v.name, row, num(*coef)));
            }
        }
    }
    if in_integer_block {
        out.push_str(&format!(
            "    MARKER{}                 'MARKER'                 'INTEND'\n",
            marker
        ));
    }

    out.push_str("RHS\n");
    for c in model.constraints() {
        out.push_str(&format!("    RHS  {}  {}\n", c.name, num(c.rhs)));
    }

    out.push_str("BOUNDS\n");
    for v in model.variables() {
        match v.kind {
            VarKind::Binary => out.push_str(&format!(" BV BND  {}\n", v.name)),
            VarKind::Integer => {
                out.push_str(&format!(" LI BND  {}  {}\n", v.name, bound_int(v.lower)));
                if v.upper.is_finite() {
                    out.push_str(&format!(" UI BND  {}  {}\n", v.name, bound_int(v.upper)));
                }
            }
            VarKind::Continuous => {
                if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
                    out.push_str(&format!(" FR BND  {}\n", v.name));
                } else {
                    if v.lower == f64::NEG_INFINITY {
                        out.push_str(&format!(" MI BND  {}\n", v.name));
                    } else {
                        out.push_str(&format!(" LO BND  {}  {}\n", v.name, num(v.lower)));
                    }
                    if v.upper.is_finite() {
                        out.push_str(&format!(" UP BND  {}  {}\n", v.name, num(v.upper)));
                    }
                }
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

fn sanitize(s: &str) -> String {
    let cleaned: String = s
        .chars()
        .map(|c| if c.is_whitespace() { '_' } else { c })
        .collect();
    if cleaned.is_empty() {
        "model".to_string()
    } else {
        cleaned
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpsError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for MpsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MPS parse error at line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for MpsError {}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    Start,
    Rows,
    Columns,
    Rhs,
    Bounds,
    Done,
}

struct ColumnState {
    names: Vec<String>,
    index: HashMap<String, usize>,
    integral: Vec<bool>,
    cost: Vec<f64>,
    entries: Vec<Vec<(usize, f64)>>,
    lower: Vec<Option<f64>>,
    upper: Vec<Option<f64>>,
    binary: Vec<bool>,
}

/// Parses the MPS subset produced by [`write_mps`] back into a model.
/// RANGES sections and objective constants are rejected.
pub fn parse_mps(text: &str) -> Result<MilpModel, MpsError> {
    let err = |line: usize, message: String| MpsError { line, message };

    let mut section = Section::Start;
    let mut name = String::new();
    let mut row_order: Vec<(String, Sense)> = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut objective_row: Option<String> = None;
    let mut rhs: HashMap<usize, f64> = HashMap::new();
    let mut in_integer_block = false;
    let mut cols = ColumnState {
        names: Vec::new(),
        index: HashMap::new(),
        integral: Vec::new(),
        cost: Vec::new(),
        entries: Vec::new(),
        lower: Vec::new(),
        upper: Vec::new(),
        binary: Vec::new(),
    };

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let is_header = !raw.starts_with(' ') && !raw.starts_with('\t');
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if is_header {
            section = match fields[0] {
                "NAME" => {
                    if fields.len() > 1 {
                        name = fields[1].to_string();
                    }
                    Section::Start
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => {
                    return Err(err(lineno, "RANGES sections are not supported".into()))
                }
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::Done,
                other => return Err(err(lineno, format!("unknown section {other}"))),
            };
            continue;
        }
        match section {
            Section::Start | Section::Done => {
                return Err(err(lineno, "data outside any section".into()))
            }
            Section::Rows => {
                if fields.len() != 2 {
                    return Err(err(lineno, "expected <sense> <row>".into()));
                }
                match fields[0] {
                    "N" => {
                        if objective_row.is_some() {
                            return Err(err(lineno, "multiple objective rows".into()));
                        }
                        objective_row = Some(fields[1].to_string());
                    }
                    sense => {
                        let sense = match sense {
                            "L" => Sense::Le,
                            "G" => Sense::Ge,
                            "E" => Sense::Eq,
                            other => return Err(err(lineno, format!("unknown row sense {other}"))),
                        };
                        if row_index
                            .insert(fields[1].to_string(), row_order.len())
                            .is_some()
                        {
                            return Err(err(lineno, format!("duplicate row {}", fields[1])));
                        }
                        row_order.push((fields[1].to_string(), sense));
                    }
                }
            }
            Section::Columns => {
                if fields.len() >= 3 && fields[1].contains("'MARKER'") {
                    match fields[2].trim_matches('\'') {
                        "INTORG" => in_integer_block = true,
                        "INTEND" => in_integer_block = false,
                        other => return Err(err(lineno, format!("unknown marker {other}"))),
                    }
                    continue;
                }
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(err(lineno, "expected <col> <row> <value> pairs".into()));
                }
                let col = column_id(&mut cols, fields[0], in_integer_block);
                for pair in fields[1..].chunks(2) {
                    let value: f64 = pair[1]
                        .parse()
                        .map_err(|_| err(lineno, format!("bad number {}", pair[1])))?;
                    if Some(pair[0]) == objective_row.as_deref() {
                        cols.cost[col] += value;
                    } else if let Some(&row) = row_index.get(pair[0]) {
                        cols.entries[col].push((row, value));
                    } else {
                        return Err(err(lineno, format!("unknown row {}", pair[0])));
                    }
                }
            }
            Section::Rhs => {
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(err(lineno, "expected RHS <row> <value> pairs".into()));
                }
                for pair in fields[1..].chunks(2) {
                    let value: f64 = pair[1]
                        .parse()
                        .map_err(|_| err(lineno, format!("bad number {}", pair[1])))?;
                    if Some(pair[0]) == objective_row.as_deref() {
                        return Err(err(lineno, "objective constants are not supported".into()));
                    }
                    let &row = row_index
                        .get(pair[0])
                        .ok_or_else(|| err(lineno, format!("unknown row {}", pair[0])))?;
                    rhs.insert(row, value);
                }
            }
            Section::Bounds => {
                if fields.len() < 3 {
                    return Err(err(lineno, "expected <type> <name> <col> [value]".into()));
                }
                let kind = fields[0];
                let col = column_id(&mut cols, fields[2], false);
                let value = || -> Result<f64, MpsError> {
                    fields
                        .get(3)
                        .ok_or_else(|| err(lineno, format!("{kind} bound needs a value")))?
                        .parse()
                        .map_err(|_| err(lineno, format!("bad number {}", fields[3])))
                };
                match kind {
                    "BV" => cols.binary[col] = true,
                    "LI" => {
                        cols.integral[col] = true;
                        cols.lower[col] = Some(value()?);
                    }
                    "UI" => {
                        cols.integral[col] = true;
                        cols.upper[col] = Some(value()?);
                    }
                    "LO" => cols.lower[col] = Some(value()?),
                    "UP" => cols.upper[col] = Some(value()?),
                    "FX" => {
                        let v = value()?;
                        cols.lower[col] = Some(v);
                        cols.upper[col] = Some(v);
                    }
                    "MI" => cols.lower[col] = Some(f64::NEG_INFINITY),
                    "PL" => cols.upper[col] = Some(f64::INFINITY),
                    "FR" => {
                        cols.lower[col] = Some(f64::NEG_INFINITY);
                        cols.upper[col] = Some(f64::INFINITY);
                    }
                    other => return Err(err(lineno, format!("unknown bound type {other}"))),
                }
            }
        }
    }
    if section != Section::Done {
        return Err(err(text.lines().count(), "missing ENDATA".into()));
    }

    let variables: Vec<Variable> = cols
        .names
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let group = n.split('[').next().unwrap_or(n).to_string();
            if cols.binary[i] {
                Variable {
                    name: n.clone(),
                    kind: VarKind::Binary,
                    lower: 0.0,
                    upper: 1.0,
                    group,
                }
            } else {
                Variable {
                    name: n.clone(),
                    kind: if cols.integral[i] {
                        VarKind::Integer
                    } else {
                        VarKind::Continuous
                    },
                    lower: cols.lower[i].unwrap_or(0.0),
                    upper: cols.upper[i].unwrap_or(f64::INFINITY),
                    group,
                }
            }
        })
        .collect();

    let mut row_terms: Vec<Vec<(String, f64)>> = vec![Vec::new(); row_order.len()];
    for (col, entries) in cols.entries.iter().enumerate() {
        for (row, value) in entries {
            row_terms[*row].push((cols.names[col].clone(), *value));
        }
    }
    let constraints: Vec<LinearConstraint> = row_order
        .iter()
        .enumerate()
        .map(|(i, (row_name, sense))| LinearConstraint {
            name: row_name.clone(),
            terms: std::mem::take(&mut row_terms[i]),
            sense: *sense,
            rhs: rhs.get(&i).copied().unwrap_or(0.0),
            tag: row_name.split('_').next().unwrap_or(row_name).to_string(),
        })
        .collect();

    let objective = cols
        .names
        .iter()
        .enumerate()
        .filter(|(i, _)| cols.cost[*i] != 0.0)
        .map(|(i, n)| (n.clone(), cols.cost[i]))
        .collect();

    assemble_model(
        variables,
        constraints,
        objective,
        ModelMetadata {
            variant: String::new(),
            instance_id: name,
        },
    )
    .map_err(|e| MpsError {
        line: 0,
        message: format!("inconsistent model: {e}"),
    })
}

fn column_id(cols: &mut ColumnState, name: &str, integral: bool) -> usize {
    if let Some(&i) = cols.index.get(name) {
        if integral {
            cols.integral[i] = true;
        }
        return i;
    }
    let i = cols.names.len();
    cols.names.push(name.to_string());
    cols.index.insert(name.to_string(), i);
    cols.integral.push(integral);
    cols.cost.push(0.0);
    cols.entries.push(Vec::new());
    cols.lower.push(None);
    cols.upper.push(None);
    cols.binary.push(false);
    i
}
