//! Line-oriented scenario files: grammar, parser, interpreter, reports.
//!
//! A scenario declares named orbitals, builds a state from creation (or,
//! after `filled`, annihilation) strings, applies rotations and evolutions,
//! measures, selects branches, and asserts numeric results. The format is
//! deliberately free of expressions: all numbers are literal decimals so a
//! file plus a seed pins the run bit for bit.

mod exec;
mod report;
mod sweep;

pub use exec::{execute_scenario, AssertionRecord, BranchRecord, RunReport};
pub use report::{Report, ReportBranch};
pub use sweep::{sweep_inequality, SweepOutcome};

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn parse(token: &str) -> Option<Axis> {
        match token {
            "x" => Some(Axis::X),
            "y" => Some(Axis::Y),
            "z" => Some(Axis::Z),
            _ => None,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

/// A complex matrix kept as parsed `(re, im)` entries, row-major.
pub type MatrixLiteral = Vec<Vec<(f64, f64)>>;

/// One `label=value` component of a branch pattern.
#[derive(Clone, Debug, PartialEq)]
pub enum PatternItem {
    Orbital { orbital: usize, occupied: bool },
    Total { count: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub enum AssertKind {
    ParticleEntropy { value: f64, tol: f64 },
    Geometric { value: f64, tol: f64 },
    ModeEntropy { orbitals: Vec<usize>, value: f64, tol: f64 },
    Prob { pattern: Vec<PatternItem>, value: f64, tol: f64 },
    Fidelity { up: usize, dn: usize, a: (f64, f64), b: (f64, f64), value: f64, tol: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Statement {
    Filled,
    Term { re: f64, im: f64, orbitals: Vec<usize> },
    Hole { re: f64, im: f64, orbitals: Vec<usize> },
    Rotate { up: usize, dn: usize, axis: Axis, angle: f64 },
    DefineUnitary { name: String, matrix: MatrixLiteral },
    ApplyUnitary { matrix: MatrixLiteral },
    Evolve1 { t: f64, matrix: MatrixLiteral },
    EvolveU { t: f64, basis: Option<String>, terms: Vec<(usize, usize, f64)> },
    MeasureOcc { orbitals: Vec<usize>, total: bool },
    MeasureSpin { axis: Axis, up: usize, dn: usize },
    Select { index: usize },
    Assert(AssertKind),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub labels: Vec<String>,
    pub statements: Vec<Statement>,
}

impl Scenario {
    pub fn num_orbitals(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, orbital: usize) -> &str {
        &self.labels[orbital]
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut name: Option<String> = None;
    let mut labels: Vec<String> = Vec::new();
    let mut statements = Vec::new();
    let mut start_mode: Option<&'static str> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line: line_no, message };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let keyword = tokens[0];

        if name.is_none() {
            if keyword != "scenario" {
                return Err(err("missing scenario header".to_string()));
            }
            if tokens.len() != 2 {
                return Err(err("expected `scenario NAME`".to_string()));
            }
            name = Some(tokens[1].to_string());
            continue;
        }
        if keyword == "scenario" {
            return Err(err("duplicate scenario header".to_string()));
        }
        if keyword == "orbitals" {
            if !labels.is_empty() {
                return Err(err("duplicate orbitals declaration".to_string()));
            }
            if tokens.len() < 2 {
                return Err(err("expected at least one orbital label".to_string()));
            }
            for &label in &tokens[1..] {
                if labels.iter().any(|l| l == label) {
                    return Err(err(format!("duplicate orbital label `{label}`")));
                }
                labels.push(label.to_string());
            }
            continue;
        }
        if labels.is_empty() {
            return Err(err("orbitals must be declared before statements".to_string()));
        }

        let resolve = |label: &str| -> Result<usize> {
            labels
                .iter()
                .position(|l| l == label)
                .ok_or_else(|| err(format!("undeclared orbital label `{label}`")))
        };
        let number = |token: &str| -> Result<f64> {
            let value: f64 = token
                .parse()
                .map_err(|_| err(format!("expected a number, found `{token}`")))?;
            if !value.is_finite() {
                return Err(err(format!("non-finite number `{token}`")));
            }
            Ok(value)
        };

        let statement = match keyword {
            "filled" => {
                if tokens.len() != 1 {
                    return Err(err("`filled` takes no arguments".to_string()));
                }
                if let Some(mode) = start_mode {
                    if mode != "filled" {
                        return Err(err("cannot mix `filled` with vacuum `term` start".to_string()));
                    }
                }
                start_mode = Some("filled");
                Statement::Filled
            }
            "term" | "hole" => {
                let colon = tokens
                    .iter()
                    .position(|&t| t == ":")
                    .ok_or_else(|| err(format!("`{keyword}` needs a `:` separator")))?;
                if colon != 3 || tokens.len() < 5 {
                    return Err(err(format!("expected `{keyword} RE IM : L1 [L2 …]`")));
                }
                let re = number(tokens[1])?;
                let im = number(tokens[2])?;
                let orbitals =
                    tokens[4..].iter().map(|&l| resolve(l)).collect::<Result<Vec<usize>>>()?;
                if keyword == "term" {
                    if start_mode == Some("filled") {
                        return Err(err("`term` is not allowed after `filled`; use `hole`".to_string()));
                    }
                    start_mode = Some("vacuum");
                    Statement::Term { re, im, orbitals }
                } else {
                    if start_mode != Some("filled") {
                        return Err(err("`hole` requires a preceding `filled`".to_string()));
                    }
                    Statement::Hole { re, im, orbitals }
                }
            }
            "rotate" => {
                if tokens.len() != 5 {
                    return Err(err("expected `rotate UP DN AXIS ANGLE`".to_string()));
                }
                let up = resolve(tokens[1])?;
                let dn = resolve(tokens[2])?;
                let axis = Axis::parse(tokens[3])
                    .ok_or_else(|| err(format!("unknown axis `{}`", tokens[3])))?;
                Statement::Rotate { up, dn, axis, angle: number(tokens[4])? }
            }
            "unitary" => {
                let rest = line["unitary".len()..].trim();
                if let Some((head, matrix_text)) = rest.split_once(":=") {
                    let name = head.trim();
                    if name.is_empty() || name.contains(char::is_whitespace) {
                        return Err(err("expected `unitary NAME := ROWS`".to_string()));
                    }
                    Statement::DefineUnitary {
                        name: name.to_string(),
                        matrix: parse_matrix(matrix_text, line_no)?,
                    }
                } else {
                    Statement::ApplyUnitary { matrix: parse_matrix(rest, line_no)? }
                }
            }
            "evolve1" => {
                let rest = line["evolve1".len()..].trim();
                let (t_text, matrix_text) = rest
                    .split_once(':')
                    .ok_or_else(|| err("expected `evolve1 T : MATRIX`".to_string()))?;
                Statement::Evolve1 {
                    t: number(t_text.trim())?,
                    matrix: parse_matrix(matrix_text, line_no)?,
                }
            }
            "evolveU" => {
                let rest = line["evolveU".len()..].trim();
                let (head, body) = rest
                    .split_once(':')
                    .ok_or_else(|| err("expected `evolveU T [in NAME] : TERMS`".to_string()))?;
                let head_tokens: Vec<&str> = head.split_whitespace().collect();
                let (t, basis) = match head_tokens.as_slice() {
                    [t] => (number(t)?, None),
                    [t, "in", name] => (number(t)?, Some(name.to_string())),
                    _ => return Err(err("expected `evolveU T [in NAME] : TERMS`".to_string())),
                };
                let mut terms = Vec::new();
                for chunk in body.split(';') {
                    let parts: Vec<&str> = chunk.split_whitespace().collect();
                    if parts.len() != 3 {
                        return Err(err("each interaction term is `Li Lj E`".to_string()));
                    }
                    terms.push((resolve(parts[0])?, resolve(parts[1])?, number(parts[2])?));
                }
                if terms.is_empty() {
                    return Err(err("`evolveU` needs at least one interaction term".to_string()));
                }
                Statement::EvolveU { t, basis, terms }
            }
            "measure" => match tokens.get(1) {
                Some(&"occ") | Some(&"total") => {
                    if tokens.len() < 3 {
                        return Err(err("expected `measure occ|total L1 …`".to_string()));
                    }
                    Statement::MeasureOcc {
                        orbitals: tokens[2..]
                            .iter()
                            .map(|&l| resolve(l))
                            .collect::<Result<Vec<usize>>>()?,
                        total: tokens[1] == "total",
                    }
                }
                Some(&"spin") => {
                    if tokens.len() != 5 {
                        return Err(err("expected `measure spin AXIS L_UP L_DN`".to_string()));
                    }
                    let axis = Axis::parse(tokens[2])
                        .ok_or_else(|| err(format!("unknown axis `{}`", tokens[2])))?;
                    Statement::MeasureSpin { axis, up: resolve(tokens[3])?, dn: resolve(tokens[4])? }
                }
                _ => return Err(err("expected `measure occ|total|spin …`".to_string())),
            },
            "select" => {
                if tokens.len() != 2 {
                    return Err(err("expected `select INDEX`".to_string()));
                }
                let index = tokens[1]
                    .parse()
                    .map_err(|_| err(format!("invalid branch index `{}`", tokens[1])))?;
                Statement::Select { index }
            }
            "assert" => {
                let kind = match tokens.get(1) {
                    Some(&"particle_entropy") if tokens.len() == 4 => AssertKind::ParticleEntropy {
                        value: number(tokens[2])?,
                        tol: number(tokens[3])?,
                    },
                    Some(&"geometric") if tokens.len() == 4 => {
                        AssertKind::Geometric { value: number(tokens[2])?, tol: number(tokens[3])? }
                    }
                    Some(&"mode_entropy") if tokens.len() == 5 => AssertKind::ModeEntropy {
                        orbitals: tokens[2]
                            .split(',')
                            .map(resolve)
                            .collect::<Result<Vec<usize>>>()?,
                        value: number(tokens[3])?,
                        tol: number(tokens[4])?,
                    },
                    Some(&"prob") if tokens.len() == 5 => {
                        let mut pattern = Vec::new();
                        for part in tokens[2].split(',') {
                            let (key, value) = part.split_once('=').ok_or_else(|| {
                                err(format!("pattern item `{part}` is not `label=value`"))
                            })?;
                            if key == "total" {
                                let count = value.parse().map_err(|_| {
                                    err(format!("invalid total count `{value}`"))
                                })?;
                                pattern.push(PatternItem::Total { count });
                            } else {
                                let occupied = match value {
                                    "0" => false,
                                    "1" => true,
                                    _ => {
                                        return Err(err(format!(
                                            "occupation value `{value}` must be 0 or 1"
                                        )))
                                    }
                                };
                                pattern.push(PatternItem::Orbital { orbital: resolve(key)?, occupied });
                            }
                        }
                        AssertKind::Prob {
                            pattern,
                            value: number(tokens[3])?,
                            tol: number(tokens[4])?,
                        }
                    }
                    Some(&"fidelity") if tokens.len() == 10 => AssertKind::Fidelity {
                        up: resolve(tokens[2])?,
                        dn: resolve(tokens[3])?,
                        a: (number(tokens[4])?, number(tokens[5])?),
                        b: (number(tokens[6])?, number(tokens[7])?),
                        value: number(tokens[8])?,
                        tol: number(tokens[9])?,
                    },
                    Some(other) => {
                        return Err(err(format!("unknown or malformed assertion `{other}`")))
                    }
                    None => return Err(err("`assert` needs a kind".to_string())),
                };
                Statement::Assert(kind)
            }
            other => return Err(err(format!("unknown keyword `{other}`"))),
        };
        statements.push(statement);
    }

    let name = name.ok_or(Error::Parse { line: 1, message: "missing scenario header".to_string() })?;
    if labels.is_empty() {
        return Err(Error::Parse { line: 1, message: "missing orbitals declaration".to_string() });
    }
    Ok(Scenario { name, labels, statements })
}

fn parse_matrix(text: &str, line: usize) -> Result<MatrixLiteral> {
    let err = |message: String| Error::Parse { line, message };
    let mut rows = Vec::new();
    for row_text in text.split(';') {
        let mut row = Vec::new();
        for entry in row_text.split_whitespace() {
            let (re, im) = entry
                .split_once(',')
                .ok_or_else(|| err(format!("matrix entry `{entry}` is not `RE,IM`")))?;
            let parse = |t: &str| -> Result<f64> {
                let v: f64 =
                    t.parse().map_err(|_| err(format!("expected a number, found `{t}`")))?;
                if !v.is_finite() {
                    return Err(err(format!("non-finite number `{t}`")));
                }
                Ok(v)
            };
            row.push((parse(re)?, parse(im)?));
        }
        if row.is_empty() {
            return Err(err("empty matrix row".to_string()));
        }
        rows.push(row);
    }
    let width = rows[0].len();
    if rows.iter().any(|r| r.len() != width) || rows.len() != width {
        return Err(err("matrix must be square with equal-length rows".to_string()));
    }
    Ok(rows)
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario {}", self.name)?;
        writeln!(f, "orbitals {}", self.labels.join(" "))?;
        for statement in &self.statements {
            writeln!(f, "{}", StatementDisplay { statement, labels: &self.labels })?;
        }
        Ok(())
    }
}

struct StatementDisplay<'a> {
    statement: &'a Statement,
    labels: &'a [String],
}

impl fmt::Display for StatementDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = |o: &usize| self.labels[*o].as_str();
        let join = |orbitals: &[usize], sep: &str| {
            orbitals.iter().map(|o| l(o).to_string()).collect::<Vec<_>>().join(sep)
        };
        match self.statement {
            Statement::Filled => write!(f, "filled"),
            Statement::Term { re, im, orbitals } => {
                write!(f, "term {re} {im} : {}", join(orbitals, " "))
            }
            Statement::Hole { re, im, orbitals } => {
                write!(f, "hole {re} {im} : {}", join(orbitals, " "))
            }
            Statement::Rotate { up, dn, axis, angle } => {
                write!(f, "rotate {} {} {} {angle}", l(up), l(dn), axis.as_str())
            }
            Statement::DefineUnitary { name, matrix } => {
                write!(f, "unitary {name} := {}", matrix_text(matrix))
            }
            Statement::ApplyUnitary { matrix } => write!(f, "unitary {}", matrix_text(matrix)),
            Statement::Evolve1 { t, matrix } => write!(f, "evolve1 {t} : {}", matrix_text(matrix)),
            Statement::EvolveU { t, basis, terms } => {
                write!(f, "evolveU {t}")?;
                if let Some(name) = basis {
                    write!(f, " in {name}")?;
                }
                let body = terms
                    .iter()
                    .map(|(i, j, e)| format!("{} {} {e}", l(i), l(j)))
                    .collect::<Vec<_>>()
                    .join(" ; ");
                write!(f, " : {body}")
            }
            Statement::MeasureOcc { orbitals, total } => {
                write!(f, "measure {} {}", if *total { "total" } else { "occ" }, join(orbitals, " "))
            }
            Statement::MeasureSpin { axis, up, dn } => {
                write!(f, "measure spin {} {} {}", axis.as_str(), l(up), l(dn))
            }
            Statement::Select { index } => write!(f, "select {index}"),
            Statement::Assert(kind) => {
                write!(f, "assert ")?;
                match kind {
                    AssertKind::ParticleEntropy { value, tol } => {
                        write!(f, "particle_entropy {value} {tol}")
                    }
                    AssertKind::Geometric { value, tol } => write!(f, "geometric {value} {tol}"),
                    AssertKind::ModeEntropy { orbitals, value, tol } => {
                        write!(f, "mode_entropy {} {value} {tol}", join(orbitals, ","))
                    }
                    AssertKind::Prob { pattern, value, tol } => {
                        let text = pattern
                            .iter()
                            .map(|item| match item {
                                PatternItem::Orbital { orbital, occupied } => {
                                    format!("{}={}", l(orbital), u8::from(*occupied))
                                }
                                PatternItem::Total { count } => format!("total={count}"),
                            })
                            .collect::<Vec<_>>()
                            .join(",");
                        write!(f, "prob {text} {value} {tol}")
                    }
                    AssertKind::Fidelity { up, dn, a, b, value, tol } => write!(
                        f,
                        "fidelity {} {} {} {} {} {} {value} {tol}",
                        l(up),
                        l(dn),
                        a.0,
                        a.1,
                        b.0,
                        b.1
                    ),
                }
            }
        }
    }
}

fn matrix_text(matrix: &MatrixLiteral) -> String {
    matrix
        .iter()
        .map(|row| {
            row.iter().map(|(re, im)| format!("{re},{im}")).collect::<Vec<_>>().join(" ")
        })
        .collect::<Vec<_>>()
        .join(" ; ")
}
