use thiserror::Error;

use crate::formula::CnfFormula;
use crate::lit::Lit;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct DimacsError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> DimacsError {
    DimacsError {
        line,
        message: message.into(),
    }
}

/// Parses DIMACS CNF text. Clauses may span lines; each ends at `0`.
pub fn from_dimacs(text: &str) -> Result<CnfFormula, DimacsError> {
    let mut header: Option<(usize, usize)> = None;
    let mut formula = CnfFormula::new();
    let mut current: Vec<Lit> = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(err(line_no, "duplicate problem line"));
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
                return Err(err(line_no, format!("malformed header {line:?}")));
            }
            let vars = parts[2]
                .parse::<usize>()
                .map_err(|_| err(line_no, format!("bad variable count {:?}", parts[2])))?;
            let clauses = parts[3]
                .parse::<usize>()
                .map_err(|_| err(line_no, format!("bad clause count {:?}", parts[3])))?;
            header = Some((vars, clauses));
            formula = CnfFormula::with_vars(vars);
            continue;
        }
        let (num_vars, _) = header.ok_or_else(|| err(line_no, "clause before problem line"))?;
        for tok in line.split_whitespace() {
            let value: i64 = tok
                .parse()
                .map_err(|_| err(line_no, format!("bad literal {tok:?}")))?;
            if value == 0 {
                formula
                    .add_clause(current.drain(..))
                    .map_err(|e| err(line_no, e.to_string()))?;
                continue;
            }
            let lit = Lit::from_dimacs(value)
                .ok_or_else(|| err(line_no, format!("bad literal {tok:?}")))?;
            if lit.var().index() >= num_vars {
                return Err(err(
                    line_no,
                    format!("variable {} exceeds declared count {num_vars}", value.abs()),
                ));
            }
            current.push(lit);
        }
    }

    let (_, declared) = header.ok_or_else(|| err(last_line.max(1), "missing problem line"))?;
    if !current.is_empty() {
        return Err(err(last_line, "last clause is not terminated by 0"));
    }
    if formula.num_clauses() != declared {
        return Err(err(
            last_line,
            format!(
                "header declares {declared} clauses but {} were read",
                formula.num_clauses()
            ),
        ));
    }
    Ok(formula)
}
