use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::formula::CnfFormula;
use crate::lit::Lit;
use crate::solver::{Model, SolveResult};

#[derive(Debug, Error)]
pub enum ExternalError {
    #[error("empty solver command")]
    EmptyCommand,
    #[error("failed to launch {command:?}: {source}")]
    Launch {
        command: String,
        source: std::io::Error,
    },
    #[error("i/o error talking to the solver: {0}")]
    Io(#[from] std::io::Error),
    #[error("solver output has no SAT/UNSAT verdict")]
    NoVerdict,
    #[error("bad model line {0:?}")]
    BadModel(String),
    #[error("reported model violates the formula")]
    InvalidModel,
}

/// Runs a DIMACS solver as a subprocess: the CNF is written to a temporary
/// file whose path is appended to the command line.
///
/// Accepts both `s SATISFIABLE` / `v ...` output and bare `SAT` / `UNSAT`
/// verdict lines followed by plain literal lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalSolver {
    program: String,
    args: Vec<String>,
}

impl ExternalSolver {
    pub fn new(command: &str) -> Result<Self, ExternalError> {
        let mut parts = command.split_whitespace().map(str::to_owned);
        let program = parts.next().ok_or(ExternalError::EmptyCommand)?;
        Ok(ExternalSolver {
            program,
            args: parts.collect(),
        })
    }

    pub fn solve(
        &self,
        formula: &CnfFormula,
        timeout: Option<Duration>,
    ) -> Result<SolveResult, ExternalError> {
        let mut file = tempfile::Builder::new().suffix(".cnf").tempfile()?;
        file.write_all(formula.to_dimacs().as_bytes())?;
        file.flush()?;

        let mut child = Command::new(&self.program)
            .args(&self.args)
            .arg(file.path())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|source| ExternalError::Launch {
                command: self.program.clone(),
                source,
            })?;

        let mut stdout = child.stdout.take().expect("piped stdout");
        let reader = std::thread::spawn(move || {
            let mut out = String::new();
            stdout.read_to_string(&mut out).map(|_| out)
        });
        let deadline = timeout.map(|t| Instant::now() + t);
        loop {
            if child.try_wait()?.is_some() {
                break;
            }
            if deadline.is_some_and(|d| Instant::now() >= d) {
                let _ = child.kill();
                let _ = child.wait();
                return Ok(SolveResult::Timeout);
            }
            std::thread::sleep(Duration::from_millis(2));
        }
        let out = reader.join().expect("stdout reader panicked")?;
        let result = parse_output(&out, formula.num_vars())?;
        if let SolveResult::Sat(m) = &result {
            if !formula.is_satisfied_by(m.values()) {
                return Err(ExternalError::InvalidModel);
            }
        }
        Ok(result)
    }
}

fn parse_output(out: &str, num_vars: usize) -> Result<SolveResult, ExternalError> {
    let mut verdict = None;
    let mut values = vec![false; num_vars];
    for line in out.lines() {
        let line = line.trim();
        let body = line.strip_prefix("s ").unwrap_or(line);
        match body {
            "SATISFIABLE" | "SAT" => {
                verdict = Some(true);
                continue;
            }
            "UNSATISFIABLE" | "UNSAT" => {
                verdict = Some(false);
                continue;
            }
            _ => {}
        }
        if line.starts_with('c') || line.is_empty() {
            continue;
        }
        let lits = line.strip_prefix("v ").unwrap_or(line);
        if verdict != Some(true) {
            continue;
        }
        for tok in lits.split_whitespace() {
            let x: i64 = tok
                .parse()
                .map_err(|_| ExternalError::BadModel(line.to_owned()))?;
            if x == 0 {
                continue;
            }
            let lit = Lit::from_dimacs(x).ok_or_else(|| ExternalError::BadModel(line.to_owned()))?;
            if let Some(slot) = values.get_mut(lit.var().index()) {
                *slot = lit.is_positive();
            }
        }
    }
    match verdict {
        Some(true) => Ok(SolveResult::Sat(Model::new(values))),
        Some(false) => Ok(SolveResult::Unsat),
        None => Err(ExternalError::NoVerdict),
    }
}
