#![cfg(unix)]

use std::io::Write;
use std::os::unix::fs::PermissionsExt;
use std::time::Duration;

use relocate_sat::{CnfFormula, ExternalSolver, SolveResult, Var};

fn script(body: &str) -> tempfile::TempPath {
    let mut f = tempfile::Builder::new().suffix(".sh").tempfile().unwrap();
    writeln!(f, "#!/bin/sh\n{body}").unwrap();
    let path = f.into_temp_path();
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
    path
}

#[test]
fn large_models_do_not_block_the_pipe() {
    let n = 30_000;
    let mut f = CnfFormula::with_vars(n);
    for v in 0..n {
        f.add_clause(vec![Var(v as u32).pos()]).unwrap();
    }
    let path = script("echo 's SATISFIABLE'; printf 'v '; seq 1 30000 | tr '\\n' ' '; echo 0");
    let solver = ExternalSolver::new(path.to_str().unwrap()).unwrap();
    match solver.solve(&f, Some(Duration::from_secs(30))).unwrap() {
        SolveResult::Sat(m) => assert!((0..n).all(|v| m.value(Var(v as u32)))),
        other => panic!("{other:?}"),
    }
}

#[test]
fn slow_solvers_time_out() {
    let path = script("sleep 5; echo 's UNSATISFIABLE'");
    let solver = ExternalSolver::new(path.to_str().unwrap()).unwrap();
    let r = solver.solve(&CnfFormula::with_vars(1), Some(Duration::from_millis(100))).unwrap();
    assert_eq!(r, SolveResult::Timeout);
}

#[test]
fn wrong_models_are_rejected() {
    let mut f = CnfFormula::with_vars(1);
    f.add_clause(vec![Var(0).pos()]).unwrap();
    let path = script("echo 's SATISFIABLE'; echo 'v -1 0'");
    let solver = ExternalSolver::new(path.to_str().unwrap()).unwrap();
    assert!(solver.solve(&f, None).is_err());
}
