//! Benchmark suites, their runner, and aggregation of the resulting rows.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::graphs::{make_clique, make_grid, make_random, make_star, Graph};
use crate::metrics::{MetricsRow, SCHEMA};
use crate::relocation::{random_instance, Instance, Variant};
use crate::solvers::{solve_with, Algorithm, SolverConfig};

/// Share of extra edges in random benchmark graphs.
pub const RANDOM_EXTRA_EDGES: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Grid { width: usize, height: usize },
    /// Spanning tree plus [`RANDOM_EXTRA_EDGES`]; the graph depends on the seed.
    Random { n: usize },
    Star { n: usize },
    Clique { n: usize },
}

impl Family {
    pub fn name(&self) -> String {
        match *self {
            Family::Grid { width, height } => format!("grid{width}x{height}"),
            Family::Random { n } => format!("random{n}"),
            Family::Star { n } => format!("star{n}"),
            Family::Clique { n } => format!("clique{n}"),
        }
    }

    pub fn graph(&self, seed: u64) -> Result<Graph> {
        match *self {
            Family::Grid { width, height } => make_grid(width, height),
            Family::Random { n } => make_random(n, RANDOM_EXTRA_EDGES, seed),
            Family::Star { n } => make_star(n),
            Family::Clique { n } => make_clique(n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub family: Family,
    pub variant: Variant,
    pub k: usize,
}

impl Cell {
    pub fn instance(&self, seed: u64) -> Result<Instance> {
        random_instance(&self.family.graph(seed)?, self.variant, self.k, seed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Suite {
    pub name: String,
    pub cells: Vec<Cell>,
    pub algorithms: Vec<Algorithm>,
}

const COMPARED: [Algorithm; 3] = [Algorithm::Cbs, Algorithm::MddSat, Algorithm::SmtCbs];

fn grid_suite(name: &str, variants: &[Variant], ks: &[usize]) -> Suite {
    let family = Family::Grid { width: 8, height: 8 };
    let cells = variants
        .iter()
        .flat_map(|&variant| ks.iter().map(move |&k| Cell { family, variant, k }))
        .collect();
    Suite {
        name: name.to_owned(),
        cells,
        algorithms: COMPARED.to_vec(),
    }
}

/// Named suites:
/// * `paper-small`: 8x8 grid, every variant, k in {4, 8, 12, 16};
/// * `lazy-eager`: 8x8 grid, MAPF and TSWAP, k in {8, 12, 16};
/// * `families`: star, clique and random graphs on 16 vertices, every variant, k in {4, 8};
/// * `smoke`: 4x4 grid, every variant, k in {2, 3};
/// * `empty`: nothing.
pub fn suite(name: &str) -> Result<Suite> {
    match name {
        "paper-small" => Ok(grid_suite(name, &Variant::ALL, &[4, 8, 12, 16])),
        "lazy-eager" => Ok(grid_suite(name, &[Variant::Mapf, Variant::Tswap], &[8, 12, 16])),
        "families" => {
            let mut cells = Vec::new();
            for family in [Family::Star { n: 16 }, Family::Clique { n: 16 }, Family::Random { n: 16 }] {
                for variant in Variant::ALL {
                    for k in [4, 8] {
                        cells.push(Cell { family, variant, k });
                    }
                }
            }
            Ok(Suite {
                name: name.to_owned(),
                cells,
                algorithms: COMPARED.to_vec(),
            })
        }
        "smoke" => {
            let family = Family::Grid { width: 4, height: 4 };
            let cells = Variant::ALL
                .iter()
                .flat_map(|&variant| [2, 3].map(|k| Cell { family, variant, k }))
                .collect();
            Ok(Suite {
                name: name.to_owned(),
                cells,
                algorithms: COMPARED.to_vec(),
            })
        }
        "empty" => Ok(Suite {
            name: name.to_owned(),
            cells: Vec::new(),
            algorithms: COMPARED.to_vec(),
        }),
        _ => Err(invalid(format!("unknown suite {name:?}"))),
    }
}

pub fn instance_id(cell: &Cell, seed: u64) -> String {
    format!("{}-{}-k{}-s{seed}", cell.family.name(), cell.variant, cell.k)
}

/// Runs every cell for seeds `1..=seeds` and every algorithm, in a fixed
/// order. Failed runs become `error` rows; the run continues.
pub fn run_suite(suite: &Suite, seeds: u64, config: &SolverConfig, mut on_row: impl FnMut(&MetricsRow)) -> Vec<MetricsRow> {
    let mut rows = Vec::new();
    for cell in &suite.cells {
        let family = cell.family.name();
        for seed in 1..=seeds {
            let id = instance_id(cell, seed);
            let inst = cell.instance(seed);
            for &alg in &suite.algorithms {
                let row = match &inst {
                    Ok(inst) => match solve_with(alg, inst, config) {
                        Ok(report) => MetricsRow::from_report(&id, &family, inst, seed, &report),
                        Err(_) => MetricsRow::failed(&id, &family, cell.variant.name(), alg.name(), inst.num_vertices(), cell.k, seed),
                    },
                    Err(_) => MetricsRow::failed(&id, &family, cell.variant.name(), alg.name(), 0, cell.k, seed),
                };
                on_row(&row);
                rows.push(row);
            }
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub family: String,
    pub variant: String,
    pub k: usize,
    pub algorithm: String,
    pub runs: usize,
    pub solved: usize,
    pub solve_rate: f64,
    pub mean_runtime_ms: Option<f64>,
    pub median_runtime_ms: Option<f64>,
    pub mean_sat_ms: Option<f64>,
    pub mean_xi: Option<f64>,
    pub mean_clauses: Option<f64>,
    pub mean_variables: Option<f64>,
    /// Mean over instances both SAT drivers solved of smtcbs / mddsat clauses.
    pub clause_ratio: Option<f64>,
}

/// Order-independent mean.
fn mean(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    Some(xs.iter().sum::<f64>() / xs.len() as f64)
}

fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    Some(if xs.len() % 2 == 1 { xs[m] } else { (xs[m - 1] + xs[m]) / 2.0 })
}

/// Aggregates per (family, variant, k, algorithm). Runtime, cost and size
/// means only cover solved runs.
pub fn summarize(rows: &[MetricsRow]) -> Result<Vec<SummaryRow>> {
    if let Some(r) = rows.iter().find(|r| r.schema != SCHEMA) {
        return Err(Error::InvalidArgument(format!("row schema {:?} is not {SCHEMA}", r.schema)));
    }
    let mut cells: BTreeMap<(String, String, usize, String), Vec<&MetricsRow>> = BTreeMap::new();
    for r in rows {
        cells
            .entry((r.family.clone(), r.variant.clone(), r.k, r.algorithm.clone()))
            .or_default()
            .push(r);
    }
    let eager: HashMap<(&str, u64), usize> = rows
        .iter()
        .filter(|r| r.solved && r.algorithm == Algorithm::MddSat.name())
        .map(|r| ((r.instance_id.as_str(), r.seed), r.clauses))
        .collect();
    let mut out = Vec::new();
    for ((family, variant, k, algorithm), runs) in cells {
        let solved: Vec<&MetricsRow> = runs.iter().copied().filter(|r| r.solved).collect();
        let collect = |f: fn(&MetricsRow) -> f64| solved.iter().map(|r| f(r)).collect::<Vec<f64>>();
        let clause_ratio = if algorithm == Algorithm::SmtCbs.name() {
            mean(
                solved
                    .iter()
                    .filter_map(|r| {
                        let e = *eager.get(&(r.instance_id.as_str(), r.seed))?;
                        (e > 0).then(|| r.clauses as f64 / e as f64)
                    })
                    .collect(),
            )
        } else {
            None
        };
        out.push(SummaryRow {
            family,
            variant,
            k,
            algorithm,
            runs: runs.len(),
            solved: solved.len(),
            solve_rate: solved.len() as f64 / runs.len() as f64,
            mean_runtime_ms: mean(collect(|r| r.runtime_ms)),
            median_runtime_ms: median(collect(|r| r.runtime_ms)),
            mean_sat_ms: mean(collect(|r| r.sat_ms)),
            mean_xi: mean(collect(|r| r.xi.unwrap_or(0) as f64)),
            mean_clauses: mean(collect(|r| r.clauses as f64)),
            mean_variables: mean(collect(|r| r.variables as f64)),
            clause_ratio,
        });
    }
    Ok(out)
}

pub const SUMMARY_HEADER: [&str; 14] = [
    "family",
    "variant",
    "k",
    "algorithm",
    "runs",
    "solved",
    "solve_rate",
    "mean_runtime_ms",
    "median_runtime_ms",
    "mean_sat_ms",
    "mean_xi",
    "mean_clauses",
    "mean_variables",
    "clause_ratio",
];

/// Header line included even when there are no rows.
pub fn write_summary<W: Write>(out: W, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(&SUMMARY_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Aligned plain-text table; cells without solved runs show `—`.
pub fn render_table(rows: &[SummaryRow]) -> String {
    let fmt = |x: Option<f64>, digits: usize| x.map_or_else(|| "—".to_owned(), |v| format!("{v:.digits$}"));
    let header = [
        "family", "variant", "k", "algorithm", "solved", "rate", "mean_ms", "median_ms", "mean_xi", "clauses", "ratio",
    ];
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.family.clone(),
                r.variant.clone(),
                r.k.to_string(),
                r.algorithm.clone(),
                format!("{}/{}", r.solved, r.runs),
                format!("{:.2}", r.solve_rate),
                fmt(r.mean_runtime_ms, 1),
                fmt(r.median_runtime_ms, 1),
                fmt(r.mean_xi, 1),
                fmt(r.mean_clauses, 0),
                if r.algorithm == Algorithm::SmtCbs.name() { fmt(r.clause_ratio, 3) } else { String::new() },
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for line in &body {
        for (w, cell) in widths.iter_mut().zip(line) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut emit = |cells: Vec<String>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        let _ = writeln!(out, "{}", padded.join("  ").trim_end());
    };
    emit(header.iter().map(|h| h.to_string()).collect());
    for line in body {
        emit(line);
    }
    out
}
