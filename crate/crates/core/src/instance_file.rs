//! Plain-text instance format.
//!
//! ```text
//! # comment
//! variant tswap
//! vertices 2
//! e 0 1
//! a 0 0 1
//! a 1 1 0
//! ```

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graphs::Graph;
use crate::relocation::{Instance, Variant};

pub fn write_instance(inst: &Instance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "variant {}", inst.variant());
    let _ = writeln!(out, "vertices {}", inst.num_vertices());
    for &(u, v) in inst.graph().edges() {
        let _ = writeln!(out, "e {u} {v}");
    }
    for i in 0..inst.num_items() {
        let _ = writeln!(out, "a {i} {} {}", inst.start()[i], inst.goal()[i]);
    }
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn numbers<const N: usize>(line: usize, fields: &[&str]) -> Result<[usize; N]> {
    if fields.len() != N {
        return Err(parse_err(line, format!("expected {N} numbers, found {}", fields.len())));
    }
    let mut out = [0; N];
    for (slot, f) in out.iter_mut().zip(fields) {
        *slot = f.parse().map_err(|_| parse_err(line, format!("bad number {f:?}")))?;
    }
    Ok(out)
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut variant = None;
    let mut n = None;
    let mut edges = Vec::new();
    let mut items: Vec<Option<(usize, usize)>> = Vec::new();
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        match fields[0] {
            "variant" => {
                if variant.is_some() {
                    return Err(parse_err(line, "duplicate variant line"));
                }
                let [name] = fields[1..] else {
                    return Err(parse_err(line, "expected `variant <name>`"));
                };
                variant = Some(name.parse::<Variant>().map_err(|e| parse_err(line, e.to_string()))?);
            }
            "vertices" => {
                if variant.is_none() {
                    return Err(parse_err(line, "`vertices` before `variant`"));
                }
                if n.is_some() {
                    return Err(parse_err(line, "duplicate vertices line"));
                }
                let [count] = numbers::<1>(line, &fields[1..])?;
                n = Some(count);
            }
            "e" => {
                let Some(n) = n else {
                    return Err(parse_err(line, "edge before `vertices`"));
                };
                if !items.is_empty() {
                    return Err(parse_err(line, "edge after the first item"));
                }
                let [u, v] = numbers::<2>(line, &fields[1..])?;
                if u >= n || v >= n {
                    return Err(parse_err(line, format!("edge endpoint outside 0..{n}")));
                }
                edges.push((u, v));
            }
            "a" => {
                let Some(n) = n else {
                    return Err(parse_err(line, "item before `vertices`"));
                };
                let [id, s, g] = numbers::<3>(line, &fields[1..])?;
                if s >= n || g >= n {
                    return Err(parse_err(line, format!("item vertex outside 0..{n}")));
                }
                if id >= items.len() {
                    items.resize(id + 1, None);
                }
                if items[id].replace((s, g)).is_some() {
                    return Err(parse_err(line, format!("item {id} listed twice")));
                }
            }
            other => return Err(parse_err(line, format!("unknown record {other:?}"))),
        }
    }
    let variant = variant.ok_or_else(|| parse_err(last_line, "missing `variant` line"))?;
    let n = n.ok_or_else(|| parse_err(last_line, "missing `vertices` line"))?;
    let mut start = Vec::with_capacity(items.len());
    let mut goal = Vec::with_capacity(items.len());
    for (id, item) in items.into_iter().enumerate() {
        let (s, g) = item.ok_or_else(|| parse_err(last_line, format!("item {id} missing")))?;
        start.push(s);
        goal.push(g);
    }
    let graph = Graph::new(n, edges).map_err(|e| parse_err(last_line, e.to_string()))?;
    Instance::new(graph, variant, start, goal).map_err(|e| parse_err(last_line, e.to_string()))
}
