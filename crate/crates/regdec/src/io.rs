//! File formats: whitespace-separated 0-based edge lists, headerless CSV
//! matrices, and one-label-per-line partition files. Parse errors carry
//! 1-based line (and column) references.

use crate::blockmodels::{Graph, Partition, WeightMatrix};
use crate::Error;
use ndarray::Array2;
use std::fmt::Write as _;
use std::path::Path;

/// Parse an undirected simple graph from edge-list text: one `u v` pair
/// per line, 0-based, blank lines ignored. Self-loops, duplicates, and
/// out-of-range endpoints are rejected with their line number. `n` is the
/// declared node count.
pub fn parse_edge_list(text: &str, n: usize) -> Result<Graph, Error> {
    let mut edges = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let (a, b) = match (tokens.next(), tokens.next(), tokens.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(Error::data(
                    format!("line {lineno}"),
                    format!("expected two node indices, got {line:?}"),
                ))
            }
        };
        let parse = |tok: &str| -> Result<usize, Error> {
            tok.parse().map_err(|_| {
                Error::data(format!("line {lineno}"), format!("non-integer token {tok:?}"))
            })
        };
        let (u, v) = (parse(a)?, parse(b)?);
        if u == v {
            return Err(Error::data(
                format!("line {lineno}"),
                format!("self-loop at node {u}"),
            ));
        }
        if u >= n || v >= n {
            return Err(Error::data(
                format!("line {lineno}"),
                format!("node index out of range for n = {n}"),
            ));
        }
        let key = (u.min(v), u.max(v));
        if !seen.insert(key) {
            return Err(Error::data(
                format!("line {lineno}"),
                format!("duplicate edge {} {}", key.0, key.1),
            ));
        }
        edges.push(key);
    }
    Graph::from_edges(n, &edges)
}

/// Render a graph as edge-list text, edges sorted, one per line.
pub fn format_edge_list(g: &Graph) -> String {
    let mut out = String::new();
    for (u, v) in g.edges() {
        writeln!(out, "{u} {v}").expect("string write");
    }
    out
}

pub fn read_edge_list(path: impl AsRef<Path>, n: usize) -> Result<Graph, Error> {
    parse_edge_list(&std::fs::read_to_string(path)?, n)
}

pub fn write_edge_list(path: impl AsRef<Path>, g: &Graph) -> Result<(), Error> {
    std::fs::write(path, format_edge_list(g))?;
    Ok(())
}

/// Parse a headerless comma-separated matrix of non-negative reals.
/// Ragged rows are reported by row number, bad cells by row and column.
pub fn parse_csv_matrix(text: &str) -> Result<WeightMatrix, Error> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (j, cell) in line.split(',').enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::data(
                    format!("row {lineno}, column {}", j + 1),
                    format!("not a number: {:?}", cell.trim()),
                )
            })?;
            if !v.is_finite() || v < 0.0 {
                return Err(Error::data(
                    format!("row {lineno}, column {}", j + 1),
                    format!("entries must be finite and non-negative, got {v}"),
                ));
            }
            row.push(v);
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::data(
                    format!("row {lineno}"),
                    format!("expected {w} columns, got {}", row.len()),
                ))
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::data("row 1", "empty matrix"));
    }
    let (n, m) = (rows.len(), rows[0].len());
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let data = Array2::from_shape_vec((n, m), flat).expect("shape checked");
    WeightMatrix::from_array(data)
}

/// Render a matrix as headerless CSV.
pub fn format_csv_matrix(m: &WeightMatrix) -> String {
    let mut out = String::new();
    for row in m.entries().rows() {
        let cells: Vec<String> = row.iter().map(|v| format_number(*v)).collect();
        writeln!(out, "{}", cells.join(",")).expect("string write");
    }
    out
}

fn format_number(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

pub fn read_csv_matrix(path: impl AsRef<Path>) -> Result<WeightMatrix, Error> {
    parse_csv_matrix(&std::fs::read_to_string(path)?)
}

pub fn write_csv_matrix(path: impl AsRef<Path>, m: &WeightMatrix) -> Result<(), Error> {
    std::fs::write(path, format_csv_matrix(m))?;
    Ok(())
}

/// Parse a partition file: one 0-based block index per line, in item
/// order. Labels must use a contiguous range `0..k`.
pub fn parse_partition(text: &str) -> Result<Partition, Error> {
    let mut labels = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let l: usize = line.parse().map_err(|_| {
            Error::data(format!("line {lineno}"), format!("not a block index: {line:?}"))
        })?;
        labels.push(l);
    }
    if labels.is_empty() {
        return Err(Error::data("line 1", "empty partition file"));
    }
    let k = labels.iter().max().unwrap() + 1;
    Partition::new(labels, k)
}

pub fn format_partition(p: &Partition) -> String {
    let mut out = String::new();
    for &l in p.labels() {
        writeln!(out, "{l}").expect("string write");
    }
    out
}

pub fn read_partition(path: impl AsRef<Path>) -> Result<Partition, Error> {
    parse_partition(&std::fs::read_to_string(path)?)
}

pub fn write_partition(path: impl AsRef<Path>, p: &Partition) -> Result<(), Error> {
    std::fs::write(path, format_partition(p))?;
    Ok(())
}
