//! File formats: CSV ingestion, versioned JSON documents and Graphviz export.
//!
//! Scenario CSV: one scenario per row, header optional, an optional final
//! column named `prob`. Path CSV: columns `stage2..stageT`, optionally followed
//! by `prob`. Without a `prob` column every row is equally likely.

use std::fmt::Write as _;
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::distributions::{ScenarioPathMatrix, ScenarioSet, ScenarioTree};
use crate::ea::GenerationRecord;
use crate::error::{Error, Result};

/// Version stamped into every JSON document this crate writes.
pub const FORMAT_VERSION: u32 = 1;

/// Raw numeric table read from a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub rows: Vec<Vec<f64>>,
    pub probabilities: Option<Vec<f64>>,
}

fn parse_error(path: &Path, row: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        row,
        message: message.into(),
    }
}

/// Reads a numeric CSV table. Row numbers in errors are 1-based file lines.
pub fn read_table(path: &Path) -> Result<Table> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(file);

    let mut header = None;
    let mut rows = Vec::new();
    let mut prob_col = None;
    let mut width = None;
    for (n, record) in reader.records().enumerate() {
        let record = record.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let line = record.position().map_or(n + 1, |p| p.line() as usize);
        if n == 0 && record.iter().any(|f| f.parse::<f64>().is_err()) {
            let names: Vec<String> = record.iter().map(str::to_string).collect();
            if let Some(i) = names.iter().position(|h| h.eq_ignore_ascii_case("prob")) {
                if i + 1 != names.len() {
                    return Err(parse_error(path, line, "the `prob` column must be the last column"));
                }
                prob_col = Some(i);
            }
            width = Some(names.len());
            header = Some(names);
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(parse_error(
                path,
                line,
                format!("expected {expected} fields, found {}", record.len()),
            ));
        }
        let values = record
            .iter()
            .enumerate()
            .map(|(col, field)| match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(parse_error(
                    path,
                    line,
                    format!("column {}: {field:?} is not a finite number", col + 1),
                )),
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(parse_error(path, 1, "no data rows"));
    }
    let probabilities = prob_col.map(|c| rows.iter_mut().map(|r| r.remove(c)).collect());
    if let Some(h) = header.as_mut() {
        if let Some(c) = prob_col {
            h.remove(c);
        }
    }
    Ok(Table {
        header,
        rows,
        probabilities,
    })
}

fn in_file(path: &Path) -> impl FnOnce(Error) -> Error + '_ {
    move |source| Error::InvalidFile {
        path: path.to_path_buf(),
        source: Box::new(source),
    }
}

/// Loads a single-stage scenario set.
pub fn read_scenarios(path: &Path) -> Result<(ScenarioSet, Option<Vec<String>>)> {
    let table = read_table(path)?;
    let set = ScenarioSet::new(table.rows, table.probabilities).map_err(in_file(path))?;
    Ok((set, table.header))
}

/// Loads a multi-stage path matrix; the root carries `root_value`.
pub fn read_paths(path: &Path, root_value: f64) -> Result<ScenarioPathMatrix> {
    let table = read_table(path)?;
    if let Some(header) = &table.header {
        for (i, name) in header.iter().enumerate() {
            let expected = format!("stage{}", i + 2);
            if !name.eq_ignore_ascii_case(&expected) {
                return Err(parse_error(
                    path,
                    1,
                    format!("column {} is named {name:?}, expected {expected:?}", i + 1),
                ));
            }
        }
    }
    ScenarioPathMatrix::new(table.rows, table.probabilities, root_value).map_err(in_file(path))
}

/// Writes a scenario set as CSV with a trailing `prob` column.
pub fn scenarios_to_csv(set: &ScenarioSet, header: Option<&[String]>) -> String {
    let mut out = String::new();
    let names: Vec<String> = match header {
        Some(h) if h.len() == set.dims() => h.to_vec(),
        _ => (1..=set.dims()).map(|i| format!("x{i}")).collect(),
    };
    out.push_str(&names.join(","));
    out.push_str(",prob\n");
    for (row, p) in set.rows().zip(set.probabilities()) {
        for v in row {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{p}");
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: PathBuf::from(path),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioDocument {
    pub format_version: u32,
    pub weights: Vec<f64>,
    pub expectation: f64,
    pub risk: f64,
    pub objective: f64,
    /// Penalized fitness of the best individual.
    pub fitness: f64,
    /// Mean pairwise L1 distance between the optima of repeated runs with other seeds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed_dispersion: Option<f64>,
    pub log: Vec<GenerationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputScenario {
    pub values: Vec<f64>,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterDocument {
    pub format_version: u32,
    pub objective: f64,
    pub scenarios: Vec<OutputScenario>,
    pub distances: Vec<f64>,
    /// Zero-based output scenario of every input scenario.
    pub assignment: Vec<usize>,
    pub log: Vec<GenerationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    /// 1-based stage; the root is stage 1.
    pub stage: usize,
    /// Index within the stage.
    pub index: usize,
    pub value: f64,
    pub probability: f64,
    /// Index of the parent within the previous stage.
    pub parent: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDocument {
    pub format_version: u32,
    pub node_counts: Vec<usize>,
    pub objective: f64,
    pub nodes: Vec<NodeRecord>,
    /// Terminal node of every input path.
    pub routing: Vec<usize>,
    pub log: Vec<GenerationRecord>,
}

pub fn tree_nodes(tree: &ScenarioTree) -> Vec<NodeRecord> {
    tree.levels()
        .iter()
        .enumerate()
        .flat_map(|(level, nodes)| {
            nodes.iter().enumerate().map(move |(index, n)| NodeRecord {
                stage: level + 1,
                index,
                value: n.value,
                probability: n.probability,
                parent: n.parent,
            })
        })
        .collect()
}

/// Graphviz rendering of a tree: one rank per stage, nodes ordered by stage
/// then index, edges labelled with conditional probabilities.
pub fn export_tree_dot(tree: &ScenarioTree) -> String {
    let mut out = String::from("digraph scenario_tree {\n  rankdir=LR;\n  node [shape=circle, fontsize=10];\n");
    for (level, nodes) in tree.levels().iter().enumerate() {
        let _ = write!(out, "  {{ rank=same;");
        for (i, node) in nodes.iter().enumerate() {
            let _ = write!(out, " s{}_{i} [label=\"{:.4}\"];", level + 1, node.value);
        }
        out.push_str(" }\n");
    }
    for level in 1..tree.stages() {
        let parents = tree.level(level - 1);
        for (i, node) in tree.level(level).iter().enumerate() {
            let Some(p) = node.parent else { continue };
            let parent_mass = parents[p].probability;
            let conditional = if parent_mass > 0.0 {
                node.probability / parent_mass
            } else {
                0.0
            };
            let _ = writeln!(
                out,
                "  s{}_{p} -> s{}_{i} [label=\"{conditional:.3}\"];",
                level,
                level + 1
            );
        }
    }
    out.push_str("}\n");
    out
}
