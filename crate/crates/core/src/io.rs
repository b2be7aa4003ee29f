// SPDX-License-Identifier: Apache-2.0
//! File formats.
//!
//! Graph files are line-oriented text:
//!
//! ```text
//! # comment
//! nodes 3
//! node c        # optional: declares a label without edges
//! edge a b      # a is a parent of b
//! ```
//!
//! Labels get dense indices in order of first appearance. Nodes never named
//! take their index as label. A file whose first line is `trigenic` instead
//! lists `gene g`, `pair g h` and `triplet g h k` lines.
//!
//! P-value files are CSV with header `node,p`.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::pvalues::{clamp_p, PValues};
use crate::selection::{Method, Round, SelectionResult};
use crate::simulation::{trigenic_graph, BenchmarkSummary, CellKey};

/// A graph together with its external node labels.
#[derive(Debug, Clone)]
pub struct LabeledGraph {
    pub dag: Dag,
    pub labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabeledGraph {
    pub fn new(dag: Dag, labels: Vec<String>) -> Result<Self> {
        if labels.len() != dag.node_count() {
            return Err(Error::Alignment { expected: dag.node_count(), got: labels.len() });
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if l.is_empty() || l.chars().any(|c| c.is_whitespace() || c == ',') {
                return Err(Error::Parse { line: 0, message: format!("label `{l}` is empty or has a space or comma") });
            }
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::DuplicateNode(l.clone()));
            }
        }
        Ok(Self { dag, labels, index })
    }

    /// Labels `0`, `1`, ... for an unlabeled graph.
    pub fn with_index_labels(dag: Dag) -> Self {
        let labels = (0..dag.node_count()).map(|i| i.to_string()).collect();
        Self::new(dag, labels).expect("index labels are unique")
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }
}

pub fn read_graph(path: &Path) -> Result<LabeledGraph> {
    parse_graph(&fs::read_to_string(path)?)
}

pub fn parse_graph(text: &str) -> Result<LabeledGraph> {
    let lines: Vec<(usize, Vec<&str>)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, t)| !t.is_empty())
        .collect();
    match lines.first() {
        None => Err(Error::Parse { line: 1, message: "empty graph file".into() }),
        Some((_, t)) if t[0] == "trigenic" => parse_trigenic(&lines),
        Some(_) => parse_plain(&lines),
    }
}

fn parse_plain(lines: &[(usize, Vec<&str>)]) -> Result<LabeledGraph> {
    let err = |line: usize, message: String| Error::Parse { line, message };
    let (first, head) = &lines[0];
    let n = match head.as_slice() {
        ["nodes", n] => n.parse::<usize>().map_err(|_| err(*first, format!("bad node count `{n}`")))?,
        _ => return Err(err(*first, "expected `nodes <n>`".into())),
    };
    let mut labels: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut intern = |label: &str, line: usize| -> Result<usize> {
        if let Some(&i) = index.get(label) {
            return Ok(i);
        }
        if labels.len() == n {
            return Err(err(line, format!("label `{label}` exceeds the declared {n} nodes")));
        }
        if label.contains(',') {
            return Err(err(line, format!("label `{label}` contains a comma")));
        }
        index.insert(label.to_string(), labels.len());
        labels.push(label.to_string());
        Ok(labels.len() - 1)
    };
    let mut edges = Vec::new();
    for (line, t) in &lines[1..] {
        match t.as_slice() {
            ["node", a] => {
                intern(a, *line)?;
            }
            ["edge", a, b] => {
                let (pa, ch) = (intern(a, *line)?, intern(b, *line)?);
                edges.push((pa, ch));
            }
            _ => return Err(err(*line, format!("expected `node <label>` or `edge <parent> <child>`, got `{}`", t.join(" ")))),
        }
    }
    for i in labels.len()..n {
        let implicit = i.to_string();
        if index.contains_key(&implicit) {
            return Err(err(0, format!("implicit label `{implicit}` collides with a declared label")));
        }
        index.insert(implicit.clone(), i);
        labels.push(implicit);
    }
    let dag = Dag::new(n, &edges)?;
    LabeledGraph::new(dag, labels)
}

fn parse_trigenic(lines: &[(usize, Vec<&str>)]) -> Result<LabeledGraph> {
    let (mut genes, mut pairs, mut triplets) = (Vec::new(), Vec::new(), Vec::new());
    let own = |s: &&str| s.to_string();
    for (line, t) in &lines[1..] {
        match t.as_slice() {
            ["gene", g] => genes.push(g.to_string()),
            ["pair", a, b] => pairs.push([a, b].map(&own)),
            ["triplet", a, b, c] => triplets.push([a, b, c].map(&own)),
            _ => {
                return Err(Error::Parse {
                    line: *line,
                    message: format!("expected `gene`, `pair` or `triplet`, got `{}`", t.join(" ")),
                })
            }
        }
    }
    let (dag, labels) = trigenic_graph(&genes, &pairs, &triplets)?;
    LabeledGraph::new(dag, labels)
}

pub fn format_graph(g: &LabeledGraph) -> String {
    let mut s = format!("nodes {}\n", g.dag.node_count());
    for l in &g.labels {
        s.push_str(&format!("node {l}\n"));
    }
    for &(a, b) in g.dag.edges() {
        s.push_str(&format!("edge {} {}\n", g.labels[a], g.labels[b]));
    }
    s
}

pub fn write_graph(path: &Path, g: &LabeledGraph) -> Result<()> {
    write_atomic(path, format_graph(g).as_bytes())
}

#[derive(Debug, Serialize, Deserialize)]
struct PRow {
    node: String,
    p: String,
}

/// Reads a `node,p` CSV aligned to `graph`. Values outside `[0, 1]` are
/// errors; values that smoothing will clamp are logged as warnings.
pub fn read_pvalues(path: &Path, graph: &LabeledGraph) -> Result<PValues> {
    parse_pvalues(&fs::read_to_string(path)?, graph)
}

pub fn parse_pvalues(text: &str, graph: &LabeledGraph) -> Result<PValues> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| csv_error(e, 1))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["node", "p"] {
        return Err(Error::Parse { line: 1, message: "expected header `node,p`".into() });
    }
    let n = graph.dag.node_count();
    let mut values: Vec<Option<f64>> = vec![None; n];
    for (i, row) in reader.deserialize::<PRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| csv_error(e, line))?;
        let v = graph
            .index_of(&row.node)
            .ok_or_else(|| Error::Parse { line, message: format!("unknown node `{}`", row.node) })?;
        let p: f64 = row
            .p
            .parse()
            .map_err(|_| Error::Parse { line, message: format!("bad p-value `{}`", row.p) })?;
        if p.is_nan() || !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRange { label: row.node, value: p });
        }
        if values[v].replace(p).is_some() {
            return Err(Error::DuplicateNode(row.node));
        }
        if clamp_p(p) != p {
            log::warn!("p-value {p} for node `{}` will be clamped for log/quantile smoothing", row.node);
        }
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(v, p)| p.ok_or_else(|| Error::MissingNode(graph.labels[v].clone())))
        .collect::<Result<Vec<_>>>()?;
    PValues::new(values)
}

fn csv_error(e: csv::Error, line: usize) -> Error {
    let line = e.position().map_or(line, |p| p.line() as usize);
    Error::Parse { line, message: e.to_string() }
}

pub fn format_pvalues(graph: &LabeledGraph, p: &PValues) -> Result<String> {
    if p.len() != graph.dag.node_count() {
        return Err(Error::Alignment { expected: graph.dag.node_count(), got: p.len() });
    }
    let mut s = String::from("node,p\n");
    for (l, x) in graph.labels.iter().zip(p.as_slice()) {
        s.push_str(&format!("{l},{x}\n"));
    }
    Ok(s)
}

pub fn write_pvalues(path: &Path, graph: &LabeledGraph, p: &PValues) -> Result<()> {
    write_atomic(path, format_pvalues(graph, p)?.as_bytes())
}

/// On-disk form of a [`SelectionResult`], with labels in place of indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionDocument {
    pub version: String,
    pub method: Method,
    pub alpha: f64,
    pub gamma: Option<f64>,
    pub smoothing: String,
    pub rejected: Vec<String>,
    pub rounds: Vec<LabeledRound>,
    /// Per node in index order.
    pub thresholds: Vec<Option<f64>>,
    /// Index to label mapping.
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledRound {
    pub round: usize,
    pub nodes: Vec<String>,
}

impl SelectionDocument {
    pub fn new(result: &SelectionResult, graph: &LabeledGraph, smoothing: &str, timestamp: Option<u64>) -> Self {
        let name = |v: &usize| graph.labels[*v].clone();
        Self {
            version: crate::VERSION.to_string(),
            method: result.method,
            alpha: result.alpha,
            gamma: result.gamma,
            smoothing: smoothing.to_string(),
            rejected: result.rejected.iter().map(name).collect(),
            rounds: result
                .rounds
                .iter()
                .map(|r| LabeledRound { round: r.round, nodes: r.nodes.iter().map(name).collect() })
                .collect(),
            thresholds: result.thresholds.clone(),
            labels: graph.labels.clone(),
            timestamp,
        }
    }

    /// Rebuilds the in-memory result using the embedded label table.
    pub fn to_result(&self) -> Result<SelectionResult> {
        let index: HashMap<&str, usize> = self.labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let look = |l: &String| index.get(l.as_str()).copied().ok_or_else(|| Error::MissingNode(l.clone()));
        Ok(SelectionResult {
            method: self.method,
            alpha: self.alpha,
            gamma: self.gamma,
            rejected: self.rejected.iter().map(look).collect::<Result<_>>()?,
            rounds: self
                .rounds
                .iter()
                .map(|r| Ok(Round { round: r.round, nodes: r.nodes.iter().map(look).collect::<Result<_>>()? }))
                .collect::<Result<_>>()?,
            thresholds: self.thresholds.clone(),
        })
    }
}

pub fn write_selection(path: &Path, doc: &SelectionDocument) -> Result<()> {
    write_json(path, doc)
}

pub fn read_selection(path: &Path) -> Result<SelectionDocument> {
    serde_json::from_str(&fs::read_to_string(path)?).map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })
}

pub const BENCHMARK_HEADER: [&str; 14] = [
    "recipe", "scheme", "smoothing", "method", "alpha", "trials", "power", "err_fwer", "err_fdx", "err_fdr",
    "se_power", "se_fwer", "se_fdx", "se_fdr",
];

#[derive(Debug, Serialize, Deserialize)]
struct BenchmarkRow {
    recipe: String,
    scheme: String,
    smoothing: String,
    method: Method,
    alpha: f64,
    trials: usize,
    power: f64,
    err_fwer: f64,
    err_fdx: f64,
    err_fdr: f64,
    se_power: f64,
    se_fwer: f64,
    se_fdx: f64,
    se_fdr: f64,
}

/// Long-format benchmark table, one row per cell.
pub fn format_benchmark_csv(rows: &[BenchmarkSummary]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(BENCHMARK_HEADER).map_err(|e| Error::Io(e.to_string()))?;
    }
    for s in rows {
        w.serialize(BenchmarkRow {
            recipe: s.key.recipe.clone(),
            scheme: s.key.scheme.clone(),
            smoothing: s.key.smoothing.clone(),
            method: s.key.method,
            alpha: s.key.alpha,
            trials: s.trials,
            power: s.power,
            err_fwer: s.err_fwer,
            err_fdx: s.err_fdx,
            err_fdr: s.err_fdr,
            se_power: s.se_power,
            se_fwer: s.se_fwer,
            se_fdx: s.se_fdx,
            se_fdr: s.se_fdr,
        })
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Parses a table written by [`format_benchmark_csv`]. The tolerance
/// `gamma` is not stored in the table and is filled from the argument.
pub fn parse_benchmark_csv(text: &str, gamma: f64) -> Result<Vec<BenchmarkSummary>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    reader
        .deserialize::<BenchmarkRow>()
        .enumerate()
        .map(|(i, row)| {
            let r = row.map_err(|e| csv_error(e, i + 2))?;
            Ok(BenchmarkSummary {
                key: CellKey {
                    recipe: r.recipe,
                    scheme: r.scheme,
                    smoothing: r.smoothing,
                    method: r.method,
                    gamma,
                    alpha: r.alpha,
                },
                trials: r.trials,
                power: r.power,
                err_fwer: r.err_fwer,
                err_fdx: r.err_fdx,
                err_fdr: r.err_fdr,
                se_power: r.se_power,
                se_fwer: r.se_fwer,
                se_fdx: r.se_fdx,
                se_fdr: r.se_fdr,
            })
        })
        .collect()
}

pub fn write_benchmark_csv(path: &Path, rows: &[BenchmarkSummary]) -> Result<()> {
    write_atomic(path, format_benchmark_csv(rows)?.as_bytes())
}

/// Pretty-printed JSON, written atomically.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Writes to a temporary file in the target directory, then renames it
/// over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selection::select_fwer_mg;
    use proptest::prelude::*;

    #[test]
    fn plain_graphs() {
        let g = parse_graph("# two nodes\nnodes 2\nedge a b\n").unwrap();
        assert_eq!(g.labels, vec!["a", "b"]);
        assert_eq!(g.dag.edges(), &[(0, 1)]);
        let flat = parse_graph("nodes 3\n").unwrap();
        assert_eq!(flat.dag.edge_count(), 0);
        assert_eq!(flat.labels, vec!["0", "1", "2"]);
        let mixed = parse_graph("nodes 3\nnode z\nedge a b  # trailing comment\n").unwrap();
        assert_eq!(mixed.labels, vec!["z", "a", "b"]);
    }

    #[test]
    fn graph_errors() {
        assert!(matches!(parse_graph("nodes 2\nedge a b\nedge b c\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_graph("edge a b\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_graph("nodes 2\nlink a b\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_graph(""), Err(Error::Parse { .. })));
        assert!(matches!(parse_graph("nodes 2\nedge a b\nedge b a\n"), Err(Error::CycleDetected { .. })));
    }

    #[test]
    fn trigenic_block() {
        let g = parse_graph("trigenic\ngene x\ngene y\ngene z\npair x y\ntriplet x y z\n").unwrap();
        assert_eq!(g.labels, vec!["x", "y", "z", "x+y", "x+y+z"]);
        assert_eq!(g.dag.parents(4), &[3]);
        assert!(parse_graph("trigenic\ngene x\npair x q\n").is_err());
    }

    fn chain() -> LabeledGraph {
        parse_graph("nodes 3\nedge a b\nedge b c\n").unwrap()
    }

    #[test]
    fn pvalue_files() {
        let g = chain();
        let p = parse_pvalues("node,p\nc,0.9\na,0.01\nb,0.02\n", &g).unwrap();
        assert_eq!(p.as_slice(), &[0.01, 0.02, 0.9]);
        assert!(matches!(parse_pvalues("node,p\na,1.2\nb,0.1\nc,0.1\n", &g), Err(Error::OutOfRange { .. })));
        assert!(matches!(parse_pvalues("node,p\na,0.1\nb,0.1\n", &g), Err(Error::MissingNode(l)) if l == "c"));
        assert!(matches!(parse_pvalues("node,p\na,0.1\na,0.1\nc,0.1\n", &g), Err(Error::DuplicateNode(_))));
        assert!(matches!(parse_pvalues("node,p\na,x\n", &g), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_pvalues("node,p\nq,0.1\n", &g), Err(Error::Parse { .. })));
        assert!(matches!(parse_pvalues("label,value\n", &g), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_pvalues("node,p\na,NaN\nb,0.1\nc,0.1\n", &g), Err(Error::OutOfRange { .. })));
        // Clamped values are accepted unchanged.
        let p = parse_pvalues("node,p\na,0\nb,1\nc,1e-300\n", &g).unwrap();
        assert_eq!(p.as_slice(), &[0.0, 1.0, 1e-300]);
    }

    #[test]
    fn selection_round_trip() {
        let g = chain();
        let p = PValues::new(vec![0.01, 0.02, 0.9]).unwrap();
        let r = select_fwer_mg(&g.dag, &p, 0.05).unwrap();
        let doc = SelectionDocument::new(&r, &g, "none", None);
        assert_eq!(doc.rejected, vec!["a", "b"]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        write_selection(&path, &doc).unwrap();
        let back = read_selection(&path).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_result().unwrap(), r);
        assert!(!fs::read_to_string(&path).unwrap().contains("timestamp"));
    }

    #[test]
    fn benchmark_csv_round_trip() {
        let s = BenchmarkSummary {
            key: CellKey {
                recipe: "deep_tree:8:2".into(),
                scheme: "global_normal".into(),
                smoothing: "fisher".into(),
                method: Method::Fdx,
                gamma: 0.1,
                alpha: 0.05,
            },
            trials: 100,
            power: 0.123456789,
            err_fwer: 0.01,
            err_fdx: 0.0,
            err_fdr: 1.0 / 3.0,
            se_power: 0.1,
            se_fwer: 0.2,
            se_fdx: 0.3,
            se_fdr: 0.4,
        };
        let text = format_benchmark_csv(std::slice::from_ref(&s)).unwrap();
        assert!(text.starts_with(&BENCHMARK_HEADER.join(",")));
        assert_eq!(parse_benchmark_csv(&text, 0.1).unwrap(), vec![s]);
        assert_eq!(format_benchmark_csv(&[]).unwrap().trim(), BENCHMARK_HEADER.join(","));
    }

    proptest! {
        #[test]
        fn graph_and_pvalue_round_trip(
            n in 1usize..30,
            raw_edges in prop::collection::vec((0usize..30, 0usize..30), 0..60),
            ps in prop::collection::vec(0.0f64..=1.0, 30),
        ) {
            let mut edges: Vec<(usize, usize)> = raw_edges
                .into_iter()
                .map(|(a, b)| (a % n, b % n))
                .filter(|(a, b)| a < b)
                .collect();
            edges.sort_unstable();
            edges.dedup();
            let dag = Dag::new(n, &edges).unwrap();
            let labels = (0..n).map(|i| format!("n{i}")).collect();
            let g = LabeledGraph::new(dag, labels).unwrap();
            let back = parse_graph(&format_graph(&g)).unwrap();
            prop_assert_eq!(&back.labels, &g.labels);
            prop_assert_eq!(back.dag.edges(), g.dag.edges());

            let p = PValues::new(ps[..n].to_vec()).unwrap();
            let text = format_pvalues(&g, &p).unwrap();
            prop_assert_eq!(parse_pvalues(&text, &back).unwrap(), p);
        }
    }
}
