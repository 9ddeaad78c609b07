//! CSV and JSON file formats. CSV files are comma-separated with a header
//! row; numbers use Rust's shortest round-trip formatting.

use std::fs;
use std::path::Path;

use edgereg::simgen::{edge_mask, encode_groups, GroundTruth};
use edgereg::{Dataset, EdgeId, GraphEstimate, Group};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::Mode;
use crate::error::{CliError, CliResult};

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, e))?;
    write_text(path, &(text + "\n"))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::io(path, e))
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))
}

/// Writes rows of string cells under a header.
pub fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| CliError::io(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_matrix(path: &Path, header: &[String], m: &DMatrix<f64>) -> CliResult<()> {
    let rows: Vec<Vec<String>> = (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)].to_string()).collect())
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_rows(path, &header, &rows)
}

pub fn read_matrix(path: &Path) -> CliResult<(Vec<String>, DMatrix<f64>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| CliError::io(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut values = Vec::new();
    let mut n = 0;
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::io(path, e))?;
        if rec.len() != header.len() {
            return Err(CliError::config(format!("{}: ragged row {}", path.display(), n + 1)));
        }
        for cell in rec.iter() {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| CliError::config(format!("{}: '{cell}' is not a number", path.display())))?;
            values.push(v);
        }
        n += 1;
    }
    Ok((header.clone(), DMatrix::from_row_slice(n, header.len(), &values)))
}

/// Per-sample annotations from `samples.csv` (`sample,purity,group`).
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub ids: Vec<String>,
    pub purity: Vec<Option<f64>>,
    pub group: Vec<Option<Group>>,
}

pub fn write_samples(path: &Path, purity: &[f64], groups: &[Group]) -> CliResult<()> {
    let rows: Vec<Vec<String>> = purity
        .iter()
        .zip(groups)
        .enumerate()
        .map(|(k, (p, g))| vec![format!("s{}", k + 1), p.to_string(), g.to_string()])
        .collect();
    write_rows(path, &["sample", "purity", "group"], &rows)
}

pub fn read_samples(path: &Path) -> CliResult<Samples> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| CliError::io(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let col = |name: &str| header.iter().position(|h| h == name);
    let (ci, cp, cg) = (col("sample"), col("purity"), col("group"));
    let mut s = Samples {
        ids: Vec::new(),
        purity: Vec::new(),
        group: Vec::new(),
    };
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::io(path, e))?;
        s.ids.push(ci.and_then(|c| rec.get(c)).map_or(format!("s{}", k + 1), str::to_string));
        let purity = match cp.and_then(|c| rec.get(c)).map(str::trim).filter(|v| !v.is_empty()) {
            Some(v) => Some(
                v.parse::<f64>()
                    .map_err(|_| CliError::config(format!("{}: purity '{v}' is not a number", path.display())))?,
            ),
            None => None,
        };
        let group = match cg.and_then(|c| rec.get(c)).map(str::trim).filter(|v| !v.is_empty()) {
            Some(v) => Some(v.parse::<Group>().map_err(|e| CliError::config(format!("{}: {e}", path.display())))?),
            None => None,
        };
        s.purity.push(purity);
        s.group.push(group);
    }
    Ok(s)
}

/// A dataset directory: `y.csv`, `samples.csv` and, in general mode, `x.csv`.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub data: Dataset,
    pub samples: Samples,
}

pub fn load_dataset(dir: &Path, mode: Mode, intercept: bool) -> CliResult<LoadedData> {
    let (names, y) = read_matrix(&dir.join("y.csv"))?;
    let samples = read_samples(&dir.join("samples.csv"))?;
    if samples.ids.len() != y.nrows() {
        return Err(CliError::config(format!(
            "samples.csv has {} rows but y.csv has {}",
            samples.ids.len(),
            y.nrows()
        )));
    }
    let (x, cov_names) = match mode {
        Mode::Purity => {
            let pi: Vec<f64> = samples
                .purity
                .iter()
                .map(|p| p.ok_or_else(|| CliError::config("purity mode needs a purity for every sample")))
                .collect::<CliResult<_>>()?;
            if pi.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(CliError::config("purities must lie in [0, 1]"));
            }
            let x = DMatrix::from_fn(pi.len(), 2, |r, c| if c == 0 { 1.0 - pi[r] } else { pi[r] });
            (x, vec!["normal".to_string(), "tumor".to_string()])
        }
        Mode::Group => {
            let g: Vec<Group> = samples
                .group
                .iter()
                .map(|g| g.ok_or_else(|| CliError::config("group mode needs a group for every sample")))
                .collect::<CliResult<_>>()?;
            (encode_groups(&g), vec!["normal".into(), "tumor".into(), "shared".into()])
        }
        Mode::General => {
            let (h, x) = read_matrix(&dir.join("x.csv"))?;
            (x, h)
        }
    };
    let mut data = Dataset::new(y, x, names, cov_names)?;
    if intercept && mode == Mode::General {
        data = data.with_intercept()?;
    }
    Ok(LoadedData {
        data: data.standardize()?,
        samples,
    })
}

/// Sidecar describing a simulated truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSidecar {
    pub sim: u8,
    pub p: usize,
    pub seed: u64,
    pub n_reference: usize,
    pub n_mixed: usize,
    pub normal_edges: Vec<[usize; 2]>,
    pub tumor_edges: Vec<[usize; 2]>,
    pub overlap: usize,
}

fn edge_list(m: &DMatrix<f64>) -> Vec<[usize; 2]> {
    let p = m.nrows();
    edge_mask(m)
        .iter()
        .enumerate()
        .filter(|(_, b)| **b)
        .map(|(k, _)| {
            let e = EdgeId::from_index(p, k);
            [e.i, e.j]
        })
        .collect()
}

pub fn write_truth(dir: &Path, truth: &GroundTruth, names: &[String], meta: TruthSidecar) -> CliResult<()> {
    write_matrix(&dir.join("omega_n.csv"), names, &truth.omega_n)?;
    write_matrix(&dir.join("omega_t.csv"), names, &truth.omega_t)?;
    let sidecar = TruthSidecar {
        normal_edges: edge_list(&truth.omega_n),
        tumor_edges: edge_list(&truth.omega_t),
        overlap: truth.overlap(),
        ..meta
    };
    write_json(&dir.join("truth.json"), &sidecar)
}

pub fn read_truth(dir: &Path) -> CliResult<GroundTruth> {
    let (_, n) = read_matrix(&dir.join("omega_n.csv"))?;
    let (_, t) = read_matrix(&dir.join("omega_t.csv"))?;
    Ok(GroundTruth::new(n, t)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub i: usize,
    pub j: usize,
    pub source: String,
    pub target: String,
    pub rho_mean: f64,
    pub ppi: f64,
    pub sign: i8,
}

/// Serialized form of a selected graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub label: String,
    pub level: Vec<f64>,
    pub kappa: f64,
    pub alpha: f64,
    pub fdr_threshold: f64,
    pub phi: f64,
    pub nodes: Vec<String>,
    pub edges: Vec<GraphEdge>,
}

impl GraphDocument {
    pub fn new(label: &str, g: &GraphEstimate, nodes: &[String]) -> Self {
        let edges = g
            .selected
            .iter()
            .map(|e| {
                let k = e.index(g.p);
                let r = g.rho_mean[k];
                GraphEdge {
                    i: e.i,
                    j: e.j,
                    source: nodes[e.i].clone(),
                    target: nodes[e.j].clone(),
                    rho_mean: r,
                    ppi: g.ppi[k],
                    sign: if r > 0.0 {
                        1
                    } else if r < 0.0 {
                        -1
                    } else {
                        0
                    },
                }
            })
            .collect();
        GraphDocument {
            label: label.to_string(),
            level: g.level.clone(),
            kappa: g.kappa,
            alpha: g.alpha,
            fdr_threshold: g.fdr_threshold,
            phi: g.phi,
            nodes: nodes.to_vec(),
            edges,
        }
    }

    /// Undirected DOT graph; positive edges red, negative blue, pen width
    /// proportional to `|rho_mean|`.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph edgereg {\n");
        for n in &self.nodes {
            s.push_str(&format!("  \"{n}\";\n"));
        }
        for e in &self.edges {
            let color = if e.sign < 0 { "blue" } else { "red" };
            s.push_str(&format!(
                "  \"{}\" -- \"{}\" [color={color}, penwidth={:.4}];\n",
                e.source,
                e.target,
                10.0 * e.rho_mean.abs()
            ));
        }
        s.push_str("}\n");
        s
    }
}
