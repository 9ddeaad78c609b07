//! Posterior-draw archive: a directory holding `manifest.json` plus flat
//! little-endian `f64` files.
//!
//! * `rho.bin`: `[draw][level][edge]`
//! * `beta.bin`: `[draw][edge][covariate]` (optional)
//! * `omega.bin`: `[draw][node]` (optional)
//! * `log.jsonl`: one iteration record per line

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use edgereg::sampler::IterationRecord;
use edgereg::{CoefficientDraws, PosteriorDraws};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Mode;
use crate::error::{CliError, CliResult};
use crate::io::{read_json, write_json};

pub const FORMAT: &str = "edgereg-draws/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub mode: Mode,
    pub p: usize,
    pub q: usize,
    pub n_draws: usize,
    pub levels: Vec<Vec<f64>>,
    pub level_labels: Vec<String>,
    pub node_names: Vec<String>,
    pub covariate_names: Vec<String>,
    pub seed: u64,
    pub config_hash: String,
    pub effective_config: serde_json::Value,
    pub burn_in: usize,
    pub draw_iterations: Vec<usize>,
    pub m_s: Vec<f64>,
    pub post_burn_in_acceptance: Vec<f64>,
    pub has_coefficients: bool,
}

/// Hex SHA-256 of the concatenated byte strings.
pub fn sha256_hex(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_f64s(path: &Path, values: &[f64]) -> CliResult<()> {
    let f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(f);
    for v in values {
        w.write_all(&v.to_le_bytes()).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_f64s(path: &Path) -> CliResult<Vec<f64>> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    if bytes.len() % 8 != 0 {
        return Err(CliError::io(path, "length is not a multiple of 8 bytes"));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

pub struct Archive {
    pub manifest: Manifest,
    pub rho: PosteriorDraws,
    pub coefficients: Option<CoefficientDraws>,
}

pub fn write_archive(
    dir: &Path,
    manifest: &Manifest,
    rho: &PosteriorDraws,
    coefficients: Option<&CoefficientDraws>,
    log: &[IterationRecord],
) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    write_f64s(&dir.join("rho.bin"), rho.raw())?;
    if let Some(c) = coefficients {
        write_f64s(&dir.join("beta.bin"), &c.beta)?;
        write_f64s(&dir.join("omega.bin"), &c.omega_diag)?;
    }
    let path = dir.join("log.jsonl");
    let f = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
    let mut w = BufWriter::new(f);
    for rec in log {
        let line = serde_json::to_string(rec).map_err(|e| CliError::io(&path, e))?;
        writeln!(w, "{line}").map_err(|e| CliError::io(&path, e))?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    // Manifest last: its presence marks a complete archive.
    write_json(&dir.join("manifest.json"), manifest)
}

pub fn read_manifest(dir: &Path) -> CliResult<Manifest> {
    let m: Manifest = read_json(&dir.join("manifest.json"))?;
    if m.format != FORMAT {
        return Err(CliError::config(format!("unsupported archive format '{}'", m.format)));
    }
    Ok(m)
}

pub fn read_archive(dir: &Path) -> CliResult<Archive> {
    let manifest = read_manifest(dir)?;
    let rho = PosteriorDraws::from_parts(
        manifest.p,
        manifest.levels.clone(),
        read_f64s(&dir.join("rho.bin"))?,
        manifest.draw_iterations.clone(),
    )?;
    let coefficients = if manifest.has_coefficients {
        let c = CoefficientDraws {
            p: manifest.p,
            q: manifest.q,
            beta: read_f64s(&dir.join("beta.bin"))?,
            omega_diag: read_f64s(&dir.join("omega.bin"))?,
            draw_iterations: manifest.draw_iterations.clone(),
        };
        let e = manifest.p * (manifest.p - 1) / 2;
        if c.beta.len() != manifest.n_draws * e * manifest.q || c.omega_diag.len() != manifest.n_draws * manifest.p {
            return Err(CliError::io(dir, "coefficient files disagree with the manifest"));
        }
        Some(c)
    } else {
        None
    };
    Ok(Archive {
        manifest,
        rho,
        coefficients,
    })
}

pub fn read_log(dir: &Path) -> CliResult<Vec<IterationRecord>> {
    let path = dir.join("log.jsonl");
    let f = fs::File::open(&path).map_err(|e| CliError::io(&path, e))?;
    BufReader::new(f)
        .lines()
        .map(|line| {
            let line = line.map_err(|e| CliError::io(&path, e))?;
            serde_json::from_str(&line).map_err(|e| CliError::io(&path, e))
        })
        .collect()
}
