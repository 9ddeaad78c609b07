use std::fs;
use std::path::{Path, PathBuf};

use edgereg::diagnostics::{batch_geweke, coefficient_traces, filter_traces, hyper_traces, HISTOGRAM_BINS};
use edgereg::eval::{evaluate, EvalSettings, GraphMetrics};
use edgereg::inference::{pathway_edge_counts, predict_graph};
use edgereg::sampler::{compute_m_s, SampleSelector};
use edgereg::simgen::{build_sim1, build_sim2, generate_dataset, replicate_seed, Sim2Settings};
use edgereg::{run_chain, ChainConfig, Group};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::archive::{read_archive, read_log, read_manifest, sha256_hex, write_archive, Manifest, FORMAT};
use crate::args::{CommonArgs, DiagnoseArgs, EvaluateArgs, FitArgs, SelectArgs, SimulateArgs};
use crate::config::{parse_f64_list, parse_levels, Mode, RunConfig};
use crate::error::{CliError, CliResult};
use crate::io::{
    load_dataset, read_truth, write_json, write_matrix, write_rows, write_samples, write_text, write_truth,
    GraphDocument, LoadedData, TruthSidecar,
};

fn base_config(common: &CommonArgs) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::load(common.config.as_deref())?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(w) = common.workers {
        cfg.workers = Some(w);
    }
    Ok(cfg)
}

fn pool(workers: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::config(format!("thread pool: {e}")))
}

fn split_list(s: &Option<String>) -> Option<Vec<String>> {
    s.as_ref()
        .map(|s| s.split(',').map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect())
}

/// Sorted `rep_*` subdirectories, or `None` when `dir` is itself a leaf.
fn replicate_dirs(dir: &Path, leaf_marker: &str) -> CliResult<Option<Vec<PathBuf>>> {
    if dir.join(leaf_marker).exists() {
        return Ok(None);
    }
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut reps: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_dir()
                && p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("rep_"))
        })
        .collect();
    if reps.is_empty() {
        return Err(CliError::io(dir, format!("neither {leaf_marker} nor rep_* directories found")));
    }
    reps.sort();
    Ok(Some(reps))
}

// ---------------------------------------------------------------- simulate

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<Vec<PathBuf>> {
    let mut cfg = base_config(&args.common)?;
    let s = &mut cfg.simulate;
    if let Some(v) = args.sim {
        s.sim = v;
    }
    if let Some(v) = args.p {
        s.p = v;
    }
    if let Some(v) = args.replicates {
        s.replicates = v;
    }
    if args.n_reference.is_some() {
        s.n_reference = args.n_reference;
    }
    if args.n_mixed.is_some() {
        s.n_mixed = args.n_mixed;
    }
    cfg.validate()?;
    let sim = cfg.simulate.clone();
    let (n_reference, n_mixed) = sim.sizes();
    let dirs: Vec<PathBuf> = (0..sim.replicates).map(|r| args.out.join(format!("rep_{r:03}"))).collect();
    pool(cfg.worker_count()?)?.install(|| {
        dirs.par_iter().enumerate().try_for_each(|(r, dir)| {
            let seed = replicate_seed(cfg.seed, r as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let truth = match sim.sim {
                1 => build_sim1(sim.p, &mut rng)?,
                _ => build_sim2(sim.p, Sim2Settings::default(), &mut rng)?,
            };
            let d = generate_dataset(&truth, n_reference, n_mixed, &mut rng)?;
            let names = d.data.node_names().to_vec();
            write_matrix(&dir.join("y.csv"), &names, d.data.y())?;
            write_samples(&dir.join("samples.csv"), &d.purity, &d.groups)?;
            let meta = TruthSidecar {
                sim: sim.sim,
                p: sim.p,
                seed,
                n_reference,
                n_mixed,
                normal_edges: Vec::new(),
                tumor_edges: Vec::new(),
                overlap: 0,
            };
            write_truth(dir, &truth, &names, meta)
        })
    })?;
    write_json(&args.out.join("simulate.json"), &cfg)?;
    Ok(dirs)
}

// --------------------------------------------------------------------- fit

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FitStatus {
    Written,
    UpToDate,
}

#[derive(Serialize)]
struct FitIdentity<'a> {
    mode: Mode,
    seed: u64,
    chain: &'a crate::config::ChainSection,
    levels: &'a [(String, Vec<f64>)],
}

fn fit_config(args: &FitArgs) -> CliResult<RunConfig> {
    let mut cfg = base_config(&args.common)?;
    if let Some(m) = args.mode {
        cfg.mode = m;
    }
    if let Some(l) = split_list(&args.levels) {
        cfg.selection.levels = l;
    }
    let c = &mut cfg.chain;
    if let Some(v) = args.iterations {
        c.total_iterations = v;
    }
    if let Some(v) = args.burn_in {
        c.burn_in = v;
    }
    if let Some(v) = args.thin {
        c.thin = v;
    }
    c.intercept |= args.intercept;
    c.store_subject_level |= args.store_subject_level;
    if args.no_adapt {
        c.adapt_sigma_lambda = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Separates chain seeds of a replicate batch from the seeds `simulate`
/// used to generate the same replicates.
const FIT_STREAM: u64 = 0x6669_7400_0000_0000;

pub fn cmd_fit(args: &FitArgs) -> CliResult<Vec<(PathBuf, FitStatus)>> {
    let cfg = fit_config(args)?;
    match replicate_dirs(&args.data, "y.csv")? {
        None => Ok(vec![(args.out.clone(), fit_one(&cfg, &args.data, &args.out, cfg.seed, args.force)?)]),
        Some(reps) => pool(cfg.worker_count()?)?.install(|| {
            reps.par_iter()
                .enumerate()
                .map(|(r, dir)| {
                    let out = args.out.join(dir.file_name().expect("rep directory name"));
                    let seed = replicate_seed(cfg.seed ^ FIT_STREAM, r as u64);
                    let status = fit_one(&cfg, dir, &out, seed, args.force)?;
                    Ok((out, status))
                })
                .collect()
        }),
    }
}

fn selector(mode: Mode, loaded: &LoadedData) -> CliResult<SampleSelector> {
    Ok(match mode {
        Mode::Purity => SampleSelector::by_purity(&loaded.samples.purity.iter().map(|p| p.unwrap_or(0.0)).collect::<Vec<_>>()),
        Mode::Group => SampleSelector::by_group(
            &loaded
                .samples
                .group
                .iter()
                .map(|g| *g == Some(Group::Tumor))
                .collect::<Vec<_>>(),
        ),
        Mode::General => SampleSelector::from_rows(vec![(0..loaded.data.n()).collect(); loaded.data.q()]),
    })
}

fn fit_one(cfg: &RunConfig, data_dir: &Path, out: &Path, seed: u64, force: bool) -> CliResult<FitStatus> {
    let loaded = load_dataset(data_dir, cfg.mode, cfg.chain.intercept)?;
    let mut levels = parse_levels(cfg.mode, &cfg.selection.levels)?;
    if cfg.chain.intercept && cfg.mode == Mode::General {
        levels.iter_mut().for_each(|(_, v)| v.insert(0, 1.0));
    }
    if let Some((label, _)) = levels.iter().find(|(_, v)| v.len() != loaded.data.q()) {
        return Err(CliError::config(format!(
            "level '{label}' does not have q={} components",
            loaded.data.q()
        )));
    }

    let identity = serde_json::to_vec(&FitIdentity {
        mode: cfg.mode,
        seed,
        chain: &cfg.chain,
        levels: &levels,
    })
    .map_err(|e| CliError::config(e.to_string()))?;
    let mut parts: Vec<Vec<u8>> = vec![identity];
    for name in ["y.csv", "samples.csv", "x.csv"] {
        let path = data_dir.join(name);
        if path.exists() {
            parts.push(fs::read(&path).map_err(|e| CliError::io(&path, e))?);
        }
    }
    let hash = sha256_hex(&parts.iter().map(Vec::as_slice).collect::<Vec<_>>());

    if out.join("manifest.json").exists() {
        let existing = read_manifest(out)?;
        if existing.config_hash == hash {
            return Ok(FitStatus::UpToDate);
        }
        if !force {
            return Err(CliError::config(format!(
                "archive {} was built from a different configuration (hash {} != {}); use --force or another --out",
                out.display(),
                &existing.config_hash[..12],
                &hash[..12]
            )));
        }
    }

    let m_s = compute_m_s(&loaded.data, &selector(cfg.mode, &loaded)?)?;
    let chain = ChainConfig {
        total_iterations: cfg.chain.total_iterations,
        burn_in: cfg.chain.burn_in,
        thin: cfg.chain.thin,
        seed,
        target_levels: levels.iter().map(|(_, v)| v.clone()).collect(),
        store_subject_level: cfg.chain.store_subject_level,
        adapt_sigma_lambda: cfg.chain.adapt_sigma_lambda,
        store_coefficients: cfg.chain.store_coefficients,
        m_s: m_s.clone(),
        initial_sigma_lambda: cfg.chain.initial_sigma_lambda,
        ..ChainConfig::default()
    };
    let output = match run_chain(&loaded.data, &chain) {
        Ok(o) => o,
        Err(abort) => {
            let snapshot = match &abort.state {
                Some(state) => {
                    let path = out.join("abort_state.json");
                    write_json(&path, state)?;
                    Some(path)
                }
                None => None,
            };
            return Err(match abort.error {
                edgereg::Error::Numerical { .. } => CliError::Numerical {
                    message: abort.to_string(),
                    snapshot,
                },
                other => CliError::config(other.to_string()),
            });
        }
    };
    let manifest = Manifest {
        format: FORMAT.into(),
        mode: cfg.mode,
        p: loaded.data.p(),
        q: loaded.data.q(),
        n_draws: output.draws.n_draws(),
        levels: output.draws.levels().to_vec(),
        level_labels: levels.iter().map(|(l, _)| l.clone()).collect(),
        node_names: loaded.data.node_names().to_vec(),
        covariate_names: loaded.data.covariate_names().to_vec(),
        seed,
        config_hash: hash,
        effective_config: serde_json::to_value(cfg).map_err(|e| CliError::config(e.to_string()))?,
        burn_in: cfg.chain.burn_in,
        draw_iterations: output.draws.draw_iterations().to_vec(),
        m_s,
        post_burn_in_acceptance: output.post_burn_in_acceptance.clone(),
        has_coefficients: output.coefficients.is_some(),
    };
    write_archive(out, &manifest, &output.draws, output.coefficients.as_ref(), &output.log)?;
    Ok(FitStatus::Written)
}

// ------------------------------------------------------------------ select

fn fmt_param(v: f64) -> String {
    file_label(&v.to_string())
}

fn file_label(s: &str) -> String {
    s.chars()
        .map(|c| match c {
            '.' => 'p',
            c if c.is_ascii_alphanumeric() || c == '-' => c,
            _ => '_',
        })
        .collect()
}

/// Finds the recorded level matching a label or level string.
fn resolve_level(manifest: &Manifest, text: &str) -> CliResult<usize> {
    if let Some(k) = manifest.level_labels.iter().position(|l| l == text) {
        return Ok(k);
    }
    let parsed = parse_levels(manifest.mode, &[text.to_string()])?;
    let mut target = parsed[0].1.clone();
    if target.len() + 1 == manifest.q {
        target.insert(0, 1.0);
    }
    manifest
        .levels
        .iter()
        .position(|lv| lv.len() == target.len() && lv.iter().zip(&target).all(|(a, b)| (a - b).abs() <= 1e-9))
        .ok_or_else(|| CliError::config(format!("level '{text}' is not recorded in the archive")))
}

fn read_pathways(path: &Path, nodes: &[String]) -> CliResult<(Vec<usize>, Vec<String>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    let mut map = std::collections::HashMap::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::io(path, e))?;
        let (Some(n), Some(p)) = (rec.get(0), rec.get(1)) else {
            return Err(CliError::config(format!("{}: expected node,pathway rows", path.display())));
        };
        map.insert(n.trim().to_string(), p.trim().to_string());
    }
    let mut names: Vec<String> = map.values().cloned().collect();
    names.sort();
    names.dedup();
    let group_of = nodes
        .iter()
        .map(|n| {
            map.get(n)
                .and_then(|p| names.iter().position(|x| x == p))
                .ok_or_else(|| CliError::config(format!("node '{n}' has no pathway")))
        })
        .collect::<CliResult<_>>()?;
    Ok((group_of, names))
}

pub fn cmd_select(args: &SelectArgs) -> CliResult<Vec<PathBuf>> {
    let mut cfg = base_config(&args.common)?;
    if let Some(k) = &args.kappa {
        cfg.selection.kappa = parse_f64_list(k)?;
    }
    if let Some(a) = &args.alpha {
        cfg.selection.alpha = parse_f64_list(a)?;
    }
    cfg.validate()?;
    let archive = read_archive(&args.archive)?;
    let m = &archive.manifest;
    let levels: Vec<(String, usize)> = match split_list(&args.levels) {
        Some(specs) => specs
            .iter()
            .map(|s| Ok((s.clone(), resolve_level(m, s)?)))
            .collect::<CliResult<_>>()?,
        None => m.level_labels.iter().cloned().enumerate().map(|(k, l)| (l, k)).collect(),
    };
    let pathways = args
        .pathways
        .as_ref()
        .map(|p| read_pathways(p, &m.node_names))
        .transpose()?;
    let mut written = Vec::new();
    let mut table_rows = Vec::new();
    for (label, level) in &levels {
        for &kappa in &cfg.selection.kappa {
            for &alpha in &cfg.selection.alpha {
                let g = predict_graph(&archive.rho, *level, kappa, alpha)?;
                let doc = GraphDocument::new(label, &g, &m.node_names);
                let stem = format!("graph_{}_k{}_a{}", file_label(label), fmt_param(kappa), fmt_param(alpha));
                let json = args.out.join(format!("{stem}.json"));
                write_json(&json, &doc)?;
                write_text(&args.out.join(format!("{stem}.dot")), &doc.to_dot())?;
                written.push(json);
                if let Some((group_of, names)) = &pathways {
                    let counts = pathway_edge_counts(&g.selected, group_of, names.len())?;
                    for a in 0..names.len() {
                        for b in a..names.len() {
                            table_rows.push(vec![
                                label.clone(),
                                kappa.to_string(),
                                alpha.to_string(),
                                names[a].clone(),
                                names[b].clone(),
                                if a == b { "within" } else { "between" }.to_string(),
                                counts[a][b].to_string(),
                            ]);
                        }
                    }
                }
            }
        }
    }
    if pathways.is_some() {
        write_rows(
            &args.out.join("pathway_counts.csv"),
            &["level", "kappa", "alpha", "pathway_a", "pathway_b", "kind", "edges"],
            &table_rows,
        )?;
    }
    Ok(written)
}

// ---------------------------------------------------------------- evaluate

fn metric_cells(m: &GraphMetrics) -> Vec<String> {
    [m.tpr, m.fpr, m.auc1, m.auc2, m.bauc, m.matched_tpr, m.matched_fpr]
        .iter()
        .map(|v| v.to_string())
        .collect()
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> CliResult<PathBuf> {
    let cfg = base_config(&args.common)?;
    let settings = EvalSettings::default();
    let pairs: Vec<(String, PathBuf, PathBuf)> = match replicate_dirs(&args.archive, "manifest.json")? {
        None => vec![("0".into(), args.archive.clone(), args.truth.clone())],
        Some(reps) => reps
            .into_iter()
            .map(|dir| {
                let name = dir.file_name().expect("rep directory name").to_string_lossy().to_string();
                let truth = args.truth.join(&name);
                (name, dir, truth)
            })
            .collect(),
    };
    let results: Vec<(String, u64, edgereg::EvalReport)> = pool(cfg.worker_count()?)?.install(|| {
        pairs
            .par_iter()
            .map(|(name, archive_dir, truth_dir)| {
                let archive = read_archive(archive_dir)?;
                let truth = read_truth(truth_dir)?;
                let m = &archive.manifest;
                let (normal, tumor) = match m.mode {
                    Mode::Purity => ("0", "1"),
                    Mode::Group => ("normal", "tumor"),
                    Mode::General => return Err(CliError::config("evaluate needs a purity or group archive")),
                };
                let report = evaluate(
                    &archive.rho,
                    resolve_level(m, normal)?,
                    resolve_level(m, tumor)?,
                    &truth.normal_edges(),
                    &truth.tumor_edges(),
                    &settings,
                )?;
                Ok((name.clone(), m.seed, report))
            })
            .collect::<CliResult<Vec<_>>>()
    })?;

    let header = [
        "method", "replicate", "graph", "tpr", "fpr", "auc1", "auc2", "bauc", "matched_tpr", "matched_fpr", "seed",
    ];
    let mut rows = Vec::new();
    let mut roc_rows = Vec::new();
    for (name, seed, r) in &results {
        for (graph, m) in [("normal", &r.normal), ("tumor", &r.tumor), ("overall", &r.overall)] {
            let mut row = vec![args.method.clone(), name.clone(), graph.to_string()];
            row.extend(metric_cells(m));
            row.push(seed.to_string());
            rows.push(row);
        }
        for (graph, roc) in [("normal", &r.normal_roc), ("tumor", &r.tumor_roc)] {
            for p in roc {
                roc_rows.push(vec![
                    name.clone(),
                    graph.to_string(),
                    p.kappa.to_string(),
                    p.alpha.to_string(),
                    p.fpr.to_string(),
                    p.tpr.to_string(),
                ]);
            }
        }
    }
    for graph in ["normal", "tumor", "overall"] {
        let per: Vec<Vec<f64>> = rows
            .iter()
            .filter(|r| r[2] == graph)
            .map(|r| r[3..10].iter().map(|c| c.parse::<f64>().expect("numeric cell")).collect())
            .collect();
        let n = per.len() as f64;
        let mean: Vec<f64> = (0..7).map(|k| per.iter().map(|r| r[k]).sum::<f64>() / n).collect();
        let sd: Vec<f64> = (0..7)
            .map(|k| {
                if per.len() < 2 {
                    0.0
                } else {
                    (per.iter().map(|r| (r[k] - mean[k]).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
                }
            })
            .collect();
        for (label, vals) in [("mean", mean), ("sd", sd)] {
            let mut row = vec![args.method.clone(), label.to_string(), graph.to_string()];
            row.extend(vals.iter().map(|v| v.to_string()));
            row.push(String::new());
            rows.push(row);
        }
    }
    let report = args.out.join("report.csv");
    write_rows(&report, &header, &rows)?;
    write_rows(
        &args.out.join("roc.csv"),
        &["replicate", "graph", "kappa", "alpha", "fpr", "tpr"],
        &roc_rows,
    )?;
    Ok(report)
}

// ---------------------------------------------------------------- diagnose

#[derive(Serialize)]
struct DiagnoseSummary {
    n_parameters: usize,
    n_undefined: usize,
    histogram: Vec<usize>,
    post_burn_in_acceptance: Vec<f64>,
}

pub fn cmd_diagnose(args: &DiagnoseArgs) -> CliResult<PathBuf> {
    let manifest = read_manifest(&args.archive)?;
    let log = read_log(&args.archive)?;
    let mut traces = hyper_traces(&log, manifest.burn_in);
    if manifest.has_coefficients {
        let archive = read_archive(&args.archive)?;
        traces.extend(coefficient_traces(archive.coefficients.as_ref().expect("coefficients present")));
    }
    let prefixes = split_list(&args.params).unwrap_or_default();
    let traces = filter_traces(traces, &prefixes);
    let report = batch_geweke(&traces)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let rows: Vec<Vec<String>> = report
        .reports
        .iter()
        .map(|r| {
            vec![
                r.parameter.clone(),
                r.mean.to_string(),
                r.sd.to_string(),
                opt(r.geweke_z),
                opt(r.geweke_p),
                r.ess.to_string(),
            ]
        })
        .collect();
    let path = args.out.join("trace_report.csv");
    write_rows(&path, &["parameter", "mean", "sd", "geweke_z", "geweke_p", "ess"], &rows)?;
    let hist: Vec<Vec<String>> = report
        .histogram
        .iter()
        .enumerate()
        .map(|(k, c)| {
            vec![
                (k as f64 / HISTOGRAM_BINS as f64).to_string(),
                ((k + 1) as f64 / HISTOGRAM_BINS as f64).to_string(),
                c.to_string(),
            ]
        })
        .collect();
    write_rows(&args.out.join("geweke_histogram.csv"), &["lower", "upper", "count"], &hist)?;
    write_json(
        &args.out.join("summary.json"),
        &DiagnoseSummary {
            n_parameters: report.reports.len(),
            n_undefined: report.reports.iter().filter(|r| r.geweke_p.is_none()).count(),
            histogram: report.histogram.clone(),
            post_burn_in_acceptance: manifest.post_burn_in_acceptance.clone(),
        },
    )?;
    Ok(path)
}
