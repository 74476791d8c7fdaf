//! Files of a run directory:
//!
//! ```text
//! config.toml        resolved configuration
//! metrics.csv        one row per epoch (see the trainer)
//! timing.csv         wall time per epoch, kept apart so metrics are reproducible
//! summary.json       status, final loss and probe errors
//! checkpoint.json    final parameters and optimizer state
//! checkpoints/       periodic checkpoints
//! fields/*.csv       network and reference fields on the probe grid
//! plots/*.svg        loss history, probe errors, field plots
//! ```

use std::path::{Path, PathBuf};

use control_pinn::config::RunConfig;
use control_pinn::network::ControlPinnParams;
use control_pinn::par::Execution;
use control_pinn::plot::{self, LineChart, Metrics, Series};
use control_pinn::probe::{self, ProbeGrid};
use control_pinn::problems::{ControlProblem, Problem};
use control_pinn::trainer::{Checkpoint, RunRecord, RunStatus};
use control_pinn::validators::{relative_error, Axis, Field};
use serde_json::json;

use crate::{CliResult, Failure};

pub(crate) fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Failure::input(format!("creating {}: {e}", parent.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| Failure::input(format!("writing {}: {e}", path.display())))
}

pub(crate) fn write_summary(dir: &Path, problem: &Problem, run: &RunRecord) -> CliResult<()> {
    let status = match &run.status {
        RunStatus::Completed => json!("completed"),
        RunStatus::EarlyStopped => json!("early_stopped"),
        RunStatus::Diverged(why) => json!({ "diverged": why }),
    };
    let last = run.rows.last();
    let terms = last.map(|r| {
        let mut m = serde_json::Map::new();
        for (n, v) in control_pinn::loss::LossBreakdown::TERMS.iter().zip(r.loss.terms()) {
            m.insert(n.to_string(), json!(v));
        }
        m.insert("total".into(), json!(r.loss.total));
        m
    });
    let probe = run.final_probe.as_ref().map(|p| {
        p.names
            .iter()
            .zip(&p.values)
            .map(|(n, v)| (n.clone(), json!(v)))
            .collect::<serde_json::Map<_, _>>()
    });
    let summary = json!({
        "problem": problem.name(),
        "status": status,
        "rows": run.rows.len(),
        "steps": run.adam.step,
        "last_loss": terms,
        "final_probe": probe,
    });
    write_file(
        &dir.join("summary.json"),
        &serde_json::to_string_pretty(&summary).expect("plain json"),
    )
}

fn write_probe_fields(
    dir: &Path,
    problem: &Problem,
    params: &ControlPinnParams,
    grid: &ProbeGrid,
    exec: Execution,
    with_reference: bool,
) -> CliResult<Vec<PathBuf>> {
    let net = probe::network_fields(params, grid, exec)?;
    let mut written = Vec::new();
    let reference = if with_reference {
        Some(probe::reference_fields(problem, grid)?)
    } else {
        None
    };
    for f in net.all().chain(reference.iter().flat_map(|r| r.all())) {
        let path = dir.join(format!("{}.csv", f.name));
        f.write(&path)?;
        written.push(path);
    }
    Ok(written)
}

/// Network and reference fields on the probe grid, under `fields/`.
pub(crate) fn write_fields(
    dir: &Path,
    problem: &Problem,
    params: &ControlPinnParams,
    exec: Execution,
) -> CliResult<()> {
    let fields = dir.join("fields");
    std::fs::create_dir_all(&fields).map_err(|e| Failure::input(format!("creating {}: {e}", fields.display())))?;
    let grid = ProbeGrid::standard(problem.domain())?;
    write_probe_fields(&fields, problem, params, &grid, exec, true)?;
    Ok(())
}

/// Configuration, problem and final parameters of a run directory.
pub(crate) fn load_run(run_dir: &Path, cfg: Option<RunConfig>) -> CliResult<(RunConfig, Problem, ControlPinnParams)> {
    if !run_dir.is_dir() {
        return Err(Failure::input(format!(
            "run directory {} does not exist",
            run_dir.display()
        )));
    }
    let cfg = match cfg {
        Some(c) => c,
        None => {
            let p = run_dir.join("config.toml");
            if !p.exists() {
                return Err(Failure::input(format!("{} has no config.toml", run_dir.display())));
            }
            RunConfig::load(&p)?
        }
    };
    let ckpt = run_dir.join("checkpoint.json");
    if !ckpt.exists() {
        return Err(Failure::input(format!(
            "{} has no checkpoint.json; train the run first",
            run_dir.display()
        )));
    }
    let ckpt = Checkpoint::load(&ckpt)?;
    let problem = cfg.build_problem()?;
    if ckpt.problem != problem.name() {
        return Err(Failure::input(format!(
            "checkpoint is for {} but config.toml selects {}",
            ckpt.problem,
            problem.name()
        )));
    }
    let params = ckpt.params()?;
    Ok((cfg, problem, params))
}

/// Default export grid: the configured resolution for ODE and 1-D
/// problems, 11 x 101 x 101 for 2-D ones.
pub(crate) fn export_grid(
    cfg: &RunConfig,
    problem: &Problem,
    nt: Option<usize>,
    nx: Option<usize>,
) -> CliResult<ProbeGrid> {
    let (dt, dx) = match problem.domain().spatial_dim() {
        0 | 1 => (cfg.validate.export_nt, cfg.validate.export_nx),
        _ => (11, 101),
    };
    Ok(ProbeGrid::uniform(
        problem.domain(),
        nt.unwrap_or(dt),
        nx.unwrap_or(dx),
    )?)
}

pub(crate) fn export(
    run_dir: &Path,
    out: Option<&Path>,
    nt: Option<usize>,
    nx: Option<usize>,
) -> CliResult<Vec<PathBuf>> {
    let (cfg, problem, params) = load_run(run_dir, None)?;
    let grid = export_grid(&cfg, &problem, nt, nx)?;
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| run_dir.join("export"));
    std::fs::create_dir_all(&out).map_err(|e| Failure::input(format!("creating {}: {e}", out.display())))?;
    write_probe_fields(&out, &problem, &params, &grid, cfg.train.execution, false)
}

fn read_fields(dir: &Path) -> CliResult<Vec<Field>> {
    let mut paths: Vec<PathBuf> = match std::fs::read_dir(dir) {
        Ok(rd) => rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect(),
        Err(_) => return Ok(Vec::new()),
    };
    paths.sort();
    paths.iter().map(|p| Field::read(p).map_err(Failure::from)).collect()
}

fn slice_field(f: &Field, i: usize, name: String) -> CliResult<Field> {
    Ok(Field::new(name, f.axes[1..].to_vec(), f.slice(i).to_vec())?)
}

fn error_curves(pairs: &[(&Field, &Field)]) -> CliResult<Option<String>> {
    let mut series = Vec::new();
    for (net, reference) in pairs {
        let pts: Vec<(f64, f64)> = (0..reference.axes[0].n)
            .filter_map(|i| {
                let t = reference.axes[0].node(i);
                relative_error(net.slice(i), reference.slice(i)).ok().map(|e| (t, e))
            })
            .collect();
        series.push(Series::new(&net.name, pts));
    }
    if series.iter().all(|s| s.points.is_empty()) {
        return Ok(None);
    }
    Ok(Some(plot::line_chart(&LineChart {
        title: "Relative L2 error over time".into(),
        x_label: "t".into(),
        y_label: "relative error".into(),
        log_y: true,
        series,
    })?))
}

/// Renders every plot of a run directory into `plots/`. Nothing is written
/// unless all plots render.
pub(crate) fn render_plots(run_dir: &Path) -> CliResult<Vec<PathBuf>> {
    let metrics_path = run_dir.join("metrics.csv");
    let text = std::fs::read_to_string(&metrics_path)
        .map_err(|e| Failure::input(format!("reading {}: {e}", metrics_path.display())))?;
    let metrics = Metrics::parse(&text)?;
    let mut svgs: Vec<(String, String)> = vec![("loss_history.svg".into(), plot::loss_history(&metrics)?)];
    if let Some(s) = plot::probe_history(&metrics)? {
        svgs.push(("probe_errors.svg".into(), s));
    }

    let fields = read_fields(&run_dir.join("fields"))?;
    let find = |name: &str| fields.iter().find(|f| f.name == name);
    let mut pairs = Vec::new();
    for f in fields.iter().filter(|f| !f.name.ends_with("_ref")) {
        let reference = find(&format!("{}_ref", f.name));
        if let Some(r) = reference {
            pairs.push((f, r));
        }
        match f.axes.len() {
            1 => {
                let nodes = f.axes[0].nodes();
                let mut series = vec![Series::new(
                    &f.name,
                    nodes.iter().copied().zip(f.values.iter().copied()).collect(),
                )];
                if let Some(r) = reference {
                    series.push(
                        Series::new(&r.name, nodes.iter().copied().zip(r.values.iter().copied()).collect()).dashed(),
                    );
                }
                let chart = LineChart {
                    title: format!("{} against t", f.name),
                    x_label: "t".into(),
                    y_label: f.name.clone(),
                    log_y: false,
                    series,
                };
                svgs.push((format!("{}.svg", f.name), plot::line_chart(&chart)?));
            }
            2 => {
                let scale = match reference {
                    Some(r) => plot::shared_scale(&[f, r]),
                    None => plot::shared_scale(&[f]),
                };
                svgs.push((format!("{}.svg", f.name), plot::heatmap(f, scale, &f.name, 101)?));
                if let Some(r) = reference {
                    svgs.push((format!("{}.svg", r.name), plot::heatmap(r, scale, &r.name, 101)?));
                }
            }
            _ => {
                let last = f.axes[0].n - 1;
                let tf = f.axes[0].end;
                let fs = slice_field(f, last, format!("{} at t={tf}", f.name))?;
                let rs = reference
                    .map(|r| slice_field(r, last, format!("{} at t={tf}", r.name)))
                    .transpose()?;
                let scale = match &rs {
                    Some(r) => plot::shared_scale(&[&fs, r]),
                    None => plot::shared_scale(&[&fs]),
                };
                svgs.push((
                    format!("{}_final.svg", f.name),
                    plot::heatmap(&fs, scale, &fs.name, 101)?,
                ));
                if let Some(r) = &rs {
                    svgs.push((
                        format!("{}_final.svg", reference.expect("paired").name),
                        plot::heatmap(r, scale, &r.name, 101)?,
                    ));
                    let abs: Vec<f64> = fs.values.iter().zip(&r.values).map(|(a, b)| (a - b).abs()).collect();
                    let err = Field::new(format!("|{} - {}_ref| at t={tf}", f.name, f.name), fs.axes.clone(), abs)?;
                    let es = plot::shared_scale(&[&err]);
                    svgs.push((
                        format!("{}_abs_error_final.svg", f.name),
                        plot::heatmap(&err, es, &err.name, 101)?,
                    ));
                }
            }
        }
    }
    let multi_axis: Vec<(&Field, &Field)> = pairs.iter().copied().filter(|(f, _)| f.axes.len() > 1).collect();
    if let Some(s) = error_curves(&multi_axis)? {
        svgs.push(("error_vs_time.svg".into(), s));
    }

    let plots = run_dir.join("plots");
    let mut written = Vec::new();
    for (name, svg) in svgs {
        let path = plots.join(name);
        write_file(&path, &svg)?;
        written.push(path);
    }
    Ok(written)
}

/// Samples `u` of a network at the nodes of `axes`.
pub(crate) fn control_field(
    params: &ControlPinnParams,
    axes: Vec<Axis>,
    component: usize,
    exec: Execution,
) -> CliResult<Field> {
    let grid = ProbeGrid { axes };
    let net = probe::network_fields(params, &grid, exec)?;
    net.u
        .into_iter()
        .nth(component)
        .ok_or_else(|| Failure::input(format!("network has no control component {component}")))
}
