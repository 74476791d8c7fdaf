//! `ctrlpinn validate`: simulate the learned control with a classical
//! solver and tabulate the state error at tenths of the horizon.

use std::path::{Path, PathBuf};

use control_pinn::config::RunConfig;
use control_pinn::network::ControlPinnParams;
use control_pinn::plot::{self, LineChart, Series};
use control_pinn::probe::{self, ProbeGrid};
use control_pinn::problems::{ControlProblem, HeatProblem, Problem};
use control_pinn::validators::report::{self, table_csv, ErrorTable};
use control_pinn::validators::{Axis, Field};
use serde_json::json;

use crate::artifacts::{self, write_file};
use crate::{resolve_config, CliResult, Failure, Overrides};

pub(crate) fn run(run_dir: Option<&Path>, overrides: &Overrides, control: Option<&Path>) -> CliResult<()> {
    let fallback = run_dir.map(|d| d.join("config.toml"));
    if run_dir.is_none() && overrides.config.is_none() {
        return Err(Failure::config("give a run directory or --config with --control"));
    }
    let cfg = resolve_config(overrides, fallback.as_deref())?;
    let out = overrides
        .out
        .clone()
        .or_else(|| run_dir.map(|d| d.join("validation")))
        .ok_or_else(|| Failure::config("--out is required when validating a control file without a run"))?;

    let (problem, source) = match control {
        Some(path) => {
            if !path.exists() {
                return Err(Failure::input(format!("control file {} not found", path.display())));
            }
            (cfg.build_problem()?, Source::File(Field::read(path)?))
        }
        None => {
            let dir = run_dir.ok_or_else(|| Failure::config("no run directory given"))?;
            let explicit = overrides.config.is_some() || overrides.diffusivity.is_some();
            let (_, problem, params) = artifacts::load_run(dir, explicit.then(|| cfg.clone()))?;
            (problem, Source::Network(params))
        }
    };

    let files = match &problem {
        Problem::Heat(h) => heat(&cfg, h, &source, &out)?,
        Problem::Analytical(a) => {
            let u = source.control(
                &cfg,
                vec![Axis::new("t", a.domain().t0, a.domain().tf, cfg.validate.export_nt)?],
            )?;
            let v = report::validate_ode_control(&u, a)?;
            let traj: Vec<(f64, f64)> = v
                .trajectory
                .t
                .iter()
                .copied()
                .zip(v.trajectory.y.iter().copied())
                .collect();
            let target: Vec<(f64, f64)> = v
                .trajectory
                .t
                .iter()
                .map(|&t| (t, control_pinn::problems::AnalyticalProblem::y_star(t)))
                .collect();
            let chart = LineChart {
                title: "RK4 state under the learned control".into(),
                x_label: "t".into(),
                y_label: "y".into(),
                log_y: false,
                series: vec![Series::new("y (RK4)", traj), Series::new("y*", target).dashed()],
            };
            let summary = json!({
                "problem": problem.name(),
                "control_effort": v.effort,
                "reference_control_effort": v.reference_effort,
                "cost": v.cost,
                "optimal_cost": v.reference_cost,
                "final_relative_error": v.table.last().map(|r| r.1),
            });
            write_outputs(
                &out,
                &v.table,
                summary,
                vec![("trajectory.svg", plot::line_chart(&chart)?)],
            )?
        }
        Problem::PredatorPrey(p) => {
            let Source::Network(params) = &source else {
                return Err(Failure::config(
                    "predator-prey validation compares the network to the reference; --control is not supported",
                ));
            };
            predator_prey(p, params, &cfg, &out)?
        }
    };
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}

enum Source {
    Network(ControlPinnParams),
    File(Field),
}

impl Source {
    fn control(&self, cfg: &RunConfig, axes: Vec<Axis>) -> CliResult<Field> {
        match self {
            Source::Network(p) => artifacts::control_field(p, axes, 0, cfg.train.execution),
            Source::File(f) => {
                if f.axes.len() != axes.len() {
                    return Err(Failure::input(format!(
                        "control field has {} axes, the problem needs {}",
                        f.axes.len(),
                        axes.len()
                    )));
                }
                Ok(f.clone())
            }
        }
    }
}

fn write_outputs(
    out: &Path,
    table: &ErrorTable,
    summary: serde_json::Value,
    svgs: Vec<(&str, String)>,
) -> CliResult<Vec<PathBuf>> {
    let mut files = vec![out.join("error_table.csv"), out.join("report.json")];
    write_file(&files[0], &table_csv(table))?;
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Failure::input(e.to_string()))?;
    write_file(&files[1], &text)?;
    for (name, svg) in svgs {
        let p = out.join("plots").join(name);
        write_file(&p, &svg)?;
        files.push(p);
    }
    Ok(files)
}

fn error_chart(table: &ErrorTable, title: &str) -> CliResult<String> {
    Ok(plot::line_chart(&LineChart {
        title: title.into(),
        x_label: "t".into(),
        y_label: "relative L2 error".into(),
        log_y: true,
        series: vec![Series::new("relative error", table.clone())],
    })?)
}

fn heat(cfg: &RunConfig, problem: &HeatProblem, source: &Source, out: &Path) -> CliResult<Vec<PathBuf>> {
    let dom = problem.domain();
    let axes = vec![
        Axis::new("t", dom.t0, dom.tf, cfg.validate.export_nt)?,
        Axis::new("x", dom.lower[0], dom.upper[0], cfg.validate.export_nx)?,
    ];
    let control = source.control(cfg, axes)?;
    let v = report::validate_heat_control(&control, problem, cfg.validate.dns_nx)?;

    let xs = v.dns.x.nodes();
    let mut series = Vec::new();
    for t in [0.5, dom.tf] {
        let state = v.dns.at(t).expect("snapshot");
        series.push(Series::new(
            format!("DNS t={t}"),
            xs.iter().copied().zip(state.iter().copied()).collect(),
        ));
        series.push(
            Series::new(
                format!("y* t={t}"),
                xs.iter().map(|&x| (x, HeatProblem::y_star(t, x))).collect(),
            )
            .dashed(),
        );
    }
    let dns_chart = plot::line_chart(&LineChart {
        title: "DNS under the learned control".into(),
        x_label: "x".into(),
        y_label: "y".into(),
        log_y: false,
        series,
    })?;
    let summary = json!({
        "problem": "heat",
        "diffusivity": problem.diffusivity(),
        "dns": { "scheme": v.dns.scheme, "nx": v.dns.x.n, "steps": v.dns.steps, "dt": v.dns.dt },
        "control_grid": [control.axes[0].n, control.axes[1].n],
        "control_effort": v.effort,
        "reference_control_effort": v.reference_effort,
        "final_relative_error": v.table.last().map(|r| r.1),
    });
    let files = write_outputs(
        out,
        &v.table,
        summary,
        vec![
            ("dns_vs_target.svg", dns_chart),
            (
                "error_vs_time.svg",
                error_chart(&v.table, "DNS state error against y*")?,
            ),
        ],
    )?;
    let cpath = out.join("control.csv");
    control.write(&cpath)?;
    Ok([files, vec![cpath]].concat())
}

fn predator_prey(
    problem: &control_pinn::problems::PredatorPreyProblem,
    params: &ControlPinnParams,
    cfg: &RunConfig,
    out: &Path,
) -> CliResult<Vec<PathBuf>> {
    let grid = ProbeGrid::standard(problem.domain())?;
    let net = probe::network_fields(params, &grid, cfg.train.execution)?;
    let reference = probe::reference_fields(problem, &grid)?;
    let mut columns: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    let mut svgs = Vec::new();
    for (n, r) in net.y.iter().zip(&reference.y) {
        if r.is_empty() {
            continue;
        }
        let curve = probe::error_by_time(n, r)?;
        let last = grid.axes[0].n - 1;
        let abs: Vec<f64> = n
            .slice(last)
            .iter()
            .zip(r.slice(last))
            .map(|(a, b)| (a - b).abs())
            .collect();
        let err = Field::new(
            format!("|{} - {}*| at t={}", n.name, n.name, grid.axes[0].end),
            grid.axes[1..].to_vec(),
            abs,
        )?;
        let scale = plot::shared_scale(&[&err]);
        svgs.push((
            format!("{}_abs_error_final.svg", n.name),
            plot::heatmap(&err, scale, &err.name, 101)?,
        ));
        columns.push((n.name.clone(), curve));
    }
    if columns.is_empty() {
        return Err(Failure::input("no reference state available for validation"));
    }
    let mut csv = String::from("time");
    for (name, _) in &columns {
        csv.push_str(&format!(",relative_error_{name}"));
    }
    csv.push('\n');
    for (i, t) in grid.axes[0].nodes().iter().enumerate() {
        csv.push_str(&t.to_string());
        for (_, c) in &columns {
            csv.push_str(&format!(",{:e}", c[i].1));
        }
        csv.push('\n');
    }
    let chart = plot::line_chart(&LineChart {
        title: "Network state error against the reference".into(),
        x_label: "t".into(),
        y_label: "relative L2 error".into(),
        log_y: true,
        series: columns.iter().map(|(n, c)| Series::new(n, c.clone())).collect(),
    })?;
    let finals: serde_json::Map<String, serde_json::Value> = columns
        .iter()
        .map(|(n, c)| (n.clone(), json!(c.last().map(|r| r.1))))
        .collect();
    let summary = json!({ "problem": problem.name(), "final_relative_error": finals });

    let mut files = vec![
        out.join("error_table.csv"),
        out.join("report.json"),
        out.join("plots/error_vs_time.svg"),
    ];
    write_file(&files[0], &csv)?;
    write_file(
        &files[1],
        &serde_json::to_string_pretty(&summary).map_err(|e| Failure::input(e.to_string()))?,
    )?;
    write_file(&files[2], &chart)?;
    for (name, svg) in svgs {
        let p = out.join("plots").join(name);
        write_file(&p, &svg)?;
        files.push(p);
    }
    Ok(files)
}
