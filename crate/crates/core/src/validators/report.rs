//! End-to-end checks of a sampled control: simulate with it, compare the
//! state to the reference at tenths of the horizon, and compare efforts.

use super::{
    control_effort, cost_functional, integrate_ode, relative_error, solve_heat_dns, Axis, ControlField, DnsGrid,
    DnsSolution, Field, Trajectory,
};
use crate::error::{Error, Result};
use crate::problems::{AnalyticalProblem, ControlProblem, HeatProblem};

/// `(t, relative error)` at `t0 + k (tf - t0) / 10`, `k = 1..=10`.
pub type ErrorTable = Vec<(f64, f64)>;

pub fn table_times(t0: f64, tf: f64) -> Vec<f64> {
    (1..=10)
        .map(|k| if k == 10 { tf } else { t0 + k as f64 * (tf - t0) / 10.0 })
        .collect()
}

pub fn table_csv(table: &ErrorTable) -> String {
    let mut s = String::from("time,relative_error\n");
    for (t, e) in table {
        s.push_str(&format!("{t},{e:e}\n"));
    }
    s
}

#[derive(Debug, Clone)]
pub struct HeatValidation {
    pub table: ErrorTable,
    pub effort: f64,
    pub reference_effort: f64,
    pub dns: DnsSolution,
}

/// Runs the DNS with `control` and compares its state to `y*` on the DNS grid.
pub fn validate_heat_control(control: &ControlField, problem: &HeatProblem, dns_nx: usize) -> Result<HeatValidation> {
    let dom = problem.domain();
    let times = table_times(dom.t0, dom.tf);
    let mut snaps = vec![dom.t0];
    snaps.extend(&times);
    let grid = DnsGrid {
        nx: dns_nx,
        steps: None,
    };
    let dns = solve_heat_dns(
        control,
        problem.diffusivity(),
        &grid,
        HeatProblem::initial_profile,
        &snaps,
    )?;
    let xs = dns.x.nodes();
    let table = times
        .iter()
        .map(|&t| {
            let target: Vec<f64> = xs.iter().map(|&x| HeatProblem::y_star(t, x)).collect();
            Ok((t, relative_error(dns.at(t).expect("snapshot"), &target)?))
        })
        .collect::<Result<ErrorTable>>()?;
    let reference = Field::from_fn("u_ref", control.axes.clone(), |p| HeatProblem::u_star(p[0], p[1]))?;
    Ok(HeatValidation {
        table,
        effort: control_effort(control),
        reference_effort: control_effort(&reference),
        dns,
    })
}

#[derive(Debug, Clone)]
pub struct OdeValidation {
    pub table: ErrorTable,
    pub trajectory: Trajectory,
    pub effort: f64,
    pub reference_effort: f64,
    pub cost: f64,
    pub reference_cost: f64,
}

/// Integrates the analytical ODE with `control` (one time axis, linear
/// interpolation) by RK4 on the control's nodes and compares with `y*`.
pub fn validate_ode_control(control: &ControlField, problem: &AnalyticalProblem) -> Result<OdeValidation> {
    if control.axes.len() != 1 {
        return Err(Error::contract("ODE validation needs a control on a time axis"));
    }
    let ta = &control.axes[0];
    let y0 = problem.initial_state(&[])[0].expect("fixed initial state");
    let trajectory = integrate_ode(
        |_, y, u| 0.5 * y + u,
        y0,
        |t| control.interpolate(&[t]),
        ta.start,
        ta.end,
        ta.n - 1,
    )?;
    let at = |t: f64| -> f64 {
        let (i, f) = ta.locate(t);
        trajectory.y[i] + f * (trajectory.y[i + 1] - trajectory.y[i])
    };
    let table = table_times(ta.start, ta.end)
        .into_iter()
        .map(|t| Ok((t, relative_error(&[at(t)], &[AnalyticalProblem::y_star(t)])?)))
        .collect::<Result<ErrorTable>>()?;
    let axes = vec![Axis::new("t", ta.start, ta.end, ta.n)?];
    let y = Field::new("y", axes.clone(), trajectory.y.clone())?;
    let y_ref = Field::from_fn("y_ref", axes.clone(), |p| AnalyticalProblem::y_star(p[0]))?;
    let u_ref = Field::from_fn("u_ref", axes, |p| AnalyticalProblem::u_star(p[0]))?;
    Ok(OdeValidation {
        table,
        effort: control_effort(control),
        reference_effort: control_effort(&u_ref),
        cost: cost_functional(problem, &[y], std::slice::from_ref(control))?,
        reference_cost: cost_functional(problem, &[y_ref], &[u_ref])?,
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::HeatOptions;

    #[test]
    fn table_times_are_tenths() {
        let t = table_times(0.0, 1.0);
        assert_eq!(t.len(), 10);
        assert_eq!(t[9], 1.0);
        assert!((t[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn reference_control_reproduces_target_with_unit_diffusivity() {
        let p = HeatProblem::new(HeatOptions {
            diffusivity: 1.0,
            ..HeatOptions::default()
        })
        .unwrap();
        let axes = vec![
            Axis::new("t", 0.0, 1.0, 201).unwrap(),
            Axis::new("x", 0.0, 1.0, 201).unwrap(),
        ];
        let u = Field::from_fn("u", axes, |q| HeatProblem::u_star(q[0], q[1])).unwrap();
        let v = validate_heat_control(&u, &p, 201).unwrap();
        assert!(v.table[9].1 < 1e-2, "{:?}", v.table);
        assert_eq!(v.effort, v.reference_effort);
    }

    #[test]
    fn optimal_ode_control_validates() {
        let axes = vec![Axis::new("t", 0.0, 1.0, 1001).unwrap()];
        let u = Field::from_fn("u", axes, |p| AnalyticalProblem::u_star(p[0])).unwrap();
        let v = validate_ode_control(&u, &AnalyticalProblem::new()).unwrap();
        assert!(v.table.iter().all(|(_, e)| *e < 1e-6), "{:?}", v.table);
        assert!((v.cost - v.reference_cost).abs() < 1e-6);
    }

    #[test]
    fn csv_has_paper_columns() {
        let s = table_csv(&vec![(0.5, 0.25)]);
        assert_eq!(s, "time,relative_error\n0.5,2.5e-1\n");
    }
}
