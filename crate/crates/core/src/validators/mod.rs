//! Classical checks of a learned control: RK4 for the ODE, an explicit
//! finite-difference heat solver, quadratures and error metrics.

mod dns;
mod field;
mod ode;
pub mod report;

pub use dns::{max_stable_dt, solve_heat_dns, DnsGrid, DnsSolution, DEFAULT_SAFETY};
pub use field::{Axis, ControlField, Field};
pub use ode::{integrate_ode, Trajectory};

use crate::error::{Error, Result};
use crate::problems::ControlProblem;

/// `|a - b|_2 / |b|_2` over matching samples.
pub fn relative_error(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape {
            expected: b.len(),
            got: a.len(),
        });
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        num += (x - y) * (x - y);
        den += y * y;
    }
    if den == 0.0 {
        return Err(Error::contract("relative error against a zero reference"));
    }
    Ok((num / den).sqrt())
}

/// Trapezoid mean of `u^2` over the control's grid.
pub fn control_effort(control: &ControlField) -> f64 {
    control.mean_of(|v| v * v)
}

/// Quadrature of the objective: running cost over the space-time grid, plus
/// the terminal and initial costs over the spatial slices.
///
/// `y` and `u` hold one field per component, all on the same grid whose
/// first axis is time.
pub fn cost_functional<P: ControlProblem>(problem: &P, y: &[Field], u: &[Field]) -> Result<f64> {
    let grid = &y.first().ok_or_else(|| Error::contract("no state fields"))?.axes;
    if y.len() != problem.n_state() || u.len() != problem.n_control() {
        return Err(Error::contract("component count does not match the problem"));
    }
    if y.iter().chain(u).any(|f| &f.axes != grid) {
        return Err(Error::contract("state and control fields must share one grid"));
    }
    let weights: Vec<Vec<f64>> = grid.iter().map(Axis::trapezoid_weights).collect();
    let nodes: Vec<Vec<f64>> = grid.iter().map(Axis::nodes).collect();
    let nt = grid[0].n;
    let width = y[0].len() / nt;
    let d = grid.len() - 1;
    let mut x = vec![0.0; d];
    let mut yv = vec![0.0; y.len()];
    let mut uv = vec![0.0; u.len()];
    let (mut running, mut terminal, mut initial) = (0.0, 0.0, 0.0);
    for k in 0..width {
        let mut wx = 1.0;
        let mut rem = k;
        for i in (0..d).rev() {
            let n = grid[i + 1].n;
            x[i] = nodes[i + 1][rem % n];
            wx *= weights[i + 1][rem % n];
            rem /= n;
        }
        for it in 0..nt {
            let off = it * width + k;
            for (c, f) in y.iter().enumerate() {
                yv[c] = f.values[off];
            }
            for (c, f) in u.iter().enumerate() {
                uv[c] = f.values[off];
            }
            let t = nodes[0][it];
            running += weights[0][it] * wx * problem.running_cost(t, &x, &yv, &uv);
            if it == 0 {
                initial += wx * problem.initial_cost(&x, &yv);
            }
            if it + 1 == nt {
                terminal += wx * problem.terminal_cost(&x, &yv);
            }
        }
    }
    Ok(running + terminal + initial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{AnalyticalProblem, HeatOptions, HeatProblem};
    use proptest::prelude::*;

    fn unit_tx(n: usize) -> Vec<Axis> {
        vec![
            Axis::new("t", 0.0, 1.0, n).unwrap(),
            Axis::new("x", 0.0, 1.0, n).unwrap(),
        ]
    }

    #[test]
    fn relative_error_basics() {
        let b = vec![1.0, -2.0, 0.5];
        assert_eq!(relative_error(&b, &b).unwrap(), 0.0);
        let a: Vec<f64> = b.iter().map(|v| 2.0 * v).collect();
        assert_eq!(relative_error(&a, &b).unwrap(), 1.0);
        assert!(relative_error(&a, &[0.0; 3]).is_err());
        assert!(relative_error(&a, &b[..2]).is_err());
    }

    #[test]
    fn unit_control_has_unit_effort() {
        let u = Field::from_fn("u", unit_tx(11), |_| 1.0).unwrap();
        assert!((control_effort(&u) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reference_control_effort() {
        let effort = |n| control_effort(&Field::from_fn("u", unit_tx(n), |p| HeatProblem::u_star(p[0], p[1])).unwrap());
        let e = effort(1001);
        assert!((e - 0.2497).abs() <= 1e-3, "{e}");
        assert!((effort(2001) - e).abs() < 1e-4);
    }

    #[test]
    fn uncontrolled_ode_cost() {
        let axes = vec![Axis::new("t", 0.0, 1.0, 2001).unwrap()];
        let y = Field::from_fn("y", axes.clone(), |p| (0.5 * p[0]).exp()).unwrap();
        let u = Field::from_fn("u", axes, |_| 0.0).unwrap();
        let psi = cost_functional(&AnalyticalProblem::new(), &[y], &[u]).unwrap();
        assert!((psi - (std::f64::consts::E - 1.0)).abs() < 1e-6, "{psi}");
    }

    #[test]
    fn heat_reference_cost_is_effort() {
        let p = HeatProblem::new(HeatOptions::default()).unwrap();
        let y = Field::from_fn("y", unit_tx(501), |q| HeatProblem::y_star(q[0], q[1])).unwrap();
        let u = Field::from_fn("u", unit_tx(501), |q| HeatProblem::u_star(q[0], q[1])).unwrap();
        let psi = cost_functional(&p, &[y], std::slice::from_ref(&u)).unwrap();
        assert!((psi - control_effort(&u)).abs() < 1e-12, "{psi}");
    }

    proptest! {
        #[test]
        fn relative_error_is_scale_aware(alpha in -3.0f64..3.0, seed in 0u64..1000) {
            let b: Vec<f64> = (0..20).map(|i| ((i as f64 + seed as f64) * 0.37).sin() + 0.1).collect();
            let a: Vec<f64> = b.iter().map(|v| alpha * v).collect();
            let e = relative_error(&a, &b).unwrap();
            prop_assert!((e - (alpha - 1.0).abs()).abs() < 1e-12);
        }
    }
}
