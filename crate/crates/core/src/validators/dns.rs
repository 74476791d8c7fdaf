//! Explicit finite-difference solver for the controlled 1-D heat equation
//! `y_t = a * y_xx + u` with homogeneous Dirichlet boundaries: forward Euler
//! in time, second-order central differences in space.

use super::field::{Axis, ControlField};
use crate::error::{Error, Result};

/// Fraction of the stability limit used when the step is not given.
pub const DEFAULT_SAFETY: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct DnsGrid {
    /// Spatial nodes including both boundary nodes.
    pub nx: usize,
    /// Number of time steps; derived from the stability limit when absent.
    pub steps: Option<usize>,
}

impl Default for DnsGrid {
    fn default() -> Self {
        DnsGrid { nx: 1001, steps: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DnsSolution {
    pub x: Axis,
    pub times: Vec<f64>,
    /// State at each of `times`, one value per spatial node.
    pub states: Vec<Vec<f64>>,
    pub dt: f64,
    pub dx: f64,
    pub steps: usize,
    pub scheme: &'static str,
}

impl DnsSolution {
    pub fn at(&self, t: f64) -> Option<&[f64]> {
        self.times
            .iter()
            .position(|s| (s - t).abs() < 1e-12)
            .map(|i| self.states[i].as_slice())
    }
}

/// Largest stable explicit step for spacing `dx`.
pub fn max_stable_dt(dx: f64, diffusivity: f64) -> f64 {
    dx * dx / (2.0 * diffusivity)
}

/// Solves on `[t0, tf] x [x0, x1]` taken from the control's axes and
/// records the state at each of `snapshots`, which must fall on time steps.
pub fn solve_heat_dns(
    control: &ControlField,
    diffusivity: f64,
    grid: &DnsGrid,
    y0: impl Fn(f64) -> f64,
    snapshots: &[f64],
) -> Result<DnsSolution> {
    if control.axes.len() != 2 {
        return Err(Error::contract("heat DNS needs a control on a (t, x) grid"));
    }
    if !(diffusivity > 0.0) || grid.nx < 3 {
        return Err(Error::contract("heat DNS needs diffusivity > 0 and at least 3 nodes"));
    }
    let (ta, xa) = (&control.axes[0], &control.axes[1]);
    let x = Axis::new("x", xa.start, xa.end, grid.nx)?;
    let dx = x.step();
    let span = ta.end - ta.start;
    let max_dt = max_stable_dt(dx, diffusivity);
    let steps = match grid.steps {
        Some(s) => s,
        None => {
            let raw = (span / (DEFAULT_SAFETY * max_dt)).ceil() as usize;
            raw.div_ceil(100) * 100
        }
    };
    let dt = span / steps as f64;
    if dt > max_dt {
        return Err(Error::Stability { dt, max_dt });
    }
    let mut snap_steps = Vec::with_capacity(snapshots.len());
    for &s in snapshots {
        let k = ((s - ta.start) / dt).round();
        if !(0.0..=steps as f64).contains(&k) || (k * dt + ta.start - s).abs() > 1e-9 * span.max(1.0) {
            return Err(Error::contract(format!(
                "snapshot time {s} is not on the DNS time grid"
            )));
        }
        snap_steps.push(k as usize);
    }

    let xs = x.nodes();
    let cells: Vec<(usize, f64)> = xs.iter().map(|&v| xa.locate(v)).collect();
    let row = xa.n;
    let mut y: Vec<f64> = xs.iter().map(|&v| y0(v)).collect();
    y[0] = 0.0;
    y[grid.nx - 1] = 0.0;
    let mut next = y.clone();
    let mut u = vec![0.0; grid.nx];
    let r = diffusivity * dt / (dx * dx);
    let mut states = vec![Vec::new(); snapshots.len()];
    let record = |k: usize, y: &[f64], states: &mut Vec<Vec<f64>>| {
        for (slot, &s) in snap_steps.iter().enumerate() {
            if s == k {
                states[slot] = y.to_vec();
            }
        }
    };
    record(0, &y, &mut states);
    for n in 0..steps {
        let tn = ta.start + n as f64 * dt;
        let (it, ft) = ta.locate(tn);
        let (r0, r1) = (control.slice(it), control.slice(it + 1));
        debug_assert_eq!(r0.len(), row);
        for (j, &(ix, fx)) in cells.iter().enumerate() {
            let a = r0[ix] + fx * (r0[ix + 1] - r0[ix]);
            let b = r1[ix] + fx * (r1[ix + 1] - r1[ix]);
            u[j] = a + ft * (b - a);
        }
        for j in 1..grid.nx - 1 {
            next[j] = y[j] + r * (y[j + 1] - 2.0 * y[j] + y[j - 1]) + dt * u[j];
        }
        std::mem::swap(&mut y, &mut next);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract(format!(
                "DNS state became non-finite at step {}",
                n + 1
            )));
        }
        record(n + 1, &y, &mut states);
    }
    Ok(DnsSolution {
        x,
        times: snapshots.to_vec(),
        states,
        dt,
        dx,
        steps,
        scheme: "forward Euler / central differences",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::HeatProblem;
    use crate::validators::{relative_error, Field};
    use std::f64::consts::PI;

    fn zero_control(n: usize) -> ControlField {
        let axes = vec![
            Axis::new("t", 0.0, 1.0, 2).unwrap(),
            Axis::new("x", 0.0, 1.0, n).unwrap(),
        ];
        Field::from_fn("u", axes, |_| 0.0).unwrap()
    }

    fn mode_error(nx: usize, t_end_steps: usize) -> f64 {
        let axes = vec![
            Axis::new("t", 0.0, 0.1, 2).unwrap(),
            Axis::new("x", 0.0, 1.0, 3).unwrap(),
        ];
        let u = Field::from_fn("u", axes, |_| 0.0).unwrap();
        let grid = DnsGrid {
            nx,
            steps: Some(t_end_steps),
        };
        let sol = solve_heat_dns(&u, 1.0, &grid, |x| (PI * x).sin(), &[0.1]).unwrap();
        let decay = (-PI * PI * 0.1).exp();
        sol.states[0]
            .iter()
            .zip(sol.x.nodes())
            .map(|(y, x)| (y - decay * (PI * x).sin()).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn heat_mode_decays_analytically() {
        let sol = solve_heat_dns(
            &zero_control(3),
            1.0,
            &DnsGrid::default(),
            |x| (PI * x).sin(),
            &[0.0, 1.0],
        )
        .unwrap();
        let decay = (-PI * PI).exp();
        let err = sol.states[1]
            .iter()
            .zip(sol.x.nodes())
            .map(|(y, x)| (y - decay * (PI * x).sin()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
        assert_eq!(sol.states[0][500], 1.0);
        assert_eq!(sol.states[1][0], 0.0);
        assert_eq!(sol.states[1][1000], 0.0);
    }

    #[test]
    fn spatial_order_is_two() {
        // dt tied to dx^2, so halving dx quarters both error sources.
        let ratio = mode_error(21, 250) / mode_error(41, 1000);
        assert!((3.0..=5.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn zero_data_stays_zero() {
        let sol = solve_heat_dns(&zero_control(5), 0.1, &DnsGrid { nx: 51, steps: None }, |_| 0.0, &[1.0]).unwrap();
        assert!(sol.states[0].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn unstable_step_is_refused_with_limit() {
        let grid = DnsGrid {
            nx: 101,
            steps: Some(100),
        };
        match solve_heat_dns(&zero_control(3), 1.0, &grid, |_| 0.0, &[]) {
            Err(Error::Stability { dt, max_dt }) => {
                assert_eq!(dt, 0.01);
                assert!((max_dt - 5e-5).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reference_pair_tracks_target_with_unit_diffusivity() {
        let axes = vec![
            Axis::new("t", 0.0, 1.0, 1001).unwrap(),
            Axis::new("x", 0.0, 1.0, 1001).unwrap(),
        ];
        let u = Field::from_fn("u", axes, |p| HeatProblem::u_star(p[0], p[1])).unwrap();
        let grid = DnsGrid { nx: 201, steps: None };
        let sol = solve_heat_dns(&u, 1.0, &grid, |x| HeatProblem::y_star(0.0, x), &[1.0]).unwrap();
        let target: Vec<f64> = sol.x.nodes().iter().map(|&x| HeatProblem::y_star(1.0, x)).collect();
        let err = relative_error(&sol.states[0], &target).unwrap();
        assert!(err < 1e-2, "{err}");
    }
}
