//! Classical fourth-order Runge-Kutta for scalar control ODEs.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
}

/// Integrates `y' = f(t, y, u(t))` from `t0` to `tf` in `steps` equal steps.
pub fn integrate_ode(
    f: impl Fn(f64, f64, f64) -> f64,
    y0: f64,
    control: impl Fn(f64) -> f64,
    t0: f64,
    tf: f64,
    steps: usize,
) -> Result<Trajectory> {
    if steps == 0 || !(t0 < tf) {
        return Err(Error::contract("integrate_ode needs steps >= 1 and t0 < tf"));
    }
    let h = (tf - t0) / steps as f64;
    let mut t = Vec::with_capacity(steps + 1);
    let mut y = Vec::with_capacity(steps + 1);
    t.push(t0);
    y.push(y0);
    let mut yn = y0;
    for n in 0..steps {
        let tn = t0 + n as f64 * h;
        let k1 = f(tn, yn, control(tn));
        let k2 = f(tn + 0.5 * h, yn + 0.5 * h * k1, control(tn + 0.5 * h));
        let k3 = f(tn + 0.5 * h, yn + 0.5 * h * k2, control(tn + 0.5 * h));
        let k4 = f(tn + h, yn + h * k3, control(tn + h));
        yn += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !yn.is_finite() {
            return Err(Error::contract(format!(
                "ODE state became non-finite at step {}",
                n + 1
            )));
        }
        t.push(if n + 1 == steps { tf } else { t0 + (n + 1) as f64 * h });
        y.push(yn);
    }
    Ok(Trajectory { t, y })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::AnalyticalProblem;

    fn rhs(_t: f64, y: f64, u: f64) -> f64 {
        0.5 * y + u
    }

    #[test]
    fn uncontrolled_exponential() {
        let tr = integrate_ode(rhs, 1.0, |_| 0.0, 0.0, 1.0, 1000).unwrap();
        assert!((tr.y[1000] - 0.5f64.exp()).abs() < 1e-8);
        assert_eq!(tr.t[1000], 1.0);
    }

    #[test]
    fn optimal_control_reproduces_closed_form_state() {
        let tr = integrate_ode(rhs, 1.0, AnalyticalProblem::u_star, 0.0, 1.0, 1000).unwrap();
        assert!((tr.y[1000] - AnalyticalProblem::y_star(1.0)).abs() < 1e-6);
    }

    #[test]
    fn fourth_order_convergence() {
        let err = |n| {
            (integrate_ode(rhs, 1.0, AnalyticalProblem::u_star, 0.0, 1.0, n)
                .unwrap()
                .y[n]
                - AnalyticalProblem::y_star(1.0))
            .abs()
        };
        let ratio = err(10) / err(20);
        assert!((12.0..=20.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn blow_up_is_an_error() {
        assert!(integrate_ode(|_, y, _| y * y, 1.0, |_| 0.0, 0.0, 2.0, 10).is_err());
    }
}
