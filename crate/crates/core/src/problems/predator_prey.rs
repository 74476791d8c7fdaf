//! Reaction-diffusion predator-prey control on `[0,1] x [0,1]^2`.
//!
//! States `(y1, y2)` = (predator, prey):
//!
//! ```text
//! y1_t = lap y1 - y1        (u1 = 0)
//! y2_t = lap y2 + u2 + y2
//! ```
//!
//! with `y1(0,x) = sin(pi x1) sin(pi x2)` and zero Dirichlet data. The cost
//! is `int int w_track |y - y*|^2 + w_control u2^2`, where the prey target is
//! `y2* = t (sin 2pi x1 sin 2pi x2)^2 + (1 - t) sin pi x1 sin pi x2`. The
//! network's control head is `u2` alone.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{ControlProblem, Domain, PointSet, Reference};
use crate::autodiff::{Jet, Scalar};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredatorPreyOptions {
    pub tracking_weight: f64,
    pub control_weight: f64,
    /// Include the predator in the tracking term, against its uncontrolled
    /// solution `exp(-(2 pi^2 + 1) t) sin(pi x1) sin(pi x2)`.
    pub track_predator: bool,
}

impl Default for PredatorPreyOptions {
    fn default() -> Self {
        PredatorPreyOptions {
            tracking_weight: 1.0,
            control_weight: 1.0,
            track_predator: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredatorPreyProblem {
    domain: Domain,
    options: PredatorPreyOptions,
}

fn bump(x: &[f64]) -> f64 {
    (PI * x[0]).sin() * (PI * x[1]).sin()
}

impl PredatorPreyProblem {
    pub fn new(options: PredatorPreyOptions) -> Result<Self> {
        for (name, w) in [
            ("tracking_weight", options.tracking_weight),
            ("control_weight", options.control_weight),
        ] {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::Config(format!("{name} must be a nonnegative number, got {w}")));
            }
        }
        Ok(PredatorPreyProblem {
            domain: Domain::unit(2),
            options,
        })
    }

    pub fn options(&self) -> &PredatorPreyOptions {
        &self.options
    }

    /// Prey target trajectory.
    pub fn prey_target(t: f64, x: &[f64]) -> f64 {
        let s = (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin();
        t * s * s + (1.0 - t) * bump(x)
    }

    /// Predator trajectory with `u1 = 0`.
    pub fn predator_reference(t: f64, x: &[f64]) -> f64 {
        (-(2.0 * PI * PI + 1.0) * t).exp() * bump(x)
    }

    fn targets(&self, t: f64, x: &[f64]) -> Vec<(usize, f64)> {
        let mut v = Vec::with_capacity(2);
        if self.options.track_predator {
            v.push((0, Self::predator_reference(t, x)));
        }
        v.push((1, Self::prey_target(t, x)));
        v
    }
}

impl ControlProblem for PredatorPreyProblem {
    fn name(&self) -> &'static str {
        "predator_prey"
    }
    fn domain(&self) -> &Domain {
        &self.domain
    }
    fn n_state(&self) -> usize {
        2
    }
    fn n_control(&self) -> usize {
        1
    }

    fn dynamics<S: Scalar>(&self, _t: f64, _x: &[f64], y: &Jet<S>, u: &[S]) -> Result<Vec<S>> {
        y.require_derivatives("predator-prey dynamics")?;
        Ok(vec![y.laplacian(0) - y.value[0], y.laplacian(1) + u[0] + y.value[1]])
    }

    fn adjoint_rhs<S: Scalar>(&self, t: f64, x: &[f64], lambda: &Jet<S>, y: &Jet<S>, _u: &[S]) -> Result<Vec<S>> {
        lambda.require_derivatives("predator-prey adjoint")?;
        let mut g_y = [S::zero(), S::zero()];
        for (c, target) in self.targets(t, x) {
            g_y[c] = (y.value[c] - target) * (2.0 * self.options.tracking_weight);
        }
        Ok(vec![
            -lambda.laplacian(0) + lambda.value[0] - g_y[0],
            -lambda.laplacian(1) - lambda.value[1] - g_y[1],
        ])
    }

    fn optimality_residual<S: Scalar>(&self, _t: f64, _x: &[f64], lambda: &[S], _y: &[S], u: &[S]) -> Vec<S> {
        vec![lambda[1] + u[0] * (2.0 * self.options.control_weight)]
    }

    fn initial_state(&self, x: &[f64]) -> Vec<Option<f64>> {
        vec![Some(bump(x)), None]
    }

    fn boundary_state(&self, _t: f64, _x: &[f64]) -> Vec<f64> {
        vec![0.0, 0.0]
    }

    fn terminal_adjoint<S: Scalar>(&self, _x: &[f64], _y: &[S]) -> Option<Vec<S>> {
        Some(vec![S::zero(), S::zero()])
    }

    fn tracking_targets(&self, set: PointSet, t: f64, x: &[f64]) -> Vec<(usize, f64)> {
        match set {
            PointSet::Boundary => Vec::new(),
            _ => self.targets(t, x),
        }
    }

    fn running_cost(&self, t: f64, x: &[f64], y: &[f64], u: &[f64]) -> f64 {
        let track: f64 = self.targets(t, x).into_iter().map(|(c, v)| (y[c] - v).powi(2)).sum();
        self.options.tracking_weight * track + self.options.control_weight * u[0] * u[0]
    }

    fn terminal_cost(&self, _x: &[f64], _y: &[f64]) -> f64 {
        0.0
    }

    fn reference(&self, t: f64, x: &[f64]) -> Option<Reference> {
        Some(Reference {
            y: Some(vec![Self::predator_reference(t, x), Self::prey_target(t, x)]),
            u: None,
            lambda: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn value_only(v: Vec<f64>) -> Jet<f64> {
        Jet {
            spatial_dim: 2,
            d_dt: vec![0.0; v.len()],
            d_dx: vec![0.0; 2 * v.len()],
            d2_dx2: vec![0.0; 2 * v.len()],
            value: v,
        }
    }

    #[test]
    fn target_vanishes_on_boundary() {
        for &t in &[0.0, 0.3, 1.0] {
            for &s in &[0.0, 0.25, 0.5, 0.9, 1.0] {
                for x in [[0.0, s], [1.0, s], [s, 0.0], [s, 1.0]] {
                    assert!(PredatorPreyProblem::prey_target(t, &x).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn adjoint_vanishes_at_target_with_zero_multiplier() {
        let p = PredatorPreyProblem::new(PredatorPreyOptions::default()).unwrap();
        let (t, x) = (0.4, [0.3, 0.6]);
        let y = value_only(vec![0.2, PredatorPreyProblem::prey_target(t, &x)]);
        let l = value_only(vec![0.0, 0.0]);
        let r = p.adjoint_residual(t, &x, &l, &y, &[0.0]).unwrap();
        assert_eq!(r, vec![0.0, 0.0]);
    }

    #[test]
    fn predator_reference_solves_its_equation() {
        let p = PredatorPreyProblem::new(PredatorPreyOptions::default()).unwrap();
        let (t, x) = (0.35, [0.2, 0.7]);
        let v = PredatorPreyProblem::predator_reference(t, &x);
        let y = Jet {
            spatial_dim: 2,
            value: vec![v, 0.0],
            d_dt: vec![-(2.0 * PI * PI + 1.0) * v, 0.0],
            d_dx: vec![0.0; 4],
            d2_dx2: vec![-PI * PI * v, -PI * PI * v, 0.0, 0.0],
        };
        let r = p.forward_residual(t, &x, &y, &[0.0]).unwrap();
        assert!(r[0].abs() < 1e-13);
    }

    #[test]
    fn optimality_for_prey_control() {
        let p = PredatorPreyProblem::new(PredatorPreyOptions::default()).unwrap();
        assert_eq!(
            p.optimality_residual(0.1, &[0.5, 0.5], &[9.0, 1.0], &[0.0, 0.0], &[-0.5]),
            vec![0.0]
        );
    }

    #[test]
    fn predator_initial_condition_only() {
        let p = PredatorPreyProblem::new(PredatorPreyOptions::default()).unwrap();
        let x = [0.5, 0.5];
        let c = p
            .condition_residuals(PointSet::Initial, 0.0, &x, &[1.0, 7.0], &[0.0, 0.0])
            .unwrap();
        assert_eq!(c.initial.len(), 1);
        assert!(c.initial[0].abs() < 1e-15);
        // prey tracked at t0 against sin sin
        assert!((c.data_tracking[0] - 6.0).abs() < 1e-15);
    }
}
