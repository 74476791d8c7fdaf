//! Scalar ODE benchmark with a closed-form optimum.
//!
//! Minimise `int_0^1 y^2 + u^2/2 dt` subject to `y' = y/2 + u`, `y(0) = 1`.

use super::{ControlProblem, Domain, PointSet, Reference};
use crate::autodiff::{Jet, Scalar};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticalProblem {
    domain: Domain,
}

impl Default for AnalyticalProblem {
    fn default() -> Self {
        Self::new()
    }
}

impl AnalyticalProblem {
    pub fn new() -> Self {
        AnalyticalProblem {
            domain: Domain::unit(0),
        }
    }

    pub fn y_star(t: f64) -> f64 {
        let e3 = 3f64.exp();
        (2.0 * (3.0 * t).exp() + e3) / ((1.5 * t).exp() * (2.0 + e3))
    }

    pub fn u_star(t: f64) -> f64 {
        let e3 = 3f64.exp();
        2.0 * ((3.0 * t).exp() - e3) / ((1.5 * t).exp() * (2.0 + e3))
    }

    pub fn lambda_star(t: f64) -> f64 {
        -Self::u_star(t)
    }

    /// `d/dt y*`, differentiated by hand.
    pub fn y_star_dt(t: f64) -> f64 {
        // y* = (2 e^{3t/2} + e^3 e^{-3t/2}) / (2 + e^3)
        let e3 = 3f64.exp();
        (3.0 * (1.5 * t).exp() - 1.5 * e3 * (-1.5 * t).exp()) / (2.0 + e3)
    }

    /// `d/dt lambda*`.
    pub fn lambda_star_dt(t: f64) -> f64 {
        // lambda* = -2 (e^{3t/2} - e^3 e^{-3t/2}) / (2 + e^3)
        let e3 = 3f64.exp();
        -2.0 * (1.5 * (1.5 * t).exp() + 1.5 * e3 * (-1.5 * t).exp()) / (2.0 + e3)
    }
}

impl ControlProblem for AnalyticalProblem {
    fn name(&self) -> &'static str {
        "analytical"
    }
    fn domain(&self) -> &Domain {
        &self.domain
    }
    fn n_state(&self) -> usize {
        1
    }
    fn n_control(&self) -> usize {
        1
    }

    fn dynamics<S: Scalar>(&self, _t: f64, _x: &[f64], y: &Jet<S>, u: &[S]) -> Result<Vec<S>> {
        Ok(vec![y.value[0] * 0.5 + u[0]])
    }

    fn adjoint_rhs<S: Scalar>(&self, _t: f64, _x: &[f64], lambda: &Jet<S>, y: &Jet<S>, _u: &[S]) -> Result<Vec<S>> {
        Ok(vec![-(lambda.value[0] * 0.5) - y.value[0] * 2.0])
    }

    fn optimality_residual<S: Scalar>(&self, _t: f64, _x: &[f64], lambda: &[S], _y: &[S], u: &[S]) -> Vec<S> {
        vec![-lambda[0] - u[0]]
    }

    fn initial_state(&self, _x: &[f64]) -> Vec<Option<f64>> {
        vec![Some(1.0)]
    }

    fn boundary_state(&self, _t: f64, _x: &[f64]) -> Vec<f64> {
        vec![0.0]
    }

    fn terminal_adjoint<S: Scalar>(&self, _x: &[f64], _y: &[S]) -> Option<Vec<S>> {
        Some(vec![S::zero()])
    }

    fn tracking_targets(&self, _set: PointSet, _t: f64, _x: &[f64]) -> Vec<(usize, f64)> {
        Vec::new()
    }

    fn running_cost(&self, _t: f64, _x: &[f64], y: &[f64], u: &[f64]) -> f64 {
        y[0] * y[0] + 0.5 * u[0] * u[0]
    }

    fn terminal_cost(&self, _x: &[f64], _y: &[f64]) -> f64 {
        0.0
    }

    fn reference(&self, t: f64, _x: &[f64]) -> Option<Reference> {
        Some(Reference {
            y: Some(vec![Self::y_star(t)]),
            u: Some(vec![Self::u_star(t)]),
            lambda: Some(vec![Self::lambda_star(t)]),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jet(v: f64, dt: f64) -> Jet<f64> {
        Jet {
            spatial_dim: 0,
            value: vec![v],
            d_dt: vec![dt],
            d_dx: vec![],
            d2_dx2: vec![],
        }
    }

    #[test]
    fn closed_form_values() {
        assert!((AnalyticalProblem::y_star(0.0) - 1.0).abs() < 1e-15);
        // frozen from an independent float evaluation of the closed forms
        assert!((AnalyticalProblem::y_star(1.0) - 0.608772485712049).abs() < 1e-12);
        assert!((AnalyticalProblem::u_star(0.0) + 1.7283289955382255).abs() < 1e-12);
        assert!((AnalyticalProblem::lambda_star(0.0) - 1.7283289955382255).abs() < 1e-12);
        assert_eq!(AnalyticalProblem::u_star(1.0), 0.0);
    }

    #[test]
    fn hand_derivatives_match_finite_differences() {
        let h = 1e-6;
        for &t in &[0.0, 0.3, 0.77, 1.0] {
            let fd = (AnalyticalProblem::y_star(t + h) - AnalyticalProblem::y_star(t - h)) / (2.0 * h);
            assert!((fd - AnalyticalProblem::y_star_dt(t)).abs() < 1e-8);
            let fd = (AnalyticalProblem::lambda_star(t + h) - AnalyticalProblem::lambda_star(t - h)) / (2.0 * h);
            assert!((fd - AnalyticalProblem::lambda_star_dt(t)).abs() < 1e-8);
        }
    }

    #[test]
    fn forward_residual_at_start() {
        let p = AnalyticalProblem::new();
        let u0 = AnalyticalProblem::u_star(0.0);
        let supplied = 0.25;
        let r = p.forward_residual(0.0, &[], &jet(1.0, supplied), &[u0]).unwrap();
        assert!((r[0] - (supplied - (0.5 + u0))).abs() < 1e-15);
        let r = p
            .forward_residual(0.0, &[], &jet(1.0, AnalyticalProblem::y_star_dt(0.0)), &[u0])
            .unwrap();
        assert!(r[0].abs() < 1e-12);
    }

    #[test]
    fn optimality_holds_for_u_equal_minus_lambda() {
        let p = AnalyticalProblem::new();
        for &l in &[-2.0, 0.0, 0.37, 5.0] {
            assert_eq!(p.optimality_residual(0.5, &[], &[l], &[1.0], &[-l])[0], 0.0);
        }
    }

    #[test]
    fn sign_convention_of_adjoint_residual() {
        // lambda_t + lambda * f_y + g_y with f_y = 1/2 and g_y = 2y.
        let p = AnalyticalProblem::new();
        let (l, lt, y) = (0.7, -0.3, 1.9);
        let r = p.adjoint_residual(0.2, &[], &jet(l, lt), &jet(y, 0.0), &[0.0]).unwrap();
        assert!((r[0] - (lt + 0.5 * l + 2.0 * y)).abs() < 1e-15);
    }

    #[test]
    fn forward_residual_needs_derivatives() {
        let p = AnalyticalProblem::new();
        let y = Jet::constant(0, vec![1.0]);
        assert!(p.forward_residual(0.0, &[], &y, &[0.0]).is_err());
    }
}
