//! Distributed control of the 1-D heat equation on `[0,1] x [0,1]`.
//!
//! `y_t = a y_xx + u`, `y(0,x) = sin(pi x) sin(2 pi x)`, `y = 0` on
//! `x in {0, 1}`. The cost tracks `y*` at the final time and penalises
//! `int int u^2`.
//!
//! The reference pair `(y*, u*)` satisfies the state equation only for
//! diffusivity `a = 1`; with the default `a = 0.1` it does not.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{ControlProblem, Domain, PointSet, Reference};
use crate::autodiff::{Jet, Scalar};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatOptions {
    /// Coefficient of `y_xx`.
    pub diffusivity: f64,
    /// Also track `y*(t0, .)` (which is identically zero) at the initial
    /// time. Off by default: it fights the initial condition.
    pub initial_tracking: bool,
    /// Impose `lambda(tf) = 2 (y(tf) - y*(tf))`. Off by default: the final
    /// target is then a data term only.
    pub terminal_adjoint: bool,
}

impl Default for HeatOptions {
    fn default() -> Self {
        HeatOptions {
            diffusivity: 0.1,
            initial_tracking: false,
            terminal_adjoint: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatProblem {
    domain: Domain,
    options: HeatOptions,
}

impl HeatProblem {
    pub fn new(options: HeatOptions) -> Result<Self> {
        if !(options.diffusivity.is_finite() && options.diffusivity > 0.0) {
            return Err(Error::Config(format!(
                "diffusivity must be positive, got {}",
                options.diffusivity
            )));
        }
        Ok(HeatProblem {
            domain: Domain::unit(1),
            options,
        })
    }

    pub fn with_diffusivity(diffusivity: f64) -> Result<Self> {
        Self::new(HeatOptions {
            diffusivity,
            ..HeatOptions::default()
        })
    }

    pub fn diffusivity(&self) -> f64 {
        self.options.diffusivity
    }

    pub fn options(&self) -> &HeatOptions {
        &self.options
    }

    pub fn initial_profile(x: f64) -> f64 {
        (PI * x).sin() * (2.0 * PI * x).sin()
    }

    pub fn y_star(t: f64, x: f64) -> f64 {
        let c = 2.0 / (PI + 4.0 * PI.powi(3));
        c * ((-PI * PI * t).exp() - (PI * t / 2.0).cos() + 2.0 * PI * (PI * t / 2.0).sin()) * (PI * x).sin()
    }

    pub fn y_star_dt(t: f64, x: f64) -> f64 {
        let c = 2.0 / (PI + 4.0 * PI.powi(3));
        c * (-PI * PI * (-PI * PI * t).exp() + PI / 2.0 * (PI * t / 2.0).sin() + PI * PI * (PI * t / 2.0).cos())
            * (PI * x).sin()
    }

    pub fn y_star_dxx(t: f64, x: f64) -> f64 {
        -PI * PI * Self::y_star(t, x)
    }

    pub fn u_star(t: f64, x: f64) -> f64 {
        (PI * x).sin() * (PI * t / 2.0).sin()
    }
}

impl ControlProblem for HeatProblem {
    fn name(&self) -> &'static str {
        "heat"
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
        y.require_derivatives("heat dynamics")?;
        Ok(vec![y.dxx(0, 0) * self.options.diffusivity + u[0]])
    }

    fn adjoint_rhs<S: Scalar>(&self, _t: f64, _x: &[f64], lambda: &Jet<S>, _y: &Jet<S>, _u: &[S]) -> Result<Vec<S>> {
        lambda.require_derivatives("heat adjoint")?;
        Ok(vec![-(lambda.dxx(0, 0) * self.options.diffusivity)])
    }

    fn optimality_residual<S: Scalar>(&self, _t: f64, _x: &[f64], lambda: &[S], _y: &[S], u: &[S]) -> Vec<S> {
        vec![lambda[0] + u[0] * 2.0]
    }

    fn initial_state(&self, x: &[f64]) -> Vec<Option<f64>> {
        vec![Some(Self::initial_profile(x[0]))]
    }

    fn boundary_state(&self, _t: f64, _x: &[f64]) -> Vec<f64> {
        vec![0.0]
    }

    fn terminal_adjoint<S: Scalar>(&self, x: &[f64], y: &[S]) -> Option<Vec<S>> {
        self.options
            .terminal_adjoint
            .then(|| vec![(y[0] - Self::y_star(self.domain.tf, x[0])) * 2.0])
    }

    fn tracking_targets(&self, set: PointSet, t: f64, x: &[f64]) -> Vec<(usize, f64)> {
        match set {
            PointSet::Terminal => vec![(0, Self::y_star(t, x[0]))],
            PointSet::Initial if self.options.initial_tracking => vec![(0, Self::y_star(t, x[0]))],
            _ => Vec::new(),
        }
    }

    fn running_cost(&self, _t: f64, _x: &[f64], _y: &[f64], u: &[f64]) -> f64 {
        u[0] * u[0]
    }

    fn terminal_cost(&self, x: &[f64], y: &[f64]) -> f64 {
        (y[0] - Self::y_star(self.domain.tf, x[0])).powi(2)
    }

    fn initial_cost(&self, x: &[f64], y: &[f64]) -> f64 {
        (y[0] - Self::y_star(self.domain.t0, x[0])).powi(2)
    }

    fn reference(&self, t: f64, x: &[f64]) -> Option<Reference> {
        Some(Reference {
            y: Some(vec![Self::y_star(t, x[0])]),
            u: Some(vec![Self::u_star(t, x[0])]),
            lambda: None,
        })
    }
}
