//! Optimal control benchmarks.
//!
//! Every problem supplies its dynamics `f`, the strong-form right-hand side
//! of the adjoint equation `lambda_t = -lambda^T f_y - g_y`, the optimality
//! residual `lambda^T f_u + g_u`, its side conditions and whatever reference
//! solutions are known. Residual code is generic over [`Scalar`] so the loss
//! can differentiate it.

mod analytical;
mod heat;
mod predator_prey;

pub use analytical::AnalyticalProblem;
pub use heat::{HeatOptions, HeatProblem};
pub use predator_prey::{PredatorPreyOptions, PredatorPreyProblem};

use serde::{Deserialize, Serialize};

use crate::autodiff::{Jet, Scalar};
use crate::error::{Error, Result};

/// Tolerance for "point lies on its manifold".
pub const MANIFOLD_TOL: f64 = 1e-12;

/// Time interval times an axis-aligned spatial box (empty for ODEs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub t0: f64,
    pub tf: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Domain {
    pub fn unit(spatial_dim: usize) -> Self {
        Domain {
            t0: 0.0,
            tf: 1.0,
            lower: vec![0.0; spatial_dim],
            upper: vec![1.0; spatial_dim],
        }
    }

    pub fn spatial_dim(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t0 < self.tf) {
            return Err(Error::Config(format!("empty time interval [{}, {}]", self.t0, self.tf)));
        }
        if self.lower.len() != self.upper.len() {
            return Err(Error::Config("domain bounds have different dimensions".into()));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| !(l < u)) {
            return Err(Error::Config("degenerate spatial box".into()));
        }
        Ok(())
    }

    /// True when some coordinate sits on a face of the box.
    pub fn on_boundary(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .any(|(&xi, (&lo, &hi))| (xi - lo).abs() <= MANIFOLD_TOL || (xi - hi).abs() <= MANIFOLD_TOL)
    }
}

/// Which manifold a collocation point was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointSet {
    Interior,
    Initial,
    Terminal,
    Boundary,
}

/// Known solution values at a point; `None` where no closed form exists.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Reference {
    pub y: Option<Vec<f64>>,
    pub u: Option<Vec<f64>>,
    pub lambda: Option<Vec<f64>>,
}

/// Pointwise defects of the side conditions. Entries that do not apply on
/// the given manifold are empty.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionResiduals<S> {
    pub initial: Vec<S>,
    pub terminal_adjoint: Vec<S>,
    pub boundary_state: Vec<S>,
    pub boundary_adjoint: Vec<S>,
    pub data_tracking: Vec<S>,
}

impl<S> Default for ConditionResiduals<S> {
    fn default() -> Self {
        ConditionResiduals {
            initial: Vec::new(),
            terminal_adjoint: Vec::new(),
            boundary_state: Vec::new(),
            boundary_adjoint: Vec::new(),
            data_tracking: Vec::new(),
        }
    }
}

pub trait ControlProblem: Sync + Send {
    fn name(&self) -> &'static str;
    fn domain(&self) -> &Domain;
    fn n_state(&self) -> usize;
    fn n_control(&self) -> usize;

    /// `f(y, u)`, the right-hand side of `y_t = f`.
    fn dynamics<S: Scalar>(&self, t: f64, x: &[f64], y: &Jet<S>, u: &[S]) -> Result<Vec<S>>;

    /// Right-hand side of `lambda_t = -lambda^T f_y - g_y` in strong form.
    fn adjoint_rhs<S: Scalar>(&self, t: f64, x: &[f64], lambda: &Jet<S>, y: &Jet<S>, u: &[S]) -> Result<Vec<S>>;

    /// `lambda^T f_u + g_u`, zero at an optimum.
    fn optimality_residual<S: Scalar>(&self, t: f64, x: &[f64], lambda: &[S], y: &[S], u: &[S]) -> Vec<S>;

    /// `y0(x)` per state component; `None` leaves the component free.
    fn initial_state(&self, x: &[f64]) -> Vec<Option<f64>>;

    /// Dirichlet data `b(t, x)` on the spatial boundary.
    fn boundary_state(&self, t: f64, x: &[f64]) -> Vec<f64>;

    /// `w_y(y(tf))` when the terminal adjoint condition is imposed.
    fn terminal_adjoint<S: Scalar>(&self, x: &[f64], y: &[S]) -> Option<Vec<S>>;

    /// Supervised targets `(state component, value)` on a manifold.
    fn tracking_targets(&self, set: PointSet, t: f64, x: &[f64]) -> Vec<(usize, f64)>;

    /// Running cost `g(y, u)`.
    fn running_cost(&self, t: f64, x: &[f64], y: &[f64], u: &[f64]) -> f64;

    /// Terminal cost `w(y(tf))`.
    fn terminal_cost(&self, x: &[f64], y: &[f64]) -> f64;

    /// Cost attached to the initial slice (zero for most problems).
    fn initial_cost(&self, _x: &[f64], _y: &[f64]) -> f64 {
        0.0
    }

    fn reference(&self, t: f64, x: &[f64]) -> Option<Reference>;

    /// `y_t - f(y, u)`.
    fn forward_residual<S: Scalar>(&self, t: f64, x: &[f64], y: &Jet<S>, u: &[S]) -> Result<Vec<S>> {
        y.require_derivatives("forward residual")?;
        let f = self.dynamics(t, x, y, u)?;
        Ok(f.into_iter().enumerate().map(|(i, fi)| y.dt(i) - fi).collect())
    }

    /// `lambda_t + lambda^T f_y + g_y`.
    fn adjoint_residual<S: Scalar>(&self, t: f64, x: &[f64], lambda: &Jet<S>, y: &Jet<S>, u: &[S]) -> Result<Vec<S>> {
        lambda.require_derivatives("adjoint residual")?;
        let rhs = self.adjoint_rhs(t, x, lambda, y, u)?;
        Ok(rhs.into_iter().enumerate().map(|(i, r)| lambda.dt(i) - r).collect())
    }

    /// Defects of every condition that applies on `set` at `(t, x)`.
    fn condition_residuals<S: Scalar>(
        &self,
        set: PointSet,
        t: f64,
        x: &[f64],
        y: &[S],
        lambda: &[S],
    ) -> Result<ConditionResiduals<S>> {
        let dom = self.domain();
        let mut out = ConditionResiduals::default();
        match set {
            PointSet::Interior => {}
            PointSet::Initial => {
                if (t - dom.t0).abs() > MANIFOLD_TOL {
                    return Err(Error::contract(format!("initial point at t = {t}")));
                }
                for (yi, y0) in y.iter().zip(self.initial_state(x)) {
                    if let Some(v) = y0 {
                        out.initial.push(*yi - v);
                    }
                }
            }
            PointSet::Terminal => {
                if (t - dom.tf).abs() > MANIFOLD_TOL {
                    return Err(Error::contract(format!("terminal point at t = {t}")));
                }
                if let Some(w_y) = self.terminal_adjoint(x, y) {
                    out.terminal_adjoint = lambda.iter().zip(w_y).map(|(l, w)| *l - w).collect();
                }
            }
            PointSet::Boundary => {
                if !dom.on_boundary(x) {
                    return Err(Error::contract(format!("boundary point {x:?} is off the boundary")));
                }
                let b = self.boundary_state(t, x);
                out.boundary_state = y.iter().zip(b).map(|(yi, bi)| *yi - bi).collect();
                out.boundary_adjoint = lambda.to_vec();
            }
        }
        out.data_tracking = self
            .tracking_targets(set, t, x)
            .into_iter()
            .map(|(c, target)| y[c] - target)
            .collect();
        Ok(out)
    }
}

/// Problem selection by id, with per-problem options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Analytical {},
    Heat(HeatOptions),
    PredatorPrey(PredatorPreyOptions),
}

/// One of the shipped benchmarks.
#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Analytical(AnalyticalProblem),
    Heat(HeatProblem),
    PredatorPrey(PredatorPreyProblem),
}

impl Problem {
    pub fn from_spec(spec: &ProblemSpec) -> Result<Self> {
        let p = match spec {
            ProblemSpec::Analytical {} => Problem::Analytical(AnalyticalProblem::new()),
            ProblemSpec::Heat(o) => Problem::Heat(HeatProblem::new(o.clone())?),
            ProblemSpec::PredatorPrey(o) => Problem::PredatorPrey(PredatorPreyProblem::new(o.clone())?),
        };
        p.domain().validate()?;
        Ok(p)
    }

    pub fn id(&self) -> &'static str {
        self.name()
    }
}

macro_rules! delegate {
    ($self:ident, $p:ident => $e:expr) => {
        match $self {
            Problem::Analytical($p) => $e,
            Problem::Heat($p) => $e,
            Problem::PredatorPrey($p) => $e,
        }
    };
}

impl ControlProblem for Problem {
    fn name(&self) -> &'static str {
        delegate!(self, p => p.name())
    }
    fn domain(&self) -> &Domain {
        delegate!(self, p => p.domain())
    }
    fn n_state(&self) -> usize {
        delegate!(self, p => p.n_state())
    }
    fn n_control(&self) -> usize {
        delegate!(self, p => p.n_control())
    }
    fn dynamics<S: Scalar>(&self, t: f64, x: &[f64], y: &Jet<S>, u: &[S]) -> Result<Vec<S>> {
        delegate!(self, p => p.dynamics(t, x, y, u))
    }
    fn adjoint_rhs<S: Scalar>(&self, t: f64, x: &[f64], lambda: &Jet<S>, y: &Jet<S>, u: &[S]) -> Result<Vec<S>> {
        delegate!(self, p => p.adjoint_rhs(t, x, lambda, y, u))
    }
    fn optimality_residual<S: Scalar>(&self, t: f64, x: &[f64], lambda: &[S], y: &[S], u: &[S]) -> Vec<S> {
        delegate!(self, p => p.optimality_residual(t, x, lambda, y, u))
    }
    fn initial_state(&self, x: &[f64]) -> Vec<Option<f64>> {
        delegate!(self, p => p.initial_state(x))
    }
    fn boundary_state(&self, t: f64, x: &[f64]) -> Vec<f64> {
        delegate!(self, p => p.boundary_state(t, x))
    }
    fn terminal_adjoint<S: Scalar>(&self, x: &[f64], y: &[S]) -> Option<Vec<S>> {
        delegate!(self, p => p.terminal_adjoint(x, y))
    }
    fn tracking_targets(&self, set: PointSet, t: f64, x: &[f64]) -> Vec<(usize, f64)> {
        delegate!(self, p => p.tracking_targets(set, t, x))
    }
    fn running_cost(&self, t: f64, x: &[f64], y: &[f64], u: &[f64]) -> f64 {
        delegate!(self, p => p.running_cost(t, x, y, u))
    }
    fn terminal_cost(&self, x: &[f64], y: &[f64]) -> f64 {
        delegate!(self, p => p.terminal_cost(x, y))
    }
    fn initial_cost(&self, x: &[f64], y: &[f64]) -> f64 {
        delegate!(self, p => p.initial_cost(x, y))
    }
    fn reference(&self, t: f64, x: &[f64]) -> Option<Reference> {
        delegate!(self, p => p.reference(t, x))
    }
}

/// Value-only jet helper used by tests and validators.
pub fn value_jet<S: Scalar>(spatial_dim: usize, value: Vec<S>) -> Jet<S> {
    Jet::constant(spatial_dim, value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_validation() {
        assert!(Domain::unit(2).validate().is_ok());
        let bad = Domain {
            t0: 1.0,
            tf: 1.0,
            lower: vec![],
            upper: vec![],
        };
        assert!(bad.validate().is_err());
        let flat = Domain {
            t0: 0.0,
            tf: 1.0,
            lower: vec![0.0],
            upper: vec![0.0],
        };
        assert!(flat.validate().is_err());
    }

    #[test]
    fn boundary_detection() {
        let d = Domain::unit(2);
        assert!(d.on_boundary(&[0.0, 0.4]));
        assert!(d.on_boundary(&[0.3, 1.0]));
        assert!(!d.on_boundary(&[0.3, 0.9]));
        assert!(!Domain::unit(0).on_boundary(&[]));
    }

    #[test]
    fn spec_parses_from_toml() {
        let spec: ProblemSpec = toml::from_str("id = \"heat\"\ndiffusivity = 1.0").unwrap();
        match spec {
            ProblemSpec::Heat(o) => assert_eq!(o.diffusivity, 1.0),
            other => panic!("{other:?}"),
        }
        let spec: ProblemSpec = toml::from_str("id = \"analytical\"").unwrap();
        assert_eq!(spec, ProblemSpec::Analytical {});
    }
}
