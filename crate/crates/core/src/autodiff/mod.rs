//! Exact input jets and parameter gradients.
//!
//! Input partials (up to `d/dt`, `d/dx_i`, `d2/dx_i^2`) are propagated
//! forward through the network as stacked jets; parameter gradients come
//! from a hand-written reverse sweep over that jet computation, so gradients
//! of losses built from second input derivatives are exact.

mod dual;
mod elu;
pub(crate) mod jet;

pub use dual::{Dual, Scalar};
pub use elu::{elu, elu_d1, elu_d2, elu_derivs};
pub use jet::{Jet, JetLayout};

use crate::error::{Error, Result};
use crate::network::{self, ControlPinnParams, HeadJets, PointJets, Tape};
use crate::par::Execution;

/// Flat gradient aligned with the parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterGradient(pub Vec<f64>);

impl ParameterGradient {
    pub fn zeros(len: usize) -> Self {
        ParameterGradient(vec![0.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    /// Index and value of the first non-finite entry.
    pub fn first_non_finite(&self) -> Option<(usize, f64)> {
        self.0.iter().copied().enumerate().find(|(_, g)| !g.is_finite())
    }
}

/// Jets of `y`, `u` and `lambda` at one point `(t, x)`.
pub fn jet_eval(params: &ControlPinnParams, t: f64, x: &[f64], layout: JetLayout) -> Result<PointJets> {
    let out = network::evaluate(params, &[t], x, layout, Execution::Sequential)?;
    Ok(out.point(0))
}

/// Collects forward recordings and their output cotangents while a loss is
/// being assembled.
pub struct Recorder<'a> {
    params: &'a ControlPinnParams,
    exec: Execution,
    tapes: Vec<(Tape, Option<HeadJets>)>,
    direct: Option<Vec<f64>>,
}

/// Handle to one recorded batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Recording(usize);

impl<'a> Recorder<'a> {
    pub fn params(&self) -> &'a ControlPinnParams {
        self.params
    }

    pub fn execution(&self) -> Execution {
        self.exec
    }

    /// Evaluates the network on a batch and keeps the tape.
    pub fn record(&mut self, t: &[f64], x: &[f64], layout: JetLayout) -> Result<(Recording, HeadJets)> {
        let (out, tape) = network::record(self.params, t, x, layout, self.exec)?;
        self.tapes.push((tape, None));
        Ok((Recording(self.tapes.len() - 1), out))
    }

    /// Sets `d loss / d outputs` for a recorded batch.
    pub fn seed(&mut self, rec: Recording, cotangent: HeadJets) {
        self.tapes[rec.0].1 = Some(cotangent);
    }

    /// Adds a gradient term that depends on the parameters directly.
    pub fn add_direct(&mut self, grad: &[f64]) {
        let acc = self.direct.get_or_insert_with(|| vec![0.0; grad.len()]);
        for (a, g) in acc.iter_mut().zip(grad) {
            *a += g;
        }
    }
}

/// Evaluates a scalar loss and its exact parameter gradient.
///
/// `loss` records whatever batches it needs, seeds their output cotangents
/// and returns the loss value. Recordings left unseeded contribute nothing.
/// Gradients are summed in recording order, then chunk order.
pub fn loss_gradient<F>(params: &ControlPinnParams, exec: Execution, loss: F) -> Result<(f64, ParameterGradient)>
where
    F: FnOnce(&mut Recorder<'_>) -> Result<f64>,
{
    let mut rec = Recorder {
        params,
        exec,
        tapes: Vec::new(),
        direct: None,
    };
    let value = loss(&mut rec)?;
    if !value.is_finite() {
        return Err(Error::NonFiniteLoss { value });
    }
    let mut total = ParameterGradient::zeros(params.len());
    for (tape, cot) in &rec.tapes {
        if let Some(cot) = cot {
            let g = tape.backward(params, cot, exec)?;
            for (a, b) in total.0.iter_mut().zip(&g.0) {
                *a += b;
            }
        }
    }
    if let Some(direct) = rec.direct {
        if direct.len() != total.len() {
            return Err(Error::Shape {
                expected: total.len(),
                got: direct.len(),
            });
        }
        for (a, b) in total.0.iter_mut().zip(&direct) {
            *a += b;
        }
    }
    Ok((value, total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{init_params, ArchitectureConfig, Head};

    #[test]
    fn constant_loss_has_zero_gradient() {
        let p = init_params(ArchitectureConfig::standard(1, 1, 1), 1).unwrap();
        let (v, g) = loss_gradient(&p, Execution::Sequential, |_| Ok(0.0)).unwrap();
        assert_eq!(v, 0.0);
        assert!(g.0.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn quadratic_parameter_loss_gradient_is_identity() {
        let p = init_params(ArchitectureConfig::standard(1, 1, 1), 2).unwrap();
        let (v, g) = loss_gradient(&p, Execution::Sequential, |rec| {
            let theta = rec.params().as_flat().to_vec();
            rec.add_direct(&theta);
            Ok(0.5 * theta.iter().map(|t| t * t).sum::<f64>())
        })
        .unwrap();
        assert!(v > 0.0);
        assert_eq!(g.0, p.as_flat());
    }

    #[test]
    fn nonfinite_loss_is_rejected() {
        let p = init_params(ArchitectureConfig::standard(0, 1, 1), 2).unwrap();
        let r = loss_gradient(&p, Execution::Sequential, |_| Ok(f64::INFINITY));
        assert!(matches!(r, Err(Error::NonFiniteLoss { .. })));
    }

    #[test]
    fn unused_head_parameters_get_zero_gradient() {
        // A loss on y alone cannot depend on control/adjoint branch weights.
        let p = init_params(ArchitectureConfig::standard(1, 1, 1), 3).unwrap();
        let (_, g) = loss_gradient(&p, Execution::Sequential, |rec| {
            let (r, out) = rec.record(&[0.2, 0.7], &[0.3, 0.9], JetLayout::full(1))?;
            let mut cot = out.zeros_like();
            let mut total = 0.0;
            for i in 0..2 {
                let y = out.point(i).y.value[0];
                total += y * y;
                cot.add_point(i, Head::State, &[2.0 * y]);
            }
            rec.seed(r, cot);
            Ok(total)
        })
        .unwrap();
        let start = p.layout().control[0].offset;
        assert!(g.0[start..].iter().all(|&x| x == 0.0));
        assert!(g.0[..start].iter().any(|&x| x != 0.0));
    }
}
