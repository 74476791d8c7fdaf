//! The training loss: weighted means of squared residuals.
//!
//! | term               | points    | residual                                  |
//! |--------------------|-----------|-------------------------------------------|
//! | `data`             | any set   | `y_c - y*_c` for supervised components    |
//! | `forward`          | interior  | `y_t - f(y, u)`                           |
//! | `adjoint`          | interior  | `lambda_t + lambda^T f_y + g_y`           |
//! | `optimality`       | interior  | `lambda^T f_u + g_u`                      |
//! | `initial`          | initial   | `y(t0) - y0`                              |
//! | `terminal_adjoint` | terminal  | `lambda(tf) - w_y(y(tf))`                 |
//! | `boundary`         | boundary  | `y - b` and `lambda`                      |
//!
//! Each term is `weight * mean over the set of |residual|^2`; the data term
//! adds one such mean per set that carries targets. Sums run over points in
//! batch order, sets in the order interior, initial, terminal, boundary,
//! and `total` adds the terms in the table's order.

use serde::{Deserialize, Serialize};

use crate::autodiff::{loss_gradient, Dual, Jet, JetLayout, ParameterGradient, Scalar};
use crate::error::{Error, Result};
use crate::network::{self, ControlPinnParams, Head, HeadChunk, HeadJets, PointJets};
use crate::par::{self, chunk_ranges, Execution};
use crate::problems::{ControlProblem, PointSet};
use crate::sampler::{CollocationBatch, PointCloud};

/// Tangent slots available for one point's network outputs.
pub const MAX_POINT_INPUTS: usize = 32;
type D = Dual<MAX_POINT_INPUTS>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub data: f64,
    pub forward: f64,
    pub adjoint: f64,
    pub optimality: f64,
    pub initial: f64,
    pub terminal_adjoint: f64,
    pub boundary: f64,
}

impl Default for LossWeights {
    /// Residual terms are scaled by 0.1, data and side conditions are not.
    fn default() -> Self {
        LossWeights {
            data: 1.0,
            forward: 0.1,
            adjoint: 0.1,
            optimality: 0.1,
            initial: 1.0,
            terminal_adjoint: 1.0,
            boundary: 1.0,
        }
    }
}

impl LossWeights {
    pub fn zero() -> Self {
        LossWeights {
            data: 0.0,
            forward: 0.0,
            adjoint: 0.0,
            optimality: 0.0,
            initial: 0.0,
            terminal_adjoint: 0.0,
            boundary: 0.0,
        }
    }

    fn as_array(&self) -> [f64; 7] {
        [
            self.data,
            self.forward,
            self.adjoint,
            self.optimality,
            self.initial,
            self.terminal_adjoint,
            self.boundary,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if self.as_array().iter().all(|w| w.is_finite() && *w >= 0.0) {
            Ok(())
        } else {
            Err(Error::Config("loss weights must be finite and nonnegative".into()))
        }
    }
}

/// Weighted loss terms for one batch.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub data: f64,
    pub forward: f64,
    pub adjoint: f64,
    pub optimality: f64,
    pub initial: f64,
    pub terminal_adjoint: f64,
    pub boundary: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub const TERMS: [&'static str; 7] = [
        "data",
        "forward",
        "adjoint",
        "optimality",
        "initial",
        "terminal_adjoint",
        "boundary",
    ];

    pub fn terms(&self) -> [f64; 7] {
        [
            self.data,
            self.forward,
            self.adjoint,
            self.optimality,
            self.initial,
            self.terminal_adjoint,
            self.boundary,
        ]
    }

    fn from_terms(t: [f64; 7]) -> Self {
        let total = t.iter().fold(0.0, |acc, v| acc + v);
        LossBreakdown {
            data: t[0],
            forward: t[1],
            adjoint: t[2],
            optimality: t[3],
            initial: t[4],
            terminal_adjoint: t[5],
            boundary: t[6],
            total,
        }
    }
}

/// Unweighted squared residual norms at one point, in [`LossBreakdown::TERMS`] order.
pub fn point_terms<S: Scalar, P: ControlProblem>(
    problem: &P,
    set: PointSet,
    t: f64,
    x: &[f64],
    y: &Jet<S>,
    u: &Jet<S>,
    lambda: &Jet<S>,
) -> Result<[S; 7]> {
    let sq = |v: &[S]| v.iter().fold(S::zero(), |acc, r| acc + r.square());
    let mut out = [S::zero(); 7];
    if set == PointSet::Interior {
        out[1] = sq(&problem.forward_residual(t, x, y, &u.value)?);
        out[2] = sq(&problem.adjoint_residual(t, x, lambda, y, &u.value)?);
        out[3] = sq(&problem.optimality_residual(t, x, &lambda.value, &y.value, &u.value));
    }
    let c = problem.condition_residuals(set, t, x, &y.value, &lambda.value)?;
    out[0] = sq(&c.data_tracking);
    out[4] = sq(&c.initial);
    out[5] = sq(&c.terminal_adjoint);
    out[6] = sq(&c.boundary_state) + sq(&c.boundary_adjoint);
    Ok(out)
}

fn seed_jet(j: &Jet<f64>, slot: &mut usize, values_only: bool) -> Jet<D> {
    let mut take = |v: &[f64]| -> Vec<D> {
        v.iter()
            .map(|&a| {
                let d = D::variable(a, *slot);
                *slot += 1;
                d
            })
            .collect()
    };
    let value = take(&j.value);
    if values_only {
        return Jet {
            spatial_dim: j.spatial_dim,
            value,
            d_dt: Vec::new(),
            d_dx: Vec::new(),
            d2_dx2: Vec::new(),
        };
    }
    let d_dt = take(&j.d_dt);
    let d_dx = take(&j.d_dx);
    let d2_dx2 = take(&j.d2_dx2);
    Jet {
        spatial_dim: j.spatial_dim,
        value,
        d_dt,
        d_dx,
        d2_dx2,
    }
}

struct PointResult {
    terms: [f64; 7],
    cotangent: Option<(Vec<f64>, Vec<f64>, Vec<f64>)>,
}

fn point_result<P: ControlProblem>(
    problem: &P,
    set: PointSet,
    t: f64,
    x: &[f64],
    jets: &PointJets,
    coef: &[f64; 7],
    with_gradient: bool,
) -> Result<PointResult> {
    if !with_gradient {
        let terms = point_terms(problem, set, t, x, &jets.y, &jets.u, &jets.lambda)?;
        return Ok(PointResult { terms, cotangent: None });
    }
    let needed = jets.y.len() + jets.u.width() + jets.lambda.len();
    if needed > MAX_POINT_INPUTS {
        return Err(Error::contract(format!(
            "{needed} output entries per point exceed the {MAX_POINT_INPUTS} tangent slots"
        )));
    }
    let mut slot = 0;
    let y = seed_jet(&jets.y, &mut slot, false);
    let y_end = slot;
    let u = seed_jet(&jets.u, &mut slot, true);
    let u_end = slot;
    let lambda = seed_jet(&jets.lambda, &mut slot, false);
    let l_end = slot;
    let terms = point_terms(problem, set, t, x, &y, &u, &lambda)?;
    let mut weighted = D::zero();
    for (term, c) in terms.iter().zip(coef) {
        if *c != 0.0 {
            weighted += *term * *c;
        }
    }
    let g = weighted.d;
    Ok(PointResult {
        terms: terms.map(|s| s.v),
        cotangent: Some((g[..y_end].to_vec(), g[y_end..u_end].to_vec(), g[u_end..l_end].to_vec())),
    })
}

const SETS: [PointSet; 4] = [
    PointSet::Interior,
    PointSet::Initial,
    PointSet::Terminal,
    PointSet::Boundary,
];

fn layout_for(set: PointSet, spatial_dim: usize) -> JetLayout {
    if set == PointSet::Interior {
        JetLayout::full(spatial_dim)
    } else {
        JetLayout::values(spatial_dim)
    }
}

/// Per-set contribution: weighted means, and the output cotangent if asked.
fn set_terms<P: ControlProblem>(
    problem: &P,
    set: PointSet,
    cloud: &PointCloud,
    outputs: &HeadJets,
    weights: &LossWeights,
    exec: Execution,
    with_gradient: bool,
) -> Result<([f64; 7], Option<HeadJets>)> {
    let n = cloud.len();
    let inv_n = 1.0 / n as f64;
    let coef = weights.as_array().map(|w| w * inv_n);
    let ranges = chunk_ranges(n);
    let per_chunk = par::try_map(exec, &ranges, |r| {
        r.clone()
            .map(|p| {
                point_result(
                    problem,
                    set,
                    cloud.t[p],
                    cloud.x_at(p),
                    &outputs.point(p),
                    &coef,
                    with_gradient,
                )
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut sums = [0.0; 7];
    let mut cot = with_gradient.then(|| outputs.zeros_like());
    for (p, res) in per_chunk.into_iter().flatten().enumerate() {
        for (s, v) in sums.iter_mut().zip(res.terms) {
            *s += v;
        }
        if let (Some(c), Some((gy, gu, gl))) = (cot.as_mut(), res.cotangent) {
            c.add_point(p, Head::State, &gy);
            c.add_point(p, Head::Control, &gu);
            c.add_point(p, Head::Adjoint, &gl);
        }
    }
    let mut weighted = [0.0; 7];
    for i in 0..7 {
        weighted[i] = coef[i] * sums[i];
    }
    Ok((weighted, cot))
}

fn accumulate(acc: &mut [f64; 7], part: &[f64; 7]) {
    for (a, b) in acc.iter_mut().zip(part) {
        *a += b;
    }
}

/// Loss breakdown for network outputs that were computed elsewhere.
/// `outputs[i]` must hold the jets for the i-th set in interior, initial,
/// terminal, boundary order.
pub fn evaluate_outputs<P: ControlProblem>(
    problem: &P,
    batch: &CollocationBatch,
    outputs: [&HeadJets; 4],
    weights: &LossWeights,
) -> Result<LossBreakdown> {
    let mut acc = [0.0; 7];
    for (set, out) in SETS.iter().zip(outputs) {
        let cloud = batch.set(*set);
        if cloud.is_empty() {
            continue;
        }
        let (w, _) = set_terms(problem, *set, cloud, out, weights, Execution::Sequential, false)?;
        accumulate(&mut acc, &w);
    }
    Ok(LossBreakdown::from_terms(acc))
}

/// Loss breakdown at `params` on `batch`.
pub fn evaluate<P: ControlProblem>(
    params: &ControlPinnParams,
    problem: &P,
    batch: &CollocationBatch,
    weights: &LossWeights,
    exec: Execution,
) -> Result<LossBreakdown> {
    let d = problem.domain().spatial_dim();
    let mut acc = [0.0; 7];
    for set in SETS {
        let cloud = batch.set(set);
        if cloud.is_empty() {
            continue;
        }
        let out = network::evaluate(params, &cloud.t, &cloud.x, layout_for(set, d), exec)?;
        let (w, _) = set_terms(problem, set, cloud, &out, weights, exec, false)?;
        accumulate(&mut acc, &w);
    }
    Ok(LossBreakdown::from_terms(acc))
}

/// Loss breakdown and the exact gradient of its total.
pub fn evaluate_with_gradient<P: ControlProblem>(
    params: &ControlPinnParams,
    problem: &P,
    batch: &CollocationBatch,
    weights: &LossWeights,
    exec: Execution,
) -> Result<(LossBreakdown, ParameterGradient)> {
    let d = problem.domain().spatial_dim();
    let mut breakdown = LossBreakdown::default();
    let (_, grad) = loss_gradient(params, exec, |rec| {
        let mut acc = [0.0; 7];
        for set in SETS {
            let cloud = batch.set(set);
            if cloud.is_empty() {
                continue;
            }
            let (handle, out) = rec.record(&cloud.t, &cloud.x, layout_for(set, d))?;
            let (w, cot) = set_terms(problem, set, cloud, &out, weights, exec, true)?;
            accumulate(&mut acc, &w);
            rec.seed(handle, cot.expect("requested"));
        }
        breakdown = LossBreakdown::from_terms(acc);
        Ok(breakdown.total)
    })?;
    Ok((breakdown, grad))
}

impl HeadJets {
    /// Assembles stacked head jets from per-point jets.
    pub fn from_points(layout: JetLayout, points: &[PointJets]) -> Self {
        let chunks = chunk_ranges(points.len())
            .into_iter()
            .map(|r| {
                let n = r.len();
                let c = layout.channels();
                let stack = |pick: &dyn Fn(&PointJets) -> &Jet<f64>| {
                    let width = pick(&points[r.start]).width();
                    ndarray::Array2::zeros((width, c * n))
                };
                let mut ch = HeadChunk {
                    n,
                    y: stack(&|p| &p.y),
                    u: stack(&|p| &p.u),
                    lambda: stack(&|p| &p.lambda),
                };
                for (q, p) in r.clone().enumerate() {
                    let pj = &points[p];
                    fill(&mut ch.y, &pj.y, layout, n, q);
                    fill(&mut ch.u, &pj.u, layout, n, q);
                    fill(&mut ch.lambda, &pj.lambda, layout, n, q);
                }
                ch
            })
            .collect();
        HeadJets {
            layout,
            n: points.len(),
            chunks,
        }
    }
}

fn fill(block: &mut ndarray::Array2<f64>, j: &Jet<f64>, layout: JetLayout, n: usize, q: usize) {
    for o in 0..j.width() {
        block[[o, q]] = j.value[o];
        if layout.derivatives && j.has_derivatives() {
            block[[o, n + q]] = j.d_dt[o];
            for i in 0..layout.spatial_dim {
                block[[o, layout.dx(i) * n + q]] = j.dx(o, i);
                block[[o, layout.dxx(i) * n + q]] = j.dxx(o, i);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{init_params, ArchitectureConfig};
    use crate::problems::{AnalyticalProblem, HeatOptions, HeatProblem};
    use crate::sampler::{sample_epoch, BatchSizes};

    fn small_sizes() -> BatchSizes {
        BatchSizes {
            interior: 40,
            initial: 10,
            terminal: 10,
            boundary: 10,
        }
    }

    fn ode_jet(v: f64, dt: f64) -> Jet<f64> {
        Jet {
            spatial_dim: 0,
            value: vec![v],
            d_dt: vec![dt],
            d_dx: vec![],
            d2_dx2: vec![],
        }
    }

    fn oracle_outputs(cloud: &PointCloud, layout: JetLayout) -> HeadJets {
        let pts: Vec<PointJets> = cloud
            .t
            .iter()
            .map(|&t| PointJets {
                y: ode_jet(AnalyticalProblem::y_star(t), AnalyticalProblem::y_star_dt(t)),
                u: ode_jet(AnalyticalProblem::u_star(t), -AnalyticalProblem::lambda_star_dt(t)),
                lambda: ode_jet(AnalyticalProblem::lambda_star(t), AnalyticalProblem::lambda_star_dt(t)),
            })
            .collect();
        HeadJets::from_points(layout, &pts)
    }

    #[test]
    fn closed_form_oracle_network_has_tiny_loss() {
        let p = AnalyticalProblem::new();
        let b = sample_epoch(p.domain(), &BatchSizes::default(), 8, 0).unwrap();
        let outs: Vec<HeadJets> = SETS
            .iter()
            .map(|s| oracle_outputs(b.set(*s), layout_for(*s, 0)))
            .collect();
        let br = evaluate_outputs(
            &p,
            &b,
            [&outs[0], &outs[1], &outs[2], &outs[3]],
            &LossWeights::default(),
        )
        .unwrap();
        assert!(br.forward <= 1e-9 && br.adjoint <= 1e-9 && br.optimality <= 1e-9);
        assert!(br.initial <= 1e-9 && br.terminal_adjoint <= 1e-9);
        assert!(br.total <= 1e-9);
    }

    #[test]
    fn zero_weights_zero_total() {
        let p = HeatProblem::new(HeatOptions::default()).unwrap();
        let params = init_params(ArchitectureConfig::standard(1, 1, 1), 1).unwrap();
        let b = sample_epoch(p.domain(), &small_sizes(), 1, 0).unwrap();
        let br = evaluate(&params, &p, &b, &LossWeights::zero(), Execution::Sequential).unwrap();
        assert_eq!(br.total, 0.0);
    }

    #[test]
    fn weights_scale_only_their_term() {
        let p = HeatProblem::new(HeatOptions::default()).unwrap();
        let params = init_params(ArchitectureConfig::standard(1, 1, 1), 2).unwrap();
        let b = sample_epoch(p.domain(), &small_sizes(), 1, 0).unwrap();
        let w = LossWeights::default();
        let w2 = LossWeights {
            forward: 2.0 * w.forward,
            ..w
        };
        let a = evaluate(&params, &p, &b, &w, Execution::Sequential).unwrap();
        let c = evaluate(&params, &p, &b, &w2, Execution::Sequential).unwrap();
        assert_eq!(c.forward, 2.0 * a.forward);
        for i in [0, 2, 3, 4, 5, 6] {
            assert_eq!(a.terms()[i], c.terms()[i]);
        }
    }

    #[test]
    fn breakdown_is_additive_and_nonnegative() {
        let p = HeatProblem::new(HeatOptions::default()).unwrap();
        let params = init_params(ArchitectureConfig::standard(1, 1, 1), 3).unwrap();
        let b = sample_epoch(p.domain(), &small_sizes(), 4, 0).unwrap();
        let br = evaluate(&params, &p, &b, &LossWeights::default(), Execution::Sequential).unwrap();
        let t = br.terms();
        assert!(t.iter().all(|v| *v >= 0.0));
        assert_eq!(br.total, t[0] + t[1] + t[2] + t[3] + t[4] + t[5] + t[6]);
    }

    #[test]
    fn gradient_path_matches_value_path() {
        let p = HeatProblem::new(HeatOptions::default()).unwrap();
        let params = init_params(ArchitectureConfig::standard(1, 1, 1), 5).unwrap();
        let b = sample_epoch(p.domain(), &small_sizes(), 4, 0).unwrap();
        let a = evaluate(&params, &p, &b, &LossWeights::default(), Execution::Sequential).unwrap();
        let (c, g) = evaluate_with_gradient(&params, &p, &b, &LossWeights::default(), Execution::Sequential).unwrap();
        assert_eq!(a, c);
        assert!(g.norm() > 0.0);
    }

    #[test]
    fn parallel_and_sequential_agree_bitwise() {
        let p = HeatProblem::new(HeatOptions::default()).unwrap();
        let params = init_params(ArchitectureConfig::standard(1, 1, 1), 6).unwrap();
        let b = sample_epoch(p.domain(), &BatchSizes::default(), 4, 0).unwrap();
        let s = evaluate_with_gradient(&params, &p, &b, &LossWeights::default(), Execution::Sequential).unwrap();
        let q = evaluate_with_gradient(&params, &p, &b, &LossWeights::default(), Execution::Parallel).unwrap();
        assert_eq!(s, q);
    }
}
