//! The three-headed control network.
//!
//! ```text
//! (t, x) -> trunk (ELU hidden layers) -> y
//!           [y, trunk hidden]               -> control branch -> u
//!           [y, u, control hidden]          -> adjoint branch -> lambda
//! ```
//!
//! `y` feeds the control branch directly (skip) and through the trunk's last
//! hidden layer; `y` and `u` feed the adjoint branch the same way. All
//! hidden layers use ELU, all heads are affine.
//!
//! Parameters live in one flat vector. Layers are stored trunk first, then
//! control, then adjoint; within a layer the weight matrix comes first
//! (row-major, `out x in`) followed by the bias. Parameter gradients use the
//! same order.

use ndarray::{concatenate, s, Array2, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::jet::{dense_backward, dense_forward, elu_backward, elu_forward, input_jet};
use crate::autodiff::{Jet, JetLayout, ParameterGradient};
use crate::error::{Error, Result};
use crate::par::{self, chunk_ranges, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureConfig {
    pub spatial_dim: usize,
    pub n_y: usize,
    pub n_u: usize,
    #[serde(default = "default_width")]
    pub hidden_width: usize,
    #[serde(default = "default_trunk")]
    pub trunk_layers: usize,
    #[serde(default = "default_control")]
    pub control_layers: usize,
    #[serde(default = "default_adjoint")]
    pub adjoint_layers: usize,
}

fn default_width() -> usize {
    100
}
fn default_trunk() -> usize {
    5
}
fn default_control() -> usize {
    3
}
fn default_adjoint() -> usize {
    2
}

impl ArchitectureConfig {
    /// The fixed architecture shared by every benchmark: 5 trunk, 3 control
    /// and 2 adjoint hidden layers of 100 units.
    pub fn standard(spatial_dim: usize, n_y: usize, n_u: usize) -> Self {
        ArchitectureConfig {
            spatial_dim,
            n_y,
            n_u,
            hidden_width: default_width(),
            trunk_layers: default_trunk(),
            control_layers: default_control(),
            adjoint_layers: default_adjoint(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_y == 0 || self.n_u == 0 {
            return Err(Error::Config("n_y and n_u must be at least 1".into()));
        }
        if self.hidden_width == 0 || self.trunk_layers == 0 || self.control_layers == 0 || self.adjoint_layers == 0 {
            return Err(Error::Config(
                "every branch needs at least one hidden layer of nonzero width".into(),
            ));
        }
        Ok(())
    }
}

/// Depth and width of the three branches, shared by every benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkShape {
    pub hidden_width: usize,
    pub trunk_layers: usize,
    pub control_layers: usize,
    pub adjoint_layers: usize,
}

impl Default for NetworkShape {
    fn default() -> Self {
        NetworkShape {
            hidden_width: default_width(),
            trunk_layers: default_trunk(),
            control_layers: default_control(),
            adjoint_layers: default_adjoint(),
        }
    }
}

impl NetworkShape {
    pub fn architecture(&self, spatial_dim: usize, n_y: usize, n_u: usize) -> ArchitectureConfig {
        ArchitectureConfig {
            spatial_dim,
            n_y,
            n_u,
            hidden_width: self.hidden_width,
            trunk_layers: self.trunk_layers,
            control_layers: self.control_layers,
            adjoint_layers: self.adjoint_layers,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl LayerShape {
    fn weight_range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.rows * self.cols
    }
    fn bias_range(&self) -> std::ops::Range<usize> {
        let start = self.offset + self.rows * self.cols;
        start..start + self.rows
    }
    pub fn len(&self) -> usize {
        self.rows * (self.cols + 1)
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Offsets of every layer in the flat parameter vector. Each branch lists
/// its hidden layers followed by its head.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkLayout {
    pub trunk: Vec<LayerShape>,
    pub control: Vec<LayerShape>,
    pub adjoint: Vec<LayerShape>,
    pub total: usize,
}

impl NetworkLayout {
    pub fn new(arch: &ArchitectureConfig) -> Self {
        let w = arch.hidden_width;
        let mut offset = 0;
        let mut branch = |first_in: usize, hidden: usize, out: usize| {
            let mut shapes = Vec::with_capacity(hidden + 1);
            for i in 0..=hidden {
                let cols = if i == 0 { first_in } else { w };
                let rows = if i == hidden { out } else { w };
                let shape = LayerShape { offset, rows, cols };
                offset += shape.len();
                shapes.push(shape);
            }
            shapes
        };
        let trunk = branch(1 + arch.spatial_dim, arch.trunk_layers, arch.n_y);
        let control = branch(arch.n_y + w, arch.control_layers, arch.n_u);
        let adjoint = branch(arch.n_y + arch.n_u + w, arch.adjoint_layers, arch.n_y);
        NetworkLayout {
            trunk,
            control,
            adjoint,
            total: offset,
        }
    }

    pub fn layers(&self) -> impl Iterator<Item = &LayerShape> {
        self.trunk.iter().chain(&self.control).chain(&self.adjoint)
    }
}

/// All trainable weights of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPinnParams {
    arch: ArchitectureConfig,
    layout: NetworkLayout,
    data: Vec<f64>,
}

impl ControlPinnParams {
    pub fn zeros(arch: ArchitectureConfig) -> Result<Self> {
        arch.validate()?;
        let layout = NetworkLayout::new(&arch);
        let data = vec![0.0; layout.total];
        Ok(ControlPinnParams { arch, layout, data })
    }

    pub fn from_flat(arch: ArchitectureConfig, data: Vec<f64>) -> Result<Self> {
        let mut p = Self::zeros(arch)?;
        if data.len() != p.data.len() {
            return Err(Error::Shape {
                expected: p.data.len(),
                got: data.len(),
            });
        }
        p.data = data;
        Ok(p)
    }

    pub fn arch(&self) -> &ArchitectureConfig {
        &self.arch
    }

    pub fn layout(&self) -> &NetworkLayout {
        &self.layout
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn weight(&self, shape: &LayerShape) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((shape.rows, shape.cols), &self.data[shape.weight_range()])
            .expect("layer shape matches storage")
    }

    pub fn bias(&self, shape: &LayerShape) -> ArrayView1<'_, f64> {
        ArrayView1::from(&self.data[shape.bias_range()])
    }

    pub fn weight_mut(&mut self, shape: &LayerShape) -> ArrayViewMut2<'_, f64> {
        ArrayViewMut2::from_shape((shape.rows, shape.cols), &mut self.data[shape.weight_range()])
            .expect("layer shape matches storage")
    }
}

/// ChaCha stream reserved for initialization; sampling uses stream = epoch.
pub const INIT_STREAM: u64 = u64::MAX;

/// Glorot-uniform weights, zero biases, reproducible for a fixed seed.
pub fn init_params(arch: ArchitectureConfig, seed: u64) -> Result<ControlPinnParams> {
    let mut params = ControlPinnParams::zeros(arch)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(INIT_STREAM);
    let shapes: Vec<LayerShape> = params.layout.layers().copied().collect();
    for shape in shapes {
        let bound = (6.0 / (shape.rows + shape.cols) as f64).sqrt();
        for w in params.data[shape.weight_range()].iter_mut() {
            let u: f64 = rng.random();
            *w = (2.0 * u - 1.0) * bound;
        }
    }
    Ok(params)
}

/// Output jets of the three heads for a batch, split in fixed chunks.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadJets {
    pub layout: JetLayout,
    pub n: usize,
    pub chunks: Vec<HeadChunk>,
}

/// Stacked `y`, `u`, `lambda` jets for one chunk of points.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadChunk {
    pub n: usize,
    pub y: Array2<f64>,
    pub u: Array2<f64>,
    pub lambda: Array2<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    State,
    Control,
    Adjoint,
}

/// The three head jets at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointJets {
    pub y: Jet<f64>,
    pub u: Jet<f64>,
    pub lambda: Jet<f64>,
}

impl HeadJets {
    fn locate(&self, p: usize) -> (usize, usize) {
        (p / par::CHUNK_POINTS, p % par::CHUNK_POINTS)
    }

    pub fn point(&self, p: usize) -> PointJets {
        let (c, q) = self.locate(p);
        let ch = &self.chunks[c];
        PointJets {
            y: Jet::from_stacked(ch.y.view(), self.layout, ch.n, q),
            u: Jet::from_stacked(ch.u.view(), self.layout, ch.n, q),
            lambda: Jet::from_stacked(ch.lambda.view(), self.layout, ch.n, q),
        }
    }

    pub fn zeros_like(&self) -> Self {
        HeadJets {
            layout: self.layout,
            n: self.n,
            chunks: self
                .chunks
                .iter()
                .map(|ch| HeadChunk {
                    n: ch.n,
                    y: Array2::zeros(ch.y.raw_dim()),
                    u: Array2::zeros(ch.u.raw_dim()),
                    lambda: Array2::zeros(ch.lambda.raw_dim()),
                })
                .collect(),
        }
    }

    /// Adds `entries` (in [`Jet`] order: value, d_dt, d_dx, d2_dx2) to the
    /// slot of `head` at point `p`.
    pub fn add_point(&mut self, p: usize, head: Head, entries: &[f64]) {
        let (c, q) = self.locate(p);
        let layout = self.layout;
        let ch = &mut self.chunks[c];
        let n = ch.n;
        let block = match head {
            Head::State => &mut ch.y,
            Head::Control => &mut ch.u,
            Head::Adjoint => &mut ch.lambda,
        };
        let width = block.nrows();
        let d = layout.spatial_dim;
        let mut it = entries.iter();
        for o in 0..width {
            if let Some(v) = it.next() {
                block[[o, q]] += v;
            }
        }
        if !layout.derivatives {
            return;
        }
        for o in 0..width {
            if let Some(v) = it.next() {
                block[[o, n + q]] += v;
            }
        }
        for o in 0..width {
            for i in 0..d {
                if let Some(v) = it.next() {
                    block[[o, layout.dx(i) * n + q]] += v;
                }
            }
        }
        for o in 0..width {
            for i in 0..d {
                if let Some(v) = it.next() {
                    block[[o, layout.dxx(i) * n + q]] += v;
                }
            }
        }
    }

    /// Head values as an `n x width` matrix.
    pub fn values(&self, head: Head) -> Array2<f64> {
        let blocks: Vec<ArrayView2<f64>> = self
            .chunks
            .iter()
            .map(|ch| {
                let b = match head {
                    Head::State => &ch.y,
                    Head::Control => &ch.u,
                    Head::Adjoint => &ch.lambda,
                };
                b.slice(s![.., 0..ch.n])
            })
            .collect();
        concatenate(Axis(1), &blocks)
            .map(|m| m.reversed_axes().as_standard_layout().to_owned())
            .unwrap_or_else(|_| Array2::zeros((0, 0)))
    }
}

#[derive(Debug, Clone, Default)]
struct BranchCache {
    /// Input of every layer (hidden layers, then head).
    inputs: Vec<Array2<f64>>,
    /// Pre-activations of hidden layers.
    pre: Vec<Array2<f64>>,
}

#[derive(Debug, Clone)]
struct ChunkTape {
    n: usize,
    trunk: BranchCache,
    control: BranchCache,
    adjoint: BranchCache,
}

/// Everything the reverse sweep needs from a recorded forward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    layout: JetLayout,
    chunks: Vec<ChunkTape>,
}

fn check_finite(a: &Array2<f64>, layer: usize) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { layer })
    }
}

/// Runs hidden layers and head of one branch. Returns (head output, cache).
fn branch_forward(
    params: &ControlPinnParams,
    shapes: &[LayerShape],
    input: Array2<f64>,
    layout: JetLayout,
    n: usize,
    first_layer: usize,
    keep: bool,
) -> Result<(Array2<f64>, Array2<f64>, BranchCache)> {
    let hidden = shapes.len() - 1;
    let mut cache = BranchCache::default();
    let mut h = input;
    for (i, shape) in shapes[..hidden].iter().enumerate() {
        let z = dense_forward(params.weight(shape), params.bias(shape), &h, n);
        let next = elu_forward(&z, layout, n);
        check_finite(&next, first_layer + i)?;
        if keep {
            cache.inputs.push(std::mem::replace(&mut h, next));
            cache.pre.push(z);
        } else {
            h = next;
        }
    }
    let head = &shapes[hidden];
    let out = dense_forward(params.weight(head), params.bias(head), &h, n);
    check_finite(&out, first_layer + hidden)?;
    let last_hidden = if keep { h.clone() } else { h };
    if keep {
        cache.inputs.push(last_hidden.clone());
    }
    Ok((out, last_hidden, cache))
}

fn grad_views<'a>(grad: &'a mut [f64], shape: &LayerShape) -> (ArrayViewMut2<'a, f64>, ArrayViewMut1<'a, f64>) {
    let (w, rest) = grad[shape.offset..shape.offset + shape.len()].split_at_mut(shape.rows * shape.cols);
    (
        ArrayViewMut2::from_shape((shape.rows, shape.cols), w).expect("layer shape"),
        ArrayViewMut1::from(rest),
    )
}

/// Reverse sweep through one branch; returns the cotangent of the branch input.
#[allow(clippy::too_many_arguments)]
fn branch_backward(
    params: &ControlPinnParams,
    shapes: &[LayerShape],
    cache: &BranchCache,
    head_bar: &Array2<f64>,
    extra_hidden_bar: Option<&Array2<f64>>,
    grad: &mut [f64],
    layout: JetLayout,
    n: usize,
    need_input: bool,
) -> Option<Array2<f64>> {
    let hidden = shapes.len() - 1;
    let head = &shapes[hidden];
    let (gw, gb) = grad_views(grad, head);
    let mut hbar = dense_backward(params.weight(head), &cache.inputs[hidden], head_bar, n, gw, gb, true)
        .expect("input cotangent requested");
    if let Some(extra) = extra_hidden_bar {
        hbar += extra;
    }
    for i in (0..hidden).rev() {
        let zbar = elu_backward(&cache.pre[i], &hbar, layout, n);
        let shape = &shapes[i];
        let (gw, gb) = grad_views(grad, shape);
        let want = i > 0 || need_input;
        hbar = dense_backward(params.weight(shape), &cache.inputs[i], &zbar, n, gw, gb, want)?;
    }
    Some(hbar)
}

fn chunk_forward(
    params: &ControlPinnParams,
    t: &[f64],
    x: &[f64],
    layout: JetLayout,
    keep: bool,
) -> Result<(HeadChunk, Option<ChunkTape>)> {
    let n = t.len();
    let arch = params.arch;
    let lay = &params.layout;
    let input = input_jet(t, x, layout);
    let (y, trunk_h, trunk) = branch_forward(params, &lay.trunk, input, layout, n, 0, keep)?;
    let control_in = concatenate(Axis(0), &[y.view(), trunk_h.view()]).expect("same columns");
    let base = lay.trunk.len();
    let (u, control_h, control) = branch_forward(params, &lay.control, control_in, layout, n, base, keep)?;
    let adjoint_in = concatenate(Axis(0), &[y.view(), u.view(), control_h.view()]).expect("same columns");
    let base = base + lay.control.len();
    let (lambda, _, adjoint) = branch_forward(params, &lay.adjoint, adjoint_in, layout, n, base, keep)?;
    debug_assert_eq!(y.nrows(), arch.n_y);
    let tape = keep.then_some(ChunkTape {
        n,
        trunk,
        control,
        adjoint,
    });
    Ok((HeadChunk { n, y, u, lambda }, tape))
}

fn check_points(params: &ControlPinnParams, t: &[f64], x: &[f64], layout: JetLayout) -> Result<()> {
    let d = params.arch.spatial_dim;
    if layout.spatial_dim != d {
        return Err(Error::contract(format!(
            "jet layout has spatial_dim {}, network expects {d}",
            layout.spatial_dim
        )));
    }
    if x.len() != t.len() * d {
        return Err(Error::Shape {
            expected: t.len() * d,
            got: x.len(),
        });
    }
    if t.iter().chain(x).any(|v| !v.is_finite()) {
        return Err(Error::contract("non-finite input point"));
    }
    Ok(())
}

/// Forward pass over a batch of points (`x` row-major, `n x spatial_dim`),
/// keeping what the reverse sweep needs.
pub fn record(
    params: &ControlPinnParams,
    t: &[f64],
    x: &[f64],
    layout: JetLayout,
    exec: Execution,
) -> Result<(HeadJets, Tape)> {
    check_points(params, t, x, layout)?;
    let d = params.arch.spatial_dim;
    let ranges = chunk_ranges(t.len());
    let results = par::try_map(exec, &ranges, |r| {
        chunk_forward(params, &t[r.clone()], &x[r.start * d..r.end * d], layout, true)
    })?;
    let (chunks, tapes): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok((
        HeadJets {
            layout,
            n: t.len(),
            chunks,
        },
        Tape {
            layout,
            chunks: tapes.into_iter().map(|t| t.expect("kept")).collect(),
        },
    ))
}

/// Forward pass without a tape.
pub fn evaluate(
    params: &ControlPinnParams,
    t: &[f64],
    x: &[f64],
    layout: JetLayout,
    exec: Execution,
) -> Result<HeadJets> {
    check_points(params, t, x, layout)?;
    let d = params.arch.spatial_dim;
    let ranges = chunk_ranges(t.len());
    let chunks = par::try_map(exec, &ranges, |r| {
        chunk_forward(params, &t[r.clone()], &x[r.start * d..r.end * d], layout, false).map(|(c, _)| c)
    })?;
    Ok(HeadJets {
        layout,
        n: t.len(),
        chunks,
    })
}

/// Values of `(y, u, lambda)` at a single point.
pub fn forward(params: &ControlPinnParams, t: f64, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let layout = JetLayout::values(params.arch.spatial_dim);
    let out = evaluate(params, &[t], x, layout, Execution::Sequential)?;
    let p = out.point(0);
    Ok((p.y.value, p.u.value, p.lambda.value))
}

impl Tape {
    pub fn layout(&self) -> JetLayout {
        self.layout
    }

    /// Reverse sweep: parameter gradient of `<cotangent, outputs>`.
    pub fn backward(
        &self,
        params: &ControlPinnParams,
        cotangent: &HeadJets,
        exec: Execution,
    ) -> Result<ParameterGradient> {
        if cotangent.chunks.len() != self.chunks.len() || cotangent.layout != self.layout {
            return Err(Error::contract("cotangent does not match the recorded batch"));
        }
        let pairs: Vec<(&ChunkTape, &HeadChunk)> = self.chunks.iter().zip(&cotangent.chunks).collect();
        let partials = par::map(exec, &pairs, |(tape, cot)| {
            chunk_backward(params, tape, cot, self.layout)
        });
        let mut total = vec![0.0; params.len()];
        for g in partials {
            for (a, b) in total.iter_mut().zip(&g) {
                *a += b;
            }
        }
        Ok(ParameterGradient(total))
    }
}

fn chunk_backward(params: &ControlPinnParams, tape: &ChunkTape, cot: &HeadChunk, layout: JetLayout) -> Vec<f64> {
    let arch = params.arch;
    let lay = &params.layout;
    let n = tape.n;
    let mut grad = vec![0.0; params.len()];
    let adj_in_bar = branch_backward(
        params,
        &lay.adjoint,
        &tape.adjoint,
        &cot.lambda,
        None,
        &mut grad,
        layout,
        n,
        true,
    )
    .expect("requested");
    let (ny, nu) = (arch.n_y, arch.n_u);
    let mut y_bar = &cot.y + &adj_in_bar.slice(s![0..ny, ..]);
    let u_bar = &cot.u + &adj_in_bar.slice(s![ny..ny + nu, ..]);
    let control_h_bar = adj_in_bar.slice(s![ny + nu.., ..]).to_owned();
    let ctrl_in_bar = branch_backward(
        params,
        &lay.control,
        &tape.control,
        &u_bar,
        Some(&control_h_bar),
        &mut grad,
        layout,
        n,
        true,
    )
    .expect("requested");
    y_bar += &ctrl_in_bar.slice(s![0..ny, ..]);
    let trunk_h_bar = ctrl_in_bar.slice(s![ny.., ..]).to_owned();
    branch_backward(
        params,
        &lay.trunk,
        &tape.trunk,
        &y_bar,
        Some(&trunk_h_bar),
        &mut grad,
        layout,
        n,
        false,
    );
    grad
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(d: usize) -> ArchitectureConfig {
        ArchitectureConfig {
            hidden_width: 7,
            ..ArchitectureConfig::standard(d, 2, 1)
        }
    }

    #[test]
    fn layout_counts() {
        let arch = ArchitectureConfig::standard(1, 1, 1);
        let l = NetworkLayout::new(&arch);
        assert_eq!(l.trunk.len(), 6);
        assert_eq!(l.control.len(), 4);
        assert_eq!(l.adjoint.len(), 3);
        assert_eq!(l.trunk[0].cols, 2);
        assert_eq!(l.control[0].cols, 101);
        assert_eq!(l.adjoint[0].cols, 102);
        assert_eq!(l.adjoint.last().unwrap().rows, 1);
        let expected = (2 * 100 + 100)
            + 4 * (100 * 100 + 100)
            + (100 + 1)
            + (101 * 100 + 100)
            + 2 * (100 * 100 + 100)
            + (100 + 1)
            + (102 * 100 + 100)
            + (100 * 100 + 100)
            + (100 + 1);
        assert_eq!(l.total, expected);
    }

    #[test]
    fn same_seed_same_params() {
        let a = init_params(small(1), 11).unwrap();
        let b = init_params(small(1), 11).unwrap();
        let c = init_params(small(1), 12).unwrap();
        assert_eq!(a.as_flat(), b.as_flat());
        assert_ne!(a.as_flat(), c.as_flat());
    }

    #[test]
    fn glorot_bounds_hold() {
        let p = init_params(ArchitectureConfig::standard(1, 1, 1), 3).unwrap();
        let layout = p.layout().clone();
        for shape in layout.layers() {
            let bound = (6.0 / (shape.rows + shape.cols) as f64).sqrt();
            assert!(p.weight(shape).iter().all(|w| w.abs() <= bound));
            assert!(p.bias(shape).iter().all(|&b| b == 0.0));
        }
        // a 100x100 layer should use most of its range
        let hidden = &layout.trunk[2];
        let max = p.weight(hidden).iter().fold(0.0f64, |m, w| m.max(w.abs()));
        assert!(max > 0.9 * (6.0f64 / 200.0).sqrt());
    }

    #[test]
    fn zero_network_outputs_head_biases() {
        let p = ControlPinnParams::zeros(small(2)).unwrap();
        let (y, u, l) = forward(&p, 0.3, &[0.1, 0.2]).unwrap();
        assert_eq!(y, vec![0.0, 0.0]);
        assert_eq!(u, vec![0.0]);
        assert_eq!(l, vec![0.0, 0.0]);
    }

    #[test]
    fn ode_network_takes_time_only() {
        let p = init_params(ArchitectureConfig::standard(0, 1, 1), 5).unwrap();
        let (y, u, l) = forward(&p, 0.5, &[]).unwrap();
        assert_eq!((y.len(), u.len(), l.len()), (1, 1, 1));
        assert!(forward(&p, 0.5, &[0.1]).is_err());
    }

    #[test]
    fn trunk_perturbation_reaches_control_and_adjoint() {
        let p = init_params(ArchitectureConfig::standard(1, 1, 1), 9).unwrap();
        let (_, u0, l0) = forward(&p, 0.4, &[0.6]).unwrap();
        let mut q = p.clone();
        let shape = q.layout().trunk[1];
        q.weight_mut(&shape)[[3, 4]] += 1e-3;
        let (_, u1, l1) = forward(&q, 0.4, &[0.6]).unwrap();
        assert!((u1[0] - u0[0]).abs() > 0.0);
        assert!((l1[0] - l0[0]).abs() > 0.0);
    }

    #[test]
    fn nonfinite_input_rejected() {
        let p = init_params(small(1), 1).unwrap();
        assert!(forward(&p, f64::NAN, &[0.0]).is_err());
    }

    #[test]
    fn overflow_reports_layer() {
        let mut p = init_params(small(1), 1).unwrap();
        let shape = p.layout().trunk[0];
        p.weight_mut(&shape).fill(1e308);
        match forward(&p, 1.0, &[1.0]) {
            Err(Error::NonFinite { layer }) => assert!(layer <= 1),
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn chunking_does_not_change_values() {
        let p = init_params(small(1), 4).unwrap();
        let n = 300;
        let t: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let x: Vec<f64> = (0..n).map(|i| ((i * 7) % n) as f64 / n as f64).collect();
        let out = evaluate(&p, &t, &x, JetLayout::full(1), Execution::Sequential).unwrap();
        for &i in &[0, 127, 128, 299] {
            let single = evaluate(&p, &t[i..=i], &x[i..=i], JetLayout::full(1), Execution::Sequential).unwrap();
            assert_eq!(out.point(i), single.point(0));
        }
    }
}
