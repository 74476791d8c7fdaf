//! Second-order input jets.
//!
//! A batch of jets is stored "stacked": one row per feature and one column
//! block per channel, so a dense layer is a single matrix product over all
//! channels. Channel order is `value, d/dt, d/dx_1..d/dx_d, d2/dx_1^2..d2/dx_d^2`;
//! value-only batches carry just the first block.

use ndarray::{s, Array2, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2};

use super::elu::elu_derivs;
use super::Scalar;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JetLayout {
    pub spatial_dim: usize,
    pub derivatives: bool,
}

impl JetLayout {
    pub fn values(spatial_dim: usize) -> Self {
        JetLayout {
            spatial_dim,
            derivatives: false,
        }
    }

    pub fn full(spatial_dim: usize) -> Self {
        JetLayout {
            spatial_dim,
            derivatives: true,
        }
    }

    pub fn channels(&self) -> usize {
        if self.derivatives {
            2 + 2 * self.spatial_dim
        } else {
            1
        }
    }

    pub const VALUE: usize = 0;
    pub const DT: usize = 1;

    pub fn dx(&self, i: usize) -> usize {
        debug_assert!(self.derivatives && i < self.spatial_dim);
        2 + i
    }

    pub fn dxx(&self, i: usize) -> usize {
        debug_assert!(self.derivatives && i < self.spatial_dim);
        2 + self.spatial_dim + i
    }
}

/// One network head's output and its requested input partials at one point.
///
/// `d_dx` and `d2_dx2` are row-major `width x spatial_dim`; only pure second
/// partials are kept. Value-only jets leave the derivative vectors empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet<S> {
    pub spatial_dim: usize,
    pub value: Vec<S>,
    pub d_dt: Vec<S>,
    pub d_dx: Vec<S>,
    pub d2_dx2: Vec<S>,
}

impl<S: Scalar> Jet<S> {
    pub fn constant(spatial_dim: usize, value: Vec<S>) -> Self {
        Jet {
            spatial_dim,
            value,
            d_dt: Vec::new(),
            d_dx: Vec::new(),
            d2_dx2: Vec::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.value.len()
    }

    pub fn has_derivatives(&self) -> bool {
        self.d_dt.len() == self.value.len()
    }

    pub fn require_derivatives(&self, what: &str) -> Result<()> {
        if self.has_derivatives() {
            Ok(())
        } else {
            Err(Error::contract(format!("{what} needs a jet with derivatives")))
        }
    }

    pub fn dt(&self, o: usize) -> S {
        self.d_dt[o]
    }

    pub fn dx(&self, o: usize, i: usize) -> S {
        self.d_dx[o * self.spatial_dim + i]
    }

    pub fn dxx(&self, o: usize, i: usize) -> S {
        self.d2_dx2[o * self.spatial_dim + i]
    }

    pub fn laplacian(&self, o: usize) -> S {
        let mut acc = S::zero();
        for i in 0..self.spatial_dim {
            acc += self.dxx(o, i);
        }
        acc
    }

    /// Number of scalar entries (value plus stored partials).
    pub fn len(&self) -> usize {
        self.value.len() + self.d_dt.len() + self.d_dx.len() + self.d2_dx2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

impl Jet<f64> {
    /// Extracts point `p` from a stacked block with `n` points.
    pub fn from_stacked(block: ArrayView2<f64>, layout: JetLayout, n: usize, p: usize) -> Self {
        let width = block.nrows();
        let d = layout.spatial_dim;
        let value = (0..width).map(|o| block[[o, p]]).collect();
        if !layout.derivatives {
            return Jet::constant(d, value);
        }
        let d_dt = (0..width).map(|o| block[[o, n + p]]).collect();
        let mut d_dx = Vec::with_capacity(width * d);
        let mut d2_dx2 = Vec::with_capacity(width * d);
        for o in 0..width {
            for i in 0..d {
                d_dx.push(block[[o, layout.dx(i) * n + p]]);
                d2_dx2.push(block[[o, layout.dxx(i) * n + p]]);
            }
        }
        Jet {
            spatial_dim: d,
            value,
            d_dt,
            d_dx,
            d2_dx2,
        }
    }
}

/// `c = a b`, or `c += a b` when `accumulate`. Any strides.
///
/// The product is handed to `gemm` transposed (`c^T = b^T a^T`) so that a
/// row-major `c` is the column-major destination its kernels prefer.
pub(crate) fn matmul_into(a: ArrayView2<f64>, b: ArrayView2<f64>, mut c: ArrayViewMut2<f64>, accumulate: bool) {
    let (m, k) = a.dim();
    let n = b.ncols();
    assert_eq!(b.nrows(), k, "inner dimensions");
    assert_eq!(c.dim(), (m, n), "output shape");
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        if !accumulate {
            c.fill(0.0);
        }
        return;
    }
    let (sa, sb, sc) = (a.strides().to_vec(), b.strides().to_vec(), c.strides().to_vec());
    // SAFETY: the three views are valid for the shapes asserted above and
    // the strides ndarray reports; `c` is a unique borrow that does not
    // alias `a` or `b`.
    unsafe {
        gemm::gemm(
            n,
            m,
            k,
            c.as_mut_ptr(),
            sc[0],
            sc[1],
            accumulate,
            b.as_ptr(),
            sb[0],
            sb[1],
            a.as_ptr(),
            sa[0],
            sa[1],
            if accumulate { 1.0 } else { 0.0 },
            1.0,
            false,
            false,
            false,
            gemm::Parallelism::None,
        );
    }
}

/// `z = W a + b`, with the bias added to the value block only.
pub(crate) fn dense_forward(
    weight: ArrayView2<f64>,
    bias: ArrayView1<f64>,
    input: &Array2<f64>,
    n: usize,
) -> Array2<f64> {
    let mut z = Array2::zeros((weight.nrows(), input.ncols()));
    matmul_into(weight, input.view(), z.view_mut(), false);
    for (mut row, b) in z.rows_mut().into_iter().zip(bias) {
        row.slice_mut(s![0..n]).iter_mut().for_each(|v| *v += b);
    }
    z
}

/// Accumulates `dW += zbar a^T`, `db += sum_p zbar_value` and returns
/// `W^T zbar` when the input cotangent is needed.
pub(crate) fn dense_backward(
    weight: ArrayView2<f64>,
    input: &Array2<f64>,
    zbar: &Array2<f64>,
    n: usize,
    grad_weight: ArrayViewMut2<f64>,
    mut grad_bias: ArrayViewMut1<f64>,
    need_input: bool,
) -> Option<Array2<f64>> {
    matmul_into(zbar.view(), input.t(), grad_weight, true);
    for (gb, row) in grad_bias.iter_mut().zip(zbar.rows()) {
        *gb += row.slice(s![0..n]).iter().sum::<f64>();
    }
    need_input.then(|| {
        let mut out = Array2::zeros((weight.ncols(), zbar.ncols()));
        matmul_into(weight.t(), zbar.view(), out.view_mut(), false);
        out
    })
}

/// Pushes a stacked jet through ELU.
pub(crate) fn elu_forward(z: &Array2<f64>, layout: JetLayout, n: usize) -> Array2<f64> {
    let mut h = Array2::zeros(z.raw_dim());
    let d = layout.spatial_dim;
    for (zr, mut hr) in z.rows().into_iter().zip(h.rows_mut()) {
        let zr = zr.to_slice().expect("standard layout");
        let hr = hr.as_slice_mut().expect("standard layout");
        if !layout.derivatives {
            for (hv, &zv) in hr[..n].iter_mut().zip(&zr[..n]) {
                *hv = elu_derivs(zv)[0];
            }
            continue;
        }
        for p in 0..n {
            let [f, f1, f2, _] = elu_derivs(zr[p]);
            hr[p] = f;
            hr[n + p] = f1 * zr[n + p];
            for i in 0..d {
                let (cx, cxx) = (layout.dx(i) * n + p, layout.dxx(i) * n + p);
                let zx = zr[cx];
                hr[cx] = f1 * zx;
                hr[cxx] = f2 * zx * zx + f1 * zr[cxx];
            }
        }
    }
    h
}

/// Reverse sweep of [`elu_forward`]: cotangent of the pre-activation jet.
pub(crate) fn elu_backward(z: &Array2<f64>, hbar: &Array2<f64>, layout: JetLayout, n: usize) -> Array2<f64> {
    let mut zbar = Array2::zeros(z.raw_dim());
    let d = layout.spatial_dim;
    for ((zr, hr), mut gr) in z.rows().into_iter().zip(hbar.rows()).zip(zbar.rows_mut()) {
        let zr = zr.to_slice().expect("standard layout");
        let hr = hr.to_slice().expect("standard layout");
        let gr = gr.as_slice_mut().expect("standard layout");
        if !layout.derivatives {
            for p in 0..n {
                gr[p] = elu_derivs(zr[p])[1] * hr[p];
            }
            continue;
        }
        for p in 0..n {
            let [_, f1, f2, f3] = elu_derivs(zr[p]);
            let zt = zr[n + p];
            let ht = hr[n + p];
            gr[n + p] = f1 * ht;
            let mut acc2 = zt * ht;
            let mut acc3 = 0.0;
            for i in 0..d {
                let (cx, cxx) = (layout.dx(i) * n + p, layout.dxx(i) * n + p);
                let (zx, zxx) = (zr[cx], zr[cxx]);
                let (hx, hxx) = (hr[cx], hr[cxx]);
                gr[cx] = f1 * hx + 2.0 * f2 * zx * hxx;
                gr[cxx] = f1 * hxx;
                acc2 += zx * hx + zxx * hxx;
                acc3 += zx * zx * hxx;
            }
            gr[p] = f1 * hr[p] + f2 * acc2 + f3 * acc3;
        }
    }
    zbar
}

/// Builds the stacked jet of the raw inputs `(t, x_1..x_d)`.
pub(crate) fn input_jet(t: &[f64], x: &[f64], layout: JetLayout) -> Array2<f64> {
    let n = t.len();
    let d = layout.spatial_dim;
    let mut a = Array2::zeros((1 + d, layout.channels() * n));
    for p in 0..n {
        a[[0, p]] = t[p];
        for i in 0..d {
            a[[1 + i, p]] = x[p * d + i];
        }
        if layout.derivatives {
            a[[0, n + p]] = 1.0;
            for i in 0..d {
                a[[1 + i, layout.dx(i) * n + p]] = 1.0;
            }
        }
    }
    a
}
