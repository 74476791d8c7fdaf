//! Sampled fields on regular grids and their CSV form.
//!
//! ```text
//! # field=u axes=t,x t=0:1:1001 x=0:1:1001
//! <values for t index 0, remaining axes flattened row-major>
//! <values for t index 1>
//! ...
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Uniform axis with `n` nodes from `start` to `end` inclusive.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub start: f64,
    pub end: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(name: impl Into<String>, start: f64, end: f64, n: usize) -> Result<Self> {
        let name = name.into();
        if n < 2 || !(start < end) || !start.is_finite() || !end.is_finite() {
            return Err(Error::contract(format!("axis {name}: need n >= 2 and start < end")));
        }
        if name.is_empty() || name.contains([',', ' ', ':', '=']) {
            return Err(Error::contract(format!("axis name {name:?} is not a plain word")));
        }
        Ok(Axis { name, start, end, n })
    }

    pub fn step(&self) -> f64 {
        (self.end - self.start) / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.end
        } else {
            self.start + i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Cell index and fractional offset of `v`, clamped to the axis.
    pub fn locate(&self, v: f64) -> (usize, f64) {
        let s = ((v - self.start) / self.step()).clamp(0.0, (self.n - 1) as f64);
        let i = (s.floor() as usize).min(self.n - 2);
        (i, s - i as f64)
    }

    /// Composite trapezoid weights.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.n)
            .map(|i| if i == 0 || i + 1 == self.n { 0.5 * h } else { h })
            .collect()
    }

    fn spec(&self) -> String {
        format!("{}={:e}:{:e}:{}", self.name, self.start, self.end, self.n)
    }
}

/// Values on the tensor product of `axes`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub name: String,
    pub axes: Vec<Axis>,
    pub values: Vec<f64>,
}

/// The exported control `u(t, x)`; interpolated multilinearly.
pub type ControlField = Field;

impl Field {
    pub fn new(name: impl Into<String>, axes: Vec<Axis>, values: Vec<f64>) -> Result<Self> {
        let f = Field {
            name: name.into(),
            axes,
            values,
        };
        if f.axes.is_empty() {
            return Err(Error::contract("field needs at least one axis"));
        }
        if f.values.len() != f.len() {
            return Err(Error::Shape {
                expected: f.len(),
                got: f.values.len(),
            });
        }
        if let Some(i) = f.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::contract(format!(
                "field {} has a non-finite value at {i}",
                f.name
            )));
        }
        Ok(f)
    }

    /// Samples `f` at every grid node.
    pub fn from_fn(name: impl Into<String>, axes: Vec<Axis>, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self> {
        let nodes: Vec<Vec<f64>> = axes.iter().map(Axis::nodes).collect();
        let total: usize = axes.iter().map(|a| a.n).product();
        let mut values = Vec::with_capacity(total);
        let mut idx = vec![0usize; axes.len()];
        let mut point = vec![0.0; axes.len()];
        for _ in 0..total {
            for (k, &i) in idx.iter().enumerate() {
                point[k] = nodes[k][i];
            }
            values.push(f(&point));
            for k in (0..axes.len()).rev() {
                idx[k] += 1;
                if idx[k] < axes[k].n {
                    break;
                }
                idx[k] = 0;
            }
        }
        Field::new(name, axes, values)
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.axes.len()];
        for k in (0..self.axes.len().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.axes[k + 1].n;
        }
        s
    }

    /// Values on the slice where the first axis has index `i`.
    pub fn slice(&self, i: usize) -> &[f64] {
        let w = self.len() / self.axes[0].n;
        &self.values[i * w..(i + 1) * w]
    }

    /// Multilinear interpolation, clamped to the grid.
    pub fn interpolate(&self, point: &[f64]) -> f64 {
        let strides = self.strides();
        let cells: Vec<(usize, f64)> = self.axes.iter().zip(point).map(|(a, &v)| a.locate(v)).collect();
        let mut acc = 0.0;
        for corner in 0..(1usize << cells.len()) {
            let mut w = 1.0;
            let mut off = 0;
            for (k, &(i, f)) in cells.iter().enumerate() {
                if corner >> k & 1 == 1 {
                    w *= f;
                    off += (i + 1) * strides[k];
                } else {
                    w *= 1.0 - f;
                    off += i * strides[k];
                }
            }
            if w != 0.0 {
                acc += w * self.values[off];
            }
        }
        acc
    }

    /// Trapezoid mean of `h(value)` over the grid's box.
    pub fn mean_of(&self, h: impl Fn(f64) -> f64) -> f64 {
        let weights: Vec<Vec<f64>> = self.axes.iter().map(Axis::trapezoid_weights).collect();
        let measure: f64 = self.axes.iter().map(|a| a.end - a.start).product();
        let strides = self.strides();
        let mut acc = 0.0;
        for (off, v) in self.values.iter().enumerate() {
            let mut w = 1.0;
            for (k, s) in strides.iter().enumerate() {
                w *= weights[k][(off / s) % self.axes[k].n];
            }
            acc += w * h(*v);
        }
        acc / measure
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let names: Vec<&str> = self.axes.iter().map(|a| a.name.as_str()).collect();
        let specs: Vec<String> = self.axes.iter().map(Axis::spec).collect();
        let _ = writeln!(
            out,
            "# field={} axes={} {}",
            self.name,
            names.join(","),
            specs.join(" ")
        );
        let w = self.len() / self.axes[0].n;
        for row in self.values.chunks(w) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, origin: &str) -> Result<Self> {
        let bad = |line: usize, m: String| Error::Format {
            path: origin.into(),
            message: format!("line {line}: {m}"),
        };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad(1, "empty file".into()))?;
        let header = header
            .strip_prefix("# ")
            .ok_or_else(|| bad(1, "expected a '# field=...' header".into()))?;
        let mut name = None;
        let mut order: Vec<String> = Vec::new();
        let mut axis_specs = std::collections::BTreeMap::new();
        for item in header.split_whitespace() {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| bad(1, format!("malformed item {item:?}")))?;
            match k {
                "field" => name = Some(v.to_string()),
                "axes" => order = v.split(',').map(str::to_string).collect(),
                _ => {
                    axis_specs.insert(k.to_string(), v.to_string());
                }
            }
        }
        let name = name.ok_or_else(|| bad(1, "missing field=".into()))?;
        let mut axes = Vec::new();
        for a in &order {
            let spec = axis_specs
                .remove(a)
                .ok_or_else(|| bad(1, format!("missing spec for axis {a}")))?;
            let parts: Vec<&str> = spec.split(':').collect();
            if parts.len() != 3 {
                return Err(bad(1, format!("axis {a}: expected start:end:n")));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| bad(1, format!("axis {a}: {e}")));
            let n = parts[2]
                .parse::<usize>()
                .map_err(|e| bad(1, format!("axis {a}: {e}")))?;
            axes.push(Axis::new(a.clone(), num(parts[0])?, num(parts[1])?, n).map_err(|e| bad(1, e.to_string()))?);
        }
        if let Some(k) = axis_specs.keys().next() {
            return Err(bad(1, format!("unknown header key {k:?}")));
        }
        if axes.is_empty() {
            return Err(bad(1, "no axes".into()));
        }
        let width: usize = axes[1..].iter().map(|a| a.n).product();
        let mut values = Vec::with_capacity(width * axes[0].n);
        let mut rows = 0;
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let before = values.len();
            for cell in line.split(',') {
                values.push(
                    cell.trim()
                        .parse::<f64>()
                        .map_err(|e| bad(i + 2, format!("{cell:?}: {e}")))?,
                );
            }
            if values.len() - before != width {
                return Err(bad(
                    i + 2,
                    format!("expected {width} values, found {}", values.len() - before),
                ));
            }
            rows += 1;
        }
        if rows != axes[0].n {
            return Err(bad(rows + 1, format!("expected {} rows, found {rows}", axes[0].n)));
        }
        Field::new(name, axes, values).map_err(|e| bad(0, e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Field::from_csv(&text, &path.display().to_string())
    }
}
