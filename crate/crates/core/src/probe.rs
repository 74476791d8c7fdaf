//! Fixed evaluation grids and the errors of a network against a problem's
//! reference solution on them.

use crate::autodiff::JetLayout;
use crate::error::Result;
use crate::network::{self, ControlPinnParams, Head};
use crate::par::Execution;
use crate::problems::{ControlProblem, Domain};
use crate::validators::{relative_error, Axis, Field};

/// Tensor grid over `[t0, tf]` and the spatial box, time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeGrid {
    pub axes: Vec<Axis>,
}

const SPACE_NAMES: [&str; 3] = ["x1", "x2", "x3"];

impl ProbeGrid {
    /// 1001 times for ODEs, 101 x 101 for one spatial dimension,
    /// 11 x 51 x 51 for two.
    pub fn standard(domain: &Domain) -> Result<Self> {
        let d = domain.spatial_dim();
        let (nt, nx) = match d {
            0 => (1001, 0),
            1 => (101, 101),
            _ => (11, 51),
        };
        ProbeGrid::uniform(domain, nt, nx)
    }

    pub fn uniform(domain: &Domain, nt: usize, nx: usize) -> Result<Self> {
        let d = domain.spatial_dim();
        let mut axes = vec![Axis::new("t", domain.t0, domain.tf, nt)?];
        for (i, &space) in SPACE_NAMES.iter().enumerate().take(d) {
            let name = if d == 1 { "x" } else { space };
            axes.push(Axis::new(name, domain.lower[i], domain.upper[i], nx)?);
        }
        Ok(ProbeGrid { axes })
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn times(&self) -> Vec<f64> {
        self.axes[0].nodes()
    }

    /// Flattened `(t, x)` coordinates in field order.
    pub fn points(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.axes.len() - 1;
        let mut t = Vec::with_capacity(self.len());
        let mut x = Vec::with_capacity(self.len() * d);
        let _ = Field::from_fn("_", self.axes.clone(), |p| {
            t.push(p[0]);
            x.extend_from_slice(&p[1..]);
            0.0
        });
        (t, x)
    }
}

fn component_names(base: &str, n: usize) -> Vec<String> {
    if n == 1 {
        vec![base.to_string()]
    } else {
        (1..=n).map(|i| format!("{base}{i}")).collect()
    }
}

/// Network or reference values of every head on a probe grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeFields {
    pub y: Vec<Field>,
    pub u: Vec<Field>,
    pub lambda: Vec<Field>,
}

impl ProbeFields {
    pub fn all(&self) -> impl Iterator<Item = &Field> {
        self.y.iter().chain(&self.u).chain(&self.lambda)
    }
}

pub fn network_fields(params: &ControlPinnParams, grid: &ProbeGrid, exec: Execution) -> Result<ProbeFields> {
    let arch = params.arch();
    let (t, x) = grid.points();
    let out = network::evaluate(params, &t, &x, JetLayout::values(arch.spatial_dim), exec)?;
    let split = |head: Head, base: &str| -> Result<Vec<Field>> {
        let v = out.values(head);
        component_names(base, v.ncols())
            .into_iter()
            .enumerate()
            .map(|(c, name)| Field::new(name, grid.axes.clone(), v.column(c).to_vec()))
            .collect()
    };
    Ok(ProbeFields {
        y: split(Head::State, "y")?,
        u: split(Head::Control, "u")?,
        lambda: split(Head::Adjoint, "lambda")?,
    })
}

/// Reference fields for the heads the problem has closed forms for; heads
/// without a reference come back empty.
pub fn reference_fields<P: ControlProblem>(problem: &P, grid: &ProbeGrid) -> Result<ProbeFields> {
    let (t, x) = grid.points();
    let d = grid.axes.len() - 1;
    let refs: Vec<_> = (0..t.len())
        .map(|p| problem.reference(t[p], &x[p * d..(p + 1) * d]))
        .collect();
    let collect = |pick: &dyn Fn(&crate::problems::Reference) -> Option<&Vec<f64>>, base: &str, n: usize| {
        if refs.iter().any(|r| r.as_ref().and_then(pick).is_none()) {
            return Ok(Vec::new());
        }
        component_names(base, n)
            .into_iter()
            .enumerate()
            .map(|(c, name)| {
                let v = refs
                    .iter()
                    .map(|r| pick(r.as_ref().expect("checked")).expect("checked")[c])
                    .collect();
                Field::new(format!("{name}_ref"), grid.axes.clone(), v)
            })
            .collect::<Result<Vec<_>>>()
    };
    Ok(ProbeFields {
        y: collect(&|r| r.y.as_ref(), "y", problem.n_state())?,
        u: collect(&|r| r.u.as_ref(), "u", problem.n_control())?,
        lambda: collect(&|r| r.lambda.as_ref(), "lambda", problem.n_state())?,
    })
}

/// Relative L2 errors over the whole grid, one per referenced component,
/// in y, u, lambda order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeErrors {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl ProbeErrors {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }
}

/// Column names `err_<component>` the probe produces for these references.
pub fn error_names(reference: &ProbeFields) -> Vec<String> {
    reference
        .all()
        .map(|f| format!("err_{}", f.name.trim_end_matches("_ref")))
        .collect()
}

pub fn probe_errors(net: &ProbeFields, reference: &ProbeFields) -> Result<ProbeErrors> {
    let mut values = Vec::new();
    for (nets, refs) in [
        (&net.y, &reference.y),
        (&net.u, &reference.u),
        (&net.lambda, &reference.lambda),
    ] {
        for (r, n) in refs.iter().zip(nets) {
            values.push(relative_error(&n.values, &r.values)?);
        }
    }
    Ok(ProbeErrors {
        names: error_names(reference),
        values,
    })
}

/// Relative error on each time slice of the grid.
pub fn error_by_time(net: &Field, reference: &Field) -> Result<Vec<(f64, f64)>> {
    let times = reference.axes[0].nodes();
    times
        .iter()
        .enumerate()
        .map(|(i, &t)| Ok((t, relative_error(net.slice(i), reference.slice(i))?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{init_params, ArchitectureConfig};
    use crate::problems::{AnalyticalProblem, PredatorPreyOptions, PredatorPreyProblem};

    #[test]
    fn standard_grid_sizes() {
        assert_eq!(ProbeGrid::standard(&Domain::unit(0)).unwrap().len(), 1001);
        assert_eq!(ProbeGrid::standard(&Domain::unit(1)).unwrap().len(), 101 * 101);
        assert_eq!(ProbeGrid::standard(&Domain::unit(2)).unwrap().len(), 11 * 51 * 51);
    }

    #[test]
    fn points_are_time_major() {
        let g = ProbeGrid::uniform(&Domain::unit(1), 3, 2).unwrap();
        let (t, x) = g.points();
        assert_eq!(t, vec![0.0, 0.0, 0.5, 0.5, 1.0, 1.0]);
        assert_eq!(x, vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn reference_errors_vanish_against_themselves() {
        let p = AnalyticalProblem::new();
        let g = ProbeGrid::standard(p.domain()).unwrap();
        let r = reference_fields(&p, &g).unwrap();
        let strip = |fs: &[Field]| fs.to_vec();
        let net = ProbeFields {
            y: strip(&r.y),
            u: strip(&r.u),
            lambda: strip(&r.lambda),
        };
        let e = probe_errors(&net, &r).unwrap();
        assert_eq!(e.names, vec!["err_y", "err_u", "err_lambda"]);
        assert!(e.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn missing_references_are_skipped() {
        let p = PredatorPreyProblem::new(PredatorPreyOptions::default()).unwrap();
        let g = ProbeGrid::uniform(p.domain(), 3, 5).unwrap();
        let r = reference_fields(&p, &g).unwrap();
        assert_eq!(error_names(&r), vec!["err_y1", "err_y2"]);
        let params = init_params(ArchitectureConfig::standard(2, 2, 1), 0).unwrap();
        let net = network_fields(&params, &g, Execution::Sequential).unwrap();
        assert_eq!(net.y.len(), 2);
        assert_eq!(net.u.len(), 1);
        let by_t = error_by_time(&net.y[1], &r.y[1]).unwrap();
        assert_eq!(by_t.len(), 3);
    }
}
