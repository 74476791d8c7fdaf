//! Finite-difference oracles shared by the gradient tests and the
//! acceptance run.

#![allow(dead_code)]

use control_pinn::autodiff::{jet_eval, JetLayout};
use control_pinn::loss::{evaluate, evaluate_with_gradient, LossWeights};
use control_pinn::network::{init_params, ArchitectureConfig, ControlPinnParams};
use control_pinn::par::Execution;
use control_pinn::problems::{ControlProblem, Problem, ProblemSpec};
use control_pinn::sampler::{sample_epoch, BatchSizes};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn problems() -> Vec<Problem> {
    ["analytical", "heat", "predator_prey"]
        .iter()
        .map(|id| {
            let spec: ProblemSpec = toml::from_str(&format!("id = \"{id}\"")).unwrap();
            Problem::from_spec(&spec).unwrap()
        })
        .collect()
}

pub fn arch_for(p: &Problem) -> ArchitectureConfig {
    ArchitectureConfig::standard(p.domain().spatial_dim(), p.n_state(), p.n_control())
}

fn unit_direction(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / norm).collect()
}

fn shifted(params: &ControlPinnParams, v: &[f64], h: f64) -> ControlPinnParams {
    let mut p = params.clone();
    for (a, d) in p.as_flat_mut().iter_mut().zip(v) {
        *a += h * d;
    }
    p
}

fn rel(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

#[derive(Debug, Default, Clone, Copy)]
pub struct GradientGap {
    pub worst: f64,
    pub directions: usize,
    pub drawn: usize,
}

/// Worst relative gap between the loss gradient projected on random unit
/// directions and the central difference of the loss along them. The loss
/// holds second derivatives, so its gradient jumps where a pre-activation
/// crosses an ELU kink; directions whose h and h/2 stencils disagree are
/// redrawn, at most `4 * directions` draws.
pub fn gradient_gap(p: &Problem, directions: usize) -> GradientGap {
    let sizes = BatchSizes {
        interior: 8,
        initial: 8,
        terminal: 8,
        boundary: 8,
    };
    let w = LossWeights::default();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let params = init_params(arch_for(p), 17).unwrap();
    let batch = sample_epoch(p.domain(), &sizes, 3, 0).unwrap();
    let (_, g) = evaluate_with_gradient(&params, p, &batch, &w, Execution::Sequential).unwrap();
    let loss = |q: &ControlPinnParams| evaluate(q, p, &batch, &w, Execution::Sequential).unwrap().total;
    let mut gap = GradientGap::default();
    while gap.directions < directions && gap.drawn < 4 * directions {
        gap.drawn += 1;
        let v = unit_direction(params.len(), &mut rng);
        let fd = |h: f64| (loss(&shifted(&params, &v, h)) - loss(&shifted(&params, &v, -h))) / (2.0 * h);
        let (a, b) = (fd(1e-4), fd(5e-5));
        if rel(a, b, 1e-12) > 1e-6 {
            continue;
        }
        gap.directions += 1;
        let an: f64 = g.as_slice().iter().zip(&v).map(|(a, b)| a * b).sum();
        gap.worst = gap.worst.max(rel(a, an, 1e-12));
    }
    gap
}

// Second differences straddling an ELU kink (z = 0, where ELU'' jumps) are
// not valid oracles; points where the h and h/2 stencils disagree are redrawn.
fn second_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> Option<f64> {
    let d = |h: f64| (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
    let (a, b) = (d(h), d(h / 2.0));
    ((a - b).abs() <= 1e-6 * a.abs().max(1e-2)).then_some(a)
}

#[derive(Debug, Default, Clone, Copy)]
pub struct JetGaps {
    pub first: f64,
    pub second: f64,
    pub points: usize,
    pub drawn: usize,
}

/// Worst relative gaps of the time and space partials (first order) and the
/// pure second partials against central differences at `points` smooth
/// random points.
pub fn jet_gaps(p: &Problem, points: usize) -> JetGaps {
    let d = p.domain().spatial_dim();
    let params = init_params(arch_for(p), 23).unwrap();
    let val = |t: f64, x: &[f64]| jet_eval(&params, t, x, JetLayout::values(d)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut gaps = JetGaps::default();
    while gaps.points < points && gaps.drawn < 4 * points {
        gaps.drawn += 1;
        let t: f64 = rng.random();
        let x: Vec<f64> = (0..d).map(|_| rng.random()).collect();
        let jets = jet_eval(&params, t, &x, JetLayout::full(d)).unwrap();
        let mut second = Vec::new();
        let mut smooth = true;
        for i in 0..d {
            for o in 0..jets.y.width() {
                let along = |s: f64| {
                    let mut xs = x.clone();
                    xs[i] = s;
                    val(t, &xs).y.value[o]
                };
                match second_difference(along, x[i], 1e-3) {
                    Some(fd) => second.push(rel(jets.y.dxx(o, i), fd, 1e-3)),
                    None => smooth = false,
                }
            }
        }
        if !smooth {
            continue;
        }
        gaps.points += 1;
        gaps.second = second.into_iter().fold(gaps.second, f64::max);
        let h = 1e-4;
        let (pt, mt) = (val(t + h, &x), val(t - h, &x));
        for (head, ph, mh) in [(&jets.y, &pt.y, &mt.y), (&jets.lambda, &pt.lambda, &mt.lambda)] {
            for o in 0..head.width() {
                let fd = (ph.value[o] - mh.value[o]) / (2.0 * h);
                gaps.first = gaps.first.max(rel(head.dt(o), fd, 1e-3));
            }
        }
        for i in 0..d {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let (pp, mm) = (val(t, &xp), val(t, &xm));
            for o in 0..jets.y.width() {
                let fd = (pp.y.value[o] - mm.y.value[o]) / (2.0 * h);
                gaps.first = gaps.first.max(rel(jets.y.dx(o, i), fd, 1e-3));
            }
        }
    }
    gaps
}
