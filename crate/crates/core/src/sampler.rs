//! Fresh uniform collocation points every epoch.
//!
//! The generator is ChaCha8 (`rand_chacha`), a counter-based stream cipher
//! whose output is fixed across platforms. Epoch `k` of a run with master
//! seed `s` draws from stream `k` of the key derived from `s`, so a batch
//! depends only on `(s, k)` and resumed runs see the same points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{Domain, PointSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatchSizes {
    pub interior: usize,
    pub initial: usize,
    pub terminal: usize,
    pub boundary: usize,
}

impl Default for BatchSizes {
    fn default() -> Self {
        BatchSizes {
            interior: 1000,
            initial: 200,
            terminal: 200,
            boundary: 200,
        }
    }
}

/// Points of one manifold, `x` row-major (`len x spatial_dim`).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub spatial_dim: usize,
    pub t: Vec<f64>,
    pub x: Vec<f64>,
}

impl PointCloud {
    pub fn new(spatial_dim: usize) -> Self {
        PointCloud {
            spatial_dim,
            t: Vec::new(),
            x: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn x_at(&self, p: usize) -> &[f64] {
        &self.x[p * self.spatial_dim..(p + 1) * self.spatial_dim]
    }

    pub fn push(&mut self, t: f64, x: &[f64]) {
        debug_assert_eq!(x.len(), self.spatial_dim);
        self.t.push(t);
        self.x.extend_from_slice(x);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollocationBatch {
    pub epoch: u64,
    pub interior: PointCloud,
    pub initial: PointCloud,
    pub terminal: PointCloud,
    pub boundary: PointCloud,
}

impl CollocationBatch {
    pub fn set(&self, which: PointSet) -> &PointCloud {
        match which {
            PointSet::Interior => &self.interior,
            PointSet::Initial => &self.initial,
            PointSet::Terminal => &self.terminal,
            PointSet::Boundary => &self.boundary,
        }
    }
}

/// Generator positioned at the start of `epoch`'s stream.
pub fn epoch_rng(seed: u64, epoch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch);
    rng
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let u: f64 = rng.random();
    lo + (hi - lo) * u
}

fn spatial_point(rng: &mut ChaCha8Rng, domain: &Domain, buf: &mut [f64]) {
    for (i, v) in buf.iter_mut().enumerate() {
        *v = uniform(rng, domain.lower[i], domain.upper[i]);
    }
}

/// Draws one batch. With no spatial dimensions the initial and terminal
/// sets are the single points `t0` and `tf` and the boundary is empty.
pub fn sample(domain: &Domain, sizes: &BatchSizes, epoch: u64, rng: &mut ChaCha8Rng) -> Result<CollocationBatch> {
    domain.validate()?;
    if sizes.interior == 0 || sizes.initial == 0 || sizes.terminal == 0 || sizes.boundary == 0 {
        return Err(Error::Config("batch sizes must be positive".into()));
    }
    let d = domain.spatial_dim();
    let mut buf = vec![0.0; d];

    let mut interior = PointCloud::new(d);
    for _ in 0..sizes.interior {
        let t = uniform(rng, domain.t0, domain.tf);
        spatial_point(rng, domain, &mut buf);
        interior.push(t, &buf);
    }

    let mut initial = PointCloud::new(d);
    let mut terminal = PointCloud::new(d);
    let mut boundary = PointCloud::new(d);
    if d == 0 {
        initial.push(domain.t0, &[]);
        terminal.push(domain.tf, &[]);
        return Ok(CollocationBatch {
            epoch,
            interior,
            initial,
            terminal,
            boundary,
        });
    }

    for _ in 0..sizes.initial {
        spatial_point(rng, domain, &mut buf);
        initial.push(domain.t0, &buf);
    }
    for _ in 0..sizes.terminal {
        spatial_point(rng, domain, &mut buf);
        terminal.push(domain.tf, &buf);
    }

    // Faces are picked with probability proportional to their measure.
    let extent: Vec<f64> = domain.lower.iter().zip(&domain.upper).map(|(l, u)| u - l).collect();
    let face_measure: Vec<f64> = (0..d)
        .map(|i| {
            extent
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, e)| e)
                .product()
        })
        .collect();
    let total: f64 = 2.0 * face_measure.iter().sum::<f64>();
    for _ in 0..sizes.boundary {
        let t = uniform(rng, domain.t0, domain.tf);
        spatial_point(rng, domain, &mut buf);
        let mut pick = uniform(rng, 0.0, total);
        let mut face = 2 * d - 1;
        for f in 0..2 * d {
            let m = face_measure[f / 2];
            if pick < m {
                face = f;
                break;
            }
            pick -= m;
        }
        let axis = face / 2;
        buf[axis] = if face.is_multiple_of(2) {
            domain.lower[axis]
        } else {
            domain.upper[axis]
        };
        boundary.push(t, &buf);
    }

    Ok(CollocationBatch {
        epoch,
        interior,
        initial,
        terminal,
        boundary,
    })
}

/// Batch for `epoch` of a run seeded with `seed`.
pub fn sample_epoch(domain: &Domain, sizes: &BatchSizes, seed: u64, epoch: u64) -> Result<CollocationBatch> {
    let mut rng = epoch_rng(seed, epoch);
    sample(domain, sizes, epoch, &mut rng)
}
