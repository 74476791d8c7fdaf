//! The training loop: per epoch, draw a fresh batch, evaluate the loss and
//! its gradient at the current parameters, then take one Adam step.
//!
//! Row `k` of the metrics is the loss of `theta_k` on batch `k`; the step
//! to `theta_{k+1}` follows. A run of `epochs = 0` evaluates `theta_0` once
//! and takes no step.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{self, LossBreakdown, LossWeights};
use crate::network::{init_params, ArchitectureConfig, ControlPinnParams, NetworkShape};
use crate::par::Execution;
use crate::probe::{self, ProbeErrors, ProbeFields, ProbeGrid};
use crate::problems::ControlProblem;
use crate::sampler::{sample_epoch, BatchSizes};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Step `k` (from 1) uses `lr * decay_rate^((k - 1) / decay_steps)`.
    /// The default rate of 1 keeps the step size constant.
    pub decay_rate: f64,
    pub decay_steps: u64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            decay_rate: 1.0,
            decay_steps: 1000,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr > 0.0
            && self.lr.is_finite()
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0
            && self.eps.is_finite()
            && self.decay_rate > 0.0
            && self.decay_rate <= 1.0
            && self.decay_steps > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(
                "adam needs lr > 0, betas in [0, 1), eps > 0, decay_rate in (0, 1] and decay_steps > 0".into(),
            ))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, n: usize) -> Self {
        AdamState {
            config,
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }
}

/// One bias-corrected Adam update:
/// `theta -= lr * m_hat / (sqrt(v_hat) + eps)`.
pub fn adam_step(state: &mut AdamState, params: &mut [f64], grad: &[f64]) -> Result<()> {
    if params.len() != state.m.len() || grad.len() != state.m.len() {
        return Err(Error::Shape {
            expected: state.m.len(),
            got: if params.len() != state.m.len() {
                params.len()
            } else {
                grad.len()
            },
        });
    }
    // Report a NaN before an infinity, otherwise the first offender.
    let worst = grad
        .iter()
        .position(|g| g.is_nan())
        .or_else(|| grad.iter().position(|g| g.is_infinite()));
    if let Some(index) = worst {
        return Err(Error::NonFiniteGradient {
            index,
            value: grad[index],
        });
    }
    let AdamConfig {
        lr,
        beta1,
        beta2,
        eps,
        decay_rate,
        decay_steps,
    } = state.config;
    state.step += 1;
    let lr = if decay_rate == 1.0 {
        lr
    } else {
        lr * decay_rate.powf((state.step - 1) as f64 / decay_steps as f64)
    };
    let k = state.step as i32;
    let c1 = 1.0 - beta1.powi(k);
    let c2 = 1.0 - beta2.powi(k);
    for i in 0..params.len() {
        let g = grad[i];
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    if let Some(i) = params.iter().position(|p| !p.is_finite()) {
        return Err(Error::contract(format!(
            "parameter {i} became non-finite after the update"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: u64,
    pub seed: u64,
    pub batch: BatchSizes,
    pub weights: LossWeights,
    pub adam: AdamConfig,
    pub network: NetworkShape,
    /// Probe errors are computed on rows that are multiples of this, and on
    /// the last row. 0 probes only the first and last rows.
    pub probe_every: u64,
    /// Checkpoints every this many steps besides the final one; 0 disables.
    pub checkpoint_every: u64,
    /// Stop once the total loss falls below this value.
    pub early_stop: Option<f64>,
    /// Totals above this count as divergence.
    pub divergence_threshold: f64,
    pub execution: Execution,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 300,
            seed: 0,
            batch: BatchSizes::default(),
            weights: LossWeights::default(),
            adam: AdamConfig::default(),
            network: NetworkShape::default(),
            probe_every: 50,
            checkpoint_every: 0,
            early_stop: None,
            divergence_threshold: 1e6,
            execution: Execution::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        self.adam.validate()?;
        if !(self.divergence_threshold > 0.0) {
            return Err(Error::Config("divergence_threshold must be positive".into()));
        }
        if let Some(tol) = self.early_stop {
            if !(tol > 0.0) {
                return Err(Error::Config("early_stop must be positive".into()));
            }
        }
        let b = self.batch;
        if b.interior == 0 || b.initial == 0 || b.terminal == 0 || b.boundary == 0 {
            return Err(Error::Config("batch sizes must be positive".into()));
        }
        Ok(())
    }

    pub fn architecture<P: ControlProblem>(&self, problem: &P) -> ArchitectureConfig {
        self.network
            .architecture(problem.domain().spatial_dim(), problem.n_state(), problem.n_control())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: u64,
    pub loss: LossBreakdown,
    pub probe: Option<ProbeErrors>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    EarlyStopped,
    Diverged(String),
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub rows: Vec<EpochRecord>,
    pub status: RunStatus,
    /// Probe errors of the final parameters.
    pub final_probe: Option<ProbeErrors>,
    pub checkpoints: Vec<PathBuf>,
    pub params: ControlPinnParams,
    pub adam: AdamState,
}

pub const CHECKPOINT_FORMAT: &str = "control-pinn-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Serialized training state. `epoch` counts completed steps; numbers are
/// written in shortest round-trip form so reloading is bitwise exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub problem: String,
    pub architecture: ArchitectureConfig,
    pub seed: u64,
    pub epoch: u64,
    pub params: Vec<f64>,
    pub adam: AdamState,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(text).map_err(|e| Error::Format {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        let bad = |m: String| Error::Format {
            path: origin.to_path_buf(),
            message: m,
        };
        if c.format != CHECKPOINT_FORMAT || c.version != CHECKPOINT_VERSION {
            return Err(bad(format!("unsupported checkpoint {} v{}", c.format, c.version)));
        }
        let n = ControlPinnParams::zeros(c.architecture)?.len();
        if c.params.len() != n || c.adam.m.len() != n || c.adam.v.len() != n {
            return Err(bad(format!("expected {n} parameters")));
        }
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Checkpoint::from_json(&text, path)
    }

    pub fn params(&self) -> Result<ControlPinnParams> {
        ControlPinnParams::from_flat(self.architecture, self.params.clone())
    }
}

/// Training state that advances one epoch at a time.
pub struct Trainer<'a, P: ControlProblem> {
    problem: &'a P,
    config: TrainConfig,
    params: ControlPinnParams,
    adam: AdamState,
    epoch: u64,
    grid: ProbeGrid,
    reference: ProbeFields,
}

impl<'a, P: ControlProblem> Trainer<'a, P> {
    pub fn new(problem: &'a P, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let arch = config.architecture(problem);
        let params = init_params(arch, config.seed)?;
        let adam = AdamState::new(config.adam, params.len());
        Self::assemble(problem, config, params, adam, 0)
    }

    /// Continues from a checkpoint; the optimizer hyperparameters of
    /// `config` replace the saved ones.
    pub fn resume(problem: &'a P, config: TrainConfig, ckpt: &Checkpoint) -> Result<Self> {
        config.validate()?;
        if ckpt.problem != problem.name() {
            return Err(Error::Config(format!(
                "checkpoint is for problem {} but the run is {}",
                ckpt.problem,
                problem.name()
            )));
        }
        if ckpt.architecture != config.architecture(problem) {
            return Err(Error::Config("checkpoint architecture differs from the config".into()));
        }
        let mut adam = ckpt.adam.clone();
        adam.config = config.adam;
        Self::assemble(problem, config, ckpt.params()?, adam, ckpt.epoch)
    }

    fn assemble(
        problem: &'a P,
        config: TrainConfig,
        params: ControlPinnParams,
        adam: AdamState,
        epoch: u64,
    ) -> Result<Self> {
        let grid = ProbeGrid::standard(problem.domain())?;
        let reference = probe::reference_fields(problem, &grid)?;
        Ok(Trainer {
            problem,
            config,
            params,
            adam,
            epoch,
            grid,
            reference,
        })
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn params(&self) -> &ControlPinnParams {
        &self.params
    }

    pub fn adam(&self) -> &AdamState {
        &self.adam
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn probe_grid(&self) -> &ProbeGrid {
        &self.grid
    }

    pub fn reference(&self) -> &ProbeFields {
        &self.reference
    }

    /// Column names of the probe errors, possibly empty.
    pub fn probe_names(&self) -> Vec<String> {
        probe::error_names(&self.reference)
    }

    pub fn probe(&self) -> Result<Option<ProbeErrors>> {
        if self.reference.all().next().is_none() {
            return Ok(None);
        }
        let net = probe::network_fields(&self.params, &self.grid, self.config.execution)?;
        probe::probe_errors(&net, &self.reference).map(Some)
    }

    fn batch(&self) -> Result<crate::sampler::CollocationBatch> {
        sample_epoch(self.problem.domain(), &self.config.batch, self.config.seed, self.epoch)
    }

    /// Loss of the current parameters on the current epoch's batch.
    pub fn evaluate(&self) -> Result<LossBreakdown> {
        let batch = self.batch()?;
        loss::evaluate(
            &self.params,
            self.problem,
            &batch,
            &self.config.weights,
            self.config.execution,
        )
    }

    /// Loss and gradient on this epoch's batch, then one Adam step. A total
    /// above the divergence threshold is returned without stepping.
    pub fn step(&mut self) -> Result<(LossBreakdown, bool)> {
        let batch = self.batch()?;
        let (br, grad) = loss::evaluate_with_gradient(
            &self.params,
            self.problem,
            &batch,
            &self.config.weights,
            self.config.execution,
        )?;
        if br.total > self.config.divergence_threshold {
            return Ok((br, false));
        }
        adam_step(&mut self.adam, self.params.as_flat_mut(), grad.as_slice())?;
        self.epoch += 1;
        Ok((br, true))
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            problem: self.problem.name().into(),
            architecture: *self.params.arch(),
            seed: self.config.seed,
            epoch: self.epoch,
            params: self.params.as_flat().to_vec(),
            adam: self.adam.clone(),
        }
    }
}

/// Streams metrics rows as CSV.
pub struct MetricsWriter<W: Write> {
    out: W,
    probe_names: Vec<String>,
}

impl<W: Write> MetricsWriter<W> {
    pub fn new(mut out: W, probe_names: Vec<String>) -> std::io::Result<Self> {
        let mut cols: Vec<String> = vec!["epoch".into()];
        cols.extend(LossBreakdown::TERMS.iter().map(|s| s.to_string()));
        cols.push("total".into());
        cols.extend(probe_names.iter().cloned());
        writeln!(out, "{}", cols.join(","))?;
        Ok(MetricsWriter { out, probe_names })
    }

    pub fn row(&mut self, r: &EpochRecord) -> std::io::Result<()> {
        let mut cells = vec![r.epoch.to_string()];
        cells.extend(r.loss.terms().iter().map(|v| format!("{v:e}")));
        cells.push(format!("{:e}", r.loss.total));
        for name in &self.probe_names {
            cells.push(
                r.probe
                    .as_ref()
                    .and_then(|p| p.get(name))
                    .map(|v| format!("{v:e}"))
                    .unwrap_or_default(),
            );
        }
        writeln!(self.out, "{}", cells.join(","))?;
        self.out.flush()
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(format!("writing {}", path.display()), e)
}

struct RunFiles {
    dir: PathBuf,
    metrics: MetricsWriter<BufWriter<File>>,
    timing: BufWriter<File>,
}

impl RunFiles {
    fn create(dir: &Path, probe_names: Vec<String>) -> Result<Self> {
        std::fs::create_dir_all(dir.join("checkpoints")).map_err(io_err(dir))?;
        let mp = dir.join("metrics.csv");
        let metrics = File::create(&mp)
            .and_then(|f| MetricsWriter::new(BufWriter::new(f), probe_names))
            .map_err(io_err(&mp))?;
        let tp = dir.join("timing.csv");
        let mut timing = BufWriter::new(File::create(&tp).map_err(io_err(&tp))?);
        writeln!(timing, "epoch,seconds").map_err(io_err(&tp))?;
        Ok(RunFiles {
            dir: dir.to_path_buf(),
            metrics,
            timing,
        })
    }

    fn row(&mut self, r: &EpochRecord) -> Result<()> {
        self.metrics.row(r).map_err(io_err(&self.dir))?;
        writeln!(self.timing, "{},{:.6}", r.epoch, r.wall_seconds).map_err(io_err(&self.dir))
    }
}

/// Checkpoint file name for a given number of completed steps.
pub fn checkpoint_name(epoch: u64) -> String {
    format!("epoch_{epoch:06}.json")
}

/// Runs `config.epochs` epochs from a fresh initialization, or from
/// `resume_from`. With `out` set, streams `metrics.csv` and `timing.csv`
/// there and writes checkpoints under `checkpoints/`, ending with
/// `checkpoint.json` for the final state.
pub fn train<P: ControlProblem>(
    problem: &P,
    config: &TrainConfig,
    resume_from: Option<&Checkpoint>,
    out: Option<&Path>,
) -> Result<RunRecord> {
    let mut trainer = match resume_from {
        Some(c) => Trainer::resume(problem, config.clone(), c)?,
        None => Trainer::new(problem, config.clone())?,
    };
    let mut files = match out {
        Some(dir) => Some(RunFiles::create(dir, trainer.probe_names())?),
        None => None,
    };
    let start = trainer.epoch();
    let end = start + config.epochs;
    let last_row = if config.epochs == 0 { start } else { end - 1 };
    let wants_probe =
        |k: u64| k == start || k == last_row || (config.probe_every > 0 && k.is_multiple_of(config.probe_every));
    let mut rows = Vec::new();
    let mut checkpoints = Vec::new();
    let mut status = RunStatus::Completed;

    let mut k = start;
    loop {
        let clock = Instant::now();
        let probe = if wants_probe(k) {
            match trainer.probe() {
                Ok(p) => p,
                Err(e) => {
                    status = RunStatus::Diverged(e.to_string());
                    break;
                }
            }
        } else {
            None
        };
        let outcome = if config.epochs == 0 {
            trainer.evaluate().map(|l| (l, false))
        } else {
            trainer.step()
        };
        let (loss, stepped) = match outcome {
            Ok(v) => v,
            Err(e @ (Error::NonFinite { .. } | Error::NonFiniteLoss { .. } | Error::NonFiniteGradient { .. })) => {
                status = RunStatus::Diverged(e.to_string());
                break;
            }
            Err(Error::Contract(m)) if m.contains("non-finite") => {
                status = RunStatus::Diverged(m);
                break;
            }
            Err(e) => return Err(e),
        };
        let row = EpochRecord {
            epoch: k,
            loss,
            probe,
            wall_seconds: clock.elapsed().as_secs_f64(),
        };
        if let Some(f) = files.as_mut() {
            f.row(&row)?;
        }
        rows.push(row);
        if config.epochs == 0 {
            break;
        }
        if !stepped {
            status = RunStatus::Diverged(format!(
                "total loss {:e} exceeds {:e}",
                loss.total, config.divergence_threshold
            ));
            break;
        }
        k += 1;
        if let (Some(dir), true) = (
            out,
            config.checkpoint_every > 0 && k % config.checkpoint_every == 0 && k < end,
        ) {
            let path = dir.join("checkpoints").join(checkpoint_name(k));
            trainer.checkpoint().save(&path)?;
            checkpoints.push(path);
        }
        if config.early_stop.is_some_and(|tol| loss.total < tol) {
            status = RunStatus::EarlyStopped;
            break;
        }
        if k == end {
            break;
        }
    }

    let final_probe = trainer.probe().unwrap_or(None);
    if let Some(dir) = out {
        let path = dir.join("checkpoint.json");
        trainer.checkpoint().save(&path)?;
        checkpoints.push(path);
    }
    Ok(RunRecord {
        rows,
        status,
        final_probe,
        checkpoints,
        params: trainer.params().clone(),
        adam: trainer.adam().clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{AnalyticalProblem, HeatOptions, HeatProblem};

    fn tiny_config(epochs: u64) -> TrainConfig {
        TrainConfig {
            epochs,
            seed: 11,
            batch: BatchSizes {
                interior: 64,
                initial: 16,
                terminal: 16,
                boundary: 16,
            },
            network: NetworkShape {
                hidden_width: 16,
                ..NetworkShape::default()
            },
            probe_every: 2,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut s = AdamState::new(AdamConfig::default(), 3);
        let mut p = vec![1.0, -2.0, 0.5];
        adam_step(&mut s, &mut p, &[0.0; 3]).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn first_update_by_hand() {
        // m_hat = 1, v_hat = 1: step = lr / (1 + eps).
        let mut s = AdamState::new(AdamConfig::default(), 1);
        let mut p = vec![0.0];
        adam_step(&mut s, &mut p, &[1.0]).unwrap();
        let want = -1e-3 / (1.0 + 1e-8);
        assert_eq!(p[0], want);
        assert!((p[0] + 9.99999995e-4).abs() < 1e-11);
    }

    #[test]
    fn constant_gradient_steps_approach_lr() {
        let mut s = AdamState::new(AdamConfig::default(), 1);
        let mut p = vec![0.0];
        let mut last = 0.0;
        for _ in 0..5000 {
            let before = p[0];
            adam_step(&mut s, &mut p, &[0.3]).unwrap();
            last = before - p[0];
        }
        assert!((last / 1e-3 - 1.0).abs() < 1e-6, "{last}");
        assert!(s.v.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn decay_shrinks_steps_geometrically() {
        let cfg = AdamConfig {
            decay_rate: 0.5,
            decay_steps: 2,
            ..AdamConfig::default()
        };
        let mut s = AdamState::new(cfg, 1);
        let mut p = vec![0.0];
        let mut steps = Vec::new();
        for _ in 0..5 {
            let before = p[0];
            adam_step(&mut s, &mut p, &[1.0]).unwrap();
            steps.push(before - p[0]);
        }
        // Constant gradient: the bias-corrected ratio is 1 at every step.
        assert!((steps[2] / steps[0] - 0.5).abs() < 1e-7);
        assert!((steps[4] / steps[0] - 0.25).abs() < 1e-7);
    }

    #[test]
    fn non_finite_gradient_names_index() {
        let mut s = AdamState::new(AdamConfig::default(), 4);
        let mut p = vec![0.0; 4];
        match adam_step(&mut s, &mut p, &[0.0, f64::INFINITY, f64::NAN, 1.0]) {
            Err(Error::NonFiniteGradient { index, .. }) => assert_eq!(index, 2),
            other => panic!("{other:?}"),
        }
        assert_eq!(s.step, 0);
        assert_eq!(p, vec![0.0; 4]);
    }

    #[test]
    fn zero_epochs_is_evaluation_only() {
        let prob = HeatProblem::new(HeatOptions::default()).unwrap();
        let cfg = tiny_config(0);
        let run = train(&prob, &cfg, None, None).unwrap();
        assert_eq!(run.rows.len(), 1);
        assert_eq!(run.status, RunStatus::Completed);
        assert_eq!(run.params, init_params(cfg.architecture(&prob), cfg.seed).unwrap());
        assert!(run.rows[0].probe.is_some());
    }

    #[test]
    fn runs_are_reproducible_and_rows_ordered() {
        let prob = AnalyticalProblem::new();
        let a = train(&prob, &tiny_config(5), None, None).unwrap();
        let b = train(&prob, &tiny_config(5), None, None).unwrap();
        assert_eq!(a.rows.len(), 5);
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!((x.epoch, x.loss, &x.probe), (y.epoch, y.loss, &y.probe));
        }
        assert!(a.rows.windows(2).all(|w| w[0].epoch < w[1].epoch));
        assert_eq!(a.params, b.params);
        assert_eq!(a.adam.step, 5);
    }

    #[test]
    fn checkpoint_resume_is_bitwise() {
        let prob = HeatProblem::new(HeatOptions::default()).unwrap();
        let full = train(&prob, &tiny_config(4), None, None).unwrap();
        let first = train(&prob, &tiny_config(3), None, None).unwrap();
        let mut t = Trainer::new(&prob, tiny_config(3)).unwrap();
        for _ in 0..3 {
            t.step().unwrap();
        }
        assert_eq!(t.params(), &first.params);
        let json = t.checkpoint().to_json().unwrap();
        let ckpt = Checkpoint::from_json(&json, Path::new("mem")).unwrap();
        assert_eq!(ckpt.params, first.params.as_flat());
        let rest = train(&prob, &tiny_config(1), Some(&ckpt), None).unwrap();
        assert_eq!(rest.rows[0].epoch, 3);
        assert_eq!(rest.rows[0].loss, full.rows[3].loss);
        assert_eq!(rest.params, full.params);
        assert_eq!(rest.adam, full.adam);
    }

    #[test]
    fn divergence_halts_with_partial_record() {
        let prob = AnalyticalProblem::new();
        let cfg = TrainConfig {
            divergence_threshold: 1e-12,
            ..tiny_config(5)
        };
        let run = train(&prob, &cfg, None, None).unwrap();
        assert_eq!(run.rows.len(), 1);
        assert!(matches!(run.status, RunStatus::Diverged(_)));
    }

    #[test]
    fn metrics_csv_layout() {
        let mut buf = Vec::new();
        let mut w = MetricsWriter::new(&mut buf, vec!["err_y".into()]).unwrap();
        w.row(&EpochRecord {
            epoch: 0,
            loss: LossBreakdown::default(),
            probe: None,
            wall_seconds: 1.0,
        })
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "epoch,data,forward,adjoint,optimality,initial,terminal_adjoint,boundary,total,err_y"
        );
        assert_eq!(lines[1], "0,0e0,0e0,0e0,0e0,0e0,0e0,0e0,0e0,");
    }

    #[test]
    fn files_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let prob = AnalyticalProblem::new();
        let cfg = TrainConfig {
            checkpoint_every: 2,
            ..tiny_config(5)
        };
        let run = train(&prob, &cfg, None, Some(dir.path())).unwrap();
        let metrics = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
        assert_eq!(metrics.lines().count(), 6);
        assert!(dir.path().join("checkpoints").join(checkpoint_name(2)).exists());
        assert!(dir.path().join("checkpoints").join(checkpoint_name(4)).exists());
        let last = Checkpoint::load(&dir.path().join("checkpoint.json")).unwrap();
        assert_eq!(last.epoch, 5);
        assert_eq!(last.params().unwrap(), run.params);
    }
}
