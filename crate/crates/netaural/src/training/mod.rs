//! The centrality learning loop: per epoch, draw a growing set of random
//! graphs, auralize them once, then take several optimization steps on
//! the shared batch.

mod adam;
mod eval;
mod reproduce;

pub use adam::{Adam, AdamConfig};
pub use eval::{
    build_testset, correlation_matrix_csv, evaluate, EvalRecord, EvalReport, Predictor,
    TestGraph, TestsetConfig, Tier,
};
pub use reproduce::{full_reproduction, ReproduceConfig, ReproduceOutcome};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::auralize::{auralize, WaveformMatrix, DEFAULT_MOMENTUM, DEFAULT_SAMPLES};
use crate::centrality::Measure;
use crate::error::{Error, Result};
use crate::graph::{Graph, GraphModel};
use crate::model::{backward, commit_batch_stats, m5_init, M5Config, ModelCheckpoint};
use crate::util::map_indexed;

/// Generator families available to training and test-set construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorFamily {
    Er,
    Ba,
    Ws,
    Caveman,
    Grid,
}

impl GeneratorFamily {
    pub const ALL: [GeneratorFamily; 5] = [
        GeneratorFamily::Er,
        GeneratorFamily::Ba,
        GeneratorFamily::Ws,
        GeneratorFamily::Caveman,
        GeneratorFamily::Grid,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            GeneratorFamily::Er => "er",
            GeneratorFamily::Ba => "ba",
            GeneratorFamily::Ws => "ws",
            GeneratorFamily::Caveman => "caveman",
            GeneratorFamily::Grid => "grid",
        }
    }
}

impl std::str::FromStr for GeneratorFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<GeneratorFamily> {
        match s {
            "er" => Ok(GeneratorFamily::Er),
            "ba" => Ok(GeneratorFamily::Ba),
            "ws" => Ok(GeneratorFamily::Ws),
            "caveman" => Ok(GeneratorFamily::Caveman),
            "grid" => Ok(GeneratorFamily::Grid),
            _ => Err(Error::InvalidParameter(format!(
                "unknown generator {s:?}; valid: er, ba, ws, caveman, grid"
            ))),
        }
    }
}

/// Parameter ranges for drawing "various densities" from each family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSampling {
    pub er_p: (f64, f64),
    pub ba_k_max: usize,
    pub ws_k_choices: Vec<usize>,
    pub ws_p: (f64, f64),
    pub caveman_size: (usize, usize),
}

impl Default for GeneratorSampling {
    fn default() -> Self {
        GeneratorSampling {
            er_p: (0.02, 0.1),
            ba_k_max: 5,
            ws_k_choices: vec![2, 4, 6],
            ws_p: (0.1, 0.5),
            caveman_size: (3, 12),
        }
    }
}

impl GeneratorSampling {
    /// Draws a concrete parameterization targeting roughly `n` nodes.
    pub fn draw(&self, family: GeneratorFamily, n: usize, rng: &mut ChaCha8Rng) -> GraphModel {
        match family {
            GeneratorFamily::Er => GraphModel::Er {
                n,
                p: rng.gen_range(self.er_p.0..=self.er_p.1),
            },
            GeneratorFamily::Ba => GraphModel::Ba {
                n,
                k: rng.gen_range(1..=self.ba_k_max.min(n.saturating_sub(1)).max(1)),
            },
            GeneratorFamily::Ws => {
                let usable: Vec<usize> = self
                    .ws_k_choices
                    .iter()
                    .copied()
                    .filter(|&k| k > 0 && k % 2 == 0 && k < n)
                    .collect();
                let k = if usable.is_empty() {
                    2
                } else {
                    usable[rng.gen_range(0..usable.len())]
                };
                GraphModel::Ws {
                    n,
                    k,
                    p: rng.gen_range(self.ws_p.0..=self.ws_p.1),
                }
            }
            GeneratorFamily::Caveman => {
                let (lo, hi) = self.caveman_size;
                let size = rng.gen_range(lo..=hi.max(lo));
                let cliques = ((n as f64 / size as f64).round() as usize).max(2);
                GraphModel::Caveman { cliques, size }
            }
            GeneratorFamily::Grid => {
                let max_rows = (n as f64).sqrt().floor() as usize;
                let rows = rng.gen_range(2..=max_rows.max(2));
                let cols = ((n as f64 / rows as f64).round() as usize).max(1);
                GraphModel::Grid { rows, cols }
            }
        }
    }
}

/// Full specification of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub measure: Measure,
    pub epochs: usize,
    /// graphs per epoch = base_graphs + epoch / growth_divisor
    pub base_graphs: usize,
    pub growth_divisor: usize,
    /// optimization steps per epoch on the same graphs
    pub inner_batches: usize,
    /// nominal node count of training graphs
    pub train_n: usize,
    pub momentum: f64,
    pub samples: usize,
    pub generators: Vec<GeneratorFamily>,
    pub sampling: GeneratorSampling,
    pub model: M5Config,
    pub optimizer: AdamConfig,
    /// apply the pseudocode's extra 1/10 factor to the batch gradient
    pub loss_scale: bool,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(measure: Measure) -> TrainConfig {
        TrainConfig {
            measure,
            epochs: 300,
            base_graphs: 10,
            growth_divisor: 10,
            inner_batches: 10,
            train_n: 150,
            momentum: DEFAULT_MOMENTUM,
            samples: DEFAULT_SAMPLES,
            generators: GeneratorFamily::ALL.to_vec(),
            sampling: GeneratorSampling::default(),
            model: M5Config::full(DEFAULT_SAMPLES),
            optimizer: AdamConfig::default(),
            loss_scale: true,
            seed: 0,
        }
    }

    pub fn graphs_for_epoch(&self, epoch: usize) -> usize {
        self.base_graphs + epoch / self.growth_divisor
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::InvalidParameter("epochs must be >= 1".into()));
        }
        if self.generators.is_empty() {
            return Err(Error::InvalidParameter("need at least one generator".into()));
        }
        if self.train_n < 3 {
            return Err(Error::InvalidParameter("train_n must be >= 3".into()));
        }
        if self.samples != self.model.input_length {
            return Err(Error::InvalidParameter(format!(
                "samples ({}) must equal the model input length ({})",
                self.samples, self.model.input_length
            )));
        }
        self.model.validate()
    }
}

/// One optimization step's record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub epoch: usize,
    /// mean over the batch graphs of `1 - rho` (before any loss scaling)
    pub loss: f64,
}

#[derive(Debug, Clone)]
pub struct EpochSummary {
    pub epoch: usize,
    pub graphs: usize,
    pub mean_loss: f64,
    pub skipped_degenerate: usize,
}

pub struct TrainResult {
    pub checkpoint: ModelCheckpoint,
    pub history: Vec<StepRecord>,
    pub skipped_degenerate: usize,
}

fn constant(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

/// Draws one usable training graph: generate, take the giant component,
/// and retry while the target centrality is degenerate (constant or
/// undefined). Returns the graph, its target, and the retry count.
fn sample_graph(
    cfg_generators: &[GeneratorFamily],
    sampling: &GeneratorSampling,
    n: usize,
    measure: Measure,
    rng: &mut ChaCha8Rng,
) -> Result<(Graph, Vec<f64>, usize)> {
    const MAX_ATTEMPTS: usize = 200;
    let mut skipped = 0;
    for _ in 0..MAX_ATTEMPTS {
        let family = cfg_generators[rng.gen_range(0..cfg_generators.len())];
        let model = sampling.draw(family, n, rng);
        let graph_seed: u64 = rng.gen();
        let graph = model.generate(graph_seed)?.giant_component();
        if graph.node_count() < 2 {
            skipped += 1;
            continue;
        }
        match measure.compute(&graph) {
            Ok(c) if !constant(&c.values) => return Ok((graph, c.values, skipped)),
            Ok(_) | Err(Error::NoConvergence { .. }) | Err(Error::InvalidParameter(_)) => {
                skipped += 1;
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::InvalidParameter(format!(
        "could not sample a non-degenerate graph after {MAX_ATTEMPTS} attempts"
    )))
}

fn sample_epoch(
    config: &TrainConfig,
    epoch: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<(Graph, Vec<f64>)>, usize)> {
    let count = config.graphs_for_epoch(epoch);
    let mut graphs = Vec::with_capacity(count);
    let mut skipped = 0;
    for _ in 0..count {
        let (g, target, s) = sample_graph(
            &config.generators,
            &config.sampling,
            config.train_n,
            config.measure,
            rng,
        )?;
        skipped += s;
        graphs.push((g, target));
    }
    Ok((graphs, skipped))
}

/// Runs the training loop from scratch.
pub fn train(config: &TrainConfig) -> Result<TrainResult> {
    train_with(config, None, |_, _| {})
}

/// Training loop with an epoch observer and optional warm start.
///
/// `start` resumes from a checkpoint at its recorded epoch: the graph
/// stream is replayed (cheaply, without auralization) so the remaining
/// epochs see exactly the graphs a fresh run would have seen. Optimizer
/// moments are rebuilt from zero on resume.
pub fn train_with<F>(
    config: &TrainConfig,
    start: Option<ModelCheckpoint>,
    mut on_epoch: F,
) -> Result<TrainResult>
where
    F: FnMut(&ModelCheckpoint, &EpochSummary),
{
    config.validate()?;
    let mut data_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (mut ckpt, start_epoch) = match start {
        Some(c) => {
            if c.config != config.model {
                return Err(Error::InvalidParameter(
                    "resume checkpoint does not match the configured model".into(),
                ));
            }
            let done = c.meta.epochs_completed;
            for epoch in 1..=done {
                sample_epoch(config, epoch, &mut data_rng)?;
            }
            (c, done)
        }
        None => {
            let mut c = m5_init(config.model, config.seed)?;
            c.meta.measure = Some(config.measure.name().to_string());
            c.meta.momentum = config.momentum;
            (c, 0)
        }
    };

    let mut optimizer = Adam::new(config.optimizer, &ckpt);
    let mut history = Vec::new();
    let mut total_skipped = 0;
    let mut global_step = start_epoch * config.inner_batches;

    for epoch in (start_epoch + 1)..=config.epochs {
        let (graphs, skipped) = sample_epoch(config, epoch, &mut data_rng)?;
        total_skipped += skipped;

        let waves: Vec<Result<WaveformMatrix>> = map_indexed(graphs.len(), |i| {
            auralize(&graphs[i].0, config.momentum, config.samples)
        });
        let waves: Vec<WaveformMatrix> = waves.into_iter().collect::<Result<_>>()?;

        let scale = if config.loss_scale {
            1.0 / (10.0 * graphs.len() as f64)
        } else {
            1.0 / graphs.len() as f64
        };

        let mut epoch_losses = Vec::with_capacity(config.inner_batches);
        for _ in 0..config.inner_batches {
            let mut accum: Option<Vec<Vec<f64>>> = None;
            let mut batch_loss = 0.0;
            for ((_, target), wave) in graphs.iter().zip(&waves) {
                let result = backward(&ckpt, wave, target)?;
                commit_batch_stats(&mut ckpt, &result.batch_stats);
                batch_loss += result.loss;
                match &mut accum {
                    None => {
                        let mut grads = result.gradients.0;
                        for g in &mut grads {
                            for x in g.iter_mut() {
                                *x *= scale;
                            }
                        }
                        accum = Some(grads);
                    }
                    Some(acc) => {
                        for (a, g) in acc.iter_mut().zip(&result.gradients.0) {
                            for (x, y) in a.iter_mut().zip(g) {
                                *x += scale * y;
                            }
                        }
                    }
                }
            }
            let mean_loss = batch_loss / graphs.len() as f64;
            optimizer.step(&mut ckpt, &crate::model::Gradients(accum.expect("non-empty batch")));
            global_step += 1;
            history.push(StepRecord { step: global_step, epoch, loss: mean_loss });
            epoch_losses.push(mean_loss);
        }

        ckpt.meta.epochs_completed = epoch;
        let mean_loss = if epoch_losses.is_empty() {
            f64::NAN
        } else {
            epoch_losses.iter().sum::<f64>() / epoch_losses.len() as f64
        };
        on_epoch(
            &ckpt,
            &EpochSummary {
                epoch,
                graphs: graphs.len(),
                mean_loss,
                skipped_degenerate: skipped,
            },
        );
        if skipped > 0 {
            log::debug!("epoch {epoch}: regenerated {skipped} degenerate graphs");
        }
    }

    Ok(TrainResult { checkpoint: ckpt, history, skipped_degenerate: total_skipped })
}

/// History CSV: `step,epoch,loss`.
pub fn history_to_csv(history: &[StepRecord]) -> String {
    let mut out = String::from("step,epoch,loss\n");
    for r in history {
        out.push_str(&format!("{},{},{}\n", r.step, r.epoch, r.loss));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_config() -> TrainConfig {
        TrainConfig {
            epochs: 1,
            base_graphs: 3,
            growth_divisor: 10,
            inner_batches: 2,
            train_n: 16,
            momentum: 0.9,
            samples: 160,
            model: M5Config::tiny(160),
            generators: vec![GeneratorFamily::Er, GeneratorFamily::Ba],
            seed: 5,
            ..TrainConfig::new(Measure::Degree)
        }
    }

    #[test]
    fn graphs_per_epoch_schedule() {
        let cfg = TrainConfig::new(Measure::Degree);
        assert_eq!(cfg.graphs_for_epoch(1), 10);
        assert_eq!(cfg.graphs_for_epoch(10), 11);
        assert_eq!(cfg.graphs_for_epoch(100), 20);
        assert_eq!(cfg.graphs_for_epoch(300), 40);
    }

    #[test]
    fn zero_inner_batches_returns_initial_checkpoint() {
        let mut cfg = quick_config();
        cfg.inner_batches = 0;
        let init = m5_init(cfg.model, cfg.seed).unwrap();
        let result = train(&cfg).unwrap();
        assert!(result.history.is_empty());
        assert_eq!(result.checkpoint.tensors(), init.tensors());
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = quick_config();
        let a = train(&cfg).unwrap();
        let b = train(&cfg).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.checkpoint, b.checkpoint);
        assert_eq!(a.checkpoint.to_bytes(), b.checkpoint.to_bytes());
    }

    #[test]
    fn losses_stay_in_range() {
        let result = train(&quick_config()).unwrap();
        assert!(!result.history.is_empty());
        assert!(result.history.iter().all(|r| (0.0..=2.0).contains(&r.loss)));
    }

    #[test]
    fn resume_matches_uninterrupted_graph_stream() {
        // Resuming replays the epoch graph draws, so a resumed run's later
        // epochs train on the same graphs a fresh run would have used.
        let mut cfg = quick_config();
        cfg.epochs = 2;
        let mut first_epoch_ckpt: Option<ModelCheckpoint> = None;
        let full = train_with(&cfg, None, |ckpt, summary| {
            if summary.epoch == 1 {
                first_epoch_ckpt = Some(ckpt.clone());
            }
        })
        .unwrap();
        let resumed = train_with(&cfg, first_epoch_ckpt, |_, _| {}).unwrap();
        assert_eq!(resumed.checkpoint.meta.epochs_completed, 2);
        // epoch-2 records exist and reference the same epoch numbering
        let epochs: Vec<usize> = resumed.history.iter().map(|r| r.epoch).collect();
        assert!(epochs.iter().all(|&e| e == 2));
        assert_eq!(full.history.len(), 2 * cfg.inner_batches);
    }

    #[test]
    fn validates_sample_length_against_model() {
        let mut cfg = quick_config();
        cfg.samples = 100;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn history_csv_format() {
        let csv = history_to_csv(&[StepRecord { step: 1, epoch: 1, loss: 0.5 }]);
        assert_eq!(csv, "step,epoch,loss\n1,1,0.5\n");
    }
}
