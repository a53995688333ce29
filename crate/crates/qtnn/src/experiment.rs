//! The perception loop: per run, draw fresh weights from the entropy
//! stream, train on the two unambiguous stimuli, show the ambiguous
//! stimulus, and record the two output probabilities.
//!
//! "Time" is the run index in arbitrary units. Each run consumes its own
//! entropy substream, so runs are independent, embarrassingly parallel,
//! and the whole series is a pure function of (configuration, entropy
//! provider state). The classical-percept series thresholds the recorded
//! `P(state 1)` channel: percept 1 exactly when `p >= threshold`.

use std::path::PathBuf;

use rayon::prelude::*;

use crate::activation::ActivationKind;
use crate::analysis::dtw_distance;
use crate::error::{Error, Result};
use crate::network::{Mlp, Sample, TrainConfig};
use crate::rng::RandomSource;
use crate::stimuli::{load_stimulus, necker_set, rubin_set, StimulusSet};

/// Where the three stimuli of an experiment come from.
#[derive(Debug, Clone, PartialEq)]
pub enum StimulusSource {
    Necker,
    Rubin,
    Custom {
        class0: PathBuf,
        class1: PathBuf,
        ambiguous: PathBuf,
    },
}

impl StimulusSource {
    pub fn load(&self) -> Result<StimulusSet> {
        match self {
            StimulusSource::Necker => Ok(necker_set()),
            StimulusSource::Rubin => Ok(rubin_set()),
            StimulusSource::Custom {
                class0,
                class1,
                ambiguous,
            } => {
                let class0 = load_stimulus(class0)?;
                let class1 = load_stimulus(class1)?;
                let ambiguous = load_stimulus(ambiguous)?;
                if class0.pixels().len() != class1.pixels().len()
                    || class0.pixels().len() != ambiguous.pixels().len()
                {
                    return Err(Error::Usage(
                        "custom stimuli must share one raster size".into(),
                    ));
                }
                Ok(StimulusSet {
                    class0,
                    class1,
                    ambiguous,
                })
            }
        }
    }
}

/// Default number of consecutive runs per experiment.
pub const DEFAULT_RUNS: usize = 40;
/// Default classical-percept threshold.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Full description of one perception experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub stimuli: StimulusSource,
    /// Swap the class labels of the two training stimuli.
    pub swap_labels: bool,
    pub runs: usize,
    pub activation: ActivationKind,
    pub train: TrainConfig,
    /// Classical-percept threshold on the `P(state 1)` channel.
    pub threshold: f64,
    /// Hidden layer widths.
    pub hidden_sizes: Vec<usize>,
}

impl ExperimentConfig {
    pub fn new(stimuli: StimulusSource, activation: ActivationKind) -> Self {
        Self {
            stimuli,
            swap_labels: false,
            runs: DEFAULT_RUNS,
            activation,
            train: TrainConfig::default(),
            threshold: DEFAULT_THRESHOLD,
            hidden_sizes: vec![
                crate::network::DEFAULT_HIDDEN_NODES;
                crate::network::DEFAULT_HIDDEN_LAYERS
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Usage("an experiment needs at least one run".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Usage(format!(
                "threshold must lie strictly inside (0, 1), got {}",
                self.threshold
            )));
        }
        if self.hidden_sizes.is_empty() || self.hidden_sizes.contains(&0) {
            return Err(Error::Usage("hidden layer sizes must be positive".into()));
        }
        self.train.validate()
    }

    /// Layer sizes of the network this experiment trains.
    pub fn layer_sizes(&self, input_len: usize) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.hidden_sizes.len() + 2);
        sizes.push(input_len);
        sizes.extend_from_slice(&self.hidden_sizes);
        sizes.push(2);
        sizes
    }

    /// Number of entropy words one run consumes for weight initialization;
    /// also the default substream block size.
    pub fn words_per_run(&self, input_len: usize) -> usize {
        let sizes = self.layer_sizes(input_len);
        sizes.windows(2).map(|pair| pair[0] * pair[1]).sum()
    }
}

/// Output probabilities recorded at the end of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRecord {
    pub run: usize,
    pub p_state0: f64,
    pub p_state1: f64,
}

/// The perception-switching series of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct PerceptionSeries {
    pub records: Vec<RunRecord>,
    pub threshold: f64,
}

impl PerceptionSeries {
    /// The `P(state 1)` channel in run order.
    pub fn p_state1(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.p_state1).collect()
    }

    /// Binary classical percepts: 1 exactly when `p_state1 >= threshold`.
    pub fn classical_percepts(&self) -> Vec<u8> {
        classical_percept(&self.p_state1(), self.threshold)
    }

    /// Serialize as CSV with header `run,p_state0,p_state1,percept`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "run,p_state0,p_state1,percept")?;
        let percepts = self.classical_percepts();
        for (record, percept) in self.records.iter().zip(percepts) {
            writeln!(
                out,
                "{},{},{},{}",
                record.run,
                crate::fmt_f64(record.p_state0),
                crate::fmt_f64(record.p_state1),
                percept
            )?;
        }
        Ok(())
    }
}

/// Threshold a probability series into binary percepts; the 1 side
/// includes equality.
pub fn classical_percept(p_state1: &[f64], threshold: f64) -> Vec<u8> {
    p_state1.iter().map(|&p| u8::from(p >= threshold)).collect()
}

/// Run the perception loop.
///
/// Run `i` trains a fresh network whose weights come from
/// `entropy.substream(i)`; for finite entropy providers the substream
/// block size defaults to the per-run weight count. The series is fully
/// reproducible from the configuration and the entropy provider state.
pub fn run_perception_experiment(
    cfg: &ExperimentConfig,
    entropy: &RandomSource,
) -> Result<PerceptionSeries> {
    cfg.validate()?;
    let mut set = cfg.stimuli.load()?;
    if cfg.swap_labels {
        set = set.swapped();
    }
    let input_len = set.class0.pixels().len();
    let samples = vec![
        Sample::labelled(set.class0.pixels().to_vec(), 0, 2)?,
        Sample::labelled(set.class1.pixels().to_vec(), 1, 2)?,
    ];
    let layer_sizes = cfg.layer_sizes(input_len);
    let source = match entropy.block_size() {
        Some(_) => entropy.clone(),
        None => entropy
            .clone()
            .with_block_size(cfg.words_per_run(input_len)),
    };

    let results: Vec<Result<RunRecord>> = (0..cfg.runs)
        .into_par_iter()
        .map(|run| {
            perception_run(
                run,
                cfg,
                &layer_sizes,
                &samples,
                set.ambiguous.pixels(),
                &source,
            )
        })
        .collect();

    let mut records = Vec::with_capacity(cfg.runs);
    for result in results {
        records.push(result?);
    }
    Ok(PerceptionSeries {
        records,
        threshold: cfg.threshold,
    })
}

fn perception_run(
    run: usize,
    cfg: &ExperimentConfig,
    layer_sizes: &[usize],
    samples: &[Sample],
    ambiguous: &[f64],
    source: &RandomSource,
) -> Result<RunRecord> {
    let with_run = |err: Error| -> Error {
        match err {
            Error::EntropyExhausted(m) => Error::EntropyExhausted(format!("run {run}: {m}")),
            Error::Divergence(m) => Error::Divergence(format!("run {run}: {m}")),
            other => other,
        }
    };
    let mut rng = source.substream(run as u64);
    let mut mlp = Mlp::new(layer_sizes, cfg.activation)?;
    mlp.init_weights(&mut rng).map_err(with_run)?;
    mlp.train(samples, &cfg.train, &mut rng).map_err(with_run)?;
    let output = mlp.forward(ambiguous).map_err(with_run)?.output;
    if !output.iter().all(|p| p.is_finite()) {
        return Err(Error::Divergence(format!(
            "run {run}: non-finite output probabilities"
        )));
    }
    Ok(RunRecord {
        run,
        p_state0: output[0],
        p_state1: output[1],
    })
}

/// Activation labels of [`ActivationComparison`], in series order.
pub const COMPARISON_LABELS: [&str; 3] = ["qt", "relu", "sigmoid"];

/// Result of running the same experiment under the three activation
/// functions with shared per-run weight initializations.
#[derive(Debug, Clone)]
pub struct ActivationComparison {
    /// Series in [`COMPARISON_LABELS`] order.
    pub series: [PerceptionSeries; 3],
    /// Pairwise DTW distances over the `P(state 1)` channel.
    pub dtw: [[f64; 3]; 3],
}

impl ActivationComparison {
    pub fn series_for(&self, label: &str) -> Option<&PerceptionSeries> {
        COMPARISON_LABELS
            .iter()
            .position(|&l| l == label)
            .map(|i| &self.series[i])
    }

    /// Serialize the DTW matrix as CSV with labelled rows and columns.
    pub fn write_dtw_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, ",{}", COMPARISON_LABELS.join(","))?;
        for (label, row) in COMPARISON_LABELS.iter().zip(&self.dtw) {
            let cells: Vec<String> = row.iter().map(|&d| crate::fmt_f64(d)).collect();
            writeln!(out, "{},{}", label, cells.join(","))?;
        }
        Ok(())
    }
}

/// Run the configured experiment three times — with the tunnelling
/// activation, ReLU, and sigmoid — off identical entropy substreams, so
/// run `i` starts from bit-identical weights in all three, then compare
/// the switching curves pairwise with DTW.
///
/// The tunnelling variant uses `cfg.activation` when it is a `Qt`, the
/// canonical barrier otherwise.
pub fn compare_activations(
    cfg: &ExperimentConfig,
    entropy: &RandomSource,
) -> Result<ActivationComparison> {
    let qt = match cfg.activation {
        ActivationKind::Qt(_) => cfg.activation,
        _ => ActivationKind::qt_default(),
    };
    let kinds = [qt, ActivationKind::Relu, ActivationKind::Sigmoid];
    let mut series = Vec::with_capacity(3);
    for kind in kinds {
        let mut variant = cfg.clone();
        variant.activation = kind;
        series.push(run_perception_experiment(&variant, entropy)?);
    }
    let channels: Vec<Vec<f64>> = series.iter().map(|s| s.p_state1()).collect();
    let mut dtw = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in (i + 1)..3 {
            let distance = dtw_distance(&channels[i], &channels[j])?.distance;
            dtw[i][j] = distance;
            dtw[j][i] = distance;
        }
    }
    let series: [PerceptionSeries; 3] = series.try_into().expect("three series");
    Ok(ActivationComparison { series, dtw })
}
