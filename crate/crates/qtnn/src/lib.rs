//! Feedforward neural networks whose hidden layers fire according to the
//! quantum-mechanical transmission probability of a rectangular potential
//! barrier, together with the apparatus to study them on bistable optical
//! illusions.
//!
//! The crate is organized around seven small modules:
//!
//! - [`tunnelling`] — closed-form barrier transmission coefficient
//!   `T(E)` and its energy derivative;
//! - [`activation`] — the hidden-layer activation family (tunnelling,
//!   ReLU, sigmoid) and the softmax output map;
//! - [`network`] — a from-scratch multilayer perceptron with per-sample
//!   backpropagation and no bias terms;
//! - [`rng`] — uniform `[-1, 1)` entropy streams: seeded splitmix64,
//!   entropy files, or a remote quantum random-number service with a
//!   local cache;
//! - [`stimuli`] — procedural cube and figure-ground vase rasters plus
//!   PGM/CSV raster I/O;
//! - [`experiment`] — the perception loop (re-initialize, train on the
//!   unambiguous pair, probe with the ambiguous image) and the
//!   three-activation comparison;
//! - [`analysis`] — dynamic time warping between switching curves.
//!
//! The `examples/` directory exercises each capability end to end; the
//! thin `qtnn` binary exposes the same flows as subcommands (see
//! [`cli`]).

pub mod activation;
pub mod analysis;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod network;
pub mod rng;
pub mod stimuli;
pub mod tunnelling;

pub use activation::{softmax, ActivationKind};
pub use analysis::{dtw_distance, DtwResult};
pub use error::{Error, Result};
pub use experiment::{
    classical_percept, compare_activations, run_perception_experiment, ActivationComparison,
    ExperimentConfig, PerceptionSeries, RunRecord, StimulusSource,
};
pub use network::{Mlp, Sample, TrainConfig};
pub use rng::{fetch_remote_entropy, QrngClient, RandomSource};
pub use stimuli::{necker_set, rubin_set, Stimulus, StimulusSet, StimulusTag};
pub use tunnelling::{barrier_curve, transmission, transmission_derivative, BarrierParams};

/// Format a float with 17 significant digits, enough to round-trip any
/// `f64` exactly; all CSV emitters share this representation.
pub(crate) fn fmt_f64(value: f64) -> String {
    format!("{value:.16e}")
}

#[cfg(test)]
mod tests {
    #[test]
    fn fmt_f64_round_trips() {
        for &v in &[
            0.0,
            1.0,
            -1.0,
            0.1,
            2.0 / 3.0,
            1e-300,
            f64::MAX,
            0.5f64.next_up(),
        ] {
            let text = super::fmt_f64(v);
            let back: f64 = text.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{text}");
        }
    }
}
