//! Verify the backpropagation rule against numerical differentiation.
//!
//! The per-sample update is `w += rate * delta * x`; with the softmax
//! output and the raw error as the output delta this must equal
//! `-rate * d(cross-entropy)/dw` for every weight. Checking it with
//! central differences exercises the analytic activation derivatives,
//! including the tunnelling one:
//!
//! ```bash
//! cargo run --example gradient_check
//! ```

use qtnn::activation::ActivationKind;
use qtnn::network::{Mlp, Sample};
use qtnn::rng::RandomSource;

fn main() -> qtnn::Result<()> {
    for kind in [
        ActivationKind::qt_default(),
        ActivationKind::Relu,
        ActivationKind::Sigmoid,
    ] {
        let mut mlp = Mlp::new(&[4, 5, 3], kind)?;
        let mut rng = RandomSource::seeded(99);
        mlp.init_weights(&mut rng)?;
        let input: Vec<f64> = (0..4)
            .map(|_| (rng.next_uniform().unwrap() + 1.0) / 2.0)
            .collect();
        let sample = Sample::labelled(input, 1, 3)?;

        let rate = 1e-3;
        let mut updated = mlp.clone();
        updated.backprop_step(&sample, rate)?;

        let mut worst: f64 = 0.0;
        let h = 1e-6;
        for layer in 0..mlp.weight_layers() {
            for r in 0..mlp.layer_sizes()[layer + 1] {
                for c in 0..mlp.layer_sizes()[layer] {
                    let w = mlp.weight(layer, r, c);
                    let mut plus = mlp.clone();
                    plus.set_weight(layer, r, c, w + h);
                    let mut minus = mlp.clone();
                    minus.set_weight(layer, r, c, w - h);
                    let grad = (plus.loss(&sample)? - minus.loss(&sample)?) / (2.0 * h);
                    let update = updated.weight(layer, r, c) - w;
                    let expected = -rate * grad;
                    let denom = update.abs().max(expected.abs()).max(1e-10);
                    worst = worst.max(((update - expected) / denom).abs());
                }
            }
        }
        println!("{kind}: worst relative gradient mismatch {worst:.3e}");
    }
    Ok(())
}
