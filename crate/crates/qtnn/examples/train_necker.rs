//! Train one network on the two unambiguous cube images and inspect what
//! it makes of the ambiguous wireframe:
//!
//! ```bash
//! cargo run --example train_necker
//! ```

use qtnn::activation::ActivationKind;
use qtnn::network::{Mlp, Sample, TrainConfig};
use qtnn::rng::RandomSource;
use qtnn::stimuli::necker_set;

fn main() -> qtnn::Result<()> {
    let set = necker_set();
    let samples = [
        Sample::labelled(set.class0.pixels().to_vec(), 0, 2)?,
        Sample::labelled(set.class1.pixels().to_vec(), 1, 2)?,
    ];

    let mut mlp = Mlp::default_for_input(set.class0.pixels().len(), ActivationKind::qt_default())?;
    println!(
        "network {:?}, {} weights, hidden activation {}",
        mlp.layer_sizes(),
        mlp.weight_count(),
        mlp.hidden_activation()
    );

    let mut rng = RandomSource::seeded(2024);
    mlp.init_weights(&mut rng)?;
    let cfg = TrainConfig::default();
    let trace = mlp.train(&samples, &cfg, &mut rng)?;
    for epoch in [0, 9, 99, 499, cfg.epochs - 1] {
        println!("epoch {epoch:4}: mean cross-entropy {:.6}", trace[epoch]);
    }

    for (name, stimulus) in [
        ("front-shaded", &set.class0),
        ("rear-shaded ", &set.class1),
        ("ambiguous   ", &set.ambiguous),
    ] {
        let (probs, label) = mlp.classify(stimulus.pixels())?;
        println!(
            "{name}: P = [{:.4}, {:.4}] -> class {label}",
            probs[0], probs[1]
        );
    }

    // The trained state round-trips through the text dump exactly.
    let mut dump = Vec::new();
    mlp.save_weights(&mut dump)?;
    let restored = Mlp::load_weights(std::io::BufReader::new(&dump[..]))?;
    assert_eq!(restored, mlp);
    println!("weight dump round-trips ({} bytes)", dump.len());
    Ok(())
}
