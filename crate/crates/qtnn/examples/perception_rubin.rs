//! The perception loop on the figure-ground vase (20x20 rasters, 400
//! input nodes). Same protocol as the cube; the contour drawing plays the
//! role of the ambiguous probe:
//!
//! ```bash
//! cargo run --release --example perception_rubin
//! ```

use qtnn::activation::ActivationKind;
use qtnn::experiment::{run_perception_experiment, ExperimentConfig, StimulusSource};
use qtnn::rng::RandomSource;

fn main() -> qtnn::Result<()> {
    let cfg = ExperimentConfig::new(StimulusSource::Rubin, ActivationKind::qt_default());
    // The same entropy stream as the cube example, so the two figures are
    // probed under identical weight histories.
    let entropy = RandomSource::seeded(1);
    let series = run_perception_experiment(&cfg, &entropy)?;

    println!("run  P(faces)  P(vase)   percept");
    for (record, percept) in series.records.iter().zip(series.classical_percepts()) {
        let bar_len = (record.p_state1 * 30.0).round() as usize;
        println!(
            "{:3}   {:.4}    {:.4}    {}  |{}",
            record.run,
            record.p_state0,
            record.p_state1,
            percept,
            "=".repeat(bar_len)
        );
    }

    let file = std::fs::File::create("rubin_series.csv")?;
    series.write_csv(std::io::BufWriter::new(file))?;
    println!("\nwrote rubin_series.csv");
    Ok(())
}
