//! The full perception loop on the cube: 40 runs, each training a freshly
//! initialized network and probing it with the ambiguous wireframe. The
//! output probability drifts between the two stable percepts, visiting
//! intermediate states on the way:
//!
//! ```bash
//! cargo run --release --example perception_necker
//! ```

use qtnn::activation::ActivationKind;
use qtnn::experiment::{run_perception_experiment, ExperimentConfig, StimulusSource};
use qtnn::rng::RandomSource;

fn main() -> qtnn::Result<()> {
    let cfg = ExperimentConfig::new(StimulusSource::Necker, ActivationKind::qt_default());
    let entropy = RandomSource::seeded(1);
    let series = run_perception_experiment(&cfg, &entropy)?;

    println!("run  P(front)  P(rear)   percept");
    let percepts = series.classical_percepts();
    for (record, percept) in series.records.iter().zip(&percepts) {
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

    let switches = percepts.windows(2).filter(|p| p[0] != p[1]).count();
    let intermediate = series
        .p_state1()
        .iter()
        .filter(|&&p| p > 0.05 && p < 0.95)
        .count();
    println!(
        "\n{} percept switches, {} runs in an intermediate state",
        switches, intermediate
    );

    let file = std::fs::File::create("necker_series.csv")?;
    series.write_csv(std::io::BufWriter::new(file))?;
    println!("wrote necker_series.csv");
    Ok(())
}
