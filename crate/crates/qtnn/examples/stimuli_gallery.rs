//! Render the canonical stimulus sets as ASCII art and save them as PGM
//! files:
//!
//! ```bash
//! cargo run --example stimuli_gallery
//! ```

use qtnn::stimuli::{necker_set, rubin_set, save_stimulus, Stimulus};

fn render(stimulus: &Stimulus) {
    println!("{} ({} lit pixels)", stimulus.tag(), stimulus.lit_count());
    for row in 0..stimulus.height() {
        let line: String = (0..stimulus.width())
            .map(|col| {
                if stimulus.get(row, col) > 0.5 {
                    '#'
                } else {
                    '.'
                }
            })
            .collect();
        println!("  {line}");
    }
    println!();
}

fn main() -> qtnn::Result<()> {
    let out = std::path::Path::new("stimuli");
    std::fs::create_dir_all(out)?;
    for set in [necker_set(), rubin_set()] {
        for stimulus in [&set.class0, &set.class1, &set.ambiguous] {
            render(stimulus);
            let name = stimulus.tag().name().replace('-', "_");
            save_stimulus(stimulus, &out.join(format!("{name}.pgm")))?;
        }
    }
    println!("saved all rasters under {}/", out.display());
    Ok(())
}
