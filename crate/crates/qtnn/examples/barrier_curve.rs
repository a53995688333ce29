//! Transmission probability of a particle hitting a rectangular barrier,
//! for several barrier thicknesses.
//!
//! Prints landmark values and writes one CSV per thickness, ready for any
//! plotting tool:
//!
//! ```bash
//! cargo run --example barrier_curve
//! ```

use qtnn::tunnelling::{barrier_curve, transmission, write_curve_csv, BarrierParams};

fn main() -> qtnn::Result<()> {
    for &s in &[0.5, 1.0, 2.0, 3.0] {
        let barrier = BarrierParams::new(1.0, s)?;

        // Classically a particle with E < V0 never crosses; here it does.
        let sub = transmission(0.5, &barrier)?;
        let at = transmission(1.0, &barrier)?;
        // First over-barrier resonance: kappa * a = pi.
        let resonance = 1.0 + (std::f64::consts::PI / barrier.width()).powi(2);
        let res = transmission(resonance, &barrier)?;
        println!("s = {s}: T(0.5 V0) = {sub:.6}, T(V0) = {at:.6}, T({resonance:.3} V0) = {res:.9}");

        let grid: Vec<f64> = (0..500).map(|k| 0.01 * (k + 1) as f64).collect();
        let curve = barrier_curve(&barrier, &grid)?;
        let path = format!("barrier_curve_s{s}.csv");
        let file = std::fs::File::create(&path)?;
        write_curve_csv(std::io::BufWriter::new(file), &curve)?;
        println!("  wrote {path} ({} points)", curve.len());
    }
    Ok(())
}
