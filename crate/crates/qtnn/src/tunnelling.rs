//! Transmission coefficient of a one-dimensional rectangular potential
//! barrier, in closed form, together with its derivative with respect to
//! the particle energy.
//!
//! Everything is expressed in natural units `hbar = 1`, `2m = 1`, so a
//! barrier is fully described by its height `v0` and the dimensionless
//! thickness `s = sqrt(2 m v0) * a / hbar`; the geometric width follows as
//! `a = s / sqrt(v0)`. With this convention the transmission curve depends
//! only on `E / v0` and `s`.
//!
//! Three regimes apply:
//!
//! * `E < v0`: evanescent tunnelling, `T = (1 - beta * sinh^2(kappa1 a))^-1`
//!   with `kappa1 = sqrt(v0 - E)` and `beta = v0^2 / (4 E (E - v0)) < 0`;
//! * `E > v0`: over-barrier scattering, `T = (1 + beta * sin^2(kappa a))^-1`
//!   with `kappa = sqrt(E - v0)` and `beta > 0`, unity at the resonances
//!   `kappa a = n pi`;
//! * `E = v0`: the removable singularity, `T = (1 + a^2 v0 / 4)^-1`.
//!
//! Energies at or below zero transmit nothing; both `T` and `dT/dE` are
//! extended continuously by zero there so the functions are total on the
//! reals (the network feeds raw weighted sums in here).

use crate::error::{Error, Result};

/// Relative half-width of the energy window around `v0` treated as the
/// `E = v0` branch, avoiding the 0/0 form of `beta`.
const BRANCH_EPS: f64 = 1e-12;

/// A rectangular potential barrier.
///
/// `v0` is the height in natural energy units and `s` the dimensionless
/// thickness `sqrt(2 m v0) * a / hbar`. Both must be finite and positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierParams {
    v0: f64,
    s: f64,
}

impl BarrierParams {
    pub fn new(v0: f64, s: f64) -> Result<Self> {
        if !v0.is_finite() || v0 <= 0.0 {
            return Err(Error::Domain(format!(
                "barrier height v0 must be finite and positive, got {v0}"
            )));
        }
        if !s.is_finite() || s <= 0.0 {
            return Err(Error::Domain(format!(
                "barrier thickness s must be finite and positive, got {s}"
            )));
        }
        Ok(Self { v0, s })
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Geometric width `a = s / sqrt(v0)` in natural units.
    pub fn width(&self) -> f64 {
        self.s / self.v0.sqrt()
    }
}

impl Default for BarrierParams {
    /// The canonical barrier used throughout the experiments: unit height,
    /// `s = 0.5`.
    fn default() -> Self {
        Self { v0: 1.0, s: 0.5 }
    }
}

/// Probability that a particle of energy `energy` traverses the barrier.
///
/// Returns a value in `[0, 1]`. Zero and negative energies yield exactly 0.
/// Non-finite energies are a domain error.
pub fn transmission(energy: f64, barrier: &BarrierParams) -> Result<f64> {
    if !energy.is_finite() {
        return Err(Error::Domain(format!(
            "energy must be finite, got {energy}"
        )));
    }
    if energy <= 0.0 {
        return Ok(0.0);
    }
    let v0 = barrier.v0;
    let a = barrier.width();
    let alpha = energy - v0;
    if alpha.abs() <= BRANCH_EPS * v0 {
        return Ok(1.0 / (1.0 + a * a * v0 / 4.0));
    }
    let beta = v0 * v0 / (4.0 * energy * alpha);
    let t = if energy < v0 {
        let sh = ((v0 - energy).sqrt() * a).sinh();
        // beta < 0 here, so the denominator is >= 1.
        1.0 / (1.0 - beta * sh * sh)
    } else {
        let sn = ((energy - v0).sqrt() * a).sin();
        1.0 / (1.0 + beta * sn * sn)
    };
    Ok(t)
}

/// Derivative `dT/dE` of [`transmission`] with respect to energy.
///
/// Uses the branch-appropriate analytic expression; at the `E = v0`
/// crossover the closed-form limit
/// `(4 v0 a^4 m^2 + 6 a^2 hbar^2 m) / (3 v0^2 a^4 m^2 + 12 v0 a^2 hbar^2 m + 12 hbar^4)`
/// applies (with `m = 1/2`, `hbar = 1`). Zero and negative energies yield 0
/// by the same continuous extension as the value map.
pub fn transmission_derivative(energy: f64, barrier: &BarrierParams) -> Result<f64> {
    if !energy.is_finite() {
        return Err(Error::Domain(format!(
            "energy must be finite, got {energy}"
        )));
    }
    if energy <= 0.0 {
        return Ok(0.0);
    }
    let v0 = barrier.v0;
    let a = barrier.width();
    let alpha = energy - v0;
    if alpha.abs() <= BRANCH_EPS * v0 {
        let a2 = a * a;
        let a4 = a2 * a2;
        // m = 1/2, hbar = 1.
        return Ok((v0 * a4 + 3.0 * a2) / (0.75 * v0 * v0 * a4 + 6.0 * v0 * a2 + 12.0));
    }
    let beta = v0 * v0 / (4.0 * energy * alpha);
    let t = transmission(energy, barrier)?;
    let d = if energy < v0 {
        let delta1 = (v0 - energy).sqrt() * a;
        let sh = delta1.sinh();
        let ch = delta1.cosh();
        let bracket = sh * sh / energy + (sh * sh - delta1 * ch * sh) / alpha;
        -beta * bracket * t * t
    } else {
        let delta = (energy - v0).sqrt() * a;
        let sn = delta.sin();
        let cs = delta.cos();
        let bracket = sn * sn / energy + (sn * sn - delta * cs * sn) / alpha;
        beta * bracket * t * t
    };
    Ok(d)
}

/// Evaluate the transmission curve on an energy grid.
///
/// The grid must be non-empty, strictly increasing and non-negative.
/// Returns `(E / v0, T)` pairs, one per grid point.
pub fn barrier_curve(barrier: &BarrierParams, energies: &[f64]) -> Result<Vec<(f64, f64)>> {
    if energies.is_empty() {
        return Err(Error::Usage("energy grid is empty".into()));
    }
    for pair in energies.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::Usage(format!(
                "energy grid must be strictly increasing ({} followed by {})",
                pair[0], pair[1]
            )));
        }
    }
    if energies[0] < 0.0 {
        return Err(Error::Usage(format!(
            "energy grid must be non-negative, starts at {}",
            energies[0]
        )));
    }
    energies
        .iter()
        .map(|&e| transmission(e, barrier).map(|t| (e / barrier.v0, t)))
        .collect()
}

/// Write a curve as CSV with header `E_over_V0,T` and 17-significant-digit
/// floats, the format consumed by plotting scripts.
pub fn write_curve_csv<W: std::io::Write>(
    mut out: W,
    points: &[(f64, f64)],
) -> std::io::Result<()> {
    writeln!(out, "E_over_V0,T")?;
    for &(ratio, t) in points {
        writeln!(out, "{},{}", crate::fmt_f64(ratio), crate::fmt_f64(t))?;
    }
    Ok(())
}
