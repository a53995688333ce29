//! Hidden- and output-layer activation functions.
//!
//! Hidden layers use one of three scalar maps: the barrier transmission
//! coefficient (the weighted sum is read directly as the particle energy),
//! ReLU, or the logistic sigmoid. The output layer is always softmax.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tunnelling::{transmission, transmission_derivative, BarrierParams};

/// A hidden-layer activation function: a value map and its derivative,
/// both defined on all finite reals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActivationKind {
    /// Barrier transmission probability of a particle with energy equal to
    /// the weighted sum. Bounded by 1, zero for non-positive sums, and
    /// non-monotonic above the barrier height (resonances).
    Qt(BarrierParams),
    Relu,
    Sigmoid,
}

impl ActivationKind {
    /// Canonical tunnelling activation: unit barrier height, `s = 0.5`.
    pub fn qt_default() -> Self {
        ActivationKind::Qt(BarrierParams::default())
    }

    /// Apply the value map to a weighted sum.
    pub fn activate(&self, v: f64) -> Result<f64> {
        if !v.is_finite() {
            return Err(Error::Domain(format!(
                "weighted sum must be finite, got {v}"
            )));
        }
        match self {
            ActivationKind::Qt(b) => transmission(v, b),
            ActivationKind::Relu => Ok(v.max(0.0)),
            ActivationKind::Sigmoid => Ok(sigmoid(v)),
        }
    }

    /// Apply the derivative map to a weighted sum.
    ///
    /// ReLU's subgradient at 0 is taken as 0.
    pub fn derivative(&self, v: f64) -> Result<f64> {
        if !v.is_finite() {
            return Err(Error::Domain(format!(
                "weighted sum must be finite, got {v}"
            )));
        }
        match self {
            ActivationKind::Qt(b) => transmission_derivative(v, b),
            ActivationKind::Relu => Ok(if v > 0.0 { 1.0 } else { 0.0 }),
            ActivationKind::Sigmoid => {
                let s = sigmoid(v);
                Ok(s * (1.0 - s))
            }
        }
    }

    /// Short config-file name, the inverse of the [`FromStr`] parser.
    pub fn config_name(&self) -> String {
        match self {
            ActivationKind::Qt(b) => format!("qt:v0={},s={}", b.v0(), b.s()),
            ActivationKind::Relu => "relu".into(),
            ActivationKind::Sigmoid => "sigmoid".into(),
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.config_name())
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    /// Parses `"relu"`, `"sigmoid"`, or `"qt:v0=<float>,s=<float>"`.
    /// A bare `"qt"` selects the canonical barrier.
    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        match text {
            "relu" => return Ok(ActivationKind::Relu),
            "sigmoid" => return Ok(ActivationKind::Sigmoid),
            "qt" => return Ok(ActivationKind::qt_default()),
            _ => {}
        }
        if let Some(params) = text.strip_prefix("qt:") {
            let mut v0 = None;
            let mut s = None;
            for part in params.split(',') {
                let (key, value) = part.split_once('=').ok_or_else(|| {
                    Error::Usage(format!("malformed activation parameter '{part}'"))
                })?;
                let value: f64 = value.trim().parse().map_err(|_| {
                    Error::Usage(format!("invalid number '{}' in activation spec", value))
                })?;
                match key.trim() {
                    "v0" => v0 = Some(value),
                    "s" => s = Some(value),
                    other => {
                        return Err(Error::Usage(format!(
                            "unknown activation parameter '{other}'"
                        )))
                    }
                }
            }
            let v0 = v0.ok_or_else(|| Error::Usage("qt activation needs v0=<float>".into()))?;
            let s = s.ok_or_else(|| Error::Usage("qt activation needs s=<float>".into()))?;
            return Ok(ActivationKind::Qt(BarrierParams::new(v0, s)?));
        }
        Err(Error::Usage(format!(
            "unknown activation '{text}' (expected qt:v0=<f>,s=<f>, relu or sigmoid)"
        )))
    }
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Softmax with max-subtraction for overflow safety.
///
/// The result has strictly positive entries summing to 1 (within 1e-12)
/// and is invariant under adding a constant to every input.
pub fn softmax(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::Usage("softmax input is empty".into()));
    }
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        if !v.is_finite() {
            return Err(Error::Domain(format!(
                "softmax input must be finite, got {v}"
            )));
        }
        max = max.max(v);
    }
    let exps: Vec<f64> = values.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}
