//! Fully connected feedforward network trained by per-sample
//! backpropagation.
//!
//! The architecture follows the experiment setup: an input layer of `L`
//! nodes, hidden layers (three of 20 nodes by default) sharing one
//! activation function, and a softmax output layer of `M` nodes. There
//! are no bias terms; every parameter lives in the weight matrices
//! `W(n)`.
//!
//! Training applies, per sample, the rule
//! `w_ij(n) <- w_ij(n) + rate * delta_i(n) * x_j(n)` where `x(n)` is the
//! layer input, the output delta is the raw error `d - y` (the
//! cross-entropy gradient under softmax), and hidden deltas are
//! `phi'(v(n)) .* (W(n+1)^T delta(n+1))`. All deltas of one step are
//! computed from the pre-update weights, then applied at once.

use crate::activation::{softmax, ActivationKind};
use crate::error::{Error, Result};
use crate::rng::RandomSource;

/// Default hidden width of the experiment networks.
pub const DEFAULT_HIDDEN_NODES: usize = 20;
/// Default number of hidden layers.
pub const DEFAULT_HIDDEN_LAYERS: usize = 3;
/// Default learning rate. Large rates destabilize the per-sample rule on
/// raster inputs (see the training notes in the README); 0.002 converges
/// reliably for all three activation kinds.
pub const DEFAULT_LEARNING_RATE: f64 = 0.002;
/// Default number of training epochs.
pub const DEFAULT_EPOCHS: usize = 1000;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    /// `self * x`
    fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for (r, out_r) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let mut acc = 0.0;
            for (w, xi) in row.iter().zip(x) {
                acc += w * xi;
            }
            *out_r = acc;
        }
        out
    }

    /// `self^T * y`
    fn transpose_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &yr) in y.iter().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for (o, w) in out.iter_mut().zip(row) {
                *o += w * yr;
            }
        }
        out
    }

    /// `self += rate * delta (outer) input`
    fn add_scaled_outer(&mut self, rate: f64, delta: &[f64], input: &[f64]) {
        debug_assert_eq!(delta.len(), self.rows);
        debug_assert_eq!(input.len(), self.cols);
        for (r, &d) in delta.iter().enumerate() {
            let step = rate * d;
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (w, xi) in row.iter_mut().zip(input) {
                *w += step * xi;
            }
        }
    }

    fn is_finite(&self) -> bool {
        self.data.iter().all(|w| w.is_finite())
    }
}

/// One labelled training pair: an input vector with entries in `[0, 1]`
/// and a one-hot target.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    input: Vec<f64>,
    target: Vec<f64>,
}

impl Sample {
    /// Build a sample from an explicit one-hot target.
    pub fn new(input: Vec<f64>, target: Vec<f64>) -> Result<Self> {
        for &x in &input {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::Validation(format!(
                    "sample input entry {x} outside [0, 1]"
                )));
            }
        }
        let ones = target.iter().filter(|&&d| d == 1.0).count();
        let zeros = target.iter().filter(|&&d| d == 0.0).count();
        if ones != 1 || ones + zeros != target.len() {
            return Err(Error::Validation(
                "sample target must be one-hot (exactly one 1, rest 0)".into(),
            ));
        }
        Ok(Self { input, target })
    }

    /// Build a sample targeting class `label` out of `classes`.
    pub fn labelled(input: Vec<f64>, label: usize, classes: usize) -> Result<Self> {
        if label >= classes {
            return Err(Error::Usage(format!(
                "label {label} out of range for {classes} classes"
            )));
        }
        let mut target = vec![0.0; classes];
        target[label] = 1.0;
        Self::new(input, target)
    }

    pub fn input(&self) -> &[f64] {
        &self.input
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    /// Index of the 1 in the target vector.
    pub fn label(&self) -> usize {
        self.target.iter().position(|&d| d == 1.0).expect("one-hot")
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Draw a fresh presentation order from the entropy stream each epoch
    /// instead of dataset order.
    pub shuffle: bool,
}

impl TrainConfig {
    pub fn new(learning_rate: f64, epochs: usize) -> Result<Self> {
        let cfg = Self {
            learning_rate,
            epochs,
            shuffle: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::Usage(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Usage("epochs must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: DEFAULT_LEARNING_RATE,
            epochs: DEFAULT_EPOCHS,
            shuffle: false,
        }
    }
}

/// Intermediate state of one forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    /// Weighted sums per weight layer; the last entry holds the output
    /// logits.
    pub pre_activations: Vec<Vec<f64>>,
    /// Hidden activations per hidden layer.
    pub hidden_activations: Vec<Vec<f64>>,
    /// Softmax output probabilities.
    pub output: Vec<f64>,
}

/// A multilayer perceptron with softmax output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layer_sizes: Vec<usize>,
    weights: Vec<Matrix>,
    hidden: ActivationKind,
}

impl Mlp {
    /// Network with the given layer sizes (input first, output last) and
    /// all weights zero.
    pub fn new(layer_sizes: &[usize], hidden: ActivationKind) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::Usage(
                "a network needs at least an input and an output layer".into(),
            ));
        }
        if layer_sizes.contains(&0) {
            return Err(Error::Usage("layer sizes must be positive".into()));
        }
        let weights = layer_sizes
            .windows(2)
            .map(|pair| Matrix::zeros(pair[1], pair[0]))
            .collect();
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            hidden,
        })
    }

    /// The default experiment architecture for a given input length:
    /// three hidden layers of 20 nodes and two output nodes.
    pub fn default_for_input(input_len: usize, hidden: ActivationKind) -> Result<Self> {
        let mut sizes = vec![input_len];
        sizes.extend(std::iter::repeat_n(
            DEFAULT_HIDDEN_NODES,
            DEFAULT_HIDDEN_LAYERS,
        ));
        sizes.push(2);
        Self::new(&sizes, hidden)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn hidden_activation(&self) -> ActivationKind {
        self.hidden
    }

    pub fn input_len(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    /// Total number of weights.
    pub fn weight_count(&self) -> usize {
        self.weights.iter().map(|w| w.data.len()).sum()
    }

    /// Number of weight layers.
    pub fn weight_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, layer: usize, row: usize, col: usize) -> f64 {
        self.weights[layer].get(row, col)
    }

    pub fn set_weight(&mut self, layer: usize, row: usize, col: usize, value: f64) {
        self.weights[layer].set(row, col, value);
    }

    /// Draw every weight from the entropy stream, layer-major and
    /// row-major within each matrix, so a given stream always produces
    /// bit-identical weights.
    pub fn init_weights(&mut self, rng: &mut RandomSource) -> Result<()> {
        for matrix in &mut self.weights {
            for w in &mut matrix.data {
                *w = rng.next_uniform()?;
            }
        }
        Ok(())
    }

    /// Forward pass: weighted sums through the hidden activation, softmax
    /// on the output layer.
    pub fn forward(&self, input: &[f64]) -> Result<Forward> {
        if input.len() != self.input_len() {
            return Err(Error::Usage(format!(
                "input length {} does not match input layer {}",
                input.len(),
                self.input_len()
            )));
        }
        let layers = self.weights.len();
        let mut pre_activations = Vec::with_capacity(layers);
        let mut hidden_activations = Vec::with_capacity(layers - 1);
        let mut current: Vec<f64> = input.to_vec();
        for (n, matrix) in self.weights.iter().enumerate() {
            let v = matrix.mul_vec(&current);
            if n + 1 < layers {
                let mut h = Vec::with_capacity(v.len());
                for &vi in &v {
                    h.push(self.hidden.activate(vi)?);
                }
                pre_activations.push(v);
                hidden_activations.push(h.clone());
                current = h;
            } else {
                let output = softmax(&v)?;
                pre_activations.push(v);
                return Ok(Forward {
                    pre_activations,
                    hidden_activations,
                    output,
                });
            }
        }
        unreachable!("constructor guarantees at least one weight layer")
    }

    /// One training step on one sample. Returns the error vector
    /// `e = d - y` observed before the update.
    pub fn backprop_step(&mut self, sample: &Sample, rate: f64) -> Result<Vec<f64>> {
        self.check_sample(sample)?;
        let forward = self.forward(sample.input())?;
        let error: Vec<f64> = sample
            .target()
            .iter()
            .zip(&forward.output)
            .map(|(d, y)| d - y)
            .collect();

        let layers = self.weights.len();
        let mut deltas: Vec<Vec<f64>> = vec![Vec::new(); layers];
        deltas[layers - 1] = error.clone();
        for n in (0..layers - 1).rev() {
            let back = self.weights[n + 1].transpose_mul_vec(&deltas[n + 1]);
            let mut delta = Vec::with_capacity(back.len());
            for (b, &v) in back.iter().zip(&forward.pre_activations[n]) {
                delta.push(self.hidden.derivative(v)? * b);
            }
            deltas[n] = delta;
        }

        // All deltas are derived from the pre-update weights; only now do
        // the updates land.
        for (n, (matrix, delta)) in self.weights.iter_mut().zip(&deltas).enumerate() {
            let input = if n == 0 {
                sample.input()
            } else {
                &forward.hidden_activations[n - 1]
            };
            matrix.add_scaled_outer(rate, delta, input);
        }
        Ok(error)
    }

    /// Train over the sample list for `cfg.epochs` epochs of sequential
    /// per-sample updates. Returns the per-epoch mean cross-entropy loss,
    /// each sample's loss measured on the forward pass of its own update.
    pub fn train(
        &mut self,
        samples: &[Sample],
        cfg: &TrainConfig,
        rng: &mut RandomSource,
    ) -> Result<Vec<f64>> {
        cfg.validate()?;
        if samples.is_empty() {
            return Err(Error::Usage("training sample list is empty".into()));
        }
        for sample in samples {
            self.check_sample(sample)?;
        }
        let mut order: Vec<usize> = (0..samples.len()).collect();
        let mut trace = Vec::with_capacity(cfg.epochs);
        for epoch in 0..cfg.epochs {
            if cfg.shuffle {
                shuffle_in_place(&mut order, rng)?;
            }
            let mut loss_sum = 0.0;
            for &idx in &order {
                let sample = &samples[idx];
                let forward = self.map_divergence(self.forward(sample.input()), epoch)?;
                loss_sum += cross_entropy(sample.target(), &forward.output);
                let step = self.backprop_step(sample, cfg.learning_rate);
                self.map_divergence(step, epoch)?;
            }
            trace.push(loss_sum / samples.len() as f64);
            if !self.weights.iter().all(Matrix::is_finite) {
                return Err(Error::Divergence(format!(
                    "non-finite weights after epoch {epoch}"
                )));
            }
        }
        Ok(trace)
    }

    /// Forward pass plus argmax label, ties broken toward the lower index.
    pub fn classify(&self, input: &[f64]) -> Result<(Vec<f64>, usize)> {
        let output = self.forward(input)?.output;
        let mut label = 0;
        for (i, &p) in output.iter().enumerate() {
            if p > output[label] {
                label = i;
            }
        }
        Ok((output, label))
    }

    /// Cross-entropy loss of the network on one sample.
    pub fn loss(&self, sample: &Sample) -> Result<f64> {
        self.check_sample(sample)?;
        let forward = self.forward(sample.input())?;
        Ok(cross_entropy(sample.target(), &forward.output))
    }

    fn check_sample(&self, sample: &Sample) -> Result<()> {
        if sample.input().len() != self.input_len() {
            return Err(Error::Usage(format!(
                "sample input length {} does not match input layer {}",
                sample.input().len(),
                self.input_len()
            )));
        }
        if sample.target().len() != self.output_len() {
            return Err(Error::Usage(format!(
                "sample target length {} does not match output layer {}",
                sample.target().len(),
                self.output_len()
            )));
        }
        Ok(())
    }

    fn map_divergence<T>(&self, result: Result<T>, epoch: usize) -> Result<T> {
        result.map_err(|err| match err {
            Error::Domain(message) => Error::Divergence(format!("epoch {epoch}: {message}")),
            other => other,
        })
    }

    /// Serialize the network as a versioned text dump: a header, the layer
    /// sizes, the activation, then one `W,<n>,<rows>,<cols>` section per
    /// weight matrix with row-major 17-significant-digit rows.
    pub fn save_weights<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "qtnn-weights,1")?;
        let sizes: Vec<String> = self.layer_sizes.iter().map(|n| n.to_string()).collect();
        writeln!(out, "sizes,{}", sizes.join(","))?;
        writeln!(out, "activation,{}", self.hidden.config_name())?;
        for (n, matrix) in self.weights.iter().enumerate() {
            writeln!(out, "W,{},{},{}", n + 1, matrix.rows, matrix.cols)?;
            for r in 0..matrix.rows {
                let row: Vec<String> = (0..matrix.cols)
                    .map(|c| crate::fmt_f64(matrix.get(r, c)))
                    .collect();
                writeln!(out, "{}", row.join(","))?;
            }
        }
        Ok(())
    }

    /// Load a network saved by [`Mlp::save_weights`]. Round-trips exactly.
    pub fn load_weights<R: std::io::BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let mut next_line = |expect: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((idx, Ok(line))) => Ok((idx + 1, line)),
                Some((_, Err(err))) => Err(Error::Io(err)),
                None => Err(Error::Validation(format!(
                    "weight dump ended early, expected {expect}"
                ))),
            }
        };

        let (line_no, header) = next_line("header")?;
        if header.trim() != "qtnn-weights,1" {
            return Err(Error::parse(line_no, 1, "expected header 'qtnn-weights,1'"));
        }
        let (line_no, sizes_line) = next_line("layer sizes")?;
        let mut fields = sizes_line.split(',');
        if fields.next() != Some("sizes") {
            return Err(Error::parse(line_no, 1, "expected 'sizes,...'"));
        }
        let layer_sizes: Vec<usize> = fields
            .enumerate()
            .map(|(col, field)| {
                field.trim().parse().map_err(|_| {
                    Error::parse(line_no, col + 2, format!("invalid layer size '{field}'"))
                })
            })
            .collect::<Result<_>>()?;
        let (line_no, activation_line) = next_line("activation")?;
        let activation = activation_line
            .strip_prefix("activation,")
            .ok_or_else(|| Error::parse(line_no, 1, "expected 'activation,<kind>'"))?
            .parse::<ActivationKind>()?;

        let mut mlp = Mlp::new(&layer_sizes, activation)?;
        for n in 0..mlp.weights.len() {
            let (line_no, section) = next_line("matrix section")?;
            let expected_rows = mlp.weights[n].rows;
            let expected_cols = mlp.weights[n].cols;
            let expected = format!("W,{},{},{}", n + 1, expected_rows, expected_cols);
            if section.trim() != expected {
                return Err(Error::parse(
                    line_no,
                    1,
                    format!("expected section '{expected}', found '{section}'"),
                ));
            }
            for r in 0..expected_rows {
                let (line_no, row) = next_line("matrix row")?;
                let values: Vec<&str> = row.split(',').collect();
                if values.len() != expected_cols {
                    return Err(Error::parse(
                        line_no,
                        1,
                        format!("expected {expected_cols} values, found {}", values.len()),
                    ));
                }
                for (c, field) in values.iter().enumerate() {
                    let value: f64 = field.trim().parse().map_err(|_| {
                        Error::parse(line_no, c + 1, format!("invalid weight '{field}'"))
                    })?;
                    if !value.is_finite() {
                        return Err(Error::Validation(format!(
                            "non-finite weight at line {line_no}"
                        )));
                    }
                    mlp.weights[n].set(r, c, value);
                }
            }
        }
        Ok(mlp)
    }
}

fn cross_entropy(target: &[f64], output: &[f64]) -> f64 {
    let mut loss = 0.0;
    for (d, y) in target.iter().zip(output) {
        if *d != 0.0 {
            loss -= d * y.max(1e-300).ln();
        }
    }
    loss
}

/// Fisher-Yates shuffle driven by the entropy stream.
fn shuffle_in_place(order: &mut [usize], rng: &mut RandomSource) -> Result<()> {
    for i in (1..order.len()).rev() {
        let unit = (rng.next_uniform()? + 1.0) / 2.0;
        let j = ((unit * (i + 1) as f64) as usize).min(i);
        order.swap(i, j);
    }
    Ok(())
}
