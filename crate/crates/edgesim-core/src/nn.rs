//! Hand-rolled dense feed-forward network trained by plain SGD.
//!
//! The network maps a state vector to one Q-value per action: an input
//! layer, ReLU hidden layers, and a linear output layer. Training minimises
//! `0.5 * (q[action] - target)^2` — the squared temporal-difference error of
//! the one action that was actually taken; all other outputs receive zero
//! gradient.
//!
//! Everything is `f64` and scalar (no SIMD, no batching beyond summing
//! gradients): the networks are small enough that clarity and reproducible
//! arithmetic win over throughput. A [`Workspace`] holds the per-layer
//! activation and delta buffers so repeated passes do not reallocate.

use crate::math;
use crate::rng::RngStream;
use alloc::vec::Vec;
use core::fmt;

/// Nonlinearity applied after a layer's affine transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Linear,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the layer *output* (valid for both
    /// supported activations: ReLU output is positive iff its input was).
    fn derivative_from_output(self, out: f64) -> f64 {
        match self {
            Activation::Relu => {
                if out > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }
}

/// One fully connected layer: `out = act(W x + b)` with `W` row-major
/// (`out_dim` rows of `in_dim` weights).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    fn forward_into(&self, input: &[f64], out: &mut Vec<f64>) {
        debug_assert_eq!(input.len(), self.in_dim);
        out.clear();
        for row in 0..self.out_dim {
            let w = &self.weights[row * self.in_dim..(row + 1) * self.in_dim];
            let mut z = self.biases[row];
            for (wi, xi) in w.iter().zip(input) {
                z += wi * xi;
            }
            out.push(self.activation.apply(z));
        }
    }
}

/// Why a network operation failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NnError {
    /// Input or action index does not fit the network's dimensions.
    DimensionMismatch { expected: usize, got: usize },
    /// Two networks do not share an architecture.
    ArchitectureMismatch,
}

impl fmt::Display for NnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NnError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            NnError::ArchitectureMismatch => f.write_str("network architectures differ"),
        }
    }
}

/// Per-parameter gradient accumulator, same shapes as the network.
#[derive(Debug, Clone)]
pub struct Gradients {
    /// `(d_weights, d_biases)` per layer.
    layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Gradients {
    /// Zeroed gradients shaped like `net`.
    pub fn zeroed_like(net: &DenseNetwork) -> Gradients {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| (alloc::vec![0.0; l.weights.len()], alloc::vec![0.0; l.biases.len()]))
                .collect(),
        }
    }

    pub fn zero(&mut self) {
        for (dw, db) in &mut self.layers {
            dw.iter_mut().for_each(|g| *g = 0.0);
            db.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    /// Multiply every gradient by `factor` (e.g. 1/batch for averaging).
    pub fn scale(&mut self, factor: f64) {
        for (dw, db) in &mut self.layers {
            dw.iter_mut().for_each(|g| *g *= factor);
            db.iter_mut().for_each(|g| *g *= factor);
        }
    }

    /// Global L2 norm over all parameters.
    pub fn global_norm(&self) -> f64 {
        let mut sum = 0.0;
        for (dw, db) in &self.layers {
            sum += dw.iter().map(|g| g * g).sum::<f64>();
            sum += db.iter().map(|g| g * g).sum::<f64>();
        }
        math::sqrt(sum)
    }
}

/// Reusable per-layer buffers for forward and backward passes.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    /// Post-activation outputs per layer (the input is not stored).
    activations: Vec<Vec<f64>>,
    /// Per-layer error terms during backprop.
    deltas: Vec<Vec<f64>>,
}

/// Fully connected network: input -> ReLU hidden layers -> linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNetwork {
    layers: Vec<DenseLayer>,
}

impl DenseNetwork {
    /// Build from explicit layers, validating that the dimensions chain.
    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<DenseNetwork, NnError> {
        if layers.is_empty() {
            return Err(NnError::ArchitectureMismatch);
        }
        for layer in &layers {
            if layer.weights.len() != layer.in_dim * layer.out_dim
                || layer.biases.len() != layer.out_dim
            {
                return Err(NnError::DimensionMismatch {
                    expected: layer.in_dim * layer.out_dim,
                    got: layer.weights.len(),
                });
            }
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(NnError::ArchitectureMismatch);
            }
        }
        Ok(DenseNetwork { layers })
    }

    /// Random network over the given dimension chain: ReLU on every layer
    /// but the last, which stays linear. Weights are uniform in
    /// `[-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))]`; biases zero.
    pub fn init(dims: &[usize], rng: &mut RngStream) -> DenseNetwork {
        assert!(dims.len() >= 2, "need at least input and output dimensions");
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for (idx, pair) in dims.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = math::sqrt(6.0 / (fan_in + fan_out) as f64);
            let weights = (0..fan_in * fan_out)
                .map(|_| rng.uniform_range(-bound, bound))
                .collect();
            layers.push(DenseLayer {
                in_dim: fan_in,
                out_dim: fan_out,
                weights,
                biases: alloc::vec![0.0; fan_out],
                activation: if idx + 1 == dims.len() - 1 {
                    Activation::Linear
                } else {
                    Activation::Relu
                },
            });
        }
        DenseNetwork { layers }
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    fn check_input(&self, input: &[f64]) -> Result<(), NnError> {
        if input.len() != self.input_dim() {
            return Err(NnError::DimensionMismatch {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        Ok(())
    }

    fn ensure_workspace(&self, ws: &mut Workspace) {
        if ws.activations.len() != self.layers.len() {
            ws.activations = self.layers.iter().map(|_| Vec::new()).collect();
            ws.deltas = self.layers.iter().map(|_| Vec::new()).collect();
        }
    }

    /// Forward pass; the returned slice (one Q-value per action) borrows the
    /// workspace and stays valid until its next use.
    pub fn forward<'w>(&self, input: &[f64], ws: &'w mut Workspace) -> Result<&'w [f64], NnError> {
        self.check_input(input)?;
        self.ensure_workspace(ws);
        for (idx, layer) in self.layers.iter().enumerate() {
            // Split so the previous activation can be read while writing the
            // current one.
            let (done, rest) = ws.activations.split_at_mut(idx);
            let out = &mut rest[0];
            match done.last() {
                Some(prev) => layer.forward_into(prev, out),
                None => layer.forward_into(input, out),
            }
        }
        Ok(ws.activations.last().expect("network has layers"))
    }

    /// Allocating convenience wrapper around [`DenseNetwork::forward`].
    pub fn evaluate(&self, input: &[f64]) -> Result<Vec<f64>, NnError> {
        let mut ws = Workspace::default();
        Ok(self.forward(input, &mut ws)?.to_vec())
    }

    /// Backward pass for the loss `0.5 * (q[action] - target)^2`.
    ///
    /// Runs its own forward pass, accumulates parameter gradients into
    /// `grads` (summing, so a minibatch is several calls plus a final
    /// [`Gradients::scale`]), and returns the signed temporal-difference
    /// error `q[action] - target`.
    pub fn backward(
        &self,
        input: &[f64],
        action: usize,
        target: f64,
        ws: &mut Workspace,
        grads: &mut Gradients,
    ) -> Result<f64, NnError> {
        if action >= self.output_dim() {
            return Err(NnError::DimensionMismatch {
                expected: self.output_dim(),
                got: action,
            });
        }
        self.forward(input, ws)?;

        let depth = self.layers.len();
        let td_error = ws.activations[depth - 1][action] - target;

        // Output delta: d(loss)/d(z) of the last layer — nonzero only at the
        // taken action (linear output, so act' = 1).
        {
            let last = &mut ws.deltas[depth - 1];
            last.clear();
            last.resize(self.output_dim(), 0.0);
            last[action] = td_error;
        }

        for idx in (0..depth).rev() {
            let layer = &self.layers[idx];
            // dW[row][col] += delta[row] * prev_activation[col]
            let (dw, db) = &mut grads.layers[idx];
            {
                let delta = &ws.deltas[idx];
                for row in 0..layer.out_dim {
                    let d = delta[row];
                    db[row] += d;
                    if d == 0.0 {
                        continue;
                    }
                    let wrow = &mut dw[row * layer.in_dim..(row + 1) * layer.in_dim];
                    if idx == 0 {
                        for (g, x) in wrow.iter_mut().zip(input) {
                            *g += d * x;
                        }
                    } else {
                        // Borrow of a different index than deltas[idx]; split
                        // via raw indexing on activations, which is disjoint
                        // from deltas.
                        for (col, g) in wrow.iter_mut().enumerate() {
                            *g += d * ws.activations[idx - 1][col];
                        }
                    }
                }
            }
            if idx == 0 {
                break;
            }
            // delta[idx-1] = (W^T delta[idx]) * act'(output[idx-1])
            let (head, tail) = ws.deltas.split_at_mut(idx);
            let prev_delta = &mut head[idx - 1];
            let delta = &tail[0];
            let prev_layer = &self.layers[idx - 1];
            prev_delta.clear();
            prev_delta.resize(layer.in_dim, 0.0);
            for row in 0..layer.out_dim {
                let d = delta[row];
                if d == 0.0 {
                    continue;
                }
                let wrow = &layer.weights[row * layer.in_dim..(row + 1) * layer.in_dim];
                for (pd, w) in prev_delta.iter_mut().zip(wrow) {
                    *pd += d * w;
                }
            }
            for (pd, out) in prev_delta.iter_mut().zip(&ws.activations[idx - 1]) {
                *pd *= prev_layer.activation.derivative_from_output(*out);
            }
        }
        Ok(td_error)
    }

    /// Gradient-descent step: `param -= lr * grad`, with optional global-norm
    /// clipping — if the gradients' L2 norm exceeds `clip`, they are scaled
    /// down to that norm before the step.
    pub fn apply_gradients(&mut self, grads: &Gradients, learning_rate: f64, clip: Option<f64>) {
        debug_assert_eq!(grads.layers.len(), self.layers.len());
        let mut factor = learning_rate;
        if let Some(threshold) = clip {
            let norm = grads.global_norm();
            if norm > threshold {
                factor *= threshold / norm;
            }
        }
        for (layer, (dw, db)) in self.layers.iter_mut().zip(&grads.layers) {
            for (w, g) in layer.weights.iter_mut().zip(dw) {
                *w -= factor * g;
            }
            for (b, g) in layer.biases.iter_mut().zip(db) {
                *b -= factor * g;
            }
        }
    }

    /// Overwrite this network's parameters with `other`'s (target-network
    /// sync). Architectures must match exactly.
    pub fn copy_parameters_from(&mut self, other: &DenseNetwork) -> Result<(), NnError> {
        let same_shape = self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| {
                    a.in_dim == b.in_dim && a.out_dim == b.out_dim && a.activation == b.activation
                });
        if !same_shape {
            return Err(NnError::ArchitectureMismatch);
        }
        for (mine, theirs) in self.layers.iter_mut().zip(&other.layers) {
            mine.weights.copy_from_slice(&theirs.weights);
            mine.biases.copy_from_slice(&theirs.biases);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    /// Tiny hand-checkable network: 2 -> 2 (ReLU) -> 2 (linear).
    fn toy_net() -> DenseNetwork {
        DenseNetwork::from_layers(alloc::vec![
            DenseLayer {
                in_dim: 2,
                out_dim: 2,
                weights: alloc::vec![1.0, -1.0, 0.5, 0.5],
                biases: alloc::vec![0.0, -0.25],
                activation: Activation::Relu,
            },
            DenseLayer {
                in_dim: 2,
                out_dim: 2,
                weights: alloc::vec![1.0, 2.0, -1.0, 1.0],
                biases: alloc::vec![0.1, 0.0],
                activation: Activation::Linear,
            },
        ])
        .unwrap()
    }

    #[test]
    fn forward_matches_hand_computation() {
        let net = toy_net();
        // Hidden: relu([1*2 - 1*1, 0.5*2 + 0.5*1 - 0.25]) = [1.0, 1.25]
        // Output: [1*1 + 2*1.25 + 0.1, -1*1 + 1*1.25] = [3.6, 0.25]
        let out = net.evaluate(&[2.0, 1.0]).unwrap();
        assert!((out[0] - 3.6).abs() < 1e-12);
        assert!((out[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn relu_zeroes_negative_preactivations() {
        let net = toy_net();
        // Hidden pre-activations for [0, 1]: [-1, 0.25]; ReLU kills the first.
        // Output: [2*0.25 + 0.1, 1*0.25] = [0.6, 0.25]
        let out = net.evaluate(&[0.0, 1.0]).unwrap();
        assert!((out[0] - 0.6).abs() < 1e-12);
        assert!((out[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn wrong_input_width_is_reported() {
        let net = toy_net();
        assert_eq!(
            net.evaluate(&[1.0]),
            Err(NnError::DimensionMismatch {
                expected: 2,
                got: 1
            })
        );
    }

    #[test]
    fn init_respects_the_uniform_bound_and_zero_biases() {
        let mut rng = RngStream::new(1, "network-init");
        let net = DenseNetwork::init(&[9, 128, 128, 4], &mut rng);
        assert_eq!(net.input_dim(), 9);
        assert_eq!(net.output_dim(), 4);
        for layer in net.layers() {
            let bound = math::sqrt(6.0 / (layer.in_dim + layer.out_dim) as f64);
            assert!(layer.weights.iter().all(|w| w.abs() <= bound));
            assert!(layer.weights.iter().any(|w| *w != 0.0));
            assert!(layer.biases.iter().all(|b| *b == 0.0));
        }
        // Hidden layers ReLU, output linear.
        assert_eq!(net.layers()[0].activation, Activation::Relu);
        assert_eq!(net.layers()[2].activation, Activation::Linear);
    }

    #[test]
    fn init_is_deterministic_per_stream() {
        let a = DenseNetwork::init(&[5, 8, 3], &mut RngStream::new(7, "network-init"));
        let b = DenseNetwork::init(&[5, 8, 3], &mut RngStream::new(7, "network-init"));
        assert_eq!(a, b);
    }

    /// Central finite difference of the loss wrt one parameter.
    fn numeric_gradient(
        net: &mut DenseNetwork,
        layer: usize,
        param: usize,
        is_bias: bool,
        input: &[f64],
        action: usize,
        target: f64,
    ) -> f64 {
        let eps = 1e-5;
        let loss = |net: &DenseNetwork| {
            let q = net.evaluate(input).unwrap()[action];
            0.5 * (q - target) * (q - target)
        };
        fn slot(net: &mut DenseNetwork, layer: usize, param: usize, is_bias: bool) -> &mut f64 {
            let l = &mut net.layers[layer];
            if is_bias {
                &mut l.biases[param]
            } else {
                &mut l.weights[param]
            }
        }
        let original = *slot(net, layer, param, is_bias);
        *slot(net, layer, param, is_bias) = original + eps;
        let up = loss(net);
        *slot(net, layer, param, is_bias) = original - eps;
        let down = loss(net);
        *slot(net, layer, param, is_bias) = original;
        (up - down) / (2.0 * eps)
    }

    #[test]
    fn backward_matches_central_finite_differences() {
        let mut rng = RngStream::new(42, "network-init");
        for trial in 0..20 {
            let mut net = DenseNetwork::init(&[5, 7, 3], &mut rng);
            let input: Vec<f64> = (0..5).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
            let action = trial % 3;
            let target = rng.uniform_range(-2.0, 2.0);

            let mut ws = Workspace::default();
            let mut grads = Gradients::zeroed_like(&net);
            net.backward(&input, action, target, &mut ws, &mut grads)
                .unwrap();

            for layer in 0..net.layers.len() {
                let (n_w, n_b) = (net.layers[layer].weights.len(), net.layers[layer].biases.len());
                for p in 0..n_w {
                    let numeric =
                        numeric_gradient(&mut net, layer, p, false, &input, action, target);
                    let analytic = grads.layers[layer].0[p];
                    let scale = analytic.abs().max(numeric.abs()).max(1e-6);
                    assert!(
                        (analytic - numeric).abs() / scale < 1e-4,
                        "trial {trial} layer {layer} weight {p}: {analytic} vs {numeric}"
                    );
                }
                for p in 0..n_b {
                    let numeric =
                        numeric_gradient(&mut net, layer, p, true, &input, action, target);
                    let analytic = grads.layers[layer].1[p];
                    let scale = analytic.abs().max(numeric.abs()).max(1e-6);
                    assert!(
                        (analytic - numeric).abs() / scale < 1e-4,
                        "trial {trial} layer {layer} bias {p}: {analytic} vs {numeric}"
                    );
                }
            }
        }
    }

    #[test]
    fn untaken_actions_get_zero_output_row_gradient() {
        let net = toy_net();
        let mut ws = Workspace::default();
        let mut grads = Gradients::zeroed_like(&net);
        net.backward(&[2.0, 1.0], 0, 1.0, &mut ws, &mut grads).unwrap();
        // Output layer row 1 (action 1) must be untouched.
        let (dw, db) = &grads.layers[1];
        assert_eq!(&dw[2..4], &[0.0, 0.0]);
        assert_eq!(db[1], 0.0);
        // Row 0 carries the TD error times the hidden activations.
        let td = 3.6 - 1.0;
        assert!((dw[0] - td * 1.0).abs() < 1e-12);
        assert!((dw[1] - td * 1.25).abs() < 1e-12);
        assert!((db[0] - td).abs() < 1e-12);
    }

    #[test]
    fn backward_returns_the_signed_td_error() {
        let net = toy_net();
        let mut ws = Workspace::default();
        let mut grads = Gradients::zeroed_like(&net);
        let delta = net.backward(&[2.0, 1.0], 1, 1.0, &mut ws, &mut grads).unwrap();
        assert!((delta - (0.25 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn sgd_step_moves_against_the_gradient() {
        let mut net = DenseNetwork::from_layers(alloc::vec![DenseLayer {
            in_dim: 1,
            out_dim: 1,
            weights: alloc::vec![1.0],
            biases: alloc::vec![0.0],
            activation: Activation::Linear,
        }])
        .unwrap();
        let mut grads = Gradients::zeroed_like(&net);
        grads.layers[0].0[0] = 2.0;
        net.apply_gradients(&grads, 0.1, None);
        assert!((net.layers()[0].weights[0] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn gradient_clipping_rescales_to_the_threshold() {
        let mut net = DenseNetwork::from_layers(alloc::vec![DenseLayer {
            in_dim: 2,
            out_dim: 1,
            weights: alloc::vec![0.0, 0.0],
            biases: alloc::vec![0.0],
            activation: Activation::Linear,
        }])
        .unwrap();
        let mut grads = Gradients::zeroed_like(&net);
        grads.layers[0].0[0] = 3.0;
        grads.layers[0].0[1] = 4.0;
        assert_eq!(grads.global_norm(), 5.0);
        // Norm 5 against threshold 1: effective gradient [0.6, 0.8].
        net.apply_gradients(&grads, 1.0, Some(1.0));
        assert!((net.layers()[0].weights[0] + 0.6).abs() < 1e-12);
        assert!((net.layers()[0].weights[1] + 0.8).abs() < 1e-12);
        // A norm under the threshold is left alone.
        let mut net2 = DenseNetwork::from_layers(alloc::vec![DenseLayer {
            in_dim: 2,
            out_dim: 1,
            weights: alloc::vec![0.0, 0.0],
            biases: alloc::vec![0.0],
            activation: Activation::Linear,
        }])
        .unwrap();
        net2.apply_gradients(&grads, 1.0, Some(10.0));
        assert!((net2.layers()[0].weights[0] + 3.0).abs() < 1e-12);
    }

    #[test]
    fn parameter_copy_requires_matching_architecture() {
        let mut rng = RngStream::new(3, "network-init");
        let source = DenseNetwork::init(&[4, 6, 2], &mut rng);
        let mut sink = DenseNetwork::init(&[4, 6, 2], &mut rng);
        assert_ne!(source, sink);
        sink.copy_parameters_from(&source).unwrap();
        assert_eq!(source, sink);

        let mut other = DenseNetwork::init(&[4, 5, 2], &mut rng);
        assert_eq!(
            other.copy_parameters_from(&source),
            Err(NnError::ArchitectureMismatch)
        );
    }

    #[test]
    fn minibatch_gradients_sum_then_average() {
        let net = toy_net();
        let mut ws = Workspace::default();
        let mut grads = Gradients::zeroed_like(&net);
        net.backward(&[2.0, 1.0], 0, 1.0, &mut ws, &mut grads).unwrap();
        let single = grads.layers[1].1[0];
        net.backward(&[2.0, 1.0], 0, 1.0, &mut ws, &mut grads).unwrap();
        assert!((grads.layers[1].1[0] - 2.0 * single).abs() < 1e-12);
        grads.scale(0.5);
        assert!((grads.layers[1].1[0] - single).abs() < 1e-12);
    }
}
