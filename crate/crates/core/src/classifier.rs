//! Feed-forward softmax classifier.
//!
//! Dense layers with rectifier activations on every hidden layer and a softmax
//! on the output. Weights are stored row-major with shape `(out_dim, in_dim)`.
//! Gradients are computed analytically for the cross-entropy loss against an
//! arbitrary target distribution, so label-smoothed targets are handled the
//! same way as one-hot ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::{Error, Result};

/// Probabilities below this are clamped before taking the log.
pub const LOG_CLAMP: f64 = 1e-12;

/// Tolerance used to decide whether a target vector sums to one.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-6;

/// Parameters and optimizer velocity of a dense softmax network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    layer_dims: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    weight_velocity: Vec<Vec<f64>>,
    bias_velocity: Vec<Vec<f64>>,
}

/// Softmax output of the network for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    probs: Vec<f64>,
}

/// Gradients with the same shapes as a [`ModelState`]'s weights and biases.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Intermediate values of a forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// `activations[0]` is the input; `activations[l]` is the output of hidden layer `l`.
    activations: Vec<Vec<f64>>,
    /// Pre-activation values of every layer, including the output logits.
    pre_activations: Vec<Vec<f64>>,
    prediction: Prediction,
}

impl ForwardTrace {
    pub fn prediction(&self) -> &Prediction {
        &self.prediction
    }

    pub fn logits(&self) -> &[f64] {
        self.pre_activations.last().expect("at least one layer")
    }

    /// Pre-activation values per layer; the last entry holds the logits.
    pub fn pre_activations(&self) -> &[Vec<f64>] {
        &self.pre_activations
    }
}

impl Prediction {
    /// Wraps a probability vector, checking that it is a distribution.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Empty("prediction"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
            return Err(Error::NotADistribution(
                "probabilities must lie in [0, 1]".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > DISTRIBUTION_TOLERANCE {
            return Err(Error::NotADistribution(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn num_classes(&self) -> usize {
        self.probs.len()
    }

    /// Index of the largest probability, smallest index on ties.
    pub fn argmax(&self) -> usize {
        argmax(&self.probs)
    }

    pub fn max_prob(&self) -> f64 {
        self.probs[self.argmax()]
    }
}

/// Index of the largest entry; the first one wins on ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Numerically stable softmax (the maximum logit is subtracted first).
pub fn softmax(logits: &[f64]) -> Prediction {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Prediction {
        probs: exps.into_iter().map(|e| e / total).collect(),
    }
}

impl ModelState {
    /// Draws weights from `N(0, 1/fan_in)`; biases and velocity start at zero.
    pub fn init(layer_dims: &[usize], seed: u64) -> Result<Self> {
        if layer_dims.len() < 2 {
            return Err(Error::config(
                "layer_dims",
                "need at least an input and an output dimension",
            ));
        }
        if layer_dims.contains(&0) {
            return Err(Error::config("layer_dims", "dimensions must be positive"));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(layer_dims.len() - 1);
        for pair in layer_dims.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let normal = Normal::new(0.0, 1.0 / (fan_in as f64).sqrt())
                .expect("positive standard deviation");
            weights.push(
                (0..fan_in * fan_out)
                    .map(|_| normal.sample(&mut rng))
                    .collect(),
            );
        }
        Ok(Self::from_parts(layer_dims.to_vec(), weights, None))
    }

    /// A model with every weight and bias set to zero.
    pub fn zeros(layer_dims: &[usize]) -> Result<Self> {
        let mut model = Self::init(layer_dims, 0)?;
        model.weights.iter_mut().flatten().for_each(|w| *w = 0.0);
        Ok(model)
    }

    /// Builds a model from explicit weights (row-major `(out, in)`) and biases.
    pub fn from_parameters(
        layer_dims: &[usize],
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let template = Self::zeros(layer_dims)?;
        if weights.len() != template.weights.len() || biases.len() != template.biases.len() {
            return Err(Error::DimensionMismatch {
                what: "layer count",
                expected: template.weights.len(),
                got: weights.len().min(biases.len()),
            });
        }
        for (l, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.len() != template.weights[l].len() {
                return Err(Error::DimensionMismatch {
                    what: "weight matrix",
                    expected: template.weights[l].len(),
                    got: w.len(),
                });
            }
            if b.len() != template.biases[l].len() {
                return Err(Error::DimensionMismatch {
                    what: "bias vector",
                    expected: template.biases[l].len(),
                    got: b.len(),
                });
            }
        }
        if weights
            .iter()
            .chain(&biases)
            .flatten()
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("model parameters"));
        }
        Ok(Self::from_parts(layer_dims.to_vec(), weights, Some(biases)))
    }

    fn from_parts(
        layer_dims: Vec<usize>,
        weights: Vec<Vec<f64>>,
        biases: Option<Vec<Vec<f64>>>,
    ) -> Self {
        let biases =
            biases.unwrap_or_else(|| layer_dims[1..].iter().map(|&d| vec![0.0; d]).collect());
        let weight_velocity = weights.iter().map(|w| vec![0.0; w.len()]).collect();
        let bias_velocity = biases.iter().map(|b| vec![0.0; b.len()]).collect();
        Self {
            layer_dims,
            weights,
            biases,
            weight_velocity,
            bias_velocity,
        }
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn num_classes(&self) -> usize {
        *self.layer_dims.last().expect("validated at construction")
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn weight_velocity(&self) -> &[Vec<f64>] {
        &self.weight_velocity
    }

    pub fn bias_velocity(&self) -> &[Vec<f64>] {
        &self.bias_velocity
    }

    /// Mutable access to a single parameter, used by gradient checks.
    ///
    /// `index` addresses weights first, then biases, layer by layer.
    pub fn parameter_mut(&mut self, layer: usize, index: usize) -> &mut f64 {
        let n_weights = self.weights[layer].len();
        if index < n_weights {
            &mut self.weights[layer][index]
        } else {
            &mut self.biases[layer][index - n_weights]
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(&self.biases)
            .chain(&self.weight_velocity)
            .chain(&self.bias_velocity)
            .flatten()
            .all(|v| v.is_finite())
    }

    /// Softmax prediction for one feature vector.
    pub fn forward(&self, features: &[f64]) -> Result<Prediction> {
        Ok(self.forward_trace(features)?.prediction)
    }

    /// Forward pass that keeps the intermediate values needed by [`Self::backward_from`].
    pub fn forward_trace(&self, features: &[f64]) -> Result<ForwardTrace> {
        if features.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                what: "features",
                expected: self.input_dim(),
                got: features.len(),
            });
        }

        let last = self.num_layers() - 1;
        let mut activations = Vec::with_capacity(self.num_layers());
        let mut pre_activations = Vec::with_capacity(self.num_layers());
        activations.push(features.to_vec());

        for l in 0..self.num_layers() {
            let input = &activations[l];
            let (in_dim, out_dim) = (self.layer_dims[l], self.layer_dims[l + 1]);
            let w = &self.weights[l];
            let z: Vec<f64> = (0..out_dim)
                .map(|o| {
                    let row = &w[o * in_dim..(o + 1) * in_dim];
                    self.biases[l][o] + row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>()
                })
                .collect();
            if l < last {
                activations.push(z.iter().map(|v| v.max(0.0)).collect());
            }
            pre_activations.push(z);
        }

        let prediction = softmax(pre_activations.last().expect("at least one layer"));
        Ok(ForwardTrace {
            activations,
            pre_activations,
            prediction,
        })
    }

    /// Gradient of `cross_entropy(forward(features), target)` with respect to every parameter.
    pub fn backward(&self, features: &[f64], target: &[f64]) -> Result<GradientSet> {
        let trace = self.forward_trace(features)?;
        self.backward_from(&trace, target)
    }

    /// Backpropagates from a stored forward pass.
    pub fn backward_from(&self, trace: &ForwardTrace, target: &[f64]) -> Result<GradientSet> {
        check_target(target, self.num_classes())?;

        let mut grads = GradientSet::zeros_like(self);
        // dL/dz at the output is probs - target for softmax + cross-entropy.
        let mut delta: Vec<f64> = trace
            .prediction
            .probs
            .iter()
            .zip(target)
            .map(|(p, t)| p - t)
            .collect();

        for l in (0..self.num_layers()).rev() {
            let input = &trace.activations[l];
            let in_dim = self.layer_dims[l];
            for (o, d) in delta.iter().enumerate() {
                grads.biases[l][o] = *d;
                let row = &mut grads.weights[l][o * in_dim..(o + 1) * in_dim];
                for (g, a) in row.iter_mut().zip(input) {
                    *g = d * a;
                }
            }
            if l == 0 {
                break;
            }
            // Propagate through W^T, then through the rectifier of layer l-1.
            let w = &self.weights[l];
            let below = &trace.pre_activations[l - 1];
            delta = (0..in_dim)
                .map(|i| {
                    if below[i] > 0.0 {
                        delta
                            .iter()
                            .enumerate()
                            .map(|(o, d)| d * w[o * in_dim + i])
                            .sum()
                    } else {
                        0.0
                    }
                })
                .collect();
        }

        if !grads.is_finite() {
            return Err(Error::NonFinite("gradients"));
        }
        Ok(grads)
    }

    /// One SGD step with momentum; weight decay applies to weights only.
    ///
    /// `velocity <- momentum * velocity + (grad + weight_decay * w)`, then `w <- w - lr * velocity`.
    pub fn sgd_step(
        &mut self,
        grads: &GradientSet,
        lr: f64,
        momentum: f64,
        weight_decay: f64,
    ) -> Result<()> {
        validate_optimizer(lr, momentum, weight_decay)?;
        if !grads.is_finite() {
            return Err(Error::NonFinite("gradients"));
        }
        grads.check_shapes(self)?;

        for l in 0..self.num_layers() {
            for ((w, v), g) in self.weights[l]
                .iter_mut()
                .zip(&mut self.weight_velocity[l])
                .zip(&grads.weights[l])
            {
                *v = momentum * *v + (g + weight_decay * *w);
                *w -= lr * *v;
            }
            for ((b, v), g) in self.biases[l]
                .iter_mut()
                .zip(&mut self.bias_velocity[l])
                .zip(&grads.biases[l])
            {
                *v = momentum * *v + g;
                *b -= lr * *v;
            }
        }
        Ok(())
    }
}

pub(crate) fn validate_optimizer(lr: f64, momentum: f64, weight_decay: f64) -> Result<()> {
    if !(lr.is_finite() && lr > 0.0) {
        return Err(Error::config("lr", format!("must be positive, got {lr}")));
    }
    if !(0.0..1.0).contains(&momentum) {
        return Err(Error::config(
            "momentum",
            format!("must lie in [0, 1), got {momentum}"),
        ));
    }
    if !(weight_decay.is_finite() && weight_decay >= 0.0) {
        return Err(Error::config(
            "weight_decay",
            format!("must be non-negative, got {weight_decay}"),
        ));
    }
    Ok(())
}

fn check_target(target: &[f64], classes: usize) -> Result<()> {
    if target.len() != classes {
        return Err(Error::DimensionMismatch {
            what: "target",
            expected: classes,
            got: target.len(),
        });
    }
    if target.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::NotADistribution(
            "negative or non-finite entry".into(),
        ));
    }
    let total: f64 = target.iter().sum();
    if (total - 1.0).abs() > DISTRIBUTION_TOLERANCE {
        return Err(Error::NotADistribution(format!("target sums to {total}")));
    }
    Ok(())
}

/// `-sum_j target_j * ln(max(p_j, 1e-12))`.
pub fn cross_entropy(pred: &Prediction, target: &[f64]) -> Result<f64> {
    check_target(target, pred.num_classes())?;
    Ok(pred
        .probs
        .iter()
        .zip(target)
        .filter(|(_, t)| **t > 0.0)
        .map(|(p, t)| -t * p.max(LOG_CLAMP).ln())
        .sum())
}

impl GradientSet {
    pub fn zeros_like(model: &ModelState) -> Self {
        Self {
            weights: model.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &GradientSet, scale: f64) {
        for (a, b) in self.iter_mut().zip(other.iter()) {
            *a += scale * b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.iter_mut().for_each(|g| *g *= factor);
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|g| g.is_finite())
    }

    /// All entries, weights before biases within each layer.
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.iter().chain(b))
    }

    fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| w.iter_mut().chain(b.iter_mut()))
    }

    /// Gradient of the output-layer logits (equal to the output bias gradient).
    pub fn output_logit_gradient(&self) -> &[f64] {
        self.biases.last().expect("at least one layer")
    }

    fn check_shapes(&self, model: &ModelState) -> Result<()> {
        let consistent = self.weights.len() == model.weights.len()
            && self.biases.len() == model.biases.len()
            && self
                .weights
                .iter()
                .zip(&model.weights)
                .all(|(g, w)| g.len() == w.len())
            && self
                .biases
                .iter()
                .zip(&model.biases)
                .all(|(g, b)| g.len() == b.len());
        if consistent {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                what: "gradient set",
                expected: model.weights.iter().map(Vec::len).sum(),
                got: self.weights.iter().map(Vec::len).sum(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_hot(k: usize, c: usize) -> Vec<f64> {
        let mut t = vec![0.0; k];
        t[c] = 1.0;
        t
    }

    #[test]
    fn init_is_deterministic() {
        let a = ModelState::init(&[2, 3], 7).unwrap();
        let b = ModelState::init(&[2, 3], 7).unwrap();
        assert_eq!(a, b);
        let c = ModelState::init(&[2, 3], 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn init_zero_biases_and_velocity() {
        let m = ModelState::init(&[4, 8, 10], 3).unwrap();
        assert!(m.biases().iter().flatten().all(|b| *b == 0.0));
        assert!(m.weight_velocity().iter().flatten().all(|v| *v == 0.0));
        assert!(m.bias_velocity().iter().flatten().all(|v| *v == 0.0));
        assert_eq!(m.weights()[0].len(), 32);
        assert_eq!(m.weights()[1].len(), 80);
    }

    #[test]
    fn init_scale_follows_fan_in() {
        let m = ModelState::init(&[400, 50], 1).unwrap();
        let w = &m.weights()[0];
        let var = w.iter().map(|v| v * v).sum::<f64>() / w.len() as f64;
        assert!((var - 1.0 / 400.0).abs() < 0.1 / 400.0, "variance {var}");
    }

    #[test]
    fn init_rejects_bad_dims() {
        assert!(matches!(
            ModelState::init(&[2], 0),
            Err(Error::InvalidConfig {
                key: "layer_dims",
                ..
            })
        ));
        assert!(ModelState::init(&[2, 0, 3], 0).is_err());
        assert!(ModelState::init(&[], 0).is_err());
    }

    #[test]
    fn zero_model_predicts_uniform() {
        let m = ModelState::zeros(&[3, 5]).unwrap();
        let p = m.forward(&[1.0, -2.0, 0.5]).unwrap();
        for v in p.probs() {
            assert!((v - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_handles_huge_logits() {
        let p = softmax(&[1000.0, 0.0]);
        assert!(p.probs().iter().all(|v| v.is_finite()));
        assert!((p.probs()[0] - 1.0).abs() < 1e-15);
        assert!(p.probs()[1] < 1e-300);
    }

    #[test]
    fn forward_through_output_layer_with_huge_logits() {
        let m = ModelState::from_parameters(&[1, 2], vec![vec![1000.0, 0.0]], vec![vec![0.0, 0.0]])
            .unwrap();
        let p = m.forward(&[1.0]).unwrap();
        assert!((p.probs()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn forward_sums_to_one() {
        let m = ModelState::init(&[6, 16, 7], 11).unwrap();
        let p = m.forward(&[0.3, -1.0, 2.0, 0.0, 5.0, -0.7]).unwrap();
        let s: f64 = p.probs().iter().sum();
        assert!((s - 1.0).abs() < 1e-9);
        assert!(p.probs().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn forward_rejects_wrong_length() {
        let m = ModelState::init(&[3, 2], 0).unwrap();
        assert!(matches!(
            m.forward(&[1.0]),
            Err(Error::DimensionMismatch {
                what: "features",
                ..
            })
        ));
    }

    #[test]
    fn cross_entropy_values() {
        let perfect = Prediction::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert!(cross_entropy(&perfect, &one_hot(3, 0)).unwrap().abs() < 1e-15);

        let uniform = Prediction::new(vec![0.25; 4]).unwrap();
        let l = cross_entropy(&uniform, &one_hot(4, 2)).unwrap();
        assert!((l - 4f64.ln()).abs() < 1e-12);

        let p = Prediction::new(vec![0.7, 0.2, 0.1]).unwrap();
        let l = cross_entropy(&p, &[0.9, 0.05, 0.05]).unwrap();
        // 0.9*0.356675 + 0.05*1.609438 + 0.05*2.302585
        assert!((l - 0.5166086).abs() < 1e-6, "{l}");
    }

    #[test]
    fn cross_entropy_clamps_zero_probability() {
        let p = Prediction::new(vec![1.0, 0.0]).unwrap();
        let l = cross_entropy(&p, &one_hot(2, 1)).unwrap();
        assert!((l - (-LOG_CLAMP.ln())).abs() < 1e-9);
    }

    #[test]
    fn cross_entropy_rejects_bad_targets() {
        let p = Prediction::new(vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            cross_entropy(&p, &[1.0, 0.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            cross_entropy(&p, &[0.6, 0.6]),
            Err(Error::NotADistribution(_))
        ));
        assert!(cross_entropy(&p, &[1.5, -0.5]).is_err());
    }

    #[test]
    fn zero_model_output_gradient() {
        let m = ModelState::zeros(&[3, 2]).unwrap();
        let g = m.backward(&[1.0, 2.0, 3.0], &one_hot(2, 1)).unwrap();
        assert_eq!(g.output_logit_gradient(), &[0.5, -0.5]);
    }

    #[test]
    fn gradient_vanishes_when_target_matches_prediction() {
        let m = ModelState::init(&[3, 4, 3], 5).unwrap();
        let x = [0.2, -0.4, 1.0];
        let p = m.forward(&x).unwrap();
        let g = m.backward(&x, p.probs()).unwrap();
        assert!(g.output_logit_gradient().iter().all(|v| v.abs() < 1e-15));
        assert!(g.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn vanilla_sgd_step() {
        let mut m = ModelState::init(&[2, 2], 4).unwrap();
        let before = m.clone();
        let mut g = GradientSet::zeros_like(&m);
        g.weights[0] = vec![1.0, -2.0, 0.5, 0.0];
        g.biases[0] = vec![0.25, -1.0];
        m.sgd_step(&g, 0.1, 0.0, 0.0).unwrap();
        for (a, (b, gw)) in m.weights()[0]
            .iter()
            .zip(before.weights()[0].iter().zip(&g.weights[0]))
        {
            assert!((a - (b - 0.1 * gw)).abs() < 1e-15);
        }
        assert!((m.biases()[0][0] + 0.025).abs() < 1e-15);
        assert!((m.biases()[0][1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn momentum_decays_velocity_without_gradient() {
        let mut m = ModelState::init(&[2, 2], 4).unwrap();
        let mut g = GradientSet::zeros_like(&m);
        g.weights[0] = vec![1.0, 2.0, 3.0, 4.0];
        m.sgd_step(&g, 0.1, 0.9, 0.0).unwrap();
        let v0 = m.weight_velocity()[0].clone();
        m.sgd_step(&GradientSet::zeros_like(&m), 0.1, 0.9, 0.0)
            .unwrap();
        for (v1, v0) in m.weight_velocity()[0].iter().zip(&v0) {
            assert!((v1 - 0.9 * v0).abs() < 1e-15);
        }
    }

    #[test]
    fn momentum_two_step_displacement() {
        let mut m = ModelState::zeros(&[1, 2]).unwrap();
        let mut g = GradientSet::zeros_like(&m);
        g.weights[0] = vec![1.0, -3.0];
        m.sgd_step(&g, 0.1, 0.9, 0.0).unwrap();
        let after_one = m.weights()[0].clone();
        m.sgd_step(&g, 0.1, 0.9, 0.0).unwrap();
        for ((w2, w1), gi) in m.weights()[0].iter().zip(&after_one).zip(&g.weights[0]) {
            let step = w1 - w2;
            assert!((step - 0.1 * 1.9 * gi).abs() < 1e-12);
        }
    }

    #[test]
    fn weight_decay_skips_biases() {
        let mut m = ModelState::from_parameters(&[1, 1], vec![vec![2.0]], vec![vec![3.0]]).unwrap();
        let g = GradientSet::zeros_like(&m);
        m.sgd_step(&g, 0.5, 0.0, 0.1).unwrap();
        assert!((m.weights()[0][0] - (2.0 - 0.5 * 0.1 * 2.0)).abs() < 1e-15);
        assert_eq!(m.biases()[0][0], 3.0);
    }

    #[test]
    fn sgd_rejects_bad_inputs() {
        let mut m = ModelState::zeros(&[1, 2]).unwrap();
        let mut g = GradientSet::zeros_like(&m);
        assert!(m.sgd_step(&g, 0.0, 0.9, 0.0).is_err());
        assert!(m.sgd_step(&g, 0.1, 1.0, 0.0).is_err());
        assert!(m.sgd_step(&g, 0.1, 0.5, -1.0).is_err());
        g.weights[0][0] = f64::NAN;
        assert!(matches!(
            m.sgd_step(&g, 0.1, 0.5, 0.0),
            Err(Error::NonFinite(_))
        ));
        assert!(m.is_finite());
    }
}
