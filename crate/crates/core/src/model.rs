//! Small dense classifiers trained with weighted cross entropy.
//!
//! A [`Model`] is a stack of affine layers with ReLU between them and an
//! identity output. An output width of 1 is a binary logit model (logistic
//! loss, labels `0 -> -1`, `1 -> +1`); a width of `k >= 2` is a softmax model.
//!
//! Gradients are computed analytically by backpropagation. Everything is
//! `f64`.

use rand::Rng;
use rand_distr::{Distribution, Uniform};

use crate::margin::{self, class_sign};
use crate::matrix::Matrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Affine layer `y = act(W x + b)` with `W` stored as `[out x in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn new(weights: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(Error::Shape(format!(
                "bias has {} entries for {} outputs",
                bias.len(),
                weights.rows()
            )));
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    /// Fan-based uniform init, zero bias.
    pub fn init<R: Rng + ?Sized>(
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite bounds");
        let data = (0..in_dim * out_dim).map(|_| dist.sample(rng)).collect();
        Self {
            weights: Matrix::new(out_dim, in_dim, data).expect("sized above"),
            bias: vec![0.0; out_dim],
            activation,
        }
    }

    #[inline]
    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    #[inline]
    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    /// Pre-activations for a batch: `Z = X W^T + b`.
    fn affine(&self, x: &Matrix) -> Matrix {
        let mut z = Matrix::zeros(x.rows(), self.out_dim());
        for (i, xr) in x.iter_rows().enumerate() {
            let zr = z.row_mut(i);
            for (o, zo) in zr.iter_mut().enumerate() {
                let wr = self.weights.row(o);
                *zo = self.bias[o] + wr.iter().zip(xr).map(|(w, v)| w * v).sum::<f64>();
            }
        }
        z
    }
}

/// Raw classifier scores, `[batch x 1]` (binary) or `[batch x k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Logits(pub Matrix);

impl Logits {
    pub fn rows(&self) -> usize {
        self.0.rows()
    }

    pub fn width(&self) -> usize {
        self.0.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }

    /// Per-row class probabilities. A 1-logit row `f` becomes
    /// `[sigmoid(-f), sigmoid(f)]`; wider rows go through a max-shifted softmax.
    pub fn probabilities(&self) -> Matrix {
        let k = self.width().max(2);
        let mut out = Matrix::zeros(self.rows(), k);
        for (i, row) in self.0.iter_rows().enumerate() {
            let dst = out.row_mut(i);
            if row.len() == 1 {
                dst[0] = sigmoid(-row[0]);
                dst[1] = sigmoid(row[0]);
            } else {
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut total = 0.0;
                for (d, &v) in dst.iter_mut().zip(row) {
                    *d = (v - max).exp();
                    total += *d;
                }
                dst.iter_mut().for_each(|d| *d /= total);
            }
        }
        out
    }

    /// Per-instance cross entropy `-log p_y`, via log-sum-exp.
    pub fn cross_entropy(&self, labels: &[usize]) -> Result<Vec<f64>> {
        self.check_labels(labels)?;
        Ok(self
            .0
            .iter_rows()
            .zip(labels)
            .map(|(row, &y)| {
                if row.len() == 1 {
                    softplus(-class_sign(y) * row[0])
                } else {
                    log_sum_exp(row) - row[y]
                }
            })
            .collect())
    }

    pub fn margins(&self, labels: &[usize]) -> Result<Vec<f64>> {
        self.check_labels(labels)?;
        self.0
            .iter_rows()
            .zip(labels)
            .map(|(row, &y)| margin::row_margin(row, y))
            .collect()
    }

    pub fn predictions(&self) -> Vec<usize> {
        self.0.iter_rows().map(margin::predict).collect()
    }

    fn check_labels(&self, labels: &[usize]) -> Result<()> {
        if labels.len() != self.rows() {
            return Err(Error::Shape(format!(
                "{} labels for {} logit rows",
                labels.len(),
                self.rows()
            )));
        }
        let k = self.width().max(2);
        if let Some(bad) = labels.iter().find(|&&y| y >= k) {
            return Err(Error::Domain(format!("label {bad} out of range for {k} classes")));
        }
        Ok(())
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `Σ_j w_j · (−log p_{y_j}(x_j))`.
pub fn weighted_ce_loss(logits: &Logits, labels: &[usize], weights: &[f64]) -> Result<f64> {
    check_weights(weights, logits.rows())?;
    let costs = logits.cross_entropy(labels)?;
    Ok(costs
        .iter()
        .zip(weights)
        .filter(|&(_, &w)| w != 0.0)
        .map(|(c, w)| c * w)
        .sum())
}

fn check_weights(weights: &[f64], rows: usize) -> Result<()> {
    if weights.len() != rows {
        return Err(Error::Shape(format!(
            "{} weights for a batch of {rows}",
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::Domain(format!("loss weight must be finite and >= 0, got {w}")));
    }
    Ok(())
}

/// Parameter-shaped buffers: one `(weights, bias)` pair per layer, used for
/// gradients and optimizer velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<(Matrix, Vec<f64>)>,
}

impl Gradients {
    pub fn zeros_like(model: &Model) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| (Matrix::zeros(l.out_dim(), l.in_dim()), vec![0.0; l.out_dim()]))
                .collect(),
        }
    }

    /// Flattened in the same order as [`Model::parameters`].
    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|(w, b)| w.as_slice().iter().chain(b.iter()).copied())
            .collect()
    }

    fn matches(&self, model: &Model) -> bool {
        self.layers.len() == model.layers.len()
            && self.layers.iter().zip(&model.layers).all(|((w, b), l)| {
                w.rows() == l.out_dim() && w.cols() == l.in_dim() && b.len() == l.out_dim()
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    layers: Vec<Layer>,
}

impl Model {
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("model needs at least one layer".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::Shape(format!(
                    "layer {i} emits {} values but layer {} expects {}",
                    pair[0].out_dim(),
                    i + 1,
                    pair[1].in_dim()
                )));
            }
        }
        Ok(Self { layers })
    }

    /// ReLU hidden layers of the given widths followed by an identity output.
    /// `hidden = []` gives a linear model.
    pub fn init<R: Rng + ?Sized>(
        input_dim: usize,
        hidden: &[usize],
        output_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 || hidden.contains(&0) {
            return Err(Error::Shape("layer widths must be positive".into()));
        }
        let mut dims = vec![input_dim];
        dims.extend_from_slice(hidden);
        dims.push(output_dim);
        let last = dims.len() - 2;
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, d)| {
                let act = if i == last {
                    Activation::Identity
                } else {
                    Activation::Relu
                };
                Layer::init(d[0], d[1], act, rng)
            })
            .collect();
        Self::from_layers(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn parameters(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.as_slice().iter().chain(l.bias.iter()))
    }

    pub fn parameters_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.as_mut_slice().iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn forward(&self, x: &Matrix) -> Result<Logits> {
        self.check_input(x)?;
        let mut a = x.clone();
        for layer in &self.layers {
            let mut z = layer.affine(&a);
            z.as_mut_slice()
                .iter_mut()
                .for_each(|v| *v = layer.activation.apply(*v));
            a = z;
        }
        Ok(Logits(a))
    }

    /// Gradient of [`weighted_ce_loss`] with respect to every parameter.
    pub fn gradients(&self, x: &Matrix, labels: &[usize], weights: &[f64]) -> Result<Gradients> {
        self.check_input(x)?;
        check_weights(weights, x.rows())?;

        // Forward pass, keeping each layer's input and pre-activation.
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = x.clone();
        for layer in &self.layers {
            let z = layer.affine(&a);
            let mut next = z.clone();
            next.as_mut_slice()
                .iter_mut()
                .for_each(|v| *v = layer.activation.apply(*v));
            inputs.push(a);
            pre.push(z);
            a = next;
        }
        let logits = Logits(a);
        logits.check_labels(labels)?;

        // dLoss/dLogits, already scaled by the instance weight.
        let probs = logits.probabilities();
        let width = logits.width();
        let mut delta = Matrix::zeros(x.rows(), width);
        for (i, (&y, &w)) in labels.iter().zip(weights).enumerate() {
            if w == 0.0 {
                continue;
            }
            let p = probs.row(i);
            let d = delta.row_mut(i);
            if width == 1 {
                d[0] = w * (p[1] - if y == 1 { 1.0 } else { 0.0 });
            } else {
                for (c, dc) in d.iter_mut().enumerate() {
                    *dc = w * (p[c] - if c == y { 1.0 } else { 0.0 });
                }
            }
        }

        let mut grads = Gradients::zeros_like(self);
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            // Through this layer's activation.
            for (dv, zv) in delta.as_mut_slice().iter_mut().zip(pre[l].as_slice()) {
                *dv *= layer.activation.derivative(*zv);
            }
            let (gw, gb) = &mut grads.layers[l];
            let input = &inputs[l];
            for i in 0..delta.rows() {
                let dr = delta.row(i);
                let xr = input.row(i);
                for (o, &d) in dr.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    gb[o] += d;
                    for (g, &xv) in gw.row_mut(o).iter_mut().zip(xr) {
                        *g += d * xv;
                    }
                }
            }
            if l > 0 {
                let mut back = Matrix::zeros(delta.rows(), layer.in_dim());
                for i in 0..delta.rows() {
                    let dr = delta.row(i);
                    let br = back.row_mut(i);
                    for (o, &d) in dr.iter().enumerate() {
                        if d == 0.0 {
                            continue;
                        }
                        for (b, &wv) in br.iter_mut().zip(layer.weights.row(o)) {
                            *b += d * wv;
                        }
                    }
                }
                delta = back;
            }
        }
        Ok(grads)
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input has {} features, model expects {}",
                x.cols(),
                self.input_dim()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Epochs at which the learning rate is divided by `decay_factor`.
    pub decay_epochs: Vec<usize>,
    pub decay_factor: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            momentum: 0.9,
            weight_decay: 2e-4,
            decay_epochs: Vec::new(),
            decay_factor: 10.0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!(
                "momentum must be in [0, 1), got {}",
                self.momentum
            )));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::Config(format!(
                "weight decay must be >= 0, got {}",
                self.weight_decay
            )));
        }
        if !(self.decay_factor > 0.0) {
            return Err(Error::Config(format!(
                "decay factor must be positive, got {}",
                self.decay_factor
            )));
        }
        if self.decay_epochs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("decay epochs must be strictly increasing".into()));
        }
        Ok(())
    }

    /// `initial / factor^(number of decay epochs <= epoch)`.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        let decays = self.decay_epochs.iter().filter(|&&e| e <= epoch).count();
        self.learning_rate / self.decay_factor.powi(decays as i32)
    }
}

/// SGD with heavy-ball momentum and L2 weight decay folded into the velocity.
#[derive(Debug, Clone)]
pub struct Sgd {
    cfg: OptimizerConfig,
    velocity: Gradients,
}

impl Sgd {
    pub fn new(model: &Model, cfg: OptimizerConfig) -> Self {
        Self {
            cfg,
            velocity: Gradients::zeros_like(model),
        }
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.cfg
    }

    /// `v <- momentum*v + g + decay*θ; θ <- θ - lr(epoch)*v`.
    pub fn step(&mut self, model: &mut Model, grads: &Gradients, epoch: usize) -> Result<()> {
        if !grads.matches(model) || !self.velocity.matches(model) {
            return Err(Error::Shape("gradient shapes do not match the model".into()));
        }
        let lr = self.cfg.lr_at(epoch);
        let (mu, decay) = (self.cfg.momentum, self.cfg.weight_decay);
        for ((layer, (gw, gb)), (vw, vb)) in model
            .layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.velocity.layers)
        {
            let params = layer
                .weights
                .as_mut_slice()
                .iter_mut()
                .chain(layer.bias.iter_mut());
            let g = gw.as_slice().iter().chain(gb.iter());
            let v = vw.as_mut_slice().iter_mut().chain(vb.iter_mut());
            for ((p, g), v) in params.zip(g).zip(v) {
                *v = mu * *v + g + decay * *p;
                *p -= lr * *v;
            }
        }
        Ok(())
    }
}
