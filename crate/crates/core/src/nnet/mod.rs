//! Fully connected ReLU networks in f64 with exact backpropagation.

mod backprop;
mod config;
mod io;
mod loss;

use rand::Rng;

pub use backprop::{backward, backward_soft, sgd_step, DenseGrad, Gradients};
pub use config::TrainConfig;
pub use io::{load_model, model_from_bytes, model_to_bytes, save_model, MODEL_MAGIC, MODEL_VERSION};
pub use loss::{log_softmax, loss, smooth_labels, softmax};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::seed;

/// One affine layer: `W` is `out × in`, `b` has length `out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Matrix,
    pub b: Vec<f64>,
}

impl Dense {
    pub fn input_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.w.rows()
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.b
                .iter()
                .enumerate()
                .map(|(o, &bias)| bias + crate::linalg::dot(self.w.row(o), x)),
        );
    }
}

/// ReLU on every hidden layer, identity on the output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Reusable activation buffers for allocation-free forward passes.
#[derive(Debug, Default, Clone)]
pub struct Scratch {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Mlp {
    pub fn new(layers: Vec<Dense>) -> Result<Self> {
        let m = Self { layers };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Shape("model has no layers".into()));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.b.len() != l.output_dim() {
                return Err(Error::Shape(format!("layer {i}: bias length {} for {} outputs", l.b.len(), l.output_dim())));
            }
            if !l.w.all_finite() || l.b.iter().any(|v| !v.is_finite()) {
                return Err(Error::Shape(format!("layer {i} has non-finite parameters")));
            }
        }
        for (i, pair) in self.layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::Shape(format!(
                    "layer {i} outputs {} but layer {} expects {}",
                    pair[0].output_dim(),
                    i + 1,
                    pair[1].input_dim()
                )));
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").output_dim()
    }

    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(Dense::output_dim))
            .collect()
    }

    /// First-layer weights `W₁` (`hidden × input`).
    pub fn first_layer(&self) -> &Matrix {
        &self.layers[0].w
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input has {} features, model expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        let mut s = Scratch::default();
        Ok(self.forward_with(x, &mut s).to_vec())
    }

    /// Forward pass without dimension checks or allocation.
    pub fn forward_with<'s>(&self, x: &[f64], s: &'s mut Scratch) -> &'s [f64] {
        let last = self.layers.len() - 1;
        self.layers[0].apply(x, &mut s.a);
        if last > 0 {
            s.a.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        for (i, layer) in self.layers.iter().enumerate().skip(1) {
            layer.apply(&s.a, &mut s.b);
            if i < last {
                s.b.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            std::mem::swap(&mut s.a, &mut s.b);
        }
        &s.a
    }

    /// Row-wise logits for a feature matrix.
    pub fn forward_batch(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "batch has {} features, model expects {}",
                x.cols(),
                self.input_dim()
            )));
        }
        let mut out = Matrix::zeros(x.rows(), self.output_dim());
        let mut s = Scratch::default();
        for (i, row) in x.row_iter().enumerate() {
            out.row_mut(i).copy_from_slice(self.forward_with(row, &mut s));
        }
        Ok(out)
    }

    pub fn predict_with(&self, x: &[f64], s: &mut Scratch) -> u8 {
        argmax(self.forward_with(x, s))
    }

    pub fn predict(&self, x: &[f64]) -> Result<u8> {
        self.forward(x).map(|l| argmax(&l))
    }

    /// Fraction of rows of `x` whose prediction equals `labels`.
    pub fn accuracy(&self, x: &Matrix, labels: &[u8]) -> Result<f64> {
        if x.cols() != self.input_dim() || x.rows() != labels.len() {
            return Err(Error::Shape(format!(
                "accuracy on {}x{} features with {} labels for a {}-input model",
                x.rows(),
                x.cols(),
                labels.len(),
                self.input_dim()
            )));
        }
        if labels.is_empty() {
            return Ok(0.0);
        }
        let mut s = Scratch::default();
        let correct = x
            .row_iter()
            .zip(labels)
            .filter(|(row, &y)| self.predict_with(row, &mut s) == y)
            .count();
        Ok(correct as f64 / labels.len() as f64)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.as_slice().len() + l.b.len()).sum()
    }
}

/// Index of the largest logit; ties resolve to the lowest index.
pub fn argmax(logits: &[f64]) -> u8 {
    let mut best = 0;
    for (i, &v) in logits.iter().enumerate().skip(1) {
        if v > logits[best] {
            best = i;
        }
    }
    best as u8
}

/// Glorot-uniform weights `U[-a, a]`, `a = sqrt(6 / (fan_in + fan_out))`,
/// zero biases.
pub fn mlp_init(sizes: &[usize], seed: u64) -> Result<Mlp> {
    if sizes.len() < 2 {
        return Err(Error::Config(format!(
            "an MLP needs at least 2 layer sizes, got {}",
            sizes.len()
        )));
    }
    if sizes.contains(&0) {
        return Err(Error::Config("layer sizes must be at least 1".into()));
    }
    let mut rng = seed::rng(seed);
    let layers = sizes
        .windows(2)
        .map(|pair| {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let data = (0..fan_in * fan_out).map(|_| rng.random_range(-a..=a)).collect();
            Dense {
                w: Matrix::from_vec(fan_out, fan_in, data).expect("sized"),
                b: vec![0.0; fan_out],
            }
        })
        .collect();
    Mlp::new(layers)
}
