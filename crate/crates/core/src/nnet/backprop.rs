use super::loss::{log_softmax, smooth_labels};
use super::Mlp;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad {
    pub w: Matrix,
    pub b: Vec<f64>,
}

/// Gradients of the mean batch loss, one entry per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<DenseGrad>,
}

impl Gradients {
    pub fn zeros_like(model: &Mlp) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| DenseGrad {
                    w: Matrix::zeros(l.w.rows(), l.w.cols()),
                    b: vec![0.0; l.b.len()],
                })
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|g| g.w.as_slice().iter().chain(&g.b))
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Mean softmax cross-entropy and its gradients for hard labels, smoothed
/// by `eps` (0 disables smoothing).
pub fn backward(model: &Mlp, inputs: &[&[f64]], labels: &[u8], eps: f64) -> Result<(f64, Gradients)> {
    if inputs.len() != labels.len() {
        return Err(Error::Shape(format!("{} inputs for {} labels", inputs.len(), labels.len())));
    }
    let classes = model.output_dim();
    if let Some(&bad) = labels.iter().find(|&&l| l as usize >= classes) {
        return Err(Error::Shape(format!("label {bad} out of range for {classes} outputs")));
    }
    let targets: Vec<Vec<f64>> = labels.iter().map(|&l| smooth_labels(l, eps, classes)).collect();
    backward_soft(model, inputs, &targets)
}

/// Mean loss and gradients for arbitrary target distributions.
///
/// ReLU uses subgradient 0 at exactly 0.
pub fn backward_soft(model: &Mlp, inputs: &[&[f64]], targets: &[Vec<f64>]) -> Result<(f64, Gradients)> {
    if inputs.is_empty() {
        return Err(Error::Shape("empty batch".into()));
    }
    if inputs.len() != targets.len() {
        return Err(Error::Shape(format!("{} inputs for {} targets", inputs.len(), targets.len())));
    }
    let d = model.input_dim();
    let k = model.output_dim();
    if let Some(x) = inputs.iter().find(|x| x.len() != d) {
        return Err(Error::Shape(format!("input has {} features, model expects {d}", x.len())));
    }
    if let Some(t) = targets.iter().find(|t| t.len() != k) {
        return Err(Error::Shape(format!("target has {} classes, model outputs {k}", t.len())));
    }

    let depth = model.layers.len();
    let scale = 1.0 / inputs.len() as f64;
    let mut grads = Gradients::zeros_like(model);
    // acts[l] is the input of layer l; acts[depth] holds logits.
    let mut acts: Vec<Vec<f64>> = std::iter::once(Vec::new())
        .chain(model.layers.iter().map(|l| vec![0.0; l.output_dim()]))
        .collect();
    let mut delta: Vec<f64> = Vec::new();
    let mut prev_delta: Vec<f64> = Vec::new();
    let mut total_loss = 0.0;

    for (x, t) in inputs.iter().zip(targets) {
        acts[0].clear();
        acts[0].extend_from_slice(x);
        for (l, layer) in model.layers.iter().enumerate() {
            let (head, tail) = acts.split_at_mut(l + 1);
            let input = &head[l];
            let out = &mut tail[0];
            for (o, v) in out.iter_mut().enumerate() {
                let z = layer.b[o] + crate::linalg::dot(layer.w.row(o), input);
                *v = if l + 1 < depth { z.max(0.0) } else { z };
            }
        }
        let logp = log_softmax(&acts[depth]);
        total_loss -= logp
            .iter()
            .zip(t)
            .map(|(lp, tv)| if *tv == 0.0 { 0.0 } else { tv * lp })
            .sum::<f64>();
        // d loss / d logits = softmax - target (target sums to 1)
        delta.clear();
        delta.extend(logp.iter().zip(t).map(|(lp, tv)| scale * (lp.exp() - tv)));

        for l in (0..depth).rev() {
            let layer = &model.layers[l];
            let g = &mut grads.layers[l];
            let input = &acts[l];
            for (o, &dv) in delta.iter().enumerate() {
                if dv == 0.0 {
                    continue;
                }
                g.b[o] += dv;
                for (gw, &a) in g.w.row_mut(o).iter_mut().zip(input) {
                    *gw += dv * a;
                }
            }
            if l > 0 {
                prev_delta.clear();
                prev_delta.resize(layer.input_dim(), 0.0);
                for (o, &dv) in delta.iter().enumerate() {
                    if dv == 0.0 {
                        continue;
                    }
                    for (p, &w) in prev_delta.iter_mut().zip(layer.w.row(o)) {
                        *p += dv * w;
                    }
                }
                // acts[l] is the ReLU output of layer l-1: positive iff z > 0
                for (p, &a) in prev_delta.iter_mut().zip(&acts[l]) {
                    if a <= 0.0 {
                        *p = 0.0;
                    }
                }
                std::mem::swap(&mut delta, &mut prev_delta);
            }
        }
    }
    Ok((total_loss * scale, grads))
}

/// `θ ← θ − lr · ∇θ` for every parameter.
pub fn sgd_step(model: &mut Mlp, grads: &Gradients, lr: f64) -> Result<()> {
    if grads.layers.len() != model.layers.len() {
        return Err(Error::Shape("gradient layer count does not match model".into()));
    }
    for (layer, g) in model.layers.iter_mut().zip(&grads.layers) {
        if g.w.rows() != layer.w.rows() || g.w.cols() != layer.w.cols() || g.b.len() != layer.b.len() {
            return Err(Error::Shape("gradient shape does not match layer".into()));
        }
        for (w, gw) in layer.w.as_mut_slice().iter_mut().zip(g.w.as_slice()) {
            *w -= lr * gw;
        }
        for (b, gb) in layer.b.iter_mut().zip(&g.b) {
            *b -= lr * gb;
        }
    }
    Ok(())
}
