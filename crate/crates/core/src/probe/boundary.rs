use serde::{Deserialize, Serialize};

use crate::datagen::Projection;
use crate::error::{Error, Result};
use crate::nnet::{argmax, softmax, Mlp, Scratch};

/// Model predictions on an `r × r` lattice over two input axes.
///
/// Cell `(row, col)` sits at axis-`j` coordinate `ys[row]` and axis-`i`
/// coordinate `xs[col]`; storage is row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryGrid {
    pub axes: (usize, usize),
    pub fixed: Vec<f64>,
    pub resolution: usize,
    pub range: (f64, f64),
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub predictions: Vec<u8>,
    pub prob1: Vec<f64>,
}

impl BoundaryGrid {
    pub fn prediction(&self, row: usize, col: usize) -> u8 {
        self.predictions[row * self.resolution + col]
    }

    pub fn probability(&self, row: usize, col: usize) -> f64 {
        self.prob1[row * self.resolution + col]
    }

    /// True when the prediction depends on the axis-`i` coordinate only.
    pub fn columns_constant(&self) -> bool {
        (0..self.resolution).all(|c| (1..self.resolution).all(|r| self.prediction(r, c) == self.prediction(0, c)))
    }
}

/// Evaluate `model` on a lattice over axes `(i, j)` (0-based), other
/// coordinates held at `fixed` (zeros when `None`).
///
/// Lattice points are built in generator coordinates; when `projection` is
/// given they are projected before evaluation.
pub fn boundary_grid(
    model: &Mlp,
    projection: Option<&Projection>,
    axes: (usize, usize),
    fixed: Option<&[f64]>,
    resolution: usize,
    range: (f64, f64),
) -> Result<BoundaryGrid> {
    let d = model.input_dim();
    let (i, j) = axes;
    if i >= d || j >= d {
        return Err(Error::Config(format!("axis pair ({i}, {j}) out of range for {d} inputs")));
    }
    if i == j {
        return Err(Error::Config("boundary axes must differ".into()));
    }
    if resolution < 2 {
        return Err(Error::Config("grid resolution must be at least 2".into()));
    }
    if !(range.0 < range.1) {
        return Err(Error::Config(format!("empty range {range:?}")));
    }
    if let Some(p) = projection {
        if p.dim != d {
            return Err(Error::Shape("projection does not match model input".into()));
        }
    }
    let fixed = match fixed {
        Some(f) if f.len() != d => {
            return Err(Error::Shape(format!("{} fixed values for {d} inputs", f.len())))
        }
        Some(f) => f.to_vec(),
        None => vec![0.0; d],
    };
    let step = (range.1 - range.0) / (resolution - 1) as f64;
    let coords: Vec<f64> = (0..resolution).map(|a| range.0 + a as f64 * step).collect();

    let mut predictions = Vec::with_capacity(resolution * resolution);
    let mut prob1 = Vec::with_capacity(resolution * resolution);
    let mut point = fixed.clone();
    let mut scratch = Scratch::default();
    for &y in &coords {
        for &x in &coords {
            point[i] = x;
            point[j] = y;
            let logits = match projection {
                Some(p) => model.forward_with(&p.project_row(&point), &mut scratch),
                None => model.forward_with(&point, &mut scratch),
            };
            predictions.push(argmax(logits));
            prob1.push(softmax(logits).get(1).copied().unwrap_or(0.0));
        }
    }
    Ok(BoundaryGrid {
        axes,
        fixed,
        resolution,
        range,
        xs: coords.clone(),
        ys: coords,
        predictions,
        prob1,
    })
}
