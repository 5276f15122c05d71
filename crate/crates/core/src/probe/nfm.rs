//! Neural feature matrix `W₁ᵀW₁` diagnostics.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::{dot, norm2, Matrix};
use crate::nnet::Mlp;
use crate::seed;

/// Diagonal of `W₁ᵀW₁`: squared L2 norm of every input column of `W₁`.
pub fn nfm_diag(model: &Mlp) -> Vec<f64> {
    let w = model.first_layer();
    let mut diag = vec![0.0; w.cols()];
    for row in w.row_iter() {
        for (d, &v) in diag.iter_mut().zip(row) {
            *d += v * v;
        }
    }
    diag
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerIteration {
    pub max_iters: usize,
    /// Stop once successive Rayleigh quotients differ by less than this.
    pub tol: f64,
    pub seed: u64,
}

impl Default for PowerIteration {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            tol: 1e-12,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NfmSummary {
    pub diag: Vec<f64>,
    pub top_eigvec: Vec<f64>,
    pub top_eigval: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `W₁ᵀW₁ v = 0` for the start vector (e.g. `W₁ = 0`).
    pub degenerate: bool,
    /// The second eigenvalue estimate lies within `tol` of the first, so the
    /// returned direction is not unique.
    pub non_unique: bool,
}

pub fn nfm_top_eigvec(model: &Mlp, opts: &PowerIteration) -> NfmSummary {
    let w = model.first_layer();
    let mut summary = gram_top_eigvec(w, opts);
    summary.diag = nfm_diag(model);
    summary
}

/// `Wᵀ(W v)` without forming the Gram matrix.
fn gram_apply(w: &Matrix, v: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for row in w.row_iter() {
        let s = dot(row, v);
        if s != 0.0 {
            for (o, &r) in out.iter_mut().zip(row) {
                *o += s * r;
            }
        }
    }
}

struct PowerResult {
    vec: Vec<f64>,
    value: f64,
    iterations: usize,
    converged: bool,
    degenerate: bool,
}

fn power_iterate(
    w: &Matrix,
    deflate: Option<(&[f64], f64)>,
    opts: &PowerIteration,
    stream: &str,
) -> PowerResult {
    let d = w.cols();
    let mut rng = seed::rng(seed::derive(opts.seed, stream));
    let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
    if let Some((u, _)) = deflate {
        let c = dot(&v, u);
        v.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
    }
    let n = norm2(&v);
    v.iter_mut().for_each(|x| *x /= n);

    let apply = |x: &[f64], out: &mut [f64]| {
        gram_apply(w, x, out);
        if let Some((u, lambda)) = deflate {
            let c = lambda * dot(u, x);
            out.iter_mut().zip(u).for_each(|(o, y)| *o -= c * y);
        }
    };

    let mut next = vec![0.0; d];
    let mut prev_rq: Option<f64> = None;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iters {
        iterations += 1;
        apply(&v, &mut next);
        let rq = dot(&v, &next);
        let len = norm2(&next);
        if len == 0.0 {
            return PowerResult {
                vec: v,
                value: 0.0,
                iterations,
                converged: true,
                degenerate: true,
            };
        }
        next.iter_mut().for_each(|x| *x /= len);
        std::mem::swap(&mut v, &mut next);
        if let Some(p) = prev_rq {
            if (rq - p).abs() < opts.tol {
                converged = true;
                break;
            }
        }
        prev_rq = Some(rq);
    }
    apply(&v, &mut next);
    let value = dot(&v, &next);
    PowerResult {
        vec: v,
        value,
        iterations,
        converged,
        degenerate: false,
    }
}

/// Top eigenpair of `WᵀW` by power iteration from a seeded unit start.
///
/// The eigenvalue is the Rayleigh quotient of the returned unit vector,
/// whose largest-magnitude entry is made positive.
pub fn gram_top_eigvec(w: &Matrix, opts: &PowerIteration) -> NfmSummary {
    let top = power_iterate(w, None, opts, "nfm-start");
    let mut vec = top.vec;
    if let Some(big) = vec
        .iter()
        .copied()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
    {
        if big < 0.0 {
            vec.iter_mut().for_each(|x| *x = -*x);
        }
    }
    let non_unique = if top.degenerate || w.cols() < 2 {
        top.degenerate && w.cols() > 1
    } else {
        let second = power_iterate(w, Some((&vec, top.value)), opts, "nfm-second");
        (top.value - second.value).abs() < opts.tol
    };
    NfmSummary {
        diag: Vec::new(),
        top_eigvec: vec,
        top_eigval: top.value.max(0.0),
        iterations: top.iterations,
        converged: top.converged,
        degenerate: top.degenerate,
        non_unique,
    }
}
