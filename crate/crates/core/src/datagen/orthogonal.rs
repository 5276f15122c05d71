use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, Matrix};
use crate::seed;

/// Seeded random orthogonal matrix.
///
/// Orthonormalizes the rows of a standard-Gaussian `d × d` matrix with
/// modified Gram-Schmidt, running the projection pass twice per row so the
/// result stays orthogonal to round-off. Keeping the Gram-Schmidt sign
/// (positive `R` diagonal) makes the draw Haar-distributed.
pub fn random_orthogonal(d: usize, seed: u64) -> Result<Matrix> {
    if d == 0 {
        return Err(Error::InvalidDimension(
            "orthogonal matrix dimension must be at least 1".into(),
        ));
    }
    let mut rng = seed::rng(seed);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(d);
    while rows.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let initial = norm2(&v);
        for _pass in 0..2 {
            for q in &rows {
                let c = dot(&v, q);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= c * qi;
                }
            }
        }
        let n = norm2(&v);
        // A draw lying (numerically) in the span of previous rows has
        // probability zero; redraw rather than normalize noise.
        if n <= 1e-8 * initial {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= n);
        rows.push(v);
    }
    Matrix::from_rows(&rows)
}
